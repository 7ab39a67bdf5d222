//! Minimal LAPACKE bindings for the three dense kernels the toolkit needs:
//! symmetric eigendecomposition and general (nonsymmetric) eigenvalues
//! with right eigenvectors. Bound directly
//! against the system LAPACKE/OpenBLAS; column-major throughout.

use crate::error::{OstError, Result};

const LAPACK_COL_MAJOR: i32 = 102;

extern "C" {
    fn LAPACKE_dsyevd(
        matrix_layout: i32,
        jobz: u8,
        uplo: u8,
        n: i32,
        a: *mut f64,
        lda: i32,
        w: *mut f64,
    ) -> i32;

    fn LAPACKE_dgeev(
        matrix_layout: i32,
        jobvl: u8,
        jobvr: u8,
        n: i32,
        a: *mut f64,
        lda: i32,
        wr: *mut f64,
        wi: *mut f64,
        vl: *mut f64,
        ldvl: i32,
        vr: *mut f64,
        ldvr: i32,
    ) -> i32;
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric
/// matrix given in column-major order. Returns (values, vectors) with
/// vectors[j] the eigenvector of values[j].
pub fn sym_eigen(a_col_major: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    assert_eq!(a_col_major.len(), n * n);
    let mut a = a_col_major.to_vec();
    let mut w = vec![0.0f64; n];
    let info = unsafe {
        LAPACKE_dsyevd(
            LAPACK_COL_MAJOR,
            b'V',
            b'L',
            n as i32,
            a.as_mut_ptr(),
            n as i32,
            w.as_mut_ptr(),
        )
    };
    if info != 0 {
        return Err(OstError::EigenFailure {
            routine: "dsyevd",
            info,
        });
    }
    let vectors = (0..n).map(|j| a[j * n..(j + 1) * n].to_vec()).collect();
    Ok((w, vectors))
}

/// Complex eigenvalue pairs (re, im) and right eigenvectors of a general
/// matrix in column-major order. Complex conjugate pairs are unpacked from
/// LAPACK's packed real representation: each eigenvector is returned as
/// (real part, imaginary part), both length n.
pub fn gen_eigen(a_col_major: &[f64], n: usize) -> Result<(Vec<(f64, f64)>, Vec<(Vec<f64>, Vec<f64>)>)> {
    assert_eq!(a_col_major.len(), n * n);
    let mut a = a_col_major.to_vec();
    let mut wr = vec![0.0f64; n];
    let mut wi = vec![0.0f64; n];
    let mut vr = vec![0.0f64; n * n];
    let info = unsafe {
        LAPACKE_dgeev(
            LAPACK_COL_MAJOR,
            b'N',
            b'V',
            n as i32,
            a.as_mut_ptr(),
            n as i32,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            std::ptr::null_mut(),
            1,
            vr.as_mut_ptr(),
            n as i32,
        )
    };
    if info != 0 {
        return Err(OstError::EigenFailure {
            routine: "dgeev",
            info,
        });
    }
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let col = |j: usize| -> &[f64] { &vr[j * n..(j + 1) * n] };
    let mut j = 0usize;
    while j < n {
        if wi[j] == 0.0 {
            values.push((wr[j], 0.0));
            vectors.push((col(j).to_vec(), vec![0.0; n]));
            j += 1;
        } else {
            let re = col(j).to_vec();
            let im = col(j + 1).to_vec();
            values.push((wr[j], wi[j]));
            vectors.push((re.clone(), im.clone()));
            values.push((wr[j + 1], wi[j + 1]));
            let neg: Vec<f64> = im.iter().map(|x| -x).collect();
            vectors.push((re, neg));
            j += 2;
        }
    }
    Ok((values, vectors))
}
