fn main() {
    // Dense symmetric/nonsymmetric eigensolves and LU go through the system
    // LAPACKE + OpenBLAS; only four routines are bound, see src/lapack.rs.
    println!("cargo:rustc-link-lib=lapacke");
    println!("cargo:rustc-link-lib=openblas");
}
