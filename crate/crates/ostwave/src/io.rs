//! Artifact serialization: CSV and JSON writers with fixed headers and
//! 17-significant-digit decimals, written atomically (temp file + rename)
//! so partially written outputs are never observed.

use crate::error::Result;
use crate::evolve::EvolutionTrace;
use crate::grid::{deriv, Field};
use crate::model::WaveProfile;
use crate::solver::CostCurve;
use crate::stability::FullMode;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// 17 significant digits: round-trips every f64 exactly.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_field_csv(path: &Path, f: &Field) -> Result<()> {
    let mut s = String::from("x,value\n");
    for (j, &v) in f.values.iter().enumerate() {
        s.push_str(&fmt(f.grid.node(j)));
        s.push(',');
        s.push_str(&fmt(v));
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

pub fn field_json(f: &Field) -> Value {
    json!({
        "grid": {"L": f.grid.half_length, "n": f.grid.n},
        "values": f.values,
    })
}

pub fn write_profile_csv(path: &Path, p: &WaveProfile) -> Result<()> {
    let dphi = deriv(&p.phi, 1)?;
    let anti = deriv(&p.phi, -1)?;
    let mut s = String::from("x,phi,dphi,antideriv\n");
    for j in 0..p.phi.grid.n {
        s.push_str(&fmt(p.phi.grid.node(j)));
        s.push(',');
        s.push_str(&fmt(p.phi.values[j]));
        s.push(',');
        s.push_str(&fmt(dphi.values[j]));
        s.push(',');
        s.push_str(&fmt(anti.values[j]));
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

pub fn profile_json(p: &WaveProfile) -> Value {
    json!({
        "family": p.model.family.name(),
        "p": p.model.p,
        "lambda": p.lambda,
        "omega": p.omega,
        "el_residual": p.el_residual,
        "iterations": p.iterations,
        "grid": {"L": p.phi.grid.half_length, "n": p.phi.grid.n},
        "phi": p.phi.values,
    })
}

pub fn write_curve_csv(path: &Path, c: &CostCurve) -> Result<()> {
    let mut s = String::from("lambda,m_value,omega,el_residual\n");
    for row in &c.rows {
        s.push_str(&fmt(row.lambda));
        s.push(',');
        s.push_str(&fmt(row.m_value));
        s.push(',');
        s.push_str(&fmt(row.omega));
        s.push(',');
        s.push_str(&fmt(row.el_residual));
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

/// Manifest naming the per-profile artifact files alongside the curve rows.
pub fn curve_manifest_json(c: &CostCurve, profile_files: &[String]) -> Value {
    json!({
        "family": c.family,
        "p": c.p,
        "n": c.n,
        "lambdas": c.rows.iter().map(|r| r.lambda).collect::<Vec<_>>(),
        "profiles": profile_files,
        "failures": c
            .failures
            .iter()
            .map(|(l, e)| json!({"lambda": l, "error": e}))
            .collect::<Vec<_>>(),
    })
}

pub fn write_trace_csv(path: &Path, t: &EvolutionTrace) -> Result<()> {
    let mut s = String::from("t,mass,energy,orbital_distance\n");
    for (i, &tv) in t.times.iter().enumerate() {
        s.push_str(&fmt(tv));
        s.push(',');
        s.push_str(&fmt(t.mass[i]));
        s.push(',');
        s.push_str(&fmt(t.energy[i]));
        s.push(',');
        if let Some(od) = &t.orbital_distance {
            s.push_str(&fmt(od[i]));
        }
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

/// Evolution summary {ratio, blowup_time?}; blowup_time omitted when absent.
pub fn trace_summary_json(ratio: f64, blowup_time: Option<f64>) -> Value {
    match blowup_time {
        Some(t) => json!({"ratio": ratio, "blowup_time": t}),
        None => json!({"ratio": ratio}),
    }
}

/// Symmetric-problem eigenvalues, one per line.
pub fn write_eigenvalues_csv(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut s = String::from("value\n");
    for &v in eigenvalues {
        s.push_str(&fmt(v));
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

/// Full-problem eigenvalues, re/im per line.
pub fn write_full_eigenvalues_csv(path: &Path, modes: &[FullMode]) -> Result<()> {
    let mut s = String::from("re,im\n");
    for m in modes {
        s.push_str(&fmt(m.re));
        s.push(',');
        s.push_str(&fmt(m.im));
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}
