//! Profile tables: `x, u, f, e2f, residual`.
//!
//! `u` is the profile's shape function: `℘` for the Weierstrass slice,
//! `1 − |x|²` for the ball and `1/|x − e|²` for the fundamental solution.
//! `residual` is the defining equation at the point: the relative ODE
//! residual, `Δe^{2f} + 2|A|²`, or `Δe^{2f}` respectively.

use std::collections::BTreeMap;
use std::path::Path;

use heterotic_core::anomaly::closed_torsion_defect;
use heterotic_core::anomaly::profile::{eval_numeric, DilatonProfile};
use heterotic_core::anomaly::weierstrass::{half_period, ode_relative_residual, weierstrass_p};
use heterotic_core::diffring::{flat_laplacian, rational_to_f64};
use heterotic_core::{CoefExpr, Error, Result};

struct Row {
    x: f64,
    u: f64,
    f: f64,
    e2f: f64,
    residual: f64,
}

fn rows(profile: &DilatonProfile, grid: usize) -> Result<Vec<Row>> {
    if grid == 0 {
        return Err(Error::BadParams("grid must be positive".into()));
    }
    let t = |k: usize| (k as f64 + 1.0) / (grid as f64 + 1.0);
    let mut out = Vec::with_capacity(grid);
    match profile {
        DilatonProfile::Weierstrass { d, alpha } => {
            let tau = half_period(*d);
            for k in 0..grid {
                let x = 2.0 * tau * t(k);
                let (u, du) = weierstrass_p(x, *d)?;
                let e2f = alpha * alpha * u;
                out.push(Row {
                    x,
                    u,
                    f: 0.5 * e2f.ln(),
                    e2f,
                    residual: ode_relative_residual(u, du, *d),
                });
            }
        }
        DilatonProfile::Ball { a_sq } => {
            let eq = closed_torsion_defect(&CoefExpr::constant(a_sq.clone()));
            for k in 0..grid {
                let x = 2.0 * t(k) - 1.0;
                let j = profile.f_jets(&[x, 0.0, 0.0, 0.0])?;
                out.push(Row {
                    x,
                    u: 1.0 - x * x,
                    f: 0.5 * j.e2f.ln(),
                    e2f: j.e2f,
                    residual: eval_numeric(&eq, &j, &BTreeMap::new())?,
                });
            }
        }
        DilatonProfile::Fundamental { center, .. } => {
            let eq = flat_laplacian(&CoefExpr::expf(2))?;
            let e = center.each_ref().map(rational_to_f64);
            for k in 0..grid {
                let x = e[0] + 2.0 * t(k);
                let j = profile.f_jets(&[x, e[1], e[2], e[3]])?;
                let r = x - e[0];
                out.push(Row {
                    x,
                    u: 1.0 / (r * r),
                    f: 0.5 * j.e2f.ln(),
                    e2f: j.e2f,
                    residual: eval_numeric(&eq, &j, &BTreeMap::new())?,
                });
            }
        }
        DilatonProfile::Custom { name, .. } => {
            return Err(Error::BadParams(format!("no table for custom profile `{name}`")))
        }
    }
    Ok(out)
}

pub fn dump_profile(name: &str, params: &BTreeMap<String, f64>, grid: usize, out: &Path) -> std::result::Result<(), String> {
    let profile = DilatonProfile::from_name(name, params).map_err(|e| e.to_string())?;
    let rows = rows(&profile, grid).map_err(|e| e.to_string())?;
    let mut w = csv::Writer::from_path(out).map_err(|e| format!("{}: {e}", out.display()))?;
    w.write_record(["x", "u", "f", "e2f", "residual"]).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record([r.x, r.u, r.f, r.e2f, r.residual].map(|v| v.to_string()))
            .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}
