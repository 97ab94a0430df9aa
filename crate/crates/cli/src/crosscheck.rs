//! Finite-difference oracle for the symbolic ring.
//!
//! Expressions:
//! - `e2f`, `grad-sq`, `laplacian-e2f`: `∂_i e` from the ring against the
//!   central difference of `e` along `x^i`, `i = 1..4`.
//! - `dT`: the `e^{1234}` coefficient of `dT̄` on `K_I` against the central
//!   difference divergence of the base components of `T̄` plus the
//!   algebraic contribution of the fiber legs.
//!
//! Jets always come from the profile's analytic formulas, so both sides
//! follow the same path through jet space.

use std::collections::BTreeMap;

use heterotic_core::anomaly::profile::{DilatonProfile, FJets};
use heterotic_core::anomaly::weierstrass::half_period;
use heterotic_core::diffring::{flat_laplacian, grad_sq, rational_to_f64, Jet, Valuation, Var};
use heterotic_core::exterior::exterior_derivative;
use heterotic_core::frames::{build_coframe, FrameCatalogId};
use heterotic_core::gstruct::torsion_for;
use heterotic_core::{CoefExpr, Error, FormExpr, Mat3, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const TOLERANCE: f64 = 1e-6;
pub const PERTURBATION: f64 = 1e-3;

pub struct Config {
    pub profile: String,
    pub params: BTreeMap<String, f64>,
    pub expr: String,
    pub step: f64,
    pub seed: u64,
    pub samples: usize,
    pub perturb: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub expr: String,
    pub profile: String,
    pub step: f64,
    pub seed: u64,
    pub samples: usize,
    pub perturbed: bool,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Profile jets, optionally with `f_1` shifted.
struct Shifted<'a> {
    jets: &'a FJets<f64>,
    params: &'a BTreeMap<String, f64>,
    shift: f64,
}

impl Valuation for Shifted<'_> {
    fn value(&self, v: &Var) -> Option<f64> {
        let base = self.jets.assignment(self.params).value(v)?;
        match v {
            Var::Jet(j) if j.indices() == [1] => Some(base + self.shift),
            _ => Some(base),
        }
    }
}

fn sample(profile: &DilatonProfile, rng: &mut ChaCha8Rng) -> [f64; 4] {
    match profile {
        DilatonProfile::Weierstrass { d, .. } => {
            let tau = half_period(*d);
            [
                rng.gen_range(0.25 * tau..1.75 * tau),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]
        }
        DilatonProfile::Fundamental { center, .. } => {
            let e = center.each_ref().map(rational_to_f64);
            std::array::from_fn(|i| {
                let m: f64 = rng.gen_range(0.3..1.5);
                e[i] + if rng.gen_bool(0.5) { m } else { -m }
            })
        }
        _ => std::array::from_fn(|_| rng.gen_range(-0.4..0.4)),
    }
}

fn rel(sym: f64, fd: f64) -> f64 {
    (sym - fd).abs() / sym.abs().max(1.0)
}

fn shifted(x: &[f64; 4], i: usize, h: f64) -> [f64; 4] {
    let mut y = *x;
    y[i] += h;
    y
}

/// Unbarred `e^{1234}` coefficient of `dT̄` from central differences.
struct TorsionOracle {
    symbolic: CoefExpr,
    base: Vec<(usize, i64, CoefExpr)>,
    fiber: Vec<(i64, CoefExpr)>,
}

impl TorsionOracle {
    fn new() -> Result<TorsionOracle> {
        let c = build_coframe(&FrameCatalogId::KA(Mat3::identity()))?;
        let t = torsion_for(&c)?;
        let symbolic = exterior_derivative(&t, &c)?.component(&[1, 2, 3, 4]).mul_expf(4);
        let vol = |f: &FormExpr| -> i64 {
            let v = f.component(&[1, 2, 3, 4]).as_constant().unwrap_or_default();
            i64::try_from(v.to_integer()).expect("small structure constants")
        };
        let mut base = Vec::new();
        let mut fiber = Vec::new();
        for (blade, coef) in t.components() {
            let idx = blade.indices();
            let fibers: Vec<usize> = idx.iter().copied().filter(|&k| k > 4).collect();
            match fibers.as_slice() {
                [] => {
                    let i = (1..=4).find(|i| !idx.contains(i)).expect("three base legs");
                    let s = vol(&FormExpr::basis(7, &[i]).wedge(&FormExpr::basis(7, &idx))?);
                    base.push((i, s, coef.mul_expf(3)));
                }
                [k] => {
                    let ab: Vec<usize> = idx.iter().copied().filter(|&l| l <= 4).collect();
                    let s = vol(&FormExpr::basis(7, &ab).wedge(c.structure(*k))?);
                    if s != 0 {
                        fiber.push((s, coef.mul_expf(2)));
                    }
                }
                _ => {}
            }
        }
        Ok(TorsionOracle { symbolic, base, fiber })
    }

    fn finite_difference(&self, profile: &DilatonProfile, x: &[f64; 4], h: f64) -> Result<f64> {
        let empty = BTreeMap::new();
        let at = |e: &CoefExpr, y: &[f64; 4]| -> Result<f64> { e.eval(&profile.f_jets(y)?.assignment(&empty)) };
        let mut total = 0.0;
        for (i, s, u) in &self.base {
            let d = (at(u, &shifted(x, i - 1, h))? - at(u, &shifted(x, i - 1, -h))?) / (2.0 * h);
            total += *s as f64 * d;
        }
        for (s, u) in &self.fiber {
            total += *s as f64 * at(u, x)?;
        }
        Ok(total)
    }
}

pub fn run(cfg: &Config) -> std::result::Result<Report, String> {
    let profile = DilatonProfile::from_name(&cfg.profile, &cfg.params).map_err(|e| e.to_string())?;
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err("step must be positive".into());
    }
    if cfg.samples == 0 {
        return Err("samples must be positive".into());
    }
    let max = measure(cfg, &profile).map_err(|e| e.to_string())?;
    Ok(Report {
        expr: cfg.expr.clone(),
        profile: cfg.profile.clone(),
        step: cfg.step,
        seed: cfg.seed,
        samples: cfg.samples,
        perturbed: cfg.perturb,
        max_rel_error: max,
        tolerance: TOLERANCE,
        pass: max <= TOLERANCE,
    })
}

fn measure(cfg: &Config, profile: &DilatonProfile) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<[f64; 4]> = (0..cfg.samples).map(|_| sample(profile, &mut rng)).collect();
    let shift = if cfg.perturb { PERTURBATION } else { 0.0 };
    let empty = BTreeMap::new();
    let h = cfg.step;
    let mut worst: f64 = 0.0;
    if cfg.expr == "dT" {
        let oracle = TorsionOracle::new()?;
        for x in &points {
            let jets = profile.f_jets(x)?;
            let sym = oracle.symbolic.eval(&Shifted { jets: &jets, params: &empty, shift })?;
            worst = worst.max(rel(sym, oracle.finite_difference(profile, x, h)?));
        }
        return Ok(worst);
    }
    let e = match cfg.expr.as_str() {
        "e2f" => CoefExpr::expf(2),
        "grad-sq" => grad_sq(),
        "laplacian-e2f" => flat_laplacian(&CoefExpr::expf(2))?,
        other => return Err(Error::BadParams(format!("unknown expression `{other}`"))),
    };
    debug_assert!(Jet::new(&[1]).is_ok());
    for x in &points {
        let jets = profile.f_jets(x)?;
        for i in 0..4 {
            let sym = e.partial(i + 1)?.eval(&Shifted { jets: &jets, params: &empty, shift })?;
            let plus = e.eval(&profile.f_jets(&shifted(x, i, h))?.assignment(&empty))?;
            let minus = e.eval(&profile.f_jets(&shifted(x, i, -h))?.assignment(&empty))?;
            worst = worst.max(rel(sym, (plus - minus) / (2.0 * h)));
        }
    }
    Ok(worst)
}
