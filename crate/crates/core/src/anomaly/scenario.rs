//! The scenario catalogue: each theorem-level solution as a list of named
//! checks, run in a fixed order and collected into a report.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::profile::{eval_exact, DilatonProfile, FJets};
use super::weierstrass::{half_period, half_period_agm, laurent_coefficients, ode_relative_residual, weierstrass_p};
use super::*;
use crate::connection::{curvature, levi_civita, torsion_connection};
use crate::diffring::{flat_laplacian, rat, rational_to_f64, Valuation};
use crate::frames::{build_coframe, contract_family, integrability_check, FrameCatalogId};
use crate::gstruct::{
    build_g2, build_su2, build_su3, check_integrable_pure, g2_holonomy_residual, g2_instanton_residual,
    su2_instanton_residual, InstantonResidual,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 64;

/// Frozen catalogue names.
pub const SCENARIOS: [&str; 7] = [
    "thm-7d-negative",
    "thm-7d-positive",
    "ball-7d",
    "thm-5d-negative",
    "thm-5d-positive",
    "contraction-6d",
    "contraction-5d",
];

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

/// What to run. `overrides` are named deviations from the catalogue entry
/// (e.g. `rank2-lambda`); `params` are numeric knobs (`alphaP`, `c0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub overrides: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl ScenarioSpec {
    pub fn new(scenario: &str) -> ScenarioSpec {
        ScenarioSpec {
            scenario: scenario.to_string(),
            seed: 0,
            samples: DEFAULT_SAMPLES,
            overrides: Vec::new(),
            params: BTreeMap::new(),
            tolerances: BTreeMap::new(),
        }
    }

    /// Reject unknown scenarios, overrides and parameters.
    pub fn validate(&self) -> Result<()> {
        let (overrides, params): (&[&str], &[&str]) = match self.scenario.as_str() {
            "thm-7d-negative" => (&["rank2-lambda"], &["c0"]),
            "thm-5d-negative" => (&[], &["c0"]),
            "thm-7d-positive" | "thm-5d-positive" | "ball-7d" => (&[], &["alphaP"]),
            "contraction-6d" | "contraction-5d" => (&[], &[]),
            other => return Err(Error::BadParams(format!("unknown scenario `{other}`"))),
        };
        if let Some(o) = self.overrides.iter().find(|o| !overrides.contains(&o.as_str())) {
            return Err(Error::BadParams(format!("scenario `{}` has no override `{o}`", self.scenario)));
        }
        if let Some(k) = self.params.keys().find(|k| !params.contains(&k.as_str())) {
            return Err(Error::BadParams(format!("scenario `{}` has no parameter `{k}`", self.scenario)));
        }
        if self.samples == 0 {
            return Err(Error::BadParams("samples must be positive".into()));
        }
        if let Some(&ap) = self.params.get("alphaP") {
            if !(ap > 0.0 && ap.is_finite()) {
                return Err(Error::BadParams("alphaP must be positive".into()));
            }
        }
        Ok(())
    }

    fn has(&self, o: &str) -> bool {
        self.overrides.iter().any(|x| x == o)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    /// `None` when the check raised an error.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckResult>,
    pub derived: BTreeMap<String, Value>,
    pub all_pass: bool,
}

impl ScenarioReport {
    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }
}

struct Measure {
    residual: f64,
    detail: String,
}

impl Measure {
    fn new(residual: f64, detail: impl Into<String>) -> Measure {
        Measure {
            residual,
            detail: detail.into(),
        }
    }
}

fn truncate(s: String) -> String {
    const MAX: usize = 240;
    if s.chars().count() <= MAX {
        s
    } else {
        s.chars().take(MAX).collect::<String>() + "…"
    }
}

/// Exact check on a list of coefficients: the residual is the number of
/// nonzero leftovers.
fn exact_coefs<'a>(leftovers: impl IntoIterator<Item = (String, &'a CoefExpr)>) -> Measure {
    let bad: Vec<(String, &CoefExpr)> = leftovers.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    let detail = match bad.first() {
        None => "exact".to_string(),
        Some((k, c)) => truncate(format!("{} nonzero, first {k}: {c}", bad.len())),
    };
    Measure::new(bad.len() as f64, detail)
}

fn exact_forms(forms: &[FormExpr]) -> Measure {
    let mut list = Vec::new();
    for (i, f) in forms.iter().enumerate() {
        for (b, c) in f.components() {
            list.push((format!("#{i} {:?}", b.indices()), c));
        }
    }
    exact_coefs(list)
}

fn exact_residual(r: &InstantonResidual) -> Measure {
    exact_coefs(r.entries.iter().map(|(k, c)| (k.clone(), c)))
}

fn exact_eq(a: &CoefExpr, b: &CoefExpr) -> Measure {
    let d = a - b;
    exact_coefs([("difference".to_string(), &d)])
}

/// Value and the sum of absolute term values (the natural scale).
fn eval_scaled(e: &CoefExpr, val: &dyn Valuation) -> Result<(f64, f64)> {
    let mut v = 0.0;
    let mut s = 0.0;
    for (m, c) in e.terms() {
        let t = CoefExpr::from_term(m.clone(), c.clone()).eval(val)?;
        v += t;
        s += t.abs();
    }
    Ok((v, s))
}

struct Runner<'a> {
    spec: &'a ScenarioSpec,
    checks: Vec<CheckResult>,
    derived: BTreeMap<String, Value>,
}

impl<'a> Runner<'a> {
    fn new(spec: &'a ScenarioSpec) -> Self {
        Runner {
            spec,
            checks: Vec::new(),
            derived: BTreeMap::new(),
        }
    }

    fn check(&mut self, id: &str, default_tol: f64, f: impl FnOnce() -> Result<Measure>) {
        let tolerance = self.spec.tolerances.get(id).copied().unwrap_or(default_tol);
        let result = match f() {
            Ok(m) => CheckResult {
                id: id.to_string(),
                pass: m.residual.is_finite() && m.residual <= tolerance,
                residual: Some(m.residual),
                tolerance,
                detail: m.detail,
            },
            Err(e) => CheckResult {
                id: id.to_string(),
                residual: None,
                tolerance,
                pass: false,
                detail: format!("error: {e}"),
            },
        };
        self.checks.push(result);
    }

    fn derive(&mut self, key: &str, v: Value) {
        self.derived.insert(key.to_string(), v);
    }

    fn finish(self) -> ScenarioReport {
        let all_pass = self.checks.iter().all(|c| c.pass);
        ScenarioReport {
            schema_version: SCHEMA_VERSION,
            scenario: self.spec.scenario.clone(),
            seed: self.spec.seed,
            samples: self.spec.samples,
            checks: self.checks,
            derived: self.derived,
            all_pass,
        }
    }
}

fn share<T: Clone>(r: &Result<T>) -> Result<T> {
    r.clone()
}

/// Run a scenario. Configuration errors are returned; every failure inside
/// a check is recorded in the report instead.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioReport> {
    spec.validate()?;
    let mut r = Runner::new(spec);
    match spec.scenario.as_str() {
        "thm-7d-negative" => negative_7d(&mut r),
        "thm-7d-positive" => positive(&mut r, 7),
        "ball-7d" => ball_7d(&mut r),
        "thm-5d-negative" => negative_5d(&mut r),
        "thm-5d-positive" => positive(&mut r, 5),
        "contraction-6d" => contraction(&mut r, 6),
        "contraction-5d" => contraction(&mut r, 5),
        _ => unreachable!("validated"),
    }
    Ok(r.finish())
}

fn a_first_row() -> [CoefExpr; 3] {
    [CoefExpr::one(), CoefExpr::zero(), CoefExpr::zero()]
}

fn lambda_rank1() -> Mat3 {
    Mat3::from_ints([[1, 0, 0], [0, 0, 0], [0, 0, 0]])
}

fn lambda_rank2() -> Mat3 {
    Mat3::from_ints([[1, 0, 0], [0, 1, 0], [0, 0, 0]])
}

/// Integrability, structure equations, torsion closed form and `dT̄`.
fn structure_checks(r: &mut Runner, c: &Result<CoframeSpec>, a: &Mat3) {
    r.check("integrability", 0.0, || {
        let c = share(c)?;
        let rep = integrability_check(&c);
        Ok(exact_forms(&rep.residuals))
    });
    r.check("structure", 0.0, || {
        let c = share(c)?;
        match c.dim() {
            7 => {
                let (a, b) = check_integrable_pure(&build_g2(&c)?)?;
                Ok(exact_forms(&[a, b]))
            }
            6 => Ok(exact_forms(&build_su3(&c)?.structure_residuals()?)),
            _ => Ok(exact_forms(&build_su2(&c)?.structure_residuals()?)),
        }
    });
    r.check("torsion", 0.0, || {
        let c = share(c)?;
        let t = torsion_for(&c)?;
        Ok(exact_forms(&[&t - &expected_torsion(&c)?]))
    });
    r.check("torsion-derivative", 0.0, || {
        let c = share(c)?;
        let dt = exterior_derivative(&torsion_for(&c)?, &c)?;
        let expected = FormExpr::term(c.dim(), &[1, 2, 3, 4], -closed_torsion_defect(&a.norm_sq()).mul_expf(-4));
        Ok(exact_forms(&[&dt - &expected]))
    });
}

fn instanton_residual(c: &CoframeSpec, curv: &CurvatureForms) -> Result<InstantonResidual> {
    match c.dim() {
        7 => g2_instanton_residual(curv, &build_g2(c)?),
        5 => su2_instanton_residual(curv, &build_su2(c)?),
        n => Err(Error::DimensionMismatch(format!("no instanton condition in dimension {n}"))),
    }
}

/// Every entry of `res` is a multiple of `factor` in the ring.
fn factor_check(res: &InstantonResidual, factor: &CoefExpr) -> Measure {
    let bad: Vec<&(String, CoefExpr)> = res
        .entries
        .iter()
        .filter(|(_, e)| !e.is_zero() && e.div_exact(factor).is_none())
        .collect();
    let nonzero = res.nonzero().count();
    let detail = match bad.first() {
        None => format!("{nonzero} nonzero entries, all divisible"),
        Some((k, e)) => truncate(format!("{} entries not divisible, first {k}: {e}", bad.len())),
    };
    Measure::new(bad.len() as f64, detail)
}

fn sample_x1(rng: &mut ChaCha8Rng, tau: f64) -> [f64; 4] {
    [
        rng.gen_range(0.1 * tau..1.9 * tau),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ]
}

/// Small-denominator rational points away from the origin.
fn sample_rational(rng: &mut ChaCha8Rng) -> [Rational; 4] {
    loop {
        let p: [Rational; 4] = std::array::from_fn(|_| rat(rng.gen_range(-12..=12), rng.gen_range(1..=7)));
        if p.iter().any(|v| !v.is_zero()) {
            return p;
        }
    }
}

/// Sample points strictly inside the unit ball.
fn sample_ball(rng: &mut ChaCha8Rng) -> [Rational; 4] {
    loop {
        let p: [Rational; 4] = std::array::from_fn(|_| rat(rng.gen_range(-9..=9), 20));
        let r2: Rational = p.iter().map(|v| v * v).sum();
        if r2 < Rational::one() {
            return p;
        }
    }
}

/// The Weierstrass chain shared by both negative-`α′` scenarios.
fn negative(r: &mut Runner, c: &Result<CoframeSpec>, a: &Mat3, lambda: &Mat3) {
    let dim = c.as_ref().map(CoframeSpec::dim).unwrap_or(7);
    let lambda_eff = effective_lambda(lambda, dim);
    let a_sq = rational_to_f64(&a.norm_sq().as_constant().expect("numeric A"));
    let la_sq = rational_to_f64(&lambda_eff.mul(a).norm_sq().as_constant().expect("numeric Λ"));
    let alpha = (2.0 * a_sq / la_sq).sqrt();
    let d = weierstrass_d(a_sq, alpha);
    let tau = half_period(d);
    r.derive("alpha", json!(alpha));
    r.derive("alpha_prime", json!(-alpha * alpha));
    r.derive("d", json!(d));
    r.derive("d_as_printed", json!((3.0 * a_sq).sqrt() / alpha));
    r.derive("tau_plus", json!(tau));

    structure_checks(r, c, a);
    r.check("plus-holonomy", 0.0, || {
        let c = share(c)?;
        if c.dim() != 7 {
            return Ok(Measure::new(0.0, "not applicable in dimension 5"));
        }
        let curv = curvature(&torsion_connection(&levi_civita(&c), &torsion_for(&c)?, 1)?, &c)?;
        Ok(exact_residual(&g2_holonomy_residual(&curv, &build_g2(&c)?)?))
    });
    r.check("instanton", 0.0, || {
        let c = share(c)?;
        let curv = curvature(&build_instanton_dlambda(lambda, &c)?, &c)?;
        Ok(exact_residual(&instanton_residual(&c, &curv)?))
    });

    let symbolic = c
        .clone()
        .and_then(|c| anomaly_residual(&c, &CoefExpr::param(ALPHA_PRIME), &Instanton::DLambda(lambda.clone())));
    r.check("anomaly-symbolic", 0.0, || {
        let res = share(&symbolic)?;
        Ok(exact_eq(&res, &expected_dlambda_residual(a, &lambda_eff, &CoefExpr::param(ALPHA_PRIME))))
    });
    r.check("reduce-onevar", 0.0, || {
        let reduced = reduce_onevar(&share(&symbolic)?, a, &lambda_eff)?;
        Ok(exact_eq(&reduced, &solv4_lhs(&a.norm_sq()).partial(1)?))
    });
    r.check("u-identity", 0.0, || Ok(exact_eq(&solv4_lhs(&a.norm_sq()), &solv4_lhs_u_form(&a.norm_sq()))));

    let mut rng = ChaCha8Rng::seed_from_u64(r.spec.seed);
    let n = r.spec.samples;
    r.check("ode", 1e-9, || {
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let x = rng.gen_range(0.1 * tau..1.9 * tau);
            let (p, dp) = weierstrass_p(x, d)?;
            worst = worst.max(ode_relative_residual(p, dp, d));
        }
        Ok(Measure::new(worst, format!("max |u'^2 - 4u^3 + 4d^2 u| / (1 + |u|^3) over {n} samples")))
    });
    r.check("periodicity", 1e-8, || {
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let x = tau * (0.1 + 1.8 * (k as f64 + 0.5) / n as f64);
            worst = worst.max((weierstrass_p(x + 2.0 * tau, d)?.0 - weierstrass_p(x, d)?.0).abs());
        }
        Ok(Measure::new(worst, "max |u(x + 2τ₊) − u(x)|"))
    });
    r.check("laurent", 1e3, || {
        let c2 = laurent_coefficients(d, 2)[2];
        let mut fitted: f64 = 0.0;
        for k in 1..=n {
            let x = 0.2 * tau * k as f64 / n as f64;
            let (p, _) = weierstrass_p(x, d)?;
            fitted = fitted.max((x * x * p - 1.0 - c2 * x.powi(4)).abs() / x.powi(6));
        }
        Ok(Measure::new(fitted, format!("fitted C in |x²u − 1 − (d²/5)x⁴| ≤ C x⁶, d²/5 = {c2}")))
    });
    r.check("half-period", 1e-10, || {
        let t = half_period_agm(d);
        Ok(Measure::new((tau - t).abs() / t, format!("quadrature {tau}, AGM {t}")))
    });

    let profile = DilatonProfile::Weierstrass { d, alpha };
    let params: BTreeMap<String, f64> = [(ALPHA_PRIME.to_string(), -alpha * alpha), (ALPHA.to_string(), alpha)].into();
    let points: Vec<[f64; 4]> = (0..n).map(|_| sample_x1(&mut rng, tau)).collect();
    let jets: Result<Vec<FJets<f64>>> = points.iter().map(|x| profile.f_jets(x)).collect();
    let c0 = r.spec.params.get("c0").copied().unwrap_or(0.0);
    r.check("first-integral", 1e-8, || {
        let lhs = solv4_lhs(&a.norm_sq());
        let mut worst: f64 = 0.0;
        for j in share(&jets)? {
            let (v, s) = eval_scaled(&lhs, &j.assignment(&params))?;
            worst = worst.max((v - c0).abs() / (1.0 + s));
        }
        Ok(Measure::new(worst, format!("solv4 left-hand side minus C₀ = {c0}, relative")))
    });
    r.check("anomaly-profile", 1e-8, || {
        let res = share(&symbolic)?;
        let mut worst: f64 = 0.0;
        for j in share(&jets)? {
            let (v, s) = eval_scaled(&res, &j.assignment(&params))?;
            worst = worst.max(v.abs() / (1.0 + s));
        }
        Ok(Measure::new(worst, "anomaly residual on the Weierstrass profile, relative"))
    });
}

fn negative_7d(r: &mut Runner) {
    let a = Mat3::identity();
    let lambda = if r.spec.has("rank2-lambda") { lambda_rank2() } else { lambda_rank1() };
    let c = build_coframe(&FrameCatalogId::KA(a.clone()));
    negative(r, &c, &a, &lambda);
}

fn negative_5d(r: &mut Runner) {
    let a_row = a_first_row();
    let c = build_coframe(&FrameCatalogId::H21 { a: a_row.clone() });
    let a = Mat3([a_row, Default::default(), Default::default()]);
    negative(r, &c, &a, &lambda_rank1());
}

fn alpha_prime(spec: &ScenarioSpec) -> Rational {
    let ap = spec.params.get("alphaP").copied().unwrap_or(1.0);
    Rational::from_float(ap).expect("validated finite")
}

/// `B = O`, fundamental profile, `c*` derived from the engine residual.
fn positive(r: &mut Runner, dim: usize) {
    let (c, a) = if dim == 7 {
        (build_coframe(&FrameCatalogId::KA(Mat3::identity())), Mat3::identity())
    } else {
        let row = a_first_row();
        (
            build_coframe(&FrameCatalogId::H21 { a: row.clone() }),
            Mat3([row, Default::default(), Default::default()]),
        )
    };
    let b = Mat3::zero();
    let ap = alpha_prime(r.spec);
    r.derive("alpha_prime", json!(rational_to_f64(&ap)));
    structure_checks(r, &c, &a);
    db_instanton_checks(r, &c, &b);

    let symbolic = c
        .clone()
        .and_then(|c| anomaly_residual(&c, &CoefExpr::param(ALPHA_PRIME), &Instanton::DB(b.clone())));
    r.check("anomaly-symbolic", 0.0, || {
        Ok(exact_eq(&share(&symbolic)?, &expected_db_residual(&a, &b, &CoefExpr::param(ALPHA_PRIME))))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(r.spec.seed);
    let points: Vec<[Rational; 4]> = (0..r.spec.samples).map(|_| sample_rational(&mut rng)).collect();
    let params: BTreeMap<String, Rational> = [(ALPHA_PRIME.to_string(), ap.clone())].into();
    let origin: [Rational; 4] = std::array::from_fn(|_| Rational::zero());
    let at = |cst: &Rational, x: &[Rational; 4], e: &CoefExpr| -> Result<Rational> {
        let p = DilatonProfile::Fundamental { c: cst.clone(), center: origin.clone() };
        eval_exact(e, &p.f_jets_exact(x)?, &params)
    };

    r.check("profile-harmonic", 0.0, || {
        let lap = flat_laplacian(&CoefExpr::expf(2))?;
        let bad = points.iter().filter(|x| !at(&Rational::one(), x, &lap).map(|v| v.is_zero()).unwrap_or(false));
        Ok(Measure::new(bad.count() as f64, "Δe^{2f} at sampled points, c = 1"))
    });

    // r(c) = P + Q/c at every point; c* = −Q/P
    let fit = (|| -> Result<Rational> {
        let res = share(&symbolic)?;
        let mut found: Option<(Rational, Rational)> = None;
        for x in &points {
            let v: Vec<Rational> = (1..=3).map(|k| at(&Rational::from_integer(k.into()), x, &res)).collect::<Result<_>>()?;
            let q = (&v[0] - &v[1]) * Rational::from_integer(2.into());
            let p = &v[0] - &q;
            if &p + &q / Rational::from_integer(3.into()) != v[2] {
                return Err(Error::ConstraintViolated("residual is not of the form P + Q/c".into()));
            }
            match &found {
                None => found = Some((p, q)),
                Some(pq) if pq != &(p.clone(), q.clone()) => {
                    return Err(Error::ConstraintViolated("P, Q depend on the point".into()))
                }
                _ => {}
            }
        }
        let (p, q) = found.ok_or_else(|| Error::BadParams("no sample points".into()))?;
        if p.is_zero() {
            return Err(Error::ConstraintViolated("residual does not depend on c".into()));
        }
        Ok(-q / p)
    })();
    let printed = &ap * rat(3, 4);
    if let Ok(cs) = &fit {
        r.derive("c_star", json!(rational_to_f64(cs)));
        r.derive("c_star_exact", json!(cs.to_string()));
        r.derive("c_as_printed", json!(rational_to_f64(&printed)));
        r.derive("c_star_over_printed", json!((cs / &printed).to_string()));
    }
    r.check("derive-c-star", 0.0, || {
        let cs = share(&fit)?;
        if !cs.is_positive() {
            return Err(Error::ConstraintViolated(format!("c* = {cs} is not positive")));
        }
        Ok(Measure::new(0.0, format!("c* = {cs}; printed constant 3α′/4 = {printed} (informational)")))
    });
    r.check("anomaly-at-c-star", 0.0, || {
        let cs = share(&fit)?;
        let res = share(&symbolic)?;
        let mut bad = 0;
        for x in &points {
            if !at(&cs, x, &res)?.is_zero() {
                bad += 1;
            }
        }
        Ok(Measure::new(bad as f64, format!("residual at e^(2f) = {cs}/|x|² over {} points", points.len())))
    });
}

/// `D_B` instanton: residual entries factor through `Δe^{2f} + 2|B|²`.
fn db_instanton_checks(r: &mut Runner, c: &Result<CoframeSpec>, b: &Mat3) {
    r.check("instanton-factor", 0.0, || {
        let c = share(c)?;
        let curv = Instanton::DB(b.clone()).curvature(&c)?;
        let res = instanton_residual(&c, &curv)?;
        Ok(factor_check(&res, &closed_torsion_defect(&b.norm_sq())))
    });
}

fn ball_7d(r: &mut Runner) {
    let a = Mat3::identity();
    let b = Mat3::from_ints([[0, 1, 0], [0, 0, 1], [1, 0, 0]]);
    let c = build_coframe(&FrameCatalogId::KA(a.clone()));
    let ap = alpha_prime(r.spec);
    structure_checks(r, &c, &a);
    db_instanton_checks(r, &c, &b);
    let data = c.clone().and_then(|c| AnomalyData::compute(&c));
    r.check("minus-instanton-factor", 0.0, || {
        let c = share(&c)?;
        let res = g2_instanton_residual(&share(&data)?.curvature_minus, &build_g2(&c)?)?;
        Ok(factor_check(&res, &closed_torsion_defect(&a.norm_sq())))
    });
    let symbolic = match (&c, &data) {
        (Ok(c), Ok(d)) => anomaly_residual_with(d, c, &CoefExpr::param(ALPHA_PRIME), &Instanton::DB(b.clone())),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    r.check("anomaly-symbolic", 0.0, || {
        Ok(exact_eq(&share(&symbolic)?, &expected_db_residual(&a, &b, &CoefExpr::param(ALPHA_PRIME))))
    });
    r.check("alpha-prime-independent", 0.0, || {
        let res = share(&symbolic)?;
        let hit = res.contains_param(ALPHA_PRIME);
        Ok(Measure::new(if hit { 1.0 } else { 0.0 }, "α′ absent from the canonical residual"))
    });

    let a_sq = a.norm_sq().as_constant().expect("numeric A");
    let profile = DilatonProfile::Ball { a_sq: a_sq.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(r.spec.seed);
    let points: Vec<[Rational; 4]> = (0..r.spec.samples).map(|_| sample_ball(&mut rng)).collect();
    let params: BTreeMap<String, Rational> = [(ALPHA_PRIME.to_string(), ap)].into();
    r.check("profile-ball", 0.0, || {
        let e = closed_torsion_defect(&a.norm_sq());
        let mut bad = 0;
        for x in &points {
            if !eval_exact(&e, &profile.f_jets_exact(x)?, &params)?.is_zero() {
                bad += 1;
            }
        }
        Ok(Measure::new(bad as f64, "Δe^{2f} + 2|A|² at sampled points"))
    });
    r.check("anomaly-profile", 0.0, || {
        let res = share(&symbolic)?;
        let mut bad = 0;
        for x in &points {
            if !eval_exact(&res, &profile.f_jets_exact(x)?, &params)?.is_zero() {
                bad += 1;
            }
        }
        Ok(Measure::new(bad as f64, "anomaly residual on the ball profile"))
    });
    normalization_probe(r, &c, &profile, &mut rng);
}

/// Evaluate the scalar-curvature identity for `φ = −f` and `φ = −2f` at 16
/// points and record which normalisation holds.
fn normalization_probe(r: &mut Runner, c: &Result<CoframeSpec>, profile: &DilatonProfile, rng: &mut ChaCha8Rng) {
    let probe = (|| -> Result<Vec<(i64, f64)>> {
        let c = share(c)?;
        let t = torsion_for(&c)?;
        let points: Vec<[f64; 4]> = (0..16).map(|_| sample_ball(rng).map(|v| rational_to_f64(&v))).collect();
        let mut out = Vec::new();
        for scale in [-1, -2] {
            let res = scalar_identity_residual(&c, &t, scale)?;
            let mut worst: f64 = 0.0;
            for x in &points {
                let j = profile.f_jets(x)?;
                worst = worst.max(res.eval(&j.assignment(&BTreeMap::new()))?.abs());
            }
            out.push((scale, worst));
        }
        Ok(out)
    })();
    if let Ok(v) = &probe {
        let holds: Vec<String> = v
            .iter()
            .filter(|(_, w)| *w <= 1e-8)
            .map(|(s, _)| format!("phi = {s}f"))
            .collect();
        for (s, w) in v {
            r.derive(&format!("scalar_identity_residual_phi_{}f", -s), json!(w));
        }
        r.derive(
            "phi_normalization",
            json!(if holds.is_empty() { "none".to_string() } else { holds.join(", ") }),
        );
    }
    r.check("normalization-probe", 0.0, || {
        let v = share(&probe)?;
        let holding = v.iter().filter(|(_, w)| *w <= 1e-8).count();
        let detail = v.iter().map(|(s, w)| format!("phi = {s}f: {w:e}")).collect::<Vec<_>>().join("; ");
        // the probe passes when it singles out exactly one normalisation
        Ok(Measure::new(if holding == 1 { 0.0 } else { 1.0 }, detail))
    });
}

/// ε-contraction: exact equality at ε = 0 and linear decay of the dropped
/// legs of the `∇⁻` curvature for small ε.
fn contraction(r: &mut Runner, dim: usize) {
    let one = CoefExpr::one();
    let family = |eps: Rational| {
        if dim == 6 {
            FrameCatalogId::ContractionEps6D { a: one.clone(), b: one.clone(), eps }
        } else {
            FrameCatalogId::ContractionEps5D { a: a_first_row(), eps }
        }
    };
    let direct_id = if dim == 6 {
        FrameCatalogId::H5 { a: one.clone(), b: one.clone() }
    } else {
        FrameCatalogId::H21 { a: a_first_row() }
    };
    let dropped: Vec<usize> = if dim == 6 { vec![7] } else { vec![6, 7] };
    let contracted = contract_family(&family(Rational::zero()), &Rational::zero());
    let direct = build_coframe(&direct_id);
    let pair = || -> Result<(CoframeSpec, CoframeSpec)> { Ok((share(&contracted)?, share(&direct)?)) };

    r.check("eps0-coframe", 0.0, || {
        let (x, y) = pair()?;
        let diffs: Vec<FormExpr> = (1..=dim).map(|k| x.structure(k) - y.structure(k)).collect();
        let weights = if x.weights() == y.weights() { 0.0 } else { 1.0 };
        let m = exact_forms(&diffs);
        Ok(Measure::new(m.residual + weights, m.detail))
    });
    r.check("eps0-structure", 0.0, || {
        let (x, y) = pair()?;
        let (rx, ry) = if dim == 6 {
            (build_su3(&x)?.structure_residuals()?, build_su3(&y)?.structure_residuals()?)
        } else {
            (build_su2(&x)?.structure_residuals()?, build_su2(&y)?.structure_residuals()?)
        };
        let mut all: Vec<FormExpr> = rx.iter().zip(&ry).map(|(p, q)| p - q).collect();
        all.extend(rx);
        Ok(exact_forms(&all))
    });
    r.check("eps0-torsion", 0.0, || {
        let (x, y) = pair()?;
        Ok(exact_forms(&[&torsion_for(&x)? - &torsion_for(&y)?]))
    });
    r.check("eps0-anomaly", 0.0, || {
        let (x, y) = pair()?;
        let ap = CoefExpr::param(ALPHA_PRIME);
        let (dx, dy) = (AnomalyData::compute(&x)?, AnomalyData::compute(&y)?);
        let mut forms = vec![
            &anomaly_form_with(&dx, &x, &ap, &Instanton::DB(Mat3::zero()))?
                - &anomaly_form_with(&dy, &y, &ap, &Instanton::DB(Mat3::zero()))?,
        ];
        if dim == 5 {
            let l = Instanton::DLambda(lambda_rank1());
            forms.push(&anomaly_form_with(&dx, &x, &ap, &l)? - &anomaly_form_with(&dy, &y, &ap, &l)?);
        }
        Ok(exact_forms(&forms))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(r.spec.seed);
    let profile = DilatonProfile::Ball { a_sq: Rational::from_integer(3.into()) };
    let x = sample_ball(&mut rng).map(|v| rational_to_f64(&v));
    let decay = (|| -> Result<Vec<(f64, f64)>> {
        let jets = profile.f_jets(&x)?;
        let params = BTreeMap::new();
        let val = jets.assignment(&params);
        let mut out = Vec::new();
        for k in 1..=3 {
            let eps = Rational::new(1.into(), 10i64.pow(k).into());
            let c = contract_family(&family(eps.clone()), &eps)?;
            let curv = AnomalyData::compute(&c)?.curvature_minus;
            let mut worst: f64 = 0.0;
            for (i, j) in curv.indices() {
                if dropped.contains(&j) || dropped.contains(&i) {
                    for (_, coef) in curv.get(i, j).components() {
                        worst = worst.max(coef.eval(&val)?.abs());
                    }
                }
            }
            out.push((rational_to_f64(&eps), worst));
        }
        Ok(out)
    })();
    if let Ok(v) = &decay {
        for (eps, m) in v {
            r.derive(&format!("dropped_leg_curvature_eps_{eps:e}"), json!(m));
        }
    }
    r.check("eps-decay", 0.1, || {
        let v = share(&decay)?;
        let mut worst: f64 = 0.0;
        let mut ratios = Vec::new();
        for w in v.windows(2) {
            let ratio = (w[0].1 / w[1].1) / (w[0].0 / w[1].0);
            ratios.push(format!("{ratio:.6}"));
            worst = worst.max((ratio - 1.0).abs());
        }
        Ok(Measure::new(worst, format!("normalised ratios {}", ratios.join(", "))))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ScenarioSpec::new("bogus").validate().is_err());
        let mut s = ScenarioSpec::new("thm-7d-negative");
        assert!(s.validate().is_ok());
        s.overrides.push("rank2-lambda".into());
        assert!(s.validate().is_ok());
        s.overrides.push("nope".into());
        assert!(s.validate().is_err());
        let mut p = ScenarioSpec::new("ball-7d");
        p.params.insert("alphaP".into(), -1.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn spec_round_trip() {
        let s: ScenarioSpec = serde_json::from_str(r#"{"scenario": "ball-7d", "seed": 3}"#).unwrap();
        assert_eq!(s.samples, DEFAULT_SAMPLES);
        assert!(serde_json::from_str::<ScenarioSpec>(r#"{"scenario": "x", "extra": 1}"#).is_err());
    }
}
