//! Closed-form dilaton profiles and their jets.
//!
//! Every profile is described through `g = e^{2f}` and its partial
//! derivatives up to order three; the jets of `f = ½ ln g` follow from
//!
//! ```text
//! f_i   = g_i / 2g
//! f_ij  = g_ij / 2g − g_i g_j / 2g²
//! f_ijk = g_ijk / 2g − (g_ij g_k + g_ik g_j + g_jk g_i) / 2g² + g_i g_j g_k / g³
//! ```
//!
//! The computation is generic so that profiles that are rational in `x` can
//! be evaluated exactly at rational points.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::weierstrass::{higher_derivatives, weierstrass_p};
use crate::diffring::{int, rational_to_f64, rational_pow, Assignment, CoefExpr, Jet, Rational, Valuation, Var};
use crate::error::{Error, Result};

/// Field operations needed by the jet formulas.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + PartialOrd
{
    fn from_i64(n: i64) -> Self;
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
}

impl Scalar for Rational {
    fn from_i64(n: i64) -> Self {
        int(n)
    }
}

/// `g = e^{2f}` with all partial derivatives up to order three.
#[derive(Clone, Debug, PartialEq)]
pub struct GJets<T> {
    pub g: T,
    pub g1: [T; 4],
    pub g2: [[T; 4]; 4],
    pub g3: [[[T; 4]; 4]; 4],
}

/// Jets of `f` (without `f` itself) plus the value of `e^{2f}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FJets<T> {
    pub e2f: T,
    pub f1: [T; 4],
    pub f2: [[T; 4]; 4],
    pub f3: [[[T; 4]; 4]; 4],
}

impl<T: Scalar> GJets<T> {
    pub fn to_f_jets(&self) -> FJets<T> {
        let two = T::from_i64(2);
        let g = self.g.clone();
        let g2x = two.clone() * g.clone();
        let gsq2 = two.clone() * g.clone() * g.clone();
        let gcube = g.clone() * g.clone() * g.clone();
        let f1: [T; 4] = std::array::from_fn(|i| self.g1[i].clone() / g2x.clone());
        let f2: [[T; 4]; 4] = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self.g2[i][j].clone() / g2x.clone()
                    - self.g1[i].clone() * self.g1[j].clone() / gsq2.clone()
            })
        });
        let f3: [[[T; 4]; 4]; 4] = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    let (gi, gj, gk) = (&self.g1[i], &self.g1[j], &self.g1[k]);
                    let mixed = self.g2[i][j].clone() * gk.clone()
                        + self.g2[i][k].clone() * gj.clone()
                        + self.g2[j][k].clone() * gi.clone();
                    self.g3[i][j][k].clone() / g2x.clone() - mixed / gsq2.clone()
                        + gi.clone() * gj.clone() * gk.clone() / gcube.clone()
                })
            })
        });
        FJets {
            e2f: g,
            f1,
            f2,
            f3,
        }
    }
}

impl<T: Scalar> FJets<T> {
    fn jet(&self, j: &Jet) -> Option<T> {
        let idx: Vec<usize> = j.indices().iter().map(|&i| i as usize - 1).collect();
        match idx.as_slice() {
            [i] => Some(self.f1[*i].clone()),
            [i, k] => Some(self.f2[*i][*k].clone()),
            [i, k, l] => Some(self.f3[*i][*k][*l].clone()),
            _ => None,
        }
    }
}

impl FJets<f64> {
    /// A valuation with these jets, `f = ½ ln e^{2f}` and the given
    /// parameters.
    pub fn assignment<'a>(&'a self, params: &'a BTreeMap<String, f64>) -> JetValuation<'a> {
        JetValuation { jets: self, params }
    }
}

/// Numeric valuation backed by profile jets.
pub struct JetValuation<'a> {
    jets: &'a FJets<f64>,
    params: &'a BTreeMap<String, f64>,
}

impl Valuation for JetValuation<'_> {
    fn value(&self, v: &Var) -> Option<f64> {
        match v {
            Var::Param(p) => self.params.get(&**p).copied(),
            Var::Jet(j) if j.order() == 0 => Some(0.5 * self.jets.e2f.ln()),
            Var::Jet(j) => self.jets.jet(j),
        }
    }
}

/// Evaluate `e` exactly with rational jets. Only even powers `e^{2mf}`
/// may occur (they are powers of `g`); parameters are looked up in `params`.
pub fn eval_exact(e: &CoefExpr, jets: &FJets<Rational>, params: &BTreeMap<String, Rational>) -> Result<Rational> {
    let lookup = |v: &Var| -> Option<Rational> {
        match v {
            Var::Param(p) => params.get(&**p).cloned(),
            Var::Jet(j) => jets.jet(j),
        }
    };
    e.eval_exact(&lookup, &jets.e2f)?
        .ok_or_else(|| Error::BadParams("odd power of e^f in an exact evaluation".into()))
}

/// Evaluate `e` numerically at profile jets.
pub fn eval_numeric(e: &CoefExpr, jets: &FJets<f64>, params: &BTreeMap<String, f64>) -> Result<f64> {
    e.eval(&jets.assignment(params))
}

/// A user-supplied profile: `g`-jets as a function of the point.
pub type CustomJets = Arc<dyn Fn(&[f64; 4]) -> Result<GJets<f64>> + Send + Sync>;

/// The closed-form dilatons of the catalogue.
#[derive(Clone)]
pub enum DilatonProfile {
    /// `e^{2f} = α² ℘(x¹)` for `℘′² = 4℘(℘ − d)(℘ + d)`.
    Weierstrass { d: f64, alpha: f64 },
    /// `e^{2f} = c / |x − center|²`.
    Fundamental { c: Rational, center: [Rational; 4] },
    /// `e^{2f} = (|A|²/4)(1 − |x|²)` on the unit ball.
    Ball { a_sq: Rational },
    Custom { name: String, jets: CustomJets },
}

impl fmt::Debug for DilatonProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DilatonProfile::Weierstrass { d, alpha } => write!(f, "Weierstrass(d={d}, alpha={alpha})"),
            DilatonProfile::Fundamental { c, center } => {
                write!(f, "Fundamental(c={c}, center=[{}, {}, {}, {}])", center[0], center[1], center[2], center[3])
            }
            DilatonProfile::Ball { a_sq } => write!(f, "Ball(|A|^2={a_sq})"),
            DilatonProfile::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

fn zero_jets<T: Scalar>(g: T) -> GJets<T> {
    let z = || T::from_i64(0);
    GJets {
        g,
        g1: std::array::from_fn(|_| z()),
        g2: std::array::from_fn(|_| std::array::from_fn(|_| z())),
        g3: std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| z()))),
    }
}

fn ball_jets<T: Scalar>(c: T, x: &[T; 4]) -> GJets<T> {
    let r2 = x.iter().fold(T::from_i64(0), |acc, xi| acc + xi.clone() * xi.clone());
    let mut j = zero_jets(c.clone() * (T::from_i64(1) - r2));
    for i in 0..4 {
        j.g1[i] = T::from_i64(-2) * c.clone() * x[i].clone();
        j.g2[i][i] = T::from_i64(-2) * c.clone();
    }
    j
}

fn fundamental_jets<T: Scalar>(c: T, y: &[T; 4]) -> GJets<T> {
    let r2 = y.iter().fold(T::from_i64(0), |acc, yi| acc + yi.clone() * yi.clone());
    let r4 = r2.clone() * r2.clone();
    let r6 = r4.clone() * r2.clone();
    let r8 = r4.clone() * r4.clone();
    let k = |n: i64| T::from_i64(n);
    let delta = |a: usize, b: usize| if a == b { k(1) } else { k(0) };
    let mut j = zero_jets(c.clone() / r2.clone());
    for a in 0..4 {
        j.g1[a] = k(-2) * c.clone() * y[a].clone() / r4.clone();
        for b in 0..4 {
            j.g2[a][b] = k(-2) * c.clone() * delta(a, b) / r4.clone()
                + k(8) * c.clone() * y[a].clone() * y[b].clone() / r6.clone();
            for e in 0..4 {
                let sym = delta(a, b) * y[e].clone() + delta(a, e) * y[b].clone() + delta(b, e) * y[a].clone();
                j.g3[a][b][e] = k(8) * c.clone() * sym / r6.clone()
                    - k(48) * c.clone() * y[a].clone() * y[b].clone() * y[e].clone() / r8.clone();
            }
        }
    }
    j
}

impl DilatonProfile {
    /// The profile as printed for the positive-`α′` solution,
    /// `c = 3α′/4`.
    pub fn fundamental_from_alpha(alpha_p: &Rational) -> DilatonProfile {
        DilatonProfile::Fundamental {
            c: alpha_p * Rational::new(3.into(), 4.into()),
            center: std::array::from_fn(|_| Rational::zero()),
        }
    }

    /// Build a profile from a name and numeric parameters.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<DilatonProfile> {
        let get = |k: &str| -> Result<f64> {
            params
                .get(k)
                .copied()
                .ok_or_else(|| Error::BadParams(format!("profile `{name}` needs parameter `{k}`")))
        };
        let to_rat = |x: f64, k: &str| -> Result<Rational> {
            Rational::from_float(x).ok_or_else(|| Error::BadParams(format!("`{k}` is not finite")))
        };
        match name {
            "weierstrass" => {
                let d = get("d")?;
                let alpha = params.get("alpha").copied().unwrap_or(1.0);
                if !(d > 0.0) || !(alpha > 0.0) {
                    return Err(Error::BadParams("weierstrass needs d > 0 and alpha > 0".into()));
                }
                Ok(DilatonProfile::Weierstrass { d, alpha })
            }
            "fundamental" => {
                let c = match (params.get("c"), params.get("alphaP")) {
                    (Some(&c), _) => to_rat(c, "c")?,
                    (None, Some(&ap)) => to_rat(ap, "alphaP")? * Rational::new(3.into(), 4.into()),
                    (None, None) => return Err(Error::BadParams("fundamental needs `c` or `alphaP`".into())),
                };
                if !c.is_positive() {
                    return Err(Error::BadParams("fundamental needs a positive constant".into()));
                }
                let center = ["e1", "e2", "e3", "e4"]
                    .map(|k| params.get(k).copied().unwrap_or(0.0));
                let center = [
                    to_rat(center[0], "e1")?,
                    to_rat(center[1], "e2")?,
                    to_rat(center[2], "e3")?,
                    to_rat(center[3], "e4")?,
                ];
                Ok(DilatonProfile::Fundamental { c, center })
            }
            "ball" => {
                let a_sq = to_rat(get("a_sq")?, "a_sq")?;
                if !a_sq.is_positive() {
                    return Err(Error::BadParams("ball needs |A|^2 > 0".into()));
                }
                Ok(DilatonProfile::Ball { a_sq })
            }
            other => Err(Error::BadParams(format!("unknown profile `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            DilatonProfile::Weierstrass { .. } => "weierstrass",
            DilatonProfile::Fundamental { .. } => "fundamental",
            DilatonProfile::Ball { .. } => "ball",
            DilatonProfile::Custom { name, .. } => name,
        }
    }

    /// Whether the profile is rational in `x` (exact evaluation possible).
    pub fn is_rational(&self) -> bool {
        matches!(self, DilatonProfile::Fundamental { .. } | DilatonProfile::Ball { .. })
    }

    /// Numeric `g`-jets at `x`.
    pub fn g_jets(&self, x: &[f64; 4]) -> Result<GJets<f64>> {
        match self {
            DilatonProfile::Weierstrass { d, alpha } => {
                let (u, du) = weierstrass_p(x[0], *d)?;
                let (ddu, dddu) = higher_derivatives(u, du, *d);
                let a2 = alpha * alpha;
                let mut j = zero_jets(a2 * u);
                j.g1[0] = a2 * du;
                j.g2[0][0] = a2 * ddu;
                j.g3[0][0][0] = a2 * dddu;
                Ok(j)
            }
            DilatonProfile::Custom { jets, .. } => {
                let j = jets(x)?;
                if !(j.g > 0.0) {
                    return Err(Error::BadParams(format!("e^(2f) = {} is not positive", j.g)));
                }
                Ok(j)
            }
            _ => {
                let xr = x.map(|v| Rational::from_float(v).expect("finite point"));
                let j = self.g_jets_exact(&xr)?;
                let c = |r: &Rational| rational_to_f64(r);
                Ok(GJets {
                    g: c(&j.g),
                    g1: j.g1.each_ref().map(c),
                    g2: j.g2.each_ref().map(|r| r.each_ref().map(c)),
                    g3: j.g3.each_ref().map(|r| r.each_ref().map(|s| s.each_ref().map(c))),
                })
            }
        }
    }

    /// Exact `g`-jets at a rational point (rational profiles only).
    pub fn g_jets_exact(&self, x: &[Rational; 4]) -> Result<GJets<Rational>> {
        match self {
            DilatonProfile::Ball { a_sq } => {
                let c = a_sq / int(4);
                let r2: Rational = x.iter().map(|v| v * v).sum();
                if r2 >= Rational::one() {
                    return Err(Error::BadParams("ball profile evaluated outside |x| < 1".into()));
                }
                Ok(ball_jets(c, x))
            }
            DilatonProfile::Fundamental { c, center } => {
                let y: [Rational; 4] = std::array::from_fn(|i| &x[i] - &center[i]);
                if y.iter().all(Zero::is_zero) {
                    return Err(Error::AtPole(0.0));
                }
                Ok(fundamental_jets(c.clone(), &y))
            }
            _ => Err(Error::BadParams(format!(
                "profile `{}` has no exact jets",
                self.name()
            ))),
        }
    }

    pub fn f_jets(&self, x: &[f64; 4]) -> Result<FJets<f64>> {
        Ok(self.g_jets(x)?.to_f_jets())
    }

    pub fn f_jets_exact(&self, x: &[Rational; 4]) -> Result<FJets<Rational>> {
        Ok(self.g_jets_exact(x)?.to_f_jets())
    }
}

/// An [`Assignment`] holding every jet of a profile at one point.
pub fn assignment_from_jets(j: &FJets<f64>, params: &BTreeMap<String, f64>) -> Result<Assignment> {
    let mut a = Assignment::new();
    for (k, v) in params {
        a.set_param(k, *v);
    }
    a.set_jet(Jet::new(&[])?, 0.5 * j.e2f.ln());
    for i in 1..=4u8 {
        a.set_jet(Jet::new(&[i])?, j.f1[i as usize - 1]);
        for k in i..=4u8 {
            a.set_jet(Jet::new(&[i, k])?, j.f2[i as usize - 1][k as usize - 1]);
            for l in k..=4u8 {
                a.set_jet(Jet::new(&[i, k, l])?, j.f3[i as usize - 1][k as usize - 1][l as usize - 1]);
            }
        }
    }
    Ok(a)
}

/// `e^{k f}` for even `k` from `e^{2f}`.
pub fn exp_even(e2f: &Rational, k: i32) -> Rational {
    assert!(k % 2 == 0);
    rational_pow(e2f, k / 2)
}
