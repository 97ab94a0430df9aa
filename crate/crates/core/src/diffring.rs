//! Exact differential coefficient ring.
//!
//! Every scalar that multiplies a basis form lives here: polynomials with
//! arbitrary-precision rational coefficients in
//!
//! * constant parameters (`a11`, `b`, `alphaP`, ...),
//! * jets of the dilaton `f` (partial derivatives up to order three, indexed
//!   by sorted multi-indices over the coordinate directions `1..=4`),
//! * integer powers `e^{k f}` of the exponential of the dilaton.
//!
//! Terms are stored in a `BTreeMap` keyed by monomial, so structural equality
//! is semantic equality. The storage order (and `Display` order) is the
//! derived order on [`Monomial`]: variables are compared by kind tag
//! (parameters before jets), then by name / jet order and indices, then by
//! exponent, and finally by the power of `e^f`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Highest jet order the ring admits.
pub const MAX_JET_ORDER: usize = 3;

/// Number of coordinate directions the dilaton depends on.
pub const BASE_DIM: usize = 4;

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator outside the f64 range individually
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// A partial derivative of the dilaton: `f`, `f_i`, `f_ij` or `f_ijk`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Jet {
    order: u8,
    idx: [u8; MAX_JET_ORDER],
}

impl Jet {
    /// The dilaton itself.
    pub const F: Jet = Jet {
        order: 0,
        idx: [0; MAX_JET_ORDER],
    };

    pub fn new(indices: &[u8]) -> Result<Jet> {
        if indices.len() > MAX_JET_ORDER {
            return Err(Error::JetOrderExceeded {
                order: indices.len(),
            });
        }
        if let Some(bad) = indices.iter().find(|&&i| i == 0 || i as usize > BASE_DIM) {
            return Err(Error::BadParams(format!("jet index {bad} outside 1..=4")));
        }
        let mut idx = [0u8; MAX_JET_ORDER];
        idx[..indices.len()].copy_from_slice(indices);
        idx[..indices.len()].sort_unstable();
        Ok(Jet {
            order: indices.len() as u8,
            idx,
        })
    }

    pub fn indices(&self) -> &[u8] {
        &self.idx[..self.order as usize]
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// `∂_i` of this jet.
    pub fn differentiate(&self, i: u8) -> Result<Jet> {
        if self.order() == MAX_JET_ORDER {
            return Err(Error::JetOrderExceeded {
                order: MAX_JET_ORDER + 1,
            });
        }
        let mut v = self.indices().to_vec();
        v.push(i);
        Jet::new(&v)
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.order == 0 {
            return write!(f, "f");
        }
        write!(f, "f_")?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

/// A polynomial variable of the ring. Powers of `e^f` are tracked separately
/// on the monomial because they form a group.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Var {
    Param(Arc<str>),
    Jet(Jet),
}

impl Var {
    pub fn param(name: &str) -> Var {
        Var::Param(Arc::from(name))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Param(name) => write!(f, "{name}"),
            Var::Jet(j) => write!(f, "{j}"),
        }
    }
}

/// A product of variable powers times `e^{expf·f}`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial {
    vars: Vec<(Var, u32)>,
    expf: i32,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn var(v: Var) -> Monomial {
        Monomial {
            vars: vec![(v, 1)],
            expf: 0,
        }
    }

    pub fn expf_only(k: i32) -> Monomial {
        Monomial {
            vars: Vec::new(),
            expf: k,
        }
    }

    pub fn vars(&self) -> &[(Var, u32)] {
        &self.vars
    }

    pub fn expf(&self) -> i32 {
        self.expf
    }

    pub fn is_one(&self) -> bool {
        self.vars.is_empty() && self.expf == 0
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut vars = Vec::with_capacity(self.vars.len() + other.vars.len());
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() && j < other.vars.len() {
            match self.vars[i].0.cmp(&other.vars[j].0) {
                Ordering::Less => {
                    vars.push(self.vars[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    vars.push(other.vars[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    vars.push((self.vars[i].0.clone(), self.vars[i].1 + other.vars[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        vars.extend_from_slice(&self.vars[i..]);
        vars.extend_from_slice(&other.vars[j..]);
        Monomial {
            vars,
            expf: self.expf + other.expf,
        }
    }

    /// `self / other` on the variable part, if `other` divides `self`.
    fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut vars = Vec::with_capacity(self.vars.len());
        let mut j = 0;
        for (v, e) in &self.vars {
            if j < other.vars.len() && other.vars[j].0 < *v {
                return None;
            }
            if j < other.vars.len() && other.vars[j].0 == *v {
                let oe = other.vars[j].1;
                j += 1;
                match e.cmp(&oe) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => vars.push((v.clone(), e - oe)),
                }
            } else {
                vars.push((v.clone(), *e));
            }
        }
        if j < other.vars.len() {
            return None;
        }
        Some(Monomial {
            vars,
            expf: self.expf - other.expf,
        })
    }

    /// Lexicographic monomial order (compatible with multiplication), used
    /// by exact division. The `e^f` power breaks ties.
    fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.vars.get(i), other.vars.get(j)) {
                (None, None) => return self.expf.cmp(&other.expf),
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, e) in &self.vars {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        if self.expf != 0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "e^({}f)", self.expf)?;
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Source of numeric values for ring variables.
pub trait Valuation {
    fn value(&self, v: &Var) -> Option<f64>;
}

/// A plain table of parameter and jet values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    pub params: BTreeMap<String, f64>,
    pub jets: BTreeMap<Jet, f64>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_jet(mut self, indices: &[u8], value: f64) -> Self {
        self.jets
            .insert(Jet::new(indices).expect("valid jet"), value);
        self
    }

    pub fn set_param(&mut self, name: &str, value: f64) {
        self.params.insert(name.to_string(), value);
    }

    pub fn set_jet(&mut self, jet: Jet, value: f64) {
        self.jets.insert(jet, value);
    }
}

impl Valuation for Assignment {
    fn value(&self, v: &Var) -> Option<f64> {
        match v {
            Var::Param(name) => self.params.get(name.as_ref()).copied(),
            Var::Jet(j) => self.jets.get(j).copied(),
        }
    }
}

/// An element of the coefficient ring in canonical form.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CoefExpr {
    terms: BTreeMap<Monomial, Rational>,
}

impl CoefExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_term(Monomial::one(), c)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(int(n))
    }

    pub fn rat(num: i64, den: i64) -> Self {
        Self::constant(rat(num, den))
    }

    pub fn param(name: &str) -> Self {
        Self::from_term(Monomial::var(Var::param(name)), Rational::one())
    }

    /// The jet `f_I`; panics on an invalid multi-index (programming error).
    pub fn jet(indices: &[u8]) -> Self {
        let j = Jet::new(indices).expect("jet multi-index must be valid");
        Self::from_term(Monomial::var(Var::Jet(j)), Rational::one())
    }

    /// `e^{k f}`.
    pub fn expf(k: i32) -> Self {
        Self::from_term(Monomial::expf_only(k), Rational::one())
    }

    pub fn from_term(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        CoefExpr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// The value if this expression is a rational constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// True if no jets and no powers of `e^f` occur.
    pub fn is_dilaton_free(&self) -> bool {
        self.terms
            .keys()
            .all(|m| m.expf == 0 && m.vars.iter().all(|(v, _)| matches!(v, Var::Param(_))))
    }

    pub fn contains_param(&self, name: &str) -> bool {
        self.terms.keys().any(|m| {
            m.vars
                .iter()
                .any(|(v, _)| matches!(v, Var::Param(p) if p.as_ref() == name))
        })
    }

    pub fn max_jet_order(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|m| m.vars.iter())
            .filter_map(|(v, _)| match v {
                Var::Jet(j) => Some(j.order()),
                Var::Param(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Distinct powers of `e^f` that occur.
    pub fn expf_powers(&self) -> Vec<i32> {
        let mut ks: Vec<i32> = self.terms.keys().map(|m| m.expf).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    /// Split by power of `e^f`: `self = Σ_k part_k · e^{k f}` where no part
    /// contains `e^f`.
    pub fn split_by_expf(&self) -> BTreeMap<i32, CoefExpr> {
        let mut out: BTreeMap<i32, CoefExpr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let stripped = Monomial {
                vars: m.vars.clone(),
                expf: 0,
            };
            out.entry(m.expf)
                .or_default()
                .add_term(stripped, c.clone());
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> CoefExpr {
        if c.is_zero() {
            return CoefExpr::zero();
        }
        CoefExpr {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn mul_expf(&self, k: i32) -> CoefExpr {
        if k == 0 {
            return self.clone();
        }
        CoefExpr {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| {
                    (
                        Monomial {
                            vars: m.vars.clone(),
                            expf: m.expf + k,
                        },
                        v.clone(),
                    )
                })
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> CoefExpr {
        let mut acc = CoefExpr::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// `∂/∂x_i`. Directions 5..7 differentiate to zero since coefficients
    /// only depend on the base coordinates.
    pub fn partial(&self, i: usize) -> Result<CoefExpr> {
        if i == 0 || i > 7 {
            return Err(Error::BadParams(format!("direction {i} outside 1..=7")));
        }
        if i > BASE_DIM {
            return Ok(CoefExpr::zero());
        }
        let di = i as u8;
        let fi = Var::Jet(Jet::new(&[di])?);
        let mut out = CoefExpr::zero();
        for (m, c) in &self.terms {
            if m.expf != 0 {
                out.add_term(m.mul(&Monomial::var(fi.clone())), c * int(m.expf as i64));
            }
            for (pos, (v, e)) in m.vars.iter().enumerate() {
                let Var::Jet(j) = v else { continue };
                let dj = Var::Jet(j.differentiate(di)?);
                let mut rest = m.clone();
                if *e == 1 {
                    rest.vars.remove(pos);
                } else {
                    rest.vars[pos].1 -= 1;
                }
                out.add_term(rest.mul(&Monomial::var(dj)), c * int(*e as i64));
            }
        }
        Ok(out)
    }

    /// Replace variables; `None` keeps the variable.
    pub fn substitute(&self, replace: &dyn Fn(&Var) -> Option<CoefExpr>) -> CoefExpr {
        let mut out = CoefExpr::zero();
        for (m, c) in &self.terms {
            let mut term = CoefExpr::from_term(Monomial::expf_only(m.expf), c.clone());
            for (v, e) in &m.vars {
                let factor = match replace(v) {
                    Some(r) => r.pow(*e),
                    None => CoefExpr::from_term(
                        Monomial {
                            vars: vec![(v.clone(), *e)],
                            expf: 0,
                        },
                        Rational::one(),
                    ),
                };
                term = &term * &factor;
                if term.is_zero() {
                    break;
                }
            }
            out += &term;
        }
        out
    }

    /// Substitute a constant dilaton: every jet becomes zero and `e^{kf}`
    /// becomes one.
    pub fn at_constant_dilaton(&self) -> CoefExpr {
        let mut out = CoefExpr::zero();
        for (m, c) in &self.terms {
            if m.vars.iter().all(|(v, _)| matches!(v, Var::Param(_))) {
                out.add_term(
                    Monomial {
                        vars: m.vars.clone(),
                        expf: 0,
                    },
                    c.clone(),
                );
            }
        }
        out
    }

    /// Keep only the dependence on `x_1`: every jet carrying another index
    /// is set to zero.
    pub fn restrict_to_first_variable(&self) -> CoefExpr {
        self.substitute(&|v| match v {
            Var::Jet(j) if j.indices().iter().any(|&i| i != 1) => Some(CoefExpr::zero()),
            _ => None,
        })
    }

    pub fn eval(&self, val: &dyn Valuation) -> Result<f64> {
        let needs_f = self.terms.keys().any(|m| m.expf != 0);
        let fval = if needs_f {
            val.value(&Var::Jet(Jet::F))
                .ok_or_else(|| Error::UnboundSymbol("f".into()))?
        } else {
            0.0
        };
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (v, e) in &m.vars {
                let x = val
                    .value(v)
                    .ok_or_else(|| Error::UnboundSymbol(v.to_string()))?;
                t *= x.powi(*e as i32);
            }
            if m.expf != 0 {
                t *= (m.expf as f64 * fval).exp();
            }
            sum += t;
        }
        Ok(sum)
    }

    /// Exact evaluation when every variable has a rational value and only
    /// even powers of `e^f` occur, so that `e^{2kf} = (e^{2f})^k`.
    /// Returns `Ok(None)` if an odd power occurs.
    pub fn eval_exact(
        &self,
        lookup: &dyn Fn(&Var) -> Option<Rational>,
        e2f: &Rational,
    ) -> Result<Option<Rational>> {
        if self.terms.keys().any(|m| m.expf % 2 != 0) {
            return Ok(None);
        }
        let mut sum = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.vars {
                let x = lookup(v).ok_or_else(|| Error::UnboundSymbol(v.to_string()))?;
                t *= rational_pow(&x, *e as i32);
            }
            if m.expf != 0 {
                t *= rational_pow(e2f, m.expf / 2);
            }
            sum += t;
        }
        Ok(Some(sum))
    }

    fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Exact quotient `self / divisor` in the ring (with `e^{±f}` units), or
    /// `None` if `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &CoefExpr) -> Option<CoefExpr> {
        let (lm_d, lc_d) = divisor.leading_term()?;
        let (lm_d, lc_d) = (lm_d.clone(), lc_d.clone());
        let mut rem = self.clone();
        let mut quot = CoefExpr::zero();
        // a true quotient has at most as many terms as the dividend has
        // monomials reachable; the cap guards non-divisible inputs
        let cap = 4 * (self.len() + 1) * (divisor.len() + 1) + 64;
        for _ in 0..cap {
            let Some((lm_r, lc_r)) = rem.leading_term() else {
                return Some(quot);
            };
            let m = lm_r.div(&lm_d)?;
            let t = CoefExpr::from_term(m, lc_r / &lc_d);
            rem -= &(&t * divisor);
            quot += &t;
        }
        None
    }
}

pub fn rational_pow(x: &Rational, e: i32) -> Rational {
    let mut acc = Rational::one();
    let base = if e < 0 { x.recip() } else { x.clone() };
    for _ in 0..e.unsigned_abs() {
        acc *= &base;
    }
    acc
}

impl fmt::Display for CoefExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if n == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CoefExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefExpr({self})")
    }
}

impl From<Rational> for CoefExpr {
    fn from(c: Rational) -> Self {
        CoefExpr::constant(c)
    }
}

impl From<i64> for CoefExpr {
    fn from(n: i64) -> Self {
        CoefExpr::int(n)
    }
}

impl AddAssign<&CoefExpr> for CoefExpr {
    fn add_assign(&mut self, rhs: &CoefExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&CoefExpr> for CoefExpr {
    fn sub_assign(&mut self, rhs: &CoefExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl Add<&CoefExpr> for &CoefExpr {
    type Output = CoefExpr;
    fn add(self, rhs: &CoefExpr) -> CoefExpr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&CoefExpr> for &CoefExpr {
    type Output = CoefExpr;
    fn sub(self, rhs: &CoefExpr) -> CoefExpr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<&CoefExpr> for &CoefExpr {
    type Output = CoefExpr;
    fn mul(self, rhs: &CoefExpr) -> CoefExpr {
        let mut out = CoefExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &CoefExpr {
    type Output = CoefExpr;
    fn neg(self) -> CoefExpr {
        CoefExpr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<CoefExpr> for CoefExpr {
            type Output = CoefExpr;
            fn $method(self, rhs: CoefExpr) -> CoefExpr {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&CoefExpr> for CoefExpr {
            type Output = CoefExpr;
            fn $method(self, rhs: &CoefExpr) -> CoefExpr {
                (&self).$method(rhs)
            }
        }
        impl $tr<CoefExpr> for &CoefExpr {
            type Output = CoefExpr;
            fn $method(self, rhs: CoefExpr) -> CoefExpr {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for CoefExpr {
    type Output = CoefExpr;
    fn neg(self) -> CoefExpr {
        -&self
    }
}

impl std::iter::Sum for CoefExpr {
    fn sum<I: Iterator<Item = CoefExpr>>(iter: I) -> CoefExpr {
        let mut acc = CoefExpr::zero();
        for x in iter {
            acc += &x;
        }
        acc
    }
}

/// `f_i` for `i` in `1..=4`.
pub fn fd(i: usize) -> CoefExpr {
    CoefExpr::jet(&[i as u8])
}

/// `f_ij`.
pub fn fdd(i: usize, j: usize) -> CoefExpr {
    CoefExpr::jet(&[i as u8, j as u8])
}

/// `|∇f|² = Σ f_i²`.
pub fn grad_sq() -> CoefExpr {
    (1..=BASE_DIM).map(|i| &fd(i) * &fd(i)).sum()
}

/// Flat Laplacian on ℝ⁴: `Σ_i ∂_i ∂_i e`.
pub fn flat_laplacian(e: &CoefExpr) -> Result<CoefExpr> {
    let mut out = CoefExpr::zero();
    for i in 1..=BASE_DIM {
        out += &e.partial(i)?.partial(i)?;
    }
    Ok(out)
}

/// The 2-Hessian: sum of the principal 2×2 minors of the Hessian of `f`.
pub fn hessian2() -> CoefExpr {
    let mut out = CoefExpr::zero();
    for i in 1..=BASE_DIM {
        for j in (i + 1)..=BASE_DIM {
            out += &(&fdd(i, i) * &fdd(j, j));
            out -= &(&fdd(i, j) * &fdd(i, j));
        }
    }
    out
}

/// The 4-Laplacian `div(|∇f|² ∇f)`, expanded in jets.
pub fn p_laplacian4() -> CoefExpr {
    let g = grad_sq();
    let mut out = CoefExpr::zero();
    for i in 1..=BASE_DIM {
        out += &(&g * &fd(i))
            .partial(i)
            .expect("second jets are within the order budget");
    }
    out
}

/// A 3×3 matrix over the coefficient ring (structure matrices `A`, `B`, `Λ`).
#[derive(Clone, Debug, PartialEq)]
pub struct Mat3(pub [[CoefExpr; 3]; 3]);

impl Mat3 {
    pub fn zero() -> Self {
        Mat3(Default::default())
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = CoefExpr::one();
        }
        m
    }

    pub fn from_ints(rows: [[i64; 3]; 3]) -> Self {
        Mat3(rows.map(|r| r.map(CoefExpr::int)))
    }

    pub fn from_rationals(rows: [[Rational; 3]; 3]) -> Self {
        Mat3(rows.map(|r| r.map(CoefExpr::constant)))
    }

    /// Fully symbolic matrix with entries named `{prefix}{i}{j}` (1-based).
    pub fn symbolic(prefix: &str) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = CoefExpr::param(&format!("{prefix}{}{}", i + 1, j + 1));
            }
        }
        m
    }

    /// The rank-one matrix `u vᵀ`.
    pub fn outer(u: &[CoefExpr; 3], v: &[CoefExpr; 3]) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = &u[i] * &v[j];
            }
        }
        m
    }

    /// Entry with 1-based indices, matching the usual `a_{ij}` labels.
    pub fn at(&self, i: usize, j: usize) -> &CoefExpr {
        &self.0[i - 1][j - 1]
    }

    pub fn row(&self, i: usize) -> [CoefExpr; 3] {
        self.0[i - 1].clone()
    }

    pub fn mul(&self, rhs: &Mat3) -> Mat3 {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = (0..3).map(|k| &self.0[i][k] * &rhs.0[k][j]).sum();
            }
        }
        m
    }

    /// `|M|² = Σ m_ij²`.
    pub fn norm_sq(&self) -> CoefExpr {
        self.0.iter().flatten().map(|x| x * x).sum()
    }

    pub fn det(&self) -> CoefExpr {
        let m = &self.0;
        let t1 = &m[0][0] * &(&(&m[1][1] * &m[2][2]) - &(&m[1][2] * &m[2][1]));
        let t2 = &m[0][1] * &(&(&m[1][0] * &m[2][2]) - &(&m[1][2] * &m[2][0]));
        let t3 = &m[0][2] * &(&(&m[1][0] * &m[2][1]) - &(&m[1][1] * &m[2][0]));
        &(&t1 - &t2) + &t3
    }

    /// `Λ_{ijkl} = λ_ik λ_jl − λ_jk λ_il` (1-based).
    pub fn minor2(&self, i: usize, j: usize, k: usize, l: usize) -> CoefExpr {
        &(self.at(i, k) * self.at(j, l)) - &(self.at(j, k) * self.at(i, l))
    }

    /// All 2×2 minors (rows i<j, columns k<l).
    pub fn minors2(&self) -> Vec<CoefExpr> {
        let pairs = [(1, 2), (1, 3), (2, 3)];
        let mut out = Vec::with_capacity(9);
        for &(i, j) in &pairs {
            for &(k, l) in &pairs {
                out.push(self.minor2(i, j, k, l));
            }
        }
        out
    }

    pub fn rank_at_most_one(&self) -> bool {
        self.minors2().iter().all(CoefExpr::is_zero)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(CoefExpr::is_zero)
    }

    pub fn map(&self, f: impl Fn(&CoefExpr) -> CoefExpr) -> Mat3 {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| f(&self.0[i][j]))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(i: &[u8]) -> CoefExpr {
        CoefExpr::jet(i)
    }

    #[test]
    fn jet_promotion_and_chain_rule() {
        assert_eq!(f(&[2]).partial(1).unwrap(), f(&[1, 2]));
        let e2 = CoefExpr::expf(2);
        assert_eq!(e2.partial(1).unwrap(), &(&CoefExpr::int(2) * &f(&[1])) * &e2);
    }

    #[test]
    fn leibniz_example() {
        let e = &(&CoefExpr::param("a12") * &CoefExpr::expf(-2)) * &f(&[4]);
        let expected = &(&CoefExpr::param("a12") * &CoefExpr::expf(-2))
            * &(&f(&[3, 4]) - &(&CoefExpr::int(2) * &(&f(&[3]) * &f(&[4]))));
        assert_eq!(e.partial(3).unwrap(), expected);
    }

    #[test]
    fn fiber_directions_and_params_are_constant() {
        assert!(f(&[1]).partial(5).unwrap().is_zero());
        assert!(CoefExpr::param("b").partial(2).unwrap().is_zero());
        assert!(matches!(f(&[1]).partial(8), Err(Error::BadParams(_))));
    }

    #[test]
    fn jet_cap_is_enforced() {
        let third = f(&[1, 2, 3]);
        assert_eq!(
            third.partial(4),
            Err(Error::JetOrderExceeded { order: 4 })
        );
        assert!(Jet::new(&[1, 1, 1, 1]).is_err());
        assert_eq!(Jet::new(&[3, 1]).unwrap(), Jet::new(&[1, 3]).unwrap());
    }

    #[test]
    fn laplacian_of_exp2f() {
        let lap = flat_laplacian(&CoefExpr::expf(2)).unwrap();
        let trace: CoefExpr = (1..=4).map(|i| fdd(i, i)).sum();
        let expected = &CoefExpr::expf(2)
            * &(&trace.scale(&int(2)) + &grad_sq().scale(&int(4)));
        assert_eq!(lap, expected);
    }

    #[test]
    fn laplacian_of_exp_minus_2f_identity() {
        let lap = flat_laplacian(&CoefExpr::expf(-2)).unwrap();
        let trace: CoefExpr = (1..=4).map(|i| fdd(i, i)).sum();
        let expected = &CoefExpr::expf(-2)
            * &(&trace.scale(&int(-2)) + &grad_sq().scale(&int(4)));
        assert_eq!(lap, expected);
    }

    #[test]
    fn hessian2_cases() {
        // one variable
        let one_var = hessian2().restrict_to_first_variable();
        assert!(one_var.is_zero());
        // two variables: det of the 2×2 Hessian
        let two = hessian2().substitute(&|v| match v {
            Var::Jet(j) if j.indices().iter().any(|&i| i > 2) => Some(CoefExpr::zero()),
            _ => None,
        });
        assert_eq!(two, &(&fdd(1, 1) * &fdd(2, 2)) - &(&fdd(1, 2) * &fdd(1, 2)));
        // identity Hessian
        let id = hessian2().substitute(&|v| match v {
            Var::Jet(j) if j.order() == 2 => Some(if j.indices()[0] == j.indices()[1] {
                CoefExpr::one()
            } else {
                CoefExpr::zero()
            }),
            _ => None,
        });
        assert_eq!(id, CoefExpr::int(6));
    }

    #[test]
    fn p_laplacian_cases() {
        let one = p_laplacian4().restrict_to_first_variable();
        assert_eq!(one, (&(&fd(1) * &fd(1)) * &fdd(1, 1)).scale(&int(3)));
        let linear = p_laplacian4().substitute(&|v| match v {
            Var::Jet(j) if j.order() == 2 => Some(CoefExpr::zero()),
            _ => None,
        });
        assert!(linear.is_zero());
        // Σ_i (|∇f|² f_ii + 2 Σ_j f_j f_ij f_i)
        let mut expected = CoefExpr::zero();
        for i in 1..=4 {
            expected += &(&grad_sq() * &fdd(i, i));
            for j in 1..=4 {
                expected += &(&(&fd(j) * &fdd(i, j)) * &fd(i)).scale(&int(2));
            }
        }
        assert_eq!(p_laplacian4(), expected);
    }

    #[test]
    fn numeric_evaluation() {
        let e = (&fd(1) * &CoefExpr::expf(2)).scale(&int(2));
        let a = Assignment::new().with_jet(&[], 0.0).with_jet(&[1], 3.0);
        assert_eq!(e.eval(&a).unwrap(), 6.0);
        assert_eq!(
            fd(2).eval(&a),
            Err(Error::UnboundSymbol("f_2".into()))
        );
    }

    #[test]
    fn exact_division() {
        let p = &(&CoefExpr::expf(2) * &fdd(1, 1)) + &CoefExpr::param("a");
        let q = &(&fd(2) * &CoefExpr::expf(-4)) - &CoefExpr::rat(3, 2);
        let prod = &p * &q;
        assert_eq!(prod.div_exact(&p).unwrap(), q);
        let not = &prod + &fd(3);
        assert!(not.div_exact(&p).is_none());
    }

    #[test]
    fn matrix_helpers() {
        let l = Mat3::from_ints([[1, 2, 3], [2, 4, 6], [0, 0, 0]]);
        assert!(l.rank_at_most_one());
        assert!(!Mat3::identity().rank_at_most_one());
        assert_eq!(Mat3::identity().det(), CoefExpr::one());
        assert_eq!(Mat3::identity().norm_sq(), CoefExpr::int(3));
    }

    #[test]
    fn display_is_readable() {
        let e = &(&CoefExpr::param("a11").scale(&rat(-3, 2)) * &fd(1)) * &CoefExpr::expf(-2);
        assert_eq!(e.to_string(), "-3/2*a11*f_1*e^(-2f)");
        assert_eq!(CoefExpr::zero().to_string(), "0");
    }
}
