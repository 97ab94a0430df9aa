//! Exterior forms on an orthonormal (barred) coframe.
//!
//! A [`CoframeSpec`] describes a nilpotent Lie coframe `e^1..e^n` through its
//! structure constants, `d e^k = Σ_{i<j} c^k_{ij} e^i ∧ e^j`, together with
//! per-leg conformal weights: the orthonormal coframe is
//! `ē^i = e^{w_i f} e^i`. Legs `1..=4` are the flat base coordinates
//! (`e^i = dx^i`), which is what lets coefficient functions of `x^1..x^4` be
//! differentiated through the ring.
//!
//! All forms are expressed in the barred basis. A form on the unbarred
//! volume `e^{1234}` is written `e^{-4f} ē^{1234}`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use crate::diffring::{fd, CoefExpr, Rational, BASE_DIM};
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 7;

/// A basis multi-index `ē^{i_1 … i_p}`, stored as a bit mask (bit `i-1` for
/// leg `i`) and ordered lexicographically on the increasing index tuple.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Blade(u8);

impl Blade {
    pub fn from_sorted(indices: &[usize]) -> Blade {
        Blade(indices.iter().fold(0u8, |m, &i| m | (1 << (i - 1))))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn indices(self) -> Vec<usize> {
        (1..=8).filter(|i| self.0 & (1 << (i - 1)) != 0).collect()
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, leg: usize) -> bool {
        self.0 & (1 << (leg - 1)) != 0
    }
}

impl Ord for Blade {
    fn cmp(&self, other: &Self) -> Ordering {
        self.indices().cmp(&other.indices())
    }
}

impl PartialOrd for Blade {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sign of `ē^a ∧ ē^b` relative to `ē^{a∪b}`; zero if they overlap.
fn wedge_sign(a: u8, b: u8) -> i32 {
    if a & b != 0 {
        return 0;
    }
    // count pairs (i in a, j in b) with i > j
    let mut inversions = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        inversions += (a >> (j + 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sign of the permutation sorting `indices`, or zero on a repeat.
fn sort_sign(indices: &[usize]) -> (i32, Vec<usize>) {
    let mut v = indices.to_vec();
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            match v[j].cmp(&v[j + 1]) {
                Ordering::Greater => {
                    v.swap(j, j + 1);
                    sign = -sign;
                }
                Ordering::Equal => return (0, v),
                Ordering::Less => {}
            }
        }
    }
    (sign, v)
}

/// An exterior form of fixed degree on a coframe of dimension `dim`.
#[derive(Clone, PartialEq, Eq)]
pub struct FormExpr {
    dim: usize,
    degree: usize,
    comps: BTreeMap<Blade, CoefExpr>,
}

impl FormExpr {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim <= MAX_DIM && degree <= dim, "form degree/dimension out of range");
        FormExpr {
            dim,
            degree,
            comps: BTreeMap::new(),
        }
    }

    pub fn scalar(dim: usize, c: CoefExpr) -> Self {
        let mut f = Self::zero(dim, 0);
        f.add_component(Blade(0), c);
        f
    }

    /// `ē^{i_1} ∧ … ∧ ē^{i_p}` for arbitrary (1-based) index order.
    pub fn basis(dim: usize, indices: &[usize]) -> Self {
        Self::term(dim, indices, CoefExpr::one())
    }

    /// `c · ē^{i_1 … i_p}`.
    pub fn term(dim: usize, indices: &[usize], c: CoefExpr) -> Self {
        assert!(
            indices.iter().all(|&i| i >= 1 && i <= dim),
            "leg index outside 1..={dim}"
        );
        let mut f = Self::zero(dim, indices.len());
        let (sign, sorted) = sort_sign(indices);
        if sign != 0 {
            let c = if sign < 0 { -&c } else { c };
            f.add_component(Blade::from_sorted(&sorted), c);
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (Blade, &CoefExpr)> {
        self.comps.iter().map(|(b, c)| (*b, c))
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    /// Value on basis vectors `ē_{i_1}, …, ē_{i_p}` (any order, repeats give 0).
    pub fn component(&self, indices: &[usize]) -> CoefExpr {
        assert_eq!(indices.len(), self.degree, "wrong number of slots");
        let (sign, sorted) = sort_sign(indices);
        if sign == 0 {
            return CoefExpr::zero();
        }
        match self.comps.get(&Blade::from_sorted(&sorted)) {
            Some(c) if sign > 0 => c.clone(),
            Some(c) => -c,
            None => CoefExpr::zero(),
        }
    }

    fn add_component(&mut self, blade: Blade, c: CoefExpr) {
        if c.is_zero() {
            return;
        }
        match self.comps.entry(blade) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_compatible(&self, other: &FormExpr, op: &str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{op}: coframe dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &FormExpr) -> Result<FormExpr> {
        self.check_compatible(other, "add")?;
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(Error::DimensionMismatch(format!(
                "add: degrees {} and {}",
                self.degree, other.degree
            )));
        }
        let mut out = if self.is_zero() { other.clone() } else { self.clone() };
        if !self.is_zero() {
            for (b, c) in &other.comps {
                out.add_component(*b, c.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &CoefExpr) -> FormExpr {
        let mut out = FormExpr::zero(self.dim, self.degree);
        for (b, v) in &self.comps {
            out.add_component(*b, v * c);
        }
        out
    }

    pub fn scale_rat(&self, c: &Rational) -> FormExpr {
        let mut out = FormExpr::zero(self.dim, self.degree);
        for (b, v) in &self.comps {
            out.add_component(*b, v.scale(c));
        }
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(&CoefExpr) -> CoefExpr) -> FormExpr {
        let mut out = FormExpr::zero(self.dim, self.degree);
        for (b, v) in &self.comps {
            out.add_component(*b, f(v));
        }
        out
    }

    pub fn wedge(&self, other: &FormExpr) -> Result<FormExpr> {
        self.check_compatible(other, "wedge")?;
        let degree = self.degree + other.degree;
        let mut out = FormExpr {
            dim: self.dim,
            degree: degree.min(self.dim),
            comps: BTreeMap::new(),
        };
        if degree > self.dim {
            return Ok(out);
        }
        for (ba, ca) in &self.comps {
            for (bb, cb) in &other.comps {
                let s = wedge_sign(ba.0, bb.0);
                if s == 0 {
                    continue;
                }
                let prod = ca * cb;
                out.add_component(Blade(ba.0 | bb.0), if s > 0 { prod } else { -prod });
            }
        }
        Ok(out)
    }

    /// Hodge star for the orthonormal coframe with orientation `ē^{1…n}`:
    /// `*(ē^I) = sign(I, I^c) ē^{I^c}`.
    pub fn hodge_star(&self) -> FormExpr {
        let full: u8 = ((1u16 << self.dim) - 1) as u8;
        let mut out = FormExpr::zero(self.dim, self.dim - self.degree);
        for (b, c) in &self.comps {
            let comp = full & !b.0;
            let s = wedge_sign(b.0, comp);
            out.add_component(Blade(comp), if s > 0 { c.clone() } else { -c });
        }
        out
    }

    /// Interior product with the basis vector `ē_i`.
    pub fn interior(&self, i: usize) -> FormExpr {
        assert!(self.degree > 0, "interior product of a function");
        let bit = 1u8 << (i - 1);
        let mut out = FormExpr::zero(self.dim, self.degree - 1);
        for (b, c) in &self.comps {
            if b.0 & bit == 0 {
                continue;
            }
            let before = (b.0 & (bit - 1)).count_ones();
            let c = if before % 2 == 0 { c.clone() } else { -c };
            out.add_component(Blade(b.0 & !bit), c);
        }
        out
    }

    /// Pointwise inner product in the orthonormal coframe.
    pub fn inner(&self, other: &FormExpr) -> CoefExpr {
        let mut acc = CoefExpr::zero();
        for (b, c) in &self.comps {
            if let Some(d) = other.comps.get(b) {
                acc += &(c * d);
            }
        }
        acc
    }

    /// Drop every component carrying one of `legs` and renumber the
    /// remaining legs consecutively.
    pub fn drop_legs(&self, legs: &[usize]) -> FormExpr {
        let kill = legs.iter().fold(0u8, |m, &l| m | (1 << (l - 1)));
        let keep: Vec<usize> = (1..=self.dim).filter(|l| !legs.contains(l)).collect();
        let mut out = FormExpr::zero(keep.len(), self.degree.min(keep.len()));
        for (b, c) in &self.comps {
            if b.0 & kill != 0 {
                continue;
            }
            let idx: Vec<usize> = b
                .indices()
                .iter()
                .map(|i| keep.iter().position(|k| k == i).unwrap() + 1)
                .collect();
            out.add_component(Blade::from_sorted(&idx), c.clone());
        }
        out
    }

    /// The same form viewed on a coframe of larger dimension whose first
    /// legs coincide with this one.
    pub fn lift(&self, dim: usize) -> FormExpr {
        assert!(dim >= self.dim && dim <= MAX_DIM);
        FormExpr {
            dim,
            degree: self.degree,
            comps: self.comps.clone(),
        }
    }

    /// Components involving any of the given legs.
    pub fn touches_legs(&self, legs: &[usize]) -> bool {
        self.comps
            .keys()
            .any(|b| legs.iter().any(|&l| b.contains(l)))
    }

    /// `(coefficient, mask)` pairs for diagnostics.
    pub fn coefficient_list(&self) -> Vec<(Vec<usize>, CoefExpr)> {
        self.comps
            .iter()
            .map(|(b, c)| (b.indices(), c.clone()))
            .collect()
    }
}

impl std::ops::Add<&FormExpr> for &FormExpr {
    type Output = FormExpr;
    fn add(self, rhs: &FormExpr) -> FormExpr {
        self.try_add(rhs).expect("incompatible forms in +")
    }
}

impl std::ops::Sub<&FormExpr> for &FormExpr {
    type Output = FormExpr;
    fn sub(self, rhs: &FormExpr) -> FormExpr {
        self.try_add(&-rhs).expect("incompatible forms in -")
    }
}

impl std::ops::Neg for &FormExpr {
    type Output = FormExpr;
    fn neg(self) -> FormExpr {
        FormExpr {
            dim: self.dim,
            degree: self.degree,
            comps: self.comps.iter().map(|(b, c)| (*b, -c)).collect(),
        }
    }
}

impl fmt::Display for FormExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "0");
        }
        for (n, (b, c)) in self.comps.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let idx: String = b.indices().iter().map(|i| i.to_string()).collect();
            if self.degree == 0 {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c}) e^{idx}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FormExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FormExpr[dim {}, deg {}]({self})", self.dim, self.degree)
    }
}

/// The anti-self-dual 2-forms `σ_1 = e^{12} − e^{34}`, `σ_2 = e^{13} + e^{24}`,
/// `σ_3 = e^{14} − e^{23}` (same coefficients in the barred basis).
pub fn sigma(dim: usize, s: usize) -> FormExpr {
    let (a, b, sign) = match s {
        1 => ([1, 2], [3, 4], -1),
        2 => ([1, 3], [2, 4], 1),
        3 => ([1, 4], [2, 3], -1),
        _ => panic!("sigma index {s} outside 1..=3"),
    };
    &FormExpr::basis(dim, &a) + &FormExpr::term(dim, &b, CoefExpr::int(sign))
}

/// The self-dual 2-forms `ω_1 = e^{12} + e^{34}`, `ω_2 = e^{13} − e^{24}`,
/// `ω_3 = e^{14} + e^{23}`.
pub fn omega(dim: usize, s: usize) -> FormExpr {
    let (a, b, sign) = match s {
        1 => ([1, 2], [3, 4], 1),
        2 => ([1, 3], [2, 4], -1),
        3 => ([1, 4], [2, 3], 1),
        _ => panic!("omega index {s} outside 1..=3"),
    };
    &FormExpr::basis(dim, &a) + &FormExpr::term(dim, &b, CoefExpr::int(sign))
}

/// `ē^{1234}`.
pub fn base_volume(dim: usize) -> FormExpr {
    FormExpr::basis(dim, &[1, 2, 3, 4])
}

/// Hodge star of the flat base `ℝ⁴` acting on forms built from legs 1..4.
pub fn base_hodge_star(a: &FormExpr) -> FormExpr {
    let mut out = FormExpr::zero(a.dim(), BASE_DIM - a.degree());
    for (b, c) in a.components() {
        assert!(b.mask() & !0b1111 == 0, "base Hodge star of a form with fiber legs");
        let comp = 0b1111 & !b.mask();
        let s = wedge_sign(b.mask(), comp);
        out.add_component(Blade(comp), if s > 0 { c.clone() } else { -c });
    }
    out
}

/// A nilpotent Lie coframe with conformal weights.
pub struct CoframeSpec {
    label: String,
    dim: usize,
    structure: Vec<FormExpr>,
    weights: Vec<u8>,
    dropped_legs: Vec<usize>,
    differentials: OnceLock<Vec<FormExpr>>,
}

impl Clone for CoframeSpec {
    fn clone(&self) -> Self {
        CoframeSpec {
            label: self.label.clone(),
            dim: self.dim,
            structure: self.structure.clone(),
            weights: self.weights.clone(),
            dropped_legs: self.dropped_legs.clone(),
            differentials: self.differentials.clone(),
        }
    }
}

impl PartialEq for CoframeSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.structure == other.structure
            && self.weights == other.weights
    }
}

impl fmt::Debug for CoframeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CoframeSpec {} (dim {}, weights {:?})", self.label, self.dim, self.weights)?;
        for (k, s) in self.structure.iter().enumerate() {
            writeln!(f, "  de^{} = {s}", k + 1)?;
        }
        Ok(())
    }
}

impl CoframeSpec {
    /// Validated constructor: structure constants must be dilaton-free and
    /// satisfy `d∘d = 0` on every `e^k`.
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        structure: Vec<FormExpr>,
        weights: Vec<u8>,
    ) -> Result<CoframeSpec> {
        let spec = Self::new_unchecked(label, dim, structure, weights)?;
        let residuals = spec.lie_residuals();
        if let Some((k, r)) = residuals.iter().enumerate().find(|(_, r)| !r.is_zero()) {
            return Err(Error::NotIntegrable(format!("d(de^{}) = {r}", k + 1)));
        }
        Ok(spec)
    }

    /// Shape-checked constructor that skips the Jacobi identity; used to
    /// build diagnostic counterexamples.
    pub fn new_unchecked(
        label: impl Into<String>,
        dim: usize,
        structure: Vec<FormExpr>,
        weights: Vec<u8>,
    ) -> Result<CoframeSpec> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::BadParams(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if structure.len() != dim || weights.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} structure forms and {} weights for dimension {dim}",
                structure.len(),
                weights.len()
            )));
        }
        for (k, s) in structure.iter().enumerate() {
            if s.dim() != dim || (s.degree() != 2 && !s.is_zero()) {
                return Err(Error::DimensionMismatch(format!(
                    "de^{} must be a 2-form on the {dim}-dimensional coframe",
                    k + 1
                )));
            }
            if s.components().any(|(_, c)| !c.is_dilaton_free()) {
                return Err(Error::BadParams(format!(
                    "structure constants of de^{} depend on the dilaton",
                    k + 1
                )));
            }
        }
        Ok(CoframeSpec {
            label: label.into(),
            dim,
            structure: structure
                .into_iter()
                .map(|s| if s.is_zero() { FormExpr::zero(dim, 2) } else { s })
                .collect(),
            weights,
            dropped_legs: Vec::new(),
            differentials: OnceLock::new(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self, k: usize) -> u8 {
        self.weights[k - 1]
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    /// `d e^k` on the unbarred Lie coframe.
    pub fn structure(&self, k: usize) -> &FormExpr {
        &self.structure[k - 1]
    }

    /// Legs removed by a contraction limit (indices in the parent coframe).
    pub fn dropped_legs(&self) -> &[usize] {
        &self.dropped_legs
    }

    pub fn with_dropped_legs(mut self, legs: Vec<usize>) -> Self {
        self.dropped_legs = legs;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `d(d e^k)` on the Lie coframe for each `k`.
    pub fn lie_residuals(&self) -> Vec<FormExpr> {
        let basis_d = |b: Blade| -> FormExpr {
            // d(e^I) via the Leibniz rule with constant coefficients
            let idx = b.indices();
            let mut acc = FormExpr::zero(self.dim, (idx.len() + 1).min(self.dim));
            for (r, &leg) in idx.iter().enumerate() {
                let before = FormExpr::basis(self.dim, &idx[..r]);
                let after = FormExpr::basis(self.dim, &idx[r + 1..]);
                let piece = before
                    .wedge(&self.structure[leg - 1])
                    .and_then(|p| p.wedge(&after))
                    .expect("same coframe");
                let piece = if r % 2 == 0 { piece } else { -&piece };
                acc = &acc + &piece;
            }
            acc
        };
        self.structure
            .iter()
            .map(|s| {
                let mut acc = FormExpr::zero(self.dim, 3.min(self.dim));
                for (b, c) in s.components() {
                    acc = &acc + &basis_d(b).scale(c);
                }
                acc
            })
            .collect()
    }

    /// `df = Σ_{i≤4} f_i e^i = Σ_{i≤4} e^{-w_i f} f_i ē^i`.
    pub fn df(&self) -> FormExpr {
        let mut out = FormExpr::zero(self.dim, 1);
        for i in 1..=BASE_DIM.min(self.dim) {
            out = &out + &FormExpr::term(self.dim, &[i], fd(i).mul_expf(-(self.weights[i - 1] as i32)));
        }
        out
    }

    /// Frame derivative `ē_i g = e^{-w_i f} ∂_i g` (zero along fiber legs).
    pub fn frame_derivative(&self, g: &CoefExpr, i: usize) -> Result<CoefExpr> {
        if i > BASE_DIM {
            return Ok(CoefExpr::zero());
        }
        Ok(g.partial(i)?.mul_expf(-(self.weights[i - 1] as i32)))
    }

    /// `dē^k` in the barred basis, computed once and then shared.
    pub fn differentials(&self) -> &[FormExpr] {
        self.differentials.get_or_init(|| {
            let df = self.df();
            (1..=self.dim)
                .map(|k| {
                    let wk = self.weights[k - 1] as i32;
                    let mut out = FormExpr::zero(self.dim, 2);
                    if wk != 0 {
                        out = df
                            .wedge(&FormExpr::basis(self.dim, &[k]))
                            .expect("same coframe")
                            .scale(&CoefExpr::int(wk as i64));
                    }
                    for (b, c) in self.structure[k - 1].components() {
                        let idx = b.indices();
                        let shift = wk
                            - self.weights[idx[0] - 1] as i32
                            - self.weights[idx[1] - 1] as i32;
                        out = &out + &FormExpr::term(self.dim, &idx, c.mul_expf(shift));
                    }
                    out
                })
                .collect()
        })
    }
}

/// `dē^k` for every leg of the coframe.
pub fn coframe_differentials(c: &CoframeSpec) -> Vec<FormExpr> {
    c.differentials().to_vec()
}

/// `d` of the basis form `ē^I`.
fn basis_derivative(c: &CoframeSpec, b: Blade) -> FormExpr {
    let dim = c.dim();
    let idx = b.indices();
    let diffs = c.differentials();
    let mut acc = FormExpr::zero(dim, (idx.len() + 1).min(dim));
    for (r, &leg) in idx.iter().enumerate() {
        let piece = FormExpr::basis(dim, &idx[..r])
            .wedge(&diffs[leg - 1])
            .and_then(|p| p.wedge(&FormExpr::basis(dim, &idx[r + 1..])))
            .expect("same coframe");
        acc = if r % 2 == 0 { &acc + &piece } else { &acc - &piece };
    }
    acc
}

/// Exterior derivative on the conformal coframe.
pub fn exterior_derivative(a: &FormExpr, c: &CoframeSpec) -> Result<FormExpr> {
    if a.dim() != c.dim() {
        return Err(Error::DimensionMismatch(format!(
            "form on dimension {} but coframe {} has dimension {}",
            a.dim(),
            c.label(),
            c.dim()
        )));
    }
    let dim = c.dim();
    let mut out = FormExpr::zero(dim, (a.degree() + 1).min(dim));
    if a.degree() >= dim {
        return Ok(out);
    }
    let mut cache: HashMap<Blade, FormExpr> = HashMap::new();
    for (b, g) in a.components() {
        for i in 1..=BASE_DIM.min(dim) {
            if b.contains(i) {
                continue;
            }
            let dg = c.frame_derivative(g, i)?;
            if dg.is_zero() {
                continue;
            }
            let s = wedge_sign(1 << (i - 1), b.mask());
            out.add_component(Blade(b.mask() | (1 << (i - 1))), if s > 0 { dg } else { -dg });
        }
        let db = cache.entry(b).or_insert_with(|| basis_derivative(c, b));
        if !db.is_zero() {
            out = &out + &db.scale(g);
        }
    }
    Ok(out)
}

/// Hodge star on the orthonormal coframe of `c`.
pub fn hodge_star(a: &FormExpr, c: &CoframeSpec) -> Result<FormExpr> {
    if a.dim() != c.dim() {
        return Err(Error::DimensionMismatch(format!(
            "form on dimension {} but coframe has dimension {}",
            a.dim(),
            c.dim()
        )));
    }
    Ok(a.hodge_star())
}

pub fn wedge(a: &FormExpr, b: &FormExpr) -> Result<FormExpr> {
    a.wedge(b)
}
