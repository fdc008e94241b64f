//! Points, γ-fields, central differences and Darboux-Egoroff residuals.
//!
//! A γ-field is a symmetric matrix function of the canonical coordinates
//! u₁,…,u_n whose diagonal is fixed to zero. The Darboux-Egoroff system asks
//!
//! ```text
//! ∂γ_ij/∂u_k = γ_ik γ_kj        (i, j, k pairwise distinct)
//! Σ_k ∂γ_ij/∂u_k = 0            (i ≠ j)
//! ```
//!
//! and [`de_residual`] measures both lines by central differences.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DegorError, Result};
use crate::exec::{self, Exec};
use crate::linalg::{self, CMat, Pair, C64};

pub const DEFAULT_H: f64 = 1e-4;

/// A point u = (u₁,…,u_n) in canonical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Pair>", into = "Vec<Pair>")]
pub struct Point(pub Vec<C64>);

impl From<Vec<Pair>> for Point {
    fn from(v: Vec<Pair>) -> Self {
        Point(linalg::from_pairs(&v))
    }
}

impl From<Point> for Vec<Pair> {
    fn from(p: Point) -> Self {
        linalg::to_pairs(&p.0)
    }
}

impl Point {
    pub fn new(u: Vec<C64>) -> Self {
        Point(u)
    }

    pub fn real(u: &[f64]) -> Self {
        Point(u.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![C64::new(0.0, 0.0); n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    /// u + h·e_k for a real step h.
    pub fn shifted(&self, k: usize, h: f64) -> Point {
        let mut v = self.0.clone();
        v[k] += h;
        Point(v)
    }

    /// u + c·(1,…,1).
    pub fn translated(&self, c: C64) -> Point {
        Point(self.0.iter().map(|x| x + c).collect())
    }

    pub fn offset(&self, delta: &[C64]) -> Point {
        assert_eq!(delta.len(), self.dim(), "offset dimension mismatch");
        Point(self.0.iter().zip(delta).map(|(x, d)| x + d).collect())
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + (b - a) * t).collect())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        linalg::vec_max_abs_diff(&self.0, &other.0)
    }

    /// Smallest |u_i − u_j| over i ≠ j; infinite for n < 2.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.dim() {
            for j in i + 1..self.dim() {
                best = best.min((self.0[i] - self.0[j]).norm());
            }
        }
        best
    }
}

/// Where a γ-field came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Trivial,
    AnalyticN2,
    Hurwitz0,
    Deformed,
    Fock,
    /// Hand-made fields (constants, random controls); not DE solutions in general.
    Synthetic,
}

/// An evaluable symmetric, zero-diagonal n×n matrix function of u.
pub trait GammaField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, u: &Point) -> Result<CMat>;

    fn provenance(&self) -> Provenance;

    /// Base point for path integration of the wave hierarchy.
    fn base_point(&self) -> Point {
        Point::zeros(self.dim())
    }
}

impl<F: GammaField + ?Sized> GammaField for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, u: &Point) -> Result<CMat> {
        (**self).eval(u)
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
    fn base_point(&self) -> Point {
        (**self).base_point()
    }
}

impl<F: GammaField + ?Sized> GammaField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, u: &Point) -> Result<CMat> {
        (**self).eval(u)
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
    fn base_point(&self) -> Point {
        (**self).base_point()
    }
}

fn check_dim(n: usize, u: &Point) -> Result<()> {
    if u.dim() != n {
        return Err(DegorError::BadDimensions(format!("point has {} coordinates, field has n = {n}", u.dim())));
    }
    Ok(())
}

/// γ ≡ 0.
#[derive(Debug, Clone)]
pub struct TrivialField {
    pub n: usize,
}

impl GammaField for TrivialField {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, u: &Point) -> Result<CMat> {
        check_dim(self.n, u)?;
        Ok(CMat::zeros(self.n, self.n))
    }
    fn provenance(&self) -> Provenance {
        Provenance::Trivial
    }
}

/// A u-independent symmetric matrix (diagonal dropped).
#[derive(Debug, Clone)]
pub struct ConstantField {
    value: CMat,
}

impl ConstantField {
    pub fn new(value: CMat) -> Result<Self> {
        if !value.is_square() || linalg::symmetry_defect(&value) > 1e-12 {
            return Err(DegorError::Precondition("constant field must be a symmetric square matrix".into()));
        }
        Ok(ConstantField { value: linalg::zero_diagonal(&value) })
    }

    /// γ_ij = c for every i ≠ j.
    pub fn uniform(n: usize, c: C64) -> Self {
        ConstantField { value: linalg::zero_diagonal(&CMat::from_element(n, n, c)) }
    }
}

impl GammaField for ConstantField {
    fn dim(&self) -> usize {
        self.value.nrows()
    }
    fn eval(&self, u: &Point) -> Result<CMat> {
        check_dim(self.dim(), u)?;
        Ok(self.value.clone())
    }
    fn provenance(&self) -> Provenance {
        Provenance::Synthetic
    }
}

/// n = 2: every γ₁₂ = h(u₁ − u₂) solves the system (there is no flatness
/// condition and translation invariance forces dependence on the difference only).
/// Here h is a rational function given by coefficient lists, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticN2Field {
    #[serde(with = "crate::linalg::pairs")]
    pub num: Vec<C64>,
    #[serde(with = "crate::linalg::pairs")]
    pub den: Vec<C64>,
}

impl AnalyticN2Field {
    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() || den.iter().all(|c| c.norm() == 0.0) {
            return Err(DegorError::Precondition("rational data needs a nonzero denominator".into()));
        }
        Ok(AnalyticN2Field { num, den })
    }

    pub fn value_at(&self, t: C64) -> Result<C64> {
        let horner = |cs: &[C64]| cs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * t + c);
        let d = horner(&self.den);
        if d.norm() < 1e-14 {
            return Err(DegorError::Domain(format!("denominator vanishes at u1 - u2 = {t}")));
        }
        Ok(horner(&self.num) / d)
    }
}

impl GammaField for AnalyticN2Field {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, u: &Point) -> Result<CMat> {
        check_dim(2, u)?;
        let g = self.value_at(u.0[0] - u.0[1])?;
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = g;
        m[(1, 0)] = g;
        Ok(m)
    }
    fn provenance(&self) -> Provenance {
        Provenance::AnalyticN2
    }
}

/// A symmetric polynomial field with random coefficients,
/// γ_ij(u) = a_ij + Σ_k b_ijk u_k + c_ij u_i u_j.
///
/// Generically not a DE solution; used as a negative control.
#[derive(Debug, Clone)]
pub struct RandomPolynomialField {
    n: usize,
    constant: CMat,
    linear: Vec<CMat>,
    quadratic: CMat,
}

impl RandomPolynomialField {
    pub fn new(n: usize, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sym = |rng: &mut ChaCha8Rng| {
            let mut m = CMat::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
                    m[(i, j)] = z;
                    m[(j, i)] = z;
                }
            }
            m
        };
        let constant = sym(&mut rng);
        let linear = (0..n).map(|_| sym(&mut rng)).collect();
        let quadratic = sym(&mut rng);
        RandomPolynomialField { n, constant, linear, quadratic }
    }
}

impl GammaField for RandomPolynomialField {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, u: &Point) -> Result<CMat> {
        check_dim(self.n, u)?;
        let mut g = self.constant.clone();
        for (k, b) in self.linear.iter().enumerate() {
            g += b * u.0[k];
        }
        for i in 0..self.n {
            for j in 0..self.n {
                g[(i, j)] += self.quadratic[(i, j)] * u.0[i] * u.0[j];
            }
        }
        Ok(g)
    }
    fn provenance(&self) -> Provenance {
        Provenance::Synthetic
    }
}

/// The field u ↦ (s_i s_j γ_ij(u)).
#[derive(Debug, Clone)]
pub struct SignGauged<F> {
    inner: F,
    signs: Vec<f64>,
}

impl<F> SignGauged<F> {
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

pub fn sign_gauge<F: GammaField>(field: F, signs: &[f64]) -> Result<SignGauged<F>> {
    if signs.len() != field.dim() {
        return Err(DegorError::BadDimensions(format!("{} signs for n = {}", signs.len(), field.dim())));
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(DegorError::Precondition("gauge signs must be ±1".into()));
    }
    Ok(SignGauged { inner: field, signs: signs.to_vec() })
}

impl<F: GammaField> GammaField for SignGauged<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, u: &Point) -> Result<CMat> {
        let mut g = self.inner.eval(u)?;
        let n = g.nrows();
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] *= self.signs[i] * self.signs[j];
            }
        }
        Ok(g)
    }
    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
    fn base_point(&self) -> Point {
        self.inner.base_point()
    }
}

/// (f(u + h e_k) − f(u − h e_k)) / 2h.
pub fn central_diff<F>(f: F, u: &Point, k: usize, h: f64) -> Result<CMat>
where
    F: Fn(&Point) -> Result<CMat>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(DegorError::Precondition(format!("step h must be positive, got {h}")));
    }
    if k >= u.dim() {
        return Err(DegorError::BadDimensions(format!("index {k} out of range for n = {}", u.dim())));
    }
    let plus = f(&u.shifted(k, h))?;
    let minus = f(&u.shifted(k, -h))?;
    Ok((plus - minus) / C64::new(2.0 * h, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// max over pairwise distinct (i, j, k) of |∂_k γ_ij − γ_ik γ_kj|
    pub max_flatness: f64,
    /// max over i ≠ j of |Σ_k ∂_k γ_ij|
    pub max_translation: f64,
    pub h: f64,
    #[serde(rename = "u")]
    pub point: Point,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.max_flatness.max(self.max_translation)
    }
}

/// Both Darboux-Egoroff residuals at u with central differences of step h.
pub fn de_residual<F: GammaField + ?Sized>(field: &F, u: &Point, h: f64) -> Result<ResidualReport> {
    let n = field.dim();
    check_dim(n, u)?;
    let gamma = field.eval(u)?;
    let derivs = (0..n)
        .map(|k| central_diff(|p| field.eval(p), u, k, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(residual_from_parts(&gamma, &derivs, u, h))
}

pub(crate) fn residual_from_parts(gamma: &CMat, derivs: &[CMat], u: &Point, h: f64) -> ResidualReport {
    let n = gamma.nrows();
    let mut flat = 0.0_f64;
    let mut trans = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let total: C64 = derivs.iter().map(|d| d[(i, j)]).sum();
            trans = trans.max(total.norm());
            for (k, d) in derivs.iter().enumerate() {
                if k != i && k != j {
                    flat = flat.max((d[(i, j)] - gamma[(i, k)] * gamma[(k, j)]).norm());
                }
            }
        }
    }
    ResidualReport { max_flatness: flat, max_translation: trans, h, point: u.clone() }
}

/// The tensor grid center + {−r, …, r}^n with `per_axis` real offsets per axis.
pub fn grid_around(center: &Point, radius: f64, per_axis: usize) -> Vec<Point> {
    let n = center.dim();
    let offsets: Vec<f64> = if per_axis <= 1 {
        vec![0.0]
    } else {
        (0..per_axis).map(|i| -radius + 2.0 * radius * i as f64 / (per_axis - 1) as f64).collect()
    };
    let total = offsets.len().pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut v = center.0.clone();
            for x in v.iter_mut() {
                *x += offsets[idx % offsets.len()];
                idx /= offsets.len();
            }
            Point(v)
        })
        .collect()
}

pub fn residual_sweep<F: GammaField + ?Sized>(
    field: &F,
    points: &[Point],
    h: f64,
    exec: Exec,
) -> Result<Vec<ResidualReport>> {
    exec::try_map(exec, points, |u| de_residual(field, u, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: usize,
    pub max_flatness: f64,
    pub max_translation: f64,
}

impl SweepSummary {
    pub fn of(reports: &[ResidualReport]) -> Self {
        SweepSummary {
            points: reports.len(),
            max_flatness: reports.iter().map(|r| r.max_flatness).fold(0.0, f64::max),
            max_translation: reports.iter().map(|r| r.max_translation).fold(0.0, f64::max),
        }
    }

    pub fn max(&self) -> f64 {
        self.max_flatness.max(self.max_translation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs, max_abs_diff, unit_kk};

    #[test]
    fn central_diff_of_constant_is_zero() {
        let f = |_: &Point| Ok(CMat::from_element(3, 3, c(2.0, -1.0)));
        let u = Point::real(&[0.3, -0.1, 0.7]);
        for k in 0..3 {
            assert_eq!(max_abs(&central_diff(f, &u, k, 1e-3).unwrap()), 0.0);
        }
    }

    #[test]
    fn central_diff_of_linear_field_is_exact() {
        let f = |p: &Point| Ok(linalg::diag(p.coords()));
        let u = Point::real(&[0.25, 1.5]);
        let d = central_diff(f, &u, 0, 1e-4).unwrap();
        assert!(max_abs_diff(&d, &unit_kk(2, 0)) < 1e-8);
    }

    #[test]
    fn central_diff_rejects_bad_step() {
        let f = |_: &Point| Ok(CMat::zeros(1, 1));
        assert!(matches!(central_diff(f, &Point::zeros(1), 0, 0.0), Err(DegorError::Precondition(_))));
        assert!(matches!(central_diff(f, &Point::zeros(1), 0, -1.0), Err(DegorError::Precondition(_))));
    }

    #[test]
    fn central_diff_error_is_second_order() {
        // γ(u) = exp(u₁) · J, derivative known exactly
        let f = |p: &Point| Ok(CMat::from_element(2, 2, p.0[0].exp()));
        let u = Point::real(&[0.4, 0.0]);
        let exact = 0.4f64.exp();
        let err = |h| (central_diff(f, &u, 0, h).unwrap()[(0, 1)].re - exact).abs();
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let r = de_residual(&TrivialField { n: 3 }, &Point::real(&[0.1, 0.2, 0.3]), DEFAULT_H).unwrap();
        assert_eq!((r.max_flatness, r.max_translation), (0.0, 0.0));
    }

    #[test]
    fn constant_field_residual_is_c_squared() {
        let cval = c(0.3, 0.4);
        let r = de_residual(&ConstantField::uniform(3, cval), &Point::real(&[0.0, 1.0, 2.0]), DEFAULT_H).unwrap();
        assert!((r.max_flatness - cval.norm_sqr()).abs() < 1e-15);
        assert_eq!(r.max_translation, 0.0);
    }

    #[test]
    fn n2_has_no_flatness_triples() {
        let f = AnalyticN2Field::new(vec![c(1.0, 0.0)], vec![c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        let r = de_residual(&f, &Point::real(&[0.3, -0.2]), DEFAULT_H).unwrap();
        assert_eq!(r.max_flatness, 0.0);
        assert!(r.max_translation < 1e-12);
    }

    #[test]
    fn sign_gauge_example() {
        let base = ConstantField::uniform(3, c(1.0, 0.0));
        let g = sign_gauge(base, &[-1.0, 1.0, 1.0]).unwrap().eval(&Point::zeros(3)).unwrap();
        assert_eq!(g[(0, 1)], c(-1.0, 0.0));
        assert_eq!(g[(0, 2)], c(-1.0, 0.0));
        assert_eq!(g[(1, 2)], c(1.0, 0.0));
        assert_eq!(g[(0, 0)], c(0.0, 0.0));
        assert!(sign_gauge(TrivialField { n: 2 }, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn identity_gauge_is_identity() {
        let f = RandomPolynomialField::new(3, 5, 1.0);
        let u = Point::real(&[0.1, 0.2, -0.3]);
        let g = sign_gauge(f.clone(), &[1.0; 3]).unwrap();
        assert_eq!(g.eval(&u).unwrap(), f.eval(&u).unwrap());
    }

    #[test]
    fn grid_has_expected_size_and_extent() {
        let pts = grid_around(&Point::real(&[1.0, 2.0, 3.0]), 0.05, 3);
        assert_eq!(pts.len(), 27);
        assert!(pts.iter().all(|p| p.distance(&Point::real(&[1.0, 2.0, 3.0])) <= 0.05 + 1e-15));
    }

    #[test]
    fn point_serializes_as_pairs() {
        let p = Point::new(vec![c(1.0, -2.0), c(0.5, 0.0)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[1.0,-2.0],[0.5,0.0]]");
        assert_eq!(serde_json::from_str::<Point>(&s).unwrap(), p);
    }

    #[test]
    fn report_json_shape() {
        let r = de_residual(&TrivialField { n: 2 }, &Point::real(&[0.0, 1.0]), 1e-4).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["max_flatness", "max_translation", "h", "u"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["u"][1], serde_json::json!([1.0, 0.0]));
    }
}
