//! Genus-zero Hurwitz seeds.
//!
//! A polynomial f of degree d with simple critical points x₁,…,x_n (n = d − 1)
//! gives canonical coordinates u_i = f(x_i). In genus zero the canonical
//! bidifferential is dP dQ / (P − Q)², and with local parameters f = u_i + z_i²
//! near x_i the rotation coefficients are
//!
//! ```text
//! γ_ij = 1 / ((x_i − x_j)² s_i s_j),    s_i² = f″(x_i).
//! ```
//!
//! [`chart_newton`] inverts u ↦ f: it moves the coefficients c₀,…,c_{d−2}
//! (leading and subleading coefficients fixed) until the critical values hit a
//! target, tracking each critical point continuously from its previous position.

use std::cmp::Ordering;
use std::sync::Mutex;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::de::{GammaField, Point, Provenance};
use crate::error::{DegorError, Result};
use crate::linalg::{CMat, C64};

/// Two critical points closer than this are treated as colliding.
pub const COLLISION_TOL: f64 = 1e-8;
/// Chart solutions must reproduce the target critical values to this accuracy.
pub const CHART_TOL: f64 = 1e-10;
pub const MAX_NEWTON_ITERS: usize = 50;

const MAX_HOMOTOPY_HALVINGS: u32 = 12;

/// f(P) = Σ coeffs[k] P^k, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyMap {
    #[serde(with = "crate::linalg::pairs")]
    coeffs: Vec<C64>,
}

impl PolyMap {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(DegorError::Precondition(format!("degree must be at least 2, got {}", coeffs.len().saturating_sub(1))));
        }
        if coeffs.last().is_none_or(|c| c.norm() == 0.0) {
            return Err(DegorError::Precondition("leading coefficient must be nonzero".into()));
        }
        Ok(PolyMap { coeffs })
    }

    /// f = P^d / d − P, the seed family used throughout the tests.
    pub fn power_minus_linear(d: usize) -> Result<Self> {
        let mut c = vec![C64::new(0.0, 0.0); d + 1];
        if d >= 1 {
            c[1] = C64::new(-1.0, 0.0);
        }
        c[d] += C64::new(1.0 / d as f64, 0.0);
        PolyMap::new(c)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Number of critical points, n = d − 1.
    pub fn n_critical(&self) -> usize {
        self.degree() - 1
    }

    pub fn eval(&self, p: C64) -> C64 {
        horner(&self.coeffs, p)
    }

    pub fn d1(&self, p: C64) -> C64 {
        horner(&derivative(&self.coeffs), p)
    }

    pub fn d2(&self, p: C64) -> C64 {
        horner(&derivative(&derivative(&self.coeffs)), p)
    }
}

fn horner(cs: &[C64], p: C64) -> C64 {
    cs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * p + c)
}

fn derivative(cs: &[C64]) -> Vec<C64> {
    cs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect()
}

/// All roots of Σ cs[k] P^k via companion-matrix eigenvalues, then two Newton
/// polish steps per root. Degree ≥ 1 required.
pub fn poly_roots(cs: &[C64]) -> Vec<C64> {
    let m = cs.len() - 1;
    let lead = cs[m];
    if m == 1 {
        return vec![-cs[0] / lead];
    }
    let mut comp = CMat::zeros(m, m);
    for i in 1..m {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..m {
        comp[(i, m - 1)] = -cs[i] / lead;
    }
    // complex Schur form is upper triangular: eigenvalues sit on the diagonal
    let (_, t) = comp.schur().unpack();
    let eig: Vec<C64> = t.diagonal().iter().cloned().collect();
    let dcs = derivative(cs);
    eig.into_iter()
        .map(|mut x| {
            for _ in 0..2 {
                let d = horner(&dcs, x);
                if d.norm() > 1e-300 {
                    let step = horner(cs, x) / d;
                    if step.is_finite() {
                        x -= step;
                    }
                }
            }
            x
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalData {
    /// Critical points, roots of f′.
    #[serde(with = "crate::linalg::pairs")]
    pub x: Vec<C64>,
    /// Critical values u_i = f(x_i).
    #[serde(with = "crate::linalg::pairs")]
    pub u: Vec<C64>,
    /// f″(x_i).
    #[serde(with = "crate::linalg::pairs")]
    pub fpp: Vec<C64>,
    /// `labeling[i]` is the position of x_i in the raw eigenvalue output.
    pub labeling: Vec<usize>,
}

impl CriticalData {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn point(&self) -> Point {
        Point(self.u.clone())
    }

    fn from_tracked(poly: &PolyMap, x: Vec<C64>, labeling: Vec<usize>) -> Result<Self> {
        let fpp: Vec<C64> = x.iter().map(|&p| poly.d2(p)).collect();
        if let Some(i) = fpp.iter().position(|f| f.norm() < COLLISION_TOL) {
            return Err(DegorError::NonSimpleCritical(format!("f''(x_{i}) = {} vanishes", fpp[i])));
        }
        let u = x.iter().map(|&p| poly.eval(p)).collect();
        Ok(CriticalData { x, u, fpp, labeling })
    }
}

fn min_pairwise(x: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            best = best.min((x[i] - x[j]).norm());
        }
    }
    best
}

/// Critical points of f, labeled by descending real part, then descending
/// imaginary part (so f = P³/3 − P gives x = (1, −1)).
pub fn critical_data(poly: &PolyMap) -> Result<CriticalData> {
    let raw = poly_roots(&derivative(poly.coeffs()));
    let sep = min_pairwise(&raw);
    if sep < COLLISION_TOL {
        return Err(DegorError::NonSimpleCritical(format!("critical points collide (separation {sep:.2e})")));
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (raw[a], raw[b]);
        if (za.re - zb.re).abs() > 1e-9 {
            zb.re.partial_cmp(&za.re).unwrap_or(Ordering::Equal)
        } else {
            zb.im.partial_cmp(&za.im).unwrap_or(Ordering::Equal)
        }
    });
    let x = order.iter().map(|&i| raw[i]).collect();
    CriticalData::from_tracked(poly, x, order)
}

/// Principal square roots of f″(x_i).
pub fn principal_roots(cd: &CriticalData) -> Vec<C64> {
    cd.fpp.iter().map(|f| f.sqrt()).collect()
}

/// Square roots of f″(x_i) with signs chosen closest to `reference`.
pub fn tracked_roots(cd: &CriticalData, reference: &[C64]) -> Vec<C64> {
    cd.fpp
        .iter()
        .zip(reference)
        .map(|(f, r)| {
            let s = f.sqrt();
            if (s - r).norm() <= (s + r).norm() {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// γ_ij = 1/((x_i − x_j)² s_i s_j) with s_i = principal √f″(x_i).
pub fn gamma_genus0(cd: &CriticalData) -> CMat {
    gamma_with_roots(&cd.x, &principal_roots(cd))
}

pub fn gamma_with_roots(x: &[C64], roots: &[C64]) -> CMat {
    let n = x.len();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            let dx = x[i] - x[j];
            C64::new(1.0, 0.0) / (dx * dx * roots[i] * roots[j])
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSolution {
    pub poly: PolyMap,
    pub critical: CriticalData,
    /// Newton iterations (linear solves) spent.
    pub iterations: usize,
}

/// Polynomial with the degree, leading and subleading coefficients of `poly0`
/// whose critical values equal `u_target`, critical points matched to the
/// labeling of `critical_data(poly0)`.
pub fn chart_newton(poly0: &PolyMap, u_target: &Point) -> Result<ChartSolution> {
    let cd0 = critical_data(poly0)?;
    chart_newton_from(poly0, &cd0, u_target)
}

/// Continue from a known solution (`seed_cd` must be the critical data of `seed`).
pub fn chart_newton_from(seed: &PolyMap, seed_cd: &CriticalData, u_target: &Point) -> Result<ChartSolution> {
    let n = seed.n_critical();
    if u_target.dim() != n {
        return Err(DegorError::BadDimensions(format!("target has {} values, chart has n = {n}", u_target.dim())));
    }
    if u_target.min_separation() < COLLISION_TOL {
        return Err(DegorError::ChartBoundary("critical values must stay pairwise distinct".into()));
    }
    let start = seed_cd.point();
    let mut poly = seed.clone();
    let mut x = seed_cd.x.clone();
    let mut labeling = seed_cd.labeling.clone();
    let mut iterations = 0usize;

    let mut done = 0.0_f64;
    let mut step = 1.0_f64;
    let mut halvings = 0;
    while done < 1.0 {
        let t = (done + step).min(1.0);
        let target = start.lerp(u_target, t);
        match newton_to(&poly, &x, &target) {
            Ok((p, xs, lab, its)) => {
                poly = p;
                x = xs;
                labeling = lab;
                iterations += its;
                done = t;
                step = (step * 2.0).min(1.0);
            }
            Err(e) => {
                halvings += 1;
                if halvings > MAX_HOMOTOPY_HALVINGS {
                    return Err(DegorError::ChartBoundary(format!("continuation stalled at t = {done:.4}: {e}")));
                }
                step *= 0.5;
            }
        }
    }
    let critical = CriticalData::from_tracked(&poly, x, labeling)
        .map_err(|e| DegorError::ChartBoundary(e.to_string()))?;
    Ok(ChartSolution { poly, critical, iterations })
}

type NewtonOutcome = (PolyMap, Vec<C64>, Vec<usize>, usize);

fn newton_to(poly: &PolyMap, x_prev: &[C64], target: &Point) -> Result<NewtonOutcome> {
    let n = x_prev.len();
    let mut coeffs = poly.coeffs().to_vec();
    let mut x = x_prev.to_vec();
    let mut labeling: Vec<usize> = (0..n).collect();
    let scale = 1.0 + target.0.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let residual = |coeffs: &[C64], x: &[C64]| -> f64 {
        x.iter().zip(&target.0).fold(0.0_f64, |a, (&p, &t)| a.max((horner(coeffs, p) - t).norm()))
    };

    let mut res = residual(&coeffs, &x);
    let mut its = 0usize;
    let mut polish = 0;
    while its < MAX_NEWTON_ITERS {
        if res <= CHART_TOL * scale {
            // a couple of extra steps push the residual down to roundoff,
            // which finite differences of the chart rely on
            if res <= 1e-15 * scale || polish >= 2 {
                return Ok((PolyMap { coeffs }, x, labeling, its));
            }
            polish += 1;
        }
        let jac = CMat::from_fn(n, n, |i, m| x[i].powu(m as u32));
        let rhs = DVector::from_iterator(n, x.iter().zip(&target.0).map(|(&p, &t)| t - horner(&coeffs, p)));
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| DegorError::ChartBoundary("singular chart Jacobian".into()))?;
        let mut trial = coeffs.clone();
        for m in 0..n {
            trial[m] += delta[m];
        }
        let (xs, lab) = track_critical(&trial, &x)?;
        let new_res = residual(&trial, &xs);
        its += 1;
        if res <= CHART_TOL * scale && new_res >= res {
            return Ok((PolyMap { coeffs }, x, labeling, its));
        }
        coeffs = trial;
        x = xs;
        labeling = lab;
        res = new_res;
    }
    if res <= CHART_TOL * scale {
        return Ok((PolyMap { coeffs }, x, labeling, its));
    }
    Err(DegorError::ChartBoundary(format!("Newton did not converge in {MAX_NEWTON_ITERS} iterations (residual {res:.2e})")))
}

/// Roots of f′ matched to `previous` by nearest neighbor.
fn track_critical(coeffs: &[C64], previous: &[C64]) -> Result<(Vec<C64>, Vec<usize>)> {
    let roots = poly_roots(&derivative(coeffs));
    let sep = min_pairwise(&roots);
    if sep < COLLISION_TOL {
        return Err(DegorError::ChartBoundary(format!("critical points collide (separation {sep:.2e})")));
    }
    let mut taken = vec![false; roots.len()];
    let mut out = Vec::with_capacity(previous.len());
    let mut labeling = Vec::with_capacity(previous.len());
    for &p in previous {
        let (best, dist) = roots
            .iter()
            .enumerate()
            .map(|(k, r)| (k, (r - p).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
            .expect("at least one root");
        if taken[best] || dist > 0.5 * sep {
            return Err(DegorError::ChartBoundary("ambiguous critical point tracking".into()));
        }
        taken[best] = true;
        out.push(roots[best]);
        labeling.push(best);
    }
    Ok((out, labeling))
}

#[derive(Debug, Clone)]
struct Seed {
    poly: PolyMap,
    critical: CriticalData,
    roots: Vec<C64>,
}

/// The γ-field u ↦ gamma_genus0(chart_newton(poly0, u)).
///
/// Square-root branches of f″(x_i) start principal at the base polynomial and
/// are continued by sign tracking. With the seed cache enabled the last chart
/// solution seeds the next Newton solve; results then depend on evaluation
/// order at roundoff level, so deterministic sweeps should disable it.
#[derive(Debug)]
pub struct Hurwitz0Field {
    base: Seed,
    cache: Option<Mutex<Seed>>,
}

impl Hurwitz0Field {
    pub fn new(poly0: PolyMap) -> Result<Self> {
        let critical = critical_data(&poly0)?;
        if critical.n() < 1 {
            return Err(DegorError::Precondition("need at least one critical point".into()));
        }
        let roots = principal_roots(&critical);
        let base = Seed { poly: poly0, critical, roots };
        Ok(Hurwitz0Field { cache: Some(Mutex::new(base.clone())), base })
    }

    pub fn without_seed_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn base_poly(&self) -> &PolyMap {
        &self.base.poly
    }

    pub fn base_critical(&self) -> &CriticalData {
        &self.base.critical
    }

    /// Chart solution at u together with the branch-tracked √f″(x_i).
    pub fn solve(&self, u: &Point) -> Result<(ChartSolution, Vec<C64>)> {
        let seed = match &self.cache {
            Some(m) => m.lock().expect("seed cache poisoned").clone(),
            None => self.base.clone(),
        };
        let sol = chart_newton_from(&seed.poly, &seed.critical, u)?;
        let roots = tracked_roots(&sol.critical, &seed.roots);
        if let Some(m) = &self.cache {
            *m.lock().expect("seed cache poisoned") =
                Seed { poly: sol.poly.clone(), critical: sol.critical.clone(), roots: roots.clone() };
        }
        Ok((sol, roots))
    }
}

impl GammaField for Hurwitz0Field {
    fn dim(&self) -> usize {
        self.base.critical.n()
    }

    fn eval(&self, u: &Point) -> Result<CMat> {
        let (sol, roots) = self.solve(u)?;
        Ok(gamma_with_roots(&sol.critical.x, &roots))
    }

    fn provenance(&self) -> Provenance {
        Provenance::Hurwitz0
    }

    fn base_point(&self) -> Point {
        self.base.critical.point()
    }
}

/// Both sides of the genus-zero Rauch formula ∂W(P,Q)/∂u_j = ½ W(P,x_j) W(Q,x_j).
///
/// W is normalized by dλ = df at the regular points P, Q and by dz_j at x_j; the
/// u_j-derivative is taken at fixed λ = f(P), μ = f(Q), i.e. P and Q move with
/// the chart. Returns (finite-difference left side, right side).
pub fn rauch_terms_genus0(poly: &PolyMap, p: C64, q: C64, j: usize, h: f64) -> Result<(C64, C64)> {
    let cd = critical_data(poly)?;
    if j >= cd.n() {
        return Err(DegorError::BadDimensions(format!("index {j} out of range for n = {}", cd.n())));
    }
    if h.is_nan() || h <= 0.0 {
        return Err(DegorError::Precondition(format!("step h must be positive, got {h}")));
    }
    for (i, &x) in cd.x.iter().enumerate() {
        if (p - x).norm() < 1e-6 || (q - x).norm() < 1e-6 {
            return Err(DegorError::Domain(format!("evaluation point collides with critical point x_{i}")));
        }
    }
    if (p - q).norm() < 1e-6 {
        return Err(DegorError::Domain("P and Q coincide".into()));
    }
    let lambda = poly.eval(p);
    let mu = poly.eval(q);
    let u0 = cd.point();

    let w_at = |shift: f64| -> Result<C64> {
        let sol = chart_newton_from(poly, &cd, &u0.shifted(j, shift))?;
        let f = &sol.poly;
        let pp = preimage_near(f, lambda, p)?;
        let qq = preimage_near(f, mu, q)?;
        let d = pp - qq;
        Ok(C64::new(1.0, 0.0) / (d * d * f.d1(pp) * f.d1(qq)))
    };
    let lhs = (w_at(h)? - w_at(-h)?) / (2.0 * h);

    let xj = cd.x[j];
    let (dp, dq) = (p - xj, q - xj);
    let rhs = C64::new(1.0, 0.0) / (dp * dp * dq * dq * poly.d1(p) * poly.d1(q) * cd.fpp[j]);
    Ok((lhs, rhs))
}

/// |∂W(P,Q)/∂u_j − ½ W(P,x_j) W(Q,x_j)|, see [`rauch_terms_genus0`].
pub fn rauch_check_genus0(poly: &PolyMap, p: C64, q: C64, j: usize, h: f64) -> Result<f64> {
    let (lhs, rhs) = rauch_terms_genus0(poly, p, q, j, h)?;
    Ok((lhs - rhs).norm())
}

fn preimage_near(f: &PolyMap, value: C64, start: C64) -> Result<C64> {
    let mut z = start;
    for _ in 0..60 {
        let step = (f.eval(z) - value) / f.d1(z);
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    if (f.eval(z) - value).norm() < 1e-12 * (1.0 + value.norm()) {
        Ok(z)
    } else {
        Err(DegorError::Domain("preimage tracking failed".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::de::{de_residual, DEFAULT_H};
    use crate::linalg::{c, re};

    fn cubic() -> PolyMap {
        PolyMap::power_minus_linear(3).unwrap()
    }

    #[test]
    fn quadratic_has_single_critical_point() {
        let f = PolyMap::new(vec![re(0.0), re(0.0), re(0.5)]).unwrap();
        let cd = critical_data(&f).unwrap();
        assert_eq!(cd.x.len(), 1);
        assert!(cd.x[0].norm() < 1e-15 && cd.u[0].norm() < 1e-15);
        assert!((cd.fpp[0] - re(1.0)).norm() < 1e-15);
        let g = gamma_genus0(&cd);
        assert_eq!(g.shape(), (1, 1));
        assert_eq!(g[(0, 0)], re(0.0));
    }

    #[test]
    fn cubic_critical_data() {
        let cd = critical_data(&cubic()).unwrap();
        let close = |a: C64, b: f64| (a - re(b)).norm() < 1e-14;
        assert!(close(cd.x[0], 1.0) && close(cd.x[1], -1.0));
        assert!(close(cd.u[0], -2.0 / 3.0) && close(cd.u[1], 2.0 / 3.0));
        assert!(close(cd.fpp[0], 2.0) && close(cd.fpp[1], -2.0));
    }

    #[test]
    fn degenerate_cubic_is_rejected() {
        let f = PolyMap::new(vec![re(0.0), re(0.0), re(0.0), re(1.0 / 3.0)]).unwrap();
        assert!(matches!(critical_data(&f), Err(DegorError::NonSimpleCritical(_))));
    }

    #[test]
    fn degree_and_leading_validation() {
        assert!(PolyMap::new(vec![re(1.0), re(1.0)]).is_err());
        assert!(PolyMap::new(vec![re(1.0), re(1.0), re(0.0)]).is_err());
    }

    #[test]
    fn cubic_gamma_closed_form() {
        let g = gamma_genus0(&critical_data(&cubic()).unwrap());
        assert!((g[(0, 1)] - c(0.0, -1.0 / 8.0)).norm() < 1e-15);
        assert_eq!(g[(0, 1)], g[(1, 0)]);
        assert_eq!(g[(0, 0)], re(0.0));
    }

    #[test]
    fn gamma_is_exactly_symmetric() {
        let cd = critical_data(&PolyMap::power_minus_linear(5).unwrap()).unwrap();
        let g = gamma_genus0(&cd);
        for i in 0..4 {
            assert_eq!(g[(i, i)], re(0.0));
            for j in 0..4 {
                assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
    }

    #[test]
    fn quartic_seed_is_a_de_solution() {
        let field = Hurwitz0Field::new(PolyMap::power_minus_linear(4).unwrap()).unwrap();
        let r = de_residual(&field, &field.base_point(), DEFAULT_H).unwrap();
        assert!(r.max_flatness < 1e-6 && r.max_translation < 1e-6, "{r:?}");
    }

    #[test]
    fn chart_fixed_point_takes_no_steps() {
        let f = cubic();
        let sol = chart_newton(&f, &critical_data(&f).unwrap().point()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.poly, f);
    }

    #[test]
    fn chart_small_step_converges_fast() {
        let f = cubic();
        let target = Point::real(&[-2.0 / 3.0 + 1e-3, 2.0 / 3.0]);
        let sol = chart_newton(&f, &target).unwrap();
        assert!(sol.iterations <= 5, "{} iterations", sol.iterations);
        // independent check: evaluate the new polynomial at its critical points
        for (x, t) in sol.critical.x.iter().zip(&target.0) {
            assert!(sol.poly.d1(*x).norm() < 1e-12);
            assert!((sol.poly.eval(*x) - t).norm() < 1e-10);
        }
        assert_eq!(sol.poly.coeffs()[3], f.coeffs()[3]);
        assert_eq!(sol.poly.coeffs()[2], f.coeffs()[2]);
    }

    #[test]
    fn chart_rejects_colliding_values() {
        let r = chart_newton(&cubic(), &Point::real(&[0.1, 0.1]));
        assert!(matches!(r, Err(DegorError::ChartBoundary(_))));
    }

    #[test]
    fn chart_cannot_pass_through_collision() {
        // for the cubic, u₁ → u₂ forces x₁ → x₂
        let r = chart_newton(&cubic(), &Point::real(&[0.0, 1e-9]));
        assert!(matches!(r, Err(DegorError::ChartBoundary(_))));
    }

    #[test]
    fn field_at_base_matches_seed() {
        let f = PolyMap::power_minus_linear(4).unwrap();
        let field = Hurwitz0Field::new(f.clone()).unwrap();
        let g = field.eval(&field.base_point()).unwrap();
        let g0 = gamma_genus0(&critical_data(&f).unwrap());
        assert!(crate::linalg::max_abs_diff(&g, &g0) < 1e-13);
    }

    #[test]
    fn chart_is_path_independent_with_cache() {
        let field = Hurwitz0Field::new(PolyMap::power_minus_linear(4).unwrap()).unwrap();
        let base = field.base_point();
        let target = base.offset(&[c(0.03, 0.01), c(-0.02, 0.0), c(0.0, 0.04)]);
        let first = field.eval(&target).unwrap();
        field.eval(&base.offset(&[c(-0.04, 0.0), c(0.04, 0.0), c(0.02, -0.03)])).unwrap();
        field.eval(&base.shifted(1, 0.05)).unwrap();
        let second = field.eval(&target).unwrap();
        assert!(crate::linalg::max_abs_diff(&first, &second) < 1e-10);
    }

    #[test]
    fn rauch_example_and_second_order_decay() {
        let f = cubic();
        let d = rauch_check_genus0(&f, re(3.0), re(-2.0), 0, 1e-4).unwrap();
        assert!(d < 1e-5, "defect {d}");
        let d1 = rauch_check_genus0(&f, re(3.0), re(-2.0), 0, 2e-2).unwrap();
        let d2 = rauch_check_genus0(&f, re(3.0), re(-2.0), 0, 1e-2).unwrap();
        assert!((d1 / d2 - 4.0).abs() < 0.5, "ratio {}", d1 / d2);
    }

    #[test]
    fn rauch_rejects_critical_points() {
        assert!(matches!(rauch_check_genus0(&cubic(), re(1.0), re(-2.0), 0, 1e-4), Err(DegorError::Domain(_))));
    }

    #[test]
    fn json_shapes() {
        let f = cubic();
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["coeffs"][1], serde_json::json!([-1.0, 0.0]));
        let back: PolyMap = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
        let cd = serde_json::to_value(critical_data(&f).unwrap()).unwrap();
        for key in ["x", "u", "fpp", "labeling"] {
            assert!(cd.get(key).is_some());
        }
    }
}
