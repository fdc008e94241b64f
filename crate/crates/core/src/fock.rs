//! Finite-section oracle for γ(A) and Ψ_d(A).
//!
//! The loop element A(z) together with the flow exp(Σ αᵢuᵢ) acts on single
//! particles e_i z^d as the matrix series G(z) = diag(e^{u_i z}) A(z). Wedge
//! matrix elements become determinants of finite sections of that operator
//! over the window {e_i z^d : −N ≤ d < N}. The vacuum occupies d ≥ 0.
//!
//! Conventions: rows are the bra support, columns the ket support.
//!
//! ```text
//! ⟨0|𝒜|0⟩  = det G[vac, vac]
//! γ_ij     = −det G[vac with e_j z⁰ ↦ e_i z⁻¹, vac] / ⟨0|𝒜|0⟩
//! (Ψ_d)_ij =  det G[e_i z⁻¹ ∪ vac, e_j z^{−1−d} ∪ vac] / ⟨0|𝒜|0⟩
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::de::{GammaField, Point, Provenance};
use crate::deform::{DeformationDirection, Side};
use crate::error::{DegorError, Result};
use crate::exec::{self, Exec};
use crate::linalg::{self, CMat, LogDet, Pair, C64};

pub const TWISTED_ORTHOGONALITY_TOL: f64 = 1e-10;
/// Relative Cauchy tolerance between windows N and N − 2.
pub const CAUCHY_TOL: f64 = 1e-6;
pub const DENOMINATOR_TOL: f64 = 1e-12;
const SERIES_CUTOFF: f64 = 1e-18;
const MAX_SERIES_TERMS: usize = 400;

/// A(z) = Σ_{k=lo}^{hi} A_k z^k with Aᵗ(−z) A(z) = Id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LoopRepr", try_from = "LoopRepr")]
pub struct LoopElement {
    n: usize,
    lo: i64,
    coeffs: Vec<CMat>,
}

#[derive(Serialize, Deserialize)]
struct LoopRepr {
    n: usize,
    orders: [i64; 2],
    coeffs: BTreeMap<String, Vec<Vec<Pair>>>,
}

impl From<LoopElement> for LoopRepr {
    fn from(a: LoopElement) -> Self {
        let coeffs = a
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, m)| linalg::max_abs(m) > 0.0)
            .map(|(k, m)| ((a.lo + k as i64).to_string(), linalg::mat_to_rows(m)))
            .collect();
        LoopRepr { n: a.n, orders: [a.lo, a.hi()], coeffs }
    }
}

impl TryFrom<LoopRepr> for LoopElement {
    type Error = DegorError;

    fn try_from(r: LoopRepr) -> Result<Self> {
        let [lo, hi] = r.orders;
        if hi < lo {
            return Err(DegorError::BadDimensions(format!("empty order range [{lo}, {hi}]")));
        }
        let mut coeffs = vec![CMat::zeros(r.n, r.n); (hi - lo + 1) as usize];
        for (key, rows) in &r.coeffs {
            let k: i64 = key.parse().map_err(|_| DegorError::BadDimensions(format!("order key {key:?} is not an integer")))?;
            if k < lo || k > hi {
                return Err(DegorError::BadDimensions(format!("order {k} outside [{lo}, {hi}]")));
            }
            coeffs[(k - lo) as usize] = linalg::rows_to_mat(rows)?;
        }
        LoopElement::new(r.n, lo, coeffs)
    }
}

impl LoopElement {
    /// `coeffs[k]` is the coefficient of z^{lo + k}.
    pub fn new(n: usize, lo: i64, coeffs: Vec<CMat>) -> Result<Self> {
        if n == 0 || coeffs.is_empty() {
            return Err(DegorError::BadDimensions("loop element needs n ≥ 1 and at least one coefficient".into()));
        }
        if coeffs.iter().any(|m| m.shape() != (n, n)) {
            return Err(DegorError::BadDimensions(format!("all coefficients must be {n}×{n}")));
        }
        let a = LoopElement { n, lo, coeffs };
        let defect = a.twisted_orthogonality_defect();
        if defect > TWISTED_ORTHOGONALITY_TOL {
            return Err(DegorError::ToleranceExceeded { what: "Aᵗ(−z)A(z) = Id".into(), value: defect, tol: TWISTED_ORTHOGONALITY_TOL });
        }
        Ok(a)
    }

    pub fn identity(n: usize) -> Self {
        LoopElement { n, lo: 0, coeffs: vec![linalg::identity(n)] }
    }

    /// exp(ε X z^{∓ℓ}) for a direction X z^{∓ℓ}, summed until terms drop below 1e−18.
    pub fn exp_direction(dir: &DeformationDirection, eps: C64) -> Result<Self> {
        let n = dir.mat().nrows();
        let x = dir.mat() * eps;
        let mut terms = vec![linalg::identity(n)];
        for k in 1..MAX_SERIES_TERMS {
            let next = terms.last().expect("non-empty") * &x * C64::new(1.0 / k as f64, 0.0);
            if linalg::max_abs(&next) < SERIES_CUTOFF {
                break;
            }
            terms.push(next);
        }
        let ell = dir.ell();
        let len = (terms.len() - 1) * ell + 1;
        let mut coeffs = vec![CMat::zeros(n, n); len];
        let lo = match dir.side() {
            Side::Lower => {
                for (k, t) in terms.into_iter().enumerate() {
                    coeffs[len - 1 - k * ell] = t;
                }
                -((len - 1) as i64)
            }
            Side::Upper => {
                for (k, t) in terms.into_iter().enumerate() {
                    coeffs[k * ell] = t;
                }
                0
            }
        };
        LoopElement::new(n, lo, coeffs)
    }

    /// A(z)·B(z).
    pub fn product(&self, other: &LoopElement) -> Result<Self> {
        if self.n != other.n {
            return Err(DegorError::BadDimensions("loop elements differ in n".into()));
        }
        let len = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![CMat::zeros(self.n, self.n); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LoopElement::new(self.n, self.lo + other.lo, coeffs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    /// Depth p of the negative part.
    pub fn lowering_depth(&self) -> usize {
        (-self.lo).max(0) as usize
    }

    pub fn coeff(&self, k: i64) -> Option<&CMat> {
        if k < self.lo {
            return None;
        }
        self.coeffs.get((k - self.lo) as usize)
    }

    /// max over orders m of ‖Σ_{k+l=m} (−1)^k A_kᵗ A_l − δ_{m0} Id‖.
    pub fn twisted_orthogonality_defect(&self) -> f64 {
        let n = self.n;
        let len = self.coeffs.len();
        let mut worst = 0.0_f64;
        for m in 0..(2 * len - 1) {
            let mut acc = CMat::zeros(n, n);
            for i in m.saturating_sub(len - 1)..=m.min(len - 1) {
                let k = self.lo + i as i64;
                let term = self.coeffs[i].transpose() * &self.coeffs[m - i];
                if k.rem_euclid(2) == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            if 2 * self.lo + m as i64 == 0 {
                acc -= linalg::identity(n);
            }
            worst = worst.max(linalg::max_abs(&acc));
        }
        worst
    }
}

/// Window bound N: basis vectors e_i z^d with −N ≤ d < N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    #[serde(rename = "N")]
    pub window: usize,
}

/// Smallest usable window; the Cauchy check compares against N − 2.
pub const MIN_WINDOW: usize = 4;

impl Truncation {
    pub fn new(window: usize) -> Result<Self> {
        if window < MIN_WINDOW {
            return Err(DegorError::Precondition(format!("window N = {window} is below the minimum {MIN_WINDOW}")));
        }
        Ok(Truncation { window })
    }

    pub fn check_for(&self, a: &LoopElement) -> Result<()> {
        let p = a.lowering_depth();
        if self.window < MIN_WINDOW || self.window < p + 2 {
            return Err(DegorError::Precondition(format!("window N = {} too small for lowering depth p = {p}", self.window)));
        }
        Ok(())
    }

    pub fn dim(&self, n: usize) -> usize {
        2 * self.window * n
    }
}

type Basis = (usize, i64);

/// The blocks G_j = Σ_{m+k=j} diag(u^m/m!) A_k for j ∈ [lo, j_max].
struct Symbol {
    lo: i64,
    blocks: Vec<CMat>,
}

impl Symbol {
    fn new(a: &LoopElement, u: &Point, j_max: i64) -> Result<Self> {
        let n = a.n;
        if u.dim() != n {
            return Err(DegorError::BadDimensions(format!("point has {} coordinates, loop element has n = {n}", u.dim())));
        }
        let span = (j_max - a.lo + 1).max(0) as usize;
        // e^{u z} Taylor coefficients u^m/m!
        let mut taylor = vec![vec![C64::new(1.0, 0.0); n]];
        for m in 1..span {
            let prev = &taylor[m - 1];
            taylor.push(prev.iter().zip(u.coords()).map(|(p, x)| p * x / m as f64).collect());
        }
        let mut blocks = vec![CMat::zeros(n, n); span];
        for (s, block) in blocks.iter_mut().enumerate() {
            let j = a.lo + s as i64;
            for (kidx, ak) in a.coeffs.iter().enumerate() {
                let k = a.lo + kidx as i64;
                if k > j {
                    break;
                }
                let t = &taylor[(j - k) as usize];
                for r in 0..n {
                    for c in 0..n {
                        block[(r, c)] += t[r] * ak[(r, c)];
                    }
                }
            }
        }
        Ok(Symbol { lo: a.lo, blocks })
    }

    /// ⟨e_a z^p | G e_b z^q⟩ = G_{p−q}[a, b].
    fn entry(&self, (a, p): Basis, (b, q): Basis) -> C64 {
        let j = p - q;
        if j < self.lo {
            return C64::new(0.0, 0.0);
        }
        match self.blocks.get((j - self.lo) as usize) {
            Some(g) => g[(a, b)],
            None => C64::new(0.0, 0.0),
        }
    }

    fn minor(&self, rows: &[Basis], cols: &[Basis]) -> CMat {
        CMat::from_fn(rows.len(), cols.len(), |r, c| self.entry(rows[r], cols[c]))
    }
}

fn vacuum(n: usize, top: usize) -> Vec<Basis> {
    (0..top as i64).flat_map(|d| (0..n).map(move |i| (i, d))).collect()
}

fn symbol_for(a: &LoopElement, u: &Point, trunc: Truncation) -> Result<Symbol> {
    trunc.check_for(a)?;
    Symbol::new(a, u, 2 * trunc.window as i64 - 1)
}

/// The single-particle operator on the window, index (d + N)·n + i.
pub fn operator_matrix(a: &LoopElement, u: &Point, trunc: Truncation) -> Result<CMat> {
    let sym = symbol_for(a, u, trunc)?;
    let n = a.n;
    let big_n = trunc.window as i64;
    let basis: Vec<Basis> = (-big_n..big_n).flat_map(|d| (0..n).map(move |i| (i, d))).collect();
    Ok(sym.minor(&basis, &basis))
}

fn vacuum_logdet(sym: &Symbol, n: usize, top: usize) -> LogDet {
    let vac = vacuum(n, top);
    LogDet::of(&sym.minor(&vac, &vac))
}

fn denominator(sym: &Symbol, n: usize, top: usize) -> Result<LogDet> {
    let den = vacuum_logdet(sym, n, top);
    let v = den.value().norm();
    if den.is_zero() || v < DENOMINATOR_TOL {
        return Err(DegorError::DenominatorVanishes(v));
    }
    Ok(den)
}

fn cauchy(what: &str, fine: f64, diff: f64) -> Result<()> {
    if diff > CAUCHY_TOL * fine + 1e-14 {
        return Err(DegorError::TruncationUnstable(format!("{what}: N vs N−2 differ by {diff:.3e} (scale {fine:.3e})")));
    }
    Ok(())
}

/// ⟨0|𝒜|0⟩.
pub fn vacuum_expectation(a: &LoopElement, u: &Point, trunc: Truncation) -> Result<C64> {
    let sym = symbol_for(a, u, trunc)?;
    let fine = vacuum_logdet(&sym, a.n, trunc.window).value();
    let coarse = vacuum_logdet(&sym, a.n, trunc.window - 2).value();
    cauchy("⟨0|𝒜|0⟩", fine.norm(), (fine - coarse).norm())?;
    Ok(fine)
}

fn gamma_at_top(sym: &Symbol, n: usize, top: usize, exec: Exec) -> Result<CMat> {
    let den = denominator(sym, n, top)?;
    let vac = vacuum(n, top);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let vals = exec::map(exec, &pairs, |&(i, j)| {
        let rows: Vec<Basis> = vac.iter().map(|&b| if b == (j, 0) { (i, -1) } else { b }).collect();
        -LogDet::of(&sym.minor(&rows, &vac)).ratio(&den)
    });
    let mut g = CMat::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        g[(i, j)] = v;
    }
    Ok(g)
}

fn psi_at_top(sym: &Symbol, n: usize, top: usize, d: usize, exec: Exec) -> Result<CMat> {
    let den = denominator(sym, n, top)?;
    let vac = vacuum(n, top);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let vals = exec::map(exec, &pairs, |&(i, j)| {
        let mut rows = vec![(i, -1)];
        rows.extend_from_slice(&vac);
        let mut cols = vec![(j, -1 - d as i64)];
        cols.extend_from_slice(&vac);
        LogDet::of(&sym.minor(&rows, &cols)).ratio(&den)
    });
    Ok(CMat::from_fn(n, n, |i, j| vals[i * n + j]))
}

fn check_psi_window(trunc: Truncation, d: usize) -> Result<()> {
    if trunc.window < d + 2 {
        return Err(DegorError::Precondition(format!("window N = {} too small for Ψ_{d}", trunc.window)));
    }
    Ok(())
}

pub fn gamma_fock(a: &LoopElement, u: &Point, trunc: Truncation) -> Result<CMat> {
    gamma_fock_with(a, u, trunc, Exec::default())
}

/// γ(A) at u; per-(i, j) minors are evaluated through `exec`.
pub fn gamma_fock_with(a: &LoopElement, u: &Point, trunc: Truncation, exec: Exec) -> Result<CMat> {
    let sym = symbol_for(a, u, trunc)?;
    let fine = gamma_at_top(&sym, a.n, trunc.window, exec)?;
    let coarse = gamma_at_top(&sym, a.n, trunc.window - 2, exec)?;
    cauchy("γ", linalg::max_abs(&fine), linalg::max_abs_diff(&fine, &coarse))?;
    Ok(fine)
}

pub fn psi_fock(a: &LoopElement, u: &Point, trunc: Truncation, d: usize) -> Result<CMat> {
    psi_fock_with(a, u, trunc, d, Exec::default())
}

/// Ψ_d(A) at u.
pub fn psi_fock_with(a: &LoopElement, u: &Point, trunc: Truncation, d: usize, exec: Exec) -> Result<CMat> {
    check_psi_window(trunc, d)?;
    let sym = symbol_for(a, u, trunc)?;
    let fine = psi_at_top(&sym, a.n, trunc.window, d, exec)?;
    let coarse = psi_at_top(&sym, a.n, trunc.window - 2, d, exec)?;
    cauchy("Ψ", linalg::max_abs(&fine), linalg::max_abs_diff(&fine, &coarse))?;
    Ok(fine)
}

/// Oracle outputs at one window size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValues {
    #[serde(with = "crate::linalg::pair")]
    pub vacuum: C64,
    #[serde(with = "crate::linalg::rows")]
    pub gamma: CMat,
    #[serde(with = "crate::linalg::rows_vec")]
    pub psi: Vec<CMat>,
}

impl OracleValues {
    fn max_abs_diff(&self, other: &OracleValues) -> f64 {
        let mut m = (self.vacuum - other.vacuum).norm().max(linalg::max_abs_diff(&self.gamma, &other.gamma));
        for (x, y) in self.psi.iter().zip(&other.psi) {
            m = m.max(linalg::max_abs_diff(x, y));
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub window: usize,
    /// None when the window is unusable (see `error`).
    pub values: Option<OracleValues>,
    /// Largest change of any output against the previous usable row.
    pub diff_prev: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Successive differences fail to decrease, the last one exceeds the
    /// Cauchy tolerance, or a window was unusable.
    pub unstable: bool,
}

/// Tabulates ⟨0|𝒜|0⟩, γ and Ψ₀..Ψ_order over the given windows without Cauchy checks.
pub fn convergence_sweep(a: &LoopElement, u: &Point, windows: &[usize], order: usize) -> Result<ConvergenceReport> {
    if windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DegorError::Precondition("window sizes must be strictly ascending".into()));
    }
    let n = a.n;
    let mut rows = Vec::with_capacity(windows.len());
    let mut prev: Option<OracleValues> = None;
    let mut unstable = false;
    let mut last_diff: Option<f64> = None;
    for &w in windows {
        let trunc = Truncation { window: w };
        let attempt = (|| -> Result<OracleValues> {
            check_psi_window(trunc, order)?;
            let sym = symbol_for(a, u, trunc)?;
            let vacuum = vacuum_logdet(&sym, n, w).value();
            let gamma = gamma_at_top(&sym, n, w, Exec::Sequential)?;
            let psi = (0..=order).map(|d| psi_at_top(&sym, n, w, d, Exec::Sequential)).collect::<Result<Vec<_>>>()?;
            Ok(OracleValues { vacuum, gamma, psi })
        })();
        match attempt {
            Ok(values) => {
                let diff_prev = prev.as_ref().map(|p| values.max_abs_diff(p));
                if let (Some(d), Some(l)) = (diff_prev, last_diff) {
                    if d > l && d > 1e-14 {
                        unstable = true;
                    }
                }
                last_diff = diff_prev.or(last_diff);
                prev = Some(values.clone());
                rows.push(ConvergenceRow { window: w, values: Some(values), diff_prev, error: None });
            }
            Err(e) => {
                unstable = true;
                rows.push(ConvergenceRow { window: w, values: None, diff_prev: None, error: Some(e.to_string()) });
            }
        }
    }
    if last_diff.is_some_and(|l| l > CAUCHY_TOL) {
        unstable = true;
    }
    Ok(ConvergenceReport { rows, unstable })
}

/// γ(A) over u as a field, for the DE harness.
#[derive(Debug, Clone)]
pub struct FockGammaField {
    pub element: LoopElement,
    pub trunc: Truncation,
}

impl GammaField for FockGammaField {
    fn dim(&self) -> usize {
        self.element.n
    }

    fn eval(&self, u: &Point) -> Result<CMat> {
        gamma_fock_with(&self.element, u, self.trunc, Exec::Sequential)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Fock
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff, re};

    fn sym2() -> CMat {
        CMat::from_row_slice(2, 2, &[re(0.4), c(0.3, 0.1), c(0.3, 0.1), re(-0.2)])
    }

    fn w(n: usize) -> Truncation {
        Truncation::new(n).unwrap()
    }

    #[test]
    fn identity_operator() {
        let a = LoopElement::identity(2);
        let m = operator_matrix(&a, &Point::zeros(2), w(4)).unwrap();
        assert_eq!(m, linalg::identity(16));
        let u = Point::new(vec![c(0.3, 0.1), re(-0.4)]);
        let m = operator_matrix(&a, &u, w(4)).unwrap();
        for r in 0..16 {
            assert_eq!(m[(r, r)], re(1.0));
            for col in r + 1..16 {
                assert_eq!(m[(r, col)], re(0.0));
            }
        }
        assert_eq!(m[(2, 0)], u.0[0]);
    }

    #[test]
    fn lowering_exponential_blocks() {
        let r = sym2();
        let a = LoopElement::exp_direction(&DeformationDirection::lower(1, r.clone()).unwrap(), re(1.0)).unwrap();
        let m = operator_matrix(&a, &Point::zeros(2), w(18)).unwrap();
        // row degree 0, column degree 2: coefficient of z^{-2} is r²/2
        let blk = m.view((18 * 2, 20 * 2), (2, 2)).into_owned();
        assert!(max_abs_diff(&blk, &(&r * &r * re(0.5))) < 1e-15);
        let blk1 = m.view((18 * 2, 19 * 2), (2, 2)).into_owned();
        assert!(max_abs_diff(&blk1, &r) < 1e-15);
    }

    #[test]
    fn identity_vacuum_and_gamma_are_exact() {
        let a = LoopElement::identity(3);
        let u = Point::new(vec![c(0.3, 0.1), re(-0.4), c(0.0, 0.2)]);
        assert_eq!(vacuum_expectation(&a, &u, w(8)).unwrap(), re(1.0));
        assert_eq!(gamma_fock(&a, &u, w(8)).unwrap(), CMat::zeros(3, 3));
    }

    #[test]
    fn identity_psi_is_exponential_taylor() {
        let a = LoopElement::identity(3);
        let u = Point::new(vec![c(0.3, 0.1), re(-0.4), c(0.0, 0.2)]);
        for d in 0..=3 {
            let exact = crate::wave::WaveJet::trivial(&u, 3).psi[d].clone();
            assert!(max_abs_diff(&psi_fock(&a, &u, w(12), d).unwrap(), &exact) < 1e-12);
        }
        assert_eq!(psi_fock(&a, &Point::zeros(3), w(6), 0).unwrap(), linalg::identity(3));
    }

    #[test]
    fn window_preconditions() {
        let a = LoopElement::exp_direction(&DeformationDirection::lower(1, sym2()).unwrap(), re(0.5)).unwrap();
        assert!(a.lowering_depth() > 4);
        assert!(matches!(gamma_fock(&a, &Point::zeros(2), w(4)), Err(DegorError::Precondition(_))));
        assert!(Truncation::new(2).is_err());
        assert!(psi_fock(&LoopElement::identity(2), &Point::zeros(2), w(5), 4).is_err());
    }

    #[test]
    fn first_order_gamma_is_minus_r() {
        let r = sym2();
        let dir = DeformationDirection::lower(1, r.clone()).unwrap();
        let u = Point::new(vec![re(0.05), re(-0.02)]);
        let eps = 1e-5;
        let plus = gamma_fock(&LoopElement::exp_direction(&dir, re(eps)).unwrap(), &u, w(16)).unwrap();
        let minus = gamma_fock(&LoopElement::exp_direction(&dir, re(-eps)).unwrap(), &u, w(16)).unwrap();
        let fd = (plus - minus) * re(0.5 / eps);
        let expect = linalg::zero_diagonal(&-(&r));
        // Ψ₀ = Id at first order around A = Id, for any u
        assert!(max_abs_diff(&fd, &expect) < 1e-6);
    }

    #[test]
    fn twisted_orthogonality_is_validated() {
        let bad = LoopElement::new(2, -1, vec![sym2(), linalg::identity(2), sym2()]);
        assert!(matches!(bad, Err(DegorError::ToleranceExceeded { .. })));
        let a = LoopElement::exp_direction(&DeformationDirection::lower(1, sym2()).unwrap(), re(0.3)).unwrap();
        let b = LoopElement::exp_direction(&DeformationDirection::upper(1, sym2()).unwrap(), re(0.2)).unwrap();
        assert!(a.product(&b).unwrap().twisted_orthogonality_defect() < 1e-12);
    }

    #[test]
    fn loop_json_roundtrip() {
        let a = LoopElement::exp_direction(&DeformationDirection::lower(1, sym2()).unwrap(), re(0.1)).unwrap();
        let v = serde_json::to_value(&a).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["orders"][1], 0);
        assert!(v["coeffs"].get("-1").is_some());
        let back: LoopElement = serde_json::from_value(v).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn convergence_sweeps() {
        let u = Point::new(vec![re(0.1), re(-0.1)]);
        let id = convergence_sweep(&LoopElement::identity(2), &u, &[6, 8, 10], 2).unwrap();
        assert!(!id.unstable);
        assert!(id.rows.iter().skip(1).all(|r| r.diff_prev.unwrap() < 1e-14));
        let a = LoopElement::exp_direction(&DeformationDirection::lower(1, sym2()).unwrap(), re(0.1)).unwrap();
        let p = a.lowering_depth();
        let rep = convergence_sweep(&a, &u, &[p + 2, p + 4, p + 6], 1).unwrap();
        assert!(!rep.unstable, "{rep:?}");
        let tight = convergence_sweep(&a, &u, &[p, p + 1], 1).unwrap();
        assert!(tight.unstable);
        assert!(convergence_sweep(&a, &u, &[8, 6], 1).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let a = LoopElement::exp_direction(&DeformationDirection::lower(1, sym2()).unwrap(), re(0.1)).unwrap();
        let u = Point::new(vec![re(0.1), re(-0.1)]);
        let s = gamma_fock_with(&a, &u, w(14), Exec::Sequential).unwrap();
        let p = gamma_fock_with(&a, &u, w(14), Exec::Parallel).unwrap();
        assert_eq!(s, p);
    }
}
