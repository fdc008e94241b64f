//! Truncated wave-matrix hierarchy.
//!
//! Starting from Ψ₀ = Id, Ψ_d = 0 (d ≥ 1) at the base point of a γ-field, the
//! stack (Ψ₀,…,Ψ_D) is transported along a path by
//!
//! ```text
//! ∂Ψ_d/∂u_k = E_kk Ψ_{d−1} + [γ, E_kk] Ψ_d,     Ψ_{−1} = 0.
//! ```
//!
//! The system is compatible exactly when γ solves the Darboux-Egoroff
//! equations, so path independence of the endpoint is a numerical witness of
//! the DE property. The orthogonality ladder Σ_{i+j=m} (−1)^i Ψ_iᵗ Ψ_j = δ_{m0} Id
//! is conserved along any path.

use serde::{Deserialize, Serialize};

use crate::de::{GammaField, Point};
use crate::error::{DegorError, Result};
use crate::linalg::{self, CMat, Pair, C64};
use crate::ode::rk4_polyline;

/// Default integration density for straight paths.
pub const DEFAULT_STEPS_PER_UNIT: f64 = 200.0;
/// Orthogonality drift beyond this aborts an integration.
pub const DRIFT_FAIL_TOL: f64 = 1e-6;

/// Ψ₀,…,Ψ_D at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "WaveJetRepr", try_from = "WaveJetRepr")]
pub struct WaveJet {
    pub psi: Vec<CMat>,
    pub at: Point,
}

#[derive(Serialize, Deserialize)]
struct WaveJetRepr {
    n: usize,
    #[serde(rename = "D_order")]
    d_order: usize,
    u: Vec<Pair>,
    psi: Vec<Vec<Vec<Pair>>>,
}

impl From<WaveJet> for WaveJetRepr {
    fn from(j: WaveJet) -> Self {
        WaveJetRepr {
            n: j.n(),
            d_order: j.order(),
            u: linalg::to_pairs(j.at.coords()),
            psi: j.psi.iter().map(linalg::mat_to_rows).collect(),
        }
    }
}

impl TryFrom<WaveJetRepr> for WaveJet {
    type Error = DegorError;

    fn try_from(r: WaveJetRepr) -> Result<Self> {
        let psi = r.psi.iter().map(|m| linalg::rows_to_mat(m)).collect::<Result<Vec<_>>>()?;
        if psi.len() != r.d_order + 1 || psi.iter().any(|m| m.shape() != (r.n, r.n)) || r.u.len() != r.n {
            return Err(DegorError::BadDimensions("wave jet fields disagree on n or D_order".into()));
        }
        Ok(WaveJet { psi, at: Point::from(r.u) })
    }
}

impl WaveJet {
    pub fn n(&self) -> usize {
        self.psi[0].nrows()
    }

    /// Truncation depth D (the jet holds D + 1 matrices).
    pub fn order(&self) -> usize {
        self.psi.len() - 1
    }

    pub fn psi(&self, d: usize) -> Result<&CMat> {
        self.psi.get(d).ok_or(DegorError::InsufficientJetDepth { need: d, have: self.order() })
    }

    pub fn require_order(&self, need: usize) -> Result<()> {
        if self.order() < need {
            return Err(DegorError::InsufficientJetDepth { need, have: self.order() });
        }
        Ok(())
    }

    /// The closed-form jet of γ ≡ 0 with base point 0: Ψ_d = diag(u_i^d / d!).
    pub fn trivial(u: &Point, order: usize) -> WaveJet {
        let mut psi = Vec::with_capacity(order + 1);
        let mut cur: Vec<C64> = vec![C64::new(1.0, 0.0); u.dim()];
        for d in 0..=order {
            if d > 0 {
                for (c, x) in cur.iter_mut().zip(u.coords()) {
                    *c = *c * x / d as f64;
                }
            }
            psi.push(linalg::diag(&cur));
        }
        WaveJet { psi, at: u.clone() }
    }

    /// Entry m: ‖Ψ₀ᵗΨ₀ − Id‖ for m = 0, ‖Σ_{i+j=m} (−1)^i Ψ_iᵗ Ψ_j‖ for m ≥ 1.
    pub fn orthogonality_defects(&self) -> Vec<f64> {
        (0..=self.order()).map(|m| ladder_defect(&self.psi, m)).collect()
    }

    pub fn max_orthogonality_defect(&self) -> f64 {
        self.orthogonality_defects().into_iter().fold(0.0, f64::max)
    }
}

fn ladder_defect(psi: &[CMat], m: usize) -> f64 {
    let n = psi[0].nrows();
    let mut acc = CMat::zeros(n, n);
    for i in 0..=m {
        let term = psi[i].transpose() * &psi[m - i];
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    if m == 0 {
        acc -= linalg::identity(n);
    }
    linalg::max_abs(&acc)
}

/// Piecewise-linear integration contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathInU {
    pub waypoints: Vec<Point>,
    pub steps_per_segment: usize,
}

impl PathInU {
    pub fn new(waypoints: Vec<Point>, steps_per_segment: usize) -> Result<Self> {
        let first = waypoints.first().ok_or_else(|| DegorError::Precondition("path needs a start point".into()))?;
        if waypoints.iter().any(|p| p.dim() != first.dim()) {
            return Err(DegorError::BadDimensions("waypoints differ in dimension".into()));
        }
        if waypoints.windows(2).any(|w| w[0] == w[1]) {
            return Err(DegorError::Precondition("consecutive waypoints must differ".into()));
        }
        if steps_per_segment == 0 {
            return Err(DegorError::Precondition("steps_per_segment must be positive".into()));
        }
        Ok(PathInU { waypoints, steps_per_segment })
    }

    /// Single segment; the degenerate path when `from == to`.
    pub fn straight(from: &Point, to: &Point, steps: usize) -> Self {
        let waypoints = if from == to { vec![from.clone()] } else { vec![from.clone(), to.clone()] };
        PathInU { waypoints, steps_per_segment: steps.max(1) }
    }

    /// Moves one coordinate at a time from `from` to `to`, in `axis_order`.
    pub fn along_axes(from: &Point, to: &Point, axis_order: &[usize], steps: usize) -> Result<Self> {
        let mut cur = from.clone();
        let mut pts = vec![cur.clone()];
        for &k in axis_order {
            if k >= from.dim() {
                return Err(DegorError::BadDimensions(format!("axis {k} out of range")));
            }
            if cur.0[k] != to.0[k] {
                cur.0[k] = to.0[k];
                pts.push(cur.clone());
            }
        }
        if cur != *to {
            return Err(DegorError::Precondition("axis order does not reach the endpoint".into()));
        }
        PathInU::new(pts, steps)
    }

    pub fn start(&self) -> &Point {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &Point {
        self.waypoints.last().expect("non-empty path")
    }

    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].coords().iter().zip(w[1].coords()).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>().sqrt())
            .sum()
    }
}

/// Number of steps for a straight segment of the given length at the default density.
pub fn default_steps(length: f64) -> usize {
    ((length * DEFAULT_STEPS_PER_UNIT).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorOptions {
    /// Project Ψ₀ back onto the orthogonal group every this many steps.
    pub reorthonormalize_every: Option<usize>,
}

fn check_orthogonal(psi0: &CMat, tol: f64) -> Result<()> {
    if !psi0.is_square() {
        return Err(DegorError::BadDimensions("Ψ₀ must be square".into()));
    }
    let defect = linalg::max_abs(&(psi0.transpose() * psi0 - linalg::identity(psi0.nrows())));
    if defect > tol {
        return Err(DegorError::Precondition(format!("initial Ψ₀ is not orthogonal (defect {defect:.2e})")));
    }
    Ok(())
}

/// K = [γ, diag(Δ)], K_ij = γ_ij (Δ_j − Δ_i).
pub(crate) fn connection(gamma: &CMat, delta: &[C64]) -> CMat {
    let n = gamma.nrows();
    CMat::from_fn(n, n, |i, j| if i == j { C64::new(0.0, 0.0) } else { gamma[(i, j)] * (delta[j] - delta[i]) })
}

/// Ψ₀ ← Ψ₀ (Ψ₀ᵗΨ₀)^{−1/2}, via the binomial series (Ψ₀ must already be close to orthogonal).
fn polar_project(psi0: &mut CMat) -> Result<()> {
    let n = psi0.nrows();
    let x = psi0.transpose() * &*psi0 - linalg::identity(n);
    let norm = linalg::max_abs(&x) * n as f64;
    if norm >= 0.5 {
        return Err(DegorError::ToleranceExceeded { what: "Ψ₀ too far from orthogonal to project".into(), value: norm, tol: 0.5 });
    }
    let mut term = linalg::identity(n);
    let mut sum = term.clone();
    let mut coef = 1.0;
    for k in 1..60 {
        coef *= (-0.5 - (k as f64 - 1.0)) / k as f64;
        term = &term * &x;
        let add = &term * C64::new(coef, 0.0);
        let small = linalg::max_abs(&add) < 1e-18;
        sum += add;
        if small {
            break;
        }
    }
    *psi0 = &*psi0 * sum;
    Ok(())
}

/// Transport of Ψ₀ alone: ∂Ψ₀/∂u_k = [γ, E_kk] Ψ₀.
pub fn integrate_psi0<F: GammaField + ?Sized>(field: &F, path: &PathInU, psi0_init: &CMat) -> Result<CMat> {
    check_orthogonal(psi0_init, 1e-12)?;
    if psi0_init.nrows() != field.dim() {
        return Err(DegorError::BadDimensions("Ψ₀ size does not match the field".into()));
    }
    let out = rk4_polyline(
        &path.waypoints,
        path.steps_per_segment,
        vec![psi0_init.clone()],
        |u| field.eval(u),
        |g, delta, y| vec![connection(g, delta) * &y[0]],
        |_, _| Ok(()),
    )?;
    let psi0 = out.into_iter().next().expect("one state matrix");
    let drift = ladder_defect(std::slice::from_ref(&psi0), 0);
    if drift > DRIFT_FAIL_TOL {
        return Err(DegorError::ToleranceExceeded { what: "Ψ₀ orthogonality drift".into(), value: drift, tol: DRIFT_FAIL_TOL });
    }
    Ok(psi0)
}

/// The hierarchy with Ψ₀ = Id, Ψ_d = 0 at the start of the path.
pub fn integrate_hierarchy<F: GammaField + ?Sized>(field: &F, path: &PathInU, order: usize) -> Result<WaveJet> {
    let n = field.dim();
    integrate_hierarchy_from(field, path, order, &linalg::identity(n), IntegratorOptions::default())
}

/// The hierarchy with an arbitrary orthogonal Ψ₀ and Ψ_d = 0 (d ≥ 1) at the start.
pub fn integrate_hierarchy_from<F: GammaField + ?Sized>(
    field: &F,
    path: &PathInU,
    order: usize,
    psi0_init: &CMat,
    opts: IntegratorOptions,
) -> Result<WaveJet> {
    let n = field.dim();
    check_orthogonal(psi0_init, 1e-12)?;
    if psi0_init.nrows() != n || path.start().dim() != n {
        return Err(DegorError::BadDimensions("path, Ψ₀ and field disagree on n".into()));
    }
    let mut init = vec![psi0_init.clone()];
    init.extend((0..order).map(|_| CMat::zeros(n, n)));

    let psi = rk4_polyline(
        &path.waypoints,
        path.steps_per_segment,
        init,
        |u| field.eval(u),
        |g, delta, y| {
            let k = connection(g, delta);
            let scale = linalg::diag(delta);
            (0..y.len())
                .map(|d| {
                    let mut out = &k * &y[d];
                    if d > 0 {
                        out += &scale * &y[d - 1];
                    }
                    out
                })
                .collect()
        },
        |step, state| match opts.reorthonormalize_every {
            Some(every) if every > 0 && step % every == 0 => polar_project(&mut state[0]),
            _ => Ok(()),
        },
    )?;
    let jet = WaveJet { psi, at: path.end().clone() };
    let drift = jet.max_orthogonality_defect();
    if drift > DRIFT_FAIL_TOL {
        return Err(DegorError::ToleranceExceeded { what: "orthogonality ladder drift".into(), value: drift, tol: DRIFT_FAIL_TOL });
    }
    Ok(jet)
}

/// How to produce a jet at an arbitrary point: straight path from the field's
/// base point with a fixed number of steps (fixed so that finite differences
/// of the endpoint see a smooth discretization error).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JetSource {
    pub order: usize,
    pub steps: usize,
}

impl JetSource {
    pub fn jet_at<F: GammaField + ?Sized>(&self, field: &F, u: &Point) -> Result<WaveJet> {
        let path = PathInU::straight(&field.base_point(), u, self.steps);
        integrate_hierarchy(field, &path, self.order)
    }
}

/// C = Ψ₀ᵗ Ψ₁.
pub fn c_matrix(jet: &WaveJet) -> Result<CMat> {
    jet.require_order(1)?;
    Ok(jet.psi[0].transpose() * &jet.psi[1])
}

/// C·𝟙.
pub fn flat_coordinates(jet: &WaveJet) -> Result<Vec<C64>> {
    let c = c_matrix(jet)?;
    Ok(c.row_iter().map(|row| row.iter().sum()).collect())
}

/// ½ · 𝟙ᵗ Ψ₀ᵗ (−Ψ₃Ψ₀ᵗ + Ψ₂Ψ₁ᵗ) Ψ₀ 𝟙.
pub fn prepotential(jet: &WaveJet) -> Result<C64> {
    jet.require_order(3)?;
    let p = &jet.psi;
    let inner = -(&p[3] * p[0].transpose()) + &p[2] * p[1].transpose();
    let m = p[0].transpose() * inner * &p[0];
    Ok(m.iter().sum::<C64>() * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutativityReport {
    /// max_k ‖∂_k C − Ψ₀ᵗ E_kk Ψ₀‖
    pub derivative_defect: f64,
    /// max_{k,l} ‖[∂_k C, ∂_l C]‖
    pub commutator_defect: f64,
}

impl CommutativityReport {
    pub fn max(&self) -> f64 {
        self.derivative_defect.max(self.commutator_defect)
    }
}

pub fn commutativity_report<F: GammaField + ?Sized>(field: &F, source: JetSource, u: &Point, h: f64) -> Result<CommutativityReport> {
    let n = field.dim();
    let src = JetSource { order: source.order.max(1), ..source };
    let psi0 = src.jet_at(field, u)?.psi[0].clone();
    let dc = (0..n)
        .map(|k| crate::de::central_diff(|p| c_matrix(&src.jet_at(field, p)?), u, k, h))
        .collect::<Result<Vec<_>>>()?;
    let mut derivative_defect = 0.0_f64;
    for (k, d) in dc.iter().enumerate() {
        let expected = psi0.transpose() * linalg::unit_kk(n, k) * &psi0;
        derivative_defect = derivative_defect.max(linalg::max_abs_diff(d, &expected));
    }
    let mut commutator_defect = 0.0_f64;
    for k in 0..n {
        for l in k + 1..n {
            commutator_defect = commutator_defect.max(linalg::max_abs(&linalg::commutator(&dc[k], &dc[l])));
        }
    }
    Ok(CommutativityReport { derivative_defect, commutator_defect })
}

/// max of both parts of [`commutativity_report`].
pub fn commutativity_defect<F: GammaField + ?Sized>(field: &F, source: JetSource, u: &Point, h: f64) -> Result<f64> {
    Ok(commutativity_report(field, source, u, h)?.max())
}
