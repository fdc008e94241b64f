//! Infinitesimal loop-group actions on DE solutions and the closed-form special flow.
//!
//! For r = DᵗMD with an isotropic g×n matrix D, the action of exp(ε r z⁻¹)
//! closes on the triple (γ, ω = DΨ₀ᵗ, B = DCDᵗ) and integrates to
//!
//! ```text
//! γ(ε) = γ − ωᵗ εM (1 + εBM)⁻¹ ω,   ω(ε) = (1 + εBM)⁻¹ ω,   B(ε) = (1 + εBM)⁻¹ B.
//! ```

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::de::{GammaField, Point, Provenance};
use crate::error::{DegorError, Result};
use crate::linalg::{self, CMat, Pair, C64};
use crate::ode::rk4_polyline;
use crate::wave::{connection, PathInU, WaveJet};

pub const PARITY_TOL: f64 = 1e-12;
pub const SINGULAR_DET_TOL: f64 = 1e-10;
pub const COND_WARN: f64 = 1e8;
pub const OMEGA_CONSISTENCY_TOL: f64 = 1e-7;
pub const B_SYMMETRY_TOL: f64 = 1e-7;
const DELTA_SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// r·z^{−ℓ}
    Lower,
    /// s·z^{+ℓ}
    Upper,
}

/// A Lie-algebra direction r·z^{−ℓ} or s·z^{ℓ}; the matrix is symmetric for odd ℓ
/// and skew for even ℓ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DirectionRepr", try_from = "DirectionRepr")]
pub struct DeformationDirection {
    ell: usize,
    side: Side,
    mat: CMat,
}

#[derive(Serialize, Deserialize)]
struct DirectionRepr {
    ell: usize,
    side: Side,
    mat: Vec<Vec<Pair>>,
}

impl From<DeformationDirection> for DirectionRepr {
    fn from(d: DeformationDirection) -> Self {
        DirectionRepr { ell: d.ell, side: d.side, mat: linalg::mat_to_rows(&d.mat) }
    }
}

impl TryFrom<DirectionRepr> for DeformationDirection {
    type Error = DegorError;

    fn try_from(r: DirectionRepr) -> Result<Self> {
        DeformationDirection::new(r.ell, r.side, linalg::rows_to_mat(&r.mat)?)
    }
}

impl DeformationDirection {
    pub fn new(ell: usize, side: Side, mat: CMat) -> Result<Self> {
        if ell == 0 {
            return Err(DegorError::Precondition("ℓ = 0 is not a defined direction; use ℓ ≥ 1".into()));
        }
        if !mat.is_square() {
            return Err(DegorError::BadDimensions("direction matrix must be square".into()));
        }
        let defect = if ell % 2 == 1 { linalg::symmetry_defect(&mat) } else { linalg::skew_defect(&mat) };
        if defect > PARITY_TOL {
            return Err(DegorError::ParityViolation { ell, defect });
        }
        Ok(DeformationDirection { ell, side, mat })
    }

    pub fn lower(ell: usize, mat: CMat) -> Result<Self> {
        Self::new(ell, Side::Lower, mat)
    }

    pub fn upper(ell: usize, mat: CMat) -> Result<Self> {
        Self::new(ell, Side::Upper, mat)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    fn expect_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(DegorError::Precondition(format!("expected a {side:?} direction, got {:?}", self.side)));
        }
        Ok(())
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if self.mat.nrows() != n {
            return Err(DegorError::BadDimensions(format!("direction is {}×{}, jet has n = {n}", self.mat.nrows(), self.mat.nrows())));
        }
        Ok(())
    }
}

fn sign(k: i64) -> C64 {
    C64::new(if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 }, 0.0)
}

/// n.d. Σ_{i+j=ℓ−1} (−1)^{j−1} Ψ_i r Ψ_jᵗ.
pub fn delta_gamma_r(jet: &WaveJet, dir: &DeformationDirection) -> Result<CMat> {
    dir.expect_side(Side::Lower)?;
    dir.check_n(jet.n())?;
    let ell = dir.ell;
    jet.require_order(ell - 1)?;
    let r = &dir.mat;
    let mut acc = CMat::zeros(jet.n(), jet.n());
    for i in 0..ell {
        let j = ell - 1 - i;
        acc += &jet.psi[i] * r * jet.psi[j].transpose() * sign(j as i64 - 1);
    }
    let out = linalg::zero_diagonal(&acc);
    let asym = linalg::symmetry_defect(&out);
    if asym > DELTA_SYMMETRY_TOL {
        return Err(DegorError::ToleranceExceeded { what: "δγ symmetry".into(), value: asym, tol: DELTA_SYMMETRY_TOL });
    }
    Ok(out)
}

/// Upper directions leave γ fixed.
pub fn delta_gamma_s(dir: &DeformationDirection) -> Result<CMat> {
    dir.expect_side(Side::Upper)?;
    let n = dir.mat.nrows();
    Ok(CMat::zeros(n, n))
}

/// Ψ_{ℓ+k} r − Σ_{p=1}^{ℓ} Σ_{q=0}^{ℓ−p} (−1)^{ℓ−p−q} Ψ_q r Ψ_{ℓ−p−q}ᵗ Ψ_{p+k}.
pub fn delta_psi_r(jet: &WaveJet, dir: &DeformationDirection, k: usize) -> Result<CMat> {
    dir.expect_side(Side::Lower)?;
    dir.check_n(jet.n())?;
    let ell = dir.ell;
    jet.require_order(ell + k)?;
    let (psi, r) = (&jet.psi, &dir.mat);
    let mut out = &psi[ell + k] * r;
    for p in 1..=ell {
        for q in 0..=ell - p {
            let m = ell - p - q;
            out -= &psi[q] * r * psi[m].transpose() * &psi[p + k] * sign(m as i64);
        }
    }
    Ok(out)
}

/// Ψ_{k−ℓ} s for ℓ ≤ k, zero otherwise.
pub fn delta_psi_s(jet: &WaveJet, dir: &DeformationDirection, k: usize) -> Result<CMat> {
    dir.expect_side(Side::Upper)?;
    dir.check_n(jet.n())?;
    if dir.ell > k {
        return Ok(CMat::zeros(jet.n(), jet.n()));
    }
    Ok(jet.psi(k - dir.ell)? * &dir.mat)
}

/// A rank-g matrix D with D·Dᵗ = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "IsotropicRepr", try_from = "IsotropicRepr")]
pub struct IsotropicD {
    d: CMat,
}

#[derive(Serialize, Deserialize)]
struct IsotropicRepr {
    g: usize,
    #[serde(rename = "D")]
    d: Vec<Vec<Pair>>,
}

impl From<IsotropicD> for IsotropicRepr {
    fn from(v: IsotropicD) -> Self {
        IsotropicRepr { g: v.g(), d: linalg::mat_to_rows(&v.d) }
    }
}

impl TryFrom<IsotropicRepr> for IsotropicD {
    type Error = DegorError;

    fn try_from(r: IsotropicRepr) -> Result<Self> {
        let d = linalg::rows_to_mat(&r.d)?;
        if d.nrows() != r.g {
            return Err(DegorError::BadDimensions("g does not match the rows of D".into()));
        }
        IsotropicD::new(d)
    }
}

impl IsotropicD {
    pub fn new(d: CMat) -> Result<Self> {
        let (g, n) = d.shape();
        if g == 0 || 2 * g > n {
            return Err(DegorError::BadDimensions(format!("need 1 ≤ g ≤ n/2, got g = {g}, n = {n}")));
        }
        let iso = linalg::max_abs(&(&d * d.transpose()));
        if iso > PARITY_TOL {
            return Err(DegorError::ToleranceExceeded { what: "D·Dᵗ".into(), value: iso, tol: PARITY_TOL });
        }
        let smin = linalg::smallest_singular_value(&d);
        if smin <= 1e-8 {
            return Err(DegorError::Precondition(format!("D is rank deficient (σ_min = {smin:.2e})")));
        }
        Ok(IsotropicD { d })
    }

    pub fn g(&self) -> usize {
        self.d.nrows()
    }

    pub fn n(&self) -> usize {
        self.d.ncols()
    }

    pub fn matrix(&self) -> &CMat {
        &self.d
    }
}

fn pairing_rows(n: usize, g: usize) -> Result<CMat> {
    if g == 0 || 2 * g > n {
        return Err(DegorError::BadDimensions(format!("need 1 ≤ g ≤ n/2, got g = {g}, n = {n}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut d = CMat::zeros(g, n);
    for a in 0..g {
        d[(a, 2 * a)] = C64::new(s, 0.0);
        d[(a, 2 * a + 1)] = C64::new(0.0, s);
    }
    Ok(d)
}

/// Rows (e_{2a−1} + i e_{2a})/√2 with no rotation.
pub fn canonical_isotropic_d(n: usize, g: usize) -> Result<IsotropicD> {
    IsotropicD::new(pairing_rows(n, g)?)
}

/// Rows (e_{2a−1} + i e_{2a})/√2 times a seeded random real orthogonal matrix.
pub fn make_isotropic_d(n: usize, g: usize, seed: u64) -> Result<IsotropicD> {
    let rows = pairing_rows(n, g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let (mut q, r) = gauss.qr().unpack();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    IsotropicD::new(rows * q.map(|x| C64::new(x, 0.0)))
}

/// A seeded complex symmetric g×g matrix with Frobenius norm `norm`.
pub fn random_symmetric(g: usize, seed: u64, norm: f64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = CMat::zeros(g, g);
    for i in 0..g {
        for j in i..g {
            let z = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    let f = m.norm();
    if f > 0.0 {
        m *= C64::new(norm / f, 0.0);
    }
    m
}

/// (γ, ω, B) at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TripleRepr", try_from = "TripleRepr")]
pub struct SpecialTriple {
    pub gamma: CMat,
    pub omega: CMat,
    pub b: CMat,
    pub at: Point,
}

#[derive(Serialize, Deserialize)]
struct TripleRepr {
    gamma: Vec<Vec<Pair>>,
    omega: Vec<Vec<Pair>>,
    #[serde(rename = "B")]
    b: Vec<Vec<Pair>>,
    at: Point,
}

impl From<SpecialTriple> for TripleRepr {
    fn from(t: SpecialTriple) -> Self {
        TripleRepr {
            gamma: linalg::mat_to_rows(&t.gamma),
            omega: linalg::mat_to_rows(&t.omega),
            b: linalg::mat_to_rows(&t.b),
            at: t.at,
        }
    }
}

impl TryFrom<TripleRepr> for SpecialTriple {
    type Error = DegorError;

    fn try_from(r: TripleRepr) -> Result<Self> {
        let t = SpecialTriple {
            gamma: linalg::rows_to_mat(&r.gamma)?,
            omega: linalg::rows_to_mat(&r.omega)?,
            b: linalg::rows_to_mat(&r.b)?,
            at: r.at,
        };
        t.check_shapes()?;
        Ok(t)
    }
}

impl SpecialTriple {
    pub fn n(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn g(&self) -> usize {
        self.b.nrows()
    }

    fn check_shapes(&self) -> Result<()> {
        let (n, g) = (self.n(), self.g());
        if self.gamma.shape() != (n, n) || self.b.shape() != (g, g) || self.omega.shape() != (g, n) {
            return Err(DegorError::BadDimensions("triple shapes disagree".into()));
        }
        Ok(())
    }
}

/// Integrates dω = ω[dU, γ], dB = ω dU ωᵗ together with Ψ₀ from ω = D, B = 0,
/// Ψ₀ = Id at the start of the path, and checks ω = DΨ₀ᵗ at the end.
pub fn omega_b_fields<F: GammaField + ?Sized>(field: &F, d: &IsotropicD, path: &PathInU) -> Result<SpecialTriple> {
    let n = field.dim();
    if d.n() != n || path.start().dim() != n {
        return Err(DegorError::BadDimensions("D, path and field disagree on n".into()));
    }
    let dm = d.matrix();
    let init = vec![dm.clone(), CMat::zeros(d.g(), d.g()), linalg::identity(n)];
    let out = rk4_polyline(
        &path.waypoints,
        path.steps_per_segment,
        init,
        |u| field.eval(u),
        |g, delta, y| {
            let k = connection(g, delta);
            let scaled = CMat::from_fn(y[0].nrows(), n, |a, j| y[0][(a, j)] * delta[j]);
            vec![-(&y[0] * &k), scaled * y[0].transpose(), &k * &y[2]]
        },
        |_, _| Ok(()),
    )?;
    let [omega, b, psi0]: [CMat; 3] = out.try_into().expect("three state matrices");
    let defect = linalg::max_abs_diff(&omega, &(dm * psi0.transpose()));
    if defect > OMEGA_CONSISTENCY_TOL {
        return Err(DegorError::ToleranceExceeded { what: "ω = DΨ₀ᵗ".into(), value: defect, tol: OMEGA_CONSISTENCY_TOL });
    }
    let gamma = linalg::zero_diagonal(&field.eval(path.end())?);
    Ok(SpecialTriple { gamma, omega, b, at: path.end().clone() })
}

fn check_square_sym(m: &CMat, g: usize, what: &str) -> Result<()> {
    if m.shape() != (g, g) {
        return Err(DegorError::BadDimensions(format!("{what} must be {g}×{g}")));
    }
    let s = linalg::symmetry_defect(m);
    if s > B_SYMMETRY_TOL {
        return Err(DegorError::Precondition(format!("{what} is not symmetric (defect {s:.2e})")));
    }
    Ok(())
}

fn guarded_inverse(m: &CMat) -> Result<CMat> {
    let det = linalg::det(m);
    if det.norm() < SINGULAR_DET_TOL {
        return Err(DegorError::SingularFlow { det: det.norm() });
    }
    let cond = linalg::condition_number(m);
    if cond > COND_WARN {
        log::warn!("ill-conditioned flow matrix (cond ≈ {cond:.2e})");
    }
    linalg::try_inverse(m).ok_or(DegorError::SingularFlow { det: det.norm() })
}

/// The closed-form special flow at parameter ε.
pub fn special_flow(t: &SpecialTriple, m: &CMat, eps: C64) -> Result<SpecialTriple> {
    let g = t.g();
    check_square_sym(m, g, "M")?;
    let em = m * eps;
    let x = guarded_inverse(&(linalg::identity(g) + &t.b * &em))?;
    let omega = &x * &t.omega;
    let b = &x * &t.b;
    let gamma = linalg::zero_diagonal(&(&t.gamma - t.omega.transpose() * &em * &omega));
    let asym = linalg::symmetry_defect(&b);
    if asym > B_SYMMETRY_TOL {
        return Err(DegorError::ToleranceExceeded { what: "B(ε) symmetry".into(), value: asym, tol: B_SYMMETRY_TOL });
    }
    Ok(SpecialTriple { gamma, omega, b, at: t.at.clone() })
}

/// n.d.(γ − ωᵗ(B + M)⁻¹ω).
pub fn shramchenko_form(t: &SpecialTriple, m: &CMat) -> Result<CMat> {
    check_square_sym(m, t.g(), "M")?;
    let x = guarded_inverse(&(&t.b + m))?;
    Ok(linalg::zero_diagonal(&(&t.gamma - t.omega.transpose() * x * &t.omega)))
}

/// (γ − ωᵗB⁻¹ω, B⁻¹ω, −B⁻¹), the gauge in which the flow reproduces
/// `shramchenko_form(T, −εM)`.
pub fn tilde_gauge(t: &SpecialTriple) -> Result<SpecialTriple> {
    let bi = guarded_inverse(&t.b)?;
    let omega = &bi * &t.omega;
    let gamma = linalg::zero_diagonal(&(&t.gamma - t.omega.transpose() * &omega));
    Ok(SpecialTriple { gamma, omega, b: -bi, at: t.at.clone() })
}

/// Point → (γ, ω, B) by straight-path integration from the base point with a
/// fixed step count. Results are cached per exact point.
pub struct TripleField<F> {
    field: F,
    d: IsotropicD,
    steps: usize,
    cache: Option<RwLock<HashMap<Vec<u64>, SpecialTriple>>>,
}

fn point_key(u: &Point) -> Vec<u64> {
    u.coords().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect()
}

impl<F: GammaField> TripleField<F> {
    pub fn new(field: F, d: IsotropicD, steps: usize) -> Result<Self> {
        if d.n() != field.dim() {
            return Err(DegorError::BadDimensions(format!("D has {} columns, field has n = {}", d.n(), field.dim())));
        }
        Ok(TripleField { field, d, steps: steps.max(1), cache: Some(RwLock::new(HashMap::new())) })
    }

    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn isotropic(&self) -> &IsotropicD {
        &self.d
    }

    pub fn triple_at(&self, u: &Point) -> Result<SpecialTriple> {
        let key = self.cache.as_ref().map(|_| point_key(u));
        if let (Some(c), Some(k)) = (&self.cache, &key) {
            if let Some(t) = c.read().expect("triple cache poisoned").get(k) {
                return Ok(t.clone());
            }
        }
        let path = PathInU::straight(&self.field.base_point(), u, self.steps);
        let t = omega_b_fields(&self.field, &self.d, &path)?;
        if let (Some(c), Some(k)) = (&self.cache, key) {
            c.write().expect("triple cache poisoned").insert(k, t.clone());
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    /// special_flow(T, M, ε).γ
    Special,
    /// shramchenko_form(T, M); ε is ignored.
    Shramchenko,
}

/// The deformed γ as a field over u.
pub struct DeformedField<F> {
    triples: Arc<TripleField<F>>,
    m: CMat,
    eps: C64,
    kind: FlowKind,
}

impl<F: GammaField> DeformedField<F> {
    pub fn special(triples: Arc<TripleField<F>>, m: CMat, eps: C64) -> Result<Self> {
        check_square_sym(&m, triples.d.g(), "M")?;
        Ok(DeformedField { triples, m, eps, kind: FlowKind::Special })
    }

    pub fn shramchenko(triples: Arc<TripleField<F>>, m: CMat) -> Result<Self> {
        check_square_sym(&m, triples.d.g(), "M")?;
        Ok(DeformedField { triples, m, eps: C64::new(1.0, 0.0), kind: FlowKind::Shramchenko })
    }
}

impl<F: GammaField> GammaField for DeformedField<F> {
    fn dim(&self) -> usize {
        self.triples.field.dim()
    }

    fn eval(&self, u: &Point) -> Result<CMat> {
        let t = self.triples.triple_at(u)?;
        match self.kind {
            FlowKind::Special => Ok(special_flow(&t, &self.m, self.eps)?.gamma),
            FlowKind::Shramchenko => shramchenko_form(&t, &self.m),
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Deformed
    }

    fn base_point(&self) -> Point {
        self.triples.field.base_point()
    }
}

/// Defects of the deformed triple against its two characterizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowResidual {
    /// ε-derivatives vs −ωᵗMω, −BMω, −BMB.
    pub eps_defect: f64,
    /// u-derivatives of ω(ε), B(ε) vs ω[E_kk, γ(ε)], ω E_kk ωᵗ.
    pub u_defect: f64,
}

impl FlowResidual {
    pub fn max(&self) -> f64 {
        self.eps_defect.max(self.u_defect)
    }
}

/// Central differences of the flow in ε and in u (both with step `h`).
pub fn flow_residual<F: GammaField>(triples: &TripleField<F>, m: &CMat, eps: C64, h: f64, u: &Point) -> Result<FlowResidual> {
    if h.is_nan() || h <= 0.0 {
        return Err(DegorError::Domain(format!("step must be positive, got {h}")));
    }
    let t = triples.triple_at(u)?;
    let at = special_flow(&t, m, eps)?;
    let plus = special_flow(&t, m, eps + h)?;
    let minus = special_flow(&t, m, eps - h)?;
    let inv2h = C64::new(0.5 / h, 0.0);

    let dgamma = (&plus.gamma - &minus.gamma) * inv2h;
    let domega = (&plus.omega - &minus.omega) * inv2h;
    let db = (&plus.b - &minus.b) * inv2h;
    let bm = &at.b * m;
    let eps_defect = linalg::offdiag_max_abs_diff(&dgamma, &-(at.omega.transpose() * m * &at.omega))
        .max(linalg::max_abs_diff(&domega, &-(&bm * &at.omega)))
        .max(linalg::max_abs_diff(&db, &-(&bm * &at.b)));

    let n = u.dim();
    let mut u_defect = 0.0_f64;
    for k in 0..n {
        let tp = special_flow(&triples.triple_at(&u.shifted(k, h))?, m, eps)?;
        let tm = special_flow(&triples.triple_at(&u.shifted(k, -h))?, m, eps)?;
        let dw = (&tp.omega - &tm.omega) * inv2h;
        let dbk = (&tp.b - &tm.b) * inv2h;
        let e = linalg::unit_kk(n, k);
        let expect_w = &at.omega * linalg::commutator(&e, &at.gamma);
        let expect_b = &at.omega * &e * at.omega.transpose();
        u_defect = u_defect.max(linalg::max_abs_diff(&dw, &expect_w)).max(linalg::max_abs_diff(&dbk, &expect_b));
    }
    Ok(FlowResidual { eps_defect, u_defect })
}
