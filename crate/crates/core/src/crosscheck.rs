//! Oracle-vs-formula comparisons around A = Id.
//!
//! Around the identity loop element the wave jet at u is the γ ≡ 0 jet
//! Ψ_d = diag(u^d/d!), so every infinitesimal formula can be compared with a
//! central ε-difference of the finite-section oracle, and the closed-form
//! special flow with the oracle at finite ε.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::de::{Point, TrivialField};
use crate::deform::{self, DeformationDirection, TripleField};
use crate::error::Result;
use crate::fock::{self, LoopElement, Truncation};
use crate::linalg::{self, CMat, C64};
use crate::wave::WaveJet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckParams {
    pub n: usize,
    #[serde(rename = "N")]
    pub window: usize,
    /// Step of the central ε-differences.
    pub eps_fd: f64,
    /// Parameter of the finite special-flow comparison.
    pub eps_flow: f64,
    /// Euclidean bound on the sample point u.
    pub u_radius: f64,
    pub seed: u64,
}

impl Default for CrosscheckParams {
    fn default() -> Self {
        CrosscheckParams { n: 2, window: 16, eps_fd: 1e-5, eps_flow: 0.2, u_radius: 0.2, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub defect: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckEntry {
    fn new(name: impl Into<String>, defect: f64, tol: f64) -> Self {
        CheckEntry { name: name.into(), defect, tol, pass: defect.is_finite() && defect <= tol }
    }
}

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_point(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> Point {
    let v: Vec<C64> = (0..n).map(|_| random_c(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Point::new(v.into_iter().map(|z| z * (radius / norm)).collect())
}

/// Symmetric (odd ℓ) or skew (even ℓ) random matrix with entries of modulus ≤ √2.
pub fn random_parity_matrix(n: usize, ell: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = random_c(rng);
            if ell % 2 == 1 {
                m[(i, j)] = z;
                m[(j, i)] = z;
            } else if i != j {
                m[(i, j)] = z;
                m[(j, i)] = -z;
            }
        }
    }
    m
}

/// (f(+ε) − f(−ε)) / 2ε for f(ε) = oracle(exp(ε·dir)).
fn central<F>(dir: &DeformationDirection, eps: f64, f: F) -> Result<CMat>
where
    F: Fn(&LoopElement) -> Result<CMat>,
{
    let plus = f(&LoopElement::exp_direction(dir, C64::new(eps, 0.0))?)?;
    let minus = f(&LoopElement::exp_direction(dir, C64::new(-eps, 0.0))?)?;
    Ok((plus - minus) * C64::new(0.5 / eps, 0.0))
}

fn ladder_defect(psi: &[CMat], m: usize) -> f64 {
    let mut acc = CMat::zeros(psi[0].nrows(), psi[0].ncols());
    for i in 0..=m {
        let term = psi[i].transpose() * &psi[m - i];
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    linalg::max_abs(&acc)
}

/// Runs every comparison; errors abort the run (they signal invalid parameters).
pub fn run_crosscheck(p: &CrosscheckParams) -> Result<Vec<CheckEntry>> {
    let n = p.n;
    let trunc = Truncation::new(p.window)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let u = random_point(n, p.u_radius, &mut rng);
    let jet = WaveJet::trivial(&u, 4);
    let fd_tol = 1e-6 + p.eps_fd;
    let mut out = Vec::new();

    let id = LoopElement::identity(n);
    let mut worst = 0.0_f64;
    for d in 0..=3 {
        worst = worst.max(linalg::max_abs_diff(&fock::psi_fock(&id, &u, trunc, d)?, &jet.psi[d]));
    }
    out.push(CheckEntry::new("psi_identity", worst, 1e-8));

    for ell in 1..=3 {
        let dir = DeformationDirection::lower(ell, random_parity_matrix(n, ell, &mut rng))?;
        let fd = central(&dir, p.eps_fd, |a| fock::gamma_fock(a, &u, trunc))?;
        let formula = deform::delta_gamma_r(&jet, &dir)?;
        out.push(CheckEntry::new(format!("delta_gamma_r_l{ell}"), linalg::offdiag_max_abs_diff(&fd, &formula), fd_tol));
        for k in 0..=1 {
            let fd = central(&dir, p.eps_fd, |a| fock::psi_fock(a, &u, trunc, k))?;
            let formula = deform::delta_psi_r(&jet, &dir, k)?;
            out.push(CheckEntry::new(format!("delta_psi_r_l{ell}_k{k}"), linalg::max_abs_diff(&fd, &formula), fd_tol));
        }
    }

    for ell in 1..=2 {
        let dir = DeformationDirection::upper(ell, random_parity_matrix(n, ell, &mut rng))?;
        let fd = central(&dir, p.eps_fd, |a| fock::gamma_fock(a, &u, trunc))?;
        let formula = deform::delta_gamma_s(&dir)?;
        out.push(CheckEntry::new(format!("delta_gamma_s_l{ell}"), linalg::offdiag_max_abs_diff(&fd, &formula), fd_tol));
        let mut worst = 0.0_f64;
        for k in 0..=2 {
            let fd = central(&dir, p.eps_fd, |a| fock::psi_fock(a, &u, trunc, k))?;
            worst = worst.max(linalg::max_abs_diff(&fd, &deform::delta_psi_s(&jet, &dir, k)?));
        }
        out.push(CheckEntry::new(format!("delta_psi_s_l{ell}"), worst, fd_tol));
    }

    let r = random_parity_matrix(n, 1, &mut rng) * C64::new(0.1, 0.0);
    let a = LoopElement::exp_direction(&DeformationDirection::lower(1, r)?, C64::new(1.0, 0.0))?;
    let psi = (0..=2).map(|d| fock::psi_fock(&a, &u, trunc, d)).collect::<Result<Vec<_>>>()?;
    let ortho = ladder_defect(&psi, 1).max(ladder_defect(&psi, 2));
    out.push(CheckEntry::new("psi_orthogonality", ortho, 1e-6));

    if n >= 2 {
        let d = deform::make_isotropic_d(n, 1, p.seed)?;
        let m = deform::random_symmetric(1, p.seed, 1.0);
        let r = d.matrix().transpose() * &m * d.matrix();
        let eps = C64::new(p.eps_flow, 0.0);
        let a = LoopElement::exp_direction(&DeformationDirection::lower(1, r)?, eps)?;
        let oracle = fock::gamma_fock(&a, &u, trunc)?;
        let triples = TripleField::new(TrivialField { n }, d, 8)?;
        let closed = deform::special_flow(&triples.triple_at(&u)?, &m, eps)?.gamma;
        out.push(CheckEntry::new("special_flow_finite_eps", linalg::offdiag_max_abs_diff(&oracle, &closed), 1e-6));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_green_for_n2_and_n3() {
        for n in [2, 3] {
            let entries = run_crosscheck(&CrosscheckParams { n, ..Default::default() }).unwrap();
            for e in &entries {
                assert!(e.pass, "n = {n}: {e:?}");
            }
            assert!(entries.len() >= 14);
        }
    }
}
