//! Dense complex matrix helpers on top of nalgebra.
//!
//! All transposes in this crate are plain transposes (no conjugation): the
//! orthogonality relations of the wave matrices are bilinear, not sesquilinear.

use nalgebra::DMatrix;

use crate::error::{DegorError, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMat = DMatrix<C64>;

/// `[re, im]`, the wire format of a complex scalar.
pub type Pair = [f64; 2];

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Matrix unit E_kk.
pub fn unit_kk(n: usize, k: usize) -> CMat {
    let mut e = CMat::zeros(n, n);
    e[(k, k)] = C64::new(1.0, 0.0);
    e
}

pub fn diag(v: &[C64]) -> CMat {
    CMat::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { C64::new(0.0, 0.0) })
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Returns a copy with the diagonal set to zero (the n.d. convention).
pub fn zero_diagonal(m: &CMat) -> CMat {
    let mut out = m.clone();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)] = C64::new(0.0, 0.0);
    }
    out
}

/// Entrywise max-modulus norm.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Max-modulus difference restricted to off-diagonal entries.
pub fn offdiag_max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
    }
    worst
}

/// ‖M − Mᵗ‖ in max-modulus.
pub fn symmetry_defect(m: &CMat) -> f64 {
    max_abs_diff(m, &m.transpose())
}

/// ‖M + Mᵗ‖ in max-modulus.
pub fn skew_defect(m: &CMat) -> f64 {
    max_abs(&(m + m.transpose()))
}

pub fn vec_max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn det(m: &CMat) -> C64 {
    m.clone().lu().determinant()
}

pub fn try_inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

/// Determinant as `exp(ln_abs) · phase`, robust against overflow for large minors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub ln_abs: f64,
    /// Unit-modulus phase; zero when the matrix is exactly singular.
    pub phase: C64,
}

impl LogDet {
    pub fn of(m: &CMat) -> LogDet {
        assert!(m.is_square(), "determinant of a non-square matrix");
        if m.nrows() == 0 {
            return LogDet { ln_abs: 0.0, phase: C64::new(1.0, 0.0) };
        }
        let lu = m.clone().lu();
        let mut phase: C64 = lu.p().determinant();
        let mut ln_abs = 0.0;
        let u = lu.u();
        for i in 0..u.nrows() {
            let d = u[(i, i)];
            let a = d.norm();
            if a == 0.0 {
                return LogDet { ln_abs: f64::NEG_INFINITY, phase: C64::new(0.0, 0.0) };
            }
            ln_abs += a.ln();
            phase *= d / a;
        }
        LogDet { ln_abs, phase }
    }

    pub fn value(&self) -> C64 {
        if self.ln_abs == f64::NEG_INFINITY {
            return C64::new(0.0, 0.0);
        }
        self.phase * self.ln_abs.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    /// `self / other`, computed in log space.
    pub fn ratio(&self, other: &LogDet) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        self.phase / other.phase * (self.ln_abs - other.ln_abs).exp()
    }
}

pub fn smallest_singular_value(m: &CMat) -> f64 {
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn condition_number(m: &CMat) -> f64 {
    let svd = m.clone().svd(false, false);
    let (lo, hi) = svd
        .singular_values
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn to_pair(z: C64) -> Pair {
    [z.re, z.im]
}

pub fn from_pair(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn to_pairs(v: &[C64]) -> Vec<Pair> {
    v.iter().map(|&z| to_pair(z)).collect()
}

pub fn from_pairs(v: &[Pair]) -> Vec<C64> {
    v.iter().map(|&p| from_pair(p)).collect()
}

/// Row-major nested `[re, im]` pairs.
pub fn mat_to_rows(m: &CMat) -> Vec<Vec<Pair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| to_pair(m[(i, j)])).collect())
        .collect()
}

pub fn rows_to_mat(rows: &[Vec<Pair>]) -> Result<CMat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(DegorError::BadDimensions("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(r, c, |i, j| from_pair(rows[i][j])))
}

/// `#[serde(with = ...)]` adapters for `[re, im]` encodings.
pub mod pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{from_pair, to_pair, Pair, C64};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        to_pair(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Ok(from_pair(Pair::deserialize(d)?))
    }
}

pub mod pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{from_pairs, to_pairs, Pair, C64};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(from_pairs(&Vec::<Pair>::deserialize(d)?))
    }
}

pub mod rows {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    use super::{mat_to_rows, rows_to_mat, CMat, Pair};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        mat_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        rows_to_mat(&Vec::<Vec<Pair>>::deserialize(d)?).map_err(D::Error::custom)
    }
}

pub mod rows_vec {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    use super::{mat_to_rows, rows_to_mat, CMat, Pair};

    pub fn serialize<S: Serializer>(v: &[CMat], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(mat_to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
        Vec::<Vec<Vec<Pair>>>::deserialize(d)?
            .iter()
            .map(|m| rows_to_mat(m).map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logdet_matches_lu_determinant() {
        let m = CMat::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 * 0.1 + if i == j { 1.0 } else { 0.0 }, (i as f64) - (j as f64)));
        let ld = LogDet::of(&m);
        assert!((ld.value() - det(&m)).norm() < 1e-12 * det(&m).norm());
    }

    #[test]
    fn logdet_of_singular_is_zero() {
        let m = CMat::from_fn(3, 3, |i, _| re(i as f64));
        let ld = LogDet::of(&m);
        assert!(ld.value().norm() < 1e-12 || ld.is_zero());
    }

    #[test]
    fn rows_roundtrip() {
        let m = CMat::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        assert_eq!(rows_to_mat(&mat_to_rows(&m)).unwrap(), m);
        assert!(rows_to_mat(&[vec![[0.0, 0.0]], vec![]]).is_err());
    }
}
