//! Dense quaternion matrices stored as four real component planes.

use crate::error::{Error, Result};
use crate::quaternion::Quaternion;
use crate::qsvd;

/// `A = A_r + A_i·i + A_j·j + A_k·k`, each plane row-major with `rows × cols` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    planes: [Vec<f64>; 4],
}

/// Plain real matrix, row-major. Used for element-wise moduli.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RealMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Sum of entry moduli.
    L1,
    /// Largest entry modulus.
    Linf,
    Fro,
    /// Largest singular value.
    Spectral,
    /// Sum of singular values.
    Nuclear,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        QMatrix {
            rows,
            cols,
            planes: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n, n);
        for d in 0..n {
            m.planes[0][d * n + d] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut m = QMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Builds a matrix from its four planes. All planes must hold `rows * cols` values.
    pub fn from_planes(rows: usize, cols: usize, planes: [Vec<f64>; 4]) -> Result<Self> {
        let n = rows * cols;
        for p in &planes {
            if p.len() != n {
                return Err(Error::dims(format!("{n} plane entries"), format!("{}", p.len())));
            }
        }
        Ok(QMatrix { rows, cols, planes })
    }

    /// Purely imaginary matrix from three real planes.
    pub fn from_imaginary(rows: usize, cols: usize, i: Vec<f64>, j: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        QMatrix::from_planes(rows, cols, [vec![0.0; rows * cols], i, j, k])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Component planes in `r, i, j, k` order.
    pub fn planes(&self) -> &[Vec<f64>; 4] {
        &self.planes
    }

    pub fn planes_mut(&mut self) -> &mut [Vec<f64>; 4] {
        &mut self.planes
    }

    pub fn into_planes(self) -> [Vec<f64>; 4] {
        self.planes
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Quaternion {
        let n = r * self.cols + c;
        self.at(n)
    }

    /// Entry by flat row-major index.
    #[inline]
    pub fn at(&self, n: usize) -> Quaternion {
        Quaternion::new(self.planes[0][n], self.planes[1][n], self.planes[2][n], self.planes[3][n])
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, q: Quaternion) {
        let n = r * self.cols + c;
        self.set_at(n, q);
    }

    #[inline]
    pub fn set_at(&mut self, n: usize, q: Quaternion) {
        self.planes[0][n] = q.r;
        self.planes[1][n] = q.i;
        self.planes[2][n] = q.j;
        self.planes[3][n] = q.k;
    }

    fn check_same_shape(&self, other: &QMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }

    /// Entry-wise map over quaternions.
    pub fn map(&self, mut f: impl FnMut(Quaternion) -> Quaternion) -> QMatrix {
        let mut out = QMatrix::zeros(self.rows, self.cols);
        for n in 0..self.len() {
            out.set_at(n, f(self.at(n)));
        }
        out
    }

    /// `self + s·other`, plane by plane.
    pub fn axpy(&self, s: f64, other: &QMatrix) -> Result<QMatrix> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (dst, src) in out.planes.iter_mut().zip(other.planes.iter()) {
            for (d, x) in dst.iter_mut().zip(src) {
                *d += s * x;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &QMatrix) -> Result<QMatrix> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &QMatrix) -> Result<QMatrix> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, s: f64) -> QMatrix {
        let mut out = self.clone();
        for p in out.planes.iter_mut() {
            for x in p.iter_mut() {
                *x *= s;
            }
        }
        out
    }

    /// Quaternion matrix product `self · other`.
    pub fn matmul(&self, other: &QMatrix) -> Result<QMatrix> {
        if self.cols != other.rows {
            return Err(Error::dims(
                format!("{} rows on the right factor", self.cols),
                format!("{}", other.rows),
            ));
        }
        let (m, p, n) = (self.rows, self.cols, other.cols);
        let [ar, ai, aj, ak] = &self.planes;
        let [br, bi, bj, bk] = &other.planes;
        let mut out = QMatrix::zeros(m, n);
        let [or, oi, oj, ok] = &mut out.planes;
        for r in 0..m {
            for t in 0..p {
                let a = r * p + t;
                let (xr, xi, xj, xk) = (ar[a], ai[a], aj[a], ak[a]);
                let brow = t * n;
                let orow = r * n;
                for c in 0..n {
                    let b = brow + c;
                    let o = orow + c;
                    let (yr, yi, yj, yk) = (br[b], bi[b], bj[b], bk[b]);
                    or[o] += xr * yr - xi * yi - xj * yj - xk * yk;
                    oi[o] += xr * yi + xi * yr + xj * yk - xk * yj;
                    oj[o] += xr * yj - xi * yk + xj * yr + xk * yi;
                    ok[o] += xr * yk + xi * yj - xj * yi + xk * yr;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose `Aᴴ`.
    pub fn hermitian(&self) -> QMatrix {
        QMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// Plain transpose, without conjugation.
    pub fn transpose(&self) -> QMatrix {
        QMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Real part of `Tr(Aᴴ B)`. The trace of `Aᴴ A` is real, so `inner(A, A) = ‖A‖_F²`.
    pub fn inner(&self, other: &QMatrix) -> Result<Quaternion> {
        self.check_same_shape(other)?;
        let mut acc = Quaternion::ZERO;
        for n in 0..self.len() {
            acc += self.at(n).conj() * other.at(n);
        }
        Ok(acc)
    }

    pub fn fro_norm_sqr(&self) -> f64 {
        self.planes.iter().flat_map(|p| p.iter()).map(|x| x * x).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sqr().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        (0..self.len()).map(|n| self.at(n).abs()).sum()
    }

    pub fn linf_norm(&self) -> f64 {
        (0..self.len()).map(|n| self.at(n).abs()).fold(0.0, f64::max)
    }

    /// Matrix norms. Spectral and nuclear norms go through the quaternion SVD.
    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        Ok(match kind {
            NormKind::L1 => self.l1_norm(),
            NormKind::Linf => self.linf_norm(),
            NormKind::Fro => self.fro_norm(),
            NormKind::Spectral => qsvd::singular_values(self)?.first().copied().unwrap_or(0.0),
            NormKind::Nuclear => qsvd::singular_values(self)?.iter().sum(),
        })
    }

    /// Largest modulus of the real plane. Zero iff the matrix is purely imaginary.
    pub fn max_real_abs(&self) -> f64 {
        self.planes[0].iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_pure(&self) -> bool {
        self.max_real_abs() == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.planes.iter().all(|p| p.iter().all(|x| x.is_finite()))
    }

    /// Column `c` as a quaternion vector.
    pub fn column(&self, c: usize) -> Vec<Quaternion> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[Quaternion]) {
        for (r, q) in v.iter().enumerate() {
            self.set(r, c, *q);
        }
    }

    /// Copy of the block with top-left corner `(r0, c0)` and size `rows × cols`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> QMatrix {
        let mut out = QMatrix::zeros(rows, cols);
        for (dst, src) in out.planes.iter_mut().zip(self.planes.iter()) {
            for r in 0..rows {
                let s = (r0 + r) * self.cols + c0;
                dst[r * cols..(r + 1) * cols].copy_from_slice(&src[s..s + cols]);
            }
        }
        out
    }

    /// Writes `b` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, b: &QMatrix) {
        for (dst, src) in self.planes.iter_mut().zip(b.planes.iter()) {
            for r in 0..b.rows {
                let d = (r0 + r) * self.cols + c0;
                dst[d..d + b.cols].copy_from_slice(&src[r * b.cols..(r + 1) * b.cols]);
            }
        }
    }
}

/// Element-wise moduli `[|a_ij|]`.
pub fn abs_q(a: &QMatrix) -> RealMatrix {
    RealMatrix {
        rows: a.rows,
        cols: a.cols,
        data: (0..a.len()).map(|n| a.at(n).abs()).collect(),
    }
}

/// Element-wise `a_ij / |a_ij|`, zero where the entry is exactly zero.
pub fn sign_q(a: &QMatrix) -> QMatrix {
    a.map(Quaternion::sign)
}

/// Element-wise soft thresholding of the moduli: `signQ(a)·max(|a| − τ, 0)`.
pub fn shrink_q(a: &QMatrix, tau: f64) -> Result<QMatrix> {
    if !(tau > 0.0) {
        return Err(Error::param("tau", format!("shrinkage threshold must be positive, got {tau}")));
    }
    Ok(shrink_unchecked(a, tau))
}

pub(crate) fn shrink_unchecked(a: &QMatrix, tau: f64) -> QMatrix {
    let mut out = QMatrix::zeros(a.rows, a.cols);
    for n in 0..a.len() {
        let q = a.at(n);
        let m = q.abs();
        if m > tau {
            out.set_at(n, q.scale((m - tau) / m));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_qmatrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_qmatrix(&mut rng, 4, 3);
        let p = a.matmul(&QMatrix::identity(3)).unwrap();
        assert!(p.sub(&a).unwrap().fro_norm() < 1e-14);
    }

    #[test]
    fn scalar_units_lift() {
        let ii = QMatrix::identity(3).map(|q| q * Quaternion::I);
        let jj = QMatrix::identity(3).map(|q| q * Quaternion::J);
        let kk = QMatrix::identity(3).map(|q| q * Quaternion::K);
        assert_eq!(ii.matmul(&jj).unwrap(), kk);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = QMatrix::zeros(3, 2);
        let b = QMatrix::zeros(3, 2);
        assert!(matches!(a.matmul(&b), Err(Error::DimensionMismatch { .. })));
    }

    /// Real 4x4-block representation: `a` acts on coefficient vectors by left multiplication.
    fn real_embedding(a: &QMatrix) -> Vec<Vec<f64>> {
        let (m, n) = a.shape();
        let mut out = vec![vec![0.0; 4 * n]; 4 * m];
        for r in 0..m {
            for c in 0..n {
                let q = a.get(r, c);
                let blk = [
                    [q.r, -q.i, -q.j, -q.k],
                    [q.i, q.r, -q.k, q.j],
                    [q.j, q.k, q.r, -q.i],
                    [q.k, -q.j, q.i, q.r],
                ];
                for (br, row) in blk.iter().enumerate() {
                    for (bc, v) in row.iter().enumerate() {
                        out[4 * r + br][4 * c + bc] = *v;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matmul_matches_real_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_qmatrix(&mut rng, 3, 2);
        let b = random_qmatrix(&mut rng, 2, 2);
        let ea = real_embedding(&a);
        let eb = real_embedding(&b);
        let ep = real_embedding(&a.matmul(&b).unwrap());
        for r in 0..12 {
            for c in 0..8 {
                let v: f64 = (0..8).map(|t| ea[r][t] * eb[t][c]).sum();
                assert!((v - ep[r][c]).abs() < 1e-12, "({r},{c}) {v} vs {}", ep[r][c]);
            }
        }
    }

    #[test]
    fn hermitian_examples() {
        assert_eq!(QMatrix::identity(3).hermitian(), QMatrix::identity(3));
        let one = QMatrix::from_fn(1, 1, |_, _| Quaternion::I);
        assert_eq!(one.hermitian().get(0, 0), -Quaternion::I);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_qmatrix(&mut rng, 3, 2);
        let h = a.hermitian();
        assert_eq!(h.shape(), (2, 3));
        for r in 0..3 {
            for c in 0..2 {
                assert_eq!(h.get(c, r), a.get(r, c).conj());
            }
        }
        assert_eq!(h.hermitian(), a);
    }

    #[test]
    fn norm_examples() {
        let z = QMatrix::zeros(3, 4);
        for kind in [NormKind::L1, NormKind::Linf, NormKind::Fro, NormKind::Spectral, NormKind::Nuclear] {
            assert_eq!(z.norm(kind).unwrap(), 0.0);
        }
        let a = QMatrix::from_fn(1, 1, |_, _| Quaternion::new(1.0, 1.0, 1.0, 1.0));
        assert_eq!(a.norm(NormKind::Fro).unwrap(), 2.0);
        assert_eq!(a.norm(NormKind::L1).unwrap(), 2.0);
        assert_eq!(a.norm(NormKind::Linf).unwrap(), 2.0);
    }

    #[test]
    fn abs_sign_examples() {
        let a = QMatrix::from_fn(1, 2, |_, c| {
            if c == 0 {
                Quaternion::pure(3.0, 4.0, 0.0)
            } else {
                Quaternion::ZERO
            }
        });
        let m = abs_q(&a);
        assert_eq!(m.data, vec![5.0, 0.0]);
        let s = sign_q(&a);
        assert_eq!(s.get(0, 1), Quaternion::ZERO);
        assert!((s.get(0, 0).abs() - 1.0).abs() < 1e-15);
        let k2 = QMatrix::from_fn(1, 1, |_, _| Quaternion::pure(0.0, 0.0, 2.0));
        assert_eq!(sign_q(&k2).get(0, 0), Quaternion::K);
    }

    #[test]
    fn shrink_examples() {
        let a = QMatrix::from_fn(1, 2, |_, c| {
            if c == 0 {
                Quaternion::pure(3.0, 4.0, 0.0)
            } else {
                Quaternion::new(1.0, 1.0, 0.0, 0.0)
            }
        });
        let s = shrink_q(&a, 2.0).unwrap();
        let e = s.get(0, 0);
        assert!((e.abs() - 3.0).abs() < 1e-14);
        assert!((e.i / e.j - 0.75).abs() < 1e-14);
        assert_eq!(s.get(0, 1), Quaternion::ZERO);
        assert!(shrink_q(&a, 0.0).is_err());
        assert!(shrink_q(&a, -1.0).is_err());
    }

    /// Dense grid search over a 1x1 instance: the shrinkage is the minimizer of
    /// `τ|s| + ½|s − a|²`. The minimizer lies on the ray through `a`, so the
    /// search scans signed multiples of `a/|a|` and a perpendicular offset.
    #[test]
    fn shrink_is_the_proximal_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_qmatrix(&mut rng, 1, 1);
            let tau = 0.3 + 0.5 * rand::Rng::random::<f64>(&mut rng);
            let q = a.get(0, 0);
            let dir = q.sign();
            let perp = Quaternion::new(-dir.i, dir.r, -dir.k, dir.j);
            let objective = |s: Quaternion| tau * s.abs() + 0.5 * (s - q).norm_sqr();
            let mut best = (f64::INFINITY, Quaternion::ZERO);
            let steps = 2000;
            let span = q.abs() + 1.0;
            for t in 0..=steps {
                let along = -span + 2.0 * span * t as f64 / steps as f64;
                for p in -5..=5 {
                    let s = dir.scale(along) + perp.scale(p as f64 * 0.01);
                    let v = objective(s);
                    if v < best.0 {
                        best = (v, s);
                    }
                }
            }
            let prox = shrink_q(&a, tau).unwrap().get(0, 0);
            assert!(objective(prox) <= best.0 + 1e-12);
            assert!((prox - best.1).abs() <= 2.0 * span / steps as f64 + 1e-12);
        }
    }

    fn qm(rows: usize, cols: usize) -> impl Strategy<Value = QMatrix> {
        proptest::collection::vec(-5.0..5.0f64, rows * cols * 4).prop_map(move |v| {
            let n = rows * cols;
            QMatrix::from_planes(
                rows,
                cols,
                [v[..n].to_vec(), v[n..2 * n].to_vec(), v[2 * n..3 * n].to_vec(), v[3 * n..].to_vec()],
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn fro_equals_inner(a in qm(3, 4)) {
            let ip = a.inner(&a).unwrap();
            let f2 = a.fro_norm_sqr();
            prop_assert!((ip.r - f2).abs() <= crate::tol::ALGEBRA * f2.max(1.0));
            prop_assert!(ip.i.abs() + ip.j.abs() + ip.k.abs() <= crate::tol::ALGEBRA * f2.max(1.0));
            let via_moduli: f64 = abs_q(&a).data.iter().map(|m| m * m).sum();
            prop_assert!((via_moduli - f2).abs() <= crate::tol::ALGEBRA * f2.max(1.0));
        }

        #[test]
        fn shrink_is_nonexpansive(a in qm(3, 3), b in qm(3, 3), tau in 0.01..4.0f64) {
            let d = shrink_q(&a, tau).unwrap().sub(&shrink_q(&b, tau).unwrap()).unwrap().fro_norm();
            prop_assert!(d <= a.sub(&b).unwrap().fro_norm() + 1e-12);
        }

        #[test]
        fn sign_times_abs_reconstructs(a in qm(2, 5)) {
            let s = sign_q(&a);
            let m = abs_q(&a);
            for n in 0..a.len() {
                let back = s.at(n).scale(m.data[n]);
                prop_assert!((back - a.at(n)).abs() <= 1e-13 * (1.0 + m.data[n]));
                let unit = s.at(n).abs();
                prop_assert!(unit == 0.0 || (unit - 1.0).abs() < 1e-14);
            }
        }
    }
}
