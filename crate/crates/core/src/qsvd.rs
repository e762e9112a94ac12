//! Quaternion singular value decomposition and the spectral operators built on it.
//!
//! Everything is computed through the complex adjoint
//! `χ(A) = [[A₁, A₂], [−conj(A₂), conj(A₁)]]` of `A = A₁ + A₂·j`, whose singular
//! values are those of `A`, each repeated twice. A quaternion vector
//! `q = q₁ + q₂·j` corresponds to the complex vector `[q₁; −conj(q₂)]`, the first
//! column of `χ(q)`; this map is right-linear and sends `A·v` to `χ(A)·c(v)`, so
//! singular vectors of `χ(A)` lift directly to quaternion singular vectors.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::qmatrix::QMatrix;
use crate::quaternion::Quaternion;
use crate::tol;

#[derive(Debug, Clone)]
pub struct QSvdResult {
    /// `n₁ × n₁` unitary.
    pub u: QMatrix,
    /// `min(n₁, n₂)` singular values, nonincreasing.
    pub sigma: Vec<f64>,
    /// `n₂ × n₂` unitary.
    pub v: QMatrix,
}

impl QSvdResult {
    /// `U·diag(Σ)·Vᴴ`.
    pub fn reconstruct(&self) -> QMatrix {
        let (n1, n2) = (self.u.rows(), self.v.rows());
        let mut us = QMatrix::zeros(n1, n2);
        for (c, s) in self.sigma.iter().enumerate() {
            for r in 0..n1 {
                us.set(r, c, self.u.get(r, c).scale(*s));
            }
        }
        us.matmul(&self.v.hermitian()).expect("shapes agree by construction")
    }
}

/// The `2n₁ × 2n₂` complex adjoint of `a`.
pub fn complex_adjoint(a: &QMatrix) -> Mat<c64> {
    let (n1, n2) = a.shape();
    let [pr, pi, pj, pk] = a.planes();
    Mat::from_fn(2 * n1, 2 * n2, |r, c| {
        let (br, bc) = (r / n1.max(1), c / n2.max(1));
        let (rr, cc) = (r % n1.max(1), c % n2.max(1));
        let n = rr * n2 + cc;
        match (br, bc) {
            (0, 0) => c64::new(pr[n], pi[n]),
            (0, 1) => c64::new(pj[n], pk[n]),
            (1, 0) => c64::new(-pj[n], pk[n]),
            _ => c64::new(pr[n], -pi[n]),
        }
    })
}

/// Quaternion vector whose complex image is column `col` of `m`.
fn lift_column(m: MatRef<'_, c64>, col: usize) -> Vec<Quaternion> {
    let n = m.nrows() / 2;
    (0..n)
        .map(|r| {
            let x = m[(r, col)];
            let y = m[(r + n, col)];
            Quaternion::new(x.re, x.im, -y.re, y.im)
        })
        .collect()
}

/// Thin SVD `chi = W·diag(s)·Zᴴ`.
struct ThinSvd {
    s: Vec<f64>,
    w: Mat<c64>,
    z: Mat<c64>,
}

fn thin_from(m: &Mat<c64>, scale: f64) -> Option<ThinSvd> {
    let svd = m.thin_svd().ok()?;
    Some(ThinSvd {
        s: svd.S().column_vector().iter().map(|x| x.re * scale).collect(),
        w: svd.U().to_owned(),
        z: svd.V().to_owned(),
    })
}

/// The exactly paired spectrum of an adjoint occasionally stalls the
/// bidiagonal SVD kernel. Fallbacks: SVD of the triangular factor of a QR
/// decomposition, then SVD of slightly rescaled copies.
fn adjoint_svd(chi: &Mat<c64>) -> Result<ThinSvd> {
    if let Some(t) = thin_from(chi, 1.0) {
        return Ok(t);
    }
    if chi.nrows() >= chi.ncols() {
        let qr = chi.qr();
        let q = qr.compute_thin_Q();
        if let Some(t) = thin_from(&qr.thin_R().to_owned(), 1.0) {
            return Ok(ThinSvd { w: &q * &t.w, ..t });
        }
    } else {
        let qr = chi.adjoint().qr();
        let q = qr.compute_thin_Q();
        if let Some(t) = thin_from(&qr.thin_R().to_owned(), 1.0) {
            // chi = Rᴴ·Qᴴ = (Z_R·Σ·W_Rᴴ)·Qᴴ
            return Ok(ThinSvd { s: t.s, w: t.z, z: &q * &t.w });
        }
    }
    for f in [0.7, 1.3, 0.37] {
        let m = Mat::from_fn(chi.nrows(), chi.ncols(), |r, c| chi[(r, c)] * f);
        if let Some(t) = thin_from(&m, 1.0 / f) {
            return Ok(t);
        }
    }
    Err(Error::Numerical("complex SVD did not converge".into()))
}

/// Deduplicates the paired singular values of the complex adjoint.
fn dedup_pairs(s: &[f64]) -> Result<Vec<f64>> {
    let top = s.first().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(s.len() / 2);
    for pair in s.chunks(2) {
        if let [a, b] = pair {
            if (a - b).abs() > tol::SVD_PAIRING * top {
                return Err(Error::Numerical(format!(
                    "adjoint singular values {a} and {b} do not pair (largest {top})"
                )));
            }
            out.push(*a);
        }
    }
    Ok(out)
}

/// Singular values of `a`, nonincreasing, `min(n₁, n₂)` of them.
pub fn singular_values(a: &QMatrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let chi = complex_adjoint(a);
    let s = match chi.singular_values() {
        Ok(s) => s,
        Err(_) => adjoint_svd(&chi)?.s,
    };
    dedup_pairs(&s)
}

// Quaternion vector helpers for the Gram-Schmidt passes.

fn dot(p: &[Quaternion], v: &[Quaternion]) -> Quaternion {
    p.iter().zip(v).fold(Quaternion::ZERO, |acc, (x, y)| acc + x.conj() * *y)
}

fn vnorm(v: &[Quaternion]) -> f64 {
    v.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
}

/// `v ← v − p·coef`.
fn sub_scaled(v: &mut [Quaternion], p: &[Quaternion], coef: Quaternion) {
    for (x, y) in v.iter_mut().zip(p) {
        *x -= *y * coef;
    }
}

fn scale_vec(v: &mut [Quaternion], s: f64) {
    for x in v.iter_mut() {
        *x = x.scale(s);
    }
}

/// Full quaternion SVD `A = U·Σ·Vᴴ`.
pub fn qsvd(a: &QMatrix) -> Result<QSvdResult> {
    let (n1, n2) = a.shape();
    if n1 < n2 {
        let t = qsvd(&a.hermitian())?;
        return Ok(QSvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    if n2 == 0 {
        return Ok(QSvdResult {
            u: QMatrix::identity(n1),
            sigma: Vec::new(),
            v: QMatrix::zeros(0, 0),
        });
    }

    let chi = complex_adjoint(a);
    let svd = adjoint_svd(&chi)?;
    let s = svd.s.clone();
    let sigma = dedup_pairs(&s)?;
    let top = sigma[0];
    let z = svd.z.as_ref();

    // Pivoted Gram-Schmidt inside each cluster of (numerically) equal singular
    // values picks an orthonormal quaternion basis out of the 2m complex vectors.
    let mut vs: Vec<Vec<Quaternion>> = Vec::with_capacity(n2);
    let mut start = 0;
    while start < n2 {
        let mut end = start + 1;
        while end < n2 && sigma[end - 1] - sigma[end] <= tol::SVD_CLUSTER * top {
            end += 1;
        }
        let mut cand: Vec<Vec<Quaternion>> = (2 * start..2 * end).map(|c| lift_column(z, c)).collect();
        for _ in start..end {
            for cv in cand.iter_mut() {
                orthogonalize(cv, &vs);
            }
            let (best, nrm) = argmax_norm(&cand);
            if !(nrm > 0.1) {
                return Err(Error::Numerical(
                    "could not lift an orthonormal quaternion basis from the adjoint SVD".into(),
                ));
            }
            let mut cv = cand.swap_remove(best);
            scale_vec(&mut cv, 1.0 / nrm);
            vs.push(cv);
        }
        start = end;
    }

    let mut v = QMatrix::zeros(n2, n2);
    for (c, col) in vs.iter().enumerate() {
        v.set_column(c, col);
    }

    // Left vectors `A·v/σ`; columns belonging to (numerically) zero singular
    // values are filled with an orthonormal complement.
    let av = a.matmul(&v)?;
    let mut ucols: Vec<Option<Vec<Quaternion>>> = (0..n2)
        .map(|c| {
            (sigma[c] > tol::SVD_NULL * top).then(|| {
                let mut col = av.column(c);
                scale_vec(&mut col, 1.0 / sigma[c]);
                col
            })
        })
        .collect();
    ucols.resize(n1, None);
    let ucols = orthonormal_completion(ucols, n1);
    let mut u = QMatrix::zeros(n1, n1);
    for (c, col) in ucols.iter().enumerate() {
        u.set_column(c, col);
    }
    Ok(QSvdResult { u, sigma, v })
}

/// Two passes of modified Gram-Schmidt of `v` against the orthonormal `basis`.
fn orthogonalize(v: &mut [Quaternion], basis: &[Vec<Quaternion>]) {
    for _pass in 0..2 {
        for p in basis {
            let coef = dot(p, v);
            sub_scaled(v, p, coef);
        }
    }
}

fn argmax_norm(cand: &[Vec<Quaternion>]) -> (usize, f64) {
    cand.iter()
        .enumerate()
        .map(|(i, v)| (i, vnorm(v)))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Orthonormalizes the present columns in order; empty slots (and columns that
/// turn out dependent) are filled with standard basis vectors of largest residual.
fn orthonormal_completion(cols: Vec<Option<Vec<Quaternion>>>, n: usize) -> Vec<Vec<Quaternion>> {
    let mut done: Vec<Vec<Quaternion>> = Vec::with_capacity(n);
    let mut slots: Vec<usize> = Vec::new();
    let mut placed: Vec<Option<Vec<Quaternion>>> = vec![None; cols.len()];
    for (c, col) in cols.into_iter().enumerate() {
        match col {
            Some(mut v) => {
                orthogonalize(&mut v, &done);
                let nrm = vnorm(&v);
                if nrm > 0.1 {
                    scale_vec(&mut v, 1.0 / nrm);
                    done.push(v.clone());
                    placed[c] = Some(v);
                } else {
                    slots.push(c);
                }
            }
            None => slots.push(c),
        }
    }
    let mut pool: Vec<Vec<Quaternion>> = (0..n)
        .map(|e| {
            let mut v = vec![Quaternion::ZERO; n];
            v[e] = Quaternion::ONE;
            v
        })
        .collect();
    for c in slots {
        for cand in pool.iter_mut() {
            orthogonalize(cand, &done);
        }
        let (best, nrm) = argmax_norm(&pool);
        let mut v = pool.swap_remove(best);
        scale_vec(&mut v, 1.0 / nrm);
        done.push(v.clone());
        placed[c] = Some(v);
    }
    placed.into_iter().map(|v| v.expect("every slot filled")).collect()
}

/// Applies `f` to every singular value of `a` through the complex adjoint. `f`
/// must vanish on a tail of the spectrum; pairs are kept or dropped together.
fn spectral_map(a: &QMatrix, f: impl Fn(f64) -> f64) -> Result<QMatrix> {
    let (n1, n2) = a.shape();
    if a.is_empty() {
        return Ok(a.clone());
    }
    let chi = complex_adjoint(a);
    let svd = adjoint_svd(&chi)?;
    let s = svd.s.clone();
    // Whole pairs only, decided on the first value of each pair.
    let mut weights = Vec::new();
    for pair in s.chunks(2) {
        let fv = f(pair[0]);
        if fv == 0.0 {
            break;
        }
        weights.extend(pair.iter().map(|_| fv));
    }
    let keep = weights.len();
    let mut out = QMatrix::zeros(n1, n2);
    if keep == 0 {
        return Ok(out);
    }
    let w = svd.w.as_ref();
    let z = svd.z.as_ref();
    let wk = Mat::from_fn(n1, keep, |r, c| w[(r, c)] * weights[c]);
    let zk = z.subcols(0, keep);
    let top = &wk * zk.adjoint();
    let [pr, pi, pj, pk] = out.planes_mut();
    for r in 0..n1 {
        for c in 0..n2 {
            let n = r * n2 + c;
            let x = top[(r, c)];
            let y = top[(r, c + n2)];
            pr[n] = x.re;
            pi[n] = x.im;
            pj[n] = y.re;
            pk[n] = y.im;
        }
    }
    Ok(out)
}

/// Singular value thresholding `U·diag(max(σᵢ − τ, 0))·Vᴴ`, the minimizer of
/// `‖L‖_* + ‖L − A‖_F² / (2τ)`.
pub fn svt(a: &QMatrix, tau: f64) -> Result<QMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::param("tau", format!("threshold must be nonnegative, got {tau}")));
    }
    spectral_map(a, |s| (s - tau).max(0.0))
}

/// Truncation to the singular triplets with `σ > τ`, leaving those values unchanged.
pub fn approx_q(a: &QMatrix, tau: f64) -> Result<QMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::param("tau", format!("threshold must be nonnegative, got {tau}")));
    }
    spectral_map(a, |s| if s > tau { s } else { 0.0 })
}

/// Number of singular values strictly greater than `delta`.
pub fn delta_rank(a: &QMatrix, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    Ok(singular_values(a)?.iter().filter(|s| **s > delta).count())
}

/// Cumulative energy ratios `Σ_{i≤k} σᵢ² / Σ_j σ_j²` for `k = 1..`.
pub fn accumulation_energy(a: &QMatrix) -> Result<Vec<f64>> {
    energy_from_sigma(&singular_values(a)?)
}

pub fn energy_from_sigma(sigma: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let mut acc = 0.0;
    Ok(sigma
        .iter()
        .map(|s| {
            acc += s * s;
            acc / total
        })
        .collect())
}

/// Accumulation energy after the first `ceil(fraction·n)` singular values,
/// clamped to `1..=energy.len()`. `n` is the count the fraction refers to:
/// `min(n₁, n₂)` for a whole image, the group size for a patched matrix.
pub fn energy_at_fraction(energy: &[f64], fraction: f64, n: usize) -> Result<f64> {
    if energy.is_empty() {
        return Err(Error::ZeroMatrix);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param("fraction", format!("must lie in (0, 1], got {fraction}")));
    }
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, energy.len());
    Ok(energy[k - 1])
}

/// Smallest `r ≥ 1` such that for every pair of rows `i ≠ j` of `V` (the columns
/// of `Vᴴ`, which carry the columns of `X = U·Σ·Vᴴ`), with `w = v_i − v_j`,
///
/// `Σ_{k<r} (σ_k² − σ_r²)|w_k|² ≥ Σ_{k>r} (σ_r² − σ_k²)|w_k|²`.
///
/// `sigma` shorter than the order of `V` is padded with zeros. The condition is
/// vacuous at `r = n`, so the result is always at most `n`.
pub fn lemma_r(v: &QMatrix, sigma: &[f64]) -> usize {
    let n = v.rows();
    if n <= 1 {
        return 1;
    }
    let sq: Vec<f64> = (0..n).map(|k| sigma.get(k).map_or(0.0, |s| s * s)).collect();
    // |w_k|² for every pair, computed once.
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            diffs.push((0..n).map(|k| (v.get(i, k) - v.get(j, k)).norm_sqr()).collect());
        }
    }
    for r in 1..n {
        let sr = sq[r - 1];
        let holds = diffs.iter().all(|w| {
            let lhs: f64 = (0..r - 1).map(|k| (sq[k] - sr) * w[k]).sum();
            let rhs: f64 = (r..n).map(|k| (sr - sq[k]) * w[k]).sum();
            lhs >= rhs
        });
        if holds {
            return r;
        }
    }
    n
}
