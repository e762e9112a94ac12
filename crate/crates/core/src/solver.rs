//! Robust quaternion matrix completion
//!
//! ```text
//! min ‖L‖_* + λ‖S‖₁   s.t.  P_Ω(L + S) = X
//! ```
//!
//! solved by ADMM on the split `L = P`, `S = Q`, `P_Ω(P + Q) = X` with
//! multipliers `Y` (for `L − P`) and `Z` (for `S − Q`). Every sub-step has a
//! closed form, see [`AdmmState::step`].

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::qmatrix::{shrink_unchecked, QMatrix};
use crate::qsvd;
use crate::tol;

/// Solver parameters. `None` selects the data-driven default.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sparsity weight. `None` uses `1/√(ρ·max(n₁, n₂))`.
    pub lambda: Option<f64>,
    /// Penalty. `None` uses `n₁n₂ / (4‖P_Ω(X)‖₁)`.
    pub mu: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: None,
            mu: None,
            max_iters: tol::SOLVER_MAX_ITERS,
            tol: tol::SOLVER_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::param("lambda", format!("must be positive, got {l}")));
            }
        }
        if let Some(m) = self.mu {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::param("mu", format!("must be positive, got {m}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// ‖L − P‖_F
    pub lp: f64,
    /// ‖S − Q‖_F
    pub sq: f64,
    /// max(‖ΔL‖_F, ‖ΔS‖_F) / max(1, ‖X‖_F) of the last iteration.
    pub change: f64,
}

#[derive(Debug, Clone)]
pub struct QmcResult {
    /// Low-rank part.
    pub l: QMatrix,
    /// Sparse part.
    pub s: QMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Residuals,
    pub lambda: f64,
    pub mu: f64,
}

/// `P_Ω(A)`: entries kept on Ω, zero elsewhere.
pub fn project(a: &QMatrix, mask: &ObservationMask) -> Result<QMatrix> {
    if a.shape() != mask.shape() {
        return Err(Error::dims(
            format!("{}x{}", mask.rows(), mask.cols()),
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    let mut out = a.clone();
    for p in out.planes_mut().iter_mut() {
        for (x, keep) in p.iter_mut().zip(mask.flags()) {
            if !keep {
                *x = 0.0;
            }
        }
    }
    Ok(out)
}

/// `λ = 1/√(ρ·n₍₁₎)` with `n₍₁₎ = max(n₁, n₂)`.
pub fn default_lambda(mask: &ObservationMask) -> Result<f64> {
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let n = mask.rows().max(mask.cols()) as f64;
    Ok(1.0 / (mask.ratio() * n).sqrt())
}

/// `μ = n₁n₂ / (4‖P_Ω(X)‖₁)`, or 1 when the observed data is identically zero.
pub fn default_mu(observed: &QMatrix) -> f64 {
    let l1 = observed.l1_norm();
    if l1 > 0.0 {
        observed.len() as f64 / (4.0 * l1)
    } else {
        1.0
    }
}

/// Singular value thresholding with threshold `tau`.
pub fn svt(a: &QMatrix, tau: f64) -> Result<QMatrix> {
    qsvd::svt(a, tau)
}

/// Full ADMM iterate. Fields are public so a state can be assembled by hand and
/// advanced one step at a time.
#[derive(Debug, Clone)]
pub struct AdmmState {
    /// Observed data, zero off Ω.
    pub x: QMatrix,
    pub mask: ObservationMask,
    pub l: QMatrix,
    pub s: QMatrix,
    pub p: QMatrix,
    pub q: QMatrix,
    pub y: QMatrix,
    pub z: QMatrix,
    pub mu: f64,
    pub lambda: f64,
}

impl AdmmState {
    /// Initial state: `L = X`, everything else zero.
    pub fn new(x: QMatrix, mask: ObservationMask, lambda: f64, mu: f64) -> Result<Self> {
        let x = project(&x, &mask)?;
        let (n1, n2) = x.shape();
        let zero = QMatrix::zeros(n1, n2);
        Ok(AdmmState {
            l: x.clone(),
            s: zero.clone(),
            p: zero.clone(),
            q: zero.clone(),
            y: zero.clone(),
            z: zero,
            x,
            mask,
            mu,
            lambda,
        })
    }

    /// One sweep:
    ///
    /// 1. `L ← svt(P − Y/μ, 1/μ)`; `Q ← X − P` on Ω, `S + Z/μ` off Ω.
    /// 2. `S ← shrinkQ(Q − Z/μ, λ/μ)`; `P ← (μL + μX − μS + Y − Z)/(2μ)` on Ω,
    ///    `L + Y/μ` off Ω.
    /// 3. `Y ← Y + μ(L − P)`; `Z ← Z + μ(S − Q)`.
    pub fn step(&mut self) -> Result<()> {
        let mu = self.mu;
        let inv = 1.0 / mu;
        let n = self.x.len();
        let flags = self.mask.flags();

        let arg = self.p.axpy(-inv, &self.y)?;
        self.l = qsvd::svt(&arg, inv)?;

        for c in 0..4 {
            let x = &self.x.planes()[c];
            let p = &self.p.planes()[c];
            let s = &self.s.planes()[c];
            let z = &self.z.planes()[c];
            let q = &mut self.q.planes_mut()[c];
            for t in 0..n {
                q[t] = if flags[t] { x[t] - p[t] } else { s[t] + z[t] / mu };
            }
        }

        let shrink_arg = self.q.axpy(-inv, &self.z)?;
        self.s = shrink_unchecked(&shrink_arg, self.lambda / mu);

        for c in 0..4 {
            let l = &self.l.planes()[c];
            let x = &self.x.planes()[c];
            let s = &self.s.planes()[c];
            let y = &self.y.planes()[c];
            let z = &self.z.planes()[c];
            let p = &mut self.p.planes_mut()[c];
            for t in 0..n {
                p[t] = if flags[t] {
                    (mu * l[t] + mu * x[t] - mu * s[t] + y[t] - z[t]) / 2.0 / mu
                } else {
                    l[t] + y[t] / mu
                };
            }
        }

        for c in 0..4 {
            let l = &self.l.planes()[c];
            let p = &self.p.planes()[c];
            let y = &mut self.y.planes_mut()[c];
            for t in 0..n {
                y[t] += mu * (l[t] - p[t]);
            }
            let s = &self.s.planes()[c];
            let q = &self.q.planes()[c];
            let z = &mut self.z.planes_mut()[c];
            for t in 0..n {
                z[t] += mu * (s[t] - q[t]);
            }
        }
        Ok(())
    }

    pub fn feasibility(&self) -> (f64, f64) {
        (
            self.l.sub(&self.p).expect("same shape").fro_norm(),
            self.s.sub(&self.q).expect("same shape").fro_norm(),
        )
    }
}

/// Runs the ADMM until the scaled successive change of `(L, S)` and the
/// feasibility residuals `‖L − P‖_F`, `‖S − Q‖_F` all drop below
/// `tol·max(1, ‖X‖_F)`, or `max_iters` sweeps have been made.
///
/// Entries of `x` outside Ω are ignored.
pub fn solve(x: &QMatrix, mask: &ObservationMask, cfg: &SolverConfig) -> Result<QmcResult> {
    cfg.validate()?;
    let observed = project(x, mask)?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => default_lambda(mask)?,
    };
    let mu = cfg.mu.unwrap_or_else(|| default_mu(&observed));
    let scale = observed.fro_norm().max(1.0);
    let mut st = AdmmState::new(observed, mask.clone(), lambda, mu)?;

    let mut residuals = Residuals {
        lp: 0.0,
        sq: 0.0,
        change: f64::INFINITY,
    };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let prev_l = st.l.clone();
        let prev_s = st.s.clone();
        st.step()?;
        iterations += 1;

        let dl = st.l.sub(&prev_l)?.fro_norm();
        let ds = st.s.sub(&prev_s)?.fro_norm();
        let (lp, sq) = st.feasibility();
        residuals = Residuals {
            lp,
            sq,
            change: dl.max(ds) / scale,
        };
        if !(residuals.change.is_finite() && lp.is_finite() && sq.is_finite()) {
            return Err(Error::Numerical(format!(
                "ADMM diverged at iteration {iterations} (mu = {mu})"
            )));
        }
        if residuals.change < cfg.tol && lp.max(sq) < cfg.tol * scale {
            converged = true;
            break;
        }
    }

    Ok(QmcResult {
        l: st.l,
        s: st.s,
        iterations,
        converged,
        residuals,
        lambda,
        mu,
    })
}
