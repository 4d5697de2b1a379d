//! Structured box/simplex-constrained convex QPs.
//!
//! Both class duals reduce to
//!
//! ```text
//! minimize   ½ τᵀQτ − cᵀτ
//! subject to β1, β2 ≥ 0,  β1 + β2 ≤ D   (elementwise)
//!            0 ≤ α1, α2 ≤ C
//! ```
//!
//! with `τ = (β1 | β2 | α1 | α2)`, every block of length `m`. The feasible
//! set is a product of per-index triangles and boxes, so the Euclidean
//! projection separates by index.
//!
//! The Hessian is either an explicit dense matrix or the twin-block form
//! `τᵀQτ = s1ᵀF1 s1 + s2ᵀF2 s2` with `s1 = α1 − β1 + β2` and
//! `s2 = α2 + β1 − β2`, which lets a matrix-vector product cost two `m×m`
//! products instead of one `4m×4m` product.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MvtpmError, Result};

/// Coefficients of `(β1, β2, α1, α2)` in `s1`.
const S1_COEF: [f64; 4] = [-1.0, 1.0, 1.0, 0.0];
/// Coefficients of `(β1, β2, α1, α2)` in `s2`.
const S2_COEF: [f64; 4] = [1.0, -1.0, 0.0, 1.0];

const POWER_ITERATIONS: usize = 200;
const POWER_SEED: u64 = 0x5eed_0f_1a;

#[derive(Clone, Debug)]
pub enum Hessian {
    Dense(DMatrix<f64>),
    TwinBlock { f1: DMatrix<f64>, f2: DMatrix<f64> },
}

#[derive(Clone, Debug)]
pub struct StructuredQp {
    hessian: Hessian,
    linear: DVector<f64>,
    block_size: usize,
    alpha_cap: f64,
    pair_cap: f64,
}

fn all_finite<'a>(it: impl IntoIterator<Item = &'a f64>) -> bool {
    it.into_iter().all(|v| v.is_finite())
}

impl StructuredQp {
    /// QP with an explicit `4m×4m` Hessian.
    pub fn dense(q: DMatrix<f64>, c: DVector<f64>, block_size: usize, alpha_cap: f64, pair_cap: f64) -> Result<Self> {
        let n = 4 * block_size;
        if q.nrows() != n || q.ncols() != n {
            return Err(MvtpmError::invalid(format!(
                "hessian is {}x{}, expected {n}x{n}",
                q.nrows(),
                q.ncols()
            )));
        }
        if !all_finite(q.iter()) {
            return Err(MvtpmError::invalid("hessian has non-finite entries"));
        }
        let scale = q.amax().max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (q[(i, j)] - q[(j, i)]).abs() > 1e-10 * scale {
                    return Err(MvtpmError::invalid(format!("hessian is not symmetric at ({i}, {j})")));
                }
            }
        }
        Self::finish(Hessian::Dense(q), c, block_size, alpha_cap, pair_cap)
    }

    /// QP whose Hessian is generated by the two `m×m` PSD blocks `F1`, `F2`.
    pub fn twin_block(f1: DMatrix<f64>, f2: DMatrix<f64>, c: DVector<f64>, alpha_cap: f64, pair_cap: f64) -> Result<Self> {
        let m = f1.nrows();
        if f1.ncols() != m || f2.nrows() != m || f2.ncols() != m {
            return Err(MvtpmError::invalid("twin blocks must be square and of equal size"));
        }
        if !all_finite(f1.iter()) || !all_finite(f2.iter()) {
            return Err(MvtpmError::invalid("hessian has non-finite entries"));
        }
        Self::finish(Hessian::TwinBlock { f1, f2 }, c, m, alpha_cap, pair_cap)
    }

    fn finish(hessian: Hessian, c: DVector<f64>, block_size: usize, alpha_cap: f64, pair_cap: f64) -> Result<Self> {
        if block_size == 0 {
            return Err(MvtpmError::invalid("block size must be positive"));
        }
        if c.len() != 4 * block_size {
            return Err(MvtpmError::invalid(format!(
                "linear term has length {}, expected {}",
                c.len(),
                4 * block_size
            )));
        }
        if !all_finite(c.iter()) {
            return Err(MvtpmError::invalid("linear term has non-finite entries"));
        }
        if !(alpha_cap > 0.0 && alpha_cap.is_finite()) || !(pair_cap > 0.0 && pair_cap.is_finite()) {
            return Err(MvtpmError::invalid(format!(
                "caps must be positive and finite (alpha_cap={alpha_cap}, pair_cap={pair_cap})"
            )));
        }
        Ok(StructuredQp {
            hessian,
            linear: c,
            block_size,
            alpha_cap,
            pair_cap,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn dim(&self) -> usize {
        4 * self.block_size
    }

    pub fn alpha_cap(&self) -> f64 {
        self.alpha_cap
    }

    pub fn pair_cap(&self) -> f64 {
        self.pair_cap
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn hessian(&self) -> &Hessian {
        &self.hessian
    }

    /// The Hessian as an explicit `4m×4m` matrix.
    pub fn quadratic_matrix(&self) -> DMatrix<f64> {
        match &self.hessian {
            Hessian::Dense(q) => q.clone(),
            Hessian::TwinBlock { f1, f2 } => {
                let m = self.block_size;
                let mut q = DMatrix::zeros(4 * m, 4 * m);
                for br in 0..4 {
                    for bc in 0..4 {
                        let a = S1_COEF[br] * S1_COEF[bc];
                        let b = S2_COEF[br] * S2_COEF[bc];
                        if a == 0.0 && b == 0.0 {
                            continue;
                        }
                        let mut block = q.view_mut((br * m, bc * m), (m, m));
                        block += f1 * a + f2 * b;
                    }
                }
                q
            }
        }
    }

    /// `Qτ`.
    pub fn apply(&self, tau: &DVector<f64>) -> DVector<f64> {
        match &self.hessian {
            Hessian::Dense(q) => q * tau,
            Hessian::TwinBlock { f1, f2 } => {
                let m = self.block_size;
                let (s1, s2) = self.combined(tau);
                let g1 = f1 * s1;
                let g2 = f2 * s2;
                let mut out = DVector::zeros(4 * m);
                for i in 0..m {
                    for b in 0..4 {
                        out[b * m + i] = S1_COEF[b] * g1[i] + S2_COEF[b] * g2[i];
                    }
                }
                out
            }
        }
    }

    /// `(s1, s2) = (α1 − β1 + β2, α2 + β1 − β2)`.
    pub fn combined(&self, tau: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let m = self.block_size;
        let s1 = DVector::from_fn(m, |i, _| tau[2 * m + i] - tau[i] + tau[m + i]);
        let s2 = DVector::from_fn(m, |i, _| tau[3 * m + i] + tau[i] - tau[m + i]);
        (s1, s2)
    }

    /// `½ τᵀQτ − cᵀτ`.
    pub fn objective(&self, tau: &DVector<f64>) -> f64 {
        let qtau = self.apply(tau);
        0.5 * tau.dot(&qtau) - self.linear.dot(tau)
    }

    pub fn gradient(&self, tau: &DVector<f64>) -> DVector<f64> {
        self.apply(tau) - &self.linear
    }

    /// Largest constraint violation of `tau` (0 when feasible).
    pub fn max_violation(&self, tau: &DVector<f64>) -> f64 {
        let m = self.block_size;
        let mut worst = 0.0f64;
        for i in 0..m {
            let (a, b) = (tau[i], tau[m + i]);
            worst = worst.max(-a).max(-b).max(a + b - self.pair_cap);
            for k in [2 * m + i, 3 * m + i] {
                worst = worst.max(-tau[k]).max(tau[k] - self.alpha_cap);
            }
        }
        worst
    }

    fn entry(&self, r: usize, c: usize) -> f64 {
        match &self.hessian {
            Hessian::Dense(q) => q[(r, c)],
            Hessian::TwinBlock { f1, f2 } => {
                let m = self.block_size;
                let (br, i) = (r / m, r % m);
                let (bc, j) = (c / m, c % m);
                S1_COEF[br] * S1_COEF[bc] * f1[(i, j)] + S2_COEF[br] * S2_COEF[bc] * f2[(i, j)]
            }
        }
    }

    fn row_abs_sums(&self) -> Vec<f64> {
        match &self.hessian {
            Hessian::Dense(q) => (0..q.nrows()).map(|i| q.row(i).iter().map(|v| v.abs()).sum()).collect(),
            Hessian::TwinBlock { f1, f2 } => {
                let m = self.block_size;
                let mut out = vec![0.0; 4 * m];
                for i in 0..m {
                    let (mut sum12, mut sum1, mut sum2) = (0.0, 0.0, 0.0);
                    for j in 0..m {
                        sum12 += (f1[(i, j)] + f2[(i, j)]).abs();
                        sum1 += f1[(i, j)].abs();
                        sum2 += f2[(i, j)].abs();
                    }
                    out[i] = 2.0 * sum12 + sum1 + sum2;
                    out[m + i] = out[i];
                    out[2 * m + i] = 3.0 * sum1;
                    out[3 * m + i] = 3.0 * sum2;
                }
                out
            }
        }
    }

    /// Upper bound on `λ_max(Q)`; see [`spectral_upper_bound`].
    pub fn lipschitz_bound(&self) -> f64 {
        let gersh = self.row_abs_sums().into_iter().fold(0.0, f64::max);
        combine_bounds(power_estimate(self.dim(), |v| self.apply(v)), gersh)
    }
}

/// Euclidean projection onto the feasible set of `qp`.
///
/// Each α entry is clamped to `[0, alpha_cap]`; each pair `(β1_i, β2_i)` is
/// projected onto the triangle `{a ≥ 0, b ≥ 0, a + b ≤ D}`.
pub fn project_feasible(point: &DVector<f64>, qp: &StructuredQp) -> DVector<f64> {
    let m = qp.block_size;
    assert_eq!(point.len(), 4 * m, "point length must be 4m");
    let mut out = point.clone();
    for i in 0..m {
        let (a, b) = project_triangle(point[i], point[m + i], qp.pair_cap);
        out[i] = a;
        out[m + i] = b;
    }
    for k in 2 * m..4 * m {
        out[k] = point[k].clamp(0.0, qp.alpha_cap);
    }
    out
}

/// Projection of `(a, b)` onto `{a ≥ 0, b ≥ 0, a + b ≤ cap}`.
pub fn project_triangle(a: f64, b: f64, cap: f64) -> (f64, f64) {
    let (a, b) = (a.max(0.0), b.max(0.0));
    if a + b <= cap {
        return (a, b);
    }
    let t = 0.5 * (a + b - cap);
    let (a, b) = (a - t, b - t);
    if a < 0.0 {
        (0.0, cap)
    } else if b < 0.0 {
        (cap, 0.0)
    } else {
        (a, b)
    }
}

/// `‖τ − Π(τ − ∇f(τ))‖_∞` given the gradient.
fn residual_with_gradient(qp: &StructuredQp, tau: &DVector<f64>, grad: &DVector<f64>) -> f64 {
    let stepped = tau - grad;
    let projected = project_feasible(&stepped, qp);
    (tau - projected).amax()
}

/// Projected-gradient stationarity measure `‖τ − Π(τ − ∇f(τ))‖_∞`.
pub fn stationarity_residual(qp: &StructuredQp, tau: &DVector<f64>) -> f64 {
    residual_with_gradient(qp, tau, &qp.gradient(tau))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    #[serde(with = "crate::serde_matrix::vector")]
    pub tau: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stationarity_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    ProjectedGradient,
    CoordinateDescent,
}

impl std::str::FromStr for SolverKind {
    type Err = MvtpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projected-gradient" | "pg" => Ok(SolverKind::ProjectedGradient),
            "coordinate-descent" | "cd" => Ok(SolverKind::CoordinateDescent),
            other => Err(MvtpmError::invalid(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub solver: SolverKind,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            solver: SolverKind::CoordinateDescent,
            tol: 1e-8,
            max_iter: 50_000,
        }
    }
}

impl SolverOptions {
    pub fn solve(&self, qp: &StructuredQp) -> Result<QpSolution> {
        match self.solver {
            SolverKind::ProjectedGradient => solve_projected_gradient(qp, self.tol, self.max_iter),
            SolverKind::CoordinateDescent => solve_coordinate_descent(qp, self.tol, self.max_iter),
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(MvtpmError::invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Projected gradient with step `1/L` from `τ₀ = 0`.
pub fn solve_projected_gradient(qp: &StructuredQp, tol: f64, max_iter: usize) -> Result<QpSolution> {
    projected_gradient(qp, tol, max_iter, None)
}

/// As [`solve_projected_gradient`], additionally recording the objective at
/// every accepted iterate (starting with `τ₀`).
pub fn solve_projected_gradient_traced(qp: &StructuredQp, tol: f64, max_iter: usize) -> Result<(QpSolution, Vec<f64>)> {
    let mut trace = Vec::new();
    let sol = projected_gradient(qp, tol, max_iter, Some(&mut trace))?;
    Ok((sol, trace))
}

fn projected_gradient(qp: &StructuredQp, tol: f64, max_iter: usize, mut trace: Option<&mut Vec<f64>>) -> Result<QpSolution> {
    check_tol(tol)?;
    let n = qp.dim();
    let mut lip = qp.lipschitz_bound();
    if !(lip > 0.0) {
        lip = 1.0;
    }

    let mut tau = DVector::zeros(n);
    let mut qtau = DVector::zeros(n);
    let mut obj = 0.0;
    if let Some(t) = trace.as_deref_mut() {
        t.push(obj);
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut residual;
    loop {
        let grad = &qtau - &qp.linear;
        residual = residual_with_gradient(qp, &tau, &grad);
        if residual <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        // A step of 1/L with L ≥ λ_max cannot increase the objective; the
        // doubling only guards a power-iteration underestimate.
        loop {
            let cand = project_feasible(&(&tau - &grad / lip), qp);
            let qcand = qp.apply(&cand);
            let cand_obj = 0.5 * cand.dot(&qcand) - qp.linear.dot(&cand);
            if cand_obj <= obj + 1e-12 * (1.0 + obj.abs()) || !lip.is_finite() {
                tau = cand;
                qtau = qcand;
                obj = cand_obj;
                break;
            }
            lip *= 2.0;
        }
        iterations += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(obj);
        }
    }

    Ok(QpSolution {
        objective: 0.5 * tau.dot(&qtau) - qp.linear.dot(&tau),
        tau,
        iterations,
        converged,
        stationarity_residual: residual,
    })
}

/// Incrementally maintained `Qτ` for coordinate updates.
enum CdState<'a> {
    Dense { q: &'a DMatrix<f64>, qtau: DVector<f64> },
    Twin {
        f1: &'a DMatrix<f64>,
        f2: &'a DMatrix<f64>,
        g1: DVector<f64>,
        g2: DVector<f64>,
    },
}

impl CdState<'_> {
    fn qtau(&self, k: usize, m: usize) -> f64 {
        match self {
            CdState::Dense { qtau, .. } => qtau[k],
            CdState::Twin { g1, g2, .. } => {
                let (b, i) = (k / m, k % m);
                S1_COEF[b] * g1[i] + S2_COEF[b] * g2[i]
            }
        }
    }

    fn update(&mut self, k: usize, delta: f64, m: usize) {
        match self {
            CdState::Dense { q, qtau } => qtau.axpy(delta, &q.column(k), 1.0),
            CdState::Twin { f1, f2, g1, g2 } => {
                let (b, i) = (k / m, k % m);
                if S1_COEF[b] != 0.0 {
                    g1.axpy(S1_COEF[b] * delta, &f1.column(i), 1.0);
                }
                if S2_COEF[b] != 0.0 {
                    g2.axpy(S2_COEF[b] * delta, &f2.column(i), 1.0);
                }
            }
        }
    }

    /// Joint update of `β1_i += d1`, `β2_i += d2`.
    fn update_pair(&mut self, i: usize, d1: f64, d2: f64, m: usize) {
        match self {
            CdState::Dense { .. } => {
                self.update(i, d1, m);
                self.update(m + i, d2, m);
            }
            CdState::Twin { f1, f2, g1, g2 } => {
                g1.axpy(d2 - d1, &f1.column(i), 1.0);
                g2.axpy(d1 - d2, &f2.column(i), 1.0);
            }
        }
    }

    fn full_qtau(&self, m: usize) -> DVector<f64> {
        DVector::from_fn(4 * m, |k, _| self.qtau(k, m))
    }
}

/// Exact minimizer of `½ h t² + g t` over `t ∈ [0, len]`.
fn segment_min(h: f64, g: f64, len: f64) -> (f64, f64) {
    let phi = |t: f64| 0.5 * h * t * t + g * t;
    let t = if h > 0.0 {
        (-g / h).clamp(0.0, len)
    } else if phi(len) < 0.0 {
        len
    } else {
        0.0
    };
    (t, phi(t))
}

/// Minimizes the 2-D quadratic model
/// `½ dᵀ [[haa, hab], [hab, hbb]] d + gᵀd`, `d = (a, b) − (a0, b0)`,
/// over the triangle `{a ≥ 0, b ≥ 0, a + b ≤ cap}` by enumerating the
/// interior stationary point and the three edges (which include the vertices).
#[allow(clippy::too_many_arguments)]
fn triangle_min(a0: f64, b0: f64, haa: f64, hab: f64, hbb: f64, ga: f64, gb: f64, cap: f64) -> (f64, f64, f64) {
    let phi = |a: f64, b: f64| {
        let (da, db) = (a - a0, b - b0);
        0.5 * (haa * da * da + 2.0 * hab * da * db + hbb * db * db) + ga * da + gb * db
    };
    let mut best = (a0, b0, 0.0);
    let mut consider = |a: f64, b: f64| {
        let v = phi(a, b);
        if v < best.2 {
            best = (a, b, v);
        }
    };

    let det = haa * hbb - hab * hab;
    if det > 1e-14 * (haa * hbb).abs().max(f64::MIN_POSITIVE) {
        let da = (-hbb * ga + hab * gb) / det;
        let db = (hab * ga - haa * gb) / det;
        let (a, b) = (a0 + da, b0 + db);
        if a >= 0.0 && b >= 0.0 && a + b <= cap {
            consider(a, b);
        }
    }

    // Each edge as start + t·dir, t ∈ [0, cap].
    let edges = [((0.0, 0.0), (0.0, 1.0)), ((0.0, 0.0), (1.0, 0.0)), ((cap, 0.0), (-1.0, 1.0))];
    for ((sa, sb), (da, db)) in edges {
        let (ea, eb) = (sa - a0, sb - b0);
        let grad_dir = ga * da + gb * db + (haa * ea + hab * eb) * da + (hab * ea + hbb * eb) * db;
        let h_dir = haa * da * da + 2.0 * hab * da * db + hbb * db * db;
        let (t, _) = segment_min(h_dir, grad_dir, cap);
        let a = (sa + t * da).max(0.0);
        let b = (sb + t * db).max(0.0);
        let (a, b) = if a + b > cap { project_triangle(a, b, cap) } else { (a, b) };
        consider(a, b);
    }
    best
}

/// Cyclic exact coordinate descent: one α coordinate at a time (closed-form
/// clamp), one `(β1_i, β2_i)` pair at a time (exact minimization over the
/// triangle). Stops on the same stationarity criterion as the
/// projected-gradient solver, checked after every sweep.
pub fn solve_coordinate_descent(qp: &StructuredQp, tol: f64, max_iter: usize) -> Result<QpSolution> {
    check_tol(tol)?;
    let m = qp.block_size;
    let n = qp.dim();
    let mut tau = DVector::zeros(n);
    let mut state = match &qp.hessian {
        Hessian::Dense(q) => CdState::Dense {
            q,
            qtau: DVector::zeros(n),
        },
        Hessian::TwinBlock { f1, f2 } => CdState::Twin {
            f1,
            f2,
            g1: DVector::zeros(m),
            g2: DVector::zeros(m),
        },
    };
    let c = &qp.linear;
    let diag: Vec<f64> = (0..n).map(|k| qp.entry(k, k)).collect();
    let cross: Vec<f64> = (0..m).map(|i| qp.entry(i, m + i)).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut residual;
    loop {
        let qtau = state.full_qtau(m);
        residual = residual_with_gradient(qp, &tau, &(&qtau - c));
        if residual <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        for i in 0..m {
            let (k1, k2) = (i, m + i);
            let g1 = state.qtau(k1, m) - c[k1];
            let g2 = state.qtau(k2, m) - c[k2];
            let (a, b, _) = triangle_min(tau[k1], tau[k2], diag[k1], cross[i], diag[k2], g1, g2, qp.pair_cap);
            let (d1, d2) = (a - tau[k1], b - tau[k2]);
            if d1 != 0.0 || d2 != 0.0 {
                tau[k1] = a;
                tau[k2] = b;
                state.update_pair(i, d1, d2, m);
            }
        }
        for k in 2 * m..4 * m {
            let g = state.qtau(k, m) - c[k];
            let h = diag[k];
            let new = if h > 0.0 {
                (tau[k] - g / h).clamp(0.0, qp.alpha_cap)
            } else if g > 0.0 {
                0.0
            } else if g < 0.0 {
                qp.alpha_cap
            } else {
                tau[k]
            };
            let delta = new - tau[k];
            if delta != 0.0 {
                tau[k] = new;
                state.update(k, delta, m);
            }
        }
        iterations += 1;
    }

    let qtau = state.full_qtau(m);
    Ok(QpSolution {
        objective: 0.5 * tau.dot(&qtau) - c.dot(&tau),
        tau,
        iterations,
        converged,
        stationarity_residual: residual,
    })
}

fn power_estimate(n: usize, apply: impl Fn(&DVector<f64>) -> DVector<f64>) -> Option<f64> {
    if n == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5));
    v /= v.norm();
    let mut rayleigh = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = apply(&v);
        rayleigh = v.dot(&w);
        let norm = w.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        v = w / norm;
    }
    (rayleigh > 0.0 && rayleigh.is_finite()).then_some(rayleigh)
}

fn combine_bounds(estimate: Option<f64>, gershgorin: f64) -> f64 {
    match estimate {
        Some(r) => (1.01 * r).min(gershgorin),
        None => gershgorin,
    }
}

/// Upper bound on the largest eigenvalue of a symmetric matrix: a seeded
/// 200-step power-iteration estimate inflated by 1%, capped by the maximum
/// absolute row sum (which bounds `λ_max` by Gershgorin and is returned as is
/// when the power iteration does not grow).
pub fn spectral_upper_bound(q: &DMatrix<f64>) -> Result<f64> {
    if !q.is_square() {
        return Err(MvtpmError::invalid("matrix must be square"));
    }
    if !all_finite(q.iter()) {
        return Err(MvtpmError::invalid("matrix has non-finite entries"));
    }
    let gersh = (0..q.nrows())
        .map(|i| q.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(combine_bounds(power_estimate(q.nrows(), |v| q * v), gersh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn qp_identity(c: [f64; 4], alpha_cap: f64, pair_cap: f64) -> StructuredQp {
        StructuredQp::dense(DMatrix::identity(4, 4), DVector::from_row_slice(&c), 1, alpha_cap, pair_cap).unwrap()
    }

    pub(crate) fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let rank = 1 + rng.random_range(0..n);
        let b = DMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose()
    }

    fn random_qp(rng: &mut ChaCha8Rng, m: usize, twin: bool) -> StructuredQp {
        let c = DVector::from_fn(4 * m, |_, _| rng.random_range(-2.0..2.0));
        let alpha_cap = rng.random_range(0.2..3.0);
        let pair_cap = rng.random_range(0.2..3.0);
        if twin {
            let f1 = random_psd(rng, m);
            let f2 = random_psd(rng, m);
            StructuredQp::twin_block(f1, f2, c, alpha_cap, pair_cap).unwrap()
        } else {
            let q = random_psd(rng, 4 * m);
            let q = (&q + q.transpose()) * 0.5;
            StructuredQp::dense(q, c, m, alpha_cap, pair_cap).unwrap()
        }
    }

    /// Closest point of the triangle by enumeration of the region interior and
    /// the three edges.
    fn triangle_oracle(a: f64, b: f64, cap: f64) -> (f64, f64) {
        if a >= 0.0 && b >= 0.0 && a + b <= cap {
            return (a, b);
        }
        let seg = |p: (f64, f64), q: (f64, f64)| {
            let (dx, dy) = (q.0 - p.0, q.1 - p.1);
            let t = (((a - p.0) * dx + (b - p.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            (p.0 + t * dx, p.1 + t * dy)
        };
        let cands = [
            seg((0.0, 0.0), (cap, 0.0)),
            seg((0.0, 0.0), (0.0, cap)),
            seg((cap, 0.0), (0.0, cap)),
        ];
        cands
            .into_iter()
            .min_by(|p, q| {
                let dp = (p.0 - a).powi(2) + (p.1 - b).powi(2);
                let dq = (q.0 - a).powi(2) + (q.1 - b).powi(2);
                dp.partial_cmp(&dq).unwrap()
            })
            .unwrap()
    }

    #[test]
    fn projection_examples() {
        let qp = qp_identity([0.0; 4], 2.0, 4.0);
        let interior = DVector::from_row_slice(&[1.0, 1.0, 0.5, 1.5]);
        assert_eq!(project_feasible(&interior, &qp), interior);

        let p = project_feasible(&DVector::from_row_slice(&[3.0, 3.0, -1.0, 7.0]), &qp);
        assert_eq!(p.as_slice(), &[2.0, 2.0, 0.0, 2.0]);
    }

    #[test]
    fn projection_matches_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let cap = rng.random_range(0.1..5.0);
            let a = rng.random_range(-6.0..8.0);
            let b = rng.random_range(-6.0..8.0);
            let got = project_triangle(a, b, cap);
            let want = triangle_oracle(a, b, cap);
            assert_abs_diff_eq!(got.0, want.0, epsilon = 1e-12);
            assert_abs_diff_eq!(got.1, want.1, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_nonexpansive(
            x in proptest::collection::vec(-5.0f64..5.0, 12),
            y in proptest::collection::vec(-5.0f64..5.0, 12),
            cap in 0.1f64..4.0,
            pair in 0.1f64..4.0,
        ) {
            let qp = StructuredQp::dense(DMatrix::identity(12, 12), DVector::zeros(12), 3, cap, pair).unwrap();
            let x = DVector::from_vec(x);
            let y = DVector::from_vec(y);
            let px = project_feasible(&x, &qp);
            let ppx = project_feasible(&px, &qp);
            prop_assert!((&px - &ppx).amax() <= 1e-12);
            prop_assert!(qp.max_violation(&px) <= 1e-12);
            let py = project_feasible(&y, &qp);
            prop_assert!((&px - &py).norm() <= (&x - &y).norm() + 1e-12);
        }
    }

    #[test]
    fn identity_with_interior_optimum() {
        let qp = qp_identity([1.0; 4], 10.0, 4.0);
        for sol in [
            solve_projected_gradient(&qp, 1e-10, 1000).unwrap(),
            solve_coordinate_descent(&qp, 1e-10, 1000).unwrap(),
        ] {
            assert!(sol.converged);
            for v in sol.tau.iter() {
                assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-8);
            }
            assert_abs_diff_eq!(sol.objective, -2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn identity_with_pair_cap_active() {
        let qp = qp_identity([2.0, 2.0, 0.0, 0.0], 10.0, 2.0);
        for sol in [
            solve_projected_gradient(&qp, 1e-10, 1000).unwrap(),
            solve_coordinate_descent(&qp, 1e-10, 1000).unwrap(),
        ] {
            assert!(sol.converged);
            assert_abs_diff_eq!(sol.tau[0], 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(sol.tau[1], 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn zero_hessian_pushes_alpha_to_cap() {
        let qp = StructuredQp::dense(DMatrix::zeros(4, 4), DVector::from_row_slice(&[0.0, 0.0, 1.0, 1.0]), 1, 0.75, 1.0).unwrap();
        let sol = solve_coordinate_descent(&qp, 1e-10, 100).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.tau[2], 0.75);
        assert_eq!(sol.tau[3], 0.75);
        let sol = solve_projected_gradient(&qp, 1e-10, 100).unwrap();
        assert!(sol.converged);
        assert_abs_diff_eq!(sol.tau[2], 0.75, epsilon = 1e-12);
    }

    #[test]
    fn zero_linear_term_gives_zero() {
        let qp = qp_identity([0.0; 4], 1.0, 1.0);
        let sol = solve_coordinate_descent(&qp, 1e-10, 100).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.tau.amax(), 0.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        let mut q = DMatrix::identity(4, 4);
        q[(0, 0)] = f64::NAN;
        assert!(StructuredQp::dense(q, DVector::zeros(4), 1, 1.0, 1.0).is_err());
        let c = DVector::from_row_slice(&[0.0, f64::INFINITY, 0.0, 0.0]);
        assert!(StructuredQp::dense(DMatrix::identity(4, 4), c, 1, 1.0, 1.0).is_err());
        assert!(spectral_upper_bound(&DMatrix::from_element(2, 2, f64::NAN)).is_err());
    }

    #[test]
    fn max_iter_reports_not_converged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let qp = random_qp(&mut rng, 6, false);
        let sol = solve_projected_gradient(&qp, 1e-14, 2).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 2);
        assert!(qp.max_violation(&sol.tau) <= 1e-10);
    }

    #[test]
    fn twin_block_matches_materialized_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let qp = random_qp(&mut rng, 5, true);
        let q = qp.quadratic_matrix();
        let tau = DVector::from_fn(20, |_, _| rng.random_range(-1.0..1.0));
        assert_abs_diff_eq!((qp.apply(&tau) - &q * &tau).amax(), 0.0, epsilon = 1e-12);
        for r in 0..20 {
            for c in 0..20 {
                assert_eq!(qp.entry(r, c), q[(r, c)]);
            }
        }
        let dense = StructuredQp::dense(q.clone(), qp.linear().clone(), 5, qp.alpha_cap(), qp.pair_cap()).unwrap();
        assert_abs_diff_eq!(dense.lipschitz_bound(), qp.lipschitz_bound(), epsilon = 1e-9 * qp.lipschitz_bound());
    }

    #[test]
    fn spectral_bound_known_spectra() {
        let d = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 2.0, 3.0]));
        let b = spectral_upper_bound(&d).unwrap();
        assert!((3.0..=3.03).contains(&b), "{b}");
        let b = spectral_upper_bound(&DMatrix::identity(5, 5)).unwrap();
        assert!((1.0..=1.01).contains(&b), "{b}");
        assert_eq!(spectral_upper_bound(&DMatrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_bound_dominates_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let q = random_psd(&mut rng, 10);
            let q = (&q + q.transpose()) * 0.5;
            let exact = q.clone().symmetric_eigen().eigenvalues.max();
            let bound = spectral_upper_bound(&q).unwrap();
            assert!(bound >= exact * (1.0 - 1e-12), "bound {bound} < {exact}");
            assert!(bound <= 1.0101 * exact + 1e-12);
        }
    }

    #[test]
    fn pg_objective_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..20 {
            let qp = random_qp(&mut rng, 1 + trial % 8, trial % 2 == 0);
            let (sol, trace) = solve_projected_gradient_traced(&qp, 1e-9, 5000).unwrap();
            assert_eq!(trace.len(), sol.iterations + 1);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn random_8x8_pg_matches_cd() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let qp = random_qp(&mut rng, 2, false);
        let pg = solve_projected_gradient(&qp, 1e-10, 200_000).unwrap();
        let cd = solve_coordinate_descent(&qp, 1e-10, 200_000).unwrap();
        assert!(pg.converged && cd.converged);
        let rel = (pg.objective - cd.objective).abs() / (1.0 + cd.objective.abs());
        assert!(rel <= 1e-6, "pg {} cd {}", pg.objective, cd.objective);
    }

    #[test]
    fn solvers_agree_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..50 {
            let m = 1 + trial % 10;
            let qp = random_qp(&mut rng, m, trial % 2 == 1);
            let pg = solve_projected_gradient(&qp, 1e-9, 200_000).unwrap();
            let cd = solve_coordinate_descent(&qp, 1e-9, 200_000).unwrap();
            assert!(cd.converged, "cd trial {trial}");
            assert!(qp.max_violation(&pg.tau) <= 1e-10);
            assert!(qp.max_violation(&cd.tau) <= 1e-10);
            assert!(cd.stationarity_residual <= 1e-9);
            let rel = (pg.objective - cd.objective).abs() / (1.0 + cd.objective.abs());
            assert!(rel <= 1e-6, "trial {trial}: pg {} cd {}", pg.objective, cd.objective);
        }
    }

    #[test]
    fn triangle_min_matches_fine_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..200 {
            let cap = rng.random_range(0.5..2.0);
            let (a0, b0) = project_triangle(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), cap);
            let l = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let h = &l * l.transpose();
            let (ga, gb) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let (_, _, best) = triangle_min(a0, b0, h[(0, 0)], h[(0, 1)], h[(1, 1)], ga, gb, cap);
            let phi = |a: f64, b: f64| {
                let (da, db) = (a - a0, b - b0);
                0.5 * (h[(0, 0)] * da * da + 2.0 * h[(0, 1)] * da * db + h[(1, 1)] * db * db) + ga * da + gb * db
            };
            let steps = 200;
            let mut grid_best = f64::INFINITY;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let a = cap * i as f64 / steps as f64;
                    let b = cap * j as f64 / steps as f64;
                    grid_best = grid_best.min(phi(a, b));
                }
            }
            assert!(best <= grid_best + 1e-12, "{best} > {grid_best}");
        }
    }
}
