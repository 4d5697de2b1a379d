//! Dual assembly, training, hyperplane evaluation and the duality-gap check.
//!
//! Each class gets its own dual. For the positive class the variables are
//! `τ = (β1 | β2 | α1 | α2)` of length `4·m1`, and only the combinations
//! `s1 = α1 − β1 + β2` and `s2 = α2 + β1 − β2` reach the hyperplanes. The
//! negative-class dual is the positive-class dual of the label-swapped data
//! with the penalty roles exchanged, and is built exactly that way.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{LabelMap, TwoViewDataset};
use crate::error::{MvtpmError, Result};
use crate::kernel::{augmented_gram, augmented_gram_symmetric, augmented_row, row_major, KernelKind, KernelSpec};
use crate::preprocess::Preprocessor;
use crate::qp::{QpSolution, SolverOptions, StructuredQp};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub d1: f64,
    pub d2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub kernel_a: KernelSpec,
    pub kernel_b: KernelSpec,
}

impl Default for Hyperparams {
    fn default() -> Self {
        let k = KernelSpec {
            kind: KernelKind::GaussianPaper,
            sigma: 1.0,
        };
        Hyperparams::tied(1.0, 1.0, 0.1, k, k)
    }
}

impl Hyperparams {
    /// Tied parameters: `C3 = C1` and `C4 = D1 = D2 = C2`, `ε1 = ε2 = eps`.
    pub fn tied(c1: f64, c2: f64, eps: f64, kernel_a: KernelSpec, kernel_b: KernelSpec) -> Self {
        Hyperparams {
            c1,
            c2,
            c3: c1,
            c4: c2,
            d1: c2,
            d2: c2,
            eps1: eps,
            eps2: eps,
            kernel_a,
            kernel_b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("C1", self.c1),
            ("C2", self.c2),
            ("C3", self.c3),
            ("C4", self.c4),
            ("D1", self.d1),
            ("D2", self.d2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MvtpmError::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MvtpmError::invalid(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        self.kernel_a.validate()?;
        self.kernel_b.validate()
    }

    /// Exchanges the positive-class and negative-class roles:
    /// `(C1, C2, D1, ε1) ↔ (C3, C4, D2, ε2)`.
    pub fn role_swapped(&self) -> Self {
        Hyperparams {
            c1: self.c3,
            c2: self.c4,
            c3: self.c1,
            c4: self.c2,
            d1: self.d2,
            d2: self.d1,
            eps1: self.eps2,
            eps2: self.eps1,
            ..*self
        }
    }
}

/// Training samples split by class and view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewSplit {
    #[serde(with = "crate::serde_matrix")]
    pub pos_a: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub pos_b: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub neg_a: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub neg_b: DMatrix<f64>,
}

impl ViewSplit {
    pub fn new(pos_a: DMatrix<f64>, pos_b: DMatrix<f64>, neg_a: DMatrix<f64>, neg_b: DMatrix<f64>) -> Result<Self> {
        let split = ViewSplit {
            pos_a,
            pos_b,
            neg_a,
            neg_b,
        };
        split.validate()?;
        Ok(split)
    }

    pub fn from_dataset(ds: &TwoViewDataset) -> Result<Self> {
        let pos: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] > 0).collect();
        let neg: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] < 0).collect();
        if pos.is_empty() || neg.is_empty() {
            return Err(MvtpmError::invalid(format!(
                "training data must contain both classes (got {} positive, {} negative)",
                pos.len(),
                neg.len()
            )));
        }
        let rows = |m: &DMatrix<f64>, idx: &[usize]| DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)]);
        Self::new(rows(&ds.view_a, &pos), rows(&ds.view_b, &pos), rows(&ds.view_a, &neg), rows(&ds.view_b, &neg))
    }

    pub fn validate(&self) -> Result<()> {
        if self.pos_a.nrows() == 0 || self.neg_a.nrows() == 0 {
            return Err(MvtpmError::invalid("each class needs at least one sample"));
        }
        if self.pos_a.nrows() != self.pos_b.nrows() || self.neg_a.nrows() != self.neg_b.nrows() {
            return Err(MvtpmError::invalid("views disagree on class sizes"));
        }
        if self.pos_a.ncols() != self.neg_a.ncols() || self.pos_b.ncols() != self.neg_b.ncols() {
            return Err(MvtpmError::invalid("classes disagree on view dimensions"));
        }
        Ok(())
    }

    pub fn m1(&self) -> usize {
        self.pos_a.nrows()
    }

    pub fn m2(&self) -> usize {
        self.neg_a.nrows()
    }

    /// Feature dimensions `(dA, dB)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.pos_a.ncols(), self.pos_b.ncols())
    }

    pub fn label_swapped(&self) -> Self {
        ViewSplit {
            pos_a: self.neg_a.clone(),
            pos_b: self.neg_b.clone(),
            neg_a: self.pos_a.clone(),
            neg_b: self.pos_b.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualSide {
    Positive,
    Negative,
}

/// All augmented Gram blocks of a split, shared by both duals.
struct Grams {
    pp_a: DMatrix<f64>,
    pp_b: DMatrix<f64>,
    nn_a: DMatrix<f64>,
    nn_b: DMatrix<f64>,
    /// `K̃(N, P)`, `m2×m1`.
    np_a: DMatrix<f64>,
    np_b: DMatrix<f64>,
}

impl Grams {
    fn build(split: &ViewSplit, hp: &Hyperparams) -> Result<Self> {
        split.validate()?;
        let (ka, kb) = (&hp.kernel_a, &hp.kernel_b);
        Ok(Grams {
            pp_a: augmented_gram_symmetric(ka, &split.pos_a)?,
            pp_b: augmented_gram_symmetric(kb, &split.pos_b)?,
            nn_a: augmented_gram_symmetric(ka, &split.neg_a)?,
            nn_b: augmented_gram_symmetric(kb, &split.neg_b)?,
            np_a: augmented_gram(ka, &split.neg_a, &split.pos_a)?,
            np_b: augmented_gram(kb, &split.neg_b, &split.pos_b)?,
        })
    }

    fn dual(&self, side: DualSide, hp: &Hyperparams) -> Result<ClassDual> {
        match side {
            DualSide::Positive => ClassDual::new(
                [&self.pp_a, &self.pp_b],
                [self.np_a.clone(), self.np_b.clone()],
                [&self.nn_a, &self.nn_b],
                hp,
            ),
            DualSide::Negative => ClassDual::new(
                [&self.nn_a, &self.nn_b],
                [self.np_a.transpose(), self.np_b.transpose()],
                [&self.pp_a, &self.pp_b],
                &hp.role_swapped(),
            ),
        }
    }
}

fn column_sums(g: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(g.ncols(), |i, _| g.column(i).iter().fold(0.0, |acc, v| acc + v))
}

fn row_sums(g: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(g.nrows(), |j, _| g.row(j).iter().fold(0.0, |acc, v| acc + v))
}

/// One class's dual in the positive-class orientation, plus what the primal
/// reconstruction needs.
struct ClassDual {
    qp: StructuredQp,
    /// `K̃(other, own)` for views A and B.
    g: [DMatrix<f64>; 2],
    /// `Gᵀe` for each view.
    g_colsum: [DVector<f64>; 2],
    /// `K̃(other, other)·e` for each view.
    other_rowsum: [DVector<f64>; 2],
    c_own: f64,
    alpha_cap: f64,
    pair_cap: f64,
    eps: f64,
}

impl ClassDual {
    fn new(own: [&DMatrix<f64>; 2], g: [DMatrix<f64>; 2], other: [&DMatrix<f64>; 2], hp: &Hyperparams) -> Result<Self> {
        hp.validate()?;
        let m = own[0].nrows();
        let g_colsum = [column_sums(&g[0]), column_sums(&g[1])];
        let (c1, eps) = (hp.c1, hp.eps1);
        let mut c = DVector::zeros(4 * m);
        for i in 0..m {
            let (a, b) = (g_colsum[0][i], g_colsum[1][i]);
            c[i] = c1 * (b - a) - eps;
            c[m + i] = c1 * (a - b) - eps;
            c[2 * m + i] = c1 * a;
            c[3 * m + i] = c1 * b;
        }
        let qp = StructuredQp::twin_block(own[0].clone(), own[1].clone(), c, hp.c2, hp.d1)?;
        Ok(ClassDual {
            qp,
            g,
            g_colsum,
            other_rowsum: [row_sums(other[0]), row_sums(other[1])],
            c_own: c1,
            alpha_cap: hp.c2,
            pair_cap: hp.d1,
            eps,
        })
    }

    fn own_gram(&self, view: usize) -> &DMatrix<f64> {
        match self.qp.hessian() {
            crate::qp::Hessian::TwinBlock { f1, f2 } => [f1, f2][view],
            crate::qp::Hessian::Dense(_) => unreachable!("class duals are twin-block"),
        }
    }

    /// Primal objective at the weights recovered from `tau`, with minimal
    /// feasible slacks, and the dual objective in maximization orientation.
    fn gap(&self, tau: &DVector<f64>) -> GapReport {
        let (s1, s2) = self.qp.combined(tau);
        let c = self.c_own;
        let mut norm_sq = 0.0;
        let mut other_side = 0.0;
        let mut own_side = Vec::with_capacity(2);
        for (view, s) in [s1, s2].iter().enumerate() {
            let f = self.own_gram(view);
            let fs = f * s;
            // A·v on the own class and B·v on the other class.
            let av = &fs - &self.g_colsum[view] * c;
            let bv = &self.g[view] * s - &self.other_rowsum[view] * c;
            norm_sq += s.dot(&fs) - 2.0 * c * s.dot(&self.g_colsum[view]) + c * c * self.other_rowsum[view].sum();
            other_side += bv.sum();
            own_side.push(av);
        }
        let xi: f64 = own_side.iter().flat_map(|av| av.iter()).map(|v| (-v).max(0.0)).sum();
        let eta: f64 = own_side[0]
            .iter()
            .zip(own_side[1].iter())
            .map(|(a, b)| ((a - b).abs() - self.eps).max(0.0))
            .sum();
        let primal = 0.5 * norm_sq + c * other_side + self.alpha_cap * xi + self.pair_cap * eta;
        let constant = 0.5 * c * c * (self.other_rowsum[0].sum() + self.other_rowsum[1].sum());
        let dual = -self.qp.objective(tau) - constant;
        GapReport {
            primal,
            dual,
            gap: primal - dual,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl GapReport {
    /// `gap / (1 + |primal|)`.
    pub fn relative(&self) -> f64 {
        self.gap / (1.0 + self.primal.abs())
    }
}

/// Dual of the positive-class problem.
pub fn assemble_positive_dual(split: &ViewSplit, hp: &Hyperparams) -> Result<StructuredQp> {
    Ok(Grams::build(split, hp)?.dual(DualSide::Positive, hp)?.qp)
}

/// Dual of the negative-class problem.
pub fn assemble_negative_dual(split: &ViewSplit, hp: &Hyperparams) -> Result<StructuredQp> {
    Ok(Grams::build(split, hp)?.dual(DualSide::Negative, hp)?.qp)
}

/// Primal minus dual objective for a feasible dual point.
pub fn duality_gap(split: &ViewSplit, hp: &Hyperparams, side: DualSide, solution: &QpSolution) -> Result<GapReport> {
    let dual = Grams::build(split, hp)?.dual(side, hp)?;
    if solution.tau.len() != dual.qp.dim() {
        return Err(MvtpmError::invalid(format!(
            "solution has {} entries, the dual has {}",
            solution.tau.len(),
            dual.qp.dim()
        )));
    }
    Ok(dual.gap(&solution.tau))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub stationarity_residual: f64,
    pub objective: f64,
    pub primal_objective: f64,
    pub duality_gap: f64,
}

impl DualDiagnostics {
    pub fn relative_gap(&self) -> f64 {
        self.duality_gap / (1.0 + self.primal_objective.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    pub positive: DualDiagnostics,
    pub negative: DualDiagnostics,
}

impl TrainDiagnostics {
    pub fn converged(&self) -> bool {
        self.positive.converged && self.negative.converged
    }
}

/// Explicit augmented weights `[w; b]`, available when both kernels are linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitWeights {
    #[serde(with = "crate::serde_matrix::vector")]
    pub v1: DVector<f64>,
    #[serde(with = "crate::serde_matrix::vector")]
    pub v2: DVector<f64>,
    #[serde(with = "crate::serde_matrix::vector")]
    pub u1: DVector<f64>,
    #[serde(with = "crate::serde_matrix::vector")]
    pub u2: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvTpmModel {
    pub hyperparams: Hyperparams,
    pub split: ViewSplit,
    #[serde(with = "crate::serde_matrix::vector")]
    pub s1: DVector<f64>,
    #[serde(with = "crate::serde_matrix::vector")]
    pub s2: DVector<f64>,
    #[serde(with = "crate::serde_matrix::vector")]
    pub t1: DVector<f64>,
    #[serde(with = "crate::serde_matrix::vector")]
    pub t2: DVector<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<ExplicitWeights>,
    pub preprocessor: Preprocessor,
    pub label_map: LabelMap,
    pub diagnostics: TrainDiagnostics,
}

/// The four hyperplane values at one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperplanes {
    pub h1a: f64,
    pub h1b: f64,
    pub h2a: f64,
    pub h2b: f64,
}

impl Hyperplanes {
    /// `f = |h1A + h1B| − |h2A + h2B|`.
    pub fn decision(&self) -> f64 {
        (self.h1a + self.h1b).abs() - (self.h2a + self.h2b).abs()
    }
}

/// `+1` iff `f < 0`; the boundary goes to `−1`.
pub fn label_for(f: f64) -> i8 {
    if f < 0.0 {
        1
    } else {
        -1
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

fn sum(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc, x| acc + x)
}

fn solve_side(grams: &Grams, side: DualSide, hp: &Hyperparams, opts: &SolverOptions) -> Result<(DVector<f64>, DVector<f64>, DualDiagnostics)> {
    let dual = grams.dual(side, hp)?;
    let sol = opts.solve(&dual.qp)?;
    let gap = dual.gap(&sol.tau);
    let (a, b) = dual.qp.combined(&sol.tau);
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(MvtpmError::Numerical("dual solution is not finite".into()));
    }
    Ok((
        a,
        b,
        DualDiagnostics {
            iterations: sol.iterations,
            converged: sol.converged,
            stationarity_residual: sol.stationarity_residual,
            objective: sol.objective,
            primal_objective: gap.primal,
            duality_gap: gap.gap,
        },
    ))
}

/// Trains on an already preprocessed dataset. The model carries an identity
/// preprocessor; see [`MvTpmModel::with_preprocessor`].
pub fn train(ds: &TwoViewDataset, hp: &Hyperparams, opts: &SolverOptions) -> Result<MvTpmModel> {
    let split = ViewSplit::from_dataset(ds)?;
    let (da, db) = split.dims();
    let mut model = train_split(split, hp, opts)?;
    model.preprocessor = Preprocessor::identity(da, db);
    model.label_map = ds.label_map.clone();
    Ok(model)
}

pub fn train_split(split: ViewSplit, hp: &Hyperparams, opts: &SolverOptions) -> Result<MvTpmModel> {
    hp.validate()?;
    let grams = Grams::build(&split, hp)?;
    let (s1, s2, pos) = solve_side(&grams, DualSide::Positive, hp, opts)?;
    let (t1, t2, neg) = solve_side(&grams, DualSide::Negative, hp, opts)?;
    drop(grams);
    let (da, db) = split.dims();
    let mut model = MvTpmModel {
        hyperparams: *hp,
        split,
        s1,
        s2,
        t1,
        t2,
        explicit: None,
        preprocessor: Preprocessor::identity(da, db),
        label_map: LabelMap::signed(),
        diagnostics: TrainDiagnostics {
            positive: pos,
            negative: neg,
        },
    };
    if hp.kernel_a.kind == KernelKind::Linear && hp.kernel_b.kind == KernelKind::Linear {
        model.explicit = Some(model.explicit_weights());
    }
    Ok(model)
}

/// `[Xᵀw ; Σw]`, i.e. `[X, 1]ᵀw`.
fn augmented_transpose_mul(x: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    let top = x.tr_mul(w);
    let mut out = DVector::zeros(x.ncols() + 1);
    out.rows_mut(0, x.ncols()).copy_from(&top);
    out[x.ncols()] = w.sum();
    out
}

impl MvTpmModel {
    pub fn with_preprocessor(mut self, pre: Preprocessor) -> Self {
        self.preprocessor = pre;
        self
    }

    pub fn with_label_map(mut self, map: LabelMap) -> Self {
        self.label_map = map;
        self
    }

    /// `v1 = A1ᵀs1 − C1·B1ᵀe2`, `u1 = C3·A1ᵀe1 − B1ᵀt1` and their view-B
    /// analogues, with `A1 = [P_A, 1]` and `B1 = [N_A, 1]`.
    pub fn explicit_weights(&self) -> ExplicitWeights {
        let hp = &self.hyperparams;
        let sp = &self.split;
        let e1 = DVector::from_element(sp.m1(), 1.0);
        let e2 = DVector::from_element(sp.m2(), 1.0);
        ExplicitWeights {
            v1: augmented_transpose_mul(&sp.pos_a, &self.s1) - augmented_transpose_mul(&sp.neg_a, &e2) * hp.c1,
            v2: augmented_transpose_mul(&sp.pos_b, &self.s2) - augmented_transpose_mul(&sp.neg_b, &e2) * hp.c1,
            u1: augmented_transpose_mul(&sp.pos_a, &e1) * hp.c3 - augmented_transpose_mul(&sp.neg_a, &self.t1),
            u2: augmented_transpose_mul(&sp.pos_b, &e1) * hp.c3 - augmented_transpose_mul(&sp.neg_b, &self.t2),
        }
    }

    fn predictor(&self) -> Predictor<'_> {
        Predictor {
            model: self,
            pos_a: row_major(&self.split.pos_a),
            pos_b: row_major(&self.split.pos_b),
            neg_a: row_major(&self.split.neg_a),
            neg_b: row_major(&self.split.neg_b),
        }
    }

    fn check_dims(&self, xa: usize, xb: usize) -> Result<()> {
        let (da, db) = self.split.dims();
        if xa != da || xb != db {
            return Err(MvtpmError::invalid(format!(
                "model expects view dimensions ({da}, {db}), got ({xa}, {xb})"
            )));
        }
        Ok(())
    }

    /// Hyperplane values at one preprocessed sample.
    pub fn hyperplane_values(&self, xa: &[f64], xb: &[f64]) -> Result<Hyperplanes> {
        self.check_dims(xa.len(), xb.len())?;
        Ok(self.predictor().eval(xa, xb, &mut Vec::new(), &mut Vec::new()))
    }

    /// `(f, label)` at one preprocessed sample.
    pub fn decide(&self, xa: &[f64], xb: &[f64]) -> Result<(f64, i8)> {
        let f = self.hyperplane_values(xa, xb)?.decision();
        Ok((f, label_for(f)))
    }

    /// Decision through the explicit weight vectors; `None` for nonlinear models.
    pub fn decide_explicit(&self, xa: &[f64], xb: &[f64]) -> Result<Option<(f64, i8)>> {
        self.check_dims(xa.len(), xb.len())?;
        let Some(w) = &self.explicit else {
            return Ok(None);
        };
        let aug = |x: &[f64], v: &DVector<f64>| dot(x, &v.as_slice()[..x.len()]) + v[x.len()];
        let h = Hyperplanes {
            h1a: aug(xa, &w.v1),
            h1b: aug(xb, &w.v2),
            h2a: aug(xa, &w.u1),
            h2b: aug(xb, &w.u2),
        };
        let f = h.decision();
        Ok(Some((f, label_for(f))))
    }

    /// Decision values for preprocessed view matrices.
    pub fn decision_values(&self, view_a: &DMatrix<f64>, view_b: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_dims(view_a.ncols(), view_b.ncols())?;
        if view_a.nrows() != view_b.nrows() {
            return Err(MvtpmError::invalid("views have different row counts"));
        }
        let p = self.predictor();
        let (ra, rb) = (row_major(view_a), row_major(view_b));
        let (da, db) = (view_a.ncols(), view_b.ncols());
        let (mut buf_p, mut buf_n) = (Vec::new(), Vec::new());
        Ok((0..view_a.nrows())
            .map(|i| p.eval(&ra[i * da..(i + 1) * da], &rb[i * db..(i + 1) * db], &mut buf_p, &mut buf_n).decision())
            .collect())
    }

    /// `(f, label)` per row of preprocessed views.
    pub fn predict(&self, view_a: &DMatrix<f64>, view_b: &DMatrix<f64>) -> Result<Vec<(f64, i8)>> {
        Ok(self.decision_values(view_a, view_b)?.into_iter().map(|f| (f, label_for(f))).collect())
    }

    /// Applies the stored preprocessing (including view-B synthesis) first.
    pub fn predict_raw(&self, view_a: &DMatrix<f64>, view_b: Option<&DMatrix<f64>>) -> Result<Vec<(f64, i8)>> {
        let (a, b) = self.preprocessor.transform(view_a, view_b)?;
        self.predict(&a, &b)
    }
}

struct Predictor<'a> {
    model: &'a MvTpmModel,
    pos_a: Vec<f64>,
    pos_b: Vec<f64>,
    neg_a: Vec<f64>,
    neg_b: Vec<f64>,
}

impl Predictor<'_> {
    fn eval(&self, xa: &[f64], xb: &[f64], kp: &mut Vec<f64>, kn: &mut Vec<f64>) -> Hyperplanes {
        let m = self.model;
        let hp = &m.hyperparams;
        let mut view = |spec: &KernelSpec, x: &[f64], pos: &[f64], neg: &[f64], s: &DVector<f64>, t: &DVector<f64>| {
            augmented_row(spec, x, pos, kp);
            augmented_row(spec, x, neg, kn);
            (dot(s.as_slice(), kp) - hp.c1 * sum(kn), hp.c3 * sum(kp) - dot(t.as_slice(), kn))
        };
        let (h1a, h2a) = view(&hp.kernel_a, xa, &self.pos_a, &self.neg_a, &m.s1, &m.t1);
        let (h1b, h2b) = view(&hp.kernel_b, xb, &self.pos_b, &self.neg_b, &m.s2, &m.t2);
        Hyperplanes { h1a, h1b, h2a, h2b }
    }
}
