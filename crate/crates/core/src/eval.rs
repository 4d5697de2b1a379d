//! Classification metrics, cross-validated grid search and benchmark runs.

use serde::{Deserialize, Serialize};

use crate::data::{kfold_indices, load_source, split_indices, stratified_kfold_indices, DatasetManifest, SourceData, TwoViewDataset};
use crate::error::{MvtpmError, Result};
use crate::kernel::{KernelKind, KernelSpec};
use crate::model::{train, Hyperparams, MvTpmModel};
use crate::preprocess::{PreprocessConfig, Preprocessor};
use crate::qp::SolverOptions;

pub const REPORT_SCHEMA: &str = "mvtpm-report/1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    /// `+1` is the positive class.
    pub fn from_labels(truth: &[i8], predicted: &[i8]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(MvtpmError::invalid(format!(
                "{} true labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut c = ConfusionCounts::default();
        for (&y, &p) in truth.iter().zip(predicted) {
            match (y > 0, p > 0) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Ratios with a zero denominator are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub precision: Option<f64>,
    pub specificity: Option<f64>,
    pub error_rate: f64,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(c: &ConfusionCounts) -> Result<MetricSet> {
    let total = c.total();
    if total == 0 {
        return Err(MvtpmError::invalid("metrics need at least one evaluated sample"));
    }
    let accuracy = (c.tp + c.tn) as f64 / total as f64;
    Ok(MetricSet {
        accuracy,
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        precision: ratio(c.tp, c.tp + c.fp),
        specificity: ratio(c.tn, c.tn + c.fp),
        error_rate: 1.0 - accuracy,
    })
}

/// `{2^lo, …, 2^hi}` in unit exponent steps.
pub fn power_of_two_range(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

/// Candidate values under the tied parameterization `C3 = C1`,
/// `C4 = D1 = D2 = C2`, `ε1 = ε2 = eps`; `σ` is shared by both views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c1_values: Vec<f64>,
    pub c2_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
    pub eps: f64,
    pub kernel: KernelKind,
    #[serde(default)]
    pub stratified: bool,
    /// Solver settings for the fold fits.
    pub solver: SolverOptions,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            c1_values: power_of_two_range(-5, 5),
            c2_values: power_of_two_range(-5, 5),
            sigma_values: power_of_two_range(-5, 5),
            eps: 0.1,
            kernel: KernelKind::GaussianPaper,
            stratified: false,
            solver: SolverOptions::default(),
        }
    }
}

impl GridSpec {
    /// Five values per axis, `{2⁻⁴, 2⁻², 2⁰, 2², 2⁴}`.
    pub fn coarse() -> Self {
        let axis: Vec<f64> = [-4, -2, 0, 2, 4].iter().map(|&e| 2f64.powi(e)).collect();
        GridSpec {
            c1_values: axis.clone(),
            c2_values: axis.clone(),
            sigma_values: axis,
            ..GridSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c1_values.is_empty() || self.c2_values.is_empty() || self.sigma_values.is_empty() {
            return Err(MvtpmError::invalid("every grid axis needs at least one value"));
        }
        if self.kernel == KernelKind::Linear && self.sigma_values.len() != 1 {
            return Err(MvtpmError::invalid("a linear-kernel grid takes a single placeholder sigma"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.c1_values.len() * self.c2_values.len() * self.sigma_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hyperparams(&self, c1: f64, c2: f64, sigma: f64) -> Result<Hyperparams> {
        let k = KernelSpec::new(self.kernel, sigma)?;
        let hp = Hyperparams::tied(c1, c2, self.eps, k, k);
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c1: f64,
    pub c2: f64,
    pub sigma: f64,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Hyperparams,
    pub best_accuracy: f64,
    /// In `(σ, C1, C2)`-nested grid order.
    pub table: Vec<GridPoint>,
    /// Folds whose training part lacked a class and were left out.
    pub skipped_folds: Vec<usize>,
}

fn accuracy(model: &MvTpmModel, ds: &TwoViewDataset) -> Result<f64> {
    let pred = model.predict(&ds.view_a, &ds.view_b)?;
    let correct = pred.iter().zip(&ds.labels).filter(|((_, l), y)| l == *y).count();
    Ok(correct as f64 / ds.len() as f64)
}

/// `true` when `a` should replace the incumbent `b`: higher accuracy, then
/// smaller C1, C2 and σ in that order.
fn better(a: &GridPoint, b: &GridPoint) -> bool {
    a.mean_accuracy
        .total_cmp(&b.mean_accuracy)
        .then(b.c1.total_cmp(&a.c1))
        .then(b.c2.total_cmp(&a.c2))
        .then(b.sigma.total_cmp(&a.sigma))
        .is_gt()
}

/// Mean validation accuracy of every grid point over `folds` folds.
pub fn cross_validate_grid(train_set: &TwoViewDataset, grid: &GridSpec, folds: usize, seed: u64) -> Result<GridResult> {
    grid.validate()?;
    let fold_idx = if grid.stratified {
        stratified_kfold_indices(&train_set.labels, folds, seed)?
    } else {
        kfold_indices(train_set.len(), folds, seed)?
    };
    let mut usable = Vec::new();
    let mut skipped_folds = Vec::new();
    for (f, val) in fold_idx.iter().enumerate() {
        let mut in_val = vec![false; train_set.len()];
        for &i in val {
            in_val[i] = true;
        }
        let fit_idx: Vec<usize> = (0..train_set.len()).filter(|&i| !in_val[i]).collect();
        let fit = train_set.subset(&fit_idx);
        if fit.m1() == 0 || fit.m2() == 0 {
            skipped_folds.push(f);
            continue;
        }
        usable.push((fit, train_set.subset(val)));
    }
    if usable.is_empty() {
        return Err(MvtpmError::invalid("every cross-validation fold lacks a class in its training part"));
    }

    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<GridPoint> = None;
    for &sigma in &grid.sigma_values {
        for &c1 in &grid.c1_values {
            for &c2 in &grid.c2_values {
                let hp = grid.hyperparams(c1, c2, sigma)?;
                let mut total = 0.0;
                for (fit, val) in &usable {
                    total += accuracy(&train(fit, &hp, &grid.solver)?, val)?;
                }
                let point = GridPoint {
                    c1,
                    c2,
                    sigma,
                    mean_accuracy: total / usable.len() as f64,
                };
                if best.as_ref().is_none_or(|b| better(&point, b)) {
                    best = Some(point);
                }
                table.push(point);
            }
        }
    }
    let best = best.expect("grid is non-empty");
    Ok(GridResult {
        best: grid.hyperparams(best.c1, best.c2, best.sigma)?,
        best_accuracy: best.mean_accuracy,
        table,
        skipped_folds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOptions {
    pub grid: GridSpec,
    pub folds: usize,
    pub seed: u64,
    pub split_ratio: f64,
    /// Solver settings for the final refit on the whole training split.
    pub solver: SolverOptions,
    pub model_name: String,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            grid: GridSpec::default(),
            folds: 5,
            seed: 0,
            split_ratio: 0.7,
            solver: SolverOptions::default(),
            model_name: "MvTPMSVM".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetOutcome {
    pub confusion: ConfusionCounts,
    pub metrics: MetricSet,
    pub params: Hyperparams,
    pub cv_accuracy: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub converged: bool,
    pub skipped_folds: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<DatasetOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub model: String,
    pub seed: u64,
    pub folds: usize,
    pub split_ratio: f64,
    pub grid: GridSpec,
    pub rows: Vec<DatasetRow>,
}

impl BenchmarkReport {
    /// `dataset,<model>` with test accuracy as a fraction, successful rows only.
    pub fn accuracy_csv(&self) -> String {
        let mut out = format!("dataset,{}\n", self.model);
        for row in &self.rows {
            if let Some(o) = &row.outcome {
                out.push_str(&format!("{},{:?}\n", row.dataset, o.metrics.accuracy));
            }
        }
        out
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Split, preprocess on the training side, tune, refit and test one dataset.
pub fn evaluate_source(src: &SourceData, cfg: &PreprocessConfig, opts: &BenchmarkOptions) -> Result<DatasetOutcome> {
    let (tr, te) = split_indices(src.len(), opts.split_ratio, opts.seed)?;
    let (train_src, test_src) = (src.subset(&tr), src.subset(&te));
    let pre = Preprocessor::fit(&train_src.view_a, train_src.view_b.as_ref(), cfg)?;
    let train_set = train_src.transform(&pre)?;
    let test_set = test_src.transform(&pre)?;
    let grid = cross_validate_grid(&train_set, &opts.grid, opts.folds, opts.seed)?;
    let model = train(&train_set, &grid.best, &opts.solver)?;
    let predicted: Vec<i8> = model.predict(&test_set.view_a, &test_set.view_b)?.into_iter().map(|(_, l)| l).collect();
    let confusion = ConfusionCounts::from_labels(&test_set.labels, &predicted)?;
    Ok(DatasetOutcome {
        metrics: compute_metrics(&confusion)?,
        confusion,
        params: grid.best,
        cv_accuracy: grid.best_accuracy,
        train_size: tr.len(),
        test_size: te.len(),
        converged: model.diagnostics.converged(),
        skipped_folds: grid.skipped_folds,
    })
}

/// Runs every manifest; a failing dataset is recorded and the run goes on.
pub fn run_benchmark(manifests: &[DatasetManifest], opts: &BenchmarkOptions) -> BenchmarkReport {
    let rows = manifests
        .iter()
        .map(|m| {
            let result = load_source(m).and_then(|src| evaluate_source(&src, &m.preprocess_config(), opts));
            match result {
                Ok(outcome) => DatasetRow {
                    dataset: m.name.clone(),
                    outcome: Some(outcome),
                    error: None,
                },
                Err(e) => DatasetRow {
                    dataset: m.name.clone(),
                    outcome: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    BenchmarkReport {
        schema: REPORT_SCHEMA.into(),
        model: opts.model_name.clone(),
        seed: opts.seed,
        folds: opts.folds,
        split_ratio: opts.split_ratio,
        grid: opts.grid.clone(),
        rows,
    }
}
