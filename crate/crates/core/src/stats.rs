//! Rank-based comparison of several models over several datasets: average
//! ranks, the Friedman statistics, the Nemenyi critical difference and the
//! pairwise win-tie-loss sign test.
//!
//! Ties are exact value equality on the input matrix; no tolerance is applied.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MvtpmError, Result};

pub const STATS_SCHEMA: &str = "mvtpm-stats/1";

/// Two-sided 5% normal quantile used by the sign test.
pub const SIGN_TEST_Z: f64 = 1.96;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccuracyUnit {
    /// Values in `[0, 1]`.
    Fraction,
    /// Values in `[0, 100]`.
    Percent,
}

impl AccuracyUnit {
    fn upper(self) -> f64 {
        match self {
            AccuracyUnit::Fraction => 1.0,
            AccuracyUnit::Percent => 100.0,
        }
    }
}

impl std::str::FromStr for AccuracyUnit {
    type Err = MvtpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fraction" => Ok(AccuracyUnit::Fraction),
            "percent" => Ok(AccuracyUnit::Percent),
            other => Err(MvtpmError::invalid(format!("unknown accuracy unit '{other}' (fraction or percent)"))),
        }
    }
}

/// `N` datasets by `k` models.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyMatrix {
    values: DMatrix<f64>,
    datasets: Vec<String>,
    models: Vec<String>,
    unit: AccuracyUnit,
}

impl AccuracyMatrix {
    pub fn new(values: DMatrix<f64>, datasets: Vec<String>, models: Vec<String>, unit: AccuracyUnit) -> Result<Self> {
        let (n, k) = values.shape();
        if n < 2 || k < 2 {
            return Err(MvtpmError::invalid(format!("need at least 2 datasets and 2 models, got {n}x{k}")));
        }
        if datasets.len() != n || models.len() != k {
            return Err(MvtpmError::invalid("name lists do not match the matrix shape"));
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(MvtpmError::invalid(format!("non-finite accuracy at entry {idx}")));
            }
            if *v < 0.0 || *v > unit.upper() {
                return Err(MvtpmError::invalid(format!(
                    "accuracy {v} outside [0, {}] for unit {unit:?}",
                    unit.upper()
                )));
            }
        }
        Ok(AccuracyMatrix {
            values,
            datasets,
            models,
            unit,
        })
    }

    /// Header row of model names, first column of dataset names.
    pub fn from_csv_str(text: &str, unit: AccuracyUnit) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| MvtpmError::Parse(e.to_string()))?.clone();
        if header.len() < 2 {
            return Err(MvtpmError::Parse("accuracy CSV needs a dataset column and at least one model column".into()));
        }
        let models: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut datasets = Vec::new();
        let mut data = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| MvtpmError::Parse(e.to_string()))?;
            datasets.push(rec[0].to_string());
            for (c, field) in rec.iter().enumerate().skip(1) {
                let v: f64 = field.parse().map_err(|_| {
                    MvtpmError::Parse(format!("row {}, column {}: '{field}' is not a number", r + 2, c + 1))
                })?;
                data.push(v);
            }
        }
        let values = DMatrix::from_row_slice(datasets.len(), models.len(), &data);
        Self::new(values, datasets, models, unit)
    }

    pub fn load_csv(path: impl AsRef<Path>, unit: AccuracyUnit) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MvtpmError::io(path, e))?;
        Self::from_csv_str(&text, unit)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn unit(&self) -> AccuracyUnit {
        self.unit
    }

    pub fn n_datasets(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_models(&self) -> usize {
        self.values.ncols()
    }
}

/// Ranks of one row, 1 for the highest value, ties sharing the mean of
/// their positions.
pub fn rank_row(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share rank ((i+1) + (j+1)) / 2.
        let shared = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            ranks[o] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank `R_j` of each model.
pub fn average_ranks(acc: &AccuracyMatrix) -> Vec<f64> {
    let (n, k) = acc.values.shape();
    let mut totals = vec![0.0; k];
    for i in 0..n {
        let row: Vec<f64> = acc.values.row(i).iter().copied().collect();
        for (t, r) in totals.iter_mut().zip(rank_row(&row)) {
            *t += r;
        }
    }
    totals.into_iter().map(|t| t / n as f64).collect()
}

/// `χ²_F = 12N / (k(k+1)) · (Σ R_j² − k(k+1)²/4)`.
pub fn friedman_chi_squared(ranks: &[f64], n: usize) -> Result<f64> {
    let k = ranks.len();
    if k < 2 || n < 2 {
        return Err(MvtpmError::invalid(format!("Friedman test needs k >= 2 and N >= 2, got k={k}, N={n}")));
    }
    if ranks.iter().any(|r| !r.is_finite()) {
        return Err(MvtpmError::invalid("non-finite average rank"));
    }
    let (k, n) = (k as f64, n as f64);
    let sum_sq: f64 = ranks.iter().map(|r| r * r).sum();
    Ok(12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0))
}

/// `F_F = (N − 1)·χ²_F / (N(k − 1) − χ²_F)`.
pub fn friedman_f_statistic(chi2: f64, n: usize, k: usize) -> Result<f64> {
    let denom = n as f64 * (k as f64 - 1.0) - chi2;
    if !(denom > 0.0) {
        return Err(MvtpmError::Numerical(format!(
            "F statistic undefined: N(k-1) - chi2 = {denom} is not positive"
        )));
    }
    Ok((n as f64 - 1.0) * chi2 / denom)
}

/// `C.D. = q_α · sqrt(k(k+1) / (6N))`.
pub fn nemenyi_critical_difference(k: usize, n: usize, q_alpha: f64) -> f64 {
    let (k, n) = (k as f64, n as f64);
    q_alpha * (k * (k + 1.0) / (6.0 * n)).sqrt()
}

/// Wins needed for a significant pairwise difference, `N/2 + 1.96·√N`.
pub fn win_tie_loss_threshold(n: usize) -> f64 {
    let n = n as f64;
    n / 2.0 + SIGN_TEST_Z * n.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub model: String,
    pub opponent: String,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    /// Wins plus half the ties (one tie dropped when their count is odd).
    pub effective_wins: usize,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinTieLossTable {
    pub threshold: f64,
    /// Every ordered pair of distinct models, row-major in model order.
    pub pairs: Vec<PairOutcome>,
}

impl WinTieLossTable {
    pub fn get(&self, model: &str, opponent: &str) -> Option<&PairOutcome> {
        self.pairs.iter().find(|p| p.model == model && p.opponent == opponent)
    }
}

/// Ties are split evenly between the two models; with an odd count one tie
/// is discarded first.
pub fn effective_wins(wins: usize, ties: usize) -> usize {
    wins + ties / 2
}

pub fn win_tie_loss_table(acc: &AccuracyMatrix) -> WinTieLossTable {
    let (n, k) = acc.values.shape();
    let threshold = win_tie_loss_threshold(n);
    let mut pairs = Vec::with_capacity(k * (k - 1));
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let (mut wins, mut ties, mut losses) = (0, 0, 0);
            for i in 0..n {
                let (x, y) = (acc.values[(i, a)], acc.values[(i, b)]);
                if x > y {
                    wins += 1;
                } else if x < y {
                    losses += 1;
                } else {
                    ties += 1;
                }
            }
            let eff = effective_wins(wins, ties);
            pairs.push(PairOutcome {
                model: acc.models[a].clone(),
                opponent: acc.models[b].clone(),
                wins,
                ties,
                losses,
                effective_wins: eff,
                significant: eff as f64 >= threshold,
            });
        }
    }
    WinTieLossTable { threshold, pairs }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub schema: String,
    pub datasets: usize,
    pub models: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub chi_squared: f64,
    /// `None` when the F statistic is undefined (saturated χ²).
    pub f_statistic: Option<f64>,
    pub q_alpha: f64,
    pub critical_difference: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub win_tie_loss: Option<WinTieLossTable>,
}

impl StatsReport {
    /// Friedman and Nemenyi figures from average ranks alone.
    pub fn from_ranks(models: Vec<String>, ranks: Vec<f64>, n: usize, q_alpha: f64) -> Result<Self> {
        if models.len() != ranks.len() {
            return Err(MvtpmError::invalid("one model name per rank is required"));
        }
        let k = ranks.len();
        let chi2 = friedman_chi_squared(&ranks, n)?;
        Ok(StatsReport {
            schema: STATS_SCHEMA.into(),
            datasets: n,
            models,
            average_ranks: ranks,
            chi_squared: chi2,
            f_statistic: friedman_f_statistic(chi2, n, k).ok(),
            q_alpha,
            critical_difference: nemenyi_critical_difference(k, n, q_alpha),
            win_tie_loss: None,
        })
    }

    pub fn from_matrix(acc: &AccuracyMatrix, q_alpha: f64) -> Result<Self> {
        let mut report = Self::from_ranks(acc.models.clone(), average_ranks(acc), acc.n_datasets(), q_alpha)?;
        report.win_tie_loss = Some(win_tie_loss_table(acc));
        Ok(report)
    }
}
