//! Two-view datasets: manifests, CSV ingestion, seeded splits and folds, and
//! the synthetic two-view generators.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MvtpmError, Result};
use crate::preprocess::{PreprocessConfig, Preprocessor, ScalingMode};

pub const MANIFEST_SCHEMA: &str = "mvtpm-manifest/1";
pub const DEFAULT_PCA_THRESHOLD: f64 = 0.95;

/// Original label values for the `+1` and `−1` classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub positive: String,
    pub negative: String,
}

impl LabelMap {
    pub fn signed() -> Self {
        LabelMap {
            positive: "1".into(),
            negative: "-1".into(),
        }
    }

    pub fn name_of(&self, label: i8) -> &str {
        if label > 0 {
            &self.positive
        } else {
            &self.negative
        }
    }

    /// `+1` for the positive value, `−1` for the negative one.
    pub fn encode(&self, raw: &str) -> Option<i8> {
        if raw == self.positive {
            Some(1)
        } else if raw == self.negative {
            Some(-1)
        } else {
            None
        }
    }
}

/// Aligned view-A / view-B samples with `±1` labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoViewDataset {
    pub name: String,
    pub view_a: DMatrix<f64>,
    pub view_b: DMatrix<f64>,
    pub labels: Vec<i8>,
    pub label_map: LabelMap,
}

fn check_labels(labels: &[i8]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(MvtpmError::invalid(format!("labels must be +1 or -1, found {bad}")));
    }
    Ok(())
}

fn select_rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

impl TwoViewDataset {
    pub fn new(name: impl Into<String>, view_a: DMatrix<f64>, view_b: DMatrix<f64>, labels: Vec<i8>, label_map: LabelMap) -> Result<Self> {
        if view_a.nrows() != labels.len() || view_b.nrows() != labels.len() {
            return Err(MvtpmError::invalid(format!(
                "row counts disagree: view A {}, view B {}, labels {}",
                view_a.nrows(),
                view_b.nrows(),
                labels.len()
            )));
        }
        if view_a.ncols() == 0 || view_b.ncols() == 0 {
            return Err(MvtpmError::invalid("each view needs at least one feature"));
        }
        check_labels(&labels)?;
        Ok(TwoViewDataset {
            name: name.into(),
            view_a,
            view_b,
            labels,
            label_map,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of `+1` samples.
    pub fn m1(&self) -> usize {
        self.labels.iter().filter(|&&l| l > 0).count()
    }

    /// Number of `−1` samples.
    pub fn m2(&self) -> usize {
        self.len() - self.m1()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        TwoViewDataset {
            name: self.name.clone(),
            view_a: select_rows(&self.view_a, idx),
            view_b: select_rows(&self.view_b, idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            label_map: self.label_map.clone(),
        }
    }

    /// Same samples with every label negated and the label map swapped.
    pub fn negated(&self) -> Self {
        TwoViewDataset {
            labels: self.labels.iter().map(|l| -l).collect(),
            label_map: LabelMap {
                positive: self.label_map.negative.clone(),
                negative: self.label_map.positive.clone(),
            },
            ..self.clone()
        }
    }
}

/// Loaded data before preprocessing; view B may still need synthesis.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceData {
    pub name: String,
    pub view_a: DMatrix<f64>,
    pub view_b: Option<DMatrix<f64>>,
    pub labels: Vec<i8>,
    pub label_map: LabelMap,
}

impl SourceData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        SourceData {
            name: self.name.clone(),
            view_a: select_rows(&self.view_a, idx),
            view_b: self.view_b.as_ref().map(|b| select_rows(b, idx)),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            label_map: self.label_map.clone(),
        }
    }

    /// Applies a fitted preprocessor, producing both views.
    pub fn transform(&self, pre: &Preprocessor) -> Result<TwoViewDataset> {
        let (a, b) = pre.transform(&self.view_a, self.view_b.as_ref())?;
        TwoViewDataset::new(self.name.clone(), a, b, self.labels.clone(), self.label_map.clone())
    }
}

impl From<TwoViewDataset> for SourceData {
    fn from(ds: TwoViewDataset) -> Self {
        SourceData {
            name: ds.name,
            view_a: ds.view_a,
            view_b: Some(ds.view_b),
            labels: ds.labels,
            label_map: ds.label_map,
        }
    }
}

/// Column reference: zero-based index or header name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSource {
    /// File holding the label column; `None` means the view-A file, in which
    /// case the column is removed from the view-A features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub column: ColumnRef,
}

fn default_schema() -> String {
    MANIFEST_SCHEMA.to_string()
}

/// JSON description of a dataset on disk (schema `mvtpm-manifest/1`).
/// Relative paths resolve against the manifest's own directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub name: String,
    pub view_a: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_b: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    #[serde(default)]
    pub header: bool,
    #[serde(default)]
    pub scaling: ScalingMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca_threshold: Option<f64>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn from_json_str(s: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: DatasetManifest = serde_json::from_str(s)?;
        m.base_dir = base_dir.into();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MvtpmError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json_str(&text, base)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| MvtpmError::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != MANIFEST_SCHEMA {
            return Err(MvtpmError::Parse(format!(
                "unsupported manifest schema '{}', expected '{MANIFEST_SCHEMA}'",
                self.schema
            )));
        }
        if self.view_b.is_some() && self.pca_threshold.is_some() {
            return Err(MvtpmError::invalid("manifest gives both view_b and pca_threshold; choose one source for view B"));
        }
        if let Some(t) = self.pca_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return Err(MvtpmError::invalid(format!("pca_threshold must lie in (0, 1], got {t}")));
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Preprocessing implied by the manifest. View B is synthesized by PCA
    /// whenever no view-B file is given.
    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            scaling: self.scaling,
            pca_threshold: self.view_b.is_none().then(|| self.pca_threshold.unwrap_or(DEFAULT_PCA_THRESHOLD)),
        }
    }
}

struct Table {
    header: Option<Vec<String>>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path, header: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = if header {
        Some(rdr.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}

fn csv_error(path: &Path, e: csv::Error) -> MvtpmError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => MvtpmError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        MvtpmError::Parse(format!("{}: {e}", path.display()))
    }
}

fn column_index(table: &Table, col: &ColumnRef, path: &Path) -> Result<usize> {
    let ncols = table.rows.first().map(Vec::len).or(table.header.as_ref().map(Vec::len)).unwrap_or(0);
    match col {
        ColumnRef::Index(i) if *i < ncols => Ok(*i),
        ColumnRef::Index(i) => Err(MvtpmError::MissingColumn(format!(
            "label column {i} not present in {} ({ncols} columns)",
            path.display()
        ))),
        ColumnRef::Name(name) => table
            .header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| MvtpmError::MissingColumn(format!("label column '{name}' not found in {}", path.display()))),
    }
}

fn parse_matrix(rows: &[Vec<String>], skip: Option<usize>, path: &Path) -> Result<DMatrix<f64>> {
    let width = rows.first().map(|r| r.len() - usize::from(skip.is_some())).unwrap_or(0);
    let mut data = Vec::with_capacity(rows.len() * width);
    for (r, row) in rows.iter().enumerate() {
        for (c, field) in row.iter().enumerate() {
            if Some(c) == skip {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                MvtpmError::Parse(format!("{}: row {}, column {}: '{field}' is not a number", path.display(), r + 1, c + 1))
            })?;
            data.push(v);
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), width, &data))
}

/// Raw contents referenced by a manifest: features and optional label strings.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTables {
    pub view_a: DMatrix<f64>,
    pub view_b: Option<DMatrix<f64>>,
    pub labels: Option<Vec<String>>,
}

pub fn read_tables(manifest: &DatasetManifest) -> Result<RawTables> {
    manifest.validate()?;
    let a_path = manifest.resolve(&manifest.view_a);
    let a_table = read_table(&a_path, manifest.header)?;

    let (labels, skip) = match &manifest.labels {
        None => (None, None),
        Some(LabelSource { path: None, column }) => {
            let idx = column_index(&a_table, column, &a_path)?;
            (Some(a_table.rows.iter().map(|r| r[idx].clone()).collect::<Vec<_>>()), Some(idx))
        }
        Some(LabelSource { path: Some(p), column }) => {
            let lp = manifest.resolve(p);
            let t = read_table(&lp, manifest.header)?;
            let idx = column_index(&t, column, &lp)?;
            (Some(t.rows.iter().map(|r| r[idx].clone()).collect::<Vec<_>>()), None)
        }
    };
    let view_a = parse_matrix(&a_table.rows, skip, &a_path)?;
    let view_b = match &manifest.view_b {
        Some(p) => {
            let bp = manifest.resolve(p);
            Some(parse_matrix(&read_table(&bp, manifest.header)?.rows, None, &bp)?)
        }
        None => None,
    };

    if let Some(b) = &view_b {
        if b.nrows() != view_a.nrows() {
            return Err(MvtpmError::Parse(format!(
                "view A has {} rows but view B has {}",
                view_a.nrows(),
                b.nrows()
            )));
        }
    }
    if let Some(l) = &labels {
        if l.len() != view_a.nrows() {
            return Err(MvtpmError::Parse(format!(
                "view A has {} rows but there are {} labels",
                view_a.nrows(),
                l.len()
            )));
        }
    }
    Ok(RawTables { view_a, view_b, labels })
}

/// Maps raw label strings to `±1`. Exactly two distinct values are required;
/// `positive` selects the `+1` class (default: the lexicographically first).
pub fn binarize_labels(raw: &[String], positive: Option<&str>) -> Result<(Vec<i8>, LabelMap)> {
    let distinct: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
    if distinct.len() != 2 {
        return Err(MvtpmError::invalid(format!(
            "expected exactly two distinct labels, found {}: {:?}",
            distinct.len(),
            distinct.iter().take(10).collect::<Vec<_>>()
        )));
    }
    let mut it = distinct.into_iter();
    let (first, second) = (it.next().unwrap(), it.next().unwrap());
    let map = match positive {
        None => LabelMap {
            positive: first.into(),
            negative: second.into(),
        },
        Some(p) if p == first => LabelMap {
            positive: first.into(),
            negative: second.into(),
        },
        Some(p) if p == second => LabelMap {
            positive: second.into(),
            negative: first.into(),
        },
        Some(p) => {
            return Err(MvtpmError::invalid(format!(
                "positive label '{p}' is not one of the observed labels '{first}', '{second}'"
            )))
        }
    };
    let labels = raw.iter().map(|r| map.encode(r).unwrap()).collect();
    Ok((labels, map))
}

/// Labelled data referenced by a manifest, without preprocessing.
pub fn load_source(manifest: &DatasetManifest) -> Result<SourceData> {
    let tables = read_tables(manifest)?;
    let raw = tables
        .labels
        .ok_or_else(|| MvtpmError::MissingColumn(format!("manifest '{}' does not name a label column", manifest.name)))?;
    let (labels, label_map) = binarize_labels(&raw, manifest.positive_label.as_deref())?;
    Ok(SourceData {
        name: manifest.name.clone(),
        view_a: tables.view_a,
        view_b: tables.view_b,
        labels,
        label_map,
    })
}

/// Loads a dataset and produces both views, fitting the manifest's scaling
/// (and, without a view-B file, the PCA that synthesizes view B) on all rows.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<TwoViewDataset> {
    let src = load_source(manifest)?;
    let pre = Preprocessor::fit(&src.view_a, src.view_b.as_ref(), &manifest.preprocess_config())?;
    src.transform(&pre)
}

/// Seeded permutation split: the first `⌊ratio·n⌋` permuted indices form the
/// training side.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MvtpmError::invalid(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let n_train = (ratio * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(MvtpmError::invalid(format!("ratio {ratio} on {n} samples leaves one side empty")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn train_test_split(ds: &TwoViewDataset, ratio: f64, seed: u64) -> Result<(TwoViewDataset, TwoViewDataset)> {
    let (tr, te) = split_indices(ds.len(), ratio, seed)?;
    Ok((ds.subset(&tr), ds.subset(&te)))
}

/// `k` disjoint folds covering `0..n` after a seeded shuffle; fold sizes
/// differ by at most one, larger folds first.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(MvtpmError::invalid(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(MvtpmError::invalid(format!("cannot split {n} samples into {k} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Folds that keep each class spread evenly: each class is shuffled and dealt
/// round-robin, continuing the deal across classes.
pub fn stratified_kfold_indices(labels: &[i8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || labels.len() < k {
        return Err(MvtpmError::invalid(format!("cannot split {} samples into {k} folds", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    Ok(folds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    /// Concentric circles (view A) and double vortex (view B).
    Synthetic1,
    /// Gaussian clouds (view A) and checkerboard (view B).
    Synthetic2,
    /// Double square (view A) and double moon (view B).
    Synthetic3,
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Synthetic1 => "synthetic1",
            SyntheticKind::Synthetic2 => "synthetic2",
            SyntheticKind::Synthetic3 => "synthetic3",
        }
    }

    /// Default sample count for each set.
    pub fn reference_size(self) -> usize {
        match self {
            SyntheticKind::Synthetic1 => 800,
            SyntheticKind::Synthetic2 => 1200,
            SyntheticKind::Synthetic3 => 2000,
        }
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = MvtpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic1" => Ok(SyntheticKind::Synthetic1),
            "synthetic2" => Ok(SyntheticKind::Synthetic2),
            "synthetic3" => Ok(SyntheticKind::Synthetic3),
            other => Err(MvtpmError::invalid(format!(
                "unknown synthetic dataset '{other}' (expected synthetic1, synthetic2 or synthetic3)"
            ))),
        }
    }
}

/// Shape constants of the synthetic generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub circle_radii: (f64, f64),
    pub circle_noise: f64,
    pub vortex_turns: f64,
    pub vortex_noise: f64,
    pub cloud_center: f64,
    pub cloud_variance: f64,
    pub checker_cells: usize,
    pub moon_radius: f64,
    pub moon_width: f64,
    pub moon_offset: f64,
    pub band_width: f64,
    pub band_length: f64,
    pub band_offset: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            circle_radii: (1.0, 2.0),
            circle_noise: 0.1,
            vortex_turns: 1.5,
            vortex_noise: 0.1,
            cloud_center: 1.5,
            cloud_variance: 0.5,
            checker_cells: 2,
            moon_radius: 1.0,
            moon_width: 0.6,
            moon_offset: 0.4,
            band_width: 1.0,
            band_length: 2.0,
            band_offset: 1.5,
        }
    }
}

fn circle_point(rng: &mut ChaCha8Rng, radius: f64, noise: &Normal<f64>) -> [f64; 2] {
    let theta = rng.random_range(0.0..2.0 * PI);
    let r = radius + noise.sample(rng);
    [r * theta.cos(), r * theta.sin()]
}

/// Archimedean spiral arm `r = θ/π`, rotated by π for the second class.
fn vortex_point(rng: &mut ChaCha8Rng, positive: bool, turns: f64, noise: &Normal<f64>) -> [f64; 2] {
    let theta = rng.random_range(0.25 * PI..2.0 * PI * turns);
    let phase = if positive { 0.0 } else { PI };
    let r = theta / PI;
    [
        r * (theta + phase).cos() + noise.sample(rng),
        r * (theta + phase).sin() + noise.sample(rng),
    ]
}

fn cloud_point(rng: &mut ChaCha8Rng, positive: bool, cfg: &SyntheticConfig) -> [f64; 2] {
    let std = Normal::new(0.0, cfg.cloud_variance.sqrt()).unwrap();
    let cx = if positive { cfg.cloud_center } else { -cfg.cloud_center };
    [cx + std.sample(rng), std.sample(rng)]
}

/// Uniform point in a random cell of the checkerboard colour owned by the class.
fn checker_point(rng: &mut ChaCha8Rng, positive: bool, cells: usize) -> [f64; 2] {
    loop {
        let i = rng.random_range(0..cells);
        let j = rng.random_range(0..cells);
        if ((i + j) % 2 == 0) == positive {
            return [i as f64 + rng.random::<f64>(), j as f64 + rng.random::<f64>()];
        }
    }
}

fn band_point(rng: &mut ChaCha8Rng, positive: bool, cfg: &SyntheticConfig) -> [f64; 2] {
    let x0 = if positive { 0.0 } else { cfg.band_offset };
    [x0 + cfg.band_width * rng.random::<f64>(), cfg.band_length * rng.random::<f64>()]
}

fn moon_point(rng: &mut ChaCha8Rng, positive: bool, cfg: &SyntheticConfig) -> [f64; 2] {
    let r = cfg.moon_radius + cfg.moon_width * (rng.random::<f64>() - 0.5);
    let theta = rng.random_range(0.0..PI);
    if positive {
        [r * theta.cos(), r * theta.sin()]
    } else {
        [cfg.moon_radius - r * theta.cos(), -cfg.moon_offset - r * theta.sin()]
    }
}

/// Balanced synthetic two-view dataset with the default shape constants.
pub fn generate_synthetic(kind: SyntheticKind, n: usize, seed: u64) -> Result<TwoViewDataset> {
    generate_synthetic_with(kind, n, seed, &SyntheticConfig::default())
}

/// `n/2` samples per class; both views share labels row by row. Rows are
/// emitted in a seeded random class order.
pub fn generate_synthetic_with(kind: SyntheticKind, n: usize, seed: u64, cfg: &SyntheticConfig) -> Result<TwoViewDataset> {
    if n < 4 || n % 2 != 0 {
        return Err(MvtpmError::invalid(format!("synthetic size must be even and at least 4, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<i8> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
    labels.shuffle(&mut rng);

    let circle_noise = Normal::new(0.0, cfg.circle_noise).map_err(|e| MvtpmError::invalid(e.to_string()))?;
    let vortex_noise = Normal::new(0.0, cfg.vortex_noise).map_err(|e| MvtpmError::invalid(e.to_string()))?;
    let mut a = Vec::with_capacity(2 * n);
    let mut b = Vec::with_capacity(2 * n);
    for &l in &labels {
        let pos = l > 0;
        let (pa, pb) = match kind {
            SyntheticKind::Synthetic1 => {
                let radius = if pos { cfg.circle_radii.0 } else { cfg.circle_radii.1 };
                (
                    circle_point(&mut rng, radius, &circle_noise),
                    vortex_point(&mut rng, pos, cfg.vortex_turns, &vortex_noise),
                )
            }
            SyntheticKind::Synthetic2 => (cloud_point(&mut rng, pos, cfg), checker_point(&mut rng, pos, cfg.checker_cells)),
            SyntheticKind::Synthetic3 => (band_point(&mut rng, pos, cfg), moon_point(&mut rng, pos, cfg)),
        };
        a.extend(pa);
        b.extend(pb);
    }
    TwoViewDataset::new(
        kind.name(),
        DMatrix::from_row_slice(n, 2, &a),
        DMatrix::from_row_slice(n, 2, &b),
        labels,
        LabelMap::signed(),
    )
}

/// Writes a matrix as header-less CSV with round-trip float formatting.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| MvtpmError::io(path, e))
}

pub fn write_labels_csv(path: impl AsRef<Path>, labels: &[i8], map: &LabelMap) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for &l in labels {
        out.push_str(map.name_of(l));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| MvtpmError::io(path, e))
}

/// Writes `viewA.csv`, `viewB.csv`, `labels.csv` and `manifest.json` into
/// `dir` and returns the manifest.
pub fn write_dataset(dir: impl AsRef<Path>, ds: &TwoViewDataset) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| MvtpmError::io(dir, e))?;
    write_matrix_csv(dir.join("viewA.csv"), &ds.view_a)?;
    write_matrix_csv(dir.join("viewB.csv"), &ds.view_b)?;
    write_labels_csv(dir.join("labels.csv"), &ds.labels, &ds.label_map)?;
    let manifest = DatasetManifest {
        schema: MANIFEST_SCHEMA.into(),
        name: ds.name.clone(),
        view_a: "viewA.csv".into(),
        view_b: Some("viewB.csv".into()),
        labels: Some(LabelSource {
            path: Some("labels.csv".into()),
            column: ColumnRef::Index(0),
        }),
        positive_label: Some(ds.label_map.positive.clone()),
        header: false,
        scaling: ScalingMode::Minmax01,
        pca_threshold: None,
        base_dir: dir.to_path_buf(),
    };
    manifest.save(dir.join("manifest.json"))?;
    Ok(manifest)
}
