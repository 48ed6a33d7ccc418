//! CSV feature tables, normalization and the synthetic shifted-Gaussian generator.
//!
//! A domain file has one sample per row: the class label first (`-1` marks an
//! unlabeled sample), then the features. In memory samples are columns.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statistics::LabeledData;

const UNLABELED: i64 = -1;
const STD_EPS: f64 = 1e-12;

/// A loaded domain file.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainFile {
    pub path: PathBuf,
    /// `m × n`.
    pub x: DMatrix<f64>,
    /// `None` for rows labeled `-1`.
    pub labels: Vec<Option<usize>>,
}

impl DomainFile {
    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    /// True when every sample carries a label.
    pub fn labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    pub fn known_labels(&self) -> Option<Vec<usize>> {
        self.labels.iter().copied().collect()
    }

    pub fn into_labeled(self) -> Result<LabeledData> {
        let labels = self.known_labels().ok_or_else(|| {
            Error::invalid(format!("{} contains unlabeled samples", self.path.display()))
        })?;
        LabeledData::from_labels(self.x, labels)
    }
}

fn parse_error(path: &Path, row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: message.into(),
    }
}

/// Reads a label-first CSV. Rows and columns in errors are 1-based and count
/// the header line when there is one.
pub fn load_domain_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DomainFile> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let first_row = if has_header { 2 } else { 1 };
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let row = first_row + i;
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() < 2 {
            return Err(parse_error(path, row, record.len().max(1), "expected a label and at least one feature"));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_error(
                    path,
                    row,
                    record.len().min(w) + 1,
                    format!("row has {} fields, expected {w}", record.len()),
                ));
            }
            _ => {}
        }
        let label: i64 = record[0]
            .parse()
            .map_err(|_| parse_error(path, row, 1, format!("label {:?} is not an integer", &record[0])))?;
        labels.push(match label {
            UNLABELED => None,
            l if l >= 1 => Some(l as usize),
            l => return Err(parse_error(path, row, 1, format!("label {l} must be >= 1 or -1"))),
        });
        for (j, cell) in record.iter().enumerate().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(path, row, j + 1, format!("{cell:?} is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(path, row, j + 1, format!("{cell:?} is not finite")));
            }
            values.push(v);
        }
    }
    let Some(width) = width else {
        return Err(parse_error(path, first_row, 1, "file has no data rows"));
    };
    let m = width - 1;
    let n = labels.len();
    Ok(DomainFile {
        path: path.to_path_buf(),
        x: DMatrix::from_column_slice(m, n, &values),
        labels,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_error(path, row, 0, format!("{other:?}")),
    }
}

/// Writes a label-first CSV without header. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn save_domain_csv(path: impl AsRef<Path>, x: &DMatrix<f64>, labels: &[Option<usize>]) -> Result<()> {
    if labels.len() != x.ncols() {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            labels.len(),
            x.ncols()
        )));
    }
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path.as_ref())?));
    let mut fields = Vec::with_capacity(x.nrows() + 1);
    for (j, label) in labels.iter().enumerate() {
        fields.clear();
        fields.push(label.map_or(UNLABELED.to_string(), |l| l.to_string()));
        fields.extend(x.column(j).iter().map(|v| format!("{v:?}")));
        writer.write_record(&fields).map_err(|e| csv_error(path.as_ref(), e))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_labeled_csv(path: impl AsRef<Path>, x: &DMatrix<f64>, labels: &[usize]) -> Result<()> {
    let labels: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).collect();
    save_domain_csv(path, x, &labels)
}

/// One label per line; blank lines are ignored.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<usize>() {
            Ok(l) if l >= 1 => out.push(l),
            _ => return Err(parse_error(path, i + 1, 1, format!("label {t:?} must be an integer >= 1"))),
        }
    }
    if out.is_empty() {
        return Err(parse_error(path, 1, 1, "file has no labels"));
    }
    Ok(out)
}

pub fn save_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NormMode {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "zscore")]
    Zscore,
    #[default]
    #[serde(rename = "zscore+l2")]
    ZscoreL2,
}

impl FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NormMode::None),
            "zscore" => Ok(NormMode::Zscore),
            "zscore+l2" => Ok(NormMode::ZscoreL2),
            other => Err(Error::invalid(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn compute(x: &DMatrix<f64>) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(Error::invalid("cannot compute statistics of zero samples"));
        }
        let n = x.ncols() as f64;
        let mut mean = Vec::with_capacity(x.nrows());
        let mut std = Vec::with_capacity(x.nrows());
        for row in x.row_iter() {
            let mu = row.sum() / n;
            let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mean.push(mu);
            std.push(var.sqrt());
        }
        Ok(NormStats { mean, std })
    }

    pub fn identity(m: usize) -> Self {
        NormStats {
            mean: vec![0.0; m],
            std: vec![1.0; m],
        }
    }
}

/// Unit-length columns; zero columns stay zero.
pub fn unit_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    out
}

/// Applies `mode` using `stats` when given, otherwise statistics of `x` itself.
pub fn normalize(x: &DMatrix<f64>, mode: NormMode, stats: Option<&NormStats>) -> Result<(DMatrix<f64>, NormStats)> {
    if mode == NormMode::None {
        return Ok((x.clone(), stats.cloned().unwrap_or_else(|| NormStats::identity(x.nrows()))));
    }
    let stats = match stats {
        Some(s) => s.clone(),
        None => NormStats::compute(x)?,
    };
    if stats.mean.len() != x.nrows() || stats.std.len() != x.nrows() {
        return Err(Error::invalid(format!(
            "statistics for {} features applied to {} features",
            stats.mean.len(),
            x.nrows()
        )));
    }
    let mut out = x.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        let scale = stats.std[i].max(STD_EPS);
        row.apply(|v| *v = (*v - stats.mean[i]) / scale);
    }
    if mode == NormMode::ZscoreL2 {
        out = unit_columns(&out);
    }
    Ok((out, stats))
}

/// Normalizes both domains with statistics of their union.
pub fn normalize_pair(
    x_s: &DMatrix<f64>,
    x_t: &DMatrix<f64>,
    mode: NormMode,
) -> Result<(DMatrix<f64>, DMatrix<f64>, NormStats)> {
    if x_s.nrows() != x_t.nrows() {
        return Err(Error::invalid(format!(
            "source has {} features, target has {}",
            x_s.nrows(),
            x_t.nrows()
        )));
    }
    let joint = crate::statistics::stack_columns(x_s, x_t);
    let stats = match mode {
        NormMode::None => NormStats::identity(x_s.nrows()),
        _ => NormStats::compute(&joint)?,
    };
    let (a, _) = normalize(x_s, mode, Some(&stats))?;
    let (b, _) = normalize(x_t, mode, Some(&stats))?;
    Ok((a, b, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub m: usize,
    pub n_per_class_source: usize,
    pub n_per_class_target: usize,
    pub class_sep: f64,
    pub domain_rotation_deg: f64,
    pub domain_shift: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            classes: 4,
            m: 20,
            n_per_class_source: 50,
            n_per_class_target: 50,
            class_sep: 4.0,
            domain_rotation_deg: 30.0,
            domain_shift: 2.0,
            noise_sigma: 1.0,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        let need = (self.classes - 1).max(2);
        if self.m < need {
            return Err(Error::invalid(format!(
                "{} classes need at least {need} dimensions",
                self.classes
            )));
        }
        if self.n_per_class_source == 0 || self.n_per_class_target == 0 {
            return Err(Error::invalid("per-class counts must be >= 1"));
        }
        if !(self.class_sep > 0.0 && self.class_sep.is_finite()) {
            return Err(Error::invalid("class separation must be > 0"));
        }
        for (name, v) in [
            ("rotation", self.domain_rotation_deg),
            ("shift", self.domain_shift),
            ("noise", self.noise_sigma),
        ] {
            if !v.is_finite() || (name != "rotation" && v < 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Class means as columns: simplex vertices in the first `C − 1`
    /// coordinates with pairwise distance `class_sep`.
    pub fn class_means(&self) -> DMatrix<f64> {
        let c = self.classes;
        let mut means = DMatrix::zeros(self.m, c);
        // Helmert basis of the sum-zero subspace of R^C
        for k in 1..c {
            let norm = ((k * (k + 1)) as f64).sqrt();
            for vertex in 0..c {
                let coord = if vertex < k {
                    1.0 / norm
                } else if vertex == k {
                    -(k as f64) / norm
                } else {
                    0.0
                };
                means[(k - 1, vertex)] = coord * self.class_sep / std::f64::consts::SQRT_2;
            }
        }
        means
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub source: LabeledData,
    pub target_x: DMatrix<f64>,
    pub target_truth: Vec<usize>,
}

fn gaussian_vector(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |_, _| StandardNormal.sample(rng))
}

/// Draws both domains from the same class-conditional Gaussians, then moves the
/// target by a rotation in a random plane followed by a constant shift.
///
/// The rotation plane is spanned by one random direction inside the class-mean
/// subspace and one random direction orthogonal to it, so the rotation always
/// moves the class structure. Samples are ordered class by class.
pub fn synth_shifted_gaussians(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (m, c) = (spec.m, spec.classes);
    let means = spec.class_means();

    let sample = |rng: &mut ChaCha8Rng, per_class: usize| {
        let mut x = DMatrix::zeros(m, c * per_class);
        let mut y = Vec::with_capacity(c * per_class);
        for class in 0..c {
            for i in 0..per_class {
                let col = means.column(class) + gaussian_vector(rng, m) * spec.noise_sigma;
                x.set_column(class * per_class + i, &col);
                y.push(class + 1);
            }
        }
        (x, y)
    };
    let (x_s, y_s) = sample(&mut rng, spec.n_per_class_source);
    let (x_t, y_t) = sample(&mut rng, spec.n_per_class_target);

    let mut u = gaussian_vector(&mut rng, m);
    for i in (c - 1)..m {
        u[i] = 0.0;
    }
    u.normalize_mut();
    let mut v = gaussian_vector(&mut rng, m);
    v -= &u * u.dot(&v);
    v.normalize_mut();
    let theta = spec.domain_rotation_deg.to_radians();
    let uu = &u * u.transpose();
    let vv = &v * v.transpose();
    let vu = &v * u.transpose();
    let rotation = DMatrix::identity(m, m) + (uu + vv) * (theta.cos() - 1.0) + (&vu - vu.transpose()) * theta.sin();

    let mut shift = gaussian_vector(&mut rng, m);
    shift.normalize_mut();
    shift *= spec.domain_shift;

    let mut target_x = rotation * x_t;
    for mut col in target_x.column_iter_mut() {
        col += &shift;
    }
    Ok(SynthData {
        source: LabeledData::new(x_s, y_s, c)?,
        target_x,
        target_truth: y_t,
    })
}
