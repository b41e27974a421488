//! Nearest-neighbor classification, the split and leave-one-subject-out
//! protocols, and 2D projection export.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledTensorSet;
use crate::error::{Error, Result};
use crate::gda::{train, GdaModel, Method, TrainingConfig};
use crate::hosvd::{pca_expansion, tensor_expansion};
use crate::tensor::{squared_distance, DenseTensor};

pub const REPORT_VERSION: u32 = 1;

/// `x ×_1 P(1)ᵀ ⋯ ×_N P(N)ᵀ`.
pub fn project(model: &GdaModel, x: &DenseTensor) -> Result<DenseTensor> {
    model.project(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// Position of the nearest gallery entry.
    pub index: usize,
    pub distance: f64,
}

/// Nearest gallery entry to an already projected query; the lowest index
/// wins ties.
pub fn classify_projected(model: &GdaModel, z: &DenseTensor) -> Result<Prediction> {
    if model.gallery.is_empty() {
        return Err(Error::Empty("gallery"));
    }
    if z.shape() != model.gallery[0].shape() {
        return Err(Error::Dimension(format!(
            "projected query shape {:?} does not match gallery shape {:?}",
            z.shape(),
            model.gallery[0].shape()
        )));
    }
    let mut best = (0, f64::INFINITY);
    for (i, g) in model.gallery.iter().enumerate() {
        let d = squared_distance(z.as_slice(), g.as_slice());
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(Prediction {
        label: model.gallery_labels[best.0],
        index: best.0,
        distance: best.1.sqrt(),
    })
}

pub fn classify(model: &GdaModel, x: &DenseTensor) -> Result<Prediction> {
    classify_projected(model, &model.project(x)?)
}

/// Stage timings in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub hosvd_s: f64,
    pub optimize_s: f64,
    pub classify_s: f64,
}

impl TimingSummary {
    fn add(&mut self, other: &TimingSummary) {
        self.hosvd_s += other.hosvd_s;
        self.optimize_s += other.optimize_s;
        self.classify_s += other.classify_s;
    }
}

/// One training run and its test predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub accuracy: f64,
    pub correct: usize,
    pub tested: usize,
    pub train_size: usize,
    pub dims: Vec<usize>,
    pub cr_raw: f64,
    pub cr: f64,
    pub converged: bool,
    pub sweeps: usize,
    pub objective_trace: Vec<f64>,
    pub change_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_out_subject: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_subjects: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<TimingSummary>,
    #[serde(skip)]
    confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Split,
    Loo,
}

/// Results of one protocol run for one method.
///
/// Timings are wall-clock and therefore excluded unless requested, so that
/// reports from identical inputs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    pub protocol: Protocol,
    pub method: Method,
    pub seed: u64,
    pub samples: usize,
    pub sample_shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_per_class: Option<usize>,
    /// Headline accuracy in percent: mean over trials for splits, pooled
    /// over all held-out samples for leave-one-out.
    pub accuracy: f64,
    pub accuracy_per_trial: Vec<f64>,
    /// Mean of per-fold accuracies (leave-one-out only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_macro: Option<f64>,
    pub cr_mean: f64,
    /// Class labels indexing the confusion rows and columns.
    pub classes: Vec<usize>,
    /// `confusion[true][predicted]`, summed over trials.
    pub confusion: Vec<Vec<usize>>,
    pub config: TrainingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<TimingSummary>,
    pub trials: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub seed: u64,
    pub include_timings: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            include_timings: false,
        }
    }
}

/// Compressed/uncompressed storage of the training set under the model.
fn compression_for(model: &GdaModel, train_size: usize) -> f64 {
    let extents = &model.input_shape;
    let dims = model.output_shape();
    if model.vectorized {
        pca_expansion(train_size, extents.iter().product(), dims[0])
    } else {
        tensor_expansion(train_size, extents, &dims)
    }
}

fn run_trial(
    data: &LabeledTensorSet,
    method: Method,
    config: &TrainingConfig,
    train_idx: &[usize],
    test_idx: &[usize],
    index: usize,
    include_timings: bool,
) -> Result<TrialRecord> {
    let train_set = data.subset(train_idx)?;
    let model = train(method, &train_set, config)?;
    let started = Instant::now();
    let classes = data.classes();
    let mut confusion = vec![vec![0; classes.len()]; classes.len()];
    let mut correct = 0;
    for &i in test_idx {
        let p = classify(&model, &data.samples()[i])?;
        let truth = data.class_index(i);
        let predicted = classes.binary_search(&p.label).expect("gallery labels come from the data");
        confusion[truth][predicted] += 1;
        if predicted == truth {
            correct += 1;
        }
    }
    let classify_s = started.elapsed().as_secs_f64();
    let raw = compression_for(&model, train_idx.len());
    Ok(TrialRecord {
        index,
        accuracy: 100.0 * correct as f64 / test_idx.len() as f64,
        correct,
        tested: test_idx.len(),
        train_size: train_idx.len(),
        dims: model.output_shape(),
        cr_raw: raw,
        cr: 1.0 / raw,
        converged: model.converged,
        sweeps: model.change_trace.len(),
        objective_trace: model.objective_trace.clone(),
        change_trace: model.change_trace.clone(),
        held_out_subject: None,
        train_subjects: None,
        timings: include_timings.then(|| TimingSummary {
            hosvd_s: model.timings.hosvd.as_secs_f64(),
            optimize_s: model.timings.optimize.as_secs_f64(),
            classify_s,
        }),
        confusion,
    })
}

/// Seeded per-class split: `train_per_class` samples from every class go to
/// training, the rest to testing. Both index lists are ascending.
///
/// The split depends only on the data labels, `seed` and `trial`, so every
/// method evaluated with the same seed sees the same splits.
pub fn split_indices(
    data: &LabeledTensorSet,
    train_per_class: usize,
    seed: u64,
    trial: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut group) in data.indices_by_class().into_iter().enumerate() {
        if group.len() <= train_per_class {
            return Err(Error::Data(format!(
                "class {} has {} samples; a split with {train_per_class} training samples per class needs more",
                data.classes()[c],
                group.len()
            )));
        }
        group.shuffle(&mut rng);
        train.extend_from_slice(&group[..train_per_class]);
        test.extend_from_slice(&group[train_per_class..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn assemble(
    protocol: Protocol,
    data: &LabeledTensorSet,
    method: Method,
    config: &TrainingConfig,
    opts: &EvalOptions,
    train_per_class: Option<usize>,
    trials: Vec<TrialRecord>,
) -> ExperimentReport {
    let c = data.num_classes();
    let mut confusion = vec![vec![0; c]; c];
    let mut timings: Option<TimingSummary> = opts.include_timings.then(TimingSummary::default);
    for t in &trials {
        for (row, trow) in confusion.iter_mut().zip(&t.confusion) {
            for (a, b) in row.iter_mut().zip(trow) {
                *a += b;
            }
        }
        if let (Some(total), Some(tt)) = (timings.as_mut(), &t.timings) {
            total.add(tt);
        }
    }
    let per_trial: Vec<f64> = trials.iter().map(|t| t.accuracy).collect();
    let mean = per_trial.iter().sum::<f64>() / per_trial.len() as f64;
    let (accuracy, accuracy_macro) = match protocol {
        Protocol::Split => (mean, None),
        Protocol::Loo => {
            let correct: usize = trials.iter().map(|t| t.correct).sum();
            let tested: usize = trials.iter().map(|t| t.tested).sum();
            (100.0 * correct as f64 / tested as f64, Some(mean))
        }
    };
    ExperimentReport {
        version: REPORT_VERSION,
        protocol,
        method,
        seed: opts.seed,
        samples: data.len(),
        sample_shape: data.sample_shape().to_vec(),
        train_per_class,
        accuracy,
        accuracy_per_trial: per_trial,
        accuracy_macro,
        cr_mean: trials.iter().map(|t| t.cr).sum::<f64>() / trials.len() as f64,
        classes: data.classes().to_vec(),
        confusion,
        config: config.clone(),
        timings,
        trials,
    }
}

/// Train-m/Test-n protocol averaged over `trials` seeded random splits.
pub fn evaluate_split(
    data: &LabeledTensorSet,
    method: Method,
    config: &TrainingConfig,
    train_per_class: usize,
    trials: usize,
    opts: &EvalOptions,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    if train_per_class == 0 {
        return Err(Error::Config("train_per_class must be at least 1".into()));
    }
    let records = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (train_idx, test_idx) = split_indices(data, train_per_class, opts.seed, t)?;
            run_trial(data, method, config, &train_idx, &test_idx, t, opts.include_timings)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(Protocol::Split, data, method, config, opts, Some(train_per_class), records))
}

/// Leave-one-subject-out: one fold per distinct subject id, ascending.
pub fn evaluate_loo(
    data: &LabeledTensorSet,
    method: Method,
    config: &TrainingConfig,
    opts: &EvalOptions,
) -> Result<ExperimentReport> {
    let subjects = data
        .subjects()
        .ok_or_else(|| Error::Data("leave-one-out needs subject ids for every sample".into()))?;
    let mut distinct = subjects.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Data("leave-one-out needs at least two subjects".into()));
    }
    let records = distinct
        .par_iter()
        .enumerate()
        .map(|(fold, &held)| {
            let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| subjects[i] == held);
            let mut train_subjects: Vec<usize> = train_idx.iter().map(|&i| subjects[i]).collect();
            train_subjects.sort_unstable();
            train_subjects.dedup();
            let mut rec = run_trial(data, method, config, &train_idx, &test_idx, fold, opts.include_timings)?;
            rec.held_out_subject = Some(held);
            rec.train_subjects = Some(train_subjects);
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(Protocol::Loo, data, method, config, opts, None, records))
}

/// Which two projected coordinates to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plane {
    /// The two entries of a projected tensor holding exactly two values.
    Flat,
    /// `u1ᵀ X [v1, v2]` for order-2 models.
    RowPair,
    /// `[u1, u2]ᵀ X v1` for order-2 models.
    ColPair,
}

impl std::str::FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Plane::Flat),
            "row-pair" | "1x2" => Ok(Plane::RowPair),
            "col-pair" | "2x1" => Ok(Plane::ColPair),
            other => Err(Error::Config(format!("unknown plane `{other}` (flat, row-pair, col-pair)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub x: f64,
    pub y: f64,
    pub label: usize,
}

/// One 2D point per sample of `data` under `model`.
pub fn export_projection_2d(model: &GdaModel, data: &LabeledTensorSet, plane: Plane) -> Result<Vec<ProjectionRow>> {
    let out = model.output_shape();
    let (a, b): (Vec<usize>, Vec<usize>) = match plane {
        Plane::Flat => {
            if out.iter().product::<usize>() != 2 {
                return Err(Error::Config(format!(
                    "flat plane needs a projection with exactly two values, model gives {out:?}"
                )));
            }
            (vec![0; out.len()], {
                let mut idx = vec![0; out.len()];
                let k = out.iter().position(|&e| e == 2).expect("one extent is 2");
                idx[k] = 1;
                idx
            })
        }
        Plane::RowPair | Plane::ColPair => {
            if out.len() != 2 || model.vectorized {
                return Err(Error::Config("row-pair and col-pair planes need an order-2 tensor model".into()));
            }
            let (needed, second) = match plane {
                Plane::RowPair => ([1, 2], vec![0, 1]),
                _ => ([2, 1], vec![1, 0]),
            };
            if out[0] < needed[0] || out[1] < needed[1] {
                return Err(Error::Config(format!(
                    "plane needs projected dims of at least {}x{}, model gives {out:?}",
                    needed[0], needed[1]
                )));
            }
            (vec![0, 0], second)
        }
    };
    data.samples()
        .iter()
        .zip(data.labels())
        .map(|(x, &label)| {
            let z = model.project(x)?;
            Ok(ProjectionRow {
                x: z.get(&a),
                y: z.get(&b),
                label,
            })
        })
        .collect()
}

/// CSV with header `x,y,label`.
pub fn write_projection_csv(rows: &[ProjectionRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record(["x", "y", "label"]).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}
