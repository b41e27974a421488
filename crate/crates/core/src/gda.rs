//! Discriminant training: class statistics, per-mode scatter matrices,
//! alternating k-mode optimization and the full HOSVD + discriminant pipeline.
//!
//! Besides GDA itself the module builds the baselines that share its model
//! shape: MDA (no HOSVD stage), HOPCA (HOSVD stage only), vector PCA and
//! Fisherface. Vector baselines set [`GdaModel::vectorized`] and carry a
//! single projector acting on the flattened sample buffer.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::LabeledTensorSet;
use crate::error::{Error, Result};
use crate::hosvd::{hosvd, HosvdOptions, RankPolicy, DEFAULT_GRAM_CROSSOVER};
use crate::linalg::{normalize_with_sign, ratio_trace_eig, sym_eig};
use crate::tensor::{DenseTensor, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gda,
    Mda,
    Pca,
    Fisherface,
    Hopca,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Gda,
        Method::Mda,
        Method::Pca,
        Method::Fisherface,
        Method::Hopca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gda => "gda",
            Method::Mda => "mda",
            Method::Pca => "pca",
            Method::Fisherface => "fisherface",
            Method::Hopca => "hopca",
        }
    }

    /// Whether the HOSVD threshold/ranks setting affects this method.
    pub fn uses_hosvd(self) -> bool {
        matches!(self, Method::Gda | Method::Hopca)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gda" => Ok(Method::Gda),
            "mda" | "2d2lda" => Ok(Method::Mda),
            "pca" | "eigenface" => Ok(Method::Pca),
            "fisherface" => Ok(Method::Fisherface),
            "hopca" | "2d2pca" => Ok(Method::Hopca),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

fn default_max_iters() -> usize {
    10
}
fn default_conv_tol() -> f64 {
    1e-6
}
fn default_ridge() -> f64 {
    1e-6
}
fn default_crossover() -> usize {
    DEFAULT_GRAM_CROSSOVER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Final per-mode dimensions; `min(J_k, C-1)` per mode when absent.
    /// Vector baselines read the first entry as their component count.
    #[serde(default)]
    pub target_dims: Option<Vec<usize>>,
    #[serde(default)]
    pub hosvd: RankPolicy,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_conv_tol")]
    pub conv_tol: f64,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_crossover")]
    pub gram_crossover: usize,
    /// Fisherface PCA stage size; `m - C` when absent.
    #[serde(default)]
    pub pca_dims: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            target_dims: None,
            hosvd: RankPolicy::default(),
            max_iters: default_max_iters(),
            conv_tol: default_conv_tol(),
            ridge: default_ridge(),
            seed: 0,
            gram_crossover: default_crossover(),
            pca_dims: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.conv_tol >= 0.0) {
            return Err(Error::Config(format!("conv_tol must be nonnegative, got {}", self.conv_tol)));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::Config(format!("ridge must be nonnegative, got {}", self.ridge)));
        }
        if let RankPolicy::Threshold(t) = self.hosvd {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("theta must lie in (0, 1], got {t}")));
            }
        }
        if let Some(dims) = &self.target_dims {
            if dims.is_empty() || dims.contains(&0) {
                return Err(Error::Config(format!("target dims must be positive, got {dims:?}")));
            }
        }
        Ok(())
    }
}

/// Wall-clock time spent in each training stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub hosvd: Duration,
    pub optimize: Duration,
}

/// Learned projectors plus the projected training gallery.
#[derive(Debug, Clone, PartialEq)]
pub struct GdaModel {
    pub method: Method,
    pub input_shape: Vec<usize>,
    /// Samples are flattened to their buffer before projection.
    pub vectorized: bool,
    /// `V(k)`; identity when there is no HOSVD stage.
    pub hosvd_factors: Vec<Matrix>,
    /// `U(k)`; identity when there is no discriminant stage.
    pub disc_factors: Vec<Matrix>,
    /// `P(k) = V(k) · U(k)`.
    pub combined: Vec<Matrix>,
    pub gallery: Vec<DenseTensor>,
    pub gallery_labels: Vec<usize>,
    /// Names behind the numeric labels, when the training set had them.
    pub class_names: Vec<String>,
    pub objective_trace: Vec<f64>,
    pub change_trace: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub config: TrainingConfig,
    /// Not persisted.
    pub timings: StageTimings,
}

impl GdaModel {
    /// Projected shape `I'_1 × … × I'_N`.
    pub fn output_shape(&self) -> Vec<usize> {
        self.combined.iter().map(Matrix::cols).collect()
    }

    /// `x ×_1 P(1)ᵀ ⋯ ×_N P(N)ᵀ`.
    pub fn project(&self, x: &DenseTensor) -> Result<DenseTensor> {
        if x.shape() != self.input_shape.as_slice() {
            return Err(Error::Dimension(format!(
                "sample shape {:?} does not match model input {:?}",
                x.shape(),
                self.input_shape
            )));
        }
        let input = if self.vectorized {
            x.clone().reshape(vec![x.len()])?
        } else {
            x.clone()
        };
        let factors: Vec<(&Matrix, usize)> =
            self.combined.iter().enumerate().map(|(k, p)| (p, k)).collect();
        input.multi_mode_product_t(&factors)
    }
}

/// Per-class means (indexed by class position) and the global mean.
#[derive(Debug, Clone)]
pub struct ClassStats {
    pub class_means: Vec<DenseTensor>,
    pub global_mean: DenseTensor,
    pub counts: Vec<usize>,
}

pub fn class_means(data: &LabeledTensorSet) -> Result<ClassStats> {
    let groups = data.indices_by_class();
    let class_means = groups
        .iter()
        .map(|idx| DenseTensor::mean(idx.iter().map(|&i| &data.samples()[i])))
        .collect::<Result<Vec<_>>>()?;
    let global_mean = DenseTensor::mean(data.samples())?;
    Ok(ClassStats {
        class_means,
        global_mean,
        counts: groups.iter().map(Vec::len).collect(),
    })
}

/// Between- and within-class scatter along one mode.
#[derive(Debug, Clone)]
pub struct ScatterPair {
    pub s_b: Matrix,
    pub s_w: Matrix,
}

fn check_projectors(shape: &[usize], projectors: &[Matrix], skip: Option<usize>) -> Result<()> {
    if projectors.len() != shape.len() {
        return Err(Error::Dimension(format!(
            "{} projectors for order-{} data",
            projectors.len(),
            shape.len()
        )));
    }
    for (j, u) in projectors.iter().enumerate() {
        if Some(j) != skip && u.rows() != shape[j] {
            return Err(Error::Dimension(format!(
                "projector {j} has {} rows but mode {j} has extent {}",
                u.rows(),
                shape[j]
            )));
        }
    }
    Ok(())
}

/// `D ×_{j≠k} U(j)ᵀ`, its mode-k unfolding.
fn partial_projection(d: &DenseTensor, projectors: &[Matrix], mode: usize) -> Result<Matrix> {
    let factors: Vec<(&Matrix, usize)> = projectors
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != mode)
        .map(|(j, u)| (u, j))
        .collect();
    d.multi_mode_product_t(&factors)?.unfold(mode)
}

fn accumulate(acc: &mut Matrix, x: &Matrix, weight: f64) {
    let g = x.gram_rows();
    for (a, v) in acc.as_mut_slice().iter_mut().zip(g.as_slice()) {
        *a += weight * v;
    }
}

/// `S_B(k)` and `S_W(k)` with every other mode projected by its current
/// factor. `projectors[mode]` is ignored.
///
/// The Kronecker factor `U_p` is never formed: each centered tensor is
/// projected along the other modes and its mode-k unfolding accumulated.
pub fn scatter_matrices(
    data: &LabeledTensorSet,
    stats: &ClassStats,
    projectors: &[Matrix],
    mode: usize,
) -> Result<ScatterPair> {
    let shape = data.sample_shape();
    if mode >= shape.len() {
        return Err(Error::InvalidMode {
            mode,
            order: shape.len(),
        });
    }
    check_projectors(shape, projectors, Some(mode))?;
    let n = shape[mode];
    let mut s_b = Matrix::zeros(n, n);
    let mut s_w = Matrix::zeros(n, n);
    for (mean, &count) in stats.class_means.iter().zip(&stats.counts) {
        let diff = mean.try_sub(&stats.global_mean)?;
        accumulate(&mut s_b, &partial_projection(&diff, projectors, mode)?, count as f64);
    }
    for (i, x) in data.samples().iter().enumerate() {
        let diff = x.try_sub(&stats.class_means[data.class_index(i)])?;
        accumulate(&mut s_w, &partial_projection(&diff, projectors, mode)?, 1.0);
    }
    Ok(ScatterPair { s_b, s_w })
}

/// Ratio of projected between-class to within-class energy; `+∞` when the
/// within-class term vanishes.
pub fn eval_objective(data: &LabeledTensorSet, stats: &ClassStats, factors: &[Matrix]) -> Result<f64> {
    check_projectors(data.sample_shape(), factors, None)?;
    let all: Vec<(&Matrix, usize)> = factors.iter().enumerate().map(|(k, u)| (u, k)).collect();
    let mut numerator = 0.0;
    for (mean, &count) in stats.class_means.iter().zip(&stats.counts) {
        let diff = mean.try_sub(&stats.global_mean)?;
        numerator += count as f64 * diff.multi_mode_product_t(&all)?.norm_sq();
    }
    let mut denominator = 0.0;
    for (i, x) in data.samples().iter().enumerate() {
        let diff = x.try_sub(&stats.class_means[data.class_index(i)])?;
        denominator += diff.multi_mode_product_t(&all)?.norm_sq();
    }
    if denominator == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(numerator / denominator)
}

#[derive(Debug, Clone)]
pub struct KModeResult {
    /// `U(k)`, `J_k × I'_k` with unit columns.
    pub factors: Vec<Matrix>,
    /// Objective at initialization, then after every sweep.
    pub objective_trace: Vec<f64>,
    /// Max over modes of `‖U Uᵀ − U_prev U_prevᵀ‖_F`, one entry per sweep.
    pub change_trace: Vec<f64>,
    pub converged: bool,
}

fn projector_change(new: &Matrix, old: &Matrix) -> f64 {
    let a = new.matmul(&new.transpose()).expect("square");
    let b = old.matmul(&old.transpose()).expect("square");
    (&a - &b).frobenius_norm()
}

/// Alternating per-mode discriminant optimization.
///
/// Factors start as truncated identities. Within a sweep, mode `k` sees the
/// already-updated factors of modes below it and the previous factors of
/// modes above it.
pub fn k_mode_optimize(
    data: &LabeledTensorSet,
    target_dims: &[usize],
    config: &TrainingConfig,
) -> Result<KModeResult> {
    let shape = data.sample_shape().to_vec();
    if target_dims.len() != shape.len() {
        return Err(Error::Config(format!(
            "{} target dims for order-{} data",
            target_dims.len(),
            shape.len()
        )));
    }
    for (k, (&d, &extent)) in target_dims.iter().zip(&shape).enumerate() {
        if d == 0 || d > extent {
            return Err(Error::Config(format!(
                "target dim {d} for mode {k} must lie in 1..={extent}"
            )));
        }
    }
    let stats = class_means(data)?;
    let mut factors: Vec<Matrix> = shape
        .iter()
        .zip(target_dims)
        .map(|(&j, &d)| Matrix::truncated_identity(j, d))
        .collect();
    let mut objective_trace = vec![eval_objective(data, &stats, &factors)?];
    let mut change_trace = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iters {
        let previous = factors.clone();
        for k in 0..shape.len() {
            let sp = scatter_matrices(data, &stats, &factors, k)?;
            factors[k] = ratio_trace_eig(&sp.s_b, &sp.s_w, target_dims[k], config.ridge)
                .map_err(|e| e.in_mode(k))?;
        }
        objective_trace.push(eval_objective(data, &stats, &factors)?);
        let change = factors
            .iter()
            .zip(&previous)
            .map(|(a, b)| projector_change(a, b))
            .fold(0.0, f64::max);
        change_trace.push(change);
        if change < config.conv_tol {
            converged = true;
            break;
        }
    }
    Ok(KModeResult {
        factors,
        objective_trace,
        change_trace,
        converged,
    })
}

fn check_training_set(data: &LabeledTensorSet) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::Data("training needs at least two samples".into()));
    }
    if data.num_classes() < 2 {
        return Err(Error::Data("training needs at least two classes".into()));
    }
    Ok(())
}

fn singleton_warnings(data: &LabeledTensorSet) -> Vec<String> {
    data.class_counts()
        .iter()
        .zip(data.classes())
        .filter(|(&n, _)| n == 1)
        .map(|(_, label)| format!("class {label} has a single training sample; its within-class scatter is zero"))
        .collect()
}

fn resolve_dims(config: &TrainingConfig, ranks: &[usize], classes: usize) -> Result<Vec<usize>> {
    match &config.target_dims {
        Some(dims) => {
            if dims.len() != ranks.len() {
                return Err(Error::Config(format!(
                    "{} target dims given for order-{} samples",
                    dims.len(),
                    ranks.len()
                )));
            }
            for (k, (&d, &j)) in dims.iter().zip(ranks).enumerate() {
                if d > j {
                    return Err(Error::Config(format!(
                        "target dim {d} for mode {k} exceeds the {j} dimensions kept by HOSVD; raise theta or lower the target"
                    )));
                }
            }
            Ok(dims.clone())
        }
        None => Ok(ranks.iter().map(|&j| j.min(classes - 1).max(1)).collect()),
    }
}

struct Stage1 {
    factors: Vec<Matrix>,
    cores: LabeledTensorSet,
    elapsed: Duration,
}

/// HOSVD of the stacked sample tensor with the sample mode exempt.
fn hosvd_stage(data: &LabeledTensorSet, config: &TrainingConfig) -> Result<Stage1> {
    let started = Instant::now();
    let order = data.sample_shape().len();
    let policy = match &config.hosvd {
        RankPolicy::Ranks(r) => {
            if r.len() != order {
                return Err(Error::Config(format!(
                    "{} HOSVD ranks given for order-{order} samples",
                    r.len()
                )));
            }
            let mut r = r.clone();
            r.push(data.len());
            RankPolicy::Ranks(r)
        }
        p => p.clone(),
    };
    let mut opts = HosvdOptions::new(policy).exempt([order]);
    opts.gram_crossover = config.gram_crossover;
    let stacked = DenseTensor::stack(data.samples())?;
    let mut result = hosvd(&stacked, &opts)?;
    result.factors.truncate(order);
    let cores = LabeledTensorSet::new(result.core.unstack(), data.labels().to_vec())?;
    Ok(Stage1 {
        factors: result.factors,
        cores,
        elapsed: started.elapsed(),
    })
}

fn project_gallery(model: &mut GdaModel, data: &LabeledTensorSet) -> Result<()> {
    model.gallery = data
        .samples()
        .iter()
        .map(|x| model.project(x))
        .collect::<Result<_>>()?;
    model.gallery_labels = data.labels().to_vec();
    Ok(())
}

fn discriminant_model(
    method: Method,
    data: &LabeledTensorSet,
    config: &TrainingConfig,
    stage1: Option<Stage1>,
) -> Result<GdaModel> {
    let shape = data.sample_shape().to_vec();
    let (hosvd_factors, cores, hosvd_time) = match stage1 {
        Some(s) => (s.factors, s.cores, s.elapsed),
        None => (
            shape.iter().map(|&i| Matrix::identity(i)).collect(),
            data.clone(),
            Duration::ZERO,
        ),
    };
    let ranks = cores.sample_shape().to_vec();
    let dims = resolve_dims(config, &ranks, data.num_classes())?;
    let started = Instant::now();
    let opt = k_mode_optimize(&cores, &dims, config)?;
    let optimize = started.elapsed();
    let combined = hosvd_factors
        .iter()
        .zip(&opt.factors)
        .map(|(v, u)| v.matmul(u))
        .collect::<Result<Vec<_>>>()?;
    let mut model = GdaModel {
        method,
        input_shape: shape,
        vectorized: false,
        hosvd_factors,
        disc_factors: opt.factors,
        combined,
        gallery: Vec::new(),
        gallery_labels: Vec::new(),
        class_names: data.class_names().map(<[String]>::to_vec).unwrap_or_default(),
        objective_trace: opt.objective_trace,
        change_trace: opt.change_trace,
        converged: opt.converged,
        warnings: singleton_warnings(data),
        config: config.clone(),
        timings: StageTimings {
            hosvd: hosvd_time,
            optimize,
        },
    };
    project_gallery(&mut model, data)?;
    Ok(model)
}

/// HOSVD stage followed by k-mode discriminant optimization on the cores.
pub fn train_gda(data: &LabeledTensorSet, config: &TrainingConfig) -> Result<GdaModel> {
    config.validate()?;
    check_training_set(data)?;
    let stage1 = hosvd_stage(data, config)?;
    discriminant_model(Method::Gda, data, config, Some(stage1))
}

/// k-mode discriminant optimization directly on the samples.
pub fn train_mda(data: &LabeledTensorSet, config: &TrainingConfig) -> Result<GdaModel> {
    config.validate()?;
    check_training_set(data)?;
    discriminant_model(Method::Mda, data, config, None)
}

/// HOSVD projectors alone (the multilinear PCA baseline).
pub fn train_hopca(data: &LabeledTensorSet, config: &TrainingConfig) -> Result<GdaModel> {
    config.validate()?;
    check_training_set(data)?;
    let stage1 = hosvd_stage(data, config)?;
    let disc_factors: Vec<Matrix> = stage1.factors.iter().map(|v| Matrix::identity(v.cols())).collect();
    let mut model = GdaModel {
        method: Method::Hopca,
        input_shape: data.sample_shape().to_vec(),
        vectorized: false,
        combined: stage1.factors.clone(),
        hosvd_factors: stage1.factors,
        disc_factors,
        gallery: Vec::new(),
        gallery_labels: Vec::new(),
        class_names: data.class_names().map(<[String]>::to_vec).unwrap_or_default(),
        objective_trace: Vec::new(),
        change_trace: Vec::new(),
        converged: true,
        warnings: Vec::new(),
        config: config.clone(),
        timings: StageTimings {
            hosvd: stage1.elapsed,
            optimize: Duration::ZERO,
        },
    };
    project_gallery(&mut model, data)?;
    Ok(model)
}

/// Principal axes of a set of column vectors.
#[derive(Debug, Clone)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// `D × p`, orthonormal columns ordered by decreasing variance.
    pub components: Matrix,
    pub variances: Vec<f64>,
}

/// Top `dims` principal axes of the columns of `vectors` (`D × m`).
///
/// Uses the `D × D` covariance when `D ≤ m` and the `m × m` Gram matrix
/// otherwise.
pub fn pca_basis(vectors: &Matrix, dims: usize) -> Result<PcaBasis> {
    let (len, m) = (vectors.rows(), vectors.cols());
    if dims == 0 || dims > len.min(m.saturating_sub(1)) {
        return Err(Error::Config(format!(
            "PCA dims must lie in 1..={} for {m} samples of length {len}",
            len.min(m.saturating_sub(1))
        )));
    }
    let mean: Vec<f64> = (0..len)
        .map(|r| (0..m).map(|c| vectors.get(r, c)).sum::<f64>() / m as f64)
        .collect();
    let centered = Matrix::from_fn(len, m, |r, c| vectors.get(r, c) - mean[r]);
    let (components, variances) = if len <= m {
        let eig = sym_eig(&centered.gram_rows())?;
        (eig.vectors.leading_columns(dims), eig.values[..dims].to_vec())
    } else {
        let gram = centered.t_matmul(&centered)?;
        let eig = sym_eig(&gram)?;
        let top = eig.values[0];
        let mut comps = Matrix::zeros(len, dims);
        for j in 0..dims {
            let l = eig.values[j];
            if !(l > 1e-12 * top) {
                return Err(Error::Config(format!(
                    "training data spans only {j} principal directions, fewer than the {dims} requested"
                )));
            }
            let w = centered.matmul(&Matrix::from_col_major(m, 1, eig.vectors.column(j).to_vec())?)?;
            let col = comps.column_mut(j);
            col.copy_from_slice(w.as_slice());
            normalize_with_sign(col);
        }
        (comps, eig.values[..dims].to_vec())
    };
    Ok(PcaBasis {
        mean,
        components,
        variances: variances.iter().map(|v| v / m as f64).collect(),
    })
}

fn vectorize(data: &LabeledTensorSet) -> Matrix {
    let len = data.samples()[0].len();
    let mut flat = Vec::with_capacity(len * data.len());
    for s in data.samples() {
        flat.extend_from_slice(s.as_slice());
    }
    Matrix::from_col_major(len, data.len(), flat).expect("same-shape samples")
}

fn vector_component_count(config: &TrainingConfig) -> Option<usize> {
    config.target_dims.as_ref().and_then(|d| d.first().copied())
}

/// Vector PCA (eigenfaces) on flattened samples. `dims` defaults to `C - 1`.
pub fn train_pca(data: &LabeledTensorSet, config: &TrainingConfig) -> Result<GdaModel> {
    config.validate()?;
    check_training_set(data)?;
    let dims = vector_component_count(config).unwrap_or(data.num_classes() - 1);
    let started = Instant::now();
    let basis = pca_basis(&vectorize(data), dims)?;
    let p = basis.components;
    let mut model = GdaModel {
        method: Method::Pca,
        input_shape: data.sample_shape().to_vec(),
        vectorized: true,
        hosvd_factors: vec![p.clone()],
        disc_factors: vec![Matrix::identity(dims)],
        combined: vec![p],
        gallery: Vec::new(),
        gallery_labels: Vec::new(),
        class_names: data.class_names().map(<[String]>::to_vec).unwrap_or_default(),
        objective_trace: Vec::new(),
        change_trace: Vec::new(),
        converged: true,
        warnings: Vec::new(),
        config: config.clone(),
        timings: StageTimings {
            hosvd: started.elapsed(),
            optimize: Duration::ZERO,
        },
    };
    project_gallery(&mut model, data)?;
    Ok(model)
}

/// PCA to `pca_dims` (default `m - C`) followed by vector LDA to `C - 1`
/// (or the first target dim).
pub fn train_fisherface(data: &LabeledTensorSet, config: &TrainingConfig) -> Result<GdaModel> {
    config.validate()?;
    check_training_set(data)?;
    let classes = data.num_classes();
    let pca_dims = config.pca_dims.unwrap_or(data.len().saturating_sub(classes).max(1));
    let lda_dims = vector_component_count(config).unwrap_or(classes - 1);
    if lda_dims > (classes - 1).min(pca_dims) {
        return Err(Error::Config(format!(
            "Fisherface LDA dims {lda_dims} exceed min(C-1, pca dims) = {}",
            (classes - 1).min(pca_dims)
        )));
    }
    let started = Instant::now();
    let basis = pca_basis(&vectorize(data), pca_dims)?;
    let pca_time = started.elapsed();
    let p = basis.components;
    let reduced = data.map_samples(|x| {
        let v = Matrix::from_col_major(x.len(), 1, x.as_slice().to_vec())?;
        Ok(p.t_matmul(&v)?.into_tensor().reshape(vec![pca_dims])?)
    })?;
    let started = Instant::now();
    let opt = k_mode_optimize(&reduced, &[lda_dims], config)?;
    let optimize = started.elapsed();
    let w = opt.factors[0].clone();
    let mut model = GdaModel {
        method: Method::Fisherface,
        input_shape: data.sample_shape().to_vec(),
        vectorized: true,
        combined: vec![p.matmul(&w)?],
        hosvd_factors: vec![p],
        disc_factors: vec![w],
        gallery: Vec::new(),
        gallery_labels: Vec::new(),
        class_names: data.class_names().map(<[String]>::to_vec).unwrap_or_default(),
        objective_trace: opt.objective_trace,
        change_trace: opt.change_trace,
        converged: opt.converged,
        warnings: singleton_warnings(data),
        config: config.clone(),
        timings: StageTimings {
            hosvd: pca_time,
            optimize,
        },
    };
    project_gallery(&mut model, data)?;
    Ok(model)
}

/// Dispatches to the trainer for `method`.
pub fn train(method: Method, data: &LabeledTensorSet, config: &TrainingConfig) -> Result<GdaModel> {
    match method {
        Method::Gda => train_gda(data, config),
        Method::Mda => train_mda(data, config),
        Method::Hopca => train_hopca(data, config),
        Method::Pca => train_pca(data, config),
        Method::Fisherface => train_fisherface(data, config),
    }
}
