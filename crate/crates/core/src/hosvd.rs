//! High-order SVD with energy-threshold rank selection, plus the PSNR and
//! compression-ratio figures used to judge reduced representations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{left_singular_via_gram, svd};
use crate::tensor::{DenseTensor, Matrix};

/// Unfoldings with at least this many columns get their left factors from the
/// Gram matrix `X_(k) X_(k)ᵀ` instead of a direct SVD.
pub const DEFAULT_GRAM_CROSSOVER: usize = 2048;

/// How many singular vectors to keep per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankPolicy {
    /// Explicit `J_k` for every mode (exempt modes ignore their entry).
    Ranks(Vec<usize>),
    /// Smallest rank whose singular-value mass reaches the fraction `θ`.
    Threshold(f64),
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy::Threshold(0.98)
    }
}

#[derive(Debug, Clone)]
pub struct HosvdOptions {
    pub policy: RankPolicy,
    /// Modes that keep an identity factor (e.g. the sample mode).
    pub exempt_modes: Vec<usize>,
    pub gram_crossover: usize,
}

impl HosvdOptions {
    pub fn new(policy: RankPolicy) -> Self {
        Self {
            policy,
            exempt_modes: Vec::new(),
            gram_crossover: DEFAULT_GRAM_CROSSOVER,
        }
    }

    pub fn exempt(mut self, modes: impl IntoIterator<Item = usize>) -> Self {
        self.exempt_modes.extend(modes);
        self
    }
}

#[derive(Debug, Clone)]
pub struct HosvdResult {
    /// `V(k)`, `I_k × J_k` with orthonormal columns.
    pub factors: Vec<Matrix>,
    pub core: DenseTensor,
    pub kept_ranks: Vec<usize>,
    /// Retained fraction of the singular-value sum, per mode.
    pub mode_energy: Vec<f64>,
    /// Singular values of each unfolding; empty for exempt modes.
    pub singular_values: Vec<Vec<f64>>,
    pub exempt: Vec<bool>,
}

/// Smallest `d` with `Σ_{i≤d} σ_i / Σ σ_i ≥ θ`.
pub fn select_rank(singular_values: &[f64], theta: f64) -> Result<usize> {
    if singular_values.is_empty() {
        return Err(Error::Empty("singular value list"));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Config(format!("threshold must lie in (0, 1], got {theta}")));
    }
    if singular_values.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Data("singular values must be nonnegative".into()));
    }
    if singular_values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Data("singular values must be nonincreasing".into()));
    }
    let total: f64 = singular_values.iter().sum();
    if total == 0.0 {
        return Err(Error::Degenerate);
    }
    let mut prefix = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        prefix += s;
        if prefix / total >= theta {
            return Ok(i + 1);
        }
    }
    Ok(singular_values.len())
}

fn energy_fraction(singular_values: &[f64], rank: usize) -> f64 {
    let total: f64 = singular_values.iter().sum();
    let kept: f64 = singular_values.iter().take(rank).sum();
    kept / total
}

struct ModeFactor {
    factor: Matrix,
    singular_values: Vec<f64>,
    energy: f64,
}

fn mode_factor(t: &DenseTensor, mode: usize, opts: &HosvdOptions) -> Result<ModeFactor> {
    let extent = t.shape()[mode];
    let unfolded = t.unfold(mode)?;
    let requested = match &opts.policy {
        RankPolicy::Ranks(r) => {
            let rank = *r.get(mode).ok_or_else(|| {
                Error::Config(format!("rank list has {} entries for an order-{} tensor", r.len(), t.order()))
            })?;
            if rank == 0 || rank > extent {
                return Err(Error::RankTooLarge { mode, rank, extent });
            }
            Some(rank)
        }
        RankPolicy::Threshold(_) => None,
    };
    let thin = extent.min(unfolded.cols());
    let use_gram = unfolded.cols() >= opts.gram_crossover || requested.is_some_and(|r| r > thin);
    let (u, s) = if use_gram {
        left_singular_via_gram(&unfolded)?
    } else {
        let r = svd(&unfolded)?;
        (r.u, r.s)
    };
    if s.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate.in_mode(mode));
    }
    let rank = match (&opts.policy, requested) {
        (_, Some(r)) => r,
        (RankPolicy::Threshold(theta), None) => select_rank(&s, *theta).map_err(|e| e.in_mode(mode))?,
        (RankPolicy::Ranks(_), None) => unreachable!(),
    };
    Ok(ModeFactor {
        energy: energy_fraction(&s, rank),
        factor: u.leading_columns(rank),
        singular_values: s,
    })
}

/// High-order SVD of `t`: per-mode left singular vectors of the unfoldings
/// and the core `t ×_1 V(1)ᵀ ⋯ ×_N V(N)ᵀ`.
pub fn hosvd(t: &DenseTensor, opts: &HosvdOptions) -> Result<HosvdResult> {
    let order = t.order();
    let mut exempt = vec![false; order];
    for &m in &opts.exempt_modes {
        if m >= order {
            return Err(Error::InvalidMode { mode: m, order });
        }
        exempt[m] = true;
    }
    if let RankPolicy::Threshold(theta) = opts.policy {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1], got {theta}")));
        }
    }

    let per_mode: Vec<Result<Option<ModeFactor>>> = (0..order)
        .into_par_iter()
        .map(|k| {
            if exempt[k] {
                Ok(None)
            } else {
                mode_factor(t, k, opts).map(Some)
            }
        })
        .collect();

    let mut factors = Vec::with_capacity(order);
    let mut kept_ranks = Vec::with_capacity(order);
    let mut mode_energy = Vec::with_capacity(order);
    let mut singular_values = Vec::with_capacity(order);
    for (k, r) in per_mode.into_iter().enumerate() {
        match r? {
            Some(mf) => {
                kept_ranks.push(mf.factor.cols());
                mode_energy.push(mf.energy);
                singular_values.push(mf.singular_values);
                factors.push(mf.factor);
            }
            None => {
                let extent = t.shape()[k];
                kept_ranks.push(extent);
                mode_energy.push(1.0);
                singular_values.push(Vec::new());
                factors.push(Matrix::identity(extent));
            }
        }
    }

    let projections: Vec<(&Matrix, usize)> = factors
        .iter()
        .enumerate()
        .filter(|(k, _)| !exempt[*k])
        .map(|(k, f)| (f, k))
        .collect();
    let core = t.multi_mode_product_t(&projections)?;
    Ok(HosvdResult {
        factors,
        core,
        kept_ranks,
        mode_energy,
        singular_values,
        exempt,
    })
}

/// `core ×_1 V(1) ⋯ ×_N V(N)`.
pub fn reconstruct(r: &HosvdResult) -> Result<DenseTensor> {
    if r.factors.len() != r.core.order() {
        return Err(Error::Dimension(format!(
            "{} factors for an order-{} core",
            r.factors.len(),
            r.core.order()
        )));
    }
    for (k, f) in r.factors.iter().enumerate() {
        if f.cols() != r.core.shape()[k] {
            return Err(Error::Dimension(format!(
                "factor {k} has {} columns but core mode {k} has extent {}",
                f.cols(),
                r.core.shape()[k]
            )));
        }
    }
    let factors: Vec<(&Matrix, usize)> = r
        .factors
        .iter()
        .enumerate()
        .filter(|(k, _)| !r.exempt.get(*k).copied().unwrap_or(false))
        .map(|(k, f)| (f, k))
        .collect();
    r.core.multi_mode_product(&factors)
}

/// Peak signal-to-noise ratio in dB for 8-bit data: `20·log10(255/RMSE)`.
/// Returns `+∞` when the inputs are identical.
pub fn psnr(original: &Matrix, degraded: &Matrix) -> Result<f64> {
    if original.rows() != degraded.rows() || original.cols() != degraded.cols() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            original.rows(),
            original.cols(),
            degraded.rows(),
            degraded.cols()
        )));
    }
    Ok(psnr_of_buffers(original.as_slice(), degraded.as_slice()))
}

/// PSNR over every entry of two same-shape tensors.
pub fn psnr_tensor(original: &DenseTensor, degraded: &DenseTensor) -> Result<f64> {
    if original.shape() != degraded.shape() {
        return Err(Error::Dimension(format!(
            "shape {:?} vs {:?}",
            original.shape(),
            degraded.shape()
        )));
    }
    Ok(psnr_of_buffers(original.as_slice(), degraded.as_slice()))
}

fn psnr_of_buffers(a: &[f64], b: &[f64]) -> f64 {
    let sse: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if sse == 0.0 {
        return f64::INFINITY;
    }
    let mse = sse / a.len() as f64;
    20.0 * (255.0 / mse.sqrt()).log10()
}

/// Storage ratios for PCA and HOPCA.
///
/// `*_raw` are uncompressed/compressed (values above one mean savings);
/// `cr_*` are the reciprocals, compressed/uncompressed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionRatios {
    pub pca_raw: f64,
    pub hopca_raw: f64,
    pub cr_pca: f64,
    pub cr_hopca: f64,
}

/// `M` images of `m × n` pixels; `p` PCA components; `d × q` HOPCA dims.
///
/// PCA: `Mmn / (Mp + mnp)`. HOPCA: `Mmn / (Mdq + md + nq)`.
pub fn compression_ratios(
    samples: usize,
    m: usize,
    n: usize,
    p: usize,
    d: usize,
    q: usize,
) -> Result<CompressionRatios> {
    if [samples, m, n, p, d, q].contains(&0) {
        return Err(Error::Config("compression ratio inputs must be positive".into()));
    }
    let pca = pca_expansion(samples, m * n, p);
    let hopca = tensor_expansion(samples, &[m, n], &[d, q]);
    Ok(CompressionRatios {
        pca_raw: pca,
        hopca_raw: hopca,
        cr_pca: 1.0 / pca,
        cr_hopca: 1.0 / hopca,
    })
}

/// Uncompressed/compressed for `p` vector components of `len`-long samples.
pub fn pca_expansion(samples: usize, len: usize, p: usize) -> f64 {
    let full = (samples * len) as f64;
    full / (samples * p + len * p) as f64
}

/// Uncompressed/compressed for a Tucker representation: each sample keeps a
/// `Π J_k` core, plus one `I_k × J_k` factor per mode.
pub fn tensor_expansion(samples: usize, extents: &[usize], dims: &[usize]) -> f64 {
    let full = samples as f64 * extents.iter().product::<usize>() as f64;
    let cores = samples as f64 * dims.iter().product::<usize>() as f64;
    let factors: usize = extents.iter().zip(dims).map(|(i, j)| i * j).sum();
    full / (cores + factors as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_principal_angle, sym_eig};

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed ^ 0xD1B54A32D192ED03;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random_tensor(shape: &[usize], seed: u64) -> DenseTensor {
        let mut r = lcg(seed);
        DenseTensor::from_fn(shape, |_| r()).unwrap()
    }

    fn rel_err(a: &DenseTensor, b: &DenseTensor) -> f64 {
        a.distance(b).unwrap() / a.norm()
    }

    #[test]
    fn select_rank_examples() {
        assert_eq!(select_rank(&[4.0, 3.0, 2.0, 1.0], 0.7).unwrap(), 2);
        assert_eq!(select_rank(&[4.0, 3.0, 2.0, 1.0, 0.0, 0.0], 1.0).unwrap(), 4);
        assert_eq!(select_rank(&[4.0, 3.0], 0.01).unwrap(), 1);
        let geo: Vec<f64> = (0..10).map(|i| 0.5f64.powi(i)).collect();
        let total: f64 = geo.iter().sum();
        let mut acc = 0.0;
        let mut expected = 0;
        for (i, s) in geo.iter().enumerate() {
            acc += s;
            if acc / total >= 0.9 {
                expected = i + 1;
                break;
            }
        }
        assert_eq!(select_rank(&geo, 0.9).unwrap(), expected);
    }

    #[test]
    fn select_rank_errors() {
        assert!(matches!(select_rank(&[0.0, 0.0], 0.5), Err(Error::Degenerate)));
        assert!(matches!(select_rank(&[1.0], 1.5), Err(Error::Config(_))));
        assert!(matches!(select_rank(&[1.0], 0.0), Err(Error::Config(_))));
        assert!(select_rank(&[1.0, 2.0], 0.5).is_err());
        assert!(select_rank(&[], 0.5).is_err());
    }

    #[test]
    fn full_rank_is_lossless() {
        let t = random_tensor(&[4, 3, 5], 1);
        let r = hosvd(&t, &HosvdOptions::new(RankPolicy::Ranks(vec![4, 3, 5]))).unwrap();
        assert!(rel_err(&t, &reconstruct(&r).unwrap()) <= 1e-8);
        for f in &r.factors {
            let g = f.t_matmul(f).unwrap();
            assert!((&g - &Matrix::identity(f.cols())).frobenius_norm() <= 1e-10);
        }
    }

    #[test]
    fn rank_one_tensor_is_recovered_exactly() {
        let a = [1.0, -2.0, 0.5];
        let b = [0.3, 1.0];
        let c = [2.0, -1.0, 1.0, 0.25];
        let t = DenseTensor::from_fn(&[3, 2, 4], |i| a[i[0]] * b[i[1]] * c[i[2]]).unwrap();
        let r = hosvd(&t, &HosvdOptions::new(RankPolicy::Ranks(vec![1, 1, 1]))).unwrap();
        assert!(rel_err(&t, &reconstruct(&r).unwrap()) <= 1e-10);
        let r = hosvd(&t, &HosvdOptions::new(RankPolicy::Threshold(0.99))).unwrap();
        assert_eq!(r.kept_ranks, vec![1, 1, 1]);
    }

    #[test]
    fn truncation_matches_gram_eigen_route() {
        let t = random_tensor(&[6, 5, 4], 2);
        let ranks = [3, 3, 2];
        let r = hosvd(&t, &HosvdOptions::new(RankPolicy::Ranks(ranks.to_vec()))).unwrap();
        let approx = reconstruct(&r).unwrap();
        // independent route: projectors from eigenvectors of X_(k) X_(k)ᵀ
        let mut proj = t.clone();
        for (k, &rank) in ranks.iter().enumerate() {
            let x = t.unfold(k).unwrap();
            let g = x.matmul(&x.transpose()).unwrap();
            let v = sym_eig(&g).unwrap().vectors.leading_columns(rank);
            let p = v.matmul(&v.transpose()).unwrap();
            proj = proj.mode_product(&p, k).unwrap();
        }
        let e1 = t.distance(&approx).unwrap();
        let e2 = t.distance(&proj).unwrap();
        assert!((e1 - e2).abs() <= 1e-10 * t.norm());
    }

    #[test]
    fn truncation_error_respects_discarded_energy_bound() {
        for seed in 0..5 {
            let t = random_tensor(&[5, 4, 6], 10 + seed);
            let ranks = vec![2, 3, 3];
            let r = hosvd(&t, &HosvdOptions::new(RankPolicy::Ranks(ranks.clone()))).unwrap();
            let err = t.distance(&reconstruct(&r).unwrap()).unwrap().powi(2);
            let bound: f64 = r
                .singular_values
                .iter()
                .zip(&ranks)
                .map(|(s, &j)| s.iter().skip(j).map(|x| x * x).sum::<f64>())
                .sum();
            assert!(err <= bound * (1.0 + 1e-12), "{err} > {bound}");
        }
    }

    #[test]
    fn projection_form_agrees_with_reconstruction() {
        let t = random_tensor(&[5, 4, 3], 3);
        let r = hosvd(&t, &HosvdOptions::new(RankPolicy::Threshold(0.8))).unwrap();
        let mut proj = t.clone();
        for (k, v) in r.factors.iter().enumerate() {
            proj = proj.mode_product(&v.matmul(&v.transpose()).unwrap(), k).unwrap();
        }
        assert!(proj.distance(&reconstruct(&r).unwrap()).unwrap() <= 1e-9 * t.norm());
        for (e, _) in r.mode_energy.iter().zip(&r.kept_ranks) {
            assert!(*e >= 0.8);
        }
    }

    #[test]
    fn exempt_mode_keeps_identity() {
        let t = random_tensor(&[4, 3, 6], 4);
        let opts = HosvdOptions::new(RankPolicy::Threshold(0.9)).exempt([2]);
        let r = hosvd(&t, &opts).unwrap();
        assert_eq!(r.factors[2], Matrix::identity(6));
        assert_eq!(r.core.shape()[2], 6);
        assert_eq!(r.kept_ranks[2], 6);
    }

    #[test]
    fn gram_crossover_gives_same_subspace() {
        let t = random_tensor(&[4, 6, 5], 5);
        let mut opts = HosvdOptions::new(RankPolicy::Ranks(vec![2, 3, 2]));
        let direct = hosvd(&t, &opts).unwrap();
        opts.gram_crossover = 1;
        let gram = hosvd(&t, &opts).unwrap();
        for (a, b) in direct.factors.iter().zip(&gram.factors) {
            assert!(max_principal_angle(a, b).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn deterministic_output() {
        let t = random_tensor(&[4, 5, 3], 6);
        let opts = HosvdOptions::new(RankPolicy::Threshold(0.9));
        let a = hosvd(&t, &opts).unwrap();
        let b = hosvd(&t, &opts).unwrap();
        assert_eq!(a.factors, b.factors);
        assert_eq!(a.core, b.core);
    }

    #[test]
    fn hosvd_errors() {
        let t = random_tensor(&[3, 2], 7);
        assert!(matches!(
            hosvd(&t, &HosvdOptions::new(RankPolicy::Ranks(vec![4, 2]))),
            Err(Error::RankTooLarge { mode: 0, .. })
        ));
        let z = DenseTensor::zeros(&[3, 2]).unwrap();
        let err = hosvd(&z, &HosvdOptions::new(RankPolicy::Threshold(0.9))).unwrap_err();
        assert!(matches!(err, Error::InMode { mode: 0, .. }));
        assert!(hosvd(&t, &HosvdOptions::new(RankPolicy::Threshold(1.2))).is_err());
    }

    #[test]
    fn zero_core_reconstructs_zero() {
        let r = HosvdResult {
            factors: vec![Matrix::truncated_identity(3, 2), Matrix::truncated_identity(4, 1)],
            core: DenseTensor::zeros(&[2, 1]).unwrap(),
            kept_ranks: vec![2, 1],
            mode_energy: vec![1.0, 1.0],
            singular_values: vec![vec![], vec![]],
            exempt: vec![false, false],
        };
        let x = reconstruct(&r).unwrap();
        assert_eq!(x.shape(), &[3, 4]);
        assert!(x.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn psnr_examples() {
        let a = Matrix::from_fn(4, 5, |r, c| (r * 5 + c) as f64);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let shifted = Matrix::from_fn(4, 5, |r, c| a.get(r, c) + 255.0);
        assert!(psnr(&a, &shifted).unwrap().abs() < 1e-12);
        let mut rnd = lcg(8);
        let x = Matrix::from_fn(4, 5, |_, _| 128.0 + 100.0 * rnd());
        let y = Matrix::from_fn(4, 5, |_, _| 128.0 + 100.0 * rnd());
        let mut sse = 0.0;
        for r in 0..4 {
            for c in 0..5 {
                sse += (x.get(r, c) - y.get(r, c)).powi(2);
            }
        }
        let expected = 20.0 * (255.0 / (sse / 20.0).sqrt()).log10();
        assert!((psnr(&x, &y).unwrap() - expected).abs() <= 1e-10 * expected.abs());
        assert!(psnr(&x, &Matrix::zeros(5, 4)).is_err());
    }

    #[test]
    fn compression_ratio_examples() {
        let r = compression_ratios(10, 4, 5, 2, 1, 1).unwrap();
        assert!((r.pca_raw - 10.0 / 3.0).abs() < 1e-15);
        assert!((r.cr_pca - 0.3).abs() < 1e-15);
        let r = compression_ratios(1, 1, 1, 1, 1, 1).unwrap();
        assert_eq!(r.pca_raw, 0.5);
        assert_eq!(r.cr_pca, 2.0);
        // Mmn/(Mdq+md+nq) for M=10, 4x5 images, 2x3 dims: 200/(60+8+15)
        let r = compression_ratios(10, 4, 5, 2, 2, 3).unwrap();
        assert_eq!(r.hopca_raw, 200.0 / 83.0);
        assert!(compression_ratios(0, 1, 1, 1, 1, 1).is_err());
    }
}
