//! Lossy reconstruction of a sample set by HOSVD (HOPCA) and by vector PCA,
//! with PSNR and storage ratios for both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gda::pca_basis;
use crate::hosvd::{hosvd, pca_expansion, psnr_tensor, reconstruct, tensor_expansion, HosvdOptions, RankPolicy};
use crate::tensor::{DenseTensor, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub samples: usize,
    pub sample_shape: Vec<usize>,
    /// HOSVD ranks `J_k` kept per sample mode.
    pub hopca_dims: Vec<usize>,
    pub mode_energy: Vec<f64>,
    pub pca_dims: usize,
    pub hopca_raw: f64,
    pub pca_raw: f64,
    pub cr_hopca: f64,
    pub cr_pca: f64,
    /// `+∞` when the quantized reconstruction is exact.
    pub psnr_hopca: f64,
    pub psnr_pca: f64,
}

pub struct Compressed {
    pub report: CompressionReport,
    pub hopca: Vec<DenseTensor>,
    pub pca: Vec<DenseTensor>,
}

/// Rounds to the nearest 8-bit level.
pub fn quantize(t: &DenseTensor) -> DenseTensor {
    let data = t.as_slice().iter().map(|v| v.round().clamp(0.0, 255.0)).collect();
    DenseTensor::new(t.shape().to_vec(), data).expect("same shape")
}

/// Largest PCA size whose storage does not exceed `budget` values (at least 1).
fn matched_pca_dims(budget: f64, samples: usize, len: usize) -> usize {
    ((budget / (samples + len) as f64).floor() as usize).clamp(1, len.min(samples.saturating_sub(1)).max(1))
}

/// Compresses 8-bit samples with a HOSVD of the stacked set (sample mode
/// exempt) and with vector PCA. Reconstructions are quantized before PSNR.
///
/// `pca_dims` defaults to the largest size whose storage fits in the HOPCA
/// budget, so the two PSNR figures compare equal footprints.
pub fn compress_samples(samples: &[DenseTensor], policy: &RankPolicy, pca_dims: Option<usize>) -> Result<Compressed> {
    if samples.len() < 2 {
        return Err(Error::Data("compression needs at least two samples".into()));
    }
    let order = samples[0].order();
    let shape = samples[0].shape().to_vec();
    let policy = match policy {
        RankPolicy::Ranks(r) if r.len() == order => {
            let mut r = r.clone();
            r.push(samples.len());
            RankPolicy::Ranks(r)
        }
        RankPolicy::Ranks(r) => {
            return Err(Error::Config(format!("{} ranks given for order-{order} samples", r.len())))
        }
        p => p.clone(),
    };
    let stacked = DenseTensor::stack(samples)?;
    let h = hosvd(&stacked, &HosvdOptions::new(policy).exempt([order]))?;
    let hopca: Vec<DenseTensor> = reconstruct(&h)?.unstack().iter().map(quantize).collect();
    let dims = h.kept_ranks[..order].to_vec();
    let m = samples.len();
    let hopca_raw = tensor_expansion(m, &shape, &dims);

    let len: usize = shape.iter().product();
    let budget = (m * len) as f64 / hopca_raw;
    let p = pca_dims.unwrap_or_else(|| matched_pca_dims(budget, m, len));
    let mut flat = Vec::with_capacity(m * len);
    for s in samples {
        flat.extend_from_slice(s.as_slice());
    }
    let vectors = Matrix::from_col_major(len, m, flat)?;
    let basis = pca_basis(&vectors, p)?;
    let pca = samples
        .iter()
        .map(|s| {
            let centered: Vec<f64> = s.as_slice().iter().zip(&basis.mean).map(|(x, mu)| x - mu).collect();
            let c = basis.components.t_matmul(&Matrix::from_col_major(len, 1, centered)?)?;
            let back = basis.components.matmul(&c)?;
            let data = back.as_slice().iter().zip(&basis.mean).map(|(x, mu)| x + mu).collect();
            Ok(quantize(&DenseTensor::new(shape.clone(), data)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let pca_raw = pca_expansion(m, len, p);

    let original = stacked;
    let psnr_hopca = psnr_tensor(&original, &DenseTensor::stack(&hopca)?)?;
    let psnr_pca = psnr_tensor(&original, &DenseTensor::stack(&pca)?)?;
    Ok(Compressed {
        report: CompressionReport {
            samples: m,
            sample_shape: shape,
            hopca_dims: dims,
            mode_energy: h.mode_energy[..order].to_vec(),
            pca_dims: p,
            hopca_raw,
            pca_raw,
            cr_hopca: 1.0 / hopca_raw,
            cr_pca: 1.0 / pca_raw,
            psnr_hopca,
            psnr_pca,
        },
        hopca,
        pca,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn images(seed: u64) -> Vec<DenseTensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..6)
            .map(|_| DenseTensor::from_fn(&[6, 5], |i| ((i[0] * 30 + i[1] * 10) as f64 + rng.random_range(0.0..40.0)).round()).unwrap())
            .collect()
    }

    #[test]
    fn lossless_threshold_gives_infinite_psnr() {
        let c = compress_samples(&images(1), &RankPolicy::Threshold(1.0), None).unwrap();
        assert_eq!(c.report.psnr_hopca, f64::INFINITY);
        assert_eq!(c.report.hopca_dims, vec![6, 5]);
    }

    #[test]
    fn psnr_does_not_rise_as_theta_falls() {
        let imgs = images(2);
        let mut last = f64::INFINITY;
        for theta in [1.0, 0.98, 0.9, 0.7, 0.5] {
            let c = compress_samples(&imgs, &RankPolicy::Threshold(theta), None).unwrap();
            assert!(c.report.psnr_hopca <= last, "theta {theta}");
            last = c.report.psnr_hopca;
        }
    }

    #[test]
    fn ratios_follow_the_storage_formulas() {
        let c = compress_samples(&images(3), &RankPolicy::Ranks(vec![2, 3]), Some(2)).unwrap();
        let r = &c.report;
        assert_eq!(r.hopca_raw, (6.0 * 30.0) / (6.0 * 6.0 + 12.0 + 15.0));
        assert_eq!(r.pca_raw, (6.0 * 30.0) / (6.0 * 2.0 + 30.0 * 2.0));
        assert_eq!(r.cr_hopca, 1.0 / r.hopca_raw);
    }
}
