use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use gda_core::compress::{compress_samples, CompressionReport};
use gda_core::dataset::{load_dataset, parse_shape, save_image, DatasetManifest, SyntheticSpec};
use gda_core::eval::{classify, evaluate_loo, evaluate_split, export_projection_2d, write_projection_csv, EvalOptions, Plane};
use gda_core::gda::train;
use gda_core::model_io::{load_model, save_model};
use gda_core::{DenseTensor, Error, LabeledTensorSet, Matrix, Method, RankPolicy, Result, TrainingConfig};
use serde::Serialize;

use crate::args::*;

pub struct Ctx {
    pub verbose: u8,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

struct Loaded {
    data: LabeledTensorSet,
    /// Manifest paths, one per sample.
    paths: Option<Vec<PathBuf>>,
}

fn load_source(src: &Source, seed: u64, ctx: &Ctx) -> Result<Loaded> {
    if let Some(spec) = &src.synthetic {
        let spec: SyntheticSpec = spec.parse()?;
        let data = spec.generate()?;
        ctx.log(format!("generated {} samples of shape {:?}", data.len(), data.sample_shape()));
        return Ok(Loaded { data, paths: None });
    }
    let path = src.manifest.as_ref().expect("clap requires a source");
    let manifest = DatasetManifest::load(path)?;
    let data = load_dataset(&manifest, src.frames, seed)?;
    ctx.log(format!(
        "loaded {} samples of shape {:?} in {} classes from {}",
        data.len(),
        data.sample_shape(),
        data.num_classes(),
        path.display()
    ));
    Ok(Loaded {
        data,
        paths: Some(manifest.entries.into_iter().map(|e| e.path).collect()),
    })
}

fn parse_dims(s: &str, what: &str) -> Result<Vec<usize>> {
    parse_shape(s).map_err(|e| Error::Config(format!("--{what}: {e}")))
}

fn rank_policy(theta: Option<f64>, ranks: Option<&str>) -> Result<Option<RankPolicy>> {
    match (theta, ranks) {
        (Some(t), _) => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("--theta must lie in (0, 1], got {t}")));
            }
            Ok(Some(RankPolicy::Threshold(t)))
        }
        (None, Some(r)) => Ok(Some(RankPolicy::Ranks(parse_dims(r, "hosvd-ranks")?))),
        (None, None) => Ok(None),
    }
}

fn training_config(t: &Training, seed: u64, methods: &[Method]) -> Result<TrainingConfig> {
    let mut cfg = TrainingConfig {
        seed,
        ..Default::default()
    };
    if let Some(policy) = rank_policy(t.theta, t.hosvd_ranks.as_deref())? {
        if !methods.iter().any(|m| m.uses_hosvd()) {
            return Err(Error::Config("--theta and --hosvd-ranks apply only to gda and hopca".into()));
        }
        cfg.hosvd = policy;
    }
    if let Some(d) = &t.target_dims {
        cfg.target_dims = Some(parse_dims(d, "target-dims")?);
    }
    if let Some(v) = t.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = t.conv_tol {
        cfg.conv_tol = v;
    }
    if let Some(v) = t.ridge {
        cfg.ridge = v;
    }
    if let Some(v) = t.gram_crossover {
        cfg.gram_crossover = v;
    }
    cfg.pca_dims = t.pca_dims;
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(p, e))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn label_name(names: Option<&[String]>, label: usize) -> String {
    names.and_then(|n| n.get(label)).cloned().unwrap_or_else(|| label.to_string())
}

pub fn train_cmd(a: &TrainArgs, ctx: &Ctx) -> Result<()> {
    let cfg = training_config(&a.training, a.seed, &[a.method])?;
    let src = load_source(&a.source, a.seed, ctx)?;
    let model = train(a.method, &src.data, &cfg)?;
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }
    save_model(&model, &a.out)?;
    ctx.log(format!("wrote {} model to {}", a.method, a.out.display()));

    let mut trace = String::from("sweep\tobjective\tchange\n");
    for (i, obj) in model.objective_trace.iter().enumerate() {
        let change = i.checked_sub(1).and_then(|j| model.change_trace.get(j));
        let change = change.map_or("-".to_string(), |c| format!("{c:e}"));
        trace.push_str(&format!("{i}\t{obj}\t{change}\n"));
    }
    if !model.objective_trace.is_empty() {
        trace.push_str(&format!("# converged: {}\n", model.converged));
    }
    write_text(None, &trace)?;
    if a.timings {
        eprintln!(
            "timing hosvd {:.6}s optimize {:.6}s",
            model.timings.hosvd.as_secs_f64(),
            model.timings.optimize.as_secs_f64()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    index: usize,
    source: &'a str,
    truth: String,
    predicted: String,
    distance: f64,
}

pub fn classify_cmd(a: &ClassifyArgs, ctx: &Ctx) -> Result<()> {
    let model = load_model(&a.model)?;
    let src = load_source(&a.source, a.seed, ctx)?;
    let names = (!model.class_names.is_empty()).then_some(model.class_names.as_slice());
    let start = Instant::now();
    let predictions = src
        .data
        .samples()
        .iter()
        .map(|x| classify(&model, x))
        .collect::<Result<Vec<_>>>()?;
    let elapsed = start.elapsed();

    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    let mut correct = 0;
    for (i, p) in predictions.iter().enumerate() {
        let truth = label_name(src.data.class_names(), src.data.labels()[i]);
        let predicted = label_name(names, p.label);
        correct += (truth == predicted) as usize;
        let source = src.paths.as_ref().map(|v| v[i].to_string_lossy().into_owned()).unwrap_or_default();
        w.serialize(PredictionRow {
            index: i,
            source: &source,
            truth,
            predicted,
            distance: p.distance,
        })
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<predictions>", e))?;
    eprintln!(
        "accuracy {:.2}% ({correct}/{})",
        100.0 * correct as f64 / predictions.len().max(1) as f64,
        predictions.len()
    );
    if a.timings {
        eprintln!("timing classify {:.6}s", elapsed.as_secs_f64());
    }
    Ok(())
}

/// `dir/name.ext` becomes `dir/name-METHOD.ext`.
fn per_method_path(base: &Path, method: Method) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}-{method}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{method}"),
    };
    base.with_file_name(name)
}

pub fn evaluate_cmd(a: &EvaluateArgs, ctx: &Ctx) -> Result<()> {
    let cfg = training_config(&a.training, a.seed, &a.method)?;
    if a.method.len() > 1 && a.out.is_none() {
        return Err(Error::Config("several methods need --out to name one report each".into()));
    }
    let src = load_source(&a.source, a.seed, ctx)?;
    let opts = EvalOptions {
        seed: a.seed,
        include_timings: a.timings,
    };
    for &m in &a.method {
        // HOSVD settings do not apply to methods without that stage
        let cfg = if m.uses_hosvd() {
            cfg.clone()
        } else {
            TrainingConfig { hosvd: RankPolicy::default(), ..cfg.clone() }
        };
        let report = match a.protocol {
            ProtocolArg::Split => evaluate_split(&src.data, m, &cfg, a.train_per_class, a.trials, &opts)?,
            ProtocolArg::Loo => evaluate_loo(&src.data, m, &cfg, &opts)?,
        };
        let path = match &a.out {
            Some(p) if a.method.len() > 1 => Some(per_method_path(p, m)),
            p => p.clone(),
        };
        write_text(path.as_deref(), &report.to_toml()?)?;
        eprintln!(
            "{m}: accuracy {:.2}% over {} {}",
            report.accuracy,
            report.trials.len(),
            if a.protocol == ProtocolArg::Loo { "folds" } else { "trials" }
        );
        if let Some(p) = path {
            ctx.log(format!("wrote {}", p.display()));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CompressionFile<'a> {
    format: &'static str,
    version: u32,
    #[serde(flatten)]
    report: &'a CompressionReport,
}

pub fn compress_cmd(a: &CompressArgs, ctx: &Ctx) -> Result<()> {
    let policy = rank_policy(a.theta, a.hosvd_ranks.as_deref())?.unwrap_or_default();
    let src = load_source(&a.source, a.seed, ctx)?;
    let c = compress_samples(src.data.samples(), &policy, a.pca_dims)?;
    let file = CompressionFile {
        format: "gda-compression",
        version: 1,
        report: &c.report,
    };
    let text = toml::to_string(&file).map_err(|e| Error::Format(e.to_string()))?;
    write_text(a.out.as_deref(), &text)?;
    if let Some(dir) = &a.recon_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, (h, p)) in c.hopca.iter().zip(&c.pca).enumerate() {
            write_sample(dir, &format!("hopca_{i:04}"), h)?;
            write_sample(dir, &format!("pca_{i:04}"), p)?;
        }
        ctx.log(format!("wrote {} reconstructions per method to {}", c.hopca.len(), dir.display()));
    }
    eprintln!(
        "hopca dims {:?}: PSNR {} dB, CR {:.6}; pca {} dims: PSNR {} dB, CR {:.6}",
        c.report.hopca_dims,
        c.report.psnr_hopca,
        c.report.cr_hopca,
        c.report.pca_dims,
        c.report.psnr_pca,
        c.report.cr_pca
    );
    Ok(())
}

pub fn visualize_cmd(a: &VisualizeArgs, ctx: &Ctx) -> Result<()> {
    let model = load_model(&a.model)?;
    let src = load_source(&a.source, a.seed, ctx)?;
    let plane = a.plane.unwrap_or(if model.output_shape().iter().product::<usize>() == 2 { Plane::Flat } else { Plane::RowPair });
    let rows = export_projection_2d(&model, &src.data, plane)?;
    write_projection_csv(&rows, output(a.out.as_deref())?)?;
    ctx.log(format!("exported {} points", rows.len()));
    Ok(())
}

/// Order-2 samples become one PGM, order-3 samples a directory of frames.
fn write_sample(dir: &Path, name: &str, x: &DenseTensor) -> Result<PathBuf> {
    match *x.shape() {
        [h, w] => {
            let path = dir.join(format!("{name}.pgm"));
            save_image(&Matrix::from_col_major(h, w, x.as_slice().to_vec())?, &path, true)?;
            Ok(path)
        }
        [h, w, t] => {
            let path = dir.join(name);
            fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
            for f in 0..t {
                let frame = x.as_slice()[f * h * w..(f + 1) * h * w].to_vec();
                save_image(&Matrix::from_col_major(h, w, frame)?, path.join(format!("f{f:03}.pgm")), true)?;
            }
            Ok(path)
        }
        _ => Err(Error::Config(format!(
            "only order-2 (image) and order-3 (sequence) samples can be written as PGM, got shape {:?}",
            x.shape()
        ))),
    }
}

pub fn synthesize_cmd(a: &SynthesizeArgs, ctx: &Ctx) -> Result<()> {
    let spec: SyntheticSpec = a.synthetic.parse()?;
    if !(2..=3).contains(&spec.shape.len()) {
        return Err(Error::Config(format!("synthesize writes order-2 or order-3 shapes, got {:?}", spec.shape)));
    }
    let data = spec.generate()?;
    // one affine map onto 0..255 for the whole set
    let (lo, hi) = data
        .samples()
        .iter()
        .flat_map(|s| s.as_slice())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut manifest = String::from("# path\tlabel\tsubject\n");
    let subjects = data.subjects().expect("synthetic sets carry subjects");
    for (i, x) in data.samples().iter().enumerate() {
        let scaled = DenseTensor::new(x.shape().to_vec(), x.as_slice().iter().map(|v| (v - lo) * scale).collect())?;
        let label = data.labels()[i];
        let name = format!("c{label:02}_s{:02}", subjects[i]);
        write_sample(&a.out_dir, &name, &scaled)?;
        let entry = if spec.shape.len() == 2 { format!("{name}.pgm") } else { name };
        manifest.push_str(&format!("{entry}\tclass{label}\tsubject{}\n", subjects[i]));
    }
    let path = a.out_dir.join("manifest.tsv");
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    ctx.log(format!("wrote {} samples and {}", data.len(), path.display()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_method_names_keep_the_extension() {
        assert_eq!(per_method_path(Path::new("out/r.toml"), Method::Pca), PathBuf::from("out/r-pca.toml"));
        assert_eq!(per_method_path(Path::new("r"), Method::Gda), PathBuf::from("r-gda"));
    }

    #[test]
    fn theta_needs_a_hosvd_method() {
        let t = Training { theta: Some(0.9), ..Default::default() };
        assert!(training_config(&t, 0, &[Method::Pca]).is_err());
        assert!(training_config(&t, 0, &[Method::Pca, Method::Gda]).is_ok());
        let bad = Training { theta: Some(1.5), ..Default::default() };
        assert_eq!(training_config(&bad, 0, &[Method::Gda]).unwrap_err().class(), gda_core::ErrorClass::Usage);
    }
}
