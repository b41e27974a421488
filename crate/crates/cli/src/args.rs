use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use gda_core::eval::Plane;
use gda_core::{Error, Method, Result};

#[derive(Parser, Debug)]
#[command(name = "gda", version, about = "Discriminant subspace learning for tensor data")]
pub struct Cli {
    /// File of `key = value` lines supplying any long flag; the command line wins
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Progress messages on stderr (repeat for more)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model and write it as JSON
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Label samples with a trained model
    #[command(args_override_self = true)]
    Classify(ClassifyArgs),
    /// Run the split or leave-one-out protocol and write a TOML report
    #[command(args_override_self = true)]
    Evaluate(EvaluateArgs),
    /// Reconstruct samples by HOPCA and PCA and report PSNR and storage ratios
    #[command(args_override_self = true)]
    Compress(CompressArgs),
    /// Export 2-D projected coordinates as CSV
    #[command(args_override_self = true)]
    Visualize(VisualizeArgs),
    /// Write a synthetic data set as PGM files plus a manifest
    #[command(args_override_self = true)]
    Synthesize(SynthesizeArgs),
}

#[derive(Args, Debug)]
pub struct Source {
    /// Tab-separated manifest: path, label, optional subject
    #[arg(long, value_name = "FILE", required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub manifest: Option<PathBuf>,

    /// Generated data, e.g. `classes=10,per_class=10,shape=8x8x4,separation=8,noise=1,seed=0`
    #[arg(long, value_name = "SPEC")]
    pub synthetic: Option<String>,

    /// Frames kept per sequence directory, trimmed by seeded deletion (default: all)
    #[arg(long)]
    pub frames: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct Training {
    /// HOSVD energy threshold in (0, 1]
    #[arg(long, conflicts_with = "hosvd_ranks")]
    pub theta: Option<f64>,

    /// Explicit HOSVD ranks, e.g. `6x3x3`
    #[arg(long, value_name = "RANKS")]
    pub hosvd_ranks: Option<String>,

    /// Final dimensions per mode, e.g. `3x3`; vector methods read the first
    #[arg(long, value_name = "DIMS")]
    pub target_dims: Option<String>,

    #[arg(long)]
    pub max_iters: Option<usize>,

    #[arg(long)]
    pub conv_tol: Option<f64>,

    /// Relative ridge added to the within-class scatter
    #[arg(long)]
    pub ridge: Option<f64>,

    /// Fisherface PCA stage size
    #[arg(long)]
    pub pca_dims: Option<usize>,

    /// Mode size above which factors come from the Gram matrix
    #[arg(long)]
    pub gram_crossover: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub training: Training,

    #[arg(long, default_value = "gda")]
    pub method: Method,

    /// Model file to write
    #[arg(long, short)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Print per-stage wall-clock times on stderr
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub source: Source,

    /// CSV of predictions (default: stdout)
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub timings: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolArg {
    Split,
    Loo,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub training: Training,

    /// One or more methods, comma separated; all share the same splits
    #[arg(long, value_delimiter = ',', default_value = "gda")]
    pub method: Vec<Method>,

    #[arg(long, value_enum, default_value = "split")]
    pub protocol: ProtocolArg,

    #[arg(long, default_value_t = 5)]
    pub train_per_class: usize,

    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Report file (default: stdout). With several methods, `NAME-METHOD.EXT` per method.
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Record wall-clock timings in the report
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    #[command(flatten)]
    pub source: Source,

    #[arg(long, conflicts_with = "hosvd_ranks")]
    pub theta: Option<f64>,

    #[arg(long, value_name = "RANKS")]
    pub hosvd_ranks: Option<String>,

    /// PCA components (default: the largest fitting the HOPCA storage)
    #[arg(long)]
    pub pca_dims: Option<usize>,

    /// Report file (default: stdout)
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Directory for reconstructed PGM files
    #[arg(long)]
    pub recon_dir: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct VisualizeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub source: Source,

    /// `flat`, `row-pair` or `col-pair` (default: flat for two-value projections, else row-pair)
    #[arg(long)]
    pub plane: Option<Plane>,

    /// CSV file (default: stdout)
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    /// Same syntax as `--synthetic` elsewhere; omitted keys take defaults
    #[arg(long, value_name = "SPEC", default_value = "")]
    pub synthetic: String,

    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Splices flags from a `--config` file in right after the subcommand, so
/// anything given on the command line overrides them.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate().skip(1) {
        let a = a.to_string_lossy();
        if a == "--config" {
            path = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{}:{}: expected key = value", path.display(), n + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" {
            continue;
        }
        match value {
            "true" => extra.push(OsString::from(format!("--{key}"))),
            "false" => {}
            v => {
                extra.push(OsString::from(format!("--{key}")));
                extra.push(OsString::from(v));
            }
        }
    }
    // argv[1] is the subcommand; if it is missing, let clap report that
    if argv.len() < 2 {
        return Ok(argv);
    }
    let mut out = argv[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_precede_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        fs::write(&file, "# defaults\nmax_iters = 20\ntimings = true\nquiet = false\n").unwrap();
        let argv = os(&["gda", "train", "--config", file.to_str().unwrap(), "--max-iters", "5"]);
        let out = expand_config(argv).unwrap();
        let s: Vec<String> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(&s[..5], &["gda", "train", "--max-iters", "20", "--timings"]);
        assert_eq!(s.last().unwrap(), "5");
    }

    #[test]
    fn malformed_config_line_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("bad.cfg");
        fs::write(&file, "max_iters 20\n").unwrap();
        let err = expand_config(os(&["gda", "train", "--config", file.to_str().unwrap()])).unwrap_err();
        assert_eq!(err.class(), gda_core::ErrorClass::Usage);
    }
}
