//! Grayscale PGM images, frame sequences, manifests and synthetic data.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::LabeledTensorSet;
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            offset,
            message: message.into(),
        }
    }

    /// Skips whitespace and `#` comments running to the end of the line.
    fn skip_blank(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_blank();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.bytes.get(start) {
                None => self.error(start, format!("unexpected end of file while reading {what}")),
                Some(_) => self.error(start, format!("expected a decimal {what}")),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error(start, format!("{what} is out of range")))
    }
}

/// Decodes a P2 (plain) or P5 (raw) graymap with maxval at most 255.
///
/// Pixels keep their stored values; file rows map to matrix rows.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Matrix> {
    let mut cur = Cursor { bytes, pos: 0, path };
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(cur.error(0, "not a PGM file (expected magic P2 or P5)")),
    };
    cur.pos = 2;
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(cur.error(2, "expected whitespace after magic number"));
    }
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let max_at = {
        cur.skip_blank();
        cur.pos
    };
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.error(max_at, format!("image dimensions {width}x{height} must be positive")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(cur.error(max_at, format!("maxval {maxval} is unsupported (must be 1..=255)")));
    }
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(cur.error(cur.pos, "expected a single whitespace byte before raster")),
        }
        let raster = &bytes[cur.pos..];
        if raster.len() < count {
            return Err(cur.error(
                bytes.len(),
                format!("truncated raster: {} of {count} bytes present", raster.len()),
            ));
        }
        for (i, &b) in raster[..count].iter().enumerate() {
            if u32::from(b) > maxval {
                return Err(cur.error(cur.pos + i, format!("pixel value {b} exceeds maxval {maxval}")));
            }
            pixels.push(f64::from(b));
        }
    } else {
        for i in 0..count {
            cur.skip_blank();
            let at = cur.pos;
            if at >= bytes.len() {
                return Err(cur.error(at, format!("truncated raster: {i} of {count} pixels present")));
            }
            let v = cur.number("pixel value")?;
            if v > maxval {
                return Err(cur.error(at, format!("pixel value {v} exceeds maxval {maxval}")));
            }
            pixels.push(f64::from(v));
        }
    }
    Matrix::from_row_major(height, width, &pixels)
}

/// Loads a PGM file as a `height × width` matrix.
pub fn load_image(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

/// Encodes with maxval 255. Values are rounded and clamped to `0..=255`.
pub fn encode_pgm(image: &Matrix, binary: bool) -> Vec<u8> {
    let (h, w) = (image.rows(), image.cols());
    let mut out = format!("{}\n{w} {h}\n255\n", if binary { "P5" } else { "P2" }).into_bytes();
    let px = |r: usize, c: usize| image.get(r, c).round().clamp(0.0, 255.0) as u8;
    for r in 0..h {
        if binary {
            out.extend((0..w).map(|c| px(r, c)));
        } else {
            let line: Vec<String> = (0..w).map(|c| px(r, c).to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

pub fn save_image(image: &Matrix, path: impl AsRef<Path>, binary: bool) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(image, binary)).map_err(|e| Error::io(path, e))
}

/// Deletes `len - target` frames (trailing mode) chosen by a seeded
/// generator; the remaining frames keep their order.
pub fn trim_to_length(seq: &DenseTensor, target: usize, seed: u64) -> Result<DenseTensor> {
    let (&frames, rest) = seq.shape().split_last().expect("nonempty shape");
    if frames < target {
        return Err(Error::Data(format!("sequence has {frames} frames, fewer than the required {target}")));
    }
    if target == 0 {
        return Err(Error::Config("target length must be at least 1".into()));
    }
    if frames == target {
        return Ok(seq.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drop = vec![false; frames];
    for i in rand::seq::index::sample(&mut rng, frames, frames - target) {
        drop[i] = true;
    }
    let chunk: usize = rest.iter().product();
    let mut data = Vec::with_capacity(chunk * target);
    for (f, &gone) in drop.iter().enumerate() {
        if !gone {
            data.extend_from_slice(&seq.as_slice()[f * chunk..(f + 1) * chunk]);
        }
    }
    let mut shape = rest.to_vec();
    shape.push(target);
    DenseTensor::new(shape, data)
}

/// `.pgm` files in `dir`, sorted by file name.
fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Stacks the frames of `dir` into an `H × W × T` tensor.
///
/// With `expected` set, longer sequences are trimmed through
/// [`trim_to_length`] with `seed`; shorter ones are an error.
pub fn load_sequence(dir: impl AsRef<Path>, expected: Option<usize>, seed: u64) -> Result<DenseTensor> {
    let dir = dir.as_ref();
    let paths = frame_paths(dir)?;
    if paths.is_empty() {
        return Err(Error::Data(format!("no .pgm frames in {}", dir.display())));
    }
    let mut frames = Vec::with_capacity(paths.len());
    for p in &paths {
        let m = load_image(p)?;
        if let Some(first) = frames.first() {
            let first: &DenseTensor = first;
            if first.shape() != [m.rows(), m.cols()] {
                return Err(Error::Data(format!(
                    "frame {} is {}x{}, expected {}x{}",
                    p.display(),
                    m.rows(),
                    m.cols(),
                    first.shape()[0],
                    first.shape()[1]
                )));
            }
        }
        frames.push(m.into_tensor());
    }
    let seq = DenseTensor::stack(&frames)?;
    match expected {
        Some(t) => trim_to_length(&seq, t, seed).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!("{}: {msg}", dir.display())),
            other => other,
        }),
        None => Ok(seq),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Resolved against the manifest directory.
    pub path: PathBuf,
    pub label: String,
    pub subject: Option<String>,
    pub line: usize,
}

/// Line-oriented list of samples: `path<TAB>label[<TAB>subject]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn parse(text: &str, root: impl Into<PathBuf>, source: &Path) -> Result<Self> {
        let root = root.into();
        let mut entries = Vec::new();
        let mut offset = 0;
        for (n, raw) in text.split_inclusive('\n').enumerate() {
            let line_start = offset;
            offset += raw.len();
            let line = raw.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() < 2 || fields.len() > 3 || fields.iter().any(|f| f.is_empty()) {
                return Err(Error::Parse {
                    path: source.to_path_buf(),
                    offset: line_start,
                    message: format!("line {}: expected `path<TAB>label[<TAB>subject]`", n + 1),
                });
            }
            let rel = Path::new(fields[0]);
            entries.push(ManifestEntry {
                path: if rel.is_absolute() { rel.to_path_buf() } else { root.join(rel) },
                label: fields[1].to_string(),
                subject: fields.get(2).map(|s| s.to_string()),
                line: n + 1,
            });
        }
        if entries.is_empty() {
            return Err(Error::Data(format!("manifest {} lists no samples", source.display())));
        }
        let with_subject = entries.iter().filter(|e| e.subject.is_some()).count();
        if with_subject != 0 && with_subject != entries.len() {
            return Err(Error::Data(format!(
                "manifest {}: subject ids must be given for all entries or none",
                source.display()
            )));
        }
        Ok(Self { root, entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root, path)
    }
}

fn intern(map: &mut HashMap<String, usize>, names: &mut Vec<String>, key: &str) -> usize {
    *map.entry(key.to_string()).or_insert_with(|| {
        names.push(key.to_string());
        names.len() - 1
    })
}

/// Loads every manifest entry. Files become `H × W` samples, directories
/// `H × W × T` frame sequences. Labels and subjects are numbered in order of
/// first appearance; label names are kept as class names.
///
/// `frames` fixes `T` for sequences, trimming longer ones with a per-entry
/// seed derived from `seed`.
pub fn load_dataset(manifest: &DatasetManifest, frames: Option<usize>, seed: u64) -> Result<LabeledTensorSet> {
    let mut label_ids = HashMap::new();
    let mut label_names = Vec::new();
    let mut subject_ids = HashMap::new();
    let mut subject_names = Vec::new();
    let mut samples: Vec<DenseTensor> = Vec::with_capacity(manifest.entries.len());
    let mut labels = Vec::new();
    let mut subjects = Vec::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        let sample = if e.path.is_dir() {
            load_sequence(&e.path, frames, seed.wrapping_add(i as u64))?
        } else {
            load_image(&e.path)?.into_tensor()
        };
        if let Some(first) = samples.first() {
            if first.shape() != sample.shape() {
                return Err(Error::Data(format!(
                    "manifest line {} ({}): shape {:?} differs from the first sample's {:?}",
                    e.line,
                    e.path.display(),
                    sample.shape(),
                    first.shape()
                )));
            }
        }
        samples.push(sample);
        labels.push(intern(&mut label_ids, &mut label_names, &e.label));
        if let Some(s) = &e.subject {
            subjects.push(intern(&mut subject_ids, &mut subject_names, s));
        }
    }
    let set = LabeledTensorSet::new(samples, labels)?.with_class_names(label_names);
    if subjects.is_empty() {
        Ok(set)
    } else {
        set.with_subjects(subjects)
    }
}

/// Parameters of [`synth_gaussian_classes`], parseable from
/// `classes=10,per_class=10,shape=8x8x4,separation=2,noise=1,seed=7`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub shape: Vec<usize>,
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            per_class: 10,
            shape: vec![8, 8, 4],
            separation: 1.0,
            noise: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<LabeledTensorSet> {
        synth_gaussian_classes(self.classes, self.per_class, &self.shape, self.separation, self.noise, self.seed)
    }
}

pub fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X', ','])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::Config(format!("invalid extent `{p}` in shape `{s}`")))
        })
        .collect()
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("synthetic spec item `{part}` is not key=value")))?;
            let bad = || Error::Config(format!("invalid value `{value}` for `{key}`"));
            match key.trim() {
                "classes" => spec.classes = value.parse().map_err(|_| bad())?,
                "per_class" => spec.per_class = value.parse().map_err(|_| bad())?,
                "shape" => spec.shape = parse_shape(value)?,
                "separation" => spec.separation = value.parse().map_err(|_| bad())?,
                "noise" => spec.noise = value.parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                other => return Err(Error::Config(format!("unknown synthetic spec key `{other}`"))),
            }
        }
        Ok(spec)
    }
}

/// `C` classes of `per_class` samples: each class has a mean drawn once from
/// `N(0, 1)` per entry and scaled by `separation`; every sample adds
/// independent `noise · N(0, 1)` entries. Subject ids are the position of a
/// sample within its class.
pub fn synth_gaussian_classes(
    classes: usize,
    per_class: usize,
    shape: &[usize],
    separation: f64,
    noise: f64,
    seed: u64,
) -> Result<LabeledTensorSet> {
    if classes == 0 || per_class == 0 {
        return Err(Error::Config("classes and per_class must be positive".into()));
    }
    if !(separation >= 0.0 && noise >= 0.0) || !separation.is_finite() || !noise.is_finite() {
        return Err(Error::Config("separation and noise must be finite and nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |scale: f64| {
        DenseTensor::from_fn(shape, |_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
    };
    let means = (0..classes).map(|_| draw(separation)).collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::with_capacity(classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    let mut subjects = Vec::with_capacity(classes * per_class);
    for (c, mean) in means.iter().enumerate() {
        for s in 0..per_class {
            samples.push(mean.try_add(&draw(noise)?)?);
            labels.push(c);
            subjects.push(s);
        }
    }
    LabeledTensorSet::new(samples, labels)?.with_subjects(subjects)
}
