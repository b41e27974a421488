//! Textual model container.
//!
//! A model is a single JSON object tagged `"format": "gda-model"` and
//! `"version": 1`. Matrices are written row-major with their declared order,
//! tensors in their native generalized column-major order. Floats use the
//! shortest representation that parses back to the same bits; non-finite
//! values are written as the strings `"inf"`, `"-inf"` and `"nan"`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gda::{GdaModel, Method, StageTimings, TrainingConfig};
use crate::tensor::{DenseTensor, Matrix};

pub const FORMAT_TAG: &str = "gda-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Num {
    Finite(f64),
    Tag(Special),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Special {
    #[serde(rename = "inf")]
    PosInf,
    #[serde(rename = "-inf")]
    NegInf,
    #[serde(rename = "nan")]
    Nan,
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Num::Finite(v)
        } else if v.is_nan() {
            Num::Tag(Special::Nan)
        } else if v > 0.0 {
            Num::Tag(Special::PosInf)
        } else {
            Num::Tag(Special::NegInf)
        }
    }
}

impl From<Num> for f64 {
    fn from(n: Num) -> Self {
        match n {
            Num::Finite(v) => v,
            Num::Tag(Special::PosInf) => f64::INFINITY,
            Num::Tag(Special::NegInf) => f64::NEG_INFINITY,
            Num::Tag(Special::Nan) => f64::NAN,
        }
    }
}

fn encode(values: &[f64]) -> Vec<Num> {
    values.iter().map(|&v| v.into()).collect()
}

fn decode(values: Vec<Num>) -> Vec<f64> {
    values.into_iter().map(f64::from).collect()
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    order: String,
    data: Vec<Num>,
}

impl MatrixWire {
    fn from_matrix(m: &Matrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            order: "row-major".into(),
            data: encode(&m.to_row_major()),
        }
    }

    fn into_matrix(self, what: &str) -> Result<Matrix> {
        let data = decode(self.data);
        match self.order.as_str() {
            "row-major" => Matrix::from_row_major(self.rows, self.cols, &data),
            "column-major" => Matrix::from_col_major(self.rows, self.cols, data),
            other => return Err(Error::Format(format!("{what}: unknown order `{other}`"))),
        }
        .map_err(|e| Error::Format(format!("{what}: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct TensorWire {
    shape: Vec<usize>,
    order: String,
    data: Vec<Num>,
}

impl TensorWire {
    fn from_tensor(t: &DenseTensor) -> Self {
        Self {
            shape: t.shape().to_vec(),
            order: "column-major".into(),
            data: encode(t.as_slice()),
        }
    }

    fn into_tensor(self, what: &str) -> Result<DenseTensor> {
        if self.order != "column-major" {
            return Err(Error::Format(format!("{what}: unsupported tensor order `{}`", self.order)));
        }
        DenseTensor::new(self.shape, decode(self.data)).map_err(|e| Error::Format(format!("{what}: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelWire {
    format: String,
    version: u32,
    method: Method,
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    vectorized: bool,
    hosvd_factors: Vec<MatrixWire>,
    disc_factors: Vec<MatrixWire>,
    combined: Vec<MatrixWire>,
    gallery_labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    class_names: Vec<String>,
    gallery: Vec<TensorWire>,
    objective_trace: Vec<Num>,
    change_trace: Vec<Num>,
    converged: bool,
    warnings: Vec<String>,
    config: TrainingConfig,
}

/// Serializes `model` to the pretty-printed container text.
pub fn model_to_string(model: &GdaModel) -> Result<String> {
    let wire = ModelWire {
        format: FORMAT_TAG.into(),
        version: FORMAT_VERSION,
        method: model.method,
        input_shape: model.input_shape.clone(),
        output_shape: model.output_shape(),
        vectorized: model.vectorized,
        hosvd_factors: model.hosvd_factors.iter().map(MatrixWire::from_matrix).collect(),
        disc_factors: model.disc_factors.iter().map(MatrixWire::from_matrix).collect(),
        combined: model.combined.iter().map(MatrixWire::from_matrix).collect(),
        gallery_labels: model.gallery_labels.clone(),
        class_names: model.class_names.clone(),
        gallery: model.gallery.iter().map(TensorWire::from_tensor).collect(),
        objective_trace: encode(&model.objective_trace),
        change_trace: encode(&model.change_trace),
        converged: model.converged,
        warnings: model.warnings.clone(),
        config: model.config.clone(),
    };
    let mut text = serde_json::to_string_pretty(&wire).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn matrices(list: Vec<MatrixWire>, what: &str) -> Result<Vec<Matrix>> {
    list.into_iter()
        .enumerate()
        .map(|(k, m)| m.into_matrix(&format!("{what}[{k}]")))
        .collect()
}

/// Parses and validates container text.
pub fn model_from_str(text: &str) -> Result<GdaModel> {
    let wire: ModelWire = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if wire.format != FORMAT_TAG {
        return Err(Error::Format(format!("expected format `{FORMAT_TAG}`, found `{}`", wire.format)));
    }
    if wire.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {} (this build reads version {FORMAT_VERSION})",
            wire.version
        )));
    }
    let model = GdaModel {
        method: wire.method,
        input_shape: wire.input_shape,
        vectorized: wire.vectorized,
        hosvd_factors: matrices(wire.hosvd_factors, "hosvd_factors")?,
        disc_factors: matrices(wire.disc_factors, "disc_factors")?,
        combined: matrices(wire.combined, "combined")?,
        gallery: wire
            .gallery
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.into_tensor(&format!("gallery[{i}]")))
            .collect::<Result<_>>()?,
        gallery_labels: wire.gallery_labels,
        class_names: wire.class_names,
        objective_trace: decode(wire.objective_trace),
        change_trace: decode(wire.change_trace),
        converged: wire.converged,
        warnings: wire.warnings,
        config: wire.config,
        timings: StageTimings::default(),
    };
    validate(&model, &wire.output_shape)?;
    Ok(model)
}

fn validate(model: &GdaModel, output_shape: &[usize]) -> Result<()> {
    let fail = |msg: String| Err(Error::Format(msg));
    let modes = if model.vectorized { 1 } else { model.input_shape.len() };
    if model.combined.len() != modes
        || model.hosvd_factors.len() != modes
        || model.disc_factors.len() != modes
    {
        return fail(format!("expected {modes} factors per stage"));
    }
    let extents: Vec<usize> = if model.vectorized {
        vec![model.input_shape.iter().product()]
    } else {
        model.input_shape.clone()
    };
    for k in 0..modes {
        let (v, u, p) = (&model.hosvd_factors[k], &model.disc_factors[k], &model.combined[k]);
        if v.rows() != extents[k] || p.rows() != extents[k] || v.cols() != u.rows() || u.cols() != p.cols() {
            return fail(format!("factor shapes for mode {k} are inconsistent"));
        }
    }
    if model.output_shape() != output_shape {
        return fail(format!("declared output shape {output_shape:?} does not match the projectors"));
    }
    if model.gallery.len() != model.gallery_labels.len() {
        return fail(format!(
            "{} gallery tensors but {} labels",
            model.gallery.len(),
            model.gallery_labels.len()
        ));
    }
    if !model.class_names.is_empty() && model.gallery_labels.iter().any(|&l| l >= model.class_names.len()) {
        return fail(format!("labels exceed the {} class names", model.class_names.len()));
    }
    if let Some(i) = model.gallery.iter().position(|g| g.shape() != output_shape) {
        return fail(format!("gallery[{i}] has shape {:?}", model.gallery[i].shape()));
    }
    Ok(())
}

pub fn save_model(model: &GdaModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GdaModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}
