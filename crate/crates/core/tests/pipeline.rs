use std::fs;
use std::path::Path;

use gda_core::dataset::{load_dataset, save_image, synth_gaussian_classes, DatasetManifest};
use gda_core::eval::{classify, evaluate_loo, evaluate_split, EvalOptions, ExperimentReport};
use gda_core::gda::train;
use gda_core::model_io::{load_model, model_to_string, save_model};
use gda_core::{ErrorClass, LabeledTensorSet, Matrix, Method, TrainingConfig};

/// Writes every sample of an order-2 set as a PGM plus a manifest naming them.
fn write_image_set(dir: &Path, data: &LabeledTensorSet) -> std::path::PathBuf {
    let mut manifest = String::from("# path\tlabel\tsubject\n");
    for (i, x) in data.samples().iter().enumerate() {
        let [r, c] = [x.shape()[0], x.shape()[1]];
        let img = Matrix::from_col_major(r, c, x.as_slice().iter().map(|v| (v * 20.0 + 128.0).clamp(0.0, 255.0)).collect()).unwrap();
        let name = format!("img{i:03}.pgm");
        save_image(&img, dir.join(&name), i % 2 == 0).unwrap();
        manifest.push_str(&format!("{name}\tclass{}\ts{}\n", data.labels()[i], data.subjects().unwrap()[i]));
    }
    let path = dir.join("manifest.tsv");
    fs::write(&path, manifest).unwrap();
    path
}

#[test]
fn manifest_images_train_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let synth = synth_gaussian_classes(3, 6, &[6, 5], 3.0, 1.0, 4).unwrap();
    let path = write_image_set(dir.path(), &synth);
    let manifest = DatasetManifest::load(&path).unwrap();
    let data = load_dataset(&manifest, None, 0).unwrap();
    assert_eq!(data.len(), 18);
    assert_eq!(data.sample_shape(), &[6, 5]);
    assert_eq!(data.num_classes(), 3);

    let cfg = TrainingConfig::default();
    for m in Method::ALL {
        let model = train(m, &data, &cfg).unwrap();
        let file = dir.path().join(format!("{m}.json"));
        save_model(&model, &file).unwrap();
        let back = load_model(&file).unwrap();
        assert_eq!(model_to_string(&back).unwrap(), model_to_string(&model).unwrap());
        for x in data.samples() {
            assert_eq!(classify(&model, x).unwrap(), classify(&back, x).unwrap());
        }
    }
}

#[test]
fn sequence_directories_are_trimmed_to_common_length() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::new();
    for (s, frames) in [(0, 5), (1, 7), (2, 6), (3, 8)] {
        let seq = dir.path().join(format!("seq{s}"));
        fs::create_dir(&seq).unwrap();
        for f in 0..frames {
            let img = Matrix::from_fn(4, 3, |r, c| ((r * 3 + c) * 10 + f * (s + 1)) as f64);
            save_image(&img, seq.join(format!("f{f:02}.pgm")), true).unwrap();
        }
        manifest.push_str(&format!("seq{s}\t{}\n", if s < 2 { "walk" } else { "run" }));
    }
    fs::write(dir.path().join("m.tsv"), manifest).unwrap();
    let m = DatasetManifest::load(dir.path().join("m.tsv")).unwrap();
    let data = load_dataset(&m, Some(5), 11).unwrap();
    assert_eq!(data.sample_shape(), &[4, 3, 5]);
    assert_eq!(data.class_names().unwrap(), &["walk".to_string(), "run".to_string()]);
    assert!(data.subjects().is_none());
    // a seed fixes which frames survive
    let again = load_dataset(&m, Some(5), 11).unwrap();
    assert_eq!(data.samples(), again.samples());
}

#[test]
fn leave_one_out_covers_every_subject() {
    let data = synth_gaussian_classes(3, 4, &[5, 4], 4.0, 1.0, 21).unwrap();
    let report = evaluate_loo(&data, Method::Mda, &TrainingConfig::default(), &EvalOptions::default()).unwrap();
    assert_eq!(report.trials.len(), 4);
    let tested: usize = report.trials.iter().map(|t| t.tested).sum();
    assert_eq!(tested, 12);
    assert!(report.accuracy_macro.is_some());
    let text = report.to_toml().unwrap();
    assert_eq!(ExperimentReport::from_toml(&text).unwrap().to_toml().unwrap(), text);
}

#[test]
fn split_protocol_rejects_too_small_classes() {
    let data = synth_gaussian_classes(3, 4, &[5, 4], 4.0, 1.0, 21).unwrap();
    let err = evaluate_split(&data, Method::Gda, &TrainingConfig::default(), 4, 1, &EvalOptions::default()).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Data);
}

#[test]
fn missing_manifest_entry_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.tsv"), "nothere.pgm\ta\nalso.pgm\tb\n").unwrap();
    let m = DatasetManifest::load(dir.path().join("m.tsv")).unwrap();
    let err = load_dataset(&m, None, 0).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Data);
    assert!(err.to_string().contains("nothere.pgm"), "{err}");
}
