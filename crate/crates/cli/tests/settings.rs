use laeo::trainer::{study_setup, PredictorKind};
use laeo_cli::settings::{resolve, SynthSettings, TrainSettings};

fn toml_file(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

#[test]
fn presets_roundtrip_into_the_same_training_config() {
    let (config, data) = study_setup();
    let settings = TrainSettings::from_parts(&config, &data, 4);
    let rebuilt = settings.train_config(config.seed).unwrap();
    assert_eq!(rebuilt, config);
    assert_eq!(settings.data(), data);
}

#[test]
fn file_keys_override_the_preset() {
    let (config, data) = study_setup();
    let f = toml_file("predictor = \"direct\"\nalpha = 0.5\nn_heldout = 0\n");
    let s = resolve(TrainSettings::from_parts(&config, &data, 4), Some(f.path())).unwrap();
    let c = s.train_config(1).unwrap();
    assert_eq!(c.predictor, PredictorKind::Direct);
    assert_eq!(c.weights.alpha, 0.5);
    assert_eq!(s.n_train, data.n_train);
}

#[test]
fn bad_values_are_rejected() {
    let f = toml_file("n = \"many\"\n");
    assert!(resolve(SynthSettings::default(), Some(f.path())).is_err());
    let (config, data) = study_setup();
    let mut s = TrainSettings::from_parts(&config, &data, 1);
    s.pseudo_mode = "average".into();
    assert!(s.train_config(0).is_err());
    s.pseudo_mode = "naive".into();
    s.schedule = "joint".into();
    assert!(s.train_config(0).is_err());
}
