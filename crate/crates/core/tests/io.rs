use cars_infer::config::PipelineConfig;
use cars_infer::io::{
    read_bands, read_config, read_json, read_posterior, read_spectrum, read_versioned_json,
    write_bands, write_json, write_posterior, write_spectrum, write_versioned_json,
};
use cars_infer::narrowing::narrow;
use cars_infer::priors::{LinePrior, LogNormalPrior, NormalPrior, PositiveNormalPrior, PriorSpec, UniformPrior};
use cars_infer::smc::Band;
use cars_infer::{Error, ModelParams, VoigtLine, WavenumberGrid};
use proptest::prelude::*;
use tempfile::tempdir;

fn awkward(i: usize) -> f64 {
    // values whose shortest decimal forms need all 17 digits
    (0.1 + i as f64 * 0.7).sqrt() * std::f64::consts::PI / 3.0 + 1e-13 * i as f64
}

#[test]
fn spectrum_round_trip_is_lossless() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let grid = WavenumberGrid::new(500.25, 0.37, 300).unwrap();
    let values: Vec<f64> = (0..300).map(awkward).collect();
    write_spectrum(&path, &grid, &values).unwrap();
    let (g, v) = read_spectrum(&path).unwrap();
    assert_eq!(v, values);
    assert!(g.same_as(&grid));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("wavenumber_cm-1,intensity\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn posterior_round_trip_is_lossless() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("posterior.csv");
    let draws: Vec<ModelParams> = (0..20)
        .map(|i| {
            ModelParams::new(
                vec![
                    VoigtLine::new(awkward(i), 700.0 + awkward(i + 1), awkward(i + 2), awkward(i + 3)).unwrap(),
                    VoigtLine::new(awkward(i + 4), 900.0 + awkward(i + 5), awkward(i + 6), awkward(i + 7)).unwrap(),
                ],
                2.0 + awkward(i + 8),
            )
            .unwrap()
        })
        .collect();
    write_posterior(&path, &draws).unwrap();
    assert_eq!(read_posterior(&path).unwrap(), draws);
    let header = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "p,a_1,nu_1,sigma_1,gamma_1,a_2,nu_2,sigma_2,gamma_2");
}

#[test]
fn bands_round_trip_is_lossless() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bands.csv");
    let grid = WavenumberGrid::new(100.0, 2.0, 50).unwrap();
    let bands: Vec<Band> = ["y", "f", "line_01"]
        .iter()
        .enumerate()
        .map(|(s, name)| Band {
            series: name.to_string(),
            lower: (0..50).map(|k| awkward(k + s)).collect(),
            median: (0..50).map(|k| awkward(k + s) + 1.0).collect(),
            upper: (0..50).map(|k| awkward(k + s) + 2.0).collect(),
        })
        .collect();
    write_bands(&path, &grid, &bands).unwrap();
    let (axis, back) = read_bands(&path).unwrap();
    assert_eq!(back, bands);
    assert_eq!(axis, grid.values());
}

#[test]
fn json_artifacts_round_trip() {
    let dir = tempdir().unwrap();
    let spec = PriorSpec {
        lines: vec![LinePrior {
            location: NormalPrior { mean: awkward(3), variance: awkward(4) },
            amplitude: PositiveNormalPrior { mean: awkward(5), sd: awkward(5) / 4.0 },
        }],
        gamma: LogNormalPrior { log_mean: awkward(6), log_variance: awkward(7) },
        sigma: LogNormalPrior { log_mean: awkward(8), log_variance: awkward(7) },
        background: UniformPrior { min: 1.0, max: 7.5 },
    };
    let path = dir.path().join("priors.json");
    write_versioned_json(&path, &spec).unwrap();
    let raw: serde_json::Value = read_json(&path).unwrap();
    assert_eq!(raw["schema_version"], 1);
    assert_eq!(read_versioned_json::<PriorSpec>(&path).unwrap(), spec);

    let grid = WavenumberGrid::new(0.0, 1.0, 256).unwrap();
    let signal: Vec<f64> = (0..256)
        .map(|k| 4.0 / (std::f64::consts::PI * (((k as f64) - 128.0).powi(2) + 16.0)))
        .collect();
    let mut cfg = cars_infer::narrowing::NarrowingConfig::default();
    cfg.max_fir = 20;
    cfg.min_intersection = 5;
    let narrowed = narrow(&signal, &grid, &cfg).unwrap();
    let path = dir.path().join("narrowed.json");
    write_json(&path, &narrowed).unwrap();
    assert_eq!(read_json::<cars_infer::narrowing::NarrowedSpectrum>(&path).unwrap(), narrowed);
}

#[test]
fn empty_config_file_gives_defaults() {
    let dir = tempdir().unwrap();
    for text in ["", "{}", "  \n"] {
        let path = dir.path().join("c.json");
        std::fs::write(&path, text).unwrap();
        assert_eq!(read_config(&path).unwrap(), PipelineConfig::default());
    }
}

#[test]
fn config_round_trip_and_relative_basis() {
    let dir = tempdir().unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.seed = 77;
    cfg.smc.particles = 123;
    cfg.smc.resample_threshold = 60;
    cfg.model.error_basis = Some("reference.csv".into());
    let path = dir.path().join("config.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    let back = read_config(&path).unwrap();
    assert_eq!(back.model.error_basis.as_deref(), Some(dir.path().join("reference.csv").as_path()));
    let mut expected = cfg.clone();
    expected.model.error_basis = back.model.error_basis.clone();
    assert_eq!(back, expected);
}

#[test]
fn malformed_inputs_are_format_errors() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "wavenumber_cm-1,intensity\n1,2\n2,x\n").unwrap();
    assert!(matches!(read_spectrum(&path), Err(Error::Format { .. })));
    std::fs::write(&path, "wavenumber_cm-1,intensity\n1,2\n2,3\n4,5\n").unwrap();
    assert!(matches!(read_spectrum(&path), Err(Error::Format { .. })));

    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"smc": {"particles": 10, "bogus": 1}}"#).unwrap();
    let err = read_config(&cfg).unwrap_err();
    assert!(matches!(err, Error::Format { .. }));
    assert!(err.to_string().contains("c.json"));

    let missing = dir.path().join("nope.csv");
    let err = read_spectrum(&missing).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("nope.csv"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn any_finite_spectrum_round_trips(values in prop::collection::vec(-1e300f64..1e300, 8..64), start in -1e4f64..1e4, step in 1e-3f64..10.0) {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let grid = WavenumberGrid::new(start, step, values.len()).unwrap();
        write_spectrum(&path, &grid, &values).unwrap();
        let (_, back) = read_spectrum(&path).unwrap();
        prop_assert_eq!(back, values);
    }
}
