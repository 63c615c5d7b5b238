//! Every command is compared against the library call it wraps.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use democode::compressors::{democratic_wrap, CompressorSpec};
use democode::embeddings::{embed, EmbeddingMode};
use democode::frames::{Frame, FrameKind};
use democode::harness::{format_vector, parse_vector, run_config, to_csv, ExperimentConfig};
use democode::optim::bounds::{prop2_bound, prop4_bound};
use democode::optim::{dgd_def, random_least_squares, GainCoding, GdConfig};
use democode::quantizers::bounds::{covering_efficiency, prop1_bound, ErrorConstant};
use democode::quantizers::payload::QuantizedPayload;
use democode::quantizers::{dsc_decode, dsc_encode};
use democode::rng::stream::{CODER, DATA, FRAME};
use democode::rng::{self, derive_seed};

fn democode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_democode")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_vector(dir: &Path, name: &str, v: &[f64]) -> String {
    let path = dir.join(name);
    fs::write(&path, format_vector(v)).unwrap();
    path.to_str().unwrap().to_string()
}

fn sample(len: usize, seed: u64) -> Vec<f64> {
    rng::normal_vec(&mut rng::seeded(seed), len)
}

#[test]
fn thm1_prints_the_larger_term() {
    assert_eq!(stdout(&democode(&["bounds", "--which", "thm1", "--sigma", "0.5", "--rate", "1"])), "0.5\n");
    assert_eq!(stdout(&democode(&["bounds", "--which", "thm1", "--sigma", "0.1", "--rate", "2"])), "0.25\n");
}

#[test]
fn bound_formulas_match_library() {
    let prop1 = stdout(&democode(&["bounds", "--which", "prop1", "--rate", "4", "--lambda", "1", "--k-upper", "2"]));
    assert_eq!(prop1.trim().parse::<f64>().unwrap(), prop1_bound(4.0, 1.0, ErrorConstant::Democratic { k_upper: 2.0 }));

    let lemma4 = stdout(&democode(&["bounds", "--which", "lemma4", "--rate", "1", "--lambda", "1", "--N", "8"]));
    let expected = covering_efficiency(1.0, 1.0, ErrorConstant::NearDemocraticHadamard { big_n: 8 }).rho;
    assert_eq!(lemma4.trim().parse::<f64>().unwrap(), expected);
    assert!((expected - 4.0 * 16f64.ln().sqrt()).abs() < 1e-12);

    let orth = stdout(&democode(&[
        "bounds", "--which", "prop1", "--rate", "3", "--lambda", "2", "--N", "64", "--frame", "orthonormal",
    ]));
    let expected = prop1_bound(3.0, 2.0, ErrorConstant::NearDemocraticOrthonormal { big_n: 64 });
    assert_eq!(orth.trim().parse::<f64>().unwrap(), expected);

    let prop2 = stdout(&democode(&[
        "bounds", "--which", "prop2", "--nu", "0.5", "--beta", "0.25", "--alpha", "0.1", "--l", "2", "--t", "10",
        "--d", "3",
    ]));
    assert_eq!(prop2.trim().parse::<f64>().unwrap(), prop2_bound(0.5, 0.25, 0.1, 2.0, 10, 3.0));

    let prop4 = stdout(&democode(&["bounds", "--which", "prop4", "--k-upper", "3", "--d", "2", "--b", "1", "--t", "400"]));
    assert_eq!(prop4.trim().parse::<f64>().unwrap(), prop4_bound(3.0, 2.0, 1.0, 400));
}

#[test]
fn usage_errors_exit_one_and_name_the_flag() {
    let out = democode(&["bounds", "--which", "thm1", "--rate", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--sigma"));

    let out = democode(&["bounds", "--which", "thm1", "--sigma", "0.5", "--rate", "1", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bogus"));

    // Stochastic commands refuse to run without a seed.
    let out = democode(&["compress", "--spec", r#"{"type":"topk","k":1}"#, "--in", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let y = write_vector(dir.path(), "y.txt", &sample(16, 1));
    let out_path = dir.path().join("p.dsc");
    let out = democode(&[
        "quantize", "--N", "32", "--seed", "1", "--rate", "0.5", "--in", &y, "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bit budget"));

    let missing = dir.path().join("missing.txt");
    let out = democode(&["embed", "--N", "16", "--seed", "1", "--in", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn embed_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let y = sample(16, 2);
    let input = write_vector(dir.path(), "y.txt", &y);
    let frame = Frame::build(FrameKind::RandomOrthonormal, 16, 32, 9).unwrap();
    for (flag, mode) in [("dem", EmbeddingMode::Democratic), ("near", EmbeddingMode::NearDemocratic)] {
        let out = democode(&["embed", "--frame", "orthonormal", "--N", "32", "--seed", "9", "--mode", flag, "--in", &input]);
        let expected = embed(&frame, &y, mode).unwrap();
        assert_eq!(stdout(&out), format_vector(&expected.coefficients));
        assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("gain {:?}", expected.gain)));
    }
}

#[test]
fn embedding_zero_gives_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_vector(dir.path(), "z.txt", &[0.0; 8]);
    for mode in ["dem", "near", "dem-iter"] {
        let out = democode(&["embed", "--frame", "orthonormal", "--N", "16", "--seed", "1", "--mode", mode, "--in", &input]);
        let coeffs = parse_vector(&stdout(&out)).unwrap();
        assert_eq!(coeffs, vec![0.0; 16]);
        assert!(String::from_utf8_lossy(&out.stderr).contains("gain 0.0"));
    }
}

#[test]
fn quantize_dequantize_roundtrip_matches_in_process_decode() {
    let dir = tempfile::tempdir().unwrap();
    let y = sample(16, 3);
    let input = write_vector(dir.path(), "y.txt", &y);
    let payload_path = dir.path().join("y.dsc");
    let decoded_path = dir.path().join("decoded.txt");
    let out = democode(&[
        "quantize", "--frame", "orthonormal", "--N", "32", "--seed", "5", "--rate", "4", "--mode", "dsc", "--in",
        &input, "--out", payload_path.to_str().unwrap(), "--decoded", decoded_path.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&out), "bits 96\n");

    let frame = Frame::build(FrameKind::RandomOrthonormal, 16, 32, 5).unwrap();
    let payload = dsc_encode(&frame, &y, 4.0, EmbeddingMode::Democratic).unwrap();
    let bytes = fs::read(&payload_path).unwrap();
    assert_eq!(bytes, payload.to_bytes().unwrap());
    let expected = format_vector(&dsc_decode(&frame, &QuantizedPayload::from_bytes(&bytes).unwrap(), None).unwrap());
    assert_eq!(fs::read_to_string(&decoded_path).unwrap(), expected);

    let out = democode(&["dequantize", "--in", payload_path.to_str().unwrap()]);
    assert_eq!(stdout(&out), expected);
}

#[test]
fn gain_shape_roundtrip_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let y: Vec<f64> = sample(64, 4).iter().map(|v| v / 20.0).collect();
    let input = write_vector(dir.path(), "y.txt", &y);
    let payload_path = dir.path().join("y.dsc");
    let decoded_path = dir.path().join("decoded.txt");
    stdout(&democode(&[
        "quantize", "--frame", "orthonormal", "--N", "128", "--seed", "6", "--rate", "2", "--mode", "gain-shape",
        "--gain-bits", "8", "--gain-max", "2", "--in", &input, "--out", payload_path.to_str().unwrap(), "--decoded",
        decoded_path.to_str().unwrap(),
    ]));
    let out = democode(&["dequantize", "--in", payload_path.to_str().unwrap(), "--gain-max", "2"]);
    assert_eq!(stdout(&out), fs::read_to_string(&decoded_path).unwrap());

    let out = democode(&["dequantize", "--in", payload_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compress_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let y = sample(16, 7);
    let input = write_vector(dir.path(), "y.txt", &y);
    let spec_json = r#"{"type":"topk","k":3,"value_bits":5}"#;
    let out = democode(&[
        "compress", "--spec", spec_json, "--embed", "orthonormal", "--N", "32", "--seed", "11", "--in", &input,
    ]);
    let spec: CompressorSpec = serde_json::from_str(spec_json).unwrap();
    let frame = Frame::build(FrameKind::RandomOrthonormal, 16, 32, derive_seed(11, &[FRAME])).unwrap();
    let mut r = rng::seeded(derive_seed(11, &[CODER]));
    let expected = democratic_wrap(&frame, &spec, &y, EmbeddingMode::NearDemocratic, &mut r).unwrap();
    assert_eq!(stdout(&out), format_vector(&expected.output));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("bits {}", expected.bits.total())));
}

#[test]
fn optimize_matches_library() {
    let out = democode(&[
        "optimize", "--algo", "dgd-def", "--samples", "32", "--dim", "16", "--rate", "4", "--iterations", "20",
        "--seed", "3",
    ]);
    let obj = random_least_squares(32, 16, false, derive_seed(3, &[DATA])).unwrap();
    let frame = Frame::build(FrameKind::RandomOrthonormal, 16, 32, derive_seed(3, &[FRAME])).unwrap();
    let mut cfg = GdConfig::new(obj.max_step(), 20);
    cfg.seed = derive_seed(3, &[CODER]);
    let report = dgd_def(&obj, &frame, 4.0, EmbeddingMode::NearDemocratic, GainCoding::Exact32, &cfg).unwrap();
    assert_eq!(stdout(&out), to_csv(&report.records).unwrap());
}

#[test]
fn bench_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("map.toml");
    fs::write(
        &config,
        "seed = 4\n[experiment]\nkind = \"compression_map\"\ndim = 16\nrealizations = 2\nrates = [2, 4]\n\
         schemes = [\"sd\", \"ndh\"]\n",
    )
    .unwrap();
    let out_path = dir.path().join("map.csv");
    stdout(&democode(&["bench", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap()]));
    let expected = run_config(&ExperimentConfig::load(&config).unwrap()).unwrap();
    assert_eq!(fs::read_to_string(&out_path).unwrap(), expected);
}
