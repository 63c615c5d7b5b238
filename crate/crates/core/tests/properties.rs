//! Cross-module invariants exercised through the public API.

use democode::compressors::{compress, CompressorSpec};
use democode::embeddings::{democratic_lp, embed, near_democratic, EmbeddingMode};
use democode::frames::{Frame, FrameDescriptor, FrameKind};
use democode::harness::{format_vector, parse_vector, BitChannel};
use democode::linalg::{distance, inf_norm, l2_norm};
use democode::optim::{
    dgd_def, error_feedback_deviation, random_least_squares, Domain, GainCoding, GdConfig,
};
use democode::quantizers::{
    dsc_decode, dsc_encode, CodingMode, GainEncoding, GainField, PayloadHeader, QuantizedPayload,
};
use democode::rng;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = FrameKind> {
    prop_oneof![
        Just(FrameKind::RandomOrthonormal),
        Just(FrameKind::RandomizedHadamard),
        Just(FrameKind::Identity),
    ]
}

/// `(kind, n, N)` with `n ≤ N`; Hadamard and identity need `N` a power of
/// two and `N = n` respectively.
fn shape() -> impl Strategy<Value = (FrameKind, usize, usize)> {
    (kind(), 1usize..5, 1usize..3).prop_map(|(k, e, m)| match k {
        FrameKind::Identity => (k, 1 << e, 1 << e),
        FrameKind::RandomizedHadamard => (k, (1 << e) - (e > 1) as usize, 1 << (e + m - 1)),
        _ => (k, 1 << e, (1 << e) * m),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frames_are_parseval((k, n, big_n) in shape(), seed in any::<u64>()) {
        let f = Frame::build(k, n, big_n, seed).unwrap();
        prop_assert!(f.parseval_defect() < 1e-10);
        let y = rng::normal_vec(&mut rng::seeded(seed ^ 1), n);
        let back = f.apply(&f.apply_adjoint(&y).unwrap()).unwrap();
        prop_assert!(distance(&back, &y) <= 1e-10 * (1.0 + l2_norm(&y)));
    }

    #[test]
    fn descriptor_rebuilds_the_same_frame((k, n, big_n) in shape(), seed in any::<u64>()) {
        let f = Frame::build(k, n, big_n, seed).unwrap();
        let d: FrameDescriptor = f.descriptor();
        prop_assert_eq!(d.build().unwrap().to_dense(), f.to_dense());
    }

    #[test]
    fn embeddings_reconstruct_and_lp_is_no_worse((k, n, big_n) in shape(), seed in any::<u64>()) {
        let f = Frame::build(k, n, big_n, seed).unwrap();
        let y = rng::normal_vec(&mut rng::seeded(seed ^ 2), n);
        let near = near_democratic(&f, &y).unwrap();
        let dem = democratic_lp(&f, &y).unwrap();
        let scale = 1.0 + l2_norm(&y);
        prop_assert!(near.residual <= 1e-9 * scale);
        prop_assert!(dem.residual <= 1e-7 * scale);
        prop_assert!(dem.gain <= near.gain + 1e-9);
        // ‖y‖₂ = ‖Sx‖₂ ≤ ‖x‖₂ ≤ √N‖x‖∞ for a Parseval frame.
        prop_assert!(l2_norm(&y) / (big_n as f64).sqrt() <= dem.gain * (1.0 + 1e-7));
    }

    #[test]
    fn dsc_error_is_within_one_cell(
        (k, n, big_n) in shape(),
        seed in any::<u64>(),
        rate in 1.0f64..8.0,
        democratic in any::<bool>(),
    ) {
        let f = Frame::build(k, n, big_n, seed).unwrap();
        let mode = if democratic { EmbeddingMode::Democratic } else { EmbeddingMode::NearDemocratic };
        let y = rng::normal_vec(&mut rng::seeded(seed ^ 3), n);
        let Ok(p) = dsc_encode(&f, &y, rate, mode) else { return Ok(()) };
        prop_assert!(p.body_bits() <= (n as f64 * rate + 1e-9).floor() as u64);
        let decoded = dsc_decode(&f, &QuantizedPayload::from_bytes(&p.to_bytes().unwrap()).unwrap(), None).unwrap();
        let gain = embed(&f, &y, mode).unwrap().gain;
        // Each coordinate is off by at most gain·2^(−b), plus f32 gain rounding.
        let cell = gain * (-(p.header.bits_per_coord as f64)).exp2();
        let slack = 1e-6 * gain * (big_n as f64).sqrt() + 1e-9;
        prop_assert!(distance(&decoded, &y) <= cell * (big_n as f64).sqrt() + slack);
    }

    #[test]
    fn payload_bytes_roundtrip(
        (k, n, big_n) in shape(),
        seed in any::<u64>(),
        bits in 1u8..=32,
        dithered in proptest::option::of(1u8..=32),
        gain in -1e30f32..1e30,
    ) {
        let mut r = rng::seeded(seed);
        let limit = 1u64 << bits;
        let indices = (0..big_n).map(|_| (rand::RngCore::next_u64(&mut r) % limit) as u32).collect();
        let (gain_encoding, gain) = match dithered {
            Some(b) => (GainEncoding::Dithered { bits: b }, GainField::Dithered(rand::RngCore::next_u64(&mut r) % (1u64 << b))),
            None => (GainEncoding::Exact32, GainField::Exact(gain.abs())),
        };
        let p = QuantizedPayload {
            header: PayloadHeader {
                frame: FrameDescriptor { kind: k, n, big_n, seed },
                mode: CodingMode::Ndsc,
                bits_per_coord: bits,
                gain_encoding,
            },
            gain,
            indices,
        };
        let bytes = p.to_bytes().unwrap();
        let back = QuantizedPayload::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn projection_is_idempotent_and_non_expansive(
        dim in 1usize..12,
        seed in any::<u64>(),
        radius in 0.1f64..5.0,
        ball in any::<bool>(),
    ) {
        let d = if ball { Domain::ball(dim, radius) } else { Domain::cube(dim, radius) };
        let mut r = rng::seeded(seed);
        let a: Vec<f64> = rng::normal_vec(&mut r, dim).iter().map(|v| 4.0 * v).collect();
        let b: Vec<f64> = rng::normal_vec(&mut r, dim).iter().map(|v| 4.0 * v).collect();
        let pa = d.project(&a).unwrap();
        prop_assert!(distance(&d.project(&pa).unwrap(), &pa) <= 1e-12);
        prop_assert!(distance(&pa, &d.project(&b).unwrap()) <= distance(&a, &b) + 1e-12);
    }

    #[test]
    fn sign_preserving_compressors_stay_within_peak(
        dim in 2usize..40,
        seed in any::<u64>(),
        bits in proptest::option::of(1u8..8),
        top in any::<bool>(),
    ) {
        let k = 1 + (seed as usize) % dim;
        let spec = if top {
            CompressorSpec::TopK { k, value_bits: bits }
        } else {
            CompressorSpec::RandomSparsify { k, rescale: false, value_bits: bits }
        };
        let mut r = rng::seeded(seed);
        let x = rng::normal_vec(&mut r, dim);
        let c = compress(&spec, &x, &mut r).unwrap();
        prop_assert_eq!(c.bits, spec.bit_cost(dim).unwrap());
        let peak = inf_norm(&x);
        for (o, v) in c.output.iter().zip(&x) {
            let s = o * v.signum();
            prop_assert!(s >= 0.0 && s <= peak * (1.0 + 1e-12));
        }
        prop_assert!(c.output.iter().filter(|v| **v != 0.0).count() <= k);
    }

    #[test]
    fn vector_text_roundtrip(v in proptest::collection::vec(-1e12f64..1e12, 1..50)) {
        prop_assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v.clone());
        let row = v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_vector(&row).unwrap(), v);
    }
}

#[test]
fn error_feedback_recursion_holds() {
    for seed in 0..5 {
        let obj = random_least_squares(32, 16, false, seed).unwrap();
        let f = Frame::build(FrameKind::RandomOrthonormal, 16, 16, seed).unwrap();
        let cfg = GdConfig::new(obj.max_step(), 40);
        let report = dgd_def(&obj, &f, 4.0, EmbeddingMode::NearDemocratic, GainCoding::Exact32, &cfg).unwrap();
        assert!(error_feedback_deviation(&obj, &report) <= 1e-8);
        assert!(report.ledger.iter().all(|e| e.bits <= 16 * 4 + 32));
        assert!(report.final_distance() < report.initial_distance());
    }
}

#[test]
fn channel_enforces_the_budget() {
    let f = Frame::build(FrameKind::RandomizedHadamard, 8, 8, 1).unwrap();
    let p = dsc_encode(&f, &[1.0; 8], 2.0, EmbeddingMode::NearDemocratic).unwrap();
    assert_eq!(p.total_bits(), 16 + 32);
    let mut ok = BitChannel::new(48);
    let bytes = ok.send(0, &p).unwrap();
    assert_eq!(QuantizedPayload::from_bytes(&bytes).unwrap(), p);
    assert_eq!(ok.total_bits(), 48);
    let mut tight = BitChannel::new(47);
    assert!(tight.send(0, &p).is_err());
    assert!(tight.charge(1, 48).is_err());
}
