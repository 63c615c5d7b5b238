//! Experiment drivers. Cells run in parallel, each on its own seed stream
//! derived from the base seed and the cell coordinates; rows are sorted
//! before they are returned.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    CompressionMapConfig, GdMethod, RateVsRConfig, Scheme, SparsifiedGdConfig, SvmConfig, SvmMethod, WallclockConfig,
};
use super::datasets::load_dataset;
use crate::compressors::{compress, subset_index_bits, CompressorSpec};
use crate::embeddings::{democratic_lp, embed, near_democratic, EmbeddingMode};
use crate::error::{Error, Result};
use crate::frames::{kashin_frame, Frame, FrameKind};
use crate::linalg::{distance, l2_norm};
use crate::optim::{
    compressed_gd, dgd_def, dq_psgd, projected_subgradient, scalar_dqgd_baseline, unquantized_gd, CompressorCodec,
    Domain, GainCoding, GdConfig, HingeSvm, Oracle, PsgdConfig, RunReport, SmoothObjective,
};
use crate::quantizers::{dsc_decode, quantize_embedding};
use crate::rng::{self, derive_seed};
use crate::rng::stream::{CODER, DATA, FRAME};

/// Header: `scheme,rate,bits,realizations,mean_normalized_error,std_normalized_error,median_normalized_error`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionRow {
    pub scheme: String,
    pub rate: f64,
    /// Bits per vector, gain included.
    pub bits: u64,
    pub realizations: usize,
    pub mean_normalized_error: f64,
    pub std_normalized_error: f64,
    pub median_normalized_error: f64,
}

/// Header: `method,rate,seed,iterations,empirical_rate,nu,max_bits,diverged`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub method: String,
    pub rate: f64,
    pub seed: usize,
    pub iterations: usize,
    /// `(‖x̂_T − x*‖/‖x̂_0 − x*‖)^(1/T)`, clipped at 1.
    pub empirical_rate: f64,
    /// Rate of unquantized GD at the configured step.
    pub nu: f64,
    pub max_bits: u64,
    pub diverged: bool,
}

/// Header: `n,big_n,method,repetitions,mean_seconds,min_seconds`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallclockRow {
    pub n: usize,
    pub big_n: usize,
    pub method: String,
    pub repetitions: usize,
    pub mean_seconds: f64,
    pub min_seconds: f64,
}

/// Header: `method,iteration,runs,diverged_runs,objective,gap,distance,classification_error,bits`.
/// Values are means over runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub method: String,
    pub iteration: usize,
    pub runs: usize,
    pub diverged_runs: usize,
    pub objective: f64,
    pub gap: f64,
    pub distance: f64,
    pub classification_error: f64,
    pub bits: u64,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn mean_std_median(values: &mut [f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len() % 2 == 0 { 0.5 * (values[mid - 1] + values[mid]) } else { values[mid] };
    (mean, var.sqrt(), median)
}

fn is_budget_error(e: &Error) -> bool {
    matches!(e, Error::BudgetTooSmall(_))
}

/// Standard-dithering levels that fit `⌊R⌋` bits per coordinate: one sign
/// bit plus a level index, so `s = 2^(⌊R⌋−1) − 1`. `None` below 2 bits.
pub fn sd_levels(rate: f64) -> Option<u32> {
    let c = (rate + 1e-9).floor();
    (c >= 2.0).then(|| (1u64 << (c.min(32.0) as u32 - 1)).saturating_sub(1).min(u32::MAX as u64) as u32)
}

/// Largest `k` with `32k + ⌈log₂ C(n,k)⌉ ≤ ⌊nR⌋`; `None` if even `k = 1` does not fit.
pub fn topk_budget_k(n: usize, rate: f64) -> Option<usize> {
    let budget = (n as f64 * rate + 1e-9).floor() as u64;
    let fits = |k: usize| 32 * k as u64 + subset_index_bits(n, k) <= budget;
    let mut k = 0;
    while k < n && fits(k + 1) {
        k += 1;
    }
    (k > 0).then_some(k)
}

/// Normalized errors `‖Q(y) − y‖₂/‖y‖₂` of every scheme on Gaussian³ vectors.
pub fn run_compression_map(cfg: &CompressionMapConfig, seed: u64) -> Result<Vec<CompressionRow>> {
    let n = cfg.dim;
    let big_n_kashin = (cfg.kashin_aspect * n as f64).round() as usize;
    let cells: Vec<Vec<(Scheme, usize, u64, f64)>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| -> Result<Vec<(Scheme, usize, u64, f64)>> {
            let y = rng::gaussian_cubed(&mut rng::seeded(derive_seed(seed, &[DATA, r as u64])), n);
            let y_norm = l2_norm(&y);
            let mut out = Vec::new();
            for &scheme in &cfg.schemes {
                let frame_seed = derive_seed(seed, &[FRAME, r as u64, scheme as u64]);
                let mut coder_rng = rng::seeded(derive_seed(seed, &[CODER, r as u64, scheme as u64]));
                let framed = match scheme {
                    Scheme::Kashin => {
                        Some((Frame::build(FrameKind::RandomOrthonormal, n, big_n_kashin, frame_seed)?, EmbeddingMode::Democratic))
                    }
                    Scheme::Ndh => Some((
                        Frame::build(FrameKind::RandomizedHadamard, n, n.next_power_of_two(), frame_seed)?,
                        EmbeddingMode::NearDemocratic,
                    )),
                    Scheme::Ndo => {
                        Some((Frame::build(FrameKind::RandomOrthonormal, n, n, frame_seed)?, EmbeddingMode::NearDemocratic))
                    }
                    Scheme::Scalar => Some((Frame::build(FrameKind::Identity, n, n, 0)?, EmbeddingMode::NearDemocratic)),
                    Scheme::Sd | Scheme::Topk => None,
                };
                let emb = match &framed {
                    Some((frame, mode)) => Some(embed(frame, &y, *mode)?),
                    None => None,
                };
                for (ri, &rate) in cfg.rates.iter().enumerate() {
                    let (output, bits) = match (&framed, &emb) {
                        (Some((frame, _)), Some(emb)) => match quantize_embedding(frame, emb, rate) {
                            Ok(p) => (dsc_decode(frame, &p, None)?, p.total_bits()),
                            Err(e) if is_budget_error(&e) => continue,
                            Err(e) => return Err(e),
                        },
                        _ => {
                            let spec = match scheme {
                                Scheme::Sd => match sd_levels(rate) {
                                    Some(levels) => CompressorSpec::StandardDither { levels },
                                    None => continue,
                                },
                                _ => match topk_budget_k(n, rate) {
                                    Some(k) => CompressorSpec::TopK { k, value_bits: None },
                                    None => continue,
                                },
                            };
                            let c = compress(&spec, &y, &mut coder_rng)?;
                            (c.output, c.bits.total())
                        }
                    };
                    out.push((scheme, ri, bits, distance(&output, &y) / y_norm));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut groups: BTreeMap<(Scheme, usize), (u64, Vec<f64>)> = BTreeMap::new();
    for (scheme, ri, bits, err) in cells.into_iter().flatten() {
        let entry = groups.entry((scheme, ri)).or_insert((bits, Vec::new()));
        entry.0 = entry.0.max(bits);
        entry.1.push(err);
    }
    let mut rows: Vec<CompressionRow> = groups
        .into_iter()
        .map(|((scheme, ri), (bits, mut errs))| {
            let (mean, std, median) = mean_std_median(&mut errs);
            CompressionRow {
                scheme: scheme.name().into(),
                rate: cfg.rates[ri],
                bits,
                realizations: errs.len(),
                mean_normalized_error: mean,
                std_normalized_error: std,
                median_normalized_error: median,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.scheme.cmp(&b.scheme).then(a.rate.total_cmp(&b.rate)));
    Ok(rows)
}

/// Horizon with `ν^T ≈ 1e-6`, kept within `[10, 5000]`.
pub fn auto_iterations(nu: f64) -> usize {
    if !(nu > 0.0) {
        return 10;
    }
    if nu >= 1.0 {
        return 5000;
    }
    ((1e-6f64).ln() / nu.ln()).ceil().clamp(10.0, 5000.0) as usize
}

struct RateInstance {
    obj: SmoothObjective,
    ndsc: Option<Frame>,
    hadamard: Option<Frame>,
    dsc: Option<Frame>,
}

/// Empirical DGD-DEF rates versus `R` on heavy-tailed least squares.
pub fn run_rate_vs_r(cfg: &RateVsRConfig, seed: u64) -> Result<Vec<RateRow>> {
    let n = cfg.dim;
    let wants = |m: GdMethod| cfg.methods.contains(&m);
    let instances: Vec<RateInstance> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| -> Result<RateInstance> {
            let s = s as u64;
            let obj = crate::optim::random_least_squares(cfg.samples, n, true, derive_seed(seed, &[DATA, s]))?;
            let build = |kind, big_n, tag| Frame::build(kind, n, big_n, derive_seed(seed, &[FRAME, s, tag]));
            let big_n_dsc = (cfg.dsc_aspect * n as f64).round() as usize;
            Ok(RateInstance {
                ndsc: wants(GdMethod::Ndsc).then(|| build(FrameKind::RandomOrthonormal, n, 1)).transpose()?,
                hadamard: wants(GdMethod::NdscHadamard)
                    .then(|| build(FrameKind::RandomizedHadamard, n.next_power_of_two(), 2))
                    .transpose()?,
                dsc: wants(GdMethod::Dsc).then(|| build(FrameKind::RandomOrthonormal, big_n_dsc, 3)).transpose()?,
                obj,
            })
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for s in 0..cfg.seeds {
        for &m in &cfg.methods {
            if m == GdMethod::Unquantized {
                cells.push((s, m, None));
            } else {
                cells.extend((0..cfg.rates.len()).map(|ri| (s, m, Some(ri))));
            }
        }
    }
    let results: Vec<Vec<RateRow>> = cells
        .into_par_iter()
        .map(|(s, method, ri)| -> Result<Vec<RateRow>> {
            let inst = &instances[s];
            let obj = &inst.obj;
            let step = cfg.step_scale * obj.max_step();
            let nu = crate::optim::nu(step, obj.smoothness(), obj.strong_convexity());
            let iterations = cfg.iterations.unwrap_or_else(|| auto_iterations(nu));
            let mut gd = GdConfig::new(step, iterations);
            gd.seed = derive_seed(seed, &[CODER, s as u64, method as u64, ri.unwrap_or(0) as u64]);
            let row = |rate: f64, report: &RunReport| RateRow {
                method: method.name().into(),
                rate,
                seed: s,
                iterations,
                empirical_rate: report.empirical_rate(),
                nu,
                max_bits: report.max_bits(),
                diverged: report.diverged,
            };
            let Some(ri) = ri else {
                let report = unquantized_gd(obj, &gd)?;
                return Ok(cfg.rates.iter().map(|&r| row(r, &report)).collect());
            };
            let rate = cfg.rates[ri];
            let exact = GainCoding::Exact32;
            let report = match method {
                GdMethod::Unquantized => unreachable!(),
                GdMethod::Scalar => scalar_dqgd_baseline(obj, rate, &gd),
                GdMethod::Dsc => dgd_def(obj, inst.dsc.as_ref().unwrap(), rate, EmbeddingMode::Democratic, exact, &gd),
                GdMethod::Ndsc => {
                    dgd_def(obj, inst.ndsc.as_ref().unwrap(), rate, EmbeddingMode::NearDemocratic, exact, &gd)
                }
                GdMethod::NdscHadamard => {
                    dgd_def(obj, inst.hadamard.as_ref().unwrap(), rate, EmbeddingMode::NearDemocratic, exact, &gd)
                }
            };
            match report {
                Ok(r) => Ok(vec![row(rate, &r)]),
                Err(e) if is_budget_error(&e) => Ok(Vec::new()),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<RateRow> = results.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.rate.total_cmp(&b.rate)).then(a.seed.cmp(&b.seed)));
    Ok(rows)
}

/// Time `democratic_lp` against `near_democratic` with `N = 2^⌈log₂ n⌉`.
/// Frame construction is outside the timed region. Runs sequentially so
/// cells do not compete for cores.
pub fn run_wallclock(cfg: &WallclockConfig, seed: u64) -> Result<Vec<WallclockRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.dims {
        let big_n = n.next_power_of_two();
        let frame = Frame::build(cfg.frame, n, big_n, derive_seed(seed, &[FRAME, n as u64]))?;
        let y = rng::normal_vec(&mut rng::seeded(derive_seed(seed, &[DATA, n as u64])), n);
        let methods: [(&str, fn(&Frame, &[f64]) -> Result<crate::embeddings::Embedding>); 2] =
            [("democratic", democratic_lp), ("near_democratic", near_democratic)];
        for (name, f) in methods {
            for _ in 0..cfg.warmup {
                f(&frame, &y)?;
            }
            let mut times = Vec::with_capacity(cfg.repetitions);
            for _ in 0..cfg.repetitions {
                let start = Instant::now();
                let e = f(&frame, &y)?;
                times.push(start.elapsed().as_secs_f64());
                std::hint::black_box(e);
            }
            rows.push(WallclockRow {
                n,
                big_n,
                method: name.into(),
                repetitions: cfg.repetitions,
                mean_seconds: times.iter().sum::<f64>() / times.len() as f64,
                min_seconds: times.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
    }
    Ok(rows)
}

/// Average per-iteration traces of several runs of one method. Runs that
/// stopped early (divergence) are padded with their last record.
fn average_traces(method: &str, reports: &[RunReport], every: usize) -> Vec<TraceRow> {
    let len = reports.iter().map(|r| r.iterations + 1).max().unwrap_or(0);
    let runs = reports.len();
    let diverged_runs = reports.iter().filter(|r| r.diverged).count();
    let mut rows = Vec::new();
    for t in (0..len).filter(|t| t % every == 0 || *t + 1 == len) {
        let recs: Vec<_> = reports.iter().map(|r| r.records[t.min(r.records.len() - 1)]).collect();
        let mean = |f: &dyn Fn(&crate::optim::IterationRecord) -> f64| recs.iter().map(f).sum::<f64>() / runs as f64;
        rows.push(TraceRow {
            method: method.into(),
            iteration: t,
            runs,
            diverged_runs,
            objective: mean(&|r| r.objective),
            gap: mean(&|r| r.gap),
            distance: mean(&|r| r.distance),
            classification_error: mean(&|r| r.classification_error),
            bits: recs.iter().map(|r| r.bits).max().unwrap_or(0),
        });
    }
    rows
}

fn sort_traces(rows: &mut [TraceRow]) {
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.iteration.cmp(&b.iteration)));
}

/// Ridge regression by gradient descent on randomly sparsified, `value_bits`
/// quantized gradients, with and without a near-democratic embedding.
pub fn run_sparsified_gd(cfg: &SparsifiedGdConfig, seed: u64) -> Result<Vec<TraceRow>> {
    const METHODS: [&str; 3] = ["unquantized", "random_sparsify", "nd+random_sparsify"];
    let cells: Vec<(usize, usize)> = (0..cfg.seeds).flat_map(|s| (0..METHODS.len()).map(move |m| (s, m))).collect();
    let reports: Vec<(usize, RunReport)> = cells
        .into_par_iter()
        .map(|(s, m)| -> Result<(usize, RunReport)> {
            let data = load_dataset(&cfg.data.for_realization(s as u64))?;
            let plain = SmoothObjective::least_squares(data.points.clone(), data.labels.clone())?;
            let obj = SmoothObjective::ridge(data.points, data.labels, cfg.reg_fraction * plain.smoothness())?;
            let n = obj.dim();
            let mut gd = GdConfig::new(cfg.step_scale * obj.max_step(), cfg.iterations);
            gd.seed = derive_seed(seed, &[CODER, s as u64, m as u64]);
            let spec_for = |dim: usize| CompressorSpec::RandomSparsify {
                k: ((cfg.keep_fraction * dim as f64).floor() as usize).max(1),
                rescale: false,
                value_bits: Some(cfg.value_bits),
            };
            let mut report = match m {
                0 => unquantized_gd(&obj, &gd)?,
                1 => {
                    let spec = spec_for(n);
                    let budget = spec.bit_cost(n)?.value_bits + 32;
                    let mut codec = CompressorCodec::new(spec, None, budget, gd.seed);
                    compressed_gd(&obj, &mut codec, &gd)?
                }
                _ => {
                    let big_n = if cfg.frame == FrameKind::RandomizedHadamard { n.next_power_of_two() } else { n };
                    let frame = Frame::build(cfg.frame, n, big_n, derive_seed(seed, &[FRAME, s as u64]))?;
                    let spec = spec_for(big_n);
                    let budget = spec.bit_cost(big_n)?.value_bits + 32;
                    let mut codec = CompressorCodec::new(spec, Some((&frame, EmbeddingMode::NearDemocratic)), budget, gd.seed);
                    compressed_gd(&obj, &mut codec, &gd)?
                }
            };
            report.method = METHODS[m].into();
            Ok((m, report))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (m, name) in METHODS.iter().enumerate() {
        let group: Vec<RunReport> = reports.iter().filter(|(i, _)| *i == m).map(|(_, r)| r.clone()).collect();
        rows.extend(average_traces(name, &group, 1));
    }
    sort_traces(&mut rows);
    Ok(rows)
}

/// Hinge-loss SVM by projected stochastic subgradient descent over a box,
/// comparing gradient transports at a matched bit budget.
///
/// Compressed methods must each spend exactly `⌊nR⌋` value bits plus a
/// 32-bit gain per iteration; a mismatched configuration is rejected.
pub fn run_svm(cfg: &SvmConfig, seed: u64) -> Result<Vec<TraceRow>> {
    let cells: Vec<(usize, usize)> =
        (0..cfg.seeds).flat_map(|s| (0..cfg.methods.len()).map(move |m| (s, m))).collect();
    let reports: Vec<(usize, RunReport)> = cells
        .into_par_iter()
        .map(|(s, m)| -> Result<(usize, RunReport)> {
            let data = load_dataset(&cfg.data.for_realization(s as u64))?;
            let obj = HingeSvm::new(data.points, data.labels)?;
            let n = obj.dim();
            let (lo, hi) = (vec![-cfg.half_width; n], vec![cfg.half_width; n]);
            let (f_star, _) = obj.optimal_value_box(&lo, &hi)?;
            let domain = Domain::Box { lo, hi };
            let mut pcfg = PsgdConfig::new(cfg.iterations);
            pcfg.oracle = Oracle::Stochastic { batch: cfg.batch };
            pcfg.f_star = Some(f_star);
            pcfg.seed = derive_seed(seed, &[CODER, s as u64]);
            let frame_seed = derive_seed(seed, &[FRAME, s as u64, m as u64]);
            let plain_step = crate::optim::default_psgd_step(domain.diameter(), obj.subgradient_bound(), cfg.iterations);
            let method = cfg.methods[m];
            let mut report = match method {
                SvmMethod::Unquantized => projected_subgradient(&obj, &domain, None, plain_step, &pcfg)?,
                SvmMethod::DqPsgd { rate, aspect, gain_bits } => {
                    let big_n = (aspect * n as f64).round() as usize;
                    let (frame, params) = kashin_frame(FrameKind::RandomOrthonormal, n, big_n, frame_seed)?;
                    dq_psgd(&obj, &frame, rate, &domain, &params, gain_bits, None, &pcfg)?
                }
                SvmMethod::Compressed { compressor, embed } => {
                    let budget = (n as f64 * cfg.rate + 1e-9).floor() as u64 + 32;
                    let frame = match embed {
                        Some(kind) => {
                            let big_n = if kind == FrameKind::RandomizedHadamard { n.next_power_of_two() } else { n };
                            Some(Frame::build(kind, n, big_n, frame_seed)?)
                        }
                        None => None,
                    };
                    let dim = frame.as_ref().map_or(n, |f| f.big_n());
                    let cost = compressor.bit_cost(dim)?;
                    if cost.value_bits + cost.gain_bits != budget {
                        return Err(Error::Config(format!(
                            "{} spends {} bits per iteration, the shared budget is {budget}",
                            method.name(),
                            cost.value_bits + cost.gain_bits
                        )));
                    }
                    let mut codec = CompressorCodec::new(
                        compressor,
                        frame.as_ref().map(|f| (f, EmbeddingMode::NearDemocratic)),
                        budget,
                        derive_seed(seed, &[CODER, s as u64, m as u64]),
                    );
                    let report = projected_subgradient(&obj, &domain, Some(&mut codec), plain_step, &pcfg)?;
                    if report.ledger.iter().any(|l| l.bits != budget) {
                        return Err(Error::Config(format!("{} did not spend the shared budget", method.name())));
                    }
                    report
                }
            };
            report.method = method.name();
            Ok((m, report))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (m, method) in cfg.methods.iter().enumerate() {
        let group: Vec<RunReport> = reports.iter().filter(|(i, _)| *i == m).map(|(_, r)| r.clone()).collect();
        rows.extend(average_traces(&method.name(), &group, cfg.record_every));
    }
    sort_traces(&mut rows);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_helpers() {
        assert_eq!(sd_levels(1.0), None);
        assert_eq!(sd_levels(2.0), Some(1));
        assert_eq!(sd_levels(4.5), Some(7));
        // 32k + ⌈log₂ C(256,k)⌉ ≤ 256: k = 6 costs 192 + 39 = 231 bits.
        assert_eq!(topk_budget_k(256, 1.0), Some(6));
        assert!(subset_index_bits(256, 7) + 224 > 256);
        assert_eq!(topk_budget_k(8, 1.0), None);
    }

    #[test]
    fn auto_horizon() {
        assert_eq!(auto_iterations(0.0), 10);
        assert_eq!(auto_iterations(0.5), 20);
        assert_eq!(auto_iterations(1.0), 5000);
    }

    #[test]
    fn summary_statistics() {
        let (m, s, med) = mean_std_median(&mut [3.0, 1.0, 2.0]);
        assert_eq!((m, s, med), (2.0, 1.0, 2.0));
        let (_, _, med) = mean_std_median(&mut [4.0, 1.0, 2.0, 3.0]);
        assert_eq!(med, 2.5);
    }

    #[test]
    fn csv_headers_are_stable() {
        let row = WallclockRow {
            n: 4,
            big_n: 4,
            method: "near_democratic".into(),
            repetitions: 1,
            mean_seconds: 0.5,
            min_seconds: 0.25,
        };
        let text = to_csv(&[row]).unwrap();
        assert_eq!(text, "n,big_n,method,repetitions,mean_seconds,min_seconds\n4,4,near_democratic,1,0.5,0.25\n");
    }

    #[test]
    fn small_compression_map_is_reproducible() {
        let cfg = CompressionMapConfig {
            dim: 16,
            realizations: 4,
            rates: vec![1.0, 4.0],
            schemes: vec![Scheme::Sd, Scheme::Topk, Scheme::Kashin, Scheme::Ndh, Scheme::Ndo, Scheme::Scalar],
            kashin_aspect: 2.0,
        };
        let a = run_compression_map(&cfg, 5).unwrap();
        let b = run_compression_map(&cfg, 5).unwrap();
        assert_eq!(to_csv(&a).unwrap(), to_csv(&b).unwrap());
        // sd needs 2 bits, kashin at λ = 2 needs R ≥ 2, topk needs R·16 ≥ 32 + 4.
        let present: Vec<(String, f64)> = a.iter().map(|r| (r.scheme.clone(), r.rate)).collect();
        assert!(!present.contains(&("sd".into(), 1.0)));
        assert!(!present.contains(&("kashin".into(), 1.0)));
        assert!(present.contains(&("kashin".into(), 4.0)));
        assert!(present.contains(&("ndh".into(), 1.0)));
        for r in &a {
            assert_eq!(r.realizations, 4);
            assert!(r.mean_normalized_error.is_finite());
        }
    }
}
