//! The five experiments. Each returns in-memory tables and metadata so the
//! same code backs the binary, the integration tests and the bindings.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::adversary::{self, ChannelStats, DetectionTest, EnsembleInput, RocPoint};
use crate::bounds::{self, CapacityBounds, InfoDensityMoments, Reference, SlotKlBound, SoftCoveringBound};
use crate::codec::{
    self, generate_codebook, generate_constant_weight, Codebook, CodebookKind, DecoderConfig, ErrorEstimate,
    LinkScenario, RateModel, SimMethod,
};
use crate::error::{Error, Result};
use crate::info::{chi_squared, DmcPair, FiniteDistribution};
use crate::oracle::{self, ExactInstance, MAX_FRAME, MAX_SEQUENCES};
use crate::rng::{self, Role};

use super::config::{Channel, ExperimentConfig};
use super::output::{num, Table};
use super::svg::{Chart, Series, Style};

/// Empirical error probability below which a point counts as reliable.
pub const RELIABILITY_TARGET: f64 = 0.05;

/// Columns excluded from determinism comparisons.
pub const TIMING_COLUMNS: &[&str] = &["runtime_s"];

/// Input distribution parameter of the random-coding ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    /// Bernoulli bias `alpha_n` of a DMC code.
    Alpha(f64),
    /// Symbol power `rho_n` of a BPSK code.
    Rho(f64),
}

/// Everything the bounds module fixes for one block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub n: u64,
    pub slots: u64,
    pub input: Input,
    pub gamma: f64,
    pub log_m: f64,
    pub kl_bound: SlotKlBound,
    pub soft_covering: SoftCoveringBound,
    /// `min(1, sqrt(KL / 2) + soft covering)` from the exact-form bound.
    pub tv_certificate: f64,
    /// `ln(M L e^{-gamma})` plus the change-of-measure penalty.
    pub union_remainder_ln: f64,
}

fn bob_moments(pair: &DmcPair, alpha: f64) -> Result<InfoDensityMoments> {
    bounds::info_density_moments_dmc(&pair.p0, &pair.p1, alpha, Reference::Mixture)
}

/// Parameters of the achievability scheme at block length `n`.
pub fn operating_point(channel: &Channel, cfg: &ExperimentConfig, n: u64) -> Result<OperatingPoint> {
    let params = cfg.params()?;
    let slots = cfg.slots(n);
    let (input, model, kl_bound, penalty) = match channel {
        Channel::Dmc(pair) => {
            let chi2 = pair.willie_chi2();
            let alpha = bounds::choose_alpha_n(n, slots, cfg.delta, chi2)?;
            let model = RateModel::Dmc(bob_moments(pair, alpha)?);
            (Input::Alpha(alpha), model, bounds::dmc_slot_kl_bound(n, slots, alpha, chi2)?, 0.0)
        }
        Channel::Awgn(pair) => {
            let rho = bounds::choose_rho_n(n, slots, cfg.delta, pair.sigma_w2)?;
            let model = RateModel::Awgn {
                rho,
                sigma_b2: pair.sigma_b2,
            };
            let kl = bounds::awgn_slot_kl_bound(n, slots, rho, pair.sigma_w2)?;
            // wrong codewords scored in the active slot see BPSK outputs, not noise
            let penalty = bounds::awgn_change_of_measure_penalty(n, rho, pair.sigma_b2)?.exact;
            (Input::Rho(rho), model, kl, penalty)
        }
    };
    let gamma = codec::decoder_threshold(n, params.nu1, &model)?;
    let log_m = codec::message_size(n, &params, &model).log_m;
    let soft_covering = match (channel, input) {
        (Channel::Dmc(pair), Input::Alpha(alpha)) => {
            let willie = bounds::info_density_moments_dmc(&pair.q0, &pair.q1, alpha, Reference::Mixture)?;
            bounds::dmc_soft_covering(n, &willie, params.nu2, log_m)?
        }
        (Channel::Awgn(pair), Input::Rho(rho)) => bounds::awgn_soft_covering(n, rho, pair.sigma_w2, params.nu2, log_m)?,
        _ => unreachable!("input matches channel"),
    };
    let tv_certificate = (bounds::pinsker_tv(kl_bound.exact_form) + soft_covering.total()).min(1.0);
    Ok(OperatingPoint {
        n,
        slots,
        input,
        gamma,
        log_m,
        kl_bound,
        soft_covering,
        tv_certificate,
        union_remainder_ln: bounds::union_remainder(log_m, slots, gamma, penalty).ln,
    })
}

fn capacity(channel: &Channel) -> Result<CapacityBounds> {
    match channel {
        Channel::Dmc(p) => bounds::dmc_capacity_bounds(p),
        Channel::Awgn(p) => bounds::awgn_capacity_bounds(p),
    }
}

/// Per-`n` seed of one experiment component.
fn seed_for(cfg: &ExperimentConfig, n: u64, role: Role) -> u64 {
    rng::derive(rng::derive(cfg.master_seed, n), role as u64)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsRow {
    pub n: u64,
    pub slots: u64,
    /// `ok` or `infeasible`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<OperatingPoint>,
    /// Converse test threshold `tau`, when `L >= 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition_threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub channel: Channel,
    pub delta: f64,
    pub slacks: super::config::Slacks,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacityBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_throughput: Option<f64>,
    pub rows: Vec<BoundsRow>,
}

pub fn bounds_report(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    let channel = cfg.validate()?;
    let (cap, note) = match capacity(&channel) {
        Ok(c) => (Some(c), None),
        Err(e @ Error::KeylessConditionViolated(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let key_throughput = match &channel {
        Channel::Dmc(p) => Some(bounds::key_throughput(p)),
        Channel::Awgn(_) => None,
    };
    let rows = cfg
        .n_list
        .iter()
        .map(|&n| {
            let slots = cfg.slots(n);
            let converse = converse_thresholds(&channel, cfg, n, slots);
            match operating_point(&channel, cfg, n) {
                Ok(p) => Ok(BoundsRow {
                    n,
                    slots,
                    status: "ok",
                    reason: None,
                    point: Some(p),
                    test_threshold: converse.map(|c| c.0),
                    partition_threshold: converse.map(|c| c.1),
                }),
                Err(e @ Error::CovertnessInfeasible { .. }) => Ok(BoundsRow {
                    n,
                    slots,
                    status: "infeasible",
                    reason: Some(e.to_string()),
                    point: None,
                    test_threshold: converse.map(|c| c.0),
                    partition_threshold: converse.map(|c| c.1),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(BoundsReport {
        channel,
        delta: cfg.delta,
        slacks: cfg.slacks,
        capacity: cap,
        capacity_note: note,
        key_throughput,
        rows,
    })
}

/// `(tau, partition threshold)` of the converse, when `L >= 2`.
fn converse_thresholds(channel: &Channel, cfg: &ExperimentConfig, n: u64, slots: u64) -> Option<(f64, f64)> {
    let eps = cfg.slacks.epsilon;
    match channel {
        Channel::Dmc(p) => {
            let chi2 = p.willie_chi2();
            Some((
                bounds::dmc_test_threshold(n, slots, eps, chi2).ok()?,
                bounds::converse_weight_threshold(n, slots, chi2).ok()?,
            ))
        }
        Channel::Awgn(p) => Some((
            bounds::awgn_test_threshold(n, slots, eps, p.sigma_w2).ok()?,
            bounds::converse_power_threshold(n, slots, p.sigma_w2).ok()?,
        )),
    }
}

pub const SIMULATE_COLUMNS: &[&str] = &["n", "L", "log_M", "p_e_hat", "p_e_se", "tv_hat", "tv_se", "runtime_s"];

#[derive(Debug, Clone, Serialize)]
pub struct SimulateMeta {
    #[serde(flatten)]
    pub point: OperatingPoint,
    /// Codewords in the simulated codebook (at most `max_codewords`).
    pub simulated_codewords: usize,
    pub full_codebook: bool,
    pub method: SimMethod,
    pub error: ErrorEstimate,
    /// `codebook`: exact likelihood ratio of the simulated codebook;
    /// `ensemble`: the ideal mixture that large random codebooks approach.
    pub tv_method: &'static str,
    pub tv_trials: u64,
}

#[derive(Debug)]
pub struct RunOutput<M> {
    pub table: Table,
    pub meta: Vec<M>,
    /// Error that stopped the run after `table` was partially filled.
    pub error: Option<Error>,
}

fn ensemble_codebook(channel: &Channel, input: Input, m: usize, n: u64, seed: u64) -> Result<Codebook> {
    let kind = match (channel, input) {
        (Channel::Dmc(_), Input::Alpha(alpha)) => CodebookKind::DmcBernoulli { alpha },
        (Channel::Awgn(_), Input::Rho(rho)) => CodebookKind::Bpsk { amplitude: rho.sqrt() },
        _ => unreachable!("input matches channel"),
    };
    generate_codebook(kind, m, n as usize, seed)
}

fn link(channel: &Channel, codebook: Codebook, slots: u64, gamma: f64) -> Result<LinkScenario> {
    let (model, reference) = match channel {
        Channel::Dmc(p) => (codec::ChannelModel::Dmc(p.bob()), Reference::Mixture),
        Channel::Awgn(p) => (codec::ChannelModel::Awgn { sigma2: p.sigma_b2 }, Reference::Pure),
    };
    Ok(LinkScenario {
        codebook,
        slots: slots as usize,
        channel: model,
        decoder: DecoderConfig::new(gamma, reference)?,
        strict: false,
    })
}

fn willie_model(channel: &Channel) -> codec::ChannelModel {
    match channel {
        Channel::Dmc(p) => codec::ChannelModel::Dmc(p.willie()),
        Channel::Awgn(p) => codec::ChannelModel::Awgn { sigma2: p.sigma_w2 },
    }
}

/// Simulates a (sub-)codebook of the operating point and returns the
/// error estimate with the number of simulated codewords.
fn simulate_error(
    channel: &Channel,
    cfg: &ExperimentConfig,
    point: &OperatingPoint,
    method: SimMethod,
) -> Result<(ErrorEstimate, Codebook, bool)> {
    let full = bounds_count(point.log_m);
    let max = cfg.simulate.max_codewords as u64;
    let m = full.map_or(max, |c| c.min(max)) as usize;
    let codebook = ensemble_codebook(channel, point.input, m, point.n, seed_for(cfg, point.n, Role::Codebook))?;
    let scenario = link(channel, codebook, point.slots, point.gamma)?;
    let est = codec::estimate_error_prob_with(&scenario, cfg.trials, seed_for(cfg, point.n, Role::Experiment), method)?;
    Ok((est, scenario.codebook, full == Some(m as u64)))
}

fn bounds_count(log_m: f64) -> Option<u64> {
    codec::MessageSize { log_m }.count()
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<RunOutput<SimulateMeta>> {
    let channel = cfg.validate()?;
    let method = cfg.simulate.method.unwrap_or(SimMethod::SymbolLevel);
    let tv_trials = cfg.simulate.tv_trials.unwrap_or(cfg.trials);
    let mut out = RunOutput {
        table: Table::new(SIMULATE_COLUMNS),
        meta: Vec::new(),
        error: None,
    };
    for &n in &cfg.n_list {
        let start = Instant::now();
        let row = (|| -> Result<SimulateMeta> {
            let point = operating_point(&channel, cfg, n)?;
            let (error, codebook, full) = simulate_error(&channel, cfg, &point, method)?;
            let tv_seed = seed_for(cfg, n, Role::Divergence);
            let willie = willie_model(&channel);
            let cost = codebook.len() as f64 * n as f64 * tv_trials as f64;
            let (tv, tv_method) = if full && cost <= adversary::TV_COST_CAP {
                let tv = adversary::mc_tv_estimate(&codebook, point.slots as usize, &willie, tv_trials, tv_seed)?;
                (tv, "codebook")
            } else {
                let input = match point.input {
                    Input::Alpha(alpha) => EnsembleInput::Bernoulli { alpha },
                    Input::Rho(rho) => EnsembleInput::Bpsk { rho },
                };
                let tv = adversary::mc_tv_mixture(input, n as usize, point.slots as usize, &willie, tv_trials, tv_seed)?;
                (tv, "ensemble")
            };
            out.table.push(vec![
                n.to_string(),
                point.slots.to_string(),
                num(point.log_m),
                num(error.p_e_hat),
                num(error.std_error),
                num(tv.0),
                num(tv.1),
                format!("{:.3}", start.elapsed().as_secs_f64()),
            ]);
            Ok(SimulateMeta {
                point,
                simulated_codewords: codebook.len(),
                full_codebook: full,
                method,
                error,
                tv_method,
                tv_trials,
            })
        })();
        match row {
            Ok(m) => out.meta.push(m),
            Err(e) => {
                out.table.push_status(&format!("error at n = {n}: {e}"));
                out.error = Some(e);
                break;
            }
        }
    }
    Ok(out)
}

pub const DETECT_COLUMNS: &[&str] = &[
    "branch", "n", "L", "tau", "alpha_hat", "beta_hat", "sum", "alpha_se", "beta_se",
];

#[derive(Debug, Clone, Serialize)]
pub struct DetectMeta {
    pub branch: &'static str,
    pub n: u64,
    pub slots: u64,
    pub tau: f64,
    /// Codeword weight (DMC) or power (AWGN) of the tested codebook.
    pub codeword_power: f64,
    pub partition_threshold: f64,
    pub roc: RocPoint,
    pub false_alarm_bound: f64,
    pub chebyshev_beta_bound: f64,
}

fn stats_for(channel: &Channel, input: Option<Input>) -> Result<ChannelStats> {
    match channel {
        Channel::Dmc(p) => {
            let alpha = match input {
                Some(Input::Alpha(a)) => a,
                _ => 0.0,
            };
            ChannelStats::dmc(p.willie(), alpha)
        }
        Channel::Awgn(p) => {
            let rho = match input {
                Some(Input::Rho(r)) => r,
                _ => 0.0,
            };
            ChannelStats::awgn(p.sigma_w2, rho)
        }
    }
}

/// Runs the converse test against a codebook above the partition
/// threshold and, when feasible, against the achievability codebook.
pub fn detect(cfg: &ExperimentConfig) -> Result<RunOutput<DetectMeta>> {
    let channel = cfg.validate()?;
    let mut out = RunOutput {
        table: Table::new(DETECT_COLUMNS),
        meta: Vec::new(),
        error: None,
    };
    for &n in &cfg.n_list {
        let rows = (|| -> Result<Vec<DetectMeta>> {
            let slots = cfg.slots(n);
            let achievable = match operating_point(&channel, cfg, n) {
                Ok(p) => Some(p.input),
                Err(Error::CovertnessInfeasible { .. }) => None,
                Err(e) => return Err(e),
            };
            let stats = stats_for(&channel, achievable)?;
            let test = DetectionTest::converse(n as usize, slots as usize, cfg.slacks.epsilon, &stats)?;
            let (_, partition) =
                converse_thresholds(&channel, cfg, n, slots).ok_or(Error::InvalidParameters("L must be at least 2".into()))?;
            let above = match &channel {
                Channel::Dmc(_) => {
                    let weight = (cfg.detect.factor * partition).round().clamp(1.0, n as f64) as usize;
                    generate_constant_weight(cfg.detect.codewords, n as usize, weight, seed_for(cfg, n, Role::Codebook))?
                }
                Channel::Awgn(_) => {
                    let amplitude = (cfg.detect.factor * partition / n as f64).sqrt();
                    generate_codebook(
                        CodebookKind::Bpsk { amplitude },
                        cfg.detect.codewords,
                        n as usize,
                        seed_for(cfg, n, Role::Codebook),
                    )?
                }
            };
            let mut branches = vec![("above", above)];
            match achievable {
                Some(input) => {
                    let c = ensemble_codebook(&channel, input, cfg.detect.codewords, n, seed_for(cfg, n, Role::Grid))?;
                    branches.push(("below", c));
                }
                None => eprintln!("detect: n = {n} has no feasible achievability codebook; below branch skipped"),
            }
            branches
                .into_iter()
                .enumerate()
                .map(|(k, (branch, codebook))| {
                    let seed = rng::derive(seed_for(cfg, n, Role::Detection), k as u64);
                    let roc = adversary::estimate_roc(&codebook, slots as usize, &stats, &test, cfg.trials, seed)?;
                    Ok(DetectMeta {
                        branch,
                        n,
                        slots,
                        tau: test.tau,
                        codeword_power: (0..codebook.len()).map(|w| codebook.power(w)).sum::<f64>()
                            / codebook.len() as f64,
                        partition_threshold: partition,
                        roc,
                        false_alarm_bound: adversary::false_alarm_bound(&test, &stats)?,
                        chebyshev_beta_bound: adversary::chebyshev_diagnostics(&codebook, &test, &stats)?.beta_bound,
                    })
                })
                .collect()
        })();
        match rows {
            Ok(rows) => {
                for m in rows {
                    out.table.push(vec![
                        m.branch.into(),
                        n.to_string(),
                        m.slots.to_string(),
                        num(m.tau),
                        num(m.roc.false_alarm),
                        num(m.roc.missed_detection),
                        num(m.roc.sum()),
                        num(m.roc.std_errors.0),
                        num(m.roc.std_errors.1),
                    ]);
                    out.meta.push(m);
                }
            }
            Err(e) => {
                out.table.push_status(&format!("error at n = {n}: {e}"));
                out.error = Some(e);
                break;
            }
        }
    }
    Ok(out)
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "n",
    "L",
    "log_M",
    "normalized_throughput",
    "lower_bound",
    "upper_bound",
    "target",
    "p_e_hat",
    "p_e_se",
    "tv_certificate",
    "reliable_and_covert",
    "runtime_s",
];

#[derive(Debug, Clone, Serialize)]
pub struct SweepMeta {
    pub n: u64,
    pub slots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<OperatingPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_throughput: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorEstimate>,
    pub reliable_and_covert: bool,
    pub simulated_codewords: usize,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub run: RunOutput<SweepMeta>,
    pub capacity: CapacityBounds,
    /// `(1 - xi)` times the lower capacity bound.
    pub target: f64,
    pub svg: String,
}

/// Normalized throughput `log M / sqrt(n ln L)`.
pub fn normalized_throughput(log_m: f64, n: u64, slots: u64) -> f64 {
    log_m / (n as f64 * (slots as f64).ln()).sqrt()
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    let channel = cfg.validate()?;
    let cap = capacity(&channel)?;
    let target = cfg.params()?.rate_factor() * cap.lower;
    let method = cfg.simulate.method.unwrap_or(match channel {
        Channel::Dmc(_) => SimMethod::SymbolLevel,
        Channel::Awgn(_) => SimMethod::Projected,
    });
    let mut run = RunOutput {
        table: Table::new(SWEEP_COLUMNS),
        meta: Vec::new(),
        error: None,
    };
    for &n in &cfg.n_list {
        let start = Instant::now();
        let slots = cfg.slots(n);
        let point = match operating_point(&channel, cfg, n) {
            Ok(p) => p,
            Err(Error::CovertnessInfeasible { .. }) => {
                let mut row = vec![String::new(); SWEEP_COLUMNS.len()];
                row[0] = n.to_string();
                row[1] = slots.to_string();
                row[4] = num(cap.lower);
                row[5] = num(cap.upper);
                row[6] = num(target);
                row[10] = "infeasible".into();
                row[11] = format!("{:.3}", start.elapsed().as_secs_f64());
                run.table.push(row);
                run.meta.push(SweepMeta {
                    n,
                    slots,
                    point: None,
                    normalized_throughput: None,
                    error: None,
                    reliable_and_covert: false,
                    simulated_codewords: 0,
                });
                continue;
            }
            Err(e) => {
                run.table.push_status(&format!("error at n = {n}: {e}"));
                run.error = Some(e);
                break;
            }
        };
        let (error, codebook, _) = match simulate_error(&channel, cfg, &point, method) {
            Ok(r) => r,
            Err(e) => {
                run.table.push_status(&format!("error at n = {n}: {e}"));
                run.error = Some(e);
                break;
            }
        };
        let thr = normalized_throughput(point.log_m, n, slots);
        let ok = error.p_e_hat < RELIABILITY_TARGET && point.tv_certificate <= cfg.delta;
        run.table.push(vec![
            n.to_string(),
            slots.to_string(),
            num(point.log_m),
            num(thr),
            num(cap.lower),
            num(cap.upper),
            num(target),
            num(error.p_e_hat),
            num(error.std_error),
            num(point.tv_certificate),
            ok.to_string(),
            format!("{:.3}", start.elapsed().as_secs_f64()),
        ]);
        run.meta.push(SweepMeta {
            n,
            slots,
            point: Some(point),
            normalized_throughput: Some(thr),
            error: Some(error),
            reliable_and_covert: ok,
            simulated_codewords: codebook.len(),
        });
    }
    let svg = sweep_chart(&run.meta, cap, target).render();
    Ok(SweepOutput {
        run,
        capacity: cap,
        target,
        svg,
    })
}

fn sweep_chart(meta: &[SweepMeta], cap: CapacityBounds, target: f64) -> Chart {
    let ns: Vec<f64> = meta.iter().map(|m| m.n as f64).collect();
    let flat = |y: f64| ns.iter().map(|&x| (x, y)).collect::<Vec<_>>();
    let pick = |good: bool| {
        meta.iter()
            .filter(|m| m.reliable_and_covert == good)
            .filter_map(|m| Some((m.n as f64, m.normalized_throughput?)))
            .collect::<Vec<_>>()
    };
    Chart {
        title: "Normalized covert throughput".into(),
        x_label: "block length n".into(),
        y_label: "log M / sqrt(n ln L)".into(),
        log_x: true,
        series: vec![
            Series {
                label: "upper bound".into(),
                points: flat(cap.upper),
                color: "#444444",
                style: Style::Dashed,
            },
            Series {
                label: "lower bound".into(),
                points: flat(cap.lower),
                color: "#1f77b4",
                style: Style::Dashed,
            },
            Series {
                label: "(1 - xi) lower".into(),
                points: flat(target),
                color: "#2ca02c",
                style: Style::Solid,
            },
            Series {
                label: "reliable and covert".into(),
                points: pick(true),
                color: "#d62728",
                style: Style::Markers,
            },
            Series {
                label: "not certified".into(),
                points: pick(false),
                color: "#ff9896",
                style: Style::Markers,
            },
        ],
    }
}

pub const ORACLE_COLUMNS: &[&str] = &["check", "n", "L", "alpha", "instance", "value", "bound", "pass"];

#[derive(Debug)]
pub struct OracleReport {
    pub table: Table,
    pub skipped: Vec<String>,
    pub checks: usize,
    pub failures: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    report: &mut OracleReport,
    check: &str,
    n: usize,
    l: usize,
    alpha: f64,
    inst: usize,
    value: f64,
    bound: f64,
    pass: bool,
) {
    report.checks += 1;
    report.failures += !pass as usize;
    report.table.push(vec![
        check.into(),
        n.to_string(),
        l.to_string(),
        num(alpha),
        inst.to_string(),
        num(value),
        num(bound),
        pass.to_string(),
    ]);
}

/// Random binary-output Willie channel number `index` with
/// `chi2(Q1 || Q0) >= min_chi2`, used as both Bob's and Willie's laws.
pub fn random_binary_channel(seed: u64, index: u64, min_chi2: f64) -> Result<DmcPair> {
    let mut r = rng::stream(rng::derive(seed, Role::Grid as u64), index);
    loop {
        let p: f64 = r.random_range(0.01..0.99);
        let q: f64 = r.random_range(0.01..0.99);
        let q0 = FiniteDistribution::bernoulli(p)?;
        let q1 = FiniteDistribution::bernoulli(q)?;
        if chi_squared(&q1, &q0)? >= min_chi2 {
            return DmcPair::new(q0.clone(), q1.clone(), q0, q1);
        }
    }
}

/// Seeded instances with `n = L = 2`, binary outputs and at most 16
/// codewords, for the hypothesis-testing checks.
pub fn testing_instances(seed: u64, count: usize) -> Result<Vec<ExactInstance>> {
    (0..count as u64)
        .map(|i| {
            let pair = random_binary_channel(seed ^ 0x5eed, i, 0.01)?;
            let mut r = rng::stream(rng::derive(seed, Role::Codebook as u64), i);
            let alpha = r.random_range(0.1..0.9);
            let m = r.random_range(1..=16);
            let c = generate_codebook(CodebookKind::DmcBernoulli { alpha }, m, 2, r.random())?;
            ExactInstance::with_codebook(2, pair, c)
        })
        .collect()
}

/// `count` random deterministic tests on `size` sequences, as acceptance
/// sets of H1.
pub fn random_tests(seed: u64, instance: u64, count: usize, size: usize) -> Vec<Vec<bool>> {
    let mut r = rng::stream(rng::derive(seed, Role::Detection as u64), instance);
    (0..count).map(|_| (0..size).map(|_| r.random_bool(0.5)).collect()).collect()
}

pub fn oracle_check(cfg: &ExperimentConfig) -> Result<OracleReport> {
    let o = &cfg.oracle;
    if o.channels == 0 || o.alphas.is_empty() {
        return Err(Error::InvalidParameters("empty oracle grid".into()));
    }
    if !(o.bound_scale > 0.0) {
        return Err(Error::InvalidParameters("bound_scale must be positive".into()));
    }
    let mut report = OracleReport {
        table: Table::new(ORACLE_COLUMNS),
        skipped: Vec::new(),
        checks: 0,
        failures: 0,
    };
    let channels: Vec<DmcPair> = (0..o.channels as u64)
        .map(|c| random_binary_channel(cfg.master_seed, c, o.min_chi2))
        .collect::<Result<_>>()?;
    for n in 1..=o.n_max {
        for l in 1..=o.l_max {
            if n * l > MAX_FRAME || 2f64.powi((n * l) as i32) > MAX_SEQUENCES {
                report.skipped.push(format!("n = {n}, L = {l}: too large to enumerate"));
                continue;
            }
            for &alpha in &o.alphas {
                for (c, pair) in channels.iter().enumerate() {
                    let inst = ExactInstance::mixture(n, l, pair.clone(), alpha)?;
                    let mix = oracle::exact_mixture_law(&inst)?;
                    let null = oracle::exact_null_law(&inst)?;
                    let kl = oracle::exact_kl(&mix, &null)?;
                    let tv = oracle::exact_tv(&mix, &null)?;
                    let b = bounds::dmc_slot_kl_bound(n as u64, l as u64, alpha, pair.willie_chi2())?;
                    let exact = o.bound_scale * b.exact_form.value_or_inf();
                    let exp = o.bound_scale * b.exp_form.value_or_inf();
                    record(&mut report, "kl_exact_form", n, l, alpha, c, kl, exact, kl <= exact + 1e-9);
                    record(&mut report, "kl_exp_form", n, l, alpha, c, kl, exp, kl <= exp);
                    let pinsker = (kl / 2.0).sqrt();
                    record(&mut report, "pinsker", n, l, alpha, c, tv, pinsker, tv <= pinsker + 1e-12);
                    // joint convexity: the slot mixture is no further from
                    // Q0^N than a single active slot
                    let qa = crate::info::mixture(&pair.q0, &pair.q1, alpha)?;
                    let single = n as f64 * crate::info::kl_divergence(&qa, &pair.q0)?;
                    record(&mut report, "convexity", n, l, alpha, c, kl, single, kl <= single + 1e-12);
                }
            }
        }
    }
    for (i, inst) in testing_instances(cfg.master_seed, 10)?.iter().enumerate() {
        let h1 = oracle::exact_induced_law(inst)?;
        let h0 = oracle::exact_null_law(inst)?;
        let tv = oracle::exact_tv(&h1, &h0)?;
        let worst = random_tests(cfg.master_seed, i as u64, o.tests, h0.probs().len())
            .iter()
            .map(|set| oracle::exact_test_errors(&h0, &h1, |k| set[k]).map(|(a, b)| a + b))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let alpha = inst.alpha();
        record(&mut report, "testing", inst.n(), inst.slots(), alpha, i, worst, 1.0 - tv, worst >= 1.0 - tv - 1e-9);
    }
    Ok(report)
}
