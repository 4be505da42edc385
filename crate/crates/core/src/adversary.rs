//! Willie's side: converse detection tests, ROC estimation, covertness
//! (total variation) estimation and codebook weight audits.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::codec::{self, awgn_slot, ChannelModel, Codebook, CodebookKind, OutputSampler, Symbols};
use crate::error::{Error, Result};
use crate::info::{gaussian_log_ratio, BinaryInputChannel, LlrWeight};
use crate::parallel::{fold_trials, Moments};
use crate::rng::{self, Role};

/// Largest `M n trials` accepted by [`mc_tv_estimate`].
pub const TV_COST_CAP: f64 = 1e11;

/// Empirical weight statistic `(1/n) sum_i Psi(z_i)` of one slot.
pub fn dmc_weight_statistic(slot: &[u8], weight: &LlrWeight) -> f64 {
    slot.iter().map(|&z| weight.symbol(z as usize)).sum::<f64>() / slot.len() as f64
}

/// Empirical power minus noise variance, `(1/n) sum_i z_i^2 - sigma_w2`.
pub fn awgn_power_statistic(slot: &[f64], sigma_w2: f64) -> f64 {
    slot.iter().map(|z| z * z).sum::<f64>() / slot.len() as f64 - sigma_w2
}

/// Willie's channel together with the quantities his tests need.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelStats {
    Dmc {
        channel: BinaryInputChannel,
        /// `Psi(z) = (Q1(z) - Q0(z)) / Q0(z)`.
        weight: LlrWeight,
        /// Input bias assumed by the likelihood-ratio test.
        alpha: f64,
    },
    Awgn {
        sigma_w2: f64,
        /// Symbol power assumed by the likelihood-ratio test.
        rho: f64,
    },
}

impl ChannelStats {
    pub fn dmc(channel: BinaryInputChannel, alpha: f64) -> Result<Self> {
        let weight = LlrWeight::discrete(&channel.d0, &channel.d1)?;
        if weight.chi2() <= 0.0 {
            return Err(Error::IndistinguishableWillieOutputs);
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRangeAlpha(alpha));
        }
        Ok(Self::Dmc {
            channel,
            weight,
            alpha,
        })
    }

    pub fn awgn(sigma_w2: f64, rho: f64) -> Result<Self> {
        if !(sigma_w2 > 0.0 && sigma_w2.is_finite()) {
            return Err(Error::NonPositiveVariance(sigma_w2));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::NonPositiveArgument("rho"));
        }
        Ok(Self::Awgn { sigma_w2, rho })
    }

    /// `chi2(Q1 || Q0)`; for AWGN, that of the BPSK mixture with power `rho`.
    pub fn chi2(&self) -> f64 {
        match self {
            Self::Dmc { weight, .. } => weight.chi2(),
            Self::Awgn { sigma_w2, rho } => (rho / sigma_w2).cosh() - 1.0,
        }
    }

    fn model(&self) -> ChannelModel {
        match self {
            Self::Dmc { channel, .. } => ChannelModel::Dmc(channel.clone()),
            Self::Awgn { sigma_w2, .. } => ChannelModel::Awgn { sigma2: *sigma_w2 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Per-slot mean of `Psi`.
    DmcWeight,
    /// Per-slot empirical power.
    AwgnPower,
    /// Per-slot log-likelihood ratio of the ideal input distribution.
    LikelihoodRatio,
}

/// A max-over-slots threshold test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionTest {
    pub kind: TestKind,
    pub tau: f64,
    pub n: usize,
    pub slots: usize,
}

impl DetectionTest {
    pub fn new(kind: TestKind, tau: f64, n: usize, slots: usize) -> Result<Self> {
        if tau.is_nan() || tau == f64::INFINITY {
            return Err(Error::InvalidParameters(format!("threshold {tau} must be finite")));
        }
        if matches!(kind, TestKind::DmcWeight | TestKind::AwgnPower) && !(tau > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "weight and power thresholds must be positive, got {tau}"
            )));
        }
        if n == 0 || slots == 0 {
            return Err(Error::InvalidParameters("n and L must be positive".into()));
        }
        Ok(Self { kind, tau, n, slots })
    }

    /// The converse test for `stats` with threshold from [`threshold`].
    pub fn converse(n: usize, slots: usize, epsilon: f64, stats: &ChannelStats) -> Result<Self> {
        let kind = match stats {
            ChannelStats::Dmc { .. } => TestKind::DmcWeight,
            ChannelStats::Awgn { .. } => TestKind::AwgnPower,
        };
        Self::new(kind, threshold(kind, n, slots, epsilon, stats)?, n, slots)
    }
}

/// Converse threshold: `epsilon sqrt(2 chi2 ln L / n)` for the weight test,
/// `epsilon sqrt(4 sigma_w2^2 ln L / n)` for the power test.
pub fn threshold(kind: TestKind, n: usize, slots: usize, epsilon: f64, stats: &ChannelStats) -> Result<f64> {
    match (kind, stats) {
        (TestKind::DmcWeight, ChannelStats::Dmc { weight, .. }) => {
            bounds::dmc_test_threshold(n as u64, slots as u64, epsilon, weight.chi2())
        }
        (TestKind::AwgnPower, ChannelStats::Awgn { sigma_w2, .. }) => {
            bounds::awgn_test_threshold(n as u64, slots as u64, epsilon, *sigma_w2)
        }
        _ => Err(Error::InvalidParameters(
            "no converse threshold for this test and channel".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Per-symbol statistic contributions, prepared once per test.
#[derive(Debug, Clone)]
enum SlotStatistic {
    /// Additive per discrete symbol, divided by `scale` at the end.
    Table { values: Vec<f64>, scale: f64 },
    Power { sigma_w2: f64 },
    GaussianLlr { amplitude: f64, sigma_w2: f64 },
}

impl SlotStatistic {
    fn new(kind: TestKind, n: usize, stats: &ChannelStats) -> Result<Self> {
        Ok(match (kind, stats) {
            (TestKind::DmcWeight, ChannelStats::Dmc { weight, channel, .. }) => Self::Table {
                values: (0..channel.output_size()).map(|z| weight.symbol(z)).collect(),
                scale: n as f64,
            },
            (TestKind::LikelihoodRatio, ChannelStats::Dmc { weight, channel, alpha }) => Self::Table {
                values: (0..channel.output_size())
                    .map(|z| (alpha * weight.symbol(z)).ln_1p())
                    .collect(),
                scale: 1.0,
            },
            (TestKind::AwgnPower, ChannelStats::Awgn { sigma_w2, .. }) => Self::Power { sigma_w2: *sigma_w2 },
            (TestKind::LikelihoodRatio, ChannelStats::Awgn { sigma_w2, rho }) => Self::GaussianLlr {
                amplitude: rho.sqrt(),
                sigma_w2: *sigma_w2,
            },
            _ => {
                return Err(Error::InvalidParameters(
                    "test kind does not match Willie's channel".into(),
                ))
            }
        })
    }

    fn binary(&self, slot: &[u8]) -> f64 {
        match self {
            Self::Table { values, scale } => slot.iter().map(|&z| values[z as usize]).sum::<f64>() / scale,
            _ => unreachable!("discrete statistic on a Gaussian test"),
        }
    }

    /// Statistic from the symbol counts of a slot.
    fn counts(&self, counts: &[u64]) -> f64 {
        match self {
            Self::Table { values, scale } => {
                counts.iter().zip(values).map(|(&c, v)| c as f64 * v).sum::<f64>() / scale
            }
            _ => unreachable!("discrete statistic on a Gaussian test"),
        }
    }

    fn real(&self, slot: &[f64]) -> f64 {
        match *self {
            Self::Power { sigma_w2 } => awgn_power_statistic(slot, sigma_w2),
            Self::GaussianLlr { amplitude, sigma_w2 } => {
                slot.iter().map(|&z| gaussian_log_ratio(z, amplitude, sigma_w2)).sum()
            }
            Self::Table { .. } => unreachable!("Gaussian statistic on a discrete test"),
        }
    }
}

/// Largest per-slot statistic of an observed frame.
pub fn max_slot_statistic(z: &Symbols, test: &DetectionTest, stats: &ChannelStats) -> Result<f64> {
    if z.len() != test.n * test.slots {
        return Err(Error::LengthMismatch {
            expected: test.n * test.slots,
            got: z.len(),
        });
    }
    let stat = SlotStatistic::new(test.kind, test.n, stats)?;
    let max = match (z, &stat) {
        (Symbols::Binary(v), SlotStatistic::Table { .. }) => {
            v.chunks(test.n).map(|s| stat.binary(s)).fold(f64::NEG_INFINITY, f64::max)
        }
        (Symbols::Real(v), SlotStatistic::Power { .. } | SlotStatistic::GaussianLlr { .. }) => {
            v.chunks(test.n).map(|s| stat.real(s)).fold(f64::NEG_INFINITY, f64::max)
        }
        _ => {
            return Err(Error::InvalidParameters(
                "observation type does not match the test".into(),
            ))
        }
    };
    Ok(max)
}

/// Declares H1 iff some slot's statistic exceeds `tau`.
pub fn max_slot_detect(z: &Symbols, test: &DetectionTest, stats: &ChannelStats) -> Result<Hypothesis> {
    Ok(if max_slot_statistic(z, test, stats)? > test.tau {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    })
}

/// Empirical false-alarm and missed-detection probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub false_alarm: f64,
    pub missed_detection: f64,
    /// Binomial standard errors of `(false_alarm, missed_detection)`.
    pub std_errors: (f64, f64),
    pub trials: u64,
}

impl RocPoint {
    fn from_counts(fa: u64, md: u64, trials: u64) -> Self {
        let t = trials as f64;
        let (a, b) = (fa as f64 / t, md as f64 / t);
        Self {
            false_alarm: a,
            missed_detection: b,
            std_errors: ((a * (1.0 - a) / t).sqrt(), (b * (1.0 - b) / t).sqrt()),
            trials,
        }
    }

    pub fn sum(&self) -> f64 {
        self.false_alarm + self.missed_detection
    }
}

/// Draws multinomial counts of `draws` samples from `probs` into `counts`.
fn add_multinomial(draws: u64, probs: &[f64], rng: &mut ChaCha8Rng, counts: &mut [u64]) {
    let mut left = draws;
    let mut mass = 1.0;
    let last = probs.len() - 1;
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k == last || mass <= 0.0 {
            counts[k] += left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, q).expect("valid binomial").sample(rng);
        counts[k] += c;
        left -= c;
        mass -= p;
    }
}

/// How per-trial maximum statistics are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RocMethod {
    /// Sample per-slot sufficient statistics (symbol counts, chi-square
    /// variates) directly; exact in distribution. Falls back to symbols for
    /// the Gaussian likelihood-ratio test.
    SufficientStatistic,
    /// Generate every channel output symbol.
    SymbolLevel,
}

/// Maximum per-slot statistics of `trials` frames under H0 and under H1.
///
/// H1 frames carry a uniformly chosen codeword in a uniformly chosen slot.
pub fn simulate_max_statistics(
    codebook: &Codebook,
    slots: usize,
    stats: &ChannelStats,
    kind: TestKind,
    trials: u64,
    seed: u64,
    method: RocMethod,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if trials == 0 {
        return Err(Error::NonPositiveTrials);
    }
    if slots == 0 {
        return Err(Error::NonPositiveArgument("L"));
    }
    let n = codebook.n();
    let stat = SlotStatistic::new(kind, n, stats)?;
    match (codebook.kind(), stats) {
        (CodebookKind::DmcBernoulli { .. }, ChannelStats::Dmc { .. })
        | (CodebookKind::Bpsk { .. }, ChannelStats::Awgn { .. }) => {}
        _ => {
            return Err(Error::InvalidParameters(
                "codebook kind does not match Willie's channel".into(),
            ))
        }
    }
    let symbol_level = method == RocMethod::SymbolLevel || matches!(stat, SlotStatistic::GaussianLlr { .. });
    let msg_seed = rng::derive(seed, Role::Detection as u64);
    let noise = rng::derive(seed, Role::WillieChannel as u64);
    let sampler = match stats {
        ChannelStats::Dmc { channel, .. } => Some(OutputSampler::new(channel)),
        ChannelStats::Awgn { .. } => None,
    };
    let weights: Vec<usize> = (0..codebook.len()).map(|w| codebook.weight(w)).collect();

    let run = |trial: u64, active: Option<(usize, usize)>| -> f64 {
        let mut r = rng::stream(rng::derive(noise, 2 * trial + active.is_some() as u64), 0);
        let mut max = f64::NEG_INFINITY;
        if symbol_level {
            let mut yb = Vec::with_capacity(n);
            let mut yr = Vec::with_capacity(n);
            for l in 1..=slots {
                let word = active.filter(|&(_, t)| t == l).map(|(w, _)| codebook.codeword(w));
                let s = match stats {
                    ChannelStats::Dmc { .. } => {
                        let smp = sampler.as_ref().unwrap();
                        yb.clear();
                        match word {
                            Some(c) => smp.pass(c.bits, &mut r, &mut yb),
                            None => smp.pass_silent(n, &mut r, &mut yb),
                        }
                        stat.binary(&yb)
                    }
                    ChannelStats::Awgn { sigma_w2, .. } => {
                        yr.clear();
                        let sigma = sigma_w2.sqrt();
                        match word {
                            Some(c) => awgn_slot((0..n).map(|i| c.symbol(i)), sigma, &mut r, &mut yr),
                            None => awgn_slot(std::iter::repeat_n(0.0, n), sigma, &mut r, &mut yr),
                        }
                        stat.real(&yr)
                    }
                };
                max = max.max(s);
            }
            return max;
        }
        match stats {
            ChannelStats::Dmc { channel, .. } => {
                let k = channel.output_size();
                let mut counts = vec![0u64; k];
                for l in 1..=slots {
                    counts.iter_mut().for_each(|c| *c = 0);
                    match active.filter(|&(_, t)| t == l) {
                        Some((w, _)) => {
                            let ones = weights[w] as u64;
                            add_multinomial(ones, channel.d1.probs(), &mut r, &mut counts);
                            add_multinomial(n as u64 - ones, channel.d0.probs(), &mut r, &mut counts);
                        }
                        None => add_multinomial(n as u64, channel.d0.probs(), &mut r, &mut counts),
                    }
                    max = max.max(stat.counts(&counts));
                }
            }
            ChannelStats::Awgn { sigma_w2, .. } => {
                let idle = ChiSquared::new(n as f64).expect("positive dof");
                let rest = (n > 1).then(|| ChiSquared::new((n - 1) as f64).expect("positive dof"));
                for l in 1..=slots {
                    let energy = match active.filter(|&(_, t)| t == l) {
                        Some((w, _)) => {
                            let shift = (codebook.power(w) / sigma_w2).sqrt();
                            let g: f64 = r.sample(StandardNormal);
                            (shift + g).powi(2) + rest.as_ref().map_or(0.0, |d| d.sample(&mut r))
                        }
                        None => idle.sample(&mut r),
                    };
                    max = max.max(sigma_w2 * energy / n as f64 - sigma_w2);
                }
            }
        }
        max
    };

    let h0: Vec<f64> = (0..trials).into_par_iter().map(|i| run(i, None)).collect();
    let h1: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let wt = codec::trial_message_and_slot(msg_seed, i, codebook.len(), slots);
            run(i, Some(wt))
        })
        .collect();
    Ok((h0, h1))
}

fn roc_from_statistics(h0: &[f64], h1: &[f64], tau: f64) -> RocPoint {
    let fa = h0.iter().filter(|&&s| s > tau).count() as u64;
    let md = h1.iter().filter(|&&s| s <= tau).count() as u64;
    RocPoint::from_counts(fa, md, h0.len() as u64)
}

/// Estimates false alarm over all-`x0` frames and missed detection over
/// frames with a uniform codeword in a uniform slot.
pub fn estimate_roc(
    codebook: &Codebook,
    slots: usize,
    stats: &ChannelStats,
    test: &DetectionTest,
    trials: u64,
    seed: u64,
) -> Result<RocPoint> {
    if test.n != codebook.n() || test.slots != slots {
        return Err(Error::InvalidParameters("test dimensions differ from the codebook".into()));
    }
    let (h0, h1) = simulate_max_statistics(
        codebook,
        slots,
        stats,
        test.kind,
        trials,
        seed,
        RocMethod::SufficientStatistic,
    )?;
    Ok(roc_from_statistics(&h0, &h1, test.tau))
}

/// ROC points at several thresholds from one set of simulated frames.
pub fn roc_sweep(
    codebook: &Codebook,
    slots: usize,
    stats: &ChannelStats,
    kind: TestKind,
    taus: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<(f64, RocPoint)>> {
    let (h0, h1) = simulate_max_statistics(
        codebook,
        slots,
        stats,
        kind,
        trials,
        seed,
        RocMethod::SufficientStatistic,
    )?;
    Ok(taus.iter().map(|&t| (t, roc_from_statistics(&h0, &h1, t))).collect())
}

/// Writes `tau,alpha_hat,alpha_se,beta_hat,beta_se` rows.
pub fn write_roc_csv<W: Write>(points: &[(f64, RocPoint)], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "alpha_hat", "alpha_se", "beta_hat", "beta_se"])?;
    for (tau, p) in points {
        w.write_record([
            tau.to_string(),
            p.false_alarm.to_string(),
            p.std_errors.0.to_string(),
            p.missed_detection.to_string(),
            p.std_errors.1.to_string(),
        ])?;
    }
    w.flush()
}

/// Union bound `min(1, L P_H0(T > tau))` on the false alarm of the
/// converse test, with Bernstein (weight) or chi-square (power) tails.
pub fn false_alarm_bound(test: &DetectionTest, stats: &ChannelStats) -> Result<f64> {
    let n = test.n as f64;
    let single = match (test.kind, stats) {
        (TestKind::DmcWeight, ChannelStats::Dmc { weight, .. }) => {
            let ChannelStats::Dmc { channel, .. } = stats else { unreachable!() };
            let c = (0..channel.output_size())
                .filter(|&z| channel.d0.prob(z) > 0.0)
                .map(|z| weight.symbol(z).abs())
                .fold(0.0, f64::max);
            bounds::bernstein_tail(n * test.tau, n * weight.chi2(), c)?
        }
        (TestKind::AwgnPower, ChannelStats::Awgn { sigma_w2, .. }) => {
            if test.tau >= n * sigma_w2 {
                0.0
            } else {
                bounds::chi_square_upper_tail(test.n as u64, *sigma_w2, test.tau)?
            }
        }
        _ => return Err(Error::InvalidParameters("no analytic bound for this test".into())),
    };
    Ok((test.slots as f64 * single).min(1.0))
}

/// Per-codeword Chebyshev bounds on missed detection of the converse test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChebyshevReport {
    /// Mean and variance of the per-symbol statistic under `x0`.
    pub mu0: f64,
    pub sigma0_sq: f64,
    /// Mean and variance of the per-symbol statistic under `x1`.
    pub mu1: f64,
    pub sigma1_sq: f64,
    /// `(1/M) sum_m min(1, Var_m / (E_m - tau)^2)` over codewords whose
    /// slot mean exceeds `tau`, and 1 for the others.
    pub beta_bound: f64,
}

pub fn chebyshev_diagnostics(codebook: &Codebook, test: &DetectionTest, stats: &ChannelStats) -> Result<ChebyshevReport> {
    let n = codebook.n() as f64;
    let (mu0, s0, mu1, s1) = match (test.kind, stats) {
        (TestKind::DmcWeight, ChannelStats::Dmc { channel, weight, .. }) => {
            let moments = |d: &crate::info::FiniteDistribution| {
                let m: f64 = d.probs().iter().enumerate().map(|(z, p)| p * weight.symbol(z)).sum();
                let s: f64 = d.probs().iter().enumerate().map(|(z, p)| p * weight.symbol(z).powi(2)).sum();
                (m, s - m * m)
            };
            let (m0, v0) = moments(&channel.d0);
            let (m1, v1) = moments(&channel.d1);
            (m0, v0, m1, v1)
        }
        (TestKind::AwgnPower, ChannelStats::Awgn { sigma_w2, .. }) => {
            // per-symbol z^2 - sigma^2; the x1 column is for unit-energy inputs
            (0.0, 2.0 * sigma_w2 * sigma_w2, 1.0, 2.0 * sigma_w2 * sigma_w2 + 4.0 * sigma_w2)
        }
        _ => return Err(Error::InvalidParameters("diagnostics need a converse test".into())),
    };
    let beta: f64 = (0..codebook.len())
        .map(|w| {
            let (mean, var) = match stats {
                ChannelStats::Dmc { .. } => {
                    let k = codebook.weight(w) as f64;
                    ((k * mu1 + (n - k) * mu0) / n, (k * s1 + (n - k) * s0) / (n * n))
                }
                ChannelStats::Awgn { sigma_w2, .. } => {
                    let p = codebook.power(w);
                    (p / n, (2.0 * n * sigma_w2 * sigma_w2 + 4.0 * sigma_w2 * p) / (n * n))
                }
            };
            if mean > test.tau {
                (var / (mean - test.tau).powi(2)).min(1.0)
            } else {
                1.0
            }
        })
        .sum::<f64>()
        / codebook.len() as f64;
    Ok(ChebyshevReport {
        mu0,
        sigma0_sq: s0,
        mu1,
        sigma1_sq: s1,
        beta_bound: beta,
    })
}

/// Log-sum-exp of `values` minus `ln(count)`.
fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln() - (values.len() as f64).ln()
}

/// Unbiased estimate of `V(Q_hat^N, Q0^N) = (1/2) E_{Q0^N} |r(Z) - 1|`, with
/// the likelihood ratio `r` computed exactly from the codebook.
///
/// Returns `(tv_hat, std_error)`.
pub fn mc_tv_estimate(
    codebook: &Codebook,
    slots: usize,
    willie: &ChannelModel,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::NonPositiveTrials);
    }
    if slots == 0 {
        return Err(Error::NonPositiveArgument("L"));
    }
    let n = codebook.n();
    let m = codebook.len();
    let cost = m as f64 * n as f64 * trials as f64;
    if cost > TV_COST_CAP {
        return Err(Error::CostCapExceeded { cost, cap: TV_COST_CAP });
    }
    let base = rng::derive(seed, Role::Divergence as u64);
    let acc: Moments = match (codebook.kind(), willie) {
        (CodebookKind::DmcBernoulli { .. }, ChannelModel::Dmc(ch)) => {
            // ln Q1/Q0 per symbol; symbols with Q0 = 0 never occur under H0
            let llr: Vec<f64> = ch
                .d0
                .probs()
                .iter()
                .zip(ch.d1.probs())
                .map(|(&q0, &q1)| if q0 > 0.0 { (q1 / q0).ln() } else { 0.0 })
                .collect();
            let supports: Vec<Vec<u32>> = (0..m).map(|w| codebook.support(w)).collect();
            let sampler = OutputSampler::new(ch);
            fold_trials(trials, |i, acc: &mut Moments| {
                let mut r = rng::stream(base, i);
                let mut z = Vec::with_capacity(n);
                let mut per_slot = Vec::with_capacity(slots);
                let mut per_word = vec![0.0; m];
                for _ in 0..slots {
                    z.clear();
                    sampler.pass_silent(n, &mut r, &mut z);
                    for (s, sup) in per_word.iter_mut().zip(&supports) {
                        *s = sup.iter().map(|&k| llr[z[k as usize] as usize]).sum();
                    }
                    per_slot.push(log_mean_exp(&per_word));
                }
                acc.push(0.5 * log_mean_exp(&per_slot).exp_m1().abs());
            })
        }
        (CodebookKind::Bpsk { amplitude }, ChannelModel::Awgn { sigma2 }) => {
            let sigma = sigma2.sqrt();
            let penalty = n as f64 * amplitude * amplitude / (2.0 * sigma2);
            fold_trials(trials, |i, acc: &mut Moments| {
                let mut r = rng::stream(base, i);
                let mut z = Vec::with_capacity(n);
                let mut per_slot = Vec::with_capacity(slots);
                let mut per_word = vec![0.0; m];
                for _ in 0..slots {
                    z.clear();
                    awgn_slot(std::iter::repeat_n(0.0, n), sigma, &mut r, &mut z);
                    for (w, s) in per_word.iter_mut().enumerate() {
                        let c = codebook.codeword(w);
                        let dot: f64 = (0..n).map(|k| c.symbol(k) * z[k]).sum();
                        *s = dot / sigma2 - penalty;
                    }
                    per_slot.push(log_mean_exp(&per_word));
                }
                acc.push(0.5 * log_mean_exp(&per_slot).exp_m1().abs());
            })
        }
        _ => {
            return Err(Error::InvalidParameters(
                "codebook kind does not match Willie's channel".into(),
            ))
        }
    };
    Ok((acc.mean(), acc.std_error()))
}

/// The random-coding ensemble's ideal input law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EnsembleInput {
    /// iid `Bernoulli(alpha)` inputs.
    Bernoulli { alpha: f64 },
    /// iid uniform `+-sqrt(rho)` inputs.
    Bpsk { rho: f64 },
}

/// Monte Carlo estimate of `V(Q_alpha^N, Q0^N)`, the covertness of the
/// ideal slot mixture that random codebooks approach as `M` grows.
///
/// DMC slots are summarized by multinomial symbol counts; AWGN slots are
/// simulated symbol by symbol. Returns `(tv_hat, std_error)`.
pub fn mc_tv_mixture(
    input: EnsembleInput,
    n: usize,
    slots: usize,
    willie: &ChannelModel,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::NonPositiveTrials);
    }
    if n == 0 || slots == 0 {
        return Err(Error::InvalidParameters("n and L must be positive".into()));
    }
    let base = rng::derive(seed, Role::Divergence as u64 + 100);
    let acc: Moments = match (input, willie) {
        (EnsembleInput::Bernoulli { alpha }, ChannelModel::Dmc(ch)) => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::OutOfRangeAlpha(alpha));
            }
            let llr: Vec<f64> = ch
                .d0
                .probs()
                .iter()
                .zip(ch.d1.probs())
                .map(|(&q0, &q1)| if q0 > 0.0 { (alpha * (q1 - q0) / q0).ln_1p() } else { 0.0 })
                .collect();
            let k = ch.output_size();
            fold_trials(trials, |i, acc: &mut Moments| {
                let mut r = rng::stream(base, i);
                let mut counts = vec![0u64; k];
                let per_slot: Vec<f64> = (0..slots)
                    .map(|_| {
                        counts.iter_mut().for_each(|c| *c = 0);
                        add_multinomial(n as u64, ch.d0.probs(), &mut r, &mut counts);
                        counts.iter().zip(&llr).map(|(&c, l)| c as f64 * l).sum()
                    })
                    .collect();
                acc.push(0.5 * log_mean_exp(&per_slot).exp_m1().abs());
            })
        }
        (EnsembleInput::Bpsk { rho }, ChannelModel::Awgn { sigma2 }) => {
            if !(rho >= 0.0 && rho.is_finite()) {
                return Err(Error::NonPositiveArgument("rho"));
            }
            let (a, s2) = (rho.sqrt(), *sigma2);
            let sigma = s2.sqrt();
            fold_trials(trials, |i, acc: &mut Moments| {
                let mut r = rng::stream(base, i);
                let per_slot: Vec<f64> = (0..slots)
                    .map(|_| {
                        (0..n)
                            .map(|_| gaussian_log_ratio(sigma * r.sample::<f64, _>(StandardNormal), a, s2))
                            .sum()
                    })
                    .collect();
                acc.push(0.5 * log_mean_exp(&per_slot).exp_m1().abs());
            })
        }
        _ => {
            return Err(Error::InvalidParameters(
                "ensemble input does not match Willie's channel".into(),
            ))
        }
    };
    Ok((acc.mean(), acc.std_error()))
}

/// Split of a codebook at the converse weight (or power) threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPartition {
    /// Codewords with weight (power) at most the threshold.
    pub low: Option<Codebook>,
    pub high: Option<Codebook>,
    pub threshold: f64,
    /// `|low| / M`.
    pub low_fraction: f64,
}

pub fn weight_partition(codebook: &Codebook, slots: usize, stats: &ChannelStats) -> Result<WeightPartition> {
    let n = codebook.n() as u64;
    let threshold = match stats {
        ChannelStats::Dmc { weight, .. } => bounds::converse_weight_threshold(n, slots as u64, weight.chi2())?,
        ChannelStats::Awgn { sigma_w2, .. } => bounds::converse_power_threshold(n, slots as u64, *sigma_w2)?,
    };
    let (low, high): (Vec<usize>, Vec<usize>) =
        (0..codebook.len()).partition(|&w| codebook.power(w) <= threshold);
    Ok(WeightPartition {
        low_fraction: low.len() as f64 / codebook.len() as f64,
        low: codebook.subset(&low),
        high: codebook.subset(&high),
        threshold,
    })
}

/// Willie's channel as a [`ChannelModel`], for the TV estimators.
pub fn model_of(stats: &ChannelStats) -> ChannelModel {
    stats.model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{embed_in_slot, generate_codebook, generate_constant_weight, pass_dmc};
    use approx::assert_relative_eq;

    fn bsc_stats() -> ChannelStats {
        ChannelStats::dmc(BinaryInputChannel::bsc(0.1).unwrap(), 0.1).unwrap()
    }

    #[test]
    fn weight_statistic_examples() {
        let ChannelStats::Dmc { weight, .. } = bsc_stats() else { unreachable!() };
        assert_relative_eq!(dmc_weight_statistic(&[1, 0], &weight), 32.0 / 9.0, epsilon = 1e-14);
        let flat = LlrWeight::discrete(
            &crate::info::FiniteDistribution::new(vec![0.5, 0.25, 0.25]).unwrap(),
            &crate::info::FiniteDistribution::new(vec![0.5, 0.5, 0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(dmc_weight_statistic(&[0, 0, 0], &flat), 0.0);
    }

    #[test]
    fn power_statistic_examples() {
        assert_eq!(awgn_power_statistic(&[0.0; 5], 1.5), -1.5);
        assert_relative_eq!(awgn_power_statistic(&[0.7; 4], 1.0), 0.49 - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn thresholds_share_bounds() {
        let s = bsc_stats();
        assert_relative_eq!(s.chi2(), 64.0 / 9.0, epsilon = 1e-12);
        assert_eq!(
            threshold(TestKind::DmcWeight, 100, 1000, 1.2, &s).unwrap(),
            bounds::dmc_test_threshold(100, 1000, 1.2, s.chi2()).unwrap()
        );
        let a = ChannelStats::awgn(1.0, 0.1).unwrap();
        assert_relative_eq!(
            threshold(TestKind::AwgnPower, 100, 1000, 1.2, &a).unwrap(),
            0.63079,
            epsilon = 1e-5
        );
        assert!(DetectionTest::new(TestKind::DmcWeight, 0.0, 4, 4).is_err());
        assert!(DetectionTest::new(TestKind::LikelihoodRatio, -1e300, 4, 4).is_ok());
    }

    #[test]
    fn detect_extremes() {
        let s = bsc_stats();
        let test = DetectionTest::new(TestKind::DmcWeight, 1e6, 10, 4).unwrap();
        let z = Symbols::Binary(vec![1; 40]);
        assert_eq!(max_slot_detect(&z, &test, &s).unwrap(), Hypothesis::H0);
        let near = ChannelStats::dmc(BinaryInputChannel::bsc(1e-6).unwrap(), 0.1).unwrap();
        let c = generate_constant_weight(1, 50, 50, 1).unwrap();
        let f = embed_in_slot(c.codeword(0), 3, 4).unwrap();
        let ChannelStats::Dmc { channel, .. } = &near else { unreachable!() };
        let y = Symbols::Binary(pass_dmc(&f, channel, 2).unwrap());
        let t = DetectionTest::converse(50, 4, 1.2, &near).unwrap();
        assert_eq!(max_slot_detect(&y, &t, &near).unwrap(), Hypothesis::H1);
    }

    #[test]
    fn roc_extremes() {
        let s = bsc_stats();
        let c = generate_codebook(CodebookKind::DmcBernoulli { alpha: 0.2 }, 4, 30, 1).unwrap();
        let hi = DetectionTest::new(TestKind::LikelihoodRatio, 1e300, 30, 5).unwrap();
        let p = estimate_roc(&c, 5, &s, &hi, 500, 3).unwrap();
        assert_eq!((p.false_alarm, p.missed_detection), (0.0, 1.0));
        let lo = DetectionTest::new(TestKind::LikelihoodRatio, -1e300, 30, 5).unwrap();
        let p = estimate_roc(&c, 5, &s, &lo, 500, 3).unwrap();
        assert_eq!((p.false_alarm, p.missed_detection), (1.0, 0.0));
    }

    #[test]
    fn partition_extremes() {
        let s = bsc_stats();
        let zero = Codebook::innocent(400).unwrap();
        let p = weight_partition(&zero, 400, &s).unwrap();
        assert!(p.high.is_none() && p.low_fraction == 1.0);
        let ones = generate_constant_weight(3, 400, 400, 1).unwrap();
        let p = weight_partition(&ones, 400, &s).unwrap();
        assert!(p.low.is_none() && p.low_fraction == 0.0);
        assert_eq!(p.threshold, bounds::converse_weight_threshold(400, 400, s.chi2()).unwrap());
    }

    #[test]
    fn tv_of_innocent_codebook_is_zero() {
        let ch = ChannelModel::Dmc(BinaryInputChannel::bsc(0.1).unwrap());
        let (tv, se) = mc_tv_estimate(&Codebook::innocent(3).unwrap(), 2, &ch, 10_000, 1).unwrap();
        assert_eq!((tv, se), (0.0, 0.0));
        let c = generate_codebook(CodebookKind::DmcBernoulli { alpha: 0.1 }, 1000, 1000, 1).unwrap();
        assert!(matches!(
            mc_tv_estimate(&c, 2, &ch, 1_000_000, 1),
            Err(Error::CostCapExceeded { .. })
        ));
    }

    #[test]
    fn multinomial_counts_sum() {
        let mut r = rng::stream(1, 0);
        let mut counts = vec![0u64; 3];
        add_multinomial(1000, &[0.2, 0.5, 0.3], &mut r, &mut counts);
        assert_eq!(counts.iter().sum::<u64>(), 1000);
    }
}
