use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::Reference;

use crate::error::{Error, Result};
use crate::parallel::{fold_trials, Accumulator};
use crate::rng::{self, Role};

use super::channel::{awgn_slot, OutputSampler};
use super::codebook::{Codebook, CodebookKind};
use super::decoder::{classify, Ambiguity, ChannelModel, DecoderConfig, SlotOutcome, SlotScorer};

/// Everything needed to simulate one link: codebook, frame size, Bob's
/// channel and the decoder.
#[derive(Debug, Clone)]
pub struct LinkScenario {
    pub codebook: Codebook,
    pub slots: usize,
    pub channel: ChannelModel,
    pub decoder: DecoderConfig,
    /// Count a correct message decoded in the wrong slot as an error.
    pub strict: bool,
}

/// Monte Carlo estimate of the message error probability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub p_e_hat: f64,
    pub std_error: f64,
    pub trials: u64,
    pub errors: u64,
    /// Decoding ended without a unique hit.
    pub erasures: u64,
    /// A different message was declared.
    pub wrong_message: u64,
    /// The right message was found in another slot.
    pub wrong_slot: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    trials: u64,
    errors: u64,
    erasures: u64,
    wrong_message: u64,
    wrong_slot: u64,
}

impl Accumulator for Counts {
    fn merge(&mut self, o: Self) {
        self.trials += o.trials;
        self.errors += o.errors;
        self.erasures += o.erasures;
        self.wrong_message += o.wrong_message;
        self.wrong_slot += o.wrong_slot;
    }
}

/// The uniformly drawn message (0-based) and slot (1-based) of a trial.
pub fn trial_message_and_slot(seed: u64, trial: u64, messages: usize, slots: usize) -> (usize, usize) {
    let mut r = rng::stream(rng::trial_seed(seed, Role::Message, trial), 0);
    (r.random_range(0..messages), r.random_range(1..=slots))
}

/// Seed of the channel noise of a trial; slot `l` uses substream `l - 1`.
pub fn trial_noise_seed(seed: u64, trial: u64) -> u64 {
    rng::trial_seed(seed, Role::BobChannel, trial)
}

/// Runs the decoder of one trial, generating channel outputs slot by slot
/// and stopping as soon as a decision is reached. Outputs coincide with
/// [`super::pass_dmc`] / [`super::pass_awgn`] applied to the whole frame
/// with [`trial_noise_seed`].
pub(crate) fn decode_trial(
    scenario: &LinkScenario,
    scorer: &SlotScorer,
    sampler: Option<&OutputSampler>,
    w: usize,
    t: usize,
    noise_seed: u64,
) -> Option<(usize, usize)> {
    let n = scenario.codebook.n();
    let word = scenario.codebook.codeword(w);
    let mut scores = Vec::with_capacity(scenario.codebook.len());
    let mut ybin = Vec::with_capacity(n);
    let mut yreal = Vec::with_capacity(n);
    for l in 1..=scenario.slots {
        let mut r = rng::stream(noise_seed, (l - 1) as u64);
        match &scenario.channel {
            ChannelModel::Dmc(_) => {
                let s = sampler.expect("DMC sampler");
                ybin.clear();
                if l == t {
                    s.pass(word.bits, &mut r, &mut ybin);
                } else {
                    s.pass_silent(n, &mut r, &mut ybin);
                }
                scorer.score_binary(&ybin, &mut scores);
            }
            ChannelModel::Awgn { sigma2 } => {
                yreal.clear();
                let sigma = sigma2.sqrt();
                if l == t {
                    awgn_slot((0..n).map(|i| word.symbol(i)), sigma, &mut r, &mut yreal);
                } else {
                    awgn_slot(std::iter::repeat_n(0.0, n), sigma, &mut r, &mut yreal);
                }
                scorer.score_real(&yreal, &mut scores);
            }
        }
        match classify(&scores, scenario.decoder.gamma) {
            SlotOutcome::None => {}
            SlotOutcome::Unique(m) => return Some((m, l)),
            SlotOutcome::Multiple => {
                if scenario.decoder.ambiguity == Ambiguity::Erasure {
                    return None;
                }
            }
        }
    }
    None
}

/// How channel outputs are produced in [`estimate_error_prob_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMethod {
    /// Generate every output symbol and score it.
    #[default]
    SymbolLevel,
    /// AWGN with the pure reference only: draw the correlations `<x_w, y>`
    /// of all codewords jointly from their Gaussian law, `M` variates per
    /// slot instead of `n`. Same distribution as the symbol-level path.
    Projected,
}

/// Estimates `P(W_hat != W)` over uniform messages, uniform slots and
/// channel noise.
pub fn estimate_error_prob(scenario: &LinkScenario, trials: u64, seed: u64) -> Result<ErrorEstimate> {
    estimate_error_prob_with(scenario, trials, seed, SimMethod::SymbolLevel)
}

pub fn estimate_error_prob_with(
    scenario: &LinkScenario,
    trials: u64,
    seed: u64,
    method: SimMethod,
) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::NonPositiveTrials);
    }
    if scenario.slots == 0 {
        return Err(Error::NonPositiveArgument("L"));
    }
    let m = scenario.codebook.len();
    match method {
        SimMethod::SymbolLevel => {
            let scorer = SlotScorer::new(&scenario.codebook, scenario.decoder.reference, &scenario.channel)?;
            let sampler = match &scenario.channel {
                ChannelModel::Dmc(ch) => Some(OutputSampler::new(ch)),
                ChannelModel::Awgn { .. } => None,
            };
            Ok(tally(scenario, trials, seed, |w, t, noise| {
                decode_trial(scenario, &scorer, sampler.as_ref(), w, t, noise)
            }))
        }
        SimMethod::Projected => {
            let proj = Projection::new(scenario)?;
            Ok(tally(scenario, trials, seed, |w, t, noise| proj.decode(scenario, m, w, t, noise)))
        }
    }
}

fn tally(
    scenario: &LinkScenario,
    trials: u64,
    seed: u64,
    decode: impl Fn(usize, usize, u64) -> Option<(usize, usize)> + Sync,
) -> ErrorEstimate {
    let m = scenario.codebook.len();
    let c: Counts = fold_trials(trials, |i, acc: &mut Counts| {
        let (w, t) = trial_message_and_slot(seed, i, m, scenario.slots);
        let outcome = decode(w, t, trial_noise_seed(seed, i));
        acc.trials += 1;
        match outcome {
            None => {
                acc.errors += 1;
                acc.erasures += 1;
            }
            Some((w_hat, _)) if w_hat != w => {
                acc.errors += 1;
                acc.wrong_message += 1;
            }
            Some((_, t_hat)) if t_hat != t => {
                acc.wrong_slot += 1;
                acc.errors += scenario.strict as u64;
            }
            Some(_) => {}
        }
    });
    let p = c.errors as f64 / c.trials as f64;
    ErrorEstimate {
        p_e_hat: p,
        std_error: (p * (1.0 - p) / c.trials as f64).sqrt(),
        trials: c.trials,
        errors: c.errors,
        erasures: c.erasures,
        wrong_message: c.wrong_message,
        wrong_slot: c.wrong_slot,
    }
}

/// Gaussian law of the codeword correlations of a BPSK codebook.
struct Projection {
    /// Gram matrix `G[w][v] = <x_w, x_v>`.
    gram: Vec<f64>,
    /// Lower Cholesky factor of `G`, row-major.
    chol: Vec<f64>,
    sigma2: f64,
    /// `n a^2 / 2`.
    half_energy: f64,
}

impl Projection {
    fn new(scenario: &LinkScenario) -> Result<Self> {
        let (CodebookKind::Bpsk { amplitude }, ChannelModel::Awgn { sigma2 }) =
            (scenario.codebook.kind(), &scenario.channel)
        else {
            return Err(Error::InvalidParameters("projected simulation needs a BPSK codebook".into()));
        };
        if scenario.decoder.reference != Reference::Pure {
            return Err(Error::InvalidParameters(
                "projected simulation needs the pure reference".into(),
            ));
        }
        if !(*sigma2 > 0.0) {
            return Err(Error::NonPositiveVariance(*sigma2));
        }
        let c = &scenario.codebook;
        let (m, n) = (c.len(), c.n());
        let a2 = amplitude * amplitude;
        let mut gram = vec![0.0; m * m];
        for w in 0..m {
            for v in 0..=w {
                let agree = c
                    .codeword(w)
                    .bits
                    .iter()
                    .zip(c.codeword(v).bits)
                    .filter(|(x, y)| x == y)
                    .count() as f64;
                let g = a2 * (2.0 * agree - n as f64);
                gram[w * m + v] = g;
                gram[v * m + w] = g;
            }
        }
        Ok(Self {
            chol: cholesky_psd(&gram, m),
            gram,
            sigma2: *sigma2,
            half_energy: n as f64 * a2 / 2.0,
        })
    }

    fn decode(&self, scenario: &LinkScenario, m: usize, w: usize, t: usize, noise_seed: u64) -> Option<(usize, usize)> {
        let sigma = self.sigma2.sqrt();
        let mut g = vec![0.0; m];
        let mut scores = vec![0.0; m];
        for l in 1..=scenario.slots {
            let mut r = rng::stream(noise_seed, (l - 1) as u64);
            g.iter_mut().for_each(|v| *v = r.sample(StandardNormal));
            for (k, s) in scores.iter_mut().enumerate() {
                let row = &self.chol[k * m..k * m + k + 1];
                let noise: f64 = row.iter().zip(&g).map(|(c, z)| c * z).sum();
                let signal = if l == t { self.gram[k * m + w] } else { 0.0 };
                *s = (signal + sigma * noise - self.half_energy) / self.sigma2;
            }
            match classify(&scores, scenario.decoder.gamma) {
                SlotOutcome::None => {}
                SlotOutcome::Unique(k) => return Some((k, l)),
                SlotOutcome::Multiple => {
                    if scenario.decoder.ambiguity == Ambiguity::Erasure {
                        return None;
                    }
                }
            }
        }
        None
    }
}

/// Lower factor `C` with `C C^T = G` for a positive semi-definite `G`;
/// columns of numerically dependent rows are zeroed.
fn cholesky_psd(gram: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for j in 0..m {
        let d = gram[j * m + j] - (0..j).map(|k| c[j * m + k] * c[j * m + k]).sum::<f64>();
        if d <= 1e-10 * gram[j * m + j].abs().max(f64::MIN_POSITIVE) {
            continue;
        }
        let djj = d.sqrt();
        c[j * m + j] = djj;
        for i in j + 1..m {
            let s = gram[i * m + j] - (0..j).map(|k| c[i * m + k] * c[j * m + k]).sum::<f64>();
            c[i * m + j] = s / djj;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::channel::{embed_in_slot, pass_awgn, pass_dmc, Symbols};
    use crate::codec::codebook::{generate_codebook, CodebookKind};
    use crate::codec::decoder::{decode_slotted, Decision};
    use crate::info::{BinaryInputChannel, FiniteDistribution};

    fn dmc_scenario(gamma: f64) -> LinkScenario {
        LinkScenario {
            codebook: generate_codebook(CodebookKind::DmcBernoulli { alpha: 0.2 }, 6, 40, 3).unwrap(),
            slots: 4,
            channel: ChannelModel::Dmc(BinaryInputChannel::bsc(0.1).unwrap()),
            decoder: DecoderConfig::new(gamma, Reference::Mixture).unwrap(),
            strict: false,
        }
    }

    #[test]
    fn lazy_trial_matches_full_frame_pipeline() {
        for gamma in [0.5, 2.0, 5.0] {
            let s = dmc_scenario(gamma);
            let scorer = SlotScorer::new(&s.codebook, Reference::Mixture, &s.channel).unwrap();
            let ChannelModel::Dmc(ch) = &s.channel else { unreachable!() };
            let sampler = OutputSampler::new(ch);
            for trial in 0..50 {
                let (w, t) = trial_message_and_slot(11, trial, s.codebook.len(), s.slots);
                let seed = trial_noise_seed(11, trial);
                let lazy = decode_trial(&s, &scorer, Some(&sampler), w, t, seed);
                let frame = embed_in_slot(s.codebook.codeword(w), t, s.slots).unwrap();
                let y = Symbols::Binary(pass_dmc(&frame, ch, seed).unwrap());
                let full = decode_slotted(&y, &s.codebook, &s.decoder, &s.channel).unwrap();
                let expected = match full {
                    Decision::Found { message, slot } => Some((message, slot)),
                    Decision::Erasure => None,
                };
                assert_eq!(lazy, expected);
            }
        }
    }

    #[test]
    fn lazy_awgn_matches_full_frame() {
        let s = LinkScenario {
            codebook: generate_codebook(CodebookKind::Bpsk { amplitude: 0.5 }, 5, 64, 3).unwrap(),
            slots: 3,
            channel: ChannelModel::Awgn { sigma2: 0.5 },
            decoder: DecoderConfig::new(4.0, Reference::Pure).unwrap(),
            strict: false,
        };
        let scorer = SlotScorer::new(&s.codebook, Reference::Pure, &s.channel).unwrap();
        for trial in 0..30 {
            let (w, t) = trial_message_and_slot(5, trial, 5, 3);
            let seed = trial_noise_seed(5, trial);
            let lazy = decode_trial(&s, &scorer, None, w, t, seed);
            let frame = embed_in_slot(s.codebook.codeword(w), t, 3).unwrap();
            let y = Symbols::Real(pass_awgn(&frame, 0.5, seed).unwrap());
            let full = decode_slotted(&y, &s.codebook, &s.decoder, &s.channel).unwrap();
            let expected = match full {
                Decision::Found { message, slot } => Some((message, slot)),
                Decision::Erasure => None,
            };
            assert_eq!(lazy, expected);
        }
    }

    #[test]
    fn noiseless_and_infinite_threshold() {
        let mut s = dmc_scenario(0.5);
        s.channel = ChannelModel::Dmc(
            BinaryInputChannel::new(
                FiniteDistribution::new(vec![1.0, 0.0]).unwrap(),
                FiniteDistribution::new(vec![0.0, 1.0]).unwrap(),
            )
            .unwrap(),
        );
        s.strict = true;
        let est = estimate_error_prob(&s, 500, 1).unwrap();
        assert_eq!(est.p_e_hat, 0.0);
        let mut never = dmc_scenario(f64::INFINITY);
        never.strict = true;
        assert_eq!(estimate_error_prob(&never, 200, 1).unwrap().p_e_hat, 1.0);
        assert_eq!(estimate_error_prob(&never, 0, 1), Err(Error::NonPositiveTrials));
    }

    #[test]
    fn cholesky_reproduces_gram() {
        let c = generate_codebook(CodebookKind::Bpsk { amplitude: 0.3 }, 6, 20, 4).unwrap();
        let mut with_dup = (0..6).map(|w| c.codeword(w).bits.to_vec()).collect::<Vec<_>>();
        with_dup.push(with_dup[2].clone());
        let c = Codebook::from_codewords(CodebookKind::Bpsk { amplitude: 0.3 }, 4, with_dup).unwrap();
        let s = LinkScenario {
            codebook: c,
            slots: 2,
            channel: ChannelModel::Awgn { sigma2: 1.0 },
            decoder: DecoderConfig::new(1.0, Reference::Pure).unwrap(),
            strict: false,
        };
        let p = Projection::new(&s).unwrap();
        let m = 7;
        for i in 0..m {
            for j in 0..m {
                let cc: f64 = (0..m).map(|k| p.chol[i * m + k] * p.chol[j * m + k]).sum();
                assert!((cc - p.gram[i * m + j]).abs() < 1e-9, "{i} {j}");
            }
        }
    }

    #[test]
    fn projected_agrees_with_symbol_level() {
        // a regime with errors of every kind
        let s = LinkScenario {
            codebook: generate_codebook(CodebookKind::Bpsk { amplitude: 0.3 }, 8, 60, 2).unwrap(),
            slots: 6,
            channel: ChannelModel::Awgn { sigma2: 1.0 },
            decoder: DecoderConfig::new(1.5, Reference::Pure).unwrap(),
            strict: true,
        };
        let a = estimate_error_prob_with(&s, 20_000, 3, SimMethod::SymbolLevel).unwrap();
        let b = estimate_error_prob_with(&s, 20_000, 3, SimMethod::Projected).unwrap();
        assert!(a.p_e_hat > 0.1 && a.p_e_hat < 0.9);
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.p_e_hat - b.p_e_hat).abs() < 4.0 * se, "{a:?} {b:?}");
    }

    #[test]
    fn projected_rejects_dmc_and_mixture() {
        let s = dmc_scenario(1.0);
        assert!(estimate_error_prob_with(&s, 10, 1, SimMethod::Projected).is_err());
        let mut a = LinkScenario {
            codebook: generate_codebook(CodebookKind::Bpsk { amplitude: 0.3 }, 2, 4, 2).unwrap(),
            slots: 2,
            channel: ChannelModel::Awgn { sigma2: 1.0 },
            decoder: DecoderConfig::new(1.5, Reference::Mixture).unwrap(),
            strict: true,
        };
        assert!(estimate_error_prob_with(&a, 10, 1, SimMethod::Projected).is_err());
        a.decoder.reference = Reference::Pure;
        assert!(estimate_error_prob_with(&a, 10, 1, SimMethod::Projected).is_ok());
    }

    #[test]
    fn deterministic_per_seed() {
        let s = dmc_scenario(2.0);
        assert_eq!(
            estimate_error_prob(&s, 300, 9).unwrap(),
            estimate_error_prob(&s, 300, 9).unwrap()
        );
    }
}
