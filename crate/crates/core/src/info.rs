//! Finite and Gaussian probability primitives, divergences and
//! likelihood-ratio weights.
//!
//! All divergences are in nats. Distributions are stored in the linear
//! domain; log-domain arithmetic is reserved for information-density sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;
const MAX_ALPHABET: usize = 256;

/// Probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for FiniteDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        Self::new(raw.probs)
    }
}

impl From<FiniteDistribution> for RawDistribution {
    fn from(d: FiniteDistribution) -> Self {
        RawDistribution { probs: d.probs }
    }
}

impl FiniteDistribution {
    /// Validates and renormalizes `probs`.
    ///
    /// Inputs whose sum is within 1e-12 of one are rescaled to sum to one
    /// exactly (up to rounding); anything further off is rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::AlphabetTooSmall(probs.len()));
        }
        if probs.len() > MAX_ALPHABET {
            return Err(Error::AlphabetTooLarge(probs.len()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidProbability);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        // leave sums that are already one up to rounding untouched so that
        // serialization round trips are exact
        let probs = if (sum - 1.0).abs() > 4.0 * f64::EPSILON {
            probs.into_iter().map(|p| p / sum).collect()
        } else {
            probs
        };
        Ok(Self { probs })
    }

    /// Point mass on `symbol` over an alphabet of `size` symbols.
    pub fn point_mass(size: usize, symbol: usize) -> Result<Self> {
        if symbol >= size {
            return Err(Error::InvalidParameters(format!(
                "symbol {symbol} outside alphabet of size {size}"
            )));
        }
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Self::new(probs)
    }

    /// Binary distribution `[1 - p, p]`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability);
        }
        Self::new(vec![1.0 - p, p])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    /// True when `self(x) = 0` wherever `reference(x) = 0`.
    pub fn is_absolutely_continuous_wrt(&self, reference: &Self) -> bool {
        self.first_ac_violation(reference).is_none()
    }

    fn first_ac_violation(&self, reference: &Self) -> Option<usize> {
        self.probs
            .iter()
            .zip(&reference.probs)
            .position(|(&p, &q)| q == 0.0 && p > 0.0)
    }
}

fn check_alphabet(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

fn check_ac(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<()> {
    match p.first_ac_violation(q) {
        Some(symbol) => Err(Error::AbsoluteContinuityViolation { symbol }),
        None => Ok(()),
    }
}

/// Relative entropy `D(p || q)` in nats.
pub fn kl_divergence(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    check_alphabet(p, q)?;
    check_ac(p, q)?;
    let d: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum();
    Ok(d.max(0.0))
}

/// Total variation distance `(1/2) sum |p - q|`.
pub fn tv_distance(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    check_alphabet(p, q)?;
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Chi-squared distance `sum (p - q)^2 / q`.
pub fn chi_squared(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    check_alphabet(p, q)?;
    check_ac(p, q)?;
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .filter(|(_, &qi)| qi > 0.0)
        .map(|(&pi, &qi)| (pi - qi).powi(2) / qi)
        .sum())
}

/// Convex combination `(1 - alpha) q0 + alpha q1`.
pub fn mixture(
    q0: &FiniteDistribution,
    q1: &FiniteDistribution,
    alpha: f64,
) -> Result<FiniteDistribution> {
    check_alphabet(q0, q1)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRangeAlpha(alpha));
    }
    if alpha == 0.0 {
        return Ok(q0.clone());
    }
    if alpha == 1.0 {
        return Ok(q1.clone());
    }
    let probs = q0
        .probs
        .iter()
        .zip(&q1.probs)
        .map(|(&a, &b)| if a == b { a } else { (1.0 - alpha) * a + alpha * b })
        .collect();
    FiniteDistribution::new(probs)
}

/// Output laws of a binary-input channel for inputs `x0` and `x1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryInputChannel {
    pub d0: FiniteDistribution,
    pub d1: FiniteDistribution,
}

impl BinaryInputChannel {
    pub fn new(d0: FiniteDistribution, d1: FiniteDistribution) -> Result<Self> {
        check_alphabet(&d0, &d1)?;
        Ok(Self { d0, d1 })
    }

    /// Output law for input bit `x` (0 is the innocent symbol).
    pub fn law(&self, x: u8) -> &FiniteDistribution {
        if x == 0 {
            &self.d0
        } else {
            &self.d1
        }
    }

    pub fn output_size(&self) -> usize {
        self.d0.len()
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn bsc(crossover: f64) -> Result<Self> {
        Self::new(
            FiniteDistribution::bernoulli(crossover)?,
            FiniteDistribution::bernoulli(1.0 - crossover)?,
        )
    }
}

/// Bob-side laws `P0, P1` and Willie-side laws `Q0, Q1` of a binary-input DMC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDmcPair")]
pub struct DmcPair {
    pub p0: FiniteDistribution,
    pub p1: FiniteDistribution,
    pub q0: FiniteDistribution,
    pub q1: FiniteDistribution,
}

#[derive(Deserialize)]
struct RawDmcPair {
    p0: FiniteDistribution,
    p1: FiniteDistribution,
    q0: FiniteDistribution,
    q1: FiniteDistribution,
}

impl TryFrom<RawDmcPair> for DmcPair {
    type Error = Error;

    fn try_from(raw: RawDmcPair) -> Result<Self> {
        Self::new(raw.p0, raw.p1, raw.q0, raw.q1)
    }
}

impl DmcPair {
    pub fn new(
        p0: FiniteDistribution,
        p1: FiniteDistribution,
        q0: FiniteDistribution,
        q1: FiniteDistribution,
    ) -> Result<Self> {
        check_alphabet(&p0, &p1)?;
        check_alphabet(&q0, &q1)?;
        check_ac(&p1, &p0)?;
        check_ac(&q1, &q0)?;
        if tv_distance(&q0, &q1)? <= 1e-12 {
            return Err(Error::IndistinguishableWillieOutputs);
        }
        Ok(Self { p0, p1, q0, q1 })
    }

    /// Bob and Willie both observe binary symmetric channels.
    pub fn bsc(bob_crossover: f64, willie_crossover: f64) -> Result<Self> {
        let bob = BinaryInputChannel::bsc(bob_crossover)?;
        let willie = BinaryInputChannel::bsc(willie_crossover)?;
        Self::new(bob.d0, bob.d1, willie.d0, willie.d1)
    }

    pub fn bob(&self) -> BinaryInputChannel {
        BinaryInputChannel {
            d0: self.p0.clone(),
            d1: self.p1.clone(),
        }
    }

    pub fn willie(&self) -> BinaryInputChannel {
        BinaryInputChannel {
            d0: self.q0.clone(),
            d1: self.q1.clone(),
        }
    }

    /// `chi2(Q1 || Q0)`.
    pub fn willie_chi2(&self) -> f64 {
        chi_squared(&self.q1, &self.q0).expect("validated at construction")
    }

    /// `D(P1 || P0)`.
    pub fn bob_kl(&self) -> f64 {
        kl_divergence(&self.p1, &self.p0).expect("validated at construction")
    }

    /// `D(Q1 || Q0)`.
    pub fn willie_kl(&self) -> f64 {
        kl_divergence(&self.q1, &self.q0).expect("validated at construction")
    }
}

/// Noise variances of Bob's and Willie's AWGN channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAwgnPair")]
pub struct AwgnPair {
    pub sigma_b2: f64,
    pub sigma_w2: f64,
}

#[derive(Deserialize)]
struct RawAwgnPair {
    sigma_b2: f64,
    sigma_w2: f64,
}

impl TryFrom<RawAwgnPair> for AwgnPair {
    type Error = Error;

    fn try_from(raw: RawAwgnPair) -> Result<Self> {
        Self::new(raw.sigma_b2, raw.sigma_w2)
    }
}

impl AwgnPair {
    pub fn new(sigma_b2: f64, sigma_w2: f64) -> Result<Self> {
        for v in [sigma_b2, sigma_w2] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonPositiveVariance(v));
            }
        }
        Ok(Self { sigma_b2, sigma_w2 })
    }
}

/// Either channel family, as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Dmc(DmcPair),
    Awgn(AwgnPair),
}

fn check_variance(sigma2: f64) -> Result<()> {
    if sigma2.is_finite() && sigma2 > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveVariance(sigma2))
    }
}

/// `ln cosh(x)` without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// Density of `N(mean, sigma2)` at `z`.
pub fn gaussian_density(z: f64, mean: f64, sigma2: f64) -> f64 {
    let d = z - mean;
    (-d * d / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt()
}

/// Density of `N(a, sigma2)/2 + N(-a, sigma2)/2` at `z`.
pub fn gaussian_mixture_density(z: f64, a: f64, sigma2: f64) -> Result<f64> {
    check_variance(sigma2)?;
    Ok(0.5 * gaussian_density(z, a, sigma2) + 0.5 * gaussian_density(z, -a, sigma2))
}

/// `A(z) = exp(-a^2 / (2 sigma2)) cosh(a z / sigma2) - 1`, the normalized
/// density excess of the symmetric Gaussian mixture over `N(0, sigma2)`.
pub fn gaussian_llr_weight(z: f64, a: f64, sigma2: f64) -> Result<f64> {
    check_variance(sigma2)?;
    Ok(gaussian_log_ratio(z, a, sigma2).exp_m1())
}

/// `ln(q_rho(z) / q_0(z))` for the symmetric mixture with amplitude `a`.
pub(crate) fn gaussian_log_ratio(z: f64, a: f64, sigma2: f64) -> f64 {
    -a * a / (2.0 * sigma2) + ln_cosh(a * z / sigma2)
}

/// Per-symbol weight `(Q1 - Q0) / Q0` (discrete) or its Gaussian analogue.
#[derive(Debug, Clone, PartialEq)]
pub enum LlrWeight {
    Discrete { values: Vec<f64>, reference: FiniteDistribution, chi2: f64 },
    Gaussian { a: f64, sigma2: f64 },
}

impl LlrWeight {
    /// `Psi(z) = (Q1(z) - Q0(z)) / Q0(z)`; symbols with `Q0(z) = 0` get 0
    /// (they never occur under either hypothesis).
    pub fn discrete(q0: &FiniteDistribution, q1: &FiniteDistribution) -> Result<Self> {
        let chi2 = chi_squared(q1, q0)?;
        let values = q0
            .probs()
            .iter()
            .zip(q1.probs())
            .map(|(&a, &b)| if a > 0.0 { (b - a) / a } else { 0.0 })
            .collect();
        Ok(Self::Discrete {
            values,
            reference: q0.clone(),
            chi2,
        })
    }

    pub fn gaussian(a: f64, sigma2: f64) -> Result<Self> {
        check_variance(sigma2)?;
        Ok(Self::Gaussian { a, sigma2 })
    }

    pub fn symbol(&self, z: usize) -> f64 {
        match self {
            Self::Discrete { values, .. } => values[z],
            Self::Gaussian { .. } => panic!("Gaussian weight evaluated on a discrete symbol"),
        }
    }

    pub fn real(&self, z: f64) -> f64 {
        match self {
            Self::Gaussian { a, sigma2 } => gaussian_log_ratio(z, *a, *sigma2).exp_m1(),
            Self::Discrete { .. } => panic!("discrete weight evaluated on a real sample"),
        }
    }

    /// `E_{Q0}[weight]`, zero by construction.
    pub fn reference_mean(&self) -> f64 {
        match self {
            Self::Discrete {
                values, reference, ..
            } => values.iter().zip(reference.probs()).map(|(v, p)| v * p).sum(),
            Self::Gaussian { .. } => 0.0,
        }
    }

    /// `E_{Q0}[weight^2]`; equals the chi-squared distance.
    pub fn reference_second_moment(&self) -> f64 {
        match self {
            Self::Discrete {
                values, reference, ..
            } => values.iter().zip(reference.probs()).map(|(v, p)| v * v * p).sum(),
            Self::Gaussian { a, sigma2 } => (a * a / sigma2).cosh() - 1.0,
        }
    }

    /// Chi-squared distance the weight is built from.
    pub fn chi2(&self) -> f64 {
        match self {
            Self::Discrete { chi2, .. } => *chi2,
            Self::Gaussian { a, sigma2 } => (a * a / sigma2).cosh() - 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn d(p: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        assert_eq!(
            FiniteDistribution::new(vec![1.0]),
            Err(Error::AlphabetTooSmall(1))
        );
        assert!(matches!(
            FiniteDistribution::new(vec![0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
        assert_eq!(
            FiniteDistribution::new(vec![1.5, -0.5]),
            Err(Error::InvalidProbability)
        );
        let near = FiniteDistribution::new(vec![0.3, 0.7 + 5e-13]).unwrap();
        assert!((near.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&d(&[0.3, 0.7]), &d(&[0.3, 0.7])).unwrap(), 0.0);
        let kl = kl_divergence(&d(&[0.9, 0.1]), &d(&[0.1, 0.9])).unwrap();
        assert_relative_eq!(kl, 0.8 * 9f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(kl, 1.75778, epsilon = 1e-5);
        let err = kl_divergence(&d(&[0.5, 0.5, 0.0]), &d(&[1.0, 0.0, 0.0]));
        assert_eq!(err, Err(Error::AbsoluteContinuityViolation { symbol: 1 }));
        assert!(matches!(
            kl_divergence(&d(&[0.5, 0.5]), &d(&[0.2, 0.3, 0.5])),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn tv_examples() {
        let p = d(&[0.2, 0.8]);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), 1.0);
        assert_relative_eq!(
            tv_distance(&d(&[0.9, 0.1]), &d(&[0.1, 0.9])).unwrap(),
            0.8,
            epsilon = 1e-15
        );
    }

    #[test]
    fn chi_squared_examples() {
        let p = d(&[0.2, 0.8]);
        assert_eq!(chi_squared(&p, &p).unwrap(), 0.0);
        assert_relative_eq!(
            chi_squared(&d(&[0.9, 0.1]), &d(&[0.1, 0.9])).unwrap(),
            64.0 / 9.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            chi_squared(&d(&[0.6, 0.4]), &d(&[0.5, 0.5])).unwrap(),
            0.04,
            epsilon = 1e-15
        );
        assert!(matches!(
            chi_squared(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])),
            Err(Error::AbsoluteContinuityViolation { .. })
        ));
    }

    #[test]
    fn mixture_examples() {
        let q0 = d(&[0.9, 0.1]);
        let q1 = d(&[0.1, 0.9]);
        assert_eq!(mixture(&q0, &q1, 0.0).unwrap(), q0);
        assert_eq!(mixture(&q0, &q1, 1.0).unwrap(), q1);
        let half = mixture(&q0, &q1, 0.5).unwrap();
        assert_relative_eq!(half.prob(0), 0.5, epsilon = 1e-15);
        assert_eq!(mixture(&q0, &q1, 1.5), Err(Error::OutOfRangeAlpha(1.5)));
    }

    #[test]
    fn gaussian_mixture_examples() {
        let plain = gaussian_mixture_density(0.3, 0.0, 2.0).unwrap();
        assert_relative_eq!(plain, gaussian_density(0.3, 0.0, 2.0), epsilon = 1e-15);
        let at_zero = gaussian_mixture_density(0.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            at_zero,
            (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(at_zero, 0.24197, epsilon = 1e-5);
        for z in [0.1, 0.7, 2.5] {
            assert_relative_eq!(
                gaussian_mixture_density(z, 0.8, 0.5).unwrap(),
                gaussian_mixture_density(-z, 0.8, 0.5).unwrap(),
                epsilon = 1e-15
            );
        }
        assert_eq!(
            gaussian_mixture_density(0.0, 1.0, 0.0),
            Err(Error::NonPositiveVariance(0.0))
        );
    }

    #[test]
    fn gaussian_weight_examples() {
        for z in [-3.0, 0.0, 1.2] {
            assert_eq!(gaussian_llr_weight(z, 0.0, 1.0).unwrap(), 0.0);
        }
        let w0 = gaussian_llr_weight(0.0, 0.7, 1.3).unwrap();
        assert_relative_eq!(w0, (-0.49f64 / 2.6).exp() - 1.0, epsilon = 1e-14);
        assert!(w0 < 0.0);
        for z in [-2.0, 0.3, 4.0] {
            let (a, s2) = (0.9, 1.7);
            let ratio = gaussian_mixture_density(z, a, s2).unwrap() / gaussian_density(z, 0.0, s2);
            assert_relative_eq!(
                gaussian_llr_weight(z, a, s2).unwrap(),
                ratio - 1.0,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn gaussian_weight_moments_by_sampling() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let (a, sigma2) = (0.8f64, 1.0f64);
        let normal = Normal::new(0.0, sigma2.sqrt()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let w = gaussian_llr_weight(normal.sample(&mut rng), a, sigma2).unwrap();
            s1 += w;
            s2 += w * w;
        }
        let mean = s1 / draws as f64;
        let second = s2 / draws as f64;
        let chi2 = (a * a / sigma2).cosh() - 1.0;
        // weight variance equals chi2, so the sample mean has sd sqrt(chi2 / draws)
        assert!(mean.abs() < 5.0 * (chi2 / draws as f64).sqrt());
        assert!((second - chi2).abs() / chi2 < 0.02);
        let w = LlrWeight::gaussian(a, sigma2).unwrap();
        assert_relative_eq!(w.reference_second_moment(), chi2, epsilon = 1e-15);
    }

    #[test]
    fn discrete_weight_moments() {
        let q0 = d(&[0.9, 0.1]);
        let q1 = d(&[0.1, 0.9]);
        let w = LlrWeight::discrete(&q0, &q1).unwrap();
        assert_relative_eq!(w.symbol(0), -8.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(w.symbol(1), 8.0, epsilon = 1e-14);
        assert!(w.reference_mean().abs() < 1e-10);
        assert_relative_eq!(w.reference_second_moment(), 64.0 / 9.0, epsilon = 1e-10);
    }

    #[test]
    fn dmc_pair_validation() {
        assert_eq!(
            DmcPair::bsc(0.05, 0.5).map(|_| ()),
            Err(Error::IndistinguishableWillieOutputs)
        );
        let p = d(&[1.0, 0.0]);
        let q = d(&[0.5, 0.5]);
        assert!(matches!(
            DmcPair::new(p.clone(), q.clone(), q.clone(), d(&[0.1, 0.9])),
            Err(Error::AbsoluteContinuityViolation { .. })
        ));
        let pair = DmcPair::bsc(0.05, 0.1).unwrap();
        assert_relative_eq!(pair.willie_chi2(), 64.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let pair = DmcPair::bsc(0.05, 0.1).unwrap();
        let json = serde_json::to_string(&ChannelSpec::Dmc(pair.clone())).unwrap();
        assert!(json.contains("\"probs\""));
        let back: ChannelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ChannelSpec::Dmc(pair));
        let awgn: ChannelSpec = serde_json::from_str(r#"{"sigma_b2":1.0,"sigma_w2":4.0}"#).unwrap();
        assert_eq!(awgn, ChannelSpec::Awgn(AwgnPair::new(1.0, 4.0).unwrap()));
        let bad: std::result::Result<FiniteDistribution, _> =
            serde_json::from_str(r#"{"probs":[0.2,0.2]}"#);
        assert!(bad.is_err());
    }
}
