//! Closed-form bounds, parameter choices and capacity expressions.
//!
//! Quantities that can leave the `f64` range are returned as [`LogValue`]s;
//! their linear value is only materialized when the natural log is at most
//! [`LOG_OVERFLOW`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::{chi_squared, kl_divergence, ln_cosh, mixture, AwgnPair, DmcPair, FiniteDistribution};

/// Natural-log threshold above which linear values are not materialized.
pub const LOG_OVERFLOW: f64 = 700.0;

/// Default converse test margin.
pub const DEFAULT_EPSILON: f64 = 1.2;

/// A non-negative quantity stored by its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    pub fn from_ln(ln: f64) -> Self {
        Self { ln }
    }

    /// Linear value, or `None` when `ln` exceeds [`LOG_OVERFLOW`].
    pub fn value(self) -> Option<f64> {
        (self.ln <= LOG_OVERFLOW).then(|| self.ln.exp())
    }

    /// Linear value saturating at infinity.
    pub fn value_or_inf(self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }

    pub fn overflowed(self) -> bool {
        self.ln > LOG_OVERFLOW
    }
}

/// `ln(e^y - 1)` for `y >= 0`.
fn ln_expm1(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// Slack and margin parameters of the achievability and converse arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct AchievabilityParams {
    pub delta: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
}

impl AchievabilityParams {
    pub fn new(delta: f64, nu1: f64, nu2: f64, delta1: f64, delta2: f64, epsilon: f64) -> Result<Self> {
        let params = Self {
            delta,
            nu1,
            nu2,
            delta1,
            delta2,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    /// Defaults `nu1 = delta1 = 0.25`, `nu2 = delta2 = 0.5`, `epsilon = 1.2`.
    pub fn with_delta(delta: f64) -> Result<Self> {
        Self::new(delta, 0.25, 0.5, 0.25, 0.5, DEFAULT_EPSILON)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::RangeViolation(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(self.epsilon > 1.0 && self.epsilon.is_finite()) {
            return Err(Error::RangeViolation(format!(
                "epsilon = {} must exceed 1",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `xi` with `1 - xi = (1 - delta1)(1 - nu1)`.
    pub fn xi(&self) -> f64 {
        1.0 - self.rate_factor()
    }

    /// `(1 - delta1)(1 - nu1)`.
    pub fn rate_factor(&self) -> f64 {
        (1.0 - self.delta1) * (1.0 - self.nu1)
    }
}

/// Exact and exponential forms of a slot-mixture divergence bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotKlBound {
    pub exact_form: LogValue,
    pub exp_form: LogValue,
}

fn check_dims(n: u64, slots: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::NonPositiveArgument("n"));
    }
    if slots == 0 {
        return Err(Error::NonPositiveArgument("L"));
    }
    Ok(())
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveArgument(name))
    }
}

/// `((1 + alpha^2 chi2)^n - 1) / L` and `e^{n alpha^2 chi2} / L`.
pub fn dmc_slot_kl_bound(n: u64, slots: u64, alpha: f64, chi2: f64) -> Result<SlotKlBound> {
    check_dims(n, slots)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRangeAlpha(alpha));
    }
    check_positive("chi2", chi2)?;
    let x = alpha * alpha * chi2;
    let ln_l = (slots as f64).ln();
    Ok(SlotKlBound {
        exact_form: LogValue::from_ln(ln_expm1(n as f64 * x.ln_1p()) - ln_l),
        exp_form: LogValue::from_ln(n as f64 * x - ln_l),
    })
}

/// `(cosh(rho / sigma_w2)^n - 1) / L` and `e^{n rho^2 / (2 sigma_w2^2)} / L`.
pub fn awgn_slot_kl_bound(n: u64, slots: u64, rho: f64, sigma_w2: f64) -> Result<SlotKlBound> {
    check_dims(n, slots)?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveArgument("rho"));
    }
    if !(sigma_w2 > 0.0 && sigma_w2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma_w2));
    }
    let u = rho / sigma_w2;
    let ln_l = (slots as f64).ln();
    Ok(SlotKlBound {
        exact_form: LogValue::from_ln(ln_expm1(n as f64 * ln_cosh(u)) - ln_l),
        exp_form: LogValue::from_ln(n as f64 * u * u / 2.0 - ln_l),
    })
}

/// Divergence budget `2 delta^2 - 4 / sqrt(n)` left for the slot mixture.
pub fn covertness_budget(n: u64, delta: f64) -> f64 {
    2.0 * delta * delta - 4.0 / (n as f64).sqrt()
}

/// `ln(L (2 delta^2 - 4 / sqrt(n)))`, or an error when it is negative.
fn log_budget(n: u64, slots: u64, delta: f64) -> Result<f64> {
    check_dims(n, slots)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::RangeViolation(format!("delta = {delta} must lie in (0, 1)")));
    }
    let infeasible = Error::CovertnessInfeasible { n, slots, delta };
    let budget = covertness_budget(n, delta);
    if budget <= 0.0 {
        return Err(infeasible);
    }
    let arg = (slots as f64).ln() + budget.ln();
    if arg < 0.0 {
        return Err(infeasible);
    }
    Ok(arg)
}

/// Input bias `alpha_n = sqrt(ln(L (2 delta^2 - 4/sqrt n)) / (n chi2))`.
pub fn choose_alpha_n(n: u64, slots: u64, delta: f64, chi2: f64) -> Result<f64> {
    let arg = log_budget(n, slots, delta)?;
    check_positive("chi2", chi2)?;
    let alpha = (arg / (n as f64 * chi2)).sqrt();
    if alpha >= 1.0 {
        return Err(Error::CovertnessInfeasible { n, slots, delta });
    }
    Ok(alpha)
}

/// Symbol power `rho_n = sqrt(2 sigma_w2^2 ln(L (2 delta^2 - 4/sqrt n)) / n)`.
pub fn choose_rho_n(n: u64, slots: u64, delta: f64, sigma_w2: f64) -> Result<f64> {
    let arg = log_budget(n, slots, delta)?;
    if !(sigma_w2 > 0.0 && sigma_w2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma_w2));
    }
    Ok((2.0 * sigma_w2 * sigma_w2 * arg / n as f64).sqrt())
}

/// Covert capacity bounds in nats per `sqrt(n ln L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `lower = D(P1||P0) / sqrt(chi2(Q1||Q0))`, `upper = sqrt(2) lower`.
pub fn dmc_capacity_bounds(pair: &DmcPair) -> Result<CapacityBounds> {
    let d_bob = pair.bob_kl();
    let d_willie = pair.willie_kl();
    // P1 = P0 gives zero capacity rather than an error
    if d_bob <= d_willie && d_bob > 0.0 {
        return Err(Error::KeylessConditionViolated(format!(
            "D(P1||P0) = {d_bob} does not exceed D(Q1||Q0) = {d_willie}"
        )));
    }
    let lower = d_bob / pair.willie_chi2().sqrt();
    Ok(CapacityBounds {
        lower,
        upper: std::f64::consts::SQRT_2 * lower,
    })
}

/// `lower = sigma_w2 / (sqrt(2) sigma_b2)`, `upper = sigma_w2 / sigma_b2`.
pub fn awgn_capacity_bounds(pair: &AwgnPair) -> Result<CapacityBounds> {
    if pair.sigma_w2 <= pair.sigma_b2 {
        return Err(Error::KeylessConditionViolated(format!(
            "sigma_w2 = {} does not exceed sigma_b2 = {}",
            pair.sigma_w2, pair.sigma_b2
        )));
    }
    let upper = pair.sigma_w2 / pair.sigma_b2;
    Ok(CapacityBounds {
        lower: upper / std::f64::consts::SQRT_2,
        upper,
    })
}

/// Optimal key throughput `(D(Q1||Q0) - D(P1||P0))^+ / sqrt(chi2(Q1||Q0))`.
pub fn key_throughput(pair: &DmcPair) -> f64 {
    (pair.willie_kl() - pair.bob_kl()).max(0.0) / pair.willie_chi2().sqrt()
}

/// Output law used as the denominator of the information density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The mixture `(1 - alpha) W0 + alpha W1`.
    Mixture,
    /// The innocent output law `W0`.
    Pure,
}

/// Moments of the single-letter information density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoDensityMoments {
    pub mean: f64,
    pub second_moment: f64,
    /// Largest `|log W(y|x) / R(y)|` over the support.
    pub abs_max: f64,
}

impl InfoDensityMoments {
    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }
}

/// Exact moments of `log W(Y|X) / R(Y)` with `X ~ Bernoulli(alpha)`.
pub fn info_density_moments_dmc(
    x0_dist: &FiniteDistribution,
    x1_dist: &FiniteDistribution,
    alpha: f64,
    reference: Reference,
) -> Result<InfoDensityMoments> {
    // checks alphabet and x1 << x0
    chi_squared(x1_dist, x0_dist)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRangeAlpha(alpha));
    }
    let r = match reference {
        Reference::Mixture => mixture(x0_dist, x1_dist, alpha)?,
        Reference::Pure => x0_dist.clone(),
    };
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut abs_max: f64 = 0.0;
    for (weight, w) in [(1.0 - alpha, x0_dist), (alpha, x1_dist)] {
        for (&wy, &ry) in w.probs().iter().zip(r.probs()) {
            if wy == 0.0 {
                continue;
            }
            let i = (wy / ry).ln();
            mean += weight * wy * i;
            second += weight * wy * i * i;
            abs_max = abs_max.max(i.abs());
        }
    }
    Ok(InfoDensityMoments {
        mean,
        second_moment: second,
        abs_max,
    })
}

/// `Lambda = sum_y P1(y) ln^2(P1(y) / P0(y))`.
pub fn log_ratio_second_moment(p1: &FiniteDistribution, p0: &FiniteDistribution) -> Result<f64> {
    kl_divergence(p1, p0)?;
    Ok(p1
        .probs()
        .iter()
        .zip(p0.probs())
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln().powi(2))
        .sum())
}

/// Bernstein bound `exp(-t^2 / (2 (sum_second_moments + b t / 3)))`.
pub fn bernstein_tail(t: f64, sum_second_moments: f64, b: f64) -> Result<f64> {
    check_positive("t", t)?;
    check_positive("sum_second_moments", sum_second_moments)?;
    check_positive("b", b)?;
    Ok((-t * t / (2.0 * (sum_second_moments + b * t / 3.0))).exp())
}

/// Chernoff bound `exp(-t^2 / (2 sum_variances))` for Gaussian sums.
pub fn gaussian_sum_tail(t: f64, sum_variances: f64) -> Result<f64> {
    check_positive("t", t)?;
    check_positive("sum_variances", sum_variances)?;
    Ok((-t * t / (2.0 * sum_variances)).exp())
}

/// `exp(-n c^2 / (4 sigma2^2 + 4 sigma2 c))` for `0 < c < n sigma2`.
pub fn chi_square_upper_tail(n: u64, sigma2: f64, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::NonPositiveArgument("n"));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma2));
    }
    if !(c > 0.0 && c < n as f64 * sigma2) {
        return Err(Error::RangeViolation(format!(
            "c = {c} must lie in (0, n sigma2 = {})",
            n as f64 * sigma2
        )));
    }
    let n = n as f64;
    Ok((-n * c * c / (4.0 * sigma2 * sigma2 + 4.0 * sigma2 * c)).exp())
}

/// Log of the change-of-measure factor `E[P_rho^n / P_0^n]` under `P_rho^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangeOfMeasure {
    /// `n ln cosh(rho / sigma_b2)`.
    pub exact: f64,
    /// `n rho^2 / (2 sigma_b2^2)`.
    pub bound: f64,
}

pub fn awgn_change_of_measure_penalty(n: u64, rho: f64, sigma_b2: f64) -> Result<ChangeOfMeasure> {
    if n == 0 {
        return Err(Error::NonPositiveArgument("n"));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::NonPositiveArgument("rho"));
    }
    if !(sigma_b2 > 0.0 && sigma_b2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma_b2));
    }
    let u = rho / sigma_b2;
    Ok(ChangeOfMeasure {
        exact: n as f64 * ln_cosh(u),
        bound: n as f64 * u * u / 2.0,
    })
}

/// Converse weight-test threshold `epsilon sqrt(2 chi2 ln L / n)`.
pub fn dmc_test_threshold(n: u64, slots: u64, epsilon: f64, chi2: f64) -> Result<f64> {
    check_converse(n, slots, epsilon)?;
    check_positive("chi2", chi2)?;
    Ok(epsilon * (2.0 * chi2 * (slots as f64).ln() / n as f64).sqrt())
}

/// Converse power-test threshold `epsilon sqrt(4 sigma_w2^2 ln L / n)`.
pub fn awgn_test_threshold(n: u64, slots: u64, epsilon: f64, sigma_w2: f64) -> Result<f64> {
    check_converse(n, slots, epsilon)?;
    if !(sigma_w2 > 0.0 && sigma_w2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma_w2));
    }
    Ok(epsilon * (4.0 * sigma_w2 * sigma_w2 * (slots as f64).ln() / n as f64).sqrt())
}

fn check_converse(n: u64, slots: u64, epsilon: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::NonPositiveArgument("n"));
    }
    if slots < 2 {
        return Err(Error::RangeViolation(format!("L = {slots} must be at least 2")));
    }
    if !(epsilon > 1.0 && epsilon.is_finite()) {
        return Err(Error::RangeViolation(format!("epsilon = {epsilon} must exceed 1")));
    }
    Ok(())
}

/// Codeword weight separating the converse's low- and high-weight
/// sub-codebooks: `sqrt(2 n ln L / chi2)`.
pub fn converse_weight_threshold(n: u64, slots: u64, chi2: f64) -> Result<f64> {
    check_dims(n, slots)?;
    check_positive("chi2", chi2)?;
    Ok((2.0 * n as f64 * (slots as f64).ln() / chi2).sqrt())
}

/// Codeword power separating the AWGN sub-codebooks:
/// `sqrt(4 sigma_w2^2 n ln L)`.
pub fn converse_power_threshold(n: u64, slots: u64, sigma_w2: f64) -> Result<f64> {
    check_dims(n, slots)?;
    if !(sigma_w2 > 0.0 && sigma_w2.is_finite()) {
        return Err(Error::NonPositiveVariance(sigma_w2));
    }
    Ok((4.0 * sigma_w2 * sigma_w2 * n as f64 * (slots as f64).ln()).sqrt())
}

/// Random-coding bound on the expected TV distance between the
/// codebook-induced output law and its ensemble average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoftCoveringBound {
    /// Information-density threshold.
    pub tau: f64,
    /// Probability that the information density exceeds `tau`.
    pub tail: f64,
    /// `(1/2) sqrt(e^tau / M)`.
    pub residual: f64,
}

impl SoftCoveringBound {
    /// `tau` and `tail` already computed; adds the codebook-size term.
    pub fn new(tau: f64, tail: f64, log_m: f64) -> Self {
        Self {
            tau,
            tail,
            residual: 0.5 * ((tau - log_m) / 2.0).exp(),
        }
    }

    pub fn total(&self) -> f64 {
        (self.tail + self.residual).min(1.0)
    }
}

/// Soft-covering bound with the Bernstein tail of the Willie-side
/// information density (mixture reference).
pub fn dmc_soft_covering(n: u64, willie: &InfoDensityMoments, nu2: f64, log_m: f64) -> Result<SoftCoveringBound> {
    check_positive("mean", willie.mean)?;
    let n = n as f64;
    let tau = (1.0 + nu2) * n * willie.mean;
    // |U_i| <= K + |E U| for the centered increments
    let b = willie.abs_max + willie.mean.abs();
    let tail = bernstein_tail(nu2 * n * willie.mean, n * willie.variance().max(f64::MIN_POSITIVE), b)?;
    Ok(SoftCoveringBound::new(tau, tail, log_m))
}

/// Soft-covering bound with the Gaussian tail of the BPSK information
/// density against `N(0, sigma_w2)`, whose increments are
/// `N(rho / (2 sigma_w2), rho / sigma_w2)`.
pub fn awgn_soft_covering(n: u64, rho: f64, sigma_w2: f64, nu2: f64, log_m: f64) -> Result<SoftCoveringBound> {
    check_positive("rho", rho)?;
    let n = n as f64;
    let mean = rho / (2.0 * sigma_w2);
    let tau = (1.0 + nu2) * n * mean;
    let tail = gaussian_sum_tail(nu2 * n * mean, n * rho / sigma_w2)?;
    Ok(SoftCoveringBound::new(tau, tail, log_m))
}

/// `sqrt(D / 2)` capped at one, from a divergence bound.
pub fn pinsker_tv(kl: LogValue) -> f64 {
    (0.5 * kl.value_or_inf()).sqrt().min(1.0)
}

/// Union-bound remainder `ln(M L e^{-gamma})` of the decoder error
/// analysis, plus an optional change-of-measure log-penalty.
pub fn union_remainder(log_m: f64, slots: u64, gamma: f64, penalty_ln: f64) -> LogValue {
    LogValue::from_ln(log_m + (slots as f64).ln() - gamma + penalty_ln)
}
