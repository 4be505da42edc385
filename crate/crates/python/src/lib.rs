//! Python bindings: divergences, bounds, codebooks, link simulation,
//! covertness estimates and the experiment runners.

use covertslot_core::bounds::{self, Reference, SlotKlBound};
use covertslot_core::cli::{commands, ExperimentConfig};
use covertslot_core::codec::{self, ChannelModel, CodebookKind, DecoderConfig, LinkScenario};
use covertslot_core::info::{self, FiniteDistribution};
use covertslot_core::{adversary, oracle, Error};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dist(p: Vec<f64>) -> PyResult<FiniteDistribution> {
    FiniteDistribution::new(p).map_err(err)
}

fn forms(b: SlotKlBound) -> (f64, f64) {
    (b.exact_form.value_or_inf(), b.exp_form.value_or_inf())
}

#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    info::kl_divergence(&dist(p)?, &dist(q)?).map_err(err)
}

#[pyfunction]
fn tv_distance(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    info::tv_distance(&dist(p)?, &dist(q)?).map_err(err)
}

#[pyfunction]
fn chi_squared(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    info::chi_squared(&dist(p)?, &dist(q)?).map_err(err)
}

/// `(exact_form, exp_form)`; overflow is reported as infinity.
#[pyfunction]
fn dmc_slot_kl_bound(n: u64, slots: u64, alpha: f64, chi2: f64) -> PyResult<(f64, f64)> {
    bounds::dmc_slot_kl_bound(n, slots, alpha, chi2).map(forms).map_err(err)
}

#[pyfunction]
fn awgn_slot_kl_bound(n: u64, slots: u64, rho: f64, sigma_w2: f64) -> PyResult<(f64, f64)> {
    bounds::awgn_slot_kl_bound(n, slots, rho, sigma_w2).map(forms).map_err(err)
}

#[pyfunction]
fn choose_alpha_n(n: u64, slots: u64, delta: f64, chi2: f64) -> PyResult<f64> {
    bounds::choose_alpha_n(n, slots, delta, chi2).map_err(err)
}

#[pyfunction]
fn choose_rho_n(n: u64, slots: u64, delta: f64, sigma_w2: f64) -> PyResult<f64> {
    bounds::choose_rho_n(n, slots, delta, sigma_w2).map_err(err)
}

/// Bob's and Willie's output laws for a binary-input DMC.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct DmcPair(info::DmcPair);

#[pymethods]
impl DmcPair {
    #[new]
    fn new(p0: Vec<f64>, p1: Vec<f64>, q0: Vec<f64>, q1: Vec<f64>) -> PyResult<Self> {
        info::DmcPair::new(dist(p0)?, dist(p1)?, dist(q0)?, dist(q1)?).map(Self).map_err(err)
    }

    #[staticmethod]
    fn bsc(bob_crossover: f64, willie_crossover: f64) -> PyResult<Self> {
        info::DmcPair::bsc(bob_crossover, willie_crossover).map(Self).map_err(err)
    }

    fn willie_chi2(&self) -> f64 {
        self.0.willie_chi2()
    }

    /// `(lower, upper)` covert capacity bounds.
    fn capacity_bounds(&self) -> PyResult<(f64, f64)> {
        bounds::dmc_capacity_bounds(&self.0).map(|c| (c.lower, c.upper)).map_err(err)
    }

    fn key_throughput(&self) -> f64 {
        bounds::key_throughput(&self.0)
    }

    /// Exact `(KL, TV)` of the ideal slot mixture against pure noise, by
    /// enumeration (tiny `n L` only).
    fn exact_mixture_divergence(&self, n: usize, slots: usize, alpha: f64) -> PyResult<(f64, f64)> {
        let inst = oracle::ExactInstance::mixture(n, slots, self.0.clone(), alpha).map_err(err)?;
        let p = oracle::exact_mixture_law(&inst).map_err(err)?;
        let q = oracle::exact_null_law(&inst).map_err(err)?;
        Ok((oracle::exact_kl(&p, &q).map_err(err)?, oracle::exact_tv(&p, &q).map_err(err)?))
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct AwgnPair(info::AwgnPair);

#[pymethods]
impl AwgnPair {
    #[new]
    fn new(sigma_b2: f64, sigma_w2: f64) -> PyResult<Self> {
        info::AwgnPair::new(sigma_b2, sigma_w2).map(Self).map_err(err)
    }

    fn capacity_bounds(&self) -> PyResult<(f64, f64)> {
        bounds::awgn_capacity_bounds(&self.0).map(|c| (c.lower, c.upper)).map_err(err)
    }
}

/// A random or constant-weight codebook of `m` codewords of length `n`.
#[pyclass(frozen, skip_from_py_object)]
struct Codebook(codec::Codebook);

#[pymethods]
impl Codebook {
    #[staticmethod]
    fn bernoulli(alpha: f64, m: usize, n: usize, seed: u64) -> PyResult<Self> {
        codec::generate_codebook(CodebookKind::DmcBernoulli { alpha }, m, n, seed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn bpsk(amplitude: f64, m: usize, n: usize, seed: u64) -> PyResult<Self> {
        codec::generate_codebook(CodebookKind::Bpsk { amplitude }, m, n, seed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn constant_weight(m: usize, n: usize, weight: usize, seed: u64) -> PyResult<Self> {
        codec::generate_constant_weight(m, n, weight, seed).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    /// Weight (DMC) or energy (BPSK) of codeword `w`.
    fn power(&self, w: usize) -> PyResult<f64> {
        self.check(w)?;
        Ok(self.0.power(w))
    }

    /// Channel input symbols of codeword `w`.
    fn codeword(&self, w: usize) -> PyResult<Vec<f64>> {
        self.check(w)?;
        let c = self.0.codeword(w);
        Ok((0..c.len()).map(|i| c.symbol(i)).collect())
    }

    /// `(p_e_hat, std_error)` of the threshold decoder over a DMC.
    fn simulate_dmc(&self, pair: &DmcPair, slots: usize, gamma: f64, trials: u64, seed: u64) -> PyResult<(f64, f64)> {
        self.simulate(ChannelModel::Dmc(pair.0.bob()), Reference::Mixture, slots, gamma, trials, seed)
    }

    /// `(p_e_hat, std_error)` of the threshold decoder over Bob's AWGN channel.
    fn simulate_awgn(&self, pair: &AwgnPair, slots: usize, gamma: f64, trials: u64, seed: u64) -> PyResult<(f64, f64)> {
        let model = ChannelModel::Awgn { sigma2: pair.0.sigma_b2 };
        self.simulate(model, Reference::Pure, slots, gamma, trials, seed)
    }

    /// `(tv_hat, std_error)` of the induced law at Willie against pure noise.
    fn tv_estimate_dmc(&self, pair: &DmcPair, slots: usize, trials: u64, seed: u64) -> PyResult<(f64, f64)> {
        adversary::mc_tv_estimate(&self.0, slots, &ChannelModel::Dmc(pair.0.willie()), trials, seed).map_err(err)
    }

    fn tv_estimate_awgn(&self, pair: &AwgnPair, slots: usize, trials: u64, seed: u64) -> PyResult<(f64, f64)> {
        let willie = ChannelModel::Awgn { sigma2: pair.0.sigma_w2 };
        adversary::mc_tv_estimate(&self.0, slots, &willie, trials, seed).map_err(err)
    }
}

impl Codebook {
    fn check(&self, w: usize) -> PyResult<()> {
        if w < self.0.len() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("codeword {w} out of range")))
        }
    }

    fn simulate(
        &self,
        channel: ChannelModel,
        reference: Reference,
        slots: usize,
        gamma: f64,
        trials: u64,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let s = LinkScenario {
            codebook: self.0.clone(),
            slots,
            channel,
            decoder: DecoderConfig::new(gamma, reference).map_err(err)?,
            strict: false,
        };
        let e = codec::estimate_error_prob(&s, trials, seed).map_err(err)?;
        Ok((e.p_e_hat, e.std_error))
    }
}

/// Bound report of a TOML experiment manifest, as JSON.
#[pyfunction]
fn bounds_report(config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(config).map_err(err)?;
    let r = commands::bounds_report(&cfg).map_err(err)?;
    serde_json::to_string(&r).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs `simulate`, `detect`, `sweep` or `oracle-check` on a TOML manifest
/// and returns the CSV table. Nothing is written to disk.
#[pyfunction]
fn run_experiment(command: &str, config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(config).map_err(err)?;
    let (table, error) = match command {
        "simulate" => {
            let r = commands::simulate(&cfg).map_err(err)?;
            (r.table, r.error)
        }
        "detect" => {
            let r = commands::detect(&cfg).map_err(err)?;
            (r.table, r.error)
        }
        "sweep" => {
            let r = commands::sweep(&cfg).map_err(err)?;
            (r.run.table, r.run.error)
        }
        "oracle-check" => (commands::oracle_check(&cfg).map_err(err)?.table, None),
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    };
    if let Some(e) = error {
        return Err(err(e));
    }
    Ok(String::from_utf8(table.to_bytes()).expect("CSV is UTF-8"))
}

#[pymodule]
fn covertslot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(chi_squared, m)?)?;
    m.add_function(wrap_pyfunction!(dmc_slot_kl_bound, m)?)?;
    m.add_function(wrap_pyfunction!(awgn_slot_kl_bound, m)?)?;
    m.add_function(wrap_pyfunction!(choose_alpha_n, m)?)?;
    m.add_function(wrap_pyfunction!(choose_rho_n, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<DmcPair>()?;
    m.add_class::<AwgnPair>()?;
    m.add_class::<Codebook>()?;
    Ok(())
}
