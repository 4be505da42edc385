"""Smoke test for the covertslot extension.

Build and install first:  pip install ./crates/python
Run with:  python -m pytest python/smoke_test.py
"""

import json
import math

import pytest

import covertslot as cs


def test_divergences():
    p, q = [0.5, 0.5], [0.9, 0.1]
    kl = cs.kl_divergence(p, q)
    assert kl == pytest.approx(0.5 * math.log(0.5 / 0.9) + 0.5 * math.log(0.5 / 0.1))
    assert cs.tv_distance(p, q) <= math.sqrt(kl / 2)
    assert cs.chi_squared(q, q) == 0.0
    with pytest.raises(ValueError):
        cs.kl_divergence([0.5, 0.5], [1.0])


def test_bounds_and_parameters():
    pair = cs.DmcPair.bsc(0.05, 0.1)
    assert pair.willie_chi2() == pytest.approx(64 / 9)
    lower, upper = pair.capacity_bounds()
    assert upper / lower == pytest.approx(math.sqrt(2), rel=1e-12)
    assert cs.AwgnPair(1.0, 4.0).capacity_bounds() == pytest.approx((2 * math.sqrt(2), 4.0))

    alpha = cs.choose_alpha_n(10_000, 100, 0.5, pair.willie_chi2())
    _, exp_form = cs.dmc_slot_kl_bound(10_000, 100, alpha, pair.willie_chi2())
    assert exp_form == pytest.approx(2 * 0.25 - 4 / 100, rel=1e-10)

    kl, tv = pair.exact_mixture_divergence(2, 2, 0.5)
    assert kl <= cs.dmc_slot_kl_bound(2, 2, 0.5, pair.willie_chi2())[0]
    assert tv <= math.sqrt(kl / 2)


def test_codebook_link_and_covertness():
    pair = cs.DmcPair.bsc(0.01, 0.1)
    c = cs.Codebook.bernoulli(0.3, 8, 200, seed=1)
    assert len(c) == 8 and c.n == 200
    assert set(c.codeword(0)) <= {0.0, 1.0}
    p_e, se = c.simulate_dmc(pair, slots=4, gamma=5.0, trials=200, seed=2)
    assert p_e < 0.05
    covert = cs.Codebook.bernoulli(0.02, 8, 200, seed=6)
    tv, tv_se = covert.tv_estimate_dmc(pair, slots=4, trials=2000, seed=3)
    assert 0.0 <= tv <= 1.0 and tv_se > 0

    b = cs.Codebook.bpsk(0.5, 4, 50, seed=4)
    assert b.power(0) == pytest.approx(50 * 0.25)
    assert cs.Codebook.constant_weight(3, 20, 5, seed=5).power(2) == 5


def test_experiment_runners():
    manifest = """
n_list = [1000]
slot_rule = { fixed = 10 }
delta = 0.5
trials = 200
[channel]
sigma_b2 = 0.25
sigma_w2 = 1.0
"""
    report = json.loads(cs.bounds_report(manifest))
    assert report["rows"][0]["status"] == "ok"
    csv = cs.run_experiment("sweep", manifest)
    assert csv.splitlines()[0].startswith("n,L,log_M")
    drop_runtime = lambda text: [line.rsplit(",", 1)[0] for line in text.splitlines()]
    assert drop_runtime(csv) == drop_runtime(cs.run_experiment("sweep", manifest))
    with pytest.raises(ValueError):
        cs.run_experiment("nope", manifest)
