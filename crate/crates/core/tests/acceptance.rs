//! Acceptance gate: one pass/fail line per criterion.
//!
//! Every criterion produces a CSV table of its data; criterion 10 reruns
//! all of them and compares the bytes with timing columns removed.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use covertslot_core::bounds;
use covertslot_core::cli::commands::{self, TIMING_COLUMNS};
use covertslot_core::cli::output::{num, Table};
use covertslot_core::cli::ExperimentConfig;
use covertslot_core::codec::ChannelModel;
use covertslot_core::info::{AwgnPair, DmcPair};
use covertslot_core::{adversary, oracle, rng};
use rand::Rng;

const SEED: u64 = 20260107;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).expect("config")
}

struct Outcome {
    pass: bool,
    detail: String,
    tables: Vec<Table>,
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.pass &= took < limit;
    o.detail = format!("{} [{:.1}s, limit {}s]", o.detail, took.as_secs_f64(), limit.as_secs());
    o
}

fn bytes(tables: &[Table]) -> Vec<Vec<u8>> {
    tables.iter().map(|t| t.without(TIMING_COLUMNS).to_bytes()).collect()
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    t.column(name).expect("column").iter().map(|s| s.parse().expect("number")).collect()
}

/// Slot-mixture KL against both forms of its bound, on the oracle grid.
fn criterion_1(report: &commands::OracleReport) -> Outcome {
    let checks = report.table.column("check").unwrap();
    let pass = report.table.column("pass").unwrap();
    let rows: Vec<usize> = (0..checks.len())
        .filter(|&k| checks[k] == "kl_exact_form" || checks[k] == "kl_exp_form")
        .collect();
    let failed = rows.iter().filter(|&&k| pass[k] != "true").count();
    Outcome {
        pass: failed == 0 && rows.len() == 2 * 3 * 3 * 9 * 20,
        detail: format!("{} of {} grid checks hold", rows.len() - failed, rows.len()),
        tables: vec![report.table.clone()],
    }
}

fn criterion_2() -> Outcome {
    let mut t = Table::new(&["n", "L", "ratio", "kl_hat", "se", "bound"]);
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for (i, &(n, l)) in [(1u64, 2u64), (2, 2), (3, 4)].iter().enumerate() {
        for (j, &ratio) in [0.25, 0.5, 1.0].iter().enumerate() {
            let seed = rng::derive(SEED, (3 * i + j) as u64);
            let (kl, se) = oracle::mc_kl_awgn(n as usize, l as usize, ratio, 1.0, 1_000_000, seed).unwrap();
            let bound = bounds::awgn_slot_kl_bound(n, l, ratio, 1.0).unwrap().exact_form.value_or_inf();
            ok &= kl <= bound + 3.0 * se;
            worst = worst.max((kl - bound) / se);
            t.push(vec![n.to_string(), l.to_string(), num(ratio), num(kl), num(se), num(bound)]);
        }
    }
    Outcome {
        pass: ok,
        detail: format!("max (estimate - bound) / se = {worst:.2} (limit 3)"),
        tables: vec![t],
    }
}

fn criterion_3() -> Outcome {
    let mut r = rng::stream(SEED, 3);
    let mut t = Table::new(&["kind", "n", "L", "delta", "exp_form", "budget"]);
    let mut worst = 0f64;
    let mut drawn = 0;
    while drawn < 50 {
        let n: u64 = r.random_range(20..100_000);
        let l: u64 = r.random_range(2..1_000_000);
        let delta: f64 = r.random_range(0.05..0.95);
        let chi2: f64 = r.random_range(0.01..10.0);
        let sigma_w2: f64 = r.random_range(0.1..10.0);
        let (Ok(alpha), Ok(rho)) = (
            bounds::choose_alpha_n(n, l, delta, chi2),
            bounds::choose_rho_n(n, l, delta, sigma_w2),
        ) else {
            continue;
        };
        drawn += 1;
        let budget = bounds::covertness_budget(n, delta);
        let dmc = bounds::dmc_slot_kl_bound(n, l, alpha, chi2).unwrap().exp_form.value_or_inf();
        let awgn = bounds::awgn_slot_kl_bound(n, l, rho, sigma_w2).unwrap().exp_form.value_or_inf();
        for (kind, v) in [("dmc", dmc), ("awgn", awgn)] {
            worst = worst.max((v - budget).abs());
            t.push(vec![kind.into(), n.to_string(), l.to_string(), num(delta), num(v), num(budget)]);
        }
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("max |bound - budget| = {worst:.2e} over 50 triples (limit 1e-10)"),
        tables: vec![t],
    }
}

fn criterion_4() -> Outcome {
    let mut r = rng::stream(SEED, 4);
    let mut t = Table::new(&["kind", "lower", "upper"]);
    let mut worst = 0f64;
    let mut dmc = 0;
    while dmc < 100 {
        let b: f64 = r.random_range(0.0..0.45);
        let w: f64 = r.random_range(0.01..0.49);
        let Ok(pair) = DmcPair::bsc(b, w) else { continue };
        let Ok(c) = bounds::dmc_capacity_bounds(&pair) else { continue };
        if c.lower <= 0.0 {
            continue;
        }
        dmc += 1;
        worst = worst.max((c.upper / c.lower - 2f64.sqrt()).abs());
        t.push(vec!["dmc".into(), num(c.lower), num(c.upper)]);
    }
    for _ in 0..100 {
        let sigma_b2: f64 = r.random_range(0.01..10.0);
        let pair = AwgnPair::new(sigma_b2, sigma_b2 * r.random_range(1.01..20.0)).unwrap();
        let c = bounds::awgn_capacity_bounds(&pair).unwrap();
        worst = worst.max((c.upper / c.lower - 2f64.sqrt()).abs());
        t.push(vec!["awgn".into(), num(c.lower), num(c.upper)]);
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max |upper / lower - sqrt 2| = {worst:.2e} (limit 1e-12)"),
        tables: vec![t],
    }
}

/// Every random deterministic test has `alpha + beta >= 1 - V`.
fn criterion_5(report: &commands::OracleReport) -> Outcome {
    let checks = report.table.column("check").unwrap();
    let pass = report.table.column("pass").unwrap();
    let rows: Vec<usize> = (0..checks.len()).filter(|&k| checks[k] == "testing").collect();
    let failed = rows.iter().filter(|&&k| pass[k] != "true").count();
    Outcome {
        pass: failed == 0 && rows.len() == 10,
        detail: format!("{} of {} instances hold for all 20 tests", rows.len() - failed, rows.len()),
        tables: vec![],
    }
}

fn criterion_6(seed: u64) -> Outcome {
    let mut t = Table::new(&["instance", "codewords", "exact_tv", "tv_hat", "se"]);
    let mut worst = 0f64;
    for (i, inst) in commands::testing_instances(seed, 10).unwrap().iter().enumerate() {
        let exact = oracle::exact_tv(&oracle::exact_induced_law(inst).unwrap(), &oracle::exact_null_law(inst).unwrap()).unwrap();
        let codebook = inst.codebook().unwrap();
        let willie = ChannelModel::Dmc(inst.channel().willie());
        let (tv, se) =
            adversary::mc_tv_estimate(codebook, inst.slots(), &willie, 1_000_000, rng::derive(SEED, 60 + i as u64)).unwrap();
        // an all-zero codebook gives tv_hat = se = 0 against ~1e-17 of
        // enumeration roundoff
        let diff = (tv - exact).abs();
        worst = worst.max(if diff <= 1e-12 { 0.0 } else { diff / se });
        t.push(vec![i.to_string(), codebook.len().to_string(), num(exact), num(tv), num(se)]);
    }
    Outcome {
        pass: worst <= 3.0,
        detail: format!("max |tv_hat - exact| / se = {worst:.2} over 10 instances (limit 3)"),
        tables: vec![t],
    }
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    let mut tables = Vec::new();
    for (name, file) in [("dmc", "dmc_desk.toml"), ("awgn", "awgn_desk.toml")] {
        let start = Instant::now();
        let run = commands::simulate(&config(file)).unwrap();
        assert!(run.error.is_none());
        let p_e = column(&run.table, "p_e_hat")[0];
        let tv = column(&run.table, "tv_hat")[0];
        let tv_se = column(&run.table, "tv_se")[0];
        let took = start.elapsed();
        ok &= p_e < 0.05 && tv <= 0.5 + 3.0 * tv_se && took < Duration::from_secs(600);
        details.push(format!(
            "{name}: p_e = {p_e} (< 0.05), tv = {tv:.4} +- {tv_se:.4} (<= 0.5 + 3 se), {:.1}s",
            took.as_secs_f64()
        ));
        tables.push(run.table);
    }
    Outcome {
        pass: ok,
        detail: details.join("; "),
        tables,
    }
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    let mut tables = Vec::new();
    for (name, file) in [("dmc", "converse_dmc.toml"), ("awgn", "converse_awgn.toml")] {
        let run = commands::detect(&config(file)).unwrap();
        assert!(run.error.is_none());
        let above: Vec<_> = run.meta.iter().filter(|m| m.branch == "above").collect();
        assert_eq!(above.len(), 3);
        let sums: Vec<f64> = above.iter().map(|m| m.roc.sum()).collect();
        let decreasing = sums.windows(2).all(|w| w[1] < w[0]);
        let fa_ok = above.iter().all(|m| m.roc.false_alarm <= 3.0 * (m.slots as f64).powf(-0.2));
        ok &= decreasing && fa_ok;
        details.push(format!(
            "{name}: sums {:.4} > {:.4} > {:.4} ({decreasing}), false alarm within 3 L^-0.2 ({fa_ok})",
            sums[0], sums[1], sums[2]
        ));
        tables.push(run.table);
    }
    Outcome {
        pass: ok,
        detail: details.join("; "),
        tables,
    }
}

fn criterion_9() -> Outcome {
    let out = commands::sweep(&config("awgn_sweep.toml")).unwrap();
    assert!(out.run.error.is_none());
    let good: Vec<_> = out.run.meta.iter().filter(|m| m.reliable_and_covert).collect();
    let last = good.iter().max_by_key(|m| m.n).expect("a certified point");
    let largest = out.run.meta.iter().map(|m| m.n).max().unwrap();
    let thr = last.normalized_throughput.unwrap();
    let gap = (thr - out.target).abs() / out.target;
    let below = out
        .run
        .meta
        .iter()
        .filter_map(|m| m.normalized_throughput)
        .all(|t| t < out.capacity.upper);
    Outcome {
        pass: last.n == largest && gap <= 0.10 && below,
        detail: format!(
            "throughput {thr:.4} at n = {} vs target {:.4} (gap {:.1}%, limit 10%), below {} everywhere ({below})",
            last.n,
            out.target,
            100.0 * gap,
            out.capacity.upper
        ),
        tables: vec![out.run.table],
    }
}

fn run_all() -> Vec<Outcome> {
    let oracle_cfg = config("oracle.toml");
    let start = Instant::now();
    let report = commands::oracle_check(&oracle_cfg).unwrap();
    let grid_time = start.elapsed();
    let mut c1 = criterion_1(&report);
    c1.pass &= grid_time < Duration::from_secs(10);
    c1.detail = format!("{} [{:.1}s, limit 10s]", c1.detail, grid_time.as_secs_f64());
    let mut c5 = criterion_5(&report);
    c5.pass &= grid_time < Duration::from_secs(30);
    c5.detail = format!("{} [{:.1}s, limit 30s]", c5.detail, grid_time.as_secs_f64());
    vec![
        c1,
        timed(Duration::from_secs(60), criterion_2),
        timed(Duration::from_secs(1), criterion_3),
        timed(Duration::from_secs(1), criterion_4),
        c5,
        timed(Duration::from_secs(300), || criterion_6(oracle_cfg.master_seed)),
        timed(Duration::from_secs(1200), criterion_7),
        timed(Duration::from_secs(600), criterion_8),
        timed(Duration::from_secs(900), criterion_9),
    ]
}

fn main() {
    let first = run_all();
    let mut failed = Vec::new();
    for (k, o) in first.iter().enumerate() {
        println!("criterion {}: {} {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(k + 1);
        }
    }
    let second = run_all();
    let mut identical = 0;
    let mut total = 0;
    for (a, b) in first.iter().zip(&second) {
        for (x, y) in bytes(&a.tables).iter().zip(bytes(&b.tables)) {
            total += 1;
            identical += (*x == y) as usize;
        }
    }
    let det = identical == total;
    println!(
        "criterion 10: {} {identical} of {total} CSV tables byte-identical on rerun",
        if det { "PASS" } else { "FAIL" }
    );
    if !det {
        failed.push(10);
    }
    if !failed.is_empty() {
        eprintln!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all 10 criteria pass");
}
