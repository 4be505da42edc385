use covertslot_core::codec::{generate_codebook, CodebookKind};
use covertslot_core::info::DmcPair;
use covertslot_core::oracle::{self, ExactInstance};
use covertslot_core::rng;

fn bsc() -> DmcPair {
    DmcPair::bsc(0.05, 0.1).unwrap()
}

fn induced(m: usize, seed: u64) -> ExactInstance {
    let c = generate_codebook(CodebookKind::DmcBernoulli { alpha: 0.3 }, m, 2, seed).unwrap();
    ExactInstance::with_codebook(2, bsc(), c).unwrap()
}

#[test]
fn soft_covering_improves_with_codebook_size() {
    let ideal = oracle::exact_mixture_law(&ExactInstance::mixture(2, 2, bsc(), 0.3).unwrap()).unwrap();
    for s in 0..10 {
        let tv = |m| oracle::exact_tv(&oracle::exact_induced_law(&induced(m, rng::derive(s, m as u64))).unwrap(), &ideal).unwrap();
        let (big, small) = (tv(500), tv(20));
        assert!(big < small, "seed {s}: {big} vs {small}");
    }
}

#[test]
fn enumerated_laws_are_normalized() {
    for n in 1..=3 {
        for l in 1..=3 {
            let inst = ExactInstance::mixture(n, l, bsc(), 0.4).unwrap();
            for t in [oracle::exact_mixture_law(&inst).unwrap(), oracle::exact_null_law(&inst).unwrap()] {
                assert!((t.total() - 1.0).abs() < 1e-10);
            }
        }
    }
    assert!((oracle::exact_induced_law(&induced(7, 1)).unwrap().total() - 1.0).abs() < 1e-10);
}

/// Mixing over slots cannot increase the distance to the ideal mixture
/// beyond the single-slot distance.
#[test]
fn slot_mixing_contracts_tv() {
    for seed in 0..10 {
        let code = induced(5, 100 + seed);
        let ideal = ExactInstance::mixture(2, 2, bsc(), 0.3).unwrap();
        let full = oracle::exact_tv(&oracle::exact_induced_law(&code).unwrap(), &oracle::exact_mixture_law(&ideal).unwrap()).unwrap();
        let (_, active) = oracle::exact_slot_laws(&code).unwrap();
        let (_, target) = oracle::exact_slot_laws(&ideal).unwrap();
        let single = oracle::exact_tv(&active, &target).unwrap();
        assert!(full <= single + 1e-12, "seed {seed}: {full} > {single}");
    }
}

#[test]
fn tv_and_kl_are_consistent_on_the_grid() {
    for l in 1..=3 {
        for &alpha in &[0.1, 0.5, 0.9] {
            let inst = ExactInstance::mixture(3, l, bsc(), alpha).unwrap();
            let p = oracle::exact_mixture_law(&inst).unwrap();
            let q = oracle::exact_null_law(&inst).unwrap();
            let kl = oracle::exact_kl(&p, &q).unwrap();
            assert!(oracle::exact_tv(&p, &q).unwrap() <= (kl / 2.0).sqrt() + 1e-12);
            assert_eq!(oracle::exact_kl(&p, &p).unwrap(), 0.0);
        }
    }
}
