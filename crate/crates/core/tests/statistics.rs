//! Distributional checks. Each uses a fixed seed, so outcomes are reproducible.

use fusepeel::exec::Execution;
use fusepeel::hypergraph::{generate_fuse, FuseParams};
use fusepeel::montecarlo::{mc_peel, summarize, Family, GraphSpec};
use fusepeel::peeler::peel_sequential;
use fusepeel::retrieval::{edge_of, synthetic_keys};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

/// Pearson statistic and the 0.999 quantile for `observed` against `expected`.
fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    let stat = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let critical = ChiSquared::new((observed.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    (stat, critical)
}

#[test]
fn middle_segment_degrees_are_poisson() {
    let p = FuseParams { k: 3, c: 0.9, ell: 100, n: 100_000, seed: 42 };
    let h = generate_fuse(&p).unwrap();
    assert!((p.edge_density() - 0.9 * 100.0 / 102.0).abs() < 1e-15);
    let deg = h.degrees();
    let seg = p.ell / 2;
    let n = p.n as usize;
    let slice = &deg[seg * n..(seg + 1) * n];

    let mean = slice.iter().map(|&d| d as f64).sum::<f64>() / n as f64;
    let ck = p.c * p.k as f64;
    assert!((mean - ck).abs() <= 0.01 * ck, "mean {mean} vs {ck}");

    // Bins 0..=9 and a tail bin; every expected count stays well above 5.
    const TAIL: usize = 10;
    let mut observed = vec![0u64; TAIL + 1];
    for &d in slice {
        observed[(d as usize).min(TAIL)] += 1;
    }
    let poisson = Poisson::new(ck).unwrap();
    let mut expected: Vec<f64> = (0..TAIL).map(|d| poisson.pmf(d as u64) * n as f64).collect();
    expected.push(poisson.sf(TAIL as u64 - 1) * n as f64);
    assert!(expected.iter().all(|&e| e > 5.0));
    let (stat, critical) = chi_square(&observed, &expected);
    assert!(stat < critical, "chi2 {stat} >= {critical}");
}

#[test]
fn key_types_are_uniform() {
    let ell = 100;
    let keys = synthetic_keys(1_000_000, 9);
    let mut observed = vec![0u64; ell];
    for key in &keys {
        observed[edge_of(key.as_bytes(), 3, 3, ell, 1000).ty] += 1;
    }
    let (stat, critical) = chi_square(&observed, &vec![keys.len() as f64 / ell as f64; ell]);
    assert!(stat < critical, "chi2 {stat} >= {critical}");
}

#[test]
fn key_offsets_are_uniform() {
    let n = 64;
    let keys = synthetic_keys(200_000, 10);
    for t in 0..3 {
        let mut observed = vec![0u64; n];
        for key in &keys {
            observed[edge_of(key.as_bytes(), 5, 3, 10, n as u64).offsets[t] as usize] += 1;
        }
        let (stat, critical) = chi_square(&observed, &vec![keys.len() as f64 / n as f64; n]);
        assert!(stat < critical, "t={t}: chi2 {stat} >= {critical}");
    }
}

#[test]
fn er_below_core_threshold_peels() {
    let spec = GraphSpec { family: Family::Er, k: 3, c: 0.81, ell: 1, n: 100_000 };
    let s = summarize(&mc_peel(&spec, 20, 1, Execution::default()).unwrap());
    assert!(s.peelable >= 18, "{s:?}");
}

#[test]
fn fuse_at_retrieval_density_peels() {
    let h = generate_fuse(&FuseParams { k: 3, c: 0.91, ell: 100, n: 100_000, seed: 1 }).unwrap();
    assert!(peel_sequential(&h).is_peelable());
}
