use flatcurve::coupling::si_links_mean_field;
use flatcurve::network::{erdos_renyi, mean_degree, probability_for_mean_degree};
use flatcurve::seird::{init_state, si_edge_recount};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

/// Pearson statistic of the degree histogram against Binomial(n - 1, p),
/// merging tail bins until each expects at least 5 nodes. Returns the
/// statistic and the degrees of freedom.
fn degree_chi_squared(n: usize, p: f64, seed: u64) -> (f64, usize) {
    let net = erdos_renyi(n, p, seed);
    let mut observed = vec![0usize; n];
    for u in 0..n as u32 {
        observed[net.degree(u)] += 1;
    }
    let binom = Binomial::new(p, (n - 1) as u64).unwrap();
    let expected: Vec<f64> = (0..n).map(|k| n as f64 * binom.pmf(k as u64)).collect();

    let mut bins: Vec<(f64, usize)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0usize);
    for k in 0..n {
        e_acc += expected[k];
        o_acc += observed[k];
        if e_acc >= 5.0 {
            bins.push((e_acc, o_acc));
            e_acc = 0.0;
            o_acc = 0;
        }
    }
    // Fold the remaining upper tail into the last bin.
    let last = bins.last_mut().unwrap();
    last.0 += e_acc;
    last.1 += o_acc;

    let stat = bins.iter().map(|&(e, o)| (o as f64 - e).powi(2) / e).sum();
    (stat, bins.len() - 1)
}

#[test]
fn degrees_follow_binomial() {
    for (k, seed) in [(4.0, 1u64), (10.0, 2), (19.0, 3)] {
        let n = 2000;
        let p = probability_for_mean_degree(n, k);
        let (stat, dof) = degree_chi_squared(n, p, seed);
        let critical = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99);
        assert!(
            stat < critical,
            "E[k] = {k}: chi2 = {stat} with {dof} dof, critical {critical}"
        );
    }
}

#[test]
fn ensemble_mean_degree() {
    let p = probability_for_mean_degree(16_000, 19.0);
    let avg: f64 = (0..20)
        .map(|s| mean_degree(&erdos_renyi(16_000, p, 100 + s)))
        .sum::<f64>()
        / 20.0;
    assert!((avg - 19.0).abs() < 0.1, "average mean degree {avg}");
}

/// With uniformly random initial infection the expected S-I count is
/// `p * I * S`, which equals the mean-field value up to a factor
/// `N / (N - 1)`. At t = 0 the estimate can therefore only be checked up to
/// sampling noise; the strict bound appears once correlations build up (see
/// the ensemble tests).
#[test]
fn mean_field_link_estimate_at_start() {
    let (n, i0) = (16_000, 800);
    let p = probability_for_mean_degree(n, 19.0);
    let counts: Vec<f64> = (0..20)
        .map(|s| {
            let net = erdos_renyi(n, p, 500 + s);
            let state = init_state(&net, i0, 900 + s).unwrap();
            si_edge_recount(&state, &net) as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / 20.0;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 19.0;
    let se = (var / 20.0).sqrt();
    let mf = si_links_mean_field(i0, n - i0, n, 19.0);
    assert_eq!(mf, 14_440.0);
    assert!(
        mf >= mean - 3.0 * se,
        "mean field {mf} below empirical {mean} (se {se})"
    );
    assert!((mf - mean).abs() <= 0.1 * mean, "mean field {mf} vs empirical {mean}");
}
