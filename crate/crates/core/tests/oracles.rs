//! Cross-checks between the closed forms, the solver and the oracles.

use gvc_randlab::analytics::{covariance_exact, moments_analytic, MomentSource};
use gvc_randlab::measures::true_measures;
use gvc_randlab::model::{build_pair, sample_table, InstanceStream, ModelParams};
use gvc_randlab::oracle::{moments_bruteforce, neumann_measure, neumann_partial_sums, neumann_tail_bound};

#[test]
fn brute_force_moments_are_unbiased() {
    // fifty independent estimates; the mean z-score should sit near zero
    let exact = moments_analytic(5, 1.0, 0.1).unwrap();
    let runs = 50;
    let mut mean_z = [0.0f64; 4];
    let mut large = 0;
    for seed in 0..runs {
        let mc = moments_bruteforce(&ModelParams::exponential(5, 1.0, 0.1, 1000 + seed), 20_000).unwrap();
        let MomentSource::MonteCarlo { std_errors, .. } = mc.source else {
            panic!("expected sampled moments");
        };
        for k in 0..4 {
            let z = (mc.as_array()[k] - exact.as_array()[k]) / std_errors[k];
            mean_z[k] += z / runs as f64;
            large += usize::from(z.abs() > 3.5);
        }
    }
    let bound = 4.0 / (runs as f64).sqrt();
    for (k, z) in mean_z.iter().enumerate() {
        assert!(z.abs() < bound, "moment {k}: mean z {z:.3}");
    }
    assert!(large <= 2, "{large} estimates beyond 3.5 SE");
}

#[test]
fn sampled_covariance_agrees_with_exact_value() {
    let (n, mu, mu_f) = (5, 1.0, 0.1);
    let mc = moments_bruteforce(&ModelParams::exponential(n, mu, mu_f, 7), 400_000).unwrap();
    let c_mc = (mc.e_rrp - mc.e_r * mc.e_rp) / ((1.0 - mc.e_r) * (1.0 - mc.e_rp));
    let c = covariance_exact(n, mu, mu_f).unwrap();
    assert!((c_mc - c).abs() < 0.05 * c, "sampled {c_mc} exact {c}");
}

#[test]
fn neumann_sums_rise_monotonically_to_the_solve() {
    let params = ModelParams::exponential(5, 1.0, 0.01, 42);
    let mut checked = 0;
    for k in 0..200u64 {
        let t = sample_table(&params, &mut InstanceStream::new(42, k)).unwrap();
        let pair = build_pair(&t).unwrap();
        if pair.d_rowsum_violations > 0 {
            continue;
        }
        let (u1, d1) = true_measures(&t).unwrap();
        for (m, exact) in [(&pair.a_u, &u1.values), (&pair.a_d, &d1.values)] {
            let mut terms = 16;
            while neumann_tail_bound(m, terms).unwrap() > 1e-15 {
                terms *= 2;
            }
            let sums = neumann_partial_sums(m, terms).unwrap();
            for w in sums.windows(2) {
                assert!(w[0].iter().zip(&w[1]).all(|(a, b)| b >= a));
            }
            let series = neumann_measure(m, terms).unwrap();
            for (s, e) in series.iter().zip(exact.iter()) {
                assert!(((s - e) / e).abs() < 1e-10, "{s} vs {e}");
            }
        }
        checked += 1;
        if checked == 20 {
            break;
        }
    }
    assert_eq!(checked, 20);
}

#[test]
fn neumann_rejects_non_substochastic_input() {
    let m = gvc_randlab::linalg::SquareMatrix::from_rows(&[vec![0.6, 0.5], vec![0.1, 0.2]]).unwrap();
    assert!(neumann_measure(&m, 10).is_err());
}
