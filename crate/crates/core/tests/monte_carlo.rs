use nalgebra::DMatrix;
use randcons::analysis::dominant_left_eigvec_closed;
use randcons::montecarlo::run_trajectory_with;
use randcons::{
    build_graph, exact_variance, expected_consensus_value, expected_weight_matrix, run_ensemble, trial_stream,
    DirectedRealization, EnsembleOptions, Graph, KronBudget, Scenario,
};

#[test]
fn single_edge_variance_matches_simulation() {
    let g: Graph = build_graph(&[(0, 1)], &[0.5, 0.5]).unwrap();
    let x0 = vec![0.0, 1.0];
    let exact = exact_variance(&g, &x0, KronBudget::default()).unwrap();
    assert!((exact.mean - 0.5).abs() < 1e-14);
    // v₁(R) by hand: E[x*²] = 0.3, so var = 0.05
    assert!((exact.variance - 0.05).abs() < 1e-14);
    let s = Scenario {
        graph: g,
        initial: x0,
        trials: 100_000,
        seed: 11,
        tol: 1e-10,
        max_steps: 100_000,
    };
    let stats = run_ensemble(&s, EnsembleOptions::default()).unwrap();
    assert!((stats.mean - exact.mean).abs() <= 3.0 * stats.mean_standard_error());
    assert!((stats.variance() - exact.variance).abs() <= 3.0 * stats.variance_standard_error());
}

#[test]
fn sampled_weight_matrices_average_to_expectation() {
    let g: Graph = build_graph(&[(0, 1), (1, 2), (2, 3), (1, 3)], &[0.2, 0.5, 0.7, 0.9]).unwrap();
    let mut rng = trial_stream(5, 0);
    let mut sum = DMatrix::<f64>::zeros(4, 4);
    let draws = 100_000;
    for _ in 0..draws {
        sum += DirectedRealization::sample(&g, &mut rng).weight_matrix::<f64>().entries;
    }
    let empirical = sum / draws as f64;
    assert!((empirical - expected_weight_matrix(&g)).amax() < 5e-3);
}

#[test]
fn weighted_average_is_a_martingale() {
    // v₁ᵀ E W = v₁ᵀ makes v₁ᵀ x(k) a martingale
    let g: Graph = build_graph(&[(0, 1), (1, 2), (2, 3), (0, 4), (3, 4)], &[0.2, 0.5, 0.7, 0.35, 0.9]).unwrap();
    let v = dominant_left_eigvec_closed(&g).v1_ew;
    let x0 = [1.0, -2.0, 0.5, 3.0, 0.0];
    let start: f64 = v.iter().zip(&x0).map(|(a, b)| a * b).sum();
    let trials = 20_000;
    let mut at_k = vec![0.0; trials];
    for (t, slot) in at_k.iter_mut().enumerate() {
        run_trajectory_with(&g, &x0, &mut trial_stream(17, t as u64), 0.0, 3, |k, x| {
            if k == 3 {
                *slot = v.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        });
    }
    let m = at_k.iter().sum::<f64>() / trials as f64;
    let sd = (at_k.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
    assert!((m - start).abs() <= 4.0 * sd / (trials as f64).sqrt(), "{m} vs {start}");
    assert!((expected_consensus_value(&g, &x0).unwrap() - start).abs() < 1e-14);
}
