use dicke_core::chain::{build_chain_scoped, expected_steps, Scope};
use dicke_core::simulate::statevector_step_distribution;
use dicke_core::*;

fn mt0(two_j: u32, reset: ResetPolicy, seed: u64) -> ProtocolConfig {
    ProtocolConfig::new(two_j, 0)
        .unwrap()
        .with_angle_policy(AnglePolicy::ApproxMt0)
        .unwrap()
        .with_reset_policy(reset)
        .with_seed(seed)
}

#[test]
fn spin_one_mean_and_geometric_histogram() {
    let s = &monte_carlo_summary(&[mt0(2, ResetPolicy::None, 1)], 100_000, Engine::Chain).unwrap()[0];
    assert!((s.mean - 2.0).abs() < 3.0 * s.std_error, "{} +- {}", s.mean, s.std_error);
    // Pr[k iterations] = 2^-k
    let n = s.n_runs as f64;
    for k in 1..6 {
        let p = s.histogram[k] as f64 / n;
        let want = 0.5f64.powi(k as i32);
        let se = (want * (1.0 - want) / n).sqrt();
        assert!((p - want).abs() < 4.0 * se, "k={k}: {p} vs {want}");
    }
    assert_eq!(s.histogram[0], 0);
}

#[test]
fn chain_and_monte_carlo_agree_at_j_50() {
    let cfg = mt0(100, ResetPolicy::SqrtJ, 7);
    let exact = expected_steps(&build_chain_scoped(cfg, Scope::Full).unwrap()).unwrap().start_state_value;
    let s = &monte_carlo_summary(&[cfg], 100_000, Engine::Chain).unwrap()[0];
    assert!((s.mean - exact).abs() < 3.0 * s.std_error, "{} vs {exact} (se {})", s.mean, s.std_error);
    assert_eq!(s.success_rate, 1.0);
}

#[test]
fn statevector_step_distributions_match_rows() {
    for cfg in [mt0(40, ResetPolicy::SqrtJ, 0), mt0(33 * 2, ResetPolicy::None, 0)] {
        let sampler = TrajectorySampler::new(cfg).unwrap();
        let chain = build_chain_scoped(cfg, Scope::Full).unwrap();
        let tj = cfg.two_j();
        for &m in chain.states.iter().filter(|&&m| m != 0 && (m == tj as i32 || !cfg.reset_policy.triggers(tj, m))) {
            let direct = statevector_step_distribution(&sampler, m).unwrap();
            let row = outcome_distribution(SpinSpec::new(tj, m).unwrap(), sampler.angle(m).unwrap()).unwrap();
            for (a, b) in direct.iter().zip(&row) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn statevector_and_trajectory_iteration_laws_match() {
    let a = &monte_carlo_summary(&[mt0(40, ResetPolicy::SqrtJ, 11)], 100_000, Engine::Chain).unwrap()[0];
    let b = &monte_carlo_summary(&[mt0(40, ResetPolicy::SqrtJ, 12)], 100_000, Engine::Statevector).unwrap()[0];
    let t = two_sample_chi_square(&a.histogram, &b.histogram).unwrap();
    assert!(t.p_value > 0.01, "{t:?}");
    assert!((a.mean - b.mean).abs() < 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt());
}

#[test]
fn summaries_do_not_depend_on_thread_count() {
    let cfgs = [mt0(60, ResetPolicy::SqrtJ, 5), ProtocolConfig::new(9, 1).unwrap().with_seed(5)];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_summary(&cfgs, 5_000, Engine::Chain).unwrap())
    };
    assert_eq!(run(1), run(4));
    let sv = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_summary(&cfgs[..1], 500, Engine::Statevector).unwrap())
    };
    assert_eq!(sv(1), sv(3));
}

#[test]
fn default_cap_leaves_negligible_failure_mass() {
    // Exact tail Pr[T > cap] from the chain, then a direct Monte Carlo check.
    for two_j in [64u32, 1024, 4096] {
        let cfg = mt0(two_j, ResetPolicy::SqrtJ, 3);
        let chain = build_chain_scoped(cfg, Scope::Reachable).unwrap();
        let n = chain.states.len();
        let mut dist = vec![0.0; n];
        dist[chain.start_index()] = 1.0;
        for _ in 0..cfg.max_iterations {
            let mut next = vec![0.0; n];
            for a in 0..n {
                if a == chain.absorbing_index || dist[a] == 0.0 {
                    continue;
                }
                for b in 0..n {
                    next[b] += dist[a] * chain.matrix[(a, b)];
                }
            }
            next[chain.absorbing_index] += dist[chain.absorbing_index];
            dist = next;
        }
        let tail: f64 = dist.iter().enumerate().filter(|(a, _)| *a != chain.absorbing_index).map(|(_, p)| p).sum();
        // Expected failures over 1e5 runs stay below 1e-4.
        assert!(tail < 1e-9, "two_j={two_j}: {tail}");
    }
    let s = &monte_carlo_summary(&[mt0(4096, ResetPolicy::SqrtJ, 3)], 2_000, Engine::Chain).unwrap()[0];
    assert_eq!(s.success_rate, 1.0);
}
