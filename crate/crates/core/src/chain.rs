//! The protocol as an absorbing Markov chain over measured magnetizations.
//!
//! One chain step is one loop iteration: rotate by the policy angle, measure
//! `J_z`, and (if the reset rule fires on the outcome) return to `|j, j>`.
//! Reaching the target is checked before the reset rule.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::angles::policy_angles;
use crate::error::{Error, Result};
use crate::spin::{two_m_at, AnglePolicy, ProtocolConfig, ResetPolicy, SpinSpec};
use crate::special::ln_binomial;
use crate::wigner::outcome_distribution;

/// Which magnetization states get a row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scope {
    /// All `2j + 1` states.
    #[default]
    Full,
    /// Only states the protocol can occupy after a step: the start `m = j`,
    /// the target, and every `m` the reset rule leaves alone. Exact, and much
    /// smaller under a reset threshold.
    Reachable,
}

#[derive(Clone, Debug)]
pub struct TransitionChain {
    pub config: ProtocolConfig,
    /// `two_m` of each row/column, ascending.
    pub states: Vec<i32>,
    /// `matrix[(a, b)] = Pr[states[a] -> states[b]]`
    pub matrix: DMatrix<f64>,
    pub absorbing_index: usize,
}

impl TransitionChain {
    pub fn index_of(&self, two_m: i32) -> Option<usize> {
        self.states.binary_search(&two_m).ok()
    }

    pub fn start_index(&self) -> usize {
        self.index_of(self.config.two_j() as i32).expect("start state is always present")
    }

    /// `Pr[m -> m']`, zero for states outside the chain's scope.
    pub fn probability(&self, from_two_m: i32, to_two_m: i32) -> f64 {
        match (self.index_of(from_two_m), self.index_of(to_two_m)) {
            (Some(a), Some(b)) => self.matrix[(a, b)],
            _ => 0.0,
        }
    }

    /// Largest `|sum_b P[a][b] - 1|` over rows.
    pub fn max_row_sum_deviation(&self) -> f64 {
        self.matrix.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Full chain over all `2j + 1` states.
pub fn build_chain(config: ProtocolConfig) -> Result<TransitionChain> {
    build_chain_scoped(config, Scope::Full)
}

pub fn build_chain_scoped(config: ProtocolConfig, scope: Scope) -> Result<TransitionChain> {
    config.validate()?;
    let tj = config.two_j();
    let top = tj as i32;
    let target = config.target_two_mt;
    let states: Vec<i32> = (0..=tj as usize)
        .map(|i| two_m_at(tj, i))
        .filter(|&m| scope == Scope::Full || m == top || m == target || !config.reset_policy.triggers(tj, m))
        .collect();
    let absorbing_index = states.binary_search(&target).expect("target present");
    let position = |m: i32| states.binary_search(&m).ok();

    let movers: Vec<i32> = states.iter().copied().filter(|&m| m != target).collect();
    let angles = policy_angles(config.angle_policy, tj, target, &movers)?;
    let rows: Vec<Vec<f64>> = movers
        .par_iter()
        .zip(angles.par_iter())
        .map(|(&m, &angle)| {
            let probs = outcome_distribution(SpinSpec::new(tj, m)?, angle)?;
            let mut row = vec![0.0; states.len()];
            for (i, p) in probs.into_iter().enumerate() {
                let to = routed(&config, two_m_at(tj, i));
                row[position(to).expect("routed states are in scope")] += p;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let n = states.len();
    let mut matrix = DMatrix::<f64>::zeros(n, n);
    matrix[(absorbing_index, absorbing_index)] = 1.0;
    for (row, &m) in rows.iter().zip(&movers) {
        let a = position(m).expect("mover in scope");
        for (b, p) in row.iter().enumerate() {
            matrix[(a, b)] = *p;
        }
    }
    Ok(TransitionChain { config, states, matrix, absorbing_index })
}

/// Where a measured `two_m` leaves the register at the end of an iteration.
pub fn routed(config: &ProtocolConfig, measured: i32) -> i32 {
    if measured != config.target_two_mt && config.reset_policy.triggers(config.two_j(), measured) {
        config.two_j() as i32
    } else {
        measured
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AbsorptionReport {
    pub states: Vec<i32>,
    /// Expected iterations until absorption from each state; `None` where
    /// absorption is not certain.
    pub expected_steps_from: Vec<Option<f64>>,
    /// Expected iterations from `m = j`.
    pub start_state_value: f64,
    pub angle_policy: AnglePolicy,
    pub reset_policy: ResetPolicy,
}

/// Solves `(I - Q) t = 1` on the transient states.
pub fn expected_steps(chain: &TransitionChain) -> Result<AbsorptionReport> {
    let n = chain.states.len();
    let abs = chain.absorbing_index;
    let sure = certain_absorption(chain);
    let start = chain.start_index();
    if !sure[start] {
        return Err(Error::SingularSystem(format!(
            "the target {} is not reached with certainty from m = j",
            chain.config.target_two_mt
        )));
    }
    let transient: Vec<usize> = (0..n).filter(|&a| a != abs && sure[a]).collect();
    let k = transient.len();
    let mut a = DMatrix::<f64>::identity(k, k);
    for (r, &from) in transient.iter().enumerate() {
        for (c, &to) in transient.iter().enumerate() {
            a[(r, c)] -= chain.matrix[(from, to)];
        }
    }
    let ones = DVector::<f64>::from_element(k, 1.0);
    let lu = a.clone().lu();
    let singular = || Error::SingularSystem(format!("I - Q is singular ({k} transient states)"));
    let mut t = lu.solve(&ones).ok_or_else(singular)?;
    // One step of iterative refinement.
    let residual = &ones - &a * &t;
    if let Some(dt) = lu.solve(&residual) {
        t += dt;
    }
    if t.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(singular());
    }

    let mut out = vec![None; n];
    out[abs] = Some(0.0);
    for (r, &s) in transient.iter().enumerate() {
        out[s] = Some(t[r]);
    }
    Ok(AbsorptionReport {
        states: chain.states.clone(),
        start_state_value: out[start].expect("start solved"),
        expected_steps_from: out,
        angle_policy: chain.config.angle_policy,
        reset_policy: chain.config.reset_policy,
    })
}

/// States from which every path eventually hits the absorbing state: those
/// that cannot reach any state lacking a path to it.
fn certain_absorption(chain: &TransitionChain) -> Vec<bool> {
    let n = chain.states.len();
    let abs = chain.absorbing_index;
    // Backward search along positive-probability edges from `seeds`.
    let backward = |seeds: Vec<usize>, skip: Option<usize>| {
        let mut hit = vec![false; n];
        let mut stack = seeds;
        for &s in &stack {
            hit[s] = true;
        }
        while let Some(b) = stack.pop() {
            for a in 0..n {
                if !hit[a] && Some(a) != skip && chain.matrix[(a, b)] > 0.0 {
                    hit[a] = true;
                    stack.push(a);
                }
            }
        }
        hit
    };
    let reaches = backward(vec![abs], None);
    let stuck: Vec<usize> = (0..n).filter(|&a| !reaches[a]).collect();
    let doomed = backward(stuck, Some(abs));
    doomed.iter().map(|d| !d).collect()
}

/// Expected attempts of "rotate by pi/2 from `|j, j>`, measure, reset unless
/// `m = 0`": `2^n / C(n, n/2)`. Requires integer `j`.
pub fn naive_expected_steps(two_j: u32) -> Result<f64> {
    if two_j % 2 != 0 {
        return Err(Error::InvalidArgument(format!("naive reset scheme needs integer j, got two_j = {two_j}")));
    }
    let n = two_j as u64;
    Ok((n as f64 * std::f64::consts::LN_2 - ln_binomial(n, n / 2)).exp())
}

/// Expected iterations from `m = j` for every target `m_t` in `0..=j` (or
/// `1/2..=j` for half-integer `j`), geometric angles.
pub fn mt_sweep(two_j: u32, policy: AnglePolicy, reset: ResetPolicy) -> Result<Vec<(i32, f64)>> {
    let targets: Vec<i32> = ((two_j % 2) as i32..=two_j as i32).step_by(2).collect();
    targets
        .par_iter()
        .map(|&tmt| {
            let cfg = ProtocolConfig::new(two_j, tmt)?.with_angle_policy(policy)?.with_reset_policy(reset);
            let chain = build_chain_scoped(cfg, Scope::Reachable)?;
            Ok((tmt, expected_steps(&chain)?.start_state_value))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(two_j: u32, policy: AnglePolicy, reset: ResetPolicy) -> ProtocolConfig {
        ProtocolConfig::new(two_j, 0).unwrap().with_angle_policy(policy).unwrap().with_reset_policy(reset)
    }

    #[test]
    fn spin_one_chain_by_hand() {
        let chain = build_chain(cfg(2, AnglePolicy::ApproxMt0, ResetPolicy::None)).unwrap();
        let row: Vec<f64> = chain.matrix.row(chain.start_index()).iter().copied().collect();
        // states ascending: m = -1, 0, 1
        for (got, want) in row.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-14);
        }
        // E = 1 + E/2 from either m = +-1
        let r = expected_steps(&chain).unwrap();
        assert!((r.start_state_value - 2.0).abs() < 1e-12);
        assert_eq!(r.expected_steps_from[1], Some(0.0));
    }

    #[test]
    fn target_at_top_needs_no_steps() {
        let c = ProtocolConfig::new(12, 12).unwrap();
        let r = expected_steps(&build_chain(c).unwrap()).unwrap();
        assert_eq!(r.start_state_value, 0.0);
    }

    #[test]
    fn rows_are_stochastic_and_absorbing() {
        for (tj, policy, reset) in [
            (30u32, AnglePolicy::Geometric, ResetPolicy::None),
            (41, AnglePolicy::Geometric, ResetPolicy::SqrtJ),
            (64, AnglePolicy::ApproxMt0, ResetPolicy::SqrtJ),
        ] {
            let mut c = ProtocolConfig::new(tj, (tj % 2) as i32).unwrap().with_reset_policy(reset);
            c = c.with_angle_policy(policy).unwrap_or(c);
            let chain = build_chain(c).unwrap();
            assert!(chain.max_row_sum_deviation() < 1e-9);
            let a = chain.absorbing_index;
            assert_eq!(chain.matrix[(a, a)], 1.0);
        }
    }

    #[test]
    fn reachable_scope_matches_full_chain() {
        let c = cfg(80, AnglePolicy::ApproxMt0, ResetPolicy::SqrtJ);
        let full = expected_steps(&build_chain(c).unwrap()).unwrap();
        let small = build_chain_scoped(c, Scope::Reachable).unwrap();
        assert!(small.states.len() < 20);
        let r = expected_steps(&small).unwrap();
        assert!((r.start_state_value - full.start_state_value).abs() < 1e-10);
    }

    #[test]
    fn reset_rows_route_to_top() {
        let chain = build_chain(cfg(100, AnglePolicy::ApproxMt0, ResetPolicy::SqrtJ)).unwrap();
        // |m'| > sqrt(50) never appears as a destination except m = j.
        for (b, &m) in chain.states.iter().enumerate() {
            if m != 100 && ResetPolicy::SqrtJ.triggers(100, m) {
                assert!(chain.matrix.column(b).iter().all(|p| *p == 0.0), "m2={m}");
            }
        }
    }

    #[test]
    fn naive_values() {
        assert!((naive_expected_steps(2).unwrap() - 2.0).abs() < 1e-14);
        assert!((naive_expected_steps(4).unwrap() - 16.0 / 6.0).abs() < 1e-14);
        assert!(naive_expected_steps(3).is_err());
        let big = naive_expected_steps(8192).unwrap();
        assert!((big / (std::f64::consts::PI * 4096.0).sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn non_absorbing_chain_is_reported() {
        // m = j with theta = 0 never moves: build a chain whose only
        // transition from the start is a self loop.
        let c = cfg(4, AnglePolicy::ApproxMt0, ResetPolicy::None);
        let mut chain = build_chain(c).unwrap();
        let s = chain.start_index();
        chain.matrix.row_mut(s).fill(0.0);
        chain.matrix[(s, s)] = 1.0;
        assert!(matches!(expected_steps(&chain), Err(Error::SingularSystem(_))));
    }
}
