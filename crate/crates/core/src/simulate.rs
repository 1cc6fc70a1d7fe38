//! Monte Carlo runs of the protocol.
//!
//! Two engines: [`Engine::Chain`] samples each measurement from a cached
//! outcome distribution per `m` (the policy angle depends only on `m`), and
//! [`Engine::Statevector`] rotates the full symmetric-subspace state and
//! collapses it on measurement. They share nothing but the configuration, so
//! agreement between them checks the Markov-chain abstraction.
//!
//! Run `i` always draws from stream `i` of a ChaCha8 generator keyed by the
//! seed, and summaries are reduced from integer histograms in run order, so
//! results do not depend on the number of worker threads.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angles::policy_angles;
use crate::chain::routed;
use crate::error::{Error, Result};
use crate::spin::{two_m_at, Angle, ProtocolConfig, SpinSpec};
use crate::wigner::{outcome_distribution, Propagator, NORM_TOLERANCE};

/// The random stream for run `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Chain,
    Statevector,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub two_m_before: i32,
    pub theta: f64,
    /// The measurement outcome.
    pub two_m_measured: i32,
    /// The state after the reset check.
    pub two_m_after: i32,
    pub reset: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub config: ProtocolConfig,
    pub steps: Vec<StepRecord>,
    pub iterations: u32,
    /// False when `max_iterations` ran out first.
    pub succeeded: bool,
}

/// Cumulative distribution built with compensated summation and normalized
/// so the last entry is exactly one.
pub fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(probs.len());
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &p in probs {
        let t = sum + p;
        if sum.abs() >= p.abs() {
            comp += (sum - t) + p;
        } else {
            comp += (p - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    let total = *out.last().unwrap_or(&1.0);
    for c in &mut out {
        *c /= total;
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Inverse-CDF draw of an index.
pub fn sample_index(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Policy angles and lazily built outcome CDFs, shared by all runs of one
/// configuration.
#[derive(Debug)]
pub struct TrajectorySampler {
    config: ProtocolConfig,
    angles: Vec<Option<Angle>>,
    cdfs: Vec<OnceLock<Result<Vec<f64>>>>,
}

impl TrajectorySampler {
    pub fn new(config: ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let tj = config.two_j();
        let dim = tj as usize + 1;
        // States the register can be in before a rotation.
        let live: Vec<i32> = (0..dim)
            .map(|i| two_m_at(tj, i))
            .filter(|&m| m != config.target_two_mt && (m == tj as i32 || !config.reset_policy.triggers(tj, m)))
            .collect();
        let mut angles = vec![None; dim];
        for (m, a) in live.iter().zip(policy_angles(config.angle_policy, tj, config.target_two_mt, &live)?) {
            angles[SpinSpec::new(tj, *m)?.index()] = Some(a);
        }
        Ok(TrajectorySampler { config, angles, cdfs: (0..dim).map(|_| OnceLock::new()).collect() })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn angle(&self, two_m: i32) -> Result<Angle> {
        let s = SpinSpec::new(self.config.two_j(), two_m)?;
        self.angles[s.index()].ok_or_else(|| Error::InvalidArgument(format!("no rotation is applied from {s}")))
    }

    fn cdf(&self, two_m: i32) -> Result<&[f64]> {
        let s = SpinSpec::new(self.config.two_j(), two_m)?;
        let angle = self.angle(two_m)?;
        let cell = self.cdfs[s.index()].get_or_init(|| outcome_distribution(s, angle).map(|p| cumulative(&p)));
        cell.as_deref().map_err(Clone::clone)
    }

    /// One run of the chain engine.
    pub fn run(&self, rng: &mut impl Rng) -> Result<TrajectoryRecord> {
        let cfg = self.config;
        let tj = cfg.two_j();
        let mut m = tj as i32;
        let mut steps = Vec::new();
        while m != cfg.target_two_mt && (steps.len() as u32) < cfg.max_iterations {
            let measured = two_m_at(tj, sample_index(self.cdf(m)?, rng));
            let after = routed(&cfg, measured);
            steps.push(StepRecord {
                two_m_before: m,
                theta: self.angle(m)?.radians(),
                two_m_measured: measured,
                two_m_after: after,
                reset: after != measured,
            });
            m = after;
        }
        Ok(TrajectoryRecord { config: cfg, iterations: steps.len() as u32, succeeded: m == cfg.target_two_mt, steps })
    }
}

/// A state in the `2j + 1` dimensional symmetric subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricState {
    pub two_j: u32,
    pub amplitudes: Vec<f64>,
}

impl SymmetricState {
    pub fn basis(spec: SpinSpec) -> Self {
        let mut amplitudes = vec![0.0; spec.dim()];
        amplitudes[spec.index()] = 1.0;
        SymmetricState { two_j: spec.two_j(), amplitudes }
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    pub fn rotate(&mut self, prop: &mut Propagator, angle: Angle) -> Result<()> {
        prop.rotate(&mut self.amplitudes, angle.radians())
    }

    /// Projective `J_z` measurement; collapses onto the outcome's basis
    /// vector and returns its `two_m`.
    pub fn measure(&mut self, rng: &mut impl Rng) -> Result<i32> {
        let dev = (self.norm_sq() - 1.0).abs();
        if dev > NORM_TOLERANCE {
            return Err(Error::NormDrift { deviation: dev, tolerance: NORM_TOLERANCE });
        }
        let probs: Vec<f64> = self.amplitudes.iter().map(|a| a * a).collect();
        let i = sample_index(&cumulative(&probs), rng);
        let sign = self.amplitudes[i].signum();
        self.amplitudes.fill(0.0);
        self.amplitudes[i] = sign;
        Ok(two_m_at(self.two_j, i))
    }
}

/// One run of the statevector engine. The policy angle is recomputed from
/// the measured `m` at each step, and resets re-prepare `|j, j>`.
pub fn run_statevector(config: &ProtocolConfig, angles: &TrajectorySampler, rng: &mut impl Rng) -> Result<TrajectoryRecord> {
    let tj = config.two_j();
    let mut prop = Propagator::new(tj);
    let mut state = SymmetricState::basis(SpinSpec::top(tj));
    let mut m = tj as i32;
    let mut steps = Vec::new();
    while m != config.target_two_mt && (steps.len() as u32) < config.max_iterations {
        let angle = angles.angle(m)?;
        state.rotate(&mut prop, angle)?;
        let measured = state.measure(rng)?;
        let after = routed(config, measured);
        if after != measured {
            state = SymmetricState::basis(SpinSpec::top(tj));
        }
        steps.push(StepRecord {
            two_m_before: m,
            theta: angle.radians(),
            two_m_measured: measured,
            two_m_after: after,
            reset: after != measured,
        });
        m = after;
    }
    Ok(TrajectoryRecord { config: *config, iterations: steps.len() as u32, succeeded: m == config.target_two_mt, steps })
}

/// Outcome probabilities the statevector engine sees when rotating `|j, m>`.
pub fn statevector_step_distribution(sampler: &TrajectorySampler, two_m: i32) -> Result<Vec<f64>> {
    let spec = SpinSpec::new(sampler.config().two_j(), two_m)?;
    let mut state = SymmetricState::basis(spec);
    state.rotate(&mut Propagator::new(spec.two_j()), sampler.angle(two_m)?)?;
    Ok(state.amplitudes.iter().map(|a| a * a).collect())
}

/// Runs `n_runs` trajectories (streams `0..n_runs`) and returns each record.
pub fn run_many(config: &ProtocolConfig, engine: Engine, n_runs: u64) -> Result<Vec<TrajectoryRecord>> {
    let sampler = TrajectorySampler::new(*config)?;
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(config.rng_seed, i);
            match engine {
                Engine::Chain => sampler.run(&mut rng),
                Engine::Statevector => run_statevector(config, &sampler, &mut rng),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McSummary {
    pub two_j: u32,
    pub target_two_mt: i32,
    pub angle_policy: crate::spin::AnglePolicy,
    pub reset_policy: crate::spin::ResetPolicy,
    pub engine: Engine,
    pub seed: u64,
    pub n_runs: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub success_rate: f64,
    /// `histogram[k]` = number of runs that used `k` iterations.
    pub histogram: Vec<u64>,
}

/// Summary statistics of `n_runs` trajectories per configuration.
pub fn monte_carlo_summary(configs: &[ProtocolConfig], n_runs: u64, engine: Engine) -> Result<Vec<McSummary>> {
    if n_runs == 0 {
        return Err(Error::InvalidArgument("n_runs must be at least 1".into()));
    }
    configs
        .iter()
        .map(|cfg| {
            let sampler = TrajectorySampler::new(*cfg)?;
            let outcomes: Vec<(u32, bool)> = (0..n_runs)
                .into_par_iter()
                .map(|i| {
                    let mut rng = trajectory_rng(cfg.rng_seed, i);
                    let r = match engine {
                        Engine::Chain => sampler.run(&mut rng)?,
                        Engine::Statevector => run_statevector(cfg, &sampler, &mut rng)?,
                    };
                    Ok((r.iterations, r.succeeded))
                })
                .collect::<Result<_>>()?;
            let mut histogram = vec![0u64; cfg.max_iterations as usize + 1];
            let mut successes = 0u64;
            for (it, ok) in outcomes {
                histogram[it as usize] += 1;
                successes += ok as u64;
            }
            Ok(summarize(cfg, engine, n_runs, histogram, successes))
        })
        .collect()
}

fn summarize(cfg: &ProtocolConfig, engine: Engine, n: u64, histogram: Vec<u64>, successes: u64) -> McSummary {
    let total: u128 = histogram.iter().enumerate().map(|(k, c)| k as u128 * *c as u128).sum();
    let total_sq: u128 = histogram.iter().enumerate().map(|(k, c)| (k as u128).pow(2) * *c as u128).sum();
    let nf = n as f64;
    let mean = total as f64 / nf;
    let variance = if n > 1 {
        // Exact integer centering: n sum k^2 - (sum k)^2, over n(n-1).
        let num = n as u128 * total_sq - total * total;
        num as f64 / (nf * (nf - 1.0))
    } else {
        0.0
    };
    McSummary {
        two_j: cfg.two_j(),
        target_two_mt: cfg.target_two_mt,
        angle_policy: cfg.angle_policy,
        reset_policy: cfg.reset_policy,
        engine,
        seed: cfg.rng_seed,
        n_runs: n,
        mean,
        variance,
        std_error: (variance / nf).sqrt(),
        success_rate: successes as f64 / nf,
        histogram,
    }
}
