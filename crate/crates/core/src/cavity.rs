//! Dispersive-cavity readout of the Hamming weight.
//!
//! Each excited atom shifts the cavity by `chi`, so weight `w` gives
//! `Delta_a = chi w`. The probe sits on the side of the Lorentzian
//! (`omega - omega_c = kappa`) and every photon is an independent
//! Bernoulli(T) transmission event.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulate::trajectory_rng;

/// `chi n <= kappa / REGIME_MARGIN` is our reading of `chi n << kappa`.
pub const REGIME_MARGIN: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CavityParams {
    pub kappa: f64,
    pub chi: f64,
    /// Single-photon coupling; only the resonant-scheme helpers use it.
    pub g: f64,
    pub omega_c: f64,
    /// `omega - omega_c` of the probe.
    pub probe_detuning: f64,
}

impl CavityParams {
    /// Side-of-fringe operating point, `omega_c = 0`.
    pub fn new(kappa: f64, chi: f64) -> Result<Self> {
        let p = CavityParams { kappa, chi, g: 0.0, omega_c: 0.0, probe_detuning: kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.chi >= 0.0 && self.chi.is_finite()) {
            return Err(Error::InvalidArgument(format!("chi must be non-negative, got {}", self.chi)));
        }
        if !(self.omega_c.is_finite() && self.probe_detuning.is_finite() && self.g.is_finite()) {
            return Err(Error::InvalidArgument("cavity parameters must be finite".into()));
        }
        Ok(())
    }

    /// Fails when `chi n > kappa / 5`.
    pub fn check_regime(&self, n_atoms: u32) -> Result<()> {
        let shift = self.chi * n_atoms as f64;
        if shift > self.kappa / REGIME_MARGIN {
            return Err(Error::RegimeViolation(format!(
                "chi n = {shift} exceeds kappa / {REGIME_MARGIN} = {}",
                self.kappa / REGIME_MARGIN
            )));
        }
        Ok(())
    }
}

/// `kappa^2 / ((omega - omega_c - Delta_a)^2 + kappa^2)`.
pub fn transmission(params: &CavityParams, omega: f64, delta_a: f64) -> f64 {
    let d = omega - params.omega_c - delta_a;
    let k2 = params.kappa * params.kappa;
    k2 / (d * d + k2)
}

/// Transmission at the configured probe frequency.
pub fn probe_transmission(params: &CavityParams, delta_a: f64) -> f64 {
    transmission(params, params.omega_c + params.probe_detuning, delta_a)
}

/// Per-photon Fisher information about `Delta_a` at the side-of-fringe
/// point: `4 kappa^2 / (2 kappa^2 - 2 kappa Delta_a + Delta_a^2)^2`.
pub fn fisher_information(params: &CavityParams, delta_a: f64) -> f64 {
    let k = params.kappa;
    let den = 2.0 * k * k - 2.0 * k * delta_a + delta_a * delta_a;
    4.0 * k * k / (den * den)
}

/// Single-photon Cramer-Rao variance `(kappa - Delta_a + Delta_a^2 / (2 kappa))^2`.
pub fn crb_variance(params: &CavityParams, delta_a: f64) -> f64 {
    let k = params.kappa;
    (k - delta_a + delta_a * delta_a / (2.0 * k)).powi(2)
}

/// Bernoulli Fisher information `T'^2 / (T (1 - T))` at the configured probe,
/// with `T'` from a five-point central difference of step `h`.
pub fn bernoulli_fisher_fd(params: &CavityParams, delta_a: f64, h: f64) -> f64 {
    let t = |d: f64| probe_transmission(params, d);
    let dt = (t(delta_a - 2.0 * h) - 8.0 * t(delta_a - h) + 8.0 * t(delta_a + h) - t(delta_a + 2.0 * h)) / (12.0 * h);
    let t0 = t(delta_a);
    dt * dt / (t0 * (1.0 - t0))
}

/// Worst case of `crb_variance / kappa^2` over `Delta_a in [0, chi n]`.
///
/// `(1 - x + x^2/2)^2` decreases on `[0, 1]` and increases after, so the
/// maximum sits at an endpoint.
pub fn worst_case_crb_factor(params: &CavityParams, n_atoms: u32) -> f64 {
    let k2 = params.kappa * params.kappa;
    let top = params.chi * n_atoms as f64;
    (crb_variance(params, 0.0) / k2).max(crb_variance(params, top) / k2)
}

/// Smallest `N` with `(kappa/chi)^2 factor / N <= target_variance`, the
/// weight variance budget.
pub fn required_photons(params: &CavityParams, n_atoms: u32, target_variance: f64) -> Result<u64> {
    params.validate()?;
    if !(params.chi > 0.0) {
        return Err(Error::InvalidArgument("required photons need chi > 0".into()));
    }
    if !(target_variance > 0.0 && target_variance.is_finite()) {
        return Err(Error::InvalidArgument(format!("target variance must be positive, got {target_variance}")));
    }
    let need = (params.kappa / params.chi).powi(2) * worst_case_crb_factor(params, n_atoms) / target_variance;
    if need > u64::MAX as f64 / 2.0 {
        return Err(Error::InvalidArgument(format!("photon budget {need} is not representable")));
    }
    // guard against need landing a hair above an integer through rounding
    let mut n = need.ceil().max(1.0) as u64;
    if n > 1 && (n - 1) as f64 >= need * (1.0 - 1e-15) {
        n -= 1;
    }
    Ok(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub true_weight: u32,
    /// Maximum-likelihood weight rounded to the nearest integer in `[0, n]`.
    pub estimate: f64,
    /// Unrounded maximum-likelihood weight `Delta_a_hat / chi`.
    pub raw_estimate: f64,
    /// Cramer-Rao variance of the weight for this photon budget.
    pub variance: f64,
    pub photons_used: u64,
}

/// Invert `T = kappa^2 / ((kappa - Delta)^2 + kappa^2)` on the branch
/// `Delta <= kappa`.
fn ml_shift(kappa: f64, t_hat: f64) -> f64 {
    kappa - kappa * (1.0 / t_hat - 1.0).max(0.0).sqrt()
}

/// One photon-counting experiment with `n_photons` probe photons.
pub fn simulate_weight_estimator(
    params: &CavityParams,
    n_atoms: u32,
    true_weight: u32,
    n_photons: u64,
    rng: &mut impl Rng,
) -> Result<EstimatorResult> {
    params.validate()?;
    params.check_regime(n_atoms)?;
    if true_weight > n_atoms {
        return Err(Error::OutOfRange { two_j: n_atoms, two_m: true_weight as i64 });
    }
    if n_photons == 0 {
        return Err(Error::InvalidArgument("the estimator needs at least one photon".into()));
    }
    if !(params.chi > 0.0) {
        return Err(Error::InvalidArgument("weight estimation needs chi > 0".into()));
    }
    let delta = params.chi * true_weight as f64;
    let t = probe_transmission(params, delta);
    let counts = Binomial::new(n_photons, t).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng);
    let n = n_photons as f64;
    // keep the likelihood maximum finite when no photon is transmitted
    let t_hat = (counts as f64 / n).max(0.5 / n);
    let raw = ml_shift(params.kappa, t_hat) / params.chi;
    Ok(EstimatorResult {
        true_weight,
        estimate: raw.round().clamp(0.0, n_atoms as f64),
        raw_estimate: raw,
        variance: crb_variance(params, delta) / (n * params.chi * params.chi),
        photons_used: n_photons,
    })
}

/// Repeated experiments on independent streams `trajectory_rng(seed, rep)`.
pub fn estimator_trials(
    params: &CavityParams,
    n_atoms: u32,
    true_weight: u32,
    n_photons: u64,
    reps: u64,
    seed: u64,
) -> Result<Vec<EstimatorResult>> {
    (0..reps)
        .into_par_iter()
        .map(|r| simulate_weight_estimator(params, n_atoms, true_weight, n_photons, &mut trajectory_rng(seed, r)))
        .collect()
}

/// Sample mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Spacing of the two highest vacuum-Rabi peaks, `g (sqrt n - sqrt(n-1))`.
pub fn resonant_peak_gap(g: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("peak gap needs n >= 1".into()));
    }
    let n = n as f64;
    // sqrt n - sqrt(n-1) without cancellation
    Ok(g / (n.sqrt() + (n - 1.0).sqrt()))
}

/// Whether adjacent peaks are separated by at least a linewidth.
pub fn resolvable(g: f64, n: u32, kappa: f64) -> Result<bool> {
    Ok(resonant_peak_gap(g, n)? >= kappa)
}

/// Smallest coupling with a resolvable gap, `kappa (sqrt n + sqrt(n-1))`.
pub fn min_resolvable_coupling(n: u32, kappa: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("peak gap needs n >= 1".into()));
    }
    let n = n as f64;
    Ok(kappa * (n.sqrt() + (n - 1.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> CavityParams {
        CavityParams::new(1.0, 0.01).unwrap()
    }

    #[test]
    fn transmission_points() {
        let c = CavityParams::new(2.0, 0.1).unwrap();
        assert_eq!(transmission(&c, 0.7, 0.7), 1.0);
        assert!((transmission(&c, 2.0 + 0.3, 0.3) - 0.5).abs() < 1e-15);
        assert!((probe_transmission(&c, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fisher_closed_forms() {
        let c = CavityParams::new(1.5, 0.0).unwrap();
        assert!((fisher_information(&c, 0.0) - 1.0 / 2.25).abs() < 1e-15);
        assert!((fisher_information(&c, 1.5) - 4.0 / 2.25).abs() < 1e-15);
        for d in [0.0, 0.1, 0.4, 1.0, 2.2] {
            assert!((fisher_information(&c, d) * crb_variance(&c, d) - 1.0).abs() < 1e-14);
            let fd = bernoulli_fisher_fd(&c, d, 1e-3);
            assert!((fd - fisher_information(&c, d)).abs() < 1e-8 * fisher_information(&c, d), "{d}: {fd}");
        }
    }

    #[test]
    fn photon_budget() {
        assert_eq!(required_photons(&p(), 20, 1.0).unwrap(), 10_000);
        let mut last = u64::MAX;
        for chi in [0.001, 0.002, 0.005, 0.01] {
            let n = required_photons(&CavityParams::new(1.0, chi).unwrap(), 20, 1.0).unwrap();
            assert!(n < last);
            last = n;
        }
        assert!(required_photons(&CavityParams::new(1.0, 0.0).unwrap(), 20, 1.0).is_err());
    }

    #[test]
    fn regime_enforced() {
        let mut rng = trajectory_rng(0, 0);
        assert!(matches!(simulate_weight_estimator(&p(), 21, 3, 100, &mut rng), Err(Error::RegimeViolation(_))));
        assert!(simulate_weight_estimator(&p(), 20, 3, 100, &mut rng).is_ok());
        assert!(simulate_weight_estimator(&p(), 20, 21, 100, &mut rng).is_err());
    }

    #[test]
    fn estimate_converges() {
        let mut errs = Vec::new();
        for n in [1_000u64, 10_000, 100_000] {
            let trials = estimator_trials(&p(), 20, 7, n, 400, 9).unwrap();
            let raw: Vec<f64> = trials.iter().map(|t| t.raw_estimate).collect();
            let (mean, var) = mean_variance(&raw);
            assert!((mean - 7.0).abs() < 4.0 * (var / 400.0).sqrt() + 0.05, "{n}: {mean}");
            errs.push(var);
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn peak_gap() {
        assert_eq!(resonant_peak_gap(3.0, 1).unwrap(), 3.0);
        let n = 1_000_000u32;
        assert!((resonant_peak_gap(1.0, n).unwrap() * (n as f64).sqrt() - 0.5).abs() < 1e-6);
        let g = min_resolvable_coupling(400, 0.5).unwrap();
        assert!(resolvable(g * (1.0 + 1e-12), 400, 0.5).unwrap());
        assert!(!resolvable(g * (1.0 - 1e-9), 400, 0.5).unwrap());
        assert!(resonant_peak_gap(1.0, 0).is_err());
    }
}
