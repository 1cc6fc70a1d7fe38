//! Large-`j` analytics of the rotation step: the stationary-phase form of
//! `d^j_{m',m}(beta_m)`, its Bessel limit, the `M^alpha` contraction sums and
//! the beta-moment formulas of the geometric ring model.
//!
//! Here `beta_m = arcsin(m / j)` and amplitudes are compared in the sign
//! convention of [`crate::wigner`].

use std::f64::consts::{FRAC_PI_4, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::angles::{geometric_angle, policy_angles};
use crate::error::{Error, Result};
use crate::special::{bessel_j, beta};
use crate::spin::{ring_radius, validate_spin, Angle, AnglePolicy, SpinSpec};
use crate::wigner::{d_column, Backend, RotationColumn};

/// Relative window `m'/m` in which the stationary-phase comparison is made.
pub const INTERIOR_WINDOW: (f64, f64) = (0.2, 1.8);

/// One `m'` of an exact-versus-asymptotic comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticComparison {
    pub two_j: u32,
    pub two_m: i32,
    pub two_m_prime: i32,
    pub exact: f64,
    pub approx: f64,
    pub abs_error: f64,
    /// `max(m^2 / j^2, 1 / (m j))`
    pub predicted_error_scale: f64,
}

impl AsymptoticComparison {
    fn new(two_j: u32, two_m: i32, two_m_prime: i32, exact: f64, approx: f64) -> Self {
        let (j, m) = (0.5 * two_j as f64, 0.5 * two_m as f64);
        AsymptoticComparison {
            two_j,
            two_m,
            two_m_prime,
            exact,
            approx,
            abs_error: (exact - approx).abs(),
            predicted_error_scale: (m * m / (j * j)).max(1.0 / (m * j)),
        }
    }
}

/// `beta_m = arcsin(m / j)`.
pub fn beta_angle(two_j: u32, two_m: i32) -> Result<Angle> {
    validate_spin(two_j as i64, two_m as i64)?;
    if two_j == 0 {
        return Ok(Angle::ZERO);
    }
    Angle::new((two_m as f64 / two_j as f64).asin())
}

/// Exact column `d^j_{., m}(beta_m)` from the propagation backend.
pub fn exact_column_at_beta(two_j: u32, two_m: i32) -> Result<RotationColumn> {
    let spec = SpinSpec::new(two_j, two_m)?;
    d_column(spec, beta_angle(two_j, two_m)?, Backend::TridiagonalPropagation)
}

/// Stationary-phase approximation of `d^j_{m',m}(beta_m)` for `0 < m' < 2m`,
///
/// `sqrt(2/(pi m)) (1-y^2)^(-1/4) cos[m y arccos y - m sqrt(1-y^2) + pi/4]`
/// with `y = 1 - m'/m`.
pub fn stationary_phase_d(two_j: u32, two_m: i32, two_m_prime: i32) -> Result<f64> {
    validate_spin(two_j as i64, two_m as i64)?;
    validate_spin(two_j as i64, two_m_prime as i64)?;
    if two_m <= 0 || two_m_prime <= 0 || two_m_prime >= 2 * two_m {
        return Err(Error::Domain(format!(
            "stationary-phase form needs 0 < m' < 2m, got m = {}, m' = {}",
            0.5 * two_m as f64,
            0.5 * two_m_prime as f64
        )));
    }
    let m = 0.5 * two_m as f64;
    let y = 1.0 - two_m_prime as f64 / two_m as f64;
    let s = (1.0 - y * y).sqrt();
    let phase = m * y * y.acos() - m * s + FRAC_PI_4;
    Ok((2.0 / (PI * m)).sqrt() * s.powf(-0.5) * phase.cos())
}

/// Compare the stationary-phase form with the exact column over the
/// lattice points with `m'/m` strictly inside `window`.
pub fn stationary_phase_comparison(two_j: u32, two_m: i32, window: (f64, f64)) -> Result<Vec<AsymptoticComparison>> {
    let col = exact_column_at_beta(two_j, two_m)?;
    let (lo, hi) = (window.0 * two_m as f64, window.1 * two_m as f64);
    col.iter()
        .filter(|&(tmp, _)| (tmp as f64) > lo && (tmp as f64) < hi && tmp > 0 && tmp < 2 * two_m)
        .map(|(tmp, exact)| Ok(AsymptoticComparison::new(two_j, two_m, tmp, exact, stationary_phase_d(two_j, two_m, tmp)?)))
        .collect()
}

/// Largest interior error of the stationary-phase form.
pub fn max_interior_error(two_j: u32, two_m: i32) -> Result<f64> {
    let rows = stationary_phase_comparison(two_j, two_m, INTERIOR_WINDOW)?;
    if rows.is_empty() {
        return Err(Error::Domain(format!("no lattice points inside the interior window for two_m = {two_m}")));
    }
    Ok(rows.iter().map(|r| r.abs_error).fold(0.0, f64::max))
}

/// `J_{m-m'}(m)`, the limit of `d^j_{m',m}(beta_m)` at fixed `m` as `j` grows.
pub fn bessel_limit(two_m: i32, two_m_prime: i32) -> Result<f64> {
    if (two_m - two_m_prime) % 2 != 0 {
        return Err(Error::ParityMismatch { two_j: two_m.unsigned_abs(), two_m: two_m_prime as i64 });
    }
    Ok(bessel_j(((two_m - two_m_prime) / 2) as i64, 0.5 * two_m as f64))
}

/// Exact column entries next to `m` (`|m - m'| <= reach`) against their
/// Bessel limits.
pub fn bessel_comparison(two_j: u32, two_m: i32, reach: u32) -> Result<Vec<AsymptoticComparison>> {
    let col = exact_column_at_beta(two_j, two_m)?;
    let reach = 2 * reach as i32;
    col.iter()
        .filter(|&(tmp, _)| (tmp - two_m).abs() <= reach)
        .map(|(tmp, exact)| Ok(AsymptoticComparison::new(two_j, two_m, tmp, exact, bessel_limit(two_m, tmp)?)))
        .collect()
}

/// Proxy `M` for the distance to `m_t = 0`: `|m|` up to `sqrt j`, then
/// saturated at `sqrt j + 1` (the reset region).
pub fn proxy(two_j: u32, two_m: i32) -> f64 {
    let j = 0.5 * two_j as f64;
    // |m| <= sqrt j  <=>  two_m^2 <= 2 two_j, exactly
    if (two_m as i64).pow(2) <= 2 * two_j as i64 {
        0.5 * two_m.unsigned_abs() as f64
    } else {
        j.sqrt() + 1.0
    }
}

/// `sum_{m'} |d^j_{m',m}(theta)|^2 (M'/M)^alpha` with `theta` chosen by
/// `policy` for target `m_t = 0`.
pub fn contraction_sum(two_j: u32, alpha: f64, two_m: i32, policy: AnglePolicy) -> Result<f64> {
    let spec = validate_spin(two_j as i64, two_m as i64)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("contraction exponent must lie in (0, 1], got {alpha}")));
    }
    if two_m == 0 || (two_m as i64).pow(2) > 2 * two_j as i64 {
        return Err(Error::Domain(format!("contraction sum needs 0 < |m| <= sqrt j, got two_m = {two_m}")));
    }
    let angle = policy_angles(policy, two_j, 0, &[two_m])?[0];
    let col = d_column(spec, angle, Backend::auto(two_j))?;
    let denom = proxy(two_j, two_m).powf(alpha);
    Ok(col.iter().map(|(tmp, d)| d * d * proxy(two_j, tmp).powf(alpha)).sum::<f64>() / denom)
}

/// Contraction sums over every `m` with `ceil(j^(1/4)) <= m <= floor(sqrt j)`
/// (`m` integer, so `two_j` must be even). Returns `(two_m, sum)` pairs.
pub fn contraction_window(two_j: u32, alpha: f64, policy: AnglePolicy) -> Result<Vec<(i32, f64)>> {
    if two_j % 2 != 0 {
        return Err(Error::InvalidArgument("contraction window expects integer j".into()));
    }
    let j = two_j as u64 / 2;
    let lo = (j as f64).powf(0.25).ceil() as i32;
    let hi = isqrt(j) as i32;
    (lo.max(1)..=hi)
        .into_par_iter()
        .map(|m| Ok((2 * m, contraction_sum(two_j, alpha, 2 * m, policy)?)))
        .collect()
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `B(alpha + 1/2, 1/2) 2^alpha / pi`, the ring-model contraction factor.
pub fn beta_moment_factor(alpha: f64) -> f64 {
    beta(alpha + 0.5, 0.5) * 2f64.powf(alpha) / PI
}

/// `ln` of [`beta_moment_factor`]; negative on `(0, 1)`, zero at both ends.
pub fn log_moment_factor(alpha: f64) -> f64 {
    beta_moment_factor(alpha).ln()
}

/// `E[(m' - m_t)^alpha]` under the ring model:
/// `B(alpha + 1/2, 1/2) / pi * (2 r_m sin theta)^alpha` with the geometric
/// angle `theta`.
pub fn beta_moment(alpha: f64, two_j: u32, two_m: i32, two_mt: i32) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("moment order must be positive, got {alpha}")));
    }
    if two_m <= two_mt {
        return Err(Error::Domain(format!("beta moment needs m > m_t, got two_m = {two_m}, two_mt = {two_mt}")));
    }
    let theta = geometric_angle(two_j, two_mt, two_m)?.radians();
    let r = ring_radius(SpinSpec::new(two_j, two_m)?);
    Ok(beta(alpha + 0.5, 0.5) / PI * (2.0 * r * theta.sin()).powf(alpha))
}

/// Ring-model reset probability `1/2 - arcsin(sqrt(j)/m - 1)/pi` for
/// `sqrt(j)/2 <= m <= sqrt(j)`.
pub fn reset_probability(two_j: u32, two_m: i32) -> Result<f64> {
    validate_spin(two_j as i64, two_m as i64)?;
    let (j, m) = (0.5 * two_j as f64, 0.5 * two_m as f64);
    let arg = j.sqrt() / m - 1.0;
    // the closed interval keeps the boundary example (probability 0) in range
    if two_m <= 0 || !(0.0..=1.0).contains(&arg) {
        return Err(Error::Domain(format!("reset probability needs sqrt(j)/2 <= m <= sqrt(j), got j = {j}, m = {m}")));
    }
    Ok(0.5 - arg.asin() / PI)
}

/// Exact mass of `|d^j_{m',m}(beta_m)|^2` on `|m'| > sqrt j`.
pub fn exact_reset_probability(two_j: u32, two_m: i32) -> Result<f64> {
    let col = exact_column_at_beta(two_j, two_m)?;
    Ok(col.iter().filter(|&(tmp, _)| (tmp as i64).pow(2) > 2 * two_j as i64).map(|(_, d)| d * d).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_phase_midpoint() {
        let (tj, tm) = (20_000, 200);
        let got = stationary_phase_d(tj, tm, tm).unwrap();
        let want = (2.0 / (PI * 100.0)).sqrt() * (FRAC_PI_4 - 100.0).cos();
        assert!((got - want).abs() < 1e-15);
        assert!(matches!(stationary_phase_d(tj, tm, -2), Err(Error::Domain(_))));
        assert!(matches!(stationary_phase_d(tj, tm, 0), Err(Error::Domain(_))));
        assert!(matches!(stationary_phase_d(tj, tm, 400), Err(Error::Domain(_))));
    }

    #[test]
    fn stationary_phase_tracks_exact_column() {
        // j = 1e4, m = 100, m' = 50
        let rows = stationary_phase_comparison(20_000, 200, (0.49, 0.51)).unwrap();
        assert_eq!(rows.len(), 1);
        let r = rows[0];
        assert_eq!(r.two_m_prime, 100);
        assert!(r.abs_error < 0.05 * r.exact.abs().max(r.approx.abs()), "{r:?}");
        assert!(r.abs_error < 100.0 * r.predicted_error_scale, "{r:?}");
    }

    #[test]
    fn bessel_limit_values() {
        assert_eq!(bessel_limit(40, 40).unwrap(), bessel_j(0, 20.0));
        // J_1(20) = 0.06683312417584993
        assert!((bessel_limit(40, 38).unwrap() - 0.066_833_124_175_849_93).abs() < 1e-12);
        assert!(bessel_limit(40, 37).is_err());
        for tmp in (34..=46).step_by(2) {
            assert!(bessel_limit(40, tmp).unwrap().abs() > 1e-3);
        }
    }

    #[test]
    fn bessel_limit_is_approached() {
        let errs: Vec<f64> = [2_000u32, 20_000]
            .iter()
            .map(|&tj| bessel_comparison(tj, 40, 3).unwrap().iter().map(|r| r.abs_error).fold(0.0, f64::max))
            .collect();
        assert!(errs[1] < errs[0] && errs[1] < 1e-2, "{errs:?}");
    }

    #[test]
    fn proxy_saturates() {
        // j = 100: sqrt j = 10
        assert_eq!(proxy(200, 20), 10.0);
        assert_eq!(proxy(200, -20), 10.0);
        assert_eq!(proxy(200, 22), 11.0);
        assert_eq!(proxy(200, 0), 0.0);
    }

    #[test]
    fn contraction_below_one() {
        for (m, c) in contraction_window(800, 0.05, AnglePolicy::ApproxMt0).unwrap() {
            assert!(c < 1.0, "m = {}: {c}", m / 2);
        }
        assert!(contraction_sum(800, 0.05, 0, AnglePolicy::ApproxMt0).is_err());
        assert!(contraction_sum(800, 1.5, 4, AnglePolicy::ApproxMt0).is_err());
    }

    #[test]
    fn moment_factor_properties() {
        assert!((beta_moment_factor(1.0) - 1.0).abs() < 1e-14);
        assert!(log_moment_factor(1e-9).abs() < 1e-8);
        for k in 1..10 {
            let a = k as f64 / 10.0;
            assert!(log_moment_factor(a) < 0.0);
            // convexity via second differences
            let h = 0.01;
            assert!(log_moment_factor(a - h) + log_moment_factor(a + h) - 2.0 * log_moment_factor(a) > 0.0);
        }
    }

    #[test]
    fn first_moment_is_half_chord() {
        let (tj, tm) = (400, 30);
        let theta = geometric_angle(tj, 0, tm).unwrap().radians();
        let r = ring_radius(SpinSpec::new(tj, tm).unwrap());
        assert!((beta_moment(1.0, tj, tm, 0).unwrap() - r * theta.sin()).abs() < 1e-12);
        assert!(beta_moment(0.5, tj, 0, 0).is_err());
    }

    #[test]
    fn reset_probability_boundaries() {
        // j = 2500: sqrt j = 50
        assert!((reset_probability(5000, 100).unwrap() - 0.5).abs() < 1e-15);
        assert!(reset_probability(5000, 50).unwrap().abs() < 1e-15);
        assert!(reset_probability(5000, 48).is_err());
        assert!(reset_probability(5000, 102).is_err());
        let p = reset_probability(5000, 80).unwrap();
        let exact = exact_reset_probability(5000, 80).unwrap();
        assert!((p - exact).abs() < 0.1, "{p} vs {exact}");
    }
}
