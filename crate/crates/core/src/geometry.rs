//! Phase-space picture: Husimi-Q rings of Dicke states and the tilted-ring
//! (arc-length) model of a rotation step.
//!
//! Q is normalized so that `int Q dOmega = 1` with
//! `dOmega = (2j+1)/4 sin(theta) dtheta dphi`; with the `1/pi` prefactor kept
//! in Q this is the `(2j+1)/(4 pi)` coherent-state measure.

use std::f64::consts::PI;

use quadrature::double_exponential;

use crate::angles::geometric_angle;
use crate::error::{Error, Result};
use crate::special::ln_binomial;
use crate::spin::{ring_radius, validate_spin, SpinSpec};
use crate::wigner::outcome_distribution;

const QUAD_TOL: f64 = 1e-14;

/// `ln Q_m(theta)`; `-inf` where Q vanishes.
pub fn log_husimi_q(spec: SpinSpec, theta: f64) -> f64 {
    let a = 0.5 * (spec.two_j() as i64 + spec.two_m() as i64) as f64; // j + m
    let b = 0.5 * (spec.two_j() as i64 - spec.two_m() as i64) as f64; // j - m
    let half = 0.5 * theta;
    let term = |power: f64, x: f64| if power == 0.0 { 0.0 } else { 2.0 * power * x.abs().ln() };
    ln_binomial(spec.two_j() as u64, spec.weight() as u64) + term(a, half.cos()) + term(b, half.sin()) - PI.ln()
}

/// Husimi Q of `|j, m>` at the coherent state `|theta, phi>`:
/// `C(2j, j+m) cos^{2(j+m)}(theta/2) sin^{2(j-m)}(theta/2) / pi`.
/// Independent of `phi`.
pub fn husimi_q_dicke(spec: SpinSpec, theta: f64, _phi: f64) -> f64 {
    log_husimi_q(spec, theta).exp()
}

/// `d/dtheta ln Q_m = (j-m) cot(theta/2) - (j+m) tan(theta/2)`.
pub fn d_log_q_dtheta(spec: SpinSpec, theta: f64) -> f64 {
    let (j, m) = (spec.j(), spec.m());
    let t = (0.5 * theta).tan();
    (j - m) / t - (j + m) * t
}

/// Polar angle of the ring, `arccos(m / j)`.
pub fn ring_peak_theta(spec: SpinSpec) -> f64 {
    if spec.two_j() == 0 {
        return 0.0;
    }
    (spec.m() / spec.j()).clamp(-1.0, 1.0).acos()
}

/// Q sampled on a `theta x phi` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct QDistribution {
    pub spec: SpinSpec,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Row-major, one row per theta.
    pub values: Vec<f64>,
}

impl QDistribution {
    /// Midpoint grid with `n_theta` polar and `n_phi` azimuthal cells.
    pub fn on_grid(spec: SpinSpec, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::InvalidArgument("Q grid needs at least one cell per axis".into()));
        }
        let thetas: Vec<f64> = (0..n_theta).map(|i| PI * (i as f64 + 0.5) / n_theta as f64).collect();
        let phis: Vec<f64> = (0..n_phi).map(|i| 2.0 * PI * (i as f64 + 0.5) / n_phi as f64).collect();
        let values = thetas.iter().flat_map(|&t| phis.iter().map(move |&p| husimi_q_dicke(spec, t, p))).collect();
        Ok(QDistribution { spec, thetas, phis, values })
    }

    pub fn at(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.values[i_theta * self.phis.len() + i_phi]
    }

    /// Midpoint-rule estimate of `int Q dOmega`.
    pub fn integral(&self) -> f64 {
        let (dt, dp) = (PI / self.thetas.len() as f64, 2.0 * PI / self.phis.len() as f64);
        let w = (self.spec.two_j() as f64 + 1.0) / 4.0;
        let mut acc = 0.0;
        for (i, t) in self.thetas.iter().enumerate() {
            let row: f64 = (0..self.phis.len()).map(|k| self.at(i, k)).sum();
            acc += row * t.sin();
        }
        acc * dt * dp * w
    }
}

/// `int Q dOmega` by adaptive quadrature, split at the ring.
pub fn q_normalization(spec: SpinSpec) -> f64 {
    let f = |t: f64| husimi_q_dicke(spec, t, 0.0) * t.sin();
    let peak = ring_peak_theta(spec);
    let mut total = 0.0;
    for (a, b) in [(0.0, peak), (peak, PI)] {
        if b > a {
            total += double_exponential::integrate(f, a, b, QUAD_TOL).integral;
        }
    }
    (spec.two_j() as f64 + 1.0) / 4.0 * 2.0 * PI * total
}

/// Half-width `R = r_m |sin theta|` of the tilted ring's shadow on the
/// `J_z` axis, with `theta` the geometric angle.
fn chord(two_j: u32, two_m: i32, two_mt: i32) -> Result<f64> {
    let theta = geometric_angle(two_j, two_mt, two_m)?.radians();
    Ok(ring_radius(validate_spin(two_j as i64, two_m as i64)?) * theta.sin().abs())
}

/// Ring-model density of the outcome `m'` after rotating `|j, m>` by the
/// geometric angle toward `m_t`:
/// `1 / (pi R sqrt(u (2 - u)))` with `u = |m' - m_t| / R` on the side of
/// `m_t` facing `m`, zero elsewhere.
pub fn geometric_transition_pdf(two_j: u32, two_m: i32, two_mt: i32, m_prime: f64) -> Result<f64> {
    let r = chord(two_j, two_m, two_mt)?;
    if r == 0.0 || two_m == two_mt {
        return Ok(0.0);
    }
    let u = (m_prime - 0.5 * two_mt as f64) * ((two_m - two_mt).signum() as f64) / r;
    if u <= 0.0 || u >= 2.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (PI * r * (u * (2.0 - u)).sqrt()))
}

/// Ring-model CDF in the reduced variable `u`.
fn cdf_u(u: f64) -> f64 {
    let u = u.clamp(0.0, 2.0);
    ((u - 1.0).asin() + 0.5 * PI) / PI
}

/// The ring-model pdf integrated over unit bins centred on the lattice
/// points `m' = -j, ..., j`.
pub fn discretized_pdf(two_j: u32, two_m: i32, two_mt: i32) -> Result<Vec<f64>> {
    let r = chord(two_j, two_m, two_mt)?;
    let dim = two_j as usize + 1;
    if r == 0.0 || two_m == two_mt {
        return Err(Error::Domain(format!("ring model degenerate for two_m = {two_m}, two_mt = {two_mt}")));
    }
    let sign = (two_m - two_mt).signum() as f64;
    let mt = 0.5 * two_mt as f64;
    Ok((0..dim)
        .map(|i| {
            let mp = 0.5 * (2 * i as i64 - two_j as i64) as f64;
            let (a, b) = ((mp - 0.5 - mt) * sign / r, (mp + 0.5 - mt) * sign / r);
            (cdf_u(a.max(b)) - cdf_u(a.min(b))).abs()
        })
        .collect())
}

/// Total-variation distance between the discretized ring model and the
/// exact outcome distribution at the geometric angle.
pub fn ring_model_tv(two_j: u32, two_m: i32, two_mt: i32) -> Result<f64> {
    let model = discretized_pdf(two_j, two_m, two_mt)?;
    let angle = geometric_angle(two_j, two_mt, two_m)?;
    let exact = outcome_distribution(SpinSpec::new(two_j, two_m)?, angle)?;
    Ok(0.5 * model.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `int_0^{2R} (m' - m_t)^alpha p(m') dm'` by quadrature after the
/// substitution `u = 1 - cos v`, which removes both endpoint singularities.
pub fn pdf_moment(alpha: f64, two_j: u32, two_m: i32, two_mt: i32) -> Result<f64> {
    let r = chord(two_j, two_m, two_mt)?;
    let f = |v: f64| (r * (1.0 - v.cos())).powf(alpha);
    Ok(double_exponential::integrate(f, 0.0, PI, QUAD_TOL).integral / PI)
}

/// Total probability of the ring-model pdf, by the same quadrature.
pub fn pdf_mass(two_j: u32, two_m: i32, two_mt: i32) -> Result<f64> {
    let r = chord(two_j, two_m, two_mt)?;
    let mt = 0.5 * two_mt as f64;
    let sign = (two_m - two_mt).signum() as f64;
    // dm' = R sin v dv
    let f = |v: f64| {
        let mp = mt + sign * r * (1.0 - v.cos());
        geometric_transition_pdf(two_j, two_m, two_mt, mp).unwrap_or(0.0) * r * v.sin()
    };
    Ok(double_exponential::integrate(f, 0.0, PI, QUAD_TOL).integral)
}

/// `ds/da = 2 / sqrt(1 - (a/r)^2)` for the chord coordinate `a` of a ring of
/// radius `r`.
pub fn infinitesimal_arc_length(r: f64, a: f64) -> Result<f64> {
    if !(r > 0.0) || !(a.abs() < r) {
        return Err(Error::Domain(format!("arc length needs |a| < r, got a = {a}, r = {r}")));
    }
    let x = a / r;
    Ok(2.0 / ((1.0 - x) * (1.0 + x)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_and_equator_values() {
        let top = SpinSpec::top(20);
        assert!((husimi_q_dicke(top, 0.0, 0.3) - 1.0 / PI).abs() < 1e-15);
        let eq = SpinSpec::new(20, 0).unwrap();
        let peak = husimi_q_dicke(eq, PI / 2.0, 0.0);
        for k in 1..40 {
            assert!(husimi_q_dicke(eq, PI * k as f64 / 40.0, 0.0) <= peak + 1e-15);
        }
        assert_eq!(husimi_q_dicke(eq, 1.0, 0.0), husimi_q_dicke(eq, 1.0, 2.5));
    }

    #[test]
    fn q_closed_form_small_j() {
        // j = 1, m = 0: 2 cos^2 sin^2 / pi
        let s = SpinSpec::new(2, 0).unwrap();
        let t: f64 = 0.7;
        let want = 2.0 * (t / 2.0).cos().powi(2) * (t / 2.0).sin().powi(2) / PI;
        assert!((husimi_q_dicke(s, t, 0.0) - want).abs() < 1e-15);
    }

    #[test]
    fn q_normalized() {
        for (tj, tm) in [(1u32, 1i32), (2, 0), (20, -6), (101, 33), (400, 0), (400, 398)] {
            let s = SpinSpec::new(tj, tm).unwrap();
            assert!((q_normalization(s) - 1.0).abs() < 1e-6, "{s:?}: {}", q_normalization(s));
        }
        let grid = QDistribution::on_grid(SpinSpec::new(10, 2).unwrap(), 400, 3).unwrap();
        assert!((grid.integral() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn ring_peak_is_stationary() {
        for tj in [2u32, 17, 64, 200, 400] {
            for tm in (-(tj as i32) + 2..tj as i32).step_by(2) {
                let s = SpinSpec::new(tj, tm).unwrap();
                let t = ring_peak_theta(s);
                let scale = s.j() / (0.5 * t).tan().max(1e-300);
                assert!(d_log_q_dtheta(s, t).abs() <= 1e-12 * scale.max(1.0), "{s:?}");
            }
        }
    }

    #[test]
    fn pdf_midpoint_and_support() {
        let (tj, tm) = (400, 20);
        let r = chord(tj, tm, 0).unwrap();
        let p = geometric_transition_pdf(tj, tm, 0, r).unwrap();
        assert!((p - 1.0 / (PI * r)).abs() < 1e-15);
        assert_eq!(geometric_transition_pdf(tj, tm, 0, -0.5).unwrap(), 0.0);
        assert_eq!(geometric_transition_pdf(tj, tm, 0, 2.0 * r + 0.1).unwrap(), 0.0);
        // mirrored for m below the target
        assert!((geometric_transition_pdf(tj, -tm, 0, -r).unwrap() - p).abs() < 1e-15);
    }

    #[test]
    fn pdf_integrates_to_one() {
        for (tj, tm, tmt) in [(400u32, 20i32, 0i32), (3200, 40, 0), (400, 60, 10)] {
            assert!((pdf_mass(tj, tm, tmt).unwrap() - 1.0).abs() < 1e-8);
            let bins: f64 = discretized_pdf(tj, tm, tmt).unwrap().iter().sum();
            assert!((bins - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_length() {
        assert_eq!(infinitesimal_arc_length(3.0, 0.0).unwrap(), 2.0);
        assert!(infinitesimal_arc_length(1.0, 1.0 - 1e-13).unwrap() > 1e6);
        assert!(infinitesimal_arc_length(1.0, 1.0).is_err());
        assert!(infinitesimal_arc_length(1.0, -2.0).is_err());
        let r = 2.5;
        // a = -r cos v, da = r sin v dv
        let f = |v: f64| infinitesimal_arc_length(r, -r * v.cos()).map_or(0.0, |ds| ds * r * v.sin());
        // the integrand is even and periodic in v, so the midpoint rule converges
        // spectrally and never samples the tangency points
        let n = 2000;
        let len: f64 = (0..n).map(|k| f(PI * (k as f64 + 0.5) / n as f64)).sum::<f64>() * PI / n as f64;
        assert!((len - 2.0 * PI * r).abs() < 1e-8, "{len}");
    }
}
