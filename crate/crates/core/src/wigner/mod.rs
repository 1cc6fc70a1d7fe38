//! Wigner d-matrix columns `d^j_{m',m}(theta) = <j,m'| exp(-i theta J_y) |j,m>`.
//!
//! Two independent backends are provided. [`Backend::LogSum`] evaluates the
//! closed-form k-sum exactly and is limited to `two_j <= 600`;
//! [`Backend::TridiagonalPropagation`] integrates the real tridiagonal
//! generator and scales to large spins. Each validates the other.

mod logsum;
pub mod propagate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{two_m_at, validate_spin, Angle, SpinSpec};

pub use logsum::MAX_TWO_J as LOGSUM_MAX_TWO_J;
pub use propagate::{Band, Generator, Propagator, NORM_TOLERANCE};

/// Column norm deviation beyond which the k-sum result is rejected.
const LOGSUM_NORM_CHECK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    LogSum,
    TridiagonalPropagation,
}

impl Backend {
    /// The exact sum where it is allowed, propagation otherwise.
    pub fn auto(two_j: u32) -> Backend {
        if two_j <= 64 {
            Backend::LogSum
        } else {
            Backend::TridiagonalPropagation
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::LogSum => "log_sum",
            Backend::TridiagonalPropagation => "tridiagonal_propagation",
        })
    }
}

/// One column `d^j_{., m}(theta)`, indexed from `m' = -j` to `m' = +j`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationColumn {
    pub spec: SpinSpec,
    pub angle: Angle,
    pub amplitudes: Vec<f64>,
    pub backend: Backend,
}

impl RotationColumn {
    pub fn amplitude(&self, two_m_prime: i32) -> Result<f64> {
        let s = validate_spin(self.spec.two_j() as i64, two_m_prime as i64)?;
        Ok(self.amplitudes[s.index()])
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }

    /// `(two_m', amplitude)` pairs from `-j` to `+j`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        let tj = self.spec.two_j();
        self.amplitudes.iter().enumerate().map(move |(i, a)| (two_m_at(tj, i), *a))
    }
}

/// Computes the column of `|j, m>` rotated by `angle`.
pub fn d_column(spec: SpinSpec, angle: Angle, backend: Backend) -> Result<RotationColumn> {
    let amplitudes = match backend {
        Backend::LogSum => logsum_column(spec, angle.radians())?,
        Backend::TridiagonalPropagation => {
            let mut v = vec![0.0; spec.dim()];
            v[spec.index()] = 1.0;
            Propagator::new(spec.two_j()).rotate(&mut v, angle.radians())?;
            v
        }
    };
    Ok(RotationColumn { spec, angle, amplitudes, backend })
}

fn logsum_column(spec: SpinSpec, theta: f64) -> Result<Vec<f64>> {
    let tj = spec.two_j();
    if tj > logsum::MAX_TWO_J {
        return Err(Error::BackendOverflow(format!(
            "log-sum backend supports two_j <= {}, got {tj}",
            logsum::MAX_TWO_J
        )));
    }
    let amps = logsum::Column::new(tj, spec.two_m(), theta).all();
    let norm: f64 = amps.iter().map(|a| a * a).sum();
    if !((norm - 1.0).abs() <= LOGSUM_NORM_CHECK) {
        return Err(Error::BackendOverflow(format!("column norm^2 = {norm} for {spec}")));
    }
    Ok(amps)
}

/// A single element `d^j_{m', m}(theta)`.
pub fn d_element(spec_m: SpinSpec, two_m_prime: i32, angle: Angle) -> Result<f64> {
    let target = validate_spin(spec_m.two_j() as i64, two_m_prime as i64)?;
    if spec_m.two_j() <= logsum::MAX_TWO_J {
        return Ok(logsum::Column::new(spec_m.two_j(), spec_m.two_m(), angle.radians()).element(two_m_prime));
    }
    let col = d_column(spec_m, angle, Backend::TridiagonalPropagation)?;
    Ok(col.amplitudes[target.index()])
}

/// Measurement statistics `|d^j_{m', m}(theta)|^2` over `m'` from `-j` to `+j`.
pub fn outcome_distribution(spec: SpinSpec, angle: Angle) -> Result<Vec<f64>> {
    Ok(d_column(spec, angle, Backend::auto(spec.two_j()))?.probabilities())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn oracle(two_j: u32, theta: f64) -> DMatrix<f64> {
        let d = two_j as usize + 1;
        let mut g = DMatrix::<f64>::zeros(d, d);
        for i in 0..two_j as usize {
            let b = 0.5 * (((two_j as usize - i) * (i + 1)) as f64).sqrt();
            g[(i, i + 1)] = b;
            g[(i + 1, i)] = -b;
        }
        (g * theta).exp()
    }

    fn angle(x: f64) -> Angle {
        Angle::new(x).unwrap()
    }

    #[test]
    fn both_backends_match_dense_exponential() {
        for two_j in 0..=20u32 {
            for t in 0..9 {
                let theta = -PI + t as f64 * PI / 4.0 + 0.137;
                let theta = Angle::new(theta).unwrap();
                let u = oracle(two_j, theta.radians());
                for col in 0..=two_j as usize {
                    let spec = SpinSpec::new(two_j, two_m_at(two_j, col)).unwrap();
                    for backend in [Backend::LogSum, Backend::TridiagonalPropagation] {
                        let c = d_column(spec, theta, backend).unwrap();
                        for row in 0..=two_j as usize {
                            let diff = (c.amplitudes[row] - u[(row, col)]).abs();
                            assert!(diff < 1e-10, "{backend} j2={two_j} col={col} row={row}: {diff}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn spin_one_half_pi() {
        let p = outcome_distribution(SpinSpec::top(2), angle(PI / 2.0)).unwrap();
        for (got, want) in p.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-14);
        }
        let d = d_element(SpinSpec::top(2), 0, angle(PI / 2.0)).unwrap();
        assert!((d * d - 0.5).abs() < 1e-14);
    }

    #[test]
    fn top_state_at_half_pi_is_binomial() {
        let p = outcome_distribution(SpinSpec::top(4), angle(PI / 2.0)).unwrap();
        let want = [1.0, 4.0, 6.0, 4.0, 1.0].map(|x| x / 16.0);
        for (got, want) in p.iter().zip(want) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_and_pi_rotation() {
        for two_j in [5u32, 40, 301] {
            for two_m in [-(two_j as i32), two_j as i32 % 2, two_j as i32 - 2] {
                let Ok(spec) = SpinSpec::new(two_j, two_m) else { continue };
                for backend in [Backend::LogSum, Backend::TridiagonalPropagation] {
                    let c = d_column(spec, Angle::ZERO, backend).unwrap();
                    assert_eq!(c.amplitudes[spec.index()], 1.0);
                    let c = d_column(spec, angle(PI), backend).unwrap();
                    let flip = SpinSpec::new(two_j, -two_m).unwrap().index();
                    for (i, a) in c.amplitudes.iter().enumerate() {
                        let want = if i == flip { 1.0 } else { 0.0 };
                        assert!((a.abs() - want).abs() < 1e-10, "{backend} {spec} i={i} a={a}");
                    }
                }
            }
        }
    }

    #[test]
    fn transpose_symmetry() {
        let theta = angle(0.77);
        for two_j in [6u32, 13, 20] {
            for a in 0..=two_j as usize {
                for b in 0..=two_j as usize {
                    let (ma, mb) = (two_m_at(two_j, a), two_m_at(two_j, b));
                    let x = d_element(SpinSpec::new(two_j, mb).unwrap(), ma, theta).unwrap();
                    let y = d_element(SpinSpec::new(two_j, ma).unwrap(), mb, theta).unwrap();
                    let sign = if ((ma - mb) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    assert!((x - sign * y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn logsum_rejects_large_spins() {
        let r = d_column(SpinSpec::top(602), angle(0.3), Backend::LogSum);
        assert!(matches!(r, Err(Error::BackendOverflow(_))));
    }

    #[test]
    fn fifty_qubit_pairs_concentrate_near_zero() {
        let p = outcome_distribution(SpinSpec::top(100), angle(PI / 2.0)).unwrap();
        let inner: f64 = p
            .iter()
            .enumerate()
            .filter(|(i, _)| (two_m_at(100, *i) as f64 / 2.0).abs() <= 50f64.sqrt())
            .map(|(_, x)| x)
            .sum();
        assert!(inner >= 0.8, "{inner}");
    }
}
