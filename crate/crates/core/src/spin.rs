//! Quantum-number arithmetic and the protocol configuration shared by every
//! other module.
//!
//! Spin quantum numbers are carried as doubled integers (`two_j`, `two_m`) so
//! that half-integer spins (odd qubit counts) are represented exactly.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A collective spin `|j, m>` of `n = two_j` qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinSpec {
    two_j: u32,
    two_m: i32,
}

/// Checks the doubled quantum numbers and builds a [`SpinSpec`].
pub fn validate_spin(two_j: i64, two_m: i64) -> Result<SpinSpec> {
    if two_j < 0 || two_j > i32::MAX as i64 {
        return Err(Error::InvalidArgument(format!("two_j = {two_j} must be a non-negative 32-bit integer")));
    }
    let tj = two_j as u32;
    if two_m.abs() > two_j {
        return Err(Error::OutOfRange { two_j: tj, two_m });
    }
    if (two_j - two_m).rem_euclid(2) != 0 {
        return Err(Error::ParityMismatch { two_j: tj, two_m });
    }
    Ok(SpinSpec { two_j: tj, two_m: two_m as i32 })
}

impl SpinSpec {
    pub fn new(two_j: u32, two_m: i32) -> Result<Self> {
        validate_spin(two_j as i64, two_m as i64)
    }

    /// The fully polarized state `|j, j>`, i.e. all qubits in `|0>`.
    pub fn top(two_j: u32) -> Self {
        SpinSpec { two_j, two_m: two_j as i32 }
    }

    /// Builds `|j, m>` from a qubit count and a Hamming weight `w = j - m`.
    pub fn from_weight(n: u32, w: u32) -> Result<Self> {
        if w > n {
            return Err(Error::OutOfRange { two_j: n, two_m: n as i64 - 2 * w as i64 });
        }
        Ok(SpinSpec { two_j: n, two_m: n as i32 - 2 * w as i32 })
    }

    /// Same `j`, different projection.
    pub fn with_two_m(self, two_m: i32) -> Result<Self> {
        SpinSpec::new(self.two_j, two_m)
    }

    pub fn two_j(self) -> u32 {
        self.two_j
    }

    pub fn two_m(self) -> i32 {
        self.two_m
    }

    pub fn j(self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn m(self) -> f64 {
        self.two_m as f64 / 2.0
    }

    /// Number of qubits.
    pub fn n(self) -> u32 {
        self.two_j
    }

    /// Hamming weight `w = j - m`.
    pub fn weight(self) -> u32 {
        ((self.two_j as i64 - self.two_m as i64) / 2) as u32
    }

    /// Position of this `m` in a length `two_j + 1` vector ordered from `-j`
    /// to `+j`.
    pub fn index(self) -> usize {
        ((self.two_j as i64 + self.two_m as i64) / 2) as usize
    }

    pub fn dim(self) -> usize {
        self.two_j as usize + 1
    }
}

impl fmt::Display for SpinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}/2, {}/2>", self.two_j, self.two_m)
    }
}

/// `two_m` of the state stored at `index` in a vector for spin `two_j`.
pub fn two_m_at(two_j: u32, index: usize) -> i32 {
    2 * index as i32 - two_j as i32
}

/// Radius of the Husimi ring of `|j, m>`: `sqrt(j(j+1) - m^2)`.
pub fn ring_radius(spec: SpinSpec) -> f64 {
    let (tj, tm) = (spec.two_j as f64, spec.two_m as f64);
    // 4 r^2 = two_j (two_j + 2) - two_m^2, exact in integers.
    (0.25 * (tj * (tj + 2.0) - tm * tm)).max(0.0).sqrt()
}

/// A rotation angle about `+y`, canonicalized to `[-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Result<Self> {
        if !radians.is_finite() {
            return Err(Error::InvalidArgument(format!("angle {radians} is not finite")));
        }
        if (-PI..=PI).contains(&radians) {
            return Ok(Angle(radians));
        }
        let mut r = (radians + PI).rem_euclid(2.0 * PI) - PI;
        if r < -PI {
            r = -PI;
        }
        Ok(Angle(r))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnglePolicy {
    /// Ring-tangency angle `arcsin[(m r_mt - mt r_m) / r_0^2]`.
    Geometric,
    /// `arcsin(m / j)`, the simplified angle for `m_t = 0`.
    ApproxMt0,
    /// Numerically maximized single-step overlap with the target.
    NumericOptimal,
}

impl fmt::Display for AnglePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnglePolicy::Geometric => "geometric",
            AnglePolicy::ApproxMt0 => "approx_mt0",
            AnglePolicy::NumericOptimal => "numeric_optimal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetPolicy {
    None,
    /// Reset to `|j, j>` whenever the measured `|m| > sqrt(j)`.
    SqrtJ,
    /// Reset whenever the measured `|m|` exceeds the given threshold.
    Custom(f64),
}

impl ResetPolicy {
    /// Whether a measured `two_m` sends the register back to `|j, j>`.
    pub fn triggers(self, two_j: u32, two_m: i32) -> bool {
        match self {
            ResetPolicy::None => false,
            // m^2 > j  <=>  two_m^2 > 2 two_j, exact in integers.
            ResetPolicy::SqrtJ => (two_m as i64).pow(2) > 2 * two_j as i64,
            ResetPolicy::Custom(t) => (two_m.unsigned_abs() as f64) > 2.0 * t,
        }
    }
}

impl fmt::Display for ResetPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResetPolicy::None => f.write_str("none"),
            ResetPolicy::SqrtJ => f.write_str("sqrt_j"),
            ResetPolicy::Custom(t) => write!(f, "custom({t})"),
        }
    }
}

/// Default safety cap on protocol iterations: `10 ceil(log2(j + 2)) + 100`.
pub fn default_max_iterations(two_j: u32) -> u32 {
    let j = two_j as f64 / 2.0;
    10 * (j + 2.0).log2().ceil() as u32 + 100
}

/// Everything needed to run or analyze one preparation protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolConfig {
    /// The spin sector; the protocol always starts from `|j, j>`.
    pub spin: SpinSpec,
    pub target_two_mt: i32,
    pub angle_policy: AnglePolicy,
    pub reset_policy: ResetPolicy,
    pub max_iterations: u32,
    pub rng_seed: u64,
}

impl ProtocolConfig {
    /// Config with the geometric angle, no resets and the default cap.
    pub fn new(two_j: u32, target_two_mt: i32) -> Result<Self> {
        let cfg = ProtocolConfig {
            spin: SpinSpec::top(two_j),
            target_two_mt,
            angle_policy: AnglePolicy::Geometric,
            reset_policy: ResetPolicy::None,
            max_iterations: default_max_iterations(two_j),
            rng_seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_angle_policy(mut self, policy: AnglePolicy) -> Result<Self> {
        self.angle_policy = policy;
        self.validate()?;
        Ok(self)
    }

    pub fn with_reset_policy(mut self, policy: ResetPolicy) -> Self {
        self.reset_policy = policy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, cap: u32) -> Result<Self> {
        self.max_iterations = cap;
        self.validate()?;
        Ok(self)
    }

    pub fn two_j(&self) -> u32 {
        self.spin.two_j()
    }

    pub fn target(&self) -> SpinSpec {
        SpinSpec { two_j: self.spin.two_j(), two_m: self.target_two_mt }
    }

    pub fn validate(&self) -> Result<()> {
        validate_spin(self.two_j() as i64, self.target_two_mt as i64)?;
        if self.angle_policy == AnglePolicy::ApproxMt0 && self.target_two_mt != 0 {
            return Err(Error::InvalidArgument("approx_mt0 angle policy requires target_two_mt = 0".into()));
        }
        if let ResetPolicy::Custom(t) = self.reset_policy {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidArgument(format!("custom reset threshold {t} must be finite and >= 0")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }
}
