//! Rotation-angle policies.
//!
//! The numerically optimal angle maximizes `|d^j_{m_t, m}(theta)|^2`. Because
//! `|d_{m_t,m}| = |d_{m,m_t}|`, every `m` can be optimized from one propagated
//! column (that of `m_t`): a grid scan over `(0, pi)` locates the best grid
//! point per `m`, then a second pass expands the column in a Taylor series
//! around each winner and refines with golden-section search.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spin::{ring_radius, validate_spin, Angle, AnglePolicy, SpinSpec};
use crate::wigner::{d_element, Band, Generator, Propagator};

/// Tolerance on `|sin theta| <= 1` before the geometric angle is rejected.
const ARCSIN_SLACK: f64 = 1e-12;
/// Grid maxima closer than this count as ties; the smaller angle wins.
const TIE: f64 = 1e-12;
/// Golden-section stopping width in radians.
const REFINE_TOL: f64 = 1e-10;
const TAYLOR_TERMS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnglePolicyResult {
    #[serde(serialize_with = "ser_angle")]
    pub angle: Angle,
    /// `|d^j_{m_t, m}(angle)|^2`
    pub overlap_probability: f64,
    pub policy: AnglePolicy,
    /// Set when the search could not beat the geometric angle and returned it
    /// instead.
    pub fallback: bool,
}

fn ser_angle<S: serde::Serializer>(a: &Angle, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(a.radians())
}

fn check(two_j: u32, two_mt: i32, two_m: i32) -> Result<(SpinSpec, SpinSpec)> {
    Ok((validate_spin(two_j as i64, two_mt as i64)?, validate_spin(two_j as i64, two_m as i64)?))
}

/// Ring-tangency angle `arcsin[(m r_mt - m_t r_m) / r_0^2]`.
pub fn geometric_angle(two_j: u32, two_mt: i32, two_m: i32) -> Result<Angle> {
    let (mt, m) = check(two_j, two_mt, two_m)?;
    if two_j == 0 {
        return Ok(Angle::ZERO);
    }
    let r0_sq = 0.25 * two_j as f64 * (two_j as f64 + 2.0);
    let arg = (m.m() * ring_radius(mt) - mt.m() * ring_radius(m)) / r0_sq;
    if arg.abs() > 1.0 + ARCSIN_SLACK || !arg.is_finite() {
        return Err(Error::Domain(format!("geometric angle argument {arg} for {m} -> {mt}")));
    }
    Angle::new(arg.clamp(-1.0, 1.0).asin())
}

/// `arcsin(m / j)`, the large-`j` form of the geometric angle for `m_t = 0`.
pub fn approx_angle_mt0(two_j: u32, two_m: i32) -> Result<Angle> {
    validate_spin(two_j as i64, two_m as i64)?;
    if two_j == 0 {
        return Ok(Angle::ZERO);
    }
    Angle::new((two_m as f64 / two_j as f64).clamp(-1.0, 1.0).asin())
}

/// `|d^j_{m_t, m}(angle)|^2`.
pub fn overlap_probability(two_j: u32, two_mt: i32, two_m: i32, angle: Angle) -> Result<f64> {
    let (_, m) = check(two_j, two_mt, two_m)?;
    let d = d_element(m, two_mt, angle)?;
    Ok(d * d)
}

/// The optimal angle for a single `m`; see [`optimal_angles`].
pub fn optimal_angle(two_j: u32, two_mt: i32, two_m: i32) -> Result<AnglePolicyResult> {
    Ok(optimal_angles(two_j, two_mt, &[two_m])?.remove(0))
}

/// Numerically optimal angles for several source states sharing one target.
///
/// Deterministic: grid spacing `pi / (8j + 16)`, ties resolved toward the
/// smaller angle, refinement to `1e-10` rad. Angles carry the sign of
/// `m - m_t`. If the refined overlap is below the geometric one the geometric
/// angle is returned with `fallback` set.
pub fn optimal_angles(two_j: u32, two_mt: i32, two_ms: &[i32]) -> Result<Vec<AnglePolicyResult>> {
    let target = validate_spin(two_j as i64, two_mt as i64)?;
    let mut specs = Vec::with_capacity(two_ms.len());
    for &tm in two_ms {
        specs.push(validate_spin(two_j as i64, tm as i64)?);
    }
    let geo: Vec<Angle> = specs.iter().map(|s| geometric_angle(two_j, two_mt, s.two_m())).collect::<Result<_>>()?;
    if two_j == 0 {
        return Ok(specs.iter().map(|_| trivial()).collect());
    }

    let cells = 4 * two_j as usize + 16;
    let delta = std::f64::consts::PI / cells as f64;
    let dim = target.dim();
    let idx: Vec<usize> = specs.iter().map(|s| s.index()).collect();

    // Pass 1: best grid point per m over theta_k = k delta, 0 < k < cells.
    let mut best_k = vec![0usize; specs.len()];
    let mut best_p = vec![f64::NEG_INFINITY; specs.len()];
    {
        let mut prop = Propagator::new(two_j);
        let mut v = vec![0.0; dim];
        v[target.index()] = 1.0;
        let mut band = Band::of(&v).expect("basis vector");
        for k in 1..cells {
            band = prop.step(&mut v, band, delta);
            for (s, &i) in idx.iter().enumerate() {
                let p = v[i] * v[i];
                if p > best_p[s] + TIE {
                    best_p[s] = p;
                    best_k[s] = k;
                }
            }
        }
    }

    // Pass 2: local Taylor models at each best grid point and at the grid
    // point nearest each geometric angle.
    let geo_k: Vec<usize> = geo.iter().map(|a| ((a.radians().abs() / delta).round() as usize).min(cells)).collect();
    let mut events: Vec<(usize, usize, bool)> = Vec::with_capacity(2 * specs.len());
    for s in 0..specs.len() {
        events.push((best_k[s], s, true));
        events.push((geo_k[s], s, false));
    }
    events.sort_unstable();

    let gen = Generator::new(two_j);
    let mut prop = Propagator::new(two_j);
    let mut v = vec![0.0; dim];
    v[target.index()] = 1.0;
    let mut band = Band::of(&v).expect("basis vector");
    let mut k_now = 0usize;
    let mut refined = vec![(0.0f64, 0.0f64); specs.len()];
    let mut geo_p = vec![0.0f64; specs.len()];
    let mut e = 0;
    while e < events.len() {
        let k = events[e].0;
        while k_now < k {
            band = prop.step(&mut v, band, delta);
            k_now += 1;
        }
        let group_end = events[e..].iter().position(|ev| ev.0 != k).map_or(events.len(), |off| e + off);
        let wanted: Vec<usize> = events[e..group_end].iter().map(|ev| idx[ev.1]).collect();
        let coeffs = taylor_coefficients(&gen, &v, band, &wanted);
        for (ev, c) in events[e..group_end].iter().zip(&coeffs) {
            let (_, s, is_best) = *ev;
            let theta_k = k as f64 * delta;
            if is_best {
                let lo = (-delta).max(-theta_k);
                let hi = delta.min(std::f64::consts::PI - theta_k);
                let (d, _) = golden_max(|x| eval_sq(c, x), lo, hi);
                let d = polish(c, d, lo, hi);
                let p = eval_sq(c, d);
                refined[s] = if p >= best_p[s] { (theta_k + d, p) } else { (theta_k, best_p[s]) };
            } else {
                geo_p[s] = eval_sq(c, geo[s].radians().abs() - theta_k);
            }
        }
        e = group_end;
    }

    let mut out = Vec::with_capacity(specs.len());
    for (s, spec) in specs.iter().enumerate() {
        if spec.two_m() == two_mt {
            out.push(trivial());
            continue;
        }
        let sign = if spec.two_m() > two_mt { 1.0 } else { -1.0 };
        let (theta, p) = refined[s];
        if p + TIE >= geo_p[s] {
            out.push(AnglePolicyResult {
                angle: Angle::new(sign * theta)?,
                overlap_probability: p.min(1.0),
                policy: AnglePolicy::NumericOptimal,
                fallback: false,
            });
        } else {
            out.push(AnglePolicyResult {
                angle: geo[s],
                overlap_probability: geo_p[s].min(1.0),
                policy: AnglePolicy::NumericOptimal,
                fallback: true,
            });
        }
    }
    Ok(out)
}

fn trivial() -> AnglePolicyResult {
    AnglePolicyResult { angle: Angle::ZERO, overlap_probability: 1.0, policy: AnglePolicy::NumericOptimal, fallback: false }
}

/// `c[i][n] = (G^n v)[wanted[i]] / n!`
fn taylor_coefficients(gen: &Generator, v: &[f64], band: Band, wanted: &[usize]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = wanted.iter().map(|&i| vec![v[i]]).collect();
    let mut cur = v.to_vec();
    let mut next = vec![0.0; v.len()];
    let mut b = band;
    for n in 1..TAYLOR_TERMS {
        b = gen.apply(&cur, &mut next, b, 1.0 / n as f64);
        std::mem::swap(&mut cur, &mut next);
        for (c, &i) in out.iter_mut().zip(wanted) {
            c.push(cur[i]);
        }
    }
    out
}

/// Newton iterations on the derivative of the local polynomial; the golden
/// search alone only resolves a quadratic peak to about `sqrt(eps)`.
fn polish(c: &[f64], mut x: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..8 {
        let (mut d1, mut d2) = (0.0, 0.0);
        for n in (1..c.len()).rev() {
            d1 = d1 * x + n as f64 * c[n];
            if n >= 2 {
                d2 = d2 * x + (n * (n - 1)) as f64 * c[n];
            }
        }
        if d2 == 0.0 {
            break;
        }
        let next = x - d1 / d2;
        if !(lo..=hi).contains(&next) || eval_sq(c, next) < eval_sq(c, x) {
            break;
        }
        if next == x {
            break;
        }
        x = next;
    }
    x
}

fn eval_sq(c: &[f64], x: f64) -> f64 {
    let v = c.iter().rev().fold(0.0, |acc, a| acc * x + a);
    v * v
}

/// Golden-section maximization on `[lo, hi]`; returns `(argmax, max)`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > REFINE_TOL {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// The rotation angle a policy assigns to each source `m`.
pub fn policy_angles(policy: AnglePolicy, two_j: u32, two_mt: i32, two_ms: &[i32]) -> Result<Vec<Angle>> {
    match policy {
        AnglePolicy::Geometric => two_ms.iter().map(|&m| geometric_angle(two_j, two_mt, m)).collect(),
        AnglePolicy::ApproxMt0 => {
            if two_mt != 0 {
                return Err(Error::InvalidArgument("approx_mt0 requires two_mt = 0".into()));
            }
            two_ms.iter().map(|&m| approx_angle_mt0(two_j, m)).collect()
        }
        AnglePolicy::NumericOptimal => Ok(optimal_angles(two_j, two_mt, two_ms)?.into_iter().map(|r| r.angle).collect()),
    }
}
