//! Real propagation of `exp(-i theta J_y)` in the `J_z` basis.
//!
//! `-i J_y` is a real antisymmetric tridiagonal matrix `G` with couplings
//! `G[i][i+1] = -G[i+1][i] = sqrt((n - i)(i + 1)) / 2` (index `i` holds
//! `two_m = 2i - n`), and `||G||_2 = j`.
//!
//! Whole rotations use the Chebyshev (Jacobi-Anger) expansion
//! `exp(theta G) v = J_0(z) v + 2 sum_k J_k(z) u_k` with `z = |theta| j`,
//! `u_0 = v`, `u_1 = A v`, `u_{k+1} = 2 A u_k + u_{k-1}` and
//! `A = sign(theta) G / j`; every quantity is real and `|u_k| <= |v|`. About
//! `z + O(z^(1/3))` products with `G` are needed. Short fixed steps (used by
//! angle scans) use a truncated Taylor series instead. Entries that are still
//! exactly zero are skipped, so rotations of localized vectors by small
//! angles only touch a narrow band.

use crate::error::{Error, Result};
use crate::special::bessel_j_sequence;

/// Taylor terms are summed until the next term's max-norm drops below this
/// (relative to the state's max entry).
const TERM_TOLERANCE: f64 = 1e-18;
const MAX_TERMS: usize = 80;
/// Chebyshev terms beyond `k > z` are dropped once `|J_k(z)|` is below this.
const CHEBYSHEV_TOLERANCE: f64 = 1e-18;
/// Allowed deviation of the squared norm before propagation is declared
/// unstable.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// The tridiagonal generator `G = -i J_y` for one spin sector.
#[derive(Clone, Debug)]
pub struct Generator {
    two_j: u32,
    /// `half_coupling[i] = G[i][i+1]`
    half_coupling: Vec<f64>,
}

/// Index range `[lo, hi]` outside of which a vector is exactly zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Band {
    pub lo: usize,
    pub hi: usize,
}

impl Band {
    pub fn of(v: &[f64]) -> Option<Band> {
        let lo = v.iter().position(|x| *x != 0.0)?;
        let hi = v.iter().rposition(|x| *x != 0.0)?;
        Some(Band { lo, hi })
    }

    fn widen(self, last: usize) -> Band {
        Band { lo: self.lo.saturating_sub(1), hi: (self.hi + 1).min(last) }
    }

    fn union(self, other: Band) -> Band {
        Band { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

impl Generator {
    pub fn new(two_j: u32) -> Self {
        let n = two_j as usize;
        let half_coupling = (0..n).map(|i| 0.5 * (((n - i) * (i + 1)) as f64).sqrt()).collect();
        Generator { two_j, half_coupling }
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    /// Spectral norm of `G`, which is `j`.
    pub fn norm(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// `out[band'] = scale * G v`, reading `v` only inside `band` (entries
    /// outside it are taken as zero) and writing `band'`, which is `band`
    /// widened by one. Returns `band'`.
    pub fn apply(&self, v: &[f64], out: &mut [f64], band: Band, scale: f64) -> Band {
        let last = self.dim() - 1;
        let wide = band.widen(last);
        let b = &self.half_coupling;
        let get = |k: usize| if k >= band.lo && k <= band.hi { v[k] } else { 0.0 };
        // Both neighbours of i lie in the band for i in [inner_lo, inner_hi).
        let (inner_lo, inner_hi) = (band.lo + 1, band.hi);
        let mut i = wide.lo;
        while i <= wide.hi {
            if i >= inner_lo && i < inner_hi {
                for k in i..inner_hi {
                    out[k] = scale * (b[k] * v[k + 1] - b[k - 1] * v[k - 1]);
                }
                i = inner_hi;
                continue;
            }
            let up = if i < last { b[i] * get(i + 1) } else { 0.0 };
            let down = if i > 0 { b[i - 1] * get(i - 1) } else { 0.0 };
            out[i] = scale * (up - down);
            i += 1;
        }
        wide
    }
}

/// Reusable buffers for stepping one state vector.
#[derive(Clone, Debug)]
pub struct Propagator {
    gen: Generator,
    term: Vec<f64>,
    scratch: Vec<f64>,
    extra: Vec<f64>,
}

impl Propagator {
    pub fn new(two_j: u32) -> Self {
        let gen = Generator::new(two_j);
        let d = gen.dim();
        Propagator { gen, term: vec![0.0; d], scratch: vec![0.0; d], extra: vec![0.0; d] }
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    /// In place `state <- exp(h G) state` for one short step; meant for
    /// `|h| j` of order one or less. `band` must cover the nonzero entries of `state`; the
    /// returned band covers the result.
    pub fn step(&mut self, state: &mut [f64], band: Band, h: f64) -> Band {
        let dim = self.gen.dim();
        debug_assert_eq!(state.len(), dim);
        let scale_ref = state[band.lo..=band.hi].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale_ref == 0.0 || h == 0.0 || dim == 1 {
            return band;
        }
        self.term[band.lo..=band.hi].copy_from_slice(&state[band.lo..=band.hi]);
        let mut term_band = band;
        let mut acc_band = band;
        for k in 1..=MAX_TERMS {
            let new_band = self.gen.apply(&self.term, &mut self.scratch, term_band, h / k as f64);
            std::mem::swap(&mut self.term, &mut self.scratch);
            term_band = new_band;
            acc_band = acc_band.union(term_band);
            let mut tmax = 0.0f64;
            for i in term_band.lo..=term_band.hi {
                let t = self.term[i];
                state[i] += t;
                tmax = tmax.max(t.abs());
            }
            if tmax <= TERM_TOLERANCE * scale_ref {
                break;
            }
        }
        acc_band
    }

    /// Rotates `state` by `exp(-i theta J_y)` and checks that the norm is
    /// preserved to [`NORM_TOLERANCE`].
    pub fn rotate(&mut self, state: &mut [f64], theta: f64) -> Result<()> {
        let Some(band) = Band::of(state) else {
            return Ok(());
        };
        let j = self.gen.norm();
        if theta == 0.0 || j == 0.0 {
            return Ok(());
        }
        let before: f64 = state[band.lo..=band.hi].iter().map(|x| x * x).sum();
        let z = theta.abs() * j;
        let kmax = (z + 10.0 * z.cbrt() + 40.0).ceil() as usize;
        let bessel = bessel_j_sequence(z, kmax);
        let a_scale = theta.signum() / j;

        let mut prev = std::mem::take(&mut self.term);
        let mut cur = std::mem::take(&mut self.scratch);
        let mut next = std::mem::take(&mut self.extra);
        prev[band.lo..=band.hi].copy_from_slice(&state[band.lo..=band.hi]);
        let mut prev_band = band;
        let mut cur_band = self.gen.apply(&prev, &mut cur, band, a_scale);
        // `state` doubles as the accumulator; it is zero outside `band`.
        for x in &mut state[band.lo..=band.hi] {
            *x *= bessel[0];
        }
        for i in cur_band.lo..=cur_band.hi {
            state[i] += 2.0 * bessel[1] * cur[i];
        }
        for (k, &jk) in bessel.iter().enumerate().skip(2) {
            if k as f64 > z && jk.abs() < CHEBYSHEV_TOLERANCE {
                break;
            }
            // u_k = 2 A u_{k-1} + u_{k-2}
            let next_band = self.gen.apply(&cur, &mut next, cur_band, 2.0 * a_scale);
            for i in prev_band.lo..=prev_band.hi {
                next[i] += prev[i];
            }
            for i in next_band.lo..=next_band.hi {
                state[i] += 2.0 * jk * next[i];
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
            prev_band = cur_band;
            cur_band = next_band;
        }
        self.term = prev;
        self.scratch = cur;
        self.extra = next;

        let after: f64 = state[cur_band.lo..=cur_band.hi].iter().map(|x| x * x).sum();
        let deviation = (after - before).abs() / before;
        if deviation > NORM_TOLERANCE || !deviation.is_finite() {
            return Err(Error::NormDrift { deviation, tolerance: NORM_TOLERANCE });
        }
        Ok(())
    }
}
