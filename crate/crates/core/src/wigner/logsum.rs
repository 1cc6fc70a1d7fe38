//! Closed-form k-sum for d-matrix elements.
//!
//! With `p = j + m`, `q = j - m`, `delta = m' - m`, `c = cos(theta/2)`,
//! `s = sin(theta/2)` and `i = k + delta`:
//!
//! ```text
//! d_{m'm} = sqrt((j+m')!(j-m')! / (p! q!)) * sum_k A_k B_(k+delta)
//! A_k = C(p,k) c^(p-k) s^k
//! B_i = (-1)^i C(q,i) c^(q-i) s^i
//! ```
//!
//! The alternating sum cancels by many orders of magnitude once `j` reaches a
//! few dozen, far beyond what a floating-point accumulator survives. `A` and
//! `B` are held as big integers in fixed point with `1.5 two_j + 80`
//! fractional bits. Every term times the prefactor is below `2^(1.5 two_j)`,
//! so truncation leaves an absolute error under `2^-64`. Only the final
//! magnitude goes through logarithms.
//!
//! A whole column is the cross-correlation of `A` and `B`, computed as one
//! polynomial product by packing the coefficients into big integers.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::special::ln_factorial;

/// Largest `two_j` the exact sum is allowed to handle.
pub const MAX_TWO_J: u32 = 600;

const FRAC_BITS: usize = 60;

/// `ln(|v| / 2^frac)` of a nonzero big integer; the exponent is subtracted
/// exactly so large `frac` costs no precision.
fn ln_abs_scaled(v: &BigUint, frac: usize) -> f64 {
    let bits = v.bits();
    let shift = bits.saturating_sub(64);
    let top = (v >> shift).to_f64().unwrap_or(0.0);
    top.ln() + (shift as i64 - frac as i64) as f64 * std::f64::consts::LN_2
}

/// `base^0..=base^n` with `frac` fractional bits, `base` having 60.
fn powers(base: &BigUint, n: usize, frac: usize) -> Vec<BigUint> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(BigUint::from(1u8) << frac);
    for i in 1..=n {
        let next = (&v[i - 1] * base) >> FRAC_BITS;
        v.push(next);
    }
    v
}

/// `C(n, 0..=n)`
fn binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n + 1);
    row.push(BigUint::from(1u8));
    for k in 0..n {
        let next = &row[k] * (n - k) / (k + 1);
        row.push(next);
    }
    row
}

/// Concatenates `coeffs` into one integer, `width` bits (a multiple of 32)
/// per slot, lowest slot first.
fn pack<'a>(coeffs: impl ExactSizeIterator<Item = &'a BigUint>, width: usize) -> BigUint {
    let words = width / 32;
    let mut digits = vec![0u32; coeffs.len() * words];
    for (slot, c) in coeffs.enumerate() {
        let d = c.to_u32_digits();
        digits[slot * words..slot * words + d.len()].copy_from_slice(&d);
    }
    BigUint::new(digits)
}

fn unpack(d: &[u32], slot: usize, width: usize) -> BigUint {
    let words = width / 32;
    let lo = (slot * words).min(d.len());
    let hi = ((slot + 1) * words).min(d.len());
    BigUint::from_slice(&d[lo..hi])
}

/// Everything shared by the elements of one column `d_{., m}(theta)`.
pub(crate) struct Column {
    two_j: u32,
    p: usize,
    q: usize,
    frac: usize,
    s_negative: bool,
    a: Vec<BigUint>,
    /// `|B_i|`; the sign is `(-1)^i`
    b: Vec<BigUint>,
    ln_pq: f64,
}

impl Column {
    /// `two_m` must be valid for `two_j`; `theta` in `[-pi, pi]`.
    pub(crate) fn new(two_j: u32, two_m: i32, theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        let scale = (FRAC_BITS as f64).exp2();
        let c_int = BigUint::from((c.abs() * scale).round() as u64);
        let s_int = BigUint::from((s.abs() * scale).round() as u64);
        let p = (two_j as i64 + two_m as i64) as usize / 2;
        let q = (two_j as i64 - two_m as i64) as usize / 2;
        let frac = 3 * two_j as usize / 2 + 80;
        let n = p.max(q);
        let (cpow, spow) = (powers(&c_int, n, frac), powers(&s_int, n, frac));
        let side = |r: usize| -> Vec<BigUint> {
            binomial_row(r).iter().enumerate().map(|(k, bin)| (bin * &cpow[r - k] * &spow[k]) >> frac).collect()
        };
        Column {
            two_j,
            p,
            q,
            frac,
            s_negative: s < 0.0,
            a: side(p),
            b: side(q),
            ln_pq: ln_factorial(p as u64) + ln_factorial(q as u64),
        }
    }

    /// Scales the signed sum for output index `n` (`two_m' = 2n - two_j`).
    fn finish(&self, n: usize, pos: &BigUint, neg: &BigUint) -> f64 {
        let (mag, mut negative) = if pos >= neg { (pos - neg, false) } else { (neg - pos, true) };
        if mag.is_zero() {
            return 0.0;
        }
        // s^(2k + delta) carries sign(s)^delta, delta = n - p
        if self.s_negative && (n + self.p) % 2 == 1 {
            negative = !negative;
        }
        let ln_primed = ln_factorial(n as u64) + ln_factorial(self.two_j as u64 - n as u64);
        let v = (0.5 * (ln_primed - self.ln_pq) + ln_abs_scaled(&mag, 2 * self.frac)).exp();
        if negative {
            -v
        } else {
            v
        }
    }

    /// `d^j_{m'm}(theta)` for a valid `two_m_prime`.
    pub(crate) fn element(&self, two_m_prime: i32) -> f64 {
        let n = (two_m_prime + self.two_j as i32) as usize / 2;
        let (mut pos, mut neg) = (BigUint::zero(), BigUint::zero());
        // i - k = n - p
        for k in self.p.saturating_sub(n)..=self.p {
            let i = k + n - self.p;
            if i > self.q {
                break;
            }
            let t = &self.a[k] * &self.b[i];
            if i % 2 == 0 {
                pos += t;
            } else {
                neg += t;
            }
        }
        self.finish(n, &pos, &neg)
    }

    /// Every element of the column, indexed by `n` with `two_m' = 2n - two_j`.
    pub(crate) fn all(&self) -> Vec<f64> {
        let bits = |v: &[BigUint]| v.iter().map(|x| x.bits()).max().unwrap_or(0) as usize;
        let terms = self.p.min(self.q) + 1;
        let width = (bits(&self.a) + bits(&self.b) + usize::BITS as usize - terms.leading_zeros() as usize + 1).div_ceil(32) * 32;
        let zero = BigUint::zero();
        let zero = &zero;
        let parity = |odd: usize| self.b.iter().enumerate().map(move |(i, x)| if i % 2 == odd { x } else { zero });
        // coefficient n of sum_k A_k z^(p-k) * sum_i B_i z^i pairs i - k = n - p
        let a_rev = pack(self.a.iter().rev(), width);
        let even = (&a_rev * pack(parity(0), width)).to_u32_digits();
        let odd = (&a_rev * pack(parity(1), width)).to_u32_digits();
        (0..=self.two_j as usize).map(|n| self.finish(n, &unpack(&even, n, width), &unpack(&odd, n, width))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials_are_exact() {
        assert_eq!(binomial_row(10)[3], BigUint::from(120u8));
        assert_eq!(binomial_row(5).len(), 6);
        assert_eq!(binomial_row(100)[50].to_string(), "100891344545564193334812497256");
    }

    #[test]
    fn spin_half_elements() {
        for &theta in &[0.0, 0.4, -2.0, std::f64::consts::PI] {
            let (up, down) = (Column::new(1, 1, theta), Column::new(1, -1, theta));
            let (s, c) = (theta / 2.0).sin_cos();
            assert!((up.element(1) - c).abs() < 1e-14);
            assert!((up.element(-1) - s).abs() < 1e-14);
            assert!((down.element(1) + s).abs() < 1e-14);
        }
    }

    #[test]
    fn spin_one_closed_forms() {
        let theta = 0.9f64;
        let (zero, top) = (Column::new(2, 0, theta), Column::new(2, 2, theta));
        let (s, c) = theta.sin_cos();
        assert!((zero.element(0) - c).abs() < 1e-14);
        assert!((top.element(2) - (1.0 + c) / 2.0).abs() < 1e-14);
        assert!((top.element(0) - s / 2f64.sqrt()).abs() < 1e-14);
        assert!((top.element(-2) - (1.0 - c) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn packed_product_matches_single_elements() {
        for (two_j, two_m, theta) in [(7, 3, 1.1), (40, -12, -2.4), (301, 51, 2.9)] {
            let col = Column::new(two_j, two_m, theta);
            for (n, v) in col.all().into_iter().enumerate() {
                let single = col.element(2 * n as i32 - two_j as i32);
                assert!((v - single).abs() < 1e-15, "{two_j} {two_m} {n}: {v} vs {single}");
            }
        }
    }
}
