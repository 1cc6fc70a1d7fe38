//! Special functions used across the crate.

use statrs::function::gamma::ln_gamma;

/// `ln n!`
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`, `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Probability of `k` successes in `n` fair coin flips.
pub fn fair_binomial_pmf(n: u64, k: u64) -> f64 {
    (ln_binomial(n, k) - n as f64 * std::f64::consts::LN_2).exp()
}

/// Euler beta function `B(a, b) = G(a) G(b) / G(a + b)` for positive arguments.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Bessel function of the first kind `J_n(x)` for integer order.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    bessel_j_sequence(x, n as usize)[n as usize]
}

/// `J_0(x), ..., J_nmax(x)` for `x >= 0`.
///
/// Miller's backward recurrence from an order well above `max(nmax, x)`,
/// normalized with `J_0^2 + 2 sum_k J_k^2 = 1`; the overall sign comes from
/// `J_0 + 2 sum_k J_2k = 1`.
pub fn bessel_j_sequence(x: f64, nmax: usize) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j_sequence needs finite x >= 0, got {x}");
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = (nmax as f64).max(x);
    let mut start = (top + 30.0 + 4.0 * top.sqrt()).ceil() as usize;
    start += start % 2;

    const BIG: f64 = 1e120;
    let two_over_x = 2.0 / x;
    let (mut next, mut cur) = (0.0f64, 1.0f64); // J_{k+1}, J_k at k = start
    let mut sum_sq = 0.0;
    let mut sum_even = 0.0;
    if start <= nmax {
        out[start] = cur;
    }
    let mut k = start;
    while k > 0 {
        // cur = J_k, produce J_{k-1}
        sum_sq += cur * cur;
        if k % 2 == 0 {
            sum_even += cur;
        }
        let prev = (k as f64) * two_over_x * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if k <= nmax {
            out[k] = cur;
        }
        if cur.abs() > BIG {
            let s = 1.0 / BIG;
            cur *= s;
            next *= s;
            sum_even *= s;
            sum_sq *= s * s;
            for v in out.iter_mut().skip(k) {
                *v *= s;
            }
        }
    }
    // cur = J_0 (unnormalized)
    let norm_sq = cur * cur + 2.0 * sum_sq;
    let lin = cur + 2.0 * sum_even;
    let scale = lin.signum() / norm_sq.sqrt();
    for v in &mut out {
        *v *= scale;
    }
    out
}
