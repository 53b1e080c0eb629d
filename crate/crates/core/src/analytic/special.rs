//! Special functions needed by the interference moments and the Voronoi PMF.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Lower incomplete gamma `γ(a, x) = ∫_0^x t^{a-1} e^{-t} dt`.
///
/// Power series for `x < a + 1`, Lentz continued fraction for the upper
/// function otherwise.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain("lower_incomplete_gamma", format!("a must be > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain("lower_incomplete_gamma", format!("x must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(ln_gamma(a).exp());
    }
    let log_prefactor = a * x.ln() - x;
    if x < a + 1.0 {
        // γ(a,x) = x^a e^{-x} Σ x^n / (a (a+1) ... (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                return Ok(sum * log_prefactor.exp());
            }
        }
        Err(Error::domain("lower_incomplete_gamma", "series did not converge"))
    } else {
        let upper = upper_cf(a, x)? * log_prefactor.exp();
        Ok(ln_gamma(a).exp() - upper)
    }
}

/// Continued fraction for `Γ(a,x) e^{x} x^{-a}` (modified Lentz).
fn upper_cf(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::domain("lower_incomplete_gamma", "continued fraction did not converge"))
}

pub fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

/// Binomial coefficients `C(n, 0..=n)` as floats.
pub fn binomial_row(n: u32) -> Vec<f64> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = 1.0f64;
    row.push(c);
    for k in 1..=n {
        c = c * (n - k + 1) as f64 / k as f64;
        // below 2^53 the running product is an integer up to rounding
        if c < 9.0e15 {
            c = c.round();
        }
        row.push(c);
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_zero_and_exponential_case() {
        assert_eq!(lower_incomplete_gamma(2.0, 0.0).unwrap(), 0.0);
        let x = 1.0f64;
        let v = lower_incomplete_gamma(1.0, x).unwrap();
        assert!((v - (1.0 - (-x).exp())).abs() < 1e-15);
        for x in [0.01, 0.5, 3.0, 10.0, 40.0] {
            let v = lower_incomplete_gamma(1.0, x).unwrap();
            let exact = -(-x as f64).exp_m1();
            assert!(((v - exact) / exact).abs() < 1e-12, "x={x}: {v} vs {exact}");
        }
    }

    #[test]
    fn gamma_two_closed_form() {
        // γ(2, x) = 1 - e^{-x}(1 + x); use a series where that cancels
        for x in [1e-4, 0.1, 1.0, 2.5, 3.95, 7.0, 30.0] {
            let v = lower_incomplete_gamma(2.0, x).unwrap();
            let exact = if x < 0.5 {
                // x²/2 - x³/3 + x⁴/8 - x⁵/30 + x⁶/144
                let mut s = 0.0;
                let mut t = x * x;
                let mut f = 1.0;
                for n in 0..30 {
                    let k = n as f64;
                    s += t / (f * (k + 2.0));
                    t *= -x;
                    f *= k + 1.0;
                }
                s
            } else {
                1.0 - (-x).exp() * (1.0 + x)
            };
            assert!(((v - exact) / exact).abs() < 1e-12, "x={x}: {v} vs {exact}");
        }
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(lower_incomplete_gamma(0.0, 1.0).is_err());
        assert!(lower_incomplete_gamma(-1.0, 1.0).is_err());
        assert!(lower_incomplete_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_row(4), vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        let r = binomial_row(128);
        assert_eq!(r[1], 128.0);
        assert_eq!(r[127], 128.0);
        // C(128, 64) = 2.3951146041928082866135587776380551750e37
        assert!((r[64] / 2.395_114_604_192_808_3e37 - 1.0).abs() < 1e-13);
    }
}
