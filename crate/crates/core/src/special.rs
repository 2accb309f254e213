//! Scalar special functions used by the closed-form metrics.
//!
//! Everything here is pure and allocation-free. The exponential integral is
//! only ever exposed in its scaled form `e^x E1(x)`, which stays finite for
//! every positive `x` where the unscaled function would underflow.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, PI};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest cluster size for which binomials are kept exact.
pub const MAX_EXACT_BINOMIAL: u32 = 62;

/// Complementary error function.
///
/// Uses the positive-term series of `erf` below 2 and the Laplace continued
/// fraction above it; relative error stays below `1e-12` on `|x| <= 10`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// Gaussian tail function `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `exp(-x^2)` with the rounding error of `x*x` folded back in.
fn gaussian_kernel(x: f64) -> f64 {
    let xx = x * x;
    let lo = x.mul_add(x, -xx);
    (-xx).exp() * (-lo).exp()
}

// erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    while term > sum * f64::EPSILON * 0.125 {
        n += 1;
        term *= 2.0 * x2 / f64::from(2 * n + 1);
        sum += term;
    }
    FRAC_2_SQRT_PI * gaussian_kernel(x) * sum
}

// erfc(x) = e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..2000u32 {
        let a = 0.5 * f64::from(n);
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = d.recip();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    gaussian_kernel(x) / (PI.sqrt() * f)
}

/// Scaled exponential integral `e^x E1(x)` for `x > 0`.
///
/// Series below 1, Lentz continued fraction above, and the leading terms of
/// the asymptotic expansion once `x` is so large that `1/x^4` is negligible.
pub fn exp_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            function: "exp_e1",
            value: x,
        });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= 1.0 {
        // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut k = 1.0;
        loop {
            term *= -x / k;
            let contrib = term / k;
            sum += contrib;
            if contrib.abs() <= f64::EPSILON * sum.abs() * 0.125 {
                break;
            }
            k += 1.0;
        }
        Ok(x.exp() * (-EULER_GAMMA - x.ln() - sum))
    } else if x < 1e8 {
        const FPMIN: f64 = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000u32 {
            let i = f64::from(i);
            let an = -i * i;
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            d = d.recip();
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() <= f64::EPSILON {
                break;
            }
        }
        Ok(h)
    } else {
        let r = x.recip();
        Ok(r * (1.0 - r * (1.0 - r * (2.0 - 6.0 * r))))
    }
}

/// `Gamma(m + 1/2)` by the exact upward recurrence from `sqrt(pi)`.
pub fn gamma_half_integer(m: u32) -> Result<f64> {
    let mut value = PI.sqrt();
    for k in 1..=m {
        value *= f64::from(k) - 0.5;
    }
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow {
            function: "gamma_half_integer",
            argument: u64::from(m),
        })
    }
}

/// Exact binomial coefficient, restricted to `k <= n <= 62`.
pub fn binom(n: u32, k: u32) -> Result<u64> {
    if k > n || n > MAX_EXACT_BINOMIAL {
        return Err(Error::BinomialRange { n, k });
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    Ok(acc as u64)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values computed with 40-digit arithmetic (mpmath).
    const ERFC_TABLE: [(f64, f64); 10] = [
        (0.001, 0.998_871_621_209_030_763_6),
        (0.1, 0.887_537_083_981_715_101_6),
        (0.5, 0.479_500_122_186_953_462_32),
        (1.0, 0.157_299_207_050_285_130_66),
        (2.0, 0.004_677_734_981_047_265_837_9),
        (3.0, 2.209_049_699_858_544_137_3e-5),
        (5.0, 1.537_459_794_428_034_850_2e-12),
        (8.0, 1.122_429_717_298_292_708e-29),
        (10.0, 2.088_487_583_762_544_757e-45),
        (-1.5, 1.966_105_146_475_310_727_1),
    ];

    #[test]
    fn erfc_matches_reference() {
        for (x, want) in ERFC_TABLE {
            let got = erfc(x);
            assert!(rel(got, want) < 1e-12, "erfc({x}) = {got}, want {want}");
        }
        assert_eq!(erfc(0.0), 1.0);
        assert!(erfc(10.0) < 1e-44);
        assert_eq!(erfc(40.0), 0.0);
        assert_eq!(erfc(-40.0), 2.0);
    }

    #[test]
    fn erfc_reflection() {
        let mut x = -8.0;
        while x <= 8.0 {
            assert!((erfc(x) + erfc(-x) - 2.0).abs() <= 1e-12, "x = {x}");
            x += 0.013;
        }
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_func(0.0), 0.5);
        assert!(rel(q_func(1.0), 0.158_655_253_931_457_051_41) < 1e-13);
        // 2 alpha Q(sqrt(2 beta x)) == alpha erfc(sqrt(beta x))
        for &(alpha, beta, x) in &[(0.5f64, 1.0f64, 0.3f64), (1.5, 0.1, 12.0), (1.0, 0.5, 2.5)] {
            let lhs = 2.0 * alpha * q_func((2.0 * beta * x).sqrt());
            let rhs = alpha * erfc((beta * x).sqrt());
            assert!(rel(lhs, rhs) < 1e-14);
        }
    }

    #[test]
    fn exp_e1_reference_values() {
        let table = [
            (1e-6, 13.238_309_131_365_003_501),
            (0.2, 1.493_348_746_932_239_572_9),
            (1.0, 0.596_347_362_323_194_074_34),
            (2.0, 0.361_328_616_888_222_584_7),
            (10.0, 0.091_563_333_939_788_081_876),
            (100.0, 0.009_901_942_286_733_018_406_4),
            (1e6, 9.999_990_000_019_999_94e-7),
        ];
        for (x, want) in table {
            let got = exp_e1(x).unwrap();
            assert!(rel(got, want) < 1e-10, "exp_e1({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn exp_e1_domain_and_extremes() {
        assert!(exp_e1(0.0).is_err());
        assert!(exp_e1(-1.0).is_err());
        assert!(exp_e1(f64::NAN).is_err());
        let big = exp_e1(f64::MAX).unwrap();
        assert!(big.is_finite() && big >= 0.0);
        let v = exp_e1(1e6).unwrap();
        assert!(rel(v, 1e-6 * (1.0 - 1e-6)) < 1e-9);
        let (lo, hi) = (0.5 * (1.2f64).ln(), (1.1f64).ln());
        let v = exp_e1(10.0).unwrap();
        assert!(lo < v && v < hi);
    }

    #[test]
    fn exp_e1_decreasing_across_branches() {
        let mut prev = f64::INFINITY;
        let mut x = 1e-4;
        while x < 1e10 {
            let v = exp_e1(x).unwrap();
            assert!(v < prev, "not decreasing at {x}");
            prev = v;
            x *= 1.07;
        }
        // branch seams
        for seam in [1.0f64, 1e8] {
            let below = exp_e1(seam * (1.0 - 1e-12)).unwrap();
            let above = exp_e1(seam * (1.0 + 1e-12)).unwrap();
            assert!(rel(below, above) < 1e-10);
        }
    }

    #[test]
    fn half_integer_gamma() {
        let sqrt_pi = PI.sqrt();
        assert_eq!(gamma_half_integer(0).unwrap(), sqrt_pi);
        assert_eq!(gamma_half_integer(1).unwrap(), sqrt_pi / 2.0);
        assert!(rel(gamma_half_integer(3).unwrap(), 3.323_350_970_447_842_551_2) < 1e-15);
        assert!(gamma_half_integer(170).is_ok());
        assert!(matches!(
            gamma_half_integer(400),
            Err(Error::Overflow { .. })
        ));
    }

    /// Lanczos (g = 7, n = 9) evaluation of Gamma, used only as a test oracle.
    fn lanczos_gamma(x: f64) -> f64 {
        const G: f64 = 7.0;
        const C: [f64; 9] = [
            0.999_999_999_999_809_93,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_13,
            -176.615_029_162_140_59,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_571_6e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }

    #[test]
    fn half_integer_gamma_matches_lanczos() {
        for m in 0..=20u32 {
            let want = lanczos_gamma(f64::from(m) + 0.5);
            assert!(rel(gamma_half_integer(m).unwrap(), want) < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binom(5, 0).unwrap(), 1);
        assert_eq!(binom(5, 5).unwrap(), 1);
        assert_eq!(binom(6, 3).unwrap(), 20);
        assert_eq!(binom(62, 31).unwrap(), 465_428_353_255_261_088);
        assert!(binom(63, 1).is_err());
        assert!(binom(4, 5).is_err());
        for n in 1..=20u32 {
            for k in 1..n {
                assert_eq!(
                    binom(n, k).unwrap(),
                    binom(n - 1, k - 1).unwrap() + binom(n - 1, k).unwrap()
                );
            }
        }
    }
}
