//! Gamma function via the Lanczos approximation (g = 7, nine terms) and the
//! sine-power integrals built on it.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
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

fn lanczos_sum<T: Scalar>(x: T) -> T {
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_usize_lossy(i));
    }
    acc
}

/// Gamma function for real arguments; poles at non-positive integers return NaN.
pub fn gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x <= T::zero() && x == x.floor() {
        return T::nan();
    }
    if x < half {
        // reflection
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    // shift into [1, 2) where the approximation is tightest
    let mut x = x;
    let mut scale = T::one();
    if x < T::lit(12.0) {
        while x >= T::lit(2.0) {
            x = x - T::one();
            scale = scale * x;
        }
        while x < T::one() {
            scale = scale / x;
            x = x + T::one();
        }
    }
    let z = x - T::one();
    let t = z + T::lit(LANCZOS_G) + half;
    let sqrt_two_pi = (T::lit(2.0) * T::PI()).sqrt();
    // split the power to delay overflow
    let tp = t.powf((z + half) * half);
    scale * sqrt_two_pi * tp * (tp * (-t).exp()) * lanczos_sum(z)
}

/// Natural log of |Γ(x)|.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let z = x - T::one();
    let t = z + T::lit(LANCZOS_G) + half;
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (z + half) * t.ln() - t + lanczos_sum(z).ln()
}

/// Digamma ψ(x) for x > 0: upward recurrence to x ≥ 12, then the asymptotic series.
pub fn digamma<T: Scalar>(x: T) -> T {
    if !(x > T::zero()) {
        return T::nan();
    }
    let mut x = x;
    let mut acc = T::zero();
    while x < T::lit(12.0) {
        acc = acc - T::one() / x;
        x = x + T::one();
    }
    let r = T::one() / (x * x);
    // Bernoulli terms B_{2k}/(2k)
    let series = r
        * (T::lit(1.0 / 12.0)
            - r * (T::lit(1.0 / 120.0)
                - r * (T::lit(1.0 / 252.0)
                    - r * (T::lit(1.0 / 240.0)
                        - r * (T::lit(1.0 / 132.0) - r * T::lit(691.0 / 32760.0))))));
    acc + x.ln() - T::lit(0.5) / x - series
}

/// `∫₀^π (sin β)^(2μ−1) dβ = √π Γ(μ) / Γ(μ + 1/2)` for μ > 0.
pub fn sine_power_integral<T: Scalar>(mu: T) -> T {
    let half = T::lit(0.5);
    if mu < T::lit(20.0) {
        T::PI().sqrt() * gamma(mu) / gamma(mu + half)
    } else {
        T::PI().sqrt() * (ln_gamma(mu) - ln_gamma(mu + half)).exp()
    }
}
