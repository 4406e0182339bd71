//! Numeric kernels shared by the statistics and entropy modules.
//!
//! Everything routes through [`libm`] rather than the platform libm, keeping
//! results bit-identical across targets. Entropy deficits `1 - H` are
//! computed directly (series / `log1p` formulations) because near-perfect
//! entropy the naive `1.0 - entropy` difference cancels catastrophically.

use core::f64::consts::{LN_2, PI};

/// `1 - H2(1/2 + delta)` in bits, for `|delta| <= 1/2`.
///
/// Uses the expansion `ln2 - h(1/2+d) = sum_j (2d)^{2j} / (2j(2j-1))` for
/// small `delta` and the exact `log1p` form otherwise, so the deficit keeps
/// full relative precision even at `1 - H ~ 1e-30`.
pub fn binary_entropy_deficit(delta: f64) -> f64 {
    let d = delta.abs();
    debug_assert!(d <= 0.5 + 1e-15);
    if d >= 0.5 {
        return 1.0;
    }
    if d == 0.0 {
        return 0.0;
    }
    let t = 2.0 * d;
    if d <= 0.25 {
        // ratio between consecutive terms is t^2 <= 1/4
        let t2 = t * t;
        let mut term = t2;
        let mut sum = 0.0;
        for j in 1u32..64 {
            let contrib = term / ((2 * j) as f64 * (2 * j - 1) as f64);
            sum += contrib;
            if contrib < sum * 1e-18 {
                break;
            }
            term *= t2;
        }
        sum / LN_2
    } else {
        // exact: (1/2+d) log2(1+2d) + (1/2-d) log2(1-2d)
        ((0.5 + d) * libm::log1p(t) + (0.5 - d) * libm::log1p(-t)) / LN_2
    }
}

/// Shannon entropy `H2(p)` in bits, `0 log 0 == 0`.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    1.0 - binary_entropy_deficit(p - 0.5)
}

/// Upper-tail probability of the standard normal, `P(Z > m)`.
pub fn normal_upper_tail(m: f64) -> f64 {
    0.5 * libm::erfc(m / core::f64::consts::SQRT_2)
}

/// Standard normal density.
fn normal_pdf(m: f64) -> f64 {
    libm::exp(-0.5 * m * m) / libm::sqrt(2.0 * PI)
}

/// Upper-tail standard normal quantile: the `m` with `P(Z > m) = epsilon`.
///
/// Acklam's rational approximation, refined by two Newton steps against
/// [`normal_upper_tail`]. Works far into the tail (`epsilon ~ 1e-300`),
/// which the naive `quantile(1 - epsilon)` route cannot reach in `f64`.
pub fn normal_upper_quantile(epsilon: f64) -> crate::Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(crate::Error::OutOfDomain(alloc::format!(
            "tail probability must lie in (0, 0.5), got {epsilon:e}"
        )));
    }
    let mut m = -acklam_lower_quantile(epsilon);
    for _ in 0..2 {
        let pdf = normal_pdf(m);
        if pdf == 0.0 {
            break;
        }
        m += (normal_upper_tail(m) - epsilon) / pdf;
    }
    Ok(m)
}

/// Acklam's approximation of the lower quantile `Phi^-1(p)` for `p <= 0.5`.
#[allow(clippy::excessive_precision)] // published coefficients, kept verbatim
fn acklam_lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    debug_assert!(p > 0.0 && p <= 0.5);
    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deficit_matches_direct_formula_at_moderate_delta() {
        for &d in &[0.05, 0.1, 0.2, 0.3, 0.4, 0.45] {
            let p: f64 = 0.5 + d;
            let q: f64 = 0.5 - d;
            let direct = 1.0 + p * libm::log2(p) + q * libm::log2(q);
            let got = binary_entropy_deficit(d);
            assert!(
                (got - direct).abs() < 1e-14,
                "d={d}: {got} vs {direct}"
            );
        }
    }

    #[test]
    fn deficit_small_delta_leading_order() {
        // 1 - H2(1/2+d) -> 2 d^2 / ln 2
        for &d in &[1e-4, 1e-6, 1e-8] {
            let got = binary_entropy_deficit(d);
            let leading = 2.0 * d * d / LN_2;
            assert!((got / leading - 1.0).abs() < 1e-6, "d={d}");
        }
    }

    #[test]
    fn deficit_edges() {
        assert_eq!(binary_entropy_deficit(0.0), 0.0);
        assert_eq!(binary_entropy_deficit(0.5), 1.0);
        assert_eq!(binary_entropy_deficit(-0.5), 1.0);
        assert_eq!(binary_entropy_deficit(0.3), binary_entropy_deficit(-0.3));
    }

    #[test]
    fn binary_entropy_known_values() {
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.25) - 0.811_278_124_459_132_9).abs() < 1e-12);
    }

    #[test]
    fn quantile_one_sigma() {
        // P(Z > 1) = 0.158655..., so eps = 0.1587 maps to ~1.0
        let m = normal_upper_quantile(0.1587).unwrap();
        assert!((m - 1.0).abs() < 1e-2, "{m}");
        let m = normal_upper_quantile(0.158_655_253_931_457).unwrap();
        assert!((m - 1.0).abs() < 1e-9, "{m}");
    }

    #[test]
    fn quantile_round_trips_through_tail() {
        for &eps in &[0.4, 0.1, 1e-3, 1e-9, 1e-20, 7.888_609_052_210_118e-31] {
            let m = normal_upper_quantile(eps).unwrap();
            let back = normal_upper_tail(m);
            assert!(
                (back / eps - 1.0).abs() < 1e-8,
                "eps={eps:e} m={m} back={back:e}"
            );
        }
    }

    #[test]
    fn quantile_domain_errors() {
        assert!(normal_upper_quantile(0.0).is_err());
        assert!(normal_upper_quantile(0.5).is_err());
        assert!(normal_upper_quantile(-0.1).is_err());
    }
}
