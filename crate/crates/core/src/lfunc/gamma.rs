use std::f64::consts::PI;

use num_complex::Complex64;

// B_{2k} / (2k (2k - 1)) for k = 1..=8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// Complex log-gamma for `Re z > 0` (any branch of the imaginary part; only
/// `exp(i Im)` is meaningful to callers).
pub fn ln_gamma(z: Complex64) -> Complex64 {
    debug_assert!(z.re > 0.0, "ln_gamma expects Re z > 0, got {z}");
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.norm() < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series - shift
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_values() {
        assert!((ln_gamma(Complex64::new(0.5, 0.0)).re - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(Complex64::new(5.0, 0.0)).re - 24f64.ln()).abs() < 1e-13);
        assert!(ln_gamma(Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn modulus_on_vertical_lines() {
        // |Gamma(1 + it)|^2 = pi t / sinh(pi t), |Gamma(1/2 + it)|^2 = pi / cosh(pi t)
        for t in [0.5, 3.0, 20.0, 150.0] {
            let lg = ln_gamma(Complex64::new(1.0, t));
            let expected = 0.5 * (PI * t).ln() - 0.5 * ((PI * t).exp() - (-PI * t).exp()).ln() + 0.5 * 2f64.ln();
            assert!((lg.re - expected).abs() < 1e-12, "t={t}");
            let lh = ln_gamma(Complex64::new(0.5, t));
            let expected = 0.5 * PI.ln() - 0.5 * ((PI * t).exp() + (-PI * t).exp()).ln() + 0.5 * 2f64.ln();
            assert!((lh.re - expected).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn recurrence_phase() {
        // Gamma(z + 1) = z Gamma(z), compared as unit phases
        for (re, im) in [(0.25, 7.0), (0.75, 33.0), (2.0, 0.1)] {
            let z = Complex64::new(re, im);
            let lhs = ln_gamma(z + 1.0);
            let rhs = ln_gamma(z) + z.ln();
            assert!((lhs.re - rhs.re).abs() < 1e-12);
            let dphase = Complex64::from_polar(1.0, lhs.im - rhs.im);
            assert!((dphase - 1.0).norm() < 1e-12);
        }
    }
}
