//! Numerical Dirichlet L-functions: Hurwitz-zeta continuation, the Hardy
//! Z-function, zero isolation on the critical line, and `L'/L` at `s = 1`.

mod gamma;
mod hurwitz;
mod zeros;

use num_complex::Complex64;
use thiserror::Error;

use crate::dirichlet::DirichletCharacter;

pub use gamma::ln_gamma;
pub use hurwitz::{dirichlet_l, hurwitz_zeta, LSeries};
pub use zeros::{
    default_grid_step, expected_zero_count, find_zeros, hardy_z, zero_count_slack, HardyZ, ZeroList, ZeroSource,
    BRACKET_WIDTH, CENTRAL_FLAG_HEIGHT, PHASE_TOLERANCE,
};

/// Largest `|Im s|` accepted by the evaluators.
pub const MAX_HEIGHT: f64 = 500.0;
pub(crate) const MAX_EM_TERMS: usize = 15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LfuncError {
    #[error("pole of the Hurwitz zeta function at s = 1")]
    Pole,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("|Im s| = {0} exceeds the supported height {MAX_HEIGHT}")]
    OutOfRange(f64),
    #[error("invalid accuracy parameters: {0}")]
    BadAccuracy(String),
    #[error(
        "Euler-Maclaurin tail estimate {estimate:e} at s = {s} exceeds target {target:e}; raise em_terms or the shift"
    )]
    InsufficientAccuracy { s: Complex64, estimate: f64, target: f64 },
    #[error("Hardy Z rotation for {character} left imaginary part {imag:e} at t = {t} (real part {real:e})")]
    PhaseConvention {
        character: String,
        t: f64,
        real: f64,
        imag: f64,
    },
    #[error("{character}: found {found} zeros up to height {height}, expected {expected:.1} +/- {slack:.1}; refine the grid")]
    MissedZeros {
        character: String,
        height: f64,
        found: usize,
        expected: f64,
        slack: f64,
    },
    #[error("L(1, chi) vanishes numerically for {0}")]
    Degenerate(String),
}

/// Accuracy controls for Euler-Maclaurin evaluation.
///
/// At `s = sigma + it` the number of directly summed terms is
/// `max(min_shift, ceil(shift_per_height * |t|))`; `shift_per_height >= 1`
/// keeps the shift at least `ceil(|t|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalAccuracy {
    pub abs_tol: f64,
    pub em_terms: usize,
    pub min_shift: usize,
    pub shift_per_height: f64,
}

impl Default for EvalAccuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            em_terms: 12,
            min_shift: 50,
            shift_per_height: 2.0,
        }
    }
}

impl EvalAccuracy {
    pub fn validate(&self) -> Result<(), LfuncError> {
        if !(self.abs_tol > 0.0) {
            return Err(LfuncError::BadAccuracy(format!("abs_tol = {}", self.abs_tol)));
        }
        if !(2..=MAX_EM_TERMS).contains(&self.em_terms) {
            return Err(LfuncError::BadAccuracy(format!(
                "em_terms = {} outside 2..={MAX_EM_TERMS}",
                self.em_terms
            )));
        }
        if self.min_shift == 0 || !(self.shift_per_height >= 1.0) {
            return Err(LfuncError::BadAccuracy(format!(
                "min_shift = {}, shift_per_height = {}",
                self.min_shift, self.shift_per_height
            )));
        }
        Ok(())
    }

    pub fn shift_for(&self, s: Complex64) -> Result<usize, LfuncError> {
        let t = s.im.abs();
        if t > MAX_HEIGHT {
            return Err(LfuncError::OutOfRange(t));
        }
        Ok(self.min_shift.max((self.shift_per_height * t).ceil() as usize))
    }
}

/// `L'(1, conj(chi)) / L(1, conj(chi))` by central differences along the real
/// axis with two levels of Richardson extrapolation.
pub fn log_derivative_at_1(chi: &DirichletCharacter, acc: &EvalAccuracy) -> Result<Complex64, LfuncError> {
    log_derivative_with_step(chi, acc, 0.05)
}

pub(crate) fn log_derivative_with_step(
    chi: &DirichletCharacter,
    acc: &EvalAccuracy,
    h: f64,
) -> Result<Complex64, LfuncError> {
    let series = LSeries::new(&chi.conjugate());
    let at = |x: f64| series.eval(Complex64::new(x, 0.0), acc);
    let value = at(1.0)?;
    if value.norm() < 1e-12 {
        return Err(LfuncError::Degenerate(chi.id()));
    }
    let central = |h: f64| -> Result<Complex64, LfuncError> { Ok((at(1.0 + h)? - at(1.0 - h)?) / (2.0 * h)) };
    let d0 = central(h)?;
    let d1 = central(h / 2.0)?;
    let d2 = central(h / 4.0)?;
    let r1 = (4.0 * d1 - d0) / 3.0;
    let r2 = (4.0 * d2 - d1) / 3.0;
    let derivative = (16.0 * r2 - r1) / 15.0;
    Ok(derivative / value)
}

#[cfg(test)]
mod tests {
    use super::*;

    // PARI/GP: lfun(D, 1, 1) / lfun(D, 1)
    const LOG_DERIV: [(i64, f64); 7] = [
        (5, 0.8276794767155048879),
        (8, 0.6321149660398483261),
        (13, 0.4699715668307801393),
        (17, 0.3310914343555061172),
        (12, 0.4767499433469497195),
        (-4, 0.24560958477731417239),
        (-3, 0.3682816159701478427),
    ];

    #[test]
    fn log_derivative_reference_values() {
        let acc = EvalAccuracy::default();
        for (d, expected) in LOG_DERIV {
            let chi = DirichletCharacter::kronecker(d).unwrap();
            let v = log_derivative_at_1(&chi, &acc).unwrap();
            assert!((v.re - expected).abs() < 1e-6, "D={d}: {v}");
            assert!(v.im.abs() < 1e-8);
        }
    }

    #[test]
    fn log_derivative_step_halving_consistent() {
        let acc = EvalAccuracy::default();
        let chi = DirichletCharacter::kronecker(5).unwrap();
        let a = log_derivative_with_step(&chi, &acc, 0.05).unwrap();
        let b = log_derivative_with_step(&chi, &acc, 0.025).unwrap();
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn log_derivative_conjugation() {
        let acc = EvalAccuracy::default();
        let chi = DirichletCharacter::mod_prime(13, 2, 2).unwrap();
        let a = log_derivative_at_1(&chi, &acc).unwrap();
        let b = log_derivative_at_1(&chi.conjugate(), &acc).unwrap();
        assert!((a - b.conj()).norm() < 1e-9);
        assert!(a.im.abs() > 1e-3);
    }

    #[test]
    fn log_derivative_against_cesaro_series() {
        // -sum chi(n) log n / n, averaging partial sums over one period
        let chi = DirichletCharacter::kronecker(8).unwrap();
        let q = 8i64;
        let n_max = 4_000_000i64;
        let mut partial = 0.0;
        let mut avg = 0.0;
        for n in 1..n_max + q {
            partial -= chi.value(n).re * (n as f64).ln() / n as f64;
            if n >= n_max {
                avg += partial / q as f64;
            }
        }
        let l1: f64 = {
            let mut p = 0.0;
            let mut a = 0.0;
            for n in 1..n_max + q {
                p += chi.value(n).re / n as f64;
                if n >= n_max {
                    a += p / q as f64;
                }
            }
            a
        };
        let v = log_derivative_at_1(&chi, &EvalAccuracy::default()).unwrap();
        assert!((v.re - avg / l1).abs() < 1e-5, "{v} vs {}", avg / l1);
    }

    #[test]
    fn accuracy_validation() {
        let mut acc = EvalAccuracy::default();
        assert!(acc.validate().is_ok());
        acc.em_terms = 1;
        assert!(matches!(acc.validate(), Err(LfuncError::BadAccuracy(_))));
        acc = EvalAccuracy {
            shift_per_height: 0.5,
            ..EvalAccuracy::default()
        };
        assert!(acc.validate().is_err());
        acc = EvalAccuracy {
            abs_tol: 0.0,
            ..EvalAccuracy::default()
        };
        assert!(acc.validate().is_err());
        let d = EvalAccuracy::default();
        assert_eq!(d.shift_for(Complex64::new(0.5, 10.0)).unwrap(), 50);
        assert_eq!(d.shift_for(Complex64::new(0.5, 60.2)).unwrap(), 121);
    }
}
