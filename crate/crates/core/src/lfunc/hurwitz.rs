//! Euler-Maclaurin evaluation of the Hurwitz zeta function and of Dirichlet
//! L-series built from it.

use num_complex::Complex64;

use super::{EvalAccuracy, LfuncError, MAX_EM_TERMS};
use crate::dirichlet::DirichletCharacter;

// B_{2k} / (2k)! for k = 1..=15
const BERNOULLI_OVER_FACTORIAL: [f64; MAX_EM_TERMS] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
    -174611.0 / 330.0 / 2432902008176640000.0,
    854513.0 / 138.0 / 1.1240007277776077e21,
    -236364091.0 / 2730.0 / 6.204484017332394e23,
    8553103.0 / 6.0 / 4.0329146112660565e26,
    -23749461029.0 / 870.0 / 3.0488834461171387e29,
    8615841276005.0 / 14322.0 / 2.6525285981219107e32,
];

/// `(e^u - 1) / u`, accurate near 0.
fn exprel(u: Complex64) -> Complex64 {
    if u.norm() < 1e-3 {
        1.0 + u * (0.5 + u * (1.0 / 6.0 + u * (1.0 / 24.0 + u / 120.0)))
    } else {
        (u.exp() - 1.0) / u
    }
}

/// Half-term plus Bernoulli corrections of the Euler-Maclaurin tail
/// `sum_{n>=0} (w + n)^{-s}` minus its integral term, given `w^{-s}`.
/// Returns the value and the magnitude of the last correction used.
fn em_corrections(s: Complex64, w: f64, w_pow: Complex64, terms: usize) -> (Complex64, f64) {
    let mut total = 0.5 * w_pow;
    let inv_w2 = 1.0 / (w * w);
    // rising factorial (s)_{2k-1} and w^{-s-2k+1}
    let mut rising = s;
    let mut power = w_pow / w;
    let mut last = 0.0;
    for (k, c) in BERNOULLI_OVER_FACTORIAL.iter().take(terms).enumerate() {
        let term = *c * rising * power;
        total += term;
        last = term.norm();
        let m = 2.0 * (k as f64 + 1.0);
        rising *= (s + (m - 1.0)) * (s + m);
        power *= inv_w2;
    }
    (total, last)
}

/// Hurwitz zeta `sum_{n>=0} (n + a)^{-s}` for `a` in `(0, 1]`, continued to
/// all `s != 1` by Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: Complex64, a: f64, acc: &EvalAccuracy) -> Result<Complex64, LfuncError> {
    acc.validate()?;
    if !(a > 0.0 && a <= 1.0) {
        return Err(LfuncError::Domain(format!("Hurwitz parameter {a} outside (0, 1]")));
    }
    if s == Complex64::new(1.0, 0.0) {
        return Err(LfuncError::Pole);
    }
    let shift = acc.shift_for(s)?;
    let mut direct = Complex64::new(0.0, 0.0);
    for n in 0..shift {
        direct += (-s * (n as f64 + a).ln()).exp();
    }
    let w = shift as f64 + a;
    let w_pow = (-s * w.ln()).exp();
    let integral = w * w_pow / (s - 1.0);
    let (corr, last) = em_corrections(s, w, w_pow, acc.em_terms);
    if last > acc.abs_tol {
        return Err(LfuncError::InsufficientAccuracy {
            s,
            estimate: last,
            target: acc.abs_tol,
        });
    }
    Ok(direct + integral + corr)
}

/// Dirichlet L-series `L(s, chi) = q^{-s} sum_{a=1}^{q} chi(a) zeta(s, a/q)`.
///
/// The `shift` direct Hurwitz terms of every residue are merged into one pass
/// over `m <= shift * q`, followed by an Euler-Maclaurin tail per residue.
/// The tail's integral terms are summed as `(w^{1-s} - 1)/(s - 1)`, whose
/// subtracted constant cancels against `sum chi(a) = 0`, so `s = 1` needs no
/// special case.
#[derive(Debug, Clone)]
pub struct LSeries {
    modulus: u64,
    values: Vec<Complex64>,
    support: Vec<(u64, Complex64)>,
}

impl LSeries {
    pub fn new(chi: &DirichletCharacter) -> Self {
        let q = chi.modulus();
        let values: Vec<Complex64> = (0..q).map(|a| chi.value(a as i64)).collect();
        let support = (1..q)
            .filter(|&a| values[a as usize].norm() > 0.0)
            .map(|a| (a, values[a as usize]))
            .collect();
        Self {
            modulus: q,
            values,
            support,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn eval(&self, s: Complex64, acc: &EvalAccuracy) -> Result<Complex64, LfuncError> {
        acc.validate()?;
        let q = self.modulus;
        let shift = acc.shift_for(s)? as u64;

        let mut direct = Complex64::new(0.0, 0.0);
        let mut r = 0usize;
        for m in 1..=shift * q {
            r += 1;
            if r == q as usize {
                r = 0;
            }
            let c = self.values[r];
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let lm = (m as f64).ln();
            let mag = (-s.re * lm).exp();
            let (sin, cos) = (-s.im * lm).sin_cos();
            direct += c * Complex64::new(mag * cos, mag * sin);
        }

        let mut tail = Complex64::new(0.0, 0.0);
        let mut worst = 0.0;
        for &(a, c) in &self.support {
            let w = shift as f64 + a as f64 / q as f64;
            let lw = w.ln();
            let w_pow = (-s * lw).exp();
            let integral = -lw * exprel((1.0 - s) * lw);
            let (corr, last) = em_corrections(s, w, w_pow, acc.em_terms);
            tail += c * (integral + corr);
            worst += last;
        }
        let q_pow = (-s * (q as f64).ln()).exp();
        let estimate = worst * q_pow.norm();
        if estimate > acc.abs_tol {
            return Err(LfuncError::InsufficientAccuracy {
                s,
                estimate,
                target: acc.abs_tol,
            });
        }
        Ok(direct + q_pow * tail)
    }
}

/// `L(s, chi)` for nontrivial `chi`.
pub fn dirichlet_l(s: Complex64, chi: &DirichletCharacter, acc: &EvalAccuracy) -> Result<Complex64, LfuncError> {
    LSeries::new(chi).eval(s, acc)
}
