//! Both sides of the explicit formulas for a single elliptic curve or a
//! single Dirichlet character.
//!
//! Elliptic curves:
//!
//! ```text
//! (log x / sqrt x) sum_{p<x} a_p / sqrt p
//!     = 1 - 2 r - sum_{n != 0} x^{i g_n} / (1/2 + i g_n) + Err(x)
//! ```
//!
//! Even primitive characters:
//!
//! ```text
//! (1 / sqrt x) sum_{p<x} chi(p) log p
//!     = -log x / sqrt x - sum_g x^{i g} / (1/2 + i g) + R(x)
//! R(x) = ( L'/L(1, conj chi) + log(q / 2 pi) - C0 - log sqrt(1 - x^-2)
//!          - sum_{k>=2} sum_{p^k<x} chi(p^k) log p ) / sqrt x
//! ```

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::arith::{strict_cutoff, PrimeTable};
use crate::dirichlet::DirichletCharacter;
use crate::elliptic::{ap, EllipticCurve};
use crate::lfunc::{log_derivative_at_1, EvalAccuracy, LfuncError, ZeroList};

/// Euler-Mascheroni constant to 20 significant digits.
#[allow(clippy::excessive_precision)]
pub const EULER_MASCHERONI: f64 = 0.57721566490153286061;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("prime table below {limit} cannot serve x = {x}")]
    InsufficientPrimes { x: f64, limit: u64 },
    #[error("x = {x} outside the domain ({reason})")]
    Domain { x: f64, reason: &'static str },
    #[error("{0} is odd; this formula needs an even character")]
    Parity(String),
    #[error("zero list {zeros} does not belong to curve {curve}")]
    LabelMismatch { curve: String, zeros: String },
    #[error(transparent)]
    Lfunc(#[from] LfuncError),
}

/// How the sum over zeros is cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Every available ordinate.
    All,
    /// The lowest `n` positive ordinates (and their negatives).
    Count(usize),
    /// Ordinates with `|gamma| <= T`.
    Height(f64),
}

impl Truncation {
    fn select<'a>(&self, zeros: &'a ZeroList) -> &'a [f64] {
        match *self {
            Truncation::All => &zeros.gammas,
            Truncation::Count(n) => zeros.lowest(n),
            Truncation::Height(t) => zeros.up_to(t),
        }
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::All => write!(f, "all"),
            Truncation::Count(n) => write!(f, "count:{n}"),
            Truncation::Height(t) => write!(f, "height:{t}"),
        }
    }
}

impl FromStr for Truncation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(Truncation::All);
        }
        let (mode, value) = s
            .split_once(':')
            .ok_or_else(|| format!("expected count:N, height:T or all, got {s:?}"))?;
        match mode {
            "count" => value
                .parse::<usize>()
                .map(Truncation::Count)
                .map_err(|e| format!("bad count {value:?}: {e}")),
            "height" => match value.parse::<f64>() {
                Ok(t) if t > 0.0 && t.is_finite() => Ok(Truncation::Height(t)),
                _ => Err(format!("height must be a positive number, got {value:?}")),
            },
            _ => Err(format!("unknown truncation mode {mode:?}")),
        }
    }
}

/// The signed ordinates of one object.
#[derive(Debug, Clone, Copy)]
pub enum ZeroSet<'a> {
    /// Elliptic curves and real characters: negatives mirror the positives.
    SelfConjugate(&'a ZeroList),
    /// Complex characters: positive ordinates of `chi` and of `conj chi`; the
    /// latter stand in for the negative ordinates of `chi`.
    Pair { own: &'a ZeroList, conjugate: &'a ZeroList },
}

/// `x^{ig} / (1/2 + ig) + x^{-ig} / (1/2 - ig)` in closed form.
pub fn zero_pair_term(gamma: f64, x: f64) -> f64 {
    let (sin, cos) = (gamma * x.ln()).sin_cos();
    (cos + 2.0 * gamma * sin) / (0.25 + gamma * gamma)
}

fn zero_term(gamma: f64, log_x: f64) -> Complex64 {
    Complex64::from_polar(1.0, gamma * log_x) / Complex64::new(0.5, gamma)
}

/// `sum x^{ig} / (1/2 + ig)` over the selected signed ordinates.
pub fn zero_sum_truncated(zeros: ZeroSet<'_>, x: f64, trunc: Truncation) -> Complex64 {
    match zeros {
        ZeroSet::SelfConjugate(list) => {
            let s: f64 = trunc.select(list).iter().map(|&g| zero_pair_term(g, x)).sum();
            Complex64::new(s, 0.0)
        }
        ZeroSet::Pair { own, conjugate } => {
            let log_x = x.ln();
            let up: Complex64 = trunc.select(own).iter().map(|&g| zero_term(g, log_x)).sum();
            let down: Complex64 = trunc.select(conjugate).iter().map(|&g| zero_term(-g, log_x)).sum();
            up + down
        }
    }
}

fn check_x(x: f64, primes: &PrimeTable) -> Result<(), FormulaError> {
    if !(x > 1.0) {
        return Err(FormulaError::Domain {
            x,
            reason: "x must exceed 1",
        });
    }
    if !primes.covers(x) {
        return Err(FormulaError::InsufficientPrimes {
            x,
            limit: primes.limit(),
        });
    }
    Ok(())
}

/// `(log x / sqrt x) sum_{p<x} a_p / sqrt p`.
pub fn lhs_elliptic(curve: &EllipticCurve, x: f64, primes: &PrimeTable) -> Result<f64, FormulaError> {
    check_x(x, primes)?;
    let s: f64 = primes
        .primes_below(x)
        .iter()
        .map(|&p| ap(curve, p) as f64 / (p as f64).sqrt())
        .sum();
    Ok(x.ln() / x.sqrt() * s)
}

/// `1 - 2 r - sum_{n != 0} x^{i g_n} / (1/2 + i g_n)`, with `Err` left out.
pub fn rhs_elliptic(curve: &EllipticCurve, zeros: &ZeroList, x: f64, trunc: Truncation) -> Result<f64, FormulaError> {
    if zeros.object_id != curve.label() {
        return Err(FormulaError::LabelMismatch {
            curve: curve.label().to_string(),
            zeros: zeros.object_id.clone(),
        });
    }
    if !(x > 1.0) {
        return Err(FormulaError::Domain {
            x,
            reason: "x must exceed 1",
        });
    }
    Ok(1.0 - 2.0 * curve.rank() as f64 - zero_sum_truncated(ZeroSet::SelfConjugate(zeros), x, trunc).re)
}

/// `(1 / sqrt x) sum_{p<x} chi(p) log p`.
pub fn lhs_dirichlet(chi: &DirichletCharacter, x: f64, primes: &PrimeTable) -> Result<Complex64, FormulaError> {
    check_x(x, primes)?;
    let s: Complex64 = primes
        .primes_below(x)
        .iter()
        .map(|&p| chi.value(p as i64) * (p as f64).ln())
        .sum();
    Ok(s / x.sqrt())
}

/// The five components of `R(x)` and their signed total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RChiBreakdown {
    pub x: f64,
    /// `L'(1, conj chi) / L(1, conj chi)`.
    pub log_deriv: Complex64,
    /// `log(q / 2 pi)`.
    pub conductor_term: f64,
    pub euler_mascheroni: f64,
    /// `-log sqrt(1 - x^-2)`.
    pub trivial_zero_term: f64,
    /// `sum_{k>=2} sum_{p^k<x} chi(p^k) log p`.
    pub prime_power_sum: Complex64,
    pub total: Complex64,
}

impl RChiBreakdown {
    fn assemble(log_deriv: Complex64, q: u64, x: f64, prime_power_sum: Complex64) -> Self {
        let conductor_term = (q as f64 / (2.0 * std::f64::consts::PI)).ln();
        let trivial_zero_term = -0.5 * (1.0 - x.powi(-2)).ln();
        let total = (log_deriv + conductor_term - EULER_MASCHERONI + trivial_zero_term - prime_power_sum) / x.sqrt();
        Self {
            x,
            log_deriv,
            conductor_term,
            euler_mascheroni: EULER_MASCHERONI,
            trivial_zero_term,
            prime_power_sum,
            total,
        }
    }
}

/// `sum_{k>=2} sum_{p^k<x} chi(p^k) log p` using the primes `<= sqrt x` of the table.
pub fn prime_power_sum(chi: &DirichletCharacter, x: f64, primes: &PrimeTable) -> Complex64 {
    let cutoff = strict_cutoff(x);
    let mut total = Complex64::new(0.0, 0.0);
    for &p in primes.primes() {
        let p = p as i64;
        let Some(mut v) = p.checked_mul(p) else { break };
        if v > cutoff {
            break;
        }
        let log_p = (p as f64).ln();
        while v <= cutoff {
            total += chi.value(v) * log_p;
            match v.checked_mul(p) {
                Some(next) => v = next,
                None => break,
            }
        }
    }
    total
}

fn require_even(chi: &DirichletCharacter) -> Result<(), FormulaError> {
    if chi.is_even() {
        Ok(())
    } else {
        Err(FormulaError::Parity(chi.id()))
    }
}

/// `R(x)` for an even primitive character.
pub fn r_chi(
    chi: &DirichletCharacter,
    x: f64,
    primes: &PrimeTable,
    acc: &EvalAccuracy,
) -> Result<RChiBreakdown, FormulaError> {
    require_even(chi)?;
    check_x(x, primes)?;
    let log_deriv = log_derivative_at_1(chi, acc)?;
    Ok(RChiBreakdown::assemble(
        log_deriv,
        chi.modulus(),
        x,
        prime_power_sum(chi, x, primes),
    ))
}

/// Values of every term of one explicit formula at one `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulaSideSample {
    pub x: f64,
    /// Prime-sum side.
    pub lhs: Complex64,
    /// Truncated `sum x^{ig} / (1/2 + ig)` (entering the right side with a minus sign).
    pub zero_sum: Complex64,
    /// Everything else on the right: `1 - 2r` for curves, `-log x / sqrt x + R(x)` for characters.
    pub corrections: Complex64,
    /// `lhs - (corrections - zero_sum)`.
    pub residual: Complex64,
}

impl FormulaSideSample {
    fn new(x: f64, lhs: Complex64, zero_sum: Complex64, corrections: Complex64) -> Self {
        Self {
            x,
            lhs,
            zero_sum,
            corrections,
            residual: lhs - (corrections - zero_sum),
        }
    }
}

/// Elliptic formula with prefix sums over primes, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct EllipticFormula<'a> {
    curve: &'a EllipticCurve,
    primes: &'a PrimeTable,
    prefix: Vec<f64>,
}

impl<'a> EllipticFormula<'a> {
    pub fn new(curve: &'a EllipticCurve, primes: &'a PrimeTable) -> Self {
        let mut prefix = Vec::with_capacity(primes.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &p in primes.primes() {
            acc += ap(curve, p) as f64 / (p as f64).sqrt();
            prefix.push(acc);
        }
        Self { curve, primes, prefix }
    }

    pub fn curve(&self) -> &EllipticCurve {
        self.curve
    }

    pub fn lhs(&self, x: f64) -> Result<f64, FormulaError> {
        check_x(x, self.primes)?;
        Ok(x.ln() / x.sqrt() * self.prefix[self.primes.count_below(x)])
    }

    pub fn sample(&self, zeros: &ZeroList, x: f64, trunc: Truncation) -> Result<FormulaSideSample, FormulaError> {
        let lhs = self.lhs(x)?;
        let rhs = rhs_elliptic(self.curve, zeros, x, trunc)?;
        let zero_sum = zero_sum_truncated(ZeroSet::SelfConjugate(zeros), x, trunc);
        let corrections = Complex64::new(rhs, 0.0) + zero_sum;
        Ok(FormulaSideSample::new(x, lhs.into(), zero_sum, corrections))
    }
}

/// Dirichlet formula with prefix sums over primes and prime powers and a
/// cached `L'/L(1, conj chi)`, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct DirichletFormula<'a> {
    chi: &'a DirichletCharacter,
    primes: &'a PrimeTable,
    prefix: Vec<Complex64>,
    power_values: Vec<u64>,
    power_prefix: Vec<Complex64>,
    log_deriv: Option<Complex64>,
}

impl<'a> DirichletFormula<'a> {
    /// `with_r` computes `L'/L(1, conj chi)` (even characters only).
    pub fn new(
        chi: &'a DirichletCharacter,
        primes: &'a PrimeTable,
        with_r: bool,
        acc: &EvalAccuracy,
    ) -> Result<Self, FormulaError> {
        let log_deriv = if with_r {
            require_even(chi)?;
            Some(log_derivative_at_1(chi, acc)?)
        } else {
            None
        };
        let mut prefix = Vec::with_capacity(primes.len() + 1);
        let mut acc_sum = Complex64::new(0.0, 0.0);
        prefix.push(acc_sum);
        for &p in primes.primes() {
            acc_sum += chi.value(p as i64) * (p as f64).ln();
            prefix.push(acc_sum);
        }

        let limit = primes.limit();
        let mut powers: Vec<(u64, Complex64)> = Vec::new();
        for &p in primes.primes() {
            let Some(mut v) = p.checked_mul(p) else { break };
            if v >= limit {
                break;
            }
            let log_p = (p as f64).ln();
            while v < limit {
                powers.push((v, chi.value(v as i64) * log_p));
                match v.checked_mul(p) {
                    Some(next) => v = next,
                    None => break,
                }
            }
        }
        powers.sort_by_key(|&(v, _)| v);
        let mut power_prefix = Vec::with_capacity(powers.len() + 1);
        let mut s = Complex64::new(0.0, 0.0);
        power_prefix.push(s);
        for &(_, term) in &powers {
            s += term;
            power_prefix.push(s);
        }
        Ok(Self {
            chi,
            primes,
            prefix,
            power_values: powers.into_iter().map(|(v, _)| v).collect(),
            power_prefix,
            log_deriv,
        })
    }

    pub fn character(&self) -> &DirichletCharacter {
        self.chi
    }

    pub fn lhs(&self, x: f64) -> Result<Complex64, FormulaError> {
        check_x(x, self.primes)?;
        Ok(self.prefix[self.primes.count_below(x)] / x.sqrt())
    }

    pub fn prime_power_sum(&self, x: f64) -> Complex64 {
        let cutoff = strict_cutoff(x);
        if cutoff < 4 {
            return Complex64::new(0.0, 0.0);
        }
        self.power_prefix[self.power_values.partition_point(|&v| v <= cutoff as u64)]
    }

    pub fn r_chi(&self, x: f64) -> Result<RChiBreakdown, FormulaError> {
        let log_deriv = self.log_deriv.ok_or_else(|| FormulaError::Parity(self.chi.id()))?;
        check_x(x, self.primes)?;
        Ok(RChiBreakdown::assemble(
            log_deriv,
            self.chi.modulus(),
            x,
            self.prime_power_sum(x),
        ))
    }

    /// Full sample including `R(x)`; requires `with_r` and `x >= 2`.
    pub fn sample(&self, zeros: ZeroSet<'_>, x: f64, trunc: Truncation) -> Result<FormulaSideSample, FormulaError> {
        if x < 2.0 {
            return Err(FormulaError::Domain {
                x,
                reason: "residuals are evaluated for x >= 2",
            });
        }
        let lhs = self.lhs(x)?;
        let r = self.r_chi(x)?;
        let zero_sum = zero_sum_truncated(zeros, x, trunc);
        let corrections = -x.ln() / x.sqrt() + r.total;
        Ok(FormulaSideSample::new(x, lhs, zero_sum, corrections))
    }
}

/// `lhs - [-log x / sqrt x - zero_sum + R(x)]` for an even primitive
/// character, `x >= 2`. What remains is the zero-truncation error.
pub fn dirichlet_residual(
    chi: &DirichletCharacter,
    zeros: ZeroSet<'_>,
    x: f64,
    primes: &PrimeTable,
    acc: &EvalAccuracy,
    trunc: Truncation,
) -> Result<Complex64, FormulaError> {
    let formula = DirichletFormula::new(chi, primes, true, acc)?;
    Ok(formula.sample(zeros, x, trunc)?.residual)
}
