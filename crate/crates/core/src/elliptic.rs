//! Elliptic curves over Q in Weierstrass form and their Frobenius traces.
//!
//! Conductor and rank are carried as ingested metadata; nothing here computes
//! them. The model is trusted to be minimal.

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{distinct_prime_factors, is_prime, sieve_primes, ArithError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EllipticError {
    #[error("curve {label}: singular Weierstrass model (discriminant 0)")]
    Singular { label: String },
    #[error("curve {label}: conductor must be positive")]
    BadConductor { label: String },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("curve {label} has bad reduction at {p}; use ap() for bad primes")]
    BadReduction { label: String, p: u64 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// An elliptic curve `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllipticCurve {
    label: String,
    ainvs: [i64; 5],
    conductor: u64,
    rank: u32,
    discriminant: i128,
}

impl EllipticCurve {
    pub fn new(label: impl Into<String>, ainvs: [i64; 5], conductor: u64, rank: u32) -> Result<Self, EllipticError> {
        let label = label.into();
        let discriminant = discriminant_of(&ainvs);
        if discriminant == 0 {
            return Err(EllipticError::Singular { label });
        }
        if conductor == 0 {
            return Err(EllipticError::BadConductor { label });
        }
        Ok(Self {
            label,
            ainvs,
            conductor,
            rank,
            discriminant,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ainvs(&self) -> [i64; 5] {
        self.ainvs
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn discriminant(&self) -> i128 {
        self.discriminant
    }

    pub fn has_good_reduction(&self, p: u64) -> bool {
        self.discriminant.rem_euclid(p as i128) != 0
    }

    /// Primes dividing the conductor but not the discriminant. Non-empty
    /// means the ingested metadata and model disagree.
    pub fn conductor_mismatches(&self) -> Vec<u64> {
        distinct_prime_factors(self.conductor)
            .into_iter()
            .filter(|&p| self.has_good_reduction(p))
            .collect()
    }

    fn reduced(&self, p: u64) -> [u64; 5] {
        self.ainvs.map(|a| a.rem_euclid(p as i64) as u64)
    }
}

/// `(b2, b4, b6, b8)`.
pub fn b_invariants(a: &[i64; 5]) -> [i128; 4] {
    let [a1, a2, a3, a4, a6] = a.map(|v| v as i128);
    let b2 = a1 * a1 + 4 * a2;
    let b4 = 2 * a4 + a1 * a3;
    let b6 = a3 * a3 + 4 * a6;
    let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
    [b2, b4, b6, b8]
}

pub fn discriminant_of(a: &[i64; 5]) -> i128 {
    let [b2, b4, b6, b8] = b_invariants(a);
    -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
}

/// Number of projective points on the reduction of `curve` mod a good prime
/// `p`, point at infinity included.
pub fn count_points(curve: &EllipticCurve, p: u64) -> Result<u64, EllipticError> {
    if !is_prime(p) {
        return Err(EllipticError::NotPrime(p));
    }
    if !curve.has_good_reduction(p) {
        return Err(EllipticError::BadReduction {
            label: curve.label.clone(),
            p,
        });
    }
    Ok(if p <= 3 {
        count_points_naive(curve, p)
    } else {
        let (affine, _) = count_affine_completed(curve, p);
        affine + 1
    })
}

/// Reference count by enumerating every `(x, y)` in `F_p^2`. O(p^2).
pub fn count_points_naive(curve: &EllipticCurve, p: u64) -> u64 {
    let [a1, a2, a3, a4, a6] = curve.reduced(p);
    let mut count = 1;
    for x in 0..p {
        let rhs = (((x + a2) % p * x % p + a4) % p * x % p + a6) % p;
        for y in 0..p {
            let lhs = (y * y + a1 * x % p * y + a3 * y) % p;
            if lhs == rhs {
                count += 1;
            }
        }
    }
    count
}

// Affine points of y'^2 = g(x) = 4x^3 + b2 x^2 + 2 b4 x + b6 over F_p, p odd,
// together with the number of singular points (double roots of g).
fn count_affine_completed(curve: &EllipticCurve, p: u64) -> (u64, u64) {
    let [b2, b4, b6, _] = b_invariants(&curve.ainvs);
    let m = |v: i128| v.rem_euclid(p as i128) as u64;
    let (c2, c1, c0) = (m(b2), m(2 * b4), m(b6));
    let squares = square_table(p);
    let mut affine = 0u64;
    let mut singular = 0u64;
    for x in 0..p {
        let g = ((((4 * x + c2) % p) * x % p + c1) % p * x % p + c0) % p;
        if g == 0 {
            affine += 1;
            let dg = ((12 * x % p * x + 2 * c2 * x) % p + c1) % p;
            if dg == 0 {
                singular += 1;
            }
        } else if squares[g as usize] {
            affine += 2;
        }
    }
    (affine, singular)
}

fn square_table(p: u64) -> Vec<bool> {
    let mut t = vec![false; p as usize];
    for y in 1..p.div_ceil(2) {
        t[(y * y % p) as usize] = true;
    }
    t
}

// Nonsingular affine points for p in {2, 3} (or any p) by enumeration.
fn count_nonsingular_naive(curve: &EllipticCurve, p: u64) -> u64 {
    let [a1, a2, a3, a4, a6] = curve.reduced(p);
    let neg = |v: u64| (p - v % p) % p;
    let mut count = 0;
    for x in 0..p {
        let rhs = (((x + a2) % p * x % p + a4) % p * x % p + a6) % p;
        for y in 0..p {
            let lhs = (y * y + a1 * x % p * y + a3 * y) % p;
            if lhs != rhs {
                continue;
            }
            // partial derivatives of y^2 + a1xy + a3y - x^3 - a2x^2 - a4x - a6
            let fx = (a1 * y + neg(3 * x % p * x) + neg(2 * a2 * x) + neg(a4)) % p;
            let fy = (2 * y + a1 * x + a3) % p;
            if fx != 0 || fy != 0 {
                count += 1;
            }
        }
    }
    count
}

/// Frobenius trace at any prime `p`.
///
/// Good reduction: `p + 1 - #E(F_p)`. Bad reduction: `p - #E_ns(F_p)`, where
/// `E_ns` is the nonsingular locus of the reduced model (point at infinity
/// included), giving 1, -1 or 0 for split, nonsplit and additive reduction.
pub fn ap(curve: &EllipticCurve, p: u64) -> i64 {
    let p_i = p as i64;
    if curve.has_good_reduction(p) {
        let n = if p <= 3 {
            count_points_naive(curve, p)
        } else {
            count_affine_completed(curve, p).0 + 1
        };
        let a = p_i + 1 - n as i64;
        assert!(
            (a * a) as u64 <= 4 * p,
            "Hasse bound violated: {} p={p} a_p={a}",
            curve.label
        );
        a
    } else {
        let nonsingular = if p <= 3 {
            count_nonsingular_naive(curve, p)
        } else {
            let (affine, singular) = count_affine_completed(curve, p);
            affine - singular
        } + 1;
        let a = p_i - nonsingular as i64;
        assert!(
            (-1..=1).contains(&a),
            "bad-prime trace outside {{-1,0,1}}: {} p={p} a_p={a}",
            curve.label
        );
        a
    }
}

/// `(p, a_p)` for all primes `p < limit`, ascending. Primes are processed in
/// parallel; the output order is fixed.
pub fn ap_vector(curve: &EllipticCurve, limit: u64) -> Result<Vec<(u64, i64)>, EllipticError> {
    let primes = sieve_primes(limit.max(2))?;
    Ok(primes.primes().par_iter().map(|&p| (p, ap(curve, p))).collect())
}
