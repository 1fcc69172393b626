//! Dirichlet characters: real Kronecker characters of fundamental
//! discriminants, and characters modulo an odd prime given by a primitive
//! root and an index.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use thiserror::Error;

use crate::arith::{distinct_prime_factors, is_fundamental_discriminant, is_prime, kronecker, pow_mod};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharacterError {
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("modulus {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{g} is not a primitive root mod {q}")]
    NotPrimitiveRoot { q: u64, g: u64 },
    #[error("index {index} outside 1..={max} for modulus {q}")]
    IndexOutOfRange { q: u64, index: u64, max: u64 },
    #[error("requested {requested} characters but count must be even")]
    OddCount { requested: usize },
    #[error("requested {requested} odd characters mod {q}; only {available} are available in conjugate pairs")]
    FamilyTooLarge { q: u64, requested: usize, available: usize },
}

/// Discrete logarithms of every residue mod a prime with respect to a fixed
/// primitive root. Shared between all characters of one modulus.
#[derive(Debug)]
pub struct DiscreteLogTable {
    modulus: u64,
    generator: u64,
    logs: Vec<u32>,
}

impl DiscreteLogTable {
    pub fn new(q: u64, g: u64) -> Result<Self, CharacterError> {
        if q < 3 || !is_prime(q) {
            return Err(CharacterError::NotOddPrime(q));
        }
        if !is_primitive_root(g, q) {
            return Err(CharacterError::NotPrimitiveRoot { q, g });
        }
        let mut logs = vec![u32::MAX; q as usize];
        let mut v = 1u64;
        for j in 0..(q - 1) {
            logs[v as usize] = j as u32;
            v = v * g % q;
        }
        Ok(Self {
            modulus: q,
            generator: g,
            logs,
        })
    }

    /// Table for the smallest primitive root of `q`.
    pub fn canonical(q: u64) -> Result<Self, CharacterError> {
        Self::new(q, smallest_primitive_root(q)?)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// `j` with `g^j = n mod q`, or `None` when `q | n`.
    pub fn log(&self, n: i64) -> Option<u64> {
        let r = n.rem_euclid(self.modulus as i64) as usize;
        match self.logs[r] {
            u32::MAX => None,
            j => Some(j as u64),
        }
    }
}

// the table is determined by (modulus, generator)
impl PartialEq for DiscreteLogTable {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus && self.generator == other.generator
    }
}

impl Eq for DiscreteLogTable {}

fn is_primitive_root(g: u64, q: u64) -> bool {
    if g % q == 0 {
        return false;
    }
    distinct_prime_factors(q - 1)
        .into_iter()
        .all(|r| pow_mod(g, (q - 1) / r, q) != 1)
}

/// Least primitive root of an odd prime.
pub fn smallest_primitive_root(q: u64) -> Result<u64, CharacterError> {
    if q < 3 || !is_prime(q) {
        return Err(CharacterError::NotOddPrime(q));
    }
    Ok((2..q)
        .find(|&g| is_primitive_root(g, q))
        .expect("every prime has a primitive root"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CharacterKind {
    /// `n -> (D/n)` for a fundamental discriminant `D`.
    Kronecker { discriminant: i64 },
    /// `g^j -> exp(2 pi i j k / (q - 1))`.
    ModPrime { table: Arc<DiscreteLogTable>, index: u64 },
}

/// A primitive nontrivial Dirichlet character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirichletCharacter {
    modulus: u64,
    kind: CharacterKind,
}

impl DirichletCharacter {
    pub fn kronecker(discriminant: i64) -> Result<Self, CharacterError> {
        if !is_fundamental_discriminant(discriminant) {
            return Err(CharacterError::NotFundamental(discriminant));
        }
        Ok(Self {
            modulus: discriminant.unsigned_abs(),
            kind: CharacterKind::Kronecker { discriminant },
        })
    }

    pub fn mod_prime(q: u64, generator: u64, index: u64) -> Result<Self, CharacterError> {
        Self::from_table(Arc::new(DiscreteLogTable::new(q, generator)?), index)
    }

    pub fn from_table(table: Arc<DiscreteLogTable>, index: u64) -> Result<Self, CharacterError> {
        let q = table.modulus;
        if index == 0 || index > q - 2 {
            return Err(CharacterError::IndexOutOfRange { q, index, max: q - 2 });
        }
        Ok(Self {
            modulus: q,
            kind: CharacterKind::ModPrime { table, index },
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn kind(&self) -> &CharacterKind {
        &self.kind
    }

    /// Stable identifier used as `object_id` in zero files.
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn is_real(&self) -> bool {
        match &self.kind {
            CharacterKind::Kronecker { .. } => true,
            CharacterKind::ModPrime { table, index } => 2 * index == table.modulus - 1,
        }
    }

    /// 0 if `chi(-1) = 1`, 1 if `chi(-1) = -1`.
    pub fn parity(&self) -> u8 {
        match &self.kind {
            CharacterKind::Kronecker { discriminant } => u8::from(*discriminant < 0),
            CharacterKind::ModPrime { index, .. } => (index % 2) as u8,
        }
    }

    pub fn is_even(&self) -> bool {
        self.parity() == 0
    }

    pub fn value(&self, n: i64) -> Complex64 {
        match &self.kind {
            CharacterKind::Kronecker { discriminant } => Complex64::new(kronecker(*discriminant, n) as f64, 0.0),
            CharacterKind::ModPrime { table, index } => match table.log(n) {
                None => Complex64::new(0.0, 0.0),
                Some(j) => {
                    let order = table.modulus - 1;
                    let r = (j as u128 * *index as u128 % order as u128) as f64;
                    Complex64::from_polar(1.0, 2.0 * PI * r / order as f64)
                }
            },
        }
    }

    pub fn conjugate(&self) -> Self {
        match &self.kind {
            CharacterKind::Kronecker { .. } => self.clone(),
            CharacterKind::ModPrime { table, index } => Self {
                modulus: self.modulus,
                kind: CharacterKind::ModPrime {
                    table: Arc::clone(table),
                    index: table.modulus - 1 - index,
                },
            },
        }
    }

    /// `sum_{a=1}^{q} chi(a) e(a/q)`.
    pub fn gauss_sum(&self) -> Complex64 {
        let q = self.modulus;
        (1..=q)
            .map(|a| {
                let angle = 2.0 * PI * (a % q) as f64 / q as f64;
                self.value(a as i64) * Complex64::from_polar(1.0, angle)
            })
            .sum()
    }

    /// Root number `tau(chi) / (i^a sqrt(q))` of the functional equation.
    pub fn root_number(&self) -> Complex64 {
        let i_pow = if self.parity() == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        self.gauss_sum() / (i_pow * (self.modulus as f64).sqrt())
    }
}

impl fmt::Display for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CharacterKind::Kronecker { discriminant } => write!(f, "kron{discriminant}"),
            CharacterKind::ModPrime { table, index } => {
                write!(f, "q{}g{}k{}", table.modulus, table.generator, index)
            }
        }
    }
}

/// A set of characters, optionally closed under complex conjugation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterFamily {
    members: Vec<DirichletCharacter>,
    conjugation_closed: bool,
    /// Index of a self-conjugate odd character that was left out of sampling.
    pub excluded_self_conjugate: Option<u64>,
}

impl CharacterFamily {
    /// Wraps `members`, setting the closure flag when it actually holds.
    pub fn new(members: Vec<DirichletCharacter>) -> Self {
        let conjugation_closed = members.iter().all(|c| members.contains(&c.conjugate()));
        Self {
            members,
            conjugation_closed,
            excluded_self_conjugate: None,
        }
    }

    pub fn members(&self) -> &[DirichletCharacter] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_conjugation_closed(&self) -> bool {
        self.conjugation_closed
    }
}

/// Seeded sample of `count / 2` conjugate pairs of odd characters mod `q`.
///
/// Candidates are the pairs `{k, q-1-k}` with `k` odd and `k < (q-1)/2`; the
/// self-conjugate index `(q-1)/2` (odd when `q = 3 mod 4`) is never drawn and
/// is reported in `excluded_self_conjugate`. Pairs are chosen by a partial
/// Fisher-Yates shuffle driven by xoshiro256** seeded through SplitMix64,
/// drawing position `i + next_u64() % (n - i)` at step `i`. Members are listed
/// by ascending smaller index, each followed by its conjugate.
pub fn build_odd_family(q: u64, count: usize, seed: u64) -> Result<CharacterFamily, CharacterError> {
    if count % 2 != 0 {
        return Err(CharacterError::OddCount { requested: count });
    }
    let table = Arc::new(DiscreteLogTable::canonical(q)?);
    let half = (q - 1) / 2;
    let mut pairs: Vec<u64> = (1..half).step_by(2).collect();
    if count / 2 > pairs.len() {
        return Err(CharacterError::FamilyTooLarge {
            q,
            requested: count,
            available: 2 * pairs.len(),
        });
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let n = pairs.len();
    for i in 0..count / 2 {
        let j = i + (rng.next_u64() % (n - i) as u64) as usize;
        pairs.swap(i, j);
    }
    let mut chosen = pairs[..count / 2].to_vec();
    chosen.sort_unstable();

    let mut members = Vec::with_capacity(count);
    for k in chosen {
        members.push(DirichletCharacter::from_table(Arc::clone(&table), k)?);
        members.push(DirichletCharacter::from_table(Arc::clone(&table), q - 1 - k)?);
    }
    let mut family = CharacterFamily::new(members);
    family.excluded_self_conjugate = (half % 2 == 1).then_some(half);
    Ok(family)
}
