//! Integer and prime infrastructure: sieving, prime powers, the Kronecker
//! symbol and fundamental discriminants.

use thiserror::Error;

/// Largest accepted sieve limit.
pub const MAX_SIEVE_LIMIT: u64 = 1 << 32;

const SEGMENT_LEN: u64 = 1 << 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("sieve limit {0} outside the supported range [2, 2^32]")]
    LimitOutOfRange(u64),
}

/// All primes strictly below `limit`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// True when every prime `p < x` is present in the table.
    pub fn covers(&self, x: f64) -> bool {
        x <= self.limit as f64
    }

    /// Number of primes `p < x`.
    ///
    /// An `x` within `1e-9` of an integer `n` is treated as exactly `n`, so
    /// `p = n` is excluded.
    pub fn count_below(&self, x: f64) -> usize {
        let cutoff = strict_cutoff(x);
        if cutoff < 2 {
            return 0;
        }
        self.primes.partition_point(|&p| p <= cutoff as u64)
    }

    /// The primes `p < x` (same integer convention as [`count_below`](Self::count_below)).
    pub fn primes_below(&self, x: f64) -> &[u64] {
        &self.primes[..self.count_below(x)]
    }
}

/// Largest integer `n` with `n < x`, snapping `x` to the nearest integer when
/// it lies within `1e-9` of one.
pub fn strict_cutoff(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64 - 1
    } else {
        x.floor() as i64
    }
}

/// Segmented sieve of Eratosthenes returning all primes `< limit`.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable, ArithError> {
    if !(2..=MAX_SIEVE_LIMIT).contains(&limit) {
        return Err(ArithError::LimitOutOfRange(limit));
    }
    let root = limit.isqrt() + 1;
    let base = simple_sieve(root.min(limit));
    let mut primes: Vec<u64> = Vec::new();

    let mut lo = 2u64;
    let mut composite = vec![false; SEGMENT_LEN as usize];
    while lo < limit {
        let hi = (lo + SEGMENT_LEN).min(limit);
        let seg = &mut composite[..(hi - lo) as usize];
        seg.fill(false);
        for &p in &base {
            if p * p >= hi {
                break;
            }
            let mut m = (p * p).max(lo.div_ceil(p) * p);
            while m < hi {
                seg[(m - lo) as usize] = true;
                m += p;
            }
        }
        primes.extend(seg.iter().enumerate().filter(|(_, &c)| !c).map(|(i, _)| lo + i as u64));
        lo = hi;
    }
    Ok(PrimeTable { limit, primes })
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut is_prime = vec![true; n];
    is_prime[0] = false;
    is_prime[1] = false;
    let mut i = 2;
    while i * i < n {
        if is_prime[i] {
            for j in (i * i..n).step_by(i) {
                is_prime[j] = false;
            }
        }
        i += 1;
    }
    is_prime
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

/// A prime power `p^k` with `k >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimePower {
    pub p: u64,
    pub k: u32,
    pub value: u64,
}

/// All `p^k < limit` with `k >= 2`, sorted by value.
pub fn prime_powers(limit: u64) -> Result<Vec<PrimePower>, ArithError> {
    if !(2..=MAX_SIEVE_LIMIT).contains(&limit) {
        return Err(ArithError::LimitOutOfRange(limit));
    }
    let base = sieve_primes((limit.isqrt() + 1).max(2))?;
    let mut out = Vec::new();
    for &p in base.primes() {
        let mut value = p * p;
        let mut k = 2;
        while value < limit {
            out.push(PrimePower { p, k, value });
            match value.checked_mul(p) {
                Some(v) => value = v,
                None => break,
            }
            k += 1;
        }
    }
    out.sort_by_key(|pp| pp.value);
    Ok(out)
}

/// True if `n` is a prime power `p^k` with `k >= 1`.
pub fn is_prime_power(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let p = smallest_prime_factor(n);
    let mut m = n;
    while m % p == 0 {
        m /= p;
    }
    m == 1
}

fn smallest_prime_factor(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 2;
    }
    n
}

/// Distinct prime factors of `n`, ascending (trial division).
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// (-1)^((a^2-1)/8) indexed by a mod 8
const TWO_TABLE: [i8; 8] = [0, 1, 0, -1, 0, -1, 0, 1];

/// The Kronecker symbol `(a/n)` for arbitrary integers, including `n = 0`,
/// `n = 2` (via `a mod 8`) and `n < 0` (via the sign of `a`).
pub fn kronecker(a: i64, n: i64) -> i8 {
    if n == 0 {
        return if a.unsigned_abs() == 1 { 1 } else { 0 };
    }
    if a % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let mut a = a as i128;
    let mut b = n as i128;
    let v = b.trailing_zeros();
    b >>= v;
    let mut k: i8 = if v % 2 == 0 { 1 } else { TWO_TABLE[(a & 7) as usize] };
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    // b is odd and positive from here on
    loop {
        if a == 0 {
            return if b == 1 { k } else { 0 };
        }
        let v = a.trailing_zeros();
        a >>= v;
        if v % 2 == 1 {
            k *= TWO_TABLE[(b & 7) as usize];
        }
        if a & b & 2 != 0 {
            k = -k;
        }
        let r = a.abs();
        a = b % r;
        b = r;
    }
}

fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            m /= d;
            if m % d == 0 {
                return false;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    true
}

/// True when `d` is the discriminant of a quadratic field.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 || d == 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

/// All fundamental discriminants in the closed interval `[lo, hi]`, ascending.
/// Empty when `lo > hi`.
pub fn list_fundamental_discriminants(lo: i64, hi: i64) -> Vec<i64> {
    if lo > hi {
        return Vec::new();
    }
    (lo..=hi).filter(|&d| is_fundamental_discriminant(d)).collect()
}
