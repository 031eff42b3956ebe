//! Residue arithmetic modulo 32-bit primes, prime sampling, and the dense
//! residue matrices used by the pushdown-automaton equivalence test.

use crate::rational::Q;
use crate::rng::RandomSource;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ModularError {
    #[error("prime {prime} divides a denominator and cannot be used")]
    PrimeDividesDenominator { prime: u64 },
}

/// Value in the prime field Z/pZ; `0 <= value < prime`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Residue {
    pub value: u64,
    pub prime: u64,
}

impl Residue {
    pub fn new(value: u64, prime: u64) -> Self {
        Residue {
            value: value % prime,
            prime,
        }
    }

    pub fn zero(prime: u64) -> Self {
        Residue { value: 0, prime }
    }

    pub fn one(prime: u64) -> Self {
        Residue { value: 1, prime }
    }

    pub fn add(self, other: Residue) -> Residue {
        debug_assert_eq!(self.prime, other.prime);
        Residue::new(self.value + other.value, self.prime)
    }

    pub fn sub(self, other: Residue) -> Residue {
        debug_assert_eq!(self.prime, other.prime);
        Residue::new(self.value + self.prime - other.value, self.prime)
    }

    pub fn mul(self, other: Residue) -> Residue {
        debug_assert_eq!(self.prime, other.prime);
        // prime < 2^32, so the product fits in u64.
        Residue::new(self.value * other.value, self.prime)
    }

    pub fn inv(self) -> Residue {
        debug_assert_ne!(self.value, 0, "inverse of zero residue");
        Residue::new(pow_mod(self.value, self.prime - 2, self.prime), self.prime)
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }
}

fn mul_mod_wide(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc: u64 = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_wide(acc, base, m);
        }
        base = mul_mod_wide(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin with bases 2, 3, 5, 7, 11, 13, 17, which is
/// exact for all candidates below 3.4e14 and in particular for the 32-bit
/// range sampled here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_wide(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Uniform random prime in [2^31, 2^32).
pub fn random_prime(rng: &mut RandomSource) -> u64 {
    loop {
        let candidate = (1u64 << 31) | 1 | (rng.below(1 << 30) << 1);
        if is_prime(candidate) {
            return candidate;
        }
    }
}

/// Reduces an exact rational to a residue: numerator times the inverse of
/// the denominator. Fails when the prime divides the denominator.
pub fn rational_to_residue(q: &Q, prime: u64) -> Result<Residue, ModularError> {
    let p = BigInt::from(prime);
    let den = q.denom().mod_floor(&p);
    if den.is_zero() {
        return Err(ModularError::PrimeDividesDenominator { prime });
    }
    let num = q.numer().mod_floor(&p);
    debug_assert!(!num.is_negative());
    let num = num.to_u64().expect("residue fits u64");
    let den = den.to_u64().expect("residue fits u64");
    Ok(Residue::new(num, prime).mul(Residue::new(den, prime).inv()))
}

/// Dense square matrix over Z/pZ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResMat {
    pub n: usize,
    pub prime: u64,
    data: Vec<u64>,
}

impl ResMat {
    pub fn zero(n: usize, prime: u64) -> Self {
        ResMat {
            n,
            prime,
            data: vec![0; n * n],
        }
    }

    pub fn identity(n: usize, prime: u64) -> Self {
        let mut m = ResMat::zero(n, prime);
        for i in 0..n {
            m.data[i * n + i] = 1 % prime;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.n + j] = v % self.prime;
    }

    pub fn add(&self, other: &ResMat) -> ResMat {
        debug_assert_eq!(self.n, other.n);
        let mut out = ResMat::zero(self.n, self.prime);
        for (o, (a, b)) in out.data.iter_mut().zip(self.data.iter().zip(&other.data)) {
            *o = (a + b) % self.prime;
        }
        out
    }

    pub fn mul(&self, other: &ResMat) -> ResMat {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let p = self.prime as u128;
        let mut out = ResMat::zero(n, self.prime);
        // Entries are below 2^32, so a row of up to 2^44 products fits in
        // u128 without intermediate reduction.
        let mut row = vec![0u128; n];
        for i in 0..n {
            row.fill(0);
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0 {
                    continue;
                }
                let a = a as u128;
                let src = &other.data[k * n..(k + 1) * n];
                for (acc, &b) in row.iter_mut().zip(src) {
                    *acc += a * b as u128;
                }
            }
            for (j, acc) in row.iter().enumerate() {
                out.data[i * n + j] = (acc % p) as u64;
            }
        }
        out
    }

    pub fn scale(&self, c: u64) -> ResMat {
        let mut out = ResMat::zero(self.n, self.prime);
        let c = c as u128;
        for (o, a) in out.data.iter_mut().zip(&self.data) {
            *o = ((*a as u128 * c) % self.prime as u128) as u64;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    #[test]
    fn small_primality() {
        let primes = [2u64, 3, 5, 7, 31, 97, 2147483659, 4294967291];
        for p in primes {
            assert!(is_prime(p), "{p} should be prime");
        }
        let composites = [1u64, 4, 9, 91, 561, 2147483659 + 2, 4294967295];
        for c in composites {
            assert!(!is_prime(c), "{c} should be composite");
        }
    }

    #[test]
    fn sampled_primes_are_in_range() {
        let mut rng = RandomSource::new(11);
        for _ in 0..5 {
            let p = random_prime(&mut rng);
            assert!(p >= (1 << 31) && p < (1 << 32));
            assert!(is_prime(p));
        }
    }

    #[test]
    fn rational_reduction_round_trips() {
        let p = 2147483659u64;
        let r = rational_to_residue(&qr(3, 4), p).unwrap();
        // 4 * r = 3 mod p
        assert_eq!(Residue::new(4, p).mul(r), Residue::new(3, p));
        let neg = rational_to_residue(&qr(-1, 2), p).unwrap();
        assert_eq!(Residue::new(2, p).mul(neg), Residue::new(p - 1, p));
        assert!(rational_to_residue(&qr(1, p as i64), p).is_err());
    }

    #[test]
    fn matrix_algebra_mod_p() {
        let p = 2147483659u64;
        let mut a = ResMat::zero(2, p);
        a.set(0, 0, 1);
        a.set(0, 1, 2);
        a.set(1, 1, 3);
        let i = ResMat::identity(2, p);
        assert_eq!(a.mul(&i), a);
        let sq = a.mul(&a);
        assert_eq!(sq.get(0, 1), 8);
        assert_eq!(sq.get(1, 1), 9);
    }
}
