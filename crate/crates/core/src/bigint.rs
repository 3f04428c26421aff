//! Small helpers around `BigUint` shared by the oracles and table builders.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};

/// Little-endian 32-bit digits of `x`, zero-padded (or truncated) to `len`.
pub fn to_digits(x: &BigUint, len: usize) -> Vec<u32> {
    let mut d = x.to_u32_digits();
    d.resize(len, 0);
    d
}

pub fn from_digits(digits: &[u32]) -> BigUint {
    BigUint::from_slice(digits)
}

/// Uniform value in `[0, bound)` by rejection on the bit length of `bound`.
pub fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "empty range");
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask = if bits.is_multiple_of(32) { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut w: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
        if let Some(last) = w.last_mut() {
            *last &= top_mask;
        }
        let v = BigUint::from_slice(&w);
        if &v < bound {
            return v;
        }
    }
}

/// Uniform value with at most `bits` bits.
pub fn random_bits<R: RngCore + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    if bits == 0 {
        return BigUint::zero();
    }
    random_below(rng, &(BigUint::one() << bits))
}

pub fn parse_hex(s: &str) -> Result<BigUint> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty hex string".into()));
    }
    BigUint::parse_bytes(t.as_bytes(), 16).ok_or_else(|| Error::Parse(format!("invalid hex `{t}`")))
}

pub fn to_hex(x: &BigUint) -> String {
    x.to_str_radix(16)
}

/// Modular inverse via the extended Euclidean algorithm.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    use num_bigint::BigInt;
    let a = BigInt::from(a.mod_floor(m));
    let m_int = BigInt::from(m.clone());
    let e = a.extended_gcd(&m_int);
    if !e.gcd.is_one() {
        return None;
    }
    e.x.mod_floor(&m_int).to_biguint()
}

pub fn mod_inverse_u64(a: u64, m: u64) -> Option<u64> {
    mod_inverse(&BigUint::from(a), &BigUint::from(m)).map(|v| v.to_u64_digits().first().copied().unwrap_or(0))
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: &BigUint) -> u64 {
    assert!(!x.is_zero());
    let b = x.bits();
    if (x - 1u32).is_zero() {
        0
    } else if (x & (x - 1u32)).is_zero() {
        b - 1
    } else {
        b
    }
}

const SMALL_PRIMES: [u32; 25] =
    [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];

/// Miller-Rabin with the first 25 primes as witnesses. Deterministic below
/// 3.3e24, probabilistic (error < 4^-25) above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for p in SMALL_PRIMES {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for a in SMALL_PRIMES {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn primality_small_and_known() {
        let primes = [2u64, 3, 13, 17, 97, 7681, 12289, 998_244_353, (1 << 31) - 1];
        for p in primes {
            assert!(is_probable_prime(&BigUint::from(p)), "{p}");
        }
        for c in [1u64, 4, 9, 91, 561, 1_105, 998_244_355, 3_215_031_751] {
            assert!(!is_probable_prime(&BigUint::from(c)), "{c}");
        }
        let p25519 = (BigUint::one() << 255u32) - 19u32;
        assert!(is_probable_prime(&p25519));
        assert!(!is_probable_prime(&(p25519 + 2u32)));
    }

    #[test]
    fn ceil_log2_edges() {
        assert_eq!(ceil_log2(&BigUint::from(1u32)), 0);
        assert_eq!(ceil_log2(&BigUint::from(2u32)), 1);
        assert_eq!(ceil_log2(&BigUint::from(45u32)), 6);
        assert_eq!(ceil_log2(&BigUint::from(64u32)), 6);
        assert_eq!(ceil_log2(&BigUint::from(65u32)), 7);
    }

    #[test]
    fn random_below_stays_in_range() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let bound = BigUint::from(1000u32);
        for _ in 0..1000 {
            assert!(random_below(&mut rng, &bound) < bound);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = BigUint::from(45045u32);
        let a = BigUint::from(256u32);
        let inv = mod_inverse(&a, &m).unwrap();
        assert!(((a * inv) % m).is_one());
        assert!(mod_inverse(&BigUint::from(3u32), &BigUint::from(9u32)).is_none());
    }
}
