//! Prime-field arithmetic over radix-2^32 digit vectors.
//!
//! Elements are little-endian vectors of `d = ceil(bits(beta) / 32)` digits.
//! [`mont_mul_radix`] is the radix Montgomery baseline: a schoolbook digit
//! product with explicit carry propagation, then word-by-word Montgomery
//! reduction. [`modmul_oracle`] goes through `BigUint` division and is the
//! ground truth every other multiplication path is checked against.
//!
//! Canonical elements are `< beta`. Lazy elements are `< 2 * beta`; the
//! add/sub/normalize family accepts either.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::bigint::{self, from_digits, to_digits};
use crate::error::{Error, Result};

pub const DIGIT_BITS: u32 = 32;

/// A prime modulus together with its radix-2^32 Montgomery constants.
pub struct PrimeField {
    name: String,
    beta: BigUint,
    modulus: Vec<u32>,
    mont_r: BigUint,
    mont_r2: Vec<u32>,
    mont_ninv: u32,
    two_adicity: u32,
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrimeField")
            .field("name", &self.name)
            .field("beta", &bigint::to_hex(&self.beta))
            .field("digits", &self.modulus.len())
            .finish()
    }
}

/// On-disk description of a field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldParams {
    pub name: String,
    /// Lowercase big-endian hex, no prefix.
    pub modulus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_adicity: Option<u32>,
}

impl PrimeField {
    /// Builds the field, rejecting even or composite moduli.
    pub fn new(name: impl Into<String>, beta: BigUint) -> Result<Arc<Self>> {
        let name = name.into();
        if beta < BigUint::from(3u32) || !beta.bit(0) {
            return Err(Error::Config(format!("modulus of `{name}` must be an odd prime")));
        }
        if !bigint::is_probable_prime(&beta) {
            return Err(Error::Config(format!("modulus of `{name}` is not prime")));
        }
        let d = beta.bits().div_ceil(DIGIT_BITS as u64) as usize;
        let modulus = to_digits(&beta, d);
        let r = BigUint::one() << (DIGIT_BITS as usize * d);
        let mont_r = &r % &beta;
        let mont_r2 = to_digits(&((&mont_r * &mont_r) % &beta), d);
        // -beta^-1 mod 2^32 by Newton iteration on the low digit.
        let b0 = modulus[0];
        let mut inv: u32 = 1;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u32.wrapping_sub(b0.wrapping_mul(inv)));
        }
        let mont_ninv = inv.wrapping_neg();
        let two_adicity = (&beta - 1u32).trailing_zeros().unwrap_or(0) as u32;
        Ok(Arc::new(Self { name, beta, modulus, mont_r, mont_r2, mont_ninv, two_adicity }))
    }

    pub fn from_u64(name: impl Into<String>, beta: u64) -> Result<Arc<Self>> {
        Self::new(name, BigUint::from(beta))
    }

    pub fn from_params(params: &FieldParams) -> Result<Arc<Self>> {
        let beta = bigint::parse_hex(&params.modulus)?;
        let field = Self::new(params.name.clone(), beta)?;
        if let Some(expected) = params.two_adicity {
            if expected != field.two_adicity {
                return Err(Error::Config(format!(
                    "`{}` declares 2-adicity {expected}, modulus has {}",
                    params.name, field.two_adicity
                )));
            }
        }
        Ok(field)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Arc<Self>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: FieldParams =
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_params(&params)
    }

    pub fn params(&self) -> FieldParams {
        FieldParams {
            name: self.name.clone(),
            modulus: bigint::to_hex(&self.beta),
            two_adicity: Some(self.two_adicity),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn beta(&self) -> &BigUint {
        &self.beta
    }

    pub fn bits(&self) -> u64 {
        self.beta.bits()
    }

    /// Digit count `d`.
    pub fn digit_count(&self) -> usize {
        self.modulus.len()
    }

    pub fn modulus_digits(&self) -> &[u32] {
        &self.modulus
    }

    /// `2^(32 d) mod beta`.
    pub fn mont_r(&self) -> &BigUint {
        &self.mont_r
    }

    /// `-beta^-1 mod 2^32`.
    pub fn mont_ninv(&self) -> u32 {
        self.mont_ninv
    }

    pub fn two_adicity(&self) -> u32 {
        self.two_adicity
    }

    pub fn same(&self, other: &PrimeField) -> bool {
        std::ptr::eq(self, other) || self.beta == other.beta
    }

    /// Montgomery product of two digit vectors `< beta`: `a * b * 2^(-32 d) mod beta`.
    pub(crate) fn mont_mul_digits(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let d = self.modulus.len();
        let mut t = schoolbook_mul(a, b);
        t.push(0);
        for i in 0..d {
            let m = t[i].wrapping_mul(self.mont_ninv) as u64;
            let mut carry = 0u64;
            for j in 0..d {
                let s = t[i + j] as u64 + m * self.modulus[j] as u64 + carry;
                t[i + j] = s as u32;
                carry = s >> 32;
            }
            let mut k = i + d;
            while carry != 0 {
                let s = t[k] as u64 + carry;
                t[k] = s as u32;
                carry = s >> 32;
                k += 1;
            }
        }
        let mut r = t.split_off(d);
        if cmp_digits(&r, &self.modulus) != Ordering::Less {
            sub_assign_digits(&mut r, &self.modulus);
        }
        r.truncate(d);
        r
    }

    /// Reduces a digit vector `< 4 beta` (length `d + 1`) to canonical form.
    fn reduce_small(&self, mut v: Vec<u32>) -> Vec<u32> {
        while cmp_digits(&v, &self.modulus) != Ordering::Less {
            sub_assign_digits(&mut v, &self.modulus);
        }
        v.truncate(self.modulus.len());
        v
    }
}

impl PartialEq for PrimeField {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

/// A field element in radix-2^32 digit form, canonical (`< beta`) or lazy (`< 2 beta`).
#[derive(Clone)]
pub struct FieldElement {
    digits: Vec<u32>,
    field: Arc<PrimeField>,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElement({} mod {})", self.to_hex(), self.field.name)
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.field.same(&other.field) && self.digits == other.digits
    }
}

impl Eq for FieldElement {}

impl FieldElement {
    /// Reduces `x` modulo beta.
    pub fn from_biguint(field: &Arc<PrimeField>, x: &BigUint) -> Self {
        let v = x % &field.beta;
        Self { digits: to_digits(&v, field.digit_count()), field: Arc::clone(field) }
    }

    pub fn from_u64(field: &Arc<PrimeField>, x: u64) -> Self {
        Self::from_biguint(field, &BigUint::from(x))
    }

    pub fn zero(field: &Arc<PrimeField>) -> Self {
        Self { digits: vec![0; field.digit_count()], field: Arc::clone(field) }
    }

    pub fn one(field: &Arc<PrimeField>) -> Self {
        Self::from_u64(field, 1)
    }

    /// Wraps raw digits. Values up to the lazy bound `2 * beta` are accepted.
    pub fn from_digits(field: &Arc<PrimeField>, digits: Vec<u32>) -> Result<Self> {
        if digits.len() != field.digit_count() {
            return Err(Error::Length { expected: field.digit_count(), got: digits.len() });
        }
        if from_digits(&digits) >= (&field.beta << 1u32) {
            return Err(Error::Domain("digits exceed the lazy bound 2*beta".into()));
        }
        Ok(Self { digits, field: Arc::clone(field) })
    }

    /// Parses lowercase or uppercase big-endian hex. Must be canonical.
    pub fn from_hex(field: &Arc<PrimeField>, s: &str) -> Result<Self> {
        let v = bigint::parse_hex(s)?;
        if v >= field.beta {
            return Err(Error::Domain(format!("`{s}` is not below the modulus")));
        }
        Ok(Self::from_biguint(field, &v))
    }

    pub fn random<R: rand::RngCore + ?Sized>(field: &Arc<PrimeField>, rng: &mut R) -> Self {
        Self::from_biguint(field, &bigint::random_below(rng, &field.beta))
    }

    pub fn to_hex(&self) -> String {
        bigint::to_hex(&self.to_biguint())
    }

    pub fn to_biguint(&self) -> BigUint {
        from_digits(&self.digits)
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn field(&self) -> &Arc<PrimeField> {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    pub fn is_canonical(&self) -> bool {
        cmp_digits(&self.digits, &self.field.modulus) == Ordering::Less
    }

    /// `a * R mod beta`.
    pub fn to_montgomery(&self) -> Self {
        let a = normalize(self);
        Self { digits: self.field.mont_mul_digits(&a.digits, &self.field.mont_r2), field: Arc::clone(&self.field) }
    }

    /// `a * R^-1 mod beta`.
    pub fn from_montgomery(&self) -> Self {
        let a = normalize(self);
        let mut one = vec![0u32; self.field.digit_count()];
        one[0] = 1;
        Self { digits: self.field.mont_mul_digits(&a.digits, &one), field: Arc::clone(&self.field) }
    }

    pub fn neg(&self) -> Self {
        sub_mod(&Self::zero(&self.field), self).expect("same field")
    }

    pub fn pow(&self, e: &BigUint) -> Self {
        let b = self.to_biguint();
        Self::from_biguint(&self.field, &b.modpow(e, &self.field.beta))
    }

    pub fn pow_u64(&self, e: u64) -> Self {
        self.pow(&BigUint::from(e))
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if normalize(self).is_zero() {
            return None;
        }
        Some(self.pow(&(&self.field.beta - 2u32)))
    }

    /// Euler's criterion. Zero counts as a square.
    pub fn is_square(&self) -> bool {
        let e = (&self.field.beta - 1u32) >> 1u32;
        let r = self.pow(&e);
        r.is_zero() || r.to_biguint().is_one()
    }
}

fn check_same(a: &FieldElement, b: &FieldElement) -> Result<()> {
    if a.field.same(&b.field) {
        Ok(())
    } else {
        Err(Error::FieldMismatch)
    }
}

/// Radix Montgomery multiplication: `a * b * 2^(-32 d) mod beta`, canonical.
pub fn mont_mul_radix(a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
    check_same(a, b)?;
    if !a.is_canonical() || !b.is_canonical() {
        return Err(Error::Domain("mont_mul_radix expects canonical operands".into()));
    }
    Ok(FieldElement { digits: a.field.mont_mul_digits(&a.digits, &b.digits), field: Arc::clone(&a.field) })
}

/// Reference product `a * b mod beta` by full-width multiply and division.
pub fn modmul_oracle(a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
    check_same(a, b)?;
    let p = a.to_biguint() * b.to_biguint();
    Ok(FieldElement::from_biguint(&a.field, &p))
}

/// `(a + b) mod beta` for canonical or lazy operands.
pub fn add_mod(a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
    check_same(a, b)?;
    let d = a.field.digit_count();
    let mut s = a.digits.clone();
    s.push(0);
    let mut carry = 0u64;
    for i in 0..d {
        let t = s[i] as u64 + b.digits[i] as u64 + carry;
        s[i] = t as u32;
        carry = t >> 32;
    }
    s[d] = carry as u32;
    Ok(FieldElement { digits: a.field.reduce_small(s), field: Arc::clone(&a.field) })
}

/// `(a - b) mod beta` for canonical or lazy operands.
pub fn sub_mod(a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
    check_same(a, b)?;
    let d = a.field.digit_count();
    // a + 2*beta - b is non-negative for b < 2*beta.
    let mut s = a.digits.clone();
    s.push(0);
    for _ in 0..2 {
        add_assign_digits(&mut s, &a.field.modulus);
    }
    let mut bb = b.digits.clone();
    bb.push(0);
    sub_assign_digits(&mut s, &bb);
    debug_assert_eq!(s.len(), d + 1);
    Ok(FieldElement { digits: a.field.reduce_small(s), field: Arc::clone(&a.field) })
}

/// Maps a lazy element (`< 2 beta`) to canonical form.
pub fn normalize(a: &FieldElement) -> FieldElement {
    let mut v = a.digits.clone();
    v.push(0);
    FieldElement { digits: a.field.reduce_small(v), field: Arc::clone(&a.field) }
}

/// Schoolbook product of two digit vectors with explicit carry propagation.
pub fn schoolbook_mul(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32; a.len() + b.len()];
    for (i, &ai) in a.iter().enumerate() {
        let mut carry = 0u64;
        for (j, &bj) in b.iter().enumerate() {
            let s = out[i + j] as u64 + ai as u64 * bj as u64 + carry;
            out[i + j] = s as u32;
            carry = s >> 32;
        }
        out[i + b.len()] = carry as u32;
    }
    out
}

fn cmp_digits(a: &[u32], b: &[u32]) -> Ordering {
    let n = a.len().max(b.len());
    for i in (0..n).rev() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// `a -= b`; requires `a >= b` and `a.len() >= b.len()`.
fn sub_assign_digits(a: &mut [u32], b: &[u32]) {
    let mut borrow = 0i64;
    for i in 0..a.len() {
        let t = a[i] as i64 - b.get(i).copied().unwrap_or(0) as i64 - borrow;
        if t < 0 {
            a[i] = (t + (1i64 << 32)) as u32;
            borrow = 1;
        } else {
            a[i] = t as u32;
            borrow = 0;
        }
    }
    debug_assert_eq!(borrow, 0, "digit subtraction underflow");
}

fn add_assign_digits(a: &mut [u32], b: &[u32]) {
    let mut carry = 0u64;
    for i in 0..a.len() {
        let t = a[i] as u64 + b.get(i).copied().unwrap_or(0) as u64 + carry;
        a[i] = t as u32;
        carry = t >> 32;
    }
    debug_assert_eq!(carry, 0, "digit addition overflow");
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f97() -> Arc<PrimeField> {
        PrimeField::from_u64("f97", 97).unwrap()
    }

    #[test]
    fn rejects_composite_and_even() {
        assert!(PrimeField::from_u64("x", 91).is_err());
        assert!(PrimeField::from_u64("x", 98).is_err());
        assert!(PrimeField::from_u64("x", 2).is_err());
    }

    #[test]
    fn montgomery_constants() {
        let f = f97();
        assert_eq!(f.digit_count(), 1);
        assert_eq!((97u64 * f.mont_ninv() as u64) % (1u64 << 32), (1u64 << 32) - 1, "beta * ninv = -1 mod 2^32");
        assert_eq!(f.mont_r(), &(BigUint::from(1u64 << 32) % 97u32));
    }

    #[test]
    fn mont_mul_zero_annihilates() {
        let f = f97();
        let z = FieldElement::zero(&f);
        for b in 0..97 {
            let b = FieldElement::from_u64(&f, b);
            assert!(mont_mul_radix(&z, &b).unwrap().is_zero());
        }
    }

    #[test]
    fn mont_mul_small_field_exhaustive_against_division() {
        let f = f97();
        let rinv = bigint::mod_inverse(f.mont_r(), f.beta()).unwrap();
        for a in 0..97u64 {
            for b in 0..97u64 {
                let got = mont_mul_radix(&FieldElement::from_u64(&f, a), &FieldElement::from_u64(&f, b))
                    .unwrap()
                    .to_biguint();
                let want = (BigUint::from(a * b) * &rinv) % 97u32;
                assert_eq!(got, want, "{a}*{b}");
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let f = f97();
        let x = FieldElement::from_u64(&f, 42);
        assert_eq!(modmul_oracle(&FieldElement::one(&f), &x).unwrap(), x);
        let m31 = PrimeField::from_u64("m31", (1 << 31) - 1).unwrap();
        let r = modmul_oracle(&FieldElement::from_u64(&m31, 1 << 30), &FieldElement::from_u64(&m31, 2)).unwrap();
        assert_eq!(r.to_biguint(), BigUint::one());
    }

    #[test]
    fn add_sub_normalize_edges() {
        let f = f97();
        let a = FieldElement::from_u64(&f, 33);
        assert_eq!(add_mod(&a, &FieldElement::zero(&f)).unwrap(), a);
        let top = FieldElement::from_u64(&f, 96);
        assert!(add_mod(&top, &FieldElement::one(&f)).unwrap().is_zero());
        let lazy = FieldElement::from_digits(&f, vec![97 + 5]).unwrap();
        assert!(!lazy.is_canonical());
        assert_eq!(normalize(&lazy).to_biguint(), BigUint::from(5u32));
        assert!(FieldElement::from_digits(&f, vec![2 * 97]).is_err());
        assert_eq!(sub_mod(&FieldElement::zero(&f), &FieldElement::one(&f)).unwrap(), top);
        let lazy_b = FieldElement::from_digits(&f, vec![190]).unwrap();
        assert_eq!(sub_mod(&a, &lazy_b).unwrap().to_biguint(), BigUint::from(33 + 2 * 97 - 190u32));
    }

    #[test]
    fn field_mismatch_is_an_error() {
        let a = FieldElement::one(&f97());
        let b = FieldElement::one(&PrimeField::from_u64("f101", 101).unwrap());
        assert!(matches!(mont_mul_radix(&a, &b), Err(Error::FieldMismatch)));
        assert!(matches!(modmul_oracle(&a, &b), Err(Error::FieldMismatch)));
        assert!(matches!(add_mod(&a, &b), Err(Error::FieldMismatch)));
    }

    #[test]
    fn hex_io_is_lowercase_without_prefix() {
        let p = (BigUint::one() << 255u32) - 19u32;
        let f = PrimeField::new("ed25519", p).unwrap();
        let x = FieldElement::from_hex(&f, "ABCDEF0123").unwrap();
        assert_eq!(x.to_hex(), "abcdef0123");
        assert_eq!(FieldElement::zero(&f).to_hex(), "0");
        assert!(FieldElement::from_hex(&f, "0x12").is_err());
        assert!(FieldElement::from_hex(&f, &bigint::to_hex(f.beta())).is_err());
    }

    #[test]
    fn montgomery_roundtrip_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = PrimeField::new("ed25519", (BigUint::one() << 255u32) - 19u32).unwrap();
        for _ in 0..100 {
            let x = FieldElement::random(&f, &mut rng);
            assert_eq!(x.to_montgomery().from_montgomery(), x);
            if let Some(i) = x.inv() {
                assert!(modmul_oracle(&x, &i).unwrap().to_biguint().is_one());
            }
        }
    }

    #[test]
    fn params_declared_two_adicity_is_checked() {
        let mut p = PrimeField::from_u64("ntt", 998_244_353).unwrap().params();
        assert_eq!(p.two_adicity, Some(23));
        assert!(PrimeField::from_params(&p).is_ok());
        p.two_adicity = Some(5);
        assert!(PrimeField::from_params(&p).is_err());
    }
}
