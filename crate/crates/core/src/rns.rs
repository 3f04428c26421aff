//! Residue number system bases and exact CRT conversion.
//!
//! A basis is a list of pairwise-coprime odd moduli below `2^w` (w = 32 by
//! default). Per-limb Montgomery multiplication uses the factor `2^w` and never
//! moves data across limbs.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bigint;
use crate::error::{Error, Result};

pub const DEFAULT_W: u32 = 32;

#[derive(Debug)]
pub struct RnsBasis {
    moduli: Vec<u32>,
    product: BigUint,
    w: u32,
    /// `-q_i^-1 mod 2^w`.
    ninv: Vec<u64>,
    /// `2^w mod q_i`.
    z_mod: Vec<u32>,
    /// `Q / q_i`.
    cofactor: Vec<BigUint>,
    /// `(Q / q_i)^-1 mod q_i`.
    cofactor_inv: Vec<u32>,
}

impl PartialEq for RnsBasis {
    fn eq(&self, other: &Self) -> bool {
        self.w == other.w && self.moduli == other.moduli
    }
}

impl RnsBasis {
    /// Validates and precomputes a basis from explicit moduli.
    pub fn new(moduli: Vec<u32>, w: u32) -> Result<Arc<Self>> {
        if moduli.is_empty() {
            return Err(Error::Construction("a basis needs at least one modulus".into()));
        }
        if !(1..=32).contains(&w) {
            return Err(Error::Construction(format!("Montgomery width w={w} outside 1..=32")));
        }
        for (i, &q) in moduli.iter().enumerate() {
            if q < 3 || q % 2 == 0 {
                return Err(Error::Construction(format!("modulus {q} must be odd and > 1")));
            }
            if (q as u64) >= (1u64 << w) {
                return Err(Error::Construction(format!("modulus {q} is not below 2^{w}")));
            }
            for &p in &moduli[..i] {
                if (q as u64).gcd(&(p as u64)) != 1 {
                    return Err(Error::Construction(format!("moduli {p} and {q} are not coprime")));
                }
            }
        }
        let product: BigUint = moduli.iter().map(|&q| BigUint::from(q)).product();
        let mask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
        let ninv = moduli
            .iter()
            .map(|&q| {
                let mut inv: u64 = 1;
                for _ in 0..6 {
                    inv = inv.wrapping_mul(2u64.wrapping_sub((q as u64).wrapping_mul(inv)));
                }
                inv.wrapping_neg() & mask
            })
            .collect();
        let z_mod = moduli.iter().map(|&q| ((1u64 << w) % q as u64) as u32).collect();
        let cofactor: Vec<BigUint> = moduli.iter().map(|&q| &product / q).collect();
        let cofactor_inv = moduli
            .iter()
            .zip(&cofactor)
            .map(|(&q, c)| {
                let c_mod = (c % q).to_u64().unwrap_or(0);
                bigint::mod_inverse_u64(c_mod, q as u64).expect("coprime moduli") as u32
            })
            .collect();
        Ok(Arc::new(Self { moduli, product, w, ninv, z_mod, cofactor, cofactor_inv }))
    }

    pub fn moduli(&self) -> &[u32] {
        &self.moduli
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    /// `Q = prod q_i`.
    pub fn product(&self) -> &BigUint {
        &self.product
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    /// `2^w mod q_i` for every limb.
    pub fn z_residues(&self) -> &[u32] {
        &self.z_mod
    }

    pub fn modulus_sum(&self) -> BigUint {
        self.moduli.iter().map(|&q| BigUint::from(q)).sum()
    }

    pub fn coprime_to(&self, x: &BigUint) -> bool {
        self.moduli.iter().all(|&q| (x % q).to_u64().unwrap_or(0).gcd(&(q as u64)) == 1)
    }

    /// Text dump: `w`, ordered moduli in hex, and hex `Q`.
    pub fn dump(&self) -> String {
        let mut s = String::from("# morph rns basis\n");
        let _ = writeln!(s, "w {}", self.w);
        let _ = writeln!(s, "limbs {}", self.moduli.len());
        for (i, q) in self.moduli.iter().enumerate() {
            let _ = writeln!(s, "q {i} {q:x}");
        }
        let _ = writeln!(s, "product {}", bigint::to_hex(&self.product));
        s
    }

    pub fn parse_dump(text: &str) -> Result<Arc<Self>> {
        let mut w = None;
        let mut limbs = None;
        let mut moduli = Vec::new();
        let mut product = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("basis dump line {}: `{line}`", lineno + 1));
            match parts.as_slice() {
                ["w", v] => w = Some(v.parse::<u32>().map_err(|_| bad())?),
                ["limbs", v] => limbs = Some(v.parse::<usize>().map_err(|_| bad())?),
                ["q", idx, v] => {
                    let idx: usize = idx.parse().map_err(|_| bad())?;
                    if idx != moduli.len() {
                        return Err(bad());
                    }
                    moduli.push(u32::from_str_radix(v, 16).map_err(|_| bad())?);
                }
                ["product", v] => product = Some(bigint::parse_hex(v)?),
                _ => return Err(bad()),
            }
        }
        let w = w.ok_or_else(|| Error::Parse("basis dump without `w`".into()))?;
        if limbs != Some(moduli.len()) {
            return Err(Error::Parse("basis dump limb count disagrees with moduli".into()));
        }
        let basis = Self::new(moduli, w)?;
        if product.as_ref() != Some(&basis.product) {
            return Err(Error::Parse("basis dump product disagrees with moduli".into()));
        }
        Ok(basis)
    }
}

/// Where [`build_basis_with`] draws candidate moduli from.
#[derive(Debug, Clone)]
pub enum Candidates {
    /// Odd values in `[2^30, 2^31)`; per-limb sums fit 32 bits.
    Narrow,
    /// Odd values in `[2^31, 2^32)`.
    Wide,
    /// An explicit pool, consumed in seeded-shuffle order.
    Pool(Vec<u32>),
}

#[derive(Debug, Clone)]
pub struct BasisSpec {
    pub limb_count: usize,
    pub seed: u64,
    pub forbidden: Vec<BigUint>,
    pub w: u32,
    pub candidates: Candidates,
}

impl BasisSpec {
    pub fn new(limb_count: usize, seed: u64) -> Self {
        Self { limb_count, seed, forbidden: Vec::new(), w: DEFAULT_W, candidates: Candidates::Narrow }
    }
}

/// Seeded selection of `limb_count` narrow moduli coprime to every member of `forbidden`.
pub fn build_basis(limb_count: usize, seed: u64, forbidden: &[BigUint]) -> Result<Arc<RnsBasis>> {
    build_basis_with(&BasisSpec { forbidden: forbidden.to_vec(), ..BasisSpec::new(limb_count, seed) })
}

pub fn build_basis_with(spec: &BasisSpec) -> Result<Arc<RnsBasis>> {
    if spec.limb_count == 0 {
        return Err(Error::Construction("limb_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen: Vec<u32> = Vec::with_capacity(spec.limb_count);
    let acceptable = |q: u32, chosen: &[u32]| {
        q >= 3
            && q % 2 == 1
            && (q as u64) < (1u64 << spec.w)
            && chosen.iter().all(|&p| (p as u64).gcd(&(q as u64)) == 1)
            && spec.forbidden.iter().all(|f| (f % q).to_u64().unwrap_or(0).gcd(&(q as u64)) == 1)
    };
    match &spec.candidates {
        Candidates::Pool(pool) => {
            let mut order = pool.clone();
            order.shuffle(&mut rng);
            for q in order {
                if chosen.len() == spec.limb_count {
                    break;
                }
                if acceptable(q, &chosen) {
                    chosen.push(q);
                }
            }
        }
        range => {
            let (lo, hi) = match range {
                Candidates::Wide => (1u64 << 31, 1u64 << 32),
                _ => (1u64 << 30, 1u64 << 31),
            };
            let hi = hi.min(1u64 << spec.w);
            let mut attempts = 0usize;
            while chosen.len() < spec.limb_count && attempts < 1_000_000 && lo < hi {
                attempts += 1;
                let q = (rng.gen_range(lo..hi) | 1) as u32;
                if acceptable(q, &chosen) {
                    chosen.push(q);
                }
            }
        }
    }
    if chosen.len() < spec.limb_count {
        return Err(Error::Construction(format!("found only {} of {} coprime moduli", chosen.len(), spec.limb_count)));
    }
    RnsBasis::new(chosen, spec.w)
}

/// Residues of one integer over a basis.
#[derive(Clone, Debug)]
pub struct RnsVector {
    residues: Vec<u32>,
    basis: Arc<RnsBasis>,
}

impl PartialEq for RnsVector {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis && self.residues == other.residues
    }
}

impl Eq for RnsVector {}

impl RnsVector {
    /// Wraps residues, checking `residues[i] < q_i`.
    pub fn from_residues(basis: &Arc<RnsBasis>, residues: Vec<u32>) -> Result<Self> {
        if residues.len() != basis.len() {
            return Err(Error::Length { expected: basis.len(), got: residues.len() });
        }
        if let Some(i) = residues.iter().zip(&basis.moduli).position(|(r, q)| r >= q) {
            return Err(Error::Domain(format!("residue {i} is not below its modulus")));
        }
        Ok(Self { residues, basis: Arc::clone(basis) })
    }

    pub(crate) fn from_residues_unchecked(basis: &Arc<RnsBasis>, residues: Vec<u32>) -> Self {
        debug_assert!(residues.iter().zip(&basis.moduli).all(|(r, q)| r < q));
        Self { residues, basis: Arc::clone(basis) }
    }

    pub fn zero(basis: &Arc<RnsBasis>) -> Self {
        Self::from_residues_unchecked(basis, vec![0; basis.len()])
    }

    pub fn residues(&self) -> &[u32] {
        &self.residues
    }

    pub fn basis(&self) -> &Arc<RnsBasis> {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.residues.iter().all(|&r| r == 0)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis == other.basis {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// Per-limb modular sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let residues = self
            .residues
            .iter()
            .zip(&other.residues)
            .zip(&self.basis.moduli)
            .map(|((&a, &b), &q)| ((a as u64 + b as u64) % q as u64) as u32)
            .collect();
        Ok(Self::from_residues_unchecked(&self.basis, residues))
    }

    /// Per-limb modular difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let residues = self
            .residues
            .iter()
            .zip(&other.residues)
            .zip(&self.basis.moduli)
            .map(|((&a, &b), &q)| ((a as u64 + q as u64 - b as u64) % q as u64) as u32)
            .collect();
        Ok(Self::from_residues_unchecked(&self.basis, residues))
    }

    /// Per-limb plain modular product (no Montgomery factor).
    pub fn mul_plain(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let residues = self
            .residues
            .iter()
            .zip(&other.residues)
            .zip(&self.basis.moduli)
            .map(|((&a, &b), &q)| ((a as u64 * b as u64) % q as u64) as u32)
            .collect();
        Ok(Self::from_residues_unchecked(&self.basis, residues))
    }
}

/// `residues[i] = x mod q_i` for `0 <= x < Q`.
pub fn to_rns(x: &BigUint, basis: &Arc<RnsBasis>) -> Result<RnsVector> {
    if x >= &basis.product {
        return Err(Error::Domain("value is not below the basis product Q".into()));
    }
    Ok(to_rns_reduced(x, basis))
}

/// Residues of `x mod Q`; no range check.
pub(crate) fn to_rns_reduced(x: &BigUint, basis: &Arc<RnsBasis>) -> RnsVector {
    let residues = basis.moduli.iter().map(|&q| (x % q).to_u32().unwrap_or(0)).collect();
    RnsVector::from_residues_unchecked(basis, residues)
}

/// Exact CRT reconstruction of the unique `x` in `[0, Q)`.
pub fn from_rns(v: &RnsVector) -> BigUint {
    let b = &v.basis;
    let mut acc = BigUint::zero();
    for i in 0..b.len() {
        let t = (v.residues[i] as u64 * b.cofactor_inv[i] as u64) % b.moduli[i] as u64;
        acc += &b.cofactor[i] * t;
    }
    acc % &b.product
}

/// Per-limb Montgomery product `a_i * b_i * 2^-w mod q_i`.
pub fn limb_mont_mul(a: &RnsVector, b: &RnsVector) -> Result<RnsVector> {
    a.check(b)?;
    let basis = &a.basis;
    let residues = (0..basis.len()).map(|i| limb_redc(a.residues[i], b.residues[i], basis, i)).collect();
    Ok(RnsVector::from_residues_unchecked(basis, residues))
}

#[inline]
pub(crate) fn limb_redc(a: u32, b: u32, basis: &RnsBasis, i: usize) -> u32 {
    let w = basis.w;
    let q = basis.moduli[i] as u128;
    let mask = (1u128 << w) - 1;
    let t = a as u128 * b as u128;
    let m = ((t & mask) * basis.ninv[i] as u128) & mask;
    let mut r = (t + m * q) >> w;
    if r >= q {
        r -= q;
    }
    r as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn small() -> Arc<RnsBasis> {
        RnsBasis::new(vec![3, 5, 7], 8).unwrap()
    }

    #[test]
    fn pool_basis_product() {
        let spec = BasisSpec { candidates: Candidates::Pool(vec![3, 5, 7]), w: 8, ..BasisSpec::new(3, 11) };
        let b = build_basis_with(&spec).unwrap();
        assert_eq!(b.product(), &BigUint::from(105u32));
    }

    #[test]
    fn pool_too_small_is_construction_error() {
        let spec = BasisSpec { candidates: Candidates::Pool(vec![3, 9, 5]), w: 8, ..BasisSpec::new(3, 1) };
        assert!(matches!(build_basis_with(&spec), Err(Error::Construction(_))));
    }

    #[test]
    fn seeded_selection_is_deterministic_and_coprime() {
        let beta = (BigUint::one() << 255u32) - 19u32;
        let a = build_basis(18, 42, std::slice::from_ref(&beta)).unwrap();
        let b = build_basis(18, 42, std::slice::from_ref(&beta)).unwrap();
        assert_eq!(a.moduli(), b.moduli());
        for (i, &p) in a.moduli().iter().enumerate() {
            assert!(p % 2 == 1 && ((1 << 30)..(1 << 31)).contains(&p));
            for &q in &a.moduli()[..i] {
                assert_eq!((p as u64).gcd(&(q as u64)), 1);
            }
        }
        assert!(a.coprime_to(&beta));
        assert_ne!(build_basis(18, 43, &[]).unwrap().moduli(), a.moduli());
    }

    #[test]
    fn wide_moduli_are_full_32_bit() {
        let spec = BasisSpec { candidates: Candidates::Wide, ..BasisSpec::new(4, 3) };
        let b = build_basis_with(&spec).unwrap();
        assert!(b.moduli().iter().all(|&q| q >= 1 << 31));
        let x = b.product() - 1u32;
        let v = to_rns(&x, &b).unwrap();
        assert_eq!(from_rns(&v), x);
    }

    #[test]
    fn to_rns_examples() {
        let b = small();
        assert!(to_rns(&BigUint::zero(), &b).unwrap().is_zero());
        assert_eq!(to_rns(&BigUint::from(23u32), &b).unwrap().residues(), &[2, 3, 2]);
        assert_eq!(to_rns(&BigUint::from(104u32), &b).unwrap().residues(), &[2, 4, 6]);
        assert!(matches!(to_rns(&BigUint::from(105u32), &b), Err(Error::Domain(_))));
    }

    #[test]
    fn from_rns_examples() {
        let b = RnsBasis::new(vec![3, 5], 8).unwrap();
        let v = RnsVector::from_residues(&b, vec![1, 1]).unwrap();
        assert_eq!(from_rns(&v), BigUint::one());
        assert!(from_rns(&RnsVector::zero(&b)).is_zero());
        assert!(RnsVector::from_residues(&b, vec![3, 0]).is_err());
    }

    #[test]
    fn limb_mont_mul_by_montgomery_factor_is_identity() {
        let b = small();
        let z = RnsVector::from_residues(&b, b.z_residues().to_vec()).unwrap();
        for x in 0..105u32 {
            let a = to_rns(&BigUint::from(x), &b).unwrap();
            assert_eq!(limb_mont_mul(&a, &z).unwrap(), a);
            assert!(limb_mont_mul(&RnsVector::zero(&b), &a).unwrap().is_zero());
        }
    }

    #[test]
    fn limb_mont_mul_matches_per_limb_division_oracle() {
        let b = small();
        for x in 0..105u32 {
            for y in (0..105u32).step_by(7) {
                let got =
                    limb_mont_mul(&to_rns(&BigUint::from(x), &b).unwrap(), &to_rns(&BigUint::from(y), &b).unwrap())
                        .unwrap();
                for (i, &q) in b.moduli().iter().enumerate() {
                    let zinv = bigint::mod_inverse_u64(256 % q as u64, q as u64).unwrap();
                    let want = ((x % q) as u64 * (y % q) as u64 % q as u64 * zinv) % q as u64;
                    assert_eq!(got.residues()[i] as u64, want);
                }
            }
        }
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let a = RnsVector::zero(&small());
        let b = RnsVector::zero(&RnsBasis::new(vec![3, 5, 11], 8).unwrap());
        assert!(matches!(limb_mont_mul(&a, &b), Err(Error::BasisMismatch)));
    }

    #[test]
    fn rejects_invalid_moduli() {
        assert!(RnsBasis::new(vec![3, 9], 8).is_err());
        assert!(RnsBasis::new(vec![4, 9], 8).is_err());
        assert!(RnsBasis::new(vec![257], 8).is_err());
        assert!(RnsBasis::new(vec![], 8).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        let b = build_basis(5, 9, &[]).unwrap();
        let text = b.dump();
        let back = RnsBasis::parse_dump(&text).unwrap();
        assert_eq!(*back, *b);
        let corrupted = text.replace("limbs 5", "limbs 4");
        assert!(RnsBasis::parse_dump(&corrupted).is_err());
    }
}
