//! Pluggable field arithmetic for curve and transform code.
//!
//! [`RadixMont`] keeps elements as radix-2^32 Montgomery digits; [`RnsLazy`]
//! keeps them as lazily bounded RNS vectors reduced by the byte matmul.
//! [`Counted`] wraps either and tallies the work done.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::field::{self, FieldElement, PrimeField};
use crate::lazy::LazyTables;
use crate::rns::{self, RnsVector};

/// Field arithmetic as seen by curve and NTT kernels.
pub trait FieldBackend: Send + Sync {
    type Elem: Clone + Send + Sync + fmt::Debug;

    fn name(&self) -> &'static str;
    fn field(&self) -> &Arc<PrimeField>;
    fn from_canonical(&self, x: &FieldElement) -> Self::Elem;
    fn to_canonical(&self, a: &Self::Elem) -> FieldElement;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    /// `sum_i a_i * b_i`. Backends may defer reduction to the end.
    fn dot(&self, a: &[Self::Elem], b: &[Self::Elem]) -> Self::Elem {
        let mut acc = self.zero();
        for (x, y) in a.iter().zip(b) {
            acc = self.add(&acc, &self.mul(x, y));
        }
        acc
    }

    fn from_u64(&self, x: u64) -> Self::Elem {
        self.from_canonical(&FieldElement::from_u64(self.field(), x))
    }

    fn from_biguint(&self, x: &BigUint) -> Self::Elem {
        self.from_canonical(&FieldElement::from_biguint(self.field(), x))
    }

    fn eq(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.to_canonical(a) == self.to_canonical(b)
    }

    fn is_zero(&self, a: &Self::Elem) -> bool {
        self.to_canonical(a).is_zero()
    }

    /// Byte-matmul multiply-accumulates spent per `mul`.
    fn macs_per_mul(&self) -> u64 {
        0
    }

    /// 32-bit digit products spent per `mul`.
    fn digit_mults_per_mul(&self) -> u64 {
        0
    }
}

/// Which backend a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendKind {
    RadixMont,
    RnsLazy,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::RadixMont => "radix-mont",
            BackendKind::RnsLazy => "rns-lazy",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Radix-2^32 Montgomery digits; every operation returns a canonical value.
#[derive(Clone, Debug)]
pub struct RadixMont {
    field: Arc<PrimeField>,
    one: FieldElement,
}

impl RadixMont {
    pub fn new(field: &Arc<PrimeField>) -> Self {
        Self { field: Arc::clone(field), one: FieldElement::one(field).to_montgomery() }
    }
}

impl FieldBackend for RadixMont {
    type Elem = FieldElement;

    fn name(&self) -> &'static str {
        "radix-mont"
    }

    fn field(&self) -> &Arc<PrimeField> {
        &self.field
    }

    fn from_canonical(&self, x: &FieldElement) -> FieldElement {
        x.to_montgomery()
    }

    fn to_canonical(&self, a: &FieldElement) -> FieldElement {
        a.from_montgomery()
    }

    fn zero(&self) -> FieldElement {
        FieldElement::zero(&self.field)
    }

    fn one(&self) -> FieldElement {
        self.one.clone()
    }

    fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        field::add_mod(a, b).expect("backend elements share a field")
    }

    fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        field::sub_mod(a, b).expect("backend elements share a field")
    }

    fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        field::mont_mul_radix(a, b).expect("backend elements share a field")
    }

    fn eq(&self, a: &FieldElement, b: &FieldElement) -> bool {
        a == b
    }

    fn is_zero(&self, a: &FieldElement) -> bool {
        a.is_zero()
    }

    fn digit_mults_per_mul(&self) -> u64 {
        // d^2 for the product plus d^2 + d for word-by-word reduction
        let d = self.field.digit_count() as u64;
        2 * d * d + d
    }
}

/// Canonical `u64` residues for moduli below 2^32; the fast path for transform sweeps.
#[derive(Clone, Debug)]
pub struct WordField {
    field: Arc<PrimeField>,
    p: u64,
}

impl WordField {
    pub fn new(field: &Arc<PrimeField>) -> Result<Self> {
        let p = field
            .beta()
            .to_u32()
            .ok_or_else(|| Error::Domain(format!("{} does not fit one 32-bit word", field.name())))?;
        Ok(Self { field: Arc::clone(field), p: p as u64 })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }
}

impl FieldBackend for WordField {
    type Elem = u64;

    fn name(&self) -> &'static str {
        "word"
    }

    fn field(&self) -> &Arc<PrimeField> {
        &self.field
    }

    fn from_canonical(&self, x: &FieldElement) -> u64 {
        x.digits().first().copied().unwrap_or(0) as u64
    }

    fn to_canonical(&self, a: &u64) -> FieldElement {
        FieldElement::from_u64(&self.field, *a)
    }

    fn zero(&self) -> u64 {
        0
    }

    fn one(&self) -> u64 {
        1 % self.p
    }

    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.p
    }

    fn dot(&self, a: &[u64], b: &[u64]) -> u64 {
        // products are below 2^64, so 2^64 of them fit a u128
        let acc: u128 = a.iter().zip(b).map(|(&x, &y)| (x * y) as u128).sum();
        (acc % self.p as u128) as u64
    }

    fn eq(&self, a: &u64, b: &u64) -> bool {
        a == b
    }

    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }

    fn digit_mults_per_mul(&self) -> u64 {
        1
    }
}

/// RNS element with a tracked bound: the carried integer is below `bound * beta`.
#[derive(Clone, Debug)]
pub struct LazyElem {
    residues: Vec<u32>,
    bound: u64,
}

impl LazyElem {
    pub fn residues(&self) -> &[u32] {
        &self.residues
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }
}

/// Byte-matmul lazy reduction over an enlarged RNS basis (P = Q).
#[derive(Clone, Debug)]
pub struct RnsLazy {
    tables: Arc<LazyTables>,
    /// Largest `bound_a * bound_b` whose product stays in the exact range.
    max_bound_product: u128,
    /// Largest bound a sum may carry while still below Q.
    max_bound: u64,
    one: LazyElem,
}

impl RnsLazy {
    pub fn new(tables: Arc<LazyTables>) -> Self {
        assert!(
            Arc::ptr_eq(tables.basis_q(), tables.basis_p()) || tables.basis_q() == tables.basis_p(),
            "the lazy backend needs P = Q"
        );
        let beta = tables.field().beta();
        let sat = |x: BigUint| x.to_u128().unwrap_or(u128::MAX);
        let max_bound_product = sat(tables.exact_limit() / (beta * beta));
        let max_bound = sat(tables.basis_q().product() / beta).min(u64::MAX as u128) as u64;
        let one_vec = tables.encode(&BigUint::from(1u32));
        Self { one: LazyElem { residues: one_vec.residues().to_vec(), bound: 1 }, tables, max_bound_product, max_bound }
    }

    /// Tables sized for `field` from a seeded basis.
    pub fn for_field(field: &Arc<PrimeField>, seed: u64) -> Result<Self> {
        Ok(Self::new(Arc::new(LazyTables::for_field(field, seed)?)))
    }

    pub fn tables(&self) -> &Arc<LazyTables> {
        &self.tables
    }

    /// Bound carried by any fresh `mul` output.
    pub fn mul_output_bound(&self) -> u64 {
        self.tables.slack_bound() + 1
    }

    fn vector(&self, a: &LazyElem) -> RnsVector {
        RnsVector::from_residues(self.tables.basis_q(), a.residues.clone()).expect("valid residues")
    }

    /// Exact re-encoding with bound 1.
    pub fn canonicalize(&self, a: &LazyElem) -> LazyElem {
        let c = self.to_canonical(a);
        self.from_canonical(&c)
    }

    fn limb_count(&self) -> usize {
        self.tables.basis_q().len()
    }

    fn add_raw(&self, a: &LazyElem, b: &LazyElem, bound: u64) -> LazyElem {
        let residues = a
            .residues
            .iter()
            .zip(&b.residues)
            .zip(self.tables.basis_q().moduli())
            .map(|((&x, &y), &q)| {
                let s = x as u64 + y as u64;
                (if s >= q as u64 { s - q as u64 } else { s }) as u32
            })
            .collect();
        LazyElem { residues, bound }
    }
}

impl FieldBackend for RnsLazy {
    type Elem = LazyElem;

    fn name(&self) -> &'static str {
        "rns-lazy"
    }

    fn field(&self) -> &Arc<PrimeField> {
        self.tables.field()
    }

    fn from_canonical(&self, x: &FieldElement) -> LazyElem {
        let v = self.tables.encode_element(x);
        LazyElem { residues: v.residues().to_vec(), bound: 1 }
    }

    fn to_canonical(&self, a: &LazyElem) -> FieldElement {
        self.tables.normalize_to_canonical(&self.vector(a)).expect("basis matches tables")
    }

    fn zero(&self) -> LazyElem {
        LazyElem { residues: vec![0; self.limb_count()], bound: 1 }
    }

    fn one(&self) -> LazyElem {
        self.one.clone()
    }

    fn add(&self, a: &LazyElem, b: &LazyElem) -> LazyElem {
        let bound = a.bound + b.bound;
        if bound > self.max_bound {
            let (a, b) = (self.canonicalize(a), self.canonicalize(b));
            return self.add_raw(&a, &b, 2);
        }
        self.add_raw(a, b, bound)
    }

    fn sub(&self, a: &LazyElem, b: &LazyElem) -> LazyElem {
        // a + bound_b * beta - b stays non-negative
        if a.bound + 2 * b.bound > self.max_bound {
            let (a, b) = (self.canonicalize(a), self.canonicalize(b));
            return self.sub(&a, &b);
        }
        let shift = b.bound;
        let residues = a
            .residues
            .iter()
            .zip(&b.residues)
            .zip(self.tables.basis_q().moduli())
            .zip(self.tables.beta_enc())
            .map(|(((&x, &y), &q), &be)| {
                let q = q as u64;
                let offset = (shift % q) * be as u64 % q;
                ((x as u64 + offset + q - y as u64) % q) as u32
            })
            .collect();
        LazyElem { residues, bound: a.bound + b.bound }
    }

    fn mul(&self, a: &LazyElem, b: &LazyElem) -> LazyElem {
        if (a.bound as u128) * (b.bound as u128) > self.max_bound_product {
            let (a2, b2) =
                if a.bound >= b.bound { (self.canonicalize(a), b.clone()) } else { (a.clone(), self.canonicalize(b)) };
            if (a2.bound as u128) * (b2.bound as u128) > self.max_bound_product {
                return self.mul(&self.canonicalize(&a2), &self.canonicalize(&b2));
            }
            return self.mul(&a2, &b2);
        }
        let basis = self.tables.basis_q();
        let n = basis.len();
        let mut prod = vec![0u32; n];
        for (i, p) in prod.iter_mut().enumerate() {
            *p = rns::limb_redc(a.residues[i], b.residues[i], basis, i);
        }
        let mut out = vec![0u32; n];
        let mut scratch = vec![0u32; self.tables.e().cols()];
        self.tables.reduce_words(&prod, &mut out, &mut scratch);
        LazyElem { residues: out, bound: self.mul_output_bound() }
    }

    /// Accumulates limb products per limb and reduces once when the bound allows.
    fn dot(&self, a: &[LazyElem], b: &[LazyElem]) -> LazyElem {
        let total: u128 =
            a.iter().zip(b).map(|(x, y)| x.bound as u128 * y.bound as u128).fold(0u128, |s, t| s.saturating_add(t));
        if total > self.max_bound_product {
            let mut acc = self.zero();
            for (x, y) in a.iter().zip(b) {
                acc = self.add(&acc, &self.mul(x, y));
            }
            return acc;
        }
        let basis = self.tables.basis_q();
        let n = basis.len();
        let mut acc = vec![0u64; n];
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            for i in 0..n {
                acc[i] += rns::limb_redc(x.residues[i], y.residues[i], basis, i) as u64;
            }
            if k % (1 << 30) == (1 << 30) - 1 {
                for (s, &q) in acc.iter_mut().zip(basis.moduli()) {
                    *s %= q as u64;
                }
            }
        }
        let prod: Vec<u32> = acc.iter().zip(basis.moduli()).map(|(&s, &q)| (s % q as u64) as u32).collect();
        let mut out = vec![0u32; n];
        let mut scratch = vec![0u32; self.tables.e().cols()];
        self.tables.reduce_words(&prod, &mut out, &mut scratch);
        LazyElem { residues: out, bound: self.mul_output_bound() }
    }

    fn macs_per_mul(&self) -> u64 {
        self.tables.matmul_macs()
    }
}

/// Operation tallies collected by [`Counted`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub field_muls: u64,
    pub field_adds: u64,
    pub matmul_macs: u64,
    pub digit_mults: u64,
}

/// Wraps a backend and counts the operations that pass through it.
#[derive(Debug)]
pub struct Counted<B> {
    inner: B,
    muls: AtomicU64,
    adds: AtomicU64,
}

impl<B: FieldBackend> Counted<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, muls: AtomicU64::new(0), adds: AtomicU64::new(0) }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn counts(&self) -> OpCounts {
        let muls = self.muls.load(Ordering::Relaxed);
        OpCounts {
            field_muls: muls,
            field_adds: self.adds.load(Ordering::Relaxed),
            matmul_macs: muls * self.inner.macs_per_mul(),
            digit_mults: muls * self.inner.digit_mults_per_mul(),
        }
    }

    pub fn reset(&self) {
        self.muls.store(0, Ordering::Relaxed);
        self.adds.store(0, Ordering::Relaxed);
    }
}

impl<B: FieldBackend> FieldBackend for Counted<B> {
    type Elem = B::Elem;

    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn field(&self) -> &Arc<PrimeField> {
        self.inner.field()
    }

    fn from_canonical(&self, x: &FieldElement) -> B::Elem {
        self.inner.from_canonical(x)
    }

    fn to_canonical(&self, a: &B::Elem) -> FieldElement {
        self.inner.to_canonical(a)
    }

    fn zero(&self) -> B::Elem {
        self.inner.zero()
    }

    fn one(&self) -> B::Elem {
        self.inner.one()
    }

    fn add(&self, a: &B::Elem, b: &B::Elem) -> B::Elem {
        self.adds.fetch_add(1, Ordering::Relaxed);
        self.inner.add(a, b)
    }

    fn sub(&self, a: &B::Elem, b: &B::Elem) -> B::Elem {
        self.adds.fetch_add(1, Ordering::Relaxed);
        self.inner.sub(a, b)
    }

    fn mul(&self, a: &B::Elem, b: &B::Elem) -> B::Elem {
        self.muls.fetch_add(1, Ordering::Relaxed);
        self.inner.mul(a, b)
    }

    fn dot(&self, a: &[B::Elem], b: &[B::Elem]) -> B::Elem {
        let n = a.len().min(b.len()) as u64;
        self.muls.fetch_add(n, Ordering::Relaxed);
        self.adds.fetch_add(n.saturating_sub(1), Ordering::Relaxed);
        self.inner.dot(a, b)
    }

    fn eq(&self, a: &B::Elem, b: &B::Elem) -> bool {
        self.inner.eq(a, b)
    }

    fn is_zero(&self, a: &B::Elem) -> bool {
        self.inner.is_zero(a)
    }

    fn macs_per_mul(&self) -> u64 {
        self.inner.macs_per_mul()
    }

    fn digit_mults_per_mul(&self) -> u64 {
        self.inner.digit_mults_per_mul()
    }
}
