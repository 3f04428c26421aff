//! Forward NTTs over prime fields: the direct DFT, radix-2 butterfly, and the
//! 3-step and 5-step matrix schemes.
//!
//! Every variant takes natural-order input and returns natural-order output.
//!
//! Index algebra. With `N = R*C`, input `n = C*n1 + n2` and output
//! `k = k1 + R*k2`:
//!
//! ```text
//! w^(nk) = (w^C)^(n1*k1) * w^(n2*k1) * (w^R)^(n2*k2)
//! ```
//!
//! so the 3-step transform runs R-point transforms over `n1` (root `w^C`),
//! multiplies by the grid `w^(n2*k1)`, then C-point transforms over `n2`
//! (root `w^R`).
//!
//! The 5-step transform splits the R-point stage again with `R = R1*R2`,
//! `n1 = R2*a + b`, `k1 = c + R1*d`:
//!
//! ```text
//! (w^C)^(n1*k1) = (w^(C*R2))^(a*c) * w^(C*b*c) * (w^(C*R1))^(b*d)
//! ```
//!
//! giving TF matrices of sizes R1, R2 and C with roots `w^(C*R2)`,
//! `w^(C*R1)` and `w^R`, an R2 x R1 grid `w^(C*b*c)` and the R x C grid
//! `w^(k1*n2)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::backend::{FieldBackend, RadixMont};
use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeField};

/// Transform dataflow with its factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NttVariant {
    Butterfly,
    ThreeStep { r: usize, c: usize },
    FiveStep { r1: usize, r2: usize, c: usize },
}

impl NttVariant {
    /// Most balanced 3-step split of `2^log_n`.
    pub fn balanced_three_step(log_n: u32) -> Self {
        let c_bits = log_n.div_ceil(2);
        NttVariant::ThreeStep { r: 1 << (log_n - c_bits), c: 1 << c_bits }
    }

    /// Most balanced 5-step split of `2^log_n`; needs `log_n >= 3`.
    pub fn balanced_five_step(log_n: u32) -> Result<Self> {
        if log_n < 3 {
            return Err(Error::UnsupportedSize {
                n: 1 << log_n,
                reason: "five-step needs three factors above 1".into(),
            });
        }
        let c_bits = log_n.div_ceil(2).min(log_n - 2);
        let r_bits = log_n - c_bits;
        let r1_bits = r_bits / 2;
        Ok(NttVariant::FiveStep { r1: 1 << r1_bits, r2: 1 << (r_bits - r1_bits), c: 1 << c_bits })
    }

    pub fn name(&self) -> &'static str {
        match self {
            NttVariant::Butterfly => "butterfly",
            NttVariant::ThreeStep { .. } => "three-step",
            NttVariant::FiveStep { .. } => "five-step",
        }
    }
}

impl fmt::Display for NttVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NttVariant::Butterfly => f.write_str("butterfly"),
            NttVariant::ThreeStep { r, c } => write!(f, "three-step({r},{c})"),
            NttVariant::FiveStep { r1, r2, c } => write!(f, "five-step({r1},{r2},{c})"),
        }
    }
}

/// `rows x cols` matrix with entry `(i, j) = (w^k)^(i*j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwiddleMatrix {
    rows: usize,
    cols: usize,
    exponent: u64,
    entries: Vec<FieldElement>,
}

impl TwiddleMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }
}

/// Smallest-generator primitive `n`-th root of unity.
///
/// Tries `g = 2, 3, ...` and keeps `r = g^((beta-1)/n)` once `r` has exact order `n`.
pub fn find_root(field: &Arc<PrimeField>, n: usize) -> Result<FieldElement> {
    let beta = field.beta();
    let order = beta - 1u32;
    if n == 0 || !(&order % n).is_zero() {
        return Err(Error::UnsupportedSize { n, reason: format!("{n} does not divide beta - 1 of {}", field.name()) });
    }
    let cofactor = &order / n;
    let primes = prime_factors(n);
    let mut g = BigUint::from(2u32);
    while &g < beta {
        let r = FieldElement::from_biguint(field, &g).pow(&cofactor);
        if primes.iter().all(|&p| !r.pow_u64((n / p) as u64).to_biguint().is_one()) {
            return Ok(r);
        }
        g += 1u32;
    }
    // only beta = 2 reaches here, where n = 1 and the root is 1
    Ok(FieldElement::one(field))
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Transform size, root of unity, dataflow and cached twiddles.
pub struct NttPlan {
    field: Arc<PrimeField>,
    n: usize,
    log_n: u32,
    omega: FieldElement,
    variant: NttVariant,
    /// `w^i` for `i < n`.
    powers: Vec<FieldElement>,
    twiddles: Mutex<HashMap<(u64, usize, usize), Arc<TwiddleMatrix>>>,
}

impl fmt::Debug for NttPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NttPlan")
            .field("field", &self.field.name())
            .field("n", &self.n)
            .field("variant", &self.variant)
            .finish()
    }
}

impl NttPlan {
    pub fn new(field: &Arc<PrimeField>, n: usize, variant: NttVariant) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::UnsupportedSize { n, reason: "size must be a power of two".into() });
        }
        let log_n = n.trailing_zeros();
        if log_n > field.two_adicity() {
            return Err(Error::UnsupportedSize {
                n,
                reason: format!("{} has 2-adicity {}", field.name(), field.two_adicity()),
            });
        }
        check_factors(n, variant)?;
        let omega = find_root(field, n)?;
        if n >= 2 {
            let half = omega.pow_u64((n / 2) as u64);
            if half.neg().to_biguint() != BigUint::one() {
                return Err(Error::Construction("root is not primitive".into()));
            }
        }
        let powers = powers_of(field, &omega, n);
        Ok(Self { field: Arc::clone(field), n, log_n, omega, variant, powers, twiddles: Mutex::new(HashMap::new()) })
    }

    /// Plan with the most balanced factors for `variant_name`
    /// (`butterfly`, `three-step`, `five-step`).
    pub fn balanced(field: &Arc<PrimeField>, n: usize, variant_name: &str) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::UnsupportedSize { n, reason: "size must be a power of two".into() });
        }
        let log_n = n.trailing_zeros();
        let variant = match variant_name {
            "butterfly" => NttVariant::Butterfly,
            "three-step" => NttVariant::balanced_three_step(log_n),
            "five-step" => NttVariant::balanced_five_step(log_n)?,
            other => return Err(Error::Config(format!("unknown NTT variant {other:?}"))),
        };
        Self::new(field, n, variant)
    }

    pub fn field(&self) -> &Arc<PrimeField> {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_n(&self) -> u32 {
        self.log_n
    }

    pub fn omega(&self) -> &FieldElement {
        &self.omega
    }

    pub fn variant(&self) -> NttVariant {
        self.variant
    }

    /// `w^e` for any exponent.
    pub fn omega_pow(&self, e: u64) -> &FieldElement {
        &self.powers[(e % self.n as u64) as usize]
    }

    /// Same size and root, different dataflow.
    pub fn with_variant(&self, variant: NttVariant) -> Result<Self> {
        check_factors(self.n, variant)?;
        Ok(Self {
            field: Arc::clone(&self.field),
            n: self.n,
            log_n: self.log_n,
            omega: self.omega.clone(),
            variant,
            powers: self.powers.clone(),
            twiddles: Mutex::new(HashMap::new()),
        })
    }

    /// `rows x cols` matrix of `(w^k)^(i*j)`, built once per plan.
    pub fn gen_twiddle(&self, k: u64, rows: usize, cols: usize) -> Arc<TwiddleMatrix> {
        let key = (k % self.n as u64, rows, cols);
        let mut cache = self.twiddles.lock().expect("twiddle cache poisoned");
        Arc::clone(cache.entry(key).or_insert_with(|| {
            let n = self.n as u64;
            let mut entries = Vec::with_capacity(rows * cols);
            for i in 0..rows as u64 {
                for j in 0..cols as u64 {
                    let e = (key.0 * (i % n) % n) * (j % n) % n;
                    entries.push(self.powers[e as usize].clone());
                }
            }
            Arc::new(TwiddleMatrix { rows, cols, exponent: key.0, entries })
        }))
    }
}

fn check_factors(n: usize, variant: NttVariant) -> Result<()> {
    let bad = |reason: String| Err(Error::UnsupportedSize { n, reason });
    match variant {
        NttVariant::Butterfly => Ok(()),
        NttVariant::ThreeStep { r, c } => {
            if r == 0 || c == 0 || r.checked_mul(c) != Some(n) {
                return bad(format!("factors ({r},{c}) do not multiply to {n}"));
            }
            Ok(())
        }
        NttVariant::FiveStep { r1, r2, c } => {
            if r1 < 2 || r2 < 2 || c < 2 {
                return bad(format!("five-step factors ({r1},{r2},{c}) must all exceed 1"));
            }
            if r1.checked_mul(r2).and_then(|r| r.checked_mul(c)) != Some(n) {
                return bad(format!("factors ({r1},{r2},{c}) do not multiply to {n}"));
            }
            Ok(())
        }
    }
}

fn powers_of(field: &Arc<PrimeField>, omega: &FieldElement, n: usize) -> Vec<FieldElement> {
    let b = RadixMont::new(field);
    let w = b.from_canonical(omega);
    let mut acc = b.one();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(b.to_canonical(&acc));
        acc = b.mul(&acc, &w);
    }
    out
}

/// Work that does not pass through the field backend.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NttTrace {
    /// Elements moved by transposes, bit reversal and output scatter.
    pub moves: u64,
}

fn check_input<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<()> {
    if !backend.field().same(&plan.field) {
        return Err(Error::FieldMismatch);
    }
    if x.len() != plan.n {
        return Err(Error::Length { expected: plan.n, got: x.len() });
    }
    Ok(())
}

fn backend_powers<B: FieldBackend>(backend: &B, plan: &NttPlan) -> Vec<B::Elem> {
    plan.powers.par_iter().map(|p| backend.from_canonical(p)).collect()
}

/// Square TF matrix `(w^step)^(i*j)` of size `m`, in backend form.
fn tf_matrix<E: Clone>(pw: &[E], n: usize, step: usize, m: usize) -> Vec<E> {
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            out.push(pw[step * i % n * j % n].clone());
        }
    }
    out
}

/// Each length-`m` row of `data` times the `m x m` matrix `tf`.
fn transform_rows<B: FieldBackend>(backend: &B, data: &[B::Elem], tf: &[B::Elem], m: usize) -> Vec<B::Elem> {
    let mut out = vec![backend.zero(); data.len()];
    out.par_chunks_mut(m).zip(data.par_chunks(m)).for_each(|(dst, row)| {
        for (k, d) in dst.iter_mut().enumerate() {
            *d = backend.dot(&tf[k * m..(k + 1) * m], row);
        }
    });
    out
}

fn transpose<E: Clone + Send + Sync>(src: &[E], rows: usize, cols: usize, moves: &mut u64) -> Vec<E> {
    *moves += src.len() as u64;
    (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / rows, idx % rows);
            src[i * cols + j].clone()
        })
        .collect()
}

/// Multiplies `data[idx]` by `pw[exp(idx) mod n]`.
fn apply_grid<B: FieldBackend>(backend: &B, data: &mut [B::Elem], pw: &[B::Elem], exp: impl Fn(usize) -> usize + Sync) {
    let n = pw.len();
    data.par_iter_mut().enumerate().for_each(|(idx, v)| {
        *v = backend.mul(v, &pw[exp(idx) % n]);
    });
}

/// `X_k = sum_n x_n w^(kn)`: exactly `N^2` multiplications.
pub fn ntt_direct<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<Vec<B::Elem>> {
    check_input(backend, plan, x)?;
    let n = plan.n;
    let pw = backend_powers(backend, plan);
    Ok((0..n)
        .into_par_iter()
        .map(|k| {
            let row: Vec<B::Elem> = (0..n).map(|j| pw[k * j % n].clone()).collect();
            backend.dot(&row, x)
        })
        .collect())
}

/// Iterative radix-2 decimation in time: `(N/2) log2 N` multiplications,
/// one per butterfly including the trivial twiddles.
pub fn ntt_butterfly<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<Vec<B::Elem>> {
    ntt_butterfly_traced(backend, plan, x).map(|(y, _)| y)
}

fn ntt_butterfly_traced<B: FieldBackend>(
    backend: &B,
    plan: &NttPlan,
    x: &[B::Elem],
) -> Result<(Vec<B::Elem>, NttTrace)> {
    check_input(backend, plan, x)?;
    let n = plan.n;
    let bits = plan.log_n;
    let mut a: Vec<B::Elem> = (0..n)
        .map(|i| {
            let j = if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) };
            x[j].clone()
        })
        .collect();
    let trace = NttTrace { moves: n as u64 };
    let pw = backend_powers(backend, plan);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        let tw: Vec<B::Elem> = (0..half).map(|j| pw[j * stride].clone()).collect();
        a.par_chunks_mut(len).for_each(|block| {
            let (lo, hi) = block.split_at_mut(half);
            for j in 0..half {
                let v = backend.mul(&hi[j], &tw[j]);
                let u = lo[j].clone();
                lo[j] = backend.add(&u, &v);
                hi[j] = backend.sub(&u, &v);
            }
        });
        len <<= 1;
    }
    Ok((a, trace))
}

/// 3-step matrix NTT with `N = R*C`: `N*(R + C)` matmul multiplications plus
/// `N` twiddle-grid multiplications.
pub fn ntt_3step<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<Vec<B::Elem>> {
    ntt_3step_traced(backend, plan, x).map(|(y, _)| y)
}

fn ntt_3step_traced<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<(Vec<B::Elem>, NttTrace)> {
    check_input(backend, plan, x)?;
    let NttVariant::ThreeStep { r, c } = plan.variant else {
        return Err(Error::Config(format!("plan variant {} is not three-step", plan.variant)));
    };
    let n = plan.n;
    let pw = backend_powers(backend, plan);
    let mut moves = 0;

    // x as R x C (n1, n2); columns become rows
    let cols = transpose(x, r, c, &mut moves);
    let mut y = transform_rows(backend, &cols, &tf_matrix(&pw, n, c, r), r);
    // y is C x R (n2, k1)
    apply_grid(backend, &mut y, &pw, |idx| (idx / r) * (idx % r));
    let rows = transpose(&y, c, r, &mut moves);
    // rows is R x C (k1, n2) -> (k1, k2); output index k1 + R*k2 is column-major
    let z = transform_rows(backend, &rows, &tf_matrix(&pw, n, r, c), c);
    let out = transpose(&z, r, c, &mut moves);
    Ok((out, NttTrace { moves }))
}

/// 5-step matrix NTT with `N = R1*R2*C`: `N*(R1 + R2 + C)` matmul
/// multiplications plus `2N` twiddle-grid multiplications.
pub fn ntt_5step<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<Vec<B::Elem>> {
    ntt_5step_traced(backend, plan, x).map(|(y, _)| y)
}

fn ntt_5step_traced<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<(Vec<B::Elem>, NttTrace)> {
    check_input(backend, plan, x)?;
    let NttVariant::FiveStep { r1, r2, c } = plan.variant else {
        return Err(Error::Config(format!("plan variant {} is not five-step", plan.variant)));
    };
    let n = plan.n;
    let r = r1 * r2;
    let pw = backend_powers(backend, plan);
    let mut moves = 0;

    // x as (a, b, n2); transform over a
    let t = transpose(x, r1, r2 * c, &mut moves);
    let mut t = transform_rows(backend, &t, &tf_matrix(&pw, n, c * r2, r1), r1);
    // t is (b, n2, c)
    apply_grid(backend, &mut t, &pw, |idx| {
        let b = idx / (c * r1);
        let cc = idx % r1;
        c * b * cc
    });
    // transform over b
    let t = transpose(&t, r2, c * r1, &mut moves);
    let mut t = transform_rows(backend, &t, &tf_matrix(&pw, n, c * r1, r2), r2);
    // t is (n2, c, d) with k1 = c + R1*d
    apply_grid(backend, &mut t, &pw, |idx| {
        let n2 = idx / r;
        let rest = idx % r;
        let k1 = rest / r2 + r1 * (rest % r2);
        k1 * n2
    });
    // transform over n2
    let t = transpose(&t, c, r, &mut moves);
    let z = transform_rows(backend, &t, &tf_matrix(&pw, n, r, c), c);
    // z is (c, d, k2); scatter to k = c + R1*d + R*k2
    moves += n as u64;
    let mut out = vec![backend.zero(); n];
    for (idx, v) in z.into_iter().enumerate() {
        let k2 = idx % c;
        let rest = idx / c;
        let (cc, d) = (rest / r2, rest % r2);
        out[cc + r1 * d + r * k2] = v;
    }
    Ok((out, NttTrace { moves }))
}

/// Runs the plan's variant.
pub fn ntt<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<Vec<B::Elem>> {
    ntt_traced(backend, plan, x).map(|(y, _)| y)
}

/// Runs the plan's variant and reports element moves.
pub fn ntt_traced<B: FieldBackend>(backend: &B, plan: &NttPlan, x: &[B::Elem]) -> Result<(Vec<B::Elem>, NttTrace)> {
    match plan.variant {
        NttVariant::Butterfly => ntt_butterfly_traced(backend, plan, x),
        NttVariant::ThreeStep { .. } => ntt_3step_traced(backend, plan, x),
        NttVariant::FiveStep { .. } => ntt_5step_traced(backend, plan, x),
    }
}

/// Every `(R, C)` split of `2^log_n`, including the degenerate ones.
pub fn three_step_splits(log_n: u32) -> Vec<NttVariant> {
    (0..=log_n).map(|rb| NttVariant::ThreeStep { r: 1 << rb, c: 1 << (log_n - rb) }).collect()
}

/// Every `(R1, R2, C)` split of `2^log_n` with all factors above 1.
pub fn five_step_splits(log_n: u32) -> Vec<NttVariant> {
    let mut out = Vec::new();
    for a in 1..log_n {
        for b in 1..log_n.saturating_sub(a) {
            let cb = log_n - a - b;
            if cb >= 1 {
                out.push(NttVariant::FiveStep { r1: 1 << a, r2: 1 << b, c: 1 << cb });
            }
        }
    }
    out
}

/// Cyclic convolution by the quadratic definition.
pub fn cyclic_convolution<B: FieldBackend>(backend: &B, x: &[B::Elem], y: &[B::Elem]) -> Vec<B::Elem> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let rev: Vec<B::Elem> = (0..n).map(|j| y[(k + n - j) % n].clone()).collect();
            backend.dot(x, &rev)
        })
        .collect()
}

/// `gcd(n, beta - 1) == n`, i.e. a size-`n` transform exists.
pub fn supports_size(field: &PrimeField, n: usize) -> bool {
    n > 0 && (field.beta() - 1u32).gcd(&BigUint::from(n)) == BigUint::from(n)
}

/// Hex lines, one element per line.
pub fn format_vector(x: &[FieldElement]) -> String {
    x.iter().map(|v| v.to_hex() + "\n").collect()
}

pub fn parse_vector(field: &Arc<PrimeField>, text: &str) -> Result<Vec<FieldElement>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| FieldElement::from_hex(field, l).map_err(|e| Error::Parse(format!("element {i}: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::WordField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(p: u64) -> Arc<PrimeField> {
        PrimeField::from_u64(format!("f{p}"), p).unwrap()
    }

    #[test]
    fn find_root_small_fields() {
        let f5 = field(5);
        let r = find_root(&f5, 4).unwrap().to_biguint();
        assert!(r == BigUint::from(2u32) || r == BigUint::from(3u32));
        let f17 = field(17);
        let r = find_root(&f17, 8).unwrap();
        assert!(r.pow_u64(8).to_biguint().is_one());
        assert_eq!(r.pow_u64(4).to_biguint(), BigUint::from(16u32));
        assert!(matches!(find_root(&f17, 32), Err(Error::UnsupportedSize { .. })));
        assert!(matches!(find_root(&f17, 3), Err(Error::UnsupportedSize { .. })));
        assert!(find_root(&f17, 1).unwrap().to_biguint().is_one());
    }

    #[test]
    fn direct_small_example() {
        let f = field(5);
        let plan = NttPlan::new(&f, 4, NttVariant::Butterfly).unwrap();
        assert_eq!(plan.omega().to_biguint(), BigUint::from(2u32));
        let b = WordField::new(&f).unwrap();
        assert_eq!(ntt_direct(&b, &plan, &[0, 1, 0, 0]).unwrap(), vec![1, 2, 4, 3]);
    }

    #[test]
    fn delta_and_all_ones() {
        let f = field(17);
        let b = WordField::new(&f).unwrap();
        for variant in [
            NttVariant::Butterfly,
            NttVariant::ThreeStep { r: 4, c: 4 },
            NttVariant::ThreeStep { r: 2, c: 8 },
            NttVariant::FiveStep { r1: 2, r2: 2, c: 4 },
        ] {
            let plan = NttPlan::new(&f, 16, variant).unwrap();
            let mut delta = vec![0; 16];
            delta[0] = 1;
            assert_eq!(ntt(&b, &plan, &delta).unwrap(), vec![1; 16], "{variant}");
            let mut want = vec![0; 16];
            want[0] = 16;
            assert_eq!(ntt(&b, &plan, &[1; 16]).unwrap(), want, "{variant}");
        }
    }

    #[test]
    fn variants_match_direct_on_16() {
        let f = field(17);
        let b = WordField::new(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<u64> = (0..16).map(|_| rng.gen_range(0..17)).collect();
        let base = NttPlan::new(&f, 16, NttVariant::Butterfly).unwrap();
        let want = ntt_direct(&b, &base, &x).unwrap();
        assert_eq!(ntt(&b, &base, &x).unwrap(), want);
        for v in three_step_splits(4).into_iter().chain(five_step_splits(4)) {
            let plan = base.with_variant(v).unwrap();
            assert_eq!(ntt(&b, &plan, &x).unwrap(), want, "{v}");
        }
    }

    #[test]
    fn twiddle_matrix_shape_and_cache() {
        let f = field(17);
        let plan = NttPlan::new(&f, 16, NttVariant::Butterfly).unwrap();
        let m = plan.gen_twiddle(4, 4, 4);
        for i in 0..4 {
            assert!(m.get(0, i).to_biguint().is_one());
            assert!(m.get(i, 0).to_biguint().is_one());
        }
        assert_eq!(m.get(2, 3), &plan.omega().pow_u64(24));
        assert!(Arc::ptr_eq(&m, &plan.gen_twiddle(4, 4, 4)));
    }

    #[test]
    fn bad_plans_are_rejected() {
        let f = field(17);
        assert!(NttPlan::new(&f, 12, NttVariant::Butterfly).is_err());
        assert!(NttPlan::new(&f, 32, NttVariant::Butterfly).is_err());
        assert!(NttPlan::new(&f, 16, NttVariant::ThreeStep { r: 2, c: 4 }).is_err());
        assert!(NttPlan::new(&f, 16, NttVariant::FiveStep { r1: 1, r2: 4, c: 4 }).is_err());
        assert!(NttVariant::balanced_five_step(2).is_err());
        let b = WordField::new(&f).unwrap();
        let plan = NttPlan::new(&f, 16, NttVariant::Butterfly).unwrap();
        assert!(matches!(ntt(&b, &plan, &[0; 8]), Err(Error::Length { .. })));
    }

    #[test]
    fn split_enumeration() {
        assert_eq!(three_step_splits(10).len(), 11);
        assert_eq!(five_step_splits(10).len(), 36);
        assert_eq!(NttVariant::balanced_five_step(3).unwrap(), NttVariant::FiveStep { r1: 2, r2: 2, c: 2 });
        assert_eq!(NttVariant::balanced_three_step(5), NttVariant::ThreeStep { r: 4, c: 8 });
    }

    #[test]
    fn vector_text_round_trip() {
        let f = field(7681);
        let xs: Vec<FieldElement> = (0..5).map(|i| FieldElement::from_u64(&f, i * 1000)).collect();
        assert_eq!(parse_vector(&f, &format_vector(&xs)).unwrap(), xs);
        assert!(parse_vector(&f, "zz\n").is_err());
    }
}
