//! Byte-matmul RNS lazy reduction.
//!
//! A field value `a` is carried over the basis Q in Montgomery form, i.e. as
//! the residues of `z * a mod Q` with `z = 2^w`. After a per-limb Montgomery
//! product the limbs hold `x = z * a * b mod Q`, and one reduction
//!
//! 1. estimates the CRT overflow `k = floor(sum x_i f_i / 2^u)`,
//! 2. multiplies the byte-decomposed residues by the table `E` (u8 x u8 -> u32),
//! 3. merges the byte columns per output limb and adds `k * g_j`,
//!
//! which lands on `z * A mod p_j` for some `A = (a * b mod beta) + m * beta`
//! with `0 <= m <= slack_bound`. No carries cross limb boundaries.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bigint;
use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeField};
use crate::rns::{self, RnsBasis, RnsVector};

/// Bytes per input residue.
pub const N_B: usize = 4;
/// Bytes per output residue.
pub const N_H: usize = 4;

/// Dense row-major matrix of bytes with u32 inner-product accumulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ByteMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl ByteMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Length { expected: rows * cols, got: data.len() });
        }
        if !Self::fits_accumulator(rows) {
            return Err(Error::Construction(format!("{rows} rows of 255*255 overflow a 32-bit accumulator")));
        }
        Ok(Self { rows, cols, data })
    }

    /// `rows * 255 * 255 < 2^32`.
    pub fn fits_accumulator(rows: usize) -> bool {
        (rows as u64) * 255 * 255 <= u32::MAX as u64
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    /// `out[c] = sum_r lhs[r] * self[r][c]`, accumulated in u32.
    pub fn vecmat_into(&self, lhs: &[u8], out: &mut [u32]) {
        debug_assert_eq!(lhs.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        const BLOCK: usize = 16;
        let mut c0 = 0;
        // column blocks keep the accumulators in registers across all rows
        while c0 + BLOCK <= self.cols {
            let mut acc = [0u32; BLOCK];
            for (r, &x) in lhs.iter().enumerate() {
                let x = x as u16;
                let row: &[u8; BLOCK] =
                    self.data[r * self.cols + c0..r * self.cols + c0 + BLOCK].try_into().expect("block width");
                for k in 0..BLOCK {
                    acc[k] = acc[k].wrapping_add(x.wrapping_mul(row[k] as u16) as u32);
                }
            }
            out[c0..c0 + BLOCK].copy_from_slice(&acc);
            c0 += BLOCK;
        }
        for c in c0..self.cols {
            out[c] = lhs.iter().enumerate().map(|(r, &x)| x as u32 * self.data[r * self.cols + c] as u32).sum();
        }
    }

    pub fn vecmat(&self, lhs: &[u8]) -> Vec<u32> {
        let mut out = vec![0u32; self.cols];
        self.vecmat_into(lhs, &mut out);
        out
    }
}

/// Little-endian bytes of every residue, flattened row-major (I x 4).
pub fn byte_decompose(v: &RnsVector) -> Vec<u8> {
    decompose_words(v.residues())
}

fn decompose_words(words: &[u32]) -> Vec<u8> {
    words.iter().flat_map(|r| r.to_le_bytes()).collect()
}

/// `residues[j] = (sum_h parts[j*4 + h] * 2^(8h)) mod p_j`.
pub fn byte_merge(parts: &[u64], basis_p: &Arc<RnsBasis>) -> Result<RnsVector> {
    if parts.len() != basis_p.len() * N_H {
        return Err(Error::Length { expected: basis_p.len() * N_H, got: parts.len() });
    }
    let residues = basis_p
        .moduli()
        .iter()
        .zip(parts.chunks_exact(N_H))
        .map(|(&p, chunk)| {
            let wide: u128 = chunk.iter().enumerate().map(|(h, &v)| (v as u128) << (8 * h)).sum();
            (wide % p as u128) as u32
        })
        .collect();
    RnsVector::from_residues(basis_p, residues)
}

/// Precomputed reduction tables for one `(Q, P, beta, w)` configuration.
#[derive(Clone, Debug)]
pub struct LazyTables {
    field: Arc<PrimeField>,
    basis_q: Arc<RnsBasis>,
    basis_p: Arc<RnsBasis>,
    w: u32,
    u: u32,
    e: ByteMatrix,
    /// `E` with the byte-decomposed `f_i * 2^(8b)` appended as extra columns.
    e_fused: ByteMatrix,
    fused_cols: usize,
    f: Vec<u128>,
    g: Vec<u32>,
    exact_limit: BigUint,
    k_max: u64,
    slack_bound: u64,
    /// `z * beta mod q_i`, the Montgomery encoding of beta.
    beta_enc: Vec<u32>,
    /// `z^-1 mod P`.
    z_inv_p: BigUint,
    /// `z mod Q`.
    z_q: BigUint,
}

impl LazyTables {
    /// Builds `E`, `f` and `g`.
    pub fn precompute(
        basis_q: &Arc<RnsBasis>,
        basis_p: &Arc<RnsBasis>,
        field: &Arc<PrimeField>,
        w: u32,
    ) -> Result<Self> {
        let beta = field.beta();
        let q = basis_q.product();
        let p = basis_p.product();
        if w != basis_q.w() || w != basis_p.w() {
            return Err(Error::Construction(format!(
                "tables use w={w} but the bases use w={}/{}",
                basis_q.w(),
                basis_p.w()
            )));
        }
        if q <= &(beta * beta) {
            return Err(Error::Construction("Q must exceed beta^2".into()));
        }
        if !basis_q.coprime_to(beta) || !basis_p.coprime_to(beta) {
            return Err(Error::Construction("beta shares a factor with a basis modulus".into()));
        }
        let z = BigUint::one() << w;
        let y = bigint::mod_inverse(&(&z % q), q)
            .ok_or_else(|| Error::Construction("2^w is not invertible mod Q".into()))?;
        let z_inv_p = bigint::mod_inverse(&(&z % p), p)
            .ok_or_else(|| Error::Construction("2^w is not invertible mod P".into()))?;

        let n_in = basis_q.len();
        let n_out = basis_p.len();
        let sum_q: BigUint = basis_q.modulus_sum();
        let sum_qm1: BigUint = &sum_q - n_in;
        let u_min = bigint::ceil_log2(&sum_q) as u32 + 1;
        let u_exact = (bigint::ceil_log2(&(q * &sum_qm1)) as u32 + 1).min(64);
        let u = u_min.max(u_exact);

        // I_i = ((Q/q_i)^-1 mod q_i) * (Q/q_i) * y mod Q
        let consts: Vec<BigUint> = basis_q
            .moduli()
            .iter()
            .map(|&qi| {
                let cof = q / qi;
                let inv = bigint::mod_inverse(&(&cof % qi), &BigUint::from(qi)).expect("coprime");
                (inv * cof * &y) % q
            })
            .collect();

        let f: Vec<u128> = consts
            .iter()
            .map(|ii| {
                let num = ii << u;
                let (quo, rem) = num.div_rem(q);
                let c = if rem.is_zero() { quo } else { quo + 1u32 };
                c.to_u128().expect("f_i <= 2^u")
            })
            .collect();

        let mut e = vec![0u8; n_in * N_B * n_out * N_H];
        let cols = n_out * N_H;
        for (i, ii) in consts.iter().enumerate() {
            for b in 0..N_B {
                let shifted = (ii << (8 * b)) % beta;
                let row = i * N_B + b;
                for (j, &pj) in basis_p.moduli().iter().enumerate() {
                    let val = ((&z * &shifted) % pj).to_u32().expect("below p_j");
                    for (h, byte) in val.to_le_bytes().into_iter().enumerate() {
                        e[row * cols + j * N_H + h] = byte;
                    }
                }
            }
        }
        let neg_q = (beta - (q % beta)) % beta;
        let g = basis_p.moduli().iter().map(|&pj| ((&z * &neg_q) % pj).to_u32().expect("below p_j")).collect();

        let rows = n_in * N_B;
        let e = ByteMatrix::new(rows, cols, e)?;

        // Fused columns carry the bytes of f_i * 2^(8b).
        let fused_cols = ((u as usize + 8 * (N_B - 1)) / 8) + 1;
        let ext_cols = cols + fused_cols;
        let mut ext = vec![0u8; rows * ext_cols];
        for r in 0..rows {
            ext[r * ext_cols..r * ext_cols + cols].copy_from_slice(&e.data[r * cols..(r + 1) * cols]);
            let (i, b) = (r / N_B, r % N_B);
            let shifted = f[i] << (8 * b);
            for c in 0..fused_cols {
                ext[r * ext_cols + cols + c] = (shifted >> (8 * c)) as u8;
            }
        }
        let e_fused = ByteMatrix::new(rows, ext_cols, ext)?;

        let overshoot = (q * &sum_qm1).div_ceil(&(BigUint::one() << u));
        let exact_limit = (q + 1u32 - overshoot).min(q.clone());

        let k_max_big: BigUint =
            basis_q.moduli().iter().zip(&f).map(|(&qi, &fi)| BigUint::from(qi - 1) * fi).sum::<BigUint>() >> u;
        let k_max = k_max_big.to_u64().expect("k fits 64 bits");
        let byte_max: u64 =
            basis_q.moduli().iter().map(|&qi| (0..N_B).map(|b| max_byte(qi - 1, b) as u64).sum::<u64>()).sum();
        let slack_bound = byte_max + k_max;

        if p <= &(beta * (slack_bound + 1)) {
            return Err(Error::Construction("P is too small to hold the lazily bounded output".into()));
        }

        let beta_enc = basis_q.moduli().iter().map(|&qi| ((&z * beta) % qi).to_u32().expect("below q_i")).collect();

        Ok(Self {
            field: Arc::clone(field),
            basis_q: Arc::clone(basis_q),
            basis_p: Arc::clone(basis_p),
            w,
            u,
            e,
            e_fused,
            fused_cols,
            f,
            g,
            exact_limit,
            k_max,
            slack_bound,
            beta_enc,
            z_inv_p,
            z_q: z % q,
        })
    }

    /// Tables over one sized basis for `field` (P = Q).
    pub fn for_field(field: &Arc<PrimeField>, seed: u64) -> Result<Self> {
        let beta = field.beta().clone();
        let beta_sq = &beta * &beta;
        let mut limbs = 1usize;
        loop {
            let b = rns::build_basis(limbs, seed, std::slice::from_ref(&beta))?;
            if b.product() > &beta_sq {
                break;
            }
            limbs += 1;
        }
        limbs += 1;
        loop {
            let basis = rns::build_basis(limbs, seed, std::slice::from_ref(&beta))?;
            let tables = Self::precompute(&basis, &basis, field, basis.w())?;
            let span = BigUint::from(4 * tables.slack_bound) * &beta;
            if &span * &span < tables.exact_limit {
                return Ok(tables);
            }
            limbs += 1;
        }
    }

    /// Exhaustive-verification configuration: beta = 17, Q = {5,7,9,11,13}, w = 8.
    pub fn toy() -> Self {
        let field = PrimeField::from_u64("toy17", 17).expect("17 is prime");
        let basis = RnsBasis::new(vec![5, 7, 9, 11, 13], 8).expect("valid basis");
        Self::precompute(&basis, &basis, &field, 8).expect("valid configuration")
    }

    pub fn field(&self) -> &Arc<PrimeField> {
        &self.field
    }

    pub fn basis_q(&self) -> &Arc<RnsBasis> {
        &self.basis_q
    }

    pub fn basis_p(&self) -> &Arc<RnsBasis> {
        &self.basis_p
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn u(&self) -> u32 {
        self.u
    }

    pub fn e(&self) -> &ByteMatrix {
        &self.e
    }

    pub fn f(&self) -> &[u128] {
        &self.f
    }

    pub fn g(&self) -> &[u32] {
        &self.g
    }

    /// Inputs with `x * y mod Q` below this limit get an exact quotient estimate.
    pub fn exact_limit(&self) -> &BigUint {
        &self.exact_limit
    }

    /// Largest quotient estimate any input can produce.
    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    /// Analytic upper bound on the slack multiple `m`.
    pub fn slack_bound(&self) -> u64 {
        self.slack_bound
    }

    /// Multiply-accumulates per reduction in the byte matmul.
    pub fn matmul_macs(&self) -> u64 {
        (self.e.rows * self.e.cols) as u64
    }

    pub(crate) fn beta_enc(&self) -> &[u32] {
        &self.beta_enc
    }

    fn check_input(&self, x: &RnsVector) -> Result<()> {
        if **x.basis() != *self.basis_q {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    /// Quotient estimate `floor(sum x_i f_i / 2^u)`.
    pub fn quotient_estimate(&self, x: &[u32]) -> u64 {
        let v: u128 = x.iter().zip(&self.f).map(|(&xi, &fi)| xi as u128 * fi).sum();
        (v >> self.u) as u64
    }

    /// Reduction of raw limbs into `out`; `scratch` must hold `J * 4` words.
    pub(crate) fn reduce_words(&self, x: &[u32], out: &mut [u32], scratch: &mut [u32]) {
        let k = self.quotient_estimate(x);
        let mut bytes = [0u8; 4 * 64];
        let bytes: &mut [u8] = if x.len() * N_B <= bytes.len() {
            &mut bytes[..x.len() * N_B]
        } else {
            return self.reduce_words_heap(x, out, scratch, k);
        };
        for (chunk, &xi) in bytes.chunks_exact_mut(N_B).zip(x) {
            chunk.copy_from_slice(&xi.to_le_bytes());
        }
        self.e.vecmat_into(bytes, scratch);
        self.merge_into(scratch, k, out);
    }

    fn reduce_words_heap(&self, x: &[u32], out: &mut [u32], scratch: &mut [u32], k: u64) {
        let bytes = decompose_words(x);
        self.e.vecmat_into(&bytes, scratch);
        self.merge_into(scratch, k, out);
    }

    fn merge_into(&self, acc: &[u32], k: u64, out: &mut [u32]) {
        for (j, (&pj, o)) in self.basis_p.moduli().iter().zip(out.iter_mut()).enumerate() {
            let p = pj as u64;
            let chunk = &acc[j * N_H..(j + 1) * N_H];
            let wide =
                chunk[0] as u64 + ((chunk[1] as u64) << 8) + ((chunk[2] as u64) << 16) + ((chunk[3] as u64) << 24);
            let kg = (k % p) * self.g[j] as u64;
            *o = ((wide % p + kg % p) % p) as u32;
        }
    }

    /// Reference path: standalone dot product, byte matmul, merge, `+ k g`.
    pub fn lazy_reduce(&self, x: &RnsVector) -> Result<RnsVector> {
        self.check_input(x)?;
        let mut out = vec![0u32; self.basis_p.len()];
        let mut scratch = vec![0u32; self.e.cols];
        self.reduce_words(x.residues(), &mut out, &mut scratch);
        Ok(RnsVector::from_residues_unchecked(&self.basis_p, out))
    }

    /// Fused path: the quotient dot product rides along as extra matmul columns.
    pub fn lazy_reduce_fused(&self, x: &RnsVector) -> Result<RnsVector> {
        self.check_input(x)?;
        let bytes = byte_decompose(x);
        let acc = self.e_fused.vecmat(&bytes);
        let main = self.e.cols;
        let v: u128 = acc[main..].iter().enumerate().map(|(c, &a)| (a as u128) << (8 * c)).sum();
        debug_assert_eq!(self.fused_cols, acc.len() - main);
        let k = (v >> self.u) as u64;
        let mut out = vec![0u32; self.basis_p.len()];
        self.merge_into(&acc[..main], k, &mut out);
        Ok(RnsVector::from_residues_unchecked(&self.basis_p, out))
    }

    /// Batch reduction, parallel over the batch.
    pub fn lazy_reduce_batch(&self, xs: &[RnsVector]) -> Result<Vec<RnsVector>> {
        xs.par_iter().map(|x| self.lazy_reduce(x)).collect()
    }

    /// `limb_mont_mul` then `lazy_reduce`. In debug builds the input bound is verified.
    pub fn modmul_lazy(&self, a: &RnsVector, b: &RnsVector) -> Result<RnsVector> {
        if cfg!(debug_assertions) {
            self.check_product_bound(a, b)?;
        }
        let x = rns::limb_mont_mul(a, b)?;
        self.lazy_reduce(&x)
    }

    /// Verification-mode [`Self::modmul_lazy`]: always checks the input bound.
    pub fn modmul_lazy_checked(&self, a: &RnsVector, b: &RnsVector) -> Result<RnsVector> {
        self.check_product_bound(a, b)?;
        let x = rns::limb_mont_mul(a, b)?;
        self.lazy_reduce(&x)
    }

    /// Errors when the lifted product of `a` and `b` would leave the exact range.
    pub fn check_product_bound(&self, a: &RnsVector, b: &RnsVector) -> Result<()> {
        let av = self.lifted_value(a);
        let bv = self.lifted_value(b);
        if av * bv >= self.exact_limit {
            return Err(Error::Bound("operand product exceeds the exact quotient range".into()));
        }
        Ok(())
    }

    /// The integer `A` carried by a Montgomery-form vector (`z A mod P` on the limbs).
    pub fn lifted_value(&self, v: &RnsVector) -> BigUint {
        let n = v.basis().product();
        let zinv = if **v.basis() == *self.basis_p {
            self.z_inv_p.clone()
        } else {
            let z = BigUint::one() << self.w;
            bigint::mod_inverse(&(&z % n), n).expect("odd modulus")
        };
        (rns::from_rns(v) * zinv) % n
    }

    /// Exact canonical value: CRT, unscale by `z`, reduce mod beta.
    pub fn normalize_to_canonical(&self, v: &RnsVector) -> Result<FieldElement> {
        if **v.basis() != *self.basis_p && **v.basis() != *self.basis_q {
            return Err(Error::BasisMismatch);
        }
        Ok(FieldElement::from_biguint(&self.field, &self.lifted_value(v)))
    }

    /// Montgomery-form encoding of `a` over basis Q.
    pub fn encode(&self, a: &BigUint) -> RnsVector {
        let q = self.basis_q.product();
        rns::to_rns_reduced(&((a % q) * &self.z_q % q), &self.basis_q)
    }

    pub fn encode_element(&self, a: &FieldElement) -> RnsVector {
        self.encode(&a.to_biguint())
    }

    /// Header, E as hex rows, f and g in hex.
    pub fn dump(&self) -> String {
        let mut s = String::from("# morph lazy tables\n");
        let _ = writeln!(s, "beta {}", bigint::to_hex(self.field.beta()));
        let _ = writeln!(s, "w {}", self.w);
        let _ = writeln!(s, "u {}", self.u);
        let _ = writeln!(s, "n_b {N_B}");
        let _ = writeln!(s, "n_h {N_H}");
        let hexes = |m: &[u32]| m.iter().map(|q| format!("{q:x}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "q {}", hexes(self.basis_q.moduli()));
        let _ = writeln!(s, "p {}", hexes(self.basis_p.moduli()));
        let _ = writeln!(s, "E {} {}", self.e.rows, self.e.cols);
        for r in 0..self.e.rows {
            for c in 0..self.e.cols {
                let _ = write!(s, "{:02x}", self.e.get(r, c));
            }
            s.push('\n');
        }
        let _ = writeln!(s, "f {}", self.f.iter().map(|v| format!("{v:x}")).collect::<Vec<_>>().join(" "));
        let _ = writeln!(s, "g {}", hexes(&self.g));
        s
    }

    /// Rebuilds tables from the dump header and checks `E`, `f`, `g` match.
    pub fn from_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let mut field = None;
        let mut w = None;
        let mut u = None;
        let mut q = None;
        let mut p = None;
        let mut e_rows = Vec::new();
        let mut f = None;
        let mut g = None;
        let bad = |what: &str| Error::Parse(format!("table dump: {what}"));
        let parse_list = |rest: &str| -> Result<Vec<u32>> {
            rest.split_whitespace().map(|t| u32::from_str_radix(t, 16).map_err(|_| bad("bad hex word"))).collect()
        };
        while let Some(line) = lines.next() {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "beta" => field = Some(PrimeField::new("dump", bigint::parse_hex(rest.trim())?)?),
                "w" => w = Some(rest.trim().parse::<u32>().map_err(|_| bad("w"))?),
                "u" => u = Some(rest.trim().parse::<u32>().map_err(|_| bad("u"))?),
                "n_b" | "n_h" => {
                    if rest.trim() != "4" {
                        return Err(bad("only 4-byte residues are supported"));
                    }
                }
                "q" => q = Some(parse_list(rest)?),
                "p" => p = Some(parse_list(rest)?),
                "E" => {
                    let dims: Vec<usize> =
                        rest.split_whitespace().map(|t| t.parse().map_err(|_| bad("E dims"))).collect::<Result<_>>()?;
                    let [rows, cols] = dims[..] else {
                        return Err(bad("E dims"));
                    };
                    for _ in 0..rows {
                        let row = lines.next().ok_or_else(|| bad("truncated E"))?.trim();
                        if row.len() != 2 * cols {
                            return Err(bad("E row width"));
                        }
                        for c in 0..cols {
                            e_rows.push(u8::from_str_radix(&row[2 * c..2 * c + 2], 16).map_err(|_| bad("E byte"))?);
                        }
                    }
                }
                "f" => {
                    f = Some(
                        rest.split_whitespace()
                            .map(|t| u128::from_str_radix(t, 16).map_err(|_| bad("f")))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "g" => g = Some(parse_list(rest)?),
                _ => return Err(bad(&format!("unknown key `{key}`"))),
            }
        }
        let field = field.ok_or_else(|| bad("missing beta"))?;
        let w = w.ok_or_else(|| bad("missing w"))?;
        let bq = RnsBasis::new(q.ok_or_else(|| bad("missing q"))?, w)?;
        let bp = RnsBasis::new(p.ok_or_else(|| bad("missing p"))?, w)?;
        let bp = if bp == bq { Arc::clone(&bq) } else { bp };
        let tables = Self::precompute(&bq, &bp, &field, w)?;
        if Some(tables.u) != u
            || tables.e.data != e_rows
            || Some(&tables.f) != f.as_ref()
            || Some(&tables.g) != g.as_ref()
        {
            return Err(bad("stored tables disagree with the configuration"));
        }
        Ok(tables)
    }
}

fn max_byte(max_value: u32, b: usize) -> u8 {
    let shift = 8 * b as u32;
    if (max_value >> shift) >= 256 {
        255
    } else {
        (max_value >> shift) as u8
    }
}
