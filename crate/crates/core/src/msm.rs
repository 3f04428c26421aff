//! Layout-stationary Pippenger MSM.
//!
//! Per window: slice the scalars, argsort the slices and scatter point indices
//! into a `2^c x N'` bucket grid padded with the identity, accumulate every
//! row in lock-step (BA), fold the buckets with the pairing tree (BR), and
//! finally merge windows from the top (WM).

use std::sync::Arc;

use num_bigint::BigUint;
use rand::RngCore;
use rayon::prelude::*;

use crate::backend::FieldBackend;
use crate::bigint;
use crate::edwards::{Curve, EdPoint};
use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeField};

/// Largest window width the bucket grid accepts.
pub const MAX_WINDOW_BITS: u32 = 24;

/// Sentinel slot: identity padding.
pub const EMPTY: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct MsmInstance<E> {
    pub scalars: Vec<BigUint>,
    pub points: Vec<EdPoint<E>>,
    /// Scalar bit length S_BL.
    pub scalar_bits: u32,
}

impl<E: Clone> MsmInstance<E> {
    pub fn new(scalars: Vec<BigUint>, points: Vec<EdPoint<E>>, scalar_bits: u32) -> Result<Self> {
        if scalars.is_empty() {
            return Err(Error::Config("an MSM needs at least one term".into()));
        }
        if scalars.len() != points.len() {
            return Err(Error::Length { expected: scalars.len(), got: points.len() });
        }
        if scalar_bits == 0 {
            return Err(Error::Config("scalar bit length must be positive".into()));
        }
        if let Some(i) = scalars.iter().position(|s| s.bits() > scalar_bits as u64) {
            return Err(Error::Domain(format!("scalar {i} exceeds {scalar_bits} bits")));
        }
        Ok(Self { scalars, points, scalar_bits })
    }

    pub fn len(&self) -> usize {
        self.scalars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scalars.is_empty()
    }

    /// Number of windows `K = ceil(S_BL / c)`.
    pub fn window_count(&self, c: u32) -> usize {
        self.scalar_bits.div_ceil(c) as usize
    }
}

/// Random scalars below `2^scalar_bits` and random curve points.
pub fn random_instance<B: FieldBackend, R: RngCore>(
    curve: &Curve<B>,
    n: usize,
    scalar_bits: u32,
    rng: &mut R,
) -> MsmInstance<B::Elem> {
    let scalars = (0..n).map(|_| bigint::random_bits(rng, scalar_bits as u64)).collect();
    let points = (0..n).map(|_| curve.random_point(rng)).collect();
    MsmInstance { scalars, points, scalar_bits }
}

/// A window wider than the scalar is allowed and yields a single window.
fn check_window(c: u32) -> Result<()> {
    if c == 0 {
        return Err(Error::Config("window width must be at least 1".into()));
    }
    Ok(())
}

fn bits_at(s: &BigUint, start: u64, width: u32) -> u64 {
    let mut v = 0u64;
    for b in 0..width as u64 {
        if s.bit(start + b) {
            v |= 1 << b;
        }
    }
    v
}

/// `out[k][n]` = bits `[k c, (k+1) c)` of scalar n; the top window is zero-padded.
pub fn slice_scalars(scalars: &[BigUint], scalar_bits: u32, c: u32) -> Result<Vec<Vec<u64>>> {
    check_window(c)?;
    if c > 64 {
        return Err(Error::Config("window slices are limited to 64 bits".into()));
    }
    let k = scalar_bits.div_ceil(c) as u64;
    Ok((0..k).map(|w| scalars.iter().map(|s| bits_at(s, w * c as u64, c)).collect()).collect())
}

/// One window of the bucket grid: `rows = 2^c`, `width = N'`, point indices or [`EMPTY`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowBuckets {
    pub rows: usize,
    pub width: usize,
    pub slots: Vec<u32>,
    pub occupancy: Vec<u32>,
}

impl WindowBuckets {
    pub fn row(&self, j: usize) -> &[u32] {
        &self.slots[j * self.width..(j + 1) * self.width]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BucketTensor {
    pub c: u32,
    pub windows: Vec<WindowBuckets>,
}

impl BucketTensor {
    /// Non-identity slots over all rows and windows.
    pub fn occupied_slots(&self) -> u64 {
        self.windows.iter().map(|w| w.occupancy.iter().map(|&o| o as u64).sum::<u64>()).sum()
    }

    /// Non-identity slots in rows `1..2^c`, the ones BA adds; row 0 has weight zero.
    pub fn accumulated_slots(&self) -> u64 {
        self.windows.iter().map(|w| w.occupancy[1..].iter().map(|&o| o as u64).sum::<u64>()).sum()
    }
}

/// Scatter of one window's slices by stable argsort.
pub fn bucketize_window(slices: &[u64], c: u32) -> WindowBuckets {
    let rows = 1usize << c;
    let mut perm: Vec<u32> = (0..slices.len() as u32).collect();
    perm.sort_by_key(|&i| slices[i as usize]);
    let mut occupancy = vec![0u32; rows];
    for &s in slices {
        occupancy[s as usize] += 1;
    }
    let width = occupancy.iter().copied().max().unwrap_or(0) as usize;
    let mut slots = vec![EMPTY; rows * width];
    let mut fill = vec![0usize; rows];
    for &i in &perm {
        let j = slices[i as usize] as usize;
        slots[j * width + fill[j]] = i;
        fill[j] += 1;
    }
    WindowBuckets { rows, width, slots, occupancy }
}

pub fn bucketize(slices: &[Vec<u64>], c: u32) -> Result<BucketTensor> {
    if c == 0 || c > MAX_WINDOW_BITS {
        return Err(Error::Config(format!("window width c={c} must be in 1..={MAX_WINDOW_BITS}")));
    }
    Ok(BucketTensor { c, windows: slices.par_iter().map(|s| bucketize_window(s, c)).collect() })
}

/// Work done by one MSM run, in point operations and element moves.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MsmStats {
    pub windows: usize,
    pub c: u32,
    /// N' of each window.
    pub widths: Vec<usize>,
    /// BA additions whose slot held a point.
    pub ba_occupied_padds: u64,
    /// BA additions against identity padding.
    pub ba_padding_padds: u64,
    pub br_padds: u64,
    pub br_pdbls: u64,
    pub wm_padds: u64,
    pub wm_pdbls: u64,
    /// Point indices gathered and scattered while bucketing.
    pub moves: u64,
}

impl MsmStats {
    pub fn total_padds(&self) -> u64 {
        self.ba_occupied_padds + self.ba_padding_padds + self.br_padds + self.wm_padds
    }

    pub fn total_pdbls(&self) -> u64 {
        self.br_pdbls + self.wm_pdbls
    }

    fn absorb(&mut self, o: &MsmStats) {
        self.ba_occupied_padds += o.ba_occupied_padds;
        self.ba_padding_padds += o.ba_padding_padds;
        self.br_padds += o.br_padds;
        self.br_pdbls += o.br_pdbls;
        self.wm_padds += o.wm_padds;
        self.wm_pdbls += o.wm_pdbls;
        self.moves += o.moves;
    }
}

/// Lock-step BA over rows `1..2^c`: every row walks all `N'` slots.
pub fn bucket_accumulate<B: FieldBackend>(
    curve: &Curve<B>,
    window: &WindowBuckets,
    points: &[EdPoint<B::Elem>],
    stats: &mut MsmStats,
) -> Vec<EdPoint<B::Elem>> {
    let id = curve.identity();
    let mut out = vec![id.clone(); window.rows];
    for (j, bucket) in out.iter_mut().enumerate().skip(1) {
        let mut acc = id.clone();
        for &slot in window.row(j) {
            if slot == EMPTY {
                acc = curve.padd(&acc, &id);
                stats.ba_padding_padds += 1;
            } else {
                acc = curve.padd(&acc, &points[slot as usize]);
                stats.ba_occupied_padds += 1;
            }
        }
        *bucket = acc;
    }
    out
}

/// Pairing tree: `W_k = sum_j j * B_j` from `2^c` bucket sums.
pub fn bucket_reduce_tree<B: FieldBackend>(
    curve: &Curve<B>,
    buckets: &[EdPoint<B::Elem>],
    stats: &mut MsmStats,
) -> Result<EdPoint<B::Elem>> {
    let len = buckets.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::Length { expected: len.next_power_of_two().max(2), got: len });
    }
    let c = len.trailing_zeros();
    let mut b: Vec<EdPoint<B::Elem>> = buckets.to_vec();
    let mut w: Vec<EdPoint<B::Elem>> = vec![curve.identity(); len];
    for s in (0..c).rev() {
        let half = 1usize << s;
        let mut nb = Vec::with_capacity(half);
        let mut nw = Vec::with_capacity(half);
        for i in 0..half {
            let (bl, br) = (&b[2 * i], &b[2 * i + 1]);
            let (wl, wr) = (&w[2 * i], &w[2 * i + 1]);
            nw.push(curve.padd(&curve.padd(wl, wr), br));
            nb.push(curve.pdbl(&curve.padd(bl, br)));
            stats.br_padds += 3;
            stats.br_pdbls += 1;
        }
        b = nb;
        w = nw;
    }
    Ok(w.swap_remove(0))
}

/// Horner from the most significant window: `acc = 2^c acc + W_k`.
pub fn window_merge<B: FieldBackend>(
    curve: &Curve<B>,
    windows: &[EdPoint<B::Elem>],
    c: u32,
    stats: &mut MsmStats,
) -> EdPoint<B::Elem> {
    let mut iter = windows.iter().rev();
    let Some(top) = iter.next() else {
        return curve.identity();
    };
    let mut acc = top.clone();
    for wk in iter {
        for _ in 0..c {
            acc = curve.pdbl(&acc);
            stats.wm_pdbls += 1;
        }
        acc = curve.padd(&acc, wk);
        stats.wm_padds += 1;
    }
    acc
}

/// Full pipeline; windows run as independent parallel tasks.
pub fn msm<B: FieldBackend>(
    curve: &Curve<B>,
    inst: &MsmInstance<B::Elem>,
    c: u32,
) -> Result<(EdPoint<B::Elem>, MsmStats)> {
    let slices = slice_scalars(&inst.scalars, inst.scalar_bits, c)?;
    let tensor = bucketize(&slices, c)?;
    let per_window: Vec<Result<(EdPoint<B::Elem>, MsmStats)>> = tensor
        .windows
        .par_iter()
        .map(|wb| {
            let mut st = MsmStats { moves: inst.len() as u64, ..Default::default() };
            let buckets = bucket_accumulate(curve, wb, &inst.points, &mut st);
            let wk = bucket_reduce_tree(curve, &buckets, &mut st)?;
            Ok((wk, st))
        })
        .collect();
    let mut stats = MsmStats {
        windows: tensor.windows.len(),
        c,
        widths: tensor.windows.iter().map(|w| w.width).collect(),
        ..Default::default()
    };
    let mut sums = Vec::with_capacity(per_window.len());
    for r in per_window {
        let (wk, st) = r?;
        stats.absorb(&st);
        sums.push(wk);
    }
    let out = window_merge(curve, &sums, c, &mut stats);
    Ok((out, stats))
}

/// Oracle: `sum_n scalar_mul(S_n, P_n)`.
pub fn msm_naive<B: FieldBackend>(curve: &Curve<B>, inst: &MsmInstance<B::Elem>) -> EdPoint<B::Elem> {
    inst.scalars
        .par_iter()
        .zip(inst.points.par_iter())
        .map(|(s, p)| curve.scalar_mul(s, p))
        .reduce(|| curve.identity(), |a, b| curve.padd(&a, &b))
}

/// Text form of an instance: affine points plus an optional expected result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceFile {
    pub scalar_bits: u32,
    pub scalars: Vec<BigUint>,
    pub points: Vec<(FieldElement, FieldElement)>,
    pub expect: Option<(FieldElement, FieldElement)>,
}

impl InstanceFile {
    /// Lines: `bits <S_BL>`, then `<scalar> <x> <y>` per term, then `expect <x> <y>`.
    pub fn format(&self) -> String {
        let mut s = String::from("# morph msm instance: scalar x y (hex)\n");
        s.push_str(&format!("bits {}\n", self.scalar_bits));
        for (k, (x, y)) in self.scalars.iter().zip(&self.points) {
            s.push_str(&format!("{} {} {}\n", bigint::to_hex(k), x.to_hex(), y.to_hex()));
        }
        if let Some((x, y)) = &self.expect {
            s.push_str(&format!("expect {} {}\n", x.to_hex(), y.to_hex()));
        }
        s
    }

    pub fn parse(field: &Arc<PrimeField>, text: &str) -> Result<Self> {
        let mut scalar_bits = None;
        let mut scalars = Vec::new();
        let mut points = Vec::new();
        let mut expect = None;
        let mut record = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ctx = |e: Error| Error::Parse(format!("msm line {} (record {record}): {e}", lineno + 1));
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["bits", b] => {
                    scalar_bits =
                        Some(b.parse::<u32>().map_err(|_| ctx(Error::Parse(format!("bad bit length `{b}`"))))?)
                }
                ["expect", x, y] => {
                    expect = Some((
                        FieldElement::from_hex(field, x).map_err(ctx)?,
                        FieldElement::from_hex(field, y).map_err(ctx)?,
                    ))
                }
                [s, x, y] => {
                    scalars.push(bigint::parse_hex(s).map_err(ctx)?);
                    points.push((
                        FieldElement::from_hex(field, x).map_err(ctx)?,
                        FieldElement::from_hex(field, y).map_err(ctx)?,
                    ));
                    record += 1;
                }
                _ => return Err(ctx(Error::Parse("expected `scalar x y`".into()))),
            }
        }
        let scalar_bits =
            scalar_bits.unwrap_or_else(|| scalars.iter().map(|s| s.bits() as u32).max().unwrap_or(1).max(1));
        Ok(Self { scalar_bits, scalars, points, expect })
    }

    /// Lifts the affine points onto `curve`, rejecting off-curve records by index.
    pub fn to_instance<B: FieldBackend>(&self, curve: &Curve<B>) -> Result<MsmInstance<B::Elem>> {
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(i, (x, y))| curve.from_affine(x, y).map_err(|e| Error::Domain(format!("record {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        MsmInstance::new(self.scalars.clone(), points, self.scalar_bits)
    }

    pub fn from_instance<B: FieldBackend>(
        curve: &Curve<B>,
        inst: &MsmInstance<B::Elem>,
        expect: Option<&EdPoint<B::Elem>>,
    ) -> Self {
        Self {
            scalar_bits: inst.scalar_bits,
            scalars: inst.scalars.clone(),
            points: inst.points.iter().map(|p| curve.to_affine(p)).collect(),
            expect: expect.map(|p| curve.to_affine(p)),
        }
    }
}
