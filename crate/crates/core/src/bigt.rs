//! Big-T span model: per-unit work over parallelism for each kernel, the
//! bottleneck unit, and operation counts measured from real runs.
//!
//! All logarithms are base 2. Spans are dimensionless.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::backend::{Counted, FieldBackend};
use crate::error::{Error, Result};
use crate::msm::MsmStats;
use crate::ntt::{self, NttPlan, NttVariant};

/// Modeled compute units, in tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit {
    Vpu,
    Mxu,
    Xlu,
    Memory,
}

impl Unit {
    pub const ALL: [Unit; 4] = [Unit::Vpu, Unit::Mxu, Unit::Xlu, Unit::Memory];

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Vpu => "VPU",
            Unit::Mxu => "MXU",
            Unit::Xlu => "XLU",
            Unit::Memory => "Memory",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Operations per cycle of each unit, plus HBM bandwidth.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct HardwareProfile {
    pub name: String,
    pub par_shuffle: f64,
    pub par_transpose: f64,
    pub par_mxu: f64,
    pub par_vpu: f64,
    /// `None` means uncalibrated: memory spans use 1.0 and stay out of the argmax.
    #[serde(default)]
    pub bw_hbm: Option<f64>,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self {
            name: "tpu-v6e".into(),
            par_shuffle: 4096.0,
            par_transpose: 4096.0,
            par_mxu: 131072.0,
            par_vpu: 2048.0,
            bw_hbm: None,
        }
    }
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.par_shuffle, self.par_transpose, self.par_mxu, self.par_vpu, self.bw_hbm.unwrap_or(1.0)];
        if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!("profile {} needs positive parallelism", self.name)));
        }
        Ok(())
    }

    pub fn with_bandwidth(mut self, bw: f64) -> Self {
        self.bw_hbm = Some(bw);
        self
    }

    pub fn bandwidth(&self) -> f64 {
        self.bw_hbm.unwrap_or(1.0)
    }

    /// `default` or a TOML profile file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: HardwareProfile =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        p.validate()?;
        Ok(p)
    }

    /// `default`, or `profiles/<name>.toml` under the config root.
    pub fn named(name: &str) -> Result<Self> {
        if name == "default" || name == "tpu-v6e" {
            return Ok(Self::default());
        }
        Self::load(crate::config_root().join("profiles").join(format!("{name}.toml")))
    }

    fn par(&self, unit: Unit) -> f64 {
        match unit {
            Unit::Vpu => self.par_vpu,
            Unit::Mxu => self.par_mxu,
            Unit::Xlu => self.par_shuffle,
            Unit::Memory => self.bandwidth(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    RadixMont,
    MxuRnsLazy,
    PresortPpg,
    LsPpg,
    ButterflyNtt,
    ThreeStepNtt,
    FiveStepNtt,
}

impl Kernel {
    pub const ALL: [Kernel; 7] = [
        Kernel::RadixMont,
        Kernel::MxuRnsLazy,
        Kernel::PresortPpg,
        Kernel::LsPpg,
        Kernel::ButterflyNtt,
        Kernel::ThreeStepNtt,
        Kernel::FiveStepNtt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kernel::RadixMont => "radix-mont",
            Kernel::MxuRnsLazy => "mxu-rns-lazy",
            Kernel::PresortPpg => "presort-ppg",
            Kernel::LsPpg => "ls-ppg",
            Kernel::ButterflyNtt => "butterfly-ntt",
            Kernel::ThreeStepNtt => "three-step-ntt",
            Kernel::FiveStepNtt => "five-step-ntt",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| Error::Config(format!("unknown kernel {s:?}")))
    }
}

/// Parameter names accepted by [`KernelConfig::set`].
pub const PARAM_NAMES: [&str; 9] = ["D", "N", "K", "S", "c", "R", "C", "R1", "R2"];

/// A kernel plus its size parameters. NTT factors left unset default to the
/// most balanced powers of two; MSM `K` defaults to `ceil(S / c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelConfig {
    pub kernel: Kernel,
    pub params: BTreeMap<String, u64>,
    /// Unit that executes MSM point additions (VPU or MXU).
    pub padd_unit: Unit,
}

impl KernelConfig {
    pub fn new(kernel: Kernel) -> Self {
        Self { kernel, params: BTreeMap::new(), padd_unit: Unit::Vpu }
    }

    pub fn with(mut self, name: &str, value: u64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: u64) -> Result<()> {
        if !PARAM_NAMES.contains(&name) {
            return Err(Error::Config(format!("unknown parameter {name:?}")));
        }
        self.params.insert(name.to_string(), value);
        Ok(())
    }

    /// Parses `name=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| Error::Config(format!("expected name=value, got {pair:?}")))?;
        let v = parse_count(v)?;
        self.set(k.trim(), v)
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.params.get(name).copied()
    }

    fn need(&self, name: &str) -> Result<f64> {
        match self.get(name) {
            Some(0) => Err(Error::Config(format!("{}: parameter {name} must be positive", self.kernel))),
            Some(v) => Ok(v as f64),
            None => Err(Error::Config(format!("{}: missing parameter {name}", self.kernel))),
        }
    }

    /// Fills defaulted parameters and checks consistency.
    pub fn resolved(&self) -> Result<KernelConfig> {
        let mut out = self.clone();
        match self.kernel {
            Kernel::RadixMont | Kernel::MxuRnsLazy => {
                self.need("D")?;
            }
            Kernel::PresortPpg | Kernel::LsPpg => {
                self.need("N")?;
                let c = self.need("c")? as u64;
                if self.get("K").is_none() {
                    let s = self
                        .need("S")
                        .map_err(|_| Error::Config(format!("{}: missing parameter K (or S)", self.kernel)))?
                        as u64;
                    out.params.insert("K".into(), s.div_ceil(c));
                }
                out.need("K")?;
            }
            Kernel::ButterflyNtt => {
                self.need("N")?;
            }
            Kernel::ThreeStepNtt => {
                let n = self.need("N")? as u64;
                match (self.get("R"), self.get("C")) {
                    (None, None) => {
                        let NttVariant::ThreeStep { r, c } = NttVariant::balanced_three_step(log2_exact(n, "N")?)
                        else {
                            unreachable!()
                        };
                        out.params.insert("R".into(), r as u64);
                        out.params.insert("C".into(), c as u64);
                    }
                    (Some(r), None) if r > 0 && n.is_multiple_of(r) => {
                        out.params.insert("C".into(), n / r);
                    }
                    (None, Some(c)) if c > 0 && n.is_multiple_of(c) => {
                        out.params.insert("R".into(), n / c);
                    }
                    _ => {}
                }
                let (r, c) = (out.need("R")? as u64, out.need("C")? as u64);
                if r.checked_mul(c) != Some(n) {
                    return Err(Error::Config(format!("three-step-ntt: R*C = {r}*{c} != N = {n}")));
                }
            }
            Kernel::FiveStepNtt => {
                let n = self.need("N")? as u64;
                let given = ["R1", "R2", "C"].map(|k| self.get(k));
                if given.iter().all(Option::is_none) {
                    let NttVariant::FiveStep { r1, r2, c } = NttVariant::balanced_five_step(log2_exact(n, "N")?)?
                    else {
                        unreachable!()
                    };
                    out.params.insert("R1".into(), r1 as u64);
                    out.params.insert("R2".into(), r2 as u64);
                    out.params.insert("C".into(), c as u64);
                }
                let (r1, r2, c) = (out.need("R1")? as u64, out.need("R2")? as u64, out.need("C")? as u64);
                if r1.checked_mul(r2).and_then(|r| r.checked_mul(c)) != Some(n) {
                    return Err(Error::Config(format!("five-step-ntt: R1*R2*C = {r1}*{r2}*{c} != N = {n}")));
                }
                out.params.insert("R".into(), r1 * r2);
            }
        }
        Ok(out)
    }
}

fn log2_exact(n: u64, name: &str) -> Result<u32> {
    if n.is_power_of_two() {
        Ok(n.trailing_zeros())
    } else {
        Err(Error::Config(format!("{name} = {n} must be a power of two for balanced factors")))
    }
}

/// Integer or `2^k`.
pub fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim();
    let bad = || Error::Config(format!("bad count {s:?}"));
    if let Some(e) = s.strip_prefix("2^") {
        let e: u32 = e.parse().map_err(|_| bad())?;
        return 1u64.checked_shl(e).filter(|_| e < 64).ok_or_else(bad);
    }
    s.parse().map_err(|_| bad())
}

/// Spans of one kernel under one profile.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanReport {
    pub config: KernelConfig,
    /// Work numerators before division by the unit's parallelism.
    pub work: BTreeMap<Unit, f64>,
    pub spans: BTreeMap<Unit, f64>,
    pub bottleneck: Unit,
    pub bigt: f64,
    /// Whether Memory took part in the argmax.
    pub memory_calibrated: bool,
}

impl SpanReport {
    pub fn span(&self, unit: Unit) -> f64 {
        self.spans[&unit]
    }
}

/// Evaluates the kernel's span formulas and picks the bottleneck.
pub fn predict_spans(config: &KernelConfig, profile: &HardwareProfile) -> Result<SpanReport> {
    profile.validate()?;
    let cfg = config.resolved()?;
    let p = |k: &str| cfg.need(k);
    let lg = f64::log2;
    // (work, divisor) per unit
    let mut terms: BTreeMap<Unit, (f64, f64)> = BTreeMap::new();
    let mut put = |u: Unit, work: f64, par: f64| {
        terms.insert(u, (work, par));
    };
    let (pv, pm, ps, pt) = (profile.par_vpu, profile.par_mxu, profile.par_shuffle, profile.par_transpose);
    let bw = profile.bandwidth();
    match cfg.kernel {
        Kernel::RadixMont => {
            let d = p("D")?;
            put(Unit::Vpu, d * d, pv);
            put(Unit::Mxu, d * d, pm);
            put(Unit::Xlu, d * d * lg(d), ps);
            put(Unit::Memory, d, bw);
        }
        Kernel::MxuRnsLazy => {
            let d = p("D")?;
            put(Unit::Vpu, 4.0 * d, pv);
            put(Unit::Mxu, d * d, pm);
            put(Unit::Xlu, 0.0, ps);
            put(Unit::Memory, 2.0 * d, bw);
        }
        Kernel::PresortPpg | Kernel::LsPpg => {
            let (n, k, c) = (p("N")?, p("K")?, p("c")?);
            let par_phase = profile.par(cfg.padd_unit);
            let br = if cfg.kernel == Kernel::PresortPpg {
                2.0 * k * (c.exp2() - 1.0) / 2.0
            } else {
                4.0 * k * (c.exp2() - 1.0) / c
            };
            let compute = k * n / par_phase + br + ((k - 1.0) * (1.0 + c) + 1.0) / par_phase;
            let other = if cfg.padd_unit == Unit::Mxu { Unit::Vpu } else { Unit::Mxu };
            put(cfg.padd_unit, compute, 1.0);
            put(other, 0.0, 1.0);
            put(Unit::Xlu, c.exp2() * n * lg(n), ps);
            let mem = msm_memory_words(cfg.kernel, p("N")? as u64, p("K")? as u64);
            put(Unit::Memory, mem as f64, bw);
        }
        Kernel::ButterflyNtt => {
            let n = p("N")?;
            put(Unit::Vpu, n * lg(n), pv);
            put(Unit::Mxu, 0.0, pm);
            put(Unit::Xlu, n * lg(n), ps);
            put(Unit::Memory, n + n, bw);
        }
        Kernel::ThreeStepNtt => {
            let (n, r, c) = (p("N")?, p("R")?, p("C")?);
            put(Unit::Vpu, n, pv);
            put(Unit::Mxu, n * (r + c), pm);
            put(Unit::Xlu, 2.0 * n, pt);
            put(Unit::Memory, 2.0 * n + r * r + c * c, bw);
        }
        Kernel::FiveStepNtt => {
            let (n, r1, r2, c) = (p("N")?, p("R1")?, p("R2")?, p("C")?);
            let r = r1 * r2;
            put(Unit::Vpu, 2.0 * n, pv);
            put(Unit::Mxu, n * (r1 + r2 + c), pm);
            put(Unit::Xlu, 3.0 * n, pt);
            put(Unit::Memory, 2.0 * n + r1 * r1 + r2 * r2 + r + c * c, bw);
        }
    }
    let work: BTreeMap<Unit, f64> = terms.iter().map(|(&u, &(w, _))| (u, w)).collect();
    let spans: BTreeMap<Unit, f64> = terms.iter().map(|(&u, &(w, d))| (u, w / d)).collect();
    let memory_calibrated = profile.bw_hbm.is_some();
    let mut bottleneck = Unit::Vpu;
    for u in Unit::ALL {
        if u == Unit::Memory && !memory_calibrated {
            continue;
        }
        if spans[&u] > spans[&bottleneck] {
            bottleneck = u;
        }
    }
    Ok(SpanReport { bigt: spans[&bottleneck], config: cfg, work, spans, bottleneck, memory_calibrated })
}

/// Memory work of the two MSM kernels as exact integers.
fn msm_memory_words(kernel: Kernel, n: u64, k: u64) -> u128 {
    match kernel {
        Kernel::PresortPpg => k as u128 * n as u128,
        _ => 2 * n as u128,
    }
}

/// presort-ppg memory work over LS-PPG memory work for the same `(N, K)`.
/// The quotient is reduced in integers first so it stays exact past 2^53.
pub fn memory_span_ratio(n: u64, k: u64, profile: &HardwareProfile) -> Result<f64> {
    for kernel in [Kernel::PresortPpg, Kernel::LsPpg] {
        predict_spans(&KernelConfig::new(kernel).with("N", n).with("K", k).with("c", 1), profile)?;
    }
    let num = msm_memory_words(Kernel::PresortPpg, n, k);
    let den = msm_memory_words(Kernel::LsPpg, n, k);
    let g = num_integer::gcd(num, den);
    Ok((num / g) as f64 / (den / g) as f64)
}

pub fn sweep(configs: &[KernelConfig], profile: &HardwareProfile) -> Result<Vec<SpanReport>> {
    configs.iter().map(|c| predict_spans(c, profile)).collect()
}

/// Values for `name=a..b`: doubling when written `2^x..2^y`, else every integer.
pub fn parse_range(spec: &str) -> Result<(String, Vec<u64>)> {
    let (name, range) =
        spec.split_once('=').ok_or_else(|| Error::Config(format!("expected name=a..b, got {spec:?}")))?;
    let (a, b) = range.split_once("..").ok_or_else(|| Error::Config(format!("expected a..b, got {range:?}")))?;
    let (lo, hi) = (parse_count(a)?, parse_count(b)?);
    let doubling = a.trim().starts_with("2^") && b.trim().starts_with("2^");
    let vals = if doubling {
        std::iter::successors(Some(lo), |v| v.checked_mul(2)).take_while(|&v| v <= hi).collect()
    } else {
        (lo..=hi).collect()
    };
    Ok((name.trim().to_string(), vals))
}

/// One config per value of `param`; balanced NTT factors are recomputed.
pub fn sweep_range(base: &KernelConfig, param: &str, values: &[u64]) -> Result<Vec<KernelConfig>> {
    values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            if param == "N" && base.get("R").is_none() && base.get("R1").is_none() {
                c.params.remove("C");
            }
            c.set(param, v)?;
            Ok(c)
        })
        .collect()
}

pub const CSV_HEADER: &str = "kernel,D,N,K,c,R,C,R1,R2,vpu,mxu,xlu,memory,bottleneck,bigt,memory_calibrated";

pub fn to_csv(reports: &[SpanReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let param = |k: &str| r.config.get(k).map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.config.kernel,
            param("D"),
            param("N"),
            param("K"),
            param("c"),
            param("R"),
            param("C"),
            param("R1"),
            param("R2"),
            r.span(Unit::Vpu),
            r.span(Unit::Mxu),
            r.span(Unit::Xlu),
            r.span(Unit::Memory),
            r.bottleneck,
            r.bigt,
            r.memory_calibrated,
        ));
    }
    out
}

/// Executed work of one kernel run next to the model's prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountReport {
    pub kernel: String,
    pub size: u64,
    pub field_muls: u64,
    pub field_adds: u64,
    pub matmul_macs: u64,
    pub digit_mults: u64,
    pub point_ops: u64,
    pub moves: u64,
    /// What the headline count should be under the documented schedule.
    pub predicted: u64,
    /// The headline count: field multiplications, or point operations for MSM.
    pub measured: u64,
}

impl CountReport {
    pub fn ratio(&self) -> f64 {
        self.measured as f64 / self.predicted as f64
    }
}

/// Field multiplications each NTT schedule performs.
pub fn predicted_ntt_muls(variant: Option<NttVariant>, n: u64) -> u64 {
    let lg = n.trailing_zeros() as u64;
    match variant {
        None => n * n,
        Some(NttVariant::Butterfly) => n / 2 * lg,
        Some(NttVariant::ThreeStep { r, c }) => n * (r + c) as u64 + n,
        Some(NttVariant::FiveStep { r1, r2, c }) => n * (r1 + r2 + c) as u64 + 2 * n,
    }
}

/// Runs the plan (or the direct DFT when `direct`) under a counting backend.
pub fn measure_ntt<B: FieldBackend>(backend: B, plan: &NttPlan, x: &[B::Elem], direct: bool) -> Result<CountReport> {
    let counted = Counted::new(backend);
    let (moves, kernel, variant) = if direct {
        ntt::ntt_direct(&counted, plan, x)?;
        (0, "direct-ntt".to_string(), None)
    } else {
        let (_, trace) = ntt::ntt_traced(&counted, plan, x)?;
        (trace.moves, plan.variant().to_string(), Some(plan.variant()))
    };
    let c = counted.counts();
    let n = plan.n() as u64;
    Ok(CountReport {
        kernel,
        size: n,
        field_muls: c.field_muls,
        field_adds: c.field_adds,
        matmul_macs: c.matmul_macs,
        digit_mults: c.digit_mults,
        point_ops: 0,
        moves,
        predicted: predicted_ntt_muls(variant, n),
        measured: c.field_muls,
    })
}

/// LS-PPG point operations from a run's stats against
/// `K*N + 4K(2^c-1) + (K-1)(1+c)`, the ls-ppg span work with `N'` slots per row
/// replaced by `N` and the trailing `+1` dropped.
pub fn measure_msm(stats: &MsmStats, n: u64) -> CountReport {
    let k = stats.windows as u64;
    let c = stats.c as u64;
    let occupied_total: u64 = stats.ba_occupied_padds;
    let predicted = k * n + 4 * k * ((1u64 << c) - 1) + k.saturating_sub(1) * (1 + c);
    let measured = occupied_total + stats.br_padds + stats.br_pdbls + stats.wm_padds + stats.wm_pdbls;
    CountReport {
        kernel: "ls-ppg".into(),
        size: n,
        field_muls: 0,
        field_adds: 0,
        matmul_macs: 0,
        digit_mults: 0,
        point_ops: stats.total_padds() + stats.total_pdbls(),
        moves: stats.moves,
        predicted,
        measured,
    }
}

/// `pairs` multiplications under a counting backend.
pub fn measure_modmul<B: FieldBackend>(backend: B, a: &[B::Elem], b: &[B::Elem]) -> CountReport {
    let counted = Counted::new(backend);
    for (x, y) in a.iter().zip(b) {
        let _ = counted.mul(x, y);
    }
    let c = counted.counts();
    let n = a.len().min(b.len()) as u64;
    CountReport {
        kernel: format!("modmul-{}", counted.name()),
        size: n,
        field_muls: c.field_muls,
        field_adds: c.field_adds,
        matmul_macs: c.matmul_macs,
        digit_mults: c.digit_mults,
        point_ops: 0,
        moves: 0,
        predicted: n,
        measured: c.field_muls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::WordField;
    use crate::PrimeField;

    fn spans(cfg: KernelConfig) -> SpanReport {
        predict_spans(&cfg, &HardwareProfile::default()).unwrap()
    }

    #[test]
    fn radix_mont_example() {
        let r = spans(KernelConfig::new(Kernel::RadixMont).with("D", 24));
        assert_eq!(r.span(Unit::Xlu), 24.0 * 24.0 * 24f64.log2() / 4096.0);
        assert_eq!(r.bottleneck, Unit::Xlu);
    }

    #[test]
    fn butterfly_example() {
        let r = spans(KernelConfig::new(Kernel::ButterflyNtt).with("N", 1 << 16));
        assert_eq!(r.span(Unit::Xlu), 256.0);
        assert_eq!(r.span(Unit::Vpu), 512.0);
    }

    #[test]
    fn rns_lazy_is_vpu_bound_for_small_digits() {
        for d in 1..256 {
            let r = spans(KernelConfig::new(Kernel::MxuRnsLazy).with("D", d));
            assert_eq!(r.span(Unit::Xlu), 0.0);
            assert_eq!(r.bottleneck, Unit::Vpu, "D = {d}");
        }
    }

    #[test]
    fn ties_break_in_unit_order() {
        // 3-step with R + C = 64: MXU equals VPU exactly
        let r = spans(KernelConfig::new(Kernel::ThreeStepNtt).with("N", 1024).with("R", 32).with("C", 32));
        assert_eq!(r.span(Unit::Vpu), r.span(Unit::Mxu));
        assert_eq!(r.bottleneck, Unit::Vpu);
    }

    #[test]
    fn memory_joins_argmax_only_when_calibrated() {
        let cfg = KernelConfig::new(Kernel::ThreeStepNtt).with("N", 1 << 14);
        let r = spans(cfg.clone());
        assert!(!r.memory_calibrated);
        assert!(r.span(Unit::Memory) > r.bigt);
        let r = predict_spans(&cfg, &HardwareProfile::default().with_bandwidth(1.0)).unwrap();
        assert_eq!(r.bottleneck, Unit::Memory);
    }

    #[test]
    fn missing_and_inconsistent_parameters() {
        let p = HardwareProfile::default();
        assert!(predict_spans(&KernelConfig::new(Kernel::RadixMont), &p).is_err());
        assert!(predict_spans(&KernelConfig::new(Kernel::LsPpg).with("N", 8).with("c", 4), &p).is_err());
        let bad = KernelConfig::new(Kernel::ThreeStepNtt).with("N", 64).with("R", 4).with("C", 4);
        assert!(predict_spans(&bad, &p).is_err());
        let mut k = KernelConfig::new(Kernel::RadixMont);
        assert!(k.set_pair("Q=3").is_err());
        assert!(k.set_pair("D=0").is_ok());
        assert!(predict_spans(&k, &p).is_err());
    }

    #[test]
    fn msm_k_from_scalar_bits() {
        let r = spans(KernelConfig::new(Kernel::LsPpg).with("N", 1024).with("S", 255).with("c", 8));
        assert_eq!(r.config.get("K"), Some(32));
        assert_eq!(r.span(Unit::Mxu), 0.0);
    }

    #[test]
    fn ranges_and_counts() {
        assert_eq!(parse_count("2^10").unwrap(), 1024);
        assert!(parse_count("2^x").is_err());
        let (name, vals) = parse_range("N=2^4..2^7").unwrap();
        assert_eq!(name, "N");
        assert_eq!(vals, vec![16, 32, 64, 128]);
        assert_eq!(parse_range("D=8..11").unwrap().1, vec![8, 9, 10, 11]);
        assert!(parse_range("D=9..8").unwrap().1.is_empty());
    }

    #[test]
    fn csv_shape() {
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
        let r = spans(KernelConfig::new(Kernel::RadixMont).with("D", 8));
        let csv = to_csv(&[r]);
        let row = csv.lines().nth(1).unwrap();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("radix-mont,8,"));
    }

    #[test]
    fn measured_butterfly_count() {
        let f = PrimeField::from_u64("f12289", 12289).unwrap();
        let plan = NttPlan::new(&f, 1024, NttVariant::Butterfly).unwrap();
        let x: Vec<u64> = (0..1024).collect();
        let r = measure_ntt(WordField::new(&f).unwrap(), &plan, &x, false).unwrap();
        assert_eq!(r.measured, 5120);
        assert_eq!(r.predicted, 5120);
    }
}
