//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Checks marked as known gaps still print FAIL but do not fail the process;
//! every other failing check makes it exit nonzero.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use morph_core::backend::{FieldBackend, RadixMont, RnsLazy, WordField};
use morph_core::bigt::{self, HardwareProfile, Kernel, KernelConfig, Unit};
use morph_core::edwards::{Curve, CurveParams};
use morph_core::field::{self, FieldElement};
use morph_core::lazy::LazyTables;
use morph_core::msm::{self, MsmStats};
use morph_core::ntt::{self, NttPlan, NttVariant};
use morph_core::{cli, load_field, rns};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const TOY_BUDGET: Duration = Duration::from_secs(60);
const MODMUL_BUDGET: Duration = Duration::from_secs(120);
const TOY_MAX_SLACK: u64 = 2;
const MODMUL_COUNT: usize = 10_000;
const MSM_SIZES: [usize; 5] = [1, 2, 64, 1024, 4096];
const MSM_WINDOWS: [u32; 3] = [2, 4, 8];
const TREE_TRIALS: usize = 1000;
const NTT_DIRECT_MAX_LOG: u32 = 10;
const NTT_CROSS_MAX_LOG: u32 = 18;
const NTT_CONV_MAX_LOG: u32 = 8;
const COUNT_MAX_LOG: u32 = 12;
const FORMULA_REL_TOL: f64 = 1e-12;
const SEED: u64 = 20240601;

#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    gaps: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn known_gap(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.gaps.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn report(id: u32, name: &str, o: &Outcome) -> bool {
    let pass = o.failures.is_empty() && o.gaps.is_empty();
    let mut detail: Vec<String> = o.notes.clone();
    detail.extend(o.failures.iter().map(|f| format!("failed: {f}")));
    detail.extend(o.gaps.iter().map(|g| format!("known gap: {g}")));
    println!("{} {id} {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.join("; "));
    o.failures.is_empty()
}

fn toy_lazy_reduction(o: &mut Outcome) {
    let start = Instant::now();
    let t = LazyTables::toy();
    let q: u64 = num_traits::ToPrimitive::to_u64(t.basis_q().product()).unwrap();
    let results: Vec<Option<u64>> = (0..q)
        .into_par_iter()
        .map(|x| {
            let xb = BigUint::from(x);
            let out = t.lazy_reduce(&rns::to_rns(&xb, t.basis_q()).ok()?).ok()?;
            cli::lazy_congruence(&t, &xb, &out)
        })
        .collect();
    let elapsed = start.elapsed();
    let bad = results.iter().filter(|r| r.is_none()).count();
    let slack = results.iter().flatten().copied().max().unwrap_or(0);
    o.note(format!("congruent {}/{q}, slack {slack}, {:.2?}", q as usize - bad, elapsed));
    o.require(bad == 0, || format!("{bad} inputs not congruent"));
    o.require(elapsed < TOY_BUDGET, || format!("took {elapsed:.2?}"));
    o.require(slack <= t.slack_bound(), || format!("slack {slack} above analytic bound {}", t.slack_bound()));
    o.known_gap(slack <= TOY_MAX_SLACK, || format!("slack {slack} > {TOY_MAX_SLACK}"));
}

fn large_field_modmul(o: &mut Outcome) {
    for name in ["secp256k1", "bls12_377_q", "mnt4_753"] {
        let f = load_field(name).unwrap();
        let start = Instant::now();
        let t = LazyTables::for_field(&f, cli::BASIS_SEED).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ f.bits());
        let pairs: Vec<(FieldElement, FieldElement)> = (0..MODMUL_COUNT)
            .map(|_| (FieldElement::random(&f, &mut rng), FieldElement::random(&f, &mut rng)))
            .collect();
        let (mut lazy_bad, mut radix_bad) = (0, 0);
        for (a, b) in &pairs {
            let want = field::modmul_oracle(a, b).unwrap();
            let lazy = t
                .modmul_lazy_checked(&t.encode_element(a), &t.encode_element(b))
                .and_then(|v| t.normalize_to_canonical(&v));
            if lazy.ok() != Some(want.clone()) {
                lazy_bad += 1;
            }
            let radix = field::mont_mul_radix(&a.to_montgomery(), &b.to_montgomery()).map(|m| m.from_montgomery());
            if radix.ok() != Some(want) {
                radix_bad += 1;
            }
        }
        let elapsed = start.elapsed();
        o.note(format!("{name} ({} bits) {elapsed:.2?}", f.bits()));
        o.require(lazy_bad == 0, || format!("{name}: {lazy_bad} lazy mismatches"));
        o.require(radix_bad == 0, || format!("{name}: {radix_bad} radix mismatches"));
        o.require(elapsed < MODMUL_BUDGET, || format!("{name} took {elapsed:.2?}"));
    }
}

fn msm_on<B: FieldBackend>(o: &mut Outcome, curve: &Curve<B>, label: &str) {
    let bits = curve.params().order.as_ref().map(|n| n.bits() as u32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    let mut runs = 0;
    for n in MSM_SIZES {
        let inst = msm::random_instance(curve, n, bits, &mut rng);
        let want = msm::msm_naive(curve, &inst);
        for c in MSM_WINDOWS {
            runs += 1;
            match msm::msm(curve, &inst, c) {
                Ok((got, _)) if curve.eq_points(&got, &want) => {}
                _ => {
                    mismatches += 1;
                    o.failures.push(format!("{label} N={n} c={c}"));
                }
            }
        }
    }
    o.note(format!("{label} {}/{runs}", runs - mismatches));
}

fn msm_equivalence(o: &mut Outcome) {
    let start = Instant::now();
    for name in ["small13", "ed25519"] {
        let p = Arc::new(CurveParams::load_named(name).unwrap());
        msm_on(o, &Curve::new(Arc::clone(&p), RadixMont::new(&p.field)).unwrap(), &format!("{name}/radix"));
        let lazy = RnsLazy::for_field(&p.field, cli::BASIS_SEED).unwrap();
        msm_on(o, &Curve::new(Arc::clone(&p), lazy).unwrap(), &format!("{name}/lazy"));
    }
    o.note(format!("{:.2?}", start.elapsed()));
}

fn bucket_recurrence(o: &mut Outcome) {
    for name in ["small13", "ed25519"] {
        let p = Arc::new(CurveParams::load_named(name).unwrap());
        let curve = Curve::new(Arc::clone(&p), RadixMont::new(&p.field)).unwrap();
        for c in 1..=6u32 {
            let bad = (0..TREE_TRIALS)
                .into_par_iter()
                .filter(|&trial| {
                    let mut rng = ChaCha8Rng::seed_from_u64(SEED + trial as u64);
                    rng.set_stream(c as u64);
                    let buckets: Vec<_> = (0..1usize << c).map(|_| curve.random_point(&mut rng)).collect();
                    let want = buckets.iter().enumerate().fold(curve.identity(), |acc, (j, b)| {
                        curve.padd(&acc, &curve.scalar_mul(&BigUint::from(j), b))
                    });
                    let mut st = MsmStats::default();
                    !msm::bucket_reduce_tree(&curve, &buckets, &mut st).is_ok_and(|got| curve.eq_points(&got, &want))
                })
                .count();
            o.require(bad == 0, || format!("{name} c={c}: {bad}/{TREE_TRIALS}"));
        }
    }
    o.note(format!("c=1..6, {TREE_TRIALS} trials each on small13 and ed25519"));
}

fn ntt_equivalence(o: &mut Outcome) {
    let start = Instant::now();
    let f = load_field("ntt998244353").unwrap();
    let w = WordField::new(&f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut random = |n: usize| -> Vec<u64> { (0..n).map(|_| rng.gen_range(0..w.modulus())).collect() };
    let mut compared = 0usize;

    for log_n in 0..=NTT_DIRECT_MAX_LOG {
        let n = 1usize << log_n;
        let base = NttPlan::new(&f, n, NttVariant::Butterfly).unwrap();
        let x = random(n);
        let want = ntt::ntt_direct(&w, &base, &x).unwrap();
        let mut variants = vec![NttVariant::Butterfly];
        variants.extend(ntt::three_step_splits(log_n));
        variants.extend(ntt::five_step_splits(log_n));
        for v in variants {
            compared += 1;
            let got = ntt::ntt(&w, &base.with_variant(v).unwrap(), &x);
            o.require(got.as_ref().ok() == Some(&want), || format!("N={n} {v} vs direct"));
        }
    }

    for log_n in NTT_DIRECT_MAX_LOG + 1..=NTT_CROSS_MAX_LOG {
        let n = 1usize << log_n;
        let base = NttPlan::new(&f, n, NttVariant::Butterfly).unwrap();
        let x = random(n);
        let want = ntt::ntt_butterfly(&w, &base, &x).unwrap();
        let five = NttVariant::balanced_five_step(log_n).unwrap();
        let NttVariant::FiveStep { r1, r2, c } = five else { unreachable!() };
        for v in [NttVariant::balanced_three_step(log_n), NttVariant::ThreeStep { r: r1 * r2, c }, five] {
            compared += 1;
            let got = ntt::ntt(&w, &base.with_variant(v).unwrap(), &x);
            o.require(got.as_ref().ok() == Some(&want), || format!("N={n} {v} vs butterfly"));
        }
    }

    for log_n in 0..=NTT_CONV_MAX_LOG {
        let n = 1usize << log_n;
        let (x, y) = (random(n), random(n));
        let plan = NttPlan::new(&f, n, NttVariant::Butterfly).unwrap();
        let fx = ntt::ntt(&w, &plan, &x).unwrap();
        let fy = ntt::ntt(&w, &plan, &y).unwrap();
        let pointwise: Vec<u64> = fx.iter().zip(&fy).map(|(a, b)| w.mul(a, b)).collect();
        let conv = ntt::cyclic_convolution(&w, &x, &y);
        o.require(ntt::ntt(&w, &plan, &conv).unwrap() == pointwise, || format!("convolution N={n}"));
    }
    o.note(format!("{compared} transforms compared, {:.2?}", start.elapsed()));
}

/// Closed-form spans written out by hand, with bandwidth 1.
fn reference_spans(kernel: Kernel, p: &dyn Fn(&str) -> f64, hw: &HardwareProfile) -> [f64; 4] {
    let (ps, pt, pm, pv) = (hw.par_shuffle, hw.par_transpose, hw.par_mxu, hw.par_vpu);
    let lg = f64::log2;
    match kernel {
        Kernel::RadixMont => {
            let d = p("D");
            [d * d / pv, d * d / pm, d * d * lg(d) / ps, d]
        }
        Kernel::MxuRnsLazy => {
            let d = p("D");
            [4.0 * d / pv, d * d / pm, 0.0, 2.0 * d]
        }
        Kernel::PresortPpg | Kernel::LsPpg => {
            let (n, k, c) = (p("N"), p("K"), p("c"));
            let reduce = if kernel == Kernel::PresortPpg {
                2.0 * k * (2f64.powf(c) - 1.0) / 2.0
            } else {
                4.0 * k * (2f64.powf(c) - 1.0) / c
            };
            let mem = if kernel == Kernel::PresortPpg { k * n } else { 2.0 * n };
            [k * n / pv + reduce + ((k - 1.0) * (1.0 + c) + 1.0) / pv, 0.0, 2f64.powf(c) * n * lg(n) / ps, mem]
        }
        Kernel::ButterflyNtt => {
            let n = p("N");
            [n * lg(n) / pv, 0.0, n * lg(n) / ps, 2.0 * n]
        }
        Kernel::ThreeStepNtt => {
            let (n, r, c) = (p("N"), p("R"), p("C"));
            [n / pv, n * (r + c) / pm, 2.0 * n / pt, 2.0 * n + r * r + c * c]
        }
        Kernel::FiveStepNtt => {
            let (n, r1, r2, c) = (p("N"), p("R1"), p("R2"), p("C"));
            [2.0 * n / pv, n * (r1 + r2 + c) / pm, 3.0 * n / pt, 2.0 * n + r1 * r1 + r2 * r2 + r1 * r2 + c * c]
        }
    }
}

fn wrong(o: &mut Outcome, kernel: Kernel, ok: bool, at: String, gap: bool) {
    if gap {
        o.known_gap(ok, || format!("{kernel} {at}"));
    } else {
        o.require(ok, || format!("{kernel} bottleneck at {at}"));
    }
}

fn big_t(o: &mut Outcome) {
    let hw = HardwareProfile::default();
    let mut formula_checks = 0;
    let mut check = |o: &mut Outcome, cfg: KernelConfig, want: &[Unit]| {
        let r = bigt::predict_spans(&cfg, &hw).unwrap();
        let params = r.config.params.clone();
        let spans = reference_spans(r.config.kernel, &|k| params[k] as f64, &hw);
        for (u, s) in Unit::ALL.into_iter().zip(spans) {
            formula_checks += 1;
            let got = r.span(u);
            o.require((got - s).abs() <= FORMULA_REL_TOL * s.abs().max(1.0), || {
                format!("{} {u} span {got} vs {s}", r.config.kernel)
            });
        }
        want.contains(&r.bottleneck)
    };
    for d in 8..=24u64 {
        let ok = check(o, KernelConfig::new(Kernel::RadixMont).with("D", d), &[Unit::Xlu]);
        wrong(o, Kernel::RadixMont, ok, format!("D={d}"), false);
        let ok = check(o, KernelConfig::new(Kernel::MxuRnsLazy).with("D", d), &[Unit::Vpu]);
        wrong(o, Kernel::MxuRnsLazy, ok, format!("D={d}"), false);
    }
    let mut butterfly_off = 0;
    for log_n in 14..=26u32 {
        let n = 1u64 << log_n;
        if !check(o, KernelConfig::new(Kernel::ButterflyNtt).with("N", n), &[Unit::Xlu]) {
            butterfly_off += 1;
        }
        let ok = check(o, KernelConfig::new(Kernel::ThreeStepNtt).with("N", n), &[Unit::Mxu]);
        wrong(o, Kernel::ThreeStepNtt, ok, format!("N=2^{log_n}"), false);
        let ok = check(o, KernelConfig::new(Kernel::FiveStepNtt).with("N", n), &[Unit::Mxu]);
        wrong(o, Kernel::FiveStepNtt, ok, format!("N=2^{log_n}"), false);
        for c in 6..=16u64 {
            let cfg = KernelConfig::new(Kernel::PresortPpg).with("N", n).with("S", 256).with("c", c);
            let ok = check(o, cfg, &[Unit::Xlu, Unit::Memory]);
            wrong(o, Kernel::PresortPpg, ok, format!("N=2^{log_n} c={c}"), false);
            check(o, KernelConfig::new(Kernel::LsPpg).with("N", n).with("S", 256).with("c", c), &Unit::ALL);
        }
    }
    wrong(o, Kernel::ButterflyNtt, butterfly_off == 0, format!("on VPU, not XLU, for {butterfly_off}/13 sizes"), true);
    o.note(format!("{formula_checks} span values re-evaluated"));
}

fn memory_ratio(o: &mut Outcome) {
    let hw = HardwareProfile::default();
    let mut checked = 0;
    for k in (1..=10_000u64).chain([65_535, 1 << 20, u32::MAX as u64]) {
        for n in [1u64, 1 << 14, 1 << 26, (1 << 40) + 7] {
            checked += 1;
            let r = bigt::memory_span_ratio(n, k, &hw).unwrap();
            o.require(r == k as f64 / 2.0, || format!("K={k} N={n}: {r}"));
        }
    }
    o.note(format!("{checked} (K, N) pairs"));
}

fn operation_counts(o: &mut Outcome) {
    let f = load_field("ntt998244353").unwrap();
    let w = WordField::new(&f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut runs = 0;
    for log_n in 1..=COUNT_MAX_LOG {
        let n = 1usize << log_n;
        let x: Vec<u64> = (0..n).map(|_| rng.gen_range(0..w.modulus())).collect();
        let base = NttPlan::new(&f, n, NttVariant::Butterfly).unwrap();
        let mut variants = vec![NttVariant::Butterfly];
        variants.extend(ntt::three_step_splits(log_n));
        variants.extend(ntt::five_step_splits(log_n));
        for v in variants {
            runs += 1;
            let r = bigt::measure_ntt(w.clone(), &base.with_variant(v).unwrap(), &x, false).unwrap();
            let expected = match v {
                NttVariant::Butterfly => (n / 2 * log_n as usize) as u64,
                NttVariant::ThreeStep { r, c } => (n * (r + c) + n) as u64,
                NttVariant::FiveStep { r1, r2, c } => (n * (r1 + r2 + c) + 2 * n) as u64,
            };
            o.require(r.measured == expected && r.predicted == expected, || {
                format!("N={n} {v}: measured {} expected {expected}", r.measured)
            });
        }
    }
    o.note(format!("{runs} schedules traced"));
}

fn determinism(o: &mut Outcome) {
    let exe = env!("CARGO_BIN_EXE_morph");
    let tmp = tempfile::tempdir().unwrap();
    let read = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<_> = std::fs::read_dir(dir)
            .map(|rd| {
                rd.flatten()
                    .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
                    .collect()
            })
            .unwrap_or_default();
        v.sort();
        v
    };
    let mut outs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let st = Command::new(exe)
            .args(["gen-vectors", "--seed", "42", "--out"])
            .arg(&dir)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        o.require(st.success(), || format!("gen-vectors run {run} exited {st}"));
        outs.push(read(&dir));
    }
    o.require(!outs[0].is_empty() && outs[0] == outs[1], || "gen-vectors output differs between runs".into());
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/vectors");
    o.require(outs[0] == read(&fixtures), || "regenerated vectors differ from shipped fixtures".into());
    let st = Command::new(exe).args(["verify", "--suite", "vectors", "--vectors"]).arg(&fixtures).output().unwrap();
    o.require(st.status.success(), || format!("verify on fixtures exited {}", st.status));
    o.note(format!("{} files byte-identical; verify exit {}", outs[0].len(), st.status.code().unwrap_or(-1)));
}

type Criterion = (u32, &'static str, fn(&mut Outcome));

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "toy lazy reduction exhaustive", toy_lazy_reduction),
        (2, "large-field modmul", large_field_modmul),
        (3, "MSM equals naive", msm_equivalence),
        (4, "bucket-reduction recurrence", bucket_recurrence),
        (5, "NTT variant equivalence", ntt_equivalence),
        (6, "Big-T formulas and bottlenecks", big_t),
        (7, "memory span ratio K/2", memory_ratio),
        (8, "operation counts", operation_counts),
        (9, "determinism gate", determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut ok = true;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let mut o = Outcome::default();
        run(&mut o);
        ok &= report(id, name, &o);
    }
    if !ok {
        std::process::exit(1);
    }
}
