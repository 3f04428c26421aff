//! The `morph` command line: verify, bench, analyze, gen-vectors.
//!
//! Vector files (hex, one record per line, `#` comments):
//!
//! - `modmul.txt`: `field <name>` then `a b a*b`.
//! - `msm-<curve>.txt`: `curve <name>` then the [`InstanceFile`] lines.
//! - `ntt.txt`: `field <name>` and `size <n>`, then `x_i X_i` per index.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::backend::{BackendKind, Counted, FieldBackend, RadixMont, RnsLazy, WordField};
use crate::bigint;
use crate::bigt::{self, HardwareProfile, Kernel, KernelConfig, Unit};
use crate::edwards::{Curve, CurveParams};
use crate::error::{Error, Result};
use crate::field::{self, FieldElement, PrimeField};
use crate::lazy::LazyTables;
use crate::msm::{self, InstanceFile};
use crate::ntt::{self, NttPlan, NttVariant};
use crate::rns;

/// Seed of the RNS basis used by the lazy backend.
pub const BASIS_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "morph", version, about = "Matrix-oriented ZKP kernels: verify, bench, analyze, gen-vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,
    /// Output file (directory for gen-vectors).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the oracle suites; exits 1 on any mismatch.
    Verify(VerifyArgs),
    /// Time kernels and print CSV with operation counts.
    Bench(BenchArgs),
    /// Big-T span reports as CSV.
    Analyze(AnalyzeArgs),
    /// Write golden vector files.
    GenVectors(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    LazyToy,
    LazyField,
    Backend,
    Msm,
    Ntt,
    Vectors,
}

#[derive(Debug, Args, Default)]
pub struct VerifyArgs {
    /// Suites to run (all by default).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suite: Vec<Suite>,
    /// Directory of golden vectors (defaults to `vectors/` under the config root).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// MSM size for the msm suite.
    #[arg(long)]
    pub size: Option<usize>,
    /// MSM window bits.
    #[arg(long)]
    pub window: Option<u32>,
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub curve: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchKernel {
    Modmul,
    Msm,
    Ntt,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "modmul")]
    pub kernel: BenchKernel,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub curve: Option<String>,
    #[arg(long)]
    pub window: Option<u32>,
    /// butterfly, three-step or five-step.
    #[arg(long)]
    pub ntt_variant: Option<String>,
    /// Comma-separated factors: `R,C` or `R1,R2,C`.
    #[arg(long, value_delimiter = ',')]
    pub factors: Vec<usize>,
    /// Check the NTT output against the direct DFT.
    #[arg(long)]
    pub compare_direct: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub kernel: Option<String>,
    /// `name=value`; repeatable.
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// `default` or a profile name under `profiles/`, or a path to a TOML file.
    #[arg(long)]
    pub profile: Option<String>,
    /// `name=a..b`; `2^x..2^y` steps by doubling.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Unit that runs MSM point additions.
    #[arg(long, value_enum)]
    pub padd_unit: Option<PaddUnit>,
    /// Calibrated HBM bandwidth; brings Memory into the argmax.
    #[arg(long)]
    pub bandwidth: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaddUnit {
    Vpu,
    Mxu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VectorKind {
    Modmul,
    Msm,
    Ntt,
    All,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub kind: VectorKind,
    /// Records per file (modmul pairs, MSM terms); 0 writes headers only.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub field: Option<String>,
    /// Curves to emit MSM vectors for (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub curve: Vec<String>,
    #[arg(long)]
    pub ntt_field: Option<String>,
    #[arg(long)]
    pub ntt_size: Option<usize>,
}

/// Values a `--config` file may set.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub field: Option<String>,
    pub curve: Option<String>,
    pub ntt_field: Option<String>,
    pub size: Option<usize>,
    pub window: Option<u32>,
    pub ntt_size: Option<usize>,
    pub ntt_variant: Option<String>,
    pub factors: Option<Vec<usize>>,
    pub count: Option<usize>,
    pub repeats: Option<usize>,
    pub vectors: Option<PathBuf>,
    pub kernel: Option<String>,
    pub profile: Option<String>,
    pub padd_unit: Option<PaddUnit>,
    pub bandwidth: Option<f64>,
    #[serde(default)]
    pub params: BTreeMap<String, u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Command result: text to emit and whether verification failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub report: String,
    pub failed: bool,
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    backend: Option<BackendKind>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn backends(&self) -> Vec<BackendKind> {
        match self.backend {
            Some(b) => vec![b],
            None => vec![BackendKind::RadixMont, BackendKind::RnsLazy],
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn parse_backend(s: &str) -> Result<BackendKind> {
    BackendKind::from_str(s, true).map_err(|_| Error::Config(format!("unknown backend {s:?}")))
}

fn load_curve(name: &str) -> Result<Arc<CurveParams>> {
    Ok(Arc::new(CurveParams::load_named(name)?))
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let backend = match (cli.backend, &cfg.backend) {
        (Some(b), _) => Some(b),
        (None, Some(s)) => Some(parse_backend(s)?),
        (None, None) => None,
    };
    let ctx = Ctx { seed: cli.seed.or(cfg.seed).unwrap_or(42), backend, out: cli.out.clone(), cfg };
    let outcome = match &cli.command {
        Command::Verify(a) => cmd_verify(&ctx, a)?,
        Command::Bench(a) => cmd_bench(&ctx, a)?,
        Command::Analyze(a) => cmd_analyze(&ctx, a)?,
        Command::GenVectors(a) => return cmd_gen_vectors(&ctx, a),
    };
    if let Some(path) = &ctx.out {
        std::fs::write(path, &outcome.report).map_err(|e| Error::io(path, e))?;
    }
    Ok(outcome)
}

// ---------------------------------------------------------------- verify

/// Pass count of one suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: String,
    pub passed: u64,
    pub total: u64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), passed: 0, total: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.failures.len() < 10 {
            self.failures.push(what());
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

fn cmd_verify(ctx: &Ctx, args: &VerifyArgs) -> Result<Outcome> {
    let suites = if args.suite.is_empty() {
        vec![Suite::LazyToy, Suite::LazyField, Suite::Backend, Suite::Msm, Suite::Ntt, Suite::Vectors]
    } else {
        args.suite.clone()
    };
    let reports: Vec<Result<Vec<SuiteReport>>> = suites
        .par_iter()
        .map(|s| match s {
            Suite::LazyToy => Ok(vec![verify_lazy_toy()]),
            Suite::LazyField => verify_lazy_field(ctx, args).map(|r| vec![r]),
            Suite::Backend => verify_backends(ctx, args).map(|r| vec![r]),
            Suite::Msm => verify_msm(ctx, args),
            Suite::Ntt => verify_ntt(ctx).map(|r| vec![r]),
            Suite::Vectors => verify_vector_dir(ctx, args),
        })
        .collect();
    let mut out = Outcome::default();
    for r in reports {
        for s in r? {
            let status = if s.ok() { "PASS" } else { "FAIL" };
            let _ = writeln!(out.report, "{status} {}: {}/{}", s.name, s.passed, s.total);
            for f in &s.failures {
                let _ = writeln!(out.report, "  {f}");
            }
            out.failed |= !s.ok();
        }
    }
    Ok(out)
}

/// `(x * 2^-w mod Q) mod beta` and the multiple of beta the lazy output carries.
pub fn lazy_congruence(t: &LazyTables, x: &BigUint, out: &rns::RnsVector) -> Option<u64> {
    let q = t.basis_q().product();
    let beta = t.field().beta();
    let y = bigint::mod_inverse(&((BigUint::one() << t.w()) % q), q)?;
    let target = (x * y % q) % beta;
    let lifted = t.lifted_value(out);
    if lifted < target {
        return None;
    }
    let diff = lifted - target;
    if !(&diff % beta).is_zero() {
        return None;
    }
    num_traits::ToPrimitive::to_u64(&(diff / beta))
}

fn verify_lazy_toy() -> SuiteReport {
    let t = LazyTables::toy();
    let q = t.basis_q().product().clone();
    let mut rep = SuiteReport::new("lazy-toy exhaustive congruence");
    let limit = num_traits::ToPrimitive::to_u64(&q).unwrap_or(0);
    for x in 0..limit {
        let xb = BigUint::from(x);
        let ok = rns::to_rns(&xb, t.basis_q())
            .and_then(|v| t.lazy_reduce(&v))
            .ok()
            .and_then(|out| lazy_congruence(&t, &xb, &out))
            .is_some_and(|m| m <= t.slack_bound());
        rep.check(ok, || format!("x = {x}"));
    }
    rep
}

fn verify_lazy_field(ctx: &Ctx, args: &VerifyArgs) -> Result<SuiteReport> {
    let name = args.field.clone().or(ctx.cfg.field.clone()).unwrap_or_else(|| "ed25519".into());
    let f = crate::load_field(&name)?;
    let t = LazyTables::for_field(&f, BASIS_SEED)?;
    let mut rng = ctx.rng(1);
    let mut rep = SuiteReport::new(format!("lazy-field modmul {name}"));
    for i in 0..1000 {
        let a = FieldElement::random(&f, &mut rng);
        let b = FieldElement::random(&f, &mut rng);
        let got = t
            .modmul_lazy_checked(&t.encode_element(&a), &t.encode_element(&b))
            .and_then(|v| t.normalize_to_canonical(&v));
        let want = field::modmul_oracle(&a, &b)?;
        rep.check(got.is_ok_and(|g| g == want), || format!("pair {i}"));
    }
    Ok(rep)
}

fn verify_backends(ctx: &Ctx, args: &VerifyArgs) -> Result<SuiteReport> {
    let name = args.field.clone().or(ctx.cfg.field.clone()).unwrap_or_else(|| "ed25519".into());
    let f = crate::load_field(&name)?;
    let radix = RadixMont::new(&f);
    let lazy = RnsLazy::for_field(&f, BASIS_SEED)?;
    let mut rng = ctx.rng(2);
    let mut rep = SuiteReport::new(format!("backend equivalence {name}"));
    for i in 0..200 {
        let a = FieldElement::random(&f, &mut rng);
        let b = FieldElement::random(&f, &mut rng);
        let want = field::modmul_oracle(&a, &b)?;
        let r = radix.to_canonical(&radix.mul(&radix.from_canonical(&a), &radix.from_canonical(&b)));
        let l = lazy.to_canonical(&lazy.mul(&lazy.from_canonical(&a), &lazy.from_canonical(&b)));
        rep.check(r == want && l == want, || format!("pair {i}"));
    }
    Ok(rep)
}

fn scalar_bits_for(params: &CurveParams) -> u32 {
    params.order.as_ref().map(|o| o.bits() as u32).unwrap_or(params.field.bits() as u32).max(1)
}

fn msm_check<B: FieldBackend>(
    params: &Arc<CurveParams>,
    backend: B,
    n: usize,
    c: u32,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let curve = Curve::new(Arc::clone(params), backend)?;
    let inst = msm::random_instance(&curve, n, scalar_bits_for(params), rng);
    let (got, _) = msm::msm(&curve, &inst, c)?;
    Ok(curve.eq_points(&got, &msm::msm_naive(&curve, &inst)))
}

fn verify_msm(ctx: &Ctx, args: &VerifyArgs) -> Result<Vec<SuiteReport>> {
    let name = args.curve.clone().or(ctx.cfg.curve.clone()).unwrap_or_else(|| "small13".into());
    let params = load_curve(&name)?;
    let n = args.size.or(ctx.cfg.size).unwrap_or(1024);
    let c = args.window.or(ctx.cfg.window).unwrap_or(4);
    let mut out = Vec::new();
    for kind in ctx.backends() {
        let mut rng = ctx.rng(3);
        let ok = match kind {
            BackendKind::RadixMont => msm_check(&params, RadixMont::new(&params.field), n, c, &mut rng)?,
            BackendKind::RnsLazy => msm_check(&params, RnsLazy::for_field(&params.field, BASIS_SEED)?, n, c, &mut rng)?,
        };
        let mut rep = SuiteReport::new(format!("msm vs naive {name} N={n} c={c} {kind}"));
        rep.check(ok, || "msm result differs from the naive sum".into());
        out.push(rep);
    }
    Ok(out)
}

fn verify_ntt(ctx: &Ctx) -> Result<SuiteReport> {
    let name = ctx.cfg.ntt_field.clone().unwrap_or_else(|| "ntt998244353".into());
    let f = crate::load_field(&name)?;
    let word = WordField::new(&f)?;
    let mut rng = ctx.rng(4);
    let max_log = ctx.cfg.ntt_size.map(|n| n.trailing_zeros()).unwrap_or(10).min(f.two_adicity());
    let mut rep = SuiteReport::new(format!("ntt variants vs direct {name} N<=2^{max_log}"));
    for log_n in 1..=max_log {
        let n = 1usize << log_n;
        let base = NttPlan::new(&f, n, NttVariant::Butterfly)?;
        let x: Vec<u64> = (0..n).map(|_| rng.gen_range(0..word.modulus())).collect();
        let want = ntt::ntt_direct(&word, &base, &x)?;
        let mut variants = vec![NttVariant::Butterfly];
        variants.extend(ntt::three_step_splits(log_n));
        variants.extend(ntt::five_step_splits(log_n));
        for v in variants {
            let got = ntt::ntt(&word, &base.with_variant(v)?, &x)?;
            rep.check(got == want, || format!("N={n} {v}"));
        }
    }
    // the lazy RNS backend runs the matrix variants too
    let lazy = RnsLazy::for_field(&f, BASIS_SEED)?;
    let n: usize = 64.min(1 << max_log);
    if n >= 8 {
        let log_n = n.trailing_zeros();
        let base = NttPlan::new(&f, n, NttVariant::Butterfly)?;
        let x: Vec<u64> = (0..n).map(|_| rng.gen_range(0..word.modulus())).collect();
        let want = ntt::ntt_direct(&word, &base, &x)?;
        let lx: Vec<_> = x.iter().map(|&v| lazy.from_u64(v)).collect();
        for v in [NttVariant::balanced_three_step(log_n), NttVariant::balanced_five_step(log_n)?] {
            let got: Vec<u64> = ntt::ntt(&lazy, &base.with_variant(v)?, &lx)?
                .iter()
                .map(|e| word.from_canonical(&lazy.to_canonical(e)))
                .collect();
            rep.check(got == want, || format!("rns-lazy N={n} {v}"));
        }
    }
    Ok(rep)
}

fn vector_dir(ctx: &Ctx, args: &VerifyArgs) -> PathBuf {
    args.vectors.clone().or(ctx.cfg.vectors.clone()).unwrap_or_else(|| crate::config_root().join("vectors"))
}

fn verify_vector_dir(ctx: &Ctx, args: &VerifyArgs) -> Result<Vec<SuiteReport>> {
    let dir = vector_dir(ctx, args);
    if !dir.is_dir() {
        return Err(Error::io(&dir, std::io::Error::new(std::io::ErrorKind::NotFound, "no vector directory")));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    files.iter().map(|p| verify_vector_file(p)).collect()
}

/// Checks one golden vector file; malformed records count as failures.
pub fn verify_vector_file(path: &Path) -> Result<SuiteReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let label = format!("vectors {}", path.file_name().and_then(|s| s.to_str()).unwrap_or(""));
    let mut rep = SuiteReport::new(label);
    let result = if stem == "modmul" {
        check_modmul_vectors(&text, &mut rep)
    } else if stem.starts_with("msm") {
        check_msm_vectors(&text, &mut rep)
    } else if stem == "ntt" {
        check_ntt_vectors(&text, &mut rep)
    } else {
        Err(Error::Parse(format!("unrecognized vector file {}", path.display())))
    };
    if let Err(e) = result {
        rep.check(false, || e.to_string());
    }
    Ok(rep)
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn header<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str> {
    let l = lines.next().ok_or_else(|| Error::Parse(format!("missing `{key}` header")))?;
    l.strip_prefix(key)
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::Parse(format!("expected `{key} <value>`, got {l:?}")))
}

fn check_modmul_vectors(text: &str, rep: &mut SuiteReport) -> Result<()> {
    let mut lines = content_lines(text);
    let f = crate::load_field(header(&mut lines, "field")?)?;
    let lazy = RnsLazy::for_field(&f, BASIS_SEED)?;
    let radix = RadixMont::new(&f);
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            [a, b, c] => (|| {
                Ok::<_, Error>((
                    FieldElement::from_hex(&f, a)?,
                    FieldElement::from_hex(&f, b)?,
                    FieldElement::from_hex(&f, c)?,
                ))
            })(),
            _ => Err(Error::Parse("expected `a b product`".into())),
        };
        let ok = match &parsed {
            Ok((a, b, c)) => {
                let r = radix.to_canonical(&radix.mul(&radix.from_canonical(a), &radix.from_canonical(b)));
                let l = lazy.to_canonical(&lazy.mul(&lazy.from_canonical(a), &lazy.from_canonical(b)));
                &r == c && &l == c
            }
            Err(_) => false,
        };
        rep.check(ok, || match parsed {
            Err(e) => format!("record {i}: {e}"),
            Ok(_) => format!("record {i}: product mismatch"),
        });
    }
    Ok(())
}

fn check_msm_vectors(text: &str, rep: &mut SuiteReport) -> Result<()> {
    let mut lines = content_lines(text);
    let name = header(&mut lines, "curve")?.to_string();
    let params = load_curve(&name)?;
    let body: String =
        text.lines().filter(|l| !l.trim_start().starts_with("curve")).map(|l| format!("{l}\n")).collect();
    let file = InstanceFile::parse(&params.field, &body)?;
    let curve = Curve::new(Arc::clone(&params), RadixMont::new(&params.field))?;
    let Some((ex, ey)) = &file.expect else {
        return Err(Error::Parse("missing `expect` line".into()));
    };
    for (i, (x, y)) in file.points.iter().enumerate() {
        rep.check(params.is_on_curve_affine(x, y), || format!("record {i}: point off the curve"));
    }
    if file.scalars.is_empty() {
        rep.check(ex.is_zero() && ey.to_biguint().is_one(), || "empty instance must expect the identity".into());
        return Ok(());
    }
    let inst = file.to_instance(&curve)?;
    let want = curve.from_affine(ex, ey)?;
    for c in [2, 4] {
        let (got, _) = msm::msm(&curve, &inst, c)?;
        rep.check(curve.eq_points(&got, &want), || format!("msm c={c} differs from expect"));
    }
    Ok(())
}

fn check_ntt_vectors(text: &str, rep: &mut SuiteReport) -> Result<()> {
    let mut lines = content_lines(text);
    let f = crate::load_field(header(&mut lines, "field")?)?;
    let n: usize = header(&mut lines, "size")?.parse().map_err(|_| Error::Parse("bad size".into()))?;
    let mut xs = Vec::new();
    let mut want = Vec::new();
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = parts.as_slice() else {
            return Err(Error::Parse(format!("record {i}: expected `x X`")));
        };
        xs.push(FieldElement::from_hex(&f, a).map_err(|e| Error::Parse(format!("record {i}: {e}")))?);
        want.push(FieldElement::from_hex(&f, b).map_err(|e| Error::Parse(format!("record {i}: {e}")))?);
    }
    if xs.len() != n {
        return Err(Error::Length { expected: n, got: xs.len() });
    }
    if n == 0 {
        return Ok(());
    }
    let radix = RadixMont::new(&f);
    let ex: Vec<_> = xs.iter().map(|x| radix.from_canonical(x)).collect();
    let log_n = n.trailing_zeros();
    let base = NttPlan::new(&f, n, NttVariant::Butterfly)?;
    let mut variants = vec![NttVariant::Butterfly, NttVariant::balanced_three_step(log_n)];
    if log_n >= 3 {
        variants.push(NttVariant::balanced_five_step(log_n)?);
    }
    for v in variants {
        let got: Vec<FieldElement> =
            ntt::ntt(&radix, &base.with_variant(v)?, &ex)?.iter().map(|e| radix.to_canonical(e)).collect();
        match got.iter().zip(&want).position(|(g, w)| g != w) {
            None => rep.check(true, String::new),
            Some(i) => rep.check(false, || format!("{v}: record {i} differs")),
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- bench

pub const BENCH_HEADER: &str =
    "kernel,size,backend,median_ns,repeats,low_confidence,field_muls,field_adds,matmul_macs,digit_mults,point_ops";

struct BenchRow {
    kernel: String,
    size: usize,
    backend: String,
    median_ns: u128,
    repeats: usize,
    counts: bigt::CountReport,
}

impl BenchRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            self.kernel,
            self.size,
            self.backend,
            self.median_ns,
            self.repeats,
            self.repeats < 5,
            self.counts.field_muls,
            self.counts.field_adds,
            self.counts.matmul_macs,
            self.counts.digit_mults,
            self.counts.point_ops,
        )
    }
}

fn time_median(warmup: usize, repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<u128> {
    for _ in 0..warmup {
        f()?;
    }
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        f()?;
        samples.push(t.elapsed().as_nanos());
    }
    samples.sort_unstable();
    Ok(samples[samples.len() / 2])
}

fn bench_modmul<B: FieldBackend>(
    b: B,
    f: &Arc<PrimeField>,
    size: usize,
    args: &BenchArgs,
    reps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BenchRow> {
    let xs: Vec<B::Elem> = (0..size).map(|_| b.from_canonical(&FieldElement::random(f, rng))).collect();
    let ys: Vec<B::Elem> = (0..size).map(|_| b.from_canonical(&FieldElement::random(f, rng))).collect();
    let name = b.name().to_string();
    let median = time_median(args.warmup, reps, || {
        let out: Vec<B::Elem> = xs.par_iter().zip(&ys).map(|(x, y)| b.mul(x, y)).collect();
        std::hint::black_box(out);
        Ok(())
    })?;
    Ok(BenchRow {
        kernel: "modmul".into(),
        size,
        backend: name,
        median_ns: median,
        repeats: reps,
        counts: bigt::measure_modmul(b, &xs, &ys),
    })
}

fn bench_msm<B: FieldBackend>(
    params: &Arc<CurveParams>,
    b: B,
    size: usize,
    c: u32,
    args: &BenchArgs,
    reps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BenchRow> {
    let curve = Curve::new(Arc::clone(params), Counted::new(b))?;
    let inst = msm::random_instance(&curve, size, scalar_bits_for(params), rng);
    let median = time_median(args.warmup, reps, || msm::msm(&curve, &inst, c).map(|_| ()))?;
    curve.backend().reset();
    let (_, stats) = msm::msm(&curve, &inst, c)?;
    let fc = curve.backend().counts();
    let mut counts = bigt::measure_msm(&stats, size as u64);
    counts.field_muls = fc.field_muls;
    counts.field_adds = fc.field_adds;
    counts.matmul_macs = fc.matmul_macs;
    counts.digit_mults = fc.digit_mults;
    Ok(BenchRow {
        kernel: format!("msm-c{c}"),
        size,
        backend: curve.backend().name().into(),
        median_ns: median,
        repeats: reps,
        counts,
    })
}

fn bench_ntt<B: FieldBackend + Clone>(
    b: B,
    plan: &NttPlan,
    args: &BenchArgs,
    reps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BenchRow> {
    let f = plan.field();
    let x: Vec<B::Elem> = (0..plan.n()).map(|_| b.from_canonical(&FieldElement::random(f, rng))).collect();
    let median = time_median(args.warmup, reps, || ntt::ntt(&b, plan, &x).map(|_| ()))?;
    if args.compare_direct {
        let got = ntt::ntt(&b, plan, &x)?;
        let want = ntt::ntt_direct(&b, plan, &x)?;
        if got.iter().zip(&want).any(|(g, w)| !b.eq(g, w)) {
            return Err(Error::Domain(format!("{} disagrees with the direct DFT", plan.variant())));
        }
    }
    Ok(BenchRow {
        kernel: format!("ntt-{}", plan.variant().name()),
        size: plan.n(),
        backend: b.name().into(),
        median_ns: median,
        repeats: reps,
        counts: bigt::measure_ntt(b, plan, &x, false)?,
    })
}

fn ntt_variant(name: &str, log_n: u32, factors: &[usize]) -> Result<NttVariant> {
    match (name, factors) {
        ("butterfly", _) => Ok(NttVariant::Butterfly),
        ("three-step", []) => Ok(NttVariant::balanced_three_step(log_n)),
        ("three-step", [r, c]) => Ok(NttVariant::ThreeStep { r: *r, c: *c }),
        ("five-step", []) => NttVariant::balanced_five_step(log_n),
        ("five-step", [r1, r2, c]) => Ok(NttVariant::FiveStep { r1: *r1, r2: *r2, c: *c }),
        (v, f) => Err(Error::Config(format!("variant {v:?} with factors {f:?}"))),
    }
}

fn cmd_bench(ctx: &Ctx, args: &BenchArgs) -> Result<Outcome> {
    let reps = args.repeats.or(ctx.cfg.repeats).unwrap_or(5);
    let mut rows = Vec::new();
    for kind in ctx.backends() {
        let mut rng = ctx.rng(10);
        let row = match args.kernel {
            BenchKernel::Modmul => {
                let name = args.field.clone().or(ctx.cfg.field.clone()).unwrap_or_else(|| "ed25519".into());
                let f = crate::load_field(&name)?;
                let size = args.size.or(ctx.cfg.size).unwrap_or(1 << 16);
                match kind {
                    BackendKind::RadixMont => bench_modmul(RadixMont::new(&f), &f, size, args, reps, &mut rng)?,
                    BackendKind::RnsLazy => {
                        bench_modmul(RnsLazy::for_field(&f, BASIS_SEED)?, &f, size, args, reps, &mut rng)?
                    }
                }
            }
            BenchKernel::Msm => {
                let name = args.curve.clone().or(ctx.cfg.curve.clone()).unwrap_or_else(|| "small13".into());
                let params = load_curve(&name)?;
                let size = args.size.or(ctx.cfg.size).unwrap_or(1024);
                let c = args.window.or(ctx.cfg.window).unwrap_or(4);
                match kind {
                    BackendKind::RadixMont => {
                        bench_msm(&params, RadixMont::new(&params.field), size, c, args, reps, &mut rng)?
                    }
                    BackendKind::RnsLazy => bench_msm(
                        &params,
                        RnsLazy::for_field(&params.field, BASIS_SEED)?,
                        size,
                        c,
                        args,
                        reps,
                        &mut rng,
                    )?,
                }
            }
            BenchKernel::Ntt => {
                let name = args.field.clone().or(ctx.cfg.ntt_field.clone()).unwrap_or_else(|| "ntt998244353".into());
                let f = crate::load_field(&name)?;
                let n = args.size.or(ctx.cfg.ntt_size).unwrap_or(1 << 12);
                if !n.is_power_of_two() {
                    return Err(Error::UnsupportedSize { n, reason: "size must be a power of two".into() });
                }
                let vname =
                    args.ntt_variant.clone().or(ctx.cfg.ntt_variant.clone()).unwrap_or_else(|| "five-step".into());
                let factors = if args.factors.is_empty() {
                    ctx.cfg.factors.clone().unwrap_or_default()
                } else {
                    args.factors.clone()
                };
                let plan = NttPlan::new(&f, n, ntt_variant(&vname, n.trailing_zeros(), &factors)?)?;
                match kind {
                    BackendKind::RadixMont => bench_ntt(RadixMont::new(&f), &plan, args, reps, &mut rng)?,
                    BackendKind::RnsLazy => {
                        bench_ntt(RnsLazy::for_field(&f, BASIS_SEED)?, &plan, args, reps, &mut rng)?
                    }
                }
            }
        };
        rows.push(row);
    }
    let mut report = format!("{BENCH_HEADER}\n");
    for r in &rows {
        report.push_str(&r.csv());
    }
    Ok(Outcome { report, failed: false })
}

// ---------------------------------------------------------------- analyze

fn cmd_analyze(ctx: &Ctx, args: &AnalyzeArgs) -> Result<Outcome> {
    let mut profile = match args.profile.clone().or(ctx.cfg.profile.clone()) {
        None => HardwareProfile::default(),
        Some(p) if p.ends_with(".toml") => HardwareProfile::load(&p)?,
        Some(p) => HardwareProfile::named(&p)?,
    };
    if let Some(bw) = args.bandwidth.or(ctx.cfg.bandwidth) {
        profile = profile.with_bandwidth(bw);
    }
    let kernels: Vec<Kernel> = match args.kernel.clone().or(ctx.cfg.kernel.clone()) {
        Some(k) if k != "all" => vec![k.parse()?],
        _ => Kernel::ALL.to_vec(),
    };
    let mut configs = Vec::new();
    for kernel in kernels {
        let mut cfg = KernelConfig::new(kernel);
        for (k, v) in &ctx.cfg.params {
            cfg.set(k, *v)?;
        }
        for p in &args.params {
            cfg.set_pair(p)?;
        }
        cfg.padd_unit = match args.padd_unit.or(ctx.cfg.padd_unit) {
            Some(PaddUnit::Mxu) => Unit::Mxu,
            _ => Unit::Vpu,
        };
        match &args.sweep {
            Some(s) => {
                let (name, values) = bigt::parse_range(s)?;
                configs.extend(bigt::sweep_range(&cfg, &name, &values)?);
            }
            None => configs.push(cfg),
        }
    }
    let reports = bigt::sweep(&configs, &profile)?;
    Ok(Outcome { report: bigt::to_csv(&reports), failed: false })
}

// ---------------------------------------------------------------- gen-vectors

/// Golden modmul vectors: random pairs with oracle products.
pub fn modmul_vectors(f: &Arc<PrimeField>, count: usize, rng: &mut ChaCha8Rng) -> Result<String> {
    let mut s = String::from("# morph modmul vectors: a b a*b mod beta (hex)\n");
    let _ = writeln!(s, "field {}", f.name());
    for _ in 0..count {
        let a = FieldElement::random(f, rng);
        let b = FieldElement::random(f, rng);
        let c = field::modmul_oracle(&a, &b)?;
        let _ = writeln!(s, "{} {} {}", a.to_hex(), b.to_hex(), c.to_hex());
    }
    Ok(s)
}

/// Golden MSM instance with the naive sum as the expected point.
pub fn msm_vectors(params: &Arc<CurveParams>, count: usize, rng: &mut ChaCha8Rng) -> Result<String> {
    let curve = Curve::new(Arc::clone(params), RadixMont::new(&params.field))?;
    let file = if count == 0 {
        InstanceFile {
            scalar_bits: scalar_bits_for(params),
            scalars: Vec::new(),
            points: Vec::new(),
            expect: Some((FieldElement::zero(&params.field), FieldElement::one(&params.field))),
        }
    } else {
        let inst = msm::random_instance(&curve, count, scalar_bits_for(params), rng);
        let want = msm::msm_naive(&curve, &inst);
        InstanceFile::from_instance(&curve, &inst, Some(&want))
    };
    Ok(format!("curve {}\n{}", params.name, file.format()))
}

/// Golden NTT vector from the direct DFT.
pub fn ntt_vectors(f: &Arc<PrimeField>, n: usize, rng: &mut ChaCha8Rng) -> Result<String> {
    let mut s = String::from("# morph ntt vectors: x_i X_i (hex), X = direct DFT of x\n");
    let _ = writeln!(s, "field {}", f.name());
    let _ = writeln!(s, "size {n}");
    if n == 0 {
        return Ok(s);
    }
    let plan = NttPlan::new(f, n, NttVariant::Butterfly)?;
    let radix = RadixMont::new(f);
    let xs: Vec<FieldElement> = (0..n).map(|_| FieldElement::random(f, rng)).collect();
    let ex: Vec<_> = xs.iter().map(|x| radix.from_canonical(x)).collect();
    let ys = ntt::ntt_direct(&radix, &plan, &ex)?;
    for (x, y) in xs.iter().zip(&ys) {
        let _ = writeln!(s, "{} {}", x.to_hex(), radix.to_canonical(y).to_hex());
    }
    Ok(s)
}

fn cmd_gen_vectors(ctx: &Ctx, args: &GenArgs) -> Result<Outcome> {
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("vectors"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let count = args.count.or(ctx.cfg.count).unwrap_or(100);
    let want = |k: VectorKind| args.kind == VectorKind::All || args.kind == k;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    if want(VectorKind::Modmul) {
        let name = args.field.clone().or(ctx.cfg.field.clone()).unwrap_or_else(|| "ed25519".into());
        let f = crate::load_field(&name)?;
        files.push((dir.join("modmul.txt"), modmul_vectors(&f, count, &mut ctx.rng(20))?));
    }
    if want(VectorKind::Msm) {
        let curves = if !args.curve.is_empty() {
            args.curve.clone()
        } else if let Some(c) = &ctx.cfg.curve {
            vec![c.clone()]
        } else {
            vec!["small13".into(), "ed25519".into()]
        };
        for (i, name) in curves.iter().enumerate() {
            let params = load_curve(name)?;
            let text = msm_vectors(&params, count, &mut ctx.rng(21 + i as u64))?;
            files.push((dir.join(format!("msm-{name}.txt")), text));
        }
    }
    if want(VectorKind::Ntt) {
        let name = args.ntt_field.clone().or(ctx.cfg.ntt_field.clone()).unwrap_or_else(|| "ntt998244353".into());
        let f = crate::load_field(&name)?;
        let n = if count == 0 { 0 } else { args.ntt_size.or(ctx.cfg.ntt_size).unwrap_or(64) };
        files.push((dir.join("ntt.txt"), ntt_vectors(&f, n, &mut ctx.rng(40))?));
    }
    let mut report = String::new();
    for (path, text) in files {
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let _ = writeln!(report, "wrote {}", path.display());
    }
    Ok(Outcome { report, failed: false })
}
