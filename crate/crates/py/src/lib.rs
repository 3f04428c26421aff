//! Python bindings: fields, lazy RNS reduction, Edwards MSM, NTT and the
//! Big-T span model.

use std::collections::BTreeMap;
use std::sync::Arc;

use morph_core::backend::{FieldBackend, RadixMont, RnsLazy, WordField};
use morph_core::bigt::{self, HardwareProfile, Kernel, KernelConfig, Unit};
use morph_core::edwards::{Curve, CurveParams, EdPoint};
use morph_core::field::{self, FieldElement, PrimeField};
use morph_core::lazy::LazyTables;
use morph_core::msm::{self, MsmInstance};
use morph_core::ntt::{self, NttPlan, NttVariant};
use morph_core::{cli, load_field, rns};
use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: morph_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn elem(f: &Arc<PrimeField>, x: &BigUint) -> PyResult<FieldElement> {
    if x >= f.beta() {
        return Err(PyValueError::new_err(format!("{x} is not reduced mod {}", f.beta())));
    }
    Ok(FieldElement::from_biguint(f, x))
}

/// A prime field loaded from the fixtures or built from a modulus.
#[pyclass(name = "Field", frozen)]
struct PyField {
    inner: Arc<PrimeField>,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self { inner: load_field(name).map_err(err)? })
    }

    #[staticmethod]
    fn from_modulus(name: &str, modulus: BigUint) -> PyResult<Self> {
        Ok(Self { inner: PrimeField::new(name, modulus).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn modulus(&self) -> BigUint {
        self.inner.beta().clone()
    }

    #[getter]
    fn bits(&self) -> u64 {
        self.inner.bits()
    }

    #[getter]
    fn two_adicity(&self) -> u32 {
        self.inner.two_adicity()
    }

    /// Product through the radix-2^32 Montgomery kernel.
    fn mul_radix(&self, a: BigUint, b: BigUint) -> PyResult<BigUint> {
        let (a, b) = (elem(&self.inner, &a)?, elem(&self.inner, &b)?);
        let m = field::mont_mul_radix(&a.to_montgomery(), &b.to_montgomery()).map_err(err)?;
        Ok(m.from_montgomery().to_biguint())
    }

    /// Product through the RNS lazy-reduction kernel.
    fn mul_lazy(&self, a: BigUint, b: BigUint) -> PyResult<BigUint> {
        let backend = RnsLazy::for_field(&self.inner, cli::BASIS_SEED).map_err(err)?;
        let (a, b) = (elem(&self.inner, &a)?, elem(&self.inner, &b)?);
        let r = backend.mul(&backend.from_canonical(&a), &backend.from_canonical(&b));
        Ok(backend.to_canonical(&r).to_biguint())
    }

    fn mul_oracle(&self, a: BigUint, b: BigUint) -> PyResult<BigUint> {
        let (a, b) = (elem(&self.inner, &a)?, elem(&self.inner, &b)?);
        Ok(field::modmul_oracle(&a, &b).map_err(err)?.to_biguint())
    }

    fn __repr__(&self) -> String {
        format!("Field({}, {} bits)", self.inner.name(), self.inner.bits())
    }
}

/// Precomputed tables of the matmul-based lazy reduction.
#[pyclass(name = "LazyReducer", frozen)]
struct PyLazyReducer {
    inner: LazyTables,
}

#[pymethods]
impl PyLazyReducer {
    /// The 17 / 45045 toy configuration.
    #[staticmethod]
    fn toy() -> Self {
        Self { inner: LazyTables::toy() }
    }

    #[staticmethod]
    #[pyo3(signature = (field, seed = cli::BASIS_SEED))]
    fn for_field(field: &PyField, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: LazyTables::for_field(&field.inner, seed).map_err(err)? })
    }

    #[getter]
    fn q_moduli(&self) -> Vec<u32> {
        self.inner.basis_q().moduli().to_vec()
    }

    #[getter]
    fn p_moduli(&self) -> Vec<u32> {
        self.inner.basis_p().moduli().to_vec()
    }

    #[getter]
    fn slack_bound(&self) -> u64 {
        self.inner.slack_bound()
    }

    /// Reduces `x` in `[0, Q)` and returns the lifted output value.
    fn reduce(&self, x: BigUint) -> PyResult<BigUint> {
        let v = rns::to_rns(&x, self.inner.basis_q()).map_err(err)?;
        let out = self.inner.lazy_reduce(&v).map_err(err)?;
        Ok(self.inner.lifted_value(&out))
    }

    /// Multiple of the modulus the output carries above the exact value, or
    /// `None` when the output is not congruent.
    fn slack(&self, x: BigUint) -> PyResult<Option<u64>> {
        let v = rns::to_rns(&x, self.inner.basis_q()).map_err(err)?;
        let out = self.inner.lazy_reduce(&v).map_err(err)?;
        Ok(cli::lazy_congruence(&self.inner, &x, &out))
    }

    fn modmul(&self, a: BigUint, b: BigUint) -> PyResult<BigUint> {
        let f = self.inner.field();
        let (a, b) = (elem(f, &a)?, elem(f, &b)?);
        let t = &self.inner;
        let r = t
            .modmul_lazy_checked(&t.encode_element(&a), &t.encode_element(&b))
            .and_then(|v| t.normalize_to_canonical(&v))
            .map_err(err)?;
        Ok(r.to_biguint())
    }
}

type Affine = (BigUint, BigUint);

enum AnyCurve {
    Radix(Curve<RadixMont>),
    Lazy(Curve<RnsLazy>),
}

/// A twisted Edwards curve bound to one arithmetic backend.
#[pyclass(name = "Curve", frozen)]
struct PyCurve {
    inner: AnyCurve,
}

fn to_points<B: FieldBackend>(c: &Curve<B>, pts: &[Affine]) -> PyResult<Vec<EdPoint<B::Elem>>> {
    let f = &c.params().field;
    pts.iter().map(|(x, y)| c.from_affine(&elem(f, x)?, &elem(f, y)?).map_err(err)).collect()
}

fn affine<B: FieldBackend>(c: &Curve<B>, p: &EdPoint<B::Elem>) -> Affine {
    let (x, y) = c.to_affine(p);
    (x.to_biguint(), y.to_biguint())
}

fn run_msm<B: FieldBackend>(
    c: &Curve<B>,
    scalars: Vec<BigUint>,
    points: &[Affine],
    window: Option<u32>,
) -> PyResult<(Affine, BTreeMap<String, u64>)> {
    let bits = scalars.iter().map(|s| s.bits() as u32).max().unwrap_or(1).max(1);
    let inst = MsmInstance::new(scalars, to_points(c, points)?, bits).map_err(err)?;
    let Some(w) = window else {
        return Ok((affine(c, &msm::msm_naive(c, &inst)), BTreeMap::new()));
    };
    let (p, st) = msm::msm(c, &inst, w).map_err(err)?;
    let stats = BTreeMap::from([
        ("windows".to_string(), st.windows as u64),
        ("padds".to_string(), st.total_padds()),
        ("pdbls".to_string(), st.total_pdbls()),
        ("ba_padds".to_string(), st.ba_occupied_padds),
        ("moves".to_string(), st.moves),
    ]);
    Ok((affine(c, &p), stats))
}

#[pymethods]
impl PyCurve {
    #[new]
    #[pyo3(signature = (name, backend = "radix"))]
    fn new(name: &str, backend: &str) -> PyResult<Self> {
        let p = Arc::new(CurveParams::load_named(name).map_err(err)?);
        let inner = match backend {
            "radix" => AnyCurve::Radix(Curve::new(Arc::clone(&p), RadixMont::new(&p.field)).map_err(err)?),
            "lazy" => {
                let b = RnsLazy::for_field(&p.field, cli::BASIS_SEED).map_err(err)?;
                AnyCurve::Lazy(Curve::new(p, b).map_err(err)?)
            }
            other => return Err(PyValueError::new_err(format!("unknown backend {other:?}"))),
        };
        Ok(Self { inner })
    }

    fn generator(&self) -> Option<Affine> {
        match &self.inner {
            AnyCurve::Radix(c) => c.generator().map(|g| affine(c, &g)),
            AnyCurve::Lazy(c) => c.generator().map(|g| affine(c, &g)),
        }
    }

    #[getter]
    fn order(&self) -> Option<BigUint> {
        match &self.inner {
            AnyCurve::Radix(c) => c.params().order.clone(),
            AnyCurve::Lazy(c) => c.params().order.clone(),
        }
    }

    fn add(&self, p: Affine, q: Affine) -> PyResult<Affine> {
        fn go<B: FieldBackend>(c: &Curve<B>, p: Affine, q: Affine) -> PyResult<Affine> {
            let v = to_points(c, &[p, q])?;
            Ok(affine(c, &c.padd(&v[0], &v[1])))
        }
        match &self.inner {
            AnyCurve::Radix(c) => go(c, p, q),
            AnyCurve::Lazy(c) => go(c, p, q),
        }
    }

    fn scalar_mul(&self, k: BigUint, p: Affine) -> PyResult<Affine> {
        fn go<B: FieldBackend>(c: &Curve<B>, k: &BigUint, p: Affine) -> PyResult<Affine> {
            let v = to_points(c, &[p])?;
            Ok(affine(c, &c.scalar_mul(k, &v[0])))
        }
        match &self.inner {
            AnyCurve::Radix(c) => go(c, &k, p),
            AnyCurve::Lazy(c) => go(c, &k, p),
        }
    }

    /// Bucket MSM with window `c`; returns the affine result and run counts.
    fn msm(&self, scalars: Vec<BigUint>, points: Vec<Affine>, c: u32) -> PyResult<(Affine, BTreeMap<String, u64>)> {
        match &self.inner {
            AnyCurve::Radix(k) => run_msm(k, scalars, &points, Some(c)),
            AnyCurve::Lazy(k) => run_msm(k, scalars, &points, Some(c)),
        }
    }

    fn msm_naive(&self, scalars: Vec<BigUint>, points: Vec<Affine>) -> PyResult<Affine> {
        let r = match &self.inner {
            AnyCurve::Radix(k) => run_msm(k, scalars, &points, None),
            AnyCurve::Lazy(k) => run_msm(k, scalars, &points, None),
        };
        Ok(r?.0)
    }
}

fn parse_variant(variant: &str, factors: &[usize], log_n: u32) -> PyResult<NttVariant> {
    let v = match (variant, factors) {
        ("butterfly", []) => NttVariant::Butterfly,
        ("three-step", []) => NttVariant::balanced_three_step(log_n),
        ("three-step", [r, c]) => NttVariant::ThreeStep { r: *r, c: *c },
        ("five-step", []) => NttVariant::balanced_five_step(log_n).map_err(err)?,
        ("five-step", [r1, r2, c]) => NttVariant::FiveStep { r1: *r1, r2: *r2, c: *c },
        _ => return Err(PyValueError::new_err(format!("bad variant {variant:?} with factors {factors:?}"))),
    };
    Ok(v)
}

fn transform<B: FieldBackend>(b: &B, plan: &NttPlan, values: &[BigUint], direct: bool) -> PyResult<Vec<BigUint>> {
    let f = plan.field();
    let x: Vec<B::Elem> = values.iter().map(|v| Ok(b.from_canonical(&elem(f, v)?))).collect::<PyResult<_>>()?;
    let y = if direct { ntt::ntt_direct(b, plan, &x) } else { ntt::ntt(b, plan, &x) }.map_err(err)?;
    Ok(y.iter().map(|e| b.to_canonical(e).to_biguint()).collect())
}

/// Forward NTT of `values` over `field`. `variant` is `butterfly`,
/// `three-step`, `five-step` or `direct`; `factors` overrides the balanced split.
#[pyfunction]
#[pyo3(signature = (field, values, variant = "butterfly", factors = Vec::new()))]
fn ntt_forward(field: &PyField, values: Vec<BigUint>, variant: &str, factors: Vec<usize>) -> PyResult<Vec<BigUint>> {
    let n = values.len();
    if !n.is_power_of_two() {
        return Err(PyValueError::new_err(format!("length {n} is not a power of two")));
    }
    let log_n = n.trailing_zeros();
    let direct = variant == "direct";
    let v = if direct { NttVariant::Butterfly } else { parse_variant(variant, &factors, log_n)? };
    let plan = NttPlan::new(&field.inner, n, v).map_err(err)?;
    match WordField::new(&field.inner) {
        Ok(w) => transform(&w, &plan, &values, direct),
        Err(_) => transform(&RadixMont::new(&field.inner), &plan, &values, direct),
    }
}

/// Big-T spans for one kernel. Returns a dict with per-unit spans, the
/// bottleneck unit and the resolved parameters.
#[pyfunction]
#[pyo3(signature = (kernel, params, bandwidth = None, padd_unit = "VPU"))]
fn predict_spans<'py>(
    py: Python<'py>,
    kernel: &str,
    params: BTreeMap<String, u64>,
    bandwidth: Option<f64>,
    padd_unit: &str,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    use pyo3::types::PyDict;
    let kernel: Kernel = kernel.parse().map_err(err)?;
    let mut cfg = KernelConfig::new(kernel);
    for (k, v) in &params {
        cfg.set(k, *v).map_err(err)?;
    }
    cfg.padd_unit = match padd_unit {
        "VPU" => Unit::Vpu,
        "MXU" => Unit::Mxu,
        other => return Err(PyValueError::new_err(format!("padd_unit must be VPU or MXU, got {other:?}"))),
    };
    let mut hw = HardwareProfile::default();
    if let Some(bw) = bandwidth {
        hw = hw.with_bandwidth(bw);
    }
    let r = bigt::predict_spans(&cfg, &hw).map_err(err)?;
    let out = PyDict::new(py);
    let spans = PyDict::new(py);
    for u in Unit::ALL {
        spans.set_item(u.as_str(), r.span(u))?;
    }
    out.set_item("spans", spans)?;
    out.set_item("bottleneck", r.bottleneck.as_str())?;
    out.set_item("bigt", r.bigt)?;
    out.set_item("params", r.config.params.clone())?;
    out.set_item("memory_calibrated", r.memory_calibrated)?;
    Ok(out)
}

#[pyfunction]
fn memory_span_ratio(n: u64, k: u64) -> PyResult<f64> {
    bigt::memory_span_ratio(n, k, &HardwareProfile::default()).map_err(err)
}

#[pymodule]
pub fn morph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyLazyReducer>()?;
    m.add_class::<PyCurve>()?;
    m.add_function(wrap_pyfunction!(ntt_forward, m)?)?;
    m.add_function(wrap_pyfunction!(predict_spans, m)?)?;
    m.add_function(wrap_pyfunction!(memory_span_ratio, m)?)?;
    Ok(())
}
