use morph::morph as morph_module;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    pyo3::append_to_inittab!(morph_module);
    Python::initialize();
    Python::attach(|py| {
        let globals = PyDict::new(py);
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn module_surface() {
    run(r#"
import morph
f = morph.Field("ed25519")
p = f.modulus
a, b = p - 2, 12345
assert f.mul_radix(a, b) == f.mul_lazy(a, b) == a * b % p

c = morph.Curve("small13")
g = c.generator()
pts = [c.scalar_mul(k, g) for k in range(1, 5)]
got, stats = c.msm([1, 2, 3, 4], pts, 2)
assert got == c.msm_naive([1, 2, 3, 4], pts) == c.scalar_mul(30, g)
assert stats["windows"] == 2

x = [1, 2, 3, 4, 5, 6, 7, 8]
fld = morph.Field("ntt7681")
assert morph.ntt_forward(fld, x, "three-step") == morph.ntt_forward(fld, x, "direct")
assert morph.predict_spans("mxu-rns-lazy", {"D": 12})["bottleneck"] == "VPU"

try:
    morph.Curve("small13", "gpu")
except ValueError:
    pass
else:
    raise AssertionError
"#);
}
