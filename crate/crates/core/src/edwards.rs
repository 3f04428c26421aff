//! Twisted Edwards curves `a x^2 + y^2 = 1 + d x^2 y^2` in extended coordinates.

use std::path::Path;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::backend::FieldBackend;
use crate::bigint;
use crate::error::{Error, Result};
use crate::field::{self, FieldElement, PrimeField};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CurveFile {
    name: String,
    /// Name of a file under `fields/`.
    field: String,
    a: String,
    d: String,
    #[serde(default)]
    gx: Option<String>,
    #[serde(default)]
    gy: Option<String>,
    /// Order of the generator.
    #[serde(default)]
    order: Option<String>,
}

/// Curve coefficients plus an optional generator, all canonical.
#[derive(Clone, Debug)]
pub struct CurveParams {
    pub name: String,
    pub field: Arc<PrimeField>,
    pub a: FieldElement,
    pub d: FieldElement,
    pub generator: Option<(FieldElement, FieldElement)>,
    pub order: Option<BigUint>,
}

impl CurveParams {
    pub fn new(name: impl Into<String>, field: &Arc<PrimeField>, a: FieldElement, d: FieldElement) -> Result<Self> {
        if a == d {
            return Err(Error::Construction("curve needs a != d".into()));
        }
        if d.is_zero() || a.is_zero() {
            return Err(Error::Construction("curve needs nonzero a and d".into()));
        }
        if d.is_square() {
            return Err(Error::Construction("d must be a non-square for complete addition".into()));
        }
        Ok(Self { name: name.into(), field: Arc::clone(field), a, d, generator: None, order: None })
    }

    /// Reads a curve file; its field is resolved in the sibling `fields/` directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: CurveFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let root = path
            .parent()
            .and_then(Path::parent)
            .ok_or_else(|| Error::Config("curve file must live in <root>/curves/".into()))?;
        let field = PrimeField::load(root.join("fields").join(format!("{}.toml", file.field)))?;
        let a = FieldElement::from_hex(&field, &file.a)?;
        let d = FieldElement::from_hex(&field, &file.d)?;
        let mut params = Self::new(file.name, &field, a, d)?;
        if let (Some(gx), Some(gy)) = (&file.gx, &file.gy) {
            let g = (FieldElement::from_hex(&field, gx)?, FieldElement::from_hex(&field, gy)?);
            if !params.is_on_curve_affine(&g.0, &g.1) {
                return Err(Error::Config(format!("{}: generator is not on the curve", path.display())));
            }
            params.generator = Some(g);
        }
        params.order = file.order.as_deref().map(bigint::parse_hex).transpose()?;
        Ok(params)
    }

    /// Loads `curves/<name>.toml` from the config root.
    pub fn load_named(name: &str) -> Result<Self> {
        Self::load(crate::config_root().join("curves").join(format!("{name}.toml")))
    }

    pub fn is_on_curve_affine(&self, x: &FieldElement, y: &FieldElement) -> bool {
        let m = |p: &FieldElement, q: &FieldElement| field::modmul_oracle(p, q).expect("same field");
        let (x2, y2) = (m(x, x), m(y, y));
        let lhs = field::add_mod(&m(&self.a, &x2), &y2).expect("same field");
        let rhs = field::add_mod(&FieldElement::one(&self.field), &m(&self.d, &m(&x2, &y2))).expect("same field");
        lhs == rhs
    }

    /// Every affine point, by brute force. Only sensible for tiny fields.
    pub fn enumerate_affine(&self) -> Vec<(FieldElement, FieldElement)> {
        let p = self.field.beta().to_u64().expect("tiny field");
        let mut out = Vec::new();
        for x in 0..p {
            for y in 0..p {
                let (x, y) = (FieldElement::from_u64(&self.field, x), FieldElement::from_u64(&self.field, y));
                if self.is_on_curve_affine(&x, &y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Textbook affine addition, used as an oracle.
    pub fn affine_add(
        &self,
        p: &(FieldElement, FieldElement),
        q: &(FieldElement, FieldElement),
    ) -> (FieldElement, FieldElement) {
        let m = |p: &FieldElement, q: &FieldElement| field::modmul_oracle(p, q).expect("same field");
        let one = FieldElement::one(&self.field);
        let t = m(&self.d, &m(&m(&p.0, &q.0), &m(&p.1, &q.1)));
        let xn = field::add_mod(&m(&p.0, &q.1), &m(&p.1, &q.0)).expect("same field");
        let yn = field::sub_mod(&m(&p.1, &q.1), &m(&self.a, &m(&p.0, &q.0))).expect("same field");
        let xd = field::add_mod(&one, &t).expect("same field").inv().expect("complete curve");
        let yd = field::sub_mod(&one, &t).expect("same field").inv().expect("complete curve");
        (m(&xn, &xd), m(&yn, &yd))
    }
}

/// Smallest `(a, d)` with `a = -1` and `d` a non-square, over a small prime field.
pub fn search_small_curve(field: &Arc<PrimeField>) -> Result<(FieldElement, FieldElement)> {
    let a = FieldElement::one(field).neg();
    let p = field.beta().to_u64().ok_or_else(|| Error::Domain("field too large for search".into()))?;
    for d in 2..p {
        let d = FieldElement::from_u64(field, d);
        if d != a && !d.is_square() {
            return Ok((a, d));
        }
    }
    Err(Error::Construction("no non-square found".into()))
}

/// Square root mod beta by Tonelli-Shanks; `None` for non-squares.
pub fn sqrt(x: &FieldElement) -> Option<FieldElement> {
    let f = x.field();
    if x.is_zero() {
        return Some(x.clone());
    }
    if !x.is_square() {
        return None;
    }
    let p = f.beta();
    let pm1: BigUint = p - 1u32;
    let s = pm1.trailing_zeros().expect("p > 1");
    let q = &pm1 >> s;
    let mut z = BigUint::from(2u32);
    while FieldElement::from_biguint(f, &z).is_square() {
        z += 1u32;
    }
    let mut m = s;
    let mut c = z.modpow(&q, p);
    let xv = x.to_biguint();
    let mut t = xv.modpow(&q, p);
    let mut r = xv.modpow(&((&q + 1u32) >> 1u32), p);
    while !t.is_one() {
        let mut i = 0;
        let mut t2 = t.clone();
        while !t2.is_one() {
            t2 = &t2 * &t2 % p;
            i += 1;
        }
        let b = c.modpow(&(BigUint::one() << (m - i - 1)), p);
        m = i;
        c = &b * &b % p;
        t = t * &c % p;
        r = r * b % p;
    }
    Some(FieldElement::from_biguint(f, &r))
}

/// Extended coordinates `(X, Y, Z, T)` with `x = X/Z`, `y = Y/Z`, `T = XY/Z`.
#[derive(Clone, Debug)]
pub struct EdPoint<E> {
    pub x: E,
    pub y: E,
    pub z: E,
    pub t: E,
}

/// Curve arithmetic over a field backend.
#[derive(Debug)]
pub struct Curve<B: FieldBackend> {
    params: Arc<CurveParams>,
    backend: B,
    a: B::Elem,
    d: B::Elem,
    two_d: B::Elem,
    a_is_minus_one: bool,
}

impl<B: FieldBackend> Curve<B> {
    pub fn new(params: Arc<CurveParams>, backend: B) -> Result<Self> {
        if !params.field.same(backend.field()) {
            return Err(Error::FieldMismatch);
        }
        let a = backend.from_canonical(&params.a);
        let d = backend.from_canonical(&params.d);
        let two_d = backend.from_canonical(&field::add_mod(&params.d, &params.d)?);
        let a_is_minus_one = params.a == FieldElement::one(&params.field).neg();
        Ok(Self { params, backend, a, d, two_d, a_is_minus_one })
    }

    pub fn params(&self) -> &Arc<CurveParams> {
        &self.params
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn identity(&self) -> EdPoint<B::Elem> {
        let b = &self.backend;
        EdPoint { x: b.zero(), y: b.one(), z: b.one(), t: b.zero() }
    }

    /// Lifts affine `(x, y)` to `(x, y, 1, xy)`, checking the curve equation.
    pub fn from_affine(&self, x: &FieldElement, y: &FieldElement) -> Result<EdPoint<B::Elem>> {
        if !x.field().same(&self.params.field) || !y.field().same(&self.params.field) {
            return Err(Error::FieldMismatch);
        }
        if !self.params.is_on_curve_affine(x, y) {
            return Err(Error::Domain("point is not on the curve".into()));
        }
        Ok(self.from_affine_unchecked(x, y))
    }

    fn from_affine_unchecked(&self, x: &FieldElement, y: &FieldElement) -> EdPoint<B::Elem> {
        let b = &self.backend;
        let t = field::modmul_oracle(x, y).expect("same field");
        EdPoint { x: b.from_canonical(x), y: b.from_canonical(y), z: b.one(), t: b.from_canonical(&t) }
    }

    pub fn generator(&self) -> Option<EdPoint<B::Elem>> {
        self.params.generator.as_ref().map(|(x, y)| self.from_affine_unchecked(x, y))
    }

    pub fn to_affine(&self, p: &EdPoint<B::Elem>) -> (FieldElement, FieldElement) {
        let b = &self.backend;
        let zi = b.to_canonical(&p.z).inv().expect("Z is never zero on a complete curve");
        let m = |u: &FieldElement| field::modmul_oracle(u, &zi).expect("same field");
        (m(&b.to_canonical(&p.x)), m(&b.to_canonical(&p.y)))
    }

    /// Canonical quadruple, for I/O and cross-backend transfer.
    pub fn to_canonical(&self, p: &EdPoint<B::Elem>) -> EdPoint<FieldElement> {
        let b = &self.backend;
        EdPoint { x: b.to_canonical(&p.x), y: b.to_canonical(&p.y), z: b.to_canonical(&p.z), t: b.to_canonical(&p.t) }
    }

    pub fn from_canonical(&self, p: &EdPoint<FieldElement>) -> EdPoint<B::Elem> {
        let b = &self.backend;
        EdPoint {
            x: b.from_canonical(&p.x),
            y: b.from_canonical(&p.y),
            z: b.from_canonical(&p.z),
            t: b.from_canonical(&p.t),
        }
    }

    /// `a X^2 + Y^2 = Z^2 + d T^2` and `XY = ZT`.
    pub fn is_on_curve(&self, p: &EdPoint<B::Elem>) -> bool {
        let b = &self.backend;
        let x2 = b.mul(&p.x, &p.x);
        let y2 = b.mul(&p.y, &p.y);
        let z2 = b.mul(&p.z, &p.z);
        let t2 = b.mul(&p.t, &p.t);
        let lhs = b.add(&b.mul(&self.a, &x2), &y2);
        let rhs = b.add(&z2, &b.mul(&self.d, &t2));
        b.eq(&lhs, &rhs) && b.eq(&b.mul(&p.x, &p.y), &b.mul(&p.z, &p.t)) && !b.is_zero(&p.z)
    }

    /// Unified addition; also valid for doubling and the identity.
    pub fn padd(&self, p: &EdPoint<B::Elem>, q: &EdPoint<B::Elem>) -> EdPoint<B::Elem> {
        let b = &self.backend;
        if self.a_is_minus_one {
            let a = b.mul(&b.sub(&p.y, &p.x), &b.sub(&q.y, &q.x));
            let bb = b.mul(&b.add(&p.y, &p.x), &b.add(&q.y, &q.x));
            let c = b.mul(&b.mul(&p.t, &q.t), &self.two_d);
            let zz = b.mul(&p.z, &q.z);
            let d = b.add(&zz, &zz);
            let e = b.sub(&bb, &a);
            let f = b.sub(&d, &c);
            let g = b.add(&d, &c);
            let h = b.add(&bb, &a);
            EdPoint { x: b.mul(&e, &f), y: b.mul(&g, &h), z: b.mul(&f, &g), t: b.mul(&e, &h) }
        } else {
            let a = b.mul(&p.x, &q.x);
            let bb = b.mul(&p.y, &q.y);
            let c = b.mul(&self.d, &b.mul(&p.t, &q.t));
            let d = b.mul(&p.z, &q.z);
            let e = b.sub(&b.sub(&b.mul(&b.add(&p.x, &p.y), &b.add(&q.x, &q.y)), &a), &bb);
            let f = b.sub(&d, &c);
            let g = b.add(&d, &c);
            let h = b.sub(&bb, &b.mul(&self.a, &a));
            EdPoint { x: b.mul(&e, &f), y: b.mul(&g, &h), z: b.mul(&f, &g), t: b.mul(&e, &h) }
        }
    }

    pub fn pdbl(&self, p: &EdPoint<B::Elem>) -> EdPoint<B::Elem> {
        let b = &self.backend;
        let a = b.mul(&p.x, &p.x);
        let bb = b.mul(&p.y, &p.y);
        let zz = b.mul(&p.z, &p.z);
        let c = b.add(&zz, &zz);
        let d = if self.a_is_minus_one { b.sub(&b.zero(), &a) } else { b.mul(&self.a, &a) };
        let xy = b.add(&p.x, &p.y);
        let e = b.sub(&b.sub(&b.mul(&xy, &xy), &a), &bb);
        let g = b.add(&d, &bb);
        let f = b.sub(&g, &c);
        let h = b.sub(&d, &bb);
        EdPoint { x: b.mul(&e, &f), y: b.mul(&g, &h), z: b.mul(&f, &g), t: b.mul(&e, &h) }
    }

    pub fn neg(&self, p: &EdPoint<B::Elem>) -> EdPoint<B::Elem> {
        let b = &self.backend;
        EdPoint { x: b.sub(&b.zero(), &p.x), y: p.y.clone(), z: p.z.clone(), t: b.sub(&b.zero(), &p.t) }
    }

    /// Same affine point, compared by cross-multiplication.
    pub fn eq_points(&self, p: &EdPoint<B::Elem>, q: &EdPoint<B::Elem>) -> bool {
        let b = &self.backend;
        b.eq(&b.mul(&p.x, &q.z), &b.mul(&q.x, &p.z)) && b.eq(&b.mul(&p.y, &q.z), &b.mul(&q.y, &p.z))
    }

    pub fn is_identity(&self, p: &EdPoint<B::Elem>) -> bool {
        self.eq_points(p, &self.identity())
    }

    /// `(lX, lY, lZ, lT)`: the same point in another projective representation.
    pub fn rescale(&self, p: &EdPoint<B::Elem>, l: &FieldElement) -> EdPoint<B::Elem> {
        let b = &self.backend;
        let l = b.from_canonical(l);
        EdPoint { x: b.mul(&p.x, &l), y: b.mul(&p.y, &l), z: b.mul(&p.z, &l), t: b.mul(&p.t, &l) }
    }

    /// Left-to-right double-and-add.
    pub fn scalar_mul(&self, s: &BigUint, p: &EdPoint<B::Elem>) -> EdPoint<B::Elem> {
        let mut acc = self.identity();
        for i in (0..s.bits()).rev() {
            acc = self.pdbl(&acc);
            if s.bit(i) {
                acc = self.padd(&acc, p);
            }
        }
        acc
    }

    /// A uniformly random affine point (not necessarily in a prime-order subgroup).
    pub fn random_point<R: RngCore + ?Sized>(&self, rng: &mut R) -> EdPoint<B::Elem> {
        let f = &self.params.field;
        let one = FieldElement::one(f);
        loop {
            let y = FieldElement::random(f, rng);
            let y2 = field::modmul_oracle(&y, &y).expect("same field");
            let num = field::sub_mod(&one, &y2).expect("same field");
            let den = field::sub_mod(&self.params.a, &field::modmul_oracle(&self.params.d, &y2).expect("same field"))
                .expect("same field");
            let Some(den_inv) = den.inv() else { continue };
            let x2 = field::modmul_oracle(&num, &den_inv).expect("same field");
            if let Some(x) = sqrt(&x2) {
                let x = if rng.next_u32() & 1 == 1 { x.neg() } else { x };
                return self.from_affine_unchecked(&x, &y);
            }
        }
    }
}

/// One point per line: `X Y Z T` as canonical hex.
pub fn format_points(points: &[EdPoint<FieldElement>]) -> String {
    let mut s = String::new();
    for p in points {
        s.push_str(&format!("{} {} {} {}\n", p.x.to_hex(), p.y.to_hex(), p.z.to_hex(), p.t.to_hex()));
    }
    s
}

pub fn parse_points(field: &Arc<PrimeField>, text: &str) -> Result<Vec<EdPoint<FieldElement>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("point line {}: expected 4 coordinates", i + 1)));
            }
            let c = |s: &str| FieldElement::from_hex(field, s);
            Ok(EdPoint { x: c(parts[0])?, y: c(parts[1])?, z: c(parts[2])?, t: c(parts[3])? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::RadixMont;
    use num_traits::Zero;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> Curve<RadixMont> {
        let params = CurveParams::load_named("small13").unwrap();
        let b = RadixMont::new(&params.field);
        Curve::new(Arc::new(params), b).unwrap()
    }

    #[test]
    fn small_curve_fixture_matches_search() {
        let c = small();
        let (a, d) = search_small_curve(&c.params().field).unwrap();
        assert_eq!(a, c.params().a);
        assert_eq!(d, c.params().d);
        assert_eq!(c.params().enumerate_affine().len(), 16);
    }

    #[test]
    fn sqrt_small_and_large() {
        let f = PrimeField::from_u64("f13", 13).unwrap();
        for v in 0..13u64 {
            let x = FieldElement::from_u64(&f, v);
            match sqrt(&x) {
                Some(r) => assert_eq!(field::modmul_oracle(&r, &r).unwrap(), x),
                None => assert!(!x.is_square()),
            }
        }
        let f = PrimeField::from_u64("f17", 17).unwrap();
        for v in 0..17u64 {
            let x = FieldElement::from_u64(&f, v);
            if let Some(r) = sqrt(&x) {
                assert_eq!(field::modmul_oracle(&r, &r).unwrap(), x);
            }
        }
    }

    #[test]
    fn identity_and_inverse() {
        let c = small();
        let g = c.generator().unwrap();
        assert!(c.eq_points(&c.padd(&g, &c.identity()), &g));
        assert!(c.is_identity(&c.padd(&g, &c.neg(&g))));
        assert!(c.is_identity(&c.pdbl(&c.identity())));
        let l = FieldElement::from_u64(&c.params().field, 7);
        assert!(c.eq_points(&g, &c.rescale(&g, &l)));
        assert!(!c.eq_points(&g, &c.padd(&g, &g)));
    }

    #[test]
    fn order_two_point_doubles_to_identity() {
        let c = small();
        let f = &c.params().field;
        let p = c.from_affine(&FieldElement::zero(f), &FieldElement::from_u64(f, 12)).unwrap();
        assert!(!c.is_identity(&p));
        assert!(c.is_identity(&c.pdbl(&p)));
    }

    #[test]
    fn scalar_mul_basics() {
        let c = small();
        let g = c.generator().unwrap();
        assert!(c.is_identity(&c.scalar_mul(&BigUint::zero(), &g)));
        assert!(c.eq_points(&c.scalar_mul(&BigUint::one(), &g), &g));
        assert!(c.is_identity(&c.scalar_mul(&BigUint::from(16u32), &g)));
        let mut acc = c.identity();
        for s in 0..40u32 {
            assert!(c.eq_points(&c.scalar_mul(&BigUint::from(s), &g), &acc));
            acc = c.padd(&acc, &g);
        }
    }

    #[test]
    fn rejects_off_curve_points_and_bad_params() {
        let c = small();
        let f = &c.params().field;
        assert!(c.from_affine(&FieldElement::from_u64(f, 1), &FieldElement::from_u64(f, 1)).is_err());
        let sq = FieldElement::from_u64(f, 4);
        assert!(CurveParams::new("bad", f, FieldElement::one(f).neg(), sq).is_err());
    }

    #[test]
    fn random_points_are_on_curve() {
        let params = Arc::new(CurveParams::load_named("ed25519").unwrap());
        let c = Curve::new(Arc::clone(&params), RadixMont::new(&params.field)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let p = c.random_point(&mut rng);
            assert!(c.is_on_curve(&p));
        }
        let g = c.generator().unwrap();
        assert!(c.is_identity(&c.scalar_mul(params.order.as_ref().unwrap(), &g)));
    }

    #[test]
    fn point_text_roundtrip() {
        let c = small();
        let pts: Vec<_> =
            (0..5u32).map(|s| c.to_canonical(&c.scalar_mul(&BigUint::from(s), &c.generator().unwrap()))).collect();
        let text = format_points(&pts);
        let back = parse_points(&c.params().field, &text).unwrap();
        assert_eq!(format_points(&back), text);
        assert!(parse_points(&c.params().field, "1 2 3").is_err());
    }
}
