//! Characteristic numbers of products of surfaces and the predicted heat-trace invariants.
//!
//! On a product of surfaces every degree-2 class is a sum of per-block generators
//! `xᵢ = c₁(T)` and `eᵢ = c₁(E)` restricted to block `i`, each squaring to zero. A class
//! is therefore a multilinear polynomial: each monomial picks at most one generator per
//! block, and a top-degree monomial pairs with `[M]` to the product of its block pairings.

use crate::error::{Error, Result};
use crate::geometry::{char_record, Block, GeometrySpec};
use crate::numeric::exact::rational;
use crate::numeric::PiPoly;
use crate::spectra::ComplexKind;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Generator chosen on one block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Gen {
    One,
    X,
    E,
}

/// Element of the multilinear class ring.
#[derive(Clone, Debug, PartialEq)]
pub struct Class {
    terms: BTreeMap<Vec<Gen>, BigRational>,
}

impl Class {
    fn constant(blocks: usize, c: BigRational) -> Class {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![Gen::One; blocks], c);
        }
        Class { terms }
    }

    pub fn one(blocks: usize) -> Class {
        Class::constant(blocks, BigRational::one())
    }

    pub fn zero() -> Class {
        Class { terms: BTreeMap::new() }
    }

    fn generator(blocks: usize, i: usize, g: Gen) -> Class {
        let mut key = vec![Gen::One; blocks];
        key[i] = g;
        let mut terms = BTreeMap::new();
        terms.insert(key, BigRational::one());
        Class { terms }
    }

    fn insert(&mut self, key: Vec<Gen>, v: BigRational) {
        let e = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *e += v;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, o: &Class) -> Class {
        let mut out = self.clone();
        for (k, v) in &o.terms {
            out.insert(k.clone(), v.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Class {
        let mut out = Class::zero();
        for (k, v) in &self.terms {
            out.insert(k.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, o: &Class) -> Class {
        let mut out = Class::zero();
        for (ka, va) in &self.terms {
            'pair: for (kb, vb) in &o.terms {
                let mut key = ka.clone();
                for (slot, g) in key.iter_mut().zip(kb) {
                    match (*slot, *g) {
                        (_, Gen::One) => {}
                        (Gen::One, g) => *slot = g,
                        // two degree-2 classes on one surface multiply to zero
                        _ => continue 'pair,
                    }
                }
                out.insert(key, va * vb);
            }
        }
        out
    }

    /// Homogeneous part of complex degree `k`.
    pub fn degree(&self, k: usize) -> Class {
        Class {
            terms: self
                .terms
                .iter()
                .filter(|(key, _)| key.iter().filter(|g| **g != Gen::One).count() == k)
                .map(|(a, b)| (a.clone(), b.clone()))
                .collect(),
        }
    }
}

/// Per-block pairings of the generators: `xᵢ[block] ∈ {2, 0}`, `eᵢ[block] = degree`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassVector {
    pub x: Vec<i64>,
    pub e: Vec<i64>,
}

impl ClassVector {
    pub fn from_spec(spec: &GeometrySpec) -> Result<ClassVector> {
        spec.require_dolbeault()?;
        let rec = char_record(spec);
        Ok(ClassVector {
            x: rec.blocks.iter().map(|b| b.c1_tangent.unwrap_or(0)).collect(),
            e: rec.blocks.iter().map(|b| b.c1_bundle.unwrap_or(0)).collect(),
        })
    }

    pub fn blocks(&self) -> usize {
        self.x.len()
    }

    /// `class[M]`: only monomials using a generator on every block survive.
    pub fn pair(&self, class: &Class) -> BigRational {
        let mut total = BigRational::zero();
        for (key, c) in &class.terms {
            let mut v = BigInt::one();
            for (i, g) in key.iter().enumerate() {
                match g {
                    Gen::One => {
                        v = BigInt::zero();
                        break;
                    }
                    Gen::X => v *= self.x[i],
                    Gen::E => v *= self.e[i],
                }
            }
            total += c * BigRational::from_integer(v);
        }
        total
    }

    fn x(&self, i: usize) -> Class {
        Class::generator(self.blocks(), i, Gen::X)
    }

    fn e(&self, i: usize) -> Class {
        Class::generator(self.blocks(), i, Gen::E)
    }

    fn product_of(&self, f: impl Fn(usize) -> Class) -> Class {
        (0..self.blocks()).fold(Class::one(self.blocks()), |acc, i| acc.mul(&f(i)))
    }

    /// Total Chern class `c(T) = Π(1 + xᵢ)`.
    pub fn chern_tangent(&self) -> Class {
        let n = self.blocks();
        self.product_of(|i| Class::one(n).add(&self.x(i)))
    }

    /// `c(E) = 1 + Σ eᵢ` for the line bundle `⊠Eᵢ`.
    pub fn chern_bundle(&self) -> Class {
        (0..self.blocks()).fold(Class::one(self.blocks()), |acc, i| acc.add(&self.e(i)))
    }

    /// `ch(E) = exp(Σ eᵢ) = Π(1 + eᵢ)`.
    pub fn ch_bundle(&self) -> Class {
        let n = self.blocks();
        self.product_of(|i| Class::one(n).add(&self.e(i)))
    }

    /// `ch(T) = Σ exp(xᵢ) = 𝔪 + Σ xᵢ`.
    pub fn ch_tangent(&self) -> Class {
        let n = self.blocks();
        (0..n).fold(Class::zero(), |acc, i| acc.add(&Class::one(n)).add(&self.x(i)))
    }

    /// `Td(T) = Π(1 + xᵢ/2)`.
    pub fn todd(&self) -> Class {
        let n = self.blocks();
        let half = rational(1, 2);
        self.product_of(|i| Class::one(n).add(&self.x(i).scale(&half)))
    }
}

/// One factor of a characteristic monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassFactor {
    ChernT(usize),
    ChernE(usize),
    ChT(usize),
    ChE(usize),
    Todd(usize),
}

impl ClassFactor {
    fn class(&self, v: &ClassVector) -> Class {
        match *self {
            ClassFactor::ChernT(k) => v.chern_tangent().degree(k),
            ClassFactor::ChernE(k) => v.chern_bundle().degree(k),
            ClassFactor::ChT(k) => v.ch_tangent().degree(k),
            ClassFactor::ChE(k) => v.ch_bundle().degree(k),
            ClassFactor::Todd(k) => v.todd().degree(k),
        }
    }

    fn degree(&self) -> usize {
        match *self {
            ClassFactor::ChernT(k)
            | ClassFactor::ChernE(k)
            | ClassFactor::ChT(k)
            | ClassFactor::ChE(k)
            | ClassFactor::Todd(k) => k,
        }
    }

    /// Parses `c1`, `c2(T)`, `c1(E)`, `ch2`, `ch1(T)`, `Td2`, each optionally `^p`.
    pub fn parse_monomial(s: &str) -> Result<Vec<ClassFactor>> {
        let bad = || Error::Config(format!("cannot parse characteristic monomial `{s}`"));
        let mut out = Vec::new();
        for raw in s.split('*') {
            let raw = raw.trim();
            let (body, power) = match raw.rsplit_once('^') {
                Some((b, p)) => (b, p.parse::<usize>().map_err(|_| bad())?),
                None => (raw, 1),
            };
            let (name, arg) = match body.split_once('(') {
                Some((n, rest)) => (n, Some(rest.strip_suffix(')').ok_or_else(bad)?)),
                None => (body, None),
            };
            let split = name.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
            let k: usize = name[split..].parse().map_err(|_| bad())?;
            let f = match (&name[..split], arg) {
                ("c", None | Some("T")) => ClassFactor::ChernT(k),
                ("c", Some("E")) => ClassFactor::ChernE(k),
                ("ch", None | Some("E")) => ClassFactor::ChE(k),
                ("ch", Some("T")) => ClassFactor::ChT(k),
                ("Td", None | Some("T")) => ClassFactor::Todd(k),
                _ => return Err(bad()),
            };
            out.extend(std::iter::repeat_n(f, power));
        }
        Ok(out)
    }
}

/// Value of a characteristic monomial on `spec`; the flag is set when its degree is not `𝔪`
/// (the value is then zero).
pub fn class_monomial(spec: &GeometrySpec, factors: &[ClassFactor]) -> Result<(BigRational, bool)> {
    let v = ClassVector::from_spec(spec)?;
    let total: usize = factors.iter().map(ClassFactor::degree).sum();
    let class = factors
        .iter()
        .fold(Class::one(v.blocks()), |acc, f| acc.mul(&f.class(&v)));
    Ok((v.pair(&class), total != v.blocks()))
}

/// A predicted value with every independent route that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub identity: String,
    pub value: PiPoly,
    pub provenance: String,
    pub paths: Vec<(String, PiPoly)>,
    pub diagnostics: Vec<String>,
}

impl Prediction {
    fn new(identity: &str, provenance: &str, paths: Vec<(String, PiPoly)>) -> Prediction {
        Prediction {
            identity: identity.into(),
            value: paths[0].1.clone(),
            provenance: provenance.into(),
            paths,
            diagnostics: Vec::new(),
        }
    }

    /// True when every route gives exactly the same value.
    pub fn paths_agree(&self) -> bool {
        self.paths.iter().all(|(_, v)| *v == self.value)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::json!({
            "identity": self.identity,
            "value": self.value.to_string(),
            "decimal": self.value.to_dd().to_sci_string(32),
            "provenance": self.provenance,
            "paths": self
                .paths
                .iter()
                .map(|(route, v)| serde_json::json!({"route": route, "value": v.to_string()}))
                .collect::<Vec<_>>(),
            "paths_agree": self.paths_agree(),
            "diagnostics": self.diagnostics,
        })
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.identity, self.value)
    }
}

fn q(v: BigRational) -> PiPoly {
    PiPoly::from_rational(v)
}

pub fn euler_char(spec: &GeometrySpec) -> i64 {
    spec.blocks.iter().map(Block::euler_char).product()
}

fn block_index(b: &Block) -> i64 {
    match b {
        Block::Sphere { .. } => 1,
        Block::ComplexTorus { bundle_degree, .. } => *bundle_degree,
        Block::Circle { .. } => 0,
    }
}

/// Order-`t⁰` derived Dolbeault coefficient of a single block.
fn block_derived_top(b: &Block) -> BigRational {
    match b {
        Block::Sphere { .. } => rational(2, 3),
        Block::ComplexTorus { bundle_degree, .. } => rational(*bundle_degree, 2),
        Block::Circle { .. } => BigRational::zero(),
    }
}

pub fn euler_prediction(spec: &GeometrySpec) -> Prediction {
    let by_blocks = PiPoly::from_int(euler_char(spec));
    let rec = char_record(spec);
    Prediction::new(
        "euler",
        "McKean-Singer",
        vec![
            ("product of block Euler characteristics".into(), by_blocks),
            ("characteristic record".into(), PiPoly::from_int(rec.euler_char)),
        ],
    )
}

/// Riemann–Roch index of the Dolbeault complex.
pub fn rr_index(spec: &GeometrySpec) -> Result<Prediction> {
    let v = ClassVector::from_spec(spec)?;
    let mm = v.blocks();
    let mult: i64 = spec.blocks.iter().map(block_index).product();
    let td = v.todd();
    let ch = v.ch_bundle();
    let mut paths = vec![
        ("multiplicativity".to_string(), PiPoly::from_int(mult)),
        ("Todd·ch".to_string(), q(v.pair(&td.mul(&ch)))),
    ];
    let c1t = v.chern_tangent().degree(1);
    let c1e = v.chern_bundle().degree(1);
    if mm == 1 {
        // ½c₁(T)ch₀(E) + c₁(E)
        let f = c1t.scale(&rational(1, 2)).add(&c1e);
        paths.push(("curve formula".into(), q(v.pair(&f))));
    }
    if mm == 2 {
        // Td₂ + Td₁ch₁ + ch₂ with Td₁ = ½c₁(T)
        let f = td
            .degree(2)
            .add(&c1t.mul(&c1e).scale(&rational(1, 2)))
            .add(&ch.degree(2));
        paths.push(("surface formula".into(), q(v.pair(&f))));
    }
    Ok(Prediction::new("index", "Riemann-Roch", paths))
}

/// Predicted top-order (`n = m`) coefficient of the derived heat trace.
pub fn predicted_derived_top(spec: &GeometrySpec, kind: ComplexKind) -> Result<Prediction> {
    match kind {
        ComplexKind::DeRham => {
            let m = spec.dim();
            if m % 2 == 1 {
                return Err(Error::Unsupported(
                    "the integrated top derived de Rham coefficient is predicted for even m only".into(),
                ));
            }
            let chi = euler_char(spec);
            let mut paths = vec![("(m/2)χ".to_string(), PiPoly::from_int(m as i64 / 2 * chi))];
            if m == 2 {
                // Gauss–Bonnet: χ = (1/4π)∫τ on a surface
                let rec = char_record(spec);
                let tau = &rec.blocks[0].scalar_curvature_integral;
                paths.push(("(1/4π)∫τ".into(), &PiPoly::monomial(rational(1, 4), -2) * tau));
            }
            Ok(Prediction::new("derived-top", "derived de Rham top order", paths))
        }
        ComplexKind::Dolbeault => {
            let v = ClassVector::from_spec(spec)?;
            let mm = v.blocks();
            let mut recursion = BigRational::zero();
            for (i, b) in spec.blocks.iter().enumerate() {
                let mut term = block_derived_top(b);
                for (j, other) in spec.blocks.iter().enumerate() {
                    if j != i {
                        term *= BigRational::from_integer(block_index(other).into());
                    }
                }
                recursion += term;
            }
            let mut paths = vec![("product recursion".to_string(), q(recursion))];
            let c1t = v.chern_tangent().degree(1);
            let c1e = v.chern_bundle().degree(1);
            let ch = v.ch_bundle();
            let td = v.todd();
            if mm == 1 {
                let f = c1t.scale(&rational(1, 3)).add(&c1e.scale(&rational(1, 2)));
                paths.push(("R polynomial, m=1".into(), q(v.pair(&f))));
            }
            if mm == 2 {
                let c1sq = c1t.mul(&c1t);
                let f = td
                    .degree(2)
                    .add(&c1sq.scale(&rational(1, 24)))
                    .add(&c1t.mul(&c1e).scale(&rational(7, 12)))
                    .add(&ch.degree(2));
                paths.push(("R polynomial, m=2".into(), q(v.pair(&f))));
            }
            let mm_q = BigRational::from_integer((mm as i64).into());
            if spec.blocks.iter().all(|b| matches!(b, Block::ComplexTorus { .. })) {
                let f = ch.degree(mm).scale(&(mm_q.clone() * rational(1, 2)));
                paths.push(("flat: ½𝔪 ch_𝔪(E)".into(), q(v.pair(&f))));
            }
            if v.e.iter().all(|d| *d == 0) {
                let f = td.degree(mm).scale(&(mm_q * rational(2, 3)));
                paths.push(("trivial bundle: ⅔𝔪 Td_𝔪".into(), q(v.pair(&f))));
            }
            Ok(Prediction::new("derived-top", "derived Dolbeault top order", paths))
        }
    }
}

/// Predicted order-`t⁻¹` (`n = m − 2`) coefficient of the derived Dolbeault trace.
///
/// Each factor's derived trace starts with `−vol/(4πt)` and every supertrace is its
/// constant index, so the product formula gives `−Σᵢ volᵢ/(4π) Π_{j≠i} indexⱼ`.
pub fn predicted_subleading(spec: &GeometrySpec) -> Result<Prediction> {
    spec.require_dolbeault()?;
    let mut pairing = PiPoly::zero();
    for (i, b) in spec.blocks.iter().enumerate() {
        let mut term = b.volume();
        for (j, other) in spec.blocks.iter().enumerate() {
            if j != i {
                term = &term * &PiPoly::from_int(block_index(other));
            }
        }
        pairing = &pairing + &term;
    }
    let factor = PiPoly::monomial(rational(-1, 4), -2);
    let value = &factor * &pairing;
    let mut p = Prediction::new(
        "subleading",
        "derived Dolbeault order m-2",
        vec![("product recursion".into(), value)],
    );
    p.diagnostics.push(format!(
        "pairing Σ vol_i Π index_j = {pairing}; recursion / pairing = {factor}"
    ));
    Ok(p)
}

/// `(1/8π)∫τ` on a sphere block (the top supertrace coefficient of its Dolbeault complex).
pub fn sphere_curvature_index(spec: &GeometrySpec) -> Result<PiPoly> {
    match spec.blocks.as_slice() {
        [Block::Sphere { .. }] => {
            let tau = char_record(spec).blocks[0].scalar_curvature_integral.clone();
            Ok(&PiPoly::monomial(rational(1, 8), -2) * &tau)
        }
        _ => Err(Error::Unsupported("curvature index needs a single sphere".into())),
    }
}
