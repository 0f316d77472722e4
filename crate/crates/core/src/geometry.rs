//! Model geometries: products of circles, round 2-spheres and flat complex tori.

use crate::error::{Error, Result};
use crate::numeric::exact::{parse_rational, rational};
use crate::numeric::{Dd, PiPoly};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Block {
    /// Circle of length `circumference` with Witten form `ω = a·dθ` (unit-speed θ).
    Circle { circumference: PiPoly, witten_a: PiPoly },
    /// Round 2-sphere (ℂP¹).
    Sphere { radius: PiPoly },
    /// Flat torus `ℂ/s(ℤ + τℤ)` of the given area, with a line bundle of the given
    /// degree and Novikov form `ω = c·dz`. `modulus` and `novikov_c` are `(re, im)`.
    ComplexTorus {
        area: PiPoly,
        modulus: (PiPoly, PiPoly),
        bundle_degree: i64,
        novikov_c: (PiPoly, PiPoly),
    },
}

impl Block {
    pub fn circle(circumference: PiPoly, witten_a: PiPoly) -> Block {
        Block::Circle {
            circumference,
            witten_a,
        }
    }

    pub fn sphere(radius: PiPoly) -> Block {
        Block::Sphere { radius }
    }

    pub fn torus(area: PiPoly, modulus: (PiPoly, PiPoly), bundle_degree: i64, novikov_c: (PiPoly, PiPoly)) -> Block {
        Block::ComplexTorus {
            area,
            modulus,
            bundle_degree,
            novikov_c,
        }
    }

    /// Circle of length 2π.
    pub fn unit_circle(witten_a: PiPoly) -> Block {
        Block::circle(PiPoly::monomial(rational(2, 1), 2), witten_a)
    }

    pub fn unit_sphere() -> Block {
        Block::sphere(PiPoly::from_int(1))
    }

    /// Square torus `τ = i` of the given area and degree, undeformed.
    pub fn square_torus(area: i64, degree: i64) -> Block {
        Block::torus(
            PiPoly::from_int(area),
            (PiPoly::zero(), PiPoly::from_int(1)),
            degree,
            (PiPoly::zero(), PiPoly::zero()),
        )
    }

    pub fn real_dim(&self) -> usize {
        match self {
            Block::Circle { .. } => 1,
            _ => 2,
        }
    }

    /// Whether the block takes part in Dolbeault computations.
    pub fn is_complex(&self) -> bool {
        !matches!(self, Block::Circle { .. })
    }

    pub fn euler_char(&self) -> i64 {
        match self {
            Block::Sphere { .. } => 2,
            _ => 0,
        }
    }

    pub fn volume(&self) -> PiPoly {
        match self {
            Block::Circle { circumference, .. } => circumference.clone(),
            Block::Sphere { radius } => &PiPoly::monomial(rational(4, 1), 2) * &(radius * radius),
            Block::ComplexTorus { area, .. } => area.clone(),
        }
    }

    /// Undeformed, trivial-bundle version of the block.
    pub fn undeformed(&self) -> Block {
        match self {
            Block::Circle { circumference, .. } => Block::circle(circumference.clone(), PiPoly::zero()),
            Block::Sphere { .. } => self.clone(),
            Block::ComplexTorus {
                area,
                modulus,
                bundle_degree,
                ..
            } => Block::torus(area.clone(), modulus.clone(), *bundle_degree, (PiPoly::zero(), PiPoly::zero())),
        }
    }

    pub fn is_deformed(&self) -> bool {
        match self {
            Block::Circle { witten_a, .. } => !witten_a.is_zero(),
            Block::Sphere { .. } => false,
            Block::ComplexTorus { novikov_c, .. } => !(novikov_c.0.is_zero() && novikov_c.1.is_zero()),
        }
    }

    /// Length of the shortest nonzero period (tori only).
    pub fn shortest_period(&self) -> Option<f64> {
        let Block::ComplexTorus { area, modulus, .. } = self else {
            return None;
        };
        let (mut x, mut y) = (modulus.0.to_f64(), modulus.1.to_f64());
        let s = (area.to_f64() / y).sqrt();
        // Gauss reduction of τ into the fundamental domain; |1| and |τ| are then minimal
        let mut scale = s;
        for _ in 0..200 {
            x -= x.round();
            let n = x * x + y * y;
            if n >= 1.0 {
                break;
            }
            scale *= n.sqrt();
            x = -x / n;
            y /= n;
        }
        Some(scale)
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: &PiPoly, what: &str| -> Result<()> {
            if v.is_positive_monomial() {
                Ok(())
            } else {
                Err(Error::Geometry(format!("{what} must be strictly positive, got {v}")))
            }
        };
        let monomial = |v: &PiPoly, what: &str| -> Result<()> {
            if v.is_zero() || v.as_monomial().is_some() {
                Ok(())
            } else {
                Err(Error::Geometry(format!("{what} must be a single number, got {v}")))
            }
        };
        match self {
            Block::Circle {
                circumference,
                witten_a,
            } => {
                positive(circumference, "circumference")?;
                monomial(witten_a, "witten_a")
            }
            Block::Sphere { radius } => positive(radius, "radius"),
            Block::ComplexTorus {
                area,
                modulus,
                novikov_c,
                ..
            } => {
                positive(area, "area")?;
                let (Some(re), Some(im)) = (modulus.0.as_rational(), modulus.1.as_rational()) else {
                    return Err(Error::Geometry("modulus must have rational real and imaginary parts".into()));
                };
                let _ = re;
                if !im.is_positive() {
                    return Err(Error::Geometry(format!(
                        "modulus imaginary part must be strictly positive, got {}",
                        modulus.1
                    )));
                }
                monomial(&novikov_c.0, "novikov_c real part")?;
                monomial(&novikov_c.1, "novikov_c imaginary part")
            }
        }
    }

    fn to_json(&self) -> Value {
        let s = |v: &PiPoly| Value::String(v.to_string());
        match self {
            Block::Circle {
                circumference,
                witten_a,
            } => json!({"kind": "circle", "circumference": s(circumference), "witten_a": s(witten_a)}),
            Block::Sphere { radius } => json!({"kind": "sphere", "radius": s(radius)}),
            Block::ComplexTorus {
                area,
                modulus,
                bundle_degree,
                novikov_c,
            } => json!({
                "kind": "complex_torus",
                "area": s(area),
                "modulus": [s(&modulus.0), s(&modulus.1)],
                "bundle_degree": bundle_degree,
                "novikov_c": [s(&novikov_c.0), s(&novikov_c.1)],
            }),
        }
    }

    fn from_json(v: &Value) -> Result<Block> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Geometry("each block must be a JSON object".into()))?;
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Geometry("block is missing a string `kind`".into()))?;
        let allowed: &[&str] = match kind {
            "circle" => &["kind", "circumference", "witten_a"],
            "sphere" => &["kind", "radius", "bundle_degree"],
            "complex_torus" => &["kind", "area", "modulus", "bundle_degree", "novikov_c"],
            other => return Err(Error::Geometry(format!("unknown block kind `{other}`"))),
        };
        if kind == "circle" && obj.contains_key("bundle_degree") {
            return Err(Error::Geometry("circle blocks carry no bundle".into()));
        }
        if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Geometry(format!("unexpected field `{k}` on {kind} block")));
        }
        let block = match kind {
            "circle" => Block::Circle {
                circumference: required_number(obj, "circumference")?,
                witten_a: optional_number(obj, "witten_a")?,
            },
            "sphere" => {
                if let Some(d) = obj.get("bundle_degree") {
                    if d.as_i64() != Some(0) {
                        return Err(Error::Unsupported("line bundles on sphere blocks".into()));
                    }
                }
                Block::Sphere {
                    radius: required_number(obj, "radius")?,
                }
            }
            _ => Block::ComplexTorus {
                area: required_number(obj, "area")?,
                modulus: match obj.get("modulus") {
                    Some(m) => complex_pair(m, "modulus")?,
                    None => return Err(Error::Geometry("complex_torus is missing `modulus`".into())),
                },
                bundle_degree: match obj.get("bundle_degree") {
                    None => 0,
                    Some(d) => d
                        .as_i64()
                        .ok_or_else(|| Error::Geometry(format!("bundle_degree must be an integer, got {d}")))?,
                },
                novikov_c: match obj.get("novikov_c") {
                    Some(c) => complex_pair(c, "novikov_c")?,
                    None => (PiPoly::zero(), PiPoly::zero()),
                },
            },
        };
        block.validate()?;
        Ok(block)
    }
}

/// Reads a number given as a JSON number, a decimal string, `p/q`, or a multiple of a power of π.
pub fn number_from_json(v: &Value) -> Result<PiPoly> {
    match v {
        Value::Number(n) => parse_rational(&n.to_string())
            .map(PiPoly::from_rational)
            .map_err(|e| Error::Geometry(e.to_string())),
        Value::String(s) => s.parse::<PiPoly>().map_err(|e| Error::Geometry(e.to_string())),
        other => Err(Error::Geometry(format!("expected a number, got {other}"))),
    }
}

fn required_number(obj: &Map<String, Value>, key: &str) -> Result<PiPoly> {
    obj.get(key)
        .ok_or_else(|| Error::Geometry(format!("missing field `{key}`")))
        .and_then(number_from_json)
}

fn optional_number(obj: &Map<String, Value>, key: &str) -> Result<PiPoly> {
    obj.get(key).map_or(Ok(PiPoly::zero()), number_from_json)
}

fn complex_pair(v: &Value, what: &str) -> Result<(PiPoly, PiPoly)> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok((number_from_json(re)?, number_from_json(im)?)),
        _ => Err(Error::Geometry(format!("`{what}` must be a [real, imag] pair"))),
    }
}

fn short(v: &PiPoly) -> String {
    let s = v.to_string();
    if s.contains(' ') {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Circle {
                circumference,
                witten_a,
            } => {
                write!(f, "S1(L={}", short(circumference))?;
                if !witten_a.is_zero() {
                    write!(f, ",a={}", short(witten_a))?;
                }
                f.write_str(")")
            }
            Block::Sphere { radius } => write!(f, "S2(r={})", short(radius)),
            Block::ComplexTorus {
                area,
                modulus,
                bundle_degree,
                novikov_c,
            } => {
                write!(
                    f,
                    "T(A={},tau={}+{}i,d={}",
                    short(area),
                    short(&modulus.0),
                    short(&modulus.1),
                    bundle_degree
                )?;
                if self.is_deformed() {
                    write!(f, ",c={}+{}i", short(&novikov_c.0), short(&novikov_c.1))?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySpec {
    pub blocks: Vec<Block>,
}

impl GeometrySpec {
    pub fn new(blocks: Vec<Block>) -> Result<GeometrySpec> {
        if blocks.is_empty() {
            return Err(Error::Geometry("a geometry needs at least one block".into()));
        }
        for b in &blocks {
            b.validate()?;
        }
        Ok(GeometrySpec { blocks })
    }

    pub fn from_json(text: &str) -> Result<GeometrySpec> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<GeometrySpec> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Geometry("geometry must be a JSON object".into()))?;
        if let Some(k) = obj.keys().find(|k| k.as_str() != "blocks") {
            return Err(Error::Geometry(format!("unexpected top-level field `{k}`")));
        }
        let blocks = obj
            .get("blocks")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Geometry("missing `blocks` array".into()))?;
        let blocks = blocks.iter().map(Block::from_json).collect::<Result<Vec<_>>>()?;
        GeometrySpec::new(blocks)
    }

    pub fn to_value(&self) -> Value {
        json!({ "blocks": self.blocks.iter().map(Block::to_json).collect::<Vec<_>>() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("geometry serializes")
    }

    /// Real dimension `m`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Block::real_dim).sum()
    }

    /// Complex dimension; defined only without circle blocks.
    pub fn complex_dim(&self) -> Option<usize> {
        self.is_dolbeault_legal().then(|| self.dim() / 2)
    }

    pub fn is_dolbeault_legal(&self) -> bool {
        self.blocks.iter().all(Block::is_complex)
    }

    pub fn complex_flags(&self) -> Vec<bool> {
        self.blocks.iter().map(Block::is_complex).collect()
    }

    pub fn require_dolbeault(&self) -> Result<()> {
        if self.is_dolbeault_legal() {
            Ok(())
        } else {
            Err(Error::Geometry(
                "Dolbeault computations need every block to be a sphere or complex torus".into(),
            ))
        }
    }

    pub fn is_deformed(&self) -> bool {
        self.blocks.iter().any(Block::is_deformed)
    }

    pub fn undeformed(&self) -> GeometrySpec {
        GeometrySpec {
            blocks: self.blocks.iter().map(Block::undeformed).collect(),
        }
    }

    pub fn product(&self, other: &GeometrySpec) -> GeometrySpec {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        GeometrySpec { blocks }
    }

    pub fn single(block: Block) -> GeometrySpec {
        GeometrySpec { blocks: vec![block] }
    }
}

impl fmt::Display for GeometrySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

pub fn parse_geometry(document: &str) -> Result<GeometrySpec> {
    GeometrySpec::from_json(document)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockChar {
    pub volume: PiPoly,
    /// `∫τ dvol`.
    pub scalar_curvature_integral: PiPoly,
    /// `c₁(T_c)[block]`, absent for circles.
    pub c1_tangent: Option<i64>,
    /// `c₁(E)[block]`, absent for circles.
    pub c1_bundle: Option<i64>,
    pub euler_char: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharRecord {
    pub m: usize,
    pub euler_char: i64,
    pub blocks: Vec<BlockChar>,
    pub total_volume: PiPoly,
}

pub fn char_record(spec: &GeometrySpec) -> CharRecord {
    let blocks: Vec<BlockChar> = spec
        .blocks
        .iter()
        .map(|b| match b {
            Block::Circle { circumference, .. } => BlockChar {
                volume: circumference.clone(),
                scalar_curvature_integral: PiPoly::zero(),
                c1_tangent: None,
                c1_bundle: None,
                euler_char: 0,
            },
            // τ = 2/r² on the round sphere, so ∫τ = 8π for every radius
            Block::Sphere { .. } => BlockChar {
                volume: b.volume(),
                scalar_curvature_integral: PiPoly::monomial(rational(8, 1), 2),
                c1_tangent: Some(2),
                c1_bundle: Some(0),
                euler_char: 2,
            },
            Block::ComplexTorus {
                area, bundle_degree, ..
            } => BlockChar {
                volume: area.clone(),
                scalar_curvature_integral: PiPoly::zero(),
                c1_tangent: Some(0),
                c1_bundle: Some(*bundle_degree),
                euler_char: 0,
            },
        })
        .collect();
    CharRecord {
        m: spec.dim(),
        euler_char: blocks.iter().map(|b| b.euler_char).product(),
        total_volume: blocks.iter().fold(PiPoly::from_int(1), |acc, b| &acc * &b.volume),
        blocks,
    }
}

/// Double-double value of a geometry number.
pub(crate) fn dd(v: &PiPoly) -> Dd {
    v.to_dd()
}

/// Numerator and denominator data of a rational modulus `τ = (a + i b)/c`.
pub(crate) fn modulus_integers(modulus: &(PiPoly, PiPoly)) -> Result<(i128, i128, i128)> {
    let re = modulus.0.as_rational().unwrap_or_else(BigRational::zero);
    let im = modulus
        .1
        .as_rational()
        .ok_or_else(|| Error::Geometry("modulus must be rational".into()))?;
    let c = num_integer::Integer::lcm(re.denom(), im.denom());
    let a = (re * BigRational::from_integer(c.clone())).to_integer();
    let b = (im * BigRational::from_integer(c.clone())).to_integer();
    match (a.to_i128(), b.to_i128(), c.to_i128()) {
        (Some(a), Some(b), Some(c)) if c < (1i128 << 40) && b.abs() < (1i128 << 40) => Ok((a, b, c)),
        _ => Err(Error::Unsupported(
            "modulus denominators above 2^40 (exact lattice keys would overflow)".into(),
        )),
    }
}
