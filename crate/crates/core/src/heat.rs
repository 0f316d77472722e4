//! Graded heat traces and their supertrace, derived and generating-function aggregates.

use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::numeric::{CompensatedSum, Dd, DD_EPS};
use crate::spectra::{product_spectrum, ComplexKind, GradedSpectrum, SpectralLine, SpectrumPolicy};
use std::fmt;
use std::str::FromStr;

/// Above this value of `tλ` a term is below 5e-18 and is evaluated in `f64`.
const FAST_EXPONENT: f64 = 40.0;

#[derive(Clone, Debug)]
pub struct TraceSample {
    pub t: f64,
    /// `Tr e^{−tΔ}` per grading.
    pub values: Vec<Dd>,
    /// Bound on the omitted mass above the cutoff, per grading.
    pub truncation: Vec<f64>,
    /// Bound on the accumulated rounding error, per grading.
    pub rounding: Vec<f64>,
}

impl TraceSample {
    pub fn error_bound(&self, grading: usize) -> f64 {
        self.truncation[grading] + self.rounding[grading]
    }

    pub fn gradings(&self) -> usize {
        self.values.len()
    }
}

/// `Σ mult·e^{−tλ}` over `lines` (largest eigenvalue first) with its rounding bound.
pub fn trace_lines(lines: &[SpectralLine], t: f64) -> (Dd, f64) {
    let td = Dd::from(t);
    let mut acc = CompensatedSum::new();
    for line in lines.iter().rev() {
        let x = td * line.eigenvalue;
        let mult = line.multiplicity as f64;
        if x.hi() > FAST_EXPONENT {
            let term = mult * (-x.hi()).exp();
            acc.add_small(term, term * 4.5e-16 * (x.hi() + 2.0));
        } else {
            let term = (-x).exp().mul_f64(mult);
            let rel = 16.0 * DD_EPS * (x.hi().abs() + 8.0);
            acc.add(term, term.to_f64() * rel);
        }
    }
    acc.finish()
}

/// Heat trace of every grading at time `t`.
pub fn graded_trace(spectrum: &GradedSpectrum, t: f64) -> Result<TraceSample> {
    if !(t > 0.0) {
        return Err(Error::Config(format!("t must be positive, got {t}")));
    }
    let n = spectrum.gradings.len();
    let mut values = Vec::with_capacity(n);
    let mut truncation = Vec::with_capacity(n);
    let mut rounding = Vec::with_capacity(n);
    for g in 0..n {
        let tail = spectrum.tail_bound(g, t)?;
        let (v, r) = trace_lines(spectrum.lines(g), t);
        values.push(v);
        truncation.push(tail);
        rounding.push(r);
    }
    Ok(TraceSample {
        t,
        values,
        truncation,
        rounding,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AggregateKind {
    /// `Σ(−1)ᵖ Trₚ`.
    Supertrace,
    /// `Σ(−1)ᵖ p Trₚ`.
    Derived,
    /// `Σ(−1)ᵖ Trₚ sᵖ`.
    SEval(Dd),
}

impl fmt::Display for AggregateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateKind::Supertrace => f.write_str("super"),
            AggregateKind::Derived => f.write_str("derived"),
            AggregateKind::SEval(s) => write!(f, "s:{s}"),
        }
    }
}

impl FromStr for AggregateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "super" | "supertrace" => Ok(AggregateKind::Supertrace),
            "derived" => Ok(AggregateKind::Derived),
            other => match other.strip_prefix("s:") {
                Some(v) => v
                    .parse::<Dd>()
                    .map(AggregateKind::SEval)
                    .map_err(|e| Error::Config(e.to_string())),
                None => Err(Error::Config(format!("unknown aggregate `{other}` (super|derived|s:VALUE)"))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub value: Dd,
    pub error_bound: f64,
}

fn weights(kind: AggregateKind, n: usize) -> Vec<Dd> {
    (0..n)
        .map(|p| {
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            match kind {
                AggregateKind::Supertrace => Dd::from(sign),
                AggregateKind::Derived => Dd::from(sign * p as f64),
                AggregateKind::SEval(s) => s.powi(p as i32).mul_f64(sign),
            }
        })
        .collect()
}

/// Weighted combination of the gradings; the bound adds weighted truncation and rounding bounds.
pub fn aggregate(sample: &TraceSample, kind: AggregateKind) -> Aggregate {
    let w = weights(kind, sample.gradings());
    let mut acc = CompensatedSum::new();
    for (p, wp) in w.iter().enumerate() {
        let bound = wp.abs().to_f64() * sample.error_bound(p);
        acc.add(*wp * sample.values[p], bound);
    }
    let (value, error_bound) = acc.finish();
    Aggregate { value, error_bound }
}

/// Aggregate that requires exactly `expected` gradings.
pub fn aggregate_checked(sample: &TraceSample, kind: AggregateKind, expected: usize) -> Result<Aggregate> {
    if sample.gradings() < expected {
        return Err(Error::MissingGrading(sample.gradings()));
    }
    Ok(aggregate(sample, kind))
}

/// `d/ds` of the s-generating function at `s = 1`, by differentiating its interpolant
/// through `s = 0, 1, …, m` (exact for the degree-`m` polynomial).
pub fn s_derivative_at_one(sample: &TraceSample) -> Aggregate {
    let n = sample.gradings();
    let nodes: Vec<f64> = (0..n.max(2)).map(|j| j as f64).collect();
    let vals: Vec<Aggregate> = nodes
        .iter()
        .map(|&s| aggregate(sample, AggregateKind::SEval(Dd::from(s))))
        .collect();
    // derivative of the Lagrange basis at x = 1
    let x = 1.0;
    let mut acc = CompensatedSum::new();
    for (i, &xi) in nodes.iter().enumerate() {
        let mut denom = 1.0;
        for (j, &xj) in nodes.iter().enumerate() {
            if j != i {
                denom *= xi - xj;
            }
        }
        let mut numer = 0.0;
        for k in (0..nodes.len()).filter(|&k| k != i) {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i && j != k)
                .map(|(_, &xj)| x - xj)
                .product();
            numer += prod;
        }
        let coeff = Dd::from(numer) / Dd::from(denom);
        acc.add(coeff * vals[i].value, coeff.abs().to_f64() * vals[i].error_bound);
    }
    let (value, error_bound) = acc.finish();
    Aggregate { value, error_bound }
}

/// Derived trace of a product from its factors: `Σᵢ Dᵢ Π_{j≠i} Sⱼ`.
pub fn factored_derived(factors: &[TraceSample]) -> Aggregate {
    let sup: Vec<Aggregate> = factors.iter().map(|s| aggregate(s, AggregateKind::Supertrace)).collect();
    let der: Vec<Aggregate> = factors.iter().map(|s| aggregate(s, AggregateKind::Derived)).collect();
    let mut acc = CompensatedSum::new();
    for i in 0..factors.len() {
        let mut v = der[i].value;
        let mut bound = der[i].error_bound;
        for (j, s) in sup.iter().enumerate() {
            if j != i {
                // |xy − x̃ỹ| ≤ |x̃|δy + |ỹ|δx + δxδy
                let (vx, sx) = (v.abs().to_f64(), s.value.abs().to_f64());
                bound = vx * s.error_bound + sx * bound + bound * s.error_bound;
                v *= s.value;
            }
        }
        acc.add(v, bound);
    }
    let (value, error_bound) = acc.finish();
    Aggregate { value, error_bound }
}

/// Derived trace of `Π specs` computed directly and from the factors, at each `t`.
pub fn product_derived_identity_ladder(
    specs: &[GeometrySpec],
    kind: ComplexKind,
    ts: &[f64],
    policy: &SpectrumPolicy,
) -> Result<Vec<(Aggregate, Aggregate)>> {
    let Some(first) = specs.first() else {
        return Err(Error::Geometry("product identity needs at least one factor".into()));
    };
    let product = specs[1..].iter().fold(first.clone(), |acc, s| acc.product(s));
    let direct = product_spectrum(&product, kind, policy)?;
    let factors = specs
        .iter()
        .map(|s| product_spectrum(s, kind, policy))
        .collect::<Result<Vec<_>>>()?;
    ts.iter()
        .map(|&t| {
            let d = aggregate(&graded_trace(&direct, t)?, AggregateKind::Derived);
            let fs = factors.iter().map(|f| graded_trace(f, t)).collect::<Result<Vec<_>>>()?;
            Ok((d, factored_derived(&fs)))
        })
        .collect()
}

/// `(direct, factored)` derived trace of the product of `specs` at one time `t`.
pub fn product_derived_identity(
    specs: &[GeometrySpec],
    kind: ComplexKind,
    t: f64,
    policy: &SpectrumPolicy,
) -> Result<(Aggregate, Aggregate)> {
    if kind == ComplexKind::Dolbeault {
        for s in specs {
            s.require_dolbeault()?;
        }
    }
    Ok(product_derived_identity_ladder(specs, kind, &[t], policy)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CutoffPolicy;
    use crate::geometry::Block;
    use crate::numeric::PiPoly;

    fn policy(t_min: f64) -> SpectrumPolicy {
        SpectrumPolicy {
            cutoff: CutoffPolicy::Auto { eps_tail: 1e-30 },
            t_min,
        }
    }

    #[test]
    fn circle_trace_tends_to_kernel_dimension() {
        let g = GeometrySpec::single(Block::unit_circle(PiPoly::zero()));
        let sp = product_spectrum(&g, ComplexKind::DeRham, &policy(5.0)).unwrap();
        let s = graded_trace(&sp, 40.0).unwrap();
        assert!((s.values[0] - Dd::ONE).abs().to_f64() < 1e-17);
    }

    #[test]
    fn sphere_supertrace_is_two() {
        let g = GeometrySpec::single(Block::unit_sphere());
        let sp = product_spectrum(&g, ComplexKind::DeRham, &policy(0.3)).unwrap();
        let s = graded_trace(&sp, 0.3).unwrap();
        let a = aggregate(&s, AggregateKind::Supertrace);
        assert!((a.value - Dd::from(2.0)).abs().to_f64() < 1e-30);
        assert!(a.error_bound < 1e-27);
    }

    #[test]
    fn landau_index_and_derived() {
        let g = GeometrySpec::single(Block::square_torus(1, 2));
        let sp = product_spectrum(&g, ComplexKind::Dolbeault, &policy(0.1)).unwrap();
        let s = graded_trace(&sp, 0.1).unwrap();
        let sup = aggregate(&s, AggregateKind::Supertrace);
        assert!((sup.value - Dd::from(2.0)).abs().to_f64() < 1e-29);

        let g = GeometrySpec::single(Block::square_torus(1, 1));
        let sp = product_spectrum(&g, ComplexKind::Dolbeault, &policy(0.2)).unwrap();
        let t = 0.2;
        let s = graded_trace(&sp, t).unwrap();
        let der = aggregate(&s, AggregateKind::Derived);
        let q = (-(Dd::PI.mul_f64(4.0 * t))).exp();
        let want = -(q / (Dd::ONE - q));
        assert!((der.value - want).abs().to_f64() < 1e-30);
    }

    #[test]
    fn flat_torus_de_rham_derived_vanishes() {
        let g = GeometrySpec::single(Block::square_torus(1, 0));
        let sp = product_spectrum(&g, ComplexKind::DeRham, &policy(0.05)).unwrap();
        let s = graded_trace(&sp, 0.05).unwrap();
        assert_eq!(aggregate(&s, AggregateKind::Derived).value.to_f64(), 0.0);
        let at_one = aggregate(&s, AggregateKind::SEval(Dd::ONE));
        assert_eq!(at_one.value, aggregate(&s, AggregateKind::Supertrace).value);
    }

    #[test]
    fn derived_is_s_derivative() {
        let g = GeometrySpec::new(vec![Block::unit_sphere(), Block::square_torus(1, 1)]).unwrap();
        let sp = product_spectrum(&g, ComplexKind::DeRham, &policy(0.05)).unwrap();
        let s = graded_trace(&sp, 0.07).unwrap();
        let d = aggregate(&s, AggregateKind::Derived);
        let ds = s_derivative_at_one(&s);
        assert!((d.value - ds.value).abs().to_f64() <= 1e-26 * d.value.abs().to_f64().max(1.0));
    }

    #[test]
    fn product_identity_on_landau_pair() {
        let t1 = GeometrySpec::single(Block::square_torus(1, 1));
        let (direct, factored) =
            product_derived_identity(&[t1.clone(), t1], ComplexKind::Dolbeault, 0.2, &policy(0.2)).unwrap();
        assert!((direct.value - factored.value).abs().to_f64() < 1e-25);
        let q = (-(Dd::PI.mul_f64(0.8))).exp();
        let want = (q / (Dd::ONE - q)).mul_f64(-2.0);
        assert!((direct.value - want).abs().to_f64() < 1e-28);
    }

    #[test]
    fn parses_aggregate_kinds() {
        assert_eq!("super".parse::<AggregateKind>().unwrap(), AggregateKind::Supertrace);
        assert_eq!("s:0.5".parse::<AggregateKind>().unwrap(), AggregateKind::SEval(Dd::from(0.5)));
        assert!("s:x".parse::<AggregateKind>().is_err());
    }
}
