//! Graded Laplacian spectra of model geometries.
//!
//! Every block contributes a closed-form eigenvalue [`Family`] per grading; products are
//! assembled by the Künneth rule (Minkowski sums over degree compositions). Each grading
//! carries a certificate that bounds the heat-trace mass above the cutoff.

pub mod blocks;
mod tail;

pub use blocks::Family;
pub use tail::{composition_tail, TailCertificate};

use crate::config::CutoffPolicy;
use crate::error::{Error, Result};
use crate::geometry::{Block, GeometrySpec};
use crate::numeric::Dd;
use blocks::merge_sorted;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexKind {
    DeRham,
    Dolbeault,
}

impl fmt::Display for ComplexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComplexKind::DeRham => "derham",
            ComplexKind::Dolbeault => "dolbeault",
        })
    }
}

impl FromStr for ComplexKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derham" => Ok(ComplexKind::DeRham),
            "dolbeault" => Ok(ComplexKind::Dolbeault),
            other => Err(Error::Config(format!("unknown complex `{other}` (derham|dolbeault)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralLine {
    pub eigenvalue: Dd,
    pub multiplicity: u64,
}

impl SpectralLine {
    pub fn new(eigenvalue: Dd, multiplicity: u64) -> Self {
        SpectralLine {
            eigenvalue,
            multiplicity,
        }
    }
}

/// Number of gradings of `spec` in the given complex.
pub fn grading_count(spec: &GeometrySpec, kind: ComplexKind) -> Result<usize> {
    match kind {
        ComplexKind::DeRham => Ok(spec.dim() + 1),
        ComplexKind::Dolbeault => {
            spec.require_dolbeault()?;
            Ok(spec.dim() / 2 + 1)
        }
    }
}

fn block_degree(block: &Block, kind: ComplexKind) -> usize {
    match kind {
        ComplexKind::DeRham => block.real_dim(),
        ComplexKind::Dolbeault => 1,
    }
}

fn family(block: &Block, kind: ComplexKind, p: usize) -> Result<Option<Family>> {
    match kind {
        ComplexKind::DeRham => Family::de_rham(block, p),
        ComplexKind::Dolbeault => Family::dolbeault(block, p),
    }
}

/// Degree compositions `n = Σ pᵢ` of grading `n`, as per-block degree tuples.
pub fn compositions(spec: &GeometrySpec, kind: ComplexKind, n: usize) -> Vec<Vec<usize>> {
    let tops: Vec<usize> = spec.blocks.iter().map(|b| block_degree(b, kind)).collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(tops.len());
    fn rec(tops: &[usize], left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == tops.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for p in 0..=tops[cur.len()].min(left) {
            cur.push(p);
            rec(tops, left - p, cur, out);
            cur.pop();
        }
    }
    rec(&tops, n, &mut cur, &mut out);
    out
}

/// Families of each grading: one list of per-block families per composition.
pub fn graded_families(spec: &GeometrySpec, kind: ComplexKind) -> Result<Vec<Vec<Vec<Family>>>> {
    let count = grading_count(spec, kind)?;
    let mut cache: HashMap<(usize, usize), Option<Family>> = HashMap::new();
    let mut out = Vec::with_capacity(count);
    for n in 0..count {
        let mut comps = Vec::new();
        'comp: for comp in compositions(spec, kind, n) {
            let mut fams = Vec::with_capacity(comp.len());
            for (i, &p) in comp.iter().enumerate() {
                let f = match cache.get(&(i, p)) {
                    Some(f) => f.clone(),
                    None => {
                        let f = family(&spec.blocks[i], kind, p)?;
                        cache.insert((i, p), f.clone());
                        f
                    }
                };
                match f {
                    Some(f) => fams.push(f),
                    None => continue 'comp,
                }
            }
            comps.push(fams);
        }
        out.push(comps);
    }
    Ok(out)
}

/// How the cutoff of a spectrum is chosen and down to which `t` its certificate holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumPolicy {
    pub cutoff: CutoffPolicy,
    pub t_min: f64,
}

#[derive(Clone, Debug)]
pub struct GradedSpectrum {
    pub kind: ComplexKind,
    pub gradings: Vec<Vec<SpectralLine>>,
    /// Every eigenvalue `<= cutoff` is present.
    pub cutoff: f64,
    pub t_min: f64,
    pub certificates: Vec<TailCertificate>,
    /// Set when some grading retained no line at all.
    pub has_empty_grading: bool,
}

impl GradedSpectrum {
    pub fn lines(&self, grading: usize) -> &[SpectralLine] {
        &self.gradings[grading]
    }

    /// Rigorous bound on the omitted mass of grading `n` at time `t >= t_min`.
    pub fn tail_bound(&self, n: usize, t: f64) -> Result<f64> {
        if t < self.t_min * (1.0 - 1e-12) {
            return Err(Error::BelowTmin { t, t_min: self.t_min });
        }
        Ok(self.certificates[n].bound(t))
    }

    pub fn line_count(&self) -> usize {
        self.gradings.iter().map(Vec::len).sum()
    }
}

/// Chooses the cutoff for `families` under `policy`.
pub fn choose_cutoff(families: &[Vec<Vec<Family>>], policy: &SpectrumPolicy) -> Result<f64> {
    match policy.cutoff {
        CutoffPolicy::Fixed { lambda } => Ok(lambda),
        CutoffPolicy::Auto { eps_tail } => {
            let floor = families
                .iter()
                .flatten()
                .map(|fs| fs.iter().map(|f| f.min_eigenvalue().to_f64()).sum::<f64>())
                .fold(0.0f64, f64::max);
            let t = policy.t_min;
            // partition sums do not depend on the cutoff; compute them once
            let log_z: Vec<Vec<Option<tail::LogZ>>> = families
                .iter()
                .map(|comps| {
                    comps
                        .iter()
                        .map(|fs| (fs.len() > 1).then(|| tail::log_partitions(fs, t)))
                        .collect()
                })
                .collect();
            let mut lambda = floor + 30.0 / t;
            for _ in 0..400 {
                let worst = families
                    .iter()
                    .zip(&log_z)
                    .map(|(comps, lz)| {
                        comps
                            .iter()
                            .zip(lz)
                            .map(|(fs, z)| match z {
                                Some(z) => tail::chernoff(z, t, lambda),
                                None => composition_tail(fs, t, lambda),
                            })
                            .sum::<f64>()
                    })
                    .fold(0.0f64, f64::max);
                if worst <= eps_tail {
                    return Ok(lambda);
                }
                lambda *= 1.15;
            }
            Err(Error::Cutoff(format!(
                "no cutoff reaches tail {eps_tail:e} at t_min = {}",
                policy.t_min
            )))
        }
    }
}

/// Lines of one composition with total eigenvalue `<= cutoff`.
fn minkowski(fams: &[Family], cutoff: Dd, cache: &mut Vec<Vec<SpectralLine>>) -> Vec<SpectralLine> {
    let mins: Vec<Dd> = fams.iter().map(Family::min_eigenvalue).collect();
    let total_min = mins.iter().fold(Dd::ZERO, |a, b| a + *b);
    cache.clear();
    for (f, m) in fams.iter().zip(&mins) {
        cache.push(f.lines(cutoff - total_min + *m));
    }
    // suffix sums of minima for pruning
    let mut rest = vec![Dd::ZERO; fams.len() + 1];
    for i in (0..fams.len()).rev() {
        rest[i] = rest[i + 1] + mins[i];
    }
    let mut out = Vec::new();
    fn rec(
        i: usize,
        eig: Dd,
        mult: u64,
        lists: &[Vec<SpectralLine>],
        rest: &[Dd],
        cutoff: Dd,
        out: &mut Vec<SpectralLine>,
    ) {
        if i == lists.len() {
            out.push(SpectralLine::new(eig, mult));
            return;
        }
        for l in &lists[i] {
            let e = eig + l.eigenvalue;
            if e + rest[i + 1] > cutoff {
                break;
            }
            rec(i + 1, e, mult * l.multiplicity, lists, rest, cutoff, out);
        }
    }
    rec(0, Dd::ZERO, 1, cache, &rest, cutoff, &mut out);
    out
}

/// Graded spectrum of `spec` with every eigenvalue up to the policy's cutoff.
pub fn product_spectrum(spec: &GeometrySpec, kind: ComplexKind, policy: &SpectrumPolicy) -> Result<GradedSpectrum> {
    if !(policy.t_min > 0.0) {
        return Err(Error::Config("t_min must be positive".into()));
    }
    let families = graded_families(spec, kind)?;
    let cutoff = choose_cutoff(&families, policy)?;
    let cut = Dd::from(cutoff);
    let mut scratch = Vec::new();
    let mut gradings = Vec::with_capacity(families.len());
    let mut certificates = Vec::with_capacity(families.len());
    for comps in families {
        let mut lines = Vec::new();
        for fams in &comps {
            lines.extend(minkowski(fams, cut, &mut scratch));
        }
        gradings.push(merge_sorted(lines));
        certificates.push(TailCertificate::new(comps, cutoff));
    }
    let has_empty_grading = gradings.iter().any(Vec::is_empty);
    Ok(GradedSpectrum {
        kind,
        gradings,
        cutoff,
        t_min: policy.t_min,
        certificates,
        has_empty_grading,
    })
}

fn single(fam: Result<Option<Family>>, cutoff: f64) -> Result<Vec<SpectralLine>> {
    Ok(fam?.map_or_else(Vec::new, |f| f.lines(Dd::from(cutoff))))
}

fn expect_kind(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Geometry(format!("{what} requested on the wrong block kind")))
    }
}

fn expect_degree(p: usize, max: usize) -> Result<()> {
    if p <= max {
        Ok(())
    } else {
        Err(Error::Geometry(format!("degree {p} out of range 0..={max}")))
    }
}

pub fn circle_spectrum(block: &Block, p: usize, cutoff: f64) -> Result<Vec<SpectralLine>> {
    expect_kind(matches!(block, Block::Circle { .. }), "circle spectrum")?;
    expect_degree(p, 1)?;
    single(Family::de_rham(block, p), cutoff)
}

pub fn sphere_de_rham_spectrum(block: &Block, p: usize, cutoff: f64) -> Result<Vec<SpectralLine>> {
    expect_kind(matches!(block, Block::Sphere { .. }), "sphere spectrum")?;
    expect_degree(p, 2)?;
    single(Family::de_rham(block, p), cutoff)
}

pub fn torus_de_rham_spectrum(block: &Block, p: usize, cutoff: f64) -> Result<Vec<SpectralLine>> {
    expect_kind(matches!(block, Block::ComplexTorus { .. }), "torus spectrum")?;
    expect_degree(p, 2)?;
    single(Family::de_rham(block, p), cutoff)
}

pub fn torus_dolbeault_spectrum(block: &Block, q: usize, cutoff: f64) -> Result<Vec<SpectralLine>> {
    expect_kind(matches!(block, Block::ComplexTorus { .. }), "torus Dolbeault spectrum")?;
    expect_degree(q, 1)?;
    single(Family::dolbeault(block, q), cutoff)
}

pub fn sphere_dolbeault_spectrum(block: &Block, q: usize, cutoff: f64) -> Result<Vec<SpectralLine>> {
    expect_kind(matches!(block, Block::Sphere { .. }), "sphere Dolbeault spectrum")?;
    expect_degree(q, 1)?;
    single(Family::dolbeault(block, q), cutoff)
}

/// Bound on the omitted mass of one block family (the `tail_bound` of a single block).
pub fn tail_bound(family: &Family, t: f64, cutoff: f64) -> f64 {
    family.tail(t, cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::PiPoly;

    fn pairs(lines: &[SpectralLine]) -> Vec<(f64, u64)> {
        lines.iter().map(|l| (l.eigenvalue.to_f64(), l.multiplicity)).collect()
    }

    fn close(got: &[(f64, u64)], want: &[(f64, u64)]) -> bool {
        got.len() == want.len()
            && got
                .iter()
                .zip(want)
                .all(|(g, w)| (g.0 - w.0).abs() <= 1e-12 * w.0.abs().max(1.0) && g.1 == w.1)
    }

    #[test]
    fn circle_examples() {
        let c = Block::unit_circle(PiPoly::zero());
        assert_eq!(pairs(&circle_spectrum(&c, 0, 4.5).unwrap()), vec![(0.0, 1), (1.0, 2), (4.0, 2)]);
        let c = Block::unit_circle(PiPoly::ratio(1, 2));
        assert_eq!(pairs(&circle_spectrum(&c, 1, 1.3).unwrap()), vec![(0.25, 1), (1.25, 2)]);
        let c = Block::circle(PiPoly::pi_pow(1), PiPoly::zero());
        assert_eq!(pairs(&circle_spectrum(&c, 0, 4.1).unwrap()), vec![(0.0, 1), (4.0, 2)]);
        // a cutoff below a² is legal and empty
        assert!(circle_spectrum(&Block::unit_circle(PiPoly::from_int(2)), 0, 3.0).unwrap().is_empty());
    }

    #[test]
    fn sphere_examples() {
        let s = Block::unit_sphere();
        assert_eq!(pairs(&sphere_de_rham_spectrum(&s, 0, 6.5).unwrap()), vec![(0.0, 1), (2.0, 3), (6.0, 5)]);
        assert_eq!(pairs(&sphere_de_rham_spectrum(&s, 1, 6.5).unwrap()), vec![(2.0, 6), (6.0, 10)]);
        let s2 = Block::sphere(PiPoly::from_int(2));
        assert_eq!(pairs(&sphere_de_rham_spectrum(&s2, 0, 0.6).unwrap()), vec![(0.0, 1), (0.5, 3)]);
        assert_eq!(pairs(&sphere_dolbeault_spectrum(&s, 0, 2.5).unwrap()), vec![(0.0, 1), (2.0, 3)]);
        assert_eq!(pairs(&sphere_dolbeault_spectrum(&s, 1, 6.5).unwrap()), vec![(2.0, 3), (6.0, 5)]);
        assert_eq!(pairs(&sphere_dolbeault_spectrum(&s2, 1, 1.6).unwrap()), vec![(0.5, 3), (1.5, 5)]);
    }

    #[test]
    fn torus_examples() {
        let four_pi2 = 4.0 * std::f64::consts::PI.powi(2);
        let t = Block::square_torus(1, 0);
        let got = pairs(&torus_de_rham_spectrum(&t, 0, four_pi2 + 1.0).unwrap());
        assert!(close(&got, &[(0.0, 1), (four_pi2, 4)]));
        assert_eq!(pairs(&torus_de_rham_spectrum(&t, 1, 1.0).unwrap()), vec![(0.0, 2)]);
        let tc = Block::torus(
            PiPoly::from_int(1),
            (PiPoly::zero(), PiPoly::from_int(1)),
            0,
            (PiPoly::ratio(3, 10), PiPoly::zero()),
        );
        let got = pairs(&torus_de_rham_spectrum(&tc, 0, four_pi2 + 1.0).unwrap());
        assert!(close(&got, &[(0.09, 1), (four_pi2 + 0.09, 4)]));

        let four_pi = 4.0 * std::f64::consts::PI;
        let l1 = Block::square_torus(1, 1);
        assert!(close(&pairs(&torus_dolbeault_spectrum(&l1, 0, four_pi + 1.0).unwrap()), &[(0.0, 1), (four_pi, 1)]));
        let l3 = Block::square_torus(1, 3);
        assert!(close(&pairs(&torus_dolbeault_spectrum(&l3, 1, 3.0 * four_pi + 1.0).unwrap()), &[(3.0 * four_pi, 3)]));
        let l0 = Block::square_torus(1, 0);
        assert_eq!(
            pairs(&torus_dolbeault_spectrum(&l0, 0, 100.0).unwrap()),
            pairs(&torus_de_rham_spectrum(&l0, 0, 100.0).unwrap())
        );
    }

    #[test]
    fn product_examples() {
        let fixed = |lambda| SpectrumPolicy {
            cutoff: CutoffPolicy::Fixed { lambda },
            t_min: 0.01,
        };
        let c = Block::unit_circle(PiPoly::zero());
        let g = GeometrySpec::new(vec![c.clone(), c]).unwrap();
        let sp = product_spectrum(&g, ComplexKind::DeRham, &fixed(0.5)).unwrap();
        assert_eq!(pairs(sp.lines(1)), vec![(0.0, 2)]);

        let t = Block::square_torus(1, 1);
        let g = GeometrySpec::new(vec![t.clone(), t]).unwrap();
        let four_pi = 4.0 * std::f64::consts::PI;
        let sp = product_spectrum(&g, ComplexKind::Dolbeault, &fixed(four_pi + 1.0)).unwrap();
        assert!(close(&pairs(sp.lines(0)), &[(0.0, 1), (four_pi, 2)]));
    }

    #[test]
    fn dolbeault_rejects_circles() {
        let g = GeometrySpec::single(Block::unit_circle(PiPoly::zero()));
        let p = SpectrumPolicy {
            cutoff: CutoffPolicy::Fixed { lambda: 10.0 },
            t_min: 0.1,
        };
        assert!(product_spectrum(&g, ComplexKind::Dolbeault, &p).is_err());
    }

    #[test]
    fn certificate_refuses_small_t() {
        let g = GeometrySpec::single(Block::unit_sphere());
        let p = SpectrumPolicy {
            cutoff: CutoffPolicy::Auto { eps_tail: 1e-25 },
            t_min: 0.05,
        };
        let sp = product_spectrum(&g, ComplexKind::DeRham, &p).unwrap();
        assert!(sp.tail_bound(0, 0.05).unwrap() <= 1e-25);
        assert!(matches!(sp.tail_bound(0, 0.01), Err(Error::BelowTmin { .. })));
    }
}
