//! Individual checks and their default geometries.

use super::{CheckId, Measurement};
use crate::asymptotics::{bernoulli_oracle, circle_oracle, fit_expansion, fit_ladder, sample_aggregate, ExpansionFit, FitOptions};
use crate::charnum::{
    euler_char, euler_prediction, predicted_derived_top, predicted_subleading, rr_index, sphere_curvature_index,
    Prediction,
};
use crate::config::Config;
use crate::error::Result;
use crate::geometry::{Block, GeometrySpec};
use crate::heat::{aggregate, graded_trace, product_derived_identity_ladder, AggregateKind};
use crate::numeric::{Dd, PiPoly};
use crate::spectra::{product_spectrum, ComplexKind, SpectrumPolicy};

pub(super) struct Outcome {
    pub measurements: Vec<Measurement>,
    pub budget: f64,
    pub diagnostics: Vec<String>,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome {
            measurements: Vec::new(),
            budget: 0.0,
            diagnostics: Vec::new(),
        }
    }

    fn push(&mut self, m: Measurement) {
        self.measurements.push(m);
    }

    fn spend(&mut self, bound: f64) {
        self.budget = self.budget.max(bound);
    }

    /// Every route of `p` must give exactly its value.
    fn paths(&mut self, p: &Prediction) {
        for (name, v) in &p.paths {
            let mut m = Measurement::exact(format!("{} via {name}", p.identity), &p.value, v.to_dd(), 0.0, 0.0);
            m.computed = v.to_string();
            m.pass = *v == p.value;
            self.push(m);
        }
        self.diagnostics.extend(p.diagnostics.iter().cloned());
    }

    /// Fits `agg` of `spec` and records the largest sample bound.
    fn fit(&mut self, spec: &GeometrySpec, kind: ComplexKind, agg: AggregateKind, cfg: &Config, odd: bool) -> Result<ExpansionFit> {
        let ladder = fit_ladder(spec, kind, cfg, odd);
        let samples = sample_aggregate(spec, kind, agg, &ladder, cfg)?;
        for s in &samples {
            self.spend(s.error);
        }
        let n_max = if odd {
            spec.dim()
        } else {
            let n = spec.dim() + cfg.n_max_offset;
            n - n % 2
        };
        let mut fit = fit_expansion(&samples, spec.dim(), n_max, &FitOptions::from_config(cfg, odd))?;
        fit.ladder = Some(ladder);
        Ok(fit)
    }
}

fn zero() -> PiPoly {
    PiPoly::zero()
}

fn base_policy(cfg: &Config) -> SpectrumPolicy {
    SpectrumPolicy {
        cutoff: cfg.cutoff,
        t_min: cfg.ladder.t_min(),
    }
}

fn kinds(spec: &GeometrySpec) -> Vec<ComplexKind> {
    if spec.is_dolbeault_legal() {
        vec![ComplexKind::DeRham, ComplexKind::Dolbeault]
    } else {
        vec![ComplexKind::DeRham]
    }
}

fn has_novikov_torus(spec: &GeometrySpec) -> bool {
    spec.blocks.iter().any(|b| {
        matches!(b, Block::ComplexTorus { bundle_degree: 0, novikov_c, .. }
            if !novikov_c.0.is_zero() || !novikov_c.1.is_zero())
    })
}

pub(super) fn kind_of(id: CheckId, spec: &GeometrySpec) -> String {
    use CheckId::*;
    match id {
        MsConst | DerhamDerivedVanish | DerhamDerivedTop | RestrictCircle | WittenShift => ComplexKind::DeRham.to_string(),
        RrConst | DolDerivedTop | DolSubleading | NovikovInv | L26Sphere => ComplexKind::Dolbeault.to_string(),
        IndexVanish | ProductExact => kinds(spec).iter().map(|k| k.to_string()).collect::<Vec<_>>().join("+"),
    }
}

/// Whether `id` is defined on `spec`.
pub fn applicable(id: CheckId, spec: &GeometrySpec) -> bool {
    use CheckId::*;
    let m = spec.dim();
    match id {
        MsConst | IndexVanish => true,
        RrConst | DolDerivedTop | DolSubleading => spec.is_dolbeault_legal(),
        DerhamDerivedVanish => m >= 2,
        DerhamDerivedTop => m.is_multiple_of(2),
        ProductExact => spec.blocks.len() >= 2,
        RestrictCircle => spec.blocks.len() >= 2 && spec.blocks.iter().any(|b| matches!(b, Block::Circle { .. })),
        WittenShift => spec.is_deformed(),
        NovikovInv => spec.is_dolbeault_legal() && has_novikov_torus(spec),
        L26Sphere => matches!(spec.blocks.as_slice(), [Block::Sphere { .. }]),
    }
}

fn g(blocks: Vec<Block>) -> GeometrySpec {
    GeometrySpec::new(blocks).expect("valid default geometry")
}

fn torus(area: i64, d: i64) -> Block {
    Block::square_torus(area, d)
}

/// The default battery of each check.
pub fn default_geometries(id: CheckId) -> Vec<GeometrySpec> {
    use CheckId::*;
    let s1 = || Block::unit_circle(zero());
    let s2 = Block::unit_sphere;
    let t = |d| torus(1, d);
    match id {
        MsConst => vec![
            g(vec![s1()]),
            g(vec![s2()]),
            g(vec![t(0)]),
            g(vec![t(1)]),
            g(vec![t(2)]),
            g(vec![t(3)]),
            g(vec![s1(), s1()]),
            g(vec![s2(), s2()]),
            g(vec![s2(), t(1)]),
            g(vec![t(1), t(2)]),
        ],
        RrConst => vec![
            g(vec![s2()]),
            g(vec![t(0)]),
            g(vec![t(1)]),
            g(vec![t(2)]),
            g(vec![t(3)]),
            g(vec![s2(), s2()]),
            g(vec![s2(), t(1)]),
            g(vec![s2(), t(2)]),
            g(vec![t(1), t(1)]),
            g(vec![t(1), t(2)]),
        ],
        IndexVanish => vec![
            g(vec![s1()]),
            g(vec![s1(), s1()]),
            g(vec![s2()]),
            g(vec![t(0)]),
            g(vec![t(1)]),
            g(vec![t(3)]),
            g(vec![s2(), s1()]),
            g(vec![s2(), s2()]),
            g(vec![s2(), t(1)]),
            g(vec![t(1), t(1)]),
        ],
        DerhamDerivedVanish => vec![
            g(vec![s2()]),
            g(vec![t(0)]),
            g(vec![s1(), s1()]),
            g(vec![s2(), s1()]),
            g(vec![s2(), s2()]),
        ],
        DerhamDerivedTop => vec![g(vec![s2()]), g(vec![t(0)]), g(vec![s1(), s1()]), g(vec![s2(), s2()])],
        DolDerivedTop => vec![
            g(vec![s2()]),
            g(vec![t(0)]),
            g(vec![t(1)]),
            g(vec![t(2)]),
            g(vec![t(3)]),
            g(vec![s2(), s2()]),
            g(vec![s2(), t(1)]),
            g(vec![s2(), t(2)]),
            g(vec![t(1), t(1)]),
            g(vec![t(2), t(3)]),
            g(vec![torus(1, 2), torus(2, 1)]),
        ],
        DolSubleading => vec![
            g(vec![s2()]),
            g(vec![torus(3, 1)]),
            g(vec![torus(1, 1), torus(1, 1)]),
            g(vec![torus(1, 2), torus(2, 1)]),
        ],
        ProductExact => vec![g(vec![t(1), t(1)]), g(vec![s2(), t(1)])],
        RestrictCircle => vec![
            g(vec![s2(), s1()]),
            g(vec![s2(), Block::unit_circle(PiPoly::ratio(1, 2))]),
        ],
        WittenShift => vec![
            g(vec![Block::unit_circle(PiPoly::ratio(1, 2))]),
            g(vec![Block::torus(
                PiPoly::from_int(1),
                (zero(), PiPoly::from_int(1)),
                0,
                (PiPoly::ratio(1, 2), zero()),
            )]),
        ],
        NovikovInv => vec![g(vec![Block::torus(
            PiPoly::from_int(1),
            (zero(), PiPoly::from_int(1)),
            0,
            (PiPoly::ratio(3, 10), PiPoly::ratio(1, 5)),
        )])],
        L26Sphere => vec![g(vec![s2()])],
    }
}

pub(super) fn run(id: CheckId, spec: &GeometrySpec, cfg: &Config) -> Result<Outcome> {
    use CheckId::*;
    let mut o = Outcome::new();
    match id {
        MsConst => {
            let p = euler_prediction(spec);
            o.paths(&p);
            supertrace_constant(&mut o, spec, ComplexKind::DeRham, &p.value, cfg)?;
        }
        RrConst => {
            let p = rr_index(spec)?;
            o.paths(&p);
            supertrace_constant(&mut o, spec, ComplexKind::Dolbeault, &p.value, cfg)?;
        }
        IndexVanish => index_vanish(&mut o, spec, cfg)?,
        DerhamDerivedVanish => {
            let m = spec.dim();
            let fit = o.fit(spec, ComplexKind::DeRham, AggregateKind::Derived, cfg, false)?;
            let odd = o.fit(spec, ComplexKind::DeRham, AggregateKind::Derived, cfg, true)?;
            for n in 0..m - 1 {
                let (f, tol) = if n % 2 == 0 {
                    (&fit, cfg.tolerances.fit)
                } else {
                    (&odd, cfg.tolerances.invariance)
                };
                let (a, u) = f.coefficient(n).expect("order fitted");
                o.push(Measurement::fitted(format!("derived A{n}"), &zero(), a, u, tol));
            }
        }
        DerhamDerivedTop => {
            let p = predicted_derived_top(spec, ComplexKind::DeRham)?;
            o.paths(&p);
            let fit = o.fit(spec, ComplexKind::DeRham, AggregateKind::Derived, cfg, false)?;
            let m = spec.dim();
            let (a, u) = fit.coefficient(m).expect("order fitted");
            o.push(Measurement::fitted(format!("derived A{m}"), &p.value, a, u, cfg.tolerances.fit));
        }
        DolDerivedTop => {
            let p = predicted_derived_top(spec, ComplexKind::Dolbeault)?;
            o.paths(&p);
            let m = spec.dim();
            if let [b @ Block::ComplexTorus { bundle_degree, .. }] = spec.blocks.as_slice() {
                if *bundle_degree != 0 {
                    let oracle = bernoulli_oracle(b, m)?;
                    o.paths(&Prediction {
                        paths: vec![("Bernoulli expansion".into(), oracle[m / 2].1.clone())],
                        diagnostics: Vec::new(),
                        ..p.clone()
                    });
                }
            }
            let fit = o.fit(spec, ComplexKind::Dolbeault, AggregateKind::Derived, cfg, false)?;
            let (a, u) = fit.coefficient(m).expect("order fitted");
            o.push(Measurement::fitted(format!("derived A{m}"), &p.value, a, u, cfg.tolerances.fit));
        }
        DolSubleading => {
            let p = predicted_subleading(spec)?;
            o.paths(&p);
            let n = spec.dim() - 2;
            if let [b @ Block::ComplexTorus { bundle_degree, .. }] = spec.blocks.as_slice() {
                if *bundle_degree != 0 {
                    let oracle = bernoulli_oracle(b, n)?;
                    o.paths(&Prediction {
                        paths: vec![("Bernoulli expansion".into(), oracle[n / 2].1.clone())],
                        diagnostics: Vec::new(),
                        ..p.clone()
                    });
                }
            }
            let fit = o.fit(spec, ComplexKind::Dolbeault, AggregateKind::Derived, cfg, false)?;
            let (a, u) = fit.coefficient(n).expect("order fitted");
            o.push(Measurement::fitted(format!("derived A{n}"), &p.value, a, u, cfg.tolerances.fit));
        }
        ProductExact => {
            let factors: Vec<GeometrySpec> = spec.blocks.iter().cloned().map(GeometrySpec::single).collect();
            let ts = cfg.ladder.points();
            for kind in kinds(spec) {
                let pairs = product_derived_identity_ladder(&factors, kind, &ts, &base_policy(cfg))?;
                for (t, (direct, factored)) in ts.iter().zip(pairs) {
                    let bound = direct.error_bound + factored.error_bound;
                    o.spend(bound);
                    o.push(Measurement::agreement(
                        format!("{kind} t={t:.6e}"),
                        direct.value,
                        factored.value,
                        bound,
                        cfg.tolerances.exact,
                        cfg.tolerances.exact,
                    ));
                }
            }
        }
        RestrictCircle => restrict_circle(&mut o, spec, cfg)?,
        WittenShift => witten_shift(&mut o, spec, cfg)?,
        NovikovInv => novikov_invariance(&mut o, spec, cfg)?,
        L26Sphere => {
            let want = sphere_curvature_index(spec)?;
            let fit = o.fit(spec, ComplexKind::Dolbeault, AggregateKind::Supertrace, cfg, false)?;
            let (a, u) = fit.coefficient(2).expect("order fitted");
            o.push(Measurement::fitted("supertrace A2", &want, a, u, cfg.tolerances.fit));
        }
    }
    Ok(o)
}

fn supertrace_constant(o: &mut Outcome, spec: &GeometrySpec, kind: ComplexKind, want: &PiPoly, cfg: &Config) -> Result<()> {
    let spectrum = product_spectrum(spec, kind, &base_policy(cfg))?;
    for t in cfg.ladder.points() {
        let a = aggregate(&graded_trace(&spectrum, t)?, AggregateKind::Supertrace);
        o.spend(a.error_bound);
        o.push(Measurement::exact(
            format!("supertrace t={t:.6e}"),
            want,
            a.value,
            a.error_bound,
            cfg.tolerances.exact,
        ));
    }
    Ok(())
}

fn index_vanish(o: &mut Outcome, spec: &GeometrySpec, cfg: &Config) -> Result<()> {
    let m = spec.dim();
    for kind in kinds(spec) {
        let even = o.fit(spec, kind, AggregateKind::Supertrace, cfg, false)?;
        for (&n, (&a, &u)) in even.orders.iter().zip(even.coefficients.iter().zip(&even.uncertainty)) {
            if n != m {
                o.push(Measurement::fitted(format!("{kind} supertrace A{n}"), &zero(), a, u, cfg.tolerances.fit));
            }
        }
        let odd = o.fit(spec, kind, AggregateKind::Supertrace, cfg, true)?;
        for (&n, (&a, &u)) in odd.orders.iter().zip(odd.coefficients.iter().zip(&odd.uncertainty)) {
            if n % 2 == 1 && n != m {
                o.push(Measurement::fitted(
                    format!("{kind} supertrace A{n}"),
                    &zero(),
                    a,
                    u,
                    cfg.tolerances.invariance,
                ));
            }
        }
    }
    Ok(())
}

/// `derived(N × S¹) = −χ(N)·Tr e^{−tΔ⁰_{S¹}}` at every ladder point.
fn restrict_circle(o: &mut Outcome, spec: &GeometrySpec, cfg: &Config) -> Result<()> {
    let idx = spec
        .blocks
        .iter()
        .rposition(|b| matches!(b, Block::Circle { .. }))
        .expect("applicable");
    let circle = GeometrySpec::single(spec.blocks[idx].clone());
    let rest: Vec<Block> = spec.blocks.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, b)| b.clone()).collect();
    let chi = euler_char(&GeometrySpec::new(rest)?);
    let policy = base_policy(cfg);
    let full = product_spectrum(spec, ComplexKind::DeRham, &policy)?;
    let circ = product_spectrum(&circle, ComplexKind::DeRham, &policy)?;
    for t in cfg.ladder.points() {
        let d = aggregate(&graded_trace(&full, t)?, AggregateKind::Derived);
        let c = graded_trace(&circ, t)?;
        let value = d.value + c.values[0].mul_f64(chi as f64);
        let bound = d.error_bound + chi.unsigned_abs() as f64 * c.error_bound(0);
        o.spend(bound);
        o.push(Measurement::exact(
            format!("derived + chi(N) Tr_circle, t={t:.6e}"),
            &zero(),
            value,
            bound,
            cfg.tolerances.exact,
        ));
    }
    Ok(())
}

/// Constant spectral shift of the de Rham deformation.
fn witten_shift_amount(spec: &GeometrySpec) -> PiPoly {
    spec.blocks.iter().fold(zero(), |acc, b| match b {
        Block::Circle { witten_a, .. } => &acc + &(witten_a * witten_a),
        Block::ComplexTorus { novikov_c, .. } => {
            &(&acc + &(&novikov_c.0 * &novikov_c.0)) + &(&novikov_c.1 * &novikov_c.1)
        }
        Block::Sphere { .. } => acc,
    })
}

fn witten_shift(o: &mut Outcome, spec: &GeometrySpec, cfg: &Config) -> Result<()> {
    let shift = witten_shift_amount(spec).to_dd();
    o.diagnostics.push(format!("spectral shift {}", shift.to_sci_string(20)));
    let policy = base_policy(cfg);
    let deformed = product_spectrum(spec, ComplexKind::DeRham, &policy)?;
    let plain = product_spectrum(&spec.undeformed(), ComplexKind::DeRham, &policy)?;
    for t in cfg.ladder.points() {
        let a = graded_trace(&deformed, t)?;
        let b = graded_trace(&plain, t)?;
        let factor = (Dd::from(t) * shift).exp();
        for p in 0..a.gradings() {
            let bound = b.error_bound(p) + a.error_bound(p) * factor.to_f64();
            o.spend(bound);
            o.push(Measurement::agreement(
                format!("grading {p}, t={t:.6e}"),
                b.values[p],
                a.values[p] * factor,
                bound,
                cfg.tolerances.exact,
                cfg.tolerances.exact,
            ));
        }
    }
    if let [block @ Block::Circle { .. }] = spec.blocks.as_slice() {
        let fit = o.fit(spec, ComplexKind::DeRham, AggregateKind::SEval(Dd::ZERO), cfg, false)?;
        let n_max = fit.orders.last().copied().unwrap_or(0);
        for (n, want) in circle_oracle(block, n_max)? {
            let (a, u) = fit.coefficient(n).expect("order fitted");
            o.push(Measurement::fitted(format!("grading-0 A{n}"), &want, a, u, cfg.tolerances.invariance));
        }
    }
    Ok(())
}

fn novikov_invariance(o: &mut Outcome, spec: &GeometrySpec, cfg: &Config) -> Result<()> {
    let plain = spec.undeformed();
    let m = spec.dim();
    for agg in [AggregateKind::Supertrace, AggregateKind::Derived] {
        let a = o.fit(spec, ComplexKind::Dolbeault, agg, cfg, false)?;
        let b = o.fit(&plain, ComplexKind::Dolbeault, agg, cfg, false)?;
        for n in (0..=m).step_by(2) {
            let (x, ux) = a.coefficient(n).expect("order fitted");
            let (y, uy) = b.coefficient(n).expect("order fitted");
            o.push(Measurement::agreement(
                format!("{agg} A{n}"),
                y,
                x,
                ux + uy,
                cfg.tolerances.invariance,
                cfg.tolerances.invariance / 10.0,
            ));
        }
    }
    let policy = base_policy(cfg);
    let low = |s: &GeometrySpec| -> Result<Dd> {
        let sp = product_spectrum(s, ComplexKind::Dolbeault, &policy)?;
        Ok(sp.lines(0).first().map_or(Dd::ZERO, |l| l.eigenvalue))
    };
    let diff = (low(spec)? - low(&plain)?).abs();
    o.push(Measurement::lower_bound("lowest grading-0 eigenvalue shift", 1e-2, diff));
    Ok(())
}
