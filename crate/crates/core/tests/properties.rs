//! Property tests over randomly drawn model geometries.

use heatlab_core::asymptotics::{fit_expansion, FitOptions, Sample};
use heatlab_core::charnum::{class_monomial, euler_prediction, predicted_derived_top, rr_index, ClassFactor};
use heatlab_core::config::{Config, CutoffPolicy};
use heatlab_core::geometry::{char_record, Block, GeometrySpec};
use heatlab_core::heat::{aggregate, graded_trace, product_derived_identity, s_derivative_at_one, AggregateKind};
use heatlab_core::numeric::{Dd, PiPoly};
use heatlab_core::spectra::{product_spectrum, tail_bound, ComplexKind, Family, SpectralLine, SpectrumPolicy};
use proptest::prelude::*;
use std::f64::consts::PI;

fn policy(t_min: f64) -> SpectrumPolicy {
    SpectrumPolicy {
        cutoff: CutoffPolicy::default(),
        t_min,
    }
}

fn fixed(lambda: f64) -> SpectrumPolicy {
    SpectrumPolicy {
        cutoff: CutoffPolicy::Fixed { lambda },
        t_min: 0.5,
    }
}

fn ratio() -> impl Strategy<Value = PiPoly> {
    (1i64..=4, 1i64..=3).prop_map(|(n, d)| PiPoly::ratio(n, d))
}

fn modulus() -> impl Strategy<Value = (PiPoly, PiPoly)> {
    (-2i64..=2, 2i64..=6, 1i64..=3).prop_map(|(x, y, d)| (PiPoly::ratio(x, 2 * d), PiPoly::ratio(y, 2 * d)))
}

fn circle(witten: bool) -> impl Strategy<Value = Block> {
    let a = if witten { (-2i64..=2).boxed() } else { Just(0i64).boxed() };
    (1i64..=3, a).prop_map(|(r, a)| Block::circle(PiPoly::monomial(num(2 * r, 1), 2), PiPoly::ratio(a, 2)))
}

fn sphere() -> impl Strategy<Value = Block> {
    (1i64..=3, 1i64..=2).prop_map(|(n, d)| Block::sphere(PiPoly::ratio(n, d)))
}

fn torus(degree: std::ops::RangeInclusive<i64>) -> impl Strategy<Value = Block> {
    (ratio(), modulus(), degree).prop_map(|(a, m, d)| Block::torus(a, m, d, (PiPoly::zero(), PiPoly::zero())))
}

fn num(n: i64, d: i64) -> num_rational::BigRational {
    heatlab_core::numeric::exact::rational(n, d)
}

fn any_block() -> impl Strategy<Value = Block> {
    prop_oneof![circle(true), sphere(), torus(-3..=3)]
}

fn undeformed_block() -> impl Strategy<Value = Block> {
    prop_oneof![circle(false), sphere(), torus(-3..=3)]
}

fn complex_block() -> impl Strategy<Value = Block> {
    prop_oneof![sphere(), torus(-3..=3)]
}

fn spec_of(blocks: Vec<Block>) -> GeometrySpec {
    GeometrySpec::new(blocks).unwrap()
}

fn pairs(lines: &[SpectralLine]) -> Vec<(Dd, u64)> {
    lines.iter().map(|l| (l.eigenvalue, l.multiplicity)).collect()
}

fn close(a: Dd, b: Dd, bound: f64) -> bool {
    (a - b).abs().to_f64() <= bound + 1e-27 * b.abs().to_f64().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn geometry_json_round_trip(blocks in prop::collection::vec(any_block(), 1..4)) {
        let spec = spec_of(blocks);
        let again = GeometrySpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(&again, &spec);
        prop_assert_eq!(again.to_json(), spec.to_json());
    }

    #[test]
    fn char_record_is_multiplicative(blocks in prop::collection::vec(any_block(), 1..4)) {
        let spec = spec_of(blocks);
        let rec = char_record(&spec);
        let chi: i64 = rec.blocks.iter().map(|b| b.euler_char).product();
        let vol = rec.blocks.iter().fold(PiPoly::from_int(1), |acc, b| &acc * &b.volume);
        prop_assert_eq!(rec.euler_char, chi);
        prop_assert_eq!(rec.total_volume, vol);
        prop_assert_eq!(rec.m, spec.dim());
    }

    #[test]
    fn spectrum_lines_are_sorted_and_merged(blocks in prop::collection::vec(any_block(), 1..3)) {
        let spec = spec_of(blocks);
        let sp = product_spectrum(&spec, ComplexKind::DeRham, &fixed(60.0)).unwrap();
        for p in 0..sp.gradings.len() {
            let lines = sp.lines(p);
            prop_assert!(lines.iter().all(|l| l.multiplicity >= 1 && l.eigenvalue.to_f64() >= 0.0));
            prop_assert!(lines.windows(2).all(|w| w[0].eigenvalue < w[1].eigenvalue));
        }
    }

    #[test]
    fn poincare_duality(blocks in prop::collection::vec(undeformed_block(), 1..3)) {
        let spec = spec_of(blocks);
        let m = spec.dim();
        let sp = product_spectrum(&spec, ComplexKind::DeRham, &fixed(80.0)).unwrap();
        for p in 0..=m {
            prop_assert_eq!(pairs(sp.lines(p)), pairs(sp.lines(m - p)), "p = {}", p);
        }
    }

    #[test]
    fn serre_duality(block in torus(1..=3)) {
        let Block::ComplexTorus { area, modulus, bundle_degree, novikov_c } = block.clone() else { unreachable!() };
        let dual = Block::torus(area, modulus, -bundle_degree, novikov_c);
        let a = product_spectrum(&GeometrySpec::single(block), ComplexKind::Dolbeault, &fixed(200.0)).unwrap();
        let b = product_spectrum(&GeometrySpec::single(dual), ComplexKind::Dolbeault, &fixed(200.0)).unwrap();
        prop_assert_eq!(pairs(a.lines(0)), pairs(b.lines(1)));
        prop_assert_eq!(pairs(a.lines(1)), pairs(b.lines(0)));
        let d = bundle_degree.unsigned_abs();
        prop_assert!(a.lines(0).iter().chain(a.lines(1)).all(|l| l.multiplicity == d));
    }

    #[test]
    fn mckean_singer_constancy(blocks in prop::collection::vec(undeformed_block(), 1..3), t in 0.2f64..2.0) {
        let spec = spec_of(blocks);
        let chi = Dd::from(char_record(&spec).euler_char as f64);
        let sp = product_spectrum(&spec, ComplexKind::DeRham, &policy(0.2)).unwrap();
        let s = graded_trace(&sp, t).unwrap();
        prop_assert!(s.values.iter().all(|v| v.to_f64() >= 0.0));
        let a = aggregate(&s, AggregateKind::Supertrace);
        prop_assert!(close(a.value, chi, a.error_bound), "{} vs {}", a.value, chi);
    }

    #[test]
    fn riemann_roch_constancy(blocks in prop::collection::vec(complex_block(), 1..3), t in 0.2f64..2.0) {
        let spec = spec_of(blocks);
        let index = rr_index(&spec).unwrap();
        prop_assert!(index.paths_agree());
        let sp = product_spectrum(&spec, ComplexKind::Dolbeault, &policy(0.2)).unwrap();
        let a = aggregate(&graded_trace(&sp, t).unwrap(), AggregateKind::Supertrace);
        prop_assert!(close(a.value, index.value.to_dd(), a.error_bound), "{} vs {}", a.value, index.value);
    }

    #[test]
    fn witten_shift_factorizes(a in 1i64..=4, which in 0usize..2, t in 0.2f64..2.0) {
        let w = PiPoly::ratio(a, 4);
        let (deformed, plain, shift) = if which == 0 {
            let circ = PiPoly::monomial(num(2, 1), 2);
            (Block::circle(circ.clone(), w.clone()), Block::circle(circ, PiPoly::zero()), &w * &w)
        } else {
            let c = (w.clone(), PiPoly::ratio(1, 5));
            let shift = &(&c.0 * &c.0) + &(&c.1 * &c.1);
            (Block::torus(PiPoly::from_int(1), (PiPoly::zero(), PiPoly::from_int(1)), 0, c), Block::square_torus(1, 0), shift)
        };
        let factor = (shift.to_dd().mul_f64(t)).exp();
        let sd = graded_trace(&product_spectrum(&GeometrySpec::single(deformed), ComplexKind::DeRham, &policy(0.2)).unwrap(), t).unwrap();
        let sp = graded_trace(&product_spectrum(&GeometrySpec::single(plain), ComplexKind::DeRham, &policy(0.2)).unwrap(), t).unwrap();
        for p in 0..sp.gradings() {
            let bound = sd.error_bound(p) * factor.to_f64() + sp.error_bound(p);
            prop_assert!(close(sd.values[p] * factor, sp.values[p], bound), "grading {}", p);
        }
    }

    #[test]
    fn derived_is_s_derivative(blocks in prop::collection::vec(complex_block(), 1..3), t in 0.2f64..2.0, dol in any::<bool>()) {
        let spec = spec_of(blocks);
        let kind = if dol { ComplexKind::Dolbeault } else { ComplexKind::DeRham };
        let s = graded_trace(&product_spectrum(&spec, kind, &policy(0.2)).unwrap(), t).unwrap();
        let d = aggregate(&s, AggregateKind::Derived);
        let e = s_derivative_at_one(&s);
        prop_assert!(close(d.value, e.value, d.error_bound + e.error_bound), "{} vs {}", d.value, e.value);
    }

    #[test]
    fn product_derived_identity_holds(a in complex_block(), b in complex_block(), t in 0.2f64..2.0) {
        let specs = [GeometrySpec::single(a), GeometrySpec::single(b)];
        let (direct, factored) = product_derived_identity(&specs, ComplexKind::Dolbeault, t, &policy(0.2)).unwrap();
        let budget = 10.0 * (direct.error_bound + factored.error_bound);
        prop_assert!(close(direct.value, factored.value, budget), "{} vs {}", direct.value, factored.value);
    }

    #[test]
    fn tail_bounds_are_monotone(block in any_block(), p in 0usize..3, t in 0.1f64..1.0, cut in 20f64..200.0) {
        if let Some(f) = Family::de_rham(&block, p).unwrap() {
            let base = tail_bound(&f, t, cut);
            prop_assert!(base >= 0.0);
            prop_assert!(tail_bound(&f, t * 1.5, cut) <= base);
            prop_assert!(tail_bound(&f, t, cut * 1.5) <= base);
        }
    }

    #[test]
    fn tail_bound_dominates_omitted_lines(block in any_block(), t in 0.1f64..1.0, cut in 20f64..100.0) {
        let f = Family::de_rham(&block, 0).unwrap().unwrap();
        let omitted: f64 = f
            .lines(Dd::from(20.0 * cut))
            .iter()
            .filter(|l| l.eigenvalue.to_f64() > cut)
            .map(|l| l.multiplicity as f64 * (-t * l.eigenvalue.to_f64()).exp())
            .sum();
        prop_assert!(omitted <= tail_bound(&f, t, cut) * (1.0 + 1e-12));
    }

    #[test]
    fn lattice_matches_brute_force(area in ratio(), m in modulus(), cutoff in 50f64..400.0) {
        let (x, y) = (m.0.to_f64(), m.1.to_f64());
        let block = Block::torus(area.clone(), m, 0, (PiPoly::zero(), PiPoly::zero()));
        let s = (area.to_f64() / y).sqrt();
        let mut count = 0u64;
        let reach = 80i64;
        for m1 in -reach..=reach {
            for m2 in -reach..=reach {
                let u = m1 as f64 / s;
                let v = (m2 as f64 - m1 as f64 * x) / (s * y);
                let lambda = 4.0 * PI * PI * (u * u + v * v);
                prop_assume!((lambda - cutoff).abs() > 1e-6 * cutoff);
                if lambda <= cutoff {
                    count += 1;
                }
            }
        }
        let f = Family::de_rham(&block, 0).unwrap().unwrap();
        let total: u64 = f.lines(Dd::from(cutoff)).iter().map(|l| l.multiplicity).sum();
        prop_assert_eq!(total, count);
    }

    #[test]
    fn characteristic_number_paths_agree(blocks in prop::collection::vec(complex_block(), 1..4)) {
        let spec = spec_of(blocks);
        prop_assert!(euler_prediction(&spec).paths_agree());
        prop_assert!(rr_index(&spec).unwrap().paths_agree());
        let top = predicted_derived_top(&spec, ComplexKind::Dolbeault).unwrap();
        prop_assert!(top.paths_agree(), "{:?}", top.paths);
    }

    #[test]
    fn pairing_is_symmetric_and_graded(blocks in prop::collection::vec(complex_block(), 2..4), k in 1usize..4) {
        let spec = spec_of(blocks.clone());
        let mut rev = blocks;
        rev.reverse();
        let rev = spec_of(rev);
        let n = spec.blocks.len();
        for f in [
            vec![ClassFactor::ChernT(k)],
            vec![ClassFactor::Todd(n)],
            vec![ClassFactor::ChernT(1), ClassFactor::ChE(n - 1)],
            vec![ClassFactor::ChT(k), ClassFactor::ChernE(1)],
        ] {
            let (v, mismatch) = class_monomial(&spec, &f).unwrap();
            prop_assert_eq!(class_monomial(&rev, &f).unwrap(), (v.clone(), mismatch));
            if mismatch {
                prop_assert_eq!(v, num(0, 1));
            }
        }
    }

    #[test]
    fn synthetic_fit_round_trip(coeffs in prop::collection::vec(-5i64..=5, 1..4), m in 1usize..=4) {
        let ladder = Config::default().ladder;
        let samples: Vec<Sample> = ladder
            .points()
            .into_iter()
            .map(|t| {
                let td = Dd::from(t);
                let mut v = Dd::ZERO;
                for (k, c) in coeffs.iter().enumerate() {
                    v += td.powi(k as i32) * Dd::from(*c as f64);
                }
                Sample { t, value: v * td.sqrt().powi(-(m as i32)), error: 0.0 }
            })
            .collect();
        let n_max = 2 * (coeffs.len() - 1);
        let fit = fit_expansion(&samples, m, n_max, &FitOptions::default()).unwrap();
        for (k, c) in coeffs.iter().enumerate() {
            let (a, u) = fit.coefficient(2 * k).unwrap();
            prop_assert!(u > 0.0);
            prop_assert!((a - Dd::from(*c as f64)).abs().to_f64() <= u.max(1e-20), "A{} = {} ± {}", 2 * k, a, u);
        }
    }
}

#[test]
fn weyl_leading_term() {
    let cfg = Config::default();
    let blocks = [
        Block::unit_circle(PiPoly::zero()),
        Block::unit_sphere(),
        Block::torus(PiPoly::ratio(3, 2), (PiPoly::ratio(1, 4), PiPoly::ratio(3, 4)), 0, (PiPoly::zero(), PiPoly::zero())),
    ];
    for b in blocks {
        let spec = GeometrySpec::single(b);
        let m = spec.dim();
        // s = 0 keeps grading 0 only: the scalar Laplacian
        let fit = heatlab_core::asymptotics::fit_trace(&spec, ComplexKind::DeRham, AggregateKind::SEval(Dd::ZERO), (m + 2) / 2 * 2, &cfg, false).unwrap();
        let (a0, u) = fit.coefficient(0).unwrap();
        let want = char_record(&spec).total_volume.to_dd() / (Dd::PI.mul_f64(4.0)).sqrt().powi(m as i32);
        assert!((a0 - want).abs().to_f64() < 1e-8 && u < 1e-8, "{spec}: {a0} vs {want} ± {u}");
    }
}
