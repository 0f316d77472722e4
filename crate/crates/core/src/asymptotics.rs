//! Small-time expansion coefficients of heat-trace aggregates.
//!
//! A trace in real dimension `m` behaves like `Σₙ Aₙ t^{(n−m)/2}`. Multiplying by `t^{m/2}`
//! turns it into a power series in `√t`, which is fitted by least squares on a geometric
//! ladder of times with a block of guard orders above the reported ones.

use crate::config::{Config, Ladder};
use crate::error::{Error, Result};
use crate::geometry::{Block, GeometrySpec};
use crate::heat::{aggregate, graded_trace, AggregateKind};
use crate::numeric::exact::rational;
use crate::numeric::linalg::least_squares;
use crate::numeric::{Dd, PiPoly, DD_EPS};
use crate::spectra::{product_spectrum, ComplexKind, SpectrumPolicy};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

/// One evaluated point `(t, value ± error)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub value: Dd,
    pub error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Extra orders fitted above `n_max` and discarded.
    pub guard_orders: usize,
    /// 2 fits even orders only, 1 fits every half-integer power.
    pub step: usize,
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            guard_orders: 10,
            step: 2,
            max_condition: 1e20,
        }
    }
}

impl FitOptions {
    pub fn from_config(cfg: &Config, odd: bool) -> FitOptions {
        FitOptions {
            guard_orders: cfg.guard_orders,
            step: if odd { 1 } else { 2 },
            max_condition: cfg.max_condition,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionFit {
    pub m: usize,
    pub orders: Vec<usize>,
    pub coefficients: Vec<Dd>,
    pub uncertainty: Vec<f64>,
    pub residual_norm: f64,
    pub condition: f64,
    pub guard_orders: usize,
    pub ladder: Option<Ladder>,
}

impl ExpansionFit {
    /// `(Aₙ, uncertainty)` for a reported order.
    pub fn coefficient(&self, n: usize) -> Option<(Dd, f64)> {
        self.orders
            .iter()
            .position(|&o| o == n)
            .map(|i| (self.coefficients[i], self.uncertainty[i]))
    }

    pub fn to_value(&self) -> Value {
        let mut coeffs = Map::new();
        let mut unc = Map::new();
        for (i, n) in self.orders.iter().enumerate() {
            coeffs.insert(n.to_string(), Value::String(self.coefficients[i].to_sci_string(32)));
            unc.insert(n.to_string(), json!(self.uncertainty[i]));
        }
        json!({
            "m": self.m,
            "coefficients": coeffs,
            "uncertainty": unc,
            "residual_norm": self.residual_norm,
            "condition": self.condition,
            "guard_orders": self.guard_orders,
            "ladder": self.ladder.map(|l| json!({"t0": l.t0, "ratio": l.ratio, "count": l.count})),
        })
    }
}

/// `t^{k/2}` in double-double.
fn half_power(t: f64, k: usize) -> Dd {
    let td = Dd::from(t);
    let whole = td.powi((k / 2) as i32);
    if k % 2 == 1 {
        whole * td.sqrt()
    } else {
        whole
    }
}

struct RawFit {
    x: Vec<Dd>,
    pinv: Vec<Vec<Dd>>,
    residual: f64,
    condition: f64,
}

fn solve(g: &[Dd], ts: &[f64], cols: usize, step: usize, max_condition: f64) -> Result<RawFit> {
    let design: Vec<Vec<Dd>> = ts
        .iter()
        .map(|&t| (0..cols).map(|j| half_power(t, j * step)).collect())
        .collect();
    let ls = least_squares(&design, g)?;
    if !(ls.condition <= max_condition) {
        return Err(Error::FitRefused(format!(
            "design condition number {:.3e} exceeds {:.3e}; use a wider ladder or fewer orders",
            ls.condition, max_condition
        )));
    }
    Ok(RawFit {
        x: ls.x,
        pinv: ls.pinv,
        residual: ls.residual_norm.to_f64(),
        condition: ls.condition,
    })
}

/// Fits `value(t) ≈ Σ Aₙ t^{(n−m)/2}` for `n = 0, step, …, n_max` plus guard orders.
pub fn fit_expansion(samples: &[Sample], m: usize, n_max: usize, opts: &FitOptions) -> Result<ExpansionFit> {
    if opts.step == 0 || opts.step > 2 || !n_max.is_multiple_of(opts.step) {
        return Err(Error::Config(format!(
            "n_max = {n_max} is not a multiple of the order step {}",
            opts.step
        )));
    }
    let reported = n_max / opts.step + 1;
    let cols = reported + opts.guard_orders;
    if samples.len() < cols {
        return Err(Error::InsufficientSamples {
            have: samples.len(),
            need: cols,
        });
    }
    if let Some(s) = samples.iter().find(|s| !(s.t > 0.0) || !s.value.is_finite()) {
        return Err(Error::Config(format!("invalid sample at t = {}", s.t)));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let g: Vec<Dd> = samples.iter().map(|s| s.value * half_power(s.t, m)).collect();
    let errs: Vec<f64> = samples
        .iter()
        .map(|s| s.error * half_power(s.t, m).to_f64())
        .collect();

    let full = solve(&g, &ts, cols, opts.step, opts.max_condition)?;
    let reduced = if opts.guard_orders > 0 {
        Some(solve(&g, &ts, cols - 1, opts.step, opts.max_condition)?)
    } else {
        None
    };
    let dof = (samples.len() - cols).max(1) as f64;
    let sigma = full.residual / dof.sqrt();

    let mut uncertainty = Vec::with_capacity(reported);
    for i in 0..reported {
        let a = full.x[i];
        let drop = reduced.as_ref().map_or(0.0, |r| (a - r.x[i]).abs().to_f64());
        let row = &full.pinv[i];
        let mut prop = 0.0;
        let mut scale = 0.0;
        let mut norm2 = 0.0;
        for (j, p) in row.iter().enumerate() {
            let p = p.abs().to_f64();
            prop += p * errs[j];
            scale += p * g[j].abs().to_f64();
            norm2 += p * p;
        }
        let rounding = full.condition * 64.0 * DD_EPS * scale;
        let floor = 16.0 * DD_EPS * (1.0 + a.abs().to_f64());
        uncertainty.push(drop + prop + rounding + sigma * norm2.sqrt() + floor);
    }
    Ok(ExpansionFit {
        m,
        orders: (0..reported).map(|i| i * opts.step).collect(),
        coefficients: full.x[..reported].to_vec(),
        uncertainty,
        residual_norm: full.residual,
        condition: full.condition,
        guard_orders: opts.guard_orders,
        ladder: None,
    })
}

/// Intrinsic time scale of a block: below it the expansion is accurate.
fn block_time_scale(b: &Block, kind: ComplexKind) -> f64 {
    match b {
        Block::Sphere { radius } => radius.to_f64().powi(2),
        Block::Circle { circumference, .. } => {
            let l = circumference.to_f64() / (2.0 * std::f64::consts::PI);
            2.0 * l * l
        }
        Block::ComplexTorus {
            area, bundle_degree, ..
        } if kind == ComplexKind::Dolbeault && *bundle_degree != 0 => area.to_f64() / bundle_degree.unsigned_abs() as f64,
        Block::ComplexTorus { .. } => {
            let l = b.shortest_period().unwrap_or(1.0);
            l * l / 20.0
        }
    }
}

/// Ladder used for fitting `spec`: the configured ladder, shrunk for small blocks when
/// the adaptive ladder is enabled.
pub fn fit_ladder(spec: &GeometrySpec, kind: ComplexKind, cfg: &Config, odd: bool) -> Ladder {
    let base = if odd { cfg.odd_ladder } else { cfg.ladder };
    if !cfg.adaptive_ladder {
        return base;
    }
    let scale = spec
        .blocks
        .iter()
        .map(|b| block_time_scale(b, kind))
        .fold(1.0_f64, f64::min);
    base.scaled(scale)
}

/// Aggregate of `spec` at every point of `ladder`, with certified error bounds.
pub fn sample_aggregate(
    spec: &GeometrySpec,
    kind: ComplexKind,
    agg: AggregateKind,
    ladder: &Ladder,
    cfg: &Config,
) -> Result<Vec<Sample>> {
    if kind == ComplexKind::Dolbeault {
        spec.require_dolbeault()?;
    }
    let policy = SpectrumPolicy {
        cutoff: cfg.cutoff,
        t_min: ladder.t_min(),
    };
    let spectrum = product_spectrum(spec, kind, &policy)?;
    ladder
        .points()
        .into_iter()
        .map(|t| {
            let a = aggregate(&graded_trace(&spectrum, t)?, agg);
            Ok(Sample {
                t,
                value: a.value,
                error: a.error_bound,
            })
        })
        .collect()
}

/// End-to-end fit of an aggregate of `spec` up to order `n_max`.
pub fn fit_trace(
    spec: &GeometrySpec,
    kind: ComplexKind,
    agg: AggregateKind,
    n_max: usize,
    cfg: &Config,
    odd: bool,
) -> Result<ExpansionFit> {
    let ladder = fit_ladder(spec, kind, cfg, odd);
    let samples = sample_aggregate(spec, kind, agg, &ladder, cfg)?;
    let mut fit = fit_expansion(&samples, spec.dim(), n_max, &FitOptions::from_config(cfg, odd))?;
    fit.ladder = Some(ladder);
    Ok(fit)
}

/// Bernoulli numbers `B₀ … B_n` with `B₁ = −1/2`.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = vec![BigRational::one()];
    for k in 1..=n {
        // Σ_{j<k+1} C(k+1, j) B_j = 0
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(k + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(k + 1)));
    }
    b
}

fn factorial(k: usize) -> BigRational {
    BigRational::from_integer((1..=k).fold(BigInt::one(), |a, i| a * BigInt::from(i)))
}

/// Exact coefficients `(n, Aₙ)`, `n = 0, 2, …, n_max`, of the derived Dolbeault trace of
/// a torus carrying a line bundle of degree `d ≠ 0`.
///
/// The derived trace is `−|d| Σ e^{−2Bkt}` over the Landau levels of the `q = 1` grading,
/// i.e. `−|d|/(e^x − 1)` (`d > 0`) or `−|d|eˣ/(eˣ − 1)` (`d < 0`) with `x = 2Bt`, `2B = 4π|d|/A`.
pub fn bernoulli_oracle(block: &Block, n_max: usize) -> Result<Vec<(usize, PiPoly)>> {
    let Block::ComplexTorus {
        area, bundle_degree, ..
    } = block
    else {
        return Err(Error::Unsupported("the Bernoulli oracle needs a complex torus".into()));
    };
    let d = *bundle_degree;
    if d == 0 {
        return Err(Error::Unsupported("the Bernoulli oracle needs a nonzero bundle degree".into()));
    }
    let inv_area = area
        .recip_monomial()
        .ok_or_else(|| Error::Unsupported(format!("area {area} is not a single power of pi")))?;
    let abs_d = PiPoly::from_int(d.abs());
    let two_b = &(&PiPoly::monomial(rational(4, 1), 2) * &abs_d) * &inv_area;
    let two_b_inv = two_b.recip_monomial().expect("monomial");
    let kmax = n_max / 2;
    let mut b = bernoulli_numbers(kmax.max(1));
    if d < 0 {
        b[1] = rational(1, 2);
    }
    let mut out = Vec::new();
    for k in 0..=kmax {
        let power = if k == 0 { two_b_inv.clone() } else { two_b.powi(k as u32 - 1) };
        let c = -b[k].clone() / factorial(k);
        out.push((2 * k, (&abs_d * &power).scale(&c)));
    }
    Ok(out)
}

/// Exact coefficients `(n, Aₙ)` of the grading-0 trace of a circle, `L(4πt)^{−1/2}e^{−ta²}`.
pub fn circle_oracle(block: &Block, n_max: usize) -> Result<Vec<(usize, PiPoly)>> {
    let Block::Circle {
        circumference, witten_a,
    } = block
    else {
        return Err(Error::Unsupported("the circle oracle needs a circle".into()));
    };
    // L(4π)^{−1/2} = (L/2)π^{−1/2}
    let lead = &circumference.scale(&rational(1, 2)) * &PiPoly::monomial(BigRational::one(), -1);
    let neg_a2 = -(witten_a * witten_a);
    let mut out = Vec::new();
    let mut power = PiPoly::from_int(1);
    for k in 0..=n_max / 2 {
        let c = BigRational::one() / factorial(k);
        out.push((2 * k, (&lead * &power).scale(&c)));
        power = &power * &neg_a2;
    }
    Ok(out)
}
