//! End-to-end identity checks: spectra, traces and fits compared with exact predictions.

mod catalogue;
mod report;

pub use catalogue::{applicable, default_geometries};
pub use report::{emit_report, ReportFormat};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::numeric::{Dd, PiPoly};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckId {
    MsConst,
    RrConst,
    IndexVanish,
    DerhamDerivedVanish,
    DerhamDerivedTop,
    DolDerivedTop,
    DolSubleading,
    ProductExact,
    RestrictCircle,
    WittenShift,
    NovikovInv,
    L26Sphere,
}

impl CheckId {
    pub const ALL: [CheckId; 12] = [
        CheckId::MsConst,
        CheckId::RrConst,
        CheckId::IndexVanish,
        CheckId::DerhamDerivedVanish,
        CheckId::DerhamDerivedTop,
        CheckId::DolDerivedTop,
        CheckId::DolSubleading,
        CheckId::ProductExact,
        CheckId::RestrictCircle,
        CheckId::WittenShift,
        CheckId::NovikovInv,
        CheckId::L26Sphere,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::MsConst => "MS-CONST",
            CheckId::RrConst => "RR-CONST",
            CheckId::IndexVanish => "INDEX-VANISH",
            CheckId::DerhamDerivedVanish => "DERHAM-DERIVED-VANISH",
            CheckId::DerhamDerivedTop => "DERHAM-DERIVED-TOP",
            CheckId::DolDerivedTop => "DOL-DERIVED-TOP",
            CheckId::DolSubleading => "DOL-SUBLEADING",
            CheckId::ProductExact => "PRODUCT-EXACT",
            CheckId::RestrictCircle => "RESTRICT-CIRCLE",
            CheckId::WittenShift => "WITTEN-SHIFT",
            CheckId::NovikovInv => "NOVIKOV-INV",
            CheckId::L26Sphere => "L26-SPHERE",
        }
    }

    /// Parses `all` or a comma-separated list of ids.
    pub fn parse_suite(s: &str) -> Result<Vec<CheckId>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(CheckId::ALL.to_vec());
        }
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<CheckId> {
        CheckId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownCheck(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One compared quantity inside a check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub label: String,
    pub predicted: String,
    pub predicted_decimal: String,
    pub computed: String,
    pub abs_error: f64,
    pub tolerance: f64,
    /// Fit uncertainty or certified error bound of the computed value.
    pub uncertainty: f64,
    /// Largest admissible `uncertainty`.
    pub uncertainty_limit: f64,
    pub pass: bool,
}

impl Measurement {
    fn build(label: String, predicted: String, predicted_dd: Dd, computed: Dd, tol: f64, unc: f64, limit: f64) -> Measurement {
        let abs_error = (computed - predicted_dd).abs().to_f64();
        Measurement {
            label,
            predicted,
            predicted_decimal: predicted_dd.to_sci_string(32),
            computed: computed.to_sci_string(32),
            abs_error,
            tolerance: tol,
            uncertainty: unc,
            uncertainty_limit: limit,
            pass: abs_error <= tol && unc <= limit,
        }
    }

    /// Computed value with a certified bound, compared with an exact value.
    pub fn exact(label: impl Into<String>, predicted: &PiPoly, computed: Dd, bound: f64, tol: f64) -> Measurement {
        Measurement::build(label.into(), predicted.to_string(), predicted.to_dd(), computed, tol, bound, tol)
    }

    /// Fitted coefficient compared with an exact value; the uncertainty must be below `tol/10`.
    pub fn fitted(label: impl Into<String>, predicted: &PiPoly, computed: Dd, unc: f64, tol: f64) -> Measurement {
        Measurement::build(label.into(), predicted.to_string(), predicted.to_dd(), computed, tol, unc, tol / 10.0)
    }

    /// Two computed values that must agree.
    pub fn agreement(label: impl Into<String>, reference: Dd, computed: Dd, unc: f64, tol: f64, limit: f64) -> Measurement {
        Measurement::build(label.into(), reference.to_sci_string(32), reference, computed, tol, unc, limit)
    }

    /// A quantity that must exceed `floor`.
    pub fn lower_bound(label: impl Into<String>, floor: f64, computed: Dd) -> Measurement {
        let pass = computed.to_f64() > floor;
        Measurement {
            label: label.into(),
            predicted: format!("> {floor:e}"),
            predicted_decimal: format!("{floor:e}"),
            computed: computed.to_sci_string(32),
            abs_error: (floor - computed.to_f64()).max(0.0),
            tolerance: 0.0,
            uncertainty: 0.0,
            uncertainty_limit: 0.0,
            pass,
        }
    }

    fn severity(&self) -> f64 {
        let e = if self.tolerance > 0.0 {
            self.abs_error / self.tolerance
        } else if self.pass {
            0.0
        } else {
            f64::INFINITY
        };
        let u = if self.uncertainty_limit > 0.0 {
            self.uncertainty / self.uncertainty_limit
        } else {
            0.0
        };
        e.max(u)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub geometry: String,
    pub complex: String,
    /// Headline: the measurement closest to failing.
    pub predicted: String,
    pub predicted_decimal: String,
    pub computed: String,
    pub abs_error: f64,
    pub tolerance: f64,
    pub uncertainty: f64,
    /// Largest certified truncation-plus-rounding bound of any trace value used.
    pub truncation_budget: f64,
    pub wall_time_s: f64,
    pub status: Status,
    pub measurements: Vec<Measurement>,
    pub diagnostics: Vec<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    fn assemble(id: CheckId, spec: &GeometrySpec, out: Result<catalogue::Outcome>, started: Instant) -> CheckResult {
        let mut r = CheckResult {
            id: id.to_string(),
            geometry: spec.to_string(),
            complex: catalogue::kind_of(id, spec).to_string(),
            predicted: String::new(),
            predicted_decimal: String::new(),
            computed: String::new(),
            abs_error: 0.0,
            tolerance: 0.0,
            uncertainty: 0.0,
            truncation_budget: 0.0,
            wall_time_s: 0.0,
            status: Status::Fail,
            measurements: Vec::new(),
            diagnostics: Vec::new(),
        };
        match out {
            Ok(o) => {
                r.truncation_budget = o.budget;
                r.diagnostics = o.diagnostics;
                if let Some(worst) = o
                    .measurements
                    .iter()
                    .max_by(|a, b| a.severity().total_cmp(&b.severity()))
                {
                    r.predicted = worst.predicted.clone();
                    r.predicted_decimal = worst.predicted_decimal.clone();
                    r.computed = worst.computed.clone();
                    r.abs_error = worst.abs_error;
                    r.tolerance = worst.tolerance;
                    r.uncertainty = worst.uncertainty;
                }
                let all = !o.measurements.is_empty() && o.measurements.iter().all(|m| m.pass);
                r.status = if all { Status::Pass } else { Status::Fail };
                if o.measurements.is_empty() {
                    r.diagnostics.push("no measurements".into());
                }
                r.measurements = o.measurements;
            }
            Err(e) => r.diagnostics.push(e.to_string()),
        }
        r.wall_time_s = started.elapsed().as_secs_f64();
        r
    }
}

/// Runs one check on one geometry. Numerical failures (including fit refusals) are
/// recorded in the result; an inapplicable geometry is an error.
pub fn run_check(id: CheckId, spec: &GeometrySpec, cfg: &Config) -> Result<CheckResult> {
    cfg.validate()?;
    if !applicable(id, spec) {
        return Err(Error::Unsupported(format!("{id} does not apply to {spec}")));
    }
    let started = Instant::now();
    let out = catalogue::run(id, spec, cfg);
    Ok(CheckResult::assemble(id, spec, out, started))
}

/// Runs `ids` on `geometries` (or each check's default battery), skipping inapplicable
/// pairs. Results come out ordered by check id, then geometry.
pub fn run_suite(ids: &[CheckId], geometries: Option<&[GeometrySpec]>, cfg: &Config) -> Result<Vec<CheckResult>> {
    run_suite_with(ids, geometries, cfg, |_| {})
}

/// [`run_suite`] calling `progress` after each finished check.
pub fn run_suite_with(
    ids: &[CheckId],
    geometries: Option<&[GeometrySpec]>,
    cfg: &Config,
    mut progress: impl FnMut(&CheckResult),
) -> Result<Vec<CheckResult>> {
    cfg.validate()?;
    let mut ids = ids.to_vec();
    ids.sort();
    ids.dedup();
    let mut out = Vec::new();
    for id in ids {
        let battery = match geometries {
            Some(g) => g.to_vec(),
            None => default_geometries(id),
        };
        for spec in battery.iter().filter(|s| applicable(id, s)) {
            let r = run_check(id, spec, cfg)?;
            progress(&r);
            out.push(r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Block;

    #[test]
    fn ids_round_trip() {
        for id in CheckId::ALL {
            assert_eq!(id.as_str().parse::<CheckId>().unwrap(), id);
        }
        assert_eq!(CheckId::parse_suite("all").unwrap().len(), 12);
        assert_eq!(
            CheckId::parse_suite("MS-CONST, l26-sphere").unwrap(),
            vec![CheckId::MsConst, CheckId::L26Sphere]
        );
        assert!(matches!(CheckId::parse_suite("NOPE"), Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn every_check_has_a_default_geometry() {
        for id in CheckId::ALL {
            let g = default_geometries(id);
            assert!(!g.is_empty(), "{id}");
            assert!(g.iter().all(|s| applicable(id, s)), "{id}");
        }
    }

    #[test]
    fn empty_suite_is_empty() {
        assert!(run_suite(&[], None, &Config::default()).unwrap().is_empty());
    }

    #[test]
    fn sphere_checks_pass() {
        let cfg = Config::default();
        let s2 = GeometrySpec::single(Block::unit_sphere());
        for id in [CheckId::MsConst, CheckId::RrConst, CheckId::L26Sphere, CheckId::DerhamDerivedTop] {
            let r = run_check(id, &s2, &cfg).unwrap();
            assert!(r.passed(), "{id}: {r:?}");
        }
    }

    #[test]
    fn inapplicable_pair_is_an_error() {
        let s1 = GeometrySpec::single(Block::unit_circle(PiPoly::zero()));
        assert!(run_check(CheckId::RrConst, &s1, &Config::default()).is_err());
    }
}
