//! Acceptance run: the full check catalogue on its default batteries under the
//! default configuration, summarized as one line per criterion.

use heatlab_core::config::Config;
use heatlab_core::verify::{run_suite_with, CheckId, CheckResult};
use std::process::ExitCode;
use std::time::Instant;

const SUITE_BUDGET_S: f64 = 300.0;
const CONST_CHECK_BUDGET_S: f64 = 5.0;

struct Criterion {
    name: &'static str,
    ids: &'static [CheckId],
    /// Restricts the criterion to part of a battery.
    select: fn(&CheckResult) -> bool,
    /// Extra requirement on each selected result.
    extra: fn(&CheckResult) -> Result<(), String>,
}

fn any(_: &CheckResult) -> bool {
    true
}

fn none(_: &CheckResult) -> Result<(), String> {
    Ok(())
}

fn block_count(r: &CheckResult) -> usize {
    r.geometry.split(" x ").count()
}

fn fast(r: &CheckResult) -> Result<(), String> {
    if r.wall_time_s < CONST_CHECK_BUDGET_S {
        Ok(())
    } else {
        Err(format!("{} on {} took {:.2}s", r.id, r.geometry, r.wall_time_s))
    }
}

fn criteria() -> Vec<Criterion> {
    use CheckId::*;
    vec![
        Criterion {
            name: "MS-CONST / RR-CONST: supertrace equals chi / index at every ladder point, < 5 s each",
            ids: &[MsConst, RrConst],
            select: any,
            extra: fast,
        },
        Criterion {
            name: "DERHAM-DERIVED-TOP: derived de Rham top coefficient equals (m/2) chi",
            ids: &[DerhamDerivedTop],
            select: any,
            extra: none,
        },
        Criterion {
            name: "DOL-DERIVED-TOP, dimension 2: S^2 -> 2/3, T_d -> d/2 (Bernoulli oracle and fit)",
            ids: &[DolDerivedTop],
            select: |r| block_count(r) == 1,
            extra: none,
        },
        Criterion {
            name: "DOL-DERIVED-TOP, dimension 4: fit and exact formula/recursion agreement",
            ids: &[DolDerivedTop],
            select: |r| block_count(r) == 2,
            extra: none,
        },
        Criterion {
            name: "PRODUCT-EXACT: direct and factored derived traces agree at every ladder point",
            ids: &[ProductExact],
            select: any,
            extra: none,
        },
        Criterion {
            name: "RESTRICT-CIRCLE: derived(S^2 x S^1) + 2 Tr(S^1) = 0 at every ladder point",
            ids: &[RestrictCircle],
            select: any,
            extra: none,
        },
        Criterion {
            name: "WITTEN-SHIFT: shifted traces factorize; deformed circle matches its oracle",
            ids: &[WittenShift],
            select: any,
            extra: none,
        },
        Criterion {
            name: "NOVIKOV-INV: coefficients invariant under c = 0.3+0.2i, eigenvalues moved",
            ids: &[NovikovInv],
            select: any,
            extra: none,
        },
        Criterion {
            name: "DOL-SUBLEADING: order t^-1 derived coefficient on torus products",
            ids: &[DolSubleading],
            select: |r| block_count(r) == 2,
            extra: none,
        },
        Criterion {
            name: "L26-SPHERE: Dolbeault supertrace A2 on S^2 equals 1",
            ids: &[L26Sphere],
            select: any,
            extra: none,
        },
        Criterion {
            name: "DERHAM-DERIVED-VANISH / INDEX-VANISH: required coefficients vanish",
            ids: &[DerhamDerivedVanish, IndexVanish],
            select: any,
            extra: none,
        },
    ]
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cfg = Config::default();
    let results = match run_suite_with(&CheckId::ALL, None, &cfg, |r| {
        eprintln!(
            "  {} {:<22} {:<28} err={:.2e} ({:.2}s)",
            if r.passed() { "pass" } else { "FAIL" },
            r.id,
            r.geometry,
            r.abs_error,
            r.wall_time_s
        );
    }) {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL suite: {e}");
            return ExitCode::FAILURE;
        }
    };
    let total = started.elapsed().as_secs_f64();

    let mut failed = 0;
    for (i, c) in criteria().iter().enumerate() {
        let chosen: Vec<&CheckResult> = results
            .iter()
            .filter(|r| c.ids.iter().any(|id| id.as_str() == r.id) && (c.select)(r))
            .collect();
        let mut problems: Vec<String> = chosen
            .iter()
            .filter(|r| !r.passed())
            .map(|r| format!("{} on {}: {}", r.id, r.geometry, r.diagnostics.join("; ")))
            .collect();
        problems.extend(chosen.iter().filter_map(|r| (c.extra)(r).err()));
        if chosen.is_empty() {
            problems.push("no checks ran".into());
        }
        let worst = chosen.iter().map(|r| r.abs_error).fold(0.0, f64::max);
        let time: f64 = chosen.iter().map(|r| r.wall_time_s).sum();
        let ok = problems.is_empty();
        failed += usize::from(!ok);
        println!(
            "{} {:>2}. {} [{} checks, worst |err| {:.2e}, {:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            c.name,
            chosen.len(),
            worst,
            time
        );
        for p in problems {
            println!("        {p}");
        }
    }
    let in_budget = total < SUITE_BUDGET_S;
    failed += usize::from(!in_budget);
    println!(
        "{} runtime: full suite ({} checks) in {:.1}s (budget {:.0}s)",
        if in_budget { "PASS" } else { "FAIL" },
        results.len(),
        total,
        SUITE_BUDGET_S
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
