//! Acceptance gate: each criterion prints one `[PASS]`/`[FAIL]` line and the
//! process exits non-zero if any failed.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use pureid_core::linalg::compress_to_range;
use pureid_core::montecarlo::moment_check;
use pureid_core::povm::{x_operator_spectrum, x_spectrum};
use pureid_core::symmetry::{dimension_identity_holds, pair_projectors};
use pureid_core::{
    build_protocol, closed_form_global, closed_form_separable, exact_success_probability,
    global_optimal_povm, hermitian_eig, operator_norm, optimal_separable_povm, run_monte_carlo,
    run_protocol, verify_equivalence, DimensionTable, Outcome, Povm, SpaceSpec, SymmetryOperators,
};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn global_closed_form() -> Verdict {
    let mut worst = 0.0f64;
    for d in [2, 3, 4, 6] {
        let p = exact_success_probability(&global_optimal_povm(d).unwrap());
        worst = worst.max((p - (d as f64 - 1.0) / (3.0 * d as f64)).abs());
    }
    ensure(
        worst <= 1e-10,
        format!("max |p - (d-1)/(3d)| = {worst:.2e} over d = 2,3,4,6"),
    )
}

fn two_qubit_headline() -> Verdict {
    let separable =
        exact_success_probability(&optimal_separable_povm(&SpaceSpec::new(2, 2).unwrap()).unwrap());
    let global = exact_success_probability(&global_optimal_povm(4).unwrap());
    let errors = [
        (separable - 19.0 / 80.0).abs(),
        (global - 0.25).abs(),
        ((global - separable) - 1.0 / 80.0).abs(),
    ];
    ensure(
        errors.iter().all(|&e| e <= 1e-10),
        format!(
            "separable {separable:.15}, global {global:.15}, gap {:.15}",
            global - separable
        ),
    )
}

fn separable_closed_form() -> Verdict {
    let pairs = [(2, 2), (2, 3), (3, 2), (3, 3), (1, 2), (2, 1)];
    let mut worst = 0.0f64;
    for (a, b) in pairs {
        let povm = optimal_separable_povm(&SpaceSpec::new(a, b).unwrap()).unwrap();
        let p = exact_success_probability(&povm);
        worst = worst.max((p - closed_form_separable(a as u64, b as u64)).abs());
    }
    ensure(
        worst <= 1e-10,
        format!("max deviation {worst:.2e} over {pairs:?}"),
    )
}

fn strict_gap() -> Verdict {
    let mut smallest = f64::INFINITY;
    for a in 2..=6u64 {
        for b in 2..=6u64 {
            smallest = smallest.min(closed_form_global(a * b) - closed_form_separable(a, b));
        }
    }
    ensure(
        smallest > 0.0,
        format!("smallest gap {smallest:.6e} over 2 <= d_a, d_b <= 6"),
    )
}

fn swap_identities() -> Verdict {
    let mut worst = 0.0f64;
    let mut multiplicities = Vec::new();
    let mut balanced = true;
    for d in 2..=4 {
        let ops = SymmetryOperators::new(d);
        let (diff, avg) = (&ops.swaps.difference, &ops.swaps.average);
        let diff_sq = diff * diff;
        worst = worst
            .max(operator_norm(&(&diff_sq - &ops.sectors.mixed.scale(0.75))))
            .max(operator_norm(
                &(&(&(avg * avg) + &diff_sq) - &ops.identity()),
            ))
            .max(operator_norm(&diff.anticommutator(avg)));
        let eig = hermitian_eig(&compress_to_range(avg, &ops.sectors.mixed).unwrap()).unwrap();
        let half = DimensionTable::new(d as u64).mixed as usize / 2;
        let (up, down) = (eig.multiplicity(0.5, 1e-8), eig.multiplicity(-0.5, 1e-8));
        balanced &= up == half && down == half && eig.eigenvalues.len() == 2 * half;
        multiplicities.push((d, up, down));
    }
    ensure(
        worst <= 1e-12 && balanced,
        format!("max identity residual {worst:.2e}; (d, #+1/2, #-1/2) = {multiplicities:?}"),
    )
}

fn dimension_identity() -> Verdict {
    let failures: Vec<_> = (2..=6u64)
        .flat_map(|a| (2..=6u64).map(move |b| (a, b)))
        .filter(|&(a, b)| !dimension_identity_holds(a, b))
        .collect();
    ensure(
        failures.is_empty(),
        format!("25 pairs checked, failures {failures:?}"),
    )
}

fn mixed_block_spectrum() -> Verdict {
    let spec = SpaceSpec::new(2, 2).unwrap();
    let mut worst = 0.0f64;
    for (b1, b2) in [(0.5, 0.5), (0.3, 0.5), (0.6, 0.0)] {
        let numeric = x_operator_spectrum(&spec, b1, b2).unwrap();
        let copies = numeric.len() / 4;
        let mut analytic: Vec<f64> = x_spectrum(b1, b2)
            .iter()
            .flat_map(|&v| vec![v; copies])
            .collect();
        analytic.sort_by(f64::total_cmp);
        if analytic.len() != numeric.len() {
            return Err(format!(
                "({b1},{b2}): {} numeric eigenvalues",
                numeric.len()
            ));
        }
        for (x, y) in numeric.iter().zip(&analytic) {
            worst = worst.max((x - y).abs());
        }
    }
    let boundary = *x_operator_spectrum(&spec, 0.5, 0.5)
        .unwrap()
        .last()
        .unwrap();
    ensure(
        worst <= 1e-8 && (boundary - 1.0).abs() <= 1e-10,
        format!("max spectrum deviation {worst:.2e}; top eigenvalue at (1/2,1/2) = {boundary:.15}"),
    )
}

fn no_error_residuals(p: &Povm) -> f64 {
    let s01 = pair_projectors(0, 1, p.d()).unwrap().symmetric;
    let s02 = pair_projectors(0, 2, p.d()).unwrap().symmetric;
    operator_norm(&(p.element(Outcome::First) * &s02))
        .max(operator_norm(&(p.element(Outcome::Second) * &s01)))
}

fn no_error() -> Verdict {
    let spec = SpaceSpec::new(2, 2).unwrap();
    let global = global_optimal_povm(4).unwrap();
    let separable = optimal_separable_povm(&spec).unwrap();
    let operator = no_error_residuals(&global).max(no_error_residuals(&separable));

    let mut instance = 0.0f64;
    for p in [&global, &separable] {
        instance = instance.max(run_monte_carlo(p, 10_000, 17, 4).unwrap().max_error_sample);
    }

    let tree = build_protocol(&spec).unwrap();
    let runs = run_protocol(&tree, 10_000, 17, 4).unwrap();
    let misidentified = runs.iter().filter(|r| r.is_misidentification()).count();
    ensure(
        operator <= 1e-12 && instance <= 1e-10 && misidentified == 0,
        format!(
            "operator residual {operator:.2e}; max instance error {instance:.2e}; \
             {misidentified} misidentified in {} protocol runs",
            runs.len()
        ),
    )
}

fn protocol_equivalence() -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    for (a, b) in [(2, 2), (2, 3)] {
        let report =
            verify_equivalence(&build_protocol(&SpaceSpec::new(a, b).unwrap()).unwrap()).unwrap();
        let worst = report.max_element_residual();
        ok &= worst <= 1e-10;
        details.push(format!("({a},{b}) max element residual {worst:.2e}"));
    }
    ensure(ok, details.join("; "))
}

fn monte_carlo_concordance() -> Verdict {
    const N: usize = 100_000;
    const SEED: u64 = 20_240_601;
    let cases: [(&str, Povm, f64); 3] = [
        (
            "global d=2",
            global_optimal_povm(2).unwrap(),
            closed_form_global(2),
        ),
        (
            "global d=4",
            global_optimal_povm(4).unwrap(),
            closed_form_global(4),
        ),
        (
            "separable (2,2)",
            optimal_separable_povm(&SpaceSpec::new(2, 2).unwrap()).unwrap(),
            closed_form_separable(2, 2),
        ),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (name, povm, target) in &cases {
        let single = run_monte_carlo(povm, N, SEED, 1).unwrap();
        let parallel = run_monte_carlo(povm, N, SEED, 4).unwrap();
        let z = (single.mean_success - target).abs() / single.stderr_success;
        let identical = single == parallel;
        ok &= z <= 4.0 && identical;
        details.push(format!(
            "{name}: {:.6} vs {target:.6}, z = {z:.2}, workers 1/4 identical = {identical}",
            single.mean_success
        ));
    }
    ensure(ok, details.join("; "))
}

fn second_moment() -> Verdict {
    let deviation = moment_check(2, 2, 100_000, 5).unwrap();
    ensure(
        deviation <= 0.03,
        format!("||<rho x rho> - S_2/d_2|| = {deviation:.4} at d=2, 1e5 samples"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("global optimum matches (d-1)/(3d)", global_closed_form),
        (
            "two-qubit values 19/80, 1/4 and gap 1/80",
            two_qubit_headline,
        ),
        (
            "separable optimum matches its closed form",
            separable_closed_form,
        ),
        ("global strictly beats separable", strict_gap),
        (
            "swap combination identities and +-1/2 spectrum",
            swap_identities,
        ),
        ("mixed-sector dimension identity", dimension_identity),
        (
            "mixed-block spectrum and feasibility boundary",
            mixed_block_spectrum,
        ),
        ("no misidentification", no_error),
        (
            "protocol induces the separable optimum",
            protocol_equivalence,
        ),
        (
            "Monte Carlo agrees with closed forms",
            monte_carlo_concordance,
        ),
        ("Haar second moment", second_moment),
    ];

    let mut failed = 0;
    for (k, (name, criterion)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(criterion))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let seconds = start.elapsed().as_secs_f64();
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {:>2}. {name} ({seconds:.1}s): {detail}", k + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
