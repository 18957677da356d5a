use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use pureid_core::linalg::operator_norm;
use pureid_core::povm::{separable_success_formula, x_operator_spectrum};
use pureid_core::protocol::transcript_line;
use pureid_core::symmetry::dimension_identity_sides;
use pureid_core::{
    build_protocol, closed_form_global, closed_form_separable, exact_success_probability,
    global_optimal_povm, optimal_separable_povm, run_monte_carlo, run_protocol, summarize_runs,
    validate, verify_equivalence, DimensionTable, Outcome, Povm, SectorLabel,
    SeparableCoefficients, SymmetryOperators,
};

use crate::config::{CommandKind, RunConfig, Scheme};
use crate::report::{
    Check, LabelCounts, LimitRow, MonteCarloSection, Num, ProtocolSection, Report, TableRow,
    TableSection,
};

/// z-scores above this fail `simulate`.
pub const Z_FAIL: f64 = 5.0;

/// Failure that prevents a report from being produced.
#[derive(Debug)]
pub enum CommandError {
    /// Bad input such as an unwritable transcript path (exit code 2).
    Usage(String),
    /// A computation failed partway (exit code 1).
    Runtime(String),
}

impl From<pureid_core::Error> for CommandError {
    fn from(e: pureid_core::Error) -> Self {
        CommandError::Runtime(e.to_string())
    }
}

pub fn run(config: &RunConfig) -> Result<Report, CommandError> {
    let start = Instant::now();
    let mut report = Report::new(config);
    match config.command {
        CommandKind::Table => table(config, &mut report),
        CommandKind::Verify => verify(config, &mut report)?,
        CommandKind::Simulate => simulate(config, &mut report)?,
        CommandKind::Protocol => protocol(config, &mut report)?,
    }
    report.wall_seconds = Num(start.elapsed().as_secs_f64());
    Ok(report)
}

fn table_row(d_a: u64, d_b: u64) -> TableRow {
    let p_global = closed_form_global(d_a * d_b);
    let p_separable = closed_form_separable(d_a, d_b);
    TableRow {
        d_a,
        d_b,
        p_global: Num(p_global),
        p_separable: Num(p_separable),
        gap: Num(p_global - p_separable),
    }
}

pub fn table(config: &RunConfig, report: &mut Report) {
    let (d_a, d_b) = (config.d_a as u64, config.d_b as u64);
    let mut rows = vec![table_row(d_a, d_b)];
    for a in 2..=4 {
        for b in 2..=4 {
            if (a, b) != (d_a, d_b) {
                rows.push(table_row(a, b));
            }
        }
    }
    for row in &rows {
        if row.d_a >= 2 && row.d_b >= 2 {
            report.push(Check::above(
                format!("gap_{}x{}", row.d_a, row.d_b),
                row.gap.0,
                0.0,
            ));
        }
    }

    let global_limit = 1.0 / 3.0;
    let separable_limit = 11.0 / 36.0;
    report.push(Check::within(
        "global_large_d",
        closed_form_global(100_000_000),
        global_limit,
        1e-7,
    ));
    report.push(Check::within(
        "separable_large_d",
        closed_form_separable(10_000, 10_000),
        separable_limit,
        1e-7,
    ));
    report.table = Some(TableSection {
        rows,
        limits: LimitRow {
            p_global: Num(global_limit),
            p_separable: Num(separable_limit),
            gap: Num(global_limit - separable_limit),
        },
    });
}

fn push_povm_checks(report: &mut Report, prefix: &str, povm: &Povm, target: f64, tol: f64) {
    let v = validate(povm);
    let min_eig = v
        .min_eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max_of = |xs: &[f64]| xs.iter().copied().fold(0.0, f64::max);
    report.push(Check::above(
        format!("{prefix}_min_eigenvalue"),
        min_eig,
        -tol,
    ));
    report.push(Check::at_most(
        format!("{prefix}_hermiticity"),
        max_of(&v.hermiticity_residuals),
        tol,
    ));
    report.push(Check::at_most(
        format!("{prefix}_completeness"),
        v.completeness_residual,
        tol,
    ));
    report.push(Check::at_most(
        format!("{prefix}_no_error"),
        max_of(&v.no_error_residuals),
        tol,
    ));
    report.push(Check::at_most(
        format!("{prefix}_exchange_symmetry"),
        max_of(&v.exchange_residuals),
        tol,
    ));
    report.push(Check::within(
        format!("{prefix}_success_probability"),
        exact_success_probability(povm),
        target,
        tol,
    ));
}

pub fn verify(config: &RunConfig, report: &mut Report) -> Result<(), CommandError> {
    let spec = config.spec();
    let tol = config.tol;
    let d = spec.d();
    let (d_a, d_b) = (config.d_a as u64, config.d_b as u64);

    let ops = SymmetryOperators::new(d);
    let dims = DimensionTable::new(d as u64);
    for label in SectorLabel::ALL {
        let rank = ops.sectors.sector(label).trace().re;
        report.push(Check::within(
            format!("sector_rank_{}", label.symbol()),
            rank,
            dims.sector(label) as f64,
            tol,
        ));
    }
    let sector_sum = &(&ops.sectors.symmetric + &ops.sectors.mixed) + &ops.sectors.antisymmetric;
    report.push(Check::at_most(
        "sector_completeness",
        operator_norm(&(sector_sum - ops.identity())),
        tol,
    ));

    let diff = &ops.swaps.difference;
    let avg = &ops.swaps.average;
    let diff_sq = diff * diff;
    let avg_sq = avg * avg;
    report.push(Check::at_most(
        "swap_difference_square",
        operator_norm(&(&diff_sq - &ops.sectors.mixed.scale(0.75))),
        tol,
    ));
    report.push(Check::at_most(
        "swap_square_sum",
        operator_norm(&(&(&avg_sq + &diff_sq) - &ops.identity())),
        tol,
    ));
    report.push(Check::at_most(
        "swap_anticommutator",
        operator_norm(&diff.anticommutator(avg)),
        tol,
    ));

    let global = global_optimal_povm(d)?;
    push_povm_checks(report, "global", &global, closed_form_global(d as u64), tol);
    drop(global);

    let separable = optimal_separable_povm(&spec)?;
    push_povm_checks(
        report,
        "separable",
        &separable,
        closed_form_separable(d_a, d_b),
        tol,
    );
    drop(separable);
    report.push(Check::within(
        "separable_trace_formula",
        separable_success_formula(d_a, d_b, &SeparableCoefficients::optimal()),
        closed_form_separable(d_a, d_b),
        tol,
    ));

    if d_a >= 2 && d_b >= 2 {
        let spectrum = x_operator_spectrum(&spec, 0.5, 0.5)?;
        let max = spectrum.last().copied().unwrap_or(f64::NAN);
        report.push(Check::within("mixed_block_max_eigenvalue", max, 1.0, tol));
        let gap = closed_form_global(d_a * d_b) - closed_form_separable(d_a, d_b);
        report.push(Check::above("strict_gap", gap, 0.0));
    }

    let (lhs, rhs) = dimension_identity_sides(d_a, d_b);
    report.push(Check::within(
        "dimension_identity",
        lhs as f64,
        rhs as f64,
        0.0,
    ));

    let tree = build_protocol(&spec)?;
    let eq = verify_equivalence(&tree)?;
    report.push(Check::at_most(
        "protocol_element_residual",
        eq.max_element_residual(),
        tol,
    ));
    report.push(Check::at_most(
        "protocol_success_difference",
        eq.probability_difference.abs(),
        tol,
    ));
    report.push(Check::at_most(
        "protocol_leaf_completeness",
        eq.leaf_completeness_residual,
        tol,
    ));
    report.push(Check::at_most(
        "protocol_step_completeness",
        eq.step_completeness_residual,
        tol,
    ));
    report.push(Check::above(
        "protocol_min_step_eigenvalue",
        eq.min_step_eigenvalue,
        -tol,
    ));
    report.push(Check::at_most(
        "protocol_branch_commutator",
        eq.max_commutator,
        tol,
    ));
    report.push(Check::at_most(
        "protocol_unreachable_weight",
        eq.unreachable_weight,
        tol,
    ));
    Ok(())
}

pub fn simulate(config: &RunConfig, report: &mut Report) -> Result<(), CommandError> {
    let spec = config.spec();
    let (d_a, d_b) = (config.d_a as u64, config.d_b as u64);
    let (n, seed, workers) = (config.samples, config.seed, config.workers);
    let (mc, target) = match config.scheme {
        Scheme::Global => {
            let povm = global_optimal_povm(spec.d())?;
            (
                run_monte_carlo(&povm, n, seed, workers)?,
                closed_form_global(d_a * d_b),
            )
        }
        Scheme::Separable => {
            let povm = optimal_separable_povm(&spec)?;
            (
                run_monte_carlo(&povm, n, seed, workers)?,
                closed_form_separable(d_a, d_b),
            )
        }
        Scheme::Locc => {
            let tree = build_protocol(&spec)?;
            let runs = run_protocol(&tree, n, seed, workers)?;
            (
                summarize_runs(&runs, seed)?,
                closed_form_separable(d_a, d_b),
            )
        }
    };
    let deviation = (mc.mean_success - target).abs();
    let z = if mc.stderr_success > 0.0 {
        deviation / mc.stderr_success
    } else if deviation <= config.tol {
        0.0
    } else {
        f64::INFINITY
    };

    report.push(Check::at_most("z_score", z, Z_FAIL));
    report.push(Check::at_most(
        "max_instance_error",
        mc.max_error_sample,
        config.tol,
    ));
    report.push(Check::at_most(
        "probability_sum_residual",
        mc.max_total_residual,
        config.tol,
    ));
    report.monte_carlo = Some(MonteCarloSection {
        scheme: config.scheme,
        target: Num(target),
        z_score: Num(z),
        n_samples: mc.n_samples,
        seed: mc.seed,
        mean_success: Num(mc.mean_success),
        stderr_success: Num(mc.stderr_success),
        mean_error: Num(mc.mean_error),
        max_error_sample: Num(mc.max_error_sample),
        mean_inconclusive: Num(mc.mean_inconclusive),
        probability_min: Num(mc.probability_range.0),
        probability_max: Num(mc.probability_range.1),
        max_total_residual: Num(mc.max_total_residual),
    });
    Ok(())
}

pub fn protocol(config: &RunConfig, report: &mut Report) -> Result<(), CommandError> {
    let spec = config.spec();
    let tol = config.tol;
    let tree = build_protocol(&spec)?;
    let eq = verify_equivalence(&tree)?;
    let runs = run_protocol(&tree, config.samples, config.seed, config.workers)?;

    if let Some(path) = &config.transcript {
        let usage = |e: std::io::Error| {
            CommandError::Usage(format!("cannot write {}: {e}", path.display()))
        };
        let mut out = BufWriter::new(File::create(path).map_err(usage)?);
        for run in &runs {
            writeln!(out, "{}", transcript_line(run.index, &run.transcript)).map_err(usage)?;
        }
        out.flush().map_err(usage)?;
    }

    let count = |label: Outcome| {
        runs.iter()
            .filter(|r| r.transcript.final_label == label)
            .count()
    };
    let counts = LabelCounts {
        inconclusive: count(Outcome::Inconclusive),
        first: count(Outcome::First),
        second: count(Outcome::Second),
    };
    let n = runs.len() as f64;
    let misidentifications = runs.iter().filter(|r| r.is_misidentification()).count();
    let successes = runs.iter().filter(|r| r.is_success()).count();
    let unreachable_runs = runs
        .iter()
        .filter(|r| r.transcript.reached_unreachable)
        .count();
    let inconclusive_frequency = counts.inconclusive as f64 / n;

    report.push(Check::at_most(
        "misidentifications",
        misidentifications as f64,
        0.0,
    ));
    report.push(Check::at_most(
        "unreachable_branch_runs",
        unreachable_runs as f64,
        0.0,
    ));
    report.push(Check::above(
        "inconclusive_frequency",
        inconclusive_frequency,
        0.0,
    ));
    report.push(Check::at_most(
        "induced_element_residual",
        eq.max_element_residual(),
        tol,
    ));
    report.push(Check::at_most(
        "induced_success_difference",
        eq.probability_difference.abs(),
        tol,
    ));
    report.push(Check::at_most(
        "leaf_completeness",
        eq.leaf_completeness_residual,
        tol,
    ));
    report.push(Check::at_most(
        "step_completeness",
        eq.step_completeness_residual,
        tol,
    ));
    report.push(Check::at_most("branch_commutator", eq.max_commutator, tol));

    report.protocol = Some(ProtocolSection {
        runs: runs.len(),
        label_frequencies: [
            Num(inconclusive_frequency),
            Num(counts.first as f64 / n),
            Num(counts.second as f64 / n),
        ],
        label_counts: counts,
        successes,
        misidentifications,
        unreachable_runs,
        success_frequency: Num(successes as f64 / n),
        element_residuals: eq.element_residuals.map(Num),
        probability_difference: Num(eq.probability_difference),
        transcript: config.transcript.as_ref().map(|p| p.display().to_string()),
    });
    Ok(())
}
