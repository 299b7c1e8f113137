//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dyngt_cli::config::{resolve, Overrides};
use dyngt_cli::run::run_experiment;
use dyngt_core::bounds::{entropy_lower_bound, heuristic_budget};
use dyngt_core::pipeline::{
    curve_peak, discrete_mean_curve, gillespie_mean_curve, monte_carlo, monte_carlo_runs,
    Experiment, Policy, Strategy,
};
use dyngt_core::verify::{
    auxiliary_monotonicity, half_bounded_params, prior_shape_suite, static_oracle_suite,
    OracleConfig, SuiteReport,
};
use dyngt_core::{ModelParams, PriorVector};

const SEED: u64 = 20240601;
const HORIZON: u32 = 50;
const GROUP: [Strategy; 3] = [Strategy::RndMean, Strategy::RndMax, Strategy::Cca];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn suites(reports: &[SuiteReport]) -> (bool, String) {
    let pass = reports.iter().all(SuiteReport::passed);
    let detail = reports
        .iter()
        .map(|r| format!("{} {}/{}", r.name, r.violations, r.cases))
        .collect::<Vec<_>>()
        .join(", ");
    (pass, detail)
}

fn fig1_params() -> ModelParams {
    ModelParams::new(1000, 50, 0.02, 0.012, 0.0004)
}

fn entropy_bound() -> Outcome {
    let value = entropy_lower_bound(&PriorVector::uniform(1000, 0.02));
    let policy = Policy::new(Strategy::Complete, Experiment::MinTestsSearch);
    let params = ModelParams::new(1000, 20, 0.02, 0.03, 0.0004);
    let day0 = dyngt_core::pipeline::run_trajectory(&params, &policy, 1, SEED)
        .expect("valid params")[0]
        .entropy_lb;
    let pass = (value - 141.440543).abs() <= 1e-4 && (day0 - 141.440543).abs() <= 1e-4;
    outcome(
        pass,
        format!("entropy bound {value:.9}, pipeline day 0 {day0:.9}"),
    )
}

fn epidemic_curves() -> Outcome {
    let params = fig1_params();
    let run = |s| {
        monte_carlo(
            &params,
            &Policy::new(s, Experiment::FixedBudget),
            HORIZON,
            200,
            SEED,
            0,
        )
        .expect("valid params")
        .peak_infected()
        .expect("nonempty horizon")
    };
    let (d0, p0) = run(Strategy::NoTesting);
    let (d1, p1) = run(Strategy::Complete);
    let pass = (580.0..=720.0).contains(&p0)
        && (8..=10).contains(&d0)
        && (70.0..=95.0).contains(&p1)
        && (6..=9).contains(&d1);
    outcome(
        pass,
        format!("no testing peak {p0:.3} on day {d0}; complete testing peak {p1:.3} on day {d1}"),
    )
}

fn minimal_tests() -> Outcome {
    let params = ModelParams::new(1000, 20, 0.02, 0.03, 0.0004);
    let mean_tests = |s| -> Vec<f64> {
        monte_carlo(
            &params,
            &Policy::new(s, Experiment::MinTestsSearch),
            HORIZON,
            200,
            SEED,
            0,
        )
        .expect("valid params")
        .days
        .iter()
        .map(|d| d.tests)
        .collect()
    };
    let complete = mean_tests(Strategy::Complete);
    let mut pass = complete[0] == 1000.0;
    let mut detail = format!("complete day 0 {:.1}", complete[0]);
    for s in GROUP {
        let tests = mean_tests(s);
        let plateau = tests[45..].iter().cloned().fold(f64::MIN, f64::max);
        let worst_ratio = (3..tests.len())
            .map(|d| tests[d] / complete[d])
            .fold(f64::MIN, f64::max);
        pass &= plateau <= 25.0 && worst_ratio <= 0.5;
        if s == Strategy::RndMean {
            pass &= (180.0..=330.0).contains(&tests[0]);
        }
        detail += &format!(
            "; {s} day 0 {:.1}, day 45+ max {plateau:.2}, max ratio to complete from day 3 {worst_ratio:.3}",
            tests[0]
        );
    }
    outcome(pass, detail)
}

fn heuristic_budget_and_dd() -> Outcome {
    let budget = heuristic_budget(1000, 0.02);
    let params = fig1_params();
    let mut false_positives = 0;
    let mut days = 0;
    for s in GROUP {
        let runs = monte_carlo_runs(
            &params,
            &Policy::new(s, Experiment::FixedBudget),
            HORIZON,
            200,
            SEED,
            0,
        )
        .expect("valid params");
        for r in runs.iter().flatten() {
            false_positives += r.false_positives;
            days += 1;
        }
    }
    outcome(
        budget == 1000 && false_positives == 0,
        format!("budget {budget}; {false_positives} false positives over {days} trajectory-days"),
    )
}

fn prior_shape() -> Outcome {
    let reports =
        prior_shape_suite(&half_bounded_params(), 100, HORIZON, SEED).expect("valid params");
    let (pass, detail) = suites(&reports);
    outcome(pass, detail)
}

fn static_oracles() -> Outcome {
    let cfg = OracleConfig {
        instances: 200,
        seed: SEED,
        ..OracleConfig::default()
    };
    let (pass, detail) = suites(&static_oracle_suite(&cfg));
    outcome(pass, detail)
}

fn auxiliary_grid() -> Outcome {
    let (pass, detail) = suites(&auxiliary_monotonicity(1e-2, 1e-12));
    outcome(pass, detail)
}

fn continuous_comparison() -> Outcome {
    let params = fig1_params();
    let discrete = discrete_mean_curve(&params, HORIZON, 200, SEED).expect("valid params");
    let continuous = gillespie_mean_curve(&params, HORIZON, 200, SEED).expect("valid params");
    let (dd, dp) = curve_peak(&discrete).expect("nonempty");
    let (cd, cp) = curve_peak(&continuous).expect("nonempty");
    let rel = (cp - dp).abs() / dp;
    outcome(
        rel <= 0.25,
        format!("discrete peak {dp:.3} on day {dd}, continuous peak {cp:.3} on day {cd}, relative gap {rel:.3}"),
    )
}

fn determinism() -> Outcome {
    let mut identical = true;
    let mut files = 0;
    for preset in ["fig4a", "fig6a", "fig7"] {
        let dirs = [
            tempfile::tempdir().expect("tempdir"),
            tempfile::tempdir().expect("tempdir"),
        ];
        let mut outputs = Vec::new();
        for (k, dir) in dirs.iter().enumerate() {
            let overrides = Overrides {
                trajectories: Some(10),
                seed: Some(SEED),
                out: Some(dir.path().to_path_buf()),
                threads: Some(k + 1),
                ..Overrides::default()
            };
            let cfg = resolve(Some(preset), None, &overrides).expect("preset resolves");
            outputs.push(run_experiment(&cfg).expect("run succeeds").files);
        }
        for (a, b) in outputs[0].iter().zip(&outputs[1]) {
            if a.extension().is_some_and(|e| e == "csv") {
                files += 1;
                identical &=
                    std::fs::read(a).expect("readable") == std::fs::read(b).expect("readable");
            }
        }
    }
    outcome(
        identical && files > 0,
        format!("{files} CSV pairs compared"),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Check, Option<Duration>); 9] = [
        (
            1,
            "entropy bound at day 0",
            entropy_bound,
            Some(Duration::from_secs(1)),
        ),
        (
            2,
            "epidemic curve peaks",
            epidemic_curves,
            Some(Duration::from_secs(120)),
        ),
        (
            3,
            "minimal-test search",
            minimal_tests,
            Some(Duration::from_secs(900)),
        ),
        (
            4,
            "heuristic budget and DD false positives",
            heuristic_budget_and_dd,
            None,
        ),
        (5, "prior shape under complete testing", prior_shape, None),
        (
            6,
            "static oracle suite",
            static_oracles,
            Some(Duration::from_secs(120)),
        ),
        (7, "auxiliary monotonicity grid", auxiliary_grid, None),
        (
            8,
            "continuous vs discrete peak",
            continuous_comparison,
            None,
        ),
        (9, "byte-identical reruns", determinism, None),
    ];
    let mut all = true;
    for (id, name, check, limit) in criteria {
        let start = Instant::now();
        let Outcome { pass, detail } = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let ok = pass && in_time;
        all &= ok;
        let budget = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
        println!(
            "{} criterion {id} {name}: {detail} [{:.2}s{budget}]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
