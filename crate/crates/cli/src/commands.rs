//! The `bounds`, `verify` and `design` subcommands.

use std::fmt::Write as _;
use std::path::Path;

use dyngt_core::bounds::{entropy_lower_bound, min_prior_lower_bound_with, BoundParams};
use dyngt_core::designs::CcaRule;
use dyngt_core::pipeline::Strategy;
use dyngt_core::priors::boundedness_report;
use dyngt_core::verify::{
    auxiliary_monotonicity, half_bounded_params, prior_shape_suite, static_oracle_suite,
    OracleConfig, SuiteReport,
};
use dyngt_core::{PriorVector, TestMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: token {index} (`{token}`) is not a number")]
    BadNumber {
        path: String,
        index: usize,
        token: String,
    },
    #[error("{0}")]
    BadPriors(String),
    #[error(transparent)]
    Pipeline(#[from] dyngt_core::pipeline::PipelineError),
}

/// Reads probabilities separated by whitespace or commas; `#` starts a comment.
pub fn read_priors(path: &Path) -> Result<PriorVector, CommandError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CommandError::Io {
        path: display.clone(),
        source,
    })?;
    parse_priors(&text, &display)
}

pub fn parse_priors(text: &str, origin: &str) -> Result<PriorVector, CommandError> {
    let tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ','))
        .filter(|t| !t.is_empty());
    let mut probs = Vec::new();
    for (index, token) in tokens.enumerate() {
        let p = token.parse::<f64>().map_err(|_| CommandError::BadNumber {
            path: origin.to_string(),
            index,
            token: token.to_string(),
        })?;
        probs.push(p);
    }
    PriorVector::new(probs).map_err(|e| CommandError::BadPriors(e.to_string()))
}

/// Bound values for a prior vector, one `name value` pair per line.
pub fn bounds_report(pv: &PriorVector, bounds: &BoundParams, eta: Option<f64>) -> String {
    let n = pv.len();
    let s = pv.summary();
    let report = boundedness_report(pv, eta);
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k:<20} {v}");
    };
    line("n", n.to_string());
    line(
        "expected_defectives",
        format!("{:.6}", s.expected_defectives),
    );
    line("p_min", format!("{:.6}", s.min));
    line("p_mean", format!("{:.6}", s.mean));
    line("p_max", format!("{:.6}", s.max));
    line("entropy_lb", format!("{:.6}", entropy_lower_bound(pv)));
    line(
        "p_min_n_log_n",
        format!(
            "{:.6}",
            min_prior_lower_bound_with(n, s.min, bounds.log_base)
        ),
    );
    line(
        "cca_budget",
        bounds.cca_budget(n, s.expected_defectives).to_string(),
    );
    line(
        "heuristic_budget",
        bounds.heuristic_budget(n, s.mean).to_string(),
    );
    line(
        "ratio",
        report
            .ratio
            .map_or("undefined".into(), |r| format!("{r:.6}")),
    );
    line("all_at_most_half", report.all_at_most_half.to_string());
    if let Some(within) = report.within_eta {
        line("within_eta", within.to_string());
    }
    out
}

/// A random design for `strategy` over `pool = 0..n`, as sparse text.
pub fn design_text(
    strategy: Strategy,
    tests: usize,
    pv: &PriorVector,
    rule: CcaRule,
    seed: u64,
) -> String {
    let pool: Vec<usize> = (0..pv.len()).collect();
    let matrix = match strategy {
        Strategy::Complete => dyngt_core::designs::complete_design(&pool),
        Strategy::NoTesting => TestMatrix::empty(pool),
        _ => match strategy.random_design(tests, pv, rule, seed) {
            Some(d) => d.materialize(pool),
            None => TestMatrix::empty(pool),
        },
    };
    matrix.to_sparse_text()
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub instances: usize,
    pub trajectories: usize,
    pub horizon: u32,
    pub seed: u64,
    pub grid_step: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            instances: 200,
            trajectories: 100,
            horizon: 50,
            seed: 2024,
            grid_step: 1e-2,
        }
    }
}

pub fn run_verify(opts: &VerifyOptions) -> Result<Vec<SuiteReport>, CommandError> {
    let oracle = OracleConfig {
        instances: opts.instances,
        seed: opts.seed,
        ..OracleConfig::default()
    };
    let mut reports = static_oracle_suite(&oracle);
    reports.extend(auxiliary_monotonicity(opts.grid_step, 1e-12));
    reports.extend(prior_shape_suite(
        &half_bounded_params(),
        opts.trajectories,
        opts.horizon,
        opts.seed,
    )?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators_and_comments() {
        let pv = parse_priors("0.1, 0.2\n0.3 # tail\n\n", "inline").unwrap();
        assert_eq!(pv.as_slice(), &[0.1, 0.2, 0.3]);
        assert!(matches!(
            parse_priors("0.1 x", "inline"),
            Err(CommandError::BadNumber { index: 1, .. })
        ));
        assert!(matches!(
            parse_priors("1.2", "inline"),
            Err(CommandError::BadPriors(_))
        ));
    }

    #[test]
    fn report_lists_day_zero_values() {
        let pv = PriorVector::uniform(1000, 0.02);
        let text = bounds_report(&pv, &BoundParams::default(), Some(1.0));
        assert!(text.contains("entropy_lb           141.440543"));
        assert!(text.contains("heuristic_budget     1000"));
        assert!(text.contains("ratio                1.000000"));
        assert!(text.contains("within_eta           true"));
    }

    #[test]
    fn design_text_shapes() {
        let pv = PriorVector::uniform(5, 0.1);
        assert_eq!(
            design_text(Strategy::Complete, 0, &pv, CcaRule::Weighted, 0),
            "0\n1\n2\n3\n4\n"
        );
        let text = design_text(Strategy::RndMax, 4, &pv, CcaRule::Weighted, 3);
        let back = TestMatrix::from_sparse_text((0..5).collect(), &text).unwrap();
        assert_eq!(back.num_tests(), 4);
    }
}
