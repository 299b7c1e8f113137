use std::process::ExitCode;

use clap::Parser;
use dyngt_cli::commands::{bounds_report, design_text, read_priors, run_verify, VerifyOptions};
use dyngt_cli::config::resolve;
use dyngt_cli::run::run_experiment;
use dyngt_cli::{Cli, Command};
use dyngt_core::bounds::{BoundParams, LogBase};
use dyngt_core::designs::CcaRule;
use dyngt_core::pipeline::Strategy;

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match command {
        Command::Run(args) => {
            let cfg = resolve(
                args.preset.as_deref(),
                args.config.as_deref(),
                &args.overrides(),
            )?;
            let out = run_experiment(&cfg)?;
            for f in &out.files {
                println!("{}", f.display());
            }
        }
        Command::Verify(args) => {
            let reports = run_verify(&VerifyOptions {
                instances: args.instances,
                trajectories: args.trajectories,
                horizon: args.horizon,
                seed: args.seed,
                ..VerifyOptions::default()
            })?;
            let mut ok = true;
            for r in &reports {
                println!("{r}");
                for ex in &r.examples {
                    println!("    {ex}");
                }
                ok &= r.passed();
            }
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bounds(args) => {
            let pv = read_priors(&args.priors)?;
            let bounds = BoundParams {
                delta: args.delta,
                log_base: if args.binary_log {
                    LogBase::Binary
                } else {
                    LogBase::Natural
                },
                ..BoundParams::default()
            };
            print!("{}", bounds_report(&pv, &bounds, args.eta));
        }
        Command::Design(args) => {
            let pv = read_priors(&args.priors)?;
            let strategy: Strategy =
                serde_json::from_value(serde_json::Value::String(args.strategy.clone()))
                    .map_err(|_| format!("unknown strategy `{}`", args.strategy))?;
            let rule = if args.uniform_cca {
                CcaRule::Uniform
            } else {
                CcaRule::Weighted
            };
            print!(
                "{}",
                design_text(strategy, args.tests, &pv, rule, args.seed)
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
