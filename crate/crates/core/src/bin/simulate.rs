use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use illg::driver::config::Scenario;
use illg::driver::{load_config, run_scenario, RunSummary};
use illg::Error;

/// Run a micromagnetic scenario described by a TOML config file.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Path to the config file.
    config: PathBuf,
    /// Override the scenario named in the config (relax, pulse, hysteresis, verify).
    #[arg(long)]
    scenario: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Check unit norm and the dot-product identity at every step and fail on violation.
    #[arg(long)]
    audit: bool,
}

fn print_summary(s: &RunSummary) {
    println!("output: {}", s.output_dir.display());
    if s.steps > 0 {
        println!("steps: {}", s.steps);
    }
    if let Some(st) = s.reached_steady {
        println!("steady state reached: {st}");
    }
    if let Some(m) = s.final_mean {
        println!("final <m>: ({:.6}, {:.6}, {:.6})", m[0], m[1], m[2]);
    }
    if let Some((f, j)) = s.final_energy {
        println!("final F = {f:.6e} J, J = {j:.6e} J");
    }
    if let Some(a) = &s.audit {
        println!(
            "max | |m| - 1 | = {:.3e}, max identity defect = {:.3e}, max GMRES iterations = {}",
            a.max_norm_defect, a.max_identity_defect, a.max_gmres_iterations
        );
    }
    if let Some(h) = &s.hysteresis {
        let mt = |v: Option<f64>| v.map_or("none".to_string(), |b| format!("{:.3} mT", b * 1e3));
        println!("coercive field: down {}, up {}", mt(h.coercive_down), mt(h.coercive_up));
        let r = h.remanence;
        println!("remanence: ({:.4}, {:.4}, {:.4})", r[0], r[1], r[2]);
        println!("loop closure: {:.2e}", h.closure);
        if h.unconverged_fields > 0 {
            println!("fields without steady state: {}", h.unconverged_fields);
        }
    }
    for sw in &s.sweeps {
        println!("{:?} {} {} order {:.3}", sw.dims, sw.table.kind.as_str(), sw.table.label, sw.table.order);
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load_config(&args.config).and_then(|mut cfg| {
        if let Some(name) = &args.scenario {
            cfg.scenario = name.parse::<Scenario>()?;
        }
        let dir = args.output.clone().unwrap_or_else(|| cfg.output.dir.clone());
        run_scenario(&cfg, &dir, args.audit)
    });
    match result {
        Ok(s) => {
            print_summary(&s);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_solver_failure() {
        2
    } else {
        1
    }
}
