mod files;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Parser, Subcommand};
use log::error;

use privdesign_core::{
    brute_force, design_invertible, design_lp_with_mode, oracle, Error, LeakageMeasure, LpMode,
    MechanismDesign64, ProblemInstance64,
};

use files::{InstanceFile, MechanismFile, Mode, ReportFile};

/// Exit codes are a stable contract:
/// 0 success, 1 internal error, 2 no feasible assignment, 3 validation or
/// file error, 4 budget too large for the local regime, 5 verification
/// found a violated budget, 6 reproduction mismatch, 7 oracle size limits.
const EXIT_INTERNAL: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_EPS_TOO_LARGE: u8 = 4;
const EXIT_VIOLATED: u8 = 5;
const EXIT_ORACLE_SIZE: u8 = 7;

#[derive(Parser)]
#[command(
    name = "privdesign",
    about = "Design and audit privacy mechanisms under per-letter leakage budgets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a mechanism for an instance file and emit a report.
    Design {
        /// Instance file (JSON).
        instance: PathBuf,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// auto | invertible | full-row-rank | pinv (overrides the file).
        #[arg(long)]
        mode: Option<Mode>,
        /// Override the mixture tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Emphasize bits in the summary line (default).
        #[arg(long, action = ArgAction::SetTrue, conflicts_with = "nats")]
        bits: bool,
        /// Emphasize nats in the summary line.
        #[arg(long, action = ArgAction::SetTrue)]
        nats: bool,
    },
    /// Audit a mechanism file against an instance's budgets.
    Verify {
        instance: PathBuf,
        mechanism: PathBuf,
        /// Leakage slack for the audit (default 1e-7).
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Run the built-in worked example end to end and compare against the
    /// stored reference values.
    ReproduceExample,
    /// Brute-force search over filters; ground truth for tiny instances.
    Oracle {
        instance: PathBuf,
        /// Force randomized mode (required beyond |Y| <= 4, K <= 3).
        #[arg(long, action = ArgAction::SetTrue)]
        random: bool,
        /// RNG seed for random mode.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also run the matching designer and print the utility gap.
        #[arg(long, action = ArgAction::SetTrue)]
        compare: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new()
            .filter("PRIVDESIGN_LOG")
            .default_filter_or("error"),
    )
    .init();

    let cli = Cli::parse();
    let code = match cli.command {
        Command::Design {
            instance,
            out,
            mode,
            tol,
            bits: _,
            nats,
        } => cmd_design(&instance, out.as_deref(), mode, tol, !nats),
        Command::Verify {
            instance,
            mechanism,
            tol,
        } => cmd_verify(&instance, &mechanism, tol),
        Command::ReproduceExample => reproduce::cmd_reproduce_example(),
        Command::Oracle {
            instance,
            random,
            seed,
            compare,
        } => cmd_oracle(&instance, random, seed, compare),
    };
    ExitCode::from(code)
}

fn design_error_code(e: &Error) -> u8 {
    match e {
        Error::NoFeasibleAssignment | Error::NoFeasibleFilter => EXIT_INFEASIBLE,
        Error::EpsilonTooLarge { .. } => EXIT_EPS_TOO_LARGE,
        Error::NoConvergence { .. } | Error::MaxIterations { .. } => EXIT_INTERNAL,
        _ => EXIT_VALIDATION,
    }
}

fn load_instance(path: &std::path::Path) -> Result<(ProblemInstance64, Mode), u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        error!("cannot read {}: {e}", path.display());
        EXIT_VALIDATION
    })?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| {
        error!("{}: {e}", path.display());
        EXIT_VALIDATION
    })?;
    file.into_instance().map_err(|e| {
        error!("{}: {e}", path.display());
        EXIT_VALIDATION
    })
}

/// Mode resolution per the "auto" policy: chi-square budgets take the
/// closed-form invertible designer (square nonsingular required); l1
/// budgets take the LP designer in full-row-rank or pseudo-inverse mode.
fn run_designer(
    inst: &ProblemInstance64,
    mode: Mode,
) -> Result<MechanismDesign64, Error> {
    match (mode, inst.divergence) {
        (Mode::Auto, LeakageMeasure::ChiSquare) | (Mode::Invertible, LeakageMeasure::ChiSquare) => {
            design_invertible(inst)
        }
        (Mode::Auto, LeakageMeasure::L1) => design_lp_with_mode(inst, LpMode::Auto),
        (Mode::FullRowRank, LeakageMeasure::L1) => design_lp_with_mode(inst, LpMode::FullRowRank),
        (Mode::Pinv, LeakageMeasure::L1) => design_lp_with_mode(inst, LpMode::PseudoInverse),
        (m, d) => Err(Error::UnsupportedMode {
            divergence: d.name(),
            mode: m.name(),
        }),
    }
}

fn cmd_design(
    instance_path: &std::path::Path,
    out: Option<&std::path::Path>,
    mode_flag: Option<Mode>,
    tol: Option<f64>,
    emphasize_bits: bool,
) -> u8 {
    let (mut inst, file_mode) = match load_instance(instance_path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Some(t) = tol {
        inst.tolerances.mixture = t;
    }
    let mode = mode_flag.unwrap_or(file_mode);
    let started = Instant::now();
    let design = match run_designer(&inst, mode) {
        Ok(d) => d,
        Err(e) => {
            error!("design failed: {e}");
            return design_error_code(&e);
        }
    };
    let report = ReportFile::from_design(&inst, &design, started.elapsed().as_millis() as u64);
    if let Err(e) = report.revalidate(inst.tolerances.stochastic) {
        error!("report failed its own round-trip validation: {e}");
        return EXIT_INTERNAL;
    }
    let body = report.to_json();
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                error!("cannot write {}: {e}", path.display());
                return EXIT_VALIDATION;
            }
        }
        None => println!("{body}"),
    }
    if out.is_some() {
        let (value, unit) = if emphasize_bits {
            (design.exact_utility_bits(), "bits")
        } else {
            (design.exact_utility_nats, "nats")
        };
        println!("status: optimal  I(U;Y) = {value:.6} {unit}  mode: {}", design.mode.name());
    }
    0
}

fn cmd_verify(instance_path: &std::path::Path, mechanism_path: &std::path::Path, tol: f64) -> u8 {
    let (inst, _) = match load_instance(instance_path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let text = match std::fs::read_to_string(mechanism_path) {
        Ok(t) => t,
        Err(e) => {
            error!("cannot read {}: {e}", mechanism_path.display());
            return EXIT_VALIDATION;
        }
    };
    let mech: MechanismFile = match serde_json::from_str(&text) {
        Ok(m) => m,
        Err(e) => {
            error!("{}: {e}", mechanism_path.display());
            return EXIT_VALIDATION;
        }
    };
    let filter = match mech.into_channel() {
        Ok(f) => f,
        Err(e) => {
            error!("{}: {e}", mechanism_path.display());
            return EXIT_VALIDATION;
        }
    };
    if filter.cols() != inst.num_y() || filter.rows() != inst.num_letters() {
        error!(
            "filter is {}x{}, expected {}x{}",
            filter.rows(),
            filter.cols(),
            inst.num_letters(),
            inst.num_y()
        );
        return EXIT_VALIDATION;
    }

    let p_x = match inst.marginal_x() {
        Ok(p) => p,
        Err(e) => {
            error!("instance marginal invalid: {e}");
            return EXIT_VALIDATION;
        }
    };

    let k = inst.num_letters();
    let mut any_violation = false;
    println!("{:<8} {:>14} {:>14}  status", "letter", "budget", "realized");
    let mut utility = 0.0f64;
    for u in 0..k {
        let p_u: f64 = (0..inst.num_y())
            .map(|y| filter.matrix()[(u, y)] * inst.p_y.get(y))
            .sum();
        let budget = inst.budgets.get(u);
        let bound = match inst.divergence {
            LeakageMeasure::ChiSquare => budget * budget,
            LeakageMeasure::L1 => budget,
        };
        if p_u <= 1e-12 {
            println!("u{:<7} {:>14.6e} {:>14} ok", u + 1, bound, "unused");
            continue;
        }
        let cond: Vec<f64> = (0..inst.num_y())
            .map(|y| filter.matrix()[(u, y)] * inst.p_y.get(y) / p_u)
            .collect();
        let p_x_given_u = inst.p_x_given_y.matrix().mul_vec(&cond);
        let realized = match inst.divergence {
            LeakageMeasure::L1 => p_x_given_u
                .iter()
                .zip(p_x.values())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>(),
            LeakageMeasure::ChiSquare => p_x_given_u
                .iter()
                .zip(p_x.values())
                .map(|(a, b)| (a - b) * (a - b) / b)
                .sum::<f64>(),
        };
        let ok = realized <= bound + tol;
        if !ok {
            any_violation = true;
        }
        println!(
            "u{:<7} {:>14.6e} {:>14.6e}  {}",
            u + 1,
            bound,
            realized,
            if ok { "ok" } else { "VIOLATED" }
        );
        for (y, &c) in cond.iter().enumerate() {
            if c > 0.0 && inst.p_y.get(y) > 0.0 {
                utility += p_u * c * (c / inst.p_y.get(y)).ln();
            }
        }
    }
    println!(
        "I(U;Y) = {:.6} bits ({:.6} nats)",
        utility / std::f64::consts::LN_2,
        utility
    );
    if any_violation {
        EXIT_VIOLATED
    } else {
        0
    }
}

fn cmd_oracle(instance_path: &std::path::Path, random: bool, seed: u64, compare: bool) -> u8 {
    let (inst, file_mode) = match load_instance(instance_path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if !oracle::within_grid_limits(&inst) && !random {
        error!(
            "instance exceeds grid limits (|Y| <= {}, K <= {}); pass --random",
            oracle::GRID_MAX_Y,
            oracle::GRID_MAX_K
        );
        return EXIT_ORACLE_SIZE;
    }
    let cfg = privdesign_core::OracleConfig64 {
        seed,
        random_mode: random,
        ..Default::default()
    };
    let result = match brute_force(&inst, &cfg) {
        Ok(d) => d,
        Err(e) => {
            error!("oracle failed: {e}");
            return design_error_code(&e);
        }
    };
    println!(
        "oracle best I(U;Y) = {:.6} bits ({:.6} nats)",
        result.exact_utility_bits(),
        result.exact_utility_nats
    );
    println!("filter P_U_given_Y (rows = letters):");
    for u in 0..result.p_u_given_y.rows() {
        let row: Vec<String> = (0..result.p_u_given_y.cols())
            .map(|y| format!("{:.4}", result.p_u_given_y.matrix()[(u, y)]))
            .collect();
        println!("  [{}]", row.join(", "));
    }
    if compare {
        match run_designer(&inst, file_mode) {
            Ok(design) => {
                let gap = design.exact_utility_nats - result.exact_utility_nats;
                println!(
                    "designer I(U;Y) = {:.6} bits ({:.6} nats), gap = {:+.3e} nats",
                    design.exact_utility_bits(),
                    design.exact_utility_nats,
                    gap
                );
            }
            Err(e) => println!("designer: {e}"),
        }
    }
    0
}
