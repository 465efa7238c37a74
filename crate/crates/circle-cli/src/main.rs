//! `circleqm`: command-line front end for circle-qm.
//!
//! Exit codes: 0 success, 1 I/O failure or failing `validate` checks,
//! 2 configuration error, 3 numerical error (reported as JSON on stdout).

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circle_qm::husimi::CylinderGrid;
use circle_qm::semiclassics::HolomorphicHamiltonian;
use circle_qm::states::Representation;
use circle_qm::Complex64;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{parse_complex, parse_real, Endpoints, RunConfig, StateSpec};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(circle_qm::Error),
    Io(String),
}

impl From<circle_qm::Error> for CliError {
    fn from(e: circle_qm::Error) -> Self {
        match e {
            circle_qm::Error::InvalidParameter(msg) => CliError::Config(msg),
            e => CliError::Numerical(e),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "circleqm",
    version,
    about = "Coherent states, Husimi zeros and semiclassical propagators on the circle"
)]
struct Cli {
    /// JSON run configuration; command-line values override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Overlap ⟨z_F|z_I⟩ and its normalized value.
    Overlap {
        #[command(flatten)]
        rep: RepArgs,
        #[command(flatten)]
        ends: EndpointArgs,
    },
    /// Norm, ⟨e^{iφ}⟩, ⟨p⟩ and the uncertainty product of a state.
    Expect {
        #[command(flatten)]
        rep: RepArgs,
        #[command(flatten)]
        state: StateArgs,
    },
    /// Husimi density on a cylinder grid, as CSV.
    Husimi {
        #[command(flatten)]
        rep: RepArgs,
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Zeros of the Bargmann function in the fundamental strip.
    Zeros {
        #[command(flatten)]
        rep: RepArgs,
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Hadamard product reconstruction compared against direct evaluation.
    Reconstruct {
        #[command(flatten)]
        rep: RepArgs,
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Semiclassical propagator: branch table (CSV) and summary (JSON).
    Propagate {
        #[command(flatten)]
        rep: RepArgs,
        #[command(flatten)]
        ends: EndpointArgs,
        /// Propagation time.
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        tau: Option<f64>,
        /// Pendulum coupling; the free rotor when absent.
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        k_pend: Option<f64>,
    },
    /// Run the invariant checks and report measured residuals.
    Validate {
        #[command(flatten)]
        rep: RepArgs,
    },
}

#[derive(Args, Debug)]
struct RepArgs {
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    s: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    hbar: Option<f64>,
}

#[derive(Args, Debug)]
struct EndpointArgs {
    /// Initial label as `re,im`.
    #[arg(long = "zI", value_parser = parse_complex, allow_hyphen_values = true)]
    z_i: Option<Complex64>,
    /// Final label as `re,im`.
    #[arg(long = "zF", value_parser = parse_complex, allow_hyphen_values = true)]
    z_f: Option<Complex64>,
}

#[derive(Args, Debug)]
struct StateArgs {
    /// Coherent state |z⟩ with `z` as `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, conflicts_with = "basis")]
    z: Option<Complex64>,
    /// Basis state |n⟩.
    #[arg(long, allow_hyphen_values = true)]
    basis: Option<i64>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    phi_count: Option<usize>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    p_min: Option<f64>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    p_max: Option<f64>,
    #[arg(long)]
    p_count: Option<usize>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Half-height of the searched band.
    #[arg(long, value_parser = parse_real)]
    im_cutoff: Option<f64>,
    /// Residual tolerance at reported zeros.
    #[arg(long, value_parser = parse_real)]
    tol: Option<f64>,
}

impl RepArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if self.delta.is_none() && self.s.is_none() && self.hbar.is_none() {
            return Ok(());
        }
        let base = cfg.representation.unwrap_or(Representation { delta: 0.0, s: f64::NAN, hbar: 1.0 });
        let rep = Representation {
            delta: self.delta.unwrap_or(base.delta),
            s: self.s.unwrap_or(base.s),
            hbar: self.hbar.unwrap_or(base.hbar),
        };
        if rep.s.is_nan() {
            return Err(CliError::Config("--s is required".into()));
        }
        cfg.representation = Some(rep);
        Ok(())
    }
}

impl EndpointArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        match (self.z_i, self.z_f, cfg.endpoints) {
            (None, None, _) => {}
            (Some(z_i), Some(z_f), _) => cfg.endpoints = Some(Endpoints { z_i, z_f }),
            (a, b, Some(old)) => {
                cfg.endpoints = Some(Endpoints { z_i: a.unwrap_or(old.z_i), z_f: b.unwrap_or(old.z_f) })
            }
            _ => return Err(CliError::Config("both --zI and --zF are required".into())),
        }
        Ok(())
    }
}

impl StateArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(z) = self.z {
            cfg.state = Some(StateSpec::Coherent { z, tol: circle_qm::states::DEFAULT_TOL });
        }
        if let Some(n) = self.basis {
            cfg.state = Some(StateSpec::Basis { n });
        }
    }
}

impl GridArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let base = cfg.grid.unwrap_or(CylinderGrid { phi_count: 64, p_min: -3.0, p_max: 3.0, p_count: 121 });
        cfg.grid = Some(CylinderGrid {
            phi_count: self.phi_count.unwrap_or(base.phi_count),
            p_min: self.p_min.unwrap_or(base.p_min),
            p_max: self.p_max.unwrap_or(base.p_max),
            p_count: self.p_count.unwrap_or(base.p_count),
        });
    }
}

impl SearchArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.im_cutoff.is_some() {
            cfg.zeros.im_cutoff = self.im_cutoff;
        }
        if let Some(t) = self.tol {
            cfg.zeros.tol = t;
        }
    }
}

fn run(cli: &Cli) -> Result<commands::Output, CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Overlap { rep, ends } => {
            rep.apply(&mut cfg)?;
            ends.apply(&mut cfg)?;
            commands::overlap_cmd(&cfg, out)
        }
        Command::Expect { rep, state } => {
            rep.apply(&mut cfg)?;
            state.apply(&mut cfg);
            commands::expect_cmd(&cfg, out)
        }
        Command::Husimi { rep, state, grid } => {
            rep.apply(&mut cfg)?;
            state.apply(&mut cfg);
            grid.apply(&mut cfg);
            commands::husimi_cmd(&cfg, out)
        }
        Command::Zeros { rep, state, search } => {
            rep.apply(&mut cfg)?;
            state.apply(&mut cfg);
            search.apply(&mut cfg);
            commands::zeros_cmd(&cfg, out)
        }
        Command::Reconstruct { rep, state, search } => {
            rep.apply(&mut cfg)?;
            state.apply(&mut cfg);
            search.apply(&mut cfg);
            commands::reconstruct_cmd(&cfg, out)
        }
        Command::Propagate { rep, ends, tau, k_pend } => {
            rep.apply(&mut cfg)?;
            ends.apply(&mut cfg)?;
            if tau.is_some() {
                cfg.tau = *tau;
            }
            if let Some(k) = k_pend {
                cfg.hamiltonian = Some(HolomorphicHamiltonian::Pendulum { k_pend: *k });
            }
            commands::propagate_cmd(&cfg, out)
        }
        Command::Validate { rep } => {
            rep.apply(&mut cfg)?;
            commands::validate_cmd(&cfg, out)
        }
    }
}

/// Write through a temporary file in the target directory, then rename.
fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|output| {
        for (path, text) in &output.files {
            write_atomic(path, text)?;
        }
        Ok(output)
    });
    match result {
        Ok(output) => {
            print!("{}", output.stdout);
            if output.failed_checks {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("{}", json!({ "error": { "kind": "config", "message": msg } }));
            ExitCode::from(2)
        }
        Err(CliError::Numerical(e)) => {
            println!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("{}", json!({ "error": { "kind": "io", "message": msg } }));
            ExitCode::from(1)
        }
    }
}
