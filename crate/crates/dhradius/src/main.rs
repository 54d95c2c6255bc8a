use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dhradius::config::{GenFamily, RunConfig, Task, Term};

/// Stability radii of dissipative Hamiltonian systems.
///
/// Flags override the values of the configuration file.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Task to run; may also come from the configuration file.
    task: Option<Task>,
    /// TOML file with keys matching the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with the Matrix Market input files.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory for report.json, curves and generated matrices.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write (ω, value) samples of the full and final reduced functions.
    #[arg(long)]
    emit_curve: bool,
    #[arg(long)]
    curve_points: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    omega_range: Option<Vec<f64>>,
    /// Skip the DH structure check of the input.
    #[arg(long)]
    no_validate: bool,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    json: bool,

    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    hinf_tol: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    initial_points: Option<Vec<f64>>,

    #[arg(long, allow_negative_numbers = true)]
    gamma_inner: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_outer: Option<f64>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    penalty_factor: Option<f64>,

    /// Rotation speed of brake inputs.
    #[arg(long)]
    speed: Option<f64>,
    /// Comma-separated rotation speeds for `sweep`.
    #[arg(long, value_delimiter = ',')]
    speeds: Option<Vec<f64>>,
    #[arg(long)]
    sweep_task: Option<Task>,

    #[arg(long)]
    term: Option<Term>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    sample_scale: Option<f64>,

    #[arg(long)]
    family: Option<GenFamily>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    bandwidth: Option<usize>,
    #[arg(long)]
    rank_cap: Option<usize>,
}

macro_rules! set {
    ($cfg:ident, $cli:ident, $($f:ident),*) => {
        $(if let Some(v) = $cli.$f.clone() { $cfg.$f = v; })*
    };
}

macro_rules! set_opt {
    ($cfg:ident, $cli:ident, $($f:ident),*) => {
        $(if let Some(v) = $cli.$f.clone() { $cfg.$f = Some(v); })*
    };
}

impl Cli {
    fn into_config(self) -> Result<RunConfig, dhradius::RunError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let cli = self;
        set_opt!(
            cfg,
            cli,
            task,
            input,
            output,
            ell,
            gamma_outer,
            initial_points,
            radius,
            omega,
            rank_cap
        );
        set!(
            cfg,
            cli,
            curve_points,
            eps,
            k_max,
            rho,
            seed,
            hinf_tol,
            gamma_inner,
            inner_tol,
            outer_tol,
            penalty_factor,
            speed,
            speeds,
            sweep_task,
            term,
            samples,
            sample_scale,
            family,
            n,
            m,
            p,
            bandwidth
        );
        if let Some(r) = &cli.omega_range {
            cfg.omega_range = Some([r[0], r[1]]);
        }
        if cli.emit_curve {
            cfg.emit_curve = true;
        }
        if cli.no_validate {
            cfg.validate = false;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let result = cli.into_config().and_then(|cfg| dhradius::run(&cfg));
    match result {
        Ok(report) => {
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.table());
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
