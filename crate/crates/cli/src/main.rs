use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use efpr_core::diagnostics::admissible_interval;
use efpr_core::ef_scheme::EfParams;
use efpr_core::eos::{derive_eos_params, Substance, GAS_CONSTANT};
use efpr_core::sim::{load_config, run_experiment, SimConfig};
use efpr_core::{Error, Result};

/// Overrides `output.directory` of the config.
const OUTPUT_ENV: &str = "EFPR_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "efpr",
    version,
    about = "Peng-Robinson droplet relaxation with the energy-factorization scheme"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; takes precedence over EFPR_OUTPUT_DIR.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Validate a config and print the derived parameters.
    Check { config: PathBuf },
    /// Print PR-EoS and scheme constants of a substance.
    Props {
        /// Preset name or path to a substance block.
        substance: String,
        #[arg(long = "T", value_name = "K")]
        temperature: f64,
        /// Gas density; with --c-liq defines the density window.
        #[arg(long, requires = "c_liq")]
        c_gas: Option<f64>,
        #[arg(long, requires = "c_gas")]
        c_liq: Option<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.9, 1.1])]
        bounds_factors: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, output } => cmd_run(&config, output),
        Command::Check { config } => cmd_check(&config),
        Command::Props {
            substance,
            temperature,
            c_gas,
            c_liq,
            bounds_factors,
        } => cmd_props(&substance, temperature, c_gas.zip(c_liq), &bounds_factors),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}

fn load(path: &Path, output: Option<PathBuf>) -> Result<SimConfig> {
    let mut cfg = load_config(path)?;
    let over = output.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from));
    if let Some(dir) = over {
        cfg.provenance
            .push(format!("override output.directory = {}", dir.display()));
        cfg.output.directory = dir;
    }
    Ok(cfg)
}

fn print_provenance(cfg: &SimConfig) {
    for line in &cfg.provenance {
        println!("# {line}");
    }
}

fn cmd_run(path: &Path, output: Option<PathBuf>) -> Result<i32> {
    let cfg = load(path, output)?;
    print_provenance(&cfg);
    let s = run_experiment(&cfg)?;
    println!("steps            {}", s.n_steps);
    println!("F initial        {:e}", s.initial_energy.total);
    println!("F final          {:e}", s.final_energy.total);
    println!("mu_e range       [{}, {}]", s.mu_e_min, s.mu_e_max);
    println!(
        "admissible       [{}, {}]",
        s.interval.mu_lower, s.interval.mu_upper
    );
    println!(
        "c range          [{}, {}]",
        s.c_min_overall, s.c_max_overall
    );
    println!("window           [{}, {}]", s.ef.c_min, s.ef.c_max);
    println!("mass drift       {:e}", s.max_mass_drift_rel);
    if let (Some(a), Some(b)) = (s.anisotropy_first, s.anisotropy_last) {
        println!("anisotropy       {a:.4} -> {b:.4}");
    }
    println!("energy monotone  {}", s.energy_monotone);
    println!("bounds           {}", s.bounds_ok);
    println!("admissibility    {}", s.admissibility_ok);
    for v in &s.violations {
        eprintln!("violation at step {v}");
    }
    println!("output           {}", s.output_directory.display());
    Ok(s.exit_code)
}

fn cmd_check(path: &Path) -> Result<i32> {
    let cfg = load(path, None)?;
    print_provenance(&cfg);
    let eos = cfg.eos_params()?;
    let ef = cfg.ef_params(&eos)?;
    let grid = cfg.build_grid()?;
    println!("substance  {}", cfg.substance.name);
    println!("grid       {}x{}, h = {:e} m", grid.nx, grid.ny, grid.h);
    println!("tau        {:e} s, {} steps", cfg.tau(), cfg.n_steps);
    print_constants(&eos, Some(&ef))?;
    println!("config ok");
    Ok(0)
}

fn cmd_props(name: &str, t: f64, densities: Option<(f64, f64)>, factors: &[f64]) -> Result<i32> {
    let substance = match Substance::preset(name) {
        Some(s) => s,
        None => Substance::load(Path::new(name))?,
    };
    let eos = derive_eos_params(&substance, t, 0.0, GAS_CONSTANT)?;
    let ef = match densities {
        Some((gas, liq)) => Some(EfParams::new(
            factors[0] * gas,
            factors[1] * liq,
            &eos,
            None,
        )?),
        None => None,
    };
    println!("substance  {}", substance.name);
    print_constants(&eos, ef.as_ref())?;
    if ef.is_none() {
        println!("(pass --c-gas and --c-liq for lambda and the multiplier interval)");
    }
    Ok(0)
}

fn print_constants(eos: &efpr_core::eos::EosParams, ef: Option<&EfParams>) -> Result<(), Error> {
    println!("T          {} K", eos.temperature);
    println!("m          {}", eos.m);
    println!("alpha      {:e}", eos.alpha);
    println!("beta       {:e}", eos.beta);
    println!("kappa      {:e}", eos.kappa);
    if let Some(ef) = ef {
        let iv = admissible_interval(ef, eos)?;
        println!("c_m, c_M   {}, {}", ef.c_min, ef.c_max);
        println!("epsilon_0  {}", ef.epsilon_0);
        println!("lambda     {}", ef.lambda);
        println!("mu_lower   {}", iv.mu_lower);
        println!("mu_upper   {}", iv.mu_upper);
    }
    Ok(())
}
