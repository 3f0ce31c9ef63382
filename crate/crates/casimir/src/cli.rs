use std::path::{Path, PathBuf};

use casimir_core::lifshitz::LifshitzPair;
use casimir_core::roughness::RoughnessDistribution;
use clap::{Parser, Subcommand};

use crate::calibration::{self, FitReport, BUNDLED_NOISE, BUNDLED_SEED, BUNDLED_TRUTH, NOMINAL_RADIUS};
use crate::config::{self, CalibrateConfig, CurveConfig, LimitsConfig, Quantity, SweepRunConfig, DEFAULT_TOL};
use crate::error::{CliError, Result};
use crate::io;
use crate::pipeline::{self, CurveKind};
use crate::registry::Registry;

#[derive(Debug, Parser)]
#[command(name = "casimir", version, about = "Casimir force, calibration and oscillator sweep toolkit")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads; 0 for one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sphere-plane force (or its gradient) over a separation grid.
    Force {
        #[arg(long)]
        gradient: bool,
    },
    /// Plane-plane pressure over a separation grid.
    Pressure,
    /// Fit k, V0, R and delta0 to an electrostatic calibration sweep.
    Calibrate {
        /// CSV with columns z_metal_m,v_applied_v,delta_c_f.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Use the bundled synthetic dataset.
        #[arg(long, conflicts_with = "data")]
        bundled: bool,
    },
    /// Write a synthetic calibration dataset.
    CalibrationData {
        /// Relative capacitance noise.
        #[arg(long, default_value_t = BUNDLED_NOISE)]
        noise: f64,
    },
    /// Simulate an oscillator sweep and invert it back to gradients.
    Sweep,
    /// Yukawa strength limits over a range grid.
    Limits,
    /// Materials registry tools.
    Materials {
        #[command(subcommand)]
        action: MaterialsAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum MaterialsAction {
    /// Load every registry entry and check its permittivity.
    Validate {
        /// Registry file; defaults to $CASIMIR_DATA_DIR/materials.toml.
        registry: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::Force { gradient } => {
            let (cfg, base): (CurveConfig, _) = config::load(cfg_path)?;
            let kind = match (gradient, cfg.quantity.unwrap_or_default()) {
                (true, _) | (false, Quantity::Gradient) => CurveKind::Gradient,
                (false, Quantity::Force) => CurveKind::Force,
            };
            curve_command(&cli, cfg, &base, kind)
        }
        Command::Pressure => {
            let (cfg, base): (CurveConfig, _) = config::load(cfg_path)?;
            if cfg.quantity.is_some() {
                return Err(CliError::Usage("`quantity` applies to the force command only".into()));
            }
            curve_command(&cli, cfg, &base, CurveKind::Pressure)
        }
        Command::Calibrate { data, bundled } => {
            let (cfg, base): (CalibrateConfig, _) = config::load(cfg_path)?;
            let samples = if *bundled {
                calibration::bundled_samples()?
            } else {
                let path = match (data, &cfg.data) {
                    (Some(p), _) => p.clone(),
                    (None, Some(p)) if p.is_absolute() => p.clone(),
                    (None, Some(p)) => base.join(p),
                    (None, None) => return Err(CliError::Usage("calibrate needs --data, --bundled or `data`".into())),
                };
                io::read_calibration(&path)?
            };
            let fit = calibration::fit(&samples, cfg.radius_guess_m.unwrap_or(NOMINAL_RADIUS))?;
            let report = FitReport::new(&fit, samples.len());
            io::emit(None, &report.text())?;
            if let Some(out) = cli.out.as_deref().or(cfg.out.as_deref()) {
                io::emit(Some(out), &report.json())?;
            }
            Ok(())
        }
        Command::CalibrationData { noise } => {
            let samples = calibration::synthetic_dataset(&BUNDLED_TRUTH, *noise, cli.seed.unwrap_or(BUNDLED_SEED))?;
            io::emit(cli.out.as_deref(), &io::calibration_csv(&samples))
        }
        Command::Sweep => sweep_command(&cli),
        Command::Limits => limits_command(&cli),
        Command::Materials { action: MaterialsAction::Validate { registry } } => {
            let reg = Registry::discover(registry.as_deref().or(cfg_path))?;
            let names: Vec<String> = reg.names().map(String::from).collect();
            let mut text = String::new();
            let mut first_error = None;
            for name in names {
                match reg.validate(&name) {
                    Ok(r) => {
                        let jump = r.splice_jump.map_or(String::new(), |j| {
                            let flag = if j > crate::registry::SPLICE_JUMP_LIMIT { " (exceeds 1e-2)" } else { "" };
                            format!(" splice_jump={j:e}{flag}")
                        });
                        text.push_str(&format!("ok     {name} {:?}{jump}\n", r.model));
                    }
                    Err(e) => {
                        text.push_str(&format!("error  {name}: {e}\n"));
                        first_error.get_or_insert(e);
                    }
                }
            }
            io::emit(cli.out.as_deref(), &text)?;
            first_error.map_or(Ok(()), Err)
        }
    }
}

fn tolerance(cli: &Cli, cfg: Option<f64>) -> f64 {
    cli.tol.or(cfg).unwrap_or(DEFAULT_TOL)
}

fn pair(registry: Option<&Path>, base: &Path, m: &config::MaterialsConfig) -> Result<LifshitzPair> {
    let reg = Registry::discover(registry.map(|p| base.join(p)).as_deref())?;
    Ok(LifshitzPair::new(&reg.model(&m.sphere)?, &reg.model(&m.plate)?)?)
}

fn curve_command(cli: &Cli, cfg: CurveConfig, base: &Path, kind: CurveKind) -> Result<()> {
    let zs = cfg.grid.resolve("separation")?;
    let pair = pair(cfg.registry.as_deref(), base, &cfg.materials)?;
    let dist = cfg.roughness.as_ref().map(|r| r.distribution(base)).transpose()?;
    let pool = pipeline::thread_pool(cli.threads.or(cfg.threads))?;
    let rows = pipeline::curve(&pool, &pair, &cfg.geometry, dist.as_ref(), &zs, kind, tolerance(cli, cfg.tol))?;
    io::emit(cli.out.as_deref().or(cfg.out.as_deref()), &pipeline::curve_csv(kind, &rows))
}

fn inverted_path(raw: &Path) -> PathBuf {
    let stem = raw.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    raw.with_file_name(format!("{stem}_inverted.csv"))
}

fn sweep_command(cli: &Cli) -> Result<()> {
    let (cfg, base): (SweepRunConfig, _) = config::load(cli.config.as_deref())?;
    let sweep = cfg.sweep()?;
    let params = cfg.oscillator.params()?;
    let pair = pair(cfg.registry.as_deref(), &base, &cfg.materials)?;
    let dist = match &cfg.roughness {
        Some(r) => r.distribution(&base)?,
        None => RoughnessDistribution::smooth(),
    };
    let pool = pipeline::thread_pool(cli.threads.or(cfg.threads))?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out = pipeline::sweep(&pool, &sweep, &params, &cfg.geometry, &pair, &dist, tolerance(cli, cfg.tol), seed)?;
    let raw = pipeline::sweep_csv(&out);
    let inverted = pipeline::inverted_csv(&out);
    match cli.out.as_deref().or(cfg.out.as_deref()) {
        Some(p) => {
            io::emit(Some(p), &raw)?;
            let inv = cfg.inverted_out.clone().unwrap_or_else(|| inverted_path(p));
            io::emit(Some(&inv), &inverted)
        }
        None => io::emit(None, &format!("{raw}\n{inverted}")),
    }
}

fn limits_command(cli: &Cli) -> Result<()> {
    let (cfg, base): (LimitsConfig, _) = config::load(cli.config.as_deref())?;
    let lambdas = cfg.lambda.resolve("range")?;
    let zs = cfg.grid.resolve("separation")?;
    let bound = cfg.bound(&base)?;
    let (sphere, plate) = cfg.bodies()?;
    let pool = pipeline::thread_pool(cli.threads.or(cfg.threads))?;
    let rows = pipeline::limits(&pool, &lambdas, &zs, &bound, &sphere, &plate, cfg.method.into())?;
    io::emit(cli.out.as_deref().or(cfg.out.as_deref()), &pipeline::limits_csv(&rows))
}
