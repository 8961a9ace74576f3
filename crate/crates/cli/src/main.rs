use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use graphon_sync::experiments::{
    fmt_g9, run_convergence_study, run_phase_diagram, write_convergence, write_grid, write_trials,
    ConvergenceConfig, EtaPreset, ExperimentConfig,
};
use graphon_sync::integrator::integrate_observed;
use graphon_sync::observables::order_parameter_of;
use graphon_sync::prelude::*;
use graphon_sync::theory::{bound_curve, write_bound_curve};
use graphon_sync::ws_reduction::check_against_direct;

#[derive(Parser, Debug)]
#[command(
    name = "graphon-sync",
    version,
    about = "Phase oscillators on graphon-sampled random networks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed (overrides the configured master seed)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (1 = sequential, 0 = all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a W-random network and write its edge list
    SampleGraph {
        #[arg(long)]
        n: usize,
        /// Graphon preset (constant-1, product-sine)
        #[arg(long, default_value = "constant-1")]
        graphon: String,
        /// Scaling factor; with constant-1 this is the Erdős–Rényi edge probability
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Integrate the sampled system on one network and write t,r,psi,diameter
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Initial condition preset (linear, cosine, uniform-random-smooth)
        #[arg(long, default_value = "linear")]
        eta: String,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, default_value_t = 20.0)]
        horizon: f64,
        /// Keep every k-th step
        #[arg(long, default_value_t = 10)]
        stride: usize,
    },
    /// Monte Carlo sweep over (n, p, beta); writes per-trial rows
    PhaseDiagram {
        /// Also write per-cell fractions here
        #[arg(long)]
        grid_out: Option<PathBuf>,
    },
    /// Sampled and averaged systems against a continuum reference
    Convergence,
    /// Minimum edge probability per network size
    BoundCurve {
        /// Network sizes, comma separated
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "10,20,50,100,200,500,1000,2000,5000"
        )]
        n: Vec<usize>,
        /// Phase shifts, comma separated; 0 gives the connectivity threshold
        #[arg(long, value_delimiter = ',', default_value = "0")]
        beta: Vec<f64>,
    },
    /// Solve the reduced frame and compare against direct continuum integration
    WsCheck {
        #[arg(long, default_value_t = 1024)]
        m: usize,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        beta: Vec<f64>,
        #[arg(long, default_value = "linear")]
        eta: String,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[arg(long, default_value_t = 5.0)]
        horizon: f64,
    },
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn experiment_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn convergence_config(common: &Common) -> Result<ConvergenceConfig> {
    let mut cfg = match &common.config {
        Some(p) => ConvergenceConfig::from_path(p)?,
        None => ConvergenceConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let common = &cli.common;
    let seed = common.seed.unwrap_or(0);
    match cli.command {
        Command::SampleGraph { n, graphon, alpha } => {
            let g = Graphon::preset(&graphon)?;
            let net = sample_network(&discretize(&g, n)?, alpha, seed)?;
            let mut out = open_out(common.out.as_deref())?;
            net.write_edge_list(&mut out)?;
            out.flush()?;
            eprintln!(
                "{} edges, density {:.4}, connected: {}",
                net.edge_count(),
                net.density(),
                is_connected(&net)
            );
        }
        Command::Simulate {
            n,
            p,
            beta,
            eta,
            h,
            horizon,
            stride,
        } => {
            if stride == 0 {
                bail!("--stride must be at least 1");
            }
            let net = erdos_renyi(n, p, seed)?;
            let eta = EtaPreset::named(&eta)?.build();
            let init = discretize_initial(|x| eta.eval(x), n)?;
            let sys = SampledSystem::new(&net, Coupling::for_phase_shift(beta)?);
            let cfg = IntegratorConfig::new(h, horizon)?.endpoints_only();
            let mut out = open_out(common.out.as_deref())?;
            writeln!(out, "t,r,psi,diameter")?;
            let mut failed = None;
            integrate_observed(&sys, &init, &cfg, |k, t, s| {
                if failed.is_some() || (k % stride != 0 && k != cfg.steps()) {
                    return;
                }
                let op = order_parameter_of(s);
                let (lo, hi) = s
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                        (a.min(v), b.max(v))
                    });
                let psi = op.psi.map(fmt_g9).unwrap_or_default();
                if let Err(e) = writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_g9(t),
                    fmt_g9(op.r),
                    psi,
                    fmt_g9(hi - lo)
                ) {
                    failed = Some(e);
                }
            })?;
            if let Some(e) = failed {
                return Err(e.into());
            }
            out.flush()?;
        }
        Command::PhaseDiagram { grid_out } => {
            let cfg = experiment_config(common)?;
            let diagram = run_phase_diagram(&cfg)?;
            let mut out = open_out(common.out.as_deref())?;
            write_trials(&diagram.records, &mut out)?;
            out.flush()?;
            if let Some(path) = grid_out {
                let mut g = open_out(Some(&path))?;
                write_grid(&diagram.cells, &mut g)?;
                g.flush()?;
            }
            let diverged = diagram.records.iter().filter(|r| r.diverged).count();
            eprintln!(
                "{} trials in {} cells, {diverged} diverged",
                diagram.records.len(),
                diagram.cells.len()
            );
        }
        Command::Convergence => {
            let cfg = convergence_config(common)?;
            let rows = run_convergence_study(&cfg)?;
            let mut out = open_out(common.out.as_deref())?;
            write_convergence(&rows, &mut out)?;
            out.flush()?;
        }
        Command::BoundCurve { n, beta } => {
            let mut rows = Vec::new();
            for b in beta {
                rows.extend(bound_curve(&n, b)?);
            }
            let mut out = open_out(common.out.as_deref())?;
            write_bound_curve(&rows, &mut out)?;
            out.flush()?;
        }
        Command::WsCheck {
            m,
            beta,
            eta,
            h,
            horizon,
        } => {
            let eta = EtaPreset::named(&eta)?.build();
            let theta0 = discretize_initial(|x| eta.eval(x), m)?;
            let cfg = IntegratorConfig::new(h, horizon)?.with_store_stride(10)?;
            let mut out = open_out(common.out.as_deref())?;
            writeln!(out, "beta,gamma0,theta0,psi0,frame_residual,roundtrip_error,max_gap,hdot_residual,final_gamma,final_r")?;
            for b in beta {
                let c = check_against_direct(&theta0, b, &cfg)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    fmt_g9(b),
                    fmt_g9(c.initial.gamma),
                    fmt_g9(c.initial.theta),
                    fmt_g9(c.initial.psi),
                    fmt_g9(c.frame_residual),
                    fmt_g9(c.roundtrip_error),
                    fmt_g9(c.max_gap),
                    fmt_g9(c.hdot_residual),
                    fmt_g9(c.final_gamma),
                    fmt_g9(c.final_r),
                )?;
            }
            out.flush()?;
        }
    }
    Ok(())
}
