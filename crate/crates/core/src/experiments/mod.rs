//! Monte Carlo sweeps over Erdős–Rényi networks and the sampled-versus-continuum
//! convergence study.
//!
//! Every trial derives its own seed from the master seed and its grid indices, and results
//! are merged by index, so output depends only on the configuration.

mod config;
mod csv;

use std::path::Path;
use std::time::{Duration, Instant};

pub use config::{
    ConvergenceConfig, DetectorSettings, Eta, EtaPreset, ExperimentConfig, IntegratorSettings,
};
pub use csv::{
    fmt_g9, to_path, write_convergence, write_grid, write_trials, CONVERGENCE_HEADER, GRID_HEADER,
    TRIAL_HEADER,
};

use crate::dynamics::{
    discretize_initial, AveragedSystem, ContinuumSystem, Coupling, SampledSystem,
};
use crate::error::{Error, Result};
use crate::graphon::{discretize, erdos_renyi, is_connected, sample_network};
use crate::integrator::integrate;
use crate::observables::{linf_distance, sync_verdict};
use crate::par::{map_indexed, Parallelism};
use crate::rng::derive_seed;

/// Outcome of one simulated network.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub trial: usize,
    pub seed: u64,
    pub connected: bool,
    pub phase_sync: bool,
    pub freq_sync: bool,
    pub final_r: f64,
    pub final_diameter: f64,
    pub final_freq_spread: f64,
    /// The integration blew up; the verdict fields are false and the finals NaN.
    pub diverged: bool,
    pub wall_time: Duration,
}

/// Equality ignores `wall_time`.
impl PartialEq for TrialRecord {
    fn eq(&self, o: &Self) -> bool {
        fn same(a: f64, b: f64) -> bool {
            a.to_bits() == b.to_bits()
        }
        self.n == o.n
            && same(self.p, o.p)
            && same(self.beta, o.beta)
            && self.trial == o.trial
            && self.seed == o.seed
            && self.connected == o.connected
            && self.phase_sync == o.phase_sync
            && self.freq_sync == o.freq_sync
            && same(self.final_r, o.final_r)
            && same(self.final_diameter, o.final_diameter)
            && same(self.final_freq_spread, o.final_freq_spread)
            && self.diverged == o.diverged
    }
}

/// Samples `G(n, p)` with `seed`, integrates the sampled system from the configured initial
/// condition, and classifies the end state.
pub fn run_trial(
    n: usize,
    p: f64,
    beta: f64,
    trial: usize,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let net = erdos_renyi(n, p, seed)?;
    let eta = cfg.eta.build();
    let init = discretize_initial(|x| eta.eval(x), n)?;
    let sys = SampledSystem::new(&net, Coupling::for_phase_shift(beta)?);
    let icfg = cfg.integrator.build()?.endpoints_only();
    let mut rec = TrialRecord {
        n,
        p,
        beta,
        trial,
        seed,
        connected: is_connected(&net),
        phase_sync: false,
        freq_sync: false,
        final_r: f64::NAN,
        final_diameter: f64::NAN,
        final_freq_spread: f64::NAN,
        diverged: false,
        wall_time: Duration::ZERO,
    };
    match integrate(&sys, &init, &icfg) {
        Ok(traj) => {
            let v = sync_verdict(&traj, cfg.detector.phase_tol, cfg.detector.freq_tol);
            rec.phase_sync = v.phase_sync;
            rec.freq_sync = v.freq_sync;
            rec.final_r = v.final_r;
            rec.final_diameter = v.final_diameter;
            rec.final_freq_spread = v.final_freq_spread;
        }
        Err(Error::Divergence { .. }) => rec.diverged = true,
        Err(e) => return Err(e),
    }
    rec.wall_time = start.elapsed();
    Ok(rec)
}

/// Trial counts for one `(n, p, β)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub trials: usize,
    pub freq_sync: usize,
    pub phase_sync: usize,
    pub connected: usize,
    /// Trials that are both connected and frequency synchronized.
    pub freq_sync_connected: usize,
}

impl CellSummary {
    fn frac(k: usize, of: usize) -> f64 {
        k as f64 / of as f64
    }

    pub fn freq_sync_fraction(&self) -> f64 {
        Self::frac(self.freq_sync, self.trials)
    }

    pub fn phase_sync_fraction(&self) -> f64 {
        Self::frac(self.phase_sync, self.trials)
    }

    pub fn connected_fraction(&self) -> f64 {
        Self::frac(self.connected, self.trials)
    }

    pub fn freq_sync_connected_fraction(&self) -> f64 {
        Self::frac(self.freq_sync_connected, self.trials)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    /// Cells in `(n, p, β)` grid order.
    pub cells: Vec<CellSummary>,
    /// Every trial, sorted by `(n, p, β, trial)` grid order.
    pub records: Vec<TrialRecord>,
}

/// Runs every trial of the sweep, in parallel when `cfg.threads != 1`.
pub fn run_phase_diagram(cfg: &ExperimentConfig) -> Result<PhaseDiagram> {
    run_phase_diagram_with(cfg, Parallelism::from_threads(cfg.threads))
}

/// As [`run_phase_diagram`] with an explicit worker mode.
pub fn run_phase_diagram_with(cfg: &ExperimentConfig, mode: Parallelism) -> Result<PhaseDiagram> {
    cfg.validate()?;
    let (np, nb, nt) = (cfg.p_grid.len(), cfg.beta_grid.len(), cfg.trials);
    let total = cfg.n_grid.len() * np * nb * nt;
    let unpack = |k: usize| {
        let trial = k % nt;
        let bi = (k / nt) % nb;
        let pi = (k / (nt * nb)) % np;
        let ni = k / (nt * nb * np);
        (ni, pi, bi, trial)
    };
    let results = map_indexed(total, mode, |k| {
        let (ni, pi, bi, trial) = unpack(k);
        let seed = derive_seed(cfg.master_seed, ni, pi, bi, trial);
        run_trial(
            cfg.n_grid[ni],
            cfg.p_grid[pi],
            cfg.beta_grid[bi],
            trial,
            seed,
            cfg,
        )
    });
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let cells = records
        .chunks(nt)
        .map(|chunk| {
            let count = |f: &dyn Fn(&TrialRecord) -> bool| chunk.iter().filter(|r| f(r)).count();
            CellSummary {
                n: chunk[0].n,
                p: chunk[0].p,
                beta: chunk[0].beta,
                trials: chunk.len(),
                freq_sync: count(&|r| r.freq_sync),
                phase_sync: count(&|r| r.phase_sync),
                connected: count(&|r| r.connected),
                freq_sync_connected: count(&|r| r.freq_sync && r.connected),
            }
        })
        .collect();
    Ok(PhaseDiagram { cells, records })
}

/// Errors of the sampled system against the continuum reference at one network size.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Per-trial L∞ errors in trial order.
    pub errors: Vec<f64>,
    pub median: f64,
    pub min: f64,
    pub q10: f64,
    pub q90: f64,
    pub max: f64,
    /// Deterministic error of the averaged system.
    pub ads_error: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Integrates the continuum system once at `m_ref`, then the sampled and averaged systems
/// for every `n`, and reports L∞ errors at the horizon.
pub fn run_convergence_study(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceRow>> {
    run_convergence_study_with(cfg, Parallelism::from_threads(cfg.threads))
}

pub fn run_convergence_study_with(
    cfg: &ConvergenceConfig,
    mode: Parallelism,
) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    let graphon = cfg.graphon()?;
    let coupling = Coupling::for_phase_shift(cfg.beta)?;
    let icfg = cfg.integrator.build()?.endpoints_only();
    let eta = cfg.eta.build();

    let reference_sys = ContinuumSystem::new(&graphon, cfg.m_ref, coupling.clone())?;
    let reference_init = discretize_initial(|x| eta.eval(x), cfg.m_ref)?;
    let reference = integrate(&reference_sys, &reference_init, &icfg)?;
    let reference = reference.final_state();

    let cells = cfg
        .n_list
        .iter()
        .map(|&n| discretize(&graphon, n))
        .collect::<Result<Vec<_>>>()?;
    let inits = cfg
        .n_list
        .iter()
        .map(|&n| discretize_initial(|x| eta.eval(x), n))
        .collect::<Result<Vec<_>>>()?;

    let nt = cfg.trials;
    let sampled = map_indexed(cfg.n_list.len() * nt, mode, |k| -> Result<f64> {
        let (ni, trial) = (k / nt, k % nt);
        let net = sample_network(
            &cells[ni],
            cfg.alpha,
            derive_seed(cfg.master_seed, ni, 0, 0, trial),
        )?;
        let traj = integrate(
            &SampledSystem::new(&net, coupling.clone()),
            &inits[ni],
            &icfg,
        )?;
        linf_distance(traj.final_state(), reference)
    });
    let averaged = map_indexed(cfg.n_list.len(), mode, |ni| -> Result<f64> {
        let traj = integrate(
            &AveragedSystem::new(&cells[ni], coupling.clone()),
            &inits[ni],
            &icfg,
        )?;
        linf_distance(traj.final_state(), reference)
    });

    let sampled = sampled.into_iter().collect::<Result<Vec<_>>>()?;
    let averaged = averaged.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(cfg
        .n_list
        .iter()
        .enumerate()
        .map(|(ni, &n)| {
            let errors = sampled[ni * nt..(ni + 1) * nt].to_vec();
            let mut sorted = errors.clone();
            sorted.sort_by(f64::total_cmp);
            ConvergenceRow {
                n,
                median: quantile(&sorted, 0.5),
                min: sorted[0],
                q10: quantile(&sorted, 0.1),
                q90: quantile(&sorted, 0.9),
                max: sorted[sorted.len() - 1],
                ads_error: averaged[ni],
                errors,
            }
        })
        .collect())
}

/// Writes trial records as CSV, sorted by `(n, p, β, trial)`.
pub fn emit_trials_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    to_path(path, |out| write_trials(records, out))
}

/// Writes per-cell sync fractions as CSV.
pub fn emit_grid_csv(cells: &[CellSummary], path: &Path) -> Result<()> {
    to_path(path, |out| write_grid(cells, out))
}

pub fn emit_convergence_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    to_path(path, |out| write_convergence(rows, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(n: usize, p: f64, horizon: f64) -> ExperimentConfig {
        ExperimentConfig {
            n_grid: vec![n],
            p_grid: vec![p],
            trials: 1,
            integrator: IntegratorSettings { h: 0.01, horizon },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn two_oscillators_synchronize() {
        let cfg = quick(2, 1.0, 50.0);
        let rec = run_trial(2, 1.0, 0.0, 0, 17, &cfg).unwrap();
        assert!(rec.phase_sync && rec.freq_sync && rec.connected);
    }

    #[test]
    fn empty_graph_is_frozen() {
        let cfg = quick(3, 1e-9, 1.0);
        let rec = run_trial(3, 1e-9, 0.0, 0, 5, &cfg).unwrap();
        assert!(!rec.connected);
        assert!(rec.freq_sync);
        assert!(!rec.phase_sync);
        assert_eq!(rec.final_freq_spread, 0.0);
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = quick(30, 0.3, 2.0);
        let a = run_trial(30, 0.3, 0.1, 4, 1234, &cfg).unwrap();
        let b = run_trial(30, 0.3, 0.1, 4, 1234, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_cell_diagram_matches_trial() {
        let cfg = ExperimentConfig {
            master_seed: 3,
            ..quick(2, 1.0, 50.0)
        };
        let d = run_phase_diagram(&cfg).unwrap();
        let rec = run_trial(2, 1.0, 0.0, 0, derive_seed(3, 0, 0, 0, 0), &cfg).unwrap();
        assert_eq!(d.records, vec![rec]);
        assert_eq!(d.cells[0].freq_sync_fraction(), 1.0);
        assert_eq!(d.cells[0].phase_sync_fraction(), 1.0);
    }

    #[test]
    fn diagram_is_independent_of_worker_count() {
        let cfg = ExperimentConfig {
            n_grid: vec![12, 20],
            p_grid: vec![0.2, 0.6],
            beta_grid: vec![0.0, 0.3],
            trials: 3,
            master_seed: 77,
            integrator: IntegratorSettings {
                h: 0.05,
                horizon: 2.0,
            },
            ..ExperimentConfig::default()
        };
        let seq = run_phase_diagram_with(&cfg, Parallelism::Sequential).unwrap();
        let par = run_phase_diagram_with(&cfg, Parallelism::Threads(8)).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.cells.len(), 8);
        for c in &seq.cells {
            let scaled = c.freq_sync_fraction() * c.trials as f64;
            assert_eq!(scaled, scaled.round());
        }
    }

    #[test]
    fn csv_shapes() {
        let mut buf = Vec::new();
        write_trials(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{TRIAL_HEADER}\n"));

        let rec = run_trial(2, 1.0, 0.0, 0, 9, &quick(2, 1.0, 1.0)).unwrap();
        let mut buf = Vec::new();
        write_trials(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("2,1,0,0,9,1,"));

        let mut buf = Vec::new();
        write_grid(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,p,beta,freq_sync_fraction,phase_sync_fraction,trials\n"
        );
    }

    #[test]
    fn trial_rows_are_sorted() {
        let cfg = quick(2, 1.0, 1.0);
        let a = run_trial(5, 0.5, 0.0, 1, 1, &cfg).unwrap();
        let b = run_trial(5, 0.5, 0.0, 0, 2, &cfg).unwrap();
        let c = run_trial(3, 0.9, 0.0, 0, 3, &cfg).unwrap();
        let mut buf = Vec::new();
        write_trials(&[a, b, c], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let keys: Vec<String> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').take(4).collect::<Vec<_>>().join(","))
            .collect();
        assert_eq!(keys, vec!["3,0.9,0,0", "5,0.5,0,0", "5,0.5,0,1"]);
    }

    #[test]
    fn constant_initial_condition_has_no_convergence_error() {
        let cfg = ConvergenceConfig {
            n_list: vec![32],
            m_ref: 32,
            trials: 2,
            eta: EtaPreset::Linear { slope: 0.0 },
            integrator: IntegratorSettings {
                h: 0.01,
                horizon: 1.0,
            },
            ..ConvergenceConfig::default()
        };
        let rows = run_convergence_study(&cfg).unwrap();
        assert!(rows[0].max <= 1e-8);
        assert!(rows[0].ads_error <= 1e-8);
    }

    #[test]
    fn incompatible_reference_mesh_is_rejected() {
        let cfg = ConvergenceConfig {
            n_list: vec![48],
            m_ref: 64,
            ..ConvergenceConfig::default()
        };
        assert!(matches!(run_convergence_study(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }
}
