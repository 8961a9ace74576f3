//! Fixed-step classical Runge–Kutta integration.

use crate::dynamics::{PhaseField, PhaseRhs};
use crate::error::{Error, Result};

/// Phases beyond this magnitude are treated as a blow-up.
pub const DIVERGENCE_BOUND: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    h: f64,
    horizon: f64,
    steps: usize,
    store_stride: usize,
}

impl IntegratorConfig {
    /// Step `h` over `[0, horizon]`, storing every state.
    pub fn new(h: f64, horizon: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::param("h", format!("step {h} must be positive")));
        }
        if !(horizon.is_finite() && horizon >= h) {
            return Err(Error::param(
                "horizon",
                format!("{horizon} must be at least the step {h}"),
            ));
        }
        let ratio = horizon / h;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * steps {
            return Err(Error::param(
                "horizon",
                format!("{horizon} is not an integer multiple of the step {h}"),
            ));
        }
        Ok(IntegratorConfig {
            h,
            horizon,
            steps: steps as usize,
            store_stride: 1,
        })
    }

    pub fn with_store_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::param("store_stride", "must be at least 1"));
        }
        self.store_stride = stride;
        Ok(self)
    }

    /// Stores only the initial and final states.
    pub fn endpoints_only(mut self) -> Self {
        self.store_stride = self.steps.max(1);
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn store_stride(&self) -> usize {
        self.store_stride
    }

    /// Time after `k` steps. The last step lands exactly on the horizon.
    pub fn time_at(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.h
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseField>,
    pub final_rhs: PhaseField,
}

impl Trajectory {
    pub fn final_state(&self) -> &PhaseField {
        self.states
            .last()
            .expect("trajectory stores at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory stores at least the initial time")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Reusable RK4 stage buffers for a fixed dimension.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    pub fn step<F>(&mut self, mut f: F, t: f64, h: f64, y: &mut [f64])
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let half = 0.5 * h;
        f(t, y, &mut self.k1);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *tmp = yi + half * k;
        }
        f(t + half, &self.tmp, &mut self.k2);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *tmp = yi + half * k;
        }
        f(t + half, &self.tmp, &mut self.k3);
        for ((tmp, yi), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *tmp = yi + h * k;
        }
        f(t + h, &self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates `rhs` from `initial` over the configured horizon.
pub fn integrate(
    rhs: &impl PhaseRhs,
    initial: &PhaseField,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_observed(rhs, initial, cfg, |_, _, _| {})
}

/// As [`integrate`], calling `observer(step, t, state)` after every step, including step 0.
pub fn integrate_observed<O>(
    rhs: &impl PhaseRhs,
    initial: &PhaseField,
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<Trajectory>
where
    O: FnMut(usize, f64, &[f64]),
{
    let dim = rhs.dim();
    if initial.mesh() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: initial.mesh(),
        });
    }
    let mut y = initial.values().to_vec();
    let mut rk = Rk4::new(dim);
    let mut times = vec![0.0];
    let mut states = vec![initial.clone()];
    observer(0, 0.0, &y);

    for k in 1..=cfg.steps {
        let t = cfg.time_at(k - 1);
        let h = cfg.time_at(k) - t;
        rk.step(|t, s, out| rhs.eval(t, s, out), t, h, &mut y);
        if y.iter().any(|v| v.is_nan() || v.abs() > DIVERGENCE_BOUND) {
            return Err(Error::Divergence {
                step: k,
                time: cfg.time_at(k),
            });
        }
        let tk = cfg.time_at(k);
        observer(k, tk, &y);
        if k % cfg.store_stride == 0 || k == cfg.steps {
            times.push(tk);
            states.push(PhaseField::from_vec_unchecked(y.clone()));
        }
    }

    let mut final_rhs = vec![0.0; dim];
    rhs.eval(cfg.horizon, &y, &mut final_rhs);
    if let Some(i) = final_rhs.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            what: format!("right-hand side at the final state, node {i}"),
        });
    }
    Ok(Trajectory {
        times,
        states,
        final_rhs: PhaseField::from_vec_unchecked(final_rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{discretize_initial, AveragedSystem, Coupling, SampledSystem};
    use crate::graphon::{discretize, erdos_renyi, Graphon};

    struct Linear(f64);

    impl PhaseRhs for Linear {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, _t: f64, s: &[f64], out: &mut [f64]) {
            out[0] = self.0 * s[0];
        }
    }

    struct Blowup;

    impl PhaseRhs for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, _t: f64, s: &[f64], out: &mut [f64]) {
            out[0] = s[0] * s[0];
        }
    }

    fn final_value(h: f64) -> f64 {
        let cfg = IntegratorConfig::new(h, 1.0).unwrap();
        let traj = integrate(&Linear(-1.0), &PhaseField::new(vec![1.0]).unwrap(), &cfg).unwrap();
        traj.final_state().values()[0]
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(0.0, 1.0).is_err());
        assert!(IntegratorConfig::new(0.3, 1.0).is_err());
        assert!(IntegratorConfig::new(2.0, 1.0).is_err());
        assert_eq!(IntegratorConfig::new(0.01, 200.0).unwrap().steps(), 20000);
        assert_eq!(IntegratorConfig::new(0.1, 0.3).unwrap().steps(), 3);
        assert!(IntegratorConfig::new(0.1, 1.0)
            .unwrap()
            .with_store_stride(0)
            .is_err());
    }

    #[test]
    fn zero_rhs_keeps_initial_state() {
        let init = PhaseField::new(vec![0.3, -2.0, 7.5]).unwrap();
        let cfg = IntegratorConfig::new(0.01, 1.0).unwrap();
        struct Zero;
        impl PhaseRhs for Zero {
            fn dim(&self) -> usize {
                3
            }
            fn eval(&self, _t: f64, _s: &[f64], out: &mut [f64]) {
                out.fill(0.0);
            }
        }
        let traj = integrate(&Zero, &init, &cfg).unwrap();
        assert_eq!(traj.final_state(), &init);
        assert_eq!(traj.final_time(), 1.0);
    }

    #[test]
    fn exponential_decay() {
        assert!((final_value(0.01) - (-1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn fourth_order_convergence() {
        let exact = (-1f64).exp();
        let e1 = (final_value(0.1) - exact).abs();
        let e2 = (final_value(0.05) - exact).abs();
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn two_oscillators_closed_form() {
        let net = erdos_renyi(2, 1.0, 0).unwrap();
        let sys = SampledSystem::new(&net, Coupling::kuramoto());
        let init = PhaseField::new(vec![0.0, 1.0]).unwrap();
        let traj = integrate(&sys, &init, &IntegratorConfig::new(0.001, 1.0).unwrap()).unwrap();
        let s = traj.final_state().values();
        let expected = 2.0 * ((0.5f64).tan() * (-1f64).exp()).atan();
        assert!((expected - 0.3966627970).abs() < 1e-9);
        assert!((s[1] - s[0] - expected).abs() < 1e-6);
    }

    #[test]
    fn stride_and_times() {
        let cfg = IntegratorConfig::new(0.1, 1.0)
            .unwrap()
            .with_store_stride(3)
            .unwrap();
        let traj = integrate(&Linear(1.0), &PhaseField::new(vec![1.0]).unwrap(), &cfg).unwrap();
        assert_eq!(traj.len(), 5);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(traj.final_time(), 1.0);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        let ends = IntegratorConfig::new(0.1, 1.0).unwrap().endpoints_only();
        assert_eq!(
            integrate(&Linear(1.0), &PhaseField::new(vec![1.0]).unwrap(), &ends)
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn observer_sees_every_step() {
        let cfg = IntegratorConfig::new(0.25, 1.0).unwrap().endpoints_only();
        let mut seen = Vec::new();
        integrate_observed(
            &Linear(1.0),
            &PhaseField::new(vec![1.0]).unwrap(),
            &cfg,
            |k, t, _| seen.push((k, t)),
        )
        .unwrap();
        assert_eq!(
            seen,
            vec![(0, 0.0), (1, 0.25), (2, 0.5), (3, 0.75), (4, 1.0)]
        );
    }

    #[test]
    fn divergence_reports_step() {
        let cfg = IntegratorConfig::new(0.01, 2.0).unwrap();
        let err = integrate(&Blowup, &PhaseField::new(vec![1.0]).unwrap(), &cfg).unwrap_err();
        match err {
            Error::Divergence { step, .. } => assert!(step > 90 && step <= 101, "step {step}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bitwise_reproducible() {
        let net = erdos_renyi(40, 0.3, 2).unwrap();
        let sys = SampledSystem::new(&net, Coupling::sakaguchi(0.2).unwrap());
        let init = discretize_initial(|x| 3.0 * x, 40).unwrap();
        let cfg = IntegratorConfig::new(0.01, 2.0).unwrap().endpoints_only();
        let a = integrate(&sys, &init, &cfg).unwrap();
        let b = integrate(&sys, &init, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_phase_conserved_for_kuramoto_ads() {
        let d = discretize(&Graphon::ProductSine, 50).unwrap();
        let sys = AveragedSystem::new(&d, Coupling::kuramoto());
        let init = discretize_initial(|x| 4.0 * (3.0 * x).sin(), 50).unwrap();
        let cfg = IntegratorConfig::new(0.01, 10.0).unwrap().endpoints_only();
        let traj = integrate(&sys, &init, &cfg).unwrap();
        let s0: f64 = init.values().iter().sum();
        let s1: f64 = traj.final_state().values().iter().sum();
        assert!((s0 - s1).abs() < 1e-9, "{}", (s0 - s1).abs());
    }
}
