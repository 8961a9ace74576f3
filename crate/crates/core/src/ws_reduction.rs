//! Three-variable reduction of the continuum Sakaguchi–Kuramoto model on `W ≡ 1`.
//!
//! A static frame `ψ(x)` with `∫ψ = ∫cos ψ = ∫sin ψ = 0` and a reduced state `(γ, Ψ, Θ)`
//! describe the whole field through
//!
//! ```text
//! θ(t, x) = Θ + 2 atan( √((1+γ)/(1−γ)) · tan((ψ(x) − Ψ)/2) )
//! ```
//!
//! The half-angle map is evaluated through a lift that is continuous in its argument, so
//! reconstructed phases never jump by 2π.

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};

use crate::dynamics::{interpolate, PhaseField};
use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, Rk4};
use crate::observables::order_parameter_of;

/// Below this amplitude the reduced angles are frozen.
pub const FREEZE_GAMMA: f64 = 1e-6;
/// Integration stops once the amplitude reaches `1 − SYNC_MARGIN`.
pub const SYNC_MARGIN: f64 = 1e-9;
const SINGULAR_GAMMA: f64 = 1e-9;

/// Reduced coordinates: amplitude `γ ∈ [0, 1)`, frame angle `Ψ`, drift angle `Θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub gamma: f64,
    pub psi: f64,
    pub theta: f64,
}

/// The static frame `ψ(x)` and how well it meets its three constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct WsFrame {
    pub constants: PhaseField,
    /// `|mean ψ|`.
    pub residual_mean: f64,
    /// `|mean cos ψ|`.
    pub residual_cos: f64,
    /// `|mean sin ψ|`.
    pub residual_sin: f64,
    /// Every distinct `(γ, Θ)` root met by the multistart search, in discovery order.
    pub roots: Vec<(f64, f64)>,
}

impl WsFrame {
    /// Wraps an arbitrary frame, computing its constraint residuals.
    pub fn from_constants(constants: PhaseField) -> Self {
        let m = constants.mesh() as f64;
        let v = constants.values();
        let mean = v.iter().sum::<f64>() / m;
        let (s, c) = v
            .iter()
            .fold((0.0, 0.0), |(s, c), p| (s + p.sin(), c + p.cos()));
        WsFrame {
            residual_mean: mean.abs(),
            residual_cos: (c / m).abs(),
            residual_sin: (s / m).abs(),
            constants,
            roots: Vec::new(),
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_mean
            .max(self.residual_cos)
            .max(self.residual_sin)
    }
}

/// Continuous lift of `a ↦ 2 atan(k tan(a/2))` for `k > 0`.
pub fn half_angle_lift(a: f64, k: f64) -> f64 {
    let (s, c) = (0.5 * a).sin_cos();
    a + 2.0 * ((k - 1.0) * s * c / (c * c + k * s * s)).atan()
}

fn contraction(gamma: f64) -> f64 {
    ((1.0 - gamma) / (1.0 + gamma)).sqrt()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: gamma,
            domain: "[0, 1)",
        })
    }
}

/// `(V_Θ, V_γ)`: mean of `sin(θ₀−Θ)/(1+γcos(θ₀−Θ))` and of `(γ+cos(θ₀−Θ))/(1+γcos(θ₀−Θ))`.
pub fn frame_vector_field(gamma: f64, theta: f64, theta0: &PhaseField) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    let (mut vt, mut vg) = (0.0, 0.0);
    for &t0 in theta0.values() {
        let (s, c) = (t0 - theta).sin_cos();
        let den = 1.0 + gamma * c;
        vt += s / den;
        vg += (gamma + c) / den;
    }
    let m = theta0.mesh() as f64;
    Ok((vt / m, vg / m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct C64 {
    re: f64,
    im: f64,
}

impl C64 {
    fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }
    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
    fn add(self, o: C64) -> C64 {
        C64::new(self.re + o.re, self.im + o.im)
    }
    fn scale(self, s: f64) -> C64 {
        C64::new(self.re * s, self.im * s)
    }
}

/// `mean (ζ − w)/(1 − w̄ζ)` over `ζ = e^{iθ₀}`. Its zero is the conformal barycenter; with
/// `w = −c e^{iΘ}` and `γ = 2c/(1+c²)` its real and imaginary parts vanish exactly where
/// `V_γ` and `V_Θ` do.
fn barycenter_map(z: &[C64], w: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &zeta in z {
        let num = C64::new(zeta.re - w.re, zeta.im - w.im);
        // 1 − conj(w)·ζ
        let den = C64::new(
            1.0 - (w.re * zeta.re + w.im * zeta.im),
            -(w.re * zeta.im - w.im * zeta.re),
        );
        let d2 = den.re * den.re + den.im * den.im;
        acc.re += (num.re * den.re + num.im * den.im) / d2;
        acc.im += (num.im * den.re - num.re * den.im) / d2;
    }
    acc.scale(1.0 / z.len() as f64)
}

fn newton_barycenter(z: &[C64], start: C64) -> Option<C64> {
    const FD: f64 = 1e-7;
    let mut w = start;
    let mut g = barycenter_map(z, w);
    for _ in 0..200 {
        if g.abs() < 1e-15 {
            return Some(w);
        }
        let gx = barycenter_map(z, w.add(C64::new(FD, 0.0)))
            .add(barycenter_map(z, w.add(C64::new(-FD, 0.0))).scale(-1.0))
            .scale(0.5 / FD);
        let gy = barycenter_map(z, w.add(C64::new(0.0, FD)))
            .add(barycenter_map(z, w.add(C64::new(0.0, -FD))).scale(-1.0))
            .scale(0.5 / FD);
        let det = gx.re * gy.im - gy.re * gx.im;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let step = C64::new(
            (-g.re * gy.im + g.im * gy.re) / det,
            (-gx.re * g.im + gx.im * g.re) / det,
        );
        let mut lambda = 1.0;
        loop {
            let trial = w.add(step.scale(lambda));
            if trial.abs() < 1.0 {
                let gt = barycenter_map(z, trial);
                if gt.abs() < g.abs() {
                    w = trial;
                    g = gt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return (g.abs() < 1e-13).then_some(w);
            }
        }
    }
    (g.abs() < 1e-13).then_some(w)
}

/// Rejects fields where one phase (mod 2π, clustered within 1e-9) holds half the mesh or more.
fn check_spread(theta0: &PhaseField) -> Result<()> {
    const BIN: f64 = 1e-9;
    let m = theta0.mesh();
    let mut a: Vec<f64> = theta0.values().iter().map(|t| t.rem_euclid(TAU)).collect();
    a.sort_by(f64::total_cmp);
    // Sliding window over the sorted angles, wrapping once around the circle.
    let at = |k: usize| if k < m { a[k] } else { a[k - m] + TAU };
    let mut hi = 0;
    for (lo, &first) in a.iter().enumerate() {
        hi = hi.max(lo);
        while hi + 1 < lo + m && at(hi + 1) - first <= BIN {
            hi += 1;
        }
        let count = hi + 1 - lo;
        if 2 * count >= m {
            return Err(Error::Input(format!(
                "{count} of {m} initial phases coincide near {first}; more than half must be distinct"
            )));
        }
    }
    Ok(())
}

fn frame_from_root(theta0: &PhaseField, gamma: f64, theta: f64) -> (f64, WsFrame) {
    let k = contraction(gamma);
    let lifted: Vec<f64> = theta0
        .values()
        .iter()
        .map(|t| half_angle_lift(t - theta, k))
        .collect();
    let psi = -lifted.iter().sum::<f64>() / lifted.len() as f64;
    let constants = PhaseField::from_vec_unchecked(lifted.into_iter().map(|p| p + psi).collect());
    (psi, WsFrame::from_constants(constants))
}

/// Finds `(γ₀, Θ₀)`, builds the frame `ψ`, and sets `Ψ₀ = −mean ψ̃`.
pub fn solve_initial_frame(theta0: &PhaseField) -> Result<(ReducedState, WsFrame)> {
    check_spread(theta0)?;
    let z: Vec<C64> = theta0
        .values()
        .iter()
        .map(|t| {
            let (s, c) = t.sin_cos();
            C64::new(c, s)
        })
        .collect();

    let mut starts = vec![C64::new(0.0, 0.0)];
    for g in [0.1f64, 0.5, 0.9] {
        let c = g / (1.0 + (1.0 - g * g).sqrt());
        for k in 0..8 {
            let th = TAU * k as f64 / 8.0;
            starts.push(C64::new(-c * th.cos(), -c * th.sin()));
        }
    }

    let mut roots: Vec<(f64, f64)> = Vec::new();
    for start in starts {
        let Some(w) = newton_barycenter(&z, start) else {
            continue;
        };
        let c = w.abs();
        let (gamma, theta) = if c < 1e-15 {
            (0.0, 0.0)
        } else {
            (2.0 * c / (1.0 + c * c), (-w.im).atan2(-w.re))
        };
        if roots
            .iter()
            .all(|&(g, t)| (g - gamma).abs() > 1e-8 || angle_gap(t, theta) > 1e-8)
        {
            roots.push((gamma, theta));
        }
    }

    for &(gamma, theta) in &roots {
        if gamma >= 1.0 - SYNC_MARGIN {
            continue;
        }
        let (vt, vg) = frame_vector_field(gamma, theta, theta0)?;
        if vt.abs() > 1e-10 || vg.abs() > 1e-10 {
            continue;
        }
        let (psi, mut frame) = frame_from_root(theta0, gamma, theta);
        if frame.max_residual() > 1e-8 {
            continue;
        }
        let state = ReducedState { gamma, psi, theta };
        let back = reconstruct_field(&state, &frame)?;
        let gap = back
            .values()
            .iter()
            .zip(theta0.values())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        if gap > 1e-7 {
            continue;
        }
        frame.roots = roots.clone();
        return Ok((state, frame));
    }
    Err(Error::Frame(format!(
        "no root of the frame equations met the tolerances after {} starts ({} candidate roots)",
        25,
        roots.len()
    )))
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `(γ̇, Ψ̇, Θ̇)` of the reduced system with phase shift `beta`.
pub fn reduced_rhs(s: &ReducedState, frame: &WsFrame, beta: f64) -> Result<[f64; 3]> {
    check_gamma(s.gamma)?;
    let g = s.gamma;
    let (mut i1, mut i2) = (0.0, 0.0);
    for &p in frame.constants.values() {
        let (sn, c) = (p - s.psi).sin_cos();
        let den = 1.0 - g * c;
        i1 += (g - c) / den;
        i2 += sn / den;
    }
    let m = frame.constants.mesh() as f64;
    let (i1, i2) = (i1 / m, i2 / m);
    let (sb, cb) = beta.sin_cos();
    let q = 1.0 - g * g;
    let rq = q.sqrt();
    let dgamma = cb * q * i1 + sb * q * rq * i2;
    let num_psi = -cb * q * i2 + sb * rq * i1;
    let num_theta = -cb * rq * i2 + sb * i1;
    if g < SINGULAR_GAMMA {
        if num_psi.abs() <= SINGULAR_GAMMA && num_theta.abs() <= SINGULAR_GAMMA {
            return Ok([dgamma, 0.0, 0.0]);
        }
        return Err(Error::Singular(format!(
            "gamma = {g:e} with angle numerators ({num_psi:e}, {num_theta:e})"
        )));
    }
    Ok([dgamma, num_psi / g, num_theta / g])
}

/// Phase at `x ∈ [0, 1]` of the field described by `s` and `frame`.
pub fn reconstruct(s: &ReducedState, frame: &WsFrame, x: f64) -> Result<f64> {
    check_gamma(s.gamma)?;
    let p = interpolate(&frame.constants, x)?;
    Ok(s.theta + half_angle_lift(p - s.psi, contraction(s.gamma).recip()))
}

/// The full field on the frame's mesh.
pub fn reconstruct_field(s: &ReducedState, frame: &WsFrame) -> Result<PhaseField> {
    check_gamma(s.gamma)?;
    let k = contraction(s.gamma).recip();
    Ok(PhaseField::from_vec_unchecked(
        frame
            .constants
            .values()
            .iter()
            .map(|p| s.theta + half_angle_lift(p - s.psi, k))
            .collect(),
    ))
}

/// `H = mean log((1 − γ cos(ψ − Ψ)) / √(1 − γ²))`.
pub fn lyapunov_h(s: &ReducedState, frame: &WsFrame) -> Result<f64> {
    check_gamma(s.gamma)?;
    let g = s.gamma;
    let log_norm = 0.5 * (1.0 - g * g).ln();
    let sum: f64 = frame
        .constants
        .values()
        .iter()
        .map(|p| (1.0 - g * (p - s.psi).cos()).ln() - log_norm)
        .sum();
    Ok(sum / frame.constants.mesh() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    /// Order parameter of the reconstructed field at each stored time.
    pub order: Vec<f64>,
    /// Time at which `γ` reached `1 − 1e-9`, if it did.
    pub full_sync_at: Option<f64>,
}

/// Integrates the reduced system with RK4. Below `γ = 1e-6` the angles are frozen.
pub fn integrate_reduced(
    initial: ReducedState,
    frame: &WsFrame,
    beta: f64,
    cfg: &IntegratorConfig,
) -> Result<ReducedTrajectory> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let rhs = |_t: f64, y: &[f64], out: &mut [f64]| {
        let s = ReducedState {
            gamma: y[0].max(0.0),
            psi: y[1],
            theta: y[2],
        };
        if s.gamma >= 1.0 {
            out.fill(0.0);
            return;
        }
        match reduced_rhs(&s, frame, beta) {
            Ok(d) => {
                out[0] = d[0];
                if s.gamma < FREEZE_GAMMA {
                    out[1] = 0.0;
                    out[2] = 0.0;
                } else {
                    out[1] = d[1];
                    out[2] = d[2];
                }
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                out.fill(0.0);
            }
        }
    };

    let record = |s: &ReducedState| -> Result<f64> {
        let field = reconstruct_field(s, frame)?;
        Ok(order_parameter_of(field.values()).r)
    };

    let mut y = [initial.gamma, initial.psi, initial.theta];
    let mut rk = Rk4::new(3);
    let mut traj = ReducedTrajectory {
        times: vec![0.0],
        states: vec![initial],
        order: vec![record(&initial)?],
        full_sync_at: None,
    };
    for k in 1..=cfg.steps() {
        let t = cfg.time_at(k - 1);
        rk.step(&rhs, t, cfg.time_at(k) - t, &mut y);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: k,
                time: cfg.time_at(k),
            });
        }
        let s = ReducedState {
            gamma: y[0].max(0.0),
            psi: y[1],
            theta: y[2],
        };
        let synced = s.gamma >= 1.0 - SYNC_MARGIN;
        if synced || k % cfg.store_stride() == 0 || k == cfg.steps() {
            let tk = cfg.time_at(k);
            traj.times.push(tk);
            traj.states.push(s);
            traj.order.push(if synced { 1.0 } else { record(&s)? });
            if synced {
                traj.full_sync_at = Some(tk);
                break;
            }
        }
    }
    Ok(traj)
}

/// Largest `|ΔH/Δt − r² cos β|` over interior stored times, by centered differences.
pub fn hdot_identity_residual(traj: &ReducedTrajectory, frame: &WsFrame, beta: f64) -> Result<f64> {
    let h: Vec<f64> = traj
        .states
        .iter()
        .take_while(|s| s.gamma < 1.0 - SYNC_MARGIN)
        .map(|s| lyapunov_h(s, frame))
        .collect::<Result<_>>()?;
    let cb = beta.cos();
    let mut worst = 0.0f64;
    for k in 1..h.len().saturating_sub(1) {
        let dt = traj.times[k + 1] - traj.times[k - 1];
        let hdot = (h[k + 1] - h[k - 1]) / dt;
        let r = traj.order[k];
        worst = worst.max((hdot - r * r * cb).abs());
    }
    Ok(worst)
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > -PI / 2.0 && beta < PI / 2.0 {
        Ok(())
    } else {
        Err(Error::param("beta", format!("{beta} not in (-pi/2, pi/2)")))
    }
}

/// Summary of a reduced-versus-direct comparison on one initial field.
#[derive(Debug, Clone, PartialEq)]
pub struct WsCheck {
    pub beta: f64,
    pub initial: ReducedState,
    pub frame_residual: f64,
    pub roundtrip_error: f64,
    /// Largest L∞ gap between the reconstructed and directly integrated fields.
    pub max_gap: f64,
    pub hdot_residual: f64,
    pub final_gamma: f64,
    pub final_r: f64,
}

/// Solves the frame for `theta0`, integrates both the reduced system and the continuum
/// system on `W ≡ 1`, and compares them at every step.
pub fn check_against_direct(
    theta0: &PhaseField,
    beta: f64,
    cfg: &IntegratorConfig,
) -> Result<WsCheck> {
    use crate::dynamics::{ContinuumSystem, Coupling, PhaseRhs};
    use crate::graphon::Graphon;

    check_beta(beta)?;
    let (initial, frame) = solve_initial_frame(theta0)?;
    let back = reconstruct_field(&initial, &frame)?;
    let roundtrip_error = crate::observables::linf_distance(&back, theta0)?;
    let reduced = integrate_reduced(initial, &frame, beta, cfg)?;

    let sys = ContinuumSystem::new(
        &Graphon::Constant(1.0),
        theta0.mesh(),
        Coupling::for_phase_shift(beta)?,
    )?;
    let mut y = theta0.values().to_vec();
    let mut rk = Rk4::new(y.len());
    let mut max_gap = 0.0f64;
    let mut stored = 1;
    for k in 1..=cfg.steps() {
        if stored == reduced.times.len() {
            break;
        }
        let t = cfg.time_at(k - 1);
        rk.step(
            |t, s, out| sys.eval(t, s, out),
            t,
            cfg.time_at(k) - t,
            &mut y,
        );
        if cfg.time_at(k) == reduced.times[stored] {
            let s = &reduced.states[stored];
            if s.gamma < 1.0 - SYNC_MARGIN {
                let field = reconstruct_field(s, &frame)?;
                let gap = field
                    .values()
                    .iter()
                    .zip(&y)
                    .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
                max_gap = max_gap.max(gap);
            }
            stored += 1;
        }
    }
    let last = reduced.states.last().copied().unwrap_or(initial);
    Ok(WsCheck {
        beta,
        initial,
        frame_residual: frame.max_residual(),
        roundtrip_error,
        max_gap,
        hdot_residual: hdot_identity_residual(&reduced, &frame, beta)?,
        final_gamma: last.gamma,
        final_r: *reduced.order.last().unwrap_or(&0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::discretize_initial;

    fn simpson<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut acc = f(0.0) + f(1.0);
        for k in 1..n {
            acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn vector_field_examples() {
        let full = discretize_initial(|x| TAU * x, 4096).unwrap();
        for th in [0.0, 1.0, -2.5] {
            let (vt, vg) = frame_vector_field(0.0, th, &full).unwrap();
            assert!(vt.abs() < 1e-10 && vg.abs() < 1e-10);
        }
        let flat = PhaseField::constant(0.8, 16).unwrap();
        let (_, vg) = frame_vector_field(0.0, 0.8, &flat).unwrap();
        assert!((vg - 1.0).abs() < 1e-15);
        assert!(frame_vector_field(1.0, 0.0, &flat).is_err());
    }

    #[test]
    fn vector_field_matches_quadrature() {
        let (g, th) = (0.3, 0.5);
        let field = discretize_initial(|x| x, 1 << 21).unwrap();
        let (vt, vg) = frame_vector_field(g, th, &field).unwrap();
        let ot = simpson(|x| (x - th).sin() / (1.0 + g * (x - th).cos()), 1_000_000);
        let og = simpson(
            |x| (g + (x - th).cos()) / (1.0 + g * (x - th).cos()),
            1_000_000,
        );
        assert!((vt - ot).abs() < 1e-6, "{vt} {ot}");
        assert!((vg - og).abs() < 1e-6, "{vg} {og}");
    }

    #[test]
    fn frame_for_uniform_circle_is_trivial() {
        let theta0 = discretize_initial(|x| TAU * x, 1024).unwrap();
        let (s, frame) = solve_initial_frame(&theta0).unwrap();
        assert_eq!(s.gamma, 0.0);
        assert_eq!(s.theta, 0.0);
        assert!(frame.max_residual() <= 1e-10, "{}", frame.max_residual());
    }

    #[test]
    fn frame_rejects_clustered_phases() {
        let flat = PhaseField::constant(1.0, 64).unwrap();
        assert!(matches!(solve_initial_frame(&flat), Err(Error::Input(_))));
        let mut half: Vec<f64> = vec![0.5; 32];
        half.extend((0..32).map(|i| 1.0 + i as f64 * 0.1));
        assert!(solve_initial_frame(&PhaseField::new(half).unwrap()).is_err());
        let wrap: Vec<f64> = (0..10)
            .map(|i| if i < 5 { TAU * i as f64 } else { i as f64 })
            .collect();
        assert!(solve_initial_frame(&PhaseField::new(wrap).unwrap()).is_err());
    }

    #[test]
    fn frame_for_linear_field() {
        let theta0 = discretize_initial(|x| x, 512).unwrap();
        let (s, frame) = solve_initial_frame(&theta0).unwrap();
        assert!(s.gamma > 0.9 && s.gamma < 1.0);
        assert!(frame.max_residual() <= 1e-8);
        let (vt, vg) = frame_vector_field(s.gamma, s.theta, &theta0).unwrap();
        assert!(vt.abs() <= 1e-10 && vg.abs() <= 1e-10);
        let back = reconstruct_field(&s, &frame).unwrap();
        assert!(crate::observables::linf_distance(&back, &theta0).unwrap() <= 1e-7);
        assert_eq!(frame.roots.len(), 1);
    }

    #[test]
    fn reconstruct_examples() {
        let frame = WsFrame::from_constants(discretize_initial(|x| TAU * x - PI, 64).unwrap());
        let s = ReducedState {
            gamma: 0.0,
            psi: 0.3,
            theta: 1.1,
        };
        for x in [0.0, 0.2, 0.77, 1.0] {
            let p = interpolate(&frame.constants, x).unwrap();
            assert!((reconstruct(&s, &frame, x).unwrap() - (1.1 + p - 0.3)).abs() < 1e-14);
        }
        let at = ReducedState {
            gamma: 0.8,
            psi: interpolate(&frame.constants, 0.5).unwrap(),
            theta: -0.4,
        };
        assert_eq!(reconstruct(&at, &frame, 0.5).unwrap(), -0.4);
    }

    #[test]
    fn reconstruction_is_continuous_across_the_branch() {
        let frame =
            WsFrame::from_constants(discretize_initial(|x| 3.0 * TAU * x - PI, 3000).unwrap());
        let s = ReducedState {
            gamma: 0.95,
            psi: 0.2,
            theta: 0.0,
        };
        let f = reconstruct_field(&s, &frame).unwrap();
        assert!(f
            .values()
            .windows(2)
            .all(|w| w[1] > w[0] && w[1] - w[0] < 0.5));
    }

    #[test]
    fn reduced_rhs_examples() {
        let frame = WsFrame::from_constants(discretize_initial(|x| TAU * x - PI, 2048).unwrap());
        let s = ReducedState {
            gamma: 0.4,
            psi: 0.0,
            theta: 0.0,
        };
        let d = reduced_rhs(&s, &frame, 0.0).unwrap();
        let i1: f64 = frame
            .constants
            .values()
            .iter()
            .map(|p| (0.4 - p.cos()) / (1.0 - 0.4 * p.cos()))
            .sum::<f64>()
            / 2048.0;
        assert!(d[1].abs() < 1e-12);
        assert!((d[0] - 0.84 * i1).abs() < 1e-14);

        let zero = ReducedState {
            gamma: 0.0,
            psi: 0.7,
            theta: 0.0,
        };
        let d = reduced_rhs(&zero, &frame, PI / 25.0).unwrap();
        assert!(d[0].abs() < 1e-12 && d[1] == 0.0 && d[2] == 0.0);
    }

    #[test]
    fn reduced_rhs_singular_without_constraints() {
        let frame = WsFrame::from_constants(PhaseField::new(vec![0.1, 0.2, 0.3]).unwrap());
        let s = ReducedState {
            gamma: 0.0,
            psi: 0.0,
            theta: 0.0,
        };
        assert!(matches!(
            reduced_rhs(&s, &frame, 0.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn reduced_rhs_matches_quadrature() {
        let shape = |x: f64| TAU * x - PI + 0.3 * (TAU * x).sin() + 0.1 * (2.0 * TAU * x).cos();
        let frame = WsFrame::from_constants(discretize_initial(shape, 20_000).unwrap());
        let (g, psi, beta) = (0.4, 0.35, PI / 25.0);
        let d = reduced_rhs(
            &ReducedState {
                gamma: g,
                psi,
                theta: 0.0,
            },
            &frame,
            beta,
        )
        .unwrap();
        let i1 = simpson(
            |x| (g - (shape(x) - psi).cos()) / (1.0 - g * (shape(x) - psi).cos()),
            1_000_000,
        );
        let i2 = simpson(
            |x| (shape(x) - psi).sin() / (1.0 - g * (shape(x) - psi).cos()),
            1_000_000,
        );
        let (sb, cb) = beta.sin_cos();
        let q = 1.0 - g * g;
        let expect = [
            cb * q * i1 + sb * q.powf(1.5) * i2,
            (-cb * q * i2 + sb * q.sqrt() * i1) / g,
            (-cb * q.sqrt() * i2 + sb * i1) / g,
        ];
        for (a, b) in d.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
    }

    #[test]
    fn lyapunov_examples() {
        let frame = WsFrame::from_constants(discretize_initial(|x| TAU * x - PI, 256).unwrap());
        assert_eq!(
            lyapunov_h(
                &ReducedState {
                    gamma: 0.0,
                    psi: 0.4,
                    theta: 0.0
                },
                &frame
            )
            .unwrap(),
            0.0
        );

        let quarter = WsFrame::from_constants(PhaseField::constant(PI / 2.0, 8).unwrap());
        let h = lyapunov_h(
            &ReducedState {
                gamma: 0.5,
                psi: 0.0,
                theta: 0.0,
            },
            &quarter,
        )
        .unwrap();
        assert!((h - 0.143841).abs() < 1e-6);

        let mut prev = 0.0;
        for k in 1..20 {
            let s = ReducedState {
                gamma: k as f64 * 0.05,
                psi: 0.1,
                theta: 0.0,
            };
            let h = lyapunov_h(&s, &frame).unwrap();
            assert!(h > prev);
            prev = h;
        }
        assert!(lyapunov_h(
            &ReducedState {
                gamma: 1.0,
                psi: 0.0,
                theta: 0.0
            },
            &frame
        )
        .is_err());
    }

    #[test]
    fn zero_amplitude_trajectory_stays_put() {
        let theta0 = discretize_initial(|x| TAU * x, 512).unwrap();
        let (s, frame) = solve_initial_frame(&theta0).unwrap();
        let cfg = IntegratorConfig::new(1e-2, 1.0).unwrap();
        let traj = integrate_reduced(s, &frame, PI / 25.0, &cfg).unwrap();
        assert!(traj.states.iter().all(|q| q.gamma < 1e-12));
        assert!(hdot_identity_residual(&traj, &frame, PI / 25.0).unwrap() <= 1e-6);
    }

    #[test]
    fn reduced_matches_direct_and_h_identity() {
        let theta0 = discretize_initial(|x| x, 256).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 2.0)
            .unwrap()
            .with_store_stride(10)
            .unwrap();
        for beta in [0.0, PI / 25.0] {
            let c = check_against_direct(&theta0, beta, &cfg).unwrap();
            assert!(c.max_gap < 1e-6, "{}", c.max_gap);
            assert!(c.hdot_residual < 1e-4, "{}", c.hdot_residual);
            assert!(c.roundtrip_error < 1e-7);
        }
    }

    #[test]
    fn h_is_nondecreasing_and_gamma_near_one_means_r_near_one() {
        let theta0 = discretize_initial(|x| 4.0 * x, 256).unwrap();
        let (s, frame) = solve_initial_frame(&theta0).unwrap();
        let cfg = IntegratorConfig::new(1e-2, 20.0).unwrap();
        let traj = integrate_reduced(s, &frame, PI / 50.0, &cfg).unwrap();
        let hs: Vec<f64> = traj
            .states
            .iter()
            .filter(|q| q.gamma < 1.0 - SYNC_MARGIN)
            .map(|q| lyapunov_h(q, &frame).unwrap())
            .collect();
        assert!(hs.windows(2).all(|w| w[1] >= w[0] - 1e-8));
        for (q, r) in traj.states.iter().zip(&traj.order) {
            if q.gamma >= 0.999 {
                assert!(*r >= 0.99);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(10_000))]

            // tan(A/2) = √((1+B)/(1−B)) tan(C/2) implies
            // sin A = √(1−B²) sin C / (1 − B cos C) and cos A = (cos C − B) / (1 − B cos C).
            #[test]
            fn tangent_relation_identities(b in -0.999f64..0.999, c in -PI..PI) {
                let a = half_angle_lift(c, ((1.0 + b) / (1.0 - b)).sqrt());
                let den = 1.0 - b * c.cos();
                prop_assert!((a.sin() - (1.0 - b * b).sqrt() * c.sin() / den).abs() < 1e-12);
                prop_assert!((a.cos() - (c.cos() - b) / den).abs() < 1e-12);
            }
        }
    }
}
