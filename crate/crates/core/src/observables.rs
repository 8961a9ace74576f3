//! Order parameter, distances, and synchronization verdicts.

use std::f64::consts::{PI, TAU};

use crate::dynamics::PhaseField;
use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Below this magnitude the average phase is reported as undefined.
pub const PSI_THRESHOLD: f64 = 1e-12;

/// Largest common refinement accepted by [`linf_distance`].
pub const MAX_REFINEMENT: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderParameter {
    pub r: f64,
    /// Average phase in `(−π, π]`, `None` when `r ≤ 1e-12`.
    pub psi: Option<f64>,
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * (a / TAU).round();
    if w <= -PI {
        w + TAU
    } else if w > PI {
        w - TAU
    } else {
        w
    }
}

/// `r e^{iψ} = m⁻¹ Σⱼ e^{iθⱼ}`.
pub fn order_parameter(field: &PhaseField) -> OrderParameter {
    order_parameter_of(field.values())
}

pub fn order_parameter_of(values: &[f64]) -> OrderParameter {
    let m = values.len() as f64;
    let (mut s, mut c) = (0.0, 0.0);
    for &th in values {
        let (si, ci) = th.sin_cos();
        s += si;
        c += ci;
    }
    let (s, c) = (s / m, c / m);
    let r = s.hypot(c);
    let psi = (r > PSI_THRESHOLD).then(|| wrap_angle(s.atan2(c)));
    OrderParameter { r, psi }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Sup-norm distance between the piecewise-constant interpolants of `a` and `b`.
pub fn linf_distance(a: &PhaseField, b: &PhaseField) -> Result<f64> {
    let (ma, mb) = (a.mesh() as u64, b.mesh() as u64);
    let lcm = (ma / gcd(ma, mb)).saturating_mul(mb);
    if lcm > MAX_REFINEMENT {
        return Err(Error::Mesh(format!(
            "common refinement of meshes {ma} and {mb} has {lcm} cells, limit {MAX_REFINEMENT}"
        )));
    }
    let (sa, sb) = (lcm / ma, lcm / mb);
    let (va, vb) = (a.values(), b.values());
    Ok((0..lcm)
        .map(|k| (va[(k / sa) as usize] - vb[(k / sb) as usize]).abs())
        .fold(0.0, f64::max))
}

/// `max θ − min θ` over the lifted phases.
pub fn phase_diameter(field: &PhaseField) -> f64 {
    spread(field.values())
}

pub(crate) fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

/// Shifts every phase by a multiple of 2π so it lies within π of the first node.
pub fn common_lift(field: &PhaseField) -> PhaseField {
    let v = field.values();
    let base = v[0];
    PhaseField::from_vec_unchecked(
        v.iter()
            .map(|&th| th - TAU * ((th - base) / TAU).round())
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncVerdict {
    pub phase_sync: bool,
    pub freq_sync: bool,
    pub final_r: f64,
    /// Diameter of the final state after wrapping to a common lift.
    pub final_diameter: f64,
    pub final_freq_spread: f64,
}

pub const DEFAULT_PHASE_TOL: f64 = 1e-2;
pub const DEFAULT_FREQ_TOL: f64 = 1e-3;

/// Classifies the end of a trajectory.
pub fn sync_verdict(traj: &Trajectory, phase_tol: f64, freq_tol: f64) -> SyncVerdict {
    let last = traj.final_state();
    let final_freq_spread = spread(traj.final_rhs.values());
    let final_diameter = phase_diameter(&common_lift(last));
    SyncVerdict {
        phase_sync: final_diameter < phase_tol,
        freq_sync: final_freq_spread < freq_tol,
        final_r: order_parameter(last).r,
        final_diameter,
        final_freq_spread,
    }
}
