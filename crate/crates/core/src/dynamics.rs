//! Right-hand sides of the sampled, averaged and continuum oscillator systems.
//!
//! All three share the form
//!
//! ```text
//! θ̇ᵢ = f(θᵢ, t) + scale · Σⱼ Kᵢⱼ D(θⱼ − θᵢ)
//! ```
//!
//! with `K = A / α`, `scale = 1/n` (sampled), `K = W⁽ⁿ⁾`, `scale = 1/n` (averaged), and
//! `Kᵢⱼ = W(xᵢ, xⱼ)` at mesh nodes `xᵢ = i/m` (continuum, left-endpoint Riemann sum).
//!
//! For `D(u) = sin(u + β)` the sum factors as
//! `cos θᵢ Σⱼ Kᵢⱼ sin(θⱼ + β) − sin θᵢ Σⱼ Kᵢⱼ cos(θⱼ + β)`, which moves all
//! transcendental work out of the O(n²) loop. Custom kernels take the direct pairwise path.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graphon::{DiscretizedGraphon, Graphon, SampledNetwork};

/// Oscillator phases on a uniform mesh. Node `i` (0-based) owns `[i/m, (i+1)/m)`.
///
/// Values are real lifts and are never reduced modulo 2π.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    values: Vec<f64>,
}

impl PhaseField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param(
                "mesh",
                "a phase field needs at least one node",
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                what: format!("phase field node {i}"),
            });
        }
        Ok(PhaseField { values })
    }

    /// Constant field `c` on `m` nodes.
    pub fn constant(c: f64, m: usize) -> Result<Self> {
        Self::new(vec![c; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mesh(&self) -> usize {
        self.values.len()
    }

    /// Adds `shift` to every node.
    pub fn shifted(&self, shift: f64) -> PhaseField {
        PhaseField {
            values: self.values.iter().map(|v| v + shift).collect(),
        }
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        PhaseField { values }
    }
}

/// `θᵢ(0) = η(i/m)` for 0-based `i`, i.e. the left endpoint of each cell.
pub fn discretize_initial<F: Fn(f64) -> f64>(eta: F, n: usize) -> Result<PhaseField> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let values: Vec<f64> = (0..n).map(|i| eta(i as f64 / n as f64)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            what: format!("initial condition at x = {}", i as f64 / n as f64),
        });
    }
    Ok(PhaseField { values })
}

/// Value of the piecewise-constant interpolant at `x ∈ [0, 1]`; `x = 1` maps to the last cell.
pub fn interpolate(field: &PhaseField, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "[0, 1]",
        });
    }
    let m = field.mesh();
    let cell = ((x * m as f64).floor() as usize).min(m - 1);
    Ok(field.values[cell])
}

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;
type DriftFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// The coupling function `D`.
#[derive(Clone)]
pub enum Kernel {
    /// `D(u) = sin u`.
    Kuramoto,
    /// `D(u) = sin(u + β)`.
    Sakaguchi { beta: f64 },
    /// A user-supplied 2π-periodic function with a declared Lipschitz constant.
    Custom(Arc<ScalarFn>),
}

/// Coupling kernel plus the intrinsic drift `f(θ, t)`.
#[derive(Clone)]
pub struct Coupling {
    kernel: Kernel,
    intrinsic: Option<Arc<DriftFn>>,
    lipschitz_d: f64,
    lipschitz_f: f64,
}

impl fmt::Debug for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kernel = match &self.kernel {
            Kernel::Kuramoto => "Kuramoto".to_string(),
            Kernel::Sakaguchi { beta } => format!("Sakaguchi(beta = {beta})"),
            Kernel::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("Coupling")
            .field("kernel", &kernel)
            .field("intrinsic", &self.intrinsic.is_some())
            .field("lipschitz_d", &self.lipschitz_d)
            .field("lipschitz_f", &self.lipschitz_f)
            .finish()
    }
}

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

impl Coupling {
    pub fn kuramoto() -> Self {
        Coupling {
            kernel: Kernel::Kuramoto,
            intrinsic: None,
            lipschitz_d: 1.0,
            lipschitz_f: 0.0,
        }
    }

    pub fn sakaguchi(beta: f64) -> Result<Self> {
        if !(beta > -HALF_PI && beta < HALF_PI) {
            return Err(Error::param("beta", format!("{beta} not in (-pi/2, pi/2)")));
        }
        Ok(Coupling {
            kernel: Kernel::Sakaguchi { beta },
            ..Self::kuramoto()
        })
    }

    /// Kuramoto for `beta == 0`, Sakaguchi otherwise.
    pub fn for_phase_shift(beta: f64) -> Result<Self> {
        if beta == 0.0 {
            Ok(Self::kuramoto())
        } else {
            Self::sakaguchi(beta)
        }
    }

    /// A custom kernel. Periodicity and `|D| ≤ 1` are checked on a grid over one period;
    /// the Lipschitz constant is taken as given.
    pub fn custom<F>(d: F, lipschitz: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        const K: usize = 4096;
        for k in 0..=K {
            let u = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / K as f64;
            let v = d(u);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    what: format!("coupling kernel at u = {u}"),
                });
            }
            if v.abs() > 1.0 + 1e-12 {
                return Err(Error::Input(format!(
                    "coupling kernel |D({u})| = {} exceeds 1",
                    v.abs()
                )));
            }
            if (v - d(u + 2.0 * std::f64::consts::PI)).abs() > 1e-12 {
                return Err(Error::Input(format!(
                    "coupling kernel is not 2π-periodic at u = {u}"
                )));
            }
        }
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::param("lipschitz", "must be finite and non-negative"));
        }
        Ok(Coupling {
            kernel: Kernel::Custom(Arc::new(d)),
            intrinsic: None,
            lipschitz_d: lipschitz,
            lipschitz_f: 0.0,
        })
    }

    /// Adds an intrinsic drift `f(θ, t)` with declared Lipschitz constant.
    pub fn with_intrinsic<F>(mut self, f: F, lipschitz: f64) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.intrinsic = Some(Arc::new(f));
        self.lipschitz_f = lipschitz;
        self
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Phase shift β; zero for Kuramoto and custom kernels.
    pub fn beta(&self) -> f64 {
        match self.kernel {
            Kernel::Sakaguchi { beta } => beta,
            _ => 0.0,
        }
    }

    pub fn lipschitz_d(&self) -> f64 {
        self.lipschitz_d
    }

    pub fn lipschitz_f(&self) -> f64 {
        self.lipschitz_f
    }

    pub fn has_intrinsic(&self) -> bool {
        self.intrinsic.is_some()
    }

    /// `D(u)`.
    #[inline]
    pub fn d(&self, u: f64) -> f64 {
        match &self.kernel {
            Kernel::Kuramoto => u.sin(),
            Kernel::Sakaguchi { beta } => (u + beta).sin(),
            Kernel::Custom(f) => f(u),
        }
    }

    #[inline]
    fn drift(&self, theta: f64, t: f64) -> f64 {
        match &self.intrinsic {
            Some(f) => f(theta, t),
            None => 0.0,
        }
    }

    /// Phase shift of a sinusoidal kernel, `None` for custom kernels.
    fn harmonic_shift(&self) -> Option<f64> {
        match self.kernel {
            Kernel::Kuramoto => Some(0.0),
            Kernel::Sakaguchi { beta } => Some(beta),
            Kernel::Custom(_) => None,
        }
    }
}

/// A vector field on phase fields of fixed dimension.
pub trait PhaseRhs: Sync {
    fn dim(&self) -> usize;

    /// Writes `θ̇` for `state` at time `t` into `out`.
    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]);
}

/// `(sin(θⱼ + β), cos(θⱼ + β))` for every node.
fn shifted_phasors(state: &[f64], beta: f64) -> (Vec<f64>, Vec<f64>) {
    state.iter().map(|&th| (th + beta).sin_cos()).unzip()
}

/// The sampled system `θ̇ᵢ = f + (nα)⁻¹ Σⱼ Aᵢⱼ D(θⱼ − θᵢ)`.
pub struct SampledSystem<'a> {
    net: &'a SampledNetwork,
    coupling: Coupling,
    scale: f64,
}

impl<'a> SampledSystem<'a> {
    pub fn new(net: &'a SampledNetwork, coupling: Coupling) -> Self {
        let scale = 1.0 / (net.n() as f64 * net.alpha());
        SampledSystem {
            net,
            coupling,
            scale,
        }
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    /// Direct pairwise evaluation, used as a cross-check for the factored path.
    pub fn eval_pairwise(&self, t: f64, state: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let th = state[i];
            let sum: f64 = self
                .net
                .neighbors(i)
                .iter()
                .map(|&j| self.coupling.d(state[j as usize] - th))
                .sum();
            *o = self.coupling.drift(th, t) + self.scale * sum;
        }
    }
}

impl PhaseRhs for SampledSystem<'_> {
    fn dim(&self) -> usize {
        self.net.n()
    }

    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let Some(beta) = self.coupling.harmonic_shift() else {
            return self.eval_pairwise(t, state, out);
        };
        let (s, c) = shifted_phasors(state, beta);
        for (i, o) in out.iter_mut().enumerate() {
            let (mut ss, mut cs) = (0.0, 0.0);
            for &j in self.net.neighbors(i) {
                ss += s[j as usize];
                cs += c[j as usize];
            }
            let (sin_i, cos_i) = state[i].sin_cos();
            *o = self.coupling.drift(state[i], t) + self.scale * (cos_i * ss - sin_i * cs);
        }
    }
}

/// The averaged system `θ̇ᵢ = f + n⁻¹ Σⱼ W⁽ⁿ⁾ᵢⱼ D(θⱼ − θᵢ)`, diagonal term included.
pub struct AveragedSystem<'a> {
    cells: &'a DiscretizedGraphon,
    coupling: Coupling,
}

impl<'a> AveragedSystem<'a> {
    pub fn new(cells: &'a DiscretizedGraphon, coupling: Coupling) -> Self {
        AveragedSystem { cells, coupling }
    }

    pub fn eval_pairwise(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let n = self.cells.n();
        for (i, o) in out.iter_mut().enumerate() {
            let th = state[i];
            let sum: f64 = self
                .cells
                .row(i)
                .iter()
                .zip(state)
                .map(|(w, &tj)| w * self.coupling.d(tj - th))
                .sum();
            *o = self.coupling.drift(th, t) + sum / n as f64;
        }
    }
}

impl PhaseRhs for AveragedSystem<'_> {
    fn dim(&self) -> usize {
        self.cells.n()
    }

    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let Some(beta) = self.coupling.harmonic_shift() else {
            return self.eval_pairwise(t, state, out);
        };
        let n = self.cells.n() as f64;
        let (s, c) = shifted_phasors(state, beta);
        for (i, o) in out.iter_mut().enumerate() {
            let (mut ss, mut cs) = (0.0, 0.0);
            for ((w, sj), cj) in self.cells.row(i).iter().zip(&s).zip(&c) {
                ss += w * sj;
                cs += w * cj;
            }
            let (sin_i, cos_i) = state[i].sin_cos();
            *o = self.coupling.drift(state[i], t) + (cos_i * ss - sin_i * cs) / n;
        }
    }
}

/// Kernel values at the continuum mesh nodes.
enum MeshKernel {
    /// `W(xᵢ, xⱼ) = aᵢ aⱼ`.
    RankOne(Vec<f64>),
    /// Row-major `m × m` table.
    Dense(Vec<f64>),
    /// Evaluated on the fly for meshes too large to tabulate.
    OnTheFly(Graphon),
}

/// Largest mesh for which the continuum kernel is tabulated (32 MiB of `f64`).
const DENSE_MESH_LIMIT: usize = 2048;

/// The continuum system discretized by a left-endpoint Riemann sum on `m` nodes.
pub struct ContinuumSystem {
    m: usize,
    kernel: MeshKernel,
    coupling: Coupling,
}

impl ContinuumSystem {
    pub fn new(graphon: &Graphon, m: usize, coupling: Coupling) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        let node = |i: usize| i as f64 / m as f64;
        let kernel = if graphon.is_rank_one() {
            MeshKernel::RankOne(
                (0..m)
                    .map(|i| graphon.rank_one_factor(node(i)).unwrap_or(0.0))
                    .collect(),
            )
        } else if m <= DENSE_MESH_LIMIT {
            let mut table = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    let w = graphon.eval(node(i), node(j));
                    if !w.is_finite() {
                        return Err(Error::Evaluation {
                            what: format!(
                                "graphon `{}` at mesh node pair ({i}, {j})",
                                graphon.label()
                            ),
                        });
                    }
                    table[i * m + j] = w;
                }
            }
            MeshKernel::Dense(table)
        } else {
            MeshKernel::OnTheFly(graphon.clone())
        };
        Ok(ContinuumSystem {
            m,
            kernel,
            coupling,
        })
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        match &self.kernel {
            MeshKernel::RankOne(a) => a[i] * a[j],
            MeshKernel::Dense(t) => t[i * self.m + j],
            MeshKernel::OnTheFly(g) => g.eval(i as f64 / self.m as f64, j as f64 / self.m as f64),
        }
    }

    pub fn eval_pairwise(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let m = self.m as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let th = state[i];
            let sum: f64 = (0..self.m)
                .map(|j| self.weight(i, j) * self.coupling.d(state[j] - th))
                .sum();
            *o = self.coupling.drift(th, t) + sum / m;
        }
    }
}

impl PhaseRhs for ContinuumSystem {
    fn dim(&self) -> usize {
        self.m
    }

    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let Some(beta) = self.coupling.harmonic_shift() else {
            return self.eval_pairwise(t, state, out);
        };
        let m = self.m as f64;
        let (s, c) = shifted_phasors(state, beta);
        match &self.kernel {
            MeshKernel::RankOne(a) => {
                let (mut ss, mut cs) = (0.0, 0.0);
                for ((aj, sj), cj) in a.iter().zip(&s).zip(&c) {
                    ss += aj * sj;
                    cs += aj * cj;
                }
                for (i, o) in out.iter_mut().enumerate() {
                    let (sin_i, cos_i) = state[i].sin_cos();
                    *o = self.coupling.drift(state[i], t) + a[i] * (cos_i * ss - sin_i * cs) / m;
                }
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    let (mut ss, mut cs) = (0.0, 0.0);
                    for j in 0..self.m {
                        let w = self.weight(i, j);
                        ss += w * s[j];
                        cs += w * c[j];
                    }
                    let (sin_i, cos_i) = state[i].sin_cos();
                    *o = self.coupling.drift(state[i], t) + (cos_i * ss - sin_i * cs) / m;
                }
            }
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

fn eval_field(sys: &impl PhaseRhs, state: &PhaseField, t: f64) -> PhaseField {
    let mut out = vec![0.0; state.mesh()];
    sys.eval(t, state.values(), &mut out);
    PhaseField::from_vec_unchecked(out)
}

/// Sampled-system right-hand side at `state`.
pub fn sds_rhs(
    state: &PhaseField,
    net: &SampledNetwork,
    c: &Coupling,
    t: f64,
) -> Result<PhaseField> {
    check_dim(net.n(), state.mesh())?;
    Ok(eval_field(&SampledSystem::new(net, c.clone()), state, t))
}

/// Averaged-system right-hand side at `state`.
pub fn ads_rhs(
    state: &PhaseField,
    d: &DiscretizedGraphon,
    c: &Coupling,
    t: f64,
) -> Result<PhaseField> {
    check_dim(d.n(), state.mesh())?;
    Ok(eval_field(&AveragedSystem::new(d, c.clone()), state, t))
}

/// Continuum right-hand side at the mesh nodes of `state`.
///
/// Builds the mesh operator on every call; integrate through [`ContinuumSystem`] instead.
pub fn cds_rhs(state: &PhaseField, g: &Graphon, c: &Coupling, t: f64) -> Result<PhaseField> {
    let sys = ContinuumSystem::new(g, state.mesh(), c.clone())?;
    Ok(eval_field(&sys, state, t))
}
