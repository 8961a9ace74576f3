//! Identical phase oscillators on graphon-generated random networks.
//!
//! The crate carries three coupled-oscillator systems side by side:
//!
//! * the **sampled** system on a W-random network (`sds_rhs`),
//! * the **averaged** system on the discretized graphon (`ads_rhs`),
//! * the **continuum** integro-differential system on the graphon itself (`cds_rhs`),
//!
//! together with the closed-form concentration and growth bounds used to relate
//! them, the Sakaguchi–Kuramoto invariance threshold, a three-variable reduction
//! of the continuum Sakaguchi–Kuramoto model, and a deterministic Monte Carlo
//! sweep engine that writes CSV.
//!
//! ```
//! use graphon_sync::prelude::*;
//!
//! let net = erdos_renyi(50, 1.0, 7).unwrap();
//! let eta = discretize_initial(|x| x, 50).unwrap();
//! let sys = SampledSystem::new(&net, Coupling::kuramoto());
//! let cfg = IntegratorConfig::new(0.01, 1.0).unwrap();
//! let traj = integrate(&sys, &eta, &cfg).unwrap();
//! assert!(order_parameter(traj.final_state()).r > order_parameter(&eta).r);
//! ```

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod graphon;
pub mod integrator;
pub mod observables;
pub mod par;
pub mod rng;
pub mod theory;
pub mod ws_reduction;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::dynamics::{
        ads_rhs, cds_rhs, discretize_initial, interpolate, sds_rhs, AveragedSystem,
        ContinuumSystem, Coupling, PhaseField, PhaseRhs, SampledSystem,
    };
    pub use crate::error::{Error, Result};
    pub use crate::graphon::{
        discretize, erdos_renyi, is_connected, sample_network, DiscretizedGraphon, Graphon,
        SampledNetwork,
    };
    pub use crate::integrator::{integrate, integrate_observed, IntegratorConfig, Trajectory};
    pub use crate::observables::{
        linf_distance, order_parameter, phase_diameter, sync_verdict, OrderParameter, SyncVerdict,
        DEFAULT_FREQ_TOL, DEFAULT_PHASE_TOL,
    };
}
