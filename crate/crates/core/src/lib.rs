//! Gaussian interconnection networks and fault-tolerant routing.
//!
//! The crate builds degree-four networks over the Gaussian integers modulo a
//! generator `α = a + bi`, injects node faults, and routes packets either with
//! a deterministic greedy adaptive router or with a policy trained by a small
//! from-scratch PPO implementation. The [`experiments`] module wires these
//! together into the packet-delivery, throughput and quadrant studies.
//!
//! ```
//! use gaussnet_core::{DistanceMode, FaultSet, NetworkModulus, Topology, route_greedy};
//!
//! let topo = Topology::new(NetworkModulus::from_k(3).unwrap());
//! assert_eq!(topo.len(), 25);
//! let faults = FaultSet::empty(topo.len());
//! let route = route_greedy(&topo, 0, 3, &faults, DistanceMode::Plain).unwrap();
//! assert_eq!(route.hops, 3);
//! ```

pub mod env;
pub mod error;
pub mod experiments;
pub mod faults;
pub mod gaussian;
pub mod greedy;
pub mod ppo;
pub mod seed;
pub mod topology;

pub use env::{Action, Observation, RoutingEnv, StepOutcome, OBS_DIM};
pub use error::{Error, Result};
pub use faults::{inject_clustered, inject_uniform, FaultMode, FaultSet, FaultSpec};
pub use gaussian::{GaussianInt, NetworkModulus};
pub use greedy::{route_greedy, RouteResult, RouteStatus};
pub use ppo::{route_rl, train, PolicyParams, PpoConfig, TrainingReport};
pub use topology::{Direction, DistanceMode, Quadrant, Topology};

/// Version string written into every output directory.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
