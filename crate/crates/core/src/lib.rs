//! Joint DNN split-point selection and NOMA resource allocation for
//! device/edge split inference.
//!
//! A chain DNN is cut at layer `s`: layers `1..=s` run on the mobile device,
//! the intermediate activation is sent over a NOMA uplink subchannel, layers
//! `s+1..=F` run on the edge server, and the result returns over a NOMA
//! downlink subchannel. [`ligd::li_gd`] picks the shared split together with
//! subchannel assignment, transmit powers and edge compute units by running
//! projected gradient descent once per candidate split, warm-starting each
//! split from the optimum of the previous one.
//!
//! Module map:
//!
//! * [`profile`] - per-layer workloads and cut sizes of chain DNNs
//! * [`scenario`] - AP/user placement, association, fading channel gains
//! * [`radio`] - SINR and achievable rates (NOMA with SIC, and OMA)
//! * [`cost`] - delay/energy model, weighted utility and its gradient
//! * [`ligd`] - the layer-looped gradient descent solver, rounding and repair
//! * [`oracle`] - exhaustive grid search for tiny instances
//! * [`baselines`] - Device-Only, Edge-Only and latency-min split
//! * [`bench`] - seeded experiment harness writing CSV metrics

pub mod baselines;
pub mod bench;
pub mod cost;
mod error;
pub mod ligd;
pub mod oracle;
pub mod profile;
pub mod radio;
pub mod scenario;

pub use cost::{ComputeParams, CostBreakdown, Problem, Weights};
pub use error::{Error, Result};
pub use ligd::{OptimizerConfig, Rounding, SolveResult};
pub use profile::{LayerProfile, ModelProfile, UnitCosts};
pub use radio::{Allocation, RateModel, UserAlloc};
pub use scenario::{Fading, Layout, RadioParams, Scenario};
