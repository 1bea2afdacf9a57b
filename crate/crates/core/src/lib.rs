//! Winding statistics of the n-particle exclusion process on planar
//! leaf-rooted trees.
//!
//! The pipeline: a [`tree::PlanarTree`] fixes the depth-first vertex order;
//! [`dconfig`] builds and classifies the discretized configuration space
//! (critical / collapsible / residual 1-cells); [`exclusion`] constructs
//! the lazy particle chain, which is the random walk on the one-skeleton;
//! [`statistics`] lifts the critical basis to winding statistics and
//! computes the exact asymptotic covariance through the discrete Green's
//! function of [`markov`], with spectral bounds; [`simulate`] estimates the
//! same covariance by Monte Carlo and runs CLT diagnostics; [`closedform`]
//! holds the exact star-graph and complete-graph tables used to validate
//! the generic machinery.

pub mod closedform;
pub mod dconfig;
pub mod exclusion;
pub mod graph;
pub mod markov;
pub mod simulate;
pub mod statistics;
pub mod tree;

use thiserror::Error;

/// Umbrella error for the high-level entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
    #[error(transparent)]
    Dconfig(#[from] dconfig::DconfigError),
    #[error(transparent)]
    Chain(#[from] markov::ChainError),
    #[error(transparent)]
    Sim(#[from] simulate::SimError),
    #[error(transparent)]
    ClosedForm(#[from] closedform::ClosedFormError),
}

pub use dconfig::{CellCensus, CellClass, ConfigCell};
pub use exclusion::{build_exclusion, one_skeleton, ExclusionChain};
pub use markov::{FiniteChain, Spectrum};
pub use simulate::{run_winding, WindingSample, WindingSimulator};
pub use statistics::{exact_covariance, sigma_quadform, WindingBasis};
pub use tree::PlanarTree;
