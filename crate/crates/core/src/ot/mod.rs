//! Discrete optimal transport between source and target classifier outputs.
//!
//! [`build_cost_matrix`] pairs every source probability vector with every
//! target one by Euclidean distance. [`solve_exact`] returns a vertex of the
//! transport polytope minimizing `⟨γ, M⟩_F` via network simplex;
//! [`solve_sinkhorn`] is the entropically regularized approximation.

mod cost;
mod exact;
mod plan;
mod sinkhorn;

pub use cost::{build_cost_matrix, CostMatrix};
pub use exact::solve_exact;
pub use plan::{Marginals, TransportPlan};
pub use sinkhorn::{solve_sinkhorn, SinkhornParams};
