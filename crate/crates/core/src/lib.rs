//! Bounded rational decision-making as a free-energy trade-off between
//! expected utility and information-processing cost.
//!
//! - [`measure`]: transformation costs, cost potentials, Gibbs measures.
//! - [`lottery`]: equilibrium choice, certainty equivalents, β-limits.
//! - [`satisficing`]: maximum-of-samples search and its Gibbs approximation.
//! - [`tree`]: decision trees with node-specific inverse temperatures.
//! - [`control`]: KL, Bellman, risk-sensitive and robust control as limits.
//! - [`scenario`] and [`table`]: scenario files and CSV results.

pub mod control;
pub mod error;
pub mod lottery;
pub mod measure;
pub mod numeric;
pub mod satisficing;
pub mod scenario;
pub mod table;
pub mod tree;

pub use control::{ControlSolution, FiniteMdp, Regime};
pub use error::{Error, Result};
pub use lottery::{equilibrium, BoundedLottery, EquilibriumResult};
pub use measure::{CostPotential, FinitePartition, ProbabilityVector};
pub use satisficing::{DiscreteSource, MaxSamplingResult};
pub use scenario::Scenario;
pub use table::ResultTable;
pub use tree::{solve_tree, DecisionTree, NodeKind, SolvedTree, TreeBuilder};
