//! Optimal planning in finite MDPs under hard PCTL constraints.
//!
//! The crate translates a fragment of probabilistic computation tree logic
//! (PCTL) into chance constraints over trajectory costs, then solves the
//! constrained planning problem with a trajectory-sampling approximate value
//! iteration: a linear value approximation over geodesic Gaussian kernel
//! features, optimized by an augmented-Lagrangian loop whose gradients are
//! Monte-Carlo estimates from on-policy rollouts. Exact small-instance
//! solvers (softmax value iteration, linear-system reachability) serve as
//! ground truth.
//!
//! Module map:
//! - [`mdp`]: finite MDP model, policies, trajectory sampling, cost
//!   recursions, shortest-path metric, mixing-time estimation.
//! - [`pctl`]: formula parser, classifier, chance-constraint compiler, and
//!   statistical/exact constraint checking.
//! - [`exact`]: softmax/hardmax value iteration and feasibility oracles.
//! - [`approx`]: kernel basis, policy gradients, and the constrained solver.
//! - [`gridworld`]: the stochastic gridworld benchmark family.
//!
//! Trajectory batches, backup sweeps, and batch gradient reductions run on
//! rayon when the default `parallel` feature is enabled; every parallel entry
//! point has a sequential twin (`*_seq`) producing bit-identical results.

pub mod approx;
pub mod exact;
pub mod gridworld;
pub mod mdp;
pub(crate) mod par;
pub mod pctl;

pub use mdp::{CostFunction, Mdp, TabularPolicy, Trajectory};
