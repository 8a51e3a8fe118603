//! Finite MDP model: states, actions, kernel, rewards, labels, policies.
//!
//! The kernel is stored dense; the crate targets desk-scale state spaces
//! (up to ~10^4 states), where dense rows beat sparse bookkeeping.

mod costs;
mod graph;
mod io;
mod mixing;
mod rng;
mod sampling;

pub use costs::{expected_cost_dp, trajectory_cost, visitation_weights};
pub use graph::SpTable;
pub use io::MdpFile;
pub use mixing::{eigenvalue_mixing_bound, mixing_time, MixingMethod, MixingTimeEstimate};
pub use rng::stream_rng;
pub use sampling::{sample_batch, sample_batch_seq, sample_trajectory, StartDist};

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use thiserror::Error;

/// Tolerance for row-stochasticity and distribution sums.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("initial distribution has empty support")]
    EmptyInitSupport,
    #[error("empty trajectory set")]
    EmptyTrajectorySet,
    #[error(
        "cost recursion did not mix within {cap} steps (worst state {state}, gap {gap:.3e})"
    )]
    NonMixing { state: usize, gap: f64, cap: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

/// A finite Markov decision process `⟨S, A, P, r, μ, γ⟩` with labelled states.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    state_names: Vec<String>,
    action_names: Vec<String>,
    /// Sorted admissible action ids per state.
    admissible: Vec<Vec<usize>>,
    /// Dense kernel, layout `[s][a][s']`.
    transition: Vec<f64>,
    /// Dense rewards, layout `[s][a]`.
    reward: Vec<f64>,
    initial: Vec<f64>,
    gamma: f64,
    labels: BTreeMap<String, BTreeSet<usize>>,
}

impl Mdp {
    /// Builds an MDP from dense tables. Shape errors are rejected here;
    /// stochasticity and the remaining invariants are reported by
    /// [`validate`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        state_names: Vec<String>,
        action_names: Vec<String>,
        admissible: Vec<Vec<usize>>,
        transition: Vec<f64>,
        reward: Vec<f64>,
        initial: Vec<f64>,
        gamma: f64,
        labels: BTreeMap<String, BTreeSet<usize>>,
    ) -> Result<Self, MdpError> {
        let n = state_names.len();
        let m = action_names.len();
        if n == 0 || m == 0 {
            return Err(MdpError::Invalid("empty state or action set".into()));
        }
        if admissible.len() != n {
            return Err(MdpError::Dimension(format!(
                "admissible lists: expected {n}, got {}",
                admissible.len()
            )));
        }
        if transition.len() != n * m * n {
            return Err(MdpError::Dimension(format!(
                "transition table: expected {} entries, got {}",
                n * m * n,
                transition.len()
            )));
        }
        if reward.len() != n * m {
            return Err(MdpError::Dimension(format!(
                "reward table: expected {} entries, got {}",
                n * m,
                reward.len()
            )));
        }
        if initial.len() != n {
            return Err(MdpError::Dimension(format!(
                "initial distribution: expected {n} entries, got {}",
                initial.len()
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(MdpError::Invalid(format!("gamma {gamma} outside (0,1]")));
        }
        let mut admissible = admissible;
        for row in &mut admissible {
            row.sort_unstable();
            row.dedup();
            if row.iter().any(|&a| a >= m) {
                return Err(MdpError::Dimension("admissible action id out of range".into()));
            }
        }
        for set in labels.values() {
            if set.iter().any(|&s| s >= n) {
                return Err(MdpError::Dimension("label state id out of range".into()));
            }
        }
        Ok(Self {
            state_names,
            action_names,
            admissible,
            transition,
            reward,
            initial,
            gamma,
            labels,
        })
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn admissible(&self, s: usize) -> &[usize] {
        &self.admissible[s]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[(s * self.n_actions() + a) * self.n_states() + next]
    }

    /// The kernel row `P(·|s,a)`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let n = self.n_states();
        let base = (s * self.n_actions() + a) * n;
        &self.transition[base..base + n]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions() + a]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn labels(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.labels
    }

    pub fn label_set(&self, name: &str) -> Option<&BTreeSet<usize>> {
        self.labels.get(name)
    }

    /// A sink state self-loops with probability 1 under every admissible action.
    pub fn is_sink(&self, s: usize) -> bool {
        self.admissible[s]
            .iter()
            .all(|&a| (self.prob(s, a, s) - 1.0).abs() <= STOCHASTIC_TOL)
    }

    /// Returns a copy with every state in `sinks` turned into a sink
    /// (all admissible actions self-loop) and its rewards zeroed.
    pub fn with_sinks(&self, sinks: &BTreeSet<usize>) -> Mdp {
        let mut out = self.clone();
        let (n, m) = (self.n_states(), self.n_actions());
        for &s in sinks {
            for a in 0..m {
                let base = (s * m + a) * n;
                for next in 0..n {
                    out.transition[base + next] = if next == s { 1.0 } else { 0.0 };
                }
                out.reward[s * m + a] = 0.0;
            }
        }
        out
    }

    /// Successor states reachable from `s` by any admissible action.
    pub fn successors(&self, s: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &a in &self.admissible[s] {
            for (next, &p) in self.transition_row(s, a).iter().enumerate() {
                if p > 0.0 {
                    out.insert(next);
                }
            }
        }
        out
    }
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub state: Option<usize>,
    pub action: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.state, self.action) {
            (Some(s), Some(a)) => write!(f, "state {s}, action {a}: {}", self.message),
            (Some(s), None) => write!(f, "state {s}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

/// Checks every model invariant; the returned list is empty iff the MDP is
/// well formed. Diagnostics are values, not errors.
pub fn validate(mdp: &Mdp) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in 0..mdp.n_states() {
        if mdp.admissible(s).is_empty() {
            out.push(Violation {
                state: Some(s),
                action: None,
                message: "no admissible actions".into(),
            });
        }
        for &a in mdp.admissible(s) {
            let row = mdp.transition_row(s, a);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                out.push(Violation {
                    state: Some(s),
                    action: Some(a),
                    message: format!("transition row sums to {sum}"),
                });
            }
            if let Some(next) = row.iter().position(|&p| p < 0.0) {
                out.push(Violation {
                    state: Some(s),
                    action: Some(a),
                    message: format!("negative probability at next state {next}"),
                });
            }
        }
    }
    let init_sum: f64 = mdp.initial().iter().sum();
    if (init_sum - 1.0).abs() > STOCHASTIC_TOL {
        out.push(Violation {
            state: None,
            action: None,
            message: format!("initial distribution sums to {init_sum}"),
        });
    }
    if mdp.initial().iter().any(|&p| p < 0.0) {
        out.push(Violation {
            state: None,
            action: None,
            message: "initial distribution has a negative entry".into(),
        });
    }
    out
}

/// A memoryless randomized policy `π(a|s)` stored as a dense `[s][a]` table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    probs: Vec<f64>,
    n_actions: usize,
}

impl TabularPolicy {
    /// Wraps a dense table after checking each row is a distribution over the
    /// admissible set of the matching state.
    pub fn new(mdp: &Mdp, probs: Vec<f64>) -> Result<Self, MdpError> {
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        if probs.len() != n * m {
            return Err(MdpError::Dimension(format!(
                "policy table: expected {} entries, got {}",
                n * m,
                probs.len()
            )));
        }
        let policy = Self { probs, n_actions: m };
        for s in 0..n {
            let row_sum: f64 = policy.row(s).iter().sum();
            if (row_sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MdpError::Invalid(format!(
                    "policy row for state {s} sums to {row_sum}"
                )));
            }
            for a in 0..m {
                let p = policy.prob(s, a);
                if p < 0.0 {
                    return Err(MdpError::Invalid(format!(
                        "negative policy probability at ({s},{a})"
                    )));
                }
                if p > 0.0 && !mdp.admissible(s).contains(&a) {
                    return Err(MdpError::Invalid(format!(
                        "policy puts mass on inadmissible action ({s},{a})"
                    )));
                }
            }
        }
        Ok(policy)
    }

    /// Uniform over the admissible actions of each state.
    pub fn uniform(mdp: &Mdp) -> Self {
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        let mut probs = vec![0.0; n * m];
        for s in 0..n {
            let acts = mdp.admissible(s);
            for &a in acts {
                probs[s * m + a] = 1.0 / acts.len() as f64;
            }
        }
        Self { probs, n_actions: m }
    }

    /// Deterministic policy from a per-state action choice.
    pub fn deterministic(mdp: &Mdp, choice: &[usize]) -> Result<Self, MdpError> {
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        if choice.len() != n {
            return Err(MdpError::Dimension("choice length != n_states".into()));
        }
        let mut probs = vec![0.0; n * m];
        for (s, &a) in choice.iter().enumerate() {
            if !mdp.admissible(s).contains(&a) {
                return Err(MdpError::Invalid(format!(
                    "action {a} inadmissible at state {s}"
                )));
            }
            probs[s * m + a] = 1.0;
        }
        Ok(Self { probs, n_actions: m })
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }
}

/// A sampled trajectory: a sequence of `(state, action, next_state)` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    origin: usize,
    steps: Vec<(usize, usize, usize)>,
}

impl Trajectory {
    pub fn new(origin: usize, steps: Vec<(usize, usize, usize)>) -> Self {
        Self { origin, steps }
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[(usize, usize, usize)] {
        &self.steps
    }

    /// The state at time `t` (`t = 0` is the origin, `t = len()` the final state).
    pub fn state_at(&self, t: usize) -> usize {
        if t == 0 {
            self.origin
        } else {
            self.steps[t - 1].2
        }
    }

    /// Visited states `s_0, …, s_len` in order.
    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.origin).chain(self.steps.iter().map(|&(_, _, next)| next))
    }
}

/// A per-state-action cost table `d(s,a)`. Units depend on the constraint
/// that produced it: probability mass for indicator costs, steps for unit
/// costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    d: Vec<f64>,
    n_actions: usize,
}

impl CostFunction {
    pub fn new(n_states: usize, n_actions: usize, d: Vec<f64>) -> Result<Self, MdpError> {
        if d.len() != n_states * n_actions {
            return Err(MdpError::Dimension("cost table size mismatch".into()));
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(MdpError::Invalid("non-finite cost entry".into()));
        }
        Ok(Self { d, n_actions })
    }

    pub fn zero(n_states: usize, n_actions: usize) -> Self {
        Self {
            d: vec![0.0; n_states * n_actions],
            n_actions,
        }
    }

    pub fn unit(n_states: usize, n_actions: usize) -> Self {
        Self {
            d: vec![1.0; n_states * n_actions],
            n_actions,
        }
    }

    pub fn from_fn(
        n_states: usize,
        n_actions: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut d = vec![0.0; n_states * n_actions];
        for s in 0..n_states {
            for a in 0..n_actions {
                d[s * n_actions + a] = f(s, a);
            }
        }
        Self { d, n_actions }
    }

    /// One-step entry probability into `target`, zeroed on target states:
    /// `d(s,a) = Σ_{s'∈target} P(s'|s,a)` for `s ∉ target`, else 0.
    pub fn entry_indicator(mdp: &Mdp, target: &BTreeSet<usize>) -> Self {
        Self::from_fn(mdp.n_states(), mdp.n_actions(), |s, a| {
            if target.contains(&s) {
                0.0
            } else {
                target.iter().map(|&t| mdp.prob(s, a, t)).sum()
            }
        })
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.d[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.d[s * self.n_actions + a] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.d.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn table(&self) -> &[f64] {
        &self.d
    }
}

/// The policy-induced chain `P^π(s'|s) = Σ_a P(s'|s,a) π(a|s)`.
pub fn induced_chain(mdp: &Mdp, policy: &TabularPolicy) -> Result<DMatrix<f64>, MdpError> {
    let n = mdp.n_states();
    if policy.n_states() != n || policy.n_actions != mdp.n_actions() {
        return Err(MdpError::Dimension(
            "policy does not match the MDP dimensions".into(),
        ));
    }
    let mut chain = DMatrix::zeros(n, n);
    for s in 0..n {
        for &a in mdp.admissible(s) {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for (next, &p) in mdp.transition_row(s, a).iter().enumerate() {
                chain[(s, next)] += pa * p;
            }
        }
    }
    Ok(chain)
}

/// Shared test fixture: state 0 escapes into sink state 1 with probability
/// `escape` per step.
#[cfg(test)]
pub(crate) fn two_state_chain(escape: f64) -> Mdp {
    let transition = vec![
        1.0 - escape,
        escape, // s0, a0
        0.0,
        1.0, // s1, a0
    ];
    Mdp::new(
        vec!["s0".into(), "s1".into()],
        vec!["a".into()],
        vec![vec![0], vec![0]],
        transition,
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        1.0,
        BTreeMap::from([("goal".to_string(), BTreeSet::from([1]))]),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state_chain(escape: f64) -> Mdp {
        super::two_state_chain(escape)
    }

    #[test]
    fn validate_accepts_well_formed_model() {
        let mdp = two_state_chain(0.3);
        assert!(validate(&mdp).is_empty());
    }

    #[test]
    fn validate_reports_non_stochastic_row() {
        let mut transition = vec![0.6, 0.3, 0.0, 1.0];
        transition[0] = 0.6; // row (s0,a0) sums to 0.9
        let mdp = Mdp::new(
            vec!["s0".into(), "s1".into()],
            vec!["a".into()],
            vec![vec![0], vec![0]],
            transition,
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            0.9,
            BTreeMap::new(),
        )
        .unwrap();
        let violations = validate(&mdp);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].state, Some(0));
        assert_eq!(violations[0].action, Some(0));
    }

    #[test]
    fn sink_predicate_matches_definition() {
        let mdp = two_state_chain(0.5);
        assert!(!mdp.is_sink(0));
        assert!(mdp.is_sink(1));
    }

    #[test]
    fn with_sinks_freezes_state_and_reward() {
        let mdp = two_state_chain(0.5);
        let surgered = mdp.with_sinks(&BTreeSet::from([0]));
        assert!(surgered.is_sink(0));
        assert_eq!(surgered.reward(0, 0), 0.0);
        // Idempotent.
        assert_eq!(surgered.with_sinks(&BTreeSet::from([0])), surgered);
    }

    #[test]
    fn induced_chain_mixes_actions() {
        // Two actions pointing at different successors; uniform policy → (0.5, 0.5).
        let transition = vec![
            1.0, 0.0, // s0, a0
            0.0, 1.0, // s0, a1
            1.0, 0.0, // s1, a0
            0.0, 1.0, // s1, a1
        ];
        let mdp = Mdp::new(
            vec!["s0".into(), "s1".into()],
            vec!["a0".into(), "a1".into()],
            vec![vec![0, 1], vec![0, 1]],
            transition,
            vec![0.0; 4],
            vec![1.0, 0.0],
            0.9,
            BTreeMap::new(),
        )
        .unwrap();
        let chain = induced_chain(&mdp, &TabularPolicy::uniform(&mdp)).unwrap();
        assert_eq!(chain[(0, 0)], 0.5);
        assert_eq!(chain[(0, 1)], 0.5);
    }

    #[test]
    fn deterministic_policy_on_deterministic_mdp_is_permutation_like() {
        let mdp = two_state_chain(1.0);
        let policy = TabularPolicy::deterministic(&mdp, &[0, 0]).unwrap();
        let chain = induced_chain(&mdp, &policy).unwrap();
        assert_eq!(chain[(0, 1)], 1.0);
        assert_eq!(chain[(1, 1)], 1.0);
        for s in 0..2 {
            let row_sum: f64 = (0..2).map(|j| chain[(s, j)]).sum();
            assert!((row_sum - 1.0).abs() < 1e-12);
        }
    }
}
