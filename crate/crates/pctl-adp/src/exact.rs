//! Ground-truth solvers at desk scale: softmax/hardmax value iteration,
//! Q/policy extraction, and the feasibility oracle behind the upper-bound
//! property.

use thiserror::Error;

use crate::mdp::{Mdp, TabularPolicy};
use crate::par;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(
        "value iteration did not converge within {iters} sweeps (residual {residual:.3e}, gamma {gamma}); \
         at gamma = 1 an absorbing zero-reward structure is required"
    )]
    Divergence {
        iters: usize,
        residual: f64,
        gamma: f64,
    },
    #[error("parameter vector diverged: |theta| = {norm:.3e} exceeded bound {bound:.3e}")]
    ThetaDiverged { norm: f64, bound: f64 },
    #[error("sampling produced no trajectory starting at constrained state {state}")]
    SamplingCoverage { state: usize },
    #[error("{0}")]
    Model(#[from] crate::mdp::MdpError),
}

/// A value function together with the temperature that produced it
/// (`tau = 0` denotes hardmax).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub values: Vec<f64>,
    pub tau: f64,
    /// Sweeps used by value iteration (0 for hand-built tables).
    pub iterations: usize,
    /// Final Bellman residual `max_s |𝓑V(s) − V(s)|`.
    pub residual: f64,
}

impl ValueTable {
    pub fn from_values(values: Vec<f64>, tau: f64) -> Self {
        Self {
            values,
            tau,
            iterations: 0,
            residual: f64::NAN,
        }
    }
}

/// One backup of the smoothed Bellman operator,
/// `𝓑V(s) = τ log Σ_{a∈A(s)} exp{(r(s,a) + γ Σ_{s'} P(s'|s,a) V(s')) / τ}`,
/// computed with the max-shift so large backed-up values cannot overflow.
/// `tau = 0` selects the hardmax operator.
pub fn softmax_backup(values: &[f64], mdp: &Mdp, tau: f64) -> Vec<f64> {
    par::map_indexed(mdp.n_states(), |s| backup_state(values, mdp, tau, s))
}

/// Sequential twin of [`softmax_backup`] for benchmarking.
pub fn softmax_backup_seq(values: &[f64], mdp: &Mdp, tau: f64) -> Vec<f64> {
    par::map_indexed_seq(mdp.n_states(), |s| backup_state(values, mdp, tau, s))
}

pub(crate) fn backup_state(values: &[f64], mdp: &Mdp, tau: f64, s: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let acts = mdp.admissible(s);
    let mut backed = Vec::with_capacity(acts.len());
    for &a in acts {
        let future: f64 = mdp
            .transition_row(s, a)
            .iter()
            .zip(values)
            .map(|(&p, &v)| p * v)
            .sum();
        let q = mdp.reward(s, a) + mdp.gamma() * future;
        best = best.max(q);
        backed.push(q);
    }
    if tau == 0.0 {
        return best;
    }
    let sum: f64 = backed.iter().map(|&q| ((q - best) / tau).exp()).sum();
    best + tau * sum.ln()
}

/// Iterates the (soft)max backup to its fixed point: stops once the sweep
/// residual `‖𝓑V − V‖∞` drops below `tol`.
pub fn value_iteration(
    mdp: &Mdp,
    tau: f64,
    tol: f64,
    max_iters: usize,
) -> Result<ValueTable, SolveError> {
    let mut values = vec![0.0; mdp.n_states()];
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iters {
        let next = softmax_backup(&values, mdp, tau);
        residual = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        values = next;
        if residual <= tol {
            return Ok(ValueTable {
                values,
                tau,
                iterations: iter,
                residual,
            });
        }
    }
    Err(SolveError::Divergence {
        iters: max_iters,
        residual,
        gamma: mdp.gamma(),
    })
}

/// Dense Q table over admissible pairs (inadmissible entries are `NaN`).
#[derive(Debug, Clone)]
pub struct QTable {
    pub q: Vec<f64>,
    n_actions: usize,
}

impl QTable {
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n_actions + a]
    }
}

/// `Q(s,a) = r(s,a) + γ Σ_{s'} P(s'|s,a) V(s')`.
pub fn q_from_value(values: &[f64], mdp: &Mdp) -> QTable {
    let m = mdp.n_actions();
    let mut q = vec![f64::NAN; mdp.n_states() * m];
    for s in 0..mdp.n_states() {
        for &a in mdp.admissible(s) {
            let future: f64 = mdp
                .transition_row(s, a)
                .iter()
                .zip(values)
                .map(|(&p, &v)| p * v)
                .sum();
            q[s * m + a] = mdp.reward(s, a) + mdp.gamma() * future;
        }
    }
    QTable { q, n_actions: m }
}

/// Softmax policy `π(a|s) ∝ exp((Q(s,a) − V(s))/τ)` with rows renormalized to
/// sum to one exactly; at a converged fixed point the renormalization is a
/// no-op up to the solver tolerance. `tau = 0` returns the hardmax policy
/// with ties broken toward the lowest action index.
pub fn policy_from_value(values: &[f64], mdp: &Mdp, tau: f64) -> TabularPolicy {
    let q = q_from_value(values, mdp);
    let m = mdp.n_actions();
    let mut probs = vec![0.0; mdp.n_states() * m];
    for s in 0..mdp.n_states() {
        let acts = mdp.admissible(s);
        if tau == 0.0 {
            let best = acts
                .iter()
                .copied()
                .fold((usize::MAX, f64::NEG_INFINITY), |(ba, bq), a| {
                    let qa = q.get(s, a);
                    if qa > bq {
                        (a, qa)
                    } else {
                        (ba, bq)
                    }
                })
                .0;
            probs[s * m + best] = 1.0;
            continue;
        }
        // Shift by the row max rather than by V(s): identical after
        // normalization and immune to a wildly inconsistent V.
        let row_max = acts
            .iter()
            .map(|&a| q.get(s, a))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for &a in acts {
            let w = ((q.get(s, a) - row_max) / tau).exp();
            probs[s * m + a] = w;
            total += w;
        }
        for &a in acts {
            probs[s * m + a] /= total;
        }
    }
    TabularPolicy::new(mdp, probs).expect("rows normalized by construction")
}

/// Feasibility report `max_s (𝓑V(s) − V(s))`: nonpositive means `V` is a
/// pointwise upper bound on the fixed point.
pub fn bellman_feasibility(values: &[f64], mdp: &Mdp, tau: f64) -> f64 {
    softmax_backup(values, mdp, tau)
        .iter()
        .zip(values)
        .map(|(b, v)| b - v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Weighted L1 distance `Σ_s c(s) |a(s) − b(s)|` for a distribution `c`.
pub fn weighted_l1_error(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), w)| w * (x - y).abs())
        .sum()
}

/// State-indexed CSV of a value table (for plotting surfaces).
pub fn value_csv(values: &[f64], names: &[String]) -> String {
    let mut out = String::from("state,value\n");
    for (name, v) in names.iter().zip(values) {
        out.push_str(&format!("{name},{v}\n"));
    }
    out
}
