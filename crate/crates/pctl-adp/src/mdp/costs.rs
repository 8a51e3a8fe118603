//! Trajectory costs, finite-horizon expected-cost recursion, and empirical
//! state-visitation weights.

use std::collections::BTreeSet;

use crate::par;

use super::{CostFunction, Mdp, MdpError, TabularPolicy, Trajectory};

/// Discounted cost of a sampled trajectory: `Σ_t γ^t d(s_t, a_t)`.
///
/// With a `stop_rule` set, accrual is truncated at the first entry into the
/// set: the entering transition is still paid, later ones are not, and a
/// trajectory that starts inside the set costs zero.
pub fn trajectory_cost(
    traj: &Trajectory,
    d: &CostFunction,
    gamma: f64,
    stop_rule: Option<&BTreeSet<usize>>,
) -> f64 {
    if stop_rule.is_some_and(|set| set.contains(&traj.origin())) {
        return 0.0;
    }
    let mut total = 0.0;
    let mut discount = 1.0;
    for &(s, a, next) in traj.steps() {
        total += discount * d.get(s, a);
        if stop_rule.is_some_and(|set| set.contains(&next)) {
            break;
        }
        discount *= gamma;
    }
    total
}

/// Exact finite-horizon expected cost `D(s,T;π)` by backward recursion on the
/// known kernel:
///
/// `D(s,0) = 0`, `D(s,t+1) = Σ_a π(a|s) [d(s,a) + γ Σ_{s'} P(s'|s,a) D(s',t)]`.
///
/// Sink-state truncation is honored when the cost table carries the sink
/// surgery of a compiled constraint (zero cost at sinks freezes accrual).
pub fn expected_cost_dp(
    mdp: &Mdp,
    policy: &TabularPolicy,
    d: &CostFunction,
    horizon: usize,
    gamma: f64,
) -> Vec<f64> {
    let n = mdp.n_states();
    let mut values = vec![0.0; n];
    for _ in 0..horizon {
        values = par::map_indexed(n, |s| {
            let mut total = 0.0;
            for &a in mdp.admissible(s) {
                let pa = policy.prob(s, a);
                if pa == 0.0 {
                    continue;
                }
                let future: f64 = mdp
                    .transition_row(s, a)
                    .iter()
                    .zip(&values)
                    .map(|(&p, &v)| p * v)
                    .sum();
                total += pa * (d.get(s, a) + gamma * future);
            }
            total
        });
    }
    values
}

/// Empirical state-visitation weights: counts of every visited state
/// (including origins and final states) normalized to a distribution.
pub fn visitation_weights(
    mdp: &Mdp,
    _policy: &TabularPolicy,
    trajectories: &[Trajectory],
) -> Result<Vec<f64>, MdpError> {
    if trajectories.is_empty() {
        return Err(MdpError::EmptyTrajectorySet);
    }
    let n = mdp.n_states();
    let mut counts = vec![0.0f64; n];
    let mut total = 0.0f64;
    for traj in trajectories {
        for s in traj.states() {
            if s >= n {
                return Err(MdpError::Dimension("trajectory state out of range".into()));
            }
            counts[s] += 1.0;
            total += 1.0;
        }
    }
    for c in &mut counts {
        *c /= total;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{sample_batch, stream_rng, StartDist};
    use rand::Rng;
    use std::collections::BTreeMap;

    #[test]
    fn zero_cost_is_zero() {
        let traj = Trajectory::new(0, vec![(0, 0, 0); 4]);
        let d = CostFunction::zero(1, 1);
        assert_eq!(trajectory_cost(&traj, &d, 0.9, None), 0.0);
    }

    #[test]
    fn unit_cost_counts_transitions_at_gamma_one() {
        let traj = Trajectory::new(0, vec![(0, 0, 0); 5]);
        let d = CostFunction::unit(1, 1);
        assert_eq!(trajectory_cost(&traj, &d, 1.0, None), 5.0);
    }

    #[test]
    fn discounted_hand_sum() {
        // d = (1, 2, 3) along a 3-step path, γ = 0.9.
        let traj = Trajectory::new(0, vec![(0, 0, 1), (1, 0, 2), (2, 0, 2)]);
        let mut d = CostFunction::zero(3, 1);
        d.set(0, 0, 1.0);
        d.set(1, 0, 2.0);
        d.set(2, 0, 3.0);
        let got = trajectory_cost(&traj, &d, 0.9, None);
        assert!((got - 5.23).abs() < 1e-12);
    }

    #[test]
    fn stop_rule_pays_entering_transition_only() {
        let traj = Trajectory::new(0, vec![(0, 0, 1), (1, 0, 2), (2, 0, 2)]);
        let d = CostFunction::unit(3, 1);
        let stop = BTreeSet::from([1]);
        assert_eq!(trajectory_cost(&traj, &d, 1.0, Some(&stop)), 1.0);
        let from_inside = Trajectory::new(1, vec![(1, 0, 2)]);
        assert_eq!(trajectory_cost(&from_inside, &d, 1.0, Some(&stop)), 0.0);
    }

    #[test]
    fn dp_horizon_zero_is_zero() {
        let mdp = crate::mdp::two_state_chain(0.3);
        let policy = TabularPolicy::uniform(&mdp);
        let d = CostFunction::unit(2, 1);
        assert_eq!(expected_cost_dp(&mdp, &policy, &d, 0, 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn dp_one_step_is_expected_entry_mass() {
        // d = entry indicator of the sink; one step from s0 gives 0.3.
        let mdp = crate::mdp::two_state_chain(0.3);
        let policy = TabularPolicy::uniform(&mdp);
        let d = CostFunction::entry_indicator(&mdp, &BTreeSet::from([1]));
        let v = expected_cost_dp(&mdp, &policy, &d, 1, 1.0);
        assert!((v[0] - 0.3).abs() < 1e-12);
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn dp_monotone_in_horizon_for_nonnegative_costs() {
        let mut rng = stream_rng(5, 0, 0);
        for _ in 0..20 {
            let mdp = random_mdp(&mut rng, 5, 2);
            let policy = TabularPolicy::uniform(&mdp);
            let d = CostFunction::from_fn(5, 2, |_, _| rng.random::<f64>());
            let mut prev = expected_cost_dp(&mdp, &policy, &d, 0, 1.0);
            for horizon in 1..8 {
                let cur = expected_cost_dp(&mdp, &policy, &d, horizon, 1.0);
                for s in 0..5 {
                    assert!(cur[s] >= prev[s] - 1e-12);
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn monte_carlo_mean_matches_dp() {
        let mut rng = stream_rng(11, 0, 0);
        let mdp = random_mdp(&mut rng, 6, 2);
        let policy = TabularPolicy::uniform(&mdp);
        let d = CostFunction::from_fn(6, 2, |_, _| rng.random::<f64>());
        let horizon = 10;
        let dp = expected_cost_dp(&mdp, &policy, &d, horizon, 1.0);
        let n = 100_000usize;
        let trajs = sample_batch(
            &mdp,
            &policy,
            StartDist::Cycle(&[0]),
            n,
            horizon,
            None,
            13,
            2,
        )
        .unwrap();
        let costs: Vec<f64> = trajs
            .iter()
            .map(|t| trajectory_cost(t, &d, 1.0, None))
            .collect();
        let mean = costs.iter().sum::<f64>() / n as f64;
        let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let stderr = (var / n as f64).sqrt();
        assert!(
            (mean - dp[0]).abs() <= 3.0 * stderr + 1e-9,
            "mean {mean} vs dp {} (stderr {stderr})",
            dp[0]
        );
    }

    #[test]
    fn visitation_counts_all_visited_states() {
        let mdp = crate::mdp::two_state_chain(0.3);
        let policy = TabularPolicy::uniform(&mdp);
        // One trajectory visiting states (0, 1, 1).
        let traj = Trajectory::new(0, vec![(0, 0, 1), (1, 0, 1)]);
        let w = visitation_weights(&mdp, &policy, &[traj]).unwrap();
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            visitation_weights(&mdp, &policy, &[]),
            Err(MdpError::EmptyTrajectorySet)
        ));
    }

    pub(crate) fn random_mdp(rng: &mut impl Rng, n: usize, m: usize) -> Mdp {
        let mut transition = vec![0.0; n * m * n];
        for s in 0..n {
            for a in 0..m {
                let mut row: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let sum: f64 = row.iter().sum();
                for p in &mut row {
                    *p /= sum;
                }
                transition[(s * m + a) * n..(s * m + a + 1) * n].copy_from_slice(&row);
            }
        }
        let reward: Vec<f64> = (0..n * m).map(|_| rng.random::<f64>()).collect();
        let mut initial = vec![0.0; n];
        initial[0] = 1.0;
        Mdp::new(
            (0..n).map(|s| format!("s{s}")).collect(),
            (0..m).map(|a| format!("a{a}")).collect(),
            vec![(0..m).collect(); n],
            transition,
            reward,
            initial,
            0.9,
            BTreeMap::new(),
        )
        .unwrap()
    }
}
