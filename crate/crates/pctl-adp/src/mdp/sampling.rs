//! Trajectory sampling from policy-induced chains.

use std::collections::BTreeSet;

use rand::Rng;

use crate::par;

use super::{stream_rng, Mdp, MdpError, TabularPolicy, Trajectory};

/// Draws an index from a nonnegative weight row by inverse CDF.
fn draw_index(weights: &[f64], rng: &mut impl Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    last
}

/// Samples one trajectory of at most `max_len` transitions, stopping early
/// upon entering a state in `stop`. The origin state never triggers the stop
/// set; a trajectory always has at least one transition.
pub fn sample_trajectory(
    mdp: &Mdp,
    policy: &TabularPolicy,
    init: &[f64],
    max_len: usize,
    stop: Option<&BTreeSet<usize>>,
    rng: &mut impl Rng,
) -> Result<Trajectory, MdpError> {
    if max_len == 0 {
        return Err(MdpError::Invalid("max_len must be at least 1".into()));
    }
    if init.len() != mdp.n_states() {
        return Err(MdpError::Dimension("init distribution length".into()));
    }
    let origin = draw_index(init, rng).ok_or(MdpError::EmptyInitSupport)?;
    Ok(walk(mdp, policy, origin, max_len, stop, rng))
}

fn walk(
    mdp: &Mdp,
    policy: &TabularPolicy,
    origin: usize,
    max_len: usize,
    stop: Option<&BTreeSet<usize>>,
    rng: &mut impl Rng,
) -> Trajectory {
    let mut steps = Vec::with_capacity(max_len);
    let mut state = origin;
    for _ in 0..max_len {
        let action = draw_index(policy.row(state), rng)
            .expect("policy row has positive mass on an admissible action");
        let next = draw_index(mdp.transition_row(state, action), rng)
            .expect("transition row has positive mass");
        steps.push((state, action, next));
        state = next;
        if stop.is_some_and(|set| set.contains(&state)) {
            break;
        }
    }
    Trajectory::new(origin, steps)
}

/// Where batch trajectories start.
#[derive(Debug, Clone, Copy)]
pub enum StartDist<'a> {
    /// Each origin drawn independently from a distribution over states.
    Dist(&'a [f64]),
    /// Origin of trajectory `i` is `states[i % states.len()]`: a stratified,
    /// reproducible realization of the uniform distribution over `states`.
    Cycle(&'a [usize]),
}

/// Samples `n` trajectories with independent RNG streams derived from
/// `(seed, domain, index)`. Runs on rayon when the `parallel` feature is
/// enabled; output is identical to [`sample_batch_seq`].
#[allow(clippy::too_many_arguments)]
pub fn sample_batch(
    mdp: &Mdp,
    policy: &TabularPolicy,
    starts: StartDist<'_>,
    n: usize,
    max_len: usize,
    stop: Option<&BTreeSet<usize>>,
    seed: u64,
    domain: u16,
) -> Result<Vec<Trajectory>, MdpError> {
    check_batch_args(mdp, starts, n, max_len)?;
    Ok(par::map_indexed(n, |i| {
        let mut rng = stream_rng(seed, domain, i as u64);
        let origin = resolve_start(starts, i, &mut rng);
        walk(mdp, policy, origin, max_len, stop, &mut rng)
    }))
}

/// Sequential twin of [`sample_batch`].
#[allow(clippy::too_many_arguments)]
pub fn sample_batch_seq(
    mdp: &Mdp,
    policy: &TabularPolicy,
    starts: StartDist<'_>,
    n: usize,
    max_len: usize,
    stop: Option<&BTreeSet<usize>>,
    seed: u64,
    domain: u16,
) -> Result<Vec<Trajectory>, MdpError> {
    check_batch_args(mdp, starts, n, max_len)?;
    Ok(par::map_indexed_seq(n, |i| {
        let mut rng = stream_rng(seed, domain, i as u64);
        let origin = resolve_start(starts, i, &mut rng);
        walk(mdp, policy, origin, max_len, stop, &mut rng)
    }))
}

fn check_batch_args(
    mdp: &Mdp,
    starts: StartDist<'_>,
    n: usize,
    max_len: usize,
) -> Result<(), MdpError> {
    if n == 0 || max_len == 0 {
        return Err(MdpError::Invalid("batch size and max_len must be positive".into()));
    }
    match starts {
        StartDist::Dist(init) => {
            if init.len() != mdp.n_states() {
                return Err(MdpError::Dimension("init distribution length".into()));
            }
            if !init.iter().any(|&p| p > 0.0) {
                return Err(MdpError::EmptyInitSupport);
            }
        }
        StartDist::Cycle(states) => {
            if states.is_empty() {
                return Err(MdpError::EmptyInitSupport);
            }
            if states.iter().any(|&s| s >= mdp.n_states()) {
                return Err(MdpError::Dimension("cycle start state out of range".into()));
            }
        }
    }
    Ok(())
}

fn resolve_start(starts: StartDist<'_>, i: usize, rng: &mut impl Rng) -> usize {
    match starts {
        StartDist::Dist(init) => draw_index(init, rng).expect("support checked"),
        StartDist::Cycle(states) => states[i % states.len()],
    }
}
