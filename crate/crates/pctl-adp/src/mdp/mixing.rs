//! ε-return mixing-time estimation for policy-induced chains.

use nalgebra::{DMatrix, DVector};

use super::{induced_chain, CostFunction, Mdp, MdpError, TabularPolicy};

/// Default cap on the doubling search.
pub const DEFAULT_MIXING_CAP: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingMethod {
    /// Exact horizon doubling on the known kernel (the primary method).
    ExactDoubling,
    /// Spectral upper bound from the second eigenvalue (diagnostic only).
    EigenvalueBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingTimeEstimate {
    /// Horizon `T_ε` passing the stopping test
    /// `max_s |D(s,2T;π) − D(s,T;π)| ≤ ε`.
    pub horizon: usize,
    pub epsilon: f64,
    pub method: MixingMethod,
    /// The gap attained at the accepted horizon.
    pub gap: f64,
}

/// Finds the smallest doubling horizon `T ∈ {1,2,4,…}` with
/// `max_s |D(s,2T;π) − D(s,T;π)| ≤ ε`, evaluated exactly through the
/// finite-horizon cost recursion in closed matrix form.
///
/// The test inspects one doubling window only; it is reliable when the
/// compiled constraint makes cost-accruing mass decay (sink surgery
/// guarantees this for translated formulas) and can stop early on chains
/// that barely move. Horizons beyond `cap` raise [`MdpError::NonMixing`]
/// naming the worst state.
pub fn mixing_time(
    mdp: &Mdp,
    policy: &TabularPolicy,
    d: &CostFunction,
    epsilon: f64,
    gamma: f64,
    cap: Option<usize>,
) -> Result<MixingTimeEstimate, MdpError> {
    if epsilon <= 0.0 {
        return Err(MdpError::Invalid("epsilon must be positive".into()));
    }
    let cap = cap.unwrap_or(DEFAULT_MIXING_CAP);
    let n = mdp.n_states();
    let chain = induced_chain(mdp, policy)?;
    let d_pi = DVector::from_fn(n, |s, _| {
        mdp.admissible(s)
            .iter()
            .map(|&a| policy.prob(s, a) * d.get(s, a))
            .sum()
    });

    // Invariants while doubling with horizon T:
    //   values  = D(·,T)  = Σ_{t<T} γ^t P^t d_π
    //   power   = P^T, scale = γ^T
    // so D(·,2T) = values + scale · power · values.
    let mut values = d_pi;
    let mut power = chain;
    let mut scale = gamma;
    let mut horizon = 1usize;
    loop {
        let increment = &power * &values * scale;
        let (worst_state, gap) = increment
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(ws, g), (s, &x)| {
                if x.abs() > g {
                    (s, x.abs())
                } else {
                    (ws, g)
                }
            });
        if gap <= epsilon {
            return Ok(MixingTimeEstimate {
                horizon,
                epsilon,
                method: MixingMethod::ExactDoubling,
                gap,
            });
        }
        if horizon * 2 > cap {
            return Err(MdpError::NonMixing {
                state: worst_state,
                gap,
                cap,
            });
        }
        values += increment;
        power = &power * &power;
        scale *= scale;
        horizon *= 2;
    }
}

/// Spectral diagnostic: `⌈ln(1/ε) / (1 − |λ₂|)⌉` from the second-largest
/// eigenvalue modulus of the induced chain. Returns `None` when the spectral
/// gap vanishes numerically.
pub fn eigenvalue_mixing_bound(chain: &DMatrix<f64>, epsilon: f64) -> Option<usize> {
    let mut moduli: Vec<f64> = chain.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let lambda2 = *moduli.get(1)?;
    let gap = 1.0 - lambda2;
    if gap <= 1e-12 {
        return None;
    }
    Some(((1.0 / epsilon).ln() / gap).ceil().max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn all_sinks_mix_immediately() {
        let mdp = crate::mdp::two_state_chain(0.5).with_sinks(&BTreeSet::from([0, 1]));
        let policy = TabularPolicy::uniform(&mdp);
        // Compiled costs are zero at sinks, freezing accrual.
        let d = CostFunction::zero(2, 1);
        let est = mixing_time(&mdp, &policy, &d, 1e-6, 1.0, None).unwrap();
        assert_eq!(est.horizon, 1);
    }

    #[test]
    fn geometric_escape_lands_within_sixteen() {
        // Escape probability 0.5 per step into a sink; ε = 2⁻¹⁰.
        // Residual mass 0.5^T ≤ ε at T = 10, so doubling lands at ≤ 16.
        let mdp = crate::mdp::two_state_chain(0.5);
        let policy = TabularPolicy::uniform(&mdp);
        let d = CostFunction::entry_indicator(&mdp, &BTreeSet::from([1]));
        let est = mixing_time(&mdp, &policy, &d, (2.0f64).powi(-10), 1.0, None).unwrap();
        assert!(est.horizon <= 16, "horizon {}", est.horizon);
        // Post-state: the stopping test holds at the returned horizon.
        let policy_d = crate::mdp::expected_cost_dp(&mdp, &policy, &d, est.horizon, 1.0);
        let double_d =
            crate::mdp::expected_cost_dp(&mdp, &policy, &d, 2 * est.horizon, 1.0);
        let gap = policy_d
            .iter()
            .zip(&double_d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(gap <= (2.0f64).powi(-10));
        assert!((gap - est.gap).abs() < 1e-12);
    }

    #[test]
    fn non_mixing_chain_errors_with_worst_state() {
        // Unit cost on a persistent chain never stops accruing at γ = 1.
        let mdp = crate::mdp::two_state_chain(0.5);
        let policy = TabularPolicy::uniform(&mdp);
        let d = CostFunction::unit(2, 1);
        let err = mixing_time(&mdp, &policy, &d, 1e-3, 1.0, Some(64));
        assert!(matches!(err, Err(MdpError::NonMixing { .. })));
    }

    #[test]
    fn eigenvalue_bound_reported_for_contracting_chain() {
        let mdp = crate::mdp::two_state_chain(0.5);
        let policy = TabularPolicy::uniform(&mdp);
        let chain = induced_chain(&mdp, &policy).unwrap();
        let bound = eigenvalue_mixing_bound(&chain, 1e-3).unwrap();
        // λ₂ = 0.5 → bound = ⌈ln(1000)/0.5⌉ = 14.
        assert_eq!(bound, 14);
    }
}
