//! JSON model format.
//!
//! ```json
//! {
//!   "states": ["s0", "s1"],
//!   "actions": ["a", "b"],
//!   "admissible": [["a", "b"], ["a"]],
//!   "transitions": [{"s": "s0", "a": "a", "s'": "s1", "p": 1.0}],
//!   "rewards": [{"s": "s0", "a": "a", "r": 1.0}],
//!   "initial": {"s0": 1.0},
//!   "gamma": 0.95,
//!   "labels": {"goal": ["s1"]}
//! }
//! ```
//!
//! Omitted transition entries are zero; omitted rewards are zero; probability
//! rows are validated on load.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate, Mdp, MdpError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub admissible: Vec<Vec<String>>,
    pub transitions: Vec<TransitionEntry>,
    #[serde(default)]
    pub rewards: Vec<RewardEntry>,
    pub initial: BTreeMap<String, f64>,
    pub gamma: f64,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionEntry {
    pub s: String,
    pub a: String,
    #[serde(rename = "s'")]
    pub next: String,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardEntry {
    pub s: String,
    pub a: String,
    pub r: f64,
}

impl MdpFile {
    pub fn from_path(path: &Path) -> Result<Mdp, MdpError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Mdp, MdpError> {
        let file: MdpFile =
            serde_json::from_str(text).map_err(|e| MdpError::Format(e.to_string()))?;
        file.build()
    }

    pub fn build(&self) -> Result<Mdp, MdpError> {
        let n = self.states.len();
        let m = self.actions.len();
        let state_id = |name: &str| -> Result<usize, MdpError> {
            self.states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| MdpError::Format(format!("unknown state '{name}'")))
        };
        let action_id = |name: &str| -> Result<usize, MdpError> {
            self.actions
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| MdpError::Format(format!("unknown action '{name}'")))
        };

        if self.admissible.len() != n {
            return Err(MdpError::Format(format!(
                "admissible lists: expected {n}, got {}",
                self.admissible.len()
            )));
        }
        let mut admissible = Vec::with_capacity(n);
        for names in &self.admissible {
            let mut ids = Vec::with_capacity(names.len());
            for name in names {
                ids.push(action_id(name)?);
            }
            admissible.push(ids);
        }

        let mut transition = vec![0.0; n * m * n];
        for entry in &self.transitions {
            let (s, a, next) = (state_id(&entry.s)?, action_id(&entry.a)?, state_id(&entry.next)?);
            transition[(s * m + a) * n + next] += entry.p;
        }
        let mut reward = vec![0.0; n * m];
        for entry in &self.rewards {
            let (s, a) = (state_id(&entry.s)?, action_id(&entry.a)?);
            reward[s * m + a] = entry.r;
        }
        let mut initial = vec![0.0; n];
        for (name, &p) in &self.initial {
            initial[state_id(name)?] = p;
        }
        let mut labels = BTreeMap::new();
        for (prop, names) in &self.labels {
            let mut set = std::collections::BTreeSet::new();
            for name in names {
                set.insert(state_id(name)?);
            }
            labels.insert(prop.clone(), set);
        }

        let mdp = Mdp::new(
            self.states.clone(),
            self.actions.clone(),
            admissible,
            transition,
            reward,
            initial,
            self.gamma,
            labels,
        )?;
        let violations = validate(&mdp);
        if !violations.is_empty() {
            let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(MdpError::Format(format!(
                "model fails validation: {}",
                lines.join("; ")
            )));
        }
        Ok(mdp)
    }

    /// Serializes an in-memory model back to the file schema.
    pub fn from_mdp(mdp: &Mdp) -> MdpFile {
        let n = mdp.n_states();
        let mut transitions = Vec::new();
        let mut rewards = Vec::new();
        for s in 0..n {
            for &a in mdp.admissible(s) {
                for (next, &p) in mdp.transition_row(s, a).iter().enumerate() {
                    if p != 0.0 {
                        transitions.push(TransitionEntry {
                            s: mdp.state_names()[s].clone(),
                            a: mdp.action_names()[a].clone(),
                            next: mdp.state_names()[next].clone(),
                            p,
                        });
                    }
                }
                if mdp.reward(s, a) != 0.0 {
                    rewards.push(RewardEntry {
                        s: mdp.state_names()[s].clone(),
                        a: mdp.action_names()[a].clone(),
                        r: mdp.reward(s, a),
                    });
                }
            }
        }
        let initial = mdp
            .initial()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(s, &p)| (mdp.state_names()[s].clone(), p))
            .collect();
        let labels = mdp
            .labels()
            .iter()
            .map(|(prop, set)| {
                (
                    prop.clone(),
                    set.iter().map(|&s| mdp.state_names()[s].clone()).collect(),
                )
            })
            .collect();
        MdpFile {
            states: mdp.state_names().to_vec(),
            actions: mdp.action_names().to_vec(),
            admissible: (0..n)
                .map(|s| {
                    mdp.admissible(s)
                        .iter()
                        .map(|&a| mdp.action_names()[a].clone())
                        .collect()
                })
                .collect(),
            transitions,
            rewards,
            initial,
            gamma: mdp.gamma(),
            labels,
        }
    }
}
