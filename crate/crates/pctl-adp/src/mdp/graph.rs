//! Shortest-path metric over the support graph of the kernel.

use std::collections::VecDeque;

use crate::par;

use super::Mdp;

/// Directed hop-count distances `SP(s,s')` over the edge set
/// `{(s,s') : ∃a, P(s'|s,a) > 0}`. Unreachable pairs get the sentinel
/// distance `|S|`, one more than any real path, so kernel values built from
/// the table decay smoothly instead of blowing up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpTable {
    n: usize,
    dist: Vec<u32>,
}

impl SpTable {
    pub fn get(&self, from: usize, to: usize) -> u32 {
        self.dist[from * self.n + to]
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn sentinel(&self) -> u32 {
        self.n as u32
    }
}

impl Mdp {
    /// BFS from every state over the action-union support graph.
    pub fn shortest_path_metric(&self) -> SpTable {
        let n = self.n_states();
        let adjacency: Vec<Vec<usize>> = (0..n)
            .map(|s| self.successors(s).into_iter().collect())
            .collect();
        let rows = par::map_indexed(n, |source| {
            let mut row = vec![n as u32; n];
            row[source] = 0;
            let mut queue = VecDeque::from([source]);
            while let Some(s) = queue.pop_front() {
                for &next in &adjacency[s] {
                    if row[next] == n as u32 {
                        row[next] = row[s] + 1;
                        queue.push_back(next);
                    }
                }
            }
            row
        });
        SpTable {
            n,
            dist: rows.concat(),
        }
    }
}
