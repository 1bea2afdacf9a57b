//! The lazy n-particle exclusion process on a tree.
//!
//! States are the n-element vertex subsets in colexicographic order
//! (matching the 0-cell indexing of the configuration-space census). One
//! step: flip a coin; on heads pick an edge uniformly; if exactly one
//! endpoint is occupied, the particle there slides across, otherwise hold.
//! Every admissible directed move therefore has probability `1/(2E)`,
//! which makes P symmetric and the stationary distribution uniform. This
//! is precisely the random walk on the one-skeleton of the discretized
//! configuration space.

use nalgebra::DMatrix;

use crate::dconfig::{config_index, configurations};
use crate::graph::SimpleGraph;
use crate::markov::{ChainError, FiniteChain};
use crate::tree::PlanarTree;

/// The exclusion chain together with its state list and move table.
#[derive(Debug)]
pub struct ExclusionChain {
    pub chain: FiniteChain,
    /// Sorted occupancy sets, colex order; index = chain state index.
    pub states: Vec<Vec<usize>>,
    /// `moves[s * E + e]` = resulting state of attempting edge `e` from
    /// state `s` (equal to `s` when the edge move is blocked).
    pub moves: Vec<u32>,
    pub edge_count: usize,
}

impl ExclusionChain {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn next_state(&self, state: usize, edge: usize) -> usize {
        self.moves[state * self.edge_count + edge] as usize
    }

    /// Lexicographically smallest configuration: particles on `0..n`.
    /// This is also the unique 0-cell with every vertex blocked.
    pub fn base_state(&self, n: usize) -> usize {
        let cfg: Vec<usize> = (0..n).collect();
        config_index(&cfg)
    }
}

/// Builds the lazy exclusion chain for `n` particles on `tree`.
pub fn build_exclusion(tree: &PlanarTree, n: usize) -> Result<ExclusionChain, ChainError> {
    let v = tree.vertex_count();
    if n < 1 || n >= v {
        return Err(ChainError::ParticleCount { n, v });
    }
    let e_count = tree.edge_count();
    let states = configurations(v, n);
    let m = states.len();
    let half_edge = 1.0 / (2.0 * e_count as f64);

    let mut occupied = vec![false; v];
    let mut moves = vec![0u32; m * e_count];
    let mut p = DMatrix::<f64>::zeros(m, m);
    for (s, cfg) in states.iter().enumerate() {
        occupied.fill(false);
        for &x in cfg {
            occupied[x] = true;
        }
        for e in 0..e_count {
            let (a, b) = tree.edge(e);
            let target = match (occupied[a], occupied[b]) {
                (true, false) => {
                    let mut next: Vec<usize> =
                        cfg.iter().map(|&x| if x == a { b } else { x }).collect();
                    next.sort_unstable();
                    Some(config_index(&next))
                }
                (false, true) => {
                    let mut next: Vec<usize> =
                        cfg.iter().map(|&x| if x == b { a } else { x }).collect();
                    next.sort_unstable();
                    Some(config_index(&next))
                }
                _ => None,
            };
            match target {
                Some(t) => {
                    moves[s * e_count + e] = t as u32;
                    p[(s, t)] += half_edge;
                }
                None => {
                    moves[s * e_count + e] = s as u32;
                }
            }
        }
        let out: f64 = p.row(s).iter().sum();
        p[(s, s)] = 1.0 - out;
    }

    let labels = states
        .iter()
        .map(|cfg| {
            let parts: Vec<String> = cfg.iter().map(|x| x.to_string()).collect();
            format!("{{{}}}", parts.join(","))
        })
        .collect();
    let chain = FiniteChain::new(labels, p)?;
    Ok(ExclusionChain {
        chain,
        states,
        moves,
        edge_count: e_count,
    })
}

/// The one-skeleton of the discretized configuration space as a graph on
/// state indices; for n = 2 this is the pair graph of the tree. Its edge
/// set coincides with the off-diagonal support of the exclusion chain.
pub fn one_skeleton(tree: &PlanarTree, n: usize) -> SimpleGraph {
    let v = tree.vertex_count();
    let states = configurations(v, n);
    let mut edges = Vec::new();
    for (s, cfg) in states.iter().enumerate() {
        for e in 0..tree.edge_count() {
            let (a, b) = tree.edge(e);
            let occ_a = cfg.binary_search(&a).is_ok();
            let occ_b = cfg.binary_search(&b).is_ok();
            if occ_a != occ_b {
                let (from, to) = if occ_a { (a, b) } else { (b, a) };
                let mut next: Vec<usize> =
                    cfg.iter().map(|&x| if x == from { to } else { x }).collect();
                next.sort_unstable();
                let t = config_index(&next);
                if s < t {
                    edges.push((s, t));
                }
            }
        }
    }
    SimpleGraph::new(states.len(), edges)
}
