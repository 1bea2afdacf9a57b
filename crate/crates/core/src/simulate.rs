//! Trajectory simulation, Monte Carlo covariance estimation, and CLT
//! diagnostics.
//!
//! A simulation run keeps only the running signed crossing counts per
//! non-collapsible 1-cell (constant memory); the winding vector is the
//! projection of those counts onto the critical basis. The planar winding
//! is streamed alongside and must always equal `sum_i eps_i W_i`.
//!
//! Reproducibility contract: the generator is ChaCha12, seeded with
//! `seed_from_u64(master_seed)`; replicate `r` reads stream `r`. Replicates
//! are embarrassingly parallel and merged in replicate order, so serial and
//! parallel runs produce identical output.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dconfig::CellCensus;
use crate::exclusion::ExclusionChain;
use crate::graph::{SimpleGraph, SpanningTree};
use crate::statistics::WindingBasis;
use crate::tree::PlanarTree;

/// Name recorded in output metadata.
pub const GENERATOR_NAME: &str = "chacha12";
/// How replicate streams are derived, recorded in output metadata.
pub const STREAM_RULE: &str = "seed_from_u64(master_seed); stream = replicate index";

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("path steps between non-adjacent states {0} and {1}")]
    NonAdjacent(usize, usize),
    #[error("at least 2 replicates are required, got {0}")]
    TooFewReplicates(u64),
    #[error("cycle-space reduction left a nonzero remainder on edge {0:?}")]
    ReductionRemainder((usize, usize)),
}

pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// One simulated replicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindingSample {
    pub rep: u64,
    pub t: u64,
    pub w: Vec<i64>,
    pub pw: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    /// Lexicographically smallest configuration (particles on 0..n).
    Lex,
    /// Uniform (= stationary) random state, drawn from the replicate
    /// stream before the walk starts.
    Stationary,
}

/// Table-driven crossing simulator shared by the exclusion winding process
/// and the plain graph walks of the accumulated-homology experiments.
#[derive(Debug, Clone)]
pub struct WindingSimulator {
    state_count: usize,
    edge_choices: usize,
    start: u32,
    /// `moves[s * E + e]`: resulting state (= s when the move is blocked).
    moves: Vec<u32>,
    /// `cross[s * E + e]`: 0, or +-(rank + 1) of the non-collapsible cell
    /// crossed by that move.
    cross: Vec<i32>,
    /// Per-rank planar weight: sum of eps_i over the basis cells the rank
    /// lies over.
    weights: Vec<i64>,
    /// Per-rank basis positions (the lies-on-top projection).
    project: Vec<Vec<usize>>,
    /// Directed state pair -> cross entry, for path replays.
    pair_cross: HashMap<(u32, u32), i32>,
    g: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub counts: Vec<i64>,
    pub pw: i64,
    pub end_state: usize,
}

impl WindingSimulator {
    /// Builds the simulator for the exclusion winding process.
    pub fn for_exclusion(
        tree: &PlanarTree,
        census: &CellCensus,
        ex: &ExclusionChain,
        ws: &WindingBasis,
    ) -> Self {
        let e_count = tree.edge_count();
        let m = ex.state_count();
        let cell_rank: HashMap<usize, usize> = census
            .noncollapsible
            .iter()
            .enumerate()
            .map(|(rank, &idx)| (idx, rank))
            .collect();
        let cell_by_key: HashMap<(usize, Vec<usize>), usize> = census
            .one_cells
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.edge, c.vertices.clone()), i))
            .collect();
        let mut cross = vec![0i32; m * e_count];
        let mut pair_cross = HashMap::new();
        for (s, cfg) in ex.states.iter().enumerate() {
            for e in 0..e_count {
                let target = ex.next_state(s, e);
                if target == s {
                    continue;
                }
                let (tau, iota) = tree.edge(e);
                let from_tau = cfg.binary_search(&tau).is_ok();
                let moving = if from_tau { tau } else { iota };
                let rest: Vec<usize> =
                    cfg.iter().copied().filter(|&x| x != moving).collect();
                let cell = cell_by_key[&(e, rest)];
                let entry = match cell_rank.get(&cell) {
                    Some(&rank) => {
                        let signed = (rank + 1) as i32;
                        if from_tau { signed } else { -signed }
                    }
                    None => 0, // collapsible: never contributes to winding
                };
                cross[s * e_count + e] = entry;
                pair_cross.insert((s as u32, target as u32), entry);
            }
        }
        let weights = census
            .lies_over
            .iter()
            .map(|over| over.iter().map(|&pos| i64::from(ws.signs[pos])).sum())
            .collect();
        WindingSimulator {
            state_count: m,
            edge_choices: e_count,
            start: ex.base_state(census.n) as u32,
            moves: ex.moves.clone(),
            cross,
            weights,
            project: census.lies_over.clone(),
            pair_cross,
            g: ws.g(),
        }
    }

    /// Builds the simulator for the lazy walk on a graph with crossing
    /// counts over oriented spanning-tree-complement edges.
    pub fn for_graph_walk(graph: &SimpleGraph, complement: &[(usize, usize)]) -> Self {
        let v = graph.vertex_count();
        let e_count = graph.edge_count();
        let comp_index: HashMap<(usize, usize), usize> =
            complement.iter().copied().zip(0..).collect();
        let mut moves = vec![0u32; v * e_count];
        let mut cross = vec![0i32; v * e_count];
        let mut pair_cross = HashMap::new();
        for s in 0..v {
            for (e, &(a, b)) in graph.edges().iter().enumerate() {
                let target = if s == a {
                    b
                } else if s == b {
                    a
                } else {
                    s
                };
                moves[s * e_count + e] = target as u32;
                if target != s {
                    let entry = if let Some(&k) = comp_index.get(&(s, target)) {
                        (k + 1) as i32
                    } else if let Some(&k) = comp_index.get(&(target, s)) {
                        -((k + 1) as i32)
                    } else {
                        0
                    };
                    cross[s * e_count + e] = entry;
                    pair_cross.insert((s as u32, target as u32), entry);
                }
            }
        }
        let g = complement.len();
        WindingSimulator {
            state_count: v,
            edge_choices: e_count,
            start: 0,
            moves,
            cross,
            weights: vec![1; g],
            project: (0..g).map(|k| vec![k]).collect(),
            pair_cross,
            g,
        }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn rank_count(&self) -> usize {
        self.weights.len()
    }

    pub fn start_state(&self) -> usize {
        self.start as usize
    }

    /// One trajectory of `t` steps. The per-step law: with probability 1/2
    /// pick an edge uniformly and attempt the move, otherwise hold.
    pub fn run(
        &self,
        t: u64,
        rng: &mut ChaCha12Rng,
        start: u32,
        mut trace: Option<&mut Vec<u32>>,
    ) -> RunOutcome {
        let e = self.edge_choices as u32;
        let mut counts = vec![0i64; self.weights.len()];
        let mut pw = 0i64;
        let mut s = start;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(s);
        }
        for _ in 0..t {
            let draw = rng.random_range(0..2 * e);
            if draw < e {
                let idx = s as usize * self.edge_choices + draw as usize;
                let next = self.moves[idx];
                if next != s {
                    let entry = self.cross[idx];
                    if entry != 0 {
                        let rank = (entry.unsigned_abs() - 1) as usize;
                        let sign = i64::from(entry.signum());
                        counts[rank] += sign;
                        pw += sign * self.weights[rank];
                    }
                    s = next;
                }
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(s);
            }
        }
        RunOutcome { counts, pw, end_state: s as usize }
    }

    /// Projects raw non-collapsible counts onto the basis.
    pub fn project(&self, counts: &[i64]) -> Vec<i64> {
        let mut w = vec![0i64; self.g];
        for (rank, over) in self.project.iter().enumerate() {
            for &pos in over {
                w[pos] += counts[rank];
            }
        }
        w
    }

    /// Signed crossing counts accumulated along an explicit state path.
    pub fn counts_of_path(&self, path: &[usize]) -> Result<Vec<i64>, SimError> {
        let mut counts = vec![0i64; self.weights.len()];
        for win in path.windows(2) {
            let (a, b) = (win[0], win[1]);
            if a == b {
                continue;
            }
            match self.pair_cross.get(&(a as u32, b as u32)) {
                Some(&entry) => {
                    if entry != 0 {
                        let rank = (entry.unsigned_abs() - 1) as usize;
                        counts[rank] += i64::from(entry.signum());
                    }
                }
                None => return Err(SimError::NonAdjacent(a, b)),
            }
        }
        Ok(counts)
    }

    /// Winding of an explicit state path: projected counts and the planar
    /// winding.
    pub fn winding_of_path(&self, path: &[usize]) -> Result<(Vec<i64>, i64), SimError> {
        let counts = self.counts_of_path(path)?;
        let w = self.project(&counts);
        let pw = counts
            .iter()
            .zip(&self.weights)
            .map(|(c, wt)| c * wt)
            .sum();
        Ok((w, pw))
    }

    /// First draw of a replicate: the start state under the given mode.
    /// Must be called on the replicate's stream before the walk so that
    /// traced and untraced runs see identical randomness.
    pub fn draw_start(&self, rng: &mut ChaCha12Rng, mode: StartMode) -> u32 {
        match mode {
            StartMode::Lex => self.start,
            StartMode::Stationary => rng.random_range(0..self.state_count as u32),
        }
    }

    /// Draws `reps` independent replicates. `threads <= 1` runs serially;
    /// larger values use a bounded worker pool. Output is identical either
    /// way because each replicate owns its derived stream.
    pub fn sample(
        &self,
        t: u64,
        reps: u64,
        master_seed: u64,
        start_mode: StartMode,
        threads: usize,
    ) -> Result<Vec<WindingSample>, SimError> {
        if reps < 2 {
            return Err(SimError::TooFewReplicates(reps));
        }
        let one = |rep: u64| {
            let mut rng = replicate_rng(master_seed, rep);
            let start = self.draw_start(&mut rng, start_mode);
            let out = self.run(t, &mut rng, start, None);
            let w = self.project(&out.counts);
            debug_assert_eq!(
                out.pw,
                out.counts.iter().zip(&self.weights).map(|(c, wt)| c * wt).sum::<i64>()
            );
            WindingSample { rep, t, w, pw: out.pw }
        };
        if threads <= 1 {
            Ok((0..reps).map(one).collect())
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("worker pool");
            use rayon::prelude::*;
            Ok(pool.install(|| (0..reps).into_par_iter().map(one).collect()))
        }
    }
}

/// Convenience wrapper: builds everything for `(tree, n)` and runs one
/// replicate from the default start.
pub fn run_winding(
    tree: &PlanarTree,
    n: usize,
    t: u64,
    seed: u64,
) -> Result<WindingSample, crate::Error> {
    let census = CellCensus::build(tree, n)?;
    let ex = crate::exclusion::build_exclusion(tree, n)?;
    let ws = WindingBasis::from_census(&census, &ex);
    let sim = WindingSimulator::for_exclusion(tree, &census, &ex, &ws);
    let mut rng = replicate_rng(seed, 0);
    let out = sim.run(t, &mut rng, sim.start, None);
    let w = sim.project(&out.counts);
    Ok(WindingSample { rep: 0, t, w, pw: out.pw })
}

/// Monte Carlo covariance of `W(t)/sqrt(t)` with per-entry standard errors
/// from sample fourth moments.
#[derive(Debug, Clone)]
pub struct McCovariance {
    pub t: u64,
    pub reps: u64,
    pub sigma_hat: DMatrix<f64>,
    pub se: DMatrix<f64>,
    pub mean: Vec<f64>,
    /// Standard error of each mean coordinate.
    pub mean_se: Vec<f64>,
}

pub fn mc_covariance(samples: &[WindingSample], g: usize) -> McCovariance {
    let r = samples.len();
    assert!(r >= 2, "at least 2 replicates required");
    let t = samples[0].t;
    let scale = 1.0 / (t as f64).sqrt();
    let xs: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.w.iter().map(|&w| w as f64 * scale).collect())
        .collect();
    let mean: Vec<f64> =
        (0..g).map(|i| xs.iter().map(|x| x[i]).sum::<f64>() / r as f64).collect();
    let mut sigma_hat = DMatrix::zeros(g, g);
    let mut se = DMatrix::zeros(g, g);
    for i in 0..g {
        for j in i..g {
            let mut s2 = 0.0;
            let mut m4 = 0.0;
            for x in &xs {
                let di = x[i] - mean[i];
                let dj = x[j] - mean[j];
                s2 += di * dj;
                m4 += di * dj * di * dj;
            }
            let cov = s2 / (r as f64 - 1.0);
            let m4 = m4 / r as f64;
            let var_of_cov = ((m4 - cov * cov) / r as f64).max(0.0);
            sigma_hat[(i, j)] = cov;
            sigma_hat[(j, i)] = cov;
            se[(i, j)] = var_of_cov.sqrt();
            se[(j, i)] = se[(i, j)];
        }
    }
    let mean_se: Vec<f64> =
        (0..g).map(|i| (sigma_hat[(i, i)] / r as f64).max(0.0).sqrt()).collect();
    McCovariance {
        t,
        reps: r as u64,
        sigma_hat,
        se,
        mean,
        mean_se,
    }
}

/// Accumulated homology of an explicit vertex path on a graph: signed
/// crossing counts of the oriented spanning-tree-complement edges. The
/// closing tree path contributes nothing, so the open path determines the
/// class of its closure.
pub fn accumulated_homology(
    path: &[usize],
    graph: &SimpleGraph,
    spanning_tree: &SpanningTree,
    complement: &[(usize, usize)],
) -> Result<Vec<i64>, SimError> {
    for e in complement {
        assert!(
            !spanning_tree.tree_edges.contains(&(e.0.min(e.1), e.0.max(e.1))),
            "complement edges must avoid the spanning tree"
        );
    }
    let index: HashMap<(usize, usize), usize> = complement.iter().copied().zip(0..).collect();
    let mut h = vec![0i64; complement.len()];
    for win in path.windows(2) {
        let (a, b) = (win[0], win[1]);
        if a == b {
            continue;
        }
        if !graph.has_edge(a, b) {
            return Err(SimError::NonAdjacent(a, b));
        }
        if let Some(&k) = index.get(&(a, b)) {
            h[k] += 1;
        } else if let Some(&k) = index.get(&(b, a)) {
            h[k] -= 1;
        }
    }
    Ok(h)
}

/// Independent cycle-space oracle: expresses a closed loop's signed edge
/// incidence vector in the fundamental-cycle basis of the spanning tree and
/// verifies the decomposition is exact (zero remainder).
pub fn cycle_space_reduction(
    graph: &SimpleGraph,
    spanning_tree: &SpanningTree,
    complement: &[(usize, usize)],
    closed_loop: &[usize],
) -> Result<Vec<i64>, SimError> {
    assert_eq!(
        closed_loop.first(),
        closed_loop.last(),
        "loop must be closed"
    );
    // Signed incidence of the loop over undirected edges (+ for low->high).
    let mut z: HashMap<(usize, usize), i64> = HashMap::new();
    for win in closed_loop.windows(2) {
        let (a, b) = (win[0], win[1]);
        if a == b {
            continue;
        }
        if !graph.has_edge(a, b) {
            return Err(SimError::NonAdjacent(a, b));
        }
        let key = (a.min(b), a.max(b));
        *z.entry(key).or_insert(0) += if a < b { 1 } else { -1 };
    }
    // Coordinates are the coefficients on the complement edges.
    let coords: Vec<i64> = complement
        .iter()
        .map(|&(x, y)| {
            let key = (x.min(y), x.max(y));
            let c = z.get(&key).copied().unwrap_or(0);
            if x < y { c } else { -c }
        })
        .collect();
    // Subtract each fundamental cycle and check the remainder vanishes.
    for (&(x, y), &coef) in complement.iter().zip(&coords) {
        if coef == 0 {
            continue;
        }
        // Fundamental cycle of (x,y): the edge itself plus the tree path
        // from y back to x.
        let mut cycle_path = vec![x, y];
        cycle_path.extend(spanning_tree.tree_path(y, x).into_iter().skip(1));
        for win in cycle_path.windows(2) {
            let (a, b) = (win[0], win[1]);
            let key = (a.min(b), a.max(b));
            let inc = if a < b { 1 } else { -1 };
            *z.entry(key).or_insert(0) -= coef * inc;
        }
    }
    if let Some((&edge, _)) = z.iter().find(|(_, &v)| v != 0) {
        return Err(SimError::ReductionRemainder(edge));
    }
    Ok(coords)
}

// ---- CLT diagnostics ----

/// Standard normal CDF (double-precision rational approximation).
pub fn normal_cdf(x: f64) -> f64 {
    let z = x.abs();
    let c = if z > 37.0 {
        0.0
    } else {
        let e = (-z * z / 2.0).exp();
        if z < 7.071_067_811_865_475 {
            let b = 3.526_249_659_989_11e-2 * z + 0.700_383_064_443_688;
            let b = b * z + 6.373_962_203_531_65;
            let b = b * z + 33.912_866_078_383;
            let b = b * z + 112.079_291_497_871;
            let b = b * z + 221.213_596_169_931;
            let b = b * z + 220.206_867_912_376;
            let m = 8.838_834_764_831_84e-2 * z + 1.755_667_163_182_64;
            let m = m * z + 16.064_177_579_207;
            let m = m * z + 86.780_732_202_946_1;
            let m = m * z + 296.564_248_779_674;
            let m = m * z + 637.333_633_378_831;
            let m = m * z + 793.826_512_519_948;
            let m = m * z + 440.413_735_824_752;
            e * b / m
        } else {
            let b = z + 0.65;
            let b = z + 4.0 / b;
            let b = z + 3.0 / b;
            let b = z + 2.0 / b;
            let b = z + 1.0 / b;
            e / (b * 2.506_628_274_631_000_5)
        }
    };
    if x > 0.0 {
        1.0 - c
    } else {
        c
    }
}

/// Kolmogorov-Smirnov distance between a sample and N(0, variance).
pub fn ks_distance(values: &[f64], variance: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let sd = variance.sqrt();
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let u = normal_cdf(x / sd);
        let hi = (i as f64 + 1.0) / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

#[derive(Debug, Clone, Serialize)]
pub struct KsResult {
    pub theta: Vec<f64>,
    pub variance: f64,
    pub ks: f64,
    pub skipped: bool,
    pub note: String,
}

/// Cramer-Wold style diagnostics: for each direction theta, the KS
/// distance between the empirical law of `theta . W(t)/sqrt(t)` and the
/// normal with variance `theta^T Sigma theta`. Degenerate directions are
/// skipped with a note.
pub fn clt_diagnostics(
    samples: &[WindingSample],
    sigma: &DMatrix<f64>,
    directions: &[Vec<f64>],
) -> Vec<KsResult> {
    let mut out = Vec::new();
    for theta in directions {
        let th = DVector::from_vec(theta.clone());
        let variance = (th.transpose() * sigma * &th)[(0, 0)];
        if variance <= 1e-14 {
            out.push(KsResult {
                theta: theta.clone(),
                variance,
                ks: f64::NAN,
                skipped: true,
                note: "degenerate direction (theta^T Sigma theta <= 1e-14)".into(),
            });
            continue;
        }
        let scale = 1.0 / (samples[0].t as f64).sqrt();
        let values: Vec<f64> = samples
            .iter()
            .map(|s| {
                s.w.iter()
                    .zip(theta)
                    .map(|(&w, &a)| w as f64 * scale * a)
                    .sum()
            })
            .collect();
        out.push(KsResult {
            theta: theta.clone(),
            variance,
            ks: ks_distance(&values, variance),
            skipped: false,
            note: String::new(),
        });
    }
    out
}

// ---- output formats ----

/// Samples CSV: header `rep,t,w_1,...,w_g,pw`, one row per replicate.
pub fn samples_csv(samples: &[WindingSample], g: usize) -> String {
    let mut head: Vec<String> = vec!["rep".into(), "t".into()];
    head.extend((1..=g).map(|i| format!("w_{i}")));
    head.push("pw".into());
    let mut out = head.join(",");
    out.push('\n');
    for s in samples {
        let mut row: Vec<String> = vec![s.rep.to_string(), s.t.to_string()];
        row.extend(s.w.iter().map(|w| w.to_string()));
        row.push(s.pw.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Provenance sidecar for simulation outputs.
#[derive(Debug, Clone, Serialize)]
pub struct SampleMetadata {
    pub schema: u32,
    pub tree: String,
    pub tree_hash: String,
    pub n: usize,
    pub t: u64,
    pub reps: u64,
    pub seed: u64,
    pub generator: String,
    pub stream_rule: String,
    pub start: String,
    pub basis: Vec<String>,
    pub signs: Vec<i8>,
}

impl SampleMetadata {
    pub fn new(
        tree: &PlanarTree,
        n: usize,
        t: u64,
        reps: u64,
        seed: u64,
        start_mode: StartMode,
        ws: &WindingBasis,
    ) -> Self {
        SampleMetadata {
            schema: 1,
            tree: tree.name().to_string(),
            tree_hash: format!("{:016x}", tree.structure_hash()),
            n,
            t,
            reps,
            seed,
            generator: GENERATOR_NAME.into(),
            stream_rule: STREAM_RULE.into(),
            start: match start_mode {
                StartMode::Lex => "lex_smallest".into(),
                StartMode::Stationary => "stationary".into(),
            },
            basis: ws.entries.iter().map(|e| e.label.clone()).collect(),
            signs: ws.signs.clone(),
        }
    }
}
