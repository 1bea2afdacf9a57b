//! The discretized configuration space of `n` particles on a tree.
//!
//! Cells are sets of `n` cells of the tree (vertices or edges) with
//! pairwise disjoint closures. Only dimensions 0 and 1 are materialized;
//! dimension-2 cells enter solely through the validity test behind the
//! "blocked vertex" predicate. Every 1-cell is classified as critical,
//! collapsible, or residual:
//!
//! * collapsible 1-cells form a spanning tree of the one-skeleton,
//! * critical 1-cells index a basis of the first homology,
//! * residual 1-cells project onto critical ones via "lies on top of".
//!
//! A 1-cell `{sigma_1, v_2, ..., v_n}` with edge part `sigma_1` is always
//! oriented from the endpoint state containing `tau(sigma_1)` (smaller DFS
//! label) to the one containing `iota(sigma_1)`.

use std::collections::HashMap;

use thiserror::Error;

use crate::tree::PlanarTree;

#[derive(Debug, Error, PartialEq)]
pub enum DconfigError {
    #[error(
        "path condition violated for n={n}: vertices {a} and {b} (degree != 2) \
         are joined by a path with only {got} vertices"
    )]
    PathCondition { a: usize, b: usize, n: usize, got: usize },
    #[error("count vector has length {got}, census has {want} non-collapsible cells")]
    DimensionMismatch { got: usize, want: usize },
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: usize = 1;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// Colexicographic rank of a sorted subset; this is the state index used
/// by the exclusion chain. The inverse enumeration is [`configurations`].
pub fn config_index(config: &[usize]) -> usize {
    config
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c, i + 1))
        .sum()
}

/// All sorted `n`-subsets of `0..v` in colexicographic order.
pub fn configurations(v: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(v, n));
    let mut current = Vec::with_capacity(n);
    fn rec(v: usize, n: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        let slot = current.len();
        let lo = if slot == 0 { 0 } else { current[slot - 1] + 1 };
        for c in lo..v {
            current.push(c);
            rec(v, n, current, out);
            current.pop();
        }
    }
    rec(v, n, &mut current, &mut out);
    out.sort_by_key(|c| config_index(c));
    out
}

/// A cell of the discretized configuration space of dimension 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigCell {
    /// Tree edge index of the edge part, if any.
    pub edge: Option<usize>,
    /// Vertex parts, sorted by DFS label.
    pub vertices: Vec<usize>,
}

impl ConfigCell {
    pub fn dim(&self) -> usize {
        usize::from(self.edge.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Critical,
    Collapsible,
    Residual,
}

impl CellClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CellClass::Critical => "critical",
            CellClass::Collapsible => "collapsible",
            CellClass::Residual => "residual",
        }
    }
}

/// A classified 1-cell together with its oriented endpoints.
#[derive(Debug, Clone)]
pub struct OneCellInfo {
    pub edge: usize,
    pub tau: usize,
    pub iota: usize,
    pub vertices: Vec<usize>,
    pub blocked: Vec<bool>,
    pub order_respecting: bool,
    pub class: CellClass,
    /// Colex state index of `{tau} + vertices` (orientation source).
    pub tau_state: usize,
    /// Colex state index of `{iota} + vertices` (orientation target).
    pub iota_state: usize,
}

/// Classifies a single 1-cell. `vertices` must be sorted and disjoint from
/// the closure of edge `edge`.
pub fn classify(tree: &PlanarTree, edge: usize, vertices: &[usize]) -> OneCellInfo {
    let (tau, iota) = tree.edge(edge);
    let blocked: Vec<bool> = vertices
        .iter()
        .map(|&v| {
            if v == 0 {
                return true; // the root never slides
            }
            let p = tree.parent(v).unwrap();
            p == tau || p == iota || vertices.contains(&p)
        })
        .collect();
    // sigma_1 is order respecting when every vertex part hanging at tau has
    // a larger label than iota.
    let order_respecting = vertices
        .iter()
        .all(|&v| tree.parent(v) != Some(tau) || v > iota);
    let class = if !order_respecting && blocked.iter().all(|&b| b) {
        CellClass::Critical
    } else {
        let collapsible = order_respecting
            && vertices
                .iter()
                .zip(&blocked)
                .all(|(&v, &b)| b || v > iota);
        if collapsible {
            CellClass::Collapsible
        } else {
            CellClass::Residual
        }
    };
    let state_with = |end: usize| {
        let mut s: Vec<usize> = vertices.to_vec();
        s.push(end);
        s.sort_unstable();
        config_index(&s)
    };
    OneCellInfo {
        edge,
        tau,
        iota,
        vertices: vertices.to_vec(),
        blocked,
        order_respecting,
        class,
        tau_state: state_with(tau),
        iota_state: state_with(iota),
    }
}

/// Public cell enumeration. Cells are returned in lexicographic order of
/// their DFS-label encoding.
pub fn enumerate_cells(
    tree: &PlanarTree,
    n: usize,
    dim: usize,
) -> Result<Vec<ConfigCell>, DconfigError> {
    assert!(n >= 1, "particle count must be at least 1");
    assert!(dim <= 1, "only dimensions 0 and 1 are enumerated");
    check_path_condition_detail(tree, n)?;
    let v = tree.vertex_count();
    let mut out = Vec::new();
    if dim == 0 {
        let mut cfgs = configurations(v, n);
        cfgs.sort();
        out.extend(cfgs.into_iter().map(|vertices| ConfigCell { edge: None, vertices }));
    } else {
        for e in 0..tree.edge_count() {
            let (tau, iota) = tree.edge(e);
            let allowed: Vec<usize> =
                (0..v).filter(|&x| x != tau && x != iota).collect();
            let mut choices = configurations(allowed.len(), n - 1);
            choices.sort();
            for ch in choices {
                let vertices: Vec<usize> = ch.iter().map(|&i| allowed[i]).collect();
                out.push(ConfigCell { edge: Some(e), vertices });
            }
        }
    }
    Ok(out)
}

fn check_path_condition_detail(tree: &PlanarTree, n: usize) -> Result<(), DconfigError> {
    let branch: Vec<usize> =
        (0..tree.vertex_count()).filter(|&v| tree.degree(v) != 2).collect();
    for (i, &a) in branch.iter().enumerate() {
        for &b in &branch[i + 1..] {
            let got = tree.path_between(a, b).len();
            if got < n {
                return Err(DconfigError::PathCondition { a, b, n, got });
            }
        }
    }
    Ok(())
}

/// The full classified census of 0- and 1-cells for `(tree, n)`.
#[derive(Debug)]
pub struct CellCensus {
    pub n: usize,
    /// 0-cells (= exclusion states) in colexicographic order.
    pub zero_cells: Vec<Vec<usize>>,
    pub one_cells: Vec<OneCellInfo>,
    /// Census indices of the critical 1-cells in basis order:
    /// sorted by (tau, iota, vertex labels).
    pub basis: Vec<usize>,
    /// Census indices of the non-collapsible 1-cells (critical + residual),
    /// in census order. Counts fed to [`project_counts`] use this indexing.
    pub noncollapsible: Vec<usize>,
    /// For each non-collapsible rank, the basis positions it lies on top of.
    pub lies_over: Vec<Vec<usize>>,
    /// Number of non-collapsible cells lying over more than one critical
    /// cell. Provably zero for n = 2; recorded if it ever occurs.
    pub multiplicity_events: usize,
    /// Subtree size per vertex (contiguous DFS ranges), kept for
    /// lies-on-top queries.
    subtree_size: Vec<usize>,
}

fn subtree_sizes(tree: &PlanarTree) -> Vec<usize> {
    let v = tree.vertex_count();
    let mut size = vec![1usize; v];
    for w in (1..v).rev() {
        let p = tree.parent(w).unwrap();
        size[p] += size[w];
    }
    size
}

fn in_subtree(sizes: &[usize], root: usize, v: usize) -> bool {
    v >= root && v < root + sizes[root]
}

/// Component signature of a cell's vertex parts in `G - tau`: one count per
/// child subtree of `tau`, plus one for the component containing the root
/// side. Two cells with the same edge part lie over one another exactly
/// when these signatures agree.
fn component_signature(
    tree: &PlanarTree,
    sizes: &[usize],
    tau: usize,
    vertices: &[usize],
) -> Vec<usize> {
    let kids = tree.children(tau);
    let mut sig = vec![0usize; kids.len() + 1];
    for &v in vertices {
        debug_assert_ne!(v, tau);
        let mut placed = false;
        for (k, &c) in kids.iter().enumerate() {
            if in_subtree(sizes, c, v) {
                sig[k + 1] += 1;
                placed = true;
                break;
            }
        }
        if !placed {
            sig[0] += 1; // root-side component
        }
    }
    sig
}

/// True iff `a` lies on top of `b`: same edge part, and the vertex parts
/// distribute identically over the components of `G - tau`.
pub fn lies_on_top(tree: &PlanarTree, a: &OneCellInfo, b: &OneCellInfo) -> bool {
    if a.edge != b.edge {
        return false;
    }
    let sizes = subtree_sizes(tree);
    component_signature(tree, &sizes, a.tau, &a.vertices)
        == component_signature(tree, &sizes, b.tau, &b.vertices)
}

impl CellCensus {
    pub fn build(tree: &PlanarTree, n: usize) -> Result<Self, DconfigError> {
        assert!(n >= 1, "particle count must be at least 1");
        check_path_condition_detail(tree, n)?;
        let v = tree.vertex_count();
        let zero_cells = configurations(v, n);
        let sizes = subtree_sizes(tree);

        let mut one_cells = Vec::new();
        for e in 0..tree.edge_count() {
            let (tau, iota) = tree.edge(e);
            let allowed: Vec<usize> = (0..v).filter(|&x| x != tau && x != iota).collect();
            for ch in configurations(allowed.len(), n - 1) {
                let vertices: Vec<usize> = ch.iter().map(|&i| allowed[i]).collect();
                one_cells.push(classify(tree, e, &vertices));
            }
        }

        let mut basis: Vec<usize> = (0..one_cells.len())
            .filter(|&i| one_cells[i].class == CellClass::Critical)
            .collect();
        basis.sort_by(|&i, &j| {
            let a = &one_cells[i];
            let b = &one_cells[j];
            (a.tau, a.iota, &a.vertices).cmp(&(b.tau, b.iota, &b.vertices))
        });

        let noncollapsible: Vec<usize> = (0..one_cells.len())
            .filter(|&i| one_cells[i].class != CellClass::Collapsible)
            .collect();

        // Signatures per critical cell, then match every non-collapsible
        // cell against the critical cells sharing its edge part.
        let basis_sig: Vec<(usize, Vec<usize>)> = basis
            .iter()
            .map(|&i| {
                let c = &one_cells[i];
                (c.edge, component_signature(tree, &sizes, c.tau, &c.vertices))
            })
            .collect();
        let mut lies_over = Vec::with_capacity(noncollapsible.len());
        let mut multiplicity_events = 0;
        for &i in &noncollapsible {
            let c = &one_cells[i];
            let sig = component_signature(tree, &sizes, c.tau, &c.vertices);
            let over: Vec<usize> = basis_sig
                .iter()
                .enumerate()
                .filter(|(_, (edge, bsig))| *edge == c.edge && *bsig == sig)
                .map(|(pos, _)| pos)
                .collect();
            if over.len() > 1 {
                multiplicity_events += 1;
            }
            lies_over.push(over);
        }
        // Provable for two particles: the vertex part of a cell over a
        // critical cell picks out one component of G - tau, and distinct
        // critical cells with the same edge part occupy distinct
        // components.
        assert!(
            n != 2 || multiplicity_events == 0,
            "a non-collapsible 1-cell lies over two critical cells at n = 2"
        );

        Ok(CellCensus {
            n,
            zero_cells,
            one_cells,
            basis,
            noncollapsible,
            lies_over,
            multiplicity_events,
            subtree_size: sizes,
        })
    }

    /// Rank of the first homology = number of critical 1-cells.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn class_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for c in &self.one_cells {
            match c.class {
                CellClass::Critical => counts.0 += 1,
                CellClass::Collapsible => counts.1 += 1,
                CellClass::Residual => counts.2 += 1,
            }
        }
        counts
    }

    /// Census index of a 1-cell given its edge and sorted vertex parts.
    pub fn one_cell_index(&self, edge: usize, vertices: &[usize]) -> Option<usize> {
        self.one_cells
            .iter()
            .position(|c| c.edge == edge && c.vertices == vertices)
    }

    /// The signature used by lies-on-top, exposed for the statistics layer.
    pub fn signature(&self, tree: &PlanarTree, cell: &OneCellInfo) -> Vec<usize> {
        component_signature(tree, &self.subtree_size, cell.tau, &cell.vertices)
    }

    /// Projects a count vector indexed by non-collapsible census rank to
    /// basis coordinates: each cell contributes to every critical cell it
    /// lies on top of.
    pub fn project_counts(&self, counts: &[i64]) -> Result<Vec<i64>, DconfigError> {
        if counts.len() != self.noncollapsible.len() {
            return Err(DconfigError::DimensionMismatch {
                got: counts.len(),
                want: self.noncollapsible.len(),
            });
        }
        let mut out = vec![0i64; self.basis.len()];
        for (rank, over) in self.lies_over.iter().enumerate() {
            for &pos in over {
                out[pos] += counts[rank];
            }
        }
        Ok(out)
    }

    /// The unique path from 0-cell `a` to 0-cell `b` inside the collapsible
    /// subcomplex (a spanning tree of the one-skeleton). Returns the state
    /// sequence and the oriented cells traversed, `forward = true` meaning
    /// tau-side to iota-side.
    pub fn collapsible_path(&self, a: usize, b: usize) -> (Vec<usize>, Vec<(usize, bool)>) {
        if a == b {
            return (vec![a], Vec::new());
        }
        let m = self.zero_cells.len();
        let mut adj: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); m];
        for (i, c) in self.one_cells.iter().enumerate() {
            if c.class == CellClass::Collapsible {
                adj[c.tau_state].push((c.iota_state, i, true));
                adj[c.iota_state].push((c.tau_state, i, false));
            }
        }
        let mut prev: Vec<Option<(usize, usize, bool)>> = vec![None; m];
        let mut queue = std::collections::VecDeque::from([a]);
        let mut seen = vec![false; m];
        seen[a] = true;
        while let Some(x) = queue.pop_front() {
            if x == b {
                break;
            }
            for &(y, cell, fwd) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    prev[y] = Some((x, cell, fwd));
                    queue.push_back(y);
                }
            }
        }
        assert!(seen[b], "collapsible subcomplex must span the 0-cells");
        let mut states = vec![b];
        let mut steps = Vec::new();
        let mut cur = b;
        while let Some((x, cell, fwd)) = prev[cur] {
            steps.push((cell, fwd));
            states.push(x);
            cur = x;
        }
        states.reverse();
        steps.reverse();
        (states, steps)
    }
}

/// CSV export of the 1-cell census: one row per 1-cell with its parts
/// (DFS labels, the edge as `a-b`), class, orientation endpoints, and the
/// basis indices it lies over.
pub fn census_csv(census: &CellCensus) -> String {
    let mut out = String::from("cell_id,parts,class,tau,iota,lies_over\n");
    let noncoll_rank: HashMap<usize, usize> = census
        .noncollapsible
        .iter()
        .enumerate()
        .map(|(rank, &i)| (i, rank))
        .collect();
    for (i, c) in census.one_cells.iter().enumerate() {
        let mut parts: Vec<(usize, String)> = c
            .vertices
            .iter()
            .map(|&v| (v, v.to_string()))
            .collect();
        parts.push((c.tau, format!("{}-{}", c.tau, c.iota)));
        parts.sort();
        let parts: Vec<String> = parts.into_iter().map(|(_, s)| s).collect();
        let over = noncoll_rank
            .get(&i)
            .map(|&rank| {
                census.lies_over[rank]
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i,
            parts.join(" "),
            c.class.as_str(),
            c.tau,
            c.iota,
            over
        ));
    }
    out
}
