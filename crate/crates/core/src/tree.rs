//! Planar leaf-rooted trees.
//!
//! A `PlanarTree` is a finite tree together with a chosen degree-1 root and
//! an ordering of every vertex's children. The child order encodes the
//! planar embedding; no geometry is ever computed. Construction assigns each
//! vertex its depth-first label (root = 0, children visited in stored
//! order), and all downstream modules speak in these labels.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("cycle detected at label '{0}'")]
    CycleDetected(String),
    #[error("duplicate label '{0}'")]
    DuplicateLabel(String),
    #[error("root '{0}' is not a leaf (has {1} children)")]
    RootNotLeaf(String, usize),
    #[error("disconnected input: label '{0}' is not reachable from the root")]
    Disconnected(String),
    #[error("root '{0}' has no children; a tree needs at least one edge")]
    RootIsolated(String),
    #[error("invalid tree document: {0}")]
    BadDocument(String),
}

/// On-disk tree description. Ids may be JSON strings or integers; integers
/// are canonicalized to their decimal string form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeDocument {
    pub name: String,
    pub root: serde_json::Value,
    pub children: serde_json::Map<String, serde_json::Value>,
}

fn id_to_string(v: &serde_json::Value) -> Result<String, TreeError> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(TreeError::BadDocument(format!(
            "id must be a string or integer, got {other}"
        ))),
    }
}

/// A rooted tree with ordered children and depth-first vertex labels.
///
/// Vertices are identified with their DFS labels `0..V`; label 0 is the
/// root, which always has degree 1. For every non-root vertex `v`,
/// `parent(v) < v`, so each edge is canonically written `(tau, iota)` with
/// `tau` the parent. Edge `i` is the parent edge of vertex `i + 1`.
#[derive(Debug, Clone)]
pub struct PlanarTree {
    name: String,
    /// DFS label -> original input label.
    labels: Vec<String>,
    /// DFS label -> ordered children (DFS labels).
    children: Vec<Vec<usize>>,
    /// DFS label -> parent; `None` only for the root.
    parent: Vec<Option<usize>>,
}

impl PlanarTree {
    /// Builds a tree from an adjacency description keyed by opaque labels.
    /// `children_of` must list every internal vertex; leaves may be omitted.
    pub fn new(
        name: &str,
        root: &str,
        children_of: &HashMap<String, Vec<String>>,
    ) -> Result<Self, TreeError> {
        let root_children = children_of.get(root).cloned().unwrap_or_default();
        if root_children.is_empty() {
            return Err(TreeError::RootIsolated(root.to_string()));
        }
        if root_children.len() > 1 {
            return Err(TreeError::RootNotLeaf(root.to_string(), root_children.len()));
        }

        let mut labels = Vec::new();
        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut parent: Vec<Option<usize>> = Vec::new();
        let mut index_of: HashMap<String, usize> = HashMap::new();

        // Iterative preorder; `on_path` tracks the ancestor set so a back
        // edge is reported as a cycle rather than a duplicate.
        labels.push(root.to_string());
        children.push(Vec::new());
        parent.push(None);
        index_of.insert(root.to_string(), 0);

        let mut stack = vec![(0usize, 0usize)]; // (dfs index, next child position)
        let mut on_path: HashSet<usize> = HashSet::from([0]);
        while let Some(&(v, pos)) = stack.last() {
            let v_label = labels[v].clone();
            let kids = children_of.get(&v_label).cloned().unwrap_or_default();
            if pos == kids.len() {
                stack.pop();
                on_path.remove(&v);
                continue;
            }
            stack.last_mut().unwrap().1 += 1;
            let child_label = &kids[pos];
            if let Some(&seen) = index_of.get(child_label) {
                if on_path.contains(&seen) {
                    return Err(TreeError::CycleDetected(child_label.clone()));
                }
                return Err(TreeError::DuplicateLabel(child_label.clone()));
            }
            let idx = labels.len();
            labels.push(child_label.clone());
            children.push(Vec::new());
            parent.push(Some(v));
            children[v].push(idx);
            index_of.insert(child_label.clone(), idx);
            stack.push((idx, 0));
            on_path.insert(idx);
        }

        // Every key of the description must have been reached.
        for key in children_of.keys() {
            if !index_of.contains_key(key) {
                return Err(TreeError::Disconnected(key.clone()));
            }
        }

        Ok(PlanarTree {
            name: name.to_string(),
            labels,
            children,
            parent,
        })
    }

    /// Parses the JSON tree document format.
    pub fn parse(document: &str) -> Result<Self, TreeError> {
        let doc: TreeDocument = serde_json::from_str(document)
            .map_err(|e| TreeError::BadDocument(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self, TreeError> {
        let root = id_to_string(&doc.root)?;
        let mut children_of = HashMap::new();
        for (key, val) in &doc.children {
            let list = val.as_array().ok_or_else(|| {
                TreeError::BadDocument(format!("children of '{key}' must be an array"))
            })?;
            let kids = list.iter().map(id_to_string).collect::<Result<Vec<_>, _>>()?;
            if children_of.insert(key.clone(), kids).is_some() {
                return Err(TreeError::DuplicateLabel(key.clone()));
            }
        }
        Self::new(&doc.name, &root, &children_of)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.labels.len() - 1
    }

    /// Original input label of a DFS vertex.
    pub fn input_label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len() + usize::from(self.parent[v].is_some())
    }

    /// Edges as `(tau, iota)` pairs, tau < iota, ordered by iota.
    /// Edge index `i` is the parent edge of vertex `i + 1`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (1..self.vertex_count())
            .map(|v| (self.parent[v].unwrap(), v))
            .collect()
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        (self.parent[index + 1].unwrap(), index + 1)
    }

    /// Index of the parent edge `e(v)`, the unique edge with iota = v.
    pub fn parent_edge(&self, v: usize) -> Option<usize> {
        self.parent[v].map(|_| v - 1)
    }

    /// Vertices of degree >= 3.
    pub fn essential_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.degree(v) >= 3).collect()
    }

    /// Path between two vertices, endpoints included.
    pub fn path_between(&self, a: usize, b: usize) -> Vec<usize> {
        let mut up_a = vec![a];
        let mut seen: HashMap<usize, usize> = HashMap::from([(a, 0)]);
        let mut v = a;
        while let Some(p) = self.parent[v] {
            up_a.push(p);
            seen.insert(p, up_a.len() - 1);
            v = p;
        }
        let mut up_b = vec![b];
        let mut w = b;
        while !seen.contains_key(&w) {
            let p = self.parent[w].expect("tree paths always meet at the root");
            up_b.push(p);
            w = p;
        }
        // w is the meeting point; up_b ends at it.
        let cut = seen[&w];
        let mut path: Vec<usize> = up_a[..=cut].to_vec();
        path.extend(up_b[..up_b.len() - 1].iter().rev());
        path
    }

    /// True iff every path between two vertices of degree != 2 contains at
    /// least `n` vertices (endpoints included).
    pub fn check_path_condition(&self, n: usize) -> bool {
        assert!(n >= 1, "particle count must be at least 1");
        let branch: Vec<usize> = (0..self.vertex_count())
            .filter(|&v| self.degree(v) != 2)
            .collect();
        for (i, &a) in branch.iter().enumerate() {
            for &b in &branch[i + 1..] {
                if self.path_between(a, b).len() < n {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces each edge by a path of `k` edges. Planar order and root are
    /// preserved; inserted vertices have degree 2 and labels derived from
    /// the edge they subdivide.
    pub fn subdivide(&self, k: usize) -> PlanarTree {
        assert!(k >= 1, "subdivision factor must be at least 1");
        if k == 1 {
            return self.clone();
        }
        let mut children_of: HashMap<String, Vec<String>> = HashMap::new();
        for v in 0..self.vertex_count() {
            if self.children[v].is_empty() {
                continue;
            }
            let mut kids = Vec::new();
            for &c in &self.children[v] {
                let first = format!("{}.{}.1", self.labels[v], self.labels[c]);
                kids.push(first.clone());
                let mut prev = first;
                for step in 2..k {
                    let mid = format!("{}.{}.{}", self.labels[v], self.labels[c], step);
                    children_of.insert(prev, vec![mid.clone()]);
                    prev = mid;
                }
                children_of.insert(prev, vec![self.labels[c].clone()]);
            }
            children_of.insert(self.labels[v].clone(), kids);
        }
        PlanarTree::new(&self.name, &self.labels[0], &children_of)
            .expect("subdividing a valid tree cannot fail")
    }

    /// Deterministic 64-bit content hash (FNV-1a over the canonical child
    /// structure), recorded in simulation metadata for provenance.
    pub fn structure_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        };
        for v in 0..self.vertex_count() {
            for b in self.labels[v].bytes() {
                eat(b);
            }
            eat(b'(');
            for &c in &self.children[v] {
                for b in c.to_string().bytes() {
                    eat(b);
                }
                eat(b',');
            }
            eat(b')');
        }
        h
    }

    // ---- stock trees used throughout the tests and experiments ----

    /// Star with `l` leaves (center of degree `l`), rooted at a leaf.
    /// DFS labels: root 0, center 1, remaining leaves 2..=l.
    pub fn star(l: usize) -> PlanarTree {
        assert!(l >= 2, "a star needs at least two leaves");
        let mut children_of = HashMap::new();
        children_of.insert("r".to_string(), vec!["c".to_string()]);
        children_of.insert(
            "c".to_string(),
            (1..l).map(|i| format!("l{i}")).collect(),
        );
        PlanarTree::new(&format!("star_{l}"), "r", &children_of).unwrap()
    }

    /// Path on `v` vertices rooted at an end.
    pub fn path(v: usize) -> PlanarTree {
        assert!(v >= 2);
        let mut children_of = HashMap::new();
        for i in 0..v - 1 {
            children_of.insert(i.to_string(), vec![(i + 1).to_string()]);
        }
        PlanarTree::new(&format!("path_{v}"), "0", &children_of).unwrap()
    }

    /// The H-shaped tree with one subdivision per edge; DFS labels equal
    /// the input labels 0..=10.
    pub fn h_graph() -> PlanarTree {
        let spec: &[(&str, &[&str])] = &[
            ("0", &["1"]),
            ("1", &["2"]),
            ("2", &["3", "9"]),
            ("3", &["4"]),
            ("4", &["5", "7"]),
            ("5", &["6"]),
            ("7", &["8"]),
            ("9", &["10"]),
        ];
        let children_of = spec
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect();
        PlanarTree::new("h_graph", "0", &children_of).unwrap()
    }

    /// Left tree of the distinguishing experiment: essential vertices at
    /// drawing labels 2, 4, 5, 8 (DFS labels 1, 3, 4, 7).
    pub fn experiment_g1() -> PlanarTree {
        let spec: &[(&str, &[&str])] = &[
            ("1", &["2"]),
            ("2", &["3", "4"]),
            ("4", &["5", "8"]),
            ("5", &["6", "7"]),
            ("8", &["9", "10"]),
        ];
        let children_of = spec
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect();
        PlanarTree::new("g1", "1", &children_of).unwrap()
    }

    /// Right tree of the distinguishing experiment: same degree sequence as
    /// `experiment_g1` but a caterpillar of essential vertices 2, 3, 4, 5.
    pub fn experiment_g2() -> PlanarTree {
        let spec: &[(&str, &[&str])] = &[
            ("1", &["2"]),
            ("2", &["3", "10"]),
            ("3", &["4", "9"]),
            ("4", &["5", "8"]),
            ("5", &["6", "7"]),
        ];
        let children_of = spec
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect();
        PlanarTree::new("g2", "1", &children_of).unwrap()
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} vertices, {} edges)",
            self.name,
            self.vertex_count(),
            self.edge_count()
        )
    }
}

/// Enumerates parent arrays `p[v] < v` with a degree-1 root, i.e. every
/// leaf-rooted tree shape on `v` vertices (isomorphic duplicates included).
/// Children keep index order, which fixes a planar embedding.
pub fn enumerate_leaf_rooted_trees(v: usize) -> Vec<PlanarTree> {
    assert!((2..=10).contains(&v), "enumeration is meant for small trees");
    let mut out = Vec::new();
    let mut parents = vec![0usize; v]; // parents[1] = 0 always
    fn rec(parents: &mut Vec<usize>, next: usize, v: usize, out: &mut Vec<PlanarTree>) {
        if next == v {
            let mut children_of: HashMap<String, Vec<String>> = HashMap::new();
            for (child, parent) in parents.iter().enumerate().skip(1) {
                children_of
                    .entry(parent.to_string())
                    .or_default()
                    .push(child.to_string());
            }
            out.push(
                PlanarTree::new(&format!("enum_{v}_{}", out.len()), "0", &children_of).unwrap(),
            );
            return;
        }
        // Root keeps degree 1: vertices beyond 1 never attach to 0.
        for p in 1..next {
            parents[next] = p;
            rec(parents, next + 1, v, out);
        }
    }
    if v == 2 {
        return vec![PlanarTree::path(2)];
    }
    rec(&mut parents, 2, v, &mut out);
    out
}
