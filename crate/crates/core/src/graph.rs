//! Small undirected simple graphs.
//!
//! Used for the accumulated-homology experiments on non-tree graphs (the
//! complete graph in particular) and for the one-skeleton of the
//! discretized configuration space. Everything here is dense and assumes
//! at most a few thousand vertices.

use std::collections::HashSet;

#[derive(Debug, Clone)]
pub struct SimpleGraph {
    n: usize,
    /// Edges with `u < v`, deduplicated, in insertion order.
    edges: Vec<(usize, usize)>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b) in edges {
            assert!(a != b, "self-loops are not allowed");
            assert!(a < n && b < n, "edge endpoint out of range");
            let e = (a.min(b), a.max(b));
            if seen.insert(e) {
                out.push(e);
            }
        }
        SimpleGraph { n, edges: out }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                edges.push((a, b));
            }
        }
        SimpleGraph { n, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let e = (a.min(b), a.max(b));
        self.edges.contains(&e)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            if a == v {
                out.push(b);
            } else if b == v {
                out.push(a);
            }
        }
        out
    }

    /// BFS spanning tree rooted at `root`: returns (tree edge set, ordered
    /// complement edges oriented `(x, y)` with `x < y`, parent array).
    pub fn spanning_tree(&self, root: usize) -> SpanningTree {
        let mut parent = vec![usize::MAX; self.n];
        parent[root] = root;
        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for w in self.neighbors(v) {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    order.push(w);
                }
            }
        }
        assert_eq!(order.len(), self.n, "graph must be connected");
        let tree_edges: HashSet<(usize, usize)> = (0..self.n)
            .filter(|&v| v != root)
            .map(|v| (v.min(parent[v]), v.max(parent[v])))
            .collect();
        let complement = self
            .edges
            .iter()
            .copied()
            .filter(|e| !tree_edges.contains(e))
            .collect();
        SpanningTree {
            root,
            parent,
            tree_edges,
            complement,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpanningTree {
    pub root: usize,
    pub parent: Vec<usize>,
    pub tree_edges: HashSet<(usize, usize)>,
    /// Oriented complement edges; these index the cycle space.
    pub complement: Vec<(usize, usize)>,
}

impl SpanningTree {
    /// Path from `a` to `b` through the tree, endpoints included.
    pub fn tree_path(&self, a: usize, b: usize) -> Vec<usize> {
        let depth = |mut v: usize| {
            let mut d = 0;
            while self.parent[v] != v {
                v = self.parent[v];
                d += 1;
            }
            d
        };
        let (mut x, mut y) = (a, b);
        let (mut dx, mut dy) = (depth(a), depth(b));
        let mut front = Vec::new();
        let mut back = Vec::new();
        while dx > dy {
            front.push(x);
            x = self.parent[x];
            dx -= 1;
        }
        while dy > dx {
            back.push(y);
            y = self.parent[y];
            dy -= 1;
        }
        while x != y {
            front.push(x);
            back.push(y);
            x = self.parent[x];
            y = self.parent[y];
        }
        front.push(x);
        front.extend(back.into_iter().rev());
        front
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_counts() {
        let k5 = SimpleGraph::complete(5);
        assert_eq!(k5.edge_count(), 10);
        assert_eq!(k5.neighbors(2).len(), 4);
    }

    #[test]
    fn spanning_tree_of_k4() {
        let st = SimpleGraph::complete(4).spanning_tree(0);
        assert_eq!(st.tree_edges.len(), 3);
        assert_eq!(st.complement.len(), 3);
        assert_eq!(st.tree_path(1, 2), vec![1, 0, 2]);
        assert_eq!(st.tree_path(0, 0), vec![0]);
    }
}
