//! Finite Markov chain kernel.
//!
//! Dense linear algebra for the small chains this crate works with (state
//! spaces up to a few thousand): stationary distribution, spectrum through
//! the pi-symmetrization, the discrete Green's function (the inverse of
//! `I - P` on mean-zero statistics), expected hitting times, and the
//! derived walk on directed edges.
//!
//! Structural identities are enforced at 1e-12, linear-algebra residuals
//! at 1e-10.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::graph::SimpleGraph;

/// Tolerance for structural identities (row sums, detailed balance).
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance for linear-algebra residuals (Green's function defect).
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("row {0} of P sums to {1}, not 1")]
    RowSum(usize, f64),
    #[error("negative entry P({0},{1}) = {2}")]
    NegativeEntry(usize, usize, f64),
    #[error("reducible chain: state {from} does not communicate with state {to}")]
    Reducible { from: usize, to: usize },
    #[error("no spectral gap: second eigenvalue {0} is within 1e-12 of 1")]
    NoSpectralGap(f64),
    #[error("Green's function residual {0} exceeds {RESIDUAL_TOL}")]
    GreenResidual(f64),
    #[error("singular linear system while computing hitting times to state {0}")]
    SingularHitting(usize),
    #[error("stationary solve failed (singular system)")]
    SingularStationary,
    #[error("hitting-time Green's formula requires a uniform stationary distribution")]
    NonUniformPi,
    #[error("stationary distribution residual {0} exceeds {STRUCTURAL_TOL}")]
    StationaryResidual(f64),
    #[error("particle count must satisfy 1 <= n < {v}, got {n}")]
    ParticleCount { n: usize, v: usize },
}

/// Spectral summary of a chain.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Eigenvalues sorted in descending order. Real parts when the chain is
    /// not reversible (flagged below).
    pub eigenvalues: Vec<f64>,
    /// Spectral gap: 1 minus the second-largest eigenvalue.
    pub delta: f64,
    /// Smallest eigenvalue.
    pub gamma_min: f64,
    /// True when delta <= 1e-12 (e.g. the identity chain).
    pub degenerate: bool,
    /// False when the chain was not reversible and a general (complex)
    /// eigensolver was used; real parts are reported.
    pub symmetrized: bool,
}

/// A finite Markov chain with precomputed stationary distribution.
/// Immutable after construction; spectral data and the Green's function are
/// computed once on first use.
pub struct FiniteChain {
    labels: Vec<String>,
    p: DMatrix<f64>,
    pi: DVector<f64>,
    reversible: bool,
    lazy: bool,
    spectrum: OnceLock<Spectrum>,
    green: OnceLock<Result<DMatrix<f64>, ChainError>>,
}

impl std::fmt::Debug for FiniteChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "FiniteChain({} states, reversible={}, lazy={})",
            self.len(),
            self.reversible,
            self.lazy
        )
    }
}

fn validate_rows(p: &DMatrix<f64>) -> Result<(), ChainError> {
    for i in 0..p.nrows() {
        let mut sum = 0.0;
        for j in 0..p.ncols() {
            let v = p[(i, j)];
            if v < 0.0 {
                return Err(ChainError::NegativeEntry(i, j, v));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > STRUCTURAL_TOL {
            return Err(ChainError::RowSum(i, sum));
        }
    }
    Ok(())
}

/// Checks strong connectivity of the support digraph; on failure returns a
/// non-communicating ordered pair.
fn check_irreducible(p: &DMatrix<f64>) -> Result<(), ChainError> {
    let n = p.nrows();
    let reach = |transpose: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(x) = stack.pop() {
            for y in 0..n {
                let w = if transpose { p[(y, x)] } else { p[(x, y)] };
                if w > 0.0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    };
    let fwd = reach(false);
    if let Some(to) = fwd.iter().position(|&s| !s) {
        return Err(ChainError::Reducible { from: 0, to });
    }
    let bwd = reach(true);
    if let Some(from) = bwd.iter().position(|&s| !s) {
        return Err(ChainError::Reducible { from, to: 0 });
    }
    Ok(())
}

/// Solves pi P = pi, sum(pi) = 1 for an irreducible chain.
pub fn stationary(p: &DMatrix<f64>) -> Result<DVector<f64>, ChainError> {
    validate_rows(p)?;
    check_irreducible(p)?;
    let n = p.nrows();
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(ChainError::SingularStationary)?;
    let sum: f64 = pi.iter().sum();
    let pi = pi / sum;
    let residual = (p.transpose() * &pi - &pi).amax();
    if residual > STRUCTURAL_TOL {
        return Err(ChainError::StationaryResidual(residual));
    }
    Ok(pi)
}

impl FiniteChain {
    /// Builds a chain from a row-stochastic matrix; the stationary
    /// distribution is computed and validated.
    pub fn new(labels: Vec<String>, p: DMatrix<f64>) -> Result<Self, ChainError> {
        let pi = stationary(&p)?;
        Ok(Self::assemble(labels, p, pi))
    }

    /// Builds a chain with a caller-supplied stationary distribution,
    /// skipping the irreducibility requirement. Needed for degenerate
    /// examples such as the identity chain.
    pub fn with_stationary(
        labels: Vec<String>,
        p: DMatrix<f64>,
        pi: DVector<f64>,
    ) -> Result<Self, ChainError> {
        validate_rows(&p)?;
        let residual = (p.transpose() * &pi - &pi).amax();
        if residual > STRUCTURAL_TOL {
            return Err(ChainError::StationaryResidual(residual));
        }
        Ok(Self::assemble(labels, p, pi))
    }

    fn assemble(labels: Vec<String>, p: DMatrix<f64>, pi: DVector<f64>) -> Self {
        let n = p.nrows();
        let mut reversible = true;
        'outer: for x in 0..n {
            for y in (x + 1)..n {
                if (pi[x] * p[(x, y)] - pi[y] * p[(y, x)]).abs() > STRUCTURAL_TOL {
                    reversible = false;
                    break 'outer;
                }
            }
        }
        let lazy = (0..n).all(|x| p[(x, x)] >= 0.5 - STRUCTURAL_TOL);
        FiniteChain {
            labels,
            p,
            pi,
            reversible,
            lazy,
            spectrum: OnceLock::new(),
            green: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.nrows() == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    pub fn is_lazy(&self) -> bool {
        self.lazy
    }

    pub fn pi_is_uniform(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.pi.iter().all(|&x| (x - u).abs() <= STRUCTURAL_TOL)
    }

    /// Inner product weighted by the stationary distribution.
    pub fn pi_inner(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        (0..self.len()).map(|x| self.pi[x] * f[x] * g[x]).sum()
    }

    /// Eigenvalues, spectral gap, and smallest eigenvalue. Reversible
    /// chains go through the symmetrization `D^{1/2} P D^{-1/2}`; anything
    /// else falls back to a general eigensolver and is flagged.
    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let n = self.len();
            let mut eigenvalues: Vec<f64>;
            let symmetrized = self.reversible;
            if self.reversible {
                let s = self.symmetrized();
                let eig = s.symmetric_eigenvalues();
                eigenvalues = eig.iter().copied().collect();
            } else {
                eigenvalues = self
                    .p
                    .clone()
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| z.re)
                    .collect();
            }
            eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let delta = if n >= 2 { 1.0 - eigenvalues[1] } else { 1.0 };
            Spectrum {
                gamma_min: *eigenvalues.last().unwrap(),
                delta,
                degenerate: delta <= STRUCTURAL_TOL,
                eigenvalues,
                symmetrized,
            }
        })
    }

    fn symmetrized(&self) -> DMatrix<f64> {
        let n = self.len();
        let sqrt_pi: Vec<f64> = self.pi.iter().map(|&x| x.sqrt()).collect();
        let mut s = DMatrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                s[(x, y)] = sqrt_pi[x] * self.p[(x, y)] / sqrt_pi[y];
            }
        }
        // Force exact symmetry before the eigensolve.
        for x in 0..n {
            for y in (x + 1)..n {
                let m = 0.5 * (s[(x, y)] + s[(y, x)]);
                s[(x, y)] = m;
                s[(y, x)] = m;
            }
        }
        s
    }

    /// `I - Pi` where `Pi` is the pi-weighted projection onto constants.
    fn deflation(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |x, y| {
            let id = if x == y { 1.0 } else { 0.0 };
            id - self.pi[y]
        })
    }

    fn green_residual(&self, g: &DMatrix<f64>) -> f64 {
        let n = self.len();
        let i_minus_p = DMatrix::<f64>::identity(n, n) - &self.p;
        let target = self.deflation();
        let r1 = (&i_minus_p * g - &target).amax();
        let r2 = (g * &i_minus_p - &target).amax();
        r1.max(r2)
    }

    /// The discrete Green's function: the unique matrix with
    /// `(I-P) G = G (I-P) = I - Pi` and `pi^T G = 0`, so that `u = G f`
    /// solves `(I-P) u = f` with `E_pi(u) = 0` for any mean-zero `f`.
    pub fn green(&self) -> Result<&DMatrix<f64>, ChainError> {
        self.green
            .get_or_init(|| self.compute_green())
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn compute_green(&self) -> Result<DMatrix<f64>, ChainError> {
        let n = self.len();
        if self.spectrum().degenerate {
            return Err(ChainError::NoSpectralGap(self.spectrum().eigenvalues[1.min(n - 1)]));
        }
        if self.reversible {
            let s = self.symmetrized();
            let eig = nalgebra::SymmetricEigen::new(s);
            // Deflate the unit eigenvalue (the largest one).
            let top = (0..n)
                .max_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap())
                .unwrap();
            let mut g_sym = DMatrix::<f64>::zeros(n, n);
            for k in 0..n {
                if k == top {
                    continue;
                }
                let lam = eig.eigenvalues[k];
                if lam > 1.0 - STRUCTURAL_TOL {
                    return Err(ChainError::NoSpectralGap(lam));
                }
                let q = eig.eigenvectors.column(k);
                let scale = 1.0 / (1.0 - lam);
                for x in 0..n {
                    for y in 0..n {
                        g_sym[(x, y)] += scale * q[x] * q[y];
                    }
                }
            }
            let sqrt_pi: Vec<f64> = self.pi.iter().map(|&x| x.sqrt()).collect();
            let g = DMatrix::from_fn(n, n, |x, y| g_sym[(x, y)] * sqrt_pi[y] / sqrt_pi[x]);
            if self.green_residual(&g) <= RESIDUAL_TOL {
                return Ok(g);
            }
        }
        // Fallback (and the non-reversible route): solve
        // (I - P + 1 pi^T) Z = I, then G = Z - 1 pi^T.
        let ones_pit = DMatrix::from_fn(n, n, |_, y| self.pi[y]);
        let m = DMatrix::<f64>::identity(n, n) - &self.p + &ones_pit;
        let z = m
            .lu()
            .try_inverse()
            .ok_or(ChainError::NoSpectralGap(f64::NAN))?;
        let g = z - ones_pit;
        let residual = self.green_residual(&g);
        if residual > RESIDUAL_TOL {
            return Err(ChainError::GreenResidual(residual));
        }
        Ok(g)
    }

    /// Applies the Green's function to a mean-zero statistic.
    pub fn green_apply(&self, f: &DVector<f64>) -> Result<DVector<f64>, ChainError> {
        Ok(self.green()? * f)
    }

    /// Matrix of expected hitting times `Q(x, y)`, with `Q(y, y) = 0`.
    /// Column `y` solves `(I - P_hat) q = 1` with row/column `y` removed.
    pub fn hitting_times(&self) -> Result<DMatrix<f64>, ChainError> {
        let n = self.len();
        let mut q = DMatrix::zeros(n, n);
        for y in 0..n {
            let keep: Vec<usize> = (0..n).filter(|&x| x != y).collect();
            let m = DMatrix::from_fn(n - 1, n - 1, |a, b| {
                let id = if a == b { 1.0 } else { 0.0 };
                id - self.p[(keep[a], keep[b])]
            });
            let rhs = DVector::from_element(n - 1, 1.0);
            let sol = m.lu().solve(&rhs).ok_or(ChainError::SingularHitting(y))?;
            for (a, &x) in keep.iter().enumerate() {
                q[(x, y)] = sol[a];
            }
        }
        Ok(q)
    }

    /// Green's function assembled from hitting times via
    /// `G(y,y) = pi(y)^2 sum_z Q(z,y)` and `G(x,y) = G(y,y) - pi(x) Q(x,y)`.
    /// Only validated for uniform stationary distributions; refuses
    /// otherwise. Returns the matrix and its maximum absolute discrepancy
    /// against the linear-solve Green's function.
    pub fn green_via_hitting(&self) -> Result<(DMatrix<f64>, f64), ChainError> {
        if !self.pi_is_uniform() {
            return Err(ChainError::NonUniformPi);
        }
        let n = self.len();
        let q = self.hitting_times()?;
        let mut g = DMatrix::zeros(n, n);
        for y in 0..n {
            let total: f64 = (0..n).map(|z| q[(z, y)]).sum();
            let diag = self.pi[y] * self.pi[y] * total;
            for x in 0..n {
                g[(x, y)] = if x == y { diag } else { diag - self.pi[x] * q[(x, y)] };
            }
        }
        let reference = self.green()?;
        let discrepancy = (&g - reference).amax();
        Ok((g, discrepancy))
    }

    /// The derived chain on directed edges. Self-loops are excluded from
    /// the state space; `pi_raw` stores the measure `pi(x) P(x,y)` exactly
    /// as the covariance formulas use it, and `pi_normalized` a rescaled
    /// probability copy for simulation sanity checks.
    pub fn edge_walk(&self) -> EdgeWalk {
        let n = self.len();
        let mut edges = Vec::new();
        let mut pi_raw = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x != y && self.p[(x, y)] > 0.0 {
                    edges.push((x, y));
                    pi_raw.push(self.pi[x] * self.p[(x, y)]);
                }
            }
        }
        let mass: f64 = pi_raw.iter().sum();
        let pi_normalized = if mass > 0.0 {
            pi_raw.iter().map(|w| w / mass).collect()
        } else {
            vec![0.0; pi_raw.len()]
        };
        if self.reversible {
            let index: HashMap<(usize, usize), usize> =
                edges.iter().copied().zip(0..).collect();
            for (k, &(x, y)) in edges.iter().enumerate() {
                let rk = index[&(y, x)];
                debug_assert!(
                    (pi_raw[k] - pi_raw[rk]).abs() <= STRUCTURAL_TOL,
                    "edge measure must be symmetric for reversible chains"
                );
            }
        }
        let index = edges.iter().copied().zip(0..).collect();
        EdgeWalk {
            edges,
            index,
            pi_raw,
            pi_normalized,
            total_mass: mass,
        }
    }

    /// Serializable summary: states, P (row-major), pi, spectrum.
    pub fn export(&self) -> ChainExport {
        let spec = self.spectrum();
        ChainExport {
            schema: 1,
            states: self.labels.clone(),
            p: self.p.row_iter().map(|r| r.iter().copied().collect()).collect(),
            pi: self.pi.iter().copied().collect(),
            eigenvalues: spec.eigenvalues.clone(),
            delta: spec.delta,
            gamma_min: spec.gamma_min,
            reversible: self.reversible,
            lazy: self.lazy,
            degenerate: spec.degenerate,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ChainExport {
    pub schema: u32,
    pub states: Vec<String>,
    pub p: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub delta: f64,
    pub gamma_min: f64,
    pub reversible: bool,
    pub lazy: bool,
    pub degenerate: bool,
}

/// The edge walk `Y_t = (X_t, X_{t+1})` of a lazy chain, restricted to the
/// off-diagonal support of P.
#[derive(Debug, Clone)]
pub struct EdgeWalk {
    pub edges: Vec<(usize, usize)>,
    pub index: HashMap<(usize, usize), usize>,
    /// Unnormalized stationary measure `pi(x) P(x,y)`.
    pub pi_raw: Vec<f64>,
    /// `pi_raw` rescaled to a probability vector.
    pub pi_normalized: Vec<f64>,
    /// Total off-diagonal mass (< 1 for lazy chains).
    pub total_mass: f64,
}

impl EdgeWalk {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Transition kernel of the chain observed at move times only (holds
    /// integrated out). The normalized copy of `pi_raw` is stationary for
    /// this kernel, which is the simulation sanity check it exists for.
    pub fn move_kernel(&self, chain: &FiniteChain) -> DMatrix<f64> {
        let m = self.edges.len();
        let mut j = DMatrix::zeros(m, m);
        for (a, &(_, y)) in self.edges.iter().enumerate() {
            let hold = chain.p()[(y, y)];
            for (b, &(z, w)) in self.edges.iter().enumerate() {
                if z == y {
                    j[(a, b)] = chain.p()[(z, w)] / (1.0 - hold);
                }
            }
        }
        j
    }
}

/// The edge walk on its full state space, self-loops included: states are
/// all pairs with `P(x,y) != 0` and
/// `P_E((x,y),(z,w)) = P(z,w)` when `z = y`, else 0.
/// This is the object whose stationary distribution is `pi(x) P(x,y)` and
/// whose powers reduce to powers of `P`.
pub fn full_edge_walk(chain: &FiniteChain) -> (Vec<(usize, usize)>, DMatrix<f64>) {
    let n = chain.len();
    let mut states = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if chain.p()[(x, y)] != 0.0 {
                states.push((x, y));
            }
        }
    }
    let m = states.len();
    let mut pe = DMatrix::zeros(m, m);
    for (a, &(_, y)) in states.iter().enumerate() {
        for (b, &(z, w)) in states.iter().enumerate() {
            if z == y {
                pe[(a, b)] = chain.p()[(z, w)];
            }
        }
    }
    (states, pe)
}

/// The lazy simple random walk on a graph with the per-edge convention:
/// each directed move has probability `1/(2E)`.
pub fn lazy_walk(graph: &SimpleGraph) -> FiniteChain {
    let n = graph.vertex_count();
    let e = graph.edge_count() as f64;
    let mut p = DMatrix::zeros(n, n);
    for &(a, b) in graph.edges() {
        p[(a, b)] = 1.0 / (2.0 * e);
        p[(b, a)] = 1.0 / (2.0 * e);
    }
    for v in 0..n {
        let row: f64 = p.row(v).iter().sum();
        p[(v, v)] = 1.0 - row;
    }
    let labels = (0..n).map(|v| format!("v{v}")).collect();
    FiniteChain::new(labels, p).expect("lazy walk on a connected graph is a valid chain")
}
