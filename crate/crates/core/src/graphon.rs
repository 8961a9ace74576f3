//! Graphons, their cell-average discretization, and W-random network sampling.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;
use crate::rng;

type KernelFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A symmetric kernel `W: [0,1]² → [0,1]`.
#[derive(Clone)]
pub enum Graphon {
    /// `W ≡ c`. With `c = 1` sampling reduces to Erdős–Rényi.
    Constant(f64),
    /// `W(x, y) = sin(πx) sin(πy)`.
    ProductSine,
    /// Bilinear interpolation of node values on a uniform grid, symmetrized.
    Grid(GridKernel),
    /// Any other evaluator. Symmetry and range are checked on a test grid at construction.
    Custom { label: String, f: Arc<KernelFn> },
}

impl fmt::Debug for Graphon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graphon({})", self.label())
    }
}

impl Graphon {
    pub fn constant(c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::param(
                "c",
                format!("constant graphon value {c} not in [0,1]"),
            ));
        }
        Ok(Graphon::Constant(c))
    }

    pub fn custom<F>(label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        const K: usize = 41;
        for a in 0..K {
            for b in 0..=a {
                let (x, y) = (a as f64 / (K - 1) as f64, b as f64 / (K - 1) as f64);
                let (wxy, wyx) = (f(x, y), f(y, x));
                if !wxy.is_finite() || !wyx.is_finite() {
                    return Err(Error::Evaluation {
                        what: format!("graphon `{label}` at ({x}, {y})"),
                    });
                }
                if (wxy - wyx).abs() > 1e-12 {
                    return Err(Error::Input(format!(
                        "graphon `{label}` is not symmetric at ({x}, {y})"
                    )));
                }
                if !(0.0..=1.0).contains(&wxy) {
                    return Err(Error::Input(format!(
                        "graphon `{label}` leaves [0,1] at ({x}, {y})"
                    )));
                }
            }
        }
        Ok(Graphon::Custom {
            label,
            f: Arc::new(f),
        })
    }

    /// Look up a preset by label.
    pub fn preset(label: &str) -> Result<Self> {
        match label {
            "constant-1" => Ok(Graphon::Constant(1.0)),
            "product-sine" => Ok(Graphon::ProductSine),
            other => Err(Error::Input(format!("unknown graphon preset `{other}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Graphon::Constant(c) if *c == 1.0 => "constant-1".into(),
            Graphon::Constant(c) => format!("constant-{c}"),
            Graphon::ProductSine => "product-sine".into(),
            Graphon::Grid(g) => format!("grid-{}", g.size),
            Graphon::Custom { label, .. } => label.clone(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Graphon::Constant(c) => *c,
            Graphon::ProductSine => {
                (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
            }
            Graphon::Grid(g) => g.eval(x, y),
            Graphon::Custom { f, .. } => f(x, y),
        }
    }

    /// `Some(a)` when `W(x, y) = a(x)·a(y)`; lets the continuum operator run in O(m).
    pub fn rank_one_factor(&self, x: f64) -> Option<f64> {
        match self {
            Graphon::Constant(c) => Some(c.sqrt()),
            Graphon::ProductSine => Some((std::f64::consts::PI * x).sin()),
            _ => None,
        }
    }

    pub fn is_rank_one(&self) -> bool {
        matches!(self, Graphon::Constant(_) | Graphon::ProductSine)
    }
}

/// Node values `v[a][b] = W(a/(k-1), b/(k-1))` on a `k × k` grid.
#[derive(Debug, Clone)]
pub struct GridKernel {
    size: usize,
    values: Vec<f64>,
}

impl GridKernel {
    /// Builds the kernel from row-major node values. The result is symmetrized by
    /// averaging the grid with its transpose.
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if size < 2 {
            return Err(Error::param(
                "size",
                "grid kernels need at least 2 nodes per side",
            ));
        }
        if values.len() != size * size {
            return Err(Error::Dimension {
                expected: size * size,
                found: values.len(),
            });
        }
        if let Some(bad) = values
            .iter()
            .find(|v| !v.is_finite() || !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Input(format!(
                "grid kernel value {bad} not in [0,1]"
            )));
        }
        let mut sym = values.clone();
        for a in 0..size {
            for b in 0..size {
                sym[a * size + b] = 0.5 * (values[a * size + b] + values[b * size + a]);
            }
        }
        Ok(GridKernel { size, values: sym })
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let last = (self.size - 1) as f64;
        let (fx, fy) = (x.clamp(0.0, 1.0) * last, y.clamp(0.0, 1.0) * last);
        let (ix, iy) = (
            (fx as usize).min(self.size - 2),
            (fy as usize).min(self.size - 2),
        );
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let v = |a: usize, b: usize| self.values[a * self.size + b];
        (1.0 - tx) * (1.0 - ty) * v(ix, iy)
            + tx * (1.0 - ty) * v(ix + 1, iy)
            + (1.0 - tx) * ty * v(ix, iy + 1)
            + tx * ty * v(ix + 1, iy + 1)
    }
}

/// Cell averages `W⁽ⁿ⁾ᵢⱼ = n² ∫_{Iᵢ×Iⱼ} W` of a graphon.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedGraphon {
    n: usize,
    cells: Vec<f64>,
}

impl DiscretizedGraphon {
    /// Wraps an explicit symmetric matrix of cell values (row-major).
    pub fn from_cells(n: usize, cells: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if cells.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: cells.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let v = cells[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Input(format!("cell ({i}, {j}) = {v} not in [0,1]")));
                }
                if v != cells[j * n + i] {
                    return Err(Error::Input(format!("cells not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DiscretizedGraphon { n, cells })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.cells[i * self.n..(i + 1) * self.n]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }
}

// Four-point Gauss–Legendre rule on [0, 1].
const GAUSS_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

/// Sub-panel count per cell side: the composite rule never uses panels wider than 1/32.
fn panels_per_cell(n: usize) -> usize {
    32_usize.div_ceil(n).max(1)
}

/// Cell average over `[i/n, (i+1)/n) × [j/n, (j+1)/n)` by composite tensor Gauss quadrature.
fn cell_average(g: &Graphon, n: usize, i: usize, j: usize) -> Result<f64> {
    let s = panels_per_cell(n);
    let width = 1.0 / (n * s) as f64;
    let mut acc = 0.0;
    for a in 0..s {
        let x0 = (i * s + a) as f64 * width;
        for b in 0..s {
            let y0 = (j * s + b) as f64 * width;
            for (xq, wx) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                for (yq, wy) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    let v = g.eval(x0 + xq * width, y0 + yq * width);
                    if !v.is_finite() {
                        return Err(Error::Evaluation {
                            what: format!("graphon `{}` in cell ({i}, {j})", g.label()),
                        });
                    }
                    acc += wx * wy * v;
                }
            }
        }
    }
    Ok((acc / (s * s) as f64).clamp(0.0, 1.0))
}

/// Discretize a graphon into `n × n` cell averages.
pub fn discretize(g: &Graphon, n: usize) -> Result<DiscretizedGraphon> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if let Graphon::Constant(c) = g {
        return Ok(DiscretizedGraphon {
            n,
            cells: vec![*c; n * n],
        });
    }
    // Upper triangle only, then mirror.
    let rows: Vec<Result<Vec<f64>>> =
        par::fill_rows(n, |i| (i..n).map(|j| cell_average(g, n, i, j)).collect());
    let mut cells = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row?.into_iter().enumerate() {
            let j = i + k;
            cells[i * n + j] = v;
            cells[j * n + i] = v;
        }
    }
    Ok(DiscretizedGraphon { n, cells })
}

/// A sampled undirected network: symmetric 0/1 adjacency with zero diagonal, stored as
/// sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledNetwork {
    n: usize,
    alpha_bits: u64,
    seed: u64,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl SampledNetwork {
    /// Builds a network from an undirected edge list. Duplicate edges are merged; self-loops
    /// are rejected.
    pub fn from_edges(n: usize, alpha: f64, seed: u64, edges: &[(usize, usize)]) -> Result<Self> {
        check_alpha(alpha)?;
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Input(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::Input(format!("self-loop at node {i}")));
            }
            adj[i].push(j as u32);
            adj[j].push(i as u32);
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self::from_rows(n, alpha, seed, adj))
    }

    fn from_rows(n: usize, alpha: f64, seed: u64, rows: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut neighbors = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for row in rows {
            neighbors.extend_from_slice(&row);
            offsets.push(neighbors.len());
        }
        SampledNetwork {
            n,
            alpha_bits: alpha.to_bits(),
            seed,
            offsets,
            neighbors,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        f64::from_bits(self.alpha_bits)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sorted neighbors of node `i`.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Edge density over the `n(n-1)/2` unordered pairs.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (self.n * (self.n - 1) / 2) as f64
    }

    /// Edges `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    /// Writes the edge list: a `# n=… alpha=… seed=…` header, then one `i j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# n={} alpha={} seed={}",
            self.n,
            self.alpha(),
            self.seed
        )?;
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }

    /// Parses the format produced by [`SampledNetwork::write_edge_list`].
    pub fn read_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Input("empty edge list".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Input("edge list header must start with `#`".into()))?;
        let (mut n, mut alpha, mut seed) = (None, None, None);
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("malformed header field `{field}`")))?;
            let bad = || Error::Input(format!("malformed header value `{field}`"));
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "alpha" => alpha = Some(value.parse::<f64>().map_err(|_| bad())?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad())?),
                _ => {}
            }
        }
        let (n, alpha, seed) = match (n, alpha, seed) {
            (Some(n), Some(a), Some(s)) => (n, a, s),
            _ => {
                return Err(Error::Input(
                    "edge list header needs n, alpha and seed".into(),
                ))
            }
        };
        let mut edges = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => edges.push((i, j)),
                _ => return Err(Error::Input(format!("malformed edge line `{line}`"))),
            }
        }
        Self::from_edges(n, alpha, seed, &edges)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("{alpha} not in (0, 1]")))
    }
}

/// Draws `A_ij = A_ji ~ Ber(alpha · W⁽ⁿ⁾ᵢⱼ)` independently for each pair `i < j`.
///
/// Every pair owns its own counter-based stream, so the result is independent of
/// evaluation order and identical across platforms.
pub fn sample_network(d: &DiscretizedGraphon, alpha: f64, seed: u64) -> Result<SampledNetwork> {
    check_alpha(alpha)?;
    let n = d.n();
    sample_with(n, alpha, seed, |i, j| alpha * d.get(i, j))
}

/// `G(n, p)`: identical to sampling the discretized constant-1 graphon with `alpha = p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<SampledNetwork> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    check_alpha(p)?;
    sample_with(n, p, seed, |_, _| p)
}

fn sample_with<F>(n: usize, alpha: f64, seed: u64, prob: F) -> Result<SampledNetwork>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    // Row i draws the pairs (i, j) with j > i; mirrored afterwards.
    let upper: Vec<Vec<u32>> = par::fill_rows(n, |i| {
        (i + 1..n)
            .filter(|&j| rng::pair_uniform(seed, i, j) < prob(i, j))
            .map(|j| j as u32)
            .collect()
    });
    let mut rows: Vec<Vec<u32>> = (0..n)
        .map(|i| Vec::with_capacity(upper[i].len() * 2))
        .collect();
    for (i, row) in upper.iter().enumerate() {
        for &j in row {
            rows[j as usize].push(i as u32);
        }
    }
    for (i, row) in upper.into_iter().enumerate() {
        rows[i].extend(row);
    }
    Ok(SampledNetwork::from_rows(n, alpha, seed, rows))
}

/// Breadth-first connectivity test.
pub fn is_connected(net: &SampledNetwork) -> bool {
    let n = net.n();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut visited = 1;
    while let Some(i) = queue.pop_front() {
        for &j in net.neighbors(i) {
            let j = j as usize;
            if !seen[j] {
                seen[j] = true;
                visited += 1;
                queue.push_back(j);
            }
        }
    }
    visited == n
}
