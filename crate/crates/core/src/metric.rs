//! Finite metric spaces with three storage back ends.
//!
//! A [`FiniteMetricSpace`] is a prefix view onto shared storage, so taking a
//! truncation is cheap and indices are stable across truncations.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::error::{CoarseError, Result};
use crate::scalar::Scalar;

/// Coordinates in an integer lattice are packed into one key; each coordinate
/// must fit in this many bits (signed).
const COORD_BITS: u32 = 21;
const COORD_LIMIT: i64 = 1 << (COORD_BITS - 1);
pub const MAX_LATTICE_DIM: usize = 3;

#[derive(Debug, Clone)]
enum Storage<T> {
    /// Row-major table with the given stride.
    Table { dist: Arc<Vec<T>>, stride: usize },
    /// Points of `Z^d` with the l1 metric.
    Lattice {
        dim: usize,
        coords: Arc<Vec<i64>>,
        index: Arc<HashMap<u64, u32>>,
    },
    /// Vertices of a graph with the path metric of the full backing graph.
    Graph { adj: Arc<Vec<Vec<u32>>> },
}

#[derive(Debug, Clone)]
pub struct FiniteMetricSpace<T> {
    labels: Arc<Vec<String>>,
    len: usize,
    basepoint: usize,
    storage: Storage<T>,
}

/// Whether a radius bound is `d < r` or `d <= r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ball {
    Open,
    Closed,
}

impl Ball {
    pub fn contains<T: Scalar>(self, d: T, r: T) -> bool {
        match self {
            Ball::Open => d < r,
            Ball::Closed => d <= r,
        }
    }

    /// Largest integer distance admitted by this bound, or `None` if no
    /// non-negative integer qualifies.
    fn max_integer<T: Scalar>(self, r: T) -> Option<i64> {
        let f = r.floor_int();
        let m = match self {
            Ball::Closed => f,
            Ball::Open if T::from_int(f) == r => f - 1,
            Ball::Open => f,
        };
        (m >= 0).then_some(m)
    }
}

fn pack(coords: &[i64]) -> Option<u64> {
    let mut key = 0u64;
    for &c in coords {
        if !(-COORD_LIMIT..COORD_LIMIT).contains(&c) {
            return None;
        }
        key = (key << COORD_BITS) | ((c + COORD_LIMIT) as u64);
    }
    Some(key)
}

impl<T: Scalar> FiniteMetricSpace<T> {
    /// Builds a space from a full distance table and validates the metric
    /// axioms, naming the violating pair or triple on failure.
    pub fn from_table(labels: Vec<String>, rows: Vec<Vec<T>>, basepoint: usize) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(CoarseError::Empty("points"));
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(CoarseError::Malformed(format!(
                "distance table must be {n}x{n}"
            )));
        }
        if basepoint >= n {
            return Err(CoarseError::MissingPoint(format!("#{basepoint}")));
        }
        let space = Self::from_table_unchecked(labels, rows.into_iter().flatten().collect(), basepoint);
        if let Some(v) = space.metric_violation() {
            return Err(CoarseError::NotMetric(v));
        }
        Ok(space)
    }

    pub(crate) fn from_table_unchecked(labels: Vec<String>, flat: Vec<T>, basepoint: usize) -> Self {
        let n = labels.len();
        debug_assert_eq!(flat.len(), n * n);
        Self {
            labels: Arc::new(labels),
            len: n,
            basepoint,
            storage: Storage::Table {
                dist: Arc::new(flat),
                stride: n,
            },
        }
    }

    /// Points of `Z^dim` (l1 metric). Points must be distinct.
    pub fn lattice(dim: usize, points: Vec<Vec<i64>>, basepoint: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_LATTICE_DIM {
            return Err(CoarseError::InvalidParameter(format!(
                "lattice dimension {dim} not in 1..={MAX_LATTICE_DIM}"
            )));
        }
        if points.is_empty() {
            return Err(CoarseError::Empty("points"));
        }
        if basepoint >= points.len() {
            return Err(CoarseError::MissingPoint(format!("#{basepoint}")));
        }
        let mut index = HashMap::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len() * dim);
        let mut labels = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(CoarseError::Malformed(format!("point {p:?} is not {dim}-dimensional")));
            }
            let key = pack(p).ok_or_else(|| CoarseError::TooLarge(format!("coordinate of {p:?}")))?;
            if index.insert(key, i as u32).is_some() {
                return Err(CoarseError::NotMetric(format!("duplicate point {p:?}")));
            }
            coords.extend_from_slice(p);
            labels.push(lattice_label(p));
        }
        Ok(Self {
            labels: Arc::new(labels),
            len: points.len(),
            basepoint,
            storage: Storage::Lattice {
                dim,
                coords: Arc::new(coords),
                index: Arc::new(index),
            },
        })
    }

    /// Vertices of a connected undirected graph with its path metric.
    pub fn graph(labels: Vec<String>, adj: Vec<Vec<u32>>, basepoint: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(CoarseError::Empty("points"));
        }
        if labels.len() != adj.len() || basepoint >= labels.len() {
            return Err(CoarseError::Malformed("adjacency does not match vertex list".into()));
        }
        let space = Self {
            len: labels.len(),
            labels: Arc::new(labels),
            basepoint,
            storage: Storage::Graph { adj: Arc::new(adj) },
        };
        let reached = space.bfs(basepoint, None).iter().filter(|d| d.is_some()).count();
        if reached != space.len {
            return Err(CoarseError::NotMetric("graph is disconnected".into()));
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels[..self.len]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels().iter().position(|l| l == label)
    }

    /// Lattice coordinates of point `i`, if lattice-backed.
    pub fn coords(&self, i: usize) -> Option<&[i64]> {
        match &self.storage {
            Storage::Lattice { dim, coords, .. } => Some(&coords[i * dim..(i + 1) * dim]),
            _ => None,
        }
    }

    /// Index of the lattice point with the given coordinates.
    pub fn lattice_index(&self, p: &[i64]) -> Option<usize> {
        match &self.storage {
            Storage::Lattice { dim, index, .. } if p.len() == *dim => pack(p)
                .and_then(|k| index.get(&k))
                .map(|&i| i as usize)
                .filter(|&i| i < self.len),
            _ => None,
        }
    }

    pub fn dist(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.len && j < self.len);
        match &self.storage {
            Storage::Table { dist, stride } => dist[i * stride + j],
            Storage::Lattice { dim, coords, .. } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                T::from_int(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
            }
            Storage::Graph { .. } => {
                if i == j {
                    return T::zero();
                }
                let d = self.bfs(i, None)[j].expect("graph is connected");
                T::from_int(d as i64)
            }
        }
    }

    /// Distance from the basepoint.
    pub fn norm(&self, i: usize) -> T {
        self.dist(self.basepoint, i)
    }

    /// All basepoint distances, computed in one sweep.
    pub fn norms(&self) -> Vec<T> {
        match &self.storage {
            Storage::Graph { .. } => self.bfs(self.basepoint, None)[..self.len]
                .iter()
                .map(|d| T::from_int(d.expect("connected") as i64))
                .collect(),
            _ => (0..self.len).map(|i| self.norm(i)).collect(),
        }
    }

    /// Breadth-first distances in the backing graph, optionally cut off.
    fn bfs(&self, src: usize, limit: Option<u32>) -> Vec<Option<u32>> {
        let Storage::Graph { adj } = &self.storage else {
            unreachable!("bfs on non-graph storage")
        };
        let mut dist = vec![None; adj.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src as u32]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v as usize].unwrap();
            if limit.is_some_and(|l| dv >= l) {
                continue;
            }
            for &w in &adj[v as usize] {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Vertices within `limit` steps of `src`, visiting only those.
    fn local_bfs(&self, src: usize, limit: u32) -> Vec<usize> {
        let Storage::Graph { adj } = &self.storage else {
            unreachable!("bfs on non-graph storage")
        };
        let mut seen = HashSet::from([src as u32]);
        let mut frontier = vec![src as u32];
        let mut out = vec![src];
        for _ in 0..limit {
            let mut next = Vec::new();
            for v in frontier {
                for &w in &adj[v as usize] {
                    if seen.insert(w) {
                        next.push(w);
                        out.push(w as usize);
                    }
                }
            }
            frontier = next;
        }
        out
    }

    /// Distances from `i` to every point, in one sweep.
    pub fn distances_from(&self, i: usize) -> Vec<T> {
        match &self.storage {
            Storage::Graph { .. } => self.bfs(i, None)[..self.len]
                .iter()
                .map(|d| T::from_int(d.expect("connected") as i64))
                .collect(),
            _ => (0..self.len).map(|j| self.dist(i, j)).collect(),
        }
    }

    /// Prepares a reusable neighbourhood query at the given radius.
    pub fn neighborhood(&self, radius: T, ball: Ball) -> Neighborhood<'_, T> {
        let offsets = match &self.storage {
            Storage::Lattice { dim, .. } => ball
                .max_integer(radius)
                .map(|m| l1_offsets(*dim, m))
                .unwrap_or_default(),
            _ => Vec::new(),
        };
        Neighborhood {
            space: self,
            radius,
            ball,
            offsets,
        }
    }

    /// Indices `j != i` within `radius` of `i`.
    pub fn neighbors(&self, i: usize, radius: T, ball: Ball) -> Vec<usize> {
        let mut out = Vec::new();
        self.neighborhood(radius, ball).collect(i, &mut out);
        out
    }

    /// Prefix truncation to the first `len` points.
    pub fn truncate(&self, len: usize) -> Self {
        assert!(len <= self.len && self.basepoint < len.max(1));
        Self {
            len,
            ..self.clone()
        }
    }

    /// Subspace on `indices` (in that order) with the induced metric.
    /// The basepoint becomes `indices[basepoint_pos]`.
    pub fn restrict(&self, indices: &[usize], basepoint_pos: usize) -> Self {
        assert!(basepoint_pos < indices.len());
        let labels: Vec<String> = indices.iter().map(|&i| self.labels[i].clone()).collect();
        match &self.storage {
            Storage::Lattice { dim, coords, .. } => {
                let pts = indices
                    .iter()
                    .map(|&i| coords[i * dim..(i + 1) * dim].to_vec())
                    .collect();
                Self::lattice(*dim, pts, basepoint_pos).expect("subset of a valid lattice")
            }
            _ => {
                let n = indices.len();
                let mut flat = vec![T::zero(); n * n];
                let rows: Vec<Vec<T>> = if let Storage::Graph { .. } = &self.storage {
                    indices
                        .iter()
                        .map(|&i| {
                            let d = self.bfs(i, None);
                            indices.iter().map(|&j| T::from_int(d[j].unwrap() as i64)).collect()
                        })
                        .collect()
                } else {
                    indices
                        .iter()
                        .map(|&i| indices.iter().map(|&j| self.dist(i, j)).collect())
                        .collect()
                };
                for (a, row) in rows.into_iter().enumerate() {
                    flat[a * n..(a + 1) * n].copy_from_slice(&row);
                }
                Self::from_table_unchecked(labels, flat, basepoint_pos)
            }
        }
    }

    /// Row-major distance table of the whole space.
    pub fn distance_table(&self) -> Vec<Vec<T>> {
        (0..self.len)
            .map(|i| match &self.storage {
                Storage::Graph { .. } => {
                    let d = self.bfs(i, None);
                    (0..self.len).map(|j| T::from_int(d[j].unwrap() as i64)).collect()
                }
                _ => (0..self.len).map(|j| self.dist(i, j)).collect(),
            })
            .collect()
    }

    /// Whether every distance is a whole number.
    pub fn is_integer_valued(&self) -> bool {
        match &self.storage {
            Storage::Table { .. } => (0..self.len)
                .all(|i| (0..self.len).all(|j| self.dist(i, j).is_integral())),
            _ => true,
        }
    }

    /// Brute-force metric axiom check; describes the first violation found.
    pub fn metric_violation(&self) -> Option<String> {
        let t = self.distance_table();
        let n = self.len;
        let lab = |i: usize| &self.labels[i];
        for i in 0..n {
            if t[i][i] != T::zero() {
                return Some(format!("d({0}, {0}) = {1} is not 0", lab(i), t[i][i]));
            }
            for j in 0..n {
                if i != j && !(t[i][j] > T::zero()) {
                    return Some(format!("d({}, {}) = {} is not positive", lab(i), lab(j), t[i][j]));
                }
                if t[i][j] != t[j][i] {
                    return Some(format!("d({}, {}) != d({}, {})", lab(i), lab(j), lab(j), lab(i)));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if t[i][k] > t[i][j] + t[j][k] {
                        return Some(format!(
                            "triangle inequality fails for ({}, {}, {}): {} > {} + {}",
                            lab(i),
                            lab(j),
                            lab(k),
                            t[i][k],
                            t[i][j],
                            t[j][k]
                        ));
                    }
                }
            }
        }
        None
    }
}

/// Neighbourhood query bound to a space and radius.
pub struct Neighborhood<'a, T> {
    space: &'a FiniteMetricSpace<T>,
    radius: T,
    ball: Ball,
    offsets: Vec<Vec<i64>>,
}

impl<T: Scalar> Neighborhood<'_, T> {
    /// Appends the neighbours of `i` (excluding `i`) to `out`.
    pub fn collect(&self, i: usize, out: &mut Vec<usize>) {
        let s = self.space;
        match &s.storage {
            Storage::Table { .. } => {
                out.extend((0..s.len).filter(|&j| j != i && self.ball.contains(s.dist(i, j), self.radius)));
            }
            Storage::Lattice { dim, coords, index } => {
                let base = &coords[i * dim..(i + 1) * dim];
                let mut p = vec![0i64; *dim];
                for off in &self.offsets {
                    for k in 0..*dim {
                        p[k] = base[k] + off[k];
                    }
                    if let Some(&j) = pack(&p).and_then(|key| index.get(&key)) {
                        let j = j as usize;
                        if j != i && j < s.len {
                            out.push(j);
                        }
                    }
                }
            }
            Storage::Graph { .. } => {
                let Some(m) = self.ball.max_integer(self.radius) else {
                    return;
                };
                out.extend(s.local_bfs(i, m as u32).into_iter().filter(|&j| j != i && j < s.len));
            }
        }
    }
}

/// All offsets in `Z^dim` of l1 norm at most `m`.
fn l1_offsets(dim: usize, m: i64) -> Vec<Vec<i64>> {
    fn rec(dim: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        for c in -left..=left {
            cur.push(c);
            rec(dim, left - c.abs(), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, m, &mut Vec::with_capacity(dim), &mut out);
    out
}

pub fn lattice_label(p: &[i64]) -> String {
    if p.len() == 1 {
        p[0].to_string()
    } else {
        let inner: Vec<String> = p.iter().map(|c| c.to_string()).collect();
        format!("({})", inner.join(","))
    }
}
