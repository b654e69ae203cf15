//! Rips graphs of truncations and a disjoint-set forest for their
//! components.

use crate::metric::{Ball, FiniteMetricSpace};
use crate::scalar::Scalar;

/// Undirected graph on the points of a truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RipsGraph {
    pub vertices: usize,
    /// Edges `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl RipsGraph {
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.vertices);
        for &(a, b) in &self.edges {
            uf.union(a, b);
        }
        uf.labels()
    }

    pub fn component_count(&self) -> usize {
        let mut l = self.components();
        l.sort_unstable();
        l.dedup();
        l.len()
    }
}

/// Edges `{x, y}` with `0 < d(x, y) <= R` (or `< R` for an open bound).
pub fn rips_graph_with<T: Scalar>(space: &FiniteMetricSpace<T>, radius: T, ball: Ball) -> RipsGraph {
    let nb = space.neighborhood(radius, ball);
    let mut edges = Vec::new();
    let mut buf = Vec::new();
    for i in 0..space.len() {
        buf.clear();
        nb.collect(i, &mut buf);
        edges.extend(buf.iter().filter(|&&j| j > i).map(|&j| (i, j)));
    }
    edges.sort_unstable();
    RipsGraph {
        vertices: space.len(),
        edges,
    }
}

/// The Rips graph at scale `R` with closed bound `d <= R`.
pub fn rips_graph<T: Scalar>(space: &FiniteMetricSpace<T>, radius: T) -> RipsGraph {
    if radius < T::zero() {
        return RipsGraph {
            vertices: space.len(),
            edges: Vec::new(),
        };
    }
    rips_graph_with(space, radius, Ball::Closed)
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns the new root and the root
    /// that was absorbed (`None` if already joined).
    pub fn union(&mut self, a: usize, b: usize) -> (usize, Option<usize>) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return (ra, None);
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        (ra, Some(rb))
    }

    /// Root label of every element.
    pub fn labels(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|i| self.find(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{builtin_space, SpaceName};

    #[test]
    fn integers_unit_scale_is_a_path() {
        let z = builtin_space::<i64>(&SpaceName::Integers, 5).unwrap().level(5).unwrap();
        let g = rips_graph(&z, 1);
        assert_eq!(g.vertices, 11);
        assert_eq!(g.edges.len(), 10);
        assert_eq!(g.component_count(), 1);
    }

    #[test]
    fn squares_scale_three() {
        // Oracle: consecutive gaps among squares <= 100.
        let sq: Vec<i64> = (0..=10).map(|n| n * n).collect();
        let mut expected = Vec::new();
        for (i, a) in sq.iter().enumerate() {
            for (j, b) in sq.iter().enumerate().skip(i + 1) {
                if (b - a).abs() <= 3 {
                    expected.push((i, j));
                }
            }
        }
        assert_eq!(expected, vec![(0, 1), (1, 2)]);
        let s = builtin_space::<i64>(&SpaceName::Squares, 100).unwrap().level(100).unwrap();
        assert_eq!(rips_graph(&s, 3).edges, expected);
    }

    #[test]
    fn zero_scale_is_edgeless() {
        let g = builtin_space::<f64>(&SpaceName::Grid(2), 4).unwrap().level(4).unwrap();
        assert!(rips_graph(&g, 0.0).edges.is_empty());
    }

    #[test]
    fn union_find_merges() {
        let mut uf = UnionFind::new(4);
        uf.union(0, 1);
        uf.union(2, 3);
        assert_ne!(uf.find(0), uf.find(2));
        uf.union(1, 3);
        assert_eq!(uf.find(0), uf.find(2));
    }
}
