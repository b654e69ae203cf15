#![allow(dead_code)]

use std::sync::Arc;

use coarse_core::{FiniteMetricSpace, IntSpace, PointMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Path metric of a random connected weighted graph on `n` vertices,
/// computed with Floyd–Warshall.
pub fn random_space(rng: &mut ChaCha8Rng, n: usize, tag: &str) -> IntSpace {
    const INF: i64 = i64::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    let join = |d: &mut Vec<Vec<i64>>, a: usize, b: usize, w: i64| {
        if a != b && w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    };
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let w = rng.gen_range(1..=5);
        join(&mut d, parent, i, w);
    }
    for _ in 0..rng.gen_range(0..=n) {
        let (a, b, w) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(1..=5));
        join(&mut d, a, b, w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let labels = (0..n).map(|i| format!("{tag}{i}")).collect();
    FiniteMetricSpace::from_table(labels, d, 0).expect("path metric")
}

pub fn random_map(rng: &mut ChaCha8Rng, src: &Arc<IntSpace>, dst: &Arc<IntSpace>) -> PointMap<i64> {
    let values = (0..src.len()).map(|_| rng.gen_range(0..dst.len())).collect();
    PointMap::new(src.clone(), dst.clone(), values).unwrap()
}

/// Map between two spaces carrying the same labels.
pub fn by_label(src: &Arc<IntSpace>, dst: &Arc<IntSpace>) -> PointMap<i64> {
    PointMap::from_fn(src.clone(), dst.clone(), |i| dst.index_of(src.label(i))).unwrap()
}

/// Brute-force `sup { d(f a, f b) : d(a, b) <= r }`.
pub fn control(f: &PointMap<i64>, r: i64) -> i64 {
    let s = f.source();
    let mut best = 0;
    for a in 0..s.len() {
        for b in 0..s.len() {
            if s.dist(a, b) <= r {
                best = best.max(f.image_dist(a, b));
            }
        }
    }
    best
}
