//! Separated decompositions `X = A ∪ B`: the finite proxy for failure of
//! coarse connectedness.
//!
//! A witness is a partition of the deepest tested truncation together with,
//! for every tested scale `R`, a radius `r(R)` such that points of `A` and
//! `B` outside the open ball `B(x0, r(R))` are at distance `>= R`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CoarseError, Result};
use crate::filtration::{builtin_space, FiltrationSpace, SpaceName};
use crate::maps::{ComplexMap, PointMap};
use crate::metric::{Ball, FiniteMetricSpace};
use crate::rips::UnionFind;
use crate::scalar::{strict_ball_radius, Scalar};

#[derive(Debug, Clone)]
pub struct DecompositionWitness<T> {
    truncation: Arc<FiniteMetricSpace<T>>,
    norms: Vec<T>,
    in_a: Vec<bool>,
    radii: Vec<(T, u64)>,
    depth: usize,
    far_threshold: T,
}

/// Smallest integer `r` such that every pair `a ∈ A`, `b ∈ B` with
/// `d(a, b) < R` has a point inside `B(x0, r)`.
pub fn separation_radius<T: Scalar>(space: &FiniteMetricSpace<T>, norms: &[T], in_a: &[bool], scale: T) -> u64 {
    let nb = space.neighborhood(scale, Ball::Open);
    let mut worst: Option<T> = None;
    let mut buf = Vec::new();
    for a in (0..space.len()).filter(|&i| in_a[i]) {
        buf.clear();
        nb.collect(a, &mut buf);
        for &b in buf.iter().filter(|&&b| !in_a[b]) {
            let m = norms[a].min_of(norms[b]);
            worst = Some(worst.map_or(m, |w| w.max_of(m)));
        }
    }
    worst.map_or(0, strict_ball_radius)
}

impl<T: Scalar> DecompositionWitness<T> {
    /// Builds a witness from a partition, computing the minimal radii at
    /// each scale. Fails if either side lacks a far point.
    pub fn from_partition(
        truncation: Arc<FiniteMetricSpace<T>>,
        in_a: Vec<bool>,
        scales: &[T],
        depth: usize,
        far_threshold: T,
    ) -> Result<Self> {
        if in_a.len() != truncation.len() {
            return Err(CoarseError::Mismatch("partition size".into()));
        }
        let norms = truncation.norms();
        let mut w = Self {
            truncation,
            norms,
            in_a,
            radii: Vec::new(),
            depth,
            far_threshold,
        };
        if w.side_a().is_empty() || w.side_b().is_empty() {
            return Err(CoarseError::DegenerateWitness("a side is empty".into()));
        }
        w.radii = scales.iter().map(|&s| (s, w.radius_at(s))).collect();
        w.check_invariants().map_err(CoarseError::DegenerateWitness)?;
        Ok(w)
    }

    pub fn truncation(&self) -> &Arc<FiniteMetricSpace<T>> {
        &self.truncation
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn far_threshold(&self) -> T {
        self.far_threshold
    }

    pub fn in_a(&self, i: usize) -> bool {
        self.in_a[i]
    }

    pub fn partition(&self) -> &[bool] {
        &self.in_a
    }

    pub fn side_a(&self) -> Vec<usize> {
        (0..self.in_a.len()).filter(|&i| self.in_a[i]).collect()
    }

    pub fn side_b(&self) -> Vec<usize> {
        (0..self.in_a.len()).filter(|&i| !self.in_a[i]).collect()
    }

    /// `(R, r(R))` for every tested scale.
    pub fn radii(&self) -> &[(T, u64)] {
        &self.radii
    }

    /// Minimal separation radius of this partition at any scale.
    pub fn radius_at(&self, scale: T) -> u64 {
        separation_radius(&self.truncation, &self.norms, &self.in_a, scale)
    }

    fn has_far(&self, side_a: bool) -> bool {
        (0..self.in_a.len()).any(|i| self.in_a[i] == side_a && self.norms[i] >= self.far_threshold)
    }

    /// Checks the witness invariants via neighbourhood queries.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if !self.has_far(true) || !self.has_far(false) {
            return Err(format!(
                "each side needs a point at distance >= {} from the basepoint",
                self.far_threshold
            ));
        }
        for &(s, r) in &self.radii {
            if T::from_int(r as i64) > self.far_threshold {
                return Err(format!("radius {r} at scale {s} swallows the far shell"));
            }
            if self.radius_at(s) > r {
                return Err(format!("separation fails at scale {s} outside B(x0, {r})"));
            }
        }
        Ok(())
    }

    /// Brute force over all pairs of the truncation.
    pub fn verify_exhaustive(&self) -> std::result::Result<(), String> {
        if !self.has_far(true) || !self.has_far(false) {
            return Err("a side has no far point".into());
        }
        let s = &self.truncation;
        for &(scale, r) in &self.radii {
            let r = T::from_int(r as i64);
            for a in 0..s.len() {
                if !self.in_a[a] || self.norms[a] < r {
                    continue;
                }
                for b in 0..s.len() {
                    if !self.in_a[b] && self.norms[b] >= r && s.dist(a, b) < scale {
                        return Err(format!(
                            "{} and {} are within {scale} outside B(x0, {r})",
                            s.label(a),
                            s.label(b)
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> WitnessSummary<T> {
        WitnessSummary {
            a_size: self.side_a().len(),
            b_size: self.side_b().len(),
            radii: self.radii.iter().map(|&(scale, radius)| ScaleRadius { scale, radius }).collect(),
            far_threshold: self.far_threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ScaleRadius<T> {
    pub scale: T,
    pub radius: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WitnessSummary<T> {
    pub a_size: usize,
    pub b_size: usize,
    pub radii: Vec<ScaleRadius<T>>,
    pub far_threshold: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    WitnessFound,
    NoWitnessAtTestedScales,
}

#[derive(Debug, Clone)]
pub struct SeparationVerdict<T> {
    pub outcome: Outcome,
    pub witness: Option<DecompositionWitness<T>>,
    pub scales: Vec<T>,
    pub depth: usize,
}

impl<T: Scalar> SeparationVerdict<T> {
    pub fn found(&self) -> bool {
        self.outcome == Outcome::WitnessFound
    }
}

fn check_scales<T: Scalar>(scales: &[T]) -> Result<()> {
    if scales.is_empty() {
        return Err(CoarseError::Empty("scales"));
    }
    if !scales.windows(2).all(|w| w[0] < w[1]) || scales[0] <= T::zero() {
        return Err(CoarseError::InvalidParameter("scales must be positive and increasing".into()));
    }
    Ok(())
}

/// Number of far components of the open-scale Rips graph on `{norm >= r}`
/// for every integer `r` from the outermost shell inwards.
fn far_component_counts<T: Scalar>(space: &FiniteMetricSpace<T>, norms: &[T], scale: T, far: T) -> Vec<usize> {
    let n = space.len();
    let top = norms.iter().copied().fold(T::zero(), T::max_of).floor_int().max(0) as usize;
    let mut counts = vec![0; top + 1];
    let nb = space.neighborhood(scale, Ball::Open);
    let mut uf = UnionFind::new(n);
    let mut is_far = vec![false; n];
    let mut added = vec![false; n];
    let mut count = 0usize;
    let mut next = n;
    let mut buf = Vec::new();
    for r in (0..=top).rev() {
        let rr = T::from_int(r as i64);
        while next > 0 && norms[next - 1] >= rr {
            next -= 1;
            let v = next;
            added[v] = true;
            if norms[v] >= far {
                is_far[v] = true;
                count += 1;
            }
            buf.clear();
            nb.collect(v, &mut buf);
            for &w in buf.iter().filter(|&&w| added[w]) {
                let (ra, rb) = (uf.find(v), uf.find(w));
                if ra == rb {
                    continue;
                }
                let (fa, fb) = (is_far[ra], is_far[rb]);
                let (root, _) = uf.union(ra, rb);
                is_far[root] = fa || fb;
                if fa && fb {
                    count -= 1;
                }
            }
        }
        counts[r] = count;
    }
    counts
}

/// Searches for a separated decomposition of the depth-level truncation.
///
/// The partition is taken at the largest scale and validated at all
/// smaller ones.
pub fn detect_decomposition<T: Scalar>(
    x: &FiltrationSpace<T>,
    scales: &[T],
    depth: usize,
    margin: T,
) -> Result<SeparationVerdict<T>> {
    check_scales(scales)?;
    x.check_depth(depth)?;
    let space = Arc::new(x.level(depth)?);
    let norms = &x.norms()[..space.len()];
    let far = x.far_threshold(depth, margin);
    let scale = *scales.last().unwrap();
    let none = || SeparationVerdict {
        outcome: Outcome::NoWitnessAtTestedScales,
        witness: None,
        scales: scales.to_vec(),
        depth,
    };
    let counts = far_component_counts(&space, norms, scale, far);
    let Some(r_star) = counts.iter().position(|&c| c >= 2) else {
        return Ok(none());
    };
    let r_star_t = T::from_int(r_star as i64);

    // components of {norm >= r*} at the largest scale
    let n = space.len();
    let outside: Vec<bool> = norms.iter().map(|&d| d >= r_star_t).collect();
    let mut uf = UnionFind::new(n);
    let nb = space.neighborhood(scale, Ball::Open);
    let mut buf = Vec::new();
    for v in (0..n).filter(|&v| outside[v]) {
        buf.clear();
        nb.collect(v, &mut buf);
        for &w in buf.iter().filter(|&&w| outside[w]) {
            uf.union(v, w);
        }
    }
    // (max norm, min index, root) per component
    let mut comps: Vec<(T, usize, usize)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for v in (0..n).filter(|&v| outside[v]) {
        let root = uf.find(v);
        if slot[root] == usize::MAX {
            slot[root] = comps.len();
            comps.push((norms[v], v, root));
        } else {
            let c = &mut comps[slot[root]];
            c.0 = c.0.max_of(norms[v]);
        }
    }
    comps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut side_of_root = vec![false; n];
    for (k, c) in comps.iter().enumerate() {
        side_of_root[c.2] = k % 2 == 0;
    }
    let mut in_a = vec![false; n];
    for v in (0..n).filter(|&v| outside[v]) {
        in_a[v] = side_of_root[uf.find(v)];
    }
    // points of the deleted ball join the side of their nearest outside point
    for v in (0..n).filter(|&v| !outside[v]) {
        let mut best: Option<(T, bool)> = None;
        let row = space.distances_from(v);
        for w in (0..n).filter(|&w| outside[w]) {
            let d = row[w];
            match best {
                Some((bd, side)) if d > bd || (d == bd && (side || !in_a[w])) => {}
                _ => best = Some((d, in_a[w])),
            }
        }
        in_a[v] = best.map_or(true, |(_, side)| side);
    }
    match DecompositionWitness::from_partition(space, in_a, scales, depth, far) {
        Ok(w) => Ok(SeparationVerdict {
            outcome: Outcome::WitnessFound,
            witness: Some(w),
            scales: scales.to_vec(),
            depth,
        }),
        Err(CoarseError::DegenerateWitness(_)) => Ok(none()),
        Err(e) => Err(e),
    }
}

/// Coarse map to the integers built from a witness.
#[derive(Debug, Clone)]
pub struct IntegerMap<T> {
    pub map: PointMap<T>,
    /// The integer value of each source point.
    pub values: Vec<i64>,
    pub a0: usize,
    pub b0: usize,
}

impl<T: Scalar> IntegerMap<T> {
    pub fn image_max(&self) -> i64 {
        *self.values.iter().max().unwrap()
    }

    pub fn image_min(&self) -> i64 {
        *self.values.iter().min().unwrap()
    }
}

/// `a ↦ ⌊d(a, a0)⌋` on `A` and `b ↦ -(⌊d(b, b0)⌋ + 1)` on `B`, where `a0`,
/// `b0` are the points of each side nearest the basepoint.
pub fn map_to_integers<T: Scalar>(w: &DecompositionWitness<T>) -> Result<IntegerMap<T>> {
    let (a, b) = (w.side_a(), w.side_b());
    if a.is_empty() || b.is_empty() {
        return Err(CoarseError::DegenerateWitness("a side is empty".into()));
    }
    let s = w.truncation();
    let nearest = |side: &[usize]| {
        *side
            .iter()
            .min_by(|&&p, &&q| w.norms[p].partial_cmp(&w.norms[q]).unwrap().then(p.cmp(&q)))
            .unwrap()
    };
    let (a0, b0) = (nearest(&a), nearest(&b));
    let values: Vec<i64> = (0..s.len())
        .map(|i| {
            if w.in_a(i) {
                s.dist(i, a0).floor_int()
            } else {
                -(s.dist(i, b0).floor_int() + 1)
            }
        })
        .collect();
    let reach = values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as usize;
    let z = Arc::new(builtin_space::<T>(&SpaceName::Integers, reach)?.level(reach)?);
    let map = PointMap::from_fn(s.clone(), z.clone(), |i| z.lattice_index(&[values[i]]))?;
    Ok(IntegerMap { map, values, a0, b0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationEntry<T> {
    pub scale: T,
    pub epsilon: f64,
    /// Least radius that works, or `None` if none below the depth does.
    pub radius: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillationProfile<T> {
    pub depth: u64,
    pub entries: Vec<OscillationEntry<T>>,
}

impl<T: Scalar> OscillationProfile<T> {
    pub fn get(&self, scale: T, epsilon: f64) -> Option<&OscillationEntry<T>> {
        self.entries.iter().find(|e| e.scale == scale && e.epsilon == epsilon)
    }
}

/// For each `(R, ε)`: the least `r` such that pairs outside `B(x0, r)` with
/// `d <= R` have image distance `<= ε`.
pub fn slow_oscillation_profile<T: Scalar>(
    f: &ComplexMap<T>,
    scales: &[T],
    epsilons: &[f64],
) -> Result<OscillationProfile<T>> {
    if scales.is_empty() {
        return Err(CoarseError::Empty("scales"));
    }
    if epsilons.is_empty() {
        return Err(CoarseError::Empty("epsilons"));
    }
    let s = f.source();
    let norms = s.norms();
    let depth = norms.iter().copied().fold(T::zero(), T::max_of).floor_int().max(0) as u64;
    let mut entries = Vec::new();
    let mut buf = Vec::new();
    for &scale in scales {
        let nb = s.neighborhood(scale, Ball::Closed);
        // largest min-norm of a violating pair, per epsilon
        let mut worst: Vec<Option<T>> = vec![None; epsilons.len()];
        for i in 0..s.len() {
            buf.clear();
            nb.collect(i, &mut buf);
            for &j in buf.iter().filter(|&&j| j > i) {
                let delta = (f.value(i) - f.value(j)).norm();
                let m = norms[i].min_of(norms[j]);
                for (k, &eps) in epsilons.iter().enumerate() {
                    if delta > eps {
                        worst[k] = Some(worst[k].map_or(m, |w| w.max_of(m)));
                    }
                }
            }
        }
        for (k, &eps) in epsilons.iter().enumerate() {
            let r = worst[k].map_or(0, strict_ball_radius);
            entries.push(OscillationEntry {
                scale,
                epsilon: eps,
                radius: (r < depth || r == 0).then_some(r),
            });
        }
    }
    Ok(OscillationProfile { depth, entries })
}

const QUARTER: f64 = 0.25;

/// Splits a truncation along an approximate idempotent `f`, i.e. a slowly
/// oscillating function whose values eventually cluster near 0 and 1.
pub fn decomposition_from_idempotent<T: Scalar>(
    f: &ComplexMap<T>,
    x: &FiltrationSpace<T>,
    scales: &[T],
    depth: usize,
    margin: T,
) -> Result<SeparationVerdict<T>> {
    check_scales(scales)?;
    x.check_depth(depth)?;
    let space = f.source().clone();
    if space.len() != x.level_len(depth) || space.labels() != x.level(depth)?.labels() {
        return Err(CoarseError::Mismatch("function must live on the depth-level truncation".into()));
    }
    let norms = space.norms();
    let near = |z: Complex64| z.norm() < QUARTER || (z - 1.0).norm() < QUARTER;
    let exceptional = (0..space.len())
        .filter(|&i| !near(f.value(i)))
        .map(|i| norms[i])
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.max_of(d))));
    let r0 = exceptional.map_or(0, strict_ball_radius);
    let far = x.far_threshold(depth, margin);
    if T::from_int(r0 as i64) > far {
        return Err(CoarseError::NotNearIdempotent);
    }
    let r0t = T::from_int(r0 as i64);
    let in_a: Vec<bool> = (0..space.len())
        .map(|i| norms[i] >= r0t && f.value(i).norm() < QUARTER)
        .collect();
    let a_outside = in_a.iter().any(|&a| a);
    let b_outside = (0..space.len()).any(|i| !in_a[i] && norms[i] >= r0t);
    if !a_outside || !b_outside {
        return Err(CoarseError::TrivialIdempotent("f is eventually constant".into()));
    }
    for (side, name) in [(true, "A = f^-1(B(0, 1/4))"), (false, "B")] {
        if !(0..space.len()).any(|i| in_a[i] == side && norms[i] >= far) {
            return Err(CoarseError::OneSideBounded(name.into()));
        }
    }
    let witness = DecompositionWitness::from_partition(space, in_a, scales, depth, far)?;
    // separation must follow from the oscillation bound at ε = 1/4
    let prof = slow_oscillation_profile(f, scales, &[QUARTER])?;
    for (k, &(s, r)) in witness.radii().iter().enumerate() {
        let r_so = prof.entries[k].radius.unwrap_or(u64::MAX);
        if r > r_so.max(r0) {
            return Err(CoarseError::DegenerateWitness(format!(
                "radius {r} at scale {s} exceeds the oscillation bound {}",
                r_so.max(r0)
            )));
        }
    }
    Ok(SeparationVerdict {
        outcome: Outcome::WitnessFound,
        witness: Some(witness),
        scales: scales.to_vec(),
        depth,
    })
}

/// Components of the unit-step graph on `level(depth) \ B(x0, r)` that reach
/// the far shell, for each radius `r`. On graph-geodesic spaces this counts
/// unbounded components of ball complements.
pub fn ball_complement_components<T: Scalar>(
    x: &FiltrationSpace<T>,
    radii: &[u64],
    depth: usize,
    margin: T,
) -> Result<Vec<(u64, usize)>> {
    let space = x.level(depth)?;
    let norms = &x.norms()[..space.len()];
    let far = x.far_threshold(depth, margin);
    let counts = far_component_counts(&space, norms, T::from_int(2), far);
    Ok(radii
        .iter()
        .map(|&r| (r, counts.get(r as usize).copied().unwrap_or(0)))
        .collect())
}
