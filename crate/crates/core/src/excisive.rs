//! ω-excisive covers `X = A ∪ B`: every point near both sides is near
//! `A ∩ B`, with a distance bound `S(R)` depending only on `R`.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CoarseError, Result};
use crate::filtration::FiltrationSpace;
use crate::maps::{control_at, PointMap};
use crate::metric::{Ball, FiniteMetricSpace};
use crate::scalar::Scalar;

/// Half-space style subsets of a lattice: `x>=0`, `y<=0|x<=0`, `all`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSpec {
    clauses: Vec<Clause>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Clause {
    All,
    Cmp { axis: usize, op: Cmp, value: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

impl FromStr for SubsetSpec {
    type Err = CoarseError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CoarseError::InvalidParameter(format!("subset `{s}`"));
        let clauses = s
            .split('|')
            .map(|c| {
                let c = c.trim();
                if c == "all" {
                    return Ok(Clause::All);
                }
                let axis = match c.chars().next() {
                    Some('x') => 0,
                    Some('y') => 1,
                    Some('z') => 2,
                    _ => return Err(bad()),
                };
                let rest = &c[1..];
                let (op, num) = [(">=", Cmp::Ge), ("<=", Cmp::Le), (">", Cmp::Gt), ("<", Cmp::Lt), ("=", Cmp::Eq)]
                    .iter()
                    .find_map(|(tok, op)| rest.strip_prefix(tok).map(|n| (*op, n)))
                    .ok_or_else(bad)?;
                let value = num.trim().parse().map_err(|_| bad())?;
                Ok(Clause::Cmp { axis, op, value })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { clauses })
    }
}

impl SubsetSpec {
    pub fn contains(&self, coords: &[i64]) -> bool {
        self.clauses.iter().any(|c| match *c {
            Clause::All => true,
            Clause::Cmp { axis, op, value } => coords.get(axis).is_some_and(|&x| match op {
                Cmp::Ge => x >= value,
                Cmp::Gt => x > value,
                Cmp::Le => x <= value,
                Cmp::Lt => x < value,
                Cmp::Eq => x == value,
            }),
        })
    }

    fn needs_coords(&self) -> bool {
        self.clauses.iter().any(|c| !matches!(c, Clause::All))
    }
}

/// A cover of the deepest truncation of a filtration by two subsets.
#[derive(Debug, Clone)]
pub struct CoverDecomposition<T> {
    space: FiltrationSpace<T>,
    in_a: Vec<bool>,
    in_b: Vec<bool>,
}

impl<T: Scalar> CoverDecomposition<T> {
    pub fn new(space: FiltrationSpace<T>, in_a: Vec<bool>, in_b: Vec<bool>) -> Result<Self> {
        let n = space.deepest().len();
        if in_a.len() != n || in_b.len() != n {
            return Err(CoarseError::Mismatch("cover size".into()));
        }
        if let Some(i) = (0..n).find(|&i| !in_a[i] && !in_b[i]) {
            return Err(CoarseError::InvalidParameter(format!(
                "`{}` lies in neither A nor B",
                space.deepest().label(i)
            )));
        }
        if !(0..n).any(|i| in_a[i] && in_b[i]) {
            return Err(CoarseError::EmptyIntersection);
        }
        Ok(Self { space, in_a, in_b })
    }

    pub fn from_predicates(
        space: FiltrationSpace<T>,
        a: impl Fn(usize) -> bool,
        b: impl Fn(usize) -> bool,
    ) -> Result<Self> {
        let n = space.deepest().len();
        let in_a = (0..n).map(&a).collect();
        let in_b = (0..n).map(&b).collect();
        Self::new(space, in_a, in_b)
    }

    /// Cover of a lattice-backed filtration from two subset specs.
    pub fn from_specs(space: FiltrationSpace<T>, a: &SubsetSpec, b: &SubsetSpec) -> Result<Self> {
        let deep = space.deepest();
        if (a.needs_coords() || b.needs_coords()) && deep.coords(0).is_none() {
            return Err(CoarseError::InvalidParameter("subset specs need a lattice space".into()));
        }
        let pick = |s: &SubsetSpec, i: usize| !s.needs_coords() || s.contains(deep.coords(i).unwrap());
        let in_a = (0..deep.len()).map(|i| pick(a, i)).collect();
        let in_b = (0..deep.len()).map(|i| pick(b, i)).collect();
        Self::new(space.clone(), in_a, in_b)
    }

    pub fn space(&self) -> &FiltrationSpace<T> {
        &self.space
    }

    pub fn in_a(&self, i: usize) -> bool {
        self.in_a[i]
    }

    pub fn in_b(&self, i: usize) -> bool {
        self.in_b[i]
    }

    /// Indices of `A` within the level-`depth` truncation.
    pub fn a_indices(&self, depth: usize) -> Vec<usize> {
        (0..self.space.level_len(depth)).filter(|&i| self.in_a[i]).collect()
    }

    pub fn b_indices(&self, depth: usize) -> Vec<usize> {
        (0..self.space.level_len(depth)).filter(|&i| self.in_b[i]).collect()
    }

    pub fn intersection(&self, depth: usize) -> Vec<usize> {
        (0..self.space.level_len(depth))
            .filter(|&i| self.in_a[i] && self.in_b[i])
            .collect()
    }

    /// `S(R)` on the level-`depth` truncation: the largest distance from a
    /// point of `B(A, R) ∩ B(B, R)` to `A ∩ B`.
    pub fn overlap_bound(&self, radius: T, depth: usize) -> Result<T> {
        let x = self.space.level(depth)?;
        let both = self.intersection(depth);
        if both.is_empty() {
            return Err(CoarseError::EmptyIntersection);
        }
        let nb = x.neighborhood(radius, Ball::Open);
        let mut buf = Vec::new();
        let mut worst = T::zero();
        for i in 0..x.len() {
            if self.in_a[i] && self.in_b[i] {
                continue;
            }
            buf.clear();
            nb.collect(i, &mut buf);
            let other_side = |j: usize| if self.in_a[i] { self.in_b[j] } else { self.in_a[j] };
            if !buf.iter().any(|&j| other_side(j)) {
                continue;
            }
            let d = both.iter().map(|&c| x.dist(i, c)).fold(None, |m: Option<T>, d| {
                Some(m.map_or(d, |m| m.min_of(d)))
            });
            worst = worst.max_of(d.unwrap());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcisiveProfile<T> {
    pub radii: Vec<T>,
    pub depths: Vec<usize>,
    /// `table[k][j]` is `S(radii[j])` at `depths[k]`.
    pub table: Vec<Vec<T>>,
    /// Per radius: whether `S` still changes over the top half of depths.
    pub divergent: Vec<bool>,
}

impl<T: Scalar> ExcisiveProfile<T> {
    pub fn is_divergent(&self) -> bool {
        self.divergent.iter().any(|&d| d)
    }

    pub fn deepest(&self) -> usize {
        *self.depths.last().unwrap()
    }

    /// `S(R)` at the deepest tested depth.
    pub fn bound_at(&self, radius: T) -> Option<T> {
        let j = self.radii.iter().position(|&r| r == radius)?;
        Some(self.table.last().unwrap()[j])
    }
}

/// Flags columns whose values are not constant over the top half of rows.
pub(crate) fn divergence_flags<V: PartialEq + Copy>(table: &[Vec<V>]) -> Vec<bool> {
    let Some(first) = table.first() else {
        return Vec::new();
    };
    let top = &table[table.len() / 2..];
    (0..first.len())
        .map(|j| top.windows(2).any(|w| w[0][j] != w[1][j]))
        .collect()
}

pub(crate) fn sorted_depths(depths: &[usize]) -> Result<Vec<usize>> {
    if depths.is_empty() {
        return Err(CoarseError::Empty("depths"));
    }
    let mut d = depths.to_vec();
    d.sort_unstable();
    d.dedup();
    Ok(d)
}

pub fn excisive_profile<T: Scalar>(
    d: &CoverDecomposition<T>,
    radii: &[T],
    depths: &[usize],
) -> Result<ExcisiveProfile<T>> {
    if radii.is_empty() {
        return Err(CoarseError::Empty("radii"));
    }
    let depths = sorted_depths(depths)?;
    d.space.check_depth(*depths.last().unwrap())?;
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    let table = depths
        .par_iter()
        .map(|&n| radii.iter().map(|&r| d.overlap_bound(r, n)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let divergent = divergence_flags(&table);
    Ok(ExcisiveProfile {
        radii,
        depths,
        table,
        divergent,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueBoundRow<T> {
    pub radius: T,
    pub s: T,
    /// Control of `h` over pairs split between `A` and `X \ A`.
    pub rho_cross: T,
    pub rho_h: T,
    pub rho_f_s1: T,
    pub rho_f_far: T,
    pub closeness: T,
    pub rho_g_s1: T,
    /// `ρ_f(S+1) + ρ_f(2S+2+R) + c + ρ_g(S+1)`.
    pub bound: T,
    /// Cross pairs obey `bound`; same-side pairs obey `ρ_f(R)` or `ρ_g(R)`.
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct GlueResult<T> {
    pub map: PointMap<T>,
    pub closeness: T,
    pub rows: Vec<GlueBoundRow<T>>,
}

fn label_index<T: Scalar>(space: &FiniteMetricSpace<T>) -> HashMap<&str, usize> {
    space.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
}

fn restricted_map<T: Scalar>(
    f: &PointMap<T>,
    x: &FiniteMetricSpace<T>,
    expect: &[usize],
    side: &str,
) -> Result<Vec<Option<usize>>> {
    let idx = label_index(f.source());
    if f.source().len() != expect.len() {
        return Err(CoarseError::Mismatch(format!("{side} map must be defined exactly on {side}")));
    }
    let mut out = vec![None; x.len()];
    for &i in expect {
        let j = idx
            .get(x.label(i))
            .ok_or_else(|| CoarseError::MissingPoint(x.label(i).to_string()))?;
        out[i] = Some(f.apply(*j));
    }
    Ok(out)
}

/// Glues `f` on `A` and `g` on `B` into `h = f` on `A`, `g` on `X \ A`, at
/// the deepest depth of `profile`, and checks the control bound per radius.
pub fn pushout_glue<T: Scalar>(
    f: &PointMap<T>,
    g: &PointMap<T>,
    d: &CoverDecomposition<T>,
    profile: &ExcisiveProfile<T>,
    max_closeness: Option<T>,
) -> Result<GlueResult<T>> {
    if profile.is_divergent() {
        return Err(CoarseError::Divergent("cover is not excisive at the tested radii".into()));
    }
    let target = f.target().clone();
    if !Arc::ptr_eq(&target, g.target()) && target.labels() != g.target().labels() {
        return Err(CoarseError::Mismatch("f and g need a common target".into()));
    }
    let depth = profile.deepest();
    let x = Arc::new(d.space.level(depth)?);
    let fa = restricted_map(f, &x, &d.a_indices(depth), "A")?;
    let gb = restricted_map(g, &x, &d.b_indices(depth), "B")?;
    let closeness = d
        .intersection(depth)
        .iter()
        .map(|&i| target.dist(fa[i].unwrap(), gb[i].unwrap()))
        .fold(T::zero(), T::max_of);
    if let Some(limit) = max_closeness {
        if closeness > limit {
            return Err(CoarseError::NotClose(format!("f and g differ by {closeness} on A ∩ B")));
        }
    }
    let values: Vec<usize> = (0..x.len())
        .map(|i| if d.in_a[i] { fa[i].unwrap() } else { gb[i].unwrap() })
        .collect();
    let h = PointMap::new(x.clone(), target.clone(), values)?;
    let one = T::one();
    let two = one + one;
    let mut rows = Vec::new();
    let mut buf = Vec::new();
    for (j, &r) in profile.radii.iter().enumerate() {
        let s = profile.table.last().unwrap()[j];
        let rho_f_s1 = control_at(f, s + one);
        let rho_f_far = control_at(f, two * s + two + r);
        let rho_g_s1 = control_at(g, s + one);
        let bound = rho_f_s1 + rho_f_far + closeness + rho_g_s1;
        let nb = x.neighborhood(r, Ball::Closed);
        let (mut cross, mut full, mut same_ok) = (T::zero(), T::zero(), true);
        let (rho_f_r, rho_g_r) = (control_at(f, r), control_at(g, r));
        for i in 0..x.len() {
            buf.clear();
            nb.collect(i, &mut buf);
            for &k in &buf {
                let dh = h.image_dist(i, k);
                full = full.max_of(dh);
                match (d.in_a[i], d.in_a[k]) {
                    (true, true) => same_ok &= dh <= rho_f_r,
                    (false, false) => same_ok &= dh <= rho_g_r,
                    _ => cross = cross.max_of(dh),
                }
            }
        }
        rows.push(GlueBoundRow {
            radius: r,
            s,
            rho_cross: cross,
            rho_h: full,
            rho_f_s1,
            rho_f_far,
            closeness,
            rho_g_s1,
            bound,
            holds: same_ok && cross <= bound,
        });
    }
    Ok(GlueResult { map: h, closeness, rows })
}

/// Metric on the level-`depth` truncation that forces paths between
/// `A \ B` and `B \ A` through `A ∩ B`.
pub fn glued_metric<T: Scalar>(d: &CoverDecomposition<T>, depth: usize) -> Result<FiniteMetricSpace<T>> {
    let x = d.space.level(depth)?;
    let both = d.intersection(depth);
    if both.is_empty() {
        return Err(CoarseError::EmptyIntersection);
    }
    let n = x.len();
    let only_a = |i: usize| d.in_a[i] && !d.in_b[i];
    let only_b = |i: usize| d.in_b[i] && !d.in_a[i];
    let to_both: Vec<Vec<T>> = (0..n).map(|i| both.iter().map(|&c| x.dist(i, c)).collect()).collect();
    let mut flat = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            flat.push(if (only_a(i) && only_b(j)) || (only_b(i) && only_a(j)) {
                to_both[i]
                    .iter()
                    .zip(&to_both[j])
                    .map(|(&p, &q)| p + q)
                    .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.min_of(v))))
                    .unwrap()
            } else {
                x.dist(i, j)
            });
        }
    }
    // a metric by construction; the O(n³) axiom scan is left to callers
    Ok(FiniteMetricSpace::from_table_unchecked(x.labels().to_vec(), flat, x.basepoint()))
}

/// Identity `(X, d) -> (X, d′)` on the level-`depth` truncation.
pub fn identity_to_glued<T: Scalar>(d: &CoverDecomposition<T>, depth: usize) -> Result<PointMap<T>> {
    let x = Arc::new(d.space.level(depth)?);
    let glued = Arc::new(glued_metric(d, depth)?);
    PointMap::new(x.clone(), glued, (0..x.len()).collect())
}
