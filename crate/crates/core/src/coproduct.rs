//! Coarse coproduct metrics: binary, countable (sum) and box.
//!
//! Cross distances are routed through the chosen basepoints plus a
//! separating offset. Points of the combined space are stored sorted by
//! distance from the first component's basepoint, so the result is directly
//! a [`FiltrationSpace`].

use std::sync::Arc;

use serde::Serialize;

use crate::error::{CoarseError, Result};
use crate::filtration::FiltrationSpace;
use crate::maps::{control_at, PointMap};
use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;

/// Largest table a coproduct is allowed to materialise.
pub const MAX_COPRODUCT_POINTS: usize = 20_000;

/// Which summand a point of a coproduct came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Origin {
    /// 0 for the left summand of a binary coproduct; `i - 1` for `X_i`.
    pub component: usize,
    /// Index inside that summand.
    pub index: usize,
}

/// `X + Y` with basepoints `x0`, `y0`.
#[derive(Debug, Clone)]
pub struct CoproductSpace<T> {
    left: Arc<FiniteMetricSpace<T>>,
    right: Arc<FiniteMetricSpace<T>>,
    x0: usize,
    y0: usize,
    space: Arc<FiniteMetricSpace<T>>,
    origin: Vec<Origin>,
}

impl<T: Scalar> CoproductSpace<T> {
    /// Coproduct of two finite spaces. `x0`, `y0` index into `left`, `right`.
    pub fn new(
        left: Arc<FiniteMetricSpace<T>>,
        right: Arc<FiniteMetricSpace<T>>,
        x0: usize,
        y0: usize,
    ) -> Result<Self> {
        if x0 >= left.len() {
            return Err(CoarseError::MissingPoint(format!("left basepoint #{x0}")));
        }
        if y0 >= right.len() {
            return Err(CoarseError::MissingPoint(format!("right basepoint #{y0}")));
        }
        let n = left.len() + right.len();
        if n > MAX_COPRODUCT_POINTS {
            return Err(CoarseError::TooLarge(format!("coproduct of {n} points")));
        }
        let mut pts: Vec<(T, Origin)> = (0..left.len())
            .map(|i| (left.dist(x0, i), Origin { component: 0, index: i }))
            .chain((0..right.len()).map(|j| {
                (right.dist(y0, j) + T::one(), Origin { component: 1, index: j })
            }))
            .collect();
        sort_points(&mut pts);
        let origin: Vec<Origin> = pts.into_iter().map(|(_, o)| o).collect();
        let dist = |a: Origin, b: Origin| -> T {
            match (a.component, b.component) {
                (0, 0) => left.dist(a.index, b.index),
                (1, 1) => right.dist(a.index, b.index),
                (0, 1) => left.dist(a.index, x0) + T::one() + right.dist(y0, b.index),
                _ => left.dist(b.index, x0) + T::one() + right.dist(y0, a.index),
            }
        };
        let labels = origin
            .iter()
            .map(|o| match o.component {
                0 => format!("L:{}", left.label(o.index)),
                _ => format!("R:{}", right.label(o.index)),
            })
            .collect();
        let space = table_space(labels, &origin, dist);
        Ok(Self {
            left,
            right,
            x0,
            y0,
            space: Arc::new(space),
            origin,
        })
    }

    pub fn left(&self) -> &Arc<FiniteMetricSpace<T>> {
        &self.left
    }

    pub fn right(&self) -> &Arc<FiniteMetricSpace<T>> {
        &self.right
    }

    pub fn basepoints(&self) -> (usize, usize) {
        (self.x0, self.y0)
    }

    /// The combined metric space, basepoint `x0` at index 0.
    pub fn space(&self) -> &Arc<FiniteMetricSpace<T>> {
        &self.space
    }

    pub fn origin(&self, i: usize) -> Origin {
        self.origin[i]
    }

    /// Index in the combined space of a left (`component == 0`) or right point.
    pub fn inject(&self, component: usize, index: usize) -> usize {
        self.origin
            .iter()
            .position(|o| o.component == component && o.index == index)
            .expect("point of a summand")
    }

    pub fn injections(&self) -> (Vec<usize>, Vec<usize>) {
        let mut l = vec![0; self.left.len()];
        let mut r = vec![0; self.right.len()];
        for (i, o) in self.origin.iter().enumerate() {
            if o.component == 0 {
                l[o.index] = i;
            } else {
                r[o.index] = i;
            }
        }
        (l, r)
    }

    pub fn filtration(&self, name: impl Into<String>, max_level: usize) -> FiltrationSpace<T> {
        FiltrationSpace::from_space(name, (*self.space).clone(), max_level)
    }
}

fn sort_points<T: Scalar>(pts: &mut [(T, Origin)]) {
    pts.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.component.cmp(&b.1.component))
            .then(a.1.index.cmp(&b.1.index))
    });
}

fn table_space<T: Scalar>(
    labels: Vec<String>,
    origin: &[Origin],
    dist: impl Fn(Origin, Origin) -> T,
) -> FiniteMetricSpace<T> {
    let n = origin.len();
    let mut flat = vec![T::zero(); n * n];
    for (a, &oa) in origin.iter().enumerate() {
        for (b, &ob) in origin.iter().enumerate() {
            if a != b {
                flat[a * n + b] = dist(oa, ob);
            }
        }
    }
    FiniteMetricSpace::from_table_unchecked(labels, flat, 0)
}

/// Points of a filtration's deepest truncation within `radius` of `center`.
fn ball_indices<T: Scalar>(x: &FiltrationSpace<T>, center: usize, radius: T) -> Vec<usize> {
    let s = x.deepest();
    let mut idx: Vec<usize> = (0..s.len()).filter(|&i| s.dist(center, i) <= radius).collect();
    // keep the centre first so it becomes the restricted basepoint
    idx.retain(|&i| i != center);
    idx.insert(0, center);
    idx
}

/// Binary coarse coproduct of two filtrations, truncated to the largest level
/// that both filtrations cover completely.
pub fn binary_coproduct<T: Scalar>(
    x: &FiltrationSpace<T>,
    y: &FiltrationSpace<T>,
    x0: usize,
    y0: usize,
) -> Result<(CoproductSpace<T>, FiltrationSpace<T>)> {
    let (xs, ys) = (x.deepest(), y.deepest());
    if x0 >= xs.len() {
        return Err(CoarseError::MissingPoint(format!("basepoint #{x0} of {}", x.name())));
    }
    if y0 >= ys.len() {
        return Err(CoarseError::MissingPoint(format!("basepoint #{y0} of {}", y.name())));
    }
    let cap_x = x.max_level() as i64 - xs.norm(x0).floor_int() - i64::from(!xs.norm(x0).is_integral());
    let cap_y = y.max_level() as i64 - ys.norm(y0).floor_int() - 1 - i64::from(!ys.norm(y0).is_integral());
    let level = cap_x.min(cap_y).max(0);
    let li = ball_indices(x, x0, T::from_int(level));
    let ri = ball_indices(y, y0, T::from_int(level - 1));
    let left = Arc::new(xs.restrict(&li, 0));
    let right = Arc::new(ys.restrict(&ri, 0));
    let c = CoproductSpace::new(left, right, 0, 0)?;
    let f = c.filtration(format!("{}+{}", x.name(), y.name()), level as usize);
    Ok((c, f))
}

/// Metric variant for countable coproducts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoproductMode {
    /// Intra-component distances gain the offset `i`.
    Sum,
    /// Intra-component distances are unscaled.
    Box,
}

impl std::str::FromStr for CoproductMode {
    type Err = CoarseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "box" => Ok(Self::Box),
            _ => Err(CoarseError::InvalidParameter(format!("mode `{s}` (expected sum|box)"))),
        }
    }
}

/// Finite prefix `X_1, ..., X_k` of a countable coproduct.
#[derive(Debug, Clone)]
pub struct CountableCoproduct<T> {
    components: Vec<Arc<FiniteMetricSpace<T>>>,
    basepoints: Vec<usize>,
    mode: CoproductMode,
}

impl<T: Scalar> CountableCoproduct<T> {
    pub fn new(
        components: Vec<Arc<FiniteMetricSpace<T>>>,
        basepoints: Vec<usize>,
        mode: CoproductMode,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(CoarseError::Empty("component list"));
        }
        if basepoints.len() != components.len() {
            return Err(CoarseError::Mismatch("one basepoint per component".into()));
        }
        for (k, (c, &b)) in components.iter().zip(&basepoints).enumerate() {
            if b >= c.len() {
                return Err(CoarseError::MissingPoint(format!("basepoint #{b} of component {}", k + 1)));
            }
        }
        Ok(Self {
            components,
            basepoints,
            mode,
        })
    }

    pub fn mode(&self) -> CoproductMode {
        self.mode
    }

    pub fn components(&self) -> &[Arc<FiniteMetricSpace<T>>] {
        &self.components
    }

    /// Distance between point `a` of `X_i` and point `b` of `X_j`
    /// (components numbered from 1).
    pub fn distance(&self, i: usize, a: usize, j: usize, b: usize) -> T {
        let ti = T::from_int(i as i64);
        if i == j {
            if a == b {
                return T::zero();
            }
            let d = self.components[i - 1].dist(a, b);
            return match self.mode {
                CoproductMode::Sum => d + ti,
                CoproductMode::Box => d,
            };
        }
        let (xi, xj) = (&self.components[i - 1], &self.components[j - 1]);
        xi.dist(a, self.basepoints[i - 1]) + ti + T::from_int(j as i64) + xj.dist(b, self.basepoints[j - 1])
    }

    /// Largest level around `x_1` that the prefix covers completely.
    pub fn complete_level(&self, max_levels: &[usize]) -> usize {
        let k = self.components.len() as i64;
        let mut level = k + 1;
        for (idx, c) in self.components.iter().enumerate() {
            let i = idx as i64 + 1;
            let bp = c.norm(self.basepoints[idx]).floor_int();
            let cap = max_levels[idx] as i64 - bp
                + match (idx, self.mode) {
                    (0, CoproductMode::Sum) => 1,
                    (0, CoproductMode::Box) => 0,
                    _ => i + 1,
                };
            level = level.min(cap);
        }
        level.max(0) as usize
    }

    /// Materialises the ball of radius `level` around `x_1`.
    pub fn ball(&self, level: usize) -> Result<(Arc<FiniteMetricSpace<T>>, Vec<Origin>)> {
        let lv = T::from_int(level as i64);
        let mut pts = Vec::new();
        for (idx, c) in self.components.iter().enumerate() {
            for a in 0..c.len() {
                let d = self.distance(1, self.basepoints[0], idx + 1, a);
                if d <= lv {
                    pts.push((d, Origin { component: idx, index: a }));
                }
            }
        }
        if pts.len() > MAX_COPRODUCT_POINTS {
            return Err(CoarseError::TooLarge(format!("coproduct ball of {} points", pts.len())));
        }
        sort_points(&mut pts);
        let origin: Vec<Origin> = pts.into_iter().map(|(_, o)| o).collect();
        let labels = origin
            .iter()
            .map(|o| format!("{}:{}", o.component + 1, self.components[o.component].label(o.index)))
            .collect();
        let space = table_space(labels, &origin, |p, q| {
            self.distance(p.component + 1, p.index, q.component + 1, q.index)
        });
        Ok((Arc::new(space), origin))
    }

    /// Smallest component index `k` such that no cross pair meeting a
    /// component of index `>= k` lies within `radius` (offsets `i + j`
    /// alone exceed it).
    pub fn separation_index(&self, radius: T) -> usize {
        // cross pairs between X_i and X_j have distance >= i + j >= k + 1
        let mut k = 1usize;
        while T::from_int(k as i64 + 1) <= radius {
            k += 1;
        }
        k
    }
}

/// Countable coproduct of filtrations, returned as a filtration of the
/// largest complete level.
pub fn countable_coproduct<T: Scalar>(
    components: &[FiltrationSpace<T>],
    basepoints: Option<Vec<usize>>,
    mode: CoproductMode,
) -> Result<(CountableCoproduct<T>, FiltrationSpace<T>, Vec<Origin>)> {
    if components.is_empty() {
        return Err(CoarseError::Empty("component list"));
    }
    let basepoints = basepoints.unwrap_or_else(|| vec![0; components.len()]);
    let cc = CountableCoproduct::new(
        components.iter().map(|c| Arc::new(c.deepest().clone())).collect(),
        basepoints,
        mode,
    )?;
    let levels: Vec<usize> = components.iter().map(|c| c.max_level()).collect();
    let level = cc.complete_level(&levels);
    let (space, origin) = cc.ball(level)?;
    let name = components.iter().map(|c| c.name()).collect::<Vec<_>>().join(",");
    let filt = FiltrationSpace::from_space(format!("{mode:?}({name})").to_lowercase(), (*space).clone(), level);
    Ok((cc, filt, origin))
}

/// The map `h` on `X + Y` induced by `f: X -> Z` and `g: Y -> Z`.
#[derive(Debug, Clone)]
pub struct InducedMap<T> {
    pub map: PointMap<T>,
    /// `d(f(x0), g(y0))`.
    pub offset: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct InducedBoundRow<T> {
    pub radius: T,
    pub rho_h: T,
    pub rho_f: T,
    pub rho_g: T,
    pub offset: T,
    pub holds: bool,
}

fn same_space<T: Scalar>(a: &FiniteMetricSpace<T>, b: &FiniteMetricSpace<T>) -> bool {
    a.len() == b.len() && a.labels() == b.labels()
}

pub fn induced_map<T: Scalar>(
    f: &PointMap<T>,
    g: &PointMap<T>,
    c: &CoproductSpace<T>,
) -> Result<InducedMap<T>> {
    if !same_space(f.target(), g.target()) {
        return Err(CoarseError::Mismatch("f and g must share a target".into()));
    }
    if !same_space(f.source(), c.left()) || !same_space(g.source(), c.right()) {
        return Err(CoarseError::Mismatch("f, g must be defined on the coproduct's summands".into()));
    }
    let values = (0..c.space().len())
        .map(|i| {
            let o = c.origin(i);
            if o.component == 0 {
                f.apply(o.index)
            } else {
                g.apply(o.index)
            }
        })
        .collect();
    let (x0, y0) = c.basepoints();
    let offset = f.target().dist(f.apply(x0), g.apply(y0));
    Ok(InducedMap {
        map: PointMap::new(c.space().clone(), f.target().clone(), values)?,
        offset,
    })
}

/// Checks `ρ_h(R) <= ρ_f(R) + r + ρ_g(R)` at each radius, exactly.
pub fn induced_bound<T: Scalar>(
    h: &InducedMap<T>,
    f: &PointMap<T>,
    g: &PointMap<T>,
    radii: &[T],
) -> Vec<InducedBoundRow<T>> {
    radii
        .iter()
        .map(|&r| {
            let (rho_h, rho_f, rho_g) = (control_at(&h.map, r), control_at(f, r), control_at(g, r));
            InducedBoundRow {
                radius: r,
                rho_h,
                rho_f,
                rho_g,
                offset: h.offset,
                holds: rho_h <= rho_f + h.offset + rho_g,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport<T> {
    /// `sup d(h'ι_X, f)`.
    pub left_closeness: T,
    /// `sup d(h'ι_Y, g)`.
    pub right_closeness: T,
    /// `sup d(h', h)`.
    pub closeness_to_induced: T,
}

/// Closeness of a competing map `h'` on the coproduct to the induced map.
pub fn uniqueness_report<T: Scalar>(h: &InducedMap<T>, h_prime: &PointMap<T>, c: &CoproductSpace<T>) -> Result<UniquenessReport<T>> {
    if h_prime.source().len() != c.space().len() || !same_space(h_prime.target(), h.map.target()) {
        return Err(CoarseError::Mismatch("h' must map the coproduct into the target of h".into()));
    }
    let z = h.map.target();
    let mut rep = UniquenessReport {
        left_closeness: T::zero(),
        right_closeness: T::zero(),
        closeness_to_induced: T::zero(),
    };
    for i in 0..c.space().len() {
        let d = z.dist(h_prime.apply(i), h.map.apply(i));
        if c.origin(i).component == 0 {
            rep.left_closeness = rep.left_closeness.max_of(d);
        } else {
            rep.right_closeness = rep.right_closeness.max_of(d);
        }
        rep.closeness_to_induced = rep.closeness_to_induced.max_of(d);
    }
    Ok(rep)
}
