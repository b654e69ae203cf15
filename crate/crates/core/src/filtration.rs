//! Filtrations of finite truncations and the built-in space catalog.
//!
//! Level `n` of a [`FiltrationSpace`] is the closed ball of radius `n`
//! around the basepoint. Points are stored sorted by basepoint distance, so
//! every level is a prefix of the deepest truncation and the basepoint is
//! always index 0.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoarseError, Result};
use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;

/// Upper bound on the number of points a built-in filtration may hold.
pub const MAX_POINTS: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct FiltrationSpace<T> {
    name: String,
    deepest: FiniteMetricSpace<T>,
    norms: Vec<T>,
    max_level: usize,
    /// `level_len[n]` = number of points of norm `<= n`.
    level_len: Vec<usize>,
}

impl<T: Scalar> FiltrationSpace<T> {
    /// Wraps a finite space, reordering its points by basepoint distance.
    /// Points beyond `max_level` are dropped.
    pub fn from_space(name: impl Into<String>, space: FiniteMetricSpace<T>, max_level: usize) -> Self {
        let norms = space.norms();
        let sorted = norms.windows(2).all(|w| w[0] <= w[1]) && space.basepoint() == 0;
        let (deepest, norms) = if sorted {
            (space, norms)
        } else {
            let mut order: Vec<usize> = (0..space.len()).collect();
            order.sort_by(|&a, &b| norms[a].partial_cmp(&norms[b]).unwrap().then(a.cmp(&b)));
            let bp = order.iter().position(|&i| i == space.basepoint()).unwrap();
            order.swap(0, bp);
            let norms = order.iter().map(|&i| norms[i]).collect();
            (space.restrict(&order, 0), norms)
        };
        let keep = norms
            .iter()
            .take_while(|&&d| d <= T::from_int(max_level as i64))
            .count();
        let deepest = deepest.truncate(keep);
        let mut norms = norms;
        norms.truncate(keep);
        let mut level_len = Vec::with_capacity(max_level + 1);
        let mut k = 0;
        for n in 0..=max_level {
            while k < keep && norms[k] <= T::from_int(n as i64) {
                k += 1;
            }
            level_len.push(k);
        }
        Self {
            name: name.into(),
            deepest,
            norms,
            max_level,
            level_len,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// The deepest truncation held by this filtration.
    pub fn deepest(&self) -> &FiniteMetricSpace<T> {
        &self.deepest
    }

    pub fn level(&self, n: usize) -> Result<FiniteMetricSpace<T>> {
        self.check_depth(n)?;
        Ok(self.deepest.truncate(self.level_len[n]))
    }

    pub fn level_len(&self, n: usize) -> usize {
        self.level_len[n.min(self.max_level)]
    }

    /// Basepoint distances of the deepest truncation, non-decreasing.
    pub fn norms(&self) -> &[T] {
        &self.norms
    }

    pub fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.max_level {
            Err(CoarseError::DepthExceeded {
                requested: depth,
                capacity: self.max_level,
            })
        } else {
            Ok(())
        }
    }

    /// Persistence margin actually used at `depth`: the configured margin,
    /// widened to the largest radial gap of the truncation so that sparse
    /// spaces (whose outer shell is empty) still have far points.
    pub fn effective_margin(&self, depth: usize, margin: T) -> T {
        let len = self.level_len(depth);
        let norms = &self.norms[..len];
        let mut gap = T::from_int(depth as i64) - norms[len - 1];
        for w in norms.windows(2) {
            gap = gap.max_of(w[1] - w[0]);
        }
        margin.max_of(gap)
    }

    /// Points of level `depth` with norm at least `depth - margin`.
    pub fn far_threshold(&self, depth: usize, margin: T) -> T {
        T::from_int(depth as i64) - self.effective_margin(depth, margin)
    }
}

/// Names accepted by [`builtin_space`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceName {
    Integers,
    Naturals,
    Squares,
    Grid(usize),
    /// Multiples of a fixed step on the half-line.
    HalflineNet(u32),
    /// Two parallel rays `{(n,0)} ∪ {(n,1)}` with the metric of `Z^2`.
    ParallelRays,
    Custom(String),
}

impl SpaceName {
    pub fn catalog() -> Vec<(&'static str, &'static str)> {
        vec![
            ("integers", "Z with |a-b|, basepoint 0"),
            ("naturals", "N with |a-b|, basepoint 0"),
            ("squares", "{n^2 : n in N} with |a-b|, basepoint 0"),
            ("grid(d)", "Z^d (d <= 3) with the l1 metric, basepoint the origin"),
            ("halfline-net(s)", "{k*s : k in N}, a net of [0, inf), basepoint 0"),
            ("parallel-rays", "{(n,0)} u {(n,1)} in Z^2 with the l1 metric"),
            ("custom(file)", "JSON file with `points` and a row-major `dist` table"),
        ]
    }
}

impl fmt::Display for SpaceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceName::Integers => write!(f, "integers"),
            SpaceName::Naturals => write!(f, "naturals"),
            SpaceName::Squares => write!(f, "squares"),
            SpaceName::Grid(d) => write!(f, "grid({d})"),
            SpaceName::HalflineNet(s) => write!(f, "halfline-net({s})"),
            SpaceName::ParallelRays => write!(f, "parallel-rays"),
            SpaceName::Custom(p) => write!(f, "custom({p})"),
        }
    }
}

/// Splits `name(arg)` or `name:arg`.
fn split_arg(s: &str) -> (&str, Option<&str>) {
    if let Some(open) = s.find('(') {
        if let Some(inner) = s[open + 1..].strip_suffix(')') {
            return (&s[..open], Some(inner));
        }
    }
    match s.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    }
}

impl FromStr for SpaceName {
    type Err = CoarseError;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = split_arg(s.trim());
        let int_arg = |default: u32| -> Result<u32> {
            arg.map_or(Ok(default), |a| {
                a.parse()
                    .map_err(|_| CoarseError::InvalidParameter(format!("`{a}` is not an integer")))
            })
        };
        Ok(match head {
            "integers" | "Z" => SpaceName::Integers,
            "naturals" | "N" => SpaceName::Naturals,
            "squares" => SpaceName::Squares,
            "grid" => SpaceName::Grid(int_arg(2)? as usize),
            "halfline-net" => SpaceName::HalflineNet(int_arg(2)?),
            "parallel-rays" => SpaceName::ParallelRays,
            "custom" => SpaceName::Custom(
                arg.ok_or_else(|| CoarseError::InvalidParameter("custom needs a file".into()))?
                    .to_string(),
            ),
            _ => return Err(CoarseError::UnknownSpace(s.to_string())),
        })
    }
}

/// Builds a catalog space whose deepest truncation has level `max_level`.
pub fn builtin_space<T: Scalar>(name: &SpaceName, max_level: usize) -> Result<FiltrationSpace<T>> {
    let lvl = max_level as i64;
    let (dim, pts): (usize, Vec<Vec<i64>>) = match name {
        SpaceName::Integers => (
            1,
            std::iter::once(vec![0])
                .chain((1..=lvl).flat_map(|k| [vec![k], vec![-k]]))
                .collect(),
        ),
        SpaceName::Naturals => (1, (0..=lvl).map(|k| vec![k]).collect()),
        SpaceName::Squares => (
            1,
            (0..).map(|k: i64| k * k).take_while(|&s| s <= lvl).map(|s| vec![s]).collect(),
        ),
        SpaceName::HalflineNet(step) => {
            if *step == 0 {
                return Err(CoarseError::InvalidParameter("step must be positive".into()));
            }
            (1, (0..=lvl / *step as i64).map(|k| vec![k * *step as i64]).collect())
        }
        SpaceName::Grid(d) => {
            if *d == 0 || *d > crate::metric::MAX_LATTICE_DIM {
                return Err(CoarseError::InvalidParameter(format!("grid dimension {d}")));
            }
            (*d, l1_ball(*d, lvl)?)
        }
        SpaceName::ParallelRays => (
            2,
            std::iter::once(vec![0, 0])
                .chain((0..=lvl).flat_map(|n| [vec![n, 1], vec![n + 1, 0]]))
                .filter(|p| p[0] + p[1] <= lvl)
                .collect(),
        ),
        SpaceName::Custom(path) => {
            let space = load_custom_space(Path::new(path))?;
            let max = space
                .norms()
                .into_iter()
                .fold(T::zero(), T::max_of)
                .floor_int() as usize
                + 1;
            return Ok(FiltrationSpace::from_space(name.to_string(), space, max_level.min(max)));
        }
    };
    if pts.len() > MAX_POINTS {
        return Err(CoarseError::TooLarge(format!("{} points", pts.len())));
    }
    let space = FiniteMetricSpace::lattice(dim, pts, 0)?;
    Ok(FiltrationSpace::from_space(name.to_string(), space, max_level))
}

/// Points of the closed l1 ball of radius `r` in `Z^d`, sorted by norm.
fn l1_ball(d: usize, r: i64) -> Result<Vec<Vec<i64>>> {
    // |ball| <= (2r+1)^d; refuse early rather than allocate.
    let est = (2 * r as u128 + 1).pow(d as u32);
    if d > 1 && est > 8 * MAX_POINTS as u128 {
        return Err(CoarseError::TooLarge(format!("grid({d}) at level {r}")));
    }
    let mut out = Vec::new();
    fn rec(d: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for c in (-left..=left).rev() {
            cur.push(c);
            rec(d, left - c.abs(), cur, out);
            cur.pop();
        }
    }
    rec(d, r, &mut Vec::new(), &mut out);
    out.sort_by_key(|p| p.iter().map(|c| c.abs()).sum::<i64>());
    Ok(out)
}

/// On-disk form of a finite metric space.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CustomSpaceFile {
    pub points: Vec<String>,
    pub dist: Vec<Vec<serde_json::Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<String>,
}

impl CustomSpaceFile {
    pub fn from_space<T: Scalar>(space: &FiniteMetricSpace<T>) -> Self {
        let to_num = |v: T| {
            if v.is_integral() {
                serde_json::Number::from(v.floor_int())
            } else {
                serde_json::Number::from_f64(v.to_f64_lossy()).expect("finite distance")
            }
        };
        Self {
            points: space.labels().to_vec(),
            dist: space
                .distance_table()
                .into_iter()
                .map(|row| row.into_iter().map(to_num).collect())
                .collect(),
            basepoint: Some(space.label(space.basepoint()).to_string()),
        }
    }

    pub fn into_space<T: Scalar>(self) -> Result<FiniteMetricSpace<T>> {
        let basepoint = match &self.basepoint {
            None => 0,
            Some(b) => self
                .points
                .iter()
                .position(|p| p == b)
                .ok_or_else(|| CoarseError::MissingPoint(b.clone()))?,
        };
        let mut rows = Vec::with_capacity(self.dist.len());
        for row in &self.dist {
            let mut r = Vec::with_capacity(row.len());
            for v in row {
                let x = v
                    .as_f64()
                    .ok_or_else(|| CoarseError::Malformed(format!("distance {v}")))?;
                let t = <T as num_traits::NumCast>::from(x)
                    .filter(|t: &T| t.to_f64_lossy() == x)
                    .ok_or_else(|| CoarseError::Malformed(format!("distance {v} not representable")))?;
                r.push(t);
            }
            rows.push(r);
        }
        FiniteMetricSpace::from_table(self.points, rows, basepoint)
    }
}

pub fn load_custom_space<T: Scalar>(path: &Path) -> Result<FiniteMetricSpace<T>> {
    let text = std::fs::read_to_string(path)?;
    let file: CustomSpaceFile =
        serde_json::from_str(&text).map_err(|e| CoarseError::Malformed(e.to_string()))?;
    file.into_space()
}
