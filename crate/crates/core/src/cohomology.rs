//! Integer coarse cochains of degree at most 2 on a truncation, and the
//! correspondence between separated decompositions and nontrivial
//! 1-cocycles.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::connect::DecompositionWitness;
use crate::error::{CoarseError, Result};
use crate::excisive::{divergence_flags, sorted_depths};
use crate::metric::FiniteMetricSpace;
use crate::scalar::{strict_ball_radius, Scalar};

pub const MAX_DEGREE: usize = 2;

/// A finitely supported function on `(q+1)`-tuples of points.
#[derive(Debug, Clone)]
pub struct Cochain<T> {
    space: Arc<FiniteMetricSpace<T>>,
    degree: usize,
    values: HashMap<Vec<usize>, i64>,
}

impl<T: Scalar> Cochain<T> {
    pub fn zero(space: Arc<FiniteMetricSpace<T>>, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(CoarseError::UnsupportedDegree(degree));
        }
        Ok(Self {
            space,
            degree,
            values: HashMap::new(),
        })
    }

    /// Degree-0 cochain from point values.
    pub fn from_values(space: Arc<FiniteMetricSpace<T>>, values: &[i64]) -> Result<Self> {
        if values.len() != space.len() {
            return Err(CoarseError::Mismatch("one value per point".into()));
        }
        let mut c = Self::zero(space, 0)?;
        for (i, &v) in values.iter().enumerate() {
            c.set(&[i], v);
        }
        Ok(c)
    }

    /// Evaluates `f` on every tuple. Intended for small truncations.
    pub fn from_fn(space: Arc<FiniteMetricSpace<T>>, degree: usize, f: impl Fn(&[usize]) -> i64) -> Result<Self> {
        let mut c = Self::zero(space, degree)?;
        let n = c.space.len();
        let mut t = vec![0usize; degree + 1];
        'outer: loop {
            let v = f(&t);
            c.set(&t, v);
            for k in (0..t.len()).rev() {
                t[k] += 1;
                if t[k] < n {
                    continue 'outer;
                }
                t[k] = 0;
            }
            break;
        }
        Ok(c)
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace<T>> {
        &self.space
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, t: &[usize]) -> i64 {
        debug_assert_eq!(t.len(), self.degree + 1);
        self.values.get(t).copied().unwrap_or(0)
    }

    pub fn set(&mut self, t: &[usize], v: i64) {
        assert_eq!(t.len(), self.degree + 1, "tuple length");
        assert!(t.iter().all(|&i| i < self.space.len()), "tuple outside the space");
        if v == 0 {
            self.values.remove(t);
        } else {
            self.values.insert(t.to_vec(), v);
        }
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    /// Support in lexicographic order.
    pub fn support(&self) -> Vec<(Vec<usize>, i64)> {
        let sorted: BTreeMap<_, _> = self.values.iter().map(|(k, &v)| (k.clone(), v)).collect();
        sorted.into_iter().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ_i (-1)^i φ(x_0, …, x̂_i, …, x_{q+1})` at one tuple.
    pub fn coboundary_at(&self, t: &[usize]) -> i64 {
        debug_assert_eq!(t.len(), self.degree + 2);
        let mut face = Vec::with_capacity(t.len() - 1);
        let mut sum = 0;
        for i in 0..t.len() {
            face.clear();
            face.extend(t.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &x)| x));
            let v = self.get(&face);
            sum += if i % 2 == 0 { v } else { -v };
        }
        sum
    }

    /// `δφ`, computed only on tuples having a face in the support.
    pub fn coboundary(&self) -> Result<Self> {
        if self.degree >= MAX_DEGREE {
            return Err(CoarseError::UnsupportedDegree(self.degree));
        }
        let mut out = Self::zero(self.space.clone(), self.degree + 1)?;
        let n = self.space.len();
        let mut t = Vec::with_capacity(self.degree + 2);
        for face in self.values.keys() {
            for pos in 0..=face.len() {
                for x in 0..n {
                    t.clear();
                    t.extend_from_slice(&face[..pos]);
                    t.push(x);
                    t.extend_from_slice(&face[pos..]);
                    if !out.values.contains_key(&t) {
                        let v = self.coboundary_at(&t);
                        out.set(&t, v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// For degree 1: `p(x) = φ(x0, x)`. The cocycle identity at
    /// `(x0, a, b)` says exactly that `φ(a, b) = p(b) - p(a)`.
    fn basepoint_potential(&self) -> Vec<i64> {
        let x0 = self.space.basepoint();
        (0..self.space.len()).map(|x| self.get(&[x0, x])).collect()
    }

    /// First tuple where the cocycle identity fails, if any.
    pub fn cocycle_violation(&self) -> Option<Vec<usize>> {
        match self.degree {
            0 => (0..self.space.len())
                .flat_map(|a| (0..self.space.len()).map(move |b| (a, b)))
                .find(|&(a, b)| self.get(&[b]) != self.get(&[a]))
                .map(|(a, b)| vec![a, b]),
            1 => {
                let p = self.basepoint_potential();
                let x0 = self.space.basepoint();
                let n = self.space.len();
                for a in 0..n {
                    for b in 0..n {
                        if self.get(&[a, b]) != p[b] - p[a] {
                            return Some(vec![x0, a, b]);
                        }
                    }
                }
                None
            }
            _ => None,
        }
    }

    pub fn is_cocycle(&self) -> bool {
        self.cocycle_violation().is_none()
    }

    pub fn to_file(&self, space_name: &str, level: usize) -> CochainFile {
        CochainFile {
            space: space_name.to_string(),
            level,
            degree: self.degree,
            entries: self
                .support()
                .into_iter()
                .map(|(t, value)| CochainEntry {
                    tuple: t.iter().map(|&i| self.space.label(i).to_string()).collect(),
                    value,
                })
                .collect(),
        }
    }
}

/// `f(x, y) = 1` for `x ∈ A, y ∈ B`, `-1` for `x ∈ B, y ∈ A`, else 0.
pub fn cocycle_from_decomposition<T: Scalar>(w: &DecompositionWitness<T>) -> Result<Cochain<T>> {
    let (a, b) = (w.side_a(), w.side_b());
    if a.is_empty() || b.is_empty() {
        return Err(CoarseError::DegenerateWitness("a side is empty".into()));
    }
    let mut f = Cochain::zero(w.truncation().clone(), 1)?;
    for &x in &a {
        for &y in &b {
            f.set(&[x, y], 1);
            f.set(&[y, x], -1);
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportProfile<T> {
    pub scales: Vec<T>,
    pub depths: Vec<usize>,
    /// `table[k][j]`: least `r` with every support tuple of pairwise
    /// diameter `<= scales[j]` inside `B(x0, r)`, restricted to level
    /// `depths[k]`.
    pub table: Vec<Vec<u64>>,
    pub divergent: Vec<bool>,
}

impl<T: Scalar> SupportProfile<T> {
    pub fn is_divergent(&self) -> bool {
        self.divergent.iter().any(|&d| d)
    }

    pub fn radius_at(&self, scale: T) -> Option<u64> {
        let j = self.scales.iter().position(|&s| s == scale)?;
        Some(self.table.last()?[j])
    }
}

pub fn cocontrolled_profile<T: Scalar>(phi: &Cochain<T>, scales: &[T], depths: &[usize]) -> Result<SupportProfile<T>> {
    if scales.is_empty() {
        return Err(CoarseError::Empty("scales"));
    }
    let depths = sorted_depths(depths)?;
    let mut scales = scales.to_vec();
    scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scales.dedup();
    let s = &phi.space;
    let norms = s.norms();
    // per support tuple: (diameter, max norm)
    let tuples: Vec<(T, T)> = phi
        .values
        .keys()
        .map(|t| {
            let mut diam = T::zero();
            for (k, &x) in t.iter().enumerate() {
                for &y in &t[k + 1..] {
                    diam = diam.max_of(s.dist(x, y));
                }
            }
            let reach = t.iter().map(|&x| norms[x]).fold(T::zero(), T::max_of);
            (diam, reach)
        })
        .collect();
    let table = depths
        .iter()
        .map(|&n| {
            let cap = T::from_int(n as i64);
            scales
                .iter()
                .map(|&sc| {
                    tuples
                        .iter()
                        .filter(|&&(diam, reach)| diam <= sc && reach <= cap)
                        .map(|&(_, reach)| strict_ball_radius(reach))
                        .max()
                        .unwrap_or(0)
                })
                .collect()
        })
        .collect::<Vec<Vec<u64>>>();
    let divergent = divergence_flags(&table);
    Ok(SupportProfile {
        scales,
        depths,
        table,
        divergent,
    })
}

#[derive(Debug, Clone)]
pub enum TrivialityVerdict<T> {
    /// `f = δg` with `g` of bounded support.
    Trivial { potential: Cochain<T>, anchor: usize },
    /// `f` comes from a separated decomposition.
    Nontrivial { witness: DecompositionWitness<T>, classes: usize },
}

impl<T> TrivialityVerdict<T> {
    pub fn is_trivial(&self) -> bool {
        matches!(self, Self::Trivial { .. })
    }
}

/// Depths at which cocontrol is sampled for a cochain living on `level(depth)`.
pub fn profile_depths(depth: usize) -> Vec<usize> {
    let mut d: Vec<usize> = [depth / 4, depth / 2, 3 * depth / 4, depth].into_iter().filter(|&d| d > 0).collect();
    d.dedup();
    d
}

/// Decides whether a 1-cocycle on the level-`depth` truncation is a
/// coboundary of a bounded 0-cochain.
///
/// The classes of `a ~ b ⇔ f(a, b) = 0` are the level sets of
/// `x ↦ f(x0, x)`. If one class contains the whole far shell, `f = δg` for
/// `g(x) = f(a, x)` with `a` in that class; otherwise the classes split
/// into two unbounded unions.
pub fn triviality_test<T: Scalar>(
    f: &Cochain<T>,
    far_threshold: T,
    scales: &[T],
    depth: usize,
) -> Result<TrivialityVerdict<T>> {
    if f.degree != 1 {
        return Err(CoarseError::UnsupportedDegree(f.degree));
    }
    if let Some(t) = f.cocycle_violation() {
        let labels: Vec<&str> = t.iter().map(|&i| f.space.label(i)).collect();
        return Err(CoarseError::NotCocycle(format!("identity fails at ({})", labels.join(", "))));
    }
    let profile = cocontrolled_profile(f, scales, &profile_depths(depth))?;
    if profile.is_divergent() {
        return Err(CoarseError::Divergent("support is not cocontrolled".into()));
    }
    let s = &f.space;
    let n = s.len();
    let norms = s.norms();
    let p = f.basepoint_potential();
    // classes in order of first appearance
    let mut class_of = vec![0usize; n];
    let mut keys: Vec<i64> = Vec::new();
    for x in 0..n {
        class_of[x] = match keys.iter().position(|&k| k == p[x]) {
            Some(c) => c,
            None => {
                keys.push(p[x]);
                keys.len() - 1
            }
        };
    }
    let far: Vec<bool> = norms.iter().map(|&d| d >= far_threshold).collect();
    let reaches_far: Vec<bool> = (0..keys.len()).map(|c| (0..n).any(|x| class_of[x] == c && far[x])).collect();
    let unbounded: Vec<usize> = (0..keys.len()).filter(|&c| reaches_far[c]).collect();
    if unbounded.len() <= 1 {
        let c = *unbounded.first().ok_or(CoarseError::Empty("far shell"))?;
        let anchor = (0..n).find(|&x| class_of[x] == c).unwrap();
        let g: Vec<i64> = (0..n).map(|x| f.get(&[anchor, x])).collect();
        let potential = Cochain::from_values(s.clone(), &g)?;
        let dg = potential.coboundary()?;
        if dg.support() != f.support() {
            return Err(CoarseError::OracleInconsistent("δg differs from f".into()));
        }
        return Ok(TrivialityVerdict::Trivial { potential, anchor });
    }
    let base = class_of[s.basepoint()];
    let a_classes: Vec<usize> = if reaches_far[base] {
        vec![base]
    } else {
        vec![base, unbounded[0]]
    };
    let in_a: Vec<bool> = (0..n).map(|x| a_classes.contains(&class_of[x])).collect();
    let witness = DecompositionWitness::from_partition(s.clone(), in_a, scales, depth, far_threshold)?;
    witness
        .verify_exhaustive()
        .map_err(CoarseError::DegenerateWitness)?;
    Ok(TrivialityVerdict::Nontrivial {
        witness,
        classes: keys.len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CochainEntry {
    pub tuple: Vec<String>,
    pub value: i64,
}

/// On-disk cochain: a space spec, the truncation level, and the support.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CochainFile {
    pub space: String,
    pub level: usize,
    pub degree: usize,
    pub entries: Vec<CochainEntry>,
}

impl CochainFile {
    pub fn into_cochain<T: Scalar>(self, space: Arc<FiniteMetricSpace<T>>) -> Result<Cochain<T>> {
        let index: HashMap<&str, usize> = space.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut c = Cochain::zero(space.clone(), self.degree)?;
        for e in self.entries {
            if e.tuple.len() != self.degree + 1 {
                return Err(CoarseError::Malformed(format!("tuple {:?} has the wrong length", e.tuple)));
            }
            let t = e
                .tuple
                .iter()
                .map(|l| index.get(l.as_str()).copied().ok_or_else(|| CoarseError::MissingPoint(l.clone())))
                .collect::<Result<Vec<_>>>()?;
            c.set(&t, c.get(&t) + e.value);
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connect::detect_decomposition;
    use crate::filtration::{builtin_space, FiltrationSpace, SpaceName};

    fn z(depth: usize) -> (FiltrationSpace<i64>, Arc<FiniteMetricSpace<i64>>) {
        let x = builtin_space(&SpaceName::Integers, depth).unwrap();
        let s = Arc::new(x.level(depth).unwrap());
        (x, s)
    }

    fn at(s: &FiniteMetricSpace<i64>, k: i64) -> usize {
        s.lattice_index(&[k]).unwrap()
    }

    fn witness(depth: usize) -> DecompositionWitness<i64> {
        let (x, _) = z(depth);
        let scales: Vec<i64> = (1..=10).collect();
        detect_decomposition(&x, &scales, depth, 1).unwrap().witness.unwrap()
    }

    #[test]
    fn coboundary_of_an_indicator() {
        let (_, s) = z(5);
        let p = at(&s, 2);
        let g = Cochain::from_values(s.clone(), &(0..s.len()).map(|i| (i == p) as i64).collect::<Vec<_>>()).unwrap();
        let dg = g.coboundary().unwrap();
        for x in 0..s.len() {
            let expect = if x == p { 0 } else { 1 };
            assert_eq!(dg.get(&[p, x]), -expect);
            assert_eq!(dg.get(&[x, p]), expect);
        }
        assert_eq!(dg.support_len(), 2 * (s.len() - 1));
        assert!(dg.coboundary().unwrap().is_zero());
        assert!(Cochain::zero(s.clone(), 1).unwrap().coboundary().unwrap().is_zero());
        assert!(matches!(dg.coboundary().unwrap().coboundary(), Err(CoarseError::UnsupportedDegree(2))));
    }

    #[test]
    fn sparse_coboundary_matches_dense() {
        let (_, s) = z(3);
        let f = Cochain::from_fn(s.clone(), 1, |t| (t[0] as i64 * 3 - t[1] as i64) % 4).unwrap();
        let df = f.coboundary().unwrap();
        let dense = Cochain::from_fn(s.clone(), 2, |t| f.coboundary_at(t)).unwrap();
        assert_eq!(df.support(), dense.support());
        assert!(!f.is_cocycle());
    }

    #[test]
    fn witness_cocycle() {
        let w = witness(60);
        let f = cocycle_from_decomposition(&w).unwrap();
        let s = w.truncation();
        assert_eq!(f.get(&[at(s, 3), at(s, -4)]), 1);
        assert_eq!(f.get(&[at(s, -4), at(s, 3)]), -1);
        assert_eq!(f.get(&[at(s, 3), at(s, 5)]), 0);
        assert!(f.is_cocycle());
        assert!(f.coboundary().unwrap().is_zero());

        let p = cocontrolled_profile(&f, &[1, 2, 5, 10], &[20, 40, 60]).unwrap();
        assert!(!p.is_divergent());
        // cross pairs with |a - b| <= S reach out to norm S, e.g. (0, -S)
        assert_eq!(p.table[2], vec![2, 3, 6, 11]);
        for (&sc, &r) in p.scales.iter().zip(&p.table[2]) {
            assert!(r <= w.radius_at(sc + 1) + sc as u64);
        }
    }

    #[test]
    fn profiles_of_unbounded_and_degree_zero_cochains() {
        let (_, s) = z(30);
        let ones = Cochain::from_fn(s.clone(), 1, |_| 1).unwrap();
        assert!(cocontrolled_profile(&ones, &[1], &[10, 20, 30]).unwrap().is_divergent());
        let bump = Cochain::from_values(s.clone(), &(0..s.len()).map(|i| (i < 5) as i64).collect::<Vec<_>>()).unwrap();
        let p = cocontrolled_profile(&bump, &[1, 100], &[10, 20, 30]).unwrap();
        assert!(!p.is_divergent());
        // first five points are 0, ±1, ±2
        assert_eq!(p.table[2], vec![3, 3]);
    }

    #[test]
    fn trivial_round_trip() {
        let (x, s) = z(60);
        let g: Vec<i64> = (0..s.len())
            .map(|i| (0..=2).contains(&s.coords(i).unwrap()[0]) as i64)
            .collect();
        let f = Cochain::from_values(s.clone(), &g).unwrap().coboundary().unwrap();
        let far = x.far_threshold(60, 1);
        match triviality_test(&f, far, &[1, 2, 3], 60).unwrap() {
            TrivialityVerdict::Trivial { potential, .. } => {
                for i in 0..s.len() {
                    assert_eq!(potential.get(&[i]), g[i]);
                }
            }
            v => panic!("{v:?}"),
        }
        let zero = Cochain::zero(s.clone(), 1).unwrap();
        match triviality_test(&zero, far, &[1], 60).unwrap() {
            TrivialityVerdict::Trivial { potential, .. } => assert!(potential.is_zero()),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn nontrivial_round_trip() {
        let w = witness(60);
        let f = cocycle_from_decomposition(&w).unwrap();
        let scales: Vec<i64> = (1..=10).collect();
        match triviality_test(&f, w.far_threshold(), &scales, 60).unwrap() {
            TrivialityVerdict::Nontrivial { witness, classes } => {
                assert_eq!(classes, 2);
                assert_eq!(witness.partition(), w.partition());
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn triviality_rejects_bad_input() {
        let (x, s) = z(20);
        let far = x.far_threshold(20, 1);
        let mut f = Cochain::zero(s.clone(), 1).unwrap();
        f.set(&[1, 2], 1);
        assert!(matches!(triviality_test(&f, far, &[1], 20), Err(CoarseError::NotCocycle(_))));
        let g = Cochain::zero(s.clone(), 0).unwrap();
        assert!(matches!(triviality_test(&g, far, &[1], 20), Err(CoarseError::UnsupportedDegree(0))));
        // p(x) = x: a cocycle whose support is not cocontrolled
        let lin = Cochain::from_fn(s.clone(), 1, |t| s.coords(t[1]).unwrap()[0] - s.coords(t[0]).unwrap()[0]).unwrap();
        assert!(lin.is_cocycle());
        assert!(matches!(triviality_test(&lin, far, &[1], 20), Err(CoarseError::Divergent(_))));
    }

    #[test]
    fn file_round_trip() {
        let w = witness(10);
        let f = cocycle_from_decomposition(&w).unwrap();
        let file = f.to_file("integers", 10);
        let json = serde_json::to_string(&file).unwrap();
        let back: CochainFile = serde_json::from_str(&json).unwrap();
        let g = back.into_cochain(w.truncation().clone()).unwrap();
        assert_eq!(g.support(), f.support());
    }
}
