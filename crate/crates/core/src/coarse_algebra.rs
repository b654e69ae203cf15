//! Coarse structures on finite sets, represented by their maximal
//! relations.
//!
//! On a finite ground the union of all members is itself a member, so a
//! structure always has a single maximal relation; it is the equivalence
//! relation generated by the generators. The antichain representation is
//! kept general and the lemma checks do not rely on this.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{CoarseError, Result};

/// Grounds are bitset rows of a single word.
pub const MAX_GROUND: usize = 64;

/// A binary relation on `0..n` as row bitsets: bit `y` of `rows[x]` says `x R y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    n: usize,
    rows: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_GROUND, "ground too large");
        Self { n, rows: vec![0; n] }
    }

    pub fn diagonal(n: usize) -> Self {
        let mut r = Self::empty(n);
        for x in 0..n {
            r.rows[x] = 1 << x;
        }
        r
    }

    pub fn full(n: usize) -> Self {
        let mut r = Self::empty(n);
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        r.rows.iter_mut().for_each(|row| *row = all);
        r
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_GROUND {
            return Err(CoarseError::BoundExceeded(format!("ground of size {n}")));
        }
        let mut r = Self::empty(n);
        for &(x, y) in pairs {
            if x >= n || y >= n {
                return Err(CoarseError::OutsideGround(x.max(y), n));
            }
            r.rows[x] |= 1 << y;
        }
        Ok(r)
    }

    pub fn ground(&self) -> usize {
        self.n
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.rows[x] >> y & 1 == 1
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|x| (0..self.n).filter(move |&y| self.contains(x, y)).map(move |y| (x, y)))
            .collect()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.n == other.n && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &Relation) -> Relation {
        Relation {
            n: self.n,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect(),
        }
    }

    /// `{(x, z) : x R y and y S z for some y}`.
    pub fn compose(&self, other: &Relation) -> Relation {
        let rows = self
            .rows
            .iter()
            .map(|&row| {
                let mut out = 0;
                let mut bits = row;
                while bits != 0 {
                    let y = bits.trailing_zeros() as usize;
                    out |= other.rows[y];
                    bits &= bits - 1;
                }
                out
            })
            .collect();
        Relation { n: self.n, rows }
    }

    pub fn inverse(&self) -> Relation {
        let mut r = Relation::empty(self.n);
        for (x, y) in self.pairs() {
            r.rows[y] |= 1 << x;
        }
        r
    }

    /// `(f × f)(R)` for `f: 0..n -> 0..m`.
    pub fn image(&self, f: &[usize], m: usize) -> Result<Relation> {
        if f.len() != self.n {
            return Err(CoarseError::Mismatch("map must be total on the ground".into()));
        }
        if let Some(&v) = f.iter().find(|&&v| v >= m) {
            return Err(CoarseError::OutsideGround(v, m));
        }
        let mut r = Relation::empty(m);
        for (x, y) in self.pairs() {
            r.rows[f[x]] |= 1 << f[y];
        }
        Ok(r)
    }

    /// The same relation inside a ground of size `m`, shifted by `offset`.
    pub fn embed(&self, m: usize, offset: usize) -> Relation {
        assert!(offset + self.n <= m);
        let mut r = Relation::empty(m);
        for x in 0..self.n {
            r.rows[x + offset] = self.rows[x] << offset;
        }
        r
    }

    /// `{a : a R x}`, as a bitset.
    pub fn column(&self, x: usize) -> u64 {
        (0..self.n).filter(|&a| self.contains(a, x)).fold(0, |acc, a| acc | 1 << a)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pairs().iter().map(|(x, y)| format!("({x},{y})")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Drops duplicates and relations contained in another one.
fn maximal_elements(mut rels: Vec<Relation>) -> Vec<Relation> {
    rels.sort();
    rels.dedup();
    let keep: Vec<bool> = (0..rels.len())
        .map(|i| !(0..rels.len()).any(|j| j != i && rels[i].is_subset(&rels[j])))
        .collect();
    rels.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteCoarseSpace {
    n: usize,
    maximal: Vec<Relation>,
}

/// Smallest coarse structure on `0..n` containing the generators.
pub fn generate_structure(n: usize, generators: &[Relation]) -> Result<FiniteCoarseSpace> {
    if n > MAX_GROUND {
        return Err(CoarseError::BoundExceeded(format!("ground of size {n}")));
    }
    if let Some(g) = generators.iter().find(|g| g.n != n) {
        return Err(CoarseError::OutsideGround(g.n, n));
    }
    let mut current = generators.to_vec();
    current.push(Relation::diagonal(n));
    let mut current = maximal_elements(current);
    loop {
        let mut next = current.clone();
        for a in &current {
            for b in &current {
                next.push(a.union(b));
            }
        }
        let unions = maximal_elements(next);
        let mut next = unions.clone();
        for a in &unions {
            for b in &unions {
                next.push(a.compose(b));
            }
        }
        let composed = maximal_elements(next);
        let mut next = composed.clone();
        next.extend(composed.iter().map(Relation::inverse));
        let next = maximal_elements(next);
        if next == current {
            return Ok(FiniteCoarseSpace { n, maximal: current });
        }
        current = next;
    }
}

impl FiniteCoarseSpace {
    pub fn ground(&self) -> usize {
        self.n
    }

    pub fn maximal(&self) -> &[Relation] {
        &self.maximal
    }

    pub fn is_member(&self, e: &Relation) -> Result<bool> {
        if e.n != self.n {
            return Err(CoarseError::OutsideGround(e.n, self.n));
        }
        Ok(self.maximal.iter().any(|m| e.is_subset(m)))
    }

    /// Whether `B ⊆ {a : a M x}` for some maximal `M` and some `x`.
    pub fn is_bounded(&self, set: u64) -> bool {
        set == 0 || self.maximal.iter().any(|m| (0..self.n).any(|x| set & !m.column(x) == 0))
    }

    /// All bounded subsets as bitsets, in increasing order.
    pub fn bounded_sets(&self) -> Result<Vec<u64>> {
        if self.n > 20 {
            return Err(CoarseError::BoundExceeded(format!("2^{} subsets", self.n)));
        }
        Ok((0..1u64 << self.n).filter(|&s| self.is_bounded(s)).collect())
    }

    pub fn is_connected(&self) -> bool {
        self.is_member(&Relation::full(self.n)).unwrap()
    }

    /// Violations of closure under inverse, composition and union on the
    /// maximal relations.
    pub fn closure_law_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.maximal {
            if !self.is_member(&a.inverse()).unwrap() {
                out.push(format!("inverse of {a}"));
            }
            for b in &self.maximal {
                if !self.is_member(&a.compose(b)).unwrap() {
                    out.push(format!("{a} ∘ {b}"));
                }
                if !self.is_member(&a.union(b)).unwrap() {
                    out.push(format!("{a} ∪ {b}"));
                }
            }
        }
        if !self.is_member(&Relation::diagonal(self.n)).unwrap() {
            out.push("diagonal".into());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MapPredicates {
    pub bornologous: bool,
    pub close: Option<bool>,
}

pub fn map_predicates(
    f: &[usize],
    src: &FiniteCoarseSpace,
    dst: &FiniteCoarseSpace,
    g: Option<&[usize]>,
) -> Result<MapPredicates> {
    let mut bornologous = true;
    for m in &src.maximal {
        bornologous &= dst.is_member(&m.image(f, dst.n)?)?;
    }
    let close = match g {
        None => None,
        Some(g) => {
            if g.len() != src.n || f.len() != src.n {
                return Err(CoarseError::Mismatch("maps must be total on the source".into()));
            }
            let pairs: Vec<(usize, usize)> = f.iter().copied().zip(g.iter().copied()).collect();
            Some(dst.is_member(&Relation::from_pairs(dst.n, &pairs)?)?)
        }
    };
    Ok(MapPredicates { bornologous, close })
}

/// Structure on `X + Y` (with `Y` shifted past `X`) generated by both
/// structures and the pair `(x0, y0)`.
pub fn coproduct_structure(
    x: &FiniteCoarseSpace,
    y: &FiniteCoarseSpace,
    x0: usize,
    y0: usize,
) -> Result<FiniteCoarseSpace> {
    if x0 >= x.n {
        return Err(CoarseError::MissingPoint(format!("basepoint {x0}")));
    }
    if y0 >= y.n {
        return Err(CoarseError::MissingPoint(format!("basepoint {y0}")));
    }
    let m = x.n + y.n;
    let mut gens: Vec<Relation> = x.maximal.iter().map(|r| r.embed(m, 0)).collect();
    gens.extend(y.maximal.iter().map(|r| r.embed(m, x.n)));
    gens.push(Relation::from_pairs(m, &[(x0, x.n + y0)])?);
    generate_structure(m, &gens)
}

/// `(R_r ∘ U ∘ S_r) ∪ (S_r ∘ U ∘ R_r)` on `X + Y`, where `R_r`, `S_r` are
/// `R`, `S` plus the diagonal and `U = {(x0, y0), (y0, x0)} ∪ Δ`.
pub fn bridge_relation(r: &Relation, s: &Relation, x0: usize, y0: usize) -> Relation {
    let m = r.n + s.n;
    let diag = Relation::diagonal(m);
    let rr = r.embed(m, 0).union(&diag);
    let sr = s.embed(m, r.n).union(&diag);
    let y0 = r.n + y0;
    let u = Relation::from_pairs(m, &[(x0, y0), (y0, x0)]).unwrap().union(&diag);
    rr.compose(&u).compose(&sr).union(&sr.compose(&u).compose(&rr))
}

/// Maximal relations `R`, `S` of the factors whose bridge relation contains
/// `e`, if any.
pub fn bridge_cover(
    x: &FiniteCoarseSpace,
    y: &FiniteCoarseSpace,
    x0: usize,
    y0: usize,
    e: &Relation,
) -> Option<(Relation, Relation, Relation)> {
    for r in &x.maximal {
        for s in &y.maximal {
            let z = bridge_relation(r, s, x0, y0);
            if e.is_subset(&z) {
                return Some((r.clone(), s.clone(), z));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct LemmaReport {
    pub max_ground: usize,
    pub max_generators: usize,
    pub generator_sets: usize,
    pub distinct_structures: usize,
    pub closure_checks: usize,
    pub closure_counterexamples: Vec<String>,
    pub bridge_checks: usize,
    pub bridge_counterexamples: Vec<String>,
    pub fixpoint_failures: Vec<String>,
    pub closure_law_failures: Vec<String>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.closure_counterexamples.is_empty()
            && self.bridge_counterexamples.is_empty()
            && self.fixpoint_failures.is_empty()
            && self.closure_law_failures.is_empty()
    }
}

/// Refuse sweeps above this many generator sets.
pub const MAX_GENERATOR_SETS: u128 = 2_000_000;

fn choose(n: u128, k: usize) -> u128 {
    (0..k as u128).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Generator sets of at most `k` distinct relations on `0..n`.
fn generator_sets(n: usize, k: usize) -> Vec<Vec<Relation>> {
    let all: Vec<Relation> = (0..1u64 << (n * n))
        .map(|bits| {
            let mut r = Relation::empty(n);
            for x in 0..n {
                r.rows[x] = (bits >> (x * n)) & ((1 << n) - 1);
            }
            r
        })
        .collect();
    let mut out = Vec::new();
    fn rec(all: &[Relation], start: usize, k: usize, cur: &mut Vec<Relation>, out: &mut Vec<Vec<Relation>>) {
        out.push(cur.clone());
        if cur.len() == k {
            return;
        }
        for i in start..all.len() {
            cur.push(all[i].clone());
            rec(all, i + 1, k, cur, out);
            cur.pop();
        }
    }
    rec(&all, 0, k, &mut Vec::new(), &mut out);
    out
}

fn all_maps(from: usize, to: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..from {
        out = out
            .into_iter()
            .flat_map(|f| {
                (0..to).map(move |v| {
                    let mut g = f.clone();
                    g.push(v);
                    g
                })
            })
            .collect();
    }
    out
}

struct ClosureCache(HashMap<(usize, Vec<Relation>), FiniteCoarseSpace>);

impl ClosureCache {
    fn get(&mut self, n: usize, gens: Vec<Relation>) -> &FiniteCoarseSpace {
        let mut key = gens;
        key.sort();
        key.dedup();
        self.0
            .entry((n, key))
            .or_insert_with_key(|(n, g)| generate_structure(*n, g).expect("valid generators"))
    }
}

/// Exhaustive check of the closure lemma and the coproduct bridge lemma
/// over all structures generated by at most `max_generators` relations on
/// grounds of size at most `max_ground`.
pub fn verify_lemmas(max_ground: usize, max_generators: usize) -> Result<LemmaReport> {
    if max_ground == 0 {
        return Err(CoarseError::InvalidParameter("ground size must be positive".into()));
    }
    let estimate: u128 = (1..=max_ground)
        .map(|n| {
            let rels = 1u128.checked_shl((n * n) as u32).unwrap_or(u128::MAX);
            (0..=max_generators).map(|k| choose(rels, k.min(rels as usize))).sum::<u128>()
        })
        .sum();
    if max_ground > 4 || estimate > MAX_GENERATOR_SETS {
        return Err(CoarseError::BoundExceeded(format!(
            "about {estimate} generator sets for grounds up to {max_ground}"
        )));
    }
    let mut cache = ClosureCache(HashMap::new());
    let mut report = LemmaReport {
        max_ground,
        max_generators,
        generator_sets: 0,
        distinct_structures: 0,
        closure_checks: 0,
        closure_counterexamples: Vec::new(),
        bridge_checks: 0,
        bridge_counterexamples: Vec::new(),
        fixpoint_failures: Vec::new(),
        closure_law_failures: Vec::new(),
    };
    let mut structures: Vec<Vec<FiniteCoarseSpace>> = vec![Vec::new(); max_ground + 1];
    let maps: Vec<Vec<Vec<Vec<usize>>>> = (0..=max_ground)
        .map(|a| (0..=max_ground).map(|b| all_maps(a, b)).collect())
        .collect();
    for n in 1..=max_ground {
        for gens in generator_sets(n, max_generators) {
            report.generator_sets += 1;
            let space = cache.get(n, gens.clone()).clone();
            if !structures[n].contains(&space) {
                structures[n].push(space.clone());
            }
            for m in 1..=max_ground {
                for f in &maps[n][m] {
                    let images: Vec<Relation> = gens.iter().map(|g| g.image(f, m).unwrap()).collect();
                    let target = cache.get(m, images);
                    report.closure_checks += 1;
                    for big in &space.maximal {
                        let img = big.image(f, m).unwrap();
                        if !target.is_member(&img).unwrap() {
                            let g: Vec<String> = gens.iter().map(|g| g.to_string()).collect();
                            report.closure_counterexamples.push(format!(
                                "ground {n} -> {m}, f = {f:?}, generators [{}]: image {img} of {big} not in generated structure",
                                g.join(", ")
                            ));
                        }
                    }
                }
            }
        }
        for s in &structures[n] {
            let again = generate_structure(n, &s.maximal)?;
            if again != *s {
                report.fixpoint_failures.push(format!("ground {n}: {:?}", s.maximal));
            }
            for v in s.closure_law_violations() {
                report.closure_law_failures.push(format!("ground {n}: {v}"));
            }
        }
    }
    report.distinct_structures = structures.iter().map(Vec::len).sum();
    for nx in 1..=max_ground {
        for ny in 1..=max_ground {
            for x in &structures[nx] {
                for y in &structures[ny] {
                    for x0 in 0..nx {
                        for y0 in 0..ny {
                            let cop = coproduct_structure(x, y, x0, y0)?;
                            for e in &cop.maximal {
                                report.bridge_checks += 1;
                                if bridge_cover(x, y, x0, y0, e).is_none() {
                                    report.bridge_counterexamples.push(format!(
                                        "X on {nx} with {:?}, Y on {ny} with {:?}, x0 = {x0}, y0 = {y0}: {e} not covered",
                                        x.maximal.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                                        y.maximal.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}
