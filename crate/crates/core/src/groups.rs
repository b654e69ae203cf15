//! Finitely generated groups given by multiplication oracles, their Cayley
//! balls and word metrics, and end counts.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::connect::detect_decomposition;
use crate::error::{CoarseError, Result};
use crate::filtration::FiltrationSpace;
use crate::metric::{lattice_label, FiniteMetricSpace};
use crate::rips::UnionFind;

/// Group elements in an oracle-specific encoding.
pub type Element = Vec<i64>;

/// A group with a finite generating set closed under inverses. Elements
/// are compared by their canonical form.
pub trait GroupOracle: Send + Sync {
    fn name(&self) -> String;
    fn identity(&self) -> Element;
    fn generators(&self) -> Vec<Element>;
    fn multiply(&self, a: &Element, b: &Element) -> Element;
    fn canonical(&self, a: &Element) -> Element {
        a.clone()
    }
    fn label(&self, a: &Element) -> String;
}

/// `Z^d` with the standard generators.
#[derive(Debug, Clone)]
pub struct FreeAbelian(pub usize);

impl GroupOracle for FreeAbelian {
    fn name(&self) -> String {
        if self.0 == 1 {
            "z".into()
        } else {
            format!("z{}", self.0)
        }
    }

    fn identity(&self) -> Element {
        vec![0; self.0]
    }

    fn generators(&self) -> Vec<Element> {
        (0..self.0)
            .flat_map(|k| {
                [1, -1].map(|s| {
                    let mut e = vec![0; self.0];
                    e[k] = s;
                    e
                })
            })
            .collect()
    }

    fn multiply(&self, a: &Element, b: &Element) -> Element {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    fn label(&self, a: &Element) -> String {
        lattice_label(a)
    }
}

/// Free group on `k` letters; elements are reduced words over `±1..=±k`.
#[derive(Debug, Clone)]
pub struct Free(pub usize);

impl GroupOracle for Free {
    fn name(&self) -> String {
        format!("f{}", self.0)
    }

    fn identity(&self) -> Element {
        Vec::new()
    }

    fn generators(&self) -> Vec<Element> {
        (1..=self.0 as i64).flat_map(|l| [vec![l], vec![-l]]).collect()
    }

    fn multiply(&self, a: &Element, b: &Element) -> Element {
        let mut w = a.clone();
        for &l in b {
            if w.last() == Some(&-l) {
                w.pop();
            } else {
                w.push(l);
            }
        }
        w
    }

    fn canonical(&self, a: &Element) -> Element {
        self.multiply(&Vec::new(), a)
    }

    fn label(&self, a: &Element) -> String {
        if a.is_empty() {
            return "e".into();
        }
        a.iter()
            .map(|&l| {
                let c = (b'a' + (l.unsigned_abs() - 1) as u8) as char;
                if l > 0 {
                    c
                } else {
                    c.to_ascii_uppercase()
                }
            })
            .collect()
    }
}

/// `Z ⋊ Z/2` as pairs `(n, ε)` acting by `x ↦ (-1)^ε x + n`, generated by
/// the unit translations and the flip.
#[derive(Debug, Clone)]
pub struct InfiniteDihedral;

impl GroupOracle for InfiniteDihedral {
    fn name(&self) -> String {
        "dinf".into()
    }

    fn identity(&self) -> Element {
        vec![0, 0]
    }

    fn generators(&self) -> Vec<Element> {
        vec![vec![1, 0], vec![-1, 0], vec![0, 1]]
    }

    fn multiply(&self, a: &Element, b: &Element) -> Element {
        let sign = if a[1] == 0 { 1 } else { -1 };
        vec![a[0] + sign * b[0], (a[1] + b[1]) % 2]
    }

    fn label(&self, a: &Element) -> String {
        format!("t{}{}", a[0], if a[1] == 1 { "f" } else { "" })
    }
}

/// Finite group generated by permutations of `0..degree`.
#[derive(Debug, Clone)]
pub struct Permutations {
    name: String,
    degree: usize,
    generators: Vec<Element>,
}

fn compose(a: &Element, b: &Element) -> Element {
    // apply a, then b
    a.iter().map(|&x| b[x as usize]).collect()
}

fn invert(a: &Element) -> Element {
    let mut inv = vec![0; a.len()];
    for (i, &x) in a.iter().enumerate() {
        inv[x as usize] = i as i64;
    }
    inv
}

impl Permutations {
    /// Adds missing inverses so the generating set is symmetric.
    pub fn new(name: impl Into<String>, degree: usize, generators: Vec<Vec<usize>>) -> Result<Self> {
        let mut gens: Vec<Element> = Vec::new();
        for g in generators {
            let mut seen = vec![false; degree];
            if g.len() != degree || !g.iter().all(|&x| x < degree && !std::mem::replace(&mut seen[x], true)) {
                return Err(CoarseError::Malformed(format!("{g:?} is not a permutation of 0..{degree}")));
            }
            let g: Element = g.into_iter().map(|x| x as i64).collect();
            for h in [invert(&g), g] {
                if !gens.contains(&h) {
                    gens.push(h);
                }
            }
        }
        if gens.is_empty() {
            return Err(CoarseError::Empty("generators"));
        }
        Ok(Self {
            name: name.into(),
            degree,
            generators: gens,
        })
    }

    pub fn symmetric(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CoarseError::InvalidParameter("sym(n) needs n >= 2".into()));
        }
        let gens = (0..n - 1)
            .map(|k| {
                let mut p: Vec<usize> = (0..n).collect();
                p.swap(k, k + 1);
                p
            })
            .collect();
        Self::new(format!("sym({n})"), n, gens)
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CoarseError::InvalidParameter("c(n) needs n >= 2".into()));
        }
        Self::new(format!("c({n})"), n, vec![(0..n).map(|k| (k + 1) % n).collect()])
    }
}

impl GroupOracle for Permutations {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn identity(&self) -> Element {
        (0..self.degree as i64).collect()
    }

    fn generators(&self) -> Vec<Element> {
        self.generators.clone()
    }

    fn multiply(&self, a: &Element, b: &Element) -> Element {
        compose(a, b)
    }

    fn label(&self, a: &Element) -> String {
        let parts: Vec<String> = a.iter().map(|x| x.to_string()).collect();
        format!("[{}]", parts.join(" "))
    }
}

/// Generator tables of a finite permutation group.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PermutationFile {
    pub name: Option<String>,
    pub degree: usize,
    pub generators: Vec<Vec<usize>>,
}

pub fn load_permutation_group(path: &Path) -> Result<Permutations> {
    let file: PermutationFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let name = file.name.unwrap_or_else(|| format!("perm:{}", path.display()));
    Permutations::new(name, file.degree, file.generators)
}

/// `G × H` with generators `(s, 1)` and `(1, t)`. Elements are encoded as
/// `[len(g), g…, h…]`.
pub struct Product {
    left: Box<dyn GroupOracle>,
    right: Box<dyn GroupOracle>,
}

impl Product {
    pub fn new(left: Box<dyn GroupOracle>, right: Box<dyn GroupOracle>) -> Self {
        Self { left, right }
    }

    fn pack(g: Element, h: Element) -> Element {
        let mut e = Vec::with_capacity(1 + g.len() + h.len());
        e.push(g.len() as i64);
        e.extend(g);
        e.extend(h);
        e
    }

    fn split(e: &Element) -> (Element, Element) {
        let k = e[0] as usize;
        (e[1..1 + k].to_vec(), e[1 + k..].to_vec())
    }
}

impl GroupOracle for Product {
    fn name(&self) -> String {
        format!("{}*{}", self.left.name(), self.right.name())
    }

    fn identity(&self) -> Element {
        Self::pack(self.left.identity(), self.right.identity())
    }

    fn generators(&self) -> Vec<Element> {
        let (e, f) = (self.left.identity(), self.right.identity());
        let mut gens: Vec<Element> = self.left.generators().into_iter().map(|s| Self::pack(s, f.clone())).collect();
        gens.extend(self.right.generators().into_iter().map(|t| Self::pack(e.clone(), t)));
        gens
    }

    fn multiply(&self, a: &Element, b: &Element) -> Element {
        let ((ag, ah), (bg, bh)) = (Self::split(a), Self::split(b));
        Self::pack(self.left.multiply(&ag, &bg), self.right.multiply(&ah, &bh))
    }

    fn canonical(&self, a: &Element) -> Element {
        let (g, h) = Self::split(a);
        Self::pack(self.left.canonical(&g), self.right.canonical(&h))
    }

    fn label(&self, a: &Element) -> String {
        let (g, h) = Self::split(a);
        format!("({}; {})", self.left.label(&g), self.right.label(&h))
    }
}

/// Group names accepted on the command line; `*` forms direct products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSpec {
    FreeAbelian(usize),
    Free(usize),
    InfiniteDihedral,
    Symmetric(usize),
    Cyclic(usize),
    PermutationFile(String),
    Product(Vec<GroupSpec>),
}

impl GroupSpec {
    pub fn catalog() -> Vec<(&'static str, &'static str)> {
        vec![
            ("z, z2, z3", "free abelian groups with the standard generators"),
            ("f2, free(k)", "free group on k letters"),
            ("dinf", "infinite dihedral group, translations and a flip"),
            ("sym(n), c(n)", "symmetric and cyclic groups"),
            ("perm:<file>", "finite permutation group from generator tables"),
            ("g*h", "direct product"),
        ]
    }

    pub fn build(&self) -> Result<Box<dyn GroupOracle>> {
        Ok(match self {
            Self::FreeAbelian(d) => Box::new(FreeAbelian(*d)),
            Self::Free(k) => Box::new(Free(*k)),
            Self::InfiniteDihedral => Box::new(InfiniteDihedral),
            Self::Symmetric(n) => Box::new(Permutations::symmetric(*n)?),
            Self::Cyclic(n) => Box::new(Permutations::cyclic(*n)?),
            Self::PermutationFile(p) => Box::new(load_permutation_group(Path::new(p))?),
            Self::Product(fs) => {
                let mut it = fs.iter().rev();
                let mut acc = it.next().ok_or(CoarseError::Empty("factors"))?.build()?;
                for f in it {
                    acc = Box::new(Product::new(f.build()?, acc));
                }
                acc
            }
        })
    }
}

impl FromStr for GroupSpec {
    type Err = CoarseError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('*') {
            return Ok(Self::Product(s.split('*').map(str::parse).collect::<Result<_>>()?));
        }
        let unknown = || CoarseError::UnknownGroup(s.to_string());
        let arg = |prefix: &str| -> Option<Result<usize>> {
            let rest = s.strip_prefix(prefix)?;
            let inner = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
            Some(inner.parse().map_err(|_| unknown()))
        };
        let positive = |n: usize| if n == 0 { Err(unknown()) } else { Ok(n) };
        if let Some(p) = s.strip_prefix("perm:") {
            return Ok(Self::PermutationFile(p.to_string()));
        }
        match s {
            "z" => return Ok(Self::FreeAbelian(1)),
            "dinf" | "dihedral" => return Ok(Self::InfiniteDihedral),
            _ => {}
        }
        if let Some(n) = arg("free").or_else(|| arg("f")) {
            return Ok(Self::Free(positive(n?)?));
        }
        if let Some(n) = arg("sym").or_else(|| arg("s")) {
            return Ok(Self::Symmetric(n?));
        }
        if let Some(n) = arg("cyclic").or_else(|| arg("c")) {
            return Ok(Self::Cyclic(n?));
        }
        if let Some(n) = arg("z^").or_else(|| arg("z")) {
            let n = positive(n?)?;
            if n > crate::metric::MAX_LATTICE_DIM {
                return Err(CoarseError::InvalidParameter(format!("z{n}: at most 3 generators' worth of dimensions")));
            }
            return Ok(Self::FreeAbelian(n));
        }
        Err(unknown())
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FreeAbelian(1) => write!(f, "z"),
            Self::FreeAbelian(d) => write!(f, "z{d}"),
            Self::Free(k) => write!(f, "f{k}"),
            Self::InfiniteDihedral => write!(f, "dinf"),
            Self::Symmetric(n) => write!(f, "sym({n})"),
            Self::Cyclic(n) => write!(f, "c({n})"),
            Self::PermutationFile(p) => write!(f, "perm:{p}"),
            Self::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|g| g.to_string()).collect();
                write!(f, "{}", parts.join("*"))
            }
        }
    }
}

/// Refuse balls beyond this many vertices.
pub const MAX_BALL_VERTICES: usize = 2_000_000;

/// The radius-`n` ball of the Cayley graph around the identity.
#[derive(Debug, Clone)]
pub struct CayleyBall {
    pub radius: u32,
    pub elements: Vec<Element>,
    pub labels: Vec<String>,
    pub lengths: Vec<u32>,
    /// Undirected adjacency, `g ~ gs`, restricted to the ball.
    pub adj: Vec<Vec<u32>>,
}

impl CayleyBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// `|{g : |g| = k}|` for `k = 0..=radius`.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.radius as usize + 1];
        for &l in &self.lengths {
            s[l as usize] += 1;
        }
        s
    }
}

fn check_generators(g: &dyn GroupOracle) -> Result<Vec<Element>> {
    let e = g.canonical(&g.identity());
    let gens: Vec<Element> = g.generators().iter().map(|s| g.canonical(s)).collect();
    if gens.is_empty() {
        return Err(CoarseError::Empty("generators"));
    }
    for s in &gens {
        if !gens.iter().any(|t| g.canonical(&g.multiply(s, t)) == e) {
            return Err(CoarseError::OracleInconsistent(format!(
                "generator {} has no inverse among the generators",
                g.label(s)
            )));
        }
    }
    Ok(gens)
}

/// Breadth-first enumeration of `{g : |g| <= n}` with edges `{g, gs}`.
pub fn cayley_ball(g: &dyn GroupOracle, n: u32) -> Result<CayleyBall> {
    let gens = check_generators(g)?;
    let e = g.canonical(&g.identity());
    let mut index: HashMap<Element, u32> = HashMap::from([(e.clone(), 0)]);
    let mut elements = vec![e];
    let mut lengths = vec![0u32];
    let mut adj: Vec<Vec<u32>> = vec![Vec::new()];
    let mut head = 0;
    while head < elements.len() {
        let v = head as u32;
        let vl = lengths[head];
        for s in &gens {
            let w = g.canonical(&g.multiply(&elements[head], s));
            if g.canonical(&w) != w {
                return Err(CoarseError::OracleInconsistent(format!(
                    "canonical form of {} is not idempotent",
                    g.label(&w)
                )));
            }
            let wi = match index.get(&w) {
                Some(&wi) => wi,
                None if vl < n => {
                    let wi = elements.len() as u32;
                    if elements.len() >= MAX_BALL_VERTICES {
                        return Err(CoarseError::TooLarge(format!("Cayley ball of radius {n}")));
                    }
                    index.insert(w.clone(), wi);
                    elements.push(w);
                    lengths.push(vl + 1);
                    adj.push(Vec::new());
                    wi
                }
                None => continue,
            };
            if wi != v && !adj[head].contains(&wi) {
                adj[head].push(wi);
            }
        }
        head += 1;
    }
    // symmetrize: with s^-1 in S, every edge is seen from both ends; this
    // only guards against oracles that break that
    for v in 0..adj.len() {
        for k in 0..adj[v].len() {
            let w = adj[v][k] as usize;
            if !adj[w].contains(&(v as u32)) {
                adj[w].push(v as u32);
            }
        }
    }
    let labels = elements.iter().map(|x| g.label(x)).collect::<Vec<_>>();
    Ok(CayleyBall {
        radius: n,
        elements,
        labels,
        lengths,
        adj,
    })
}

/// The word metric `d(g, h) = |g^-1 h|`, as the path metric of the
/// radius-`n` Cayley ball, filtered by word length.
pub fn word_metric_space(g: &dyn GroupOracle, n: u32) -> Result<FiltrationSpace<i64>> {
    let ball = cayley_ball(g, n)?;
    let space = FiniteMetricSpace::graph(ball.labels, ball.adj, 0)?;
    Ok(FiltrationSpace::from_space(g.name(), space, n as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndsVerdict {
    Zero,
    One,
    Two,
    Growing,
    Inconclusive,
}

impl EndsVerdict {
    pub fn disconnected_corona(self) -> Option<bool> {
        match self {
            Self::Zero | Self::One => Some(false),
            Self::Two | Self::Growing => Some(true),
            Self::Inconclusive => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EndsRow {
    pub inner: u32,
    pub components: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EndsEstimate {
    pub group: String,
    pub outer: u32,
    pub rows: Vec<EndsRow>,
    pub verdict: EndsVerdict,
}

/// Components of `{g : n <= |g| <= N}` (edges inside the set) that reach
/// the outer sphere `|g| = N`, for every `n` in `0..=N`.
pub fn outer_component_counts(ball: &CayleyBall) -> Vec<usize> {
    let top = ball.radius as usize;
    let mut order: Vec<usize> = (0..ball.len()).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(ball.lengths[v]));
    let mut uf = UnionFind::new(ball.len());
    let mut outer = vec![false; ball.len()];
    let mut added = vec![false; ball.len()];
    let mut counts = vec![0; top + 1];
    let mut count = 0usize;
    let mut next = 0;
    for n in (0..=top).rev() {
        while next < order.len() && ball.lengths[order[next]] as usize >= n {
            let v = order[next];
            next += 1;
            added[v] = true;
            if ball.lengths[v] as usize == top {
                outer[v] = true;
                count += 1;
            }
            for &w in &ball.adj[v] {
                let w = w as usize;
                if !added[w] {
                    continue;
                }
                let (a, b) = (uf.find(v), uf.find(w));
                if a == b {
                    continue;
                }
                let (oa, ob) = (outer[a], outer[b]);
                let (root, _) = uf.union(a, b);
                outer[root] = oa || ob;
                if oa && ob {
                    count -= 1;
                }
            }
        }
        counts[n] = count;
    }
    counts
}

fn stabilized(counts: &[usize]) -> EndsVerdict {
    let top = &counts[counts.len() / 2..];
    if top.windows(2).all(|w| w[0] == w[1]) {
        return match top[0] {
            0 => EndsVerdict::Zero,
            1 => EndsVerdict::One,
            2 => EndsVerdict::Two,
            _ => EndsVerdict::Inconclusive,
        };
    }
    if top.len() >= 2 && top.windows(2).all(|w| w[0] < w[1]) {
        return EndsVerdict::Growing;
    }
    EndsVerdict::Inconclusive
}

pub fn ends_estimate(g: &dyn GroupOracle, inner: &[u32], outer: u32) -> Result<EndsEstimate> {
    let mut inner = inner.to_vec();
    inner.sort_unstable();
    inner.dedup();
    let max_inner = *inner.last().ok_or(CoarseError::Empty("inner radii"))?;
    if max_inner + 2 > outer {
        return Err(CoarseError::InvalidParameter(format!(
            "outer radius {outer} must be at least {}",
            max_inner + 2
        )));
    }
    let ball = cayley_ball(g, outer)?;
    let counts = outer_component_counts(&ball);
    let rows: Vec<EndsRow> = inner
        .iter()
        .map(|&n| EndsRow {
            inner: n,
            components: counts[n as usize],
        })
        .collect();
    let verdict = stabilized(&rows.iter().map(|r| r.components).collect::<Vec<_>>());
    Ok(EndsEstimate {
        group: g.name(),
        outer,
        rows,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corona {
    Connected,
    Disconnected,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoronaVerdict {
    pub group: String,
    pub verdict: Corona,
    pub depth: u32,
    pub ends: EndsEstimate,
    /// Whether a separated decomposition of the word metric space exists,
    /// or `None` when the group fits inside the ball.
    pub decomposition_found: Option<bool>,
    pub agrees: bool,
}

/// Corona connectedness from the end count at budget `k`, cross-checked
/// against a direct decomposition search on the radius-`k` ball.
pub fn corona_verdict(g: &dyn GroupOracle, budget: u32) -> Result<CoronaVerdict> {
    if budget < 3 {
        return Err(CoarseError::InvalidParameter("budget must be at least 3".into()));
    }
    let inner: Vec<u32> = (1..=budget - 2).collect();
    let ends = ends_estimate(g, &inner, budget)?;
    let disconnected = ends.verdict.disconnected_corona().ok_or_else(|| {
        CoarseError::Inconclusive(format!(
            "component counts {:?} do not stabilize by radius {budget}",
            ends.rows.iter().map(|r| r.components).collect::<Vec<_>>()
        ))
    })?;
    let space = word_metric_space(g, budget)?;
    let reaches = space.norms().last().is_some_and(|&d| d == budget as i64);
    let decomposition_found = if reaches {
        let scales = crate::config::CORONA_CROSSCHECK_SCALES;
        Some(detect_decomposition(&space, &scales, budget as usize, crate::config::DEFAULT_MARGIN as i64)?.found())
    } else {
        None
    };
    Ok(CoronaVerdict {
        group: g.name(),
        verdict: if disconnected { Corona::Disconnected } else { Corona::Connected },
        depth: budget,
        agrees: decomposition_found.map_or(true, |f| f == disconnected),
        ends,
        decomposition_found,
    })
}
