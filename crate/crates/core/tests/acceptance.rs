//! Acceptance gate: one PASS/FAIL line per criterion, each under its time
//! budget.

mod common;

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use coarse_core::coarse_algebra::verify_lemmas;
use coarse_core::cohomology::{cocycle_from_decomposition, triviality_test, Cochain, TrivialityVerdict};
use coarse_core::connect::{ball_complement_components, detect_decomposition};
use coarse_core::coproduct::{binary_coproduct, induced_bound, induced_map, CoproductSpace};
use coarse_core::excisive::{excisive_profile, glued_metric, pushout_glue, CoverDecomposition};
use coarse_core::groups::{cayley_ball, corona_verdict, ends_estimate, word_metric_space, EndsVerdict, GroupSpec};
use coarse_core::maps::control_at;
use coarse_core::{builtin_space, IntFiltration, IntSpace, PointMap, SpaceName};
use common::{random_map, random_space, rng};
use rand::Rng;

type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn space(name: SpaceName, depth: usize) -> IntFiltration {
    builtin_space(&name, depth).unwrap()
}

fn ival(s: &IntSpace, i: usize) -> i64 {
    s.coords(i).unwrap()[0]
}

fn group(name: &str) -> Box<dyn coarse_core::groups::GroupOracle> {
    name.parse::<GroupSpec>().unwrap().build().unwrap()
}

fn decomposition_verdicts() -> Check {
    let scales: Vec<i64> = (1..=10).collect();
    let cases = [
        (space(SpaceName::Integers, 200), 200, true),
        (space(SpaceName::Squares, 3600), 3600, true),
        (space(SpaceName::Naturals, 200), 200, false),
        (space(SpaceName::Grid(2), 200), 200, false),
    ];
    for (x, depth, expect) in cases {
        let v = detect_decomposition(&x, &scales, depth, 1).map_err(|e| e.to_string())?;
        ensure!(v.found() == expect, "{}: found = {}", x.name(), v.found());
        if let Some(w) = &v.witness {
            w.verify_exhaustive().map_err(|e| format!("{}: {e}", x.name()))?;
        }
    }
    Ok(())
}

fn coproduct_laws() -> Check {
    let mut r = rng(2024);
    for case in 0..100 {
        let (nx, ny, nz) = (r.gen_range(1..=30), r.gen_range(1..=30), r.gen_range(1..=30));
        let x = Arc::new(random_space(&mut r, nx, "x"));
        let y = Arc::new(random_space(&mut r, ny, "y"));
        let z = Arc::new(random_space(&mut r, nz, "z"));
        let c = CoproductSpace::new(x.clone(), y.clone(), r.gen_range(0..nx), r.gen_range(0..ny)).map_err(|e| e.to_string())?;
        if let Some(v) = c.space().metric_violation() {
            return Err(format!("coproduct {case}: {v}"));
        }
        let (f, g) = (random_map(&mut r, &x, &z), random_map(&mut r, &y, &z));
        let h = induced_map(&f, &g, &c).map_err(|e| e.to_string())?;
        let radii: Vec<i64> = (0..=10).collect();
        if let Some(row) = induced_bound(&h, &f, &g, &radii).into_iter().find(|row| !row.holds) {
            return Err(format!("coproduct {case}: induced bound fails {row:?}"));
        }
    }

    // N + N <-> Z at depth 100
    let (c, nn) = binary_coproduct(&space(SpaceName::Naturals, 101), &space(SpaceName::Naturals, 101), 0, 0).map_err(|e| e.to_string())?;
    ensure!(nn.max_level() == 100, "coproduct level {}", nn.max_level());
    let s = c.space().clone();
    let z = Arc::new(space(SpaceName::Integers, 100).level(100).unwrap());
    let value = |i: usize| {
        let o = c.origin(i);
        if o.component == 0 {
            ival(c.left(), o.index)
        } else {
            -ival(c.right(), o.index) - 1
        }
    };
    let phi = PointMap::from_fn(s.clone(), z.clone(), |i| z.lattice_index(&[value(i)])).map_err(|e| e.to_string())?;
    let psi = PointMap::from_fn(z.clone(), s.clone(), |i| {
        let n = ival(&z, i);
        if n >= 0 {
            s.index_of(&format!("L:{n}"))
        } else {
            s.index_of(&format!("R:{}", -n - 1))
        }
    })
    .map_err(|e| e.to_string())?;
    for radius in 1..=20 {
        for (name, m) in [("N+N -> Z", &phi), ("Z -> N+N", &psi)] {
            let rho = control_at(m, radius);
            ensure!(rho <= 2 * radius + 1, "{name}: rho({radius}) = {rho}");
        }
    }
    let round = |a: &PointMap<i64>, b: &PointMap<i64>| {
        let ab = a.then(b).unwrap();
        (0..ab.source().len()).map(|i| ab.source().dist(i, ab.apply(i))).max().unwrap()
    };
    ensure!(round(&phi, &psi) <= 1, "psi . phi moves points by {}", round(&phi, &psi));
    ensure!(round(&psi, &phi) <= 1, "phi . psi moves points by {}", round(&psi, &phi));
    Ok(())
}

fn cover(name: SpaceName, depth: usize, a: &str, b: &str) -> CoverDecomposition<i64> {
    CoverDecomposition::from_specs(space(name, depth), &a.parse().unwrap(), &b.parse().unwrap()).unwrap()
}

fn shifted(d: &CoverDecomposition<i64>, depth: usize, shift: i64) -> (PointMap<i64>, PointMap<i64>) {
    let x = d.space().level(depth).unwrap();
    let z = Arc::new(space(SpaceName::Integers, depth + 10).level(depth + 10).unwrap());
    let sa = Arc::new(x.restrict(&d.a_indices(depth), 0));
    let sb = Arc::new(x.restrict(&d.b_indices(depth), 0));
    let f = PointMap::from_fn(sa.clone(), z.clone(), |i| z.lattice_index(&[ival(&sa, i)])).unwrap();
    let g = PointMap::from_fn(sb.clone(), z.clone(), |i| z.lattice_index(&[ival(&sb, i) + shift])).unwrap();
    (f, g)
}

fn excisive_checks() -> Check {
    let halves = cover(SpaceName::Integers, 200, "x>=0", "x<=0");
    let radii: Vec<i64> = (1..=20).collect();
    let p = excisive_profile(&halves, &radii, &[50, 100, 150, 200]).map_err(|e| e.to_string())?;
    ensure!(!p.is_divergent(), "integer halves flagged divergent");
    for (k, row) in p.table.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            ensure!(s == radii[j] - 1, "S({}) = {s} at depth {}", radii[j], p.depths[k]);
        }
    }

    let rays = cover(SpaceName::ParallelRays, 40, "y<=0|x<=0", "y>=1|x<=0");
    let p = excisive_profile(&rays, &[2], &[10, 20, 30, 40]).map_err(|e| e.to_string())?;
    ensure!(p.is_divergent(), "parallel rays not flagged by depth 40: {:?}", p.table);

    let halves = cover(SpaceName::Integers, 100, "x>=0", "x<=0");
    let radii: Vec<i64> = (1..=10).collect();
    let p = excisive_profile(&halves, &radii, &[100]).map_err(|e| e.to_string())?;
    for shift in [0, 3] {
        let (f, g) = shifted(&halves, 100, shift);
        let glued = pushout_glue(&f, &g, &halves, &p, None).map_err(|e| e.to_string())?;
        ensure!(glued.closeness == shift, "closeness {} for shift {shift}", glued.closeness);
        if let Some(row) = glued.rows.iter().find(|r| !r.holds || r.rho_h > r.bound) {
            return Err(format!("four-term bound fails for shift {shift}: {row:?}"));
        }
    }

    let covers = [
        (cover(SpaceName::Integers, 50, "x>=0", "x<=0"), 50),
        (cover(SpaceName::ParallelRays, 30, "y<=0|x<=0", "y>=1|x<=0"), 30),
        (cover(SpaceName::Grid(2), 8, "y>=0", "y<=0"), 8),
    ];
    for (d, depth) in covers {
        let x = d.space().level(depth).unwrap();
        let dp = glued_metric(&d, depth).map_err(|e| e.to_string())?;
        if let Some(v) = dp.metric_violation() {
            return Err(format!("glued metric on {}: {v}", d.space().name()));
        }
        for i in 0..x.len() {
            for j in 0..x.len() {
                ensure!(dp.dist(i, j) >= x.dist(i, j), "d' < d on {}", d.space().name());
            }
        }
    }
    Ok(())
}

fn cohomology_checks() -> Check {
    let mut r = rng(60);
    for case in 0..100 {
        let n = r.gen_range(1..=30);
        let s = Arc::new(random_space(&mut r, n, "v"));
        let g: Vec<i64> = (0..n).map(|_| r.gen_range(-10..=10)).collect();
        let dg = Cochain::from_values(s, &g).unwrap().coboundary().map_err(|e| e.to_string())?;
        ensure!(dg.coboundary().map_err(|e| e.to_string())?.is_zero(), "cochain {case}: dd != 0");
    }

    let depth = 60;
    let x = space(SpaceName::Integers, depth);
    let scales: Vec<i64> = (1..=10).collect();
    let w = detect_decomposition(&x, &scales, depth, 1).unwrap().witness.ok_or("no witness on Z")?;
    let f = cocycle_from_decomposition(&w).map_err(|e| e.to_string())?;
    let n = w.truncation().len();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                ensure!(f.coboundary_at(&[a, b, c]) == 0, "df({a}, {b}, {c}) != 0");
            }
        }
    }
    match triviality_test(&f, w.far_threshold(), &scales, depth).map_err(|e| e.to_string())? {
        TrivialityVerdict::Nontrivial { witness, .. } => {
            ensure!(witness.partition() == w.partition(), "round trip changed the partition");
        }
        v => return Err(format!("witness cocycle judged trivial: {v:?}")),
    }

    let s = w.truncation().clone();
    let far = x.far_threshold(depth, 1);
    for lo in [-3i64, 0, 5] {
        let g: Vec<i64> = (0..n).map(|i| (lo..=lo + 2).contains(&ival(&s, i)) as i64).collect();
        let dg = Cochain::from_values(s.clone(), &g).unwrap().coboundary().unwrap();
        match triviality_test(&dg, far, &scales, depth).map_err(|e| e.to_string())? {
            TrivialityVerdict::Trivial { potential, .. } => {
                ensure!((0..n).all(|i| potential.get(&[i]) == g[i]), "potential of bump at {lo} not recovered");
            }
            v => return Err(format!("coboundary judged nontrivial: {v:?}")),
        }
    }
    Ok(())
}

fn ends_checks() -> Check {
    let ends = |name: &str, inner: &[u32], outer: u32| ends_estimate(group(name).as_ref(), inner, outer).map_err(|e| e.to_string());
    let z = ends("z", &(1..=10).collect::<Vec<_>>(), 30)?;
    ensure!(z.verdict == EndsVerdict::Two && z.rows.iter().all(|r| r.components == 2), "Z: {z:?}");
    let z2 = ends("z2", &(1..=6).collect::<Vec<_>>(), 10)?;
    ensure!(z2.verdict == EndsVerdict::One, "Z^2: {:?}", z2.verdict);
    let dinf = ends("dinf", &(1..=6).collect::<Vec<_>>(), 10)?;
    ensure!(dinf.verdict == EndsVerdict::Two, "D_inf: {:?}", dinf.verdict);
    let ball = cayley_ball(group("f2").as_ref(), 10).map_err(|e| e.to_string())?;
    ensure!(ball.len() == 118_097, "F2 ball has {} vertices", ball.len());
    let f2 = ends("f2", &(1..=6).collect::<Vec<_>>(), 10)?;
    for row in &f2.rows {
        ensure!(row.components == 4 * 3usize.pow(row.inner - 1), "F2 count at {}: {}", row.inner, row.components);
    }
    for name in ["z", "z2", "dinf", "f2"] {
        let v = corona_verdict(group(name).as_ref(), 10).map_err(|e| e.to_string())?;
        ensure!(v.agrees && v.decomposition_found.is_some(), "{name}: {v:?}");
    }
    Ok(())
}

fn algebra_checks() -> Check {
    let rep = verify_lemmas(3, 2).map_err(|e| e.to_string())?;
    ensure!(rep.passed(), "{rep:?}");
    ensure!(rep.closure_checks > 0 && rep.bridge_checks > 0, "nothing was checked: {rep:?}");
    Ok(())
}

/// Split verdicts of a geodesic space at a matched depth: ball complements,
/// the separated-decomposition search and, for groups, the end count.
fn coherence_checks() -> Check {
    let scales: Vec<i64> = vec![1, 2, 3];
    let mut cases: Vec<(String, IntFiltration, usize, Option<&str>)> = vec![
        ("integers".into(), space(SpaceName::Integers, 30), 30, Some("z")),
        ("naturals".into(), space(SpaceName::Naturals, 30), 30, None),
        ("grid(2)".into(), space(SpaceName::Grid(2), 30), 30, Some("z2")),
    ];
    for (name, depth) in [("z", 30u32), ("z2", 30), ("dinf", 30), ("f2", 10)] {
        let x = word_metric_space(group(name).as_ref(), depth).map_err(|e| e.to_string())?;
        cases.push((format!("word metric of {name}"), x, depth as usize, Some(name)));
    }
    for (label, x, depth, g) in cases {
        let radii: Vec<u64> = (1..=(depth as u64) - 2).collect();
        let counts = ball_complement_components(&x, &radii, depth, 1).map_err(|e| e.to_string())?;
        let split = counts[counts.len() / 2..].iter().all(|&(_, c)| c >= 2);
        let found = detect_decomposition(&x, &scales, depth, 1).map_err(|e| e.to_string())?.found();
        ensure!(split == found, "{label}: ball complements {split}, decomposition {found}");
        if let Some(g) = g {
            let inner: Vec<u32> = (1..=depth as u32 - 2).collect();
            let e = ends_estimate(group(g).as_ref(), &inner, depth as u32).map_err(|e| e.to_string())?;
            let ends = e.verdict.disconnected_corona().ok_or(format!("{label}: ends inconclusive"))?;
            ensure!(ends == split, "{label}: ends {ends}, ball complements {split}");
        }
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check, Option<Duration>); 7] = [
        ("1 separated decompositions", decomposition_verdicts, Some(Duration::from_secs(30))),
        ("2 coproduct laws", coproduct_laws, Some(Duration::from_secs(10))),
        ("3 excisive decompositions", excisive_checks, Some(Duration::from_secs(10))),
        ("4 coarse cohomology", cohomology_checks, Some(Duration::from_secs(60))),
        ("5 ends of groups", ends_checks, Some(Duration::from_secs(60))),
        ("6 finite coarse structures", algebra_checks, Some(Duration::from_secs(120))),
        ("7 cross-module coherence", coherence_checks, None),
    ];
    let mut failed = Vec::new();
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(()), Some(b)) if took > b => Err(format!("took {took:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        let line = match &outcome {
            Ok(()) => format!("PASS  {name}  ({took:.2?})\n"),
            Err(e) => {
                failed.push(name);
                format!("FAIL  {name}  ({took:.2?}): {e}\n")
            }
        };
        // written directly so the lines show up without --nocapture
        let mut out = std::io::stdout().lock();
        out.write_all(line.as_bytes()).unwrap();
        out.flush().unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
