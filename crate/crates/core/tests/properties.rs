mod common;

use std::sync::Arc;

use coarse_core::coarse_algebra::{generate_structure, map_predicates, Relation};
use coarse_core::cohomology::Cochain;
use coarse_core::coproduct::{induced_bound, induced_map, CoproductMode, CoproductSpace, CountableCoproduct};
use coarse_core::maps::{control_at, estimate_control};
use coarse_core::rips::rips_graph;
use coarse_core::{builtin_space, IntSpace, PointMap, SpaceName};
use common::{by_label, control, random_map, random_space, rng};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn coproduct_metric_axioms(seed in any::<u64>(), nx in 1usize..=30, ny in 1usize..=30) {
        let mut r = rng(seed);
        let x = Arc::new(random_space(&mut r, nx, "x"));
        let y = Arc::new(random_space(&mut r, ny, "y"));
        let (x0, y0) = (r.gen_range(0..nx), r.gen_range(0..ny));
        let c = CoproductSpace::new(x.clone(), y.clone(), x0, y0).unwrap();
        let s = c.space();
        prop_assert_eq!(s.len(), nx + ny);
        prop_assert_eq!(s.metric_violation(), None);
        let (l, rt) = c.injections();
        for a in 0..nx {
            for b in 0..ny {
                prop_assert_eq!(s.dist(l[a], rt[b]), x.dist(a, x0) + 1 + y.dist(y0, b));
            }
            for b in 0..nx {
                prop_assert_eq!(s.dist(l[a], l[b]), x.dist(a, b));
            }
        }
    }

    #[test]
    fn induced_map_bound(seed in any::<u64>(), nx in 1usize..=30, ny in 1usize..=30, nz in 1usize..=30) {
        let mut r = rng(seed);
        let x = Arc::new(random_space(&mut r, nx, "x"));
        let y = Arc::new(random_space(&mut r, ny, "y"));
        let z = Arc::new(random_space(&mut r, nz, "z"));
        let c = CoproductSpace::new(x.clone(), y.clone(), r.gen_range(0..nx), r.gen_range(0..ny)).unwrap();
        let f = random_map(&mut r, &x, &z);
        let g = random_map(&mut r, &y, &z);
        let h = induced_map(&f, &g, &c).unwrap();
        let (x0, y0) = c.basepoints();
        prop_assert_eq!(h.offset, z.dist(f.apply(x0), g.apply(y0)));
        let radii: Vec<i64> = (0..=12).collect();
        for row in induced_bound(&h, &f, &g, &radii) {
            prop_assert!(row.holds, "{:?}", row);
            prop_assert_eq!(row.rho_h, control(&h.map, row.radius));
            prop_assert!(row.rho_h <= control(&f, row.radius) + h.offset + control(&g, row.radius));
        }
    }

    #[test]
    fn basepoint_independence(seed in any::<u64>(), nx in 1usize..=20, ny in 1usize..=20) {
        let mut r = rng(seed);
        let x = Arc::new(random_space(&mut r, nx, "x"));
        let y = Arc::new(random_space(&mut r, ny, "y"));
        let (x0, x1) = (r.gen_range(0..nx), r.gen_range(0..nx));
        let (y0, y1) = (r.gen_range(0..ny), r.gen_range(0..ny));
        let c0 = CoproductSpace::new(x.clone(), y.clone(), x0, y0).unwrap();
        let c1 = CoproductSpace::new(x.clone(), y.clone(), x1, y1).unwrap();
        let id = by_label(c0.space(), c1.space());
        let shift = x.dist(x0, x1) + y.dist(y0, y1);
        for radius in 0..=15 {
            prop_assert!(control_at(&id, radius) <= radius + shift);
        }
    }

    #[test]
    fn sum_mode_separation(seed in any::<u64>(), k in 2usize..=6, radius in 1i64..=8) {
        let mut r = rng(seed);
        let parts: Vec<Arc<IntSpace>> = (0..k)
            .map(|i| {
                let n = r.gen_range(1..=6);
                Arc::new(random_space(&mut r, n, &format!("p{i}.")))
            })
            .collect();
        let bps = parts.iter().map(|p| r.gen_range(0..p.len())).collect();
        let cc = CountableCoproduct::new(parts.clone(), bps, CoproductMode::Sum).unwrap();
        let cut = cc.separation_index(radius);
        for i in 1..=k {
            for j in (1..=k).filter(|&j| j != i && i.max(j) >= cut) {
                for a in 0..parts[i - 1].len() {
                    for b in 0..parts[j - 1].len() {
                        prop_assert!(cc.distance(i, a, j, b) > radius);
                    }
                }
            }
        }
    }

    #[test]
    fn coboundary_squares_to_zero(seed in any::<u64>(), n in 1usize..=25) {
        let mut r = rng(seed);
        let s = Arc::new(random_space(&mut r, n, "v"));
        let g: Vec<i64> = (0..n).map(|_| r.gen_range(-5..=5)).collect();
        let dg = Cochain::from_values(s.clone(), &g).unwrap().coboundary().unwrap();
        prop_assert!(dg.coboundary().unwrap().is_zero());
        prop_assert!(dg.is_cocycle());
        for a in 0..n {
            prop_assert_eq!(dg.get(&[a, a]), 0);
            for b in 0..n {
                prop_assert_eq!(dg.get(&[a, b]), g[b] - g[a]);
                prop_assert_eq!(dg.get(&[a, b]), -dg.get(&[b, a]));
                for c in 0..n {
                    prop_assert_eq!(dg.coboundary_at(&[a, b, c]), 0);
                }
            }
        }
    }

    #[test]
    fn cocycle_check_agrees_with_triple_scan(seed in any::<u64>(), n in 1usize..=10) {
        let mut r = rng(seed);
        let s = Arc::new(random_space(&mut r, n, "v"));
        let f = if r.gen_bool(0.5) {
            let g: Vec<i64> = (0..n).map(|_| r.gen_range(-3..=3)).collect();
            Cochain::from_values(s.clone(), &g).unwrap().coboundary().unwrap()
        } else {
            let vals: Vec<i64> = (0..n * n).map(|_| r.gen_range(-1..=1)).collect();
            Cochain::from_fn(s.clone(), 1, |t| vals[t[0] * n + t[1]]).unwrap()
        };
        let mut scan = true;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    scan &= f.coboundary_at(&[a, b, c]) == 0;
                }
            }
        }
        prop_assert_eq!(f.is_cocycle(), scan);
        if scan {
            for a in 0..n {
                prop_assert_eq!(f.get(&[a, a]), 0);
                for b in 0..n {
                    prop_assert_eq!(f.get(&[a, b]), -f.get(&[b, a]));
                }
            }
        }
    }

    #[test]
    fn rips_edges_grow(seed in any::<u64>(), n in 1usize..=30, r0 in 0i64..8, dr in 0i64..8) {
        let s = random_space(&mut rng(seed), n, "v");
        let small = rips_graph(&s, r0);
        let big = rips_graph(&s, r0 + dr);
        prop_assert!(small.edges.iter().all(|e| big.edges.binary_search(e).is_ok()));
        prop_assert!(small.component_count() >= big.component_count());
    }

    #[test]
    fn control_estimates_are_consistent(seed in any::<u64>(), n in 1usize..=25, extra in prop::collection::vec(0i64..20, 1..6)) {
        let mut r = rng(seed);
        let x = Arc::new(random_space(&mut r, n, "x"));
        let f = random_map(&mut r, &x, &x);
        let base = [1, 3, 7];
        let mut wide = base.to_vec();
        wide.extend(&extra);
        let a = estimate_control(&f, &base).unwrap();
        let b = estimate_control(&f, &wide).unwrap();
        prop_assert!(a.is_monotone() && b.is_monotone());
        for (radius, bound) in a.iter() {
            prop_assert_eq!(b.bound_at(radius), Some(bound));
            prop_assert_eq!(bound, control(&f, radius));
        }
    }

    #[test]
    fn composition_law(seed in any::<u64>(), nx in 1usize..=20, ny in 1usize..=20, nz in 1usize..=20) {
        let mut r = rng(seed);
        let x = Arc::new(random_space(&mut r, nx, "x"));
        let y = Arc::new(random_space(&mut r, ny, "y"));
        let z = Arc::new(random_space(&mut r, nz, "z"));
        let f = random_map(&mut r, &x, &y);
        let g = random_map(&mut r, &y, &z);
        let gf = f.then(&g).unwrap();
        for radius in 0..=10 {
            let rf = control_at(&f, radius);
            prop_assert!(control_at(&gf, radius) <= control_at(&g, rf));
        }
    }

    #[test]
    fn generated_structures_are_fixpoints(seed in any::<u64>(), n in 1usize..=4, k in 0usize..=3) {
        let mut r = rng(seed);
        let gens: Vec<Relation> = (0..k)
            .map(|_| {
                let pairs: Vec<(usize, usize)> = (0..r.gen_range(0..=n * n))
                    .map(|_| (r.gen_range(0..n), r.gen_range(0..n)))
                    .collect();
                Relation::from_pairs(n, &pairs).unwrap()
            })
            .collect();
        let s = generate_structure(n, &gens).unwrap();
        prop_assert_eq!(&generate_structure(n, s.maximal()).unwrap(), &s);
        prop_assert!(s.closure_law_violations().is_empty());
        for g in &gens {
            prop_assert!(s.is_member(g).unwrap());
        }
        let bounded = s.bounded_sets().unwrap();
        for &b in &bounded {
            let mut sub = b;
            loop {
                prop_assert!(s.is_bounded(sub));
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & b;
            }
            if s.is_connected() {
                for &c in &bounded {
                    prop_assert!(s.is_bounded(b | c));
                }
            }
        }
    }

    #[test]
    fn metric_structure_compatibility(seed in any::<u64>(), nx in 1usize..=12, ny in 1usize..=12) {
        let mut r = rng(seed);
        let x = Arc::new(random_space(&mut r, nx, "x"));
        let y = Arc::new(random_space(&mut r, ny, "y"));
        let structure = |s: &IntSpace| {
            let diam = (0..s.len()).flat_map(|a| (0..s.len()).map(move |b| (a, b))).map(|(a, b)| s.dist(a, b)).max().unwrap();
            let gens: Vec<Relation> = (0..=diam)
                .map(|k| {
                    let pairs: Vec<_> = (0..s.len())
                        .flat_map(|a| (0..s.len()).map(move |b| (a, b)))
                        .filter(|&(a, b)| s.dist(a, b) <= k)
                        .collect();
                    Relation::from_pairs(s.len(), &pairs).unwrap()
                })
                .collect();
            generate_structure(s.len(), &gens).unwrap()
        };
        let (sx, sy) = (structure(&x), structure(&y));
        let f = random_map(&mut r, &x, &y);
        // on a finite space every map has a finite control function
        let metric_bornologous = (0..=20).all(|radius| control(&f, radius) < i64::MAX);
        prop_assert_eq!(map_predicates(f.values(), &sx, &sy, None).unwrap().bornologous, metric_bornologous);
    }
}

#[test]
fn builtin_metric_axioms_at_every_level() {
    let names = [
        (SpaceName::Integers, 12),
        (SpaceName::Naturals, 12),
        (SpaceName::Squares, 50),
        (SpaceName::Grid(2), 5),
        (SpaceName::Grid(3), 3),
        (SpaceName::HalflineNet(3), 12),
        (SpaceName::ParallelRays, 8),
    ];
    for (name, top) in names {
        let x = builtin_space::<i64>(&name, top).unwrap();
        for n in 0..=top {
            let level = x.level(n).unwrap();
            assert_eq!(level.metric_violation(), None, "{name} level {n}");
            assert!(level.norms().iter().all(|&d| d <= n as i64));
        }
    }
}

#[test]
fn identity_control_is_the_radius() {
    let x = Arc::new(builtin_space::<i64>(&SpaceName::Integers, 30).unwrap().level(30).unwrap());
    let id = PointMap::identity(x);
    let c = estimate_control(&id, &[1, 2, 5, 10]).unwrap();
    assert_eq!(c.bounds, vec![1, 2, 5, 10]);
}
