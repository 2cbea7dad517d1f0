mod common;

use std::collections::BTreeSet;

use common::{crosses, diamonds, family, model};
use latgas::coverings::{certify_non_sliding, connected_configs, isolating_completions, perfect_coverings};
use latgas::lattice::{empty_sites, graph_distance, refine_mesh, LatticeKind, Site};
use latgas::region::Region;
use latgas::Error;
use proptest::prelude::*;

const MODELS_2D: [&str; 7] = ["hyperdiamond-2d", "cross", "hexagon", "poly-a", "poly-b", "poly-c", "poly-d"];

fn shell_of(m: &latgas::lattice::ModelSpec, xs: &[Site]) -> BTreeSet<Site> {
    let covered: BTreeSet<Site> = xs.iter().flat_map(|&x| m.footprint_at(x)).collect();
    let mut shell = covered.clone();
    for &s in &covered {
        shell.extend(m.lattice().neighbors(s));
    }
    shell
}

#[test]
fn graph_distance_examples() {
    let t = Region::torus(&[6, 6]).unwrap();
    let sq = LatticeKind::Hypercubic { dimension: 2 };
    assert_eq!(graph_distance(sq, Site::xy(2, 3), Site::xy(2, 3), &t).unwrap(), 0);
    assert_eq!(graph_distance(sq, Site::xy(0, 0), Site::xy(1, 1), &t).unwrap(), 2);
    assert_eq!(graph_distance(sq, Site::xy(0, 0), Site::xy(5, 5), &t).unwrap(), 2);
    for n in LatticeKind::Triangular.neighbor_offsets() {
        assert_eq!(graph_distance(LatticeKind::Triangular, Site::ORIGIN, n, &t).unwrap(), 1);
    }
}

#[test]
fn empty_sites_examples() {
    let (m, f) = diamonds();
    let t = Region::torus(&[4, 4]).unwrap();
    let cover: Vec<Site> = t.sites().into_iter().filter(|&s| f.get(0).contains(s)).collect();
    assert!(empty_sites(&m, &t, &cover).unwrap().is_empty());
    assert_eq!(empty_sites(&m, &t, &[]).unwrap().len(), 16);
    let removed = cover[3];
    let rest: Vec<Site> = cover.iter().copied().filter(|&x| x != removed).collect();
    let expected: BTreeSet<Site> = m.footprint_at(removed).into_iter().collect();
    assert_eq!(empty_sites(&m, &t, &rest).unwrap(), expected);
    assert!(matches!(
        empty_sites(&m, &t, &[Site::ORIGIN, Site::xy(1, 0)]),
        Err(Error::Validation(_))
    ));
}

#[test]
fn covering_counts() {
    assert_eq!(diamonds().1.tau(), 2);
    assert_eq!(crosses().1.tau(), 10);
    assert_eq!(family(&model("hexagon"), 6).tau(), 3);
}

#[test]
fn domino_family_is_unbounded() {
    assert!(matches!(perfect_coverings(&model("domino"), 8), Err(Error::UnboundedCoverings { .. })));
}

#[test]
fn refined_cross_has_ten_m_squared_coverings() {
    let m = refine_mesh(&model("cross"), 2).unwrap();
    assert_eq!(m.footprint().len(), 20);
    assert_eq!(family(&m, 20).tau(), 40);
}

#[test]
fn coverings_tile_a_fundamental_box() {
    for name in MODELS_2D {
        let m = model(name);
        let f = family(&m, 12);
        for sub in f.sublattices() {
            let (px, py) = (sub.axis_period(0) as i32, sub.axis_period(1) as i32);
            let reach = m.footprint_diameter() as i32 + 1;
            let anchors = sub.anchors_in_box(Site::xy(-reach, -reach), Site::xy(px + reach, py + reach));
            for x in 0..px {
                for y in 0..py {
                    let s = Site::xy(x, y);
                    let covering = anchors.iter().filter(|&&a| m.footprint_at(a).contains(&s)).count();
                    assert_eq!(covering, 1, "{name}: site {s:?} covered {covering} times");
                }
            }
            let sample: Vec<Site> = anchors.iter().copied().take(40).collect();
            assert!(m.is_configuration(&sample), "{name}: covering is not a valid configuration");
        }
    }
}

#[test]
fn covering_family_is_closed_under_symmetries() {
    for name in MODELS_2D {
        let m = model(name);
        let f = family(&m, 12);
        for (g, c) in m.symmetries() {
            for sub in f.sublattices() {
                assert!(f.index_of(&sub.image(&g, c)).is_some(), "{name}: image of a covering left the family");
            }
        }
        for map in f.maps() {
            assert_eq!(f.index_of(&f.get(map.from).image(&map.linear, map.shift)), Some(map.to));
        }
    }
}

#[test]
fn cross_isolating_completions() {
    let (m, f) = crosses();
    let single = isolating_completions(&m, &[Site::ORIGIN]).unwrap();
    assert_eq!(single.len(), 2);
    let stacked = isolating_completions(&m, &[Site::ORIGIN, Site::xy(3, 0)]).unwrap();
    assert!(stacked.is_empty());
    let packed = isolating_completions(&m, &[Site::ORIGIN, Site::xy(1, 2)]).unwrap();
    assert_eq!(packed.len(), 1);
    for (xs, comps) in [(vec![Site::ORIGIN], &single), (vec![Site::ORIGIN, Site::xy(1, 2)], &packed)] {
        let shell = shell_of(&m, &xs);
        for c in comps.iter() {
            let containing = f.sublattices().iter().filter(|s| c.iter().all(|&x| s.contains(x))).count();
            assert_eq!(containing, 1);
            let covered: BTreeSet<Site> = c.iter().flat_map(|&x| m.footprint_at(x)).collect();
            assert!(shell.iter().all(|s| covered.contains(s)), "empty site next to the seed");
        }
    }
}

#[test]
fn disconnected_seed_is_rejected() {
    let (m, _) = crosses();
    assert!(isolating_completions(&m, &[Site::ORIGIN, Site::xy(10, 0)]).is_err());
}

#[test]
fn non_sliding_certificates() {
    let (m, f) = crosses();
    let cert = certify_non_sliding(&m, &f, 3).unwrap();
    assert!(cert.passed && cert.violations.is_empty());
    let (m, f) = diamonds();
    assert!(certify_non_sliding(&m, &f, 4).unwrap().passed);
    let md = model("monomer-dimer");
    let fam = family(&md, 6);
    assert!(certify_non_sliding(&md, &fam, 2).is_err());
}

#[test]
fn connected_classes_are_canonical_and_connected() {
    for name in ["cross", "hyperdiamond-2d"] {
        let m = model(name);
        assert_eq!(connected_configs(&m, 1).len(), 1);
        let pairs = connected_configs(&m, 2);
        let mut seen = BTreeSet::new();
        for p in &pairs {
            assert!(m.is_configuration(p));
            let d = p[1] - p[0];
            assert!(seen.insert(d.min(-d)), "{name}: class {p:?} repeated");
            let union: BTreeSet<Site> = p.iter().flat_map(|&x| m.footprint_at(x)).collect();
            assert!(latgas::region::is_connected(m.lattice(), &union));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_symmetric(mi in 0usize..MODELS_2D.len(), ax in -5i32..5, ay in -5i32..5, bx in -5i32..5, by in -5i32..5) {
        let m = model(MODELS_2D[mi]);
        let (a, b) = (Site::xy(ax, ay), Site::xy(bx, by));
        prop_assert_eq!(m.compatible(a, b), m.compatible(b, a));
        let overlap = m.footprint_at(a).iter().any(|s| m.footprint_at(b).contains(s));
        if overlap && a != b {
            prop_assert!(!m.compatible(a, b));
        }
    }

    #[test]
    fn empty_sites_partition_the_region(mi in 0usize..MODELS_2D.len(), lx in 5i32..8, ly in 5i32..8, picks in prop::collection::vec(0usize..64, 0..14)) {
        let m = model(MODELS_2D[mi]);
        let region = Region::torus(&[lx, ly]).unwrap();
        let sites = region.sites();
        let mut xs: Vec<Site> = Vec::new();
        for p in picks {
            let x = sites[p % sites.len()];
            if xs.iter().all(|&y| y != x && m.compatible_in(&region, x, y)) {
                xs.push(x);
            }
        }
        let empty = empty_sites(&m, &region, &xs).unwrap();
        let Region::Torus(t) = &region else { unreachable!() };
        let mut covered: Vec<Site> = xs.iter().flat_map(|&x| m.footprint_at(x)).map(|s| t.reduce(s)).collect();
        let n = covered.len();
        covered.sort();
        covered.dedup();
        prop_assert_eq!(covered.len(), n);
        prop_assert!(covered.iter().all(|s| !empty.contains(s)));
        prop_assert_eq!(covered.len() + empty.len(), sites.len());
    }
}
