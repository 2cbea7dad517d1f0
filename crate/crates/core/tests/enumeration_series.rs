mod common;

use std::collections::BTreeSet;

use common::{big, cycle_independent_sets, diamonds, model, nums, q};
use latgas::enumeration::{
    boundary_forced_sites, canonical_counts, canonical_counts_dfs, configurations, defect_counts, density,
    partition_function, partition_function_dfs, truncated_correlation, FugacityMap, PartitionPolynomial,
};
use latgas::lattice::Site;
use latgas::region::{Region, Window};
use latgas::series::{
    composition_log, exp_series, gaunt_fisher_coefficients, log_series, mayer_coefficients, region_series,
    stabilization_report, torus_density, SeriesKind, Verdict,
};
use latgas::enumeration::Budget;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn ring(l: i32) -> Region {
    Region::torus(&[l]).unwrap()
}

fn rationals(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&x| q(x, 1)).collect()
}

#[test]
fn ring_counts_match_cycle_formula() {
    let m = model("monomer-dimer");
    for l in 3..=16 {
        let p = canonical_counts(&m, &ring(l)).unwrap();
        let expected: Vec<BigUint> = (0..=(l as u64) / 2).map(|k| cycle_independent_sets(l as u64, k)).collect();
        assert_eq!(p.coefficients(), &expected[..], "ring {l}");
    }
    assert_eq!(canonical_counts(&m, &ring(4)).unwrap().coefficients(), &nums(&[1, 4, 2])[..]);
    assert_eq!(canonical_counts(&m, &ring(6)).unwrap().coefficients(), &nums(&[1, 6, 9, 2])[..]);
}

#[test]
fn defect_count_examples() {
    let m = model("monomer-dimer");
    let q4 = defect_counts(&canonical_counts(&m, &ring(4)).unwrap());
    assert_eq!(q4, nums(&[2, 4, 1]));
    let q8 = defect_counts(&canonical_counts(&m, &ring(8)).unwrap());
    assert_eq!((q8[1].clone(), q8[2].clone()), (BigUint::from(16u32), BigUint::from(20u32)));
    assert_eq!(q8.last().unwrap(), &BigUint::one());
    let empty = PartitionPolynomial::new(nums(&[1]), 0, "empty");
    assert_eq!(empty.n_max(), 0);
    assert_eq!(defect_counts(&empty), nums(&[1]));
}

#[test]
fn uniform_partition_function_on_ring() {
    let m = model("monomer-dimer");
    for z in [q(0, 1), q(1, 1), q(7, 3), q(-5, 2)] {
        let expected = BigRational::one() + q(4, 1) * &z + q(2, 1) * &z * &z;
        assert_eq!(partition_function(&m, &ring(4), &FugacityMap::uniform(z.clone())).unwrap(), expected);
        assert_eq!(canonical_counts(&m, &ring(4)).unwrap().evaluate(&z), expected);
    }
}

#[test]
fn fully_forced_window_gives_the_phase_weight() {
    let (m, f) = diamonds();
    let w = Window::single_tile(&m, &f, Site::ORIGIN, Some(0)).unwrap();
    let region = Region::Window(w);
    let sets = boundary_forced_sites(&m, &region).unwrap();
    assert_eq!(sets.forced, vec![Site::ORIGIN]);
    let fug = FugacityMap::uniform(q(3, 1)).with_override(Site::ORIGIN, q(5, 7));
    assert_eq!(partition_function(&m, &region, &fug).unwrap(), q(5, 7));

    let boxed = Region::Window(Window::tiled_box(&m, &f, 0, &[4, 4], Some(0)).unwrap());
    let forced: BTreeSet<Site> = boundary_forced_sites(&m, &boxed).unwrap().forced.into_iter().collect();
    let even: BTreeSet<Site> = boxed.sites().into_iter().filter(|&s| f.get(0).contains(s)).collect();
    assert_eq!(forced.len(), boxed.volume() / 2);
    assert_eq!(forced, even);
    assert!(boundary_forced_sites(&m, &Region::torus(&[4, 4]).unwrap()).is_err());
}

/// Ω_ν membership from first principles: every boundary-touching anchor of
/// ℒ_ν is present and no forced footprint lies next to an empty site.
fn omega_oracle(m: &latgas::lattice::ModelSpec, sub: &latgas::coverings::Sublattice, sites: &BTreeSet<Site>, xs: &[Site]) -> bool {
    let lat = m.lattice();
    let forced: Vec<Site> = sites
        .iter()
        .copied()
        .filter(|&a| sub.contains(a))
        .filter(|&a| m.footprint_at(a).iter().all(|s| sites.contains(s)))
        .filter(|&a| m.footprint_at(a).iter().any(|&s| lat.neighbors(s).any(|n| !sites.contains(&n))))
        .collect();
    let covered: BTreeSet<Site> = xs.iter().flat_map(|&x| m.footprint_at(x)).collect();
    let empty: Vec<Site> = sites.iter().copied().filter(|s| !covered.contains(s)).collect();
    forced.iter().all(|b| xs.contains(b))
        && forced
            .iter()
            .all(|&b| m.footprint_at(b).iter().all(|&s| empty.iter().all(|&e| lat.distance(s, e) > 1)))
}

#[test]
fn boundary_ensemble_matches_filtered_free_enumeration() {
    let (m, f) = diamonds();
    for (lx, ly) in [(4, 4), (6, 4), (6, 6)] {
        let free = Window::tiled_box(&m, &f, 0, &[lx, ly], None).unwrap();
        let nu = free.with_boundary(&f, Some(0)).unwrap();
        let all = configurations(&m, &Region::Window(free.clone())).unwrap();
        let mut filtered: Vec<Vec<Site>> = all
            .into_iter()
            .filter(|xs| omega_oracle(&m, f.get(0), free.sites(), xs))
            .map(|mut xs| {
                xs.sort();
                xs
            })
            .collect();
        filtered.sort();
        let mut bounded: Vec<Vec<Site>> = configurations(&m, &Region::Window(nu))
            .unwrap()
            .into_iter()
            .map(|mut xs| {
                xs.sort();
                xs
            })
            .collect();
        bounded.sort();
        assert_eq!(filtered, bounded, "window {lx}x{ly}");
    }
}

#[test]
fn total_count_matches_subset_brute_force() {
    let (m, _) = diamonds();
    for extents in [[2, 4], [4, 4]] {
        let region = Region::torus(&extents).unwrap();
        let sites = region.sites();
        let n = sites.len();
        let mut count = 0u64;
        for mask in 0u32..(1 << n) {
            let xs: Vec<Site> = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| sites[i]).collect();
            let ok = xs
                .iter()
                .enumerate()
                .all(|(i, &a)| xs[i + 1..].iter().all(|&b| m.compatible_in(&region, a, b)));
            count += ok as u64;
        }
        let p = canonical_counts(&m, &region).unwrap();
        assert_eq!(p.total(), BigUint::from(count));
        assert_eq!(p.evaluate(&q(1, 1)), q(count as i64, 1));
    }
}

#[test]
fn diamond_tori_have_two_maximal_packings() {
    let (m, _) = diamonds();
    for l in [4, 6] {
        let p = canonical_counts(&m, &Region::torus(&[l, l]).unwrap()).unwrap();
        assert_eq!(p.n_max(), (l * l / 2) as usize);
        assert_eq!(p.coefficients()[p.n_max()], BigUint::from(2u32));
    }
}

#[test]
fn densities_sum_to_the_log_derivative() {
    let (m, _) = diamonds();
    let region = Region::torus(&[4, 4]).unwrap();
    let z = q(5, 2);
    let fug = FugacityMap::uniform(z.clone());
    let rho: Vec<BigRational> = region.sites().iter().map(|&x| density(&m, &region, &fug, x).unwrap()).collect();
    assert!(rho.iter().all(|r| *r == rho[0]));
    let p = canonical_counts(&m, &region).unwrap();
    let (mut xi, mut dxi, mut zk) = (BigRational::zero(), BigRational::zero(), BigRational::one());
    for (k, c) in p.coefficients().iter().enumerate() {
        xi += big(c) * &zk;
        dxi += big(c) * q(k as i64, 1) * &zk;
        zk *= &z;
    }
    let total: BigRational = rho.iter().cloned().sum();
    assert_eq!(total, dxi / xi);
}

#[test]
fn correlations_match_probability_tables() {
    let m = model("monomer-dimer");
    let region = ring(6);
    let fug = FugacityMap::uniform(q(1, 1));
    let configs = configurations(&m, &region).unwrap();
    assert_eq!(configs.len(), 18);
    let (a, b) = (Site::x(0), Site::x(3));
    let prob = |pred: &dyn Fn(&Vec<Site>) -> bool| q(configs.iter().filter(|c| pred(c)).count() as i64, 18);
    let pa = prob(&|c| c.contains(&a));
    let pb = prob(&|c| c.contains(&b));
    let pab = prob(&|c| c.contains(&a) && c.contains(&b));
    assert_eq!(truncated_correlation(&m, &region, &fug, &[a]).unwrap(), pa);
    assert_eq!(density(&m, &region, &fug, a).unwrap(), pa);
    assert_eq!(truncated_correlation(&m, &region, &fug, &[a, b]).unwrap(), &pab - &pa * &pb);
    let c = Site::x(1);
    let pc = prob(&|s| s.contains(&c));
    let pac = prob(&|s| s.contains(&a) && s.contains(&c));
    let pbc = prob(&|s| s.contains(&b) && s.contains(&c));
    let pabc = prob(&|s| s.contains(&a) && s.contains(&b) && s.contains(&c));
    let k3 = &pabc - &pab * &pc - &pac * &pb - &pbc * &pa + q(2, 1) * &pa * &pb * &pc;
    assert_eq!(truncated_correlation(&m, &region, &fug, &[a, b, c]).unwrap(), k3);
}

#[test]
fn fully_forced_window_has_no_correlations() {
    let (m, f) = diamonds();
    let w = Region::Window(Window::tiled_box(&m, &f, 0, &[4, 4], Some(0)).unwrap());
    let fug = FugacityMap::uniform(q(2, 1));
    let even = Site::xy(0, 0);
    let odd = Site::xy(1, 0);
    assert_eq!(density(&m, &w, &fug, even).unwrap(), q(1, 1));
    assert_eq!(density(&m, &w, &fug, odd).unwrap(), q(0, 1));
    assert!(truncated_correlation(&m, &w, &fug, &[even, Site::xy(2, 0)]).unwrap().is_zero());
}

#[test]
fn pole_is_reported() {
    let m = model("monomer-dimer");
    let fug = FugacityMap::uniform(q(-1, 3));
    assert!(matches!(density(&m, &ring(3), &fug, Site::x(0)), Err(latgas::Error::Pole)));
}

#[test]
fn transfer_matches_depth_first_on_builtin_models() {
    let cases: Vec<(&str, Vec<i32>)> = vec![
        ("monomer-dimer", vec![7]),
        ("monomer-dimer", vec![12]),
        ("hyperdiamond-2d", vec![5, 6]),
        ("hyperdiamond-2d", vec![6, 6]),
        ("hyperdiamond-3d", vec![2, 3, 4]),
        ("cross", vec![5, 5]),
        ("cross", vec![6, 6]),
        ("hexagon", vec![3, 3]),
        ("hexagon", vec![6, 6]),
        ("poly-a", vec![6, 6]),
        ("poly-b", vec![6, 6]),
        ("poly-c", vec![6, 6]),
        ("poly-d", vec![6, 6]),
        ("domino", vec![4, 4]),
    ];
    for (name, extents) in cases {
        let m = model(name);
        let region = Region::torus(&extents).unwrap();
        assert_eq!(
            canonical_counts(&m, &region).unwrap(),
            canonical_counts_dfs(&m, &region).unwrap(),
            "{name} on {extents:?}"
        );
    }
}

#[test]
fn transfer_matches_depth_first_on_windows() {
    let (m, f) = diamonds();
    for (extents, nu) in [([6, 6], None), ([10, 10], Some(0)), ([12, 10], Some(0))] {
        let region = Region::Window(Window::tiled_box(&m, &f, 0, &extents, nu).unwrap());
        let z = q(7, 2);
        let fug = FugacityMap::uniform(z.clone()).with_override(Site::xy(4, 4), q(1, 3));
        assert_eq!(partition_function(&m, &region, &fug).unwrap(), partition_function_dfs(&m, &region, &fug).unwrap());
        assert_eq!(canonical_counts(&m, &region).unwrap(), canonical_counts_dfs(&m, &region).unwrap());
    }
}

#[test]
fn log_series_examples() {
    assert_eq!(log_series(&rationals(&[1, 1]), 3).unwrap(), vec![q(1, 1), q(-1, 2), q(1, 3)]);
    assert_eq!(log_series(&rationals(&[1, 2, 1]), 3).unwrap(), vec![q(2, 1), q(-1, 1), q(2, 3)]);
    let l = log_series(&[q(1, 1), q(2, 1), q(1, 2)], 2).unwrap();
    assert_eq!(l, vec![q(2, 1), q(-3, 2)]);
    assert!(log_series(&rationals(&[2, 1]), 2).is_err());
}

#[test]
fn mayer_coefficient_examples() {
    let m = model("monomer-dimer");
    let p = canonical_counts(&m, &ring(4)).unwrap();
    let b = mayer_coefficients(p.coefficients(), 4, 2, "ring").unwrap();
    assert_eq!(b.get(1), &q(1, 1));
    assert_eq!(b.get(2), &q(-3, 2));
    let (d, _) = diamonds();
    let p = canonical_counts(&d, &Region::torus(&[4, 4]).unwrap()).unwrap();
    let b = mayer_coefficients(p.coefficients(), 16, 2, "torus").unwrap();
    let z1 = big(&p.coefficients()[1]);
    let z2 = big(&p.coefficients()[2]);
    assert_eq!(b.get(1), &(z1.clone() / q(16, 1)));
    assert_eq!(b.get(2), &((z2 - &z1 * &z1 / q(2, 1)) / q(16, 1)));
}

#[test]
fn gaunt_fisher_ring_values() {
    let m = model("monomer-dimer");
    for l in [4, 6, 8] {
        let c = region_series(&m, &ring(l), SeriesKind::GauntFisherC, 2, 2, &Budget::default()).unwrap();
        assert_eq!(c.get(1), &q(l as i64, 8));
        let qs = defect_counts(&canonical_counts(&m, &ring(l)).unwrap());
        assert_eq!(c.get(1), &(big(&qs[1]) / q(2 * l as i64, 1)));
    }
    let c = gaunt_fisher_coefficients(&nums(&[2, 4, 1]), 2, 4, 2, "ring 4").unwrap();
    assert_eq!(c.get(2), &q(-3, 8));
}

#[test]
fn stabilization_verdicts() {
    let m = model("monomer-dimer");
    let rings: Vec<Region> = [4, 6, 8, 10, 12].iter().map(|&l| ring(l)).collect();
    let report = stabilization_report(&m, &rings, SeriesKind::GauntFisherC, 1, 2, &Budget::default()).unwrap();
    match &report.verdicts[0] {
        Verdict::Diverging { exponent: Some(e) } => assert!((e - 1.0).abs() < 1e-9),
        v => panic!("expected linear divergence, got {v:?}"),
    }
    let (d, _) = diamonds();
    let tori: Vec<Region> = [4, 6, 8].iter().map(|&l| Region::torus(&[l, l]).unwrap()).collect();
    let gf = stabilization_report(&d, &tori, SeriesKind::GauntFisherC, 1, 2, &Budget::default()).unwrap();
    assert!(matches!(&gf.verdicts[0], Verdict::Stable { value, .. } if *value == q(1, 2)));
    let mb = stabilization_report(&d, &tori, SeriesKind::MayerB, 1, 2, &Budget::default()).unwrap();
    assert!(matches!(&mb.verdicts[0], Verdict::Stable { value, .. } if *value == q(1, 1)));
    assert!(stabilization_report(&d, &tori[..2], SeriesKind::MayerB, 1, 2, &Budget::default()).is_err());
}

#[test]
fn density_deficit_is_linear_in_y() {
    let (m, _) = diamonds();
    let p = canonical_counts(&m, &Region::torus(&[6, 6]).unwrap()).unwrap();
    let c1 = q(1, 2);
    let err = |y: BigRational| {
        let rho = torus_density(p.coefficients(), 36, &y).unwrap();
        ((q(1, 2) - rho) / &y - &c1).abs()
    };
    let (e1, e2) = (err(q(1, 1000)), err(q(1, 2000)));
    assert!(e1 < q(1, 100));
    let ratio = e2 / e1;
    assert!(ratio > q(45, 100) && ratio < q(55, 100), "deficit is not c_1 y + O(y^2)");
}

fn poly_strategy() -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((-9i64..10, 1i64..5), 1..7).prop_map(|v| {
        std::iter::once(q(1, 1)).chain(v.into_iter().map(|(n, d)| q(n, d))).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn multinomial_and_newton_logs_agree(a in poly_strategy(), order in 1usize..8) {
        prop_assert_eq!(composition_log(&a, order), log_series(&a, order).unwrap());
    }

    #[test]
    fn exp_inverts_log(a in poly_strategy()) {
        let order = a.len() - 1 + 3;
        let l = log_series(&a, order).unwrap();
        let back = exp_series(&l, order);
        for k in 0..=order {
            let expected = a.get(k).cloned().unwrap_or_else(BigRational::zero);
            prop_assert_eq!(&back[k], &expected);
        }
    }

    #[test]
    fn gaunt_fisher_matches_scaled_log(qs in prop::collection::vec(0u64..50, 1..6), tau in 1usize..4, volume in 1usize..30) {
        let mut q_all = vec![tau as u64];
        q_all.extend(qs);
        let order = q_all.len() - 1;
        let c = gaunt_fisher_coefficients(&nums(&q_all), tau, volume, order, "r").unwrap();
        let scaled: Vec<BigRational> = q_all.iter().map(|&x| q(x as i64, tau as i64)).collect();
        let l = log_series(&scaled, order).unwrap();
        for k in 1..=order {
            prop_assert_eq!(c.get(k), &(l[k - 1].clone() / q(volume as i64, 1)));
        }
    }

    #[test]
    fn random_windows_agree_with_depth_first(lx in 4i32..7, ly in 4i32..7, phase in 0usize..2, fixed in any::<bool>()) {
        let (m, f) = diamonds();
        if let Ok(w) = Window::tiled_box(&m, &f, phase, &[lx, ly], fixed.then_some(phase)) {
            let region = Region::Window(w);
            prop_assert_eq!(canonical_counts(&m, &region).unwrap(), canonical_counts_dfs(&m, &region).unwrap());
        }
    }
}
