//! Gaunt-Fisher configurations (GFcs): extraction from particle
//! configurations, exterior and hole decomposition, activities, window and
//! bulk enumeration, the polymer identity, Ursell functions, truncated
//! cluster sums and the convergence certificate.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::coverings::CoveringFamily;
use crate::enumeration::{
    boundary_sets, canonical_counts_with, dfs_visit, must_cover_sites, partition_function_marked, Budget,
    FugacityMap, PartitionPolynomial, Problem,
};
use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeKind, ModelSpec, Site};
use crate::ratio::rational_string;
use crate::region::{bounding_box, box_sites, components, Region, Window};

/// Largest multiset handled by [`ursell`].
pub const MAX_URSELL_VERTICES: usize = 12;
/// Largest multiset handled by [`ursell_brute_force`].
pub const MAX_BRUTE_FORCE_VERTICES: usize = 6;

// ---------------------------------------------------------------------------
// Types

/// A bounded component of the complement of a support, with its label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hole {
    pub sites: BTreeSet<Site>,
    /// Index of the covering that fills the hole (0-based).
    pub phase: usize,
}

/// A Gaunt-Fisher configuration.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gfc {
    /// Γ: empty sites plus the footprints of the particles touching them.
    pub support: BTreeSet<Site>,
    /// X_γ: anchors of the particles inside the support.
    pub particles: BTreeSet<Site>,
    /// External label ν (0-based).
    pub phase: usize,
    pub holes: Vec<Hole>,
}

impl Gfc {
    pub fn size(&self) -> usize {
        self.support.len()
    }

    /// Sites of the support not covered by `particles`.
    pub fn empty_sites(&self, model: &ModelSpec) -> BTreeSet<Site> {
        let covered: HashSet<Site> = self.particles.iter().flat_map(|&a| model.footprint_at(a)).collect();
        self.support.iter().copied().filter(|s| !covered.contains(s)).collect()
    }

    pub fn translate(&self, t: Site) -> Gfc {
        let shift = |set: &BTreeSet<Site>| set.iter().map(|&s| s + t).collect::<BTreeSet<_>>();
        Gfc {
            support: shift(&self.support),
            particles: shift(&self.particles),
            phase: self.phase,
            holes: self
                .holes
                .iter()
                .map(|h| Hole {
                    sites: shift(&h.sites),
                    phase: h.phase,
                })
                .collect(),
        }
    }

    /// `|Γ ∩ ℒ_ν| − |X_γ|`, the power of `y = 1/z` in front of the hole ratios.
    pub fn deficit(&self, family: &CoveringFamily) -> i64 {
        let sub = family.get(self.phase);
        self.support.iter().filter(|&&s| sub.contains(s)).count() as i64 - self.particles.len() as i64
    }

    /// Φ(γ, γ′): true when the supports are at graph distance greater than 1.
    pub fn compatible(&self, other: &Gfc, lattice: LatticeKind) -> bool {
        !other
            .support
            .iter()
            .any(|&s| self.support.contains(&s) || lattice.neighbors(s).any(|n| self.support.contains(&n)))
    }

    pub fn to_json(&self, dim: usize) -> serde_json::Value {
        let list = |set: &BTreeSet<Site>| set.iter().map(|s| s.to_vec(dim)).collect::<Vec<_>>();
        serde_json::json!({
            "phase": self.phase + 1,
            "support_size": self.support.len(),
            "support": list(&self.support),
            "particles": list(&self.particles),
            "holes": self.holes.iter().map(|h| serde_json::json!({
                "phase": h.phase + 1,
                "sites": list(&h.sites),
            })).collect::<Vec<_>>(),
        })
    }
}

// ---------------------------------------------------------------------------
// Exterior and holes

/// Complement of a support inside an ambient box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub exterior: BTreeSet<Site>,
    pub holes: Vec<BTreeSet<Site>>,
}

/// Splits the complement of `support` inside the inclusive box `[lo, hi]`
/// into the exterior (components touching the frontier) and holes.
pub fn hole_decomposition(lattice: LatticeKind, support: &BTreeSet<Site>, lo: Site, hi: Site) -> Result<Decomposition> {
    let dim = lattice.dim();
    let on_frontier = |s: &Site| (0..dim).any(|i| s.0[i] == lo.0[i] || s.0[i] == hi.0[i]);
    for s in support {
        if (0..dim).any(|i| s.0[i] - lo.0[i] < 2 || hi.0[i] - s.0[i] < 2) {
            return Err(Error::MarginTooSmall);
        }
    }
    let rest: BTreeSet<Site> = box_sites(lo, hi, dim).into_iter().filter(|s| !support.contains(s)).collect();
    let mut exterior = BTreeSet::new();
    let mut holes = Vec::new();
    for c in components(lattice, &rest) {
        if c.iter().any(on_frontier) {
            exterior.extend(c);
        } else {
            holes.push(c);
        }
    }
    holes.sort();
    Ok(Decomposition { exterior, holes })
}

fn local_holes(lattice: LatticeKind, support: &BTreeSet<Site>) -> Result<Vec<BTreeSet<Site>>> {
    let (lo, hi) = dilate(bounding_box(support.iter().copied()), lattice.dim(), 2);
    Ok(hole_decomposition(lattice, support, lo, hi)?.holes)
}

fn dilate((mut lo, mut hi): (Site, Site), dim: usize, by: i32) -> (Site, Site) {
    for i in 0..dim {
        lo.0[i] -= by;
        hi.0[i] += by;
    }
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Extraction

/// Covering anchor of a site and whether it is a particle of the
/// configuration (as opposed to a boundary phantom).
type CoverFn<'a> = dyn Fn(Site) -> Option<(Site, bool)> + 'a;

struct Scene<'a> {
    model: &'a ModelSpec,
    family: &'a CoveringFamily,
    phase: usize,
    cover: &'a CoverFn<'a>,
}

impl Scene<'_> {
    fn label(&self, sites: &BTreeSet<Site>) -> Result<usize> {
        let lat = self.model.lattice();
        let inner: BTreeSet<Site> = sites.iter().filter_map(|&s| (self.cover)(s).map(|c| c.0)).collect();
        let mut closure = inner.clone();
        for &a in &inner {
            for c in self.model.footprint_at(a) {
                for n in lat.neighbors(c) {
                    if let Some((b, _)) = (self.cover)(n) {
                        closure.insert(b);
                    }
                }
            }
        }
        let xs: Vec<Site> = closure.into_iter().collect();
        self.family.unique_phase(&xs).ok_or_else(|| Error::SlidingViolation {
            message: format!(
                "a covered region of {} sites is not contained in a unique perfect covering",
                sites.len()
            ),
            witness: xs.iter().map(|s| s.to_vec(self.model.dim())).collect(),
        })
    }

    /// GFcs of the configuration with empty sites `empties`. With
    /// `single_only`, configurations whose empty region splits into several
    /// supports yield nothing.
    fn gfcs(&self, empties: &BTreeSet<Site>, ambient: (Site, Site), single_only: bool) -> Result<Vec<Gfc>> {
        if empties.is_empty() {
            return Ok(Vec::new());
        }
        let lat = self.model.lattice();
        let dim = self.model.dim();
        let mut halo = BTreeSet::new();
        for &e in empties {
            for n in lat.neighbors(e) {
                if let Some((a, true)) = (self.cover)(n) {
                    halo.insert(a);
                }
            }
        }
        let mut u = empties.clone();
        for &a in &halo {
            u.extend(self.model.footprint_at(a));
        }
        let supports = components(lat, &u);
        if single_only && supports.len() > 1 {
            return Ok(Vec::new());
        }
        let local: Vec<Vec<BTreeSet<Site>>> = supports.iter().map(|g| local_holes(lat, g)).collect::<Result<_>>()?;
        let assemble = |g: &BTreeSet<Site>, phase: usize, holes: Vec<Hole>| Gfc {
            support: g.clone(),
            particles: halo
                .iter()
                .copied()
                .filter(|&a| self.model.footprint_at(a).iter().all(|c| g.contains(c)))
                .collect(),
            phase,
            holes,
        };
        if supports.len() == 1 {
            let holes = local[0]
                .iter()
                .map(|h| {
                    Ok(Hole {
                        sites: h.clone(),
                        phase: self.label(h)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(vec![assemble(&supports[0], self.phase, holes)]);
        }

        let (lo, hi) = dilate(
            bounding_box(u.iter().copied().chain([ambient.0, ambient.1])),
            dim,
            self.model.footprint_diameter() as i32 + 2,
        );
        let on_frontier = |s: &Site| (0..dim).any(|i| s.0[i] == lo.0[i] || s.0[i] == hi.0[i]);
        let rest: BTreeSet<Site> = box_sites(lo, hi, dim).into_iter().filter(|s| !u.contains(s)).collect();
        let pieces = components(lat, &rest);
        let labels: Vec<usize> = pieces
            .iter()
            .map(|k| if k.iter().any(on_frontier) { Ok(self.phase) } else { self.label(k) })
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        for (g, holes) in supports.iter().zip(&local) {
            let mut outside = BTreeSet::new();
            let mut inside = vec![BTreeSet::new(); holes.len()];
            for (k, piece) in pieces.iter().enumerate() {
                if !piece.iter().any(|&s| lat.neighbors(s).any(|n| g.contains(&n))) {
                    continue;
                }
                let probe = piece.iter().next().expect("non-empty component");
                match holes.iter().position(|h| h.contains(probe)) {
                    Some(j) => inside[j].insert(labels[k]),
                    None => outside.insert(labels[k]),
                };
            }
            let witness = || g.iter().map(|s| s.to_vec(dim)).collect::<Vec<_>>();
            let single = |set: &BTreeSet<usize>| -> Result<usize> {
                match set.iter().collect::<Vec<_>>()[..] {
                    [&l] => Ok(l),
                    _ => Err(Error::PropertyViolation(format!(
                        "ambiguous label {:?} next to the support {:?}",
                        set.iter().map(|l| l + 1).collect::<Vec<_>>(),
                        witness()
                    ))),
                }
            };
            let phase = single(&outside)?;
            let holes = holes
                .iter()
                .zip(&inside)
                .map(|(h, l)| {
                    Ok(Hole {
                        sites: h.clone(),
                        phase: single(l)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(assemble(g, phase, holes));
        }
        out.sort();
        Ok(out)
    }
}

fn window_phase(window: &Window) -> Result<usize> {
    window
        .boundary()
        .map(|pb| pb.phase)
        .ok_or_else(|| Error::Validation("GFcs need a window with a phase boundary condition".into()))
}

fn window_cover<'a>(model: &'a ModelSpec, family: &'a CoveringFamily, window: &'a Window, occ: &'a HashMap<Site, Site>) -> impl Fn(Site) -> Option<(Site, bool)> + 'a {
    let sub = family.get(window.boundary().map(|pb| pb.phase).unwrap_or(0));
    move |s| {
        if let Some(&a) = occ.get(&s) {
            return Some((a, true));
        }
        model
            .footprint()
            .iter()
            .map(|&f| s - f)
            .find(|&a| sub.contains(a) && !window.contains(a))
            .map(|a| (a, false))
    }
}

fn occupation(model: &ModelSpec, xs: &[Site]) -> Result<HashMap<Site, Site>> {
    let mut occ = HashMap::new();
    for &a in xs {
        for c in model.footprint_at(a) {
            if occ.insert(c, a).is_some() {
                return invalid(format!("configuration: footprints overlap at {c:?}"));
            }
        }
    }
    Ok(occ)
}

/// Whether `xs` belongs to Ω_ν of the window.
pub fn in_boundary_ensemble(model: &ModelSpec, window: &Window, xs: &[Site]) -> Result<bool> {
    let phase = window_phase(window)?;
    if !xs.iter().all(|&a| window.contains(a)) || !model.is_configuration(xs) {
        return Ok(false);
    }
    let sets = boundary_sets(model, window, phase)?;
    let set: HashSet<Site> = xs.iter().copied().collect();
    if !sets.forced.iter().all(|a| set.contains(a)) {
        return Ok(false);
    }
    let covered: HashSet<Site> = xs.iter().flat_map(|&a| model.footprint_at(a)).collect();
    Ok(must_cover_sites(model, window, &sets.forced).iter().all(|s| covered.contains(s)))
}

/// GFcs of a configuration `xs ∈ Ω_ν(Λ)`.
pub fn extract_gfcs(model: &ModelSpec, family: &CoveringFamily, window: &Window, xs: &[Site]) -> Result<Vec<Gfc>> {
    let phase = window_phase(window)?;
    if !in_boundary_ensemble(model, window, xs)? {
        return invalid("configuration is not admissible under the window's boundary condition");
    }
    extract_unchecked(model, family, window, phase, xs)
}

fn extract_unchecked(model: &ModelSpec, family: &CoveringFamily, window: &Window, phase: usize, xs: &[Site]) -> Result<Vec<Gfc>> {
    let occ = occupation(model, xs)?;
    let cover = window_cover(model, family, window, &occ);
    let scene = Scene {
        model,
        family,
        phase,
        cover: &cover,
    };
    let empties: BTreeSet<Site> = window.sites().iter().copied().filter(|&s| cover(s).is_none()).collect();
    scene.gfcs(&empties, window.bounds(), false)
}

/// The configuration obtained by covering the exterior of γ (inside the
/// window) with ℒ_ν and each hole with its own covering.
pub fn realize(model: &ModelSpec, family: &CoveringFamily, window: &Window, gfc: &Gfc) -> Vec<Site> {
    let blocked: HashSet<Site> = gfc
        .support
        .iter()
        .chain(gfc.holes.iter().flat_map(|h| h.sites.iter()))
        .copied()
        .collect();
    let mut xs: BTreeSet<Site> = gfc.particles.clone();
    let sub = family.get(gfc.phase);
    for &a in window.sites() {
        if sub.contains(a) && !model.footprint_at(a).iter().any(|c| blocked.contains(c)) && !blocked.contains(&a) {
            xs.insert(a);
        }
    }
    for h in &gfc.holes {
        let sub = family.get(h.phase);
        for &a in &h.sites {
            if sub.contains(a) && model.footprint_at(a).iter().all(|c| h.sites.contains(c)) {
                xs.insert(a);
            }
        }
    }
    xs.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Activities

/// Memoized hole partition polynomials keyed by (hole, boundary label).
#[derive(Default)]
pub struct HoleCache {
    polys: Mutex<HashMap<(Vec<Site>, usize), PartitionPolynomial>>,
}

impl HoleCache {
    pub fn new() -> HoleCache {
        HoleCache::default()
    }

    pub fn len(&self) -> usize {
        self.polys.lock().expect("hole cache").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn polynomial(
        &self,
        model: &ModelSpec,
        family: &CoveringFamily,
        sites: &BTreeSet<Site>,
        phase: usize,
        budget: &Budget,
    ) -> Result<PartitionPolynomial> {
        let key = (sites.iter().copied().collect::<Vec<_>>(), phase);
        if let Some(p) = self.polys.lock().expect("hole cache").get(&key) {
            return Ok(p.clone());
        }
        let w = Window::new(model, family, sites.clone(), Some(phase))?;
        let p = canonical_counts_with(model, &Region::Window(w), budget)?;
        self.polys.lock().expect("hole cache").insert(key, p.clone());
        Ok(p)
    }
}

/// ζ(γ) at a (possibly site-dependent) fugacity.
pub fn gfc_activity(
    model: &ModelSpec,
    family: &CoveringFamily,
    gfc: &Gfc,
    fug: &FugacityMap,
    cache: &HoleCache,
    budget: &Budget,
) -> Result<BigRational> {
    let sub = family.get(gfc.phase);
    let mut num: BigRational = gfc.particles.iter().map(|&x| fug.at(x).clone()).product();
    let mut den: BigRational = gfc
        .support
        .iter()
        .filter(|&&s| sub.contains(s))
        .map(|&s| fug.at(s).clone())
        .product();
    for h in gfc.holes.iter().filter(|h| h.phase != gfc.phase) {
        let (top, bottom) = if fug.overrides.is_empty() {
            (
                cache.polynomial(model, family, &h.sites, h.phase, budget)?.evaluate(&fug.uniform),
                cache.polynomial(model, family, &h.sites, gfc.phase, budget)?.evaluate(&fug.uniform),
            )
        } else {
            let at = |phase| -> Result<BigRational> {
                let w = Window::new(model, family, h.sites.clone(), Some(phase))?;
                partition_function_marked(model, &Region::Window(w), fug, &[], budget)
            };
            (at(h.phase)?, at(gfc.phase)?)
        };
        num *= top;
        den *= bottom;
    }
    if den.is_zero() {
        return Err(Error::Pole);
    }
    Ok(num / den)
}

/// ζ(γ) for uniform fugacity as `y^exponent · ratio(y)` with `ratio(0) ≠ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivitySeries {
    pub exponent: i64,
    /// Coefficients of `ratio(y)`, truncated.
    pub ratio: Vec<BigRational>,
}

impl ActivitySeries {
    /// `[y^k] ζ`, or `None` beyond the truncation.
    pub fn coefficient(&self, k: i64) -> Option<BigRational> {
        let j = k - self.exponent;
        if j < 0 {
            return Some(BigRational::zero());
        }
        self.ratio.get(j as usize).cloned()
    }

    /// Dense coefficients of powers `0..=order` (needs `exponent ≥ 0`).
    pub fn dense(&self, order: usize) -> Vec<BigRational> {
        (0..=order as i64).map(|k| self.coefficient(k).unwrap_or_else(BigRational::zero)).collect()
    }
}

fn series_mul(a: &[BigRational], b: &[BigRational], terms: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); terms];
    for (i, x) in a.iter().enumerate().take(terms) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(terms - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_div(a: &[BigRational], b: &[BigRational], terms: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(terms);
    let inv = b[0].recip();
    for k in 0..terms {
        let mut acc = a.get(k).cloned().unwrap_or_else(BigRational::zero);
        for j in 1..=k.min(b.len() - 1) {
            acc -= &b[j] * &out[k - j];
        }
        out.push(acc * &inv);
    }
    out
}

fn defect_series(p: &PartitionPolynomial) -> Vec<BigRational> {
    p.coefficients()
        .iter()
        .rev()
        .map(|c| BigRational::from_integer(BigInt::from(c.clone())))
        .collect()
}

/// ζ(γ) as a y-series with `terms` coefficients after the leading power.
pub fn activity_series(
    model: &ModelSpec,
    family: &CoveringFamily,
    gfc: &Gfc,
    terms: usize,
    cache: &HoleCache,
    budget: &Budget,
) -> Result<ActivitySeries> {
    let terms = terms.max(1);
    let mut exponent = gfc.deficit(family);
    let mut ratio = vec![BigRational::one()];
    for h in gfc.holes.iter().filter(|h| h.phase != gfc.phase) {
        let top = cache.polynomial(model, family, &h.sites, h.phase, budget)?;
        let bottom = cache.polynomial(model, family, &h.sites, gfc.phase, budget)?;
        if bottom.total().is_zero() {
            return Err(Error::Pole);
        }
        exponent -= top.n_max() as i64 - bottom.n_max() as i64;
        let q = series_div(&defect_series(&top), &defect_series(&bottom), terms);
        ratio = series_mul(&ratio, &q, terms);
    }
    ratio.resize(terms, BigRational::zero());
    Ok(ActivitySeries { exponent, ratio })
}

// ---------------------------------------------------------------------------
// Window enumeration and the polymer identity

/// GFcs with external label ν arising from the configurations of a window.
#[derive(Clone, Debug)]
pub struct GfcCatalog {
    pub phase: usize,
    /// Listed GFcs (support size within the cutoff), sorted.
    pub gfcs: Vec<Gfc>,
    pub configurations: u64,
    /// Largest support among all extracted GFcs with label ν.
    pub largest_support: usize,
    pub cutoff: Option<usize>,
    /// Indices of listed GFcs whose realizer does not extract back to them.
    pub unrealizable: Vec<usize>,
}

impl GfcCatalog {
    /// Whether no extracted GFc was dropped by the cutoff.
    pub fn complete(&self) -> bool {
        self.cutoff.is_none_or(|c| self.largest_support <= c)
    }
}

/// Extracts the GFcs of every configuration in Ω_ν of the window and checks
/// that each listed one round-trips through its realizer.
pub fn enumerate_gfcs(
    model: &ModelSpec,
    family: &CoveringFamily,
    window: &Window,
    cutoff: Option<usize>,
    budget: &Budget,
) -> Result<GfcCatalog> {
    let phase = window_phase(window)?;
    let region = Region::Window(window.clone());
    let problem = Problem::build(model, &region, &[])?;
    let cands = problem.candidates().to_vec();
    let mut found: BTreeSet<Gfc> = BTreeSet::new();
    let mut configurations = 0u64;
    let mut failure: Option<Error> = None;
    dfs_visit(&problem, &mut |sel| {
        if failure.is_some() {
            return;
        }
        configurations += 1;
        if configurations > budget.max_states {
            failure = Some(Error::Budget {
                what: "window configurations".into(),
                limit: budget.max_states,
            });
            return;
        }
        let xs: Vec<Site> = sel.iter().map(|&i| cands[i]).collect();
        match extract_unchecked(model, family, window, phase, &xs) {
            Ok(gs) => found.extend(gs.into_iter().filter(|g| g.phase == phase)),
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let largest_support = found.iter().map(Gfc::size).max().unwrap_or(0);
    let gfcs: Vec<Gfc> = found.into_iter().filter(|g| cutoff.is_none_or(|c| g.size() <= c)).collect();
    let mut unrealizable = Vec::new();
    for (i, g) in gfcs.iter().enumerate() {
        let xs = realize(model, family, window, g);
        let ok = in_boundary_ensemble(model, window, &xs)?
            && extract_unchecked(model, family, window, phase, &xs)? == vec![g.clone()];
        if !ok {
            unrealizable.push(i);
        }
    }
    Ok(GfcCatalog {
        phase,
        gfcs,
        configurations,
        largest_support,
        cutoff,
        unrealizable,
    })
}

/// Pairwise incompatibility lists.
fn conflict_graph(gfcs: &[Gfc], lattice: LatticeKind) -> Vec<Vec<usize>> {
    let n = gfcs.len();
    let reach: Vec<HashSet<Site>> = gfcs
        .iter()
        .map(|g| g.support.iter().flat_map(|&s| std::iter::once(s).chain(lattice.neighbors(s))).collect())
        .collect();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if gfcs[j].support.iter().any(|s| reach[i].contains(s)) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Σ over independent sets of the conflict graph of Π weights.
fn independent_set_sum(weights: &[BigRational], adj: &[Vec<usize>]) -> BigRational {
    let n = weights.len();
    let words = n.div_ceil(64).max(1);
    let nbr: Vec<Vec<u64>> = (0..n)
        .map(|v| {
            let mut m = vec![0u64; words];
            m[v / 64] |= 1 << (v % 64);
            for &u in &adj[v] {
                m[u / 64] |= 1 << (u % 64);
            }
            m
        })
        .collect();
    fn go(
        set: Vec<u64>,
        weights: &[BigRational],
        adj: &[Vec<usize>],
        nbr: &[Vec<u64>],
        memo: &mut HashMap<Vec<u64>, BigRational>,
    ) -> BigRational {
        let Some(v) = set.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
        else {
            return BigRational::one();
        };
        if let Some(x) = memo.get(&set) {
            return x.clone();
        }
        // Split off the component of `v`.
        let has = |s: &[u64], u: usize| s[u / 64] >> (u % 64) & 1 == 1;
        let mut comp = vec![0u64; set.len()];
        let mut stack = vec![v];
        comp[v / 64] |= 1 << (v % 64);
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if has(&set, w) && !has(&comp, w) {
                    comp[w / 64] |= 1 << (w % 64);
                    stack.push(w);
                }
            }
        }
        let others: Vec<u64> = set.iter().zip(&comp).map(|(a, b)| a & !b).collect();
        let value = if others.iter().any(|&w| w != 0) {
            go(comp, weights, adj, nbr, memo) * go(others, weights, adj, nbr, memo)
        } else {
            let mut without = set.clone();
            without[v / 64] &= !(1 << (v % 64));
            let outside: Vec<u64> = set.iter().zip(&nbr[v]).map(|(a, b)| a & !b).collect();
            go(without, weights, adj, nbr, memo) + &weights[v] * go(outside, weights, adj, nbr, memo)
        };
        memo.insert(set, value.clone());
        value
    }
    let mut full = vec![0u64; words];
    for v in 0..n {
        full[v / 64] |= 1 << (v % 64);
    }
    go(full, weights, adj, &nbr, &mut HashMap::new())
}

/// Both sides of the GFc expansion of a window partition function.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub region: String,
    pub phase: usize,
    pub z: String,
    /// Ξ^{(ν)}(z) / z_ν(Λ).
    pub lhs: String,
    /// Σ over compatible families of Π ζ.
    pub rhs: String,
    pub exact_match: bool,
    pub gfcs: usize,
    pub configurations: u64,
}

/// Compares the window partition function with the GFc polymer sum.
pub fn verify_gfc_identity(
    model: &ModelSpec,
    family: &CoveringFamily,
    window: &Window,
    catalog: &GfcCatalog,
    fug: &FugacityMap,
    cache: &HoleCache,
    budget: &Budget,
) -> Result<IdentityCheck> {
    if !catalog.complete() {
        return Err(Error::IncompleteEnumeration(format!(
            "a GFc with support {} exceeds the cutoff {:?}",
            catalog.largest_support, catalog.cutoff
        )));
    }
    let region = Region::Window(window.clone());
    let sub = family.get(catalog.phase);
    let z_nu: BigRational = window
        .sites()
        .iter()
        .filter(|&&a| sub.contains(a))
        .map(|&a| fug.at(a).clone())
        .product();
    if z_nu.is_zero() {
        return Err(Error::Pole);
    }
    let lhs = partition_function_marked(model, &region, fug, &[], budget)? / z_nu;
    let weights: Vec<BigRational> = catalog
        .gfcs
        .par_iter()
        .map(|g| gfc_activity(model, family, g, fug, cache, budget))
        .collect::<Result<_>>()?;
    let rhs = independent_set_sum(&weights, &conflict_graph(&catalog.gfcs, model.lattice()));
    Ok(IdentityCheck {
        region: region.describe(),
        phase: catalog.phase + 1,
        z: rational_string(&fug.uniform),
        lhs: rational_string(&lhs),
        rhs: rational_string(&rhs),
        exact_match: lhs == rhs,
        gfcs: catalog.gfcs.len(),
        configurations: catalog.configurations,
    })
}

// ---------------------------------------------------------------------------
// Ursell functions

fn expand_vertices(multiplicities: &[usize], incompatible: &dyn Fn(usize, usize) -> bool) -> Result<(usize, Vec<u32>, BigInt)> {
    let labels: Vec<usize> = multiplicities.iter().enumerate().flat_map(|(i, &m)| std::iter::repeat_n(i, m)).collect();
    let n = labels.len();
    if n == 0 {
        return invalid("Ursell function of an empty multiset");
    }
    let mut adj = vec![0u32; n];
    for a in 0..n {
        for b in 0..n {
            if a != b && (labels[a] == labels[b] || incompatible(labels[a], labels[b])) {
                adj[a] |= 1 << b;
            }
        }
    }
    let mut norm = BigInt::one();
    for &m in multiplicities {
        for k in 2..=m {
            norm *= k;
        }
    }
    Ok((n, adj, norm))
}

/// Φ^T of a multiset given by multiplicities and an incompatibility
/// relation between distinct elements (copies of one element are always
/// incompatible), by the connected-subset recursion.
pub fn ursell(multiplicities: &[usize], incompatible: &dyn Fn(usize, usize) -> bool) -> Result<BigRational> {
    let total: usize = multiplicities.iter().sum();
    if total > MAX_URSELL_VERTICES {
        return Err(Error::Budget {
            what: "Ursell function vertices".into(),
            limit: MAX_URSELL_VERTICES as u64,
        });
    }
    let (n, adj, norm) = expand_vertices(multiplicities, incompatible)?;
    let full = (1u32 << n) - 1;
    // independent[S]: no incompatible pair inside S.
    let mut independent = vec![false; 1 << n];
    independent[0] = true;
    for s in 1..=full {
        let v = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        independent[s as usize] = independent[rest as usize] && adj[v] & rest == 0;
    }
    let mut connected = vec![BigInt::zero(); 1 << n];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let mut value = BigInt::from(independent[s as usize] as i32);
        let others = s & !low;
        let mut sub = others;
        loop {
            // P = low ∪ sub, a proper subset of S.
            let p = low | sub;
            if p != s && independent[(s & !p) as usize] {
                value -= &connected[p as usize];
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        connected[s as usize] = value;
    }
    Ok(BigRational::new(connected[full as usize].clone(), norm))
}

/// Φ^T by summing Π(Φ − 1) over all connected graphs (oracle).
pub fn ursell_brute_force(multiplicities: &[usize], incompatible: &dyn Fn(usize, usize) -> bool) -> Result<BigRational> {
    let total: usize = multiplicities.iter().sum();
    if total > MAX_BRUTE_FORCE_VERTICES {
        return Err(Error::Budget {
            what: "connected-graph sum vertices".into(),
            limit: MAX_BRUTE_FORCE_VERTICES as u64,
        });
    }
    let (n, adj, norm) = expand_vertices(multiplicities, incompatible)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut sum = BigInt::zero();
    for mask in 0u64..(1u64 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
        if edges.iter().any(|&(a, b)| adj[a] >> b & 1 == 0) {
            continue;
        }
        let mut reach = 1u32;
        loop {
            let mut next = reach;
            for &(a, b) in &edges {
                if reach >> a & 1 == 1 || reach >> b & 1 == 1 {
                    next |= 1 << a | 1 << b;
                }
            }
            if next == reach {
                break;
            }
            reach = next;
        }
        if reach == (1u32 << n) - 1 {
            sum += if edges.len().is_multiple_of(2) { 1 } else { -1 };
        }
    }
    Ok(BigRational::new(sum, norm))
}

/// Φ^T of a multiset of GFcs.
pub fn gfc_ursell(gfcs: &[Gfc], multiplicities: &[usize], lattice: LatticeKind) -> Result<BigRational> {
    if gfcs.len() != multiplicities.len() {
        return invalid("one multiplicity per GFc expected");
    }
    ursell(multiplicities, &|i, j| !gfcs[i].compatible(&gfcs[j], lattice))
}

// ---------------------------------------------------------------------------
// Cluster sums

/// Connected vertex subsets of size at most `max` (each listed once).
fn connected_subsets(adj: &[Vec<usize>], max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut level: BTreeSet<Vec<usize>> = (0..adj.len()).map(|v| vec![v]).collect();
    for _ in 0..max {
        let mut next = BTreeSet::new();
        for set in &level {
            for &v in set {
                for &w in &adj[v] {
                    if !set.contains(&w) {
                        let mut s = set.clone();
                        s.push(w);
                        s.sort_unstable();
                        next.insert(s);
                    }
                }
            }
        }
        out.extend(std::mem::take(&mut level));
        level = next;
        if out.last().is_some_and(|s| s.len() >= max) {
            break;
        }
    }
    out.retain(|s| s.len() <= max);
    out
}

/// Multiplicity vectors `m ≥ 1` with `Σ m_i · cost_i ≤ limit`.
fn multiplicities(costs: &[usize], limit: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(costs: &[usize], left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == costs.len() {
            out.push(cur.clone());
            return;
        }
        let c = costs[cur.len()].max(1);
        let rest: usize = costs[cur.len() + 1..].iter().map(|&c| c.max(1)).sum();
        let mut m = 1;
        while m * c + rest <= left {
            cur.push(m);
            rec(costs, left - m * c, cur, out);
            cur.pop();
            m += 1;
        }
    }
    rec(costs, limit, &mut Vec::new(), &mut out);
    out
}

/// One truncation order of a window cluster sum.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterOrder {
    pub max_cluster: usize,
    pub value: String,
    pub approx: f64,
    pub error: f64,
}

/// Truncated cluster expansion of `log(Ξ^{(ν)}/z_ν)` on a window.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterLog {
    pub region: String,
    pub z: String,
    pub exact: f64,
    pub orders: Vec<ClusterOrder>,
    /// Whether some order increased the error over the previous one.
    pub error_increased: bool,
    pub gfcs: usize,
}

fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 900;
        (n >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// `ln |x|` without overflow.
pub fn ln_abs(x: &BigRational) -> f64 {
    ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude())
}

/// Cluster sums over multisets of total size `1..=max_cluster`.
pub fn truncated_cluster_log(
    model: &ModelSpec,
    family: &CoveringFamily,
    window: &Window,
    z: &BigRational,
    max_cluster: usize,
    budget: &Budget,
) -> Result<ClusterLog> {
    if max_cluster > MAX_URSELL_VERTICES {
        return Err(Error::Budget {
            what: "cluster size".into(),
            limit: MAX_URSELL_VERTICES as u64,
        });
    }
    let catalog = enumerate_gfcs(model, family, window, None, budget)?;
    let fug = FugacityMap::uniform(z.clone());
    let cache = HoleCache::new();
    let check = verify_gfc_identity(model, family, window, &catalog, &fug, &cache, budget)?;
    let lhs = crate::ratio::parse_rational(&check.lhs)?;
    let exact = ln_abs(&lhs);
    let zeta: Vec<BigRational> = catalog
        .gfcs
        .iter()
        .map(|g| gfc_activity(model, family, g, &fug, &cache, budget))
        .collect::<Result<_>>()?;
    let adj = conflict_graph(&catalog.gfcs, model.lattice());
    let adj_set: Vec<HashSet<usize>> = adj.iter().map(|a| a.iter().copied().collect()).collect();
    let mut by_size = vec![BigRational::zero(); max_cluster + 1];
    for set in connected_subsets(&adj, max_cluster) {
        for m in multiplicities(&vec![1; set.len()], max_cluster) {
            let phi = ursell(&m, &|i, j| adj_set[set[i]].contains(&set[j]))?;
            let mut term = phi;
            for (k, &v) in set.iter().enumerate() {
                for _ in 0..m[k] {
                    term *= &zeta[v];
                }
            }
            by_size[m.iter().sum::<usize>()] += term;
        }
    }
    let mut orders = Vec::new();
    let mut acc = BigRational::zero();
    for (n, part) in by_size.iter().enumerate() {
        acc += part;
        let approx = acc.to_f64().unwrap_or(f64::NAN);
        orders.push(ClusterOrder {
            max_cluster: n,
            value: rational_string(&acc),
            approx,
            error: (approx - exact).abs(),
        });
    }
    let error_increased = orders.windows(2).any(|w| w[1].error > w[0].error);
    Ok(ClusterLog {
        region: Region::Window(window.clone()).describe(),
        z: rational_string(z),
        exact,
        orders,
        error_increased,
        gfcs: catalog.gfcs.len(),
    })
}

// ---------------------------------------------------------------------------
// Bulk enumeration

const UNDECIDED: u8 = 0;
const COVERED: u8 = 1;
const EMPTY: u8 = 2;
const NO_OWNER: u32 = u32::MAX;

enum Step {
    Particle(usize, bool),
    Empty(usize, Vec<u32>),
}

/// Exact-cover search of a ν-framed box in which empty sites are allowed
/// only near a pinned first empty site.
struct BulkSearch<'a> {
    model: &'a ModelSpec,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    /// Cells of the particle whose smallest cell is the given site.
    cells: Vec<Option<Vec<usize>>>,
    conflicts: Vec<Vec<usize>>,
    nbrs: Vec<Vec<usize>>,
    first_ok: Vec<bool>,
    fmin: Site,
    spread: u64,
    cap: usize,
    state: Vec<u8>,
    owner: Vec<u32>,
    placed: Vec<bool>,
    halo: Vec<bool>,
    empties: Vec<usize>,
    u_size: usize,
}

impl<'a> BulkSearch<'a> {
    fn new(model: &'a ModelSpec, family: &CoveringFamily, phase: usize, domain: &[Site], cap: usize) -> BulkSearch<'a> {
        let dim = model.dim();
        let lat = model.lattice();
        let diam = model.footprint_diameter() as i32;
        let reach = model
            .exclusion()
            .iter()
            .map(|e| e.0[..dim].iter().map(|c| c.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        let frame = reach + diam + 1;
        let spread = cap.saturating_sub(1) as i32;
        let half = spread + diam + frame + 2;
        let (dlo, dhi) = bounding_box(domain.iter().copied());
        let mut lo = Site::ORIGIN;
        let mut hi = Site::ORIGIN;
        for i in 0..dim {
            lo.0[i] = dlo.0[i] - half;
            hi.0[i] = dhi.0[i] + half;
        }
        let sites = box_sites(lo, hi, dim);
        let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let fmin = model.footprint()[0];
        let cells: Vec<Option<Vec<usize>>> = sites
            .iter()
            .map(|&s| {
                let a = s - fmin;
                model.footprint_at(a).iter().map(|c| index.get(c).copied()).collect::<Option<Vec<_>>>()
            })
            .collect();
        let conflicts: Vec<Vec<usize>> = sites
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                if cells[i].is_none() {
                    return Vec::new();
                }
                model
                    .exclusion()
                    .iter()
                    .filter(|e| !e.is_origin())
                    .filter_map(|&e| index.get(&(s + e)).copied())
                    .filter(|&j| cells[j].is_some())
                    .collect()
            })
            .collect();
        let nbrs: Vec<Vec<usize>> = sites
            .iter()
            .map(|&s| lat.neighbors(s).filter_map(|n| index.get(&n).copied()).collect())
            .collect();
        let domain_set: HashSet<Site> = domain.iter().copied().collect();
        let first_ok = sites.iter().map(|s| domain_set.contains(s)).collect();
        let n = sites.len();
        let mut search = BulkSearch {
            model,
            sites,
            index,
            cells,
            conflicts,
            nbrs,
            first_ok,
            fmin,
            spread: spread as u64,
            cap,
            state: vec![UNDECIDED; n],
            owner: vec![NO_OWNER; n],
            placed: vec![false; n],
            halo: vec![false; n],
            empties: Vec::new(),
            u_size: 0,
        };
        // Frame: ν particles near the box boundary; sites they cannot reach
        // are covered by particles outside the box.
        let sub = family.get(phase);
        let near_edge = |s: &Site| (0..dim).any(|i| s.0[i] - lo.0[i] < frame || hi.0[i] - s.0[i] < frame);
        for i in 0..n {
            let s = search.sites[i];
            if !near_edge(&s) || search.state[i] != UNDECIDED {
                continue;
            }
            let anchor = model.footprint().iter().map(|&f| s - f).find(|&a| sub.contains(a)).expect("ν covers every site");
            let min_cell = anchor + fmin;
            match (search.index.get(&min_cell).copied(), search.cells.get(search.index.get(&min_cell).copied().unwrap_or(usize::MAX))) {
                (Some(m), Some(Some(cells))) => {
                    for &c in cells.clone().iter() {
                        search.state[c] = COVERED;
                        search.owner[c] = m as u32;
                    }
                    search.placed[m] = true;
                }
                _ => search.state[i] = COVERED,
            }
        }
        search
    }

    fn anchor(&self, min_cell: u32) -> Site {
        self.sites[min_cell as usize] - self.fmin
    }

    fn apply(&mut self, i: usize, option: u8) -> Option<Step> {
        let f = self.model.volume();
        if option == 0 {
            let cells = self.cells[i].as_ref()?;
            if cells.iter().any(|&c| self.state[c] != UNDECIDED) || self.conflicts[i].iter().any(|&j| self.placed[j]) {
                return None;
            }
            let touches = cells.iter().any(|&c| self.nbrs[c].iter().any(|&m| self.state[m] == EMPTY));
            if touches && self.u_size + f > self.cap {
                return None;
            }
            for &c in cells {
                self.state[c] = COVERED;
                self.owner[c] = i as u32;
            }
            self.placed[i] = true;
            if touches {
                self.halo[i] = true;
                self.u_size += f;
            }
            Some(Step::Particle(i, touches))
        } else {
            match self.empties.first() {
                None if !self.first_ok[i] => return None,
                Some(&e0) if self.model.lattice().distance(self.sites[i], self.sites[e0]) > self.spread => return None,
                _ => {}
            }
            let mut added = Vec::new();
            let mut size = self.u_size + 1;
            for &m in &self.nbrs[i] {
                if self.state[m] == COVERED {
                    let o = self.owner[m];
                    if o != NO_OWNER && !self.halo[o as usize] && !added.contains(&o) {
                        added.push(o);
                        size += f;
                    }
                }
            }
            if size > self.cap {
                return None;
            }
            for &o in &added {
                self.halo[o as usize] = true;
            }
            self.state[i] = EMPTY;
            self.empties.push(i);
            self.u_size = size;
            Some(Step::Empty(i, added))
        }
    }

    fn undo(&mut self, step: &Step) {
        let f = self.model.volume();
        match step {
            Step::Particle(i, touched) => {
                for &c in self.cells[*i].as_ref().expect("placed particle") {
                    self.state[c] = UNDECIDED;
                    self.owner[c] = NO_OWNER;
                }
                self.placed[*i] = false;
                if *touched {
                    self.halo[*i] = false;
                    self.u_size -= f;
                }
            }
            Step::Empty(i, added) => {
                self.state[*i] = UNDECIDED;
                self.empties.pop();
                self.u_size -= 1 + f * added.len();
                for &o in added {
                    self.halo[o as usize] = false;
                }
            }
        }
    }

    fn run(&mut self, visit: &mut dyn FnMut(&BulkSearch) -> Result<()>) -> Result<()> {
        let n = self.sites.len();
        let last_first = self.first_ok.iter().rposition(|&b| b).unwrap_or(0);
        let mut stack: Vec<(usize, u8, Step)> = Vec::new();
        let mut pos = 0usize;
        let mut start = 0u8;
        loop {
            while pos < n && self.state[pos] != UNDECIDED {
                pos += 1;
            }
            let mut descended = false;
            if pos == n {
                visit(self)?;
            } else if self.empties.is_empty() && pos > last_first {
                // No empty site can appear any more: configurations without
                // defects carry no GFc.
            } else {
                for option in start..2 {
                    if let Some(step) = self.apply(pos, option) {
                        stack.push((pos, option, step));
                        descended = true;
                        break;
                    }
                }
            }
            start = 0;
            if descended {
                continue;
            }
            loop {
                let Some((p, option, step)) = stack.pop() else {
                    return Ok(());
                };
                self.undo(&step);
                if option == 0 {
                    pos = p;
                    start = 1;
                    break;
                }
            }
        }
    }
}

/// Translation classes of single GFcs with external label ν on the
/// infinite lattice, one representative per class of the period lattice of
/// ℒ_ν: the smallest empty site of each representative lies in `domain`.
#[derive(Clone, Debug)]
pub struct BulkClasses {
    pub phase: usize,
    pub period_basis: Vec<Site>,
    pub domain: Vec<Site>,
    pub max_support: usize,
    pub classes: Vec<Gfc>,
    pub leaves: u64,
}

/// Coset representatives of `Z^d` modulo the period lattice of ℒ_ν.
pub fn period_domain(family: &CoveringFamily, phase: usize) -> Vec<Site> {
    let sub = family.get(phase);
    let dim = sub.dim();
    let det = sub.determinant() as i32;
    let mut hi = Site::ORIGIN;
    for i in 0..dim {
        hi.0[i] = det - 1;
    }
    let reps: BTreeSet<Site> = box_sites(Site::ORIGIN, hi, dim).into_iter().map(|s| sub.reduce(s)).collect();
    reps.into_iter().collect()
}

/// All translation classes of GFcs with `|Γ| ≤ max_support`.
pub fn bulk_gfc_classes(
    model: &ModelSpec,
    family: &CoveringFamily,
    phase: usize,
    max_support: usize,
    budget: &Budget,
) -> Result<BulkClasses> {
    if phase >= family.len() {
        return invalid(format!("phase {} out of range (τ = {})", phase + 1, family.len()));
    }
    let domain = period_domain(family, phase);
    let mut search = BulkSearch::new(model, family, phase, &domain, max_support);
    let sub = family.get(phase).clone();
    let mut classes: BTreeSet<Gfc> = BTreeSet::new();
    let mut leaves = 0u64;
    search.run(&mut |s| {
        if s.empties.is_empty() {
            return Ok(());
        }
        leaves += 1;
        if leaves > budget.max_states {
            return Err(Error::Budget {
                what: "bulk search leaves".into(),
                limit: budget.max_states,
            });
        }
        let cover = |x: Site| -> Option<(Site, bool)> {
            match s.index.get(&x) {
                Some(&i) => match s.state[i] {
                    EMPTY => None,
                    _ if s.owner[i] != NO_OWNER => Some((s.anchor(s.owner[i]), true)),
                    _ => model.footprint().iter().map(|&f| x - f).find(|&a| sub.contains(a)).map(|a| (a, false)),
                },
                None => model.footprint().iter().map(|&f| x - f).find(|&a| sub.contains(a)).map(|a| (a, false)),
            }
        };
        let scene = Scene {
            model,
            family,
            phase,
            cover: &cover,
        };
        let empties: BTreeSet<Site> = s.empties.iter().map(|&i| s.sites[i]).collect();
        for g in scene.gfcs(&empties, (s.sites[0], s.sites[s.sites.len() - 1]), true)? {
            if g.size() <= max_support {
                classes.insert(g);
            }
        }
        Ok(())
    })?;
    Ok(BulkClasses {
        phase,
        period_basis: sub.basis().to_vec(),
        domain,
        max_support,
        classes: classes.into_iter().collect(),
        leaves,
    })
}

/// Periods `t` for which `b + t` is incompatible with `a`.
fn incompatible_shifts(a: &Gfc, b: &Gfc, lattice: LatticeKind, family: &CoveringFamily, phase: usize) -> HashSet<Site> {
    let sub = family.get(phase);
    let reach: BTreeSet<Site> = a.support.iter().flat_map(|&s| std::iter::once(s).chain(lattice.neighbors(s))).collect();
    let mut out = HashSet::new();
    for &r in &reach {
        for &s in &b.support {
            let t = r - s;
            if sub.is_period(t) {
                out.insert(t);
            }
        }
    }
    out
}

/// Per-site bulk coefficients from pinned clusters.
#[derive(Clone, Debug, Serialize)]
pub struct BulkSeries {
    pub model: String,
    pub phase: usize,
    /// `c_1..c_K` as `"p/q"`.
    pub coefficients: Vec<String>,
    #[serde(skip)]
    pub values: Vec<BigRational>,
    pub max_support: usize,
    pub classes: usize,
    pub clusters: usize,
}

/// `c_k` for `k = 1..=order` from the bulk cluster expansion.
pub fn bulk_c_k(model: &ModelSpec, family: &CoveringFamily, phase: usize, order: usize, budget: &Budget) -> Result<BulkSeries> {
    if order == 0 {
        return invalid("order must be positive");
    }
    let max_support = (model.neighbor_volume_bound() + 1) * order * model.volume();
    let bulk = bulk_gfc_classes(model, family, phase, max_support, budget)?;
    let cache = HoleCache::new();
    let lat = model.lattice();
    let mut classes = Vec::new();
    let mut series = Vec::new();
    for g in &bulk.classes {
        let s = activity_series(model, family, g, order, &cache, budget)?;
        if s.exponent < 1 {
            return Err(Error::PropertyViolation(format!(
                "GFc with non-positive activity exponent {} (support {:?})",
                s.exponent,
                g.support.iter().map(|x| x.to_vec(model.dim())).collect::<Vec<_>>()
            )));
        }
        if s.exponent as usize <= order {
            classes.push(g.clone());
            series.push(s);
        }
    }
    let cost: Vec<usize> = series.iter().map(|s| s.exponent as usize).collect();
    let dense: Vec<Vec<BigRational>> = series.iter().map(|s| s.dense(order)).collect();
    let n = classes.len();
    let shifts: Vec<Vec<HashSet<Site>>> = (0..n)
        .map(|a| (0..n).map(|b| incompatible_shifts(&classes[a], &classes[b], lat, family, phase)).collect())
        .collect();

    let per_rep: Vec<(Vec<BigRational>, usize)> = (0..n)
        .into_par_iter()
        .map(|r| -> Result<(Vec<BigRational>, usize)> {
            let mut total = vec![BigRational::zero(); order + 1];
            let mut count = 0usize;
            let mut seen: HashSet<Vec<(usize, Site)>> = HashSet::new();
            let mut level = vec![vec![(r, Site::ORIGIN)]];
            seen.insert(level[0].clone());
            while !level.is_empty() {
                let mut next = Vec::new();
                for set in &level {
                    count += 1;
                    let used: usize = set.iter().map(|&(c, _)| cost[c]).sum();
                    let costs: Vec<usize> = set.iter().map(|&(c, _)| cost[c]).collect();
                    let pin = set.iter().position(|&e| e == (r, Site::ORIGIN)).expect("pinned element");
                    let incompatible = |i: usize, j: usize| {
                        let (ci, ti) = set[i];
                        let (cj, tj) = set[j];
                        shifts[ci][cj].contains(&(tj - ti))
                    };
                    for m in multiplicities(&costs, order) {
                        let phi = ursell(&m, &incompatible)?;
                        if phi.is_zero() {
                            continue;
                        }
                        let size: usize = m.iter().sum();
                        let weight = phi * BigRational::new(BigInt::from(m[pin]), BigInt::from(size));
                        let mut prod = vec![BigRational::zero(); order + 1];
                        prod[0] = BigRational::one();
                        for (k, &(c, _)) in set.iter().enumerate() {
                            for _ in 0..m[k] {
                                prod = series_mul(&prod, &dense[c], order + 1);
                            }
                        }
                        for (t, p) in total.iter_mut().zip(prod) {
                            *t += &weight * p;
                        }
                    }
                    for &(c, t) in set {
                        for c2 in 0..n {
                            if used + cost[c2] > order {
                                continue;
                            }
                            for &dt in &shifts[c][c2] {
                                let e = (c2, t + dt);
                                if set.contains(&e) {
                                    continue;
                                }
                                let mut grown = set.clone();
                                grown.push(e);
                                grown.sort();
                                if seen.insert(grown.clone()) {
                                    next.push(grown);
                                }
                            }
                        }
                    }
                }
                level = next;
            }
            Ok((total, count))
        })
        .collect::<Result<_>>()?;

    let det = BigRational::from_integer(BigInt::from(bulk.domain.len()));
    let mut values = vec![BigRational::zero(); order];
    let mut clusters = 0;
    for (total, count) in per_rep {
        clusters += count;
        for k in 1..=order {
            values[k - 1] += &total[k];
        }
    }
    for v in &mut values {
        *v /= &det;
    }
    Ok(BulkSeries {
        model: model.name().to_string(),
        phase: phase + 1,
        coefficients: values.iter().map(rational_string).collect(),
        values,
        max_support,
        classes: classes.len(),
        clusters,
    })
}

// ---------------------------------------------------------------------------
// Convergence certificate

/// Small parameters of the convergence certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BzParams {
    pub theta: f64,
    pub xi: f64,
    pub varsigma: f64,
}

impl Default for BzParams {
    fn default() -> Self {
        BzParams {
            theta: 0.25,
            xi: 0.25,
            varsigma: 1.0,
        }
    }
}

impl BzParams {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.theta) || !open(self.xi) || self.theta + self.xi >= 1.0 {
            return invalid("certificate: need θ, ξ in (0, 1) with θ + ξ < 1");
        }
        if self.varsigma.is_nan() || self.varsigma < 1.0 {
            return invalid("certificate: need ς ≥ 1");
        }
        Ok(())
    }

    /// `ln α = ln ς + χ − ρ_m ln z / (𝒩 + 1)`.
    pub fn log_alpha(&self, coordination: usize, density: f64, neighbor_volume: usize, ln_z: f64) -> f64 {
        self.varsigma.ln() + coordination as f64 - density * ln_z / (neighbor_volume as f64 + 1.0)
    }

    /// `ln δ = ln ς + (1 − θ − ξ) ln α`.
    pub fn log_delta(&self, log_alpha: f64) -> f64 {
        self.varsigma.ln() + (1.0 - self.theta - self.xi) * log_alpha
    }
}

/// Certificate outcome for one class of GFcs.
#[derive(Clone, Debug, Serialize)]
pub struct BzClassReport {
    pub support: usize,
    pub deficit: i64,
    pub log_activity: f64,
    /// `ln δ − (ln|ζ| + a + d)`; non-negative when the first condition holds.
    pub activity_margin: f64,
    pub neighbor_sum: f64,
    pub tail: f64,
    pub neighbor_limit: f64,
    pub passed: bool,
    pub witness: Vec<Vec<i32>>,
}

/// Report of the cutoff-bounded convergence certificate.
#[derive(Clone, Debug, Serialize)]
pub struct BzReport {
    pub model: String,
    pub phase: usize,
    pub z: String,
    pub params: BzParams,
    pub neighbor_volume: usize,
    pub coordination: usize,
    pub density: f64,
    pub log_alpha: f64,
    pub alpha: f64,
    pub delta: f64,
    pub cutoff: usize,
    pub classes: Vec<BzClassReport>,
    pub passed: bool,
    pub reason: String,
    pub caveat: String,
}

/// Checks both convergence conditions for every GFc class with support at
/// most `cutoff`, bounding larger supports by a geometric tail.
pub fn bz_certificate(
    model: &ModelSpec,
    family: &CoveringFamily,
    phase: usize,
    z: &BigRational,
    params: BzParams,
    cutoff: usize,
    budget: &Budget,
) -> Result<BzReport> {
    params.validate()?;
    if !z.is_positive() {
        return invalid("certificate: fugacity must be positive");
    }
    let lat = model.lattice();
    let neighbor_volume = model.neighbor_volume_bound();
    let coordination = lat.coordination();
    let density = 1.0 / model.volume() as f64;
    let ln_z = ln_abs(z);
    let log_alpha = params.log_alpha(coordination, density, neighbor_volume, ln_z);
    let log_delta = params.log_delta(log_alpha);
    let mut report = BzReport {
        model: model.name().to_string(),
        phase: phase + 1,
        z: rational_string(z),
        params,
        neighbor_volume,
        coordination,
        density,
        log_alpha,
        alpha: log_alpha.exp(),
        delta: log_delta.exp(),
        cutoff,
        classes: Vec::new(),
        passed: false,
        reason: String::new(),
        caveat: format!("sums truncated at |Γ| ≤ {cutoff}; larger supports bounded by a geometric tail"),
    };
    if log_delta >= 0.0 {
        report.reason = format!("δ = {:.6e} ≥ 1", report.delta);
        return Ok(report);
    }
    let bulk = bulk_gfc_classes(model, family, phase, cutoff, budget)?;
    let fug = FugacityMap::uniform(z.clone());
    let cache = HoleCache::new();
    let weight = |size: usize| -(params.theta + params.xi) * size as f64 * log_alpha;
    let log_terms: Vec<f64> = bulk
        .classes
        .iter()
        .map(|g| Ok(ln_abs(&gfc_activity(model, family, g, &fug, &cache, budget)?)))
        .collect::<Result<_>>()?;
    let delta = report.delta;
    let limit_factor = delta / (1.0 - delta).ln().abs();
    let chi = coordination as f64;
    let beta_ln = (1.0 - params.theta - params.xi) * log_alpha;
    let ratio = chi * chi * beta_ln.exp();
    let mut all = true;
    for (i, g) in bulk.classes.iter().enumerate() {
        let a = -params.theta * g.size() as f64 * log_alpha;
        let margin = log_delta - (log_terms[i] + weight(g.size()));
        let mut sum = 0.0;
        for (j, h) in bulk.classes.iter().enumerate() {
            let count = incompatible_shifts(g, h, lat, family, phase).len() as f64;
            sum += count * (log_terms[j] + weight(h.size())).exp();
        }
        let tail = if ratio < 1.0 {
            params.varsigma * (chi + 1.0) * g.size() as f64 * ratio.powi(cutoff as i32 + 1) / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        let limit = limit_factor * a;
        let passed = margin >= 0.0 && sum + tail <= limit;
        all &= passed;
        report.classes.push(BzClassReport {
            support: g.size(),
            deficit: g.deficit(family),
            log_activity: log_terms[i],
            activity_margin: margin,
            neighbor_sum: sum,
            tail,
            neighbor_limit: limit,
            passed,
            witness: g.support.iter().map(|s| s.to_vec(model.dim())).collect(),
        });
    }
    report.passed = all;
    report.reason = if all {
        format!("both conditions hold for {} classes", report.classes.len())
    } else if ratio >= 1.0 {
        "tail bound diverges (χ²·α^(1−θ−ξ) ≥ 1)".into()
    } else {
        "a class violates a condition (see witnesses)".into()
    };
    Ok(report)
}

/// Classes keyed by support size, for summaries.
pub fn size_histogram(gfcs: &[Gfc]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for g in gfcs {
        *h.entry(g.size()).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverings::perfect_coverings;
    use crate::ratio::{ratio_int, ratio_of};

    fn diamonds() -> (ModelSpec, CoveringFamily) {
        let m = ModelSpec::builtin("hyperdiamond-2d").unwrap();
        let f = perfect_coverings(&m, 4).unwrap();
        (m, f)
    }

    #[test]
    fn ursell_examples() {
        let never = |_: usize, _: usize| false;
        let always = |_: usize, _: usize| true;
        assert_eq!(ursell(&[1], &never).unwrap(), ratio_int(1));
        assert_eq!(ursell(&[1, 1], &never).unwrap(), ratio_int(0));
        assert_eq!(ursell(&[1, 1], &always).unwrap(), ratio_int(-1));
        assert_eq!(ursell(&[2], &never).unwrap(), ratio_of(-1, 2));
        let path = |i: usize, j: usize| i.abs_diff(j) == 1;
        assert_eq!(ursell(&[1, 1, 1], &path).unwrap(), ratio_int(1));
        assert_eq!(ursell_brute_force(&[1, 1, 1], &path).unwrap(), ratio_int(1));
        assert_eq!(ursell(&[1, 1, 1], &always).unwrap(), ratio_int(2));
    }

    #[test]
    fn vacancy_gfc() {
        let (m, f) = diamonds();
        let phase = (0..2).find(|&p| f.get(p).contains(Site::ORIGIN)).unwrap();
        let w = Window::tiled_box(&m, &f, phase, &[12, 12], Some(phase)).unwrap();
        let sub = f.get(phase);
        let hole = Site::xy(6, 6);
        assert!(sub.contains(hole));
        let xs: Vec<Site> = w.sites().iter().copied().filter(|&a| sub.contains(a) && a != hole).collect();
        let gs = extract_gfcs(&m, &f, &w, &xs).unwrap();
        assert_eq!(gs.len(), 1);
        let g = &gs[0];
        assert_eq!(g.size(), 14);
        assert_eq!(g.particles.len(), 6);
        assert_eq!(g.deficit(&f), 1);
        let s = activity_series(&m, &f, g, 3, &HoleCache::new(), &Budget::default()).unwrap();
        assert_eq!(s.exponent, 1);
        assert_eq!(s.ratio[0], ratio_int(1));
        assert!(s.ratio[1..].iter().all(|c| c.is_zero()));
        let back = realize(&m, &f, &w, g);
        assert_eq!(back, xs);
    }

    #[test]
    fn margin_rule() {
        let lat = LatticeKind::Hypercubic { dimension: 2 };
        let g: BTreeSet<Site> = [Site::xy(1, 1)].into_iter().collect();
        assert!(matches!(
            hole_decomposition(lat, &g, Site::xy(0, 0), Site::xy(4, 4)),
            Err(Error::MarginTooSmall)
        ));
        let ring: BTreeSet<Site> = box_sites(Site::xy(2, 2), Site::xy(4, 4), 2)
            .into_iter()
            .filter(|&s| s != Site::xy(3, 3))
            .collect();
        let d = hole_decomposition(lat, &ring, Site::xy(0, 0), Site::xy(6, 6)).unwrap();
        assert_eq!(d.holes.len(), 1);
    }

    #[test]
    fn independent_sets() {
        let w = vec![ratio_int(2), ratio_int(3), ratio_int(5)];
        // Path 0 - 1 - 2: {}, {0}, {1}, {2}, {0,2}.
        let adj = vec![vec![1], vec![0, 2], vec![1]];
        assert_eq!(independent_set_sum(&w, &adj), ratio_int(1 + 2 + 3 + 5 + 10));
    }
}
