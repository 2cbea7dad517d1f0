//! Perfect coverings, sublattice membership, isolating completions and the
//! bounded non-sliding certificate.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{LinearMap, ModelSpec, Site, MAX_DIM};
use crate::region::{bounding_box, box_sites, is_connected, Torus};

/// A periodic anchor set `∪_i (offset_i + T)` where `T` is the integer
/// lattice spanned by `basis` (kept in Hermite normal form).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sublattice {
    dim: usize,
    basis: Vec<Site>,
    offsets: Vec<Site>,
}

impl Sublattice {
    /// `offset + span(periods)`; the periods must have full rank.
    pub fn from_periods(offset: Site, periods: &[Site], dim: usize) -> Result<Sublattice> {
        Sublattice::from_generators(&[offset], periods, dim)
    }

    /// Union of cosets `offsets + span(generators)`.
    pub fn from_generators(offsets: &[Site], generators: &[Site], dim: usize) -> Result<Sublattice> {
        let basis = hermite_basis(generators, dim)
            .ok_or_else(|| Error::Validation("sublattice: period vectors do not have full rank".into()))?;
        let mut sub = Sublattice {
            dim,
            basis,
            offsets: Vec::new(),
        };
        let reps: BTreeSet<Site> = offsets.iter().map(|&o| sub.reduce(o)).collect();
        sub.offsets = reps.into_iter().collect();
        Ok(sub)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Hermite-normal-form basis of the translation group.
    pub fn basis(&self) -> &[Site] {
        &self.basis
    }

    /// Coset representatives, reduced modulo the translation group.
    pub fn offsets(&self) -> &[Site] {
        &self.offsets
    }

    /// Index of the translation group in `Z^d`.
    pub fn determinant(&self) -> i64 {
        (0..self.dim).map(|i| self.basis[i].0[i] as i64).product()
    }

    /// Canonical representative of `x` modulo the translation group.
    pub fn reduce(&self, x: Site) -> Site {
        let mut v = x;
        for (i, b) in self.basis.iter().enumerate() {
            let p = b.0[i];
            let q = v.0[i].div_euclid(p);
            if q != 0 {
                v = v - q * *b;
            }
        }
        v
    }

    /// Whether `x` is an anchor of this periodic set.
    pub fn contains(&self, x: Site) -> bool {
        self.offsets.binary_search(&self.reduce(x)).is_ok()
    }

    /// Whether `x` is a period (a translation mapping the set to itself).
    pub fn is_period(&self, x: Site) -> bool {
        self.reduce(x).is_origin()
    }

    /// Smallest `n > 0` with `n·e_axis` a period.
    pub fn axis_period(&self, axis: usize) -> i64 {
        let mut e = Site::ORIGIN;
        e.0[axis] = 1;
        (1..=self.determinant())
            .find(|&n| self.is_period(n as i32 * e))
            .unwrap_or(self.determinant())
    }

    /// Anchors in the inclusive box `[lo, hi]`.
    pub fn anchors_in_box(&self, lo: Site, hi: Site) -> Vec<Site> {
        box_sites(lo, hi, self.dim).into_iter().filter(|&s| self.contains(s)).collect()
    }

    /// Image under the affine map `x ↦ g x + shift`.
    pub fn image(&self, g: &LinearMap, shift: Site) -> Sublattice {
        let gens: Vec<Site> = self.basis.iter().map(|&b| g.apply(b)).collect();
        let offs: Vec<Site> = self.offsets.iter().map(|&o| g.apply(o) + shift).collect();
        Sublattice::from_generators(&offs, &gens, self.dim).expect("isometries preserve rank")
    }

    pub fn to_json(&self) -> SublatticeJson {
        SublatticeJson {
            basis: self.basis.iter().map(|s| s.to_vec(self.dim)).collect(),
            offsets: self.offsets.iter().map(|s| s.to_vec(self.dim)).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SublatticeJson {
    pub basis: Vec<Vec<i32>>,
    pub offsets: Vec<Vec<i32>>,
}

/// Hermite normal form of the lattice generated by `gens`: `dim` rows,
/// upper triangular with positive pivots and entries above each pivot
/// reduced into `[0, pivot)`. `None` if the rank is deficient.
pub fn hermite_basis(gens: &[Site], dim: usize) -> Option<Vec<Site>> {
    let mut rows: Vec<[i64; MAX_DIM]> = gens
        .iter()
        .map(|g| [g.0[0] as i64, g.0[1] as i64, g.0[2] as i64])
        .filter(|r| r.iter().any(|&c| c != 0))
        .collect();
    let mut out: Vec<[i64; MAX_DIM]> = Vec::new();
    for col in 0..dim {
        // Euclid on column `col` among remaining rows.
        loop {
            let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| rows[i][col].abs()).unwrap();
            let pivot = rows[p];
            for &i in &nz {
                if i != p {
                    let q = rows[i][col].div_euclid(pivot[col]);
                    for c in 0..MAX_DIM {
                        rows[i][c] -= q * pivot[c];
                    }
                }
            }
        }
        let p = (0..rows.len()).find(|&i| rows[i][col] != 0)?;
        let mut pivot = rows.swap_remove(p);
        if pivot[col] < 0 {
            for c in pivot.iter_mut() {
                *c = -*c;
            }
        }
        for prev in out.iter_mut() {
            let q = prev[col].div_euclid(pivot[col]);
            for c in 0..MAX_DIM {
                prev[c] -= q * pivot[c];
            }
        }
        out.push(pivot);
        rows.retain(|r| r.iter().any(|&c| c != 0));
    }
    Some(
        out.into_iter()
            .map(|r| Site([r[0] as i32, r[1] as i32, r[2] as i32]))
            .collect(),
    )
}

/// An isometry `x ↦ g x + shift` mapping one covering onto another, with
/// the induced permutation of covering labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringMap {
    pub from: usize,
    pub to: usize,
    pub linear: LinearMap,
    pub shift: Site,
    pub permutation: Vec<usize>,
}

impl CoveringMap {
    pub fn apply(&self, x: Site) -> Site {
        self.linear.apply(x) + self.shift
    }
}

/// All perfect coverings ℒ_1..ℒ_τ of a model together with the maps F_{μ,ν}.
#[derive(Clone, Debug)]
pub struct CoveringFamily {
    sublattices: Vec<Sublattice>,
    maps: Vec<CoveringMap>,
    period_bound: usize,
}

impl CoveringFamily {
    pub fn len(&self) -> usize {
        self.sublattices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sublattices.is_empty()
    }

    /// τ.
    pub fn tau(&self) -> usize {
        self.sublattices.len()
    }

    pub fn get(&self, mu: usize) -> &Sublattice {
        &self.sublattices[mu]
    }

    pub fn sublattices(&self) -> &[Sublattice] {
        &self.sublattices
    }

    pub fn period_bound(&self) -> usize {
        self.period_bound
    }

    /// F_{μ,ν}.
    pub fn map(&self, from: usize, to: usize) -> &CoveringMap {
        &self.maps[from * self.len() + to]
    }

    pub fn maps(&self) -> &[CoveringMap] {
        &self.maps
    }

    /// Label of the unique covering containing every anchor of `xs`.
    pub fn unique_phase(&self, xs: &[Site]) -> Option<usize> {
        let hits: Vec<usize> = (0..self.len())
            .filter(|&mu| xs.iter().all(|&x| self.sublattices[mu].contains(x)))
            .collect();
        (hits.len() == 1).then(|| hits[0])
    }

    pub fn index_of(&self, s: &Sublattice) -> Option<usize> {
        self.sublattices.iter().position(|t| t == s)
    }

    pub fn to_json(&self, model: &ModelSpec) -> serde_json::Value {
        let dim = model.dim();
        let maps: Vec<serde_json::Value> = self
            .maps
            .iter()
            .map(|m| {
                serde_json::json!({
                    "from": m.from + 1,
                    "to": m.to + 1,
                    "linear": m.linear.0[..dim].iter().map(|r| r[..dim].to_vec()).collect::<Vec<_>>(),
                    "shift": m.shift.to_vec(dim),
                    "permutation": m.permutation.iter().map(|p| p + 1).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "model": model.name(),
            "tau": self.len(),
            "period_bound": self.period_bound,
            "sublattices": self.sublattices.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
            "symmetry_maps": maps,
        })
    }
}

/// All perfect coverings of tori with extents in `[1, period_bound]^d`,
/// lifted to the infinite lattice and deduplicated.
pub fn perfect_coverings(model: &ModelSpec, period_bound: usize) -> Result<CoveringFamily> {
    if period_bound == 0 {
        return invalid("period bound must be positive");
    }
    let dim = model.dim();
    let vol = model.volume();
    let mut tori: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..dim {
        tori = tori
            .into_iter()
            .flat_map(|t| {
                (1..=period_bound as i32).map(move |l| {
                    let mut t = t.clone();
                    t.push(l);
                    t
                })
            })
            .collect();
    }
    tori.retain(|t| t.iter().map(|&l| l as usize).product::<usize>() % vol == 0);
    tori.sort_by_key(|t| (t.iter().product::<i32>(), t.clone()));

    let mut found: BTreeSet<Sublattice> = BTreeSet::new();
    for ext in tori {
        let torus = Torus::new(ext.clone())?;
        let mut violation = None;
        torus_exact_covers(model, &torus, &mut |anchors| {
            let sub = lift(&torus, anchors, dim);
            for axis in 0..dim {
                let p = sub.axis_period(axis);
                if 2 * p > period_bound as i64 {
                    violation = Some((axis, p));
                    return false;
                }
            }
            found.insert(sub);
            true
        });
        if let Some((axis, period)) = violation {
            return Err(Error::UnboundedCoverings {
                bound: period_bound,
                axis,
                period,
            });
        }
    }
    if found.is_empty() {
        return Err(Error::NoCovering { bound: period_bound });
    }
    let mut sublattices: Vec<Sublattice> = found.into_iter().collect();
    sublattices.sort_by(|a, b| (&a.offsets, &a.basis).cmp(&(&b.offsets, &b.basis)));
    let maps = covering_maps(model, &sublattices)?;
    Ok(CoveringFamily {
        sublattices,
        maps,
        period_bound,
    })
}

/// Translation group and cosets of the periodic lift of a torus covering.
fn lift(torus: &Torus, anchors: &[Site], dim: usize) -> Sublattice {
    let mut gens: Vec<Site> = (0..dim)
        .map(|i| {
            let mut e = Site::ORIGIN;
            e.0[i] = torus.extents()[i];
            e
        })
        .collect();
    let set: HashSet<Site> = anchors.iter().copied().collect();
    let a0 = anchors[0];
    for &a in anchors.iter().skip(1) {
        let v = a - a0;
        if anchors.iter().all(|&b| set.contains(&torus.reduce(b + v))) {
            gens.push(v);
        }
    }
    Sublattice::from_generators(anchors, &gens, dim).expect("torus periods have full rank")
}

/// Exact covers of a torus by footprints with torus-compatible anchors.
/// `visit` returns `false` to stop the search.
pub fn torus_exact_covers(model: &ModelSpec, torus: &Torus, visit: &mut dyn FnMut(&[Site]) -> bool) {
    let reduced_excl: HashSet<Site> = model.exclusion().iter().map(|&e| torus.reduce(e)).collect();
    // A nonzero exclusion vector that wraps to zero makes every particle
    // conflict with its own periodic image.
    if model
        .exclusion()
        .iter()
        .any(|&e| !e.is_origin() && torus.reduce(e).is_origin())
    {
        return;
    }
    let sites = torus.sites();
    let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut placements: Vec<Vec<(Site, Vec<usize>)>> = vec![Vec::new(); sites.len()];
    for &s in &sites {
        for &f in model.footprint() {
            let a = torus.reduce(s - f);
            let cells: Vec<usize> = model.footprint_at(a).iter().map(|&c| index[&torus.reduce(c)]).collect();
            let distinct: BTreeSet<usize> = cells.iter().copied().collect();
            if distinct.len() == cells.len() {
                placements[index[&s]].push((a, cells));
            }
        }
    }
    struct Search<'a> {
        torus: &'a Torus,
        excl: &'a HashSet<Site>,
        placements: &'a [Vec<(Site, Vec<usize>)>],
        covered: Vec<bool>,
        chosen: Vec<Site>,
        visit: &'a mut dyn FnMut(&[Site]) -> bool,
    }
    impl Search<'_> {
        fn run(&mut self, from: usize) -> bool {
            let Some(cell) = (from..self.covered.len()).find(|&i| !self.covered[i]) else {
                let mut sol = self.chosen.clone();
                sol.sort();
                return (self.visit)(&sol);
            };
            for (a, cells) in &self.placements[cell] {
                if cells.iter().any(|&c| self.covered[c]) {
                    continue;
                }
                if self.chosen.iter().any(|&b| self.excl.contains(&self.torus.reduce(*a - b))) {
                    continue;
                }
                for &c in cells {
                    self.covered[c] = true;
                }
                self.chosen.push(*a);
                let go_on = self.run(cell + 1);
                self.chosen.pop();
                for &c in cells {
                    self.covered[c] = false;
                }
                if !go_on {
                    return false;
                }
            }
            true
        }
    }
    let mut search = Search {
        torus,
        excl: &reduced_excl,
        placements: &placements,
        covered: vec![false; sites.len()],
        chosen: Vec::new(),
        visit,
    };
    search.run(0);
}

fn covering_maps(model: &ModelSpec, subs: &[Sublattice]) -> Result<Vec<CoveringMap>> {
    let tau = subs.len();
    let syms = model.symmetries();
    let index: HashMap<&Sublattice, usize> = subs.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut maps = Vec::with_capacity(tau * tau);
    for from in 0..tau {
        for to in 0..tau {
            let target = &subs[to];
            let mut chosen = None;
            for (g, c) in &syms {
                let img = subs[from].image(g, *c);
                if img.basis != target.basis {
                    continue;
                }
                // A translation by t maps the image onto the target when it
                // sends one coset onto one of the target's cosets.
                for &o in &target.offsets {
                    let t = o - img.offsets[0];
                    if img.image(&LinearMap::IDENTITY, t) == *target {
                        chosen = Some((*g, *c + t));
                        break;
                    }
                }
                if chosen.is_some() {
                    break;
                }
            }
            let Some((linear, shift)) = chosen else {
                return Err(Error::PropertyViolation(format!(
                    "no lattice symmetry maps covering {} onto covering {}",
                    from + 1,
                    to + 1
                )));
            };
            let mut permutation = Vec::with_capacity(tau);
            for s in subs {
                let img = s.image(&linear, shift);
                let k = *index.get(&img).ok_or_else(|| {
                    Error::PropertyViolation(format!(
                        "covering family not closed: image of a covering under F_({},{}) is not in the family",
                        from + 1,
                        to + 1
                    ))
                })?;
                permutation.push(k);
            }
            maps.push(CoveringMap {
                from,
                to,
                linear,
                shift,
                permutation,
            });
        }
    }
    Ok(maps)
}

fn union_of_footprints(model: &ModelSpec, xs: &[Site]) -> BTreeSet<Site> {
    xs.iter().flat_map(|&x| model.footprint_at(x)).collect()
}

/// Sites at graph distance exactly 1 from `set`.
pub fn outer_shell(model: &ModelSpec, set: &BTreeSet<Site>) -> BTreeSet<Site> {
    let lat = model.lattice();
    set.iter()
        .flat_map(|&s| lat.neighbors(s))
        .filter(|n| !set.contains(n))
        .collect()
}

/// 𝕊(X): completions X′ ⊇ X whose new particles touch ∪σ_X and which leave
/// no empty site within distance 1 of ∪σ_X.
pub fn isolating_completions(model: &ModelSpec, xs: &[Site]) -> Result<Vec<Vec<Site>>> {
    if xs.is_empty() {
        return invalid("configuration must not be empty");
    }
    if !model.is_configuration(xs) {
        return invalid("configuration has incompatible particles");
    }
    let lat = model.lattice();
    let core = union_of_footprints(model, xs);
    if !is_connected(lat, &core) {
        return invalid("configuration is not connected");
    }
    let shell: Vec<Site> = outer_shell(model, &core).into_iter().collect();
    let shell_pos: HashMap<Site, usize> = shell.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let mut results = Vec::new();
    let mut covered = vec![false; shell.len()];
    let mut chosen: Vec<Site> = xs.to_vec();
    fn search(
        model: &ModelSpec,
        core: &BTreeSet<Site>,
        shell: &[Site],
        shell_pos: &HashMap<Site, usize>,
        covered: &mut Vec<bool>,
        chosen: &mut Vec<Site>,
        results: &mut Vec<Vec<Site>>,
    ) {
        let Some(i) = covered.iter().position(|c| !c) else {
            let mut sol = chosen.clone();
            sol.sort();
            results.push(sol);
            return;
        };
        let target = shell[i];
        for &f in model.footprint() {
            let a = target - f;
            let fp = model.footprint_at(a);
            if fp.iter().any(|s| core.contains(s)) {
                continue;
            }
            if !chosen.iter().all(|&b| model.compatible(a, b)) {
                continue;
            }
            let hits: Vec<usize> = fp.iter().filter_map(|s| shell_pos.get(s).copied()).collect();
            if hits.iter().any(|&h| covered[h]) {
                continue;
            }
            for &h in &hits {
                covered[h] = true;
            }
            chosen.push(a);
            search(model, core, shell, shell_pos, covered, chosen, results);
            chosen.pop();
            for &h in &hits {
                covered[h] = false;
            }
        }
    }
    search(model, &core, &shell, &shell_pos, &mut covered, &mut chosen, &mut results);
    results.sort();
    results.dedup();

    // Literal check of the isolation condition inside the search window.
    let reach = 2 * (model.footprint_diameter() as i32 + 1);
    let (mut lo, mut hi) = bounding_box(core.iter().copied());
    for i in 0..model.dim() {
        lo.0[i] -= reach;
        hi.0[i] += reach;
    }
    for sol in &results {
        let cov = union_of_footprints(model, sol);
        for s in box_sites(lo, hi, model.dim()) {
            if !cov.contains(&s) && core.iter().any(|&c| lat.distance(c, s) <= 1) {
                return Err(Error::PropertyViolation(format!(
                    "completion leaves empty site {s:?} next to the configuration"
                )));
            }
        }
        let new: Vec<Site> = sol.iter().filter(|a| !xs.contains(a)).copied().collect();
        if new.iter().any(|&a| model.set_distance(&model.footprint_at(a), &core.iter().copied().collect::<Vec<_>>()) > 1) {
            return Err(Error::PropertyViolation("completion adds a particle away from the configuration".into()));
        }
    }
    Ok(results)
}

/// Canonical representative of a configuration up to translation: sorted,
/// with the smallest anchor moved to the origin.
pub fn canonical_translate(xs: &[Site]) -> Vec<Site> {
    let mut v = xs.to_vec();
    v.sort();
    if let Some(&m) = v.first() {
        for s in v.iter_mut() {
            *s = *s - m;
        }
    }
    v
}

/// Translation classes of connected `n`-particle configurations.
pub fn connected_configs(model: &ModelSpec, n: usize) -> Vec<Vec<Site>> {
    if n == 0 {
        return vec![];
    }
    let mut level: BTreeSet<Vec<Site>> = BTreeSet::from([vec![Site::ORIGIN]]);
    for _ in 1..n {
        let next: BTreeSet<Vec<Site>> = level
            .par_iter()
            .flat_map_iter(|cfg| {
                let core = union_of_footprints(model, cfg);
                let mut reach: BTreeSet<Site> = outer_shell(model, &core);
                reach.extend(core.iter().copied());
                let mut cands = BTreeSet::new();
                for &s in &reach {
                    for &f in model.footprint() {
                        cands.insert(s - f);
                    }
                }
                let mut out = Vec::new();
                for a in cands {
                    if cfg.contains(&a) || !cfg.iter().all(|&b| model.compatible(a, b)) {
                        continue;
                    }
                    let fp = model.footprint_at(a);
                    let touches = fp
                        .iter()
                        .any(|&s| core.contains(&s) || model.lattice().neighbors(s).any(|t| core.contains(&t)));
                    if touches {
                        let mut grown = cfg.clone();
                        grown.push(a);
                        out.push(canonical_translate(&grown));
                    }
                }
                out
            })
            .collect();
        level = next;
    }
    level.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassOutcome {
    pub particles: usize,
    pub representative: Vec<Vec<i32>>,
    pub completions: usize,
    /// Covering label (1-based) of each completion.
    pub phases: Vec<usize>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlidingWitness {
    pub configuration: Vec<Vec<i32>>,
    pub completion: Vec<Vec<i32>>,
    pub containing_coverings: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlidingCertificate {
    pub model: String,
    pub tau: usize,
    pub max_particles: usize,
    pub classes_checked: usize,
    pub passed: bool,
    pub verdict: String,
    pub classes: Vec<ClassOutcome>,
    pub violations: Vec<SlidingWitness>,
}

/// Checks the non-sliding condition on all connected configurations with
/// at most `max_particles` particles.
pub fn certify_non_sliding(model: &ModelSpec, family: &CoveringFamily, max_particles: usize) -> Result<SlidingCertificate> {
    if model.dim() < 2 {
        return invalid("non-sliding certification requires dimension at least 2");
    }
    if max_particles == 0 {
        return invalid("max_particles must be at least 1");
    }
    let dim = model.dim();
    let mut classes = Vec::new();
    let mut violations = Vec::new();
    for n in 1..=max_particles {
        let reps = connected_configs(model, n);
        let outcomes: Vec<Result<(ClassOutcome, Vec<SlidingWitness>)>> = reps
            .par_iter()
            .map(|x| {
                let completions = isolating_completions(model, x)?;
                let mut phases = Vec::new();
                let mut bad = Vec::new();
                for c in &completions {
                    let hits = (0..family.len()).filter(|&mu| c.iter().all(|&a| family.get(mu).contains(a))).count();
                    if hits == 1 {
                        phases.push(family.unique_phase(c).unwrap() + 1);
                    } else {
                        bad.push(SlidingWitness {
                            configuration: x.iter().map(|s| s.to_vec(dim)).collect(),
                            completion: c.iter().map(|s| s.to_vec(dim)).collect(),
                            containing_coverings: hits,
                        });
                    }
                }
                Ok((
                    ClassOutcome {
                        particles: n,
                        representative: x.iter().map(|s| s.to_vec(dim)).collect(),
                        completions: completions.len(),
                        phases,
                        ok: bad.is_empty(),
                    },
                    bad,
                ))
            })
            .collect();
        for o in outcomes {
            let (c, bad) = o?;
            classes.push(c);
            violations.extend(bad);
        }
    }
    let passed = violations.is_empty();
    Ok(SlidingCertificate {
        model: model.name().to_string(),
        tau: family.len(),
        max_particles,
        classes_checked: classes.len(),
        passed,
        verdict: if passed {
            format!("non-sliding up to {max_particles} particles")
        } else {
            format!("sliding violation among configurations of at most {max_particles} particles")
        },
        classes,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_basis_examples() {
        let b = hermite_basis(&[Site::xy(1, 2), Site::xy(2, -1)], 2).unwrap();
        assert_eq!(b[0].0[0] * b[1].0[1], 5);
        assert!(hermite_basis(&[Site::xy(1, 2), Site::xy(2, 4)], 2).is_none());
        let b = hermite_basis(&[Site::xy(4, 0), Site::xy(0, 4), Site::xy(1, 1)], 2).unwrap();
        assert_eq!(b, vec![Site::xy(1, 1), Site::xy(0, 4)]);
    }

    #[test]
    fn cross_sublattice_membership() {
        let l1 = Sublattice::from_periods(Site::ORIGIN, &[Site::xy(1, 2), Site::xy(2, -1)], 2).unwrap();
        assert!(l1.contains(Site::xy(1, 2)));
        assert!(!l1.contains(Site::xy(1, 0)));
        assert!(l1.contains(Site::ORIGIN));
        assert!(l1.contains(Site::xy(3, 1)));
        let shifted = Sublattice::from_periods(Site::xy(1, 0), &[Site::xy(1, 2), Site::xy(2, -1)], 2).unwrap();
        assert!(shifted.contains(Site::xy(1, 0)));
        assert_eq!(l1.axis_period(0), 5);
    }

    #[test]
    fn diamond_family() {
        let m = ModelSpec::builtin("hyperdiamond-2d").unwrap();
        let f = perfect_coverings(&m, 4).unwrap();
        assert_eq!(f.tau(), 2);
        assert!(f.get(0).contains(Site::ORIGIN));
        assert!(f.get(1).contains(Site::xy(1, 0)));
        for m in f.maps() {
            let mut p = m.permutation.clone();
            p.sort();
            assert_eq!(p, vec![0, 1]);
            assert_eq!(m.permutation[m.from], m.to);
        }
    }

    #[test]
    fn connected_cross_pairs() {
        let m = ModelSpec::builtin("cross").unwrap();
        let pairs = connected_configs(&m, 2);
        assert_eq!(pairs.len(), 6);
        assert_eq!(connected_configs(&m, 1).len(), 1);
    }
}
