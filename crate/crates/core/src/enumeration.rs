//! Exact partition polynomials, phase boundary conditions, densities and
//! truncated correlations.
//!
//! Every region is turned into a [`Problem`]: a list of candidate anchors
//! with pairwise conflicts, forced anchors and "at least one of" cover
//! constraints. Problems are solved either by a row-by-row transfer
//! recursion that is generic over a [`Semiring`], or by plain depth-first
//! enumeration (the oracle).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::lattice::{ModelSpec, Site};
use crate::region::{Region, Window};

/// Default cap on the number of live transfer states.
pub const DEFAULT_MAX_STATES: u64 = 1 << 26;

/// Resource caps for enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_states: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget::from_env()
    }
}

impl Budget {
    /// Reads `LATGAS_BUDGET` (a state count) when set.
    pub fn from_env() -> Budget {
        let max_states = std::env::var("LATGAS_BUDGET")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_STATES);
        Budget { max_states }
    }
}

/// Exact canonical counts `Z(0..=N_max)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPolynomial {
    coefficients: Vec<BigUint>,
    volume: usize,
    region: String,
}

impl PartitionPolynomial {
    pub fn new(coefficients: Vec<BigUint>, volume: usize, region: impl Into<String>) -> PartitionPolynomial {
        let mut coefficients = coefficients;
        while coefficients.len() > 1 && coefficients.last().is_some_and(|c| c.is_zero()) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(BigUint::zero());
        }
        PartitionPolynomial {
            coefficients,
            volume,
            region: region.into(),
        }
    }

    pub fn coefficients(&self) -> &[BigUint] {
        &self.coefficients
    }

    /// Largest particle number with a nonzero count.
    pub fn n_max(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// |Λ|.
    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn evaluate(&self, z: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * z + BigRational::from_integer(BigInt::from(c.clone()));
        }
        acc
    }

    /// Total number of configurations.
    pub fn total(&self) -> BigUint {
        self.coefficients.iter().sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "region": self.region,
            "volume": self.volume,
            "n_max": self.n_max(),
            "coefficients": self.coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// `Q(k) = Z(N_max − k)`.
pub fn defect_counts(p: &PartitionPolynomial) -> Vec<BigUint> {
    p.coefficients.iter().rev().cloned().collect()
}

/// Uniform fugacity with finitely many site overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct FugacityMap {
    pub uniform: BigRational,
    pub overrides: BTreeMap<Site, BigRational>,
}

impl FugacityMap {
    pub fn uniform(z: BigRational) -> FugacityMap {
        FugacityMap {
            uniform: z,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, x: Site, z: BigRational) -> FugacityMap {
        self.overrides.insert(x, z);
        self
    }

    pub fn at(&self, x: Site) -> &BigRational {
        self.overrides.get(&x).unwrap_or(&self.uniform)
    }
}

/// Forced anchors 𝔹_ν and the phantom particles 𝕏_ν within a margin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundarySets {
    pub forced: Vec<Site>,
    pub phantoms: Vec<Site>,
}

/// Candidates, conflicts and constraints of one counting problem.
#[derive(Clone, Debug)]
pub struct Problem {
    cands: Vec<Site>,
    row_of: Vec<usize>,
    conflicts: Vec<Vec<usize>>,
    forced: Vec<bool>,
    covers: Vec<Vec<usize>>,
    rows: usize,
}

impl Problem {
    pub fn candidates(&self) -> &[Site] {
        &self.cands
    }

    pub fn forced(&self) -> Vec<Site> {
        (0..self.cands.len()).filter(|&i| self.forced[i]).map(|i| self.cands[i]).collect()
    }

    fn from_parts(
        cands: Vec<Site>,
        conflicts: Vec<Vec<usize>>,
        forced: Vec<bool>,
        covers: Vec<Vec<usize>>,
        sweep_axis: usize,
    ) -> Result<Problem> {
        // Drop candidates that conflict with a forced one.
        for i in 0..cands.len() {
            if forced[i] {
                if let Some(&j) = conflicts[i].iter().find(|&&j| forced[j]) {
                    return Err(Error::InconsistentBoundary(format!(
                        "forced particles at {:?} and {:?} are incompatible",
                        cands[i], cands[j]
                    )));
                }
            }
        }
        let keep: Vec<bool> = (0..cands.len())
            .map(|i| forced[i] || !conflicts[i].iter().any(|&j| forced[j]))
            .collect();
        let mut new_index = vec![usize::MAX; cands.len()];
        let mut kept = Vec::new();
        for i in 0..cands.len() {
            if keep[i] {
                new_index[i] = kept.len();
                kept.push(i);
            }
        }
        let c2: Vec<Site> = kept.iter().map(|&i| cands[i]).collect();
        let conf2: Vec<Vec<usize>> = kept
            .iter()
            .map(|&i| conflicts[i].iter().filter(|&&j| keep[j]).map(|&j| new_index[j]).collect())
            .collect();
        let forced2: Vec<bool> = kept.iter().map(|&i| forced[i]).collect();
        let mut covers2 = Vec::new();
        for cov in covers {
            let c: Vec<usize> = cov.iter().filter(|&&j| keep[j]).map(|&j| new_index[j]).collect();
            if c.iter().any(|&j| forced2[j]) {
                continue;
            }
            if c.is_empty() {
                return Err(Error::InconsistentBoundary(
                    "a site next to a forced boundary particle cannot be covered".into(),
                ));
            }
            covers2.push(c);
        }
        let sweep: Vec<i32> = c2.iter().map(|s| s.0[sweep_axis]).collect();
        let lo = sweep.iter().copied().min().unwrap_or(0);
        let row_of: Vec<usize> = sweep.iter().map(|&y| (y - lo) as usize).collect();
        let rows = row_of.iter().map(|r| r + 1).max().unwrap_or(0);
        Ok(Problem {
            cands: c2,
            row_of,
            conflicts: conf2,
            forced: forced2,
            covers: covers2,
            rows,
        })
    }

    /// Builds the problem for `region`, optionally forcing extra anchors.
    pub fn build(model: &ModelSpec, region: &Region, extra_forced: &[Site]) -> Result<Problem> {
        let dim = model.dim();
        match region {
            Region::Torus(t) => {
                if t.dim() != dim {
                    return invalid(format!("torus dimension {} does not match the lattice dimension {dim}", t.dim()));
                }
                let self_blocked = model.exclusion().iter().any(|&e| !e.is_origin() && t.reduce(e).is_origin());
                let cands = if self_blocked { Vec::new() } else { t.sites() };
                let index: HashMap<Site, usize> = cands.iter().enumerate().map(|(i, &s)| (s, i)).collect();
                let mut conflicts = vec![Vec::new(); cands.len()];
                for (i, &a) in cands.iter().enumerate() {
                    let mut set = BTreeSet::new();
                    for &e in model.exclusion() {
                        let j = index[&t.reduce(a + e)];
                        if j != i {
                            set.insert(j);
                        }
                    }
                    conflicts[i] = set.into_iter().collect();
                }
                let mut forced = vec![false; cands.len()];
                for &x in extra_forced {
                    match index.get(&t.reduce(x)) {
                        Some(&i) => forced[i] = true,
                        None => return Ok(Problem::impossible()),
                    }
                }
                Problem::from_parts(cands, conflicts, forced, Vec::new(), dim - 1)
            }
            Region::Window(w) => {
                let cands: Vec<Site> = w.sites().iter().copied().collect();
                let index: HashMap<Site, usize> = cands.iter().enumerate().map(|(i, &s)| (s, i)).collect();
                let mut conflicts = vec![Vec::new(); cands.len()];
                for (i, &a) in cands.iter().enumerate() {
                    for &e in model.exclusion() {
                        if let Some(&j) = index.get(&(a + e)) {
                            if j != i {
                                conflicts[i].push(j);
                            }
                        }
                    }
                    conflicts[i].sort();
                }
                let mut forced = vec![false; cands.len()];
                let mut covers = Vec::new();
                if let Some(pb) = w.boundary() {
                    let sets = boundary_sets(model, w, pb.phase)?;
                    for x in &sets.forced {
                        forced[index[x]] = true;
                    }
                    for s in must_cover_sites(model, w, &sets.forced) {
                        let cov: Vec<usize> = model
                            .footprint()
                            .iter()
                            .filter_map(|&f| index.get(&(s - f)).copied())
                            .collect();
                        covers.push(cov);
                    }
                }
                for &x in extra_forced {
                    match index.get(&x) {
                        Some(&i) => forced[i] = true,
                        None => return Ok(Problem::impossible()),
                    }
                }
                Problem::from_parts(cands, conflicts, forced, covers, dim - 1)
            }
        }
    }

    /// A problem with no admissible configuration.
    fn impossible() -> Problem {
        Problem {
            cands: Vec::new(),
            row_of: Vec::new(),
            conflicts: Vec::new(),
            forced: Vec::new(),
            covers: vec![Vec::new()],
            rows: 0,
        }
    }

    fn is_impossible(&self) -> bool {
        self.covers.iter().any(|c| c.is_empty())
    }
}

pub(crate) fn boundary_sets(model: &ModelSpec, w: &Window, phase: usize) -> Result<BoundarySets> {
    let pb = w
        .boundary()
        .filter(|pb| pb.phase == phase)
        .ok_or_else(|| Error::Validation("window: boundary phase mismatch".into()))?;
    let sub = &pb.sublattice;
    let lat = model.lattice();
    let near_outside = |s: &Site| !w.contains(*s) || lat.neighbors(*s).any(|n| !w.contains(n));
    let forced: Vec<Site> = w
        .sites()
        .iter()
        .copied()
        .filter(|&x| sub.contains(x) && model.footprint_at(x).iter().any(near_outside))
        .collect();
    let margin = model.footprint_diameter() as i32 + 1;
    let (mut lo, mut hi) = w.bounds();
    for i in 0..model.dim() {
        lo.0[i] -= margin;
        hi.0[i] += margin;
    }
    let phantoms = sub.anchors_in_box(lo, hi).into_iter().filter(|&a| !w.contains(a)).collect();
    Ok(BoundarySets { forced, phantoms })
}

/// Sites within distance 1 of a forced footprint that neither a forced
/// particle nor a phantom covers.
pub(crate) fn must_cover_sites(model: &ModelSpec, w: &Window, forced: &[Site]) -> Vec<Site> {
    let sub = &w.boundary().expect("phase boundary").sublattice;
    let lat = model.lattice();
    let forced_cover: HashSet<Site> = forced.iter().flat_map(|&b| model.footprint_at(b)).collect();
    let phantom_covers = |s: Site| {
        model.footprint().iter().any(|&f| {
            let a = s - f;
            sub.contains(a) && !w.contains(a)
        })
    };
    let mut out = BTreeSet::new();
    for &b in forced {
        for s in model.footprint_at(b) {
            for n in lat.neighbors(s) {
                if !forced_cover.contains(&n) && !phantom_covers(n) {
                    out.insert(n);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// 𝔹_ν(Λ) and the phantom anchors 𝕏_ν within a margin of width
/// `footprint diameter + 1`.
pub fn boundary_forced_sites(model: &ModelSpec, region: &Region) -> Result<BoundarySets> {
    match region {
        Region::Torus(_) => invalid("a torus has no boundary"),
        Region::Window(w) => match w.boundary() {
            Some(pb) => boundary_sets(model, w, pb.phase),
            None => invalid("window has free boundary conditions"),
        },
    }
}

// ---------------------------------------------------------------------------
// Semirings

/// Weight algebra used by the transfer recursion.
pub trait Semiring: Sync {
    type Elem: Clone + Send + Sync;
    type Factor: Clone + Send + Sync;
    fn one(&self) -> Self::Elem;
    fn add_assign(&self, acc: &mut Self::Elem, x: &Self::Elem);
    fn factor(&self, cands: &[usize]) -> Self::Factor;
    fn mul(&self, x: &Self::Elem, f: &Self::Factor) -> Self::Elem;
}

/// Counting polynomial in the particle number.
pub struct Counting;

impl Semiring for Counting {
    type Elem = Vec<BigUint>;
    type Factor = usize;
    fn one(&self) -> Vec<BigUint> {
        vec![BigUint::one()]
    }
    fn add_assign(&self, acc: &mut Vec<BigUint>, x: &Vec<BigUint>) {
        if acc.len() < x.len() {
            acc.resize(x.len(), BigUint::zero());
        }
        for (a, b) in acc.iter_mut().zip(x) {
            *a += b;
        }
    }
    fn factor(&self, cands: &[usize]) -> usize {
        cands.len()
    }
    fn mul(&self, x: &Vec<BigUint>, f: &usize) -> Vec<BigUint> {
        let mut out = vec![BigUint::zero(); *f];
        out.extend(x.iter().cloned());
        out
    }
}

/// The top `keep + 1` coefficients of the counting polynomial.
///
/// A partial weight only needs the coefficients within `keep` of its own
/// largest exponent: any completion adds the same particle number to every
/// exponent, and the best completion reaches at most `N_max`.
pub struct TopCounts {
    pub keep: usize,
    overflow: AtomicBool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Top {
    pub max: usize,
    /// `coeffs[i]` counts configurations with `max − i` particles.
    pub coeffs: Vec<u128>,
}

impl TopCounts {
    pub fn new(keep: usize) -> TopCounts {
        TopCounts {
            keep,
            overflow: AtomicBool::new(false),
        }
    }

    fn checked(&self, a: u128, b: u128) -> u128 {
        a.checked_add(b).unwrap_or_else(|| {
            self.overflow.store(true, Ordering::Relaxed);
            u128::MAX
        })
    }
}

impl Semiring for TopCounts {
    type Elem = Top;
    type Factor = usize;
    fn one(&self) -> Top {
        Top { max: 0, coeffs: vec![1] }
    }
    fn add_assign(&self, acc: &mut Top, x: &Top) {
        if x.max > acc.max {
            let shift = x.max - acc.max;
            let mut merged = x.coeffs.clone();
            for (i, &c) in acc.coeffs.iter().enumerate() {
                if i + shift <= self.keep {
                    if merged.len() <= i + shift {
                        merged.resize(i + shift + 1, 0);
                    }
                    merged[i + shift] = self.checked(merged[i + shift], c);
                }
            }
            *acc = Top { max: x.max, coeffs: merged };
        } else {
            let shift = acc.max - x.max;
            for (i, &c) in x.coeffs.iter().enumerate() {
                if i + shift <= self.keep {
                    if acc.coeffs.len() <= i + shift {
                        acc.coeffs.resize(i + shift + 1, 0);
                    }
                    acc.coeffs[i + shift] = self.checked(acc.coeffs[i + shift], c);
                }
            }
        }
    }
    fn factor(&self, cands: &[usize]) -> usize {
        cands.len()
    }
    fn mul(&self, x: &Top, f: &usize) -> Top {
        Top {
            max: x.max + f,
            coeffs: x.coeffs.clone(),
        }
    }
}

/// Exact rational weights per candidate.
pub struct Weighted {
    pub weights: Vec<BigRational>,
}

impl Semiring for Weighted {
    type Elem = BigRational;
    type Factor = BigRational;
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn add_assign(&self, acc: &mut BigRational, x: &BigRational) {
        *acc += x;
    }
    fn factor(&self, cands: &[usize]) -> BigRational {
        cands.iter().fold(BigRational::one(), |acc, &i| acc * &self.weights[i])
    }
    fn mul(&self, x: &BigRational, f: &BigRational) -> BigRational {
        x * f
    }
}

// ---------------------------------------------------------------------------
// Transfer recursion

const MAX_ROW_WIDTH: usize = 64;

/// Sums the semiring weight of every admissible configuration, sweeping
/// rows in order and keeping the configurations of the rows that later
/// rows still interact with.
pub fn transfer_sum<S: Semiring>(problem: &Problem, semiring: &S, budget: &Budget) -> Result<Option<S::Elem>> {
    if problem.is_impossible() {
        return Ok(None);
    }
    let nrows = problem.rows;
    if nrows == 0 {
        return Ok(Some(semiring.one()));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); nrows];
    for (i, &r) in problem.row_of.iter().enumerate() {
        members[r].push(i);
    }
    let mut pos = vec![0usize; problem.cands.len()];
    for row in &members {
        if row.len() > MAX_ROW_WIDTH {
            return Err(Error::Budget {
                what: format!("row width {} of the transfer sweep", row.len()),
                limit: MAX_ROW_WIDTH as u64,
            });
        }
        for (k, &i) in row.iter().enumerate() {
            pos[i] = k;
        }
    }

    // Row configurations: independent within the row, containing all forced.
    let mut configs: Vec<Vec<u64>> = Vec::with_capacity(nrows);
    let mut total_configs = 0u64;
    for row in &members {
        let forced_mask: u64 = row
            .iter()
            .enumerate()
            .filter(|(_, &i)| problem.forced[i])
            .fold(0, |m, (k, _)| m | (1 << k));
        let inner: Vec<u64> = row
            .iter()
            .map(|&i| {
                problem.conflicts[i]
                    .iter()
                    .filter(|&&j| problem.row_of[j] == problem.row_of[i])
                    .fold(0u64, |m, &j| m | (1 << pos[j]))
            })
            .collect();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0u64)];
        while let Some((k, mask)) = stack.pop() {
            if k == row.len() {
                out.push(mask);
                total_configs += 1;
                if total_configs > budget.max_states {
                    return Err(Error::Budget {
                        what: "row configurations".into(),
                        limit: budget.max_states,
                    });
                }
                continue;
            }
            let bit = 1u64 << k;
            if forced_mask & bit == 0 {
                stack.push((k + 1, mask));
            }
            if inner[k] & mask == 0 {
                stack.push((k + 1, mask | bit));
            }
        }
        out.sort_unstable();
        configs.push(out);
    }

    // Cross-row conflict masks: cross[t] lists (s, per-bit mask into row s) for s < t.
    let mut cross: Vec<Vec<(usize, Vec<u64>)>> = vec![Vec::new(); nrows];
    let mut links: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nrows];
    for t in 0..nrows {
        let mut by_row: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for (k, &i) in members[t].iter().enumerate() {
            for &j in &problem.conflicts[i] {
                let s = problem.row_of[j];
                if s < t {
                    let e = by_row.entry(s).or_insert_with(|| vec![0; members[t].len()]);
                    e[k] |= 1 << pos[j];
                }
            }
        }
        for (s, masks) in by_row {
            links[t].insert(s);
            cross[t].push((s, masks));
        }
    }
    // Cover constraints are checked at their last row.
    let mut checks: Vec<Vec<Vec<(usize, u64)>>> = vec![Vec::new(); nrows];
    for cov in &problem.covers {
        let last = cov.iter().map(|&j| problem.row_of[j]).max().unwrap();
        let mut per_row: BTreeMap<usize, u64> = BTreeMap::new();
        for &j in cov {
            *per_row.entry(problem.row_of[j]).or_insert(0) |= 1 << pos[j];
            if problem.row_of[j] < last {
                links[last].insert(problem.row_of[j]);
            }
        }
        checks[last].push(per_row.into_iter().collect());
    }
    // live[t]: rows < t referenced by some row ≥ t.
    let mut live: Vec<Vec<usize>> = vec![Vec::new(); nrows + 1];
    for t in 0..=nrows {
        let mut set = BTreeSet::new();
        for u in t..nrows {
            for &s in &links[u] {
                if s < t {
                    set.insert(s);
                }
            }
        }
        live[t] = set.into_iter().collect();
    }

    let factors: Vec<Vec<S::Factor>> = (0..nrows)
        .map(|t| {
            configs[t]
                .iter()
                .map(|&m| {
                    let chosen: Vec<usize> = (0..members[t].len())
                        .filter(|&k| m & (1 << k) != 0)
                        .map(|k| members[t][k])
                        .collect();
                    semiring.factor(&chosen)
                })
                .collect()
        })
        .collect();

    let mut states: HashMap<Vec<u64>, S::Elem> = HashMap::new();
    states.insert(Vec::new(), semiring.one());
    for t in 0..nrows {
        let before = &live[t];
        let after = &live[t + 1];
        let slot = |s: usize| before.iter().position(|&r| r == s).expect("live row");
        let cross_slots: Vec<(usize, &Vec<u64>)> = cross[t].iter().map(|(s, m)| (slot(*s), m)).collect();
        let check_slots: Vec<Vec<(Option<usize>, u64)>> = checks[t]
            .iter()
            .map(|c| c.iter().map(|&(s, m)| (if s == t { None } else { Some(slot(s)) }, m)).collect())
            .collect();
        let next_from: Vec<Option<usize>> = after
            .iter()
            .map(|&s| if s == t { None } else { Some(slot(s)) })
            .collect();
        let mut next: HashMap<Vec<u64>, S::Elem> = HashMap::new();
        for (key, weight) in &states {
            // Forbidden bits of row t given the live rows.
            for (ci, &cfg) in configs[t].iter().enumerate() {
                let mut ok = true;
                for &(slot_s, masks) in &cross_slots {
                    let other = key[slot_s];
                    let mut m = cfg;
                    while m != 0 {
                        let k = m.trailing_zeros() as usize;
                        if masks[k] & other != 0 {
                            ok = false;
                            break;
                        }
                        m &= m - 1;
                    }
                    if !ok {
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                for check in &check_slots {
                    let hit = check.iter().any(|&(slot_s, m)| match slot_s {
                        None => cfg & m != 0,
                        Some(s) => key[s] & m != 0,
                    });
                    if !hit {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                let new_key: Vec<u64> = next_from
                    .iter()
                    .map(|f| match f {
                        None => cfg,
                        Some(s) => key[*s],
                    })
                    .collect();
                let w = semiring.mul(weight, &factors[t][ci]);
                match next.get_mut(&new_key) {
                    Some(acc) => semiring.add_assign(acc, &w),
                    None => {
                        next.insert(new_key, w);
                    }
                }
            }
            if next.len() as u64 > budget.max_states {
                return Err(Error::Budget {
                    what: "transfer states".into(),
                    limit: budget.max_states,
                });
            }
        }
        states = next;
    }
    let mut total: Option<S::Elem> = None;
    for w in states.values() {
        match total.as_mut() {
            Some(acc) => semiring.add_assign(acc, w),
            None => total = Some(w.clone()),
        }
    }
    Ok(total)
}

/// Visits every admissible configuration (as candidate indices) by
/// depth-first search.
pub fn dfs_visit(problem: &Problem, visit: &mut dyn FnMut(&[usize])) {
    if problem.is_impossible() {
        return;
    }
    let n = problem.cands.len();
    let mut last_cover: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, cov) in problem.covers.iter().enumerate() {
        let last = *cov.iter().max().unwrap();
        last_cover[last].push(c);
    }
    let mut blocked = vec![0u32; n];
    let mut chosen = Vec::new();
    let mut in_set = vec![false; n];
    fn rec(
        p: &Problem,
        i: usize,
        last_cover: &[Vec<usize>],
        blocked: &mut Vec<u32>,
        in_set: &mut Vec<bool>,
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        let satisfied = |in_set: &Vec<bool>| {
            if i == 0 {
                return true;
            }
            last_cover[i - 1].iter().all(|&c| p.covers[c].iter().any(|&j| in_set[j]))
        };
        if !satisfied(in_set) {
            return;
        }
        if i == p.cands.len() {
            visit(chosen);
            return;
        }
        if !p.forced[i] {
            rec(p, i + 1, last_cover, blocked, in_set, chosen, visit);
        }
        if blocked[i] == 0 {
            for &j in &p.conflicts[i] {
                blocked[j] += 1;
            }
            in_set[i] = true;
            chosen.push(i);
            rec(p, i + 1, last_cover, blocked, in_set, chosen, visit);
            chosen.pop();
            in_set[i] = false;
            for &j in &p.conflicts[i] {
                blocked[j] -= 1;
            }
        }
    }
    rec(problem, 0, &last_cover, &mut blocked, &mut in_set, &mut chosen, visit);
}

// ---------------------------------------------------------------------------
// Public operations

fn counts_to_poly(counts: Option<Vec<BigUint>>, region: &Region) -> PartitionPolynomial {
    PartitionPolynomial::new(counts.unwrap_or_else(|| vec![BigUint::zero()]), region.volume(), region.describe())
}

/// Exact `Z(k)` by the transfer recursion.
pub fn canonical_counts(model: &ModelSpec, region: &Region) -> Result<PartitionPolynomial> {
    canonical_counts_with(model, region, &Budget::default())
}

pub fn canonical_counts_with(model: &ModelSpec, region: &Region, budget: &Budget) -> Result<PartitionPolynomial> {
    let p = Problem::build(model, region, &[])?;
    Ok(counts_to_poly(transfer_sum(&p, &Counting, budget)?, region))
}

/// Exact `Z(k)` by depth-first enumeration.
pub fn canonical_counts_dfs(model: &ModelSpec, region: &Region) -> Result<PartitionPolynomial> {
    let p = Problem::build(model, region, &[])?;
    let mut counts: Vec<u64> = Vec::new();
    dfs_visit(&p, &mut |sel| {
        if counts.len() <= sel.len() {
            counts.resize(sel.len() + 1, 0);
        }
        counts[sel.len()] += 1;
    });
    let coeffs = if counts.is_empty() {
        None
    } else {
        Some(counts.into_iter().map(BigUint::from).collect())
    };
    Ok(counts_to_poly(coeffs, region))
}

/// All admissible configurations of a region (small regions only).
pub fn configurations(model: &ModelSpec, region: &Region) -> Result<Vec<Vec<Site>>> {
    let p = Problem::build(model, region, &[])?;
    let mut out = Vec::new();
    dfs_visit(&p, &mut |sel| out.push(sel.iter().map(|&i| p.cands[i]).collect()));
    Ok(out)
}

/// `N_max` and `Q(0..=k)` using only the top `k + 1` coefficients.
pub fn top_defect_counts(model: &ModelSpec, region: &Region, k: usize, budget: &Budget) -> Result<(usize, Vec<BigUint>)> {
    let p = Problem::build(model, region, &[])?;
    let semiring = TopCounts::new(k);
    let top = transfer_sum(&p, &semiring, budget)?
        .ok_or_else(|| Error::Validation("region admits no configuration".into()))?;
    if semiring.overflow.load(Ordering::Relaxed) {
        return Err(Error::Budget {
            what: "128-bit defect counts".into(),
            limit: u128::MAX.to_u64().unwrap_or(u64::MAX),
        });
    }
    let mut q: Vec<BigUint> = top.coeffs.iter().map(|&c| BigUint::from(c)).collect();
    q.resize(k.min(top.max) + 1, BigUint::zero());
    Ok((top.max, q))
}

fn weights_for(p: &Problem, region: &Region, fug: &FugacityMap) -> Vec<BigRational> {
    p.cands
        .iter()
        .map(|&x| match region {
            Region::Torus(t) => {
                let overridden = fug.overrides.iter().find(|(s, _)| t.reduce(**s) == x).map(|(_, z)| z.clone());
                overridden.unwrap_or_else(|| fug.uniform.clone())
            }
            Region::Window(_) => fug.at(x).clone(),
        })
        .collect()
}

/// Ξ with site-dependent fugacity, optionally restricted to configurations
/// containing `marked`.
pub fn partition_function_marked(
    model: &ModelSpec,
    region: &Region,
    fug: &FugacityMap,
    marked: &[Site],
    budget: &Budget,
) -> Result<BigRational> {
    let p = match Problem::build(model, region, marked) {
        Ok(p) => p,
        Err(Error::InconsistentBoundary(_)) if !marked.is_empty() => {
            Problem::build(model, region, &[])?;
            return Ok(BigRational::zero());
        }
        Err(e) => return Err(e),
    };
    let semiring = Weighted {
        weights: weights_for(&p, region, fug),
    };
    Ok(transfer_sum(&p, &semiring, budget)?.unwrap_or_else(BigRational::zero))
}

/// Ξ with site-dependent fugacity.
pub fn partition_function(model: &ModelSpec, region: &Region, fug: &FugacityMap) -> Result<BigRational> {
    partition_function_marked(model, region, fug, &[], &Budget::default())
}

/// Ξ by depth-first enumeration (oracle).
pub fn partition_function_dfs(model: &ModelSpec, region: &Region, fug: &FugacityMap) -> Result<BigRational> {
    let p = Problem::build(model, region, &[])?;
    let w = weights_for(&p, region, fug);
    let mut total = BigRational::zero();
    dfs_visit(&p, &mut |sel| {
        total += sel.iter().fold(BigRational::one(), |acc, &i| acc * &w[i]);
    });
    Ok(total)
}

/// ρ_1(x) = Ξ(x occupied)/Ξ.
pub fn density(model: &ModelSpec, region: &Region, fug: &FugacityMap, x: Site) -> Result<BigRational> {
    let budget = Budget::default();
    let xi = partition_function_marked(model, region, fug, &[], &budget)?;
    if xi.is_zero() {
        return Err(Error::Pole);
    }
    Ok(partition_function_marked(model, region, fug, &[x], &budget)? / xi)
}

/// Joint cumulant of the occupation indicators at `sites` (at most 4).
pub fn truncated_correlation(model: &ModelSpec, region: &Region, fug: &FugacityMap, sites: &[Site]) -> Result<BigRational> {
    let n = sites.len();
    if n == 0 || n > 4 {
        return invalid("truncated correlations need between 1 and 4 sites");
    }
    let distinct: BTreeSet<Site> = sites.iter().copied().collect();
    if distinct.len() != n {
        return invalid("correlation sites must be distinct");
    }
    let budget = Budget::default();
    let xi = partition_function_marked(model, region, fug, &[], &budget)?;
    if xi.is_zero() {
        return Err(Error::Pole);
    }
    // Moments E[Π_{i∈S} n_i] for every nonempty subset S (bitmask).
    let mut moment = vec![BigRational::zero(); 1 << n];
    for (mask, slot) in moment.iter_mut().enumerate().skip(1) {
        let marked: Vec<Site> = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| sites[i]).collect();
        *slot = partition_function_marked(model, region, fug, &marked, &budget)? / &xi;
    }
    let mut total = BigRational::zero();
    for partition in set_partitions(n) {
        let blocks = partition.len();
        let mut term = BigRational::from_integer(BigInt::from(factorial(blocks - 1)));
        if blocks % 2 == 0 {
            term = -term;
        }
        for b in &partition {
            term *= &moment[*b];
        }
        total += term;
    }
    Ok(total)
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Set partitions of `{0..n}`, each block a bitmask.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(i: usize, n: usize, blocks: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b] |= 1 << i;
            rec(i + 1, n, blocks, out);
            blocks[b] &= !(1 << i);
        }
        blocks.push(1 << i);
        rec(i + 1, n, blocks, out);
        blocks.pop();
    }
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn ring(l: i32) -> (ModelSpec, Region) {
        (ModelSpec::builtin("monomer-dimer").unwrap(), Region::torus(&[l]).unwrap())
    }

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn ring_counts() {
        let (m, r) = ring(4);
        assert_eq!(canonical_counts(&m, &r).unwrap().coefficients(), big(&[1, 4, 2]).as_slice());
        let (m, r) = ring(6);
        assert_eq!(canonical_counts(&m, &r).unwrap().coefficients(), big(&[1, 6, 9, 2]).as_slice());
        assert_eq!(canonical_counts_dfs(&m, &r).unwrap().coefficients(), big(&[1, 6, 9, 2]).as_slice());
    }

    #[test]
    fn defects_reverse() {
        let (m, r) = ring(8);
        let q = defect_counts(&canonical_counts(&m, &r).unwrap());
        assert_eq!(q[1], BigUint::from(16u32));
        assert_eq!(q[2], BigUint::from(20u32));
        assert_eq!(*q.last().unwrap(), BigUint::one());
    }

    #[test]
    fn top_counts_match_full() {
        let m = ModelSpec::builtin("hyperdiamond-2d").unwrap();
        let r = Region::torus(&[6, 6]).unwrap();
        let full = defect_counts(&canonical_counts(&m, &r).unwrap());
        let (nmax, q) = top_defect_counts(&m, &r, 3, &Budget::default()).unwrap();
        assert_eq!(nmax, 18);
        assert_eq!(q, full[..4].to_vec());
    }

    #[test]
    fn weighted_matches_polynomial() {
        let m = ModelSpec::builtin("cross").unwrap();
        let r = Region::torus(&[5, 5]).unwrap();
        let p = canonical_counts(&m, &r).unwrap();
        let z = BigRational::new(BigInt::from(3), BigInt::from(2));
        let xi = partition_function(&m, &r, &FugacityMap::uniform(z.clone())).unwrap();
        assert_eq!(xi, p.evaluate(&z));
    }

    #[test]
    fn torus_density_is_uniform() {
        let m = ModelSpec::builtin("hyperdiamond-2d").unwrap();
        let r = Region::torus(&[4, 4]).unwrap();
        let fug = FugacityMap::uniform(BigRational::from_u32(2).unwrap());
        let d0 = density(&m, &r, &fug, Site::xy(0, 0)).unwrap();
        for s in r.sites() {
            assert_eq!(density(&m, &r, &fug, s).unwrap(), d0);
        }
    }

    #[test]
    fn set_partition_counts() {
        let bell = [1, 1, 2, 5, 15];
        for n in 1..=4 {
            assert_eq!(set_partitions(n).len(), bell[n]);
        }
    }
}
