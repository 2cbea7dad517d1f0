//! Finite regions: periodic tori and tiled windows with optional phase
//! boundary conditions.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::coverings::{CoveringFamily, Sublattice};
use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeKind, ModelSpec, Site, MAX_DIM};

/// A periodic box `Z^d / (L_1 Z × … × L_d Z)` (axial coordinates for the
/// triangular lattice).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Torus {
    extents: Vec<i32>,
}

impl Torus {
    pub fn new(extents: Vec<i32>) -> Result<Torus> {
        if extents.is_empty() || extents.len() > MAX_DIM {
            return invalid(format!("torus: expected 1 to {MAX_DIM} extents, got {}", extents.len()));
        }
        if extents.iter().any(|&l| l < 1) {
            return invalid("torus: extents must be positive");
        }
        Ok(Torus { extents })
    }

    pub fn extents(&self) -> &[i32] {
        &self.extents
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn volume(&self) -> usize {
        self.extents.iter().map(|&l| l as usize).product()
    }

    /// Canonical representative with every coordinate in `[0, L_i)`.
    pub fn reduce(&self, s: Site) -> Site {
        let mut c = s.0;
        for (i, &l) in self.extents.iter().enumerate() {
            c[i] = c[i].rem_euclid(l);
        }
        Site(c)
    }

    /// All sites, ordered by the last coordinate first.
    pub fn sites(&self) -> Vec<Site> {
        let mut out = vec![Site::ORIGIN];
        for (axis, &l) in self.extents.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * l as usize);
            for s in &out {
                for k in 0..l {
                    let mut c = s.0;
                    c[axis] = k;
                    next.push(Site(c));
                }
            }
            out = next;
        }
        out.sort_by_key(|s| {
            let mut key = s.0;
            key.reverse();
            key
        });
        out
    }

    pub fn distance(&self, lattice: LatticeKind, a: Site, b: Site) -> u64 {
        let d = self.reduce(a - b);
        let dim = self.dim();
        let mut best = u64::MAX;
        let choices = [-2, -1, 0, 1];
        let total = choices.len().pow(dim as u32);
        for code in 0..total {
            let mut c = d.0;
            let mut k = code;
            for (axis, &l) in self.extents.iter().enumerate() {
                c[axis] += choices[k % choices.len()] * l;
                k /= choices.len();
            }
            best = best.min(lattice.norm(Site(c)));
        }
        best
    }
}

/// The phase boundary condition Ω_ν of a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseBoundary {
    /// Index of the covering ℒ_ν in its family (0-based).
    pub phase: usize,
    pub sublattice: Sublattice,
}

/// A bounded, connected, tiled window with connected complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    sites: BTreeSet<Site>,
    tiling: usize,
    boundary: Option<PhaseBoundary>,
}

impl Window {
    /// Validates `sites` and finds a covering that tiles it.
    pub fn new(
        model: &ModelSpec,
        family: &CoveringFamily,
        sites: BTreeSet<Site>,
        boundary: Option<usize>,
    ) -> Result<Window> {
        if sites.is_empty() {
            return invalid("window: empty site set");
        }
        let lat = model.lattice();
        if !is_connected(lat, &sites) {
            return invalid("window: site set is not connected");
        }
        if !complement_connected(lat, &sites) {
            return invalid("window: complement is not connected");
        }
        let tiling = (0..family.len())
            .find(|&mu| tiles(model, family.get(mu), &sites))
            .ok_or_else(|| Error::Validation("window: not tiled by any perfect covering".into()))?;
        Window::assemble(family, sites, tiling, boundary)
    }

    /// Λ = ∪ σ_x over anchors `x ∈ ℒ_tiling` whose footprint fits in the box
    /// `[0, L_1) × … × [0, L_d)`.
    pub fn tiled_box(
        model: &ModelSpec,
        family: &CoveringFamily,
        tiling: usize,
        extents: &[i32],
        boundary: Option<usize>,
    ) -> Result<Window> {
        if tiling >= family.len() {
            return invalid(format!("window: tiling phase {} out of range (τ = {})", tiling + 1, family.len()));
        }
        if extents.len() != model.dim() {
            return invalid("window: box dimension does not match the lattice");
        }
        let bx = Torus::new(extents.to_vec())?;
        let inside = |s: &Site| (0..extents.len()).all(|i| s.0[i] >= 0 && s.0[i] < extents[i]);
        let sub = family.get(tiling);
        let mut sites = BTreeSet::new();
        for a in bx.sites() {
            if sub.contains(a) {
                let fp = model.footprint_at(a);
                if fp.iter().all(inside) {
                    sites.extend(fp);
                }
            }
        }
        Window::new(model, family, sites, boundary).map(|mut w| {
            if tiles(model, sub, &w.sites) {
                w.tiling = tiling;
            }
            w
        })
    }

    /// The window `Λ = σ_x` for a single anchor `x` of `ℒ_tiling`.
    pub fn single_tile(model: &ModelSpec, family: &CoveringFamily, anchor: Site, boundary: Option<usize>) -> Result<Window> {
        let sites = model.footprint_at(anchor).into_iter().collect();
        Window::new(model, family, sites, boundary)
    }

    fn assemble(family: &CoveringFamily, sites: BTreeSet<Site>, tiling: usize, boundary: Option<usize>) -> Result<Window> {
        let boundary = match boundary {
            None => None,
            Some(phase) if phase < family.len() => Some(PhaseBoundary {
                phase,
                sublattice: family.get(phase).clone(),
            }),
            Some(phase) => {
                return invalid(format!("window: boundary phase {} out of range (τ = {})", phase + 1, family.len()))
            }
        };
        Ok(Window { sites, tiling, boundary })
    }

    pub fn with_boundary(&self, family: &CoveringFamily, boundary: Option<usize>) -> Result<Window> {
        Window::assemble(family, self.sites.clone(), self.tiling, boundary)
    }

    pub fn sites(&self) -> &BTreeSet<Site> {
        &self.sites
    }

    pub fn contains(&self, s: Site) -> bool {
        self.sites.contains(&s)
    }

    pub fn volume(&self) -> usize {
        self.sites.len()
    }

    /// Index of a covering that tiles the window.
    pub fn tiling(&self) -> usize {
        self.tiling
    }

    pub fn boundary(&self) -> Option<&PhaseBoundary> {
        self.boundary.as_ref()
    }

    /// Inclusive bounding box `(lo, hi)`.
    pub fn bounds(&self) -> (Site, Site) {
        bounding_box(self.sites.iter().copied())
    }
}

/// Region on which partition functions are evaluated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Torus(Torus),
    Window(Window),
}

impl Region {
    pub fn torus(extents: &[i32]) -> Result<Region> {
        Ok(Region::Torus(Torus::new(extents.to_vec())?))
    }

    pub fn volume(&self) -> usize {
        match self {
            Region::Torus(t) => t.volume(),
            Region::Window(w) => w.volume(),
        }
    }

    pub fn sites(&self) -> Vec<Site> {
        match self {
            Region::Torus(t) => t.sites(),
            Region::Window(w) => w.sites.iter().copied().collect(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Region::Torus(t) => format!(
                "torus {}",
                t.extents.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("x")
            ),
            Region::Window(w) => {
                let (lo, hi) = w.bounds();
                let b = match &w.boundary {
                    Some(pb) => format!("phase {}", pb.phase + 1),
                    None => "free".into(),
                };
                format!("window {:?}..{:?} ({} sites, {b})", lo, hi, w.volume())
            }
        }
    }
}

pub fn bounding_box(sites: impl IntoIterator<Item = Site>) -> (Site, Site) {
    let mut lo = [i32::MAX; MAX_DIM];
    let mut hi = [i32::MIN; MAX_DIM];
    let mut any = false;
    for s in sites {
        any = true;
        for i in 0..MAX_DIM {
            lo[i] = lo[i].min(s.0[i]);
            hi[i] = hi[i].max(s.0[i]);
        }
    }
    if !any {
        return (Site::ORIGIN, Site::ORIGIN);
    }
    (Site(lo), Site(hi))
}

/// Connected components of `sites` in the lattice graph, each sorted.
pub fn components(lattice: LatticeKind, sites: &BTreeSet<Site>) -> Vec<BTreeSet<Site>> {
    let mut seen: BTreeSet<Site> = BTreeSet::new();
    let mut out = Vec::new();
    let offsets = lattice.neighbor_offsets();
    for &start in sites {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(s) = queue.pop_front() {
            comp.insert(s);
            for &o in &offsets {
                let n = s + o;
                if sites.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        out.push(comp);
    }
    out
}

pub fn is_connected(lattice: LatticeKind, sites: &BTreeSet<Site>) -> bool {
    components(lattice, sites).len() <= 1
}

/// Whether the complement of a finite set is connected in the infinite
/// lattice (checked inside the bounding box dilated by one).
pub fn complement_connected(lattice: LatticeKind, sites: &BTreeSet<Site>) -> bool {
    let dim = lattice.dim();
    let (mut lo, mut hi) = bounding_box(sites.iter().copied());
    for i in 0..dim {
        lo.0[i] -= 1;
        hi.0[i] += 1;
    }
    let mut rest = BTreeSet::new();
    for s in box_sites(lo, hi, dim) {
        if !sites.contains(&s) {
            rest.insert(s);
        }
    }
    components(lattice, &rest).len() <= 1
}

/// All sites of the inclusive box `[lo, hi]`.
pub fn box_sites(lo: Site, hi: Site, dim: usize) -> Vec<Site> {
    let mut out = vec![lo];
    for axis in 0..dim {
        let mut next = Vec::new();
        for s in &out {
            for k in lo.0[axis]..=hi.0[axis] {
                let mut c = s.0;
                c[axis] = k;
                next.push(Site(c));
            }
        }
        out = next;
    }
    out
}

/// Whether `sites` is a disjoint union of footprints anchored on `sub`.
pub fn tiles(model: &ModelSpec, sub: &Sublattice, sites: &BTreeSet<Site>) -> bool {
    let mut covered = BTreeSet::new();
    let fp = model.footprint();
    for &s in sites {
        for &f in fp {
            let a = s - f;
            if sub.contains(a) {
                let cells = model.footprint_at(a);
                if cells.iter().all(|c| sites.contains(c)) {
                    covered.extend(cells);
                } else {
                    return false;
                }
            }
        }
    }
    covered.len() == sites.len()
}

/// Region specification as accepted by the command-line tools.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionFile {
    Torus(Vec<i32>),
    Window(WindowFile),
}

/// Window given either as a box tiled by covering `tiling` or as explicit
/// sites. Phase labels are 1-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowFile {
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_extents: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Vec<i32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiling: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<usize>,
}

impl RegionFile {
    pub fn build(&self, model: &ModelSpec, family: Option<&CoveringFamily>) -> Result<Region> {
        match self {
            RegionFile::Torus(ext) => {
                if ext.len() != model.dim() {
                    return invalid(format!("torus: expected {} extents", model.dim()));
                }
                Region::torus(ext)
            }
            RegionFile::Window(w) => {
                let family = family.ok_or_else(|| Error::Validation("window: model has no covering family".into()))?;
                let phase = |label: Option<usize>, field: &str| -> Result<Option<usize>> {
                    match label {
                        None => Ok(None),
                        Some(0) => invalid(format!("window.{field}: labels start at 1")),
                        Some(l) => Ok(Some(l - 1)),
                    }
                };
                let nu = phase(w.nu, "nu")?;
                match (&w.box_extents, &w.sites) {
                    (Some(ext), None) => {
                        let tiling = phase(w.tiling, "tiling")?.or(nu).unwrap_or(0);
                        Ok(Region::Window(Window::tiled_box(model, family, tiling, ext, nu)?))
                    }
                    (None, Some(list)) => {
                        let dim = model.dim();
                        let mut sites = BTreeSet::new();
                        for c in list {
                            if c.len() != dim {
                                return invalid(format!("window.sites: site {c:?} must have {dim} coordinates"));
                            }
                            sites.insert(Site::new(c));
                        }
                        Ok(Region::Window(Window::new(model, family, sites, nu)?))
                    }
                    _ => invalid("window: exactly one of 'box' and 'sites' is required"),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_reduction_and_sites() {
        let t = Torus::new(vec![3, 4]).unwrap();
        assert_eq!(t.reduce(Site::xy(-1, 9)), Site::xy(2, 1));
        let sites = t.sites();
        assert_eq!(sites.len(), 12);
        assert_eq!(sites[0], Site::xy(0, 0));
        assert_eq!(sites[1], Site::xy(1, 0));
        assert_eq!(sites[3], Site::xy(0, 1));
        assert!(Torus::new(vec![0, 3]).is_err());
    }

    #[test]
    fn triangular_torus_distance() {
        let t = Torus::new(vec![6, 6]).unwrap();
        let lat = LatticeKind::Triangular;
        assert_eq!(t.distance(lat, Site::xy(0, 0), Site::xy(5, 1)), 1);
        assert_eq!(t.distance(lat, Site::xy(0, 0), Site::xy(3, 3)), 3);
    }

    #[test]
    fn complement_connectivity() {
        let lat = LatticeKind::Hypercubic { dimension: 2 };
        let ring: BTreeSet<Site> = box_sites(Site::xy(0, 0), Site::xy(2, 2), 2)
            .into_iter()
            .filter(|&s| s != Site::xy(1, 1))
            .collect();
        assert!(is_connected(lat, &ring));
        assert!(!complement_connected(lat, &ring));
        let full: BTreeSet<Site> = box_sites(Site::xy(0, 0), Site::xy(2, 2), 2).into_iter().collect();
        assert!(complement_connected(lat, &full));
    }
}
