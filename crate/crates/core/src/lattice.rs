//! Lattice geometry, particle models and hard-core compatibility.
//!
//! Sites are small integer vectors. The triangular lattice uses axial
//! coordinates `(q, r)` with neighbor offsets `(±1,0), (0,±1), (1,-1), (-1,1)`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::region::Region;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// A lattice site (or offset vector). Coordinates beyond the lattice
/// dimension are always zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Site(pub [i32; MAX_DIM]);

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    pub fn new(coords: &[i32]) -> Site {
        assert!(coords.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Site(c)
    }

    pub fn xy(x: i32, y: i32) -> Site {
        Site([x, y, 0])
    }

    pub fn x(x: i32) -> Site {
        Site([x, 0, 0])
    }

    pub fn coords(&self, dim: usize) -> &[i32] {
        &self.0[..dim]
    }

    pub fn to_vec(self, dim: usize) -> Vec<i32> {
        self.0[..dim].to_vec()
    }

    pub fn is_origin(&self) -> bool {
        self.0 == [0; MAX_DIM]
    }

    /// Index of the axis used as sweep direction: the last one.
    pub fn sweep(&self, dim: usize) -> i32 {
        self.0[dim - 1]
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        if c != 0 {
            write!(f, "({a},{b},{c})")
        } else {
            write!(f, "({a},{b})")
        }
    }
}

impl Add for Site {
    type Output = Site;
    fn add(self, o: Site) -> Site {
        Site([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Site {
    type Output = Site;
    fn sub(self, o: Site) -> Site {
        Site([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<Site> for i32 {
    type Output = Site;
    fn mul(self, s: Site) -> Site {
        Site([self * s.0[0], self * s.0[1], self * s.0[2]])
    }
}

/// Integer linear map on site coordinates (rows act on column vectors).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct LinearMap(pub [[i32; MAX_DIM]; MAX_DIM]);

impl LinearMap {
    pub const IDENTITY: LinearMap = LinearMap([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);

    pub fn apply(&self, s: Site) -> Site {
        let m = &self.0;
        let mut out = [0; MAX_DIM];
        for (i, row) in m.iter().enumerate() {
            out[i] = row[0] * s.0[0] + row[1] * s.0[1] + row[2] * s.0[2];
        }
        Site(out)
    }

    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        let mut out = [[0; MAX_DIM]; MAX_DIM];
        for i in 0..MAX_DIM {
            for j in 0..MAX_DIM {
                out[i][j] = (0..MAX_DIM).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        LinearMap(out)
    }
}

/// The underlying infinite lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatticeKind {
    Hypercubic { dimension: usize },
    Triangular,
}

const TRIANGULAR_NEIGHBORS: [[i32; 2]; 6] = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, -1], [-1, 1]];

impl LatticeKind {
    pub fn dim(&self) -> usize {
        match self {
            LatticeKind::Hypercubic { dimension } => *dimension,
            LatticeKind::Triangular => 2,
        }
    }

    /// Coordination number χ.
    pub fn coordination(&self) -> usize {
        match self {
            LatticeKind::Hypercubic { dimension } => 2 * dimension,
            LatticeKind::Triangular => 6,
        }
    }

    pub fn neighbor_offsets(&self) -> Vec<Site> {
        match self {
            LatticeKind::Hypercubic { dimension } => {
                let mut out = Vec::with_capacity(2 * dimension);
                for axis in 0..*dimension {
                    let mut c = [0; MAX_DIM];
                    c[axis] = 1;
                    out.push(Site(c));
                    c[axis] = -1;
                    out.push(Site(c));
                }
                out
            }
            LatticeKind::Triangular => TRIANGULAR_NEIGHBORS.iter().map(|&[q, r]| Site::xy(q, r)).collect(),
        }
    }

    pub fn neighbors(&self, s: Site) -> impl Iterator<Item = Site> {
        self.neighbor_offsets().into_iter().map(move |o| s + o)
    }

    /// Graph distance between two sites of the infinite lattice.
    pub fn norm(&self, d: Site) -> u64 {
        match self {
            LatticeKind::Hypercubic { dimension } => {
                d.0[..*dimension].iter().map(|c| c.unsigned_abs() as u64).sum()
            }
            LatticeKind::Triangular => {
                let (q, r) = (d.0[0] as i64, d.0[1] as i64);
                ((q.abs() + r.abs() + (q + r).abs()) / 2) as u64
            }
        }
    }

    pub fn distance(&self, a: Site, b: Site) -> u64 {
        self.norm(a - b)
    }

    /// Linear point symmetries of the lattice graph (fixing the origin).
    pub fn point_group(&self) -> Vec<LinearMap> {
        match self {
            LatticeKind::Hypercubic { dimension } => {
                let d = *dimension;
                let mut out = Vec::new();
                for perm in permutations(d) {
                    for signs in 0..(1u32 << d) {
                        let mut m = [[0; MAX_DIM]; MAX_DIM];
                        for (i, &p) in perm.iter().enumerate() {
                            m[i][p] = if signs & (1 << i) != 0 { -1 } else { 1 };
                        }
                        for (k, row) in m.iter_mut().enumerate().skip(d) {
                            row[k] = 1;
                        }
                        out.push(LinearMap(m));
                    }
                }
                out
            }
            LatticeKind::Triangular => {
                let rot = LinearMap([[0, -1, 0], [1, 1, 0], [0, 0, 1]]);
                let refl = LinearMap([[0, 1, 0], [1, 0, 0], [0, 0, 1]]);
                let mut group: BTreeSet<LinearMap> = BTreeSet::new();
                let mut frontier = vec![LinearMap::IDENTITY];
                while let Some(g) = frontier.pop() {
                    if group.insert(g) {
                        frontier.push(rot.compose(&g));
                        frontier.push(refl.compose(&g));
                    }
                }
                group.into_iter().collect()
            }
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// A hard-core particle model: lattice, footprint σ and exclusion offsets.
///
/// The exclusion set lists the differences `x - x'` for which two particles
/// cannot coexist. It always contains the footprint difference set and may
/// be strictly larger (hyperdiamonds exclude nearest neighbors whose lattice
/// footprints are disjoint).
#[derive(Clone, Debug)]
pub struct ModelSpec {
    name: String,
    lattice: LatticeKind,
    footprint: Vec<Site>,
    exclusion: Vec<Site>,
    exclusion_set: HashSet<Site>,
    mesh: u32,
}

impl PartialEq for ModelSpec {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice
            && self.footprint == other.footprint
            && self.exclusion == other.exclusion
            && self.mesh == other.mesh
    }
}

/// JSON schema of a model definition file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub lattice: LatticeFile,
    pub footprint: Vec<Vec<i32>>,
    pub exclusion: Vec<Vec<i32>>,
    #[serde(default = "default_mesh")]
    pub mesh: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeFile {
    pub kind: String,
    #[serde(default)]
    pub dimension: Option<usize>,
}

fn default_mesh() -> u32 {
    1
}

pub const BUILTIN_MODELS: &[&str] = &[
    "hyperdiamond-2d",
    "hyperdiamond-3d",
    "cross",
    "hexagon",
    "poly-a",
    "poly-b",
    "poly-c",
    "poly-d",
    "monomer-dimer",
    "domino",
];

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        lattice: LatticeKind,
        footprint: Vec<Site>,
        exclusion: Vec<Site>,
        mesh: u32,
    ) -> Result<ModelSpec> {
        let name = name.into();
        let dim = lattice.dim();
        if dim == 0 || dim > MAX_DIM {
            return invalid(format!("lattice.dimension: must be between 1 and {MAX_DIM}"));
        }
        if mesh == 0 {
            return invalid("mesh: must be a positive integer");
        }
        if footprint.is_empty() {
            return invalid("footprint: must not be empty");
        }
        for s in footprint.iter().chain(exclusion.iter()) {
            if s.0[dim..].iter().any(|&c| c != 0) {
                return invalid(format!("footprint/exclusion: offset {s:?} has more than {dim} coordinates"));
            }
        }
        let footprint: Vec<Site> = footprint.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mut exclusion: BTreeSet<Site> = exclusion.into_iter().collect();
        if !exclusion.contains(&Site::ORIGIN) {
            return invalid("exclusion: must contain the zero vector");
        }
        for e in &exclusion {
            if !exclusion.contains(&-*e) {
                return invalid(format!("exclusion: not closed under negation ({e:?} present, {:?} missing)", -*e));
            }
        }
        for a in &footprint {
            for b in &footprint {
                if !exclusion.contains(&(*a - *b)) {
                    return invalid(format!(
                        "exclusion: footprint difference {:?} missing (overlapping supports must be excluded)",
                        *a - *b
                    ));
                }
            }
        }
        let exclusion: Vec<Site> = std::mem::take(&mut exclusion).into_iter().collect();
        let exclusion_set = exclusion.iter().copied().collect();
        Ok(ModelSpec {
            name,
            lattice,
            footprint,
            exclusion,
            exclusion_set,
            mesh,
        })
    }

    /// Model whose exclusion set is exactly the footprint difference set.
    pub fn polyomino(name: impl Into<String>, lattice: LatticeKind, footprint: Vec<Site>) -> Result<ModelSpec> {
        let ex = difference_set(&footprint);
        ModelSpec::new(name, lattice, footprint, ex, 1)
    }

    pub fn builtin(name: &str) -> Result<ModelSpec> {
        let sq = LatticeKind::Hypercubic { dimension: 2 };
        let cells = |v: &[(i32, i32)]| v.iter().map(|&(x, y)| Site::xy(x, y)).collect::<Vec<_>>();
        match name {
            "hyperdiamond-2d" => hyperdiamond(2),
            "hyperdiamond-3d" => hyperdiamond(3),
            "cross" => ModelSpec::polyomino("cross", sq, cells(&[(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)])),
            "hexagon" => {
                let fp = cells(&[(0, 0), (1, 0), (0, 1)]);
                let mut ex = vec![Site::ORIGIN];
                ex.extend(LatticeKind::Triangular.neighbor_offsets());
                ModelSpec::new("hexagon", LatticeKind::Triangular, fp, ex, 1)
            }
            // Polyominoes with a finite, rigid family of perfect coverings.
            "poly-a" => ModelSpec::polyomino("poly-a", sq, cells(&POLY_A)),
            "poly-b" => ModelSpec::polyomino("poly-b", sq, cells(&POLY_B)),
            "poly-c" => ModelSpec::polyomino("poly-c", sq, cells(&POLY_C)),
            "poly-d" => ModelSpec::polyomino("poly-d", sq, cells(&POLY_D)),
            "monomer-dimer" => ModelSpec::new(
                "monomer-dimer",
                LatticeKind::Hypercubic { dimension: 1 },
                vec![Site::x(0), Site::x(1)],
                vec![Site::x(-1), Site::ORIGIN, Site::x(1)],
                1,
            ),
            "domino" => ModelSpec::polyomino("domino", sq, cells(&[(0, 0), (1, 0)])),
            _ => invalid(format!("unknown built-in model '{name}' (known: {})", BUILTIN_MODELS.join(", "))),
        }
    }

    /// Built-in name or path to a JSON model file.
    pub fn load(name_or_path: &str) -> Result<ModelSpec> {
        if BUILTIN_MODELS.contains(&name_or_path) {
            return ModelSpec::builtin(name_or_path);
        }
        let text = std::fs::read_to_string(name_or_path)
            .map_err(|e| Error::Validation(format!("model '{name_or_path}': {e}")))?;
        ModelSpec::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<ModelSpec> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("model file: {e}")))?;
        ModelSpec::from_file(&file)
    }

    pub fn from_file(file: &ModelFile) -> Result<ModelSpec> {
        let lattice = match file.lattice.kind.as_str() {
            "hypercubic" => LatticeKind::Hypercubic {
                dimension: file
                    .lattice
                    .dimension
                    .ok_or_else(|| Error::Validation("lattice.dimension: required for hypercubic".into()))?,
            },
            "triangular" => {
                if let Some(d) = file.lattice.dimension {
                    if d != 2 {
                        return invalid("lattice.dimension: triangular lattice is 2-dimensional");
                    }
                }
                LatticeKind::Triangular
            }
            other => return invalid(format!("lattice.kind: unknown kind '{other}'")),
        };
        let dim = lattice.dim();
        let parse = |field: &str, v: &[Vec<i32>]| -> Result<Vec<Site>> {
            v.iter()
                .map(|c| {
                    if c.len() != dim {
                        invalid(format!("{field}: offset {c:?} must have {dim} coordinates"))
                    } else {
                        Ok(Site::new(c))
                    }
                })
                .collect()
        };
        let fp = parse("footprint", &file.footprint)?;
        let ex = parse("exclusion", &file.exclusion)?;
        let model = ModelSpec::new(file.name.clone(), lattice, fp, ex, 1)?;
        if file.mesh == 0 {
            return invalid("mesh: must be a positive integer");
        }
        if file.mesh > 1 {
            return refine_mesh(&model, file.mesh);
        }
        Ok(model)
    }

    pub fn to_file(&self) -> ModelFile {
        let dim = self.dim();
        ModelFile {
            name: self.name.clone(),
            lattice: match self.lattice {
                LatticeKind::Hypercubic { dimension } => LatticeFile {
                    kind: "hypercubic".into(),
                    dimension: Some(dimension),
                },
                LatticeKind::Triangular => LatticeFile {
                    kind: "triangular".into(),
                    dimension: Some(2),
                },
            },
            footprint: self.footprint.iter().map(|s| s.to_vec(dim)).collect(),
            exclusion: self.exclusion.iter().map(|s| s.to_vec(dim)).collect(),
            mesh: self.mesh,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lattice(&self) -> LatticeKind {
        self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn footprint(&self) -> &[Site] {
        &self.footprint
    }

    pub fn exclusion(&self) -> &[Site] {
        &self.exclusion
    }

    pub fn mesh(&self) -> u32 {
        self.mesh
    }

    /// Number of sites covered by one particle, 1/ρ_m.
    pub fn volume(&self) -> usize {
        self.footprint.len()
    }

    /// σ_x: sites covered by a particle anchored at `x`.
    pub fn footprint_at(&self, x: Site) -> Vec<Site> {
        self.footprint.iter().map(|&s| x + s).collect()
    }

    pub fn excludes(&self, diff: Site) -> bool {
        self.exclusion_set.contains(&diff)
    }

    /// φ(x, x′) on the infinite lattice; false for `x == x′`.
    pub fn compatible(&self, x: Site, y: Site) -> bool {
        x != y && !self.excludes(x - y)
    }

    /// φ(x, x′) with coordinates interpreted in `region` (torus reduction).
    pub fn compatible_in(&self, region: &Region, x: Site, y: Site) -> bool {
        match region {
            Region::Torus(t) => {
                let (x, y) = (t.reduce(x), t.reduce(y));
                x != y && !self.exclusion.iter().any(|&e| t.reduce(y + e) == x)
            }
            Region::Window(_) => self.compatible(x, y),
        }
    }

    pub fn is_configuration(&self, xs: &[Site]) -> bool {
        xs.iter().enumerate().all(|(i, &a)| xs[i + 1..].iter().all(|&b| self.compatible(a, b)))
    }

    /// Largest graph distance between two footprint sites.
    pub fn footprint_diameter(&self) -> u64 {
        let mut d = 0;
        for &a in &self.footprint {
            for &b in &self.footprint {
                d = d.max(self.lattice.distance(a, b));
            }
        }
        d
    }

    /// Graph distance between two site sets (infinite lattice).
    pub fn set_distance(&self, a: &[Site], b: &[Site]) -> u64 {
        let mut best = u64::MAX;
        for &x in a {
            for &y in b {
                best = best.min(self.lattice.distance(x, y));
            }
        }
        best
    }

    /// Largest number of sites covered by particles that neighbor one site
    /// (𝒩), found by exhaustive search over compatible placements of the
    /// particles whose footprint lies at distance exactly 1 from the origin.
    pub fn neighbor_volume_bound(&self) -> usize {
        let lat = self.lattice;
        let mut candidates: Vec<Site> = Vec::new();
        for n in lat.neighbors(Site::ORIGIN) {
            for &s in &self.footprint {
                let a = n - s;
                let fp = self.footprint_at(a);
                if !fp.contains(&Site::ORIGIN) && !candidates.contains(&a) {
                    candidates.push(a);
                }
            }
        }
        candidates.sort();
        fn best(model: &ModelSpec, cands: &[Site], chosen: &mut Vec<Site>, i: usize) -> usize {
            if i == cands.len() {
                return chosen.len() * model.volume();
            }
            let mut b = best(model, cands, chosen, i + 1);
            if chosen.iter().all(|&c| model.compatible(c, cands[i])) {
                chosen.push(cands[i]);
                b = b.max(best(model, cands, chosen, i + 1));
                chosen.pop();
            }
            b
        }
        best(self, &candidates, &mut Vec::new(), 0)
    }

    /// Linear point symmetries `g` of the lattice for which `g(σ)` is a
    /// translate `σ + c` and the exclusion set is invariant. Returns `(g, c)`;
    /// the induced anchor map is `x ↦ g x + c`.
    pub fn symmetries(&self) -> Vec<(LinearMap, Site)> {
        let fp: BTreeSet<Site> = self.footprint.iter().copied().collect();
        let mut out = Vec::new();
        for g in self.lattice.point_group() {
            if !self.exclusion.iter().all(|&e| self.exclusion_set.contains(&g.apply(e))) {
                continue;
            }
            let img: Vec<Site> = self.footprint.iter().map(|&s| g.apply(s)).collect();
            let min_img = *img.iter().min().unwrap();
            let min_fp = *fp.iter().next().unwrap();
            let c = min_img - min_fp;
            if img.iter().all(|&s| fp.contains(&(s - c))) {
                // g(σ) = σ + c  ⇒  anchor image is g x + c.
                out.push((g, c));
            }
        }
        out
    }
}

pub fn difference_set(fp: &[Site]) -> Vec<Site> {
    let mut set = BTreeSet::new();
    for &a in fp {
        for &b in fp {
            set.insert(a - b);
        }
    }
    set.into_iter().collect()
}

fn hyperdiamond(d: usize) -> Result<ModelSpec> {
    let lattice = LatticeKind::Hypercubic { dimension: d };
    let mut top = [0; MAX_DIM];
    top[d - 1] = 1;
    let mut ex = vec![Site::ORIGIN];
    ex.extend(lattice.neighbor_offsets());
    ModelSpec::new(format!("hyperdiamond-{d}d"), lattice, vec![Site::ORIGIN, Site(top)], ex, 1)
}

// Cell lists of the extra polyomino models: T-tetromino, P-pentomino,
// Y-pentomino and a P-shaped hexomino. Each tiles the plane by translates
// in a single rigid way.
const POLY_A: [(i32, i32); 4] = [(0, 0), (1, 0), (2, 0), (1, 1)];
const POLY_B: [(i32, i32); 5] = [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2)];
const POLY_C: [(i32, i32); 5] = [(0, 0), (1, 0), (2, 0), (3, 0), (1, 1)];
const POLY_D: [(i32, i32); 6] = [(0, 0), (1, 0), (2, 0), (3, 0), (2, 1), (3, 1)];

/// m-fold subdivision of a polyomino model on a hypercubic lattice.
pub fn refine_mesh(model: &ModelSpec, m: u32) -> Result<ModelSpec> {
    if m == 0 {
        return invalid("mesh refinement factor must be positive");
    }
    if m == 1 {
        return Ok(model.clone());
    }
    let LatticeKind::Hypercubic { dimension: d } = model.lattice else {
        return invalid("mesh refinement requires a hypercubic lattice");
    };
    let m = m as i32;
    let mut cell_offsets = vec![Site::ORIGIN];
    for axis in 0..d {
        let mut next = Vec::new();
        for base in &cell_offsets {
            for k in 0..m {
                let mut c = base.0;
                c[axis] = k;
                next.push(Site(c));
            }
        }
        cell_offsets = next;
    }
    let mut fp = Vec::new();
    for &c in &model.footprint {
        for &u in &cell_offsets {
            fp.push(m * c + u);
        }
    }
    let mut ex: BTreeSet<Site> = difference_set(&fp).into_iter().collect();
    ex.extend(model.exclusion.iter().map(|&e| m * e));
    ModelSpec::new(
        format!("{}-mesh{}", model.name, m),
        model.lattice,
        fp,
        ex.into_iter().collect(),
        model.mesh * m as u32,
    )
}

/// Graph distance between two sites of `region` (torus coordinates wrap).
pub fn graph_distance(lattice: LatticeKind, a: Site, b: Site, region: &Region) -> Result<u64> {
    match region {
        Region::Torus(t) => Ok(t.distance(lattice, a, b)),
        Region::Window(w) => {
            if !w.contains(a) || !w.contains(b) {
                return invalid(format!("site {a:?} or {b:?} lies outside the window"));
            }
            Ok(lattice.distance(a, b))
        }
    }
}

/// ℰ: region sites covered by no particle of `xs`.
pub fn empty_sites(model: &ModelSpec, region: &Region, xs: &[Site]) -> Result<BTreeSet<Site>> {
    for (i, &a) in xs.iter().enumerate() {
        for &b in &xs[i + 1..] {
            if !model.compatible_in(region, a, b) {
                return invalid(format!("configuration has incompatible particles at {a:?} and {b:?}"));
            }
        }
    }
    let mut empty: BTreeSet<Site> = region.sites().into_iter().collect();
    for &x in xs {
        for s in model.footprint_at(x) {
            let s = match region {
                Region::Torus(t) => t.reduce(s),
                Region::Window(_) => s,
            };
            empty.remove(&s);
        }
    }
    Ok(empty)
}
