//! Triangulations of sampled parameter points.
//!
//! For `k = 1` the sorted points are joined into consecutive segments. For
//! `k ∈ {2, 3}` a Delaunay triangulation is built by incremental
//! Bowyer–Watson insertion. The convex hull is closed off by "ghost" cells
//! that join every hull facet to a vertex at infinity, so the result covers
//! exactly the hull of the input and every facet is shared by at most two
//! simplices. Orientation and in-sphere tests use exact adaptive predicates.
//!
//! Degenerate configurations (cocircular grid squares, collinear hull
//! points) are broken by a seeded jitter of relative size `1e-9`. The jitter
//! only decides the combinatorics; barycentric coordinates are always
//! computed from the original coordinates. Simplices that are flat in the
//! original coordinates (collinear hull points bent outward by the jitter)
//! are removed after construction.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust::{Coord, Coord3D};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist2, dot, Matrix};
use crate::problems::Polyhedron;

/// Membership tolerance on barycentric weights.
pub const BARYCENTRIC_TOL: f64 = 1e-9;
/// Minimum `|det|` of a simplex's edge matrix on jittered coordinates,
/// relative to `scale^k`.
pub const MIN_SIMPLEX_DET: f64 = 1e-12;
pub const MAX_DIMENSION: usize = 3;
pub const JITTER_RELATIVE: f64 = 1e-9;
/// Simplices with `|det| < FLAT_RELATIVE · scale^k` in original coordinates
/// are treated as flat.
const FLAT_RELATIVE: f64 = 1e-13;
const JITTER_RETRIES: u64 = 5;
const INF: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Neighbor {
    Simplex(usize),
    Boundary,
}

/// Barycentric weights of a point inside simplex `simplex_index`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycentricCoords {
    pub simplex_index: usize,
    pub lambdas: Vec<f64>,
}

/// Affine map from a point to the barycentric weights of one simplex,
/// built from the original (unjittered) coordinates.
#[derive(Clone, Debug)]
struct BaryTransform {
    origin: Vec<f64>,
    inverse: DMatrix<f64>,
}

impl BaryTransform {
    fn lambdas(&self, theta: &[f64]) -> Vec<f64> {
        let k = self.origin.len();
        let d = DVector::from_fn(k, |i, _| theta[i] - self.origin[i]);
        let head = &self.inverse * d;
        let mut out: Vec<f64> = head.iter().copied().collect();
        out.push(1.0 - head.sum());
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TriangulationFile {
    k: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    seed: u64,
}

/// A facet-to-facet simplicial subdivision of the convex hull of a point set.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "TriangulationFile", into = "TriangulationFile")]
pub struct Triangulation {
    k: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    neighbors: Vec<Vec<Neighbor>>,
    seed: u64,
    transforms: Vec<Option<BaryTransform>>,
    jittered: Option<Vec<Vec<f64>>>,
    scale: f64,
}

impl From<Triangulation> for TriangulationFile {
    fn from(t: Triangulation) -> Self {
        TriangulationFile {
            k: t.k,
            vertices: t.vertices,
            simplices: t.simplices,
            seed: t.seed,
        }
    }
}

impl TryFrom<TriangulationFile> for Triangulation {
    type Error = Error;

    fn try_from(f: TriangulationFile) -> Result<Self> {
        if f.k == 0 || f.k > MAX_DIMENSION {
            return Err(Error::UnsupportedDimension(f.k));
        }
        for v in &f.vertices {
            check_dim("vertex", f.k, v.len())?;
        }
        for s in &f.simplices {
            check_dim("simplex", f.k + 1, s.len())?;
            if let Some(&bad) = s.iter().find(|&&i| i >= f.vertices.len()) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    len: f.vertices.len(),
                });
            }
        }
        Ok(Triangulation::assemble(
            f.k,
            f.vertices,
            f.simplices,
            f.seed,
            None,
        ))
    }
}

/// Structural checks of a triangulation.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangulationCheck {
    /// Every simplex has `k + 1` distinct vertices.
    pub cardinality_ok: bool,
    /// Every facet belongs to one (hull) or two simplices, and the neighbor
    /// table agrees.
    pub facet_pairing_ok: bool,
    /// Smallest `|det|` of an edge matrix on jittered coordinates divided by `scale^k`.
    pub min_relative_det: f64,
}

impl TriangulationCheck {
    pub fn passed(&self) -> bool {
        self.cardinality_ok && self.facet_pairing_ok && self.min_relative_det >= MIN_SIMPLEX_DET
    }
}

fn bounding_scale(points: &[Vec<f64>], k: usize) -> f64 {
    let mut s: f64 = 0.0;
    for d in 0..k {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[d]), hi.max(p[d]))
            });
        s = s.max(hi - lo);
    }
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn edge_matrix(pts: &[Vec<f64>], simplex: &[usize], k: usize) -> DMatrix<f64> {
    let o = &pts[simplex[k]];
    // column l is vertex l minus the last vertex
    DMatrix::from_fn(k, k, |r, c| pts[simplex[c]][r] - o[r])
}

impl Triangulation {
    /// Triangulates `points`.
    pub fn build(points: &[Vec<f64>], seed: u64) -> Result<Self> {
        let k = points
            .first()
            .map(|p| p.len())
            .ok_or(Error::DegenerateInput)?;
        if k == 0 || k > MAX_DIMENSION {
            return Err(Error::UnsupportedDimension(k));
        }
        for p in points {
            check_dim("point", k, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("points must be finite".into()));
            }
        }
        if points.len() < k + 1 || affine_rank_deficient(points, k) {
            return Err(Error::DegenerateInput);
        }
        if k == 1 {
            return Self::build_1d(points, seed);
        }
        let scale = bounding_scale(points, k);
        for attempt in 0..JITTER_RETRIES {
            let jittered = jitter(points, seed, attempt, scale);
            let Some(cells) = bowyer_watson(&jittered, k) else {
                continue;
            };
            // Collinear (coplanar) hull points become slightly convex under
            // jitter and leave zero-volume slivers along the hull; drop them.
            let flat = FLAT_RELATIVE * scale.powi(k as i32);
            let mut simplices: Vec<Vec<usize>> = cells
                .into_iter()
                .filter(|s| edge_matrix(points, s, k).determinant().abs() >= flat)
                .collect();
            simplices.sort_by_key(|s| {
                let mut key = s.clone();
                key.sort_unstable();
                key
            });
            let t = Self::assemble(k, points.to_vec(), simplices, seed, Some(jittered));
            if t.verify().passed() {
                return Ok(t);
            }
            log::debug!("triangulation attempt {attempt} failed verification; re-jittering");
        }
        Err(Error::DegenerateInput)
    }

    fn build_1d(points: &[Vec<f64>], seed: u64) -> Result<Self> {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
        let mut simplices = Vec::new();
        let mut left = order[0];
        for &i in &order[1..] {
            if points[i][0] > points[left][0] {
                simplices.push(vec![left, i]);
                left = i;
            }
        }
        if simplices.is_empty() {
            return Err(Error::DegenerateInput);
        }
        Ok(Self::assemble(1, points.to_vec(), simplices, seed, None))
    }

    fn assemble(
        k: usize,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<Vec<usize>>,
        seed: u64,
        jittered: Option<Vec<Vec<f64>>>,
    ) -> Self {
        let scale = if vertices.is_empty() {
            1.0
        } else {
            bounding_scale(&vertices, k)
        };
        let neighbors = facet_neighbors(&simplices, k);
        let transforms = simplices
            .iter()
            .map(|s| {
                let m = edge_matrix(&vertices, s, k);
                if m.determinant().abs() < FLAT_RELATIVE * scale.powi(k as i32) {
                    return None;
                }
                m.try_inverse().map(|inverse| BaryTransform {
                    origin: vertices[s[k]].clone(),
                    inverse,
                })
            })
            .collect();
        Triangulation {
            k,
            vertices,
            simplices,
            neighbors,
            seed,
            transforms,
            jittered,
            scale,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// Neighbor across the facet opposite each vertex of simplex `j`.
    pub fn neighbors(&self, j: usize) -> &[Neighbor] {
        &self.neighbors[j]
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Coordinates used for the combinatorial construction (jittered), when
    /// they differ from the originals.
    pub fn combinatorial_vertices(&self) -> &[Vec<f64>] {
        self.jittered.as_deref().unwrap_or(&self.vertices)
    }

    /// Barycentric weights of `theta` with respect to simplex `j`, or `None`
    /// if the simplex is flat in the original coordinates.
    pub fn barycentric_in(&self, j: usize, theta: &[f64]) -> Result<Option<Vec<f64>>> {
        check_dim("theta", self.k, theta.len())?;
        let t = self.transforms.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            len: self.simplices.len(),
        })?;
        Ok(t.as_ref().map(|t| t.lambdas(theta)))
    }

    fn contains(lambdas: &[f64]) -> bool {
        lambdas.iter().all(|&l| l >= -BARYCENTRIC_TOL)
    }

    /// Finds the lowest-index simplex containing `theta`.
    pub fn locate(&self, theta: &[f64]) -> Result<BarycentricCoords> {
        Locator::default().locate(self, theta)
    }

    /// Diameter of simplex `j` (its longest edge).
    pub fn diameter(&self, j: usize) -> Result<f64> {
        let s = self.simplices.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            len: self.simplices.len(),
        })?;
        let mut d: f64 = 0.0;
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                d = d.max(dist2(&self.vertices[s[a]], &self.vertices[s[b]]));
            }
        }
        Ok(d)
    }

    /// Largest simplex diameter.
    pub fn mesh_norm(&self) -> f64 {
        (0..self.simplices.len())
            .map(|j| self.diameter(j).unwrap())
            .fold(0.0, f64::max)
    }

    pub fn verify(&self) -> TriangulationCheck {
        let k = self.k;
        let cardinality_ok = self.simplices.iter().all(|s| {
            let mut v = s.clone();
            v.sort_unstable();
            v.dedup();
            v.len() == k + 1
        });
        let mut facets: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        for (j, s) in self.simplices.iter().enumerate() {
            for i in 0..=k {
                facets.entry(facet_key(s, i)).or_default().push((j, i));
            }
        }
        let facet_pairing_ok = facets.values().all(|owners| match owners.as_slice() {
            [(j, i)] => self.neighbors[*j][*i] == Neighbor::Boundary,
            [(j1, i1), (j2, i2)] => {
                self.neighbors[*j1][*i1] == Neighbor::Simplex(*j2)
                    && self.neighbors[*j2][*i2] == Neighbor::Simplex(*j1)
            }
            _ => false,
        });
        let pts = self.combinatorial_vertices();
        let norm = self.scale.powi(k as i32);
        let min_relative_det = self
            .simplices
            .iter()
            .map(|s| edge_matrix(pts, s, k).determinant().abs() / norm)
            .fold(f64::INFINITY, f64::min);
        TriangulationCheck {
            cardinality_ok,
            facet_pairing_ok,
            min_relative_det,
        }
    }

    /// Locates `samples` random convex combinations of vertices and returns
    /// how many failed.
    pub fn coverage_failures(&self, samples: usize, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.vertices.len();
        let mut locator = Locator::default();
        let mut failures = 0;
        for _ in 0..samples {
            let picks = rand::seq::index::sample(&mut rng, m, (self.k + 1).min(m));
            let w: Vec<f64> = picks
                .iter()
                .map(|_| -rng.random_range(f64::EPSILON..1.0f64).ln())
                .collect();
            let total: f64 = w.iter().sum();
            let mut theta = vec![0.0; self.k];
            for (i, wi) in picks.iter().zip(&w) {
                for (t, v) in theta.iter_mut().zip(&self.vertices[i]) {
                    *t += wi / total * v;
                }
            }
            if locator.locate(self, &theta).is_err() {
                failures += 1;
            }
        }
        failures
    }

    /// Facets shared with no other simplex.
    pub fn boundary_facets(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for (j, s) in self.simplices.iter().enumerate() {
            for i in 0..=self.k {
                if self.neighbors[j][i] == Neighbor::Boundary {
                    out.push(facet_key(s, i));
                }
            }
        }
        out
    }

    /// The hull as `{θ : normal·θ ≤ offset}` built from boundary facets.
    pub fn hull_halfspaces(&self) -> Polyhedron {
        let k = self.k;
        let m = self.vertices.len() as f64;
        let centroid: Vec<f64> = (0..k)
            .map(|d| self.vertices.iter().map(|v| v[d]).sum::<f64>() / m)
            .collect();
        let mut rows: Matrix = Vec::new();
        let mut rhs = Vec::new();
        for facet in self.boundary_facets() {
            let p: Vec<&Vec<f64>> = facet.iter().map(|&i| &self.vertices[i]).collect();
            let normal = match k {
                1 => vec![1.0],
                2 => vec![-(p[1][1] - p[0][1]), p[1][0] - p[0][0]],
                _ => {
                    let u: Vec<f64> = (0..3).map(|d| p[1][d] - p[0][d]).collect();
                    let v: Vec<f64> = (0..3).map(|d| p[2][d] - p[0][d]).collect();
                    vec![
                        u[1] * v[2] - u[2] * v[1],
                        u[2] * v[0] - u[0] * v[2],
                        u[0] * v[1] - u[1] * v[0],
                    ]
                }
            };
            let len = crate::linalg::norm2(&normal);
            if len < 1e-14 * self.scale.powi(k as i32 - 1) {
                continue;
            }
            let mut normal: Vec<f64> = normal.iter().map(|v| v / len).collect();
            let mut offset = dot(&normal, p[0]);
            if dot(&normal, &centroid) > offset {
                normal.iter_mut().for_each(|v| *v = -*v);
                offset = -offset;
            }
            rows.push(normal);
            rhs.push(offset);
        }
        Polyhedron { rows, rhs }
    }
}

/// Per-caller walk state; remembers the last simplex hit.
#[derive(Clone, Debug, Default)]
pub struct Locator {
    last: Option<usize>,
}

impl Locator {
    pub fn locate(&mut self, tri: &Triangulation, theta: &[f64]) -> Result<BarycentricCoords> {
        check_dim("theta", tri.k, theta.len())?;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideHull);
        }
        let found = self
            .walk(tri, theta)
            .or_else(|| scan(tri, theta, tri.len()));
        let Some((j, lambdas)) = found else {
            return Err(Error::OutsideHull);
        };
        self.last = Some(j);
        // on a shared face the lowest containing index wins
        let min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= BARYCENTRIC_TOL {
            if let Some((jl, ll)) = scan(tri, theta, j) {
                return Ok(BarycentricCoords {
                    simplex_index: jl,
                    lambdas: ll,
                });
            }
        }
        Ok(BarycentricCoords {
            simplex_index: j,
            lambdas,
        })
    }

    fn walk(&self, tri: &Triangulation, theta: &[f64]) -> Option<(usize, Vec<f64>)> {
        let mut j = self.last.filter(|&j| j < tri.len()).unwrap_or(0);
        for _ in 0..tri.len() {
            let lambdas = tri.transforms[j].as_ref()?.lambdas(theta);
            let (imin, lmin) =
                lambdas
                    .iter()
                    .enumerate()
                    .fold(
                        (0, f64::INFINITY),
                        |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc },
                    );
            if lmin >= -BARYCENTRIC_TOL {
                return Some((j, lambdas));
            }
            match tri.neighbors[j][imin] {
                Neighbor::Simplex(next) => j = next,
                Neighbor::Boundary => return None,
            }
        }
        None
    }
}

fn scan(tri: &Triangulation, theta: &[f64], upto: usize) -> Option<(usize, Vec<f64>)> {
    (0..upto).find_map(|j| {
        let l = tri.transforms[j].as_ref()?.lambdas(theta);
        Triangulation::contains(&l).then_some((j, l))
    })
}

fn facet_key(simplex: &[usize], skip: usize) -> Vec<usize> {
    let mut key: Vec<usize> = simplex
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, &v)| v)
        .collect();
    key.sort_unstable();
    key
}

fn facet_neighbors(simplices: &[Vec<usize>], k: usize) -> Vec<Vec<Neighbor>> {
    let mut owners: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (j, s) in simplices.iter().enumerate() {
        for i in 0..=k {
            owners.entry(facet_key(s, i)).or_default().push(j);
        }
    }
    simplices
        .iter()
        .enumerate()
        .map(|(j, s)| {
            (0..=k)
                .map(|i| {
                    owners[&facet_key(s, i)]
                        .iter()
                        .find(|&&o| o != j)
                        .map_or(Neighbor::Boundary, |&o| Neighbor::Simplex(o))
                })
                .collect()
        })
        .collect()
}

fn affine_rank_deficient(points: &[Vec<f64>], k: usize) -> bool {
    let o = &points[0];
    let m = DMatrix::from_fn(points.len() - 1, k, |r, c| points[r + 1][c] - o[c]);
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    sv.len() < k || max == 0.0 || min / max < 1e-10
}

fn jitter(points: &[Vec<f64>], seed: u64, attempt: u64, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ attempt);
    let amp = JITTER_RELATIVE * scale;
    points
        .iter()
        .map(|p| {
            p.iter()
                .map(|v| v + amp * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect()
}

fn c2(p: &[f64]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn c3(p: &[f64]) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

/// Incremental Delaunay construction with ghost cells.
struct Delaunay<'a> {
    pts: &'a [Vec<f64>],
    k: usize,
    cells: Vec<Vec<usize>>,
    nbr: Vec<Vec<usize>>,
    alive: Vec<bool>,
}

impl<'a> Delaunay<'a> {
    fn orient(&self, v: &[usize], replace: Option<(usize, usize)>) -> f64 {
        let get = |i: usize| -> &[f64] {
            let idx = match replace {
                Some((pos, p)) if pos == i => p,
                _ => v[i],
            };
            &self.pts[idx]
        };
        if self.k == 2 {
            robust::orient2d(c2(get(0)), c2(get(1)), c2(get(2)))
        } else {
            robust::orient3d(c3(get(0)), c3(get(1)), c3(get(2)), c3(get(3)))
        }
    }

    fn in_sphere(&self, v: &[usize], p: usize) -> f64 {
        let q = |i: usize| -> &[f64] { &self.pts[i] };
        if self.k == 2 {
            robust::incircle(c2(q(v[0])), c2(q(v[1])), c2(q(v[2])), c2(q(p)))
        } else {
            robust::insphere(c3(q(v[0])), c3(q(v[1])), c3(q(v[2])), c3(q(v[3])), c3(q(p)))
        }
    }

    fn conflicts(&self, c: usize, p: usize) -> bool {
        let v = &self.cells[c];
        match v.iter().position(|&x| x == INF) {
            None => self.in_sphere(v, p) > 0.0,
            Some(j) => {
                let o = self.orient(v, Some((j, p)));
                if o != 0.0 {
                    o > 0.0
                } else {
                    let real = self.nbr[c][j];
                    self.in_sphere(&self.cells[real], p) > 0.0
                }
            }
        }
    }

    fn push(&mut self, cell: Vec<usize>) -> usize {
        self.cells.push(cell);
        self.nbr.push(vec![INF; self.k + 1]);
        self.alive.push(true);
        self.cells.len() - 1
    }

    fn insert(&mut self, p: usize) -> bool {
        let Some(start) = (0..self.cells.len()).find(|&c| self.alive[c] && self.conflicts(c, p))
        else {
            return false;
        };
        let mut bad = vec![false; self.cells.len()];
        bad[start] = true;
        let mut stack = vec![start];
        let mut cavity = Vec::new();
        while let Some(c) = stack.pop() {
            cavity.push(c);
            for i in 0..=self.k {
                let nb = self.nbr[c][i];
                if !bad[nb] && self.conflicts(nb, p) {
                    bad[nb] = true;
                    stack.push(nb);
                }
            }
        }
        let mut created = Vec::new();
        for &c in &cavity {
            for i in 0..=self.k {
                let nb = self.nbr[c][i];
                if bad[nb] {
                    continue;
                }
                let mut cell = self.cells[c].clone();
                cell[i] = p;
                let id = self.push(cell);
                self.nbr[id][i] = nb;
                let back = self.nbr[nb]
                    .iter()
                    .position(|&x| x == c)
                    .expect("symmetric adjacency");
                self.nbr[nb][back] = id;
                created.push((id, i));
            }
        }
        let mut open: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for &(id, ip) in &created {
            for j in 0..=self.k {
                if j == ip {
                    continue;
                }
                let key = facet_key(&self.cells[id], j);
                if let Some((other, oj)) = open.remove(&key) {
                    self.nbr[id][j] = other;
                    self.nbr[other][oj] = id;
                } else {
                    open.insert(key, (id, j));
                }
            }
        }
        for c in cavity {
            self.alive[c] = false;
        }
        open.is_empty()
    }
}

/// Returns the finite Delaunay cells of `pts`, or `None` if the
/// construction broke down.
fn bowyer_watson(pts: &[Vec<f64>], k: usize) -> Option<Vec<Vec<usize>>> {
    let init = initial_simplex(pts, k)?;
    let mut dt = Delaunay {
        pts,
        k,
        cells: Vec::new(),
        nbr: Vec::new(),
        alive: Vec::new(),
    };
    let mut first = init.clone();
    if dt.orient(&first, None) < 0.0 {
        first.swap(0, 1);
    }
    let root = dt.push(first.clone());
    // ghost opposite vertex i: vertex i replaced by infinity, orientation flipped
    for i in 0..=k {
        let mut g = first.clone();
        g[i] = INF;
        let (a, b) = if i == 0 {
            (1, 2)
        } else if i == 1 {
            (0, 2)
        } else {
            (0, 1)
        };
        g.swap(a, b);
        let gid = dt.push(g);
        let gi = dt.cells[gid].iter().position(|&x| x == INF).unwrap();
        dt.nbr[gid][gi] = root;
        dt.nbr[root][i] = gid;
    }
    // ghost-ghost adjacency: ghosts share the facets containing infinity
    let ghosts: Vec<usize> = (1..dt.cells.len()).collect();
    let mut open: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
    for &g in &ghosts {
        for j in 0..=k {
            if dt.cells[g][j] == INF {
                continue;
            }
            let key = facet_key(&dt.cells[g], j);
            if let Some((o, oj)) = open.remove(&key) {
                dt.nbr[g][j] = o;
                dt.nbr[o][oj] = g;
            } else {
                open.insert(key, (g, j));
            }
        }
    }
    if !open.is_empty() {
        return None;
    }
    for p in 0..pts.len() {
        if init.contains(&p) {
            continue;
        }
        if !dt.insert(p) {
            return None;
        }
    }
    Some(
        dt.cells
            .iter()
            .zip(&dt.alive)
            .filter(|(c, &alive)| alive && !c.contains(&INF))
            .map(|(c, _)| c.clone())
            .collect(),
    )
}

fn initial_simplex(pts: &[Vec<f64>], k: usize) -> Option<Vec<usize>> {
    let a = 0;
    let b = (1..pts.len()).find(|&i| pts[i] != pts[a])?;
    if k == 2 {
        let c = (0..pts.len())
            .find(|&i| robust::orient2d(c2(&pts[a]), c2(&pts[b]), c2(&pts[i])) != 0.0)?;
        return Some(vec![a, b, c]);
    }
    let collinear = |i: usize| {
        let (p, q, r) = (&pts[a], &pts[b], &pts[i]);
        [(0, 1), (0, 2), (1, 2)].iter().all(|&(x, y)| {
            robust::orient2d(
                Coord { x: p[x], y: p[y] },
                Coord { x: q[x], y: q[y] },
                Coord { x: r[x], y: r[y] },
            ) == 0.0
        })
    };
    let c = (0..pts.len()).find(|&i| !collinear(i))?;
    let d = (0..pts.len())
        .find(|&i| robust::orient3d(c3(&pts[a]), c3(&pts[b]), c3(&pts[c]), c3(&pts[i])) != 0.0)?;
    Some(vec![a, b, c, d])
}
