//! Simplicial meshes of the unit disk, the unit ball and planar star domains.
//!
//! Construction:
//!
//! - Dimension 2: the triangular lattice inside the hexagon of lattice radius
//!   `n = 2^level` (7 vertices and 6 triangles at level 0) is mapped to the
//!   disk ring by ring: ring `k` becomes `6k` equally spaced points on the
//!   circle of radius `k/n`. Characteristic edge length `h ≈ 2^(−level)`.
//! - Dimension 3: the octahedron `|x|₁ ≤ 1` (7 vertices and 8 tetrahedra at
//!   level 0) is red-refined `level` times in exact integer coordinates, with
//!   the interior octahedron of every split cut along its shortest diagonal,
//!   then mapped radially by `x ↦ x·|x|₁/|x|₂`. `h ≈ 2^(−level)`.
//!
//! Cells are positively oriented and boundary facets are oriented outward.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::geometry::DEFAULT_DOMAIN_RADIUS;

/// A planar boundary curve `θ ↦ r(θ)(cos θ, sin θ)`.
pub trait RadialProfile: Send + Sync + fmt::Debug {
    fn radius(&self, theta: f64) -> f64;
    fn derivative(&self, theta: f64) -> f64;
}

/// `r(θ) = r₀ (1 + Σ_k a_k cos kθ + b_k sin kθ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarProfile {
    pub r0: f64,
    /// `(k, a_k, b_k)` triples.
    pub modes: Vec<(u32, f64, f64)>,
}

impl StarProfile {
    pub fn circle(r0: f64) -> Self {
        Self {
            r0,
            modes: Vec::new(),
        }
    }

    pub fn new(r0: f64, modes: Vec<(u32, f64, f64)>) -> Self {
        Self { r0, modes }
    }

    /// `Σ_k √(a_k² + b_k²)`.
    pub fn total_amplitude(&self) -> f64 {
        self.modes.iter().map(|(_, a, b)| a.hypot(*b)).sum()
    }

    pub fn with_r0(&self, r0: f64) -> Self {
        Self {
            r0,
            modes: self.modes.clone(),
        }
    }
}

impl RadialProfile for StarProfile {
    fn radius(&self, theta: f64) -> f64 {
        let s: f64 = self
            .modes
            .iter()
            .map(|&(k, a, b)| {
                let kt = k as f64 * theta;
                a * kt.cos() + b * kt.sin()
            })
            .sum();
        self.r0 * (1.0 + s)
    }

    fn derivative(&self, theta: f64) -> f64 {
        let s: f64 = self
            .modes
            .iter()
            .map(|&(k, a, b)| {
                let kf = k as f64;
                let kt = kf * theta;
                kf * (b * kt.cos() - a * kt.sin())
            })
            .sum();
        self.r0 * s
    }
}

/// The curve the boundary vertices of a mesh lie on.
#[derive(Clone, Debug)]
pub enum BoundaryShape {
    UnitSphere,
    Star(Arc<dyn RadialProfile>),
}

impl BoundaryShape {
    /// Boundary point in the direction of `x` (any nonzero vector).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let len = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let scale = match self {
            BoundaryShape::UnitSphere => 1.0,
            BoundaryShape::Star(p) => p.radius(x[1].atan2(x[0])),
        };
        x.iter().map(|c| c / len * scale).collect()
    }

    pub fn profile(&self) -> Option<&Arc<dyn RadialProfile>> {
        match self {
            BoundaryShape::UnitSphere => None,
            BoundaryShape::Star(p) => Some(p),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    facets: Vec<usize>,
    level: u32,
    boundary: BoundaryShape,
    lineage: Vec<String>,
}

impl SimplicialMesh {
    /// Assembles a mesh from raw arrays, fixing cell orientation. Boundary
    /// facets are recomputed as the faces that belong to a single cell.
    pub fn from_parts(
        dim: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
        level: u32,
        boundary: BoundaryShape,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(SteklovError::Argument(format!(
                "dimension {dim} not in {{2,3}}"
            )));
        }
        if coords.len() % dim != 0 || cells.len() % (dim + 1) != 0 {
            return Err(SteklovError::Argument("inconsistent mesh arrays".into()));
        }
        let nv = coords.len() / dim;
        if cells.iter().any(|&v| v >= nv) {
            return Err(SteklovError::Argument(
                "cell references a missing vertex".into(),
            ));
        }
        let mut mesh = Self {
            dim,
            coords,
            cells,
            facets: Vec::new(),
            level,
            boundary,
            lineage: Vec::new(),
        };
        mesh.orient_cells()?;
        mesh.facets = mesh.compute_boundary_facets();
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn boundary_shape(&self) -> &BoundaryShape {
        &self.boundary
    }

    /// Construction history, one entry per step.
    pub fn lineage(&self) -> &[String] {
        &self.lineage
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_boundary_facets(&self) -> usize {
        self.facets.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn boundary_facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    /// Sorted indices of the vertices on boundary facets.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut v = self.facets.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn cell_points(&self, c: usize) -> Vec<&[f64]> {
        self.cell(c).iter().map(|&v| self.vertex(v)).collect()
    }

    /// Signed Euclidean measure of cell `c`.
    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(&self.cell_points(c))
    }

    /// Euclidean measure of boundary facet `f` (flat facet).
    pub fn facet_measure(&self, f: usize) -> f64 {
        let p: Vec<&[f64]> = self
            .boundary_facet(f)
            .iter()
            .map(|&v| self.vertex(v))
            .collect();
        if self.dim == 2 {
            ((p[1][0] - p[0][0]).powi(2) + (p[1][1] - p[0][1]).powi(2)).sqrt()
        } else {
            let u = sub3(p[1], p[0]);
            let v = sub3(p[2], p[0]);
            0.5 * norm3(&cross(&u, &v))
        }
    }

    /// Euclidean volume of the polyhedral mesh.
    pub fn euclidean_volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    /// Euclidean measure of the polyhedral boundary.
    pub fn boundary_measure(&self) -> f64 {
        (0..self.n_boundary_facets())
            .map(|f| self.facet_measure(f))
            .sum()
    }

    /// Longest edge.
    pub fn max_edge(&self) -> f64 {
        let mut h: f64 = 0.0;
        for c in 0..self.n_cells() {
            let p = self.cell_points(c);
            for a in 0..p.len() {
                for b in a + 1..p.len() {
                    h = h.max(dist(p[a], p[b]));
                }
            }
        }
        h
    }

    /// `min` over cells of `d·r_in/R_circ`, which is 1 for regular simplices.
    pub fn min_quality(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| cell_quality(&self.cell_points(c)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Undirected edges as sorted pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for c in 0..self.n_cells() {
            let cell = self.cell(c);
            for a in 0..cell.len() {
                for b in a + 1..cell.len() {
                    e.push((cell[a].min(cell[b]), cell[a].max(cell[b])));
                }
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    /// `V − E + F` (dimension 2) or `V − E + F − C` (dimension 3).
    pub fn euler_characteristic(&self) -> i64 {
        let v = self.n_vertices() as i64;
        let e = self.edges().len() as i64;
        if self.dim == 2 {
            v - e + self.n_cells() as i64
        } else {
            let mut faces = Vec::new();
            for c in 0..self.n_cells() {
                let cell = self.cell(c);
                for skip in 0..4 {
                    let mut f: Vec<usize> =
                        (0..4).filter(|&k| k != skip).map(|k| cell[k]).collect();
                    f.sort_unstable();
                    faces.push(f);
                }
            }
            faces.sort_unstable();
            faces.dedup();
            v - e + faces.len() as i64 - self.n_cells() as i64
        }
    }

    /// Largest `||x| − R(x)|` over boundary vertices, where `R` is the radius
    /// of the boundary shape in the direction of `x`.
    pub fn boundary_snap_error(&self) -> f64 {
        self.boundary_vertices()
            .iter()
            .map(|&v| {
                let x = self.vertex(v);
                let target = self.boundary.project(x);
                dist(x, &target)
            })
            .fold(0.0, f64::max)
    }

    /// Smallest distance between two distinct vertices.
    pub fn min_vertex_separation(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(a, b)| dist(self.vertex(a), self.vertex(b)))
            .fold(f64::INFINITY, f64::min)
    }

    fn orient_cells(&mut self) -> Result<()> {
        let k = self.dim + 1;
        for c in 0..self.n_cells() {
            let vol = self.cell_volume(c);
            if vol == 0.0 || !vol.is_finite() {
                return Err(SteklovError::Numeric(format!("degenerate cell {c}")));
            }
            if vol < 0.0 {
                self.cells.swap(c * k, c * k + 1);
            }
        }
        Ok(())
    }

    /// Faces owned by exactly one cell, oriented with outward normal.
    fn compute_boundary_facets(&self) -> Vec<usize> {
        let d = self.dim;
        let mut count: HashMap<Vec<usize>, (usize, Vec<usize>)> = HashMap::new();
        let mut order: Vec<Vec<usize>> = Vec::new();
        for c in 0..self.n_cells() {
            let cell = self.cell(c);
            for skip in 0..=d {
                // oriented face opposite vertex `skip`
                let face = oriented_face(cell, skip);
                let mut key = face.clone();
                key.sort_unstable();
                let entry = count.entry(key.clone()).or_insert_with(|| {
                    order.push(key.clone());
                    (0, face)
                });
                entry.0 += 1;
            }
        }
        let mut out = Vec::new();
        for key in order {
            let (n, face) = &count[&key];
            if *n == 1 {
                out.extend_from_slice(face);
            }
        }
        out
    }

    /// Writes the plain-text mesh format:
    ///
    /// ```text
    /// steklov-mesh 1
    /// dim <d>
    /// level <L>
    /// vertices <V>
    /// <x> <y> [<z>]          (V lines)
    /// cells <C>
    /// <i> <j> <k> [<l>]      (C lines, zero-based, positively oriented)
    /// boundary_facets <F>
    /// <i> <j> [<k>]          (F lines, outward oriented)
    /// ```
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "steklov-mesh 1")?;
        writeln!(w, "dim {}", self.dim)?;
        writeln!(w, "level {}", self.level)?;
        writeln!(w, "vertices {}", self.n_vertices())?;
        for i in 0..self.n_vertices() {
            let line: Vec<String> = self.vertex(i).iter().map(|c| format!("{c:.17e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        writeln!(w, "cells {}", self.n_cells())?;
        for c in 0..self.n_cells() {
            let line: Vec<String> = self.cell(c).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        writeln!(w, "boundary_facets {}", self.n_boundary_facets())?;
        for f in 0..self.n_boundary_facets() {
            let line: Vec<String> = self
                .boundary_facet(f)
                .iter()
                .map(|v| v.to_string())
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Reads the format of [`SimplicialMesh::write_text`]. The boundary shape
    /// of the result is the unit sphere.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| SteklovError::Argument("unexpected end of mesh file".into()))?
                .map_err(SteklovError::from)
        };
        let bad = |what: &str| SteklovError::Argument(format!("malformed mesh file: {what}"));
        if next()?.trim() != "steklov-mesh 1" {
            return Err(bad("header"));
        }
        let header = |line: String, key: &str| -> Result<usize> {
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(bad(key));
            }
            it.next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(key))
        };
        let dim = header(next()?, "dim")?;
        let level = header(next()?, "level")? as u32;
        let nv = header(next()?, "vertices")?;
        let mut coords = Vec::with_capacity(nv * dim);
        for _ in 0..nv {
            let line = next()?;
            for t in line.split_whitespace() {
                coords.push(t.parse::<f64>().map_err(|_| bad("vertex"))?);
            }
        }
        let nc = header(next()?, "cells")?;
        let mut cells = Vec::with_capacity(nc * (dim + 1));
        for _ in 0..nc {
            let line = next()?;
            for t in line.split_whitespace() {
                cells.push(t.parse::<usize>().map_err(|_| bad("cell"))?);
            }
        }
        let nf = header(next()?, "boundary_facets")?;
        let mut facets = Vec::with_capacity(nf * dim);
        for _ in 0..nf {
            let line = next()?;
            for t in line.split_whitespace() {
                facets.push(t.parse::<usize>().map_err(|_| bad("facet"))?);
            }
        }
        if coords.len() != nv * dim || cells.len() != nc * (dim + 1) || facets.len() != nf * dim {
            return Err(bad("counts"));
        }
        let mut mesh = Self::from_parts(dim, coords, cells, level, BoundaryShape::UnitSphere)?;
        mesh.facets = facets;
        mesh.lineage.push("read_text".into());
        Ok(mesh)
    }
}

fn oriented_face(cell: &[usize], skip: usize) -> Vec<usize> {
    if cell.len() == 3 {
        // opposite vertex k: edge (k+1, k+2) is counterclockwise
        vec![cell[(skip + 1) % 3], cell[(skip + 2) % 3]]
    } else {
        // faces of a positive tet (0,1,2,3) with outward normals
        match skip {
            0 => vec![cell[1], cell[2], cell[3]],
            1 => vec![cell[0], cell[3], cell[2]],
            2 => vec![cell[0], cell[1], cell[3]],
            _ => vec![cell[0], cell[2], cell[1]],
        }
    }
}

pub(crate) fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn signed_volume(p: &[&[f64]]) -> f64 {
    if p.len() == 3 {
        0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
    } else {
        let u = sub3(p[1], p[0]);
        let v = sub3(p[2], p[0]);
        let w = sub3(p[3], p[0]);
        let c = cross(&v, &w);
        (u[0] * c[0] + u[1] * c[1] + u[2] * c[2]) / 6.0
    }
}

fn cell_quality(p: &[&[f64]]) -> f64 {
    let vol = signed_volume(p).abs();
    if p.len() == 3 {
        let a = dist(p[1], p[2]);
        let b = dist(p[0], p[2]);
        let c = dist(p[0], p[1]);
        let r_in = 2.0 * vol / (a + b + c);
        let r_circ = a * b * c / (4.0 * vol);
        2.0 * r_in / r_circ
    } else {
        let mut area = 0.0;
        for skip in 0..4 {
            let f: Vec<&[f64]> = (0..4).filter(|&k| k != skip).map(|k| p[k]).collect();
            area += 0.5 * norm3(&cross(&sub3(f[1], f[0]), &sub3(f[2], f[0])));
        }
        let r_in = 3.0 * vol / area;
        // circumradius from the edge lengths of opposite pairs
        let a = dist(p[0], p[1]) * dist(p[2], p[3]);
        let b = dist(p[0], p[2]) * dist(p[1], p[3]);
        let c = dist(p[0], p[3]) * dist(p[1], p[2]);
        let s = (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c);
        let r_circ = s.max(0.0).sqrt() / (24.0 * vol);
        3.0 * r_in / r_circ
    }
}

/// Hexagon corners in lattice coordinates, counterclockwise from angle 0.
const HEX_CORNERS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

fn disk_mesh(level: u32) -> Result<SimplicialMesh> {
    let n = 1i64 << level;
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut coords = vec![0.0, 0.0];
    index.insert((0, 0), 0);
    for k in 1..=n {
        let rho = k as f64 / n as f64;
        for s in 0..6 {
            let (c0, c1) = (HEX_CORNERS[s], HEX_CORNERS[(s + 1) % 6]);
            for m in 0..k {
                let lat = (k * c0.0 + m * (c1.0 - c0.0), k * c0.1 + m * (c1.1 - c0.1));
                let theta = PI / 3.0 * (s as f64 + m as f64 / k as f64);
                index.insert(lat, coords.len() / 2);
                if k == n {
                    coords.push(theta.cos());
                    coords.push(theta.sin());
                } else {
                    coords.push(rho * theta.cos());
                    coords.push(rho * theta.sin());
                }
            }
        }
    }
    let mut cells = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let tris = [
                [(i, j), (i + 1, j), (i, j + 1)],
                [(i + 1, j), (i + 1, j + 1), (i, j + 1)],
            ];
            for t in tris {
                if let (Some(&a), Some(&b), Some(&c)) =
                    (index.get(&t[0]), index.get(&t[1]), index.get(&t[2]))
                {
                    cells.extend_from_slice(&[a, b, c]);
                }
            }
        }
    }
    SimplicialMesh::from_parts(2, coords, cells, level, BoundaryShape::UnitSphere)
}

type Lattice = [i64; 3];

fn midpoint(a: &Lattice, b: &Lattice) -> Lattice {
    [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2, (a[2] + b[2]) / 2]
}

fn lattice_dist2(a: &Lattice, b: &Lattice) -> i64 {
    (0..3).map(|k| (a[k] - b[k]).pow(2)).sum()
}

/// Red refinement of one tetrahedron given vertex coordinates and a midpoint
/// oracle. Returns the eight children as index quadruples into `mid`
/// (positions 0..4 are the corners, then the six edge midpoints in the order
/// ab, ac, ad, bc, bd, cd).
fn red_children(dist2: impl Fn(usize, usize) -> f64) -> [[usize; 4]; 8] {
    const AB: usize = 4;
    const AC: usize = 5;
    const AD: usize = 6;
    const BC: usize = 7;
    const BD: usize = 8;
    const CD: usize = 9;
    let (a, b, c, d) = (0, 1, 2, 3);
    let corners = [
        [a, AB, AC, AD],
        [AB, b, BC, BD],
        [AC, BC, c, CD],
        [AD, BD, CD, d],
    ];
    // candidate diagonals with the matching four-cycles of the other midpoints
    let options = [
        ((AB, CD), [AC, BC, BD, AD]),
        ((AC, BD), [AB, BC, CD, AD]),
        ((AD, BC), [AB, BD, CD, AC]),
    ];
    let mut best = 0;
    for (i, ((p, q), _)) in options.iter().enumerate() {
        if dist2(*p, *q) < dist2(options[best].0 .0, options[best].0 .1) - 1e-12 {
            best = i;
        }
    }
    let ((p, q), cyc) = options[best];
    let mut out = [[0; 4]; 8];
    out[..4].copy_from_slice(&corners);
    for k in 0..4 {
        out[4 + k] = [p, q, cyc[k], cyc[(k + 1) % 4]];
    }
    out
}

fn ball_mesh(level: u32) -> Result<SimplicialMesh> {
    let n = 1i64 << level;
    let mut verts: Vec<Lattice> = vec![[0, 0, 0]];
    for axis in 0..3 {
        for sign in [1, -1] {
            let mut v = [0; 3];
            v[axis] = sign * n;
            verts.push(v);
        }
    }
    // octants: origin, ±x, ±y, ±z
    let mut tets: Vec<[Lattice; 4]> = Vec::new();
    for sx in [1, 2] {
        for sy in [3, 4] {
            for sz in [5, 6] {
                tets.push([verts[0], verts[sx], verts[sy], verts[sz]]);
            }
        }
    }
    for _ in 0..level {
        let mut next = Vec::with_capacity(tets.len() * 8);
        for t in &tets {
            let mut p = [[0i64; 3]; 10];
            p[..4].copy_from_slice(t);
            let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
            for (k, (i, j)) in pairs.iter().enumerate() {
                p[4 + k] = midpoint(&t[*i], &t[*j]);
            }
            for child in red_children(|i, j| lattice_dist2(&p[i], &p[j]) as f64) {
                next.push([p[child[0]], p[child[1]], p[child[2]], p[child[3]]]);
            }
        }
        tets = next;
    }
    let mut index: HashMap<Lattice, usize> = HashMap::new();
    let mut lattice: Vec<Lattice> = Vec::new();
    let mut cells = Vec::with_capacity(tets.len() * 4);
    for t in &tets {
        for v in t {
            let id = *index.entry(*v).or_insert_with(|| {
                lattice.push(*v);
                lattice.len() - 1
            });
            cells.push(id);
        }
    }
    let mut coords = Vec::with_capacity(lattice.len() * 3);
    for v in &lattice {
        let l1 = v.iter().map(|c| c.abs()).sum::<i64>();
        let x: Vec<f64> = v.iter().map(|&c| c as f64 / n as f64).collect();
        let l2 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if l1 == n {
            coords.extend(x.iter().map(|c| c / l2));
        } else if l1 == 0 {
            coords.extend_from_slice(&[0.0, 0.0, 0.0]);
        } else {
            let s = l1 as f64 / n as f64 / l2;
            coords.extend(x.iter().map(|c| c * s));
        }
    }
    SimplicialMesh::from_parts(3, coords, cells, level, BoundaryShape::UnitSphere)
}

/// Quasi-uniform mesh of the unit disk (`dim = 2`) or unit ball (`dim = 3`).
///
/// Sizes: in dimension 2 with `n = 2^level`, `1 + 3n(n+1)` vertices, `6n²`
/// triangles and `6n` boundary edges; in dimension 3, `8^(level+1)`
/// tetrahedra, `8n²` boundary triangles and `2 + 4n²` boundary vertices.
pub fn unit_ball_mesh(dim: usize, level: u32) -> Result<SimplicialMesh> {
    if level > 12 {
        return Err(SteklovError::Argument(format!(
            "level {level} is unreasonably fine"
        )));
    }
    let mut mesh = match dim {
        2 => disk_mesh(level)?,
        3 => ball_mesh(level)?,
        _ => {
            return Err(SteklovError::Argument(format!(
                "dimension {dim} not in {{2,3}}"
            )))
        }
    };
    mesh.lineage
        .push(format!("unit_ball_mesh(dim={dim}, level={level})"));
    Ok(mesh)
}

/// Uniform red refinement: every edge is halved, boundary midpoints are moved
/// onto the boundary shape, and the level increases by one.
pub fn refine(mesh: &SimplicialMesh) -> SimplicialMesh {
    let d = mesh.dim;
    let mut coords = mesh.coords.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let boundary_edges: std::collections::HashSet<(usize, usize)> = (0..mesh.n_boundary_facets())
        .flat_map(|f| {
            let fv = mesh.boundary_facet(f).to_vec();
            let mut e = Vec::new();
            for a in 0..fv.len() {
                for b in a + 1..fv.len() {
                    e.push((fv[a].min(fv[b]), fv[a].max(fv[b])));
                }
            }
            e
        })
        .collect();
    let mut midpoint_of = |a: usize, b: usize, coords: &mut Vec<f64>| -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = mid.get(&key) {
            return m;
        }
        let id = coords.len() / d;
        let p: Vec<f64> = (0..d)
            .map(|k| 0.5 * (coords[a * d + k] + coords[b * d + k]))
            .collect();
        let p = if boundary_edges.contains(&key) {
            mesh.boundary.project(&p)
        } else {
            p
        };
        coords.extend(p);
        mid.insert(key, id);
        id
    };
    let mut cells = Vec::with_capacity(mesh.cells.len() * if d == 2 { 4 } else { 8 });
    for c in 0..mesh.n_cells() {
        let v = mesh.cell(c).to_vec();
        if d == 2 {
            let ab = midpoint_of(v[0], v[1], &mut coords);
            let bc = midpoint_of(v[1], v[2], &mut coords);
            let ca = midpoint_of(v[2], v[0], &mut coords);
            cells.extend_from_slice(&[v[0], ab, ca, ab, v[1], bc, ca, bc, v[2], ab, bc, ca]);
        } else {
            let mut p = [0usize; 10];
            p[..4].copy_from_slice(&v);
            let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
            for (k, (i, j)) in pairs.iter().enumerate() {
                p[4 + k] = midpoint_of(v[*i], v[*j], &mut coords);
            }
            let pt = |i: usize| &coords[p[i] * 3..p[i] * 3 + 3];
            let children = red_children(|i, j| dist(pt(i), pt(j)).powi(2));
            for child in children {
                cells.extend(child.iter().map(|&k| p[k]));
            }
        }
    }
    let mut out =
        SimplicialMesh::from_parts(d, coords, cells, mesh.level + 1, mesh.boundary.clone())
            .expect("refinement of a valid mesh is valid");
    out.lineage = mesh.lineage.clone();
    out.lineage.push("refine".into());
    out
}

/// The planar star domain `{ s·r(θ)(cos θ, sin θ) : 0 ≤ s ≤ 1 }`, meshed as the
/// image of the unit disk mesh under `x ↦ r(x/|x|)·x`.
pub fn star_domain_mesh(profile: Arc<dyn RadialProfile>, level: u32) -> Result<SimplicialMesh> {
    let samples = 4096;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..samples {
        let r = profile.radius(2.0 * PI * s as f64 / samples as f64);
        if !r.is_finite() {
            return Err(SteklovError::Argument("star radius is not finite".into()));
        }
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if !(lo >= 0.2 && hi <= DEFAULT_DOMAIN_RADIUS) {
        return Err(SteklovError::Argument(format!(
            "star radius range [{lo}, {hi}] outside [0.2, {DEFAULT_DOMAIN_RADIUS}]"
        )));
    }
    let disk = unit_ball_mesh(2, level)?;
    let mut coords = disk.coords.clone();
    for i in 0..disk.n_vertices() {
        let (x, y) = (coords[2 * i], coords[2 * i + 1]);
        if x == 0.0 && y == 0.0 {
            continue;
        }
        let r = profile.radius(y.atan2(x));
        coords[2 * i] = x * r;
        coords[2 * i + 1] = y * r;
    }
    let mut mesh = SimplicialMesh::from_parts(
        2,
        coords,
        disk.cells.clone(),
        level,
        BoundaryShape::Star(profile),
    )?;
    mesh.lineage = disk.lineage;
    mesh.lineage.push("star_domain_mesh".into());
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disk_level_zero_goldens() {
        let m = unit_ball_mesh(2, 0).unwrap();
        assert_eq!(
            (m.n_vertices(), m.n_cells(), m.n_boundary_facets()),
            (7, 6, 6)
        );
        assert!((m.min_quality() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_level_zero_goldens() {
        let m = unit_ball_mesh(3, 0).unwrap();
        assert_eq!(
            (m.n_vertices(), m.n_cells(), m.n_boundary_facets()),
            (7, 8, 8)
        );
        let m1 = unit_ball_mesh(3, 1).unwrap();
        assert_eq!(
            (m1.n_vertices(), m1.n_cells(), m1.n_boundary_facets()),
            (25, 64, 32)
        );
        assert_eq!(m1.euler_characteristic(), 1);
    }

    #[test]
    fn disk_counts_and_euler() {
        for level in 0..5 {
            let m = unit_ball_mesh(2, level).unwrap();
            let n = 1usize << level;
            assert_eq!(m.n_vertices(), 1 + 3 * n * (n + 1));
            assert_eq!(m.n_cells(), 6 * n * n);
            assert_eq!(m.n_boundary_facets(), 6 * n);
            assert_eq!(m.euler_characteristic(), 1);
            assert!(m.boundary_snap_error() <= 1e-12);
        }
    }

    #[test]
    fn perimeter_converges_quadratically() {
        let err: Vec<f64> = (2..6)
            .map(|l| (unit_ball_mesh(2, l).unwrap().boundary_measure() - 2.0 * PI).abs())
            .collect();
        for w in err.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9);
        }
    }

    #[test]
    fn refine_multiplies_cells() {
        let m = unit_ball_mesh(2, 2).unwrap();
        let r = refine(&m);
        assert_eq!(r.n_cells(), 4 * m.n_cells());
        assert_eq!(r.level(), 3);
        assert_eq!(r.euler_characteristic(), 1);
        assert!(r.boundary_snap_error() <= 1e-12);
        let b = unit_ball_mesh(3, 1).unwrap();
        let rb = refine(&b);
        assert_eq!(rb.n_cells(), 8 * b.n_cells());
        assert!(rb.boundary_snap_error() <= 1e-12);
        assert_eq!(rb.euler_characteristic(), 1);
    }

    #[test]
    fn refined_area_converges() {
        let mut m = unit_ball_mesh(2, 1).unwrap();
        let mut errs = Vec::new();
        for _ in 0..4 {
            m = refine(&m);
            errs.push((m.euclidean_volume() - PI).abs());
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8);
        }
    }

    #[test]
    fn ball_quality_is_bounded() {
        let q: Vec<f64> = (0..4)
            .map(|l| unit_ball_mesh(3, l).unwrap().min_quality())
            .collect();
        assert!(q.iter().all(|&v| v > 0.2), "{q:?}");
        let q2: Vec<f64> = (0..6)
            .map(|l| unit_ball_mesh(2, l).unwrap().min_quality())
            .collect();
        assert!(q2.iter().all(|&v| v > 0.5), "{q2:?}");
    }

    #[test]
    fn star_with_unit_radius_is_the_disk() {
        let disk = unit_ball_mesh(2, 3).unwrap();
        let star = star_domain_mesh(Arc::new(StarProfile::circle(1.0)), 3).unwrap();
        assert_eq!(disk.coords, star.coords);
        assert_eq!(disk.cells, star.cells);
        assert_eq!(disk.facets, star.facets);
    }

    #[test]
    fn star_area_converges_to_polar_integral() {
        let p = Arc::new(StarProfile::new(1.0, vec![(2, 0.1, 0.0)]));
        let exact = PI * (1.0 + 0.1f64.powi(2) / 2.0);
        let e4 = (star_domain_mesh(p.clone(), 4).unwrap().euclidean_volume() - exact).abs();
        let e6 = (star_domain_mesh(p, 6).unwrap().euclidean_volume() - exact).abs();
        assert!(e6 < e4 / 10.0 && e6 < 1e-3);
    }

    #[test]
    fn star_radius_bounds_are_enforced() {
        let p = Arc::new(StarProfile::new(1.0, vec![(3, 0.9, 0.0)]));
        assert!(matches!(
            star_domain_mesh(p, 2),
            Err(SteklovError::Argument(_))
        ));
        assert!(matches!(
            unit_ball_mesh(4, 1),
            Err(SteklovError::Argument(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let m = unit_ball_mesh(3, 1).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = SimplicialMesh::read_text(&buf[..]).unwrap();
        assert_eq!(back.coords, m.coords);
        assert_eq!(back.cells, m.cells);
        assert_eq!(back.facets, m.facets);
    }

    proptest! {
        #[test]
        fn generation_is_deterministic(level in 0u32..4, dim in 2usize..4) {
            let a = unit_ball_mesh(dim, level).unwrap();
            let b = unit_ball_mesh(dim, level).unwrap();
            prop_assert_eq!(a.coords, b.coords);
            prop_assert_eq!(a.cells, b.cells);
        }

        #[test]
        fn cells_positive_and_boundary_outward(level in 0u32..4, dim in 2usize..4) {
            let m = unit_ball_mesh(dim, level).unwrap();
            prop_assert!((0..m.n_cells()).all(|c| m.cell_volume(c) > 0.0));
            for f in 0..m.n_boundary_facets() {
                let fv = m.boundary_facet(f);
                let p: Vec<&[f64]> = fv.iter().map(|&v| m.vertex(v)).collect();
                let outward = if dim == 2 {
                    // normal (dy, −dx) of a counterclockwise edge
                    let nrm = [p[1][1] - p[0][1], p[0][0] - p[1][0]];
                    nrm[0] * (p[0][0] + p[1][0]) + nrm[1] * (p[0][1] + p[1][1])
                } else {
                    let nrm = cross(&sub3(p[1], p[0]), &sub3(p[2], p[0]));
                    (0..3).map(|k| nrm[k] * (p[0][k] + p[1][k] + p[2][k])).sum()
                };
                prop_assert!(outward > 0.0);
            }
            prop_assert!(m.min_vertex_separation() > 1e-12);
        }
    }
}
