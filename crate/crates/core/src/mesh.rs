//! Conforming triangular meshes of the spatial domain.
//!
//! Kernels are written for `DIM = 2`. Edges are stored with sorted endpoints;
//! local edge `k` of an element is the edge opposite its local vertex `k`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spatial dimension of the implemented kernels.
pub const DIM: usize = 2;

pub type Point = [f64; DIM];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("element {0} has zero area")]
    Degenerate(usize),
    #[error("element {0} references vertex {1}, but the mesh has {2} vertices")]
    BadVertexIndex(usize, usize, usize),
    #[error("elements {0} and {1} are duplicates")]
    DuplicateElement(usize, usize),
    #[error("edge ({0}, {1}) is shared by more than two elements (non-conforming)")]
    NonConforming(usize, usize),
    #[error("vertex {0} lies inside boundary edge ({1}, {2}) (hanging node)")]
    HangingNode(usize, usize, usize),
    #[error("boundary entry ({0}, {1}) is not a boundary edge")]
    NotABoundaryEdge(usize, usize),
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(usize),
    #[error("invalid generator parameters: {0}")]
    BadParameters(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Inflow,
    Outflow,
    Reflect,
    Generic,
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryTag::Inflow => "inflow",
            BoundaryTag::Outflow => "outflow",
            BoundaryTag::Reflect => "reflect",
            BoundaryTag::Generic => "generic",
        };
        f.write_str(s)
    }
}

impl FromStr for BoundaryTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inflow" => Ok(BoundaryTag::Inflow),
            "outflow" => Ok(BoundaryTag::Outflow),
            "reflect" => Ok(BoundaryTag::Reflect),
            "generic" => Ok(BoundaryTag::Generic),
            other => Err(format!("unknown boundary tag '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialMesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_elements: Vec<(usize, Option<usize>)>,
    element_edges: Vec<[usize; 3]>,
    edge_tags: Vec<Option<BoundaryTag>>,
    boundary: Vec<(usize, BoundaryTag)>,
    vertex_elements: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
}

/// Elements around one vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexPatch {
    pub center: usize,
    /// Global element indices, ascending.
    pub elements: Vec<usize>,
    /// Global vertex indices; `vertices[0]` is the center.
    pub vertices: Vec<usize>,
    /// Global edge indices of all patch elements, ascending.
    pub edges: Vec<usize>,
}

impl VertexPatch {
    pub fn local_vertex(&self, global: usize) -> Option<usize> {
        self.vertices.iter().position(|&v| v == global)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQuality {
    /// Smallest interior angle (radians).
    pub min_angle: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Largest ratio of element diameter to inscribed-circle diameter.
    pub shape_regularity: f64,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl SpatialMesh {
    /// Builds a mesh, reorienting clockwise elements and checking conformity.
    ///
    /// Boundary edges absent from `boundary` are tagged [`BoundaryTag::Generic`].
    pub fn new(
        vertices: Vec<Point>,
        mut elements: Vec<[usize; 3]>,
        boundary: &[([usize; 2], BoundaryTag)],
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (e, el) in elements.iter_mut().enumerate() {
            for &v in el.iter() {
                if v >= nv {
                    return Err(MeshError::BadVertexIndex(e, v, nv));
                }
            }
            let a = signed_area(vertices[el[0]], vertices[el[1]], vertices[el[2]]);
            let scale = dist(vertices[el[0]], vertices[el[1]])
                .max(dist(vertices[el[1]], vertices[el[2]]))
                .powi(2);
            if a.abs() <= 1e-14 * scale || el[0] == el[1] || el[1] == el[2] || el[0] == el[2] {
                return Err(MeshError::Degenerate(e));
            }
            if a < 0.0 {
                el.swap(1, 2);
            }
        }

        let mut seen: HashMap<[usize; 3], usize> = HashMap::new();
        for (e, el) in elements.iter().enumerate() {
            let mut key = *el;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateElement(first, e));
            }
            seen.insert(key, e);
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_elements: Vec<(usize, Option<usize>)> = Vec::new();
        let mut element_edges = Vec::with_capacity(elements.len());
        for (e, el) in elements.iter().enumerate() {
            let mut local = [0usize; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let a = el[(k + 1) % 3];
                let b = el[(k + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let id = match edge_index.get(&key) {
                    Some(&id) => {
                        let entry = &mut edge_elements[id];
                        if entry.1.is_some() {
                            return Err(MeshError::NonConforming(key[0], key[1]));
                        }
                        entry.1 = Some(e);
                        id
                    }
                    None => {
                        let id = edges.len();
                        edges.push(key);
                        edge_elements.push((e, None));
                        edge_index.insert(key, id);
                        id
                    }
                };
                *slot = id;
            }
            element_edges.push(local);
        }

        let mut edge_tags: Vec<Option<BoundaryTag>> = edge_elements
            .iter()
            .map(|(_, b)| if b.is_none() { Some(BoundaryTag::Generic) } else { None })
            .collect();
        for &([a, b], tag) in boundary {
            if a >= nv || b >= nv {
                return Err(MeshError::VertexOutOfRange(a.max(b)));
            }
            let key = [a.min(b), a.max(b)];
            match edge_index.get(&key) {
                Some(&id) if edge_tags[id].is_some() => edge_tags[id] = Some(tag),
                _ => return Err(MeshError::NotABoundaryEdge(a, b)),
            }
        }
        let boundary: Vec<(usize, BoundaryTag)> = edge_tags
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (i, t)))
            .collect();

        let mut vertex_elements = vec![Vec::new(); nv];
        for (e, el) in elements.iter().enumerate() {
            for &v in el {
                vertex_elements[v].push(e);
            }
        }
        let mut vertex_edges = vec![Vec::new(); nv];
        for (i, ed) in edges.iter().enumerate() {
            vertex_edges[ed[0]].push(i);
            vertex_edges[ed[1]].push(i);
        }

        let mesh = Self {
            vertices,
            elements,
            edges,
            edge_elements,
            element_edges,
            edge_tags,
            boundary,
            vertex_elements,
            vertex_edges,
        };
        mesh.check_hanging_nodes()?;
        Ok(mesh)
    }

    // A vertex strictly inside a boundary edge means two elements meet along
    // part of an edge only.
    fn check_hanging_nodes(&self) -> Result<(), MeshError> {
        for &(id, _) in &self.boundary {
            let [a, b] = self.edges[id];
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len = dist(pa, pb);
            let lo = [pa[0].min(pb[0]), pa[1].min(pb[1])];
            let hi = [pa[0].max(pb[0]), pa[1].max(pb[1])];
            for (v, &pv) in self.vertices.iter().enumerate() {
                if v == a || v == b || self.vertex_elements[v].is_empty() {
                    continue;
                }
                let tol = 1e-12 * len;
                if pv[0] < lo[0] - tol || pv[0] > hi[0] + tol || pv[1] < lo[1] - tol || pv[1] > hi[1] + tol {
                    continue;
                }
                if signed_area(pa, pb, pv).abs() <= 1e-12 * len * len {
                    return Err(MeshError::HangingNode(v, a, b));
                }
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> [usize; 3] {
        self.elements[e]
    }

    pub fn element_points(&self, e: usize) -> [Point; 3] {
        let el = self.elements[e];
        [self.vertices[el[0]], self.vertices[el[1]], self.vertices[el[2]]]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> [usize; 2] {
        self.edges[i]
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let [a, b] = self.edges[i];
        dist(self.vertices[a], self.vertices[b])
    }

    /// The one or two elements containing edge `i`.
    pub fn edge_elements(&self, i: usize) -> (usize, Option<usize>) {
        self.edge_elements[i]
    }

    /// Global edges of element `e`; entry `k` is opposite local vertex `k`.
    pub fn element_edges(&self, e: usize) -> [usize; 3] {
        self.element_edges[e]
    }

    pub fn edge_tag(&self, i: usize) -> Option<BoundaryTag> {
        self.edge_tags[i]
    }

    pub fn is_boundary_edge(&self, i: usize) -> bool {
        self.edge_tags[i].is_some()
    }

    /// Boundary facets as `(edge index, tag)`.
    pub fn boundary_facets(&self) -> &[(usize, BoundaryTag)] {
        &self.boundary
    }

    pub fn vertex_elements(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    /// Vertices sharing an edge with `v`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.vertex_edges[v].iter().map(move |&i| {
            let [a, b] = self.edges[i];
            if a == v {
                b
            } else {
                a
            }
        })
    }

    pub fn element_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_points(e);
        signed_area(a, b, c)
    }

    pub fn element_diameter(&self, e: usize) -> f64 {
        self.element_edges[e]
            .iter()
            .map(|&i| self.edge_length(i))
            .fold(0.0, f64::max)
    }

    pub fn element_centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.element_points(e);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the three barycentric coordinates of element `e`.
    pub fn barycentric_gradients(&self, e: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.element_points(e);
        let two_area = 2.0 * signed_area(a, b, c);
        let g = |p: Point, q: Point| [(p[1] - q[1]) / two_area, (q[0] - p[0]) / two_area];
        [g(b, c), g(c, a), g(a, b)]
    }

    /// Gradient of the linear interpolant of vertex `values` on element `e`.
    pub fn p1_gradient(&self, e: usize, values: [f64; 3]) -> [f64; 2] {
        let g = self.barycentric_gradients(e);
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += values[k] * g[k][0];
            out[1] += values[k] * g[k][1];
        }
        out
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_area(e)).sum()
    }

    pub fn vertex_patch(&self, v: usize) -> Result<VertexPatch, MeshError> {
        if v >= self.num_vertices() {
            return Err(MeshError::VertexOutOfRange(v));
        }
        let elements = self.vertex_elements[v].clone();
        let mut vertices = vec![v];
        let mut edges = Vec::new();
        for &e in &elements {
            for &w in &self.elements[e] {
                if !vertices.contains(&w) {
                    vertices.push(w);
                }
            }
            edges.extend_from_slice(&self.element_edges[e]);
        }
        vertices[1..].sort_unstable();
        edges.sort_unstable();
        edges.dedup();
        Ok(VertexPatch {
            center: v,
            elements,
            vertices,
            edges,
        })
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut shape_regularity: f64 = 0.0;
        for e in 0..self.num_elements() {
            let p = self.element_points(e);
            let len = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
            for k in 0..3 {
                let (a, b, c) = (len[k], len[(k + 1) % 3], len[(k + 2) % 3]);
                let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
                min_angle = min_angle.min(cos.acos());
            }
            let area = signed_area(p[0], p[1], p[2]);
            let inradius = 2.0 * area / (len[0] + len[1] + len[2]);
            let diam = len.iter().cloned().fold(0.0, f64::max);
            shape_regularity = shape_regularity.max(diam / (2.0 * inradius));
        }
        let (mut h_min, mut h_max) = (f64::INFINITY, 0.0f64);
        for i in 0..self.num_edges() {
            let l = self.edge_length(i);
            h_min = h_min.min(l);
            h_max = h_max.max(l);
        }
        MeshQuality {
            min_angle,
            h_min,
            h_max,
            shape_regularity,
        }
    }

    /// Unit square split into `2^l x 2^l` squares, each cut along its
    /// positively sloped diagonal. All boundary facets are tagged `reflect`.
    pub fn structured_square(level: u32) -> Result<Self, MeshError> {
        if level > 12 {
            return Err(MeshError::BadParameters(format!("refinement level {level} exceeds 12")));
        }
        let n = 1usize << level;
        let h = 1.0 / n as f64;
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                elements.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                elements.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        let mut boundary = Vec::with_capacity(4 * n);
        for k in 0..n {
            boundary.push(([idx(k, 0), idx(k + 1, 0)], BoundaryTag::Reflect));
            boundary.push(([idx(k, n), idx(k + 1, n)], BoundaryTag::Reflect));
            boundary.push(([idx(0, k), idx(0, k + 1)], BoundaryTag::Reflect));
            boundary.push(([idx(n, k), idx(n, k + 1)], BoundaryTag::Reflect));
        }
        Self::new(vertices, elements, &boundary)
    }

    /// Forward-facing step channel `[0,3]x[0,1] \ [0.6,3]x[0,0.2]`.
    ///
    /// A tensor grid graded towards the step corner `(0.6, 0.2)`: spacing
    /// grows linearly from `h_corner` at the corner lines to `h_target`.
    /// Tags: `x = 0` inflow, `x = 3` outflow, everything else reflect.
    pub fn step_channel(h_target: f64, h_corner: f64) -> Result<Self, MeshError> {
        if !(h_corner > 0.0 && h_corner <= h_target && h_target <= 0.6) {
            return Err(MeshError::BadParameters(format!(
                "need 0 < h_corner <= h_target <= 0.6, got h_corner={h_corner}, h_target={h_target}"
            )));
        }
        const GRADING: f64 = 0.35;
        let xs = join(
            graded(0.0, 0.6, false, h_corner, h_target, GRADING),
            graded(0.6, 3.0, true, h_corner, h_target, GRADING),
        );
        let ys = join(
            graded(0.0, 0.2, false, h_corner, h_target, GRADING),
            graded(0.2, 1.0, true, h_corner, h_target, GRADING),
        );
        let (nx, ny) = (xs.len(), ys.len());
        let in_step = |i: usize, j: usize| {
            // cell [xs[i], xs[i+1]] x [ys[j], ys[j+1]]
            0.5 * (xs[i] + xs[i + 1]) > 0.6 && 0.5 * (ys[j] + ys[j + 1]) < 0.2
        };
        let mut id = vec![usize::MAX; nx * ny];
        let mut vertices = Vec::new();
        let mut elements = Vec::new();
        let mut vid = |i: usize, j: usize, vertices: &mut Vec<Point>| {
            let k = j * nx + i;
            if id[k] == usize::MAX {
                id[k] = vertices.len();
                vertices.push([xs[i], ys[j]]);
            }
            id[k]
        };
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                if in_step(i, j) {
                    continue;
                }
                let a = vid(i, j, &mut vertices);
                let b = vid(i + 1, j, &mut vertices);
                let c = vid(i + 1, j + 1, &mut vertices);
                let d = vid(i, j + 1, &mut vertices);
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        let mesh = Self::new(vertices, elements, &[])?;
        let mut boundary = Vec::with_capacity(mesh.boundary.len());
        for &(i, _) in &mesh.boundary {
            let [a, b] = mesh.edges[i];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let tag = if pa[0] == 0.0 && pb[0] == 0.0 {
                BoundaryTag::Inflow
            } else if pa[0] == 3.0 && pb[0] == 3.0 {
                BoundaryTag::Outflow
            } else {
                BoundaryTag::Reflect
            };
            boundary.push(([a, b], tag));
        }
        Self::new(mesh.vertices, mesh.elements, &boundary)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Serializes to the `mtpmesh` text format.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "mtpmesh 1 dim 2").unwrap();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for p in &self.vertices {
            writeln!(s, "{:.16e} {:.16e}", p[0], p[1]).unwrap();
        }
        writeln!(s, "elements {}", self.elements.len()).unwrap();
        for el in &self.elements {
            writeln!(s, "{} {} {}", el[0], el[1], el[2]).unwrap();
        }
        writeln!(s, "boundary {}", self.boundary.len()).unwrap();
        for &(i, tag) in &self.boundary {
            let [a, b] = self.edges[i];
            writeln!(s, "{a} {b} {tag}").unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, msg: &str| MeshError::Parse {
            line,
            msg: msg.to_string(),
        };
        let (ln, header) = lines.next().ok_or_else(|| err(0, "empty file"))?;
        if header.split_whitespace().collect::<Vec<_>>() != ["mtpmesh", "1", "dim", "2"] {
            return Err(err(ln, "expected header 'mtpmesh 1 dim 2'"));
        }
        let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
        let mut counts = Vec::new();
        let mut expect = ["vertices", "elements", "boundary"].into_iter();
        let mut pending = 0usize;
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if pending == 0 {
                let name = expect.next().ok_or_else(|| err(ln, "unexpected trailing content"))?;
                if toks.len() != 2 || toks[0] != name {
                    return Err(err(ln, &format!("expected '{name} COUNT'")));
                }
                pending = toks[1].parse().map_err(|_| err(ln, "bad count"))?;
                counts.push(pending);
                continue;
            }
            rows.push((ln, toks));
            pending -= 1;
        }
        // Sections with zero rows may be followed by nothing.
        while counts.len() < 3 {
            if pending != 0 || expect.next().is_none() {
                break;
            }
            counts.push(0);
        }
        if counts.len() != 3 || pending != 0 {
            return Err(err(text.lines().count(), "truncated file"));
        }
        let mut it = rows.into_iter();
        let mut vertices = Vec::with_capacity(counts[0]);
        for _ in 0..counts[0] {
            let (ln, t) = it.next().unwrap();
            if t.len() != 2 {
                return Err(err(ln, "vertex line needs 2 coordinates"));
            }
            let x: f64 = t[0].parse().map_err(|_| err(ln, "bad coordinate"))?;
            let y: f64 = t[1].parse().map_err(|_| err(ln, "bad coordinate"))?;
            vertices.push([x, y]);
        }
        let mut elements = Vec::with_capacity(counts[1]);
        for _ in 0..counts[1] {
            let (ln, t) = it.next().unwrap();
            if t.len() != 3 {
                return Err(err(ln, "element line needs 3 vertex indices"));
            }
            let mut el = [0usize; 3];
            for k in 0..3 {
                el[k] = t[k].parse().map_err(|_| err(ln, "bad vertex index"))?;
            }
            elements.push(el);
        }
        let mut boundary = Vec::with_capacity(counts[2]);
        for _ in 0..counts[2] {
            let (ln, t) = it.next().unwrap();
            if t.len() != 3 {
                return Err(err(ln, "boundary line needs 'i j TAG'"));
            }
            let a: usize = t[0].parse().map_err(|_| err(ln, "bad vertex index"))?;
            let b: usize = t[1].parse().map_err(|_| err(ln, "bad vertex index"))?;
            let tag: BoundaryTag = t[2].parse().map_err(|m: String| err(ln, &m))?;
            boundary.push(([a, b], tag));
        }
        Self::new(vertices, elements, &boundary)
    }
}

/// Nodes on `[a, b]`, finest (`h_corner`) at `b` if `fine_at_start` is
/// false, otherwise at `a`.
fn graded(a: f64, b: f64, fine_at_start: bool, h_corner: f64, h_target: f64, rate: f64) -> Vec<f64> {
    let len = b - a;
    let mut s = vec![0.0];
    while *s.last().unwrap() < len {
        let d = *s.last().unwrap();
        s.push(d + (h_corner + rate * d).min(h_target));
    }
    // drop an overshooting node if the remainder is small, then rescale
    let n = s.len();
    if n > 2 && (s[n - 1] - len) > 0.5 * (s[n - 1] - s[n - 2]) {
        s.pop();
    }
    let scale = len / s.last().unwrap();
    let mut out: Vec<f64> = s.iter().map(|d| d * scale).collect();
    *out.last_mut().unwrap() = len;
    if fine_at_start {
        out.iter().map(|d| a + d).collect()
    } else {
        let mut v: Vec<f64> = out.iter().map(|d| b - d).collect();
        v.reverse();
        v[0] = a;
        v
    }
}

fn join(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.pop();
    a.extend(b);
    a
}
