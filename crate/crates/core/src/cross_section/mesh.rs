use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use super::shape::{polygon_fan, CrossSectionShape};
use crate::error::{input, Result};

/// Marker for a degree of freedom fixed to zero.
pub const PINNED: usize = usize::MAX;

/// Conforming simplicial mesh of a cross-section with P1 gradient operators.
#[derive(Clone, Debug)]
pub struct CrossSectionMesh {
    shape: CrossSectionShape,
    h: f64,
    dim: usize,
    coords: Vec<f64>,
    elements: Vec<usize>,
    boundary: Vec<bool>,
    volumes: Vec<f64>,
    /// Per element a `dim × (dim+1)` row-major matrix; column `a` is the
    /// gradient of the local hat function `a`.
    gradients: Vec<f64>,
    free: Vec<usize>,
    n_free: usize,
}

impl CrossSectionMesh {
    /// Assembles a mesh from raw nodes and elements, computing volumes and
    /// gradients. Elements must be non-degenerate.
    pub fn from_parts(
        shape: CrossSectionShape,
        h: f64,
        dim: usize,
        coords: Vec<f64>,
        elements: Vec<usize>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return input(format!(
                "cross-section meshes exist for dimension 1 and 2, got {dim}"
            ));
        }
        let n = coords.len() / dim;
        if coords.len() != n * dim || boundary.len() != n {
            return input("mesh arrays have inconsistent lengths");
        }
        let k = dim + 1;
        if !elements.len().is_multiple_of(k) || elements.iter().any(|&i| i >= n) {
            return input("mesh connectivity refers to missing nodes");
        }
        let ne = elements.len() / k;
        let mut volumes = Vec::with_capacity(ne);
        let mut gradients = Vec::with_capacity(ne * dim * k);
        for e in 0..ne {
            let nodes = &elements[e * k..(e + 1) * k];
            let x = |i: usize, c: usize| coords[nodes[i] * dim + c];
            if dim == 1 {
                let len = x(1, 0) - x(0, 0);
                if !(len.abs() > 0.0) {
                    return input(format!("element {e} is degenerate"));
                }
                volumes.push(len.abs());
                gradients.extend_from_slice(&[-1.0 / len, 1.0 / len]);
            } else {
                let (ax, ay) = (x(1, 0) - x(0, 0), x(1, 1) - x(0, 1));
                let (bx, by) = (x(2, 0) - x(0, 0), x(2, 1) - x(0, 1));
                let det = ax * by - ay * bx;
                if !(det.abs() > 0.0) {
                    return input(format!("element {e} is degenerate"));
                }
                volumes.push(0.5 * det.abs());
                // Rows of the inverse Jacobian are the gradients of λ1, λ2.
                let (g1x, g1y) = (by / det, -bx / det);
                let (g2x, g2y) = (-ay / det, ax / det);
                gradients.extend_from_slice(&[-g1x - g2x, g1x, g2x, -g1y - g2y, g1y, g2y]);
            }
        }
        let mut free = vec![PINNED; n];
        let mut n_free = 0;
        for (i, b) in boundary.iter().enumerate() {
            if !b {
                free[i] = n_free;
                n_free += 1;
            }
        }
        Ok(Self {
            shape,
            h,
            dim,
            coords,
            elements,
            boundary,
            volumes,
            gradients,
            free,
            n_free,
        })
    }

    pub fn shape(&self) -> &CrossSectionShape {
        &self.shape
    }

    pub fn resolution(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_elements(&self) -> usize {
        self.volumes.len()
    }

    /// Number of vertices per element.
    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.elements[e * k..(e + 1) * k]
    }

    pub fn volume(&self, e: usize) -> f64 {
        self.volumes[e]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn gradient(&self, e: usize) -> &[f64] {
        let len = self.dim * (self.dim + 1);
        &self.gradients[e * len..(e + 1) * len]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.boundary[i]).collect()
    }

    /// Free-dof index of each node, [`PINNED`] on the boundary.
    pub fn free_index(&self) -> &[usize] {
        &self.free
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn barycenter(&self, e: usize) -> Vec<f64> {
        let nodes = self.element(e);
        let k = nodes.len() as f64;
        (0..self.dim)
            .map(|c| {
                nodes
                    .iter()
                    .map(|&i| self.coords[i * self.dim + c])
                    .sum::<f64>()
                    / k
            })
            .collect()
    }

    pub fn measure(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// `max |node|`.
    pub fn radius_bound(&self) -> f64 {
        (0..self.n_nodes())
            .map(|i| self.node(i).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Mesh of `c·ω` with identical connectivity.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return input(format!("scale factor must be positive, got {c}"));
        }
        let shape = match &self.shape {
            CrossSectionShape::Interval { length, offset } => CrossSectionShape::Interval {
                length: c * length,
                offset: c * offset,
            },
            CrossSectionShape::Disk { radius } => CrossSectionShape::Disk { radius: c * radius },
            CrossSectionShape::Annulus { inner, outer } => CrossSectionShape::Annulus {
                inner: c * inner,
                outer: c * outer,
            },
            CrossSectionShape::Rectangle { width, height } => CrossSectionShape::Rectangle {
                width: c * width,
                height: c * height,
            },
            CrossSectionShape::Ellipse { semi_x, semi_y } => CrossSectionShape::Ellipse {
                semi_x: c * semi_x,
                semi_y: c * semi_y,
            },
            CrossSectionShape::Polygon { vertices } => CrossSectionShape::Polygon {
                vertices: vertices.iter().map(|v| [c * v[0], c * v[1]]).collect(),
            },
        };
        Self::from_parts(
            shape,
            c * self.h,
            self.dim,
            self.coords.iter().map(|x| c * x).collect(),
            self.elements.clone(),
            self.boundary.clone(),
        )
    }

    /// Writes the ASCII mesh format: a `nodes K elements E dim m` header,
    /// node lines, element lines, then `boundary B` and the boundary ids.
    pub fn export<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "nodes {} elements {} dim {}",
            self.n_nodes(),
            self.n_elements(),
            self.dim
        )?;
        for i in 0..self.n_nodes() {
            write!(out, "{i}")?;
            for x in self.node(i) {
                write!(out, " {x:.17e}")?;
            }
            writeln!(out)?;
        }
        for e in 0..self.n_elements() {
            write!(out, "{e}")?;
            for n in self.element(e) {
                write!(out, " {n}")?;
            }
            writeln!(out)?;
        }
        let b = self.boundary_nodes();
        writeln!(out, "boundary {}", b.len())?;
        for i in b {
            writeln!(out, "{i}")?;
        }
        Ok(())
    }
}

/// Meshes `shape` with target edge length `h`.
///
/// Round shapes use concentric rings carrying the same number of nodes, each
/// ring rotated by half an angular step against the previous one, so every
/// triangle is isosceles about a radial line. Rectangles use a centered grid
/// with one diagonal direction; polygons are fanned from the centroid with a
/// structured refinement of each fan triangle.
pub fn build_mesh(shape: &CrossSectionShape, h: f64) -> Result<CrossSectionMesh> {
    if !(h > 0.0 && h.is_finite()) {
        return input(format!("mesh resolution must be positive, got {h}"));
    }
    shape.validate()?;
    let cells = |len: f64| ((len / h) - 1e-9).ceil().max(1.0) as usize;
    match shape {
        CrossSectionShape::Interval { length, offset } => {
            let n = cells(*length);
            let coords: Vec<f64> = (0..=n)
                .map(|i| offset - 0.5 * length + length * i as f64 / n as f64)
                .collect();
            let elements: Vec<usize> = (0..n).flat_map(|i| [i, i + 1]).collect();
            let mut boundary = vec![false; n + 1];
            boundary[0] = true;
            boundary[n] = true;
            CrossSectionMesh::from_parts(shape.clone(), h, 1, coords, elements, boundary)
        }
        CrossSectionShape::Disk { radius } => {
            let n_r = cells(*radius);
            let n_theta = cells(2.0 * PI * radius).max(8);
            let radii: Vec<f64> = (0..=n_r).map(|k| radius * k as f64 / n_r as f64).collect();
            rings(shape, h, &radii, n_theta, (1.0, 1.0))
        }
        CrossSectionShape::Annulus { inner, outer } => {
            let n_r = cells(outer - inner);
            let n_theta = cells(2.0 * PI * outer).max(8);
            let radii: Vec<f64> = (0..=n_r)
                .map(|k| inner + (outer - inner) * k as f64 / n_r as f64)
                .collect();
            rings(shape, h, &radii, n_theta, (1.0, 1.0))
        }
        CrossSectionShape::Ellipse { semi_x, semi_y } => {
            let big = semi_x.max(*semi_y);
            let n_r = cells(big);
            let n_theta = cells(2.0 * PI * big).max(8);
            let radii: Vec<f64> = (0..=n_r).map(|k| k as f64 / n_r as f64).collect();
            rings(shape, h, &radii, n_theta, (*semi_x, *semi_y))
        }
        CrossSectionShape::Rectangle { width, height } => {
            let nx = cells(*width);
            let ny = cells(*height);
            let mut coords = Vec::with_capacity(2 * (nx + 1) * (ny + 1));
            let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
            for j in 0..=ny {
                for i in 0..=nx {
                    coords.push(-0.5 * width + width * i as f64 / nx as f64);
                    coords.push(-0.5 * height + height * j as f64 / ny as f64);
                    boundary.push(i == 0 || j == 0 || i == nx || j == ny);
                }
            }
            let id = |i: usize, j: usize| j * (nx + 1) + i;
            let mut elements = Vec::with_capacity(6 * nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    elements.extend_from_slice(&[id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    elements.extend_from_slice(&[id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
            CrossSectionMesh::from_parts(shape.clone(), h, 2, coords, elements, boundary)
        }
        CrossSectionShape::Polygon { vertices } => {
            let (ccw, c) = polygon_fan(vertices)?;
            let reach = ccw
                .iter()
                .map(|v| ((v[0] - c[0]).powi(2) + (v[1] - c[1]).powi(2)).sqrt())
                .fold(0.0, f64::max);
            let longest_edge = (0..ccw.len())
                .map(|i| {
                    let (p, q) = (ccw[i], ccw[(i + 1) % ccw.len()]);
                    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
                })
                .fold(0.0, f64::max);
            let n = cells(reach.max(longest_edge));
            fan(shape, h, &ccw, c, n)
        }
    }
}

/// Staggered ring mesh. `radii[0] == 0` produces a center node. Node
/// positions are `(sx·r cos θ, sy·r sin θ)`.
fn rings(
    shape: &CrossSectionShape,
    h: f64,
    radii: &[f64],
    n_theta: usize,
    (sx, sy): (f64, f64),
) -> Result<CrossSectionMesh> {
    let dtheta = 2.0 * PI / n_theta as f64;
    let has_center = radii[0] == 0.0;
    let last = radii.len() - 1;
    let mut coords = Vec::new();
    let mut boundary = Vec::new();
    if has_center {
        coords.extend_from_slice(&[0.0, 0.0]);
        boundary.push(false);
    }
    let first_ring = usize::from(has_center);
    for (k, &r) in radii.iter().enumerate().skip(first_ring) {
        for j in 0..n_theta {
            let theta = (j as f64 + 0.5 * k as f64) * dtheta;
            coords.push(sx * r * theta.cos());
            coords.push(sy * r * theta.sin());
            boundary.push(k == last || (!has_center && k == 0));
        }
    }
    let id = |k: usize, j: usize| {
        let j = j % n_theta;
        if has_center {
            1 + (k - 1) * n_theta + j
        } else {
            k * n_theta + j
        }
    };
    let mut elements = Vec::new();
    if has_center {
        for j in 0..n_theta {
            elements.extend_from_slice(&[0, id(1, j), id(1, j + 1)]);
        }
    }
    for k in first_ring..last {
        // Ring k+1 node j sits angularly between ring k nodes j and j+1.
        for j in 0..n_theta {
            elements.extend_from_slice(&[id(k, j), id(k, j + 1), id(k + 1, j)]);
            elements.extend_from_slice(&[id(k + 1, j), id(k, j + 1), id(k + 1, j + 1)]);
        }
    }
    CrossSectionMesh::from_parts(shape.clone(), h, 2, coords, elements, boundary)
}

/// Fan of structured triangle refinements around the centroid `c`.
fn fan(
    shape: &CrossSectionShape,
    h: f64,
    ccw: &[[f64; 2]],
    c: [f64; 2],
    n: usize,
) -> Result<CrossSectionMesh> {
    let nv = ccw.len();
    let mut coords = vec![c[0], c[1]];
    let mut boundary = vec![false];
    // Keys: (fan, a, b) with a + b ≤ n, point c + a/n (v_i − c) + b/n (v_{i+1} − c).
    // Points with b = 0 on fan i coincide with a = 0 on fan i−1.
    let mut index: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let canonical = |i: usize, a: usize, b: usize| -> (usize, usize, usize) {
        if a == 0 && b == 0 {
            (0, 0, 0)
        } else if a == 0 {
            ((i + 1) % nv, b, 0)
        } else {
            (i, a, b)
        }
    };
    let mut node =
        |i: usize, a: usize, b: usize, coords: &mut Vec<f64>, boundary: &mut Vec<bool>| {
            let key = canonical(i, a, b);
            if key == (0, 0, 0) {
                return 0;
            }
            *index.entry(key).or_insert_with(|| {
                let (v, w) = (ccw[i], ccw[(i + 1) % nv]);
                let (fa, fb) = (a as f64 / n as f64, b as f64 / n as f64);
                coords.push(c[0] + fa * (v[0] - c[0]) + fb * (w[0] - c[0]));
                coords.push(c[1] + fa * (v[1] - c[1]) + fb * (w[1] - c[1]));
                boundary.push(a + b == n);
                boundary.len() - 1
            })
        };
    let mut elements = Vec::new();
    for i in 0..nv {
        for a in 0..n {
            for b in 0..n - a {
                let p = node(i, a, b, &mut coords, &mut boundary);
                let q = node(i, a + 1, b, &mut coords, &mut boundary);
                let r = node(i, a, b + 1, &mut coords, &mut boundary);
                elements.extend_from_slice(&[p, q, r]);
                if a + b + 1 < n {
                    let s = node(i, a + 1, b + 1, &mut coords, &mut boundary);
                    elements.extend_from_slice(&[q, s, r]);
                }
            }
        }
    }
    CrossSectionMesh::from_parts(shape.clone(), h, 2, coords, elements, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        let m = build_mesh(&CrossSectionShape::interval(1.0), 0.01).unwrap();
        assert_eq!(m.n_nodes(), 101);
        assert_eq!(m.n_elements(), 100);
        assert_eq!(m.boundary_nodes(), vec![0, 100]);
        assert!((m.node(0)[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn disk_area_within_one_percent() {
        let m = build_mesh(&CrossSectionShape::Disk { radius: 1.0 }, 0.1).unwrap();
        assert!((m.measure() - PI).abs() < 0.01 * PI);
        assert!(m.volumes().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn annulus_and_ellipse_areas() {
        let a = CrossSectionShape::Annulus {
            inner: 0.5,
            outer: 1.0,
        };
        let m = build_mesh(&a, 0.05).unwrap();
        assert!((m.measure() - a.measure()).abs() < 0.01 * a.measure());
        let e = CrossSectionShape::Ellipse {
            semi_x: 1.0,
            semi_y: 0.5,
        };
        let m = build_mesh(&e, 0.05).unwrap();
        assert!((m.measure() - e.measure()).abs() < 0.01 * e.measure());
    }

    #[test]
    fn rectangle_is_centered() {
        let m = build_mesh(
            &CrossSectionShape::Rectangle {
                width: 0.6,
                height: 0.2,
            },
            0.05,
        )
        .unwrap();
        assert!((m.radius_bound() - (0.09f64 + 0.01).sqrt()).abs() < 1e-14);
        assert!((m.measure() - 0.12).abs() < 1e-14);
    }

    #[test]
    fn polygon_fan_is_conforming() {
        let hex: Vec<[f64; 2]> = (0..6)
            .map(|i| {
                let t = i as f64 * PI / 3.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let shape = CrossSectionShape::Polygon { vertices: hex };
        let m = build_mesh(&shape, 0.1).unwrap();
        assert!((m.measure() - shape.measure()).abs() < 1e-12);
        // Each interior edge is shared by exactly two triangles.
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for e in 0..m.n_elements() {
            let t = m.element(e);
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            let on_boundary = m.is_boundary(a) && m.is_boundary(b);
            assert!(count == 2 || (count == 1 && on_boundary));
        }
    }

    #[test]
    fn gradients_reproduce_linear_functions() {
        let m = build_mesh(&CrossSectionShape::Disk { radius: 1.0 }, 0.2).unwrap();
        for e in 0..m.n_elements() {
            let g = m.gradient(e);
            let nodes = m.element(e);
            // u = 2x − 3y has gradient (2, −3).
            let u: Vec<f64> = nodes
                .iter()
                .map(|&i| 2.0 * m.node(i)[0] - 3.0 * m.node(i)[1])
                .collect();
            let gx: f64 = (0..3).map(|a| g[a] * u[a]).sum();
            let gy: f64 = (0..3).map(|a| g[3 + a] * u[a]).sum();
            assert!((gx - 2.0).abs() < 1e-9 && (gy + 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn export_format() {
        let m = build_mesh(&CrossSectionShape::interval(1.0), 0.5).unwrap();
        let mut buf = Vec::new();
        m.export(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "nodes 3 elements 2 dim 1");
        assert_eq!(lines[4], "0 0 1");
        assert_eq!(lines[6], "boundary 2");
        assert_eq!(lines.len(), 9);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(build_mesh(
            &CrossSectionShape::Annulus {
                inner: 1.0,
                outer: 1.0
            },
            0.1
        )
        .is_err());
        assert!(build_mesh(&CrossSectionShape::Disk { radius: 1.0 }, 0.0).is_err());
    }
}
