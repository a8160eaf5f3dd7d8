//! Simplicial P1 meshes and piecewise-linear field operations.
//!
//! Coordinates are stored as `[x, y]` pairs; 1D meshes keep `y = 0`. Each
//! element caches its measure and the (constant) gradients of its local hat
//! functions, so gradients of P1 fields reduce to a weighted sum per element.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    UnitSquare,
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::UnitSquare => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    domain: DomainSpec,
    dim: usize,
    nodes: Vec<Point>,
    /// Flat connectivity, `dim + 1` node indices per element.
    elements: Vec<usize>,
    boundary: Vec<bool>,
    volumes: Vec<f64>,
    /// Gradients of the local hat functions, `dim + 1` per element.
    shape_grads: Vec<[f64; 2]>,
    lumped_mass: Vec<f64>,
    h: f64,
}

/// Builds an interval or unit-square mesh with `resolution` cells per side.
///
/// The square is split into right triangles along the `(i, j) → (i+1, j+1)`
/// diagonal of each grid cell.
pub fn build_mesh(domain: DomainSpec, resolution: usize) -> Result<Mesh> {
    if resolution < 2 {
        return Err(Error::InvalidConfig(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    match domain {
        DomainSpec::Interval { a, b } => {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "interval endpoints must satisfy a < b, got ({a}, {b})"
                )));
            }
            Ok(interval(domain, a, b, resolution))
        }
        DomainSpec::UnitSquare => Ok(unit_square(domain, resolution)),
    }
}

fn interval(domain: DomainSpec, a: f64, b: f64, cells: usize) -> Mesh {
    let len = b - a;
    let nodes: Vec<Point> = (0..=cells)
        .map(|k| [a + len * (k as f64) / (cells as f64), 0.0])
        .collect();
    let mut boundary = vec![false; cells + 1];
    boundary[0] = true;
    boundary[cells] = true;
    let elements: Vec<usize> = (0..cells).flat_map(|k| [k, k + 1]).collect();
    Mesh::assemble(domain, 1, nodes, elements, boundary, len / cells as f64)
}

fn unit_square(domain: DomainSpec, n: usize) -> Mesh {
    let side = n + 1;
    let mut nodes = Vec::with_capacity(side * side);
    let mut boundary = Vec::with_capacity(side * side);
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let id = |i: usize, j: usize| i + j * side;
    let mut elements = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.extend_from_slice(&[p00, p10, p11]);
            elements.extend_from_slice(&[p00, p11, p01]);
        }
    }
    Mesh::assemble(
        domain,
        2,
        nodes,
        elements,
        boundary,
        std::f64::consts::SQRT_2 / n as f64,
    )
}

impl Mesh {
    fn assemble(
        domain: DomainSpec,
        dim: usize,
        nodes: Vec<Point>,
        elements: Vec<usize>,
        boundary: Vec<bool>,
        h: f64,
    ) -> Mesh {
        let npe = dim + 1;
        let n_elem = elements.len() / npe;
        let mut volumes = Vec::with_capacity(n_elem);
        let mut shape_grads = Vec::with_capacity(elements.len());
        let mut lumped_mass = vec![0.0; nodes.len()];
        for conn in elements.chunks_exact(npe) {
            let (vol, grads) = match dim {
                1 => {
                    let len = nodes[conn[1]][0] - nodes[conn[0]][0];
                    (len, vec![[-1.0 / len, 0.0], [1.0 / len, 0.0]])
                }
                _ => triangle_geometry(nodes[conn[0]], nodes[conn[1]], nodes[conn[2]]),
            };
            for &node in conn {
                lumped_mass[node] += vol / npe as f64;
            }
            volumes.push(vol);
            shape_grads.extend(grads);
        }
        Mesh {
            domain,
            dim,
            nodes,
            elements,
            boundary,
            volumes,
            shape_grads,
            lumped_mass,
            h,
        }
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.volumes.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    /// Node indices of element `e`.
    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.nodes_per_element();
        &self.elements[e * npe..(e + 1) * npe]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.elements.chunks_exact(self.nodes_per_element())
    }

    /// Hat-function gradients of element `e`, in the order of [`Mesh::element`].
    pub fn shape_gradients(&self, e: usize) -> &[[f64; 2]] {
        let npe = self.nodes_per_element();
        &self.shape_grads[e * npe..(e + 1) * npe]
    }

    pub fn volume(&self, e: usize) -> f64 {
        self.volumes[e]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| !self.boundary[i])
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total measure of Ω.
    pub fn measure(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Gradient of the P1 field `values` on element `e`.
    #[inline]
    pub fn element_gradient(&self, e: usize, values: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (&node, grad) in self.element(e).iter().zip(self.shape_gradients(e)) {
            g[0] += values[node] * grad[0];
            g[1] += values[node] * grad[1];
        }
        g
    }

    /// `(A u)_i = Σ_e |e| w_e ∇u_e · ∇ψ_i` for per-element weights `w_e`.
    ///
    /// With unit weights this is the P1 stiffness action. Boundary rows are
    /// assembled like any other row; callers zero them when needed.
    pub fn weighted_stiffness_apply(&self, weights: &[f64], u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..self.element_count() {
            let gu = self.element_gradient(e, u);
            let scale = self.volumes[e] * weights[e];
            for (&node, grad) in self.element(e).iter().zip(self.shape_gradients(e)) {
                out[node] += scale * (gu[0] * grad[0] + gu[1] * grad[1]);
            }
        }
    }

    /// Two CSV tables: node coordinates with boundary flags, and element connectivity.
    pub fn to_csv(&self) -> (String, String) {
        let mut nodes = String::from("node,x,y,boundary\n");
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                nodes,
                "{i},{},{},{}",
                crate::io::fmt_f64(p[0]),
                crate::io::fmt_f64(p[1]),
                u8::from(self.boundary[i])
            );
        }
        let mut elems = if self.dim == 1 {
            String::from("element,n0,n1\n")
        } else {
            String::from("element,n0,n1,n2\n")
        };
        for (e, conn) in self.elements().enumerate() {
            let ids: Vec<String> = conn.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(elems, "{e},{}", ids.join(","));
        }
        (nodes, elems)
    }
}

fn triangle_geometry(p0: Point, p1: Point, p2: Point) -> (f64, Vec<[f64; 2]>) {
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let area = 0.5 * det.abs();
    // ∇ψ_a = rot(p_c - p_b) / det for the edge opposite node a.
    let grad = |pb: Point, pc: Point| [(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det];
    (area, vec![grad(p1, p2), grad(p2, p0), grad(p0, p1)])
}

/// Nodal values of a piecewise-linear function on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        check_len(mesh.node_count(), values.len())?;
        Ok(ScalarField { values })
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        ScalarField {
            values: vec![0.0; mesh.node_count()],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        ScalarField {
            values: mesh.nodes().iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        check_len(mesh.node_count(), self.values.len())
    }
}

/// One gradient vector per element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGradients {
    pub grads: Vec<[f64; 2]>,
}

impl ElementGradients {
    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Largest Euclidean gradient norm over elements.
    pub fn max_norm(&self) -> f64 {
        self.grads
            .iter()
            .fold(0.0, |m, g| m.max((g[0] * g[0] + g[1] * g[1]).sqrt()))
    }
}

pub fn element_gradients(mesh: &Mesh, u: &ScalarField) -> Result<ElementGradients> {
    u.check_mesh(mesh)?;
    Ok(ElementGradients {
        grads: (0..mesh.element_count())
            .map(|e| mesh.element_gradient(e, u.values()))
            .collect(),
    })
}

/// Vertex-quadrature integral `Σ_i m_i v_i` with lumped masses `m_i`.
pub fn lumped_integral(mesh: &Mesh, nodal_values: &[f64]) -> Result<f64> {
    check_len(mesh.node_count(), nodal_values.len())?;
    Ok(mesh
        .lumped_mass()
        .iter()
        .zip(nodal_values)
        .map(|(m, v)| m * v)
        .sum())
}
