//! Conjugate gradients for the interior-node stiffness system.

use crate::error::{Error, Result};
use crate::mesh::Mesh;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// P1 stiffness matrix restricted to interior nodes, applied matrix-free.
///
/// Vectors have full node length; boundary entries are ignored on input and
/// zeroed on output, which realizes the homogeneous Dirichlet condition.
pub struct InteriorStiffness<'a> {
    mesh: &'a Mesh,
    ones: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> InteriorStiffness<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        InteriorStiffness {
            mesh,
            ones: vec![1.0; mesh.element_count()],
            scratch: vec![0.0; mesh.node_count()],
        }
    }

    pub fn apply(&mut self, x: &[f64], out: &mut [f64]) {
        self.scratch.copy_from_slice(x);
        for (i, v) in self.scratch.iter_mut().enumerate() {
            if self.mesh.is_boundary(i) {
                *v = 0.0;
            }
        }
        self.mesh.weighted_stiffness_apply(&self.ones, &self.scratch, out);
        for (i, v) in out.iter_mut().enumerate() {
            if self.mesh.is_boundary(i) {
                *v = 0.0;
            }
        }
    }

    /// Solves `K x = b` on interior nodes to relative residual `rel_tol`.
    pub fn solve(&mut self, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<usize> {
        let n = b.len();
        let mut r = b.to_vec();
        for (i, v) in r.iter_mut().enumerate() {
            if self.mesh.is_boundary(i) {
                *v = 0.0;
            }
        }
        let b_norm = dot(&r, &r).sqrt();
        x.iter_mut().for_each(|v| *v = 0.0);
        if b_norm == 0.0 {
            return Ok(0);
        }
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        for it in 0..max_iter {
            if rr.sqrt() <= rel_tol * b_norm {
                return Ok(it);
            }
            self.apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
        if rr.sqrt() <= rel_tol * b_norm {
            return Ok(max_iter);
        }
        Err(Error::Convergence {
            iterations: max_iter,
            residual: rr.sqrt() / b_norm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};

    #[test]
    fn cg_recovers_poisson_quadratic() {
        // -u'' = 1 on (0,1): P1 with lumped load reproduces x(1-x)/2 at the nodes.
        let mesh = build_mesh(DomainSpec::Interval { a: 0.0, b: 1.0 }, 64).unwrap();
        let b: Vec<f64> = mesh.lumped_mass().to_vec();
        let mut x = vec![0.0; mesh.node_count()];
        let mut k = InteriorStiffness::new(&mesh);
        k.solve(&b, &mut x, 1e-13, 1000).unwrap();
        for (p, v) in mesh.nodes().iter().zip(&x) {
            assert!((v - p[0] * (1.0 - p[0]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_reports_cap() {
        let mesh = build_mesh(DomainSpec::UnitSquare, 16).unwrap();
        let b = vec![1.0; mesh.node_count()];
        let mut x = vec![0.0; mesh.node_count()];
        let err = InteriorStiffness::new(&mesh).solve(&b, &mut x, 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::Convergence { iterations: 2, .. }));
    }
}
