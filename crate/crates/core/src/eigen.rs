//! First Dirichlet eigenpair of `−Δ` on a P1 mesh.
//!
//! Solves the generalized problem `K φ = λ M φ` with the interior stiffness
//! `K` and the lumped mass `M` by inverse power iteration. Each step solves
//! `K y = M x` with conjugate gradients; the Rayleigh quotient
//! `yᵀ M x / yᵀ M y` is tracked until successive values differ by at most
//! `tol`. The result is sign-fixed positive and scaled so that `max φ₁ = 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, InteriorStiffness};
use crate::mesh::{Mesh, ScalarField};

/// Relative residual for the inner CG solves.
pub const CG_REL_TOL: f64 = 1e-12;
pub const MAX_POWER_ITERATIONS: usize = 1000;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda1: f64,
    pub phi1: ScalarField,
    /// `‖K φ₁ − λ₁ M φ₁‖_∞` over interior nodes.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub lambda1: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl EigenPair {
    pub fn summary(&self) -> EigenSummary {
        EigenSummary {
            lambda1: self.lambda1,
            residual: self.residual,
            iterations: self.iterations,
        }
    }

    pub fn to_csv(&self, mesh: &Mesh) -> String {
        crate::io::field_csv(mesh, &self.phi1, "phi1")
    }
}

pub fn first_eigenpair(mesh: &Mesh, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("eigen tolerance must be positive, got {tol}")));
    }
    let n = mesh.node_count();
    let mass = mesh.lumped_mass();
    let mut stiffness = InteriorStiffness::new(mesh);
    let cg_cap = 10 * n + 100;

    let mut x: Vec<f64> = (0..n).map(|i| if mesh.is_boundary(i) { 0.0 } else { 1.0 }).collect();
    let mut y = vec![0.0; n];
    let mut mx = vec![0.0; n];
    let mut previous = f64::INFINITY;
    let mut converged = None;
    for it in 1..=MAX_POWER_ITERATIONS {
        for i in 0..n {
            mx[i] = mass[i] * x[i];
        }
        stiffness.solve(&mx, &mut y, CG_REL_TOL, cg_cap)?;
        let my: f64 = y.iter().zip(mass).map(|(v, m)| m * v * v).sum();
        let rayleigh = dot(&y, &mx) / my;
        let scale = norm_inf(&y);
        for i in 0..n {
            x[i] = y[i] / scale;
        }
        if (rayleigh - previous).abs() <= tol {
            converged = Some(it);
            break;
        }
        previous = rayleigh;
    }

    let residual_of = |stiffness: &mut InteriorStiffness, phi: &[f64], lambda: f64| {
        let mut kx = vec![0.0; n];
        stiffness.apply(phi, &mut kx);
        (0..n)
            .filter(|&i| !mesh.is_boundary(i))
            .map(|i| (kx[i] - lambda * mass[i] * phi[i]).abs())
            .fold(0.0, f64::max)
    };

    let Some(iterations) = converged else {
        let lambda = rayleigh_quotient(&mut stiffness, &x, mass);
        return Err(Error::Convergence {
            iterations: MAX_POWER_ITERATIONS,
            residual: residual_of(&mut stiffness, &x, lambda),
        });
    };

    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let top = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    x.iter_mut().for_each(|v| *v /= top);
    for i in 0..n {
        if mesh.is_boundary(i) {
            x[i] = 0.0;
        } else if x[i] <= 0.0 {
            return Err(Error::Domain(format!(
                "principal eigenvector not positive at interior node {i} ({:e})",
                x[i]
            )));
        }
    }

    let lambda1 = rayleigh_quotient(&mut stiffness, &x, mass);
    let residual = residual_of(&mut stiffness, &x, lambda1);
    Ok(EigenPair {
        lambda1,
        phi1: ScalarField::new(mesh, x)?,
        residual,
        iterations,
    })
}

fn rayleigh_quotient(stiffness: &mut InteriorStiffness, x: &[f64], mass: &[f64]) -> f64 {
    let mut kx = vec![0.0; x.len()];
    stiffness.apply(x, &mut kx);
    let mx: f64 = x.iter().zip(mass).map(|(v, m)| m * v * v).sum();
    dot(x, &kx) / mx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};
    use std::f64::consts::PI;

    fn interval(b: f64, cells: usize) -> Mesh {
        build_mesh(DomainSpec::Interval { a: 0.0, b }, cells).unwrap()
    }

    #[test]
    fn unit_interval_matches_sine() {
        let mesh = interval(1.0, 256);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        assert!((eig.lambda1 - PI * PI).abs() / (PI * PI) < 5e-3);
        let err = mesh
            .nodes()
            .iter()
            .zip(eig.phi1.values())
            .map(|(p, v)| (v - (PI * p[0]).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "sup error {err}");
        assert!(eig.residual < 1e-8, "residual {}", eig.residual);
    }

    #[test]
    fn normalization_and_sign() {
        let mesh = build_mesh(DomainSpec::UnitSquare, 12).unwrap();
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let v = eig.phi1.values();
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, 1.0);
        for i in 0..mesh.node_count() {
            if mesh.is_boundary(i) {
                assert_eq!(v[i], 0.0);
            } else {
                assert!(v[i] > 0.0);
            }
        }
    }

    #[test]
    fn symmetric_on_unit_interval() {
        let mesh = interval(1.0, 128);
        let eig = first_eigenpair(&mesh, 1e-12).unwrap();
        let v = eig.phi1.values();
        let n = v.len() - 1;
        for i in 0..=n {
            assert!((v[i] - v[n - i]).abs() < 1e-10);
        }
    }

    #[test]
    fn domain_rescaling() {
        let l1 = first_eigenpair(&interval(1.0, 256), 1e-12).unwrap().lambda1;
        let l2 = first_eigenpair(&interval(2.0, 256), 1e-12).unwrap().lambda1;
        assert!((l2 * 4.0 - l1).abs() / l1 < 1e-3);
        assert!((l2 - PI * PI / 4.0).abs() / (PI * PI / 4.0) < 5e-3);
    }

    // Lumped-mass P1 eigenvalues approach π² from below on uniform meshes,
    // so the error shrinks monotonically while the values increase.
    #[test]
    fn refinement_is_monotone() {
        let lambdas: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&c| first_eigenpair(&interval(1.0, c), 1e-12).unwrap().lambda1)
            .collect();
        let exact = PI * PI;
        for w in lambdas.windows(2) {
            assert!((w[1] - exact).abs() < (w[0] - exact).abs());
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(
            first_eigenpair(&interval(1.0, 8), 0.0),
            Err(Error::InvalidConfig(_))
        ));
    }
}
