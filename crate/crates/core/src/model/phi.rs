use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_span;

/// Declared constants of the ellipticity and growth brackets
///
/// ```text
/// γ (κ + s)^(p−2) ≤ φ(s²) ≤ Γ (κ + s)^(p−2)
/// (γ − ½) φ(s) ≤ φ′(s) s ≤ Γ φ(s)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityConstants {
    pub gamma: f64,
    pub big_gamma: f64,
    pub kappa: f64,
    pub p: f64,
}

/// The function φ of the operator `−div(φ(|∇u|²)∇u)`.
///
/// User-defined operators implement this trait and are handed to the solver
/// and the CLI (see [`crate::cli::Plugins`]) as `Box<dyn PhiOperator>`.
pub trait PhiOperator: Send + Sync {
    fn name(&self) -> String;

    fn phi(&self, s: f64) -> f64;

    fn phi_prime(&self, s: f64) -> f64;

    /// `Φ(s) = ∫₀ˢ φ`.
    fn capital_phi(&self, s: f64) -> f64;

    /// `Φ(s + ds) − Φ(s)` without cancellation when `ds` is small.
    fn capital_phi_increment(&self, s: f64, ds: f64) -> f64 {
        gauss_legendre_span(|x| self.phi(x.max(0.0)), s, ds, 1)
    }

    fn constants(&self) -> EllipticityConstants;
}

/// `(s + ds)^a − s^a` without cancellation for small `ds`.
fn pow_increment(s: f64, ds: f64, a: f64) -> f64 {
    if s == 0.0 {
        return ds.max(0.0).powf(a);
    }
    s.powf(a) * (a * (ds / s).ln_1p()).exp_m1()
}

/// `φ(s) = s^(p/2 − 1)`, i.e. the p-Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PLaplacian {
    p: f64,
    constants: EllipticityConstants,
}

/// Builds the p-Laplacian operator for `p ≥ 2`.
///
/// Declared constants: `κ = 0`, `γ = min(1, (p−1)/2)`, `Γ = max(1, p/2 − 1)`.
/// These are the tightest choice making both brackets hold; for `p = 2` they
/// reduce to `(γ, Γ) = (½, 1)` and for `p ∈ [3, 4]` to `γ = Γ = 1`.
pub fn make_p_laplacian(p: f64) -> Result<PLaplacian> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidConfig(format!("p must be finite and at least 2, got {p}")));
    }
    Ok(PLaplacian {
        p,
        constants: EllipticityConstants {
            gamma: (0.5 * (p - 1.0)).min(1.0),
            big_gamma: (0.5 * p - 1.0).max(1.0),
            kappa: 0.0,
            p,
        },
    })
}

impl PLaplacian {
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Only meaningful for `p = 2`, where the envelope does not depend on κ.
    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::InvalidConfig(format!("kappa must lie in [0, 1], got {kappa}")));
        }
        if kappa != 0.0 && self.p != 2.0 {
            return Err(Error::InvalidConfig(
                "p_laplacian with p > 2 requires kappa = 0".into(),
            ));
        }
        self.constants.kappa = kappa;
        Ok(self)
    }

    pub fn with_constants(mut self, gamma: f64, big_gamma: f64) -> Self {
        self.constants.gamma = gamma;
        self.constants.big_gamma = big_gamma;
        self
    }
}

impl PhiOperator for PLaplacian {
    fn name(&self) -> String {
        format!("p_laplacian(p={})", self.p)
    }

    fn phi(&self, s: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            s.powf(0.5 * self.p - 1.0)
        }
    }

    fn phi_prime(&self, s: f64) -> f64 {
        if self.p == 2.0 {
            0.0
        } else {
            (0.5 * self.p - 1.0) * s.powf(0.5 * self.p - 2.0)
        }
    }

    fn capital_phi(&self, s: f64) -> f64 {
        2.0 / self.p * s.powf(0.5 * self.p)
    }

    fn capital_phi_increment(&self, s: f64, ds: f64) -> f64 {
        if self.p == 2.0 {
            ds
        } else {
            2.0 / self.p * pow_increment(s, ds, 0.5 * self.p)
        }
    }

    fn constants(&self) -> EllipticityConstants {
        self.constants
    }
}

/// `φ(s) = (κ + √s)^(p−2)`: the ellipticity envelope itself, so the lower
/// and upper brackets hold with equality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedPower {
    p: f64,
    kappa: f64,
    constants: EllipticityConstants,
}

/// Default constants: `Γ = max(1, (p−2)/2)`; `γ = ½` when `κ > 0` (the ratio
/// `φ′(s)s/φ(s)` vanishes as `s → 0`), otherwise `min(1, (p−1)/2)`.
pub fn make_regularized_power(p: f64, kappa: f64) -> Result<RegularizedPower> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidConfig(format!("p must be finite and at least 2, got {p}")));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidConfig(format!("kappa must lie in [0, 1], got {kappa}")));
    }
    let gamma = if kappa > 0.0 { 0.5 } else { (0.5 * (p - 1.0)).min(1.0) };
    Ok(RegularizedPower {
        p,
        kappa,
        constants: EllipticityConstants {
            gamma,
            big_gamma: (0.5 * (p - 2.0)).max(1.0),
            kappa,
            p,
        },
    })
}

impl RegularizedPower {
    pub fn with_constants(mut self, gamma: f64, big_gamma: f64) -> Self {
        self.constants.gamma = gamma;
        self.constants.big_gamma = big_gamma;
        self
    }

    // Φ(r²) = 2 ∫₀ʳ ρ (κ+ρ)^(p−2) dρ
    fn primitive_in_r(&self, r: f64) -> f64 {
        let (p, k) = (self.p, self.kappa);
        let b = k + r;
        let at = |b: f64| b.powf(p) / p - k * b.powf(p - 1.0) / (p - 1.0);
        2.0 * (at(b) - at(k))
    }
}

impl PhiOperator for RegularizedPower {
    fn name(&self) -> String {
        format!("regularized_power(p={}, kappa={})", self.p, self.kappa)
    }

    fn phi(&self, s: f64) -> f64 {
        (self.kappa + s.sqrt()).powf(self.p - 2.0)
    }

    fn phi_prime(&self, s: f64) -> f64 {
        if self.p == 2.0 {
            return 0.0;
        }
        let r = s.sqrt();
        (self.p - 2.0) * (self.kappa + r).powf(self.p - 3.0) / (2.0 * r)
    }

    fn capital_phi(&self, s: f64) -> f64 {
        self.primitive_in_r(s.sqrt())
    }

    fn capital_phi_increment(&self, s: f64, ds: f64) -> f64 {
        // integrate in r = √ξ, where the integrand 2r(κ+r)^(p−2) is smooth
        let r0 = s.sqrt();
        let r1 = (s + ds).max(0.0).sqrt();
        let dr = if r0 + r1 > 0.0 { ds / (r0 + r1) } else { 0.0 };
        let (p, k) = (self.p, self.kappa);
        gauss_legendre_span(|r| 2.0 * r * (k + r).powf(p - 2.0), r0, dr, 1)
    }

    fn constants(&self) -> EllipticityConstants {
        self.constants
    }
}
