use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::quadrature::{adaptive_simpson, gauss_legendre_span};

/// Default absolute tolerance for antiderivative evaluations.
pub const DEFAULT_F_TOL: f64 = 1e-12;

/// Where a nonlinearity is evaluated: the node coordinate together with the
/// value of the principal eigenfunction there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub x: Point,
    pub phi1: f64,
}

impl Site {
    pub fn new(x: Point, phi1: f64) -> Self {
        Site { x, phi1 }
    }

    /// A site known only through its eigenfunction value.
    pub fn from_phi1(phi1: f64) -> Self {
        Site { x: [0.0, 0.0], phi1 }
    }
}

/// Right-hand side `f(x, t)` together with the branch sequences `β_n`, `γ_n`.
pub trait Nonlinearity: Send + Sync {
    fn name(&self) -> String;

    /// `f(x, t)` for `t ≥ 0`.
    fn f(&self, site: Site, t: f64) -> f64;

    fn beta(&self, n: u32) -> f64;

    fn gamma(&self, n: u32) -> f64;

    /// Phase (radians) swept by `t ↦ f(site, t)` over `[a, b]`, used to size
    /// quadrature panels. Non-oscillatory nonlinearities keep the default 0;
    /// an infinite value means "unbounded oscillation".
    fn phase_span(&self, _site: Site, _a: f64, _b: f64) -> f64 {
        0.0
    }

    /// `F(x, u) = ∫₀ᵘ f(x, s) ds` in closed form, when one is known.
    fn antiderivative_exact(&self, _site: Site, _u: f64) -> Option<f64> {
        None
    }
}

/// `f` with negative arguments clamped to `f(·, 0)`.
#[inline]
pub fn eval_f(nl: &dyn Nonlinearity, site: Site, t: f64) -> f64 {
    nl.f(site, t.max(0.0))
}

/// Branch bounds `(β_n, γ_n)`.
pub fn bounds_at(nl: &dyn Nonlinearity, n: i64) -> Result<(f64, f64)> {
    let n = u32::try_from(n)
        .map_err(|_| Error::Domain(format!("branch index must be a non-negative integer, got {n}")))?;
    Ok((nl.beta(n), nl.gamma(n)))
}

/// `F(x, u) = ∫₀ᵘ f(x, s) ds` to absolute accuracy `tol`.
///
/// `[0, u]` is walked in dyadic panels `[u/2^(k+1), u/2^k]`; each panel is
/// integrated by adaptive Simpson with an initial partition of one piece per
/// π/4 of phase, and receives a tolerance share proportional to its width.
/// The walk stops once the remaining `[0, a]` is bounded by
/// `a · max|f|` (sampled on the last panel) below `tol / 4`.
pub fn antiderivative(nl: &dyn Nonlinearity, site: Site, u: f64, tol: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("antiderivative needs u >= 0, got {u}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("quadrature tolerance must be positive, got {tol}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if let Some(v) = nl.antiderivative_exact(site, u) {
        return Ok(v);
    }
    let f = |s: f64| eval_f(nl, site, s);
    let mut hi = u;
    let mut total = 0.0;
    for _ in 0..1100 {
        let lo = 0.5 * hi;
        let pieces = pieces_for_phase(nl.phase_span(site, lo, hi), FRAC_PI_4);
        let panel_tol = 0.5 * tol * (hi - lo) / u;
        total += adaptive_simpson(&f, lo, hi, panel_tol, pieces, 40);
        let sampled = (0..=8)
            .map(|k| f(lo + (hi - lo) * k as f64 / 8.0).abs())
            .fold(0.0, f64::max);
        if lo * sampled <= 0.25 * tol || lo < f64::MIN_POSITIVE {
            break;
        }
        hi = lo;
    }
    Ok(total)
}

/// `∫_a^{a+width} f(x, s) ds` for a possibly tiny `width`.
///
/// Uses composite Gauss–Legendre with one panel per π/8 of phase when the
/// oscillation over the interval is bounded, otherwise falls back to a
/// difference of [`antiderivative`] values.
pub fn integrate_f(nl: &dyn Nonlinearity, site: Site, a: f64, width: f64, tol: f64) -> Result<f64> {
    if width == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = if width > 0.0 { (a, a + width) } else { (a + width, a) };
    if lo < 0.0 {
        return Err(Error::Domain(format!("integration interval reaches below zero ({lo:e})")));
    }
    let phase = if lo > 0.0 { nl.phase_span(site, lo, hi) } else { 0.0 };
    let oscillates_at_zero = lo == 0.0 && nl.phase_span(site, 0.0, hi) > 0.0;
    if phase.is_finite() && phase <= 1e4 && !oscillates_at_zero {
        let panels = pieces_for_phase(phase, FRAC_PI_8) + 1;
        return Ok(gauss_legendre_span(|s| eval_f(nl, site, s), a, width, panels));
    }
    Ok(antiderivative(nl, site, a + width, tol)? - antiderivative(nl, site, a, tol)?)
}

fn pieces_for_phase(phase: f64, per_piece: f64) -> usize {
    if phase.is_finite() && phase > 0.0 {
        ((phase / per_piece).ceil() as usize).clamp(1, 1 << 22)
    } else if phase.is_finite() {
        1
    } else {
        1 << 22
    }
}

/// The built-in oscillating example
///
/// ```text
/// f(x, t) = −λ₁ √(t/φ₁(x)) · sin(√φ₁(x) / √t),   t > 0;   f(x, 0) = 0
/// β_n = (2nπ + 3π/2)^(−2),   γ_n = (2nπ + π/4)^(−2)
/// ```
///
/// The spatial dependence enters only through `φ₁(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperExample {
    pub lambda1: f64,
}

pub fn make_example_nonlinearity(lambda1: f64) -> Result<PaperExample> {
    if !(lambda1 > 0.0) || !lambda1.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda1 must be positive, got {lambda1}")));
    }
    Ok(PaperExample { lambda1 })
}

impl PaperExample {
    /// Independent route to `F`: with `z = √(φ₁/s)`,
    /// `F(φ₁, u) = −2λ₁φ₁ ∫_{√(φ₁/u)}^∞ sin z / z⁴ dz`.
    ///
    /// The integral is truncated at `Z_max` where the tail bound
    /// `2λ₁φ₁ / (3 Z_max³)` drops below `tol / 2`, and the rest is integrated
    /// by Gauss–Legendre on panels of width at most π/4.
    pub fn antiderivative_by_substitution(&self, phi1: f64, u: f64, tol: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let scale = 2.0 * self.lambda1 * phi1;
        let z0 = (phi1 / u).sqrt();
        let z_max = (2.0 * scale / (3.0 * tol)).cbrt().max(z0);
        let panels = ((z_max - z0) / FRAC_PI_4).ceil().max(1.0) as usize;
        let integral = gauss_legendre_span(|z| z.sin() / z.powi(4), z0, z_max - z0, panels);
        -scale * integral
    }
}

impl Nonlinearity for PaperExample {
    fn name(&self) -> String {
        "paper_example".into()
    }

    fn f(&self, site: Site, t: f64) -> f64 {
        if t <= 0.0 || site.phi1 <= 0.0 {
            return 0.0;
        }
        // sin(z)/z keeps |f| ≤ λ₁ exact in floating point
        let z = (site.phi1 / t).sqrt();
        if z.is_infinite() {
            return 0.0;
        }
        -self.lambda1 * (z.sin() / z)
    }

    fn beta(&self, n: u32) -> f64 {
        (1.0 / (2.0 * n as f64 * PI + 1.5 * PI)).powi(2)
    }

    fn gamma(&self, n: u32) -> f64 {
        (1.0 / (2.0 * n as f64 * PI + FRAC_PI_4)).powi(2)
    }

    fn phase_span(&self, site: Site, a: f64, b: f64) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo <= 0.0 {
            return f64::INFINITY;
        }
        site.phi1.max(0.0).sqrt() * (1.0 / lo.sqrt() - 1.0 / hi.sqrt())
    }
}

type SiteFn = Box<dyn Fn(Site, f64) -> f64 + Send + Sync>;
type SeqFn = Box<dyn Fn(u32) -> f64 + Send + Sync>;
type PhaseFn = Box<dyn Fn(Site, f64, f64) -> f64 + Send + Sync>;

/// Nonlinearity assembled from closures; the library route for user-defined data.
pub struct CustomNonlinearity {
    name: String,
    f: SiteFn,
    beta: SeqFn,
    gamma: SeqFn,
    antiderivative: Option<SiteFn>,
    phase: Option<PhaseFn>,
}

impl CustomNonlinearity {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(Site, f64) -> f64 + Send + Sync + 'static,
        beta: impl Fn(u32) -> f64 + Send + Sync + 'static,
        gamma: impl Fn(u32) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomNonlinearity {
            name: name.into(),
            f: Box::new(f),
            beta: Box::new(beta),
            gamma: Box::new(gamma),
            antiderivative: None,
            phase: None,
        }
    }

    pub fn with_antiderivative(mut self, big_f: impl Fn(Site, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.antiderivative = Some(Box::new(big_f));
        self
    }

    pub fn with_phase_span(mut self, phase: impl Fn(Site, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.phase = Some(Box::new(phase));
        self
    }
}

impl std::fmt::Debug for CustomNonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomNonlinearity").field("name", &self.name).finish()
    }
}

impl Nonlinearity for CustomNonlinearity {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn f(&self, site: Site, t: f64) -> f64 {
        (self.f)(site, t)
    }

    fn beta(&self, n: u32) -> f64 {
        (self.beta)(n)
    }

    fn gamma(&self, n: u32) -> f64 {
        (self.gamma)(n)
    }

    fn phase_span(&self, site: Site, a: f64, b: f64) -> f64 {
        self.phase.as_ref().map_or(0.0, |p| p(site, a, b))
    }

    fn antiderivative_exact(&self, site: Site, u: f64) -> Option<f64> {
        self.antiderivative.as_ref().map(|big_f| big_f(site, u))
    }
}

/// `f ≡ c` with `F(x, u) = c·u` and the given branch sequences.
pub fn constant_source(
    c: f64,
    beta: impl Fn(u32) -> f64 + Send + Sync + 'static,
    gamma: impl Fn(u32) -> f64 + Send + Sync + 'static,
) -> CustomNonlinearity {
    CustomNonlinearity::new(format!("constant({c})"), move |_, _| c, beta, gamma)
        .with_antiderivative(move |_, u| c * u)
}
