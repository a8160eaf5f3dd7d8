//! One-dimensional quadrature: adaptive Simpson and composite Gauss–Legendre.

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss–Legendre over `panels` equal pieces of `[a, b]`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    gauss_legendre_span(f, a, b - a, panels)
}

/// Same as [`gauss_legendre`] over `[a, a + span]`, with the span given
/// directly so that short intervals keep full relative accuracy.
pub fn gauss_legendre_span(f: impl Fn(f64) -> f64, a: f64, span: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let width = span / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * width;
        let mut s = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

/// Adaptive Simpson with Richardson correction.
///
/// `[a, b]` is first cut into `pieces` equal subintervals, each of which gets
/// a share of `tol` proportional to its width. The recursion stops at
/// `max_depth` levels below that initial partition.
pub fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    pieces: usize,
    max_depth: u32,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let pieces = pieces.max(1);
    let width = (b - a) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == pieces { b } else { lo + width };
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = simpson(lo, hi, fa, fm, fb);
        total += refine(f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, max_depth);
    }
    total
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        let p = |x: f64| 3.0 * x.powi(5) - x.powi(2) + 1.0;
        let exact = 0.5 * 2f64.powi(6) - 8.0 / 3.0 + 2.0;
        assert!((gauss_legendre(p, 0.0, 2.0, 1) - exact).abs() < 1e-12);
        assert!((adaptive_simpson(&p, 0.0, 2.0, 1e-12, 1, 40) - exact).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_integrand() {
        let f = |x: f64| (20.0 * x).sin() * x.exp();
        // ∫₀¹ e^x sin(20x) dx = [e^x (sin 20x − 20 cos 20x)] / 401
        let e = 1f64.exp();
        let exact = (e * (20f64.sin() - 20.0 * 20f64.cos()) + 20.0) / 401.0;
        assert!((adaptive_simpson(&f, 0.0, 1.0, 1e-12, 8, 50) - exact).abs() < 1e-11);
        assert!((gauss_legendre(f, 0.0, 1.0, 32) - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_and_empty() {
        let f = |x: f64| x;
        assert_eq!(adaptive_simpson(&f, 1.0, 1.0, 1e-10, 1, 10), 0.0);
        assert!((gauss_legendre(f, 1.0, 0.0, 1) + 0.5).abs() < 1e-15);
    }
}
