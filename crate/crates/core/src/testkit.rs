//! Test-only oracles, kept independent of the library's computation paths.

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Complex quadrature of `g(η) e^{izη}` for a real integrand `g`.
pub fn oscillatory_quadrature(
    g: &dyn Fn(f64) -> f64,
    z: f64,
    a: f64,
    b: f64,
    tol: f64,
) -> num_complex::Complex64 {
    let re = adaptive_simpson(&|x| g(x) * (z * x).cos(), a, b, tol);
    let im = adaptive_simpson(&|x| g(x) * (z * x).sin(), a, b, tol);
    num_complex::Complex64::new(re, im)
}

/// Standard normal draw via Box–Muller on a [`crate::rng::SplitMix64`] stream.
pub fn gaussian_draw(rng: &mut crate::rng::SplitMix64) -> f64 {
    let u1 = rng.next_f64().max(f64::MIN_POSITIVE);
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        // ∫₀¹ (3x² + 2x) dx = 2
        let got = adaptive_simpson(&|x| 3.0 * x * x + 2.0 * x, 0.0, 1.0, 1e-12);
        assert!((got - 2.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_handles_oscillation() {
        // ∫₀^π sin(10x) dx = (1 - cos(10π)) / 10 = 0.2 · sin²(5π) → 0
        let got = adaptive_simpson(&|x| (10.0 * x).sin(), 0.0, core::f64::consts::PI, 1e-12);
        assert!(got.abs() < 1e-10, "{got}");
    }
}
