//! Small quadrature toolbox: Gauss–Legendre rules and adaptive Simpson.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre polynomial with the Chebyshev-like
/// initial guess; accurate to machine precision for the modest orders
/// used here (n <= 64).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // initial guess for the i-th root (descending order)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| w * half).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to the given relative
/// tolerance (with a small absolute floor so zero integrals terminate).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(1e-300);
    simpson_recurse(f, a, b, fa, fm, fb, whole, rel_tol * scale, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
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
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // 16-point rule is exact through degree 31
        let (xs, ws) = gauss_legendre_on(16, 0.0, 1.0);
        let total: f64 = ws.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let s: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x).sum();
        assert!((s - 0.5).abs() < 1e-14);
        let s7: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(7)).sum();
        assert!((s7 - 0.125).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_handles_smooth_exponential() {
        let (xs, ws) = gauss_legendre_on(32, 0.0, 1.0);
        let s: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (-x).exp()).sum();
        assert!((s - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn adaptive_simpson_matches_closed_forms() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-10);
        assert!((v - 2.0).abs() < 1e-9);
        let v = adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 40.0, 1e-10);
        assert!((v - 1.0).abs() < 1e-8);
        let v = adaptive_simpson(&|_| 0.0, 0.0, 1.0, 1e-10);
        assert_eq!(v, 0.0);
    }
}
