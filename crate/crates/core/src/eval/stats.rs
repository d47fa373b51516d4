//! Paired t-tests with two-sided p-values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub df: usize,
    pub mean_diff: f64,
}

/// Paired t-test on `a - b` with `n - 1` degrees of freedom.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Config(format!(
            "paired t-test needs equal lengths >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::DegenerateDifferences);
    }
    let t = mean / (var / n).sqrt();
    let df = d.len() - 1;
    Ok(TTest {
        t,
        p: two_sided_p(t, df),
        df,
        mean_diff: mean,
    })
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: usize) -> f64 {
    assert!(df >= 1, "df must be >= 1");
    let t = t.abs();
    if t.is_infinite() {
        return 0.0;
    }
    if df == 2 {
        // P(T <= t) = 1/2 + t / (2 sqrt(t^2 + 2))
        return 1.0 - t / (t * t + 2.0).sqrt();
    }
    let nu = df as f64;
    let c = density_constant(df);
    let f = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let central = adaptive_simpson(&f, 0.0, t, 1e-12, 50);
    (1.0 - 2.0 * central).clamp(0.0, 1.0)
}

/// Gamma((nu+1)/2) / (sqrt(nu pi) Gamma(nu/2)), via the exact half-integer
/// recursion g(nu + 2) = g(nu) (nu + 1) / nu.
fn density_constant(df: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let mut g = if df % 2 == 1 { 1.0 / pi.sqrt() } else { pi.sqrt() / 2.0 };
    let mut nu = if df % 2 == 1 { 1 } else { 2 };
    while nu < df {
        g *= (nu as f64 + 1.0) / nu as f64;
        nu += 2;
    }
    g / (df as f64 * pi).sqrt()
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}
