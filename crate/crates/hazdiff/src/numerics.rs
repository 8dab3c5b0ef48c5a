//! Small numerical utilities: dense linear solves for the low-dimensional
//! systems that arise in the fitters, Gauss–Legendre quadrature rules, and a
//! few stable scalar functions.
//!
//! Every design matrix in this crate has a handful of columns, so a pivoted
//! Gauss–Jordan solve is simpler and faster than pulling in a linear algebra
//! crate.

use std::sync::OnceLock;

/// Solve `A x = b` in place for a small dense row-major `n x n` matrix.
/// Returns `None` when the matrix is numerically singular.
pub(crate) fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        // partial pivot
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in (col + 1)..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = 1.0 / a[col * n + col];
        for k in col..n {
            a[col * n + k] *= inv;
        }
        b[col] *= inv;
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    Some(())
}

/// Solve `A x = b` without clobbering the inputs.
pub(crate) fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut aa = a.to_vec();
    let mut bb = b.to_vec();
    solve_in_place(&mut aa, &mut bb, n)?;
    Some(bb)
}

/// Invert a small dense row-major matrix. `None` when singular.
pub(crate) fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve(a, &e, n)?;
        for i in 0..n {
            out[i * n + j] = col[i];
        }
    }
    Some(out)
}

/// Logistic function.
pub(crate) fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(e^x - 1) / x`, continuous through `x = 0`.
///
/// Used for the closed-form interval integrals `∫ e^{bt} dt`; `exp_m1` keeps
/// full relative precision as `b (t1 - t0) -> 0`, which a naive
/// `(e^{bt1} - e^{bt0}) / b` would lose to cancellation.
pub(crate) fn em1(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// Exact `∫_{t0}^{t1} e^{b t} dt`.
pub(crate) fn int_exp(b: f64, t0: f64, t1: f64) -> f64 {
    let len = t1 - t0;
    (b * t0).exp() * len * em1(b * len)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed once by Newton iteration on the Legendre polynomial.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let dp = {
                    let mut p0 = 1.0;
                    let mut p1 = x;
                    for k in 2..=n {
                        let kf = k as f64;
                        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (x * p1 - p0) / (x * x - 1.0)
                };
                nodes[i] = -x;
                nodes[n - 1 - i] = x;
                let w = 2.0 / ((1.0 - x * x) * dp * dp);
                weights[i] = w;
                weights[n - 1 - i] = w;
                break;
            }
        }
    }
    (nodes, weights)
}

/// The 16-node rule used for every per-interval quadrature in the score
/// evaluations.
pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_2x2() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let b = [5.0, 10.0];
        let x = solve(&a, &b, 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_detected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(solve(&a, &[1.0, 2.0], 2).is_none());
        assert!(invert(&a, 2).is_none());
    }

    #[test]
    fn invert_matches_solve() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let inv = invert(&a, 3).unwrap();
        // A * A^{-1} = I
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a[i * 3 + k] * inv[k * 3 + j];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn int_exp_small_rate() {
        // b -> 0 limit is the interval length
        assert!((int_exp(0.0, 1.0, 3.0) - 2.0).abs() < 1e-15);
        assert!((int_exp(1e-14, 1.0, 3.0) - 2.0).abs() < 1e-12);
        // moderate rate against the direct antiderivative
        let direct = (0.3f64 * 3.0).exp() / 0.3 - (0.3f64 * 1.0).exp() / 0.3;
        assert!((int_exp(0.3, 1.0, 3.0) - direct).abs() < 1e-14);
    }

    #[test]
    fn gl16_integrates_polynomials_exactly() {
        let (nodes, weights) = gl16();
        // degree 31 is the highest exact degree for 16 nodes
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            s += w * x.powi(30);
        }
        assert!((s - 2.0 / 31.0).abs() < 1e-14, "got {s}");
        let total: f64 = weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl16_integrates_exponential() {
        let (nodes, weights) = gl16();
        // ∫_0^1 e^t dt over mapped nodes
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            let t = 0.5 * (x + 1.0);
            s += w * 0.5 * t.exp();
        }
        assert!((s - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }
}
