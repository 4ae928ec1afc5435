//! Gauss-Hermite rules for the standard normal weight.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights such that `Σ wᵢ f(xᵢ) ≈ E[f(X)]` for `X ~ N(0, 1)`.
///
/// Nodes are eigenvalues of the Jacobi matrix of the probabilists' Hermite
/// polynomials (Golub-Welsch), polished by Newton steps on the orthonormal
/// recurrence. Weights come from the Christoffel function `1/Σ pₖ(x)²`.
/// Nodes are returned in ascending order.
pub fn standard_normal_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut x: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    x.sort_by(f64::total_cmp);
    for xi in &mut x {
        for _ in 0..3 {
            let (pn, pn1, _) = orthonormal(n, *xi);
            let dp = (n as f64).sqrt() * pn1;
            if dp == 0.0 || !dp.is_finite() {
                break;
            }
            *xi -= pn / dp;
        }
    }
    for i in 0..n / 2 {
        let m = (x[n - 1 - i] - x[i]) / 2.0;
        x[i] = -m;
        x[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let mut w: Vec<f64> = x.iter().map(|&xi| 1.0 / orthonormal(n, xi).2).collect();
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    (x, w)
}

/// `(p_n(x), p_{n−1}(x), Σ_{k<n} p_k(x)²)` for the orthonormal probabilists' Hermite family.
fn orthonormal(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sum = 0.0;
    for k in 0..n {
        sum += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, sum)
}
