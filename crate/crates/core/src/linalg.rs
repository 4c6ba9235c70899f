//! Small dense linear-algebra helpers.

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `k x k`; on success `b` holds `x`. Returns `None` when a
/// pivot falls below `pivot_tol`.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], k: usize, pivot_tol: f64) -> Option<()> {
    debug_assert_eq!(a.len(), k * k);
    debug_assert_eq!(b.len(), k);
    for col in 0..k {
        let (piv, max) = (col..k)
            .map(|r| (r, a[r * k + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if max <= pivot_tol {
            return None;
        }
        if piv != col {
            for j in 0..k {
                a.swap(piv * k + j, col * k + j);
            }
            b.swap(piv, col);
        }
        let d = a[col * k + col];
        for r in col + 1..k {
            let f = a[r * k + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..k {
                a[r * k + j] -= f * a[col * k + j];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..k).rev() {
        let mut s = b[col];
        for j in col + 1..k {
            s -= a[col * k + j] * b[j];
        }
        b[col] = s / a[col * k + col];
    }
    Some(())
}

pub fn solve(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut a = a.to_vec();
    let mut x = b.to_vec();
    solve_in_place(&mut a, &mut x, k, 1e-13)?;
    Some(x)
}

/// Softmax with max-shift.
pub fn softmax(theta: &[f64]) -> Vec<f64> {
    let m = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = theta.iter().map(|t| (t - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn linf(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn l2_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}
