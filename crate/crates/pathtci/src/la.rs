//! Small dense linear algebra for state dimensions up to ~16.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `out = m * v` for a row-major `d x d` matrix.
pub(crate) fn matvec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let d = v.len();
    debug_assert_eq!(m.len(), d * d);
    for i in 0..d {
        out[i] = dot(&m[i * d..(i + 1) * d], v);
    }
}

/// Solve `a x = b` in place by LU with partial pivoting; `a` is row-major
/// `d x d` and is destroyed. Returns `false` on a (numerically) singular
/// pivot.
pub(crate) fn solve_in_place(a: &mut [f64], b: &mut [f64]) -> bool {
    let d = b.len();
    debug_assert_eq!(a.len(), d * d);
    for col in 0..d {
        let mut piv = col;
        let mut best = a[col * d + col].abs();
        for r in col + 1..d {
            let v = a[r * d + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return false;
        }
        if piv != col {
            for c in 0..d {
                a.swap(col * d + c, piv * d + c);
            }
            b.swap(col, piv);
        }
        let inv = 1.0 / a[col * d + col];
        for r in col + 1..d {
            let f = a[r * d + col] * inv;
            if f == 0.0 {
                continue;
            }
            a[r * d + col] = 0.0;
            for c in col + 1..d {
                a[r * d + c] -= f * a[col * d + c];
            }
            b[r] -= f * b[col];
        }
    }
    for row in (0..d).rev() {
        let mut s = b[row];
        for c in row + 1..d {
            s -= a[row * d + c] * b[c];
        }
        b[row] = s / a[row * d + row];
    }
    true
}

/// Cholesky feasibility test: whether the symmetric part of `m` (row-major,
/// `d x d`) is positive semidefinite up to `tol`.
pub(crate) fn symmetric_part_psd(m: &[f64], d: usize, tol: f64) -> bool {
    let mut s = vec![0.0; d * d];
    let mut scale: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            s[i * d + j] = 0.5 * (m[i * d + j] + m[j * d + i]);
            scale = scale.max(s[i * d + j].abs());
        }
    }
    let shift = tol * scale.max(1.0);
    for i in 0..d {
        s[i * d + i] += shift;
    }
    // Attempt Cholesky on the shifted matrix.
    for i in 0..d {
        for j in 0..=i {
            let mut sum = s[i * d + j];
            for k in 0..j {
                sum -= s[i * d + k] * s[j * d + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                s[i * d + i] = sum.sqrt();
            } else {
                s[i * d + j] = sum / s[j * d + j];
            }
        }
    }
    true
}

/// Neumaier compensated sum; stable regardless of term ordering.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
