//! Gauss rules from three-term recurrences: Golub–Welsch eigen-decomposition
//! of the Jacobi matrix, followed by Newton polishing of each node and
//! Christoffel weights.

use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::special::{gamma, ln_gamma};

/// Recurrence coefficients of the monic orthogonal polynomials of a weight:
/// `p_{k+1} = (x - diag[k]) p_k - offdiag_sq[k] p_{k-1}`, plus the total mass.
#[derive(Debug, Clone)]
pub(crate) struct Recurrence<T> {
    pub diag: Vec<T>,
    /// `offdiag_sq[k]` couples `k-1` and `k`; entry 0 is unused.
    pub offdiag_sq: Vec<T>,
    pub mass: T,
}

/// Jacobi weight `(1 - w)^alpha (1 + w)^beta` on `[-1, 1]`.
pub(crate) fn jacobi_recurrence<T: Scalar>(n: usize, alpha: T, beta: T) -> Recurrence<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let ab = alpha + beta;
    let mut diag = Vec::with_capacity(n);
    let mut offdiag_sq = vec![T::zero(); n];
    for k in 0..n {
        let kf = T::from_usize_lossy(k);
        let a = if k == 0 {
            (beta - alpha) / (ab + two)
        } else {
            let s = two * kf + ab;
            (beta * beta - alpha * alpha) / (s * (s + two))
        };
        diag.push(a);
        if k == 1 {
            let s = two + ab;
            offdiag_sq[1] = four * (one + alpha) * (one + beta) / (s * s * (s + one));
        } else if k >= 2 {
            let s = two * kf + ab;
            offdiag_sq[k] = four * kf * (kf + alpha) * (kf + beta) * (kf + ab)
                / (s * s * (s + one) * (s - one));
        }
    }
    let mass = if ab + two < T::lit(60.0) {
        two.powf(ab + one) * gamma(alpha + one) * gamma(beta + one) / gamma(ab + two)
    } else {
        ((ab + one) * two.ln() + ln_gamma(alpha + one) + ln_gamma(beta + one) - ln_gamma(ab + two))
            .exp()
    };
    Recurrence {
        diag,
        offdiag_sq,
        mass,
    }
}

/// Eigenvalues and first eigenvector components of a symmetric tridiagonal
/// matrix by implicit QL with Wilkinson-type shifts.
pub(crate) fn tridiagonal_eigen<T: Scalar>(diag: &[T], off: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    // e[i] couples i and i+1
    let mut e = vec![T::zero(); n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![T::zero(); n];
    if n > 0 {
        z[0] = T::one();
    }
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(LabError::no_conv(
                    "tridiagonal eigensolver",
                    format!("eigenvalue {l} after 100 QL sweeps"),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let sgn = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sgn);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok((d, z))
}

/// Orthonormal (w.r.t. the normalized weight) polynomial values: returns
/// `(q_n(x), q_n'(x), Σ_{k<n} q_k(x)^2)`.
fn orthonormal_eval<T: Scalar>(rec: &Recurrence<T>, n: usize, x: T) -> (T, T, T) {
    let mut q_prev = T::zero();
    let mut q = T::one();
    let mut dq_prev = T::zero();
    let mut dq = T::zero();
    let mut sum_sq = T::zero();
    for k in 0..n {
        sum_sq = sum_sq + q * q;
        let sb_next = rec.offdiag_sq.get(k + 1).copied().unwrap_or_else(|| {
            // beyond the stored table only the root of q_n matters, scale is irrelevant
            T::one()
        });
        let sb_next = sb_next.sqrt();
        let sb = if k == 0 {
            T::zero()
        } else {
            rec.offdiag_sq[k].sqrt()
        };
        let q_next = ((x - rec.diag[k]) * q - sb * q_prev) / sb_next;
        let dq_next = (q + (x - rec.diag[k]) * dq - sb * dq_prev) / sb_next;
        q_prev = q;
        q = q_next;
        dq_prev = dq;
        dq = dq_next;
    }
    (q, dq, sum_sq)
}

/// Gauss nodes (ascending) and weights for a recurrence, `n` points.
pub(crate) fn gauss_from_recurrence<T: Scalar>(
    rec: &Recurrence<T>,
    n: usize,
) -> Result<(Vec<T>, Vec<T>)> {
    let off: Vec<T> = (1..n).map(|k| rec.offdiag_sq[k].sqrt()).collect();
    let (vals, firsts) = tridiagonal_eigen(&rec.diag[..n], &off)?;
    let mut pairs: Vec<(T, T)> = vals
        .into_iter()
        .zip(firsts)
        .map(|(x, z)| (x, rec.mass * z * z))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));

    // Newton polishing against q_n, guarded by the neighbouring-node gap.
    let raw: Vec<T> = pairs.iter().map(|p| p.0).collect();
    for (i, pair) in pairs.iter_mut().enumerate() {
        let gap = {
            let left = if i > 0 {
                raw[i] - raw[i - 1]
            } else {
                T::infinity()
            };
            let right = if i + 1 < n {
                raw[i + 1] - raw[i]
            } else {
                T::infinity()
            };
            left.min(right)
        };
        let mut x = pair.0;
        for _ in 0..3 {
            let (q, dq, _) = orthonormal_eval(rec, n, x);
            if dq == T::zero() || !dq.is_finite() {
                break;
            }
            let step = q / dq;
            if !step.is_finite() || step.abs() > T::lit(0.25) * gap {
                break;
            }
            x = x - step;
            if step.abs() <= T::epsilon() * x.abs().max(T::one()) {
                break;
            }
        }
        let (_, _, sum_sq) = orthonormal_eval(rec, n, x);
        let w = rec.mass / sum_sq;
        if w.is_finite() && w > T::zero() {
            *pair = (x, w);
        }
    }
    Ok(pairs.into_iter().unzip())
}
