//! Dense least squares in double-double precision.

use super::dd::{Dd, DD_EPS};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("least squares needs at least as many rows ({rows}) as columns ({cols})")]
    Underdetermined { rows: usize, cols: usize },
    #[error("rows have inconsistent lengths")]
    Ragged,
    #[error("design matrix is rank deficient (column {0})")]
    RankDeficient(usize),
}

/// Solution of `min ||A x - b||` together with the pieces needed for error estimates.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub x: Vec<Dd>,
    pub residual_norm: Dd,
    /// 2-norm condition number of the column-equilibrated design matrix.
    pub condition: f64,
    /// Pseudo-inverse, `cols x rows`; row `j` maps data perturbations to `x[j]`.
    pub pinv: Vec<Vec<Dd>>,
}

fn dot(a: &[Dd], b: &[Dd]) -> Dd {
    a.iter().zip(b).fold(Dd::ZERO, |acc, (x, y)| acc + *x * *y)
}

fn norm(a: &[Dd]) -> Dd {
    dot(a, a).sqrt()
}

/// Householder QR least squares with column equilibration.
pub fn least_squares(a: &[Vec<Dd>], b: &[Dd]) -> Result<LeastSquares, LinalgError> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    if m < n || n == 0 {
        return Err(LinalgError::Underdetermined { rows: m, cols: n });
    }
    if a.iter().any(|r| r.len() != n) || b.len() != m {
        return Err(LinalgError::Ragged);
    }

    // column-major copy, equilibrated
    let mut cols: Vec<Vec<Dd>> = (0..n).map(|j| a.iter().map(|r| r[j]).collect()).collect();
    let mut scale = vec![Dd::ONE; n];
    for (j, c) in cols.iter_mut().enumerate() {
        let s = norm(c);
        if s.is_zero() {
            return Err(LinalgError::RankDeficient(j));
        }
        for v in c.iter_mut() {
            *v = *v / s;
        }
        scale[j] = s;
    }

    // Q^T accumulated on [b | I]
    let mut rhs = b.to_vec();
    let mut qt: Vec<Vec<Dd>> = (0..m)
        .map(|i| (0..m).map(|k| if i == k { Dd::ONE } else { Dd::ZERO }).collect())
        .collect();

    for k in 0..n {
        let alpha = norm(&cols[k][k..]);
        if alpha.is_zero() {
            return Err(LinalgError::RankDeficient(k));
        }
        let alpha = if cols[k][k].is_sign_negative() { alpha } else { -alpha };
        let mut v: Vec<Dd> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        if vv.is_zero() {
            continue;
        }
        let apply = |x: &mut [Dd]| {
            let f = dot(&v, &x[k..]).mul_f64(2.0) / vv;
            for (xi, vi) in x[k..].iter_mut().zip(&v) {
                *xi -= f * *vi;
            }
        };
        for c in cols.iter_mut().skip(k) {
            apply(c);
        }
        apply(&mut rhs);
        // columns of the identity, so rows of Q^T after transposition
        for c in 0..m {
            let mut col: Vec<Dd> = qt.iter().map(|r| r[c]).collect();
            apply(&mut col);
            for (r, val) in qt.iter_mut().zip(col) {
                r[c] = val;
            }
        }
    }

    let r = |i: usize, j: usize| cols[j][i];
    for k in 0..n {
        if r(k, k).is_zero() {
            return Err(LinalgError::RankDeficient(k));
        }
    }
    let back = |y: &[Dd]| -> Vec<Dd> {
        let mut x = vec![Dd::ZERO; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= r(i, j) * x[j];
            }
            x[i] = s / r(i, i);
        }
        x
    };

    let xs = back(&rhs);
    let x: Vec<Dd> = xs.iter().zip(&scale).map(|(v, s)| *v / *s).collect();
    let residual_norm = norm(&rhs[n..]);

    let mut pinv = vec![vec![Dd::ZERO; m]; n];
    for c in 0..m {
        let y: Vec<Dd> = qt.iter().map(|row| row[c]).collect();
        let z = back(&y);
        for j in 0..n {
            pinv[j][c] = z[j] / scale[j];
        }
    }

    let rmat: Vec<Vec<Dd>> = (0..n)
        .map(|i| (0..n).map(|j| if j >= i { r(i, j) } else { Dd::ZERO }).collect())
        .collect();
    let sv = singular_values(&rmat);
    let smax = sv.first().copied().unwrap_or(Dd::ZERO);
    let smin = sv.last().copied().unwrap_or(Dd::ZERO);
    let condition = if smin.is_zero() {
        f64::INFINITY
    } else {
        (smax / smin).to_f64()
    };

    Ok(LeastSquares {
        x,
        residual_norm,
        condition,
        pinv,
    })
}

/// Singular values (descending) by one-sided Jacobi rotations on the columns.
pub fn singular_values(a: &[Vec<Dd>]) -> Vec<Dd> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let mut u: Vec<Vec<Dd>> = (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect();
    let tol = DD_EPS * 16.0;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma.is_zero() || gamma.abs().to_f64() <= tol * (alpha * beta).sqrt().to_f64() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / gamma.mul_f64(2.0);
                let root = (Dd::ONE + zeta.sqr()).sqrt();
                let t = if zeta.is_sign_negative() {
                    -(Dd::ONE / (root - zeta))
                } else {
                    Dd::ONE / (zeta + root)
                };
                let c = Dd::ONE / (Dd::ONE + t.sqr()).sqrt();
                let s = c * t;
                let (left, right) = u.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let xp = *x;
                    let yq = *y;
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<Dd> = u.iter().map(|c| norm(c)).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> Dd {
        Dd::from(x)
    }

    #[test]
    fn exact_polynomial_fit() {
        // 3 + 5t + 2t^2 sampled on a geometric ladder
        let ts: Vec<Dd> = (0..8).map(|k| Dd::from(0.5).powi(k)).collect();
        let a: Vec<Vec<Dd>> = ts.iter().map(|&t| vec![Dd::ONE, t, t * t]).collect();
        let b: Vec<Dd> = ts.iter().map(|&t| d(3.0) + t.mul_f64(5.0) + (t * t).mul_f64(2.0)).collect();
        let ls = least_squares(&a, &b).unwrap();
        for (x, want) in ls.x.iter().zip([3.0, 5.0, 2.0]) {
            assert!((*x - d(want)).abs().to_f64() < 1e-28);
        }
        assert!(ls.residual_norm.to_f64() < 1e-28);
        assert!(ls.condition > 1.0);
    }

    #[test]
    fn pinv_reproduces_solution() {
        let a = vec![vec![d(1.0), d(2.0)], vec![d(3.0), d(4.0)], vec![d(5.0), d(7.0)]];
        let b = vec![d(1.0), d(-1.0), d(2.0)];
        let ls = least_squares(&a, &b).unwrap();
        for j in 0..2 {
            let via = ls.pinv[j].iter().zip(&b).fold(Dd::ZERO, |s, (p, y)| s + *p * *y);
            assert!((via - ls.x[j]).abs().to_f64() < 1e-28);
        }
    }

    #[test]
    fn singular_values_of_diagonal_and_rotation() {
        let sv = singular_values(&[vec![d(3.0), d(0.0)], vec![d(0.0), d(-0.5)]]);
        assert!((sv[0] - d(3.0)).abs().to_f64() < 1e-30);
        assert!((sv[1] - d(0.5)).abs().to_f64() < 1e-30);
        // [[1,1],[0,1]] has singular values golden ratio and its inverse
        let sv = singular_values(&[vec![d(1.0), d(1.0)], vec![d(0.0), d(1.0)]]);
        let phi = (Dd::ONE + d(5.0).sqrt()).mul_f64(0.5);
        assert!((sv[0] - phi).abs().to_f64() < 1e-30);
        assert!((sv[1] - phi.recip()).abs().to_f64() < 1e-30);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            least_squares(&[vec![d(1.0), d(2.0)]], &[d(1.0)]),
            Err(LinalgError::Underdetermined { .. })
        ));
        assert!(matches!(
            least_squares(&[vec![d(0.0)], vec![d(0.0)]], &[d(1.0), d(1.0)]),
            Err(LinalgError::RankDeficient(0))
        ));
    }
}
