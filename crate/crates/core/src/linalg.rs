//! Small dense and Krylov linear algebra helpers.

use crate::error::{Error, Result};

/// Outcome of a Krylov solve.
#[derive(Clone, Debug, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Restarted GMRES for `A x = b` from `x = 0`, with modified Gram-Schmidt
/// and Givens rotations. Stops when `|b - A x| <= rtol |b|` or after
/// `max_iter` operator applications.
pub fn gmres(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    restart: usize,
    max_iter: usize,
    rtol: f64,
) -> Result<(Vec<f64>, KrylovStats)> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            KrylovStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut total = 0;
    let mut r = b.to_vec();
    let mut rel = 1.0;
    while total < max_iter {
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= rtol {
            break;
        }
        let m = restart.min(max_iter - total);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&basis[k])?;
            total += 1;
            for (j, v) in basis.iter().enumerate() {
                let hj = dot(&w, v);
                h[j][k] = hj;
                axpy(-hj, v, &mut w);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let den = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if den == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= rtol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &basis[j], &mut x);
        }
        let ax = apply(&x)?;
        total += 1;
        r = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        rel = norm(&r) / bnorm;
        if rel <= rtol || k_used == 0 {
            break;
        }
    }
    Ok((
        x,
        KrylovStats {
            iterations: total,
            relative_residual: rel,
        },
    ))
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Linear least squares `min |A c - b|` for a tall matrix given by rows,
/// solved with Householder QR. Returns the coefficients and the residual
/// vector.
pub fn least_squares(rows: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 {
        return Err(Error::InsufficientSamples { have: m, need: n.max(1) });
    }
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut rhs = b.to_vec();
    let scale: f64 = rows.iter().flatten().fold(0.0, |s, v| s.max(v.abs()));
    for k in 0..n {
        let col_norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if col_norm <= 1e-13 * scale.max(1e-300) {
            return Err(Error::IllConditionedFit(format!(
                "design matrix is rank deficient in column {k}"
            )));
        }
        let alpha = if a[k][k] > 0.0 { -col_norm } else { col_norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vn = dot(&v, &v);
        if vn == 0.0 {
            continue;
        }
        for j in k..n {
            let s = (k..m).map(|i| v[i - k] * a[i][j]).sum::<f64>() * 2.0 / vn;
            for i in k..m {
                a[i][j] -= s * v[i - k];
            }
        }
        let s = (k..m).map(|i| v[i - k] * rhs[i]).sum::<f64>() * 2.0 / vn;
        for i in k..m {
            rhs[i] -= s * v[i - k];
        }
    }
    let mut c = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= a[i][j] * c[j];
        }
        c[i] = s / a[i][i];
    }
    let resid = rows
        .iter()
        .zip(b)
        .map(|(r, bi)| bi - dot(r, &c))
        .collect();
    Ok((c, resid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gmres_solves_a_nonsymmetric_system() {
        let n = 40;
        let apply = |x: &[f64]| -> Result<Vec<f64>> {
            Ok((0..n)
                .map(|i| {
                    let mut v = 4.0 * x[i];
                    if i > 0 {
                        v -= 1.5 * x[i - 1];
                    }
                    if i + 1 < n {
                        v -= 0.5 * x[i + 1];
                    }
                    v
                })
                .collect())
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x, stats) = gmres(apply, &b, 10, 200, 1e-12).unwrap();
        let ax = apply(&x).unwrap();
        let err = ax.iter().zip(&b).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10 && stats.relative_residual <= 1e-12);
    }

    #[test]
    fn least_squares_recovers_exact_coefficients() {
        let rows: Vec<Vec<f64>> = (1..8).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let b: Vec<f64> = (1..8).map(|i| 2.0 * i as f64 - 0.5 * (i * i) as f64).collect();
        let (c, r) = least_squares(&rows, &b).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 0.5).abs() < 1e-12);
        assert!(r.iter().all(|v| v.abs() < 1e-11));
        assert!(least_squares(&rows[..1], &b[..1]).is_err());
        let dup: Vec<Vec<f64>> = (1..8).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        assert!(matches!(least_squares(&dup, &b), Err(Error::IllConditionedFit(_))));
    }
}
