//! Matrix-free Krylov solvers on plain vectors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Restarted GMRES for `A x = b` from `x = 0`; stops at `‖b - Ax‖ ≤ tol‖b‖`.
pub fn gmres<F: FnMut(&[f64]) -> Vec<f64>>(mut apply: F, b: &[f64], tol: f64, restart: usize, max_restarts: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut rel = 1.0;
    for _ in 0..max_restarts {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            return Ok(x);
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns, reduced by Givens rotations as they arrive
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        for j in 0..restart {
            let mut w = apply(&basis[j]);
            let mut col = vec![0.0; j + 2];
            for (i, q) in basis.iter().enumerate() {
                col[i] = dot(&w, q);
                axpy(&mut w, -col[i], q);
            }
            // one reorthogonalization pass
            for (i, q) in basis.iter().enumerate() {
                let c = dot(&w, q);
                col[i] += c;
                axpy(&mut w, -c, q);
            }
            col[j + 1] = norm(&w);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let d = col[j].hypot(col[j + 1]);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (col[j] / d, col[j + 1] / d) };
            cs.push(c);
            sn.push(s);
            let hn = col[j + 1];
            col[j] = d;
            col[j + 1] = 0.0;
            g.push(-s * g[j]);
            g[j] *= c;
            hess.push(col);
            let done = g[j + 1].abs() <= tol * bnorm || hn == 0.0;
            if !done {
                basis.push(w.iter().map(|v| v / hn).collect());
            }
            if done || j + 1 == restart {
                let m = j + 1;
                let mut y = vec![0.0; m];
                for i in (0..m).rev() {
                    let mut acc = g[i];
                    for k in i + 1..m {
                        acc -= hess[k][i] * y[k];
                    }
                    y[i] = acc / hess[i][i];
                }
                for (i, yi) in y.iter().enumerate() {
                    axpy(&mut x, *yi, &basis[i]);
                }
                break;
            }
        }
    }
    let ax = apply(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let final_rel = norm(&r) / bnorm;
    if final_rel <= tol {
        return Ok(x);
    }
    Err(Error::NonConvergence { iterations: restart * max_restarts, residual: final_rel.min(rel), trace: vec![] })
}

/// Top `k` eigenpairs of a symmetric operator by Lanczos with full
/// reorthogonalization; eigenvalues descending, vectors unit length.
pub fn lanczos_top<F: FnMut(&[f64]) -> Vec<f64>>(mut apply: F, start: &[f64], k: usize, max_steps: usize, tol: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = start.len();
    let max_steps = max_steps.min(n);
    let mut q: Vec<Vec<f64>> = Vec::new();
    let nrm = norm(start);
    q.push(start.iter().map(|v| v / nrm).collect());
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut pairs = Vec::new();
    for j in 0..max_steps {
        let mut w = apply(&q[j]);
        let a = dot(&w, &q[j]);
        alpha.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(&w, qi);
                axpy(&mut w, -c, qi);
            }
        }
        let b = norm(&w);
        let m = j + 1;
        if m >= k && (m % 10 == 0 || b < 1e-14 || m == max_steps) {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap());
            let scale = eig.eigenvalues[idx[0]].abs().max(1e-300);
            // residual of a Ritz pair: β_m |last component|
            let converged = idx[..k].iter().all(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs() <= tol * scale);
            if converged || b < 1e-14 || m == max_steps {
                if !converged && b >= 1e-14 {
                    let worst = idx[..k].iter().map(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs() / scale).fold(0.0, f64::max);
                    return Err(Error::Eigen { worst });
                }
                pairs = idx[..k]
                    .iter()
                    .map(|&i| {
                        let mut v = vec![0.0; n];
                        for (r, qr) in q.iter().enumerate() {
                            axpy(&mut v, eig.eigenvectors[(r, i)], qr);
                        }
                        let nv = norm(&v);
                        v.iter_mut().for_each(|x| *x /= nv);
                        (eig.eigenvalues[i], v)
                    })
                    .collect();
                break;
            }
        }
        beta.push(b);
        q.push(w.iter().map(|v| v / b).collect());
    }
    Ok(pairs)
}
