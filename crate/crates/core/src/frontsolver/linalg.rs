//! Tridiagonal solves and restarted GMRES for the Newton steps.

/// Tridiagonal matrix with sub-, main and super-diagonals
/// (`lower[0]` and `upper[n-1]` unused).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    /// Thomas algorithm; no pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        c[0] = self.upper[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            c[i] = self.upper[i] / denom;
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Restarted GMRES(m) with right preconditioning for `A x = b`, from `x = 0`.
pub fn gmres<A, P>(
    apply: A,
    precond: P,
    b: &[f64],
    rtol: f64,
    restart: usize,
    max_restarts: usize,
) -> (Vec<f64>, GmresOutcome)
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    let mut total = 0;
    if bnorm == 0.0 {
        return (
            x,
            GmresOutcome {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let mut rel = 1.0;
    for _ in 0..max_restarts {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= rtol {
            break;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|e| e / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut hmat = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            total += 1;
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for (j, vj) in v.iter().enumerate() {
                let hj = dot(&w, vj);
                hmat[j][k] = hj;
                w.iter_mut().zip(vj).for_each(|(a, b)| *a -= hj * b);
            }
            let hn = norm(&w);
            hmat[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * hmat[j][k] + sn[j] * hmat[j + 1][k];
                hmat[j + 1][k] = -sn[j] * hmat[j][k] + cs[j] * hmat[j + 1][k];
                hmat[j][k] = t;
            }
            let d = hmat[k][k].hypot(hmat[k + 1][k]);
            cs[k] = hmat[k][k] / d;
            sn[k] = hmat[k + 1][k] / d;
            hmat[k][k] = d;
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= rtol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|e| e / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hmat[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hmat[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.iter_mut().zip(zi).for_each(|(a, b)| *a += yi * b);
        }
        if rel <= rtol {
            break;
        }
    }
    (
        x,
        GmresOutcome {
            iterations: total,
            relative_residual: rel,
            converged: rel <= rtol,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_product() {
        let n = 50;
        let mut t = Tridiagonal::new(n);
        for i in 0..n {
            t.diag[i] = 4.0 + i as f64 * 0.01;
            t.lower[i] = -1.0;
            t.upper[i] = -1.5;
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = t.mul(&x);
        let y = t.solve(&b);
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 200;
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut v = 3.0 * x[i];
                    if i > 0 {
                        v -= 1.2 * x[i - 1];
                    }
                    if i + 1 < n {
                        v -= 0.7 * x[i + 1];
                    }
                    if i >= 10 {
                        v += 0.1 * x[i - 10];
                    }
                    v
                })
                .collect()
        };
        let xs: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let b = apply(&xs);
        let (x, out) = gmres(apply, |v| v.to_vec(), &b, 1e-12, 40, 20);
        assert!(out.converged);
        for i in 0..n {
            assert!((x[i] - xs[i]).abs() < 1e-10);
        }
    }
}
