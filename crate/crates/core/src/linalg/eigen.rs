//! Small dense symmetric eigensolver and a restarted Lanczos iteration for
//! extreme eigenpairs of large symmetric operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A symmetric linear operator `y = A x` on `R^dim`.
pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Eigendecomposition of a dense symmetric `m x m` matrix stored row-major,
/// by cyclic Jacobi rotations. Returns eigenvalues in ascending order and the
/// matching eigenvectors as the columns of a row-major `m x m` matrix.
pub fn sym_eigen(a: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), m * m);
    let mut a = a.to_vec();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..m {
            for q in (p + 1)..m {
                off += a[p * m + q] * a[p * m + q];
            }
        }
        if off <= 1e-32 * total || off == 0.0 {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * m + p];
                let aqq = a[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[i * m + i].total_cmp(&a[j * m + j]));
    let values = order.iter().map(|&i| a[i * m + i]).collect();
    let mut vectors = vec![0.0; m * m];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..m {
            vectors[row * m + new_col] = v[row * m + old_col];
        }
    }
    (values, vectors)
}

/// Which end of the spectrum a Lanczos run converges to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Smallest,
    LargestMagnitude,
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `||A v - value v||` for the unit Ritz vector.
    pub residual: f64,
    /// Largest Ritz value magnitude seen; a lower bound on `||A||_2`.
    pub scale: f64,
    pub matvecs: usize,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Explicitly restarted Lanczos with full reorthogonalization.
///
/// Stops once the Ritz residual is at most `rel_tol * scale`, where `scale`
/// is the largest Ritz value magnitude observed. On failure the best pair is
/// returned in the `Err` variant.
pub fn lanczos<O: SymOperator + ?Sized>(
    op: &O,
    target: Target,
    rel_tol: f64,
    max_matvecs: usize,
    seed: u64,
) -> Result<RitzPair, RitzPair> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let krylov = n.min(96);
    let mut matvecs = 0usize;
    let mut scale: f64 = 0.0;
    let mut best: Option<RitzPair> = None;
    let mut w = vec![0.0; n];

    loop {
        let s = norm(&start);
        start.iter_mut().for_each(|x| *x /= s);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::with_capacity(krylov);
        let mut beta: Vec<f64> = Vec::with_capacity(krylov);
        let mut last_beta = 0.0;
        for j in 0..krylov {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let h = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= h * qi);
                }
            }
            let b = norm(&w);
            let local = alpha.iter().fold(0.0f64, |m, x| m.max(x.abs()))
                + beta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            last_beta = b;
            if j + 1 == krylov || b <= 1e-13 * local.max(f64::MIN_POSITIVE) || b == 0.0 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }

        let m = alpha.len();
        let mut t = vec![0.0; m * m];
        for i in 0..m {
            t[i * m + i] = alpha[i];
            if i + 1 < m {
                t[i * m + i + 1] = beta[i];
                t[(i + 1) * m + i] = beta[i];
            }
        }
        let (vals, vecs) = sym_eigen(&t, m);
        scale = scale.max(vals[0].abs()).max(vals[m - 1].abs());
        let idx = match target {
            Target::Smallest => 0,
            Target::LargestMagnitude => {
                if vals[0].abs() > vals[m - 1].abs() {
                    0
                } else {
                    m - 1
                }
            }
        };
        let theta = vals[idx];
        let mut ritz = vec![0.0; n];
        for (i, q) in basis.iter().enumerate() {
            let c = vecs[i * m + idx];
            ritz.iter_mut().zip(q).for_each(|(r, qi)| *r += c * qi);
        }
        let rn = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= rn);
        op.apply(&ritz, &mut w);
        matvecs += 1;
        let residual = w
            .iter()
            .zip(&ritz)
            .map(|(a, v)| (a - theta * v).powi(2))
            .sum::<f64>()
            .sqrt();
        let pair = RitzPair {
            value: theta,
            vector: ritz.clone(),
            residual,
            scale,
            matvecs,
        };
        let converged = residual <= rel_tol * scale || (last_beta == 0.0 && residual <= 1e-12 * scale.max(1.0));
        let better = best.as_ref().map_or(true, |b| residual < b.residual || converged);
        if better {
            best = Some(pair);
        }
        if converged {
            return Ok(best.expect("set above"));
        }
        if matvecs + krylov + 1 > max_matvecs {
            return Err(best.expect("at least one cycle ran"));
        }
        start = ritz;
    }
}
