//! Minimum-norm point in the convex hull of a set of vectors.
//!
//! Solves `min_{beta in simplex} ||sum_i beta_i g_i||^2`. Two vectors use the
//! closed-form line minimizer. Larger sets use Wolfe's minimum-norm-point
//! method, a fully corrective Frank-Wolfe: each step adds the vertex with
//! the best linear decrease, then re-solves exactly over the active set.

/// Default iteration budget for the simplex solver.
pub const DEFAULT_FW_ITERS: usize = 500;
/// Default norm tolerance: stop once the duality gap is below `tol^2`.
pub const DEFAULT_FW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub beta: Vec<f64>,
    /// `sum_i beta_i g_i`.
    pub point: Vec<f64>,
    pub norm: f64,
    pub iterations: usize,
}

fn combine(grads: &[Vec<f64>], beta: &[f64]) -> Vec<f64> {
    let dim = grads.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (g, b) in grads.iter().zip(beta) {
        for (o, gi) in out.iter_mut().zip(g) {
            *o += b * gi;
        }
    }
    out
}

/// Weight on `a` minimizing `||gamma a + (1 - gamma) b||` over `[0, 1]`.
pub fn two_point_weight(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let denom = crate::dot(&diff, &diff);
    if denom == 0.0 {
        return 0.5;
    }
    let num: f64 = b.iter().zip(a).map(|(bi, ai)| (bi - ai) * bi).sum();
    (num / denom).clamp(0.0, 1.0)
}

/// `grads` must be non-empty and of uniform dimension.
pub fn min_norm_point(grads: &[Vec<f64>], max_iters: usize, tol: f64) -> MinNormPoint {
    let n = grads.len();
    assert!(n > 0, "min_norm_point needs at least one vector");
    let finish = |beta: Vec<f64>, iterations| {
        let point = combine(grads, &beta);
        let norm = crate::norm(&point);
        MinNormPoint {
            beta,
            point,
            norm,
            iterations,
        }
    };
    match n {
        1 => return finish(vec![1.0], 0),
        2 => {
            let gamma = two_point_weight(&grads[0], &grads[1]);
            return finish(vec![gamma, 1.0 - gamma], 0);
        }
        _ => {}
    }

    // Work on the Gram matrix scaled to unit diagonal maximum; the
    // minimizing weights do not depend on the scale.
    let raw: Vec<Vec<f64>> = grads
        .iter()
        .map(|a| grads.iter().map(|b| crate::dot(a, b)).collect())
        .collect();
    let scale = (0..n).map(|i| raw[i][i]).fold(0.0, f64::max);
    if scale == 0.0 {
        return finish(vec![1.0 / n as f64; n], 0);
    }
    let gram: Vec<Vec<f64>> = raw
        .iter()
        .map(|row| row.iter().map(|v| v / scale).collect())
        .collect();
    let gap_tol = tol * tol / scale;

    let first = (0..n)
        .min_by(|&a, &b| gram[a][a].total_cmp(&gram[b][b]))
        .unwrap_or(0);
    let mut support = vec![first];
    let mut lambda = vec![1.0];
    let mut iterations = 0;

    'major: while iterations < max_iters {
        iterations += 1;
        // m_i = g_i . x, f = x . x for the current point x.
        let m: Vec<f64> = (0..n)
            .map(|i| {
                support
                    .iter()
                    .zip(&lambda)
                    .map(|(&s, l)| l * gram[s][i])
                    .sum()
            })
            .collect();
        let f: f64 = support.iter().zip(&lambda).map(|(&s, l)| l * m[s]).sum();
        let (j, mj) =
            m.iter().enumerate().fold(
                (0, f64::INFINITY),
                |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
            );
        if f - mj <= gap_tol || support.contains(&j) {
            break;
        }
        let saved = (support.clone(), lambda.clone());
        support.push(j);
        lambda.push(0.0);

        loop {
            let Some(mu) = affine_minimizer(grads, &support) else {
                (support, lambda) = saved;
                break 'major;
            };
            if mu.iter().all(|&v| v > 0.0) {
                lambda = mu;
                break;
            }
            // Move from lambda toward mu until the first weight hits zero,
            // then drop the vanished points.
            let theta = lambda
                .iter()
                .zip(&mu)
                .filter(|(_, &u)| u <= 0.0)
                .map(|(&l, &u)| l / (l - u))
                .fold(f64::INFINITY, f64::min);
            for (l, u) in lambda.iter_mut().zip(&mu) {
                *l += theta * (u - *l);
            }
            let keep: Vec<bool> = lambda.iter().map(|&l| l > 1e-15).collect();
            support = support
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(s, _)| *s)
                .collect();
            lambda = lambda
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(l, _)| *l)
                .collect();
            if support.is_empty() {
                (support, lambda) = saved;
                break 'major;
            }
        }

        let new_f: f64 = support
            .iter()
            .zip(&lambda)
            .map(|(&s, l)| {
                l * support
                    .iter()
                    .zip(&lambda)
                    .map(|(&t, k)| k * gram[s][t])
                    .sum::<f64>()
            })
            .sum();
        if new_f >= f {
            // No progress means the corral is numerically optimal.
            (support, lambda) = saved;
            break;
        }
    }

    let mut beta = vec![0.0; n];
    let total: f64 = lambda.iter().sum();
    for (&s, l) in support.iter().zip(&lambda) {
        beta[s] = l / total;
    }
    finish(beta, iterations)
}

/// Weights `mu` with `sum mu = 1` minimizing `||sum_k mu_k g_{s_k}||` over
/// the affine hull of the support. Writes the point as
/// `g_{s_0} + sum_j w_j (g_{s_j} - g_{s_0})` and solves the least-squares
/// problem in `w` by modified Gram-Schmidt. `None` when the support is
/// affinely dependent.
fn affine_minimizer(grads: &[Vec<f64>], support: &[usize]) -> Option<Vec<f64>> {
    let base = &grads[support[0]];
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(support.len() - 1);
    let mut r = vec![vec![0.0; support.len() - 1]; support.len() - 1];
    for (j, &s) in support.iter().enumerate().skip(1) {
        let mut v: Vec<f64> = grads[s].iter().zip(base).map(|(a, b)| a - b).collect();
        let original = crate::norm(&v);
        for (i, qi) in q.iter().enumerate() {
            let c = crate::dot(qi, &v);
            r[i][j - 1] = c;
            for (vk, qk) in v.iter_mut().zip(qi) {
                *vk -= c * qk;
            }
        }
        let len = crate::norm(&v);
        if !(len > 1e-12 * original) || len == 0.0 {
            return None;
        }
        r[j - 1][j - 1] = len;
        q.push(v.into_iter().map(|x| x / len).collect());
    }
    // Project -base onto the column space, then back-substitute.
    let mut rhs: Vec<f64> = base.iter().map(|x| -x).collect();
    let mut qtb = vec![0.0; q.len()];
    for (i, qi) in q.iter().enumerate() {
        let c = crate::dot(qi, &rhs);
        qtb[i] = c;
        for (rk, qk) in rhs.iter_mut().zip(qi) {
            *rk -= c * qk;
        }
    }
    let k = q.len();
    let mut w = vec![0.0; k];
    for i in (0..k).rev() {
        let tail: f64 = (i + 1..k).map(|j| r[i][j] * w[j]).sum();
        w[i] = (qtb[i] - tail) / r[i][i];
    }
    let mut mu = Vec::with_capacity(k + 1);
    mu.push(1.0 - w.iter().sum::<f64>());
    mu.extend(w);
    Some(mu)
}
