//! Lower level of the bilevel optimizer: minimize the quadratic
//! r + p'Gp - 2v'p over the probability simplex.
//!
//! G is a Gram matrix of projectors under the trace inner product, so the
//! problem is convex in exact mode. Projected gradient (with momentum)
//! finds the active face, then an active-set polish solves the reduced
//! KKT system exactly. Shot-mode caches can lose positive
//! semidefiniteness despite clamping; the polish step is then only
//! accepted when it does not increase the objective.

use nalgebra::{DMatrix, DVector};

use crate::ensemble::OverlapCache;

pub const DEFAULT_LOWER_TOLERANCE: f64 = 1e-10;

const PG_MAX_ITERS: usize = 4000;
const PG_CHECK_EVERY: usize = 25;
const SUPPORT_EPS: f64 = 1e-14;

/// Minimizer over the simplex together with its cost value and a KKT
/// certificate. `converged` is false when the iteration caps ran out
/// before the residual dropped below the tolerance; the point returned is
/// still the best feasible one found.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerSolution {
    pub p: Vec<f64>,
    pub value: f64,
    pub kkt_residual: f64,
    pub converged: bool,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &val) in sorted.iter().enumerate() {
        cumsum += val;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if val - candidate > 0.0 {
            tau = candidate;
        }
    }
    y.iter().map(|&x| (x - tau).max(0.0)).collect()
}

fn gradient(g: &DMatrix<f64>, v: &[f64], p: &[f64]) -> Vec<f64> {
    let s = p.len();
    let mut out = vec![0.0; s];
    for i in 0..s {
        let mut acc = 0.0;
        for j in 0..s {
            acc += g[(i, j)] * p[j];
        }
        out[i] = 2.0 * (acc - v[i]);
    }
    out
}

fn objective(cache: &OverlapCache, p: &[f64]) -> f64 {
    crate::ensemble::hsd_from_cache(cache, p).expect("lengths checked by caller")
}

/// Complementarity-plus-feasibility residual of the simplex KKT system.
pub fn kkt_residual(cache: &OverlapCache, p: &[f64]) -> f64 {
    let grad = gradient(&cache.g, &cache.v, p);
    let lambda = grad.iter().copied().fold(f64::INFINITY, f64::min);
    let comp = p
        .iter()
        .zip(grad.iter())
        .map(|(&pi, &gi)| pi * (gi - lambda))
        .fold(0.0, f64::max);
    let feas = (p.iter().sum::<f64>() - 1.0).abs()
        + p.iter().map(|&x| (-x).max(0.0)).sum::<f64>();
    comp + feas
}

fn spectral_bound(g: &DMatrix<f64>) -> f64 {
    // power iteration; entries are bounded so this settles quickly
    let s = g.nrows();
    let mut x = DVector::from_element(s, 1.0 / (s as f64).sqrt());
    let mut lambda: f64 = 1.0;
    for _ in 0..40 {
        let y = g * &x;
        let norm = y.norm();
        if norm < 1e-300 {
            break;
        }
        lambda = norm;
        x = y / norm;
    }
    lambda.max(1e-12)
}

/// Solve the equality-constrained reduced problem on a support set:
/// 2 G_SS p + lambda 1 = 2 v_S, 1'p = 1. Returns None when the linear
/// system is singular.
fn solve_on_support(g: &DMatrix<f64>, v: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let mut mat = DMatrix::from_element(k + 1, k + 1, 0.0);
    let mut rhs = DVector::from_element(k + 1, 0.0);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            mat[(a, b)] = 2.0 * g[(i, j)];
        }
        mat[(a, k)] = 1.0;
        mat[(k, a)] = 1.0;
        rhs[a] = 2.0 * v[i];
    }
    rhs[k] = 1.0;
    let lu = mat.lu();
    let sol = lu.solve(&rhs)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some(sol.iter().take(k).copied().collect())
}

/// Active-set refinement starting from a feasible point. Returns an
/// improved feasible point or the input if no improvement was possible.
fn polish(cache: &OverlapCache, start: &[f64], tolerance: f64) -> Vec<f64> {
    let s = start.len();
    let mut best = start.to_vec();
    let mut best_val = objective(cache, &best);
    let mut support: Vec<usize> = (0..s).filter(|&i| start[i] > SUPPORT_EPS).collect();
    if support.is_empty() {
        support = (0..s).collect();
    }
    for _ in 0..(3 * s + 5) {
        let sol = match solve_on_support(&cache.g, &cache.v, &support) {
            Some(sol) => sol,
            None => break,
        };
        if let Some(worst) = sol
            .iter()
            .enumerate()
            .filter(|(_, &x)| x < -1e-12)
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        {
            // drop the most negative coordinate and re-solve
            if support.len() <= 1 {
                break;
            }
            support.remove(worst.0);
            continue;
        }
        let mut candidate = vec![0.0; s];
        for (a, &i) in support.iter().enumerate() {
            candidate[i] = sol[a].max(0.0);
        }
        let total: f64 = candidate.iter().sum();
        if total <= 0.0 {
            break;
        }
        for x in candidate.iter_mut() {
            *x /= total;
        }
        let cand_val = objective(cache, &candidate);
        if cand_val <= best_val + 1e-15 {
            best = candidate.clone();
            best_val = cand_val;
        } else {
            // non-convex shot-mode cache: reject the saddle and stop
            break;
        }
        // check whether an excluded coordinate wants in
        let grad = gradient(&cache.g, &cache.v, &candidate);
        let lambda = support
            .iter()
            .map(|&i| grad[i])
            .sum::<f64>()
            / support.len() as f64;
        let entrant = (0..s)
            .filter(|i| !support.contains(i))
            .min_by(|&a, &b| grad[a].partial_cmp(&grad[b]).unwrap());
        match entrant {
            Some(e) if grad[e] < lambda - tolerance.max(1e-13) => support.push(e),
            _ => break,
        }
    }
    best
}

/// Minimize r + p'Gp - 2 v'p over the probability simplex to the given
/// KKT tolerance.
pub fn lower_solve(cache: &OverlapCache, tolerance: f64) -> LowerSolution {
    let s = cache.components();
    if s == 1 {
        return LowerSolution {
            p: vec![1.0],
            value: objective(cache, &[1.0]),
            kkt_residual: 0.0,
            converged: true,
        };
    }

    let step = 1.0 / (2.0 * spectral_bound(&cache.g) * 1.05);
    let mut p = vec![1.0 / s as f64; s];
    let mut momentum = p.clone();
    let mut t_prev = 1.0f64;
    let mut best = p.clone();
    let mut best_val = objective(cache, &p);

    for iter in 0..PG_MAX_ITERS {
        let grad = gradient(&cache.g, &cache.v, &momentum);
        let stepped: Vec<f64> = momentum
            .iter()
            .zip(grad.iter())
            .map(|(&x, &g)| x - step * g)
            .collect();
        let p_next = project_simplex(&stepped);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
        let beta = (t_prev - 1.0) / t_next;
        momentum = p_next
            .iter()
            .zip(p.iter())
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        p = p_next;
        t_prev = t_next;

        if (iter + 1) % PG_CHECK_EVERY == 0 {
            let val = objective(cache, &p);
            if val < best_val {
                best_val = val;
                best = p.clone();
            }
            let polished = polish(cache, &best, tolerance);
            let polished_val = objective(cache, &polished);
            if polished_val < best_val {
                best_val = polished_val;
                best = polished;
            }
            if kkt_residual(cache, &best) <= tolerance {
                break;
            }
        }
    }

    let polished = polish(cache, &best, tolerance);
    if objective(cache, &polished) < best_val {
        best_val = objective(cache, &polished);
        best = polished;
    }
    let residual = kkt_residual(cache, &best);
    LowerSolution {
        p: best,
        value: best_val,
        kkt_residual: residual,
        converged: residual <= tolerance,
    }
}
