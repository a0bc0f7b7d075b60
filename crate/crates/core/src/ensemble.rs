//! The separable trial state sigma(p, theta, phi) as a classical mixture
//! of product pure states, the cached overlaps a quantum device would
//! hand back, and the Hilbert-Schmidt cost assembled from them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qstate::{build_product_state, DensityMatrix, ProductStateParams, PureState};
use crate::random::rng_from_seed;
use crate::swap_test::{
    sample_overlap, sample_overlap_mixed_pure, sample_overlap_pure, ShotConfig,
};

pub const PROBABILITY_SUM_TOL: f64 = 1e-10;

/// How estimator quantities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EvalMode {
    Exact,
    Shots(ShotConfig),
}

impl EvalMode {
    pub fn is_exact(&self) -> bool {
        matches!(self, EvalMode::Exact)
    }
}

/// Probability vector plus product-state angle rows; the trial state is
/// sum_i p_i |psi_i><psi_i|. Component count s defaults to 2^n elsewhere
/// and is hard-capped at 4^n.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeparableEnsemble {
    p: Vec<f64>,
    params: Vec<ProductStateParams>,
    n: usize,
}

impl SeparableEnsemble {
    pub fn new(p: Vec<f64>, params: Vec<ProductStateParams>) -> Result<Self> {
        if p.is_empty() || p.len() != params.len() {
            return Err(Error::InvalidParameter(format!(
                "need matching nonempty p ({}) and params ({})",
                p.len(),
                params.len()
            )));
        }
        let n = params[0].qubits();
        if params.iter().any(|row| row.qubits() != n) {
            return Err(Error::InvalidParameter(
                "inconsistent qubit counts across rows".into(),
            ));
        }
        let cap = component_cap(n);
        if p.len() > cap {
            return Err(Error::InvalidParameter(format!(
                "component count {} exceeds cap 4^n = {cap}",
                p.len()
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOL
            || p.iter().any(|x| !(-1e-12..=1.0 + 1e-12).contains(x))
        {
            return Err(Error::InvalidParameter(format!(
                "probabilities must lie in [0,1] and sum to 1, sum = {sum}"
            )));
        }
        Ok(Self { p, params, n })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.p.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn params(&self) -> &[ProductStateParams] {
        &self.params
    }

    pub fn states(&self) -> Vec<PureState> {
        self.params.iter().map(build_product_state).collect()
    }
}

/// Hard cap s <= d^2 = 4^n on ensemble components.
pub fn component_cap(n: usize) -> usize {
    1usize << (2 * n.min(30))
}

/// Estimator calls needed for one cache: purity of rho, s projections
/// onto rho, and s(s-1)/2 pairwise component overlaps.
pub fn estimator_calls(s: usize) -> u64 {
    1 + s as u64 + (s as u64 * (s as u64 - 1)) / 2
}

/// Raw (unclamped) shot-mode estimates kept for diagnostics.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RawCacheValues {
    pub r: f64,
    pub v: Vec<f64>,
    pub g: Vec<Vec<f64>>,
}

/// Device outputs the classical loop consumes: r = Tr rho^2, v_i =
/// <psi_i|rho|psi_i>, G_ij = |<psi_i|psi_j>|^2. Shot-mode entries are
/// clamped to [0,1] before they reach the lower-level solver; the raw
/// values are retained. G_ii is pinned to 1 analytically in both modes.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapCache {
    pub r: f64,
    pub v: Vec<f64>,
    pub g: DMatrix<f64>,
    pub mode: EvalMode,
    pub raw: Option<RawCacheValues>,
}

impl OverlapCache {
    pub fn components(&self) -> usize {
        self.v.len()
    }
}

/// Evaluate all cache entries for the given angle rows.
pub fn build_cache(
    rho: &DensityMatrix,
    params: &[ProductStateParams],
    mode: EvalMode,
) -> Result<OverlapCache> {
    if params.is_empty() {
        return Err(Error::InvalidParameter("no ensemble components".into()));
    }
    let n = rho.qubits();
    if params.iter().any(|row| row.qubits() != n) {
        return Err(Error::DimensionMismatch {
            left: n,
            right: params.iter().map(|r| r.qubits()).find(|q| *q != n).unwrap(),
        });
    }
    let s = params.len();
    let states: Vec<PureState> = params.iter().map(build_product_state).collect();

    match mode {
        EvalMode::Exact => {
            let r = rho.purity();
            let v: Vec<f64> = states
                .iter()
                .map(|psi| psi.expectation(rho))
                .collect::<Result<_>>()?;
            let mut g = DMatrix::from_element(s, s, 0.0);
            for i in 0..s {
                g[(i, i)] = 1.0;
                for j in (i + 1)..s {
                    let o = states[i].overlap_sq(&states[j])?;
                    g[(i, j)] = o;
                    g[(j, i)] = o;
                }
            }
            Ok(OverlapCache {
                r,
                v,
                g,
                mode,
                raw: None,
            })
        }
        EvalMode::Shots(cfg) => {
            // One sub-seed per estimator call, drawn in a fixed order so
            // entries are independent yet the whole cache is reproducible.
            let mut master = rng_from_seed(cfg.seed);
            let sub = |master: &mut rand_chacha::ChaCha8Rng| ShotConfig {
                shots: cfg.shots,
                seed: master.gen::<u64>(),
            };
            let r_raw = sample_overlap(rho, rho, sub(&mut master))?.value;
            let mut v_raw = Vec::with_capacity(s);
            for psi in &states {
                v_raw.push(sample_overlap_mixed_pure(rho, psi, sub(&mut master))?.value);
            }
            let mut g_raw = vec![vec![0.0f64; s]; s];
            let mut g = DMatrix::from_element(s, s, 0.0);
            for i in 0..s {
                g_raw[i][i] = 1.0;
                g[(i, i)] = 1.0;
                for j in (i + 1)..s {
                    let o = sample_overlap_pure(&states[i], &states[j], sub(&mut master))?.value;
                    g_raw[i][j] = o;
                    g_raw[j][i] = o;
                    let clamped = o.clamp(0.0, 1.0);
                    g[(i, j)] = clamped;
                    g[(j, i)] = clamped;
                }
            }
            let v: Vec<f64> = v_raw.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            Ok(OverlapCache {
                r: r_raw.clamp(0.0, 1.0),
                v,
                g,
                mode,
                raw: Some(RawCacheValues {
                    r: r_raw,
                    v: v_raw,
                    g: g_raw,
                }),
            })
        }
    }
}

fn check_len(cache: &OverlapCache, p: &[f64]) -> Result<()> {
    if cache.components() != p.len() {
        return Err(Error::DimensionMismatch {
            left: cache.components(),
            right: p.len(),
        });
    }
    Ok(())
}

/// Tr[rho sigma] = sum_i p_i v_i.
pub fn ensemble_overlap(cache: &OverlapCache, p: &[f64]) -> Result<f64> {
    check_len(cache, p)?;
    Ok(p.iter().zip(cache.v.iter()).map(|(a, b)| a * b).sum())
}

/// Tr[sigma^2] = sum_i p_i^2 + 2 sum_{i<j} p_i p_j G_ij.
pub fn ensemble_purity(cache: &OverlapCache, p: &[f64]) -> Result<f64> {
    check_len(cache, p)?;
    let s = p.len();
    let mut acc: f64 = p.iter().map(|x| x * x).sum();
    for i in 0..s {
        for j in (i + 1)..s {
            acc += 2.0 * p[i] * p[j] * cache.g[(i, j)];
        }
    }
    Ok(acc)
}

/// Tr[(rho - sigma)^2] assembled from the cache: r + purity - 2 overlap.
/// Nonnegative up to roundoff in exact mode; may dip slightly negative in
/// shot mode and is reported as-is.
pub fn hsd_from_cache(cache: &OverlapCache, p: &[f64]) -> Result<f64> {
    Ok(cache.r + ensemble_purity(cache, p)? - 2.0 * ensemble_overlap(cache, p)?)
}

/// Dense sum_i p_i |psi_i><psi_i| for oracle checks and reporting.
pub fn densify(ensemble: &SeparableEnsemble) -> DensityMatrix {
    let dim = 1usize << ensemble.qubits();
    let mut mat = DMatrix::from_element(dim, dim, Complex64::ZERO);
    for (w, params) in ensemble.p.iter().zip(ensemble.params.iter()) {
        let psi = build_product_state(params);
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] += psi.amplitudes()[i] * psi.amplitudes()[j].conj() * *w;
            }
        }
    }
    let sym = DMatrix::from_fn(dim, dim, |i, j| (mat[(i, j)] + mat[(j, i)].conj()) * 0.5);
    DensityMatrix::new(sym).expect("convex mixture of projectors is a state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{build_ghz, hsd_exact, PureState};
    use crate::random::{random_product_params, random_simplex_point, rng_from_seed};
    use crate::swap_test::overlap_exact;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn zero_row(n: usize) -> ProductStateParams {
        ProductStateParams::new(vec![0.0; n], vec![0.0; n]).unwrap()
    }

    fn one_row(n: usize) -> ProductStateParams {
        ProductStateParams::new(vec![FRAC_PI_2; n], vec![0.0; n]).unwrap()
    }

    fn random_ensemble(n: usize, s: usize, rng: &mut rand_chacha::ChaCha8Rng) -> SeparableEnsemble {
        let p = random_simplex_point(s, rng);
        let params = (0..s).map(|_| random_product_params(n, rng)).collect();
        SeparableEnsemble::new(p, params).unwrap()
    }

    #[test]
    fn cache_on_matching_basis_state() {
        let rho = PureState::basis(2, 0).density();
        let cache = build_cache(&rho, &[zero_row(2)], EvalMode::Exact).unwrap();
        assert_abs_diff_eq!(cache.r, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cache.v[0], 1.0, epsilon = 1e-12);
        assert_eq!(cache.g[(0, 0)], 1.0);
        assert_abs_diff_eq!(hsd_from_cache(&cache, &[1.0]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cache_orthogonal_components() {
        let rho = PureState::basis(2, 0).density();
        let cache = build_cache(&rho, &[zero_row(2), one_row(2)], EvalMode::Exact).unwrap();
        assert_abs_diff_eq!(cache.g[(0, 1)], 0.0, epsilon = 1e-20);
    }

    #[test]
    fn bell_cache_values() {
        let bell = build_ghz(2).unwrap().density();
        let cache = build_cache(&bell, &[zero_row(2), one_row(2)], EvalMode::Exact).unwrap();
        assert_abs_diff_eq!(cache.r, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cache.v[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cache.v[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cache.g[(0, 1)], 0.0, epsilon = 1e-20);
        let p = [0.5, 0.5];
        assert_abs_diff_eq!(ensemble_overlap(&cache, &p).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ensemble_purity(&cache, &p).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(hsd_from_cache(&cache, &p).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn purity_examples() {
        let rho = PureState::basis(1, 0).density();
        let single = build_cache(&rho, &[zero_row(1)], EvalMode::Exact).unwrap();
        assert_abs_diff_eq!(ensemble_purity(&single, &[1.0]).unwrap(), 1.0, epsilon = 1e-15);
        let twin = build_cache(&rho, &[zero_row(1), zero_row(1)], EvalMode::Exact).unwrap();
        assert_abs_diff_eq!(twin.g[(0, 1)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            ensemble_purity(&twin, &[0.5, 0.5]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_mode_matches_dense_oracles() {
        let mut rng = rng_from_seed(101);
        for trial in 0..60 {
            let n = 1 + trial % 3;
            let s = 1 + (trial * 7) % 8;
            let ens = random_ensemble(n, s, &mut rng);
            let rho = crate::random::random_mixed_state(n, &mut rng);
            let cache = build_cache(&rho, ens.params(), EvalMode::Exact).unwrap();
            let sigma = densify(&ens);
            let p = ens.probabilities();
            assert_abs_diff_eq!(
                ensemble_overlap(&cache, p).unwrap(),
                overlap_exact(&rho, &sigma).unwrap(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                ensemble_purity(&cache, p).unwrap(),
                sigma.purity(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                hsd_from_cache(&cache, p).unwrap(),
                hsd_exact(&rho, &sigma).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn gram_matrix_is_psd() {
        let mut rng = rng_from_seed(202);
        for _ in 0..30 {
            let params: Vec<_> = (0..6).map(|_| random_product_params(2, &mut rng)).collect();
            let rho = crate::random::random_mixed_state(2, &mut rng);
            let cache = build_cache(&rho, &params, EvalMode::Exact).unwrap();
            let eigs = cache.g.clone().symmetric_eigenvalues();
            assert!(eigs.iter().all(|&e| e > -1e-10), "G eigenvalues {eigs:?}");
        }
    }

    #[test]
    fn permuting_components_preserves_costs() {
        let mut rng = rng_from_seed(303);
        let ens = random_ensemble(2, 5, &mut rng);
        let rho = crate::random::random_mixed_state(2, &mut rng);
        let cache = build_cache(&rho, ens.params(), EvalMode::Exact).unwrap();
        let p = ens.probabilities();

        let perm = [3usize, 1, 4, 0, 2];
        let params_p: Vec<_> = perm.iter().map(|&i| ens.params()[i].clone()).collect();
        let p_p: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        let cache_p = build_cache(&rho, &params_p, EvalMode::Exact).unwrap();

        assert_abs_diff_eq!(
            hsd_from_cache(&cache, p).unwrap(),
            hsd_from_cache(&cache_p, &p_p).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            ensemble_purity(&cache, p).unwrap(),
            ensemble_purity(&cache_p, &p_p).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            ensemble_overlap(&cache, p).unwrap(),
            ensemble_overlap(&cache_p, &p_p).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn shot_mode_clamps_and_keeps_raw() {
        let mut rng = rng_from_seed(404);
        let rho = crate::random::random_mixed_state(2, &mut rng);
        let params: Vec<_> = (0..3).map(|_| random_product_params(2, &mut rng)).collect();
        let cfg = ShotConfig::new(256, 5).unwrap();
        let cache = build_cache(&rho, &params, EvalMode::Shots(cfg)).unwrap();
        let raw = cache.raw.as_ref().unwrap();
        assert!(cache.g.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(cache.v.iter().all(|x| (0.0..=1.0).contains(x)));
        for i in 0..3 {
            assert_eq!(cache.g[(i, i)], 1.0);
            assert_eq!(raw.g[i][i], 1.0);
        }
        // reproducibility
        let cache2 = build_cache(&rho, &params, EvalMode::Shots(cfg)).unwrap();
        assert_eq!(cache.v, cache2.v);
        assert_eq!(cache.r, cache2.r);
    }

    #[test]
    fn shot_mode_estimates_track_exact_values() {
        let bell = build_ghz(2).unwrap().density();
        let params = [zero_row(2), one_row(2)];
        let cfg = ShotConfig::new(8192, 11).unwrap();
        let cache = build_cache(&bell, &params, EvalMode::Shots(cfg)).unwrap();
        assert!((cache.r - 1.0).abs() < 0.05);
        assert!((cache.v[0] - 0.5).abs() < 0.05);
        assert!(cache.g[(0, 1)].abs() < 0.05);
    }

    #[test]
    fn densify_examples() {
        let single = SeparableEnsemble::new(vec![1.0], vec![zero_row(2)]).unwrap();
        let d = densify(&single);
        assert_abs_diff_eq!(d.purity(), 1.0, epsilon = 1e-12);

        let mixed = SeparableEnsemble::new(vec![0.5, 0.5], vec![zero_row(1), one_row(1)]).unwrap();
        let d = densify(&mixed);
        assert_abs_diff_eq!(d.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.matrix()[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.purity(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ensemble_validation() {
        assert!(SeparableEnsemble::new(vec![0.7, 0.7], vec![zero_row(1), one_row(1)]).is_err());
        assert!(SeparableEnsemble::new(vec![], vec![]).is_err());
        assert!(SeparableEnsemble::new(
            vec![0.5, 0.5],
            vec![zero_row(1), zero_row(2)]
        )
        .is_err());
        let over_cap: Vec<f64> = vec![1.0 / 5.0; 5];
        let rows = vec![zero_row(1); 5];
        assert!(SeparableEnsemble::new(over_cap, rows).is_err());
    }

    #[test]
    fn estimator_call_budget() {
        assert_eq!(estimator_calls(1), 2);
        assert_eq!(estimator_calls(4), 11);
        assert_eq!(estimator_calls(16), 137);
    }
}
