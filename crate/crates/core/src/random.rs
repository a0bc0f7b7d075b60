//! Seeded sampling helpers. All randomness in the crate flows through
//! ChaCha8, a named counter-based generator, so traces are reproducible
//! across platforms.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};
use std::f64::consts::TAU;

use crate::qstate::{DensityMatrix, ProductStateParams, PureState};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Angle rows with every entry uniform in [0, 2pi).
pub fn random_product_params(n: usize, rng: &mut ChaCha8Rng) -> ProductStateParams {
    let thetas: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * TAU).collect();
    let phis: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * TAU).collect();
    ProductStateParams::new(thetas, phis).expect("uniform angles are valid")
}

/// Product-state parameters with each qubit's Bloch vector uniform on the
/// sphere: theta = arccos(u)/2 for u uniform in [-1, 1], phi uniform.
/// The half angle maps the Bloch polar angle onto the cos(theta)|0> +
/// e^(i phi) sin(theta)|1> parameterization.
pub fn bloch_uniform_product_params(n: usize, rng: &mut ChaCha8Rng) -> ProductStateParams {
    let mut thetas = Vec::with_capacity(n);
    let mut phis = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.gen_range(-1.0..=1.0);
        thetas.push(u.acos() / 2.0);
        phis.push(rng.gen::<f64>() * TAU);
    }
    ProductStateParams::new(thetas, phis).expect("sphere angles are valid")
}

/// Haar-random pure state: complex Gaussian amplitudes, normalized.
pub fn random_haar_pure(n: usize, rng: &mut ChaCha8Rng) -> PureState {
    let dim = 1usize << n;
    let mut amps = DVector::from_element(dim, Complex64::ZERO);
    loop {
        for a in amps.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *a = Complex64::new(re, im);
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            amps /= Complex64::new(norm, 0.0);
            break;
        }
    }
    PureState::new(amps).expect("normalized vector")
}

/// Full-rank random mixed state: 2^n Haar-random pure states mixed with
/// Dirichlet-uniform weights.
pub fn random_mixed_state(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let dim = 1usize << n;
    let weights = random_simplex_point(dim, rng);
    let mut mat = nalgebra::DMatrix::from_element(dim, dim, Complex64::ZERO);
    for w in weights {
        let psi = random_haar_pure(n, rng);
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] += psi.amplitudes()[i] * psi.amplitudes()[j].conj() * w;
            }
        }
    }
    // Scrub floating-point asymmetry so the validated constructor accepts it.
    let sym = nalgebra::DMatrix::from_fn(dim, dim, |i, j| (mat[(i, j)] + mat[(j, i)].conj()) * 0.5);
    DensityMatrix::new(sym).expect("convex mixture of pure states")
}

/// Uniform (Dirichlet(1,..,1)) point on the probability simplex.
pub fn random_simplex_point(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let dir = Dirichlet::new_with_size(1.0, len).expect("valid Dirichlet");
    dir.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_runs_reproduce() {
        let mut a = rng_from_seed(42);
        let mut b = rng_from_seed(42);
        let pa = random_product_params(3, &mut a);
        let pb = random_product_params(3, &mut b);
        assert_eq!(pa.thetas(), pb.thetas());
        assert_eq!(pa.phis(), pb.phis());
    }

    #[test]
    fn mixed_states_validate_and_are_full_rank() {
        let mut rng = rng_from_seed(5);
        for n in 1..=3 {
            let rho = random_mixed_state(n, &mut rng);
            let eigs = rho.eigenvalues();
            assert!(eigs[0] > 1e-9, "n={n} min eig {}", eigs[0]);
        }
    }

    #[test]
    fn simplex_points_sum_to_one() {
        let mut rng = rng_from_seed(9);
        for len in [1usize, 2, 5, 16] {
            let p = random_simplex_point(len, &mut rng);
            assert_eq!(p.len(), len);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn bloch_uniform_thetas_in_quarter_turn() {
        let mut rng = rng_from_seed(13);
        for _ in 0..50 {
            let p = bloch_uniform_product_params(2, &mut rng);
            for &t in p.thetas() {
                assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&t));
            }
        }
    }
}
