//! Entanglement witness construction from an approximate closest
//! separable state: W = offset I - (rho - sigma), where offset is the
//! largest product-state expectation of rho - sigma found by a budgeted
//! search. Separable states then satisfy Tr[W sigma_sep] >= 0 (up to the
//! search gap) while Tr[W rho] < 0 certifies entanglement.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{build_product_state, DensityMatrix};
use crate::random::rng_from_seed;
use crate::vsv::{coordinate_sinusoidal_step, AnsatzAngles};

#[derive(Debug, Clone)]
pub struct WitnessResult {
    /// offset I - (rho - sigma)
    pub matrix: DMatrix<Complex64>,
    /// Largest <psi|(rho - sigma)|psi> over product states found by the
    /// search; a lower bound on the true maximum when `search_exhausted`.
    pub offset: f64,
    pub tr_w_rho: f64,
    /// True when the budget ran out before the last restart converged.
    pub search_exhausted: bool,
    pub evaluations: u64,
}

/// <psi|M|psi> for a Hermitian matrix M.
fn expectation(m: &DMatrix<Complex64>, angles: &AnsatzAngles) -> f64 {
    let psi = build_product_state(&angles.rows()[0]);
    let m_psi = m * psi.amplitudes();
    psi.amplitudes().dotc(&m_psi).re
}

/// Hilbert-Schmidt inner product Tr[A B] of Hermitian matrices.
fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

/// Build the witness for rho from an approximation sigma of its closest
/// separable state. The offset search is a multi-start sinusoidal
/// coordinate ascent over single product states, spending at most
/// `budget` expectation evaluations.
pub fn build_witness(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    budget: u64,
    seed: u64,
) -> Result<WitnessResult> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    if budget == 0 {
        return Err(Error::InvalidConfig("witness search budget must be positive".into()));
    }
    let n = rho.qubits();
    let diff = rho.matrix() - sigma.matrix();

    let mut rng = rng_from_seed(seed);
    let mut used = 0u64;
    let mut best = f64::NEG_INFINITY;
    let mut exhausted = false;

    'starts: while used < budget {
        let mut angles = AnsatzAngles::random_init(1, n, &mut rng);
        let mut start_best = {
            used += 1;
            expectation(&diff, &angles)
        };
        best = best.max(start_best);
        loop {
            if used + (3 * angles.param_count() as u64) > budget {
                exhausted = true;
                break 'starts;
            }
            for param in 0..angles.param_count() {
                let (next, _) = coordinate_sinusoidal_step(&angles, param, |a| {
                    used += 1;
                    // ascend: minimize the negated expectation
                    -expectation(&diff, a)
                });
                angles = next;
            }
            let sweep_value = {
                used += 1;
                expectation(&diff, &angles)
            };
            best = best.max(sweep_value);
            if sweep_value - start_best < 1e-12 {
                break;
            }
            start_best = sweep_value;
        }
    }

    let dim = rho.dim();
    let mut w = DMatrix::from_element(dim, dim, Complex64::ZERO);
    for i in 0..dim {
        for j in 0..dim {
            w[(i, j)] = -diff[(i, j)];
        }
        w[(i, i)] += Complex64::new(best, 0.0);
    }
    let tr_w_rho = best - trace_product(&diff, rho.matrix());
    Ok(WitnessResult {
        matrix: w,
        offset: best,
        tr_w_rho,
        search_exhausted: exhausted,
        evaluations: used,
    })
}
