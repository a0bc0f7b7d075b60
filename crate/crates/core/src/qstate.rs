//! Dense complex linear algebra for small qubit systems: pure states,
//! density matrices, standard state families, partial trace/transpose and
//! the exact Hilbert-Schmidt distance oracle.
//!
//! Index convention: qubit 0 is the most significant bit of a basis-state
//! index, so |q0 q1 .. q(n-1)> has index q0*2^(n-1) + .. + q(n-1).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density matrix; absorbs
/// floating-point noise from construction.
pub const PSD_TOL: f64 = -1e-10;

/// Normalized state vector on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<Complex64>,
    n: usize,
}

impl PureState {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {norm_sq} deviates from 1 beyond {NORM_TOL}"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        Ok(Self { amplitudes, n })
    }

    /// Computational basis state |index> on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Self {
        let dim = 1usize << n;
        assert!(index < dim, "basis index out of range");
        let mut amps = DVector::from_element(dim, Complex64::ZERO);
        amps[index] = Complex64::ONE;
        Self { amplitudes: amps, n }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// <self|other>.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// |<self|other>|^2.
    pub fn overlap_sq(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// <self|M|self> for Hermitian M given as a density matrix.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        if self.dim() != rho.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: rho.dim(),
            });
        }
        let m_psi = rho.matrix() * &self.amplitudes;
        Ok(self.amplitudes.dotc(&m_psi).re)
    }

    /// Rank-one density matrix |psi><psi|.
    pub fn density(&self) -> DensityMatrix {
        let dim = self.dim();
        let mat = DMatrix::from_fn(dim, dim, |i, j| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        });
        DensityMatrix {
            matrix: mat,
            n: self.n,
        }
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    n: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positive semidefiniteness
    /// (minimum eigenvalue >= -1e-10).
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || dim != matrix.ncols() || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "matrix shape {}x{} is not a square power of two",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut herm_dev = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                herm_dev = herm_dev.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity violated by {herm_dev}"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {trace} deviates from 1")));
        }
        let min_eig = min_eigenvalue_hermitian(&matrix);
        if min_eig < PSD_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min_eig} below {PSD_TOL}"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        Ok(Self { matrix, n })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Tr rho^2. Equals the squared Frobenius norm by Hermiticity.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Real eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// One row of product-state angles: theta_j, phi_j per qubit, wrapped
/// into [0, 2pi).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProductStateParams {
    thetas: Vec<f64>,
    phis: Vec<f64>,
}

impl ProductStateParams {
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != phis.len() {
            return Err(Error::InvalidParameter(format!(
                "angle rows must be nonempty and equal length, got {} and {}",
                thetas.len(),
                phis.len()
            )));
        }
        for v in thetas.iter().chain(phis.iter()) {
            if !v.is_finite() {
                return Err(Error::InvalidParameter("non-finite angle".into()));
            }
        }
        Ok(Self {
            thetas: thetas.into_iter().map(wrap_angle).collect(),
            phis: phis.into_iter().map(wrap_angle).collect(),
        })
    }

    pub fn qubits(&self) -> usize {
        self.thetas.len()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w == TAU {
        0.0
    } else {
        w
    }
}

/// n-fold tensor product of cos(theta_j)|0> + e^(i phi_j) sin(theta_j)|1>,
/// qubit 0 outermost (most significant).
pub fn build_product_state(params: &ProductStateParams) -> PureState {
    let n = params.qubits();
    let dim = 1usize << n;
    let mut amps = DVector::from_element(dim, Complex64::ZERO);
    let factors: Vec<[Complex64; 2]> = (0..n)
        .map(|q| {
            let (s, c) = params.thetas[q].sin_cos();
            let phase = Complex64::from_polar(1.0, params.phis[q]);
            [Complex64::new(c, 0.0), phase * s]
        })
        .collect();
    for idx in 0..dim {
        let mut a = Complex64::ONE;
        for (q, f) in factors.iter().enumerate() {
            let bit = (idx >> (n - 1 - q)) & 1;
            a *= f[bit];
        }
        amps[idx] = a;
    }
    PureState { amplitudes: amps, n }
}

/// (|0..0> + |1..1>)/sqrt(2) on n >= 2 qubits.
pub fn build_ghz(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "GHZ state needs at least 2 qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut amps = DVector::from_element(dim, Complex64::ZERO);
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = a;
    amps[dim - 1] = a;
    Ok(PureState { amplitudes: amps, n })
}

/// Piecewise diagonal weights of the maximally-entangled mixed X-state
/// family, N = 2^(n-1): f = g = 1/(N+1) for |gamma| <= 1/(N+1), else
/// f = |gamma|, g = (1-2|gamma|)/(N-1).
pub fn xmems_weights(n: usize, gamma_abs: f64) -> (f64, f64) {
    let big_n = (1usize << (n - 1)) as f64;
    if gamma_abs <= 1.0 / (big_n + 1.0) {
        let w = 1.0 / (big_n + 1.0);
        (w, w)
    } else {
        (gamma_abs, (1.0 - 2.0 * gamma_abs) / (big_n - 1.0))
    }
}

/// Maximally-entangled mixed X-state on n >= 2 qubits, |gamma| <= 1/2.
///
/// Layout on the diagonal: f at the all-zero and all-one slots, g on the
/// N-1 slots after the top-left corner, zeros elsewhere; gamma and its
/// conjugate sit on the outer anti-diagonal corners. At |gamma| = 1/2 this
/// is the n-qubit GHZ density matrix.
pub fn build_xmems(n: usize, gamma: Complex64) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "X-MEMS needs at least 2 qubits, got {n}"
        )));
    }
    let x = gamma.norm();
    if x > 0.5 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "|gamma| = {x} exceeds 1/2"
        )));
    }
    let dim = 1usize << n;
    let big_n = dim / 2;
    let (f, g) = xmems_weights(n, x);
    let mut mat = DMatrix::from_element(dim, dim, Complex64::ZERO);
    mat[(0, 0)] = Complex64::new(f, 0.0);
    mat[(dim - 1, dim - 1)] = Complex64::new(f, 0.0);
    for k in 1..big_n {
        mat[(k, k)] = Complex64::new(g, 0.0);
    }
    mat[(0, dim - 1)] = gamma;
    mat[(dim - 1, 0)] = gamma.conj();
    DensityMatrix::new(mat)
}

/// Transpose the given qubit's indices; Hermitian and trace preserving
/// but in general not positive semidefinite, hence a plain matrix.
pub fn partial_transpose(rho: &DensityMatrix, qubit: usize) -> Result<DMatrix<Complex64>> {
    let n = rho.qubits();
    if qubit >= n {
        return Err(Error::QubitOutOfRange { index: qubit, n });
    }
    let dim = rho.dim();
    let bit = 1usize << (n - 1 - qubit);
    let mut out = DMatrix::from_element(dim, dim, Complex64::ZERO);
    for i in 0..dim {
        for j in 0..dim {
            let ii = (i & !bit) | (j & bit);
            let jj = (j & !bit) | (i & bit);
            out[(i, j)] = rho.matrix[(ii, jj)];
        }
    }
    Ok(out)
}

/// Reduced density matrix on the kept qubits (order preserved).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.qubits();
    if keep.is_empty() {
        return Err(Error::InvalidParameter("empty keep subset".into()));
    }
    let mut seen = vec![false; n];
    for &q in keep {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
        if seen[q] {
            return Err(Error::InvalidParameter(format!("duplicate qubit {q}")));
        }
        seen[q] = true;
    }
    let k = keep.len();
    let traced: Vec<usize> = (0..n).filter(|q| !seen[*q]).collect();
    let out_dim = 1usize << k;
    let env_dim = 1usize << traced.len();

    // Build a full index from kept bits `a` and traced bits `t`.
    let compose = |a: usize, t: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            let b = (a >> (k - 1 - pos)) & 1;
            idx |= b << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let b = (t >> (traced.len() - 1 - pos)) & 1;
            idx |= b << (n - 1 - q);
        }
        idx
    };

    let mut out = DMatrix::from_element(out_dim, out_dim, Complex64::ZERO);
    for a in 0..out_dim {
        for b in 0..out_dim {
            let mut acc = Complex64::ZERO;
            for t in 0..env_dim {
                acc += rho.matrix[(compose(a, t), compose(b, t))];
            }
            out[(a, b)] = acc;
        }
    }
    DensityMatrix::new(out)
}

/// Relabel qubits: output qubit q is input qubit perm[q].
pub fn permute_qubits(rho: &DensityMatrix, perm: &[usize]) -> Result<DensityMatrix> {
    let n = rho.qubits();
    if perm.len() != n {
        return Err(Error::InvalidParameter(format!(
            "permutation length {} != qubit count {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &q in perm {
        if q >= n || seen[q] {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        seen[q] = true;
    }
    let dim = rho.dim();
    let map_index = |i: usize| -> usize {
        let mut out = 0usize;
        for q in 0..n {
            let b = (i >> (n - 1 - perm[q])) & 1;
            out |= b << (n - 1 - q);
        }
        out
    };
    let mut out = DMatrix::from_element(dim, dim, Complex64::ZERO);
    for i in 0..dim {
        let mi = map_index(i);
        for j in 0..dim {
            out[(mi, map_index(j))] = rho.matrix[(i, j)];
        }
    }
    DensityMatrix::new(out)
}

/// Tr[(rho - sigma)^2], the squared Hilbert-Schmidt distance. Computed as
/// the squared Frobenius norm of the (Hermitian) difference, so it is
/// nonnegative by construction.
pub fn hsd_exact(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let mut acc = 0.0f64;
    for (a, b) in rho.matrix.iter().zip(sigma.matrix.iter()) {
        acc += (a - b).norm_sqr();
    }
    Ok(acc)
}

/// Eigenvalues of a Hermitian matrix, ascending. The input is
/// symmetrized first to shed floating-point asymmetry.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let sym = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * 0.5
    });
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

pub fn min_eigenvalue_hermitian(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(m)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use crate::random::{random_mixed_state, random_product_params, rng_from_seed};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_state_zero_angles_is_zero_ket() {
        let p = ProductStateParams::new(vec![0.0], vec![0.0]).unwrap();
        let psi = build_product_state(&p);
        assert_abs_diff_eq!(psi.amplitudes()[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.amplitudes()[1].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn product_state_half_pi_is_one_ket() {
        let p = ProductStateParams::new(vec![std::f64::consts::FRAC_PI_2], vec![0.0]).unwrap();
        let psi = build_product_state(&p);
        assert!(psi.amplitudes()[0].norm() < 1e-15);
        assert_abs_diff_eq!(psi.amplitudes()[1].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_quarter_pi_uniform() {
        let q = std::f64::consts::FRAC_PI_4;
        let p = ProductStateParams::new(vec![q, q], vec![0.0, 0.0]).unwrap();
        let psi = build_product_state(&p);
        for k in 0..4 {
            assert_abs_diff_eq!(psi.amplitudes()[k].re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(psi.amplitudes()[k].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn ghz_examples() {
        let g2 = build_ghz(2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(g2.amplitudes()[0].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(g2.amplitudes()[3].re, r, epsilon = 1e-15);
        assert_eq!(g2.amplitudes()[1], Complex64::ZERO);
        let g3 = build_ghz(3).unwrap();
        assert_abs_diff_eq!(g3.amplitudes()[0].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(g3.amplitudes()[7].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(g3.density().purity(), 1.0, epsilon = 1e-12);
        assert!(build_ghz(1).is_err());
    }

    #[test]
    fn xmems_gamma_zero_two_qubits() {
        let m = build_xmems(2, Complex64::ZERO).unwrap();
        let third = 1.0 / 3.0;
        for (k, want) in [(0, third), (1, third), (2, 0.0), (3, third)] {
            assert_abs_diff_eq!(m.matrix()[(k, k)].re, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn xmems_gamma_half_is_ghz() {
        for n in 2..=4 {
            let m = build_xmems(n, c(0.5, 0.0)).unwrap();
            let ghz = build_ghz(n).unwrap().density();
            assert!(hsd_exact(&m, &ghz).unwrap() < 1e-24);
        }
    }

    #[test]
    fn xmems_three_qubit_branch_split() {
        // N = 4 and |gamma| = 0.3 > 1/5, so f = 0.3, g = (1 - 0.6)/3.
        let m = build_xmems(3, c(0.3, 0.0)).unwrap();
        assert_abs_diff_eq!(m.matrix()[(0, 0)].re, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(m.matrix()[(1, 1)].re, 0.4 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.matrix()[(7, 7)].re, 0.3, epsilon = 1e-15);
        assert_eq!(m.matrix()[(4, 4)], Complex64::ZERO);
    }

    #[test]
    fn xmems_rejects_large_gamma() {
        assert!(build_xmems(2, c(0.51, 0.0)).is_err());
    }

    #[test]
    fn xmems_continuous_at_breakpoint() {
        for n in 2..=5 {
            let big_n = (1usize << (n - 1)) as f64;
            let bp = 1.0 / (big_n + 1.0);
            let left = build_xmems(n, c(bp - 1e-13, 0.0)).unwrap();
            let right = build_xmems(n, c(bp + 1e-13, 0.0)).unwrap();
            let diff: f64 = left
                .matrix()
                .iter()
                .zip(right.matrix().iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-9, "n={n} entrywise jump {diff}");
        }
    }

    #[test]
    fn partial_transpose_of_product_factors() {
        let pa = ProductStateParams::new(vec![0.3], vec![1.1]).unwrap();
        let pb = ProductStateParams::new(vec![1.2], vec![0.4]).unwrap();
        let joint = build_product_state(
            &ProductStateParams::new(vec![0.3, 1.2], vec![1.1, 0.4]).unwrap(),
        )
        .density();
        let ra = build_product_state(&pa).density();
        let rb = build_product_state(&pb).density();
        let pt = partial_transpose(&joint, 1).unwrap();
        // rho_A kron rho_B^T
        let expect = ra.matrix().kronecker(&rb.matrix().transpose());
        for (a, b) in pt.iter().zip(expect.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_transpose_bell_min_eigenvalue() {
        let bell = build_ghz(2).unwrap().density();
        let pt = partial_transpose(&bell, 1).unwrap();
        let eigs = hermitian_eigenvalues(&pt);
        assert_abs_diff_eq!(eigs[0], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn partial_transpose_diagonal_unchanged() {
        let m = build_xmems(2, Complex64::ZERO).unwrap();
        let pt = partial_transpose(&m, 0).unwrap();
        for (a, b) in pt.iter().zip(m.matrix().iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn partial_trace_bell_is_maximally_mixed() {
        let bell = build_ghz(2).unwrap().density();
        let red = partial_trace(&bell, &[0]).unwrap();
        assert_abs_diff_eq!(red.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(red.matrix()[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(red.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_recovers_product_factor() {
        let mut rng = rng_from_seed(7);
        for _ in 0..20 {
            let params = random_product_params(3, &mut rng);
            let joint = build_product_state(&params).density();
            for q in 0..3 {
                let red = partial_trace(&joint, &[q]).unwrap();
                let single = ProductStateParams::new(
                    vec![params.thetas()[q]],
                    vec![params.phis()[q]],
                )
                .unwrap();
                let factor = build_product_state(&single).density();
                assert!(hsd_exact(&red, &factor).unwrap() < 1e-24);
            }
        }
    }

    #[test]
    fn partial_trace_rejects_bad_subsets() {
        let bell = build_ghz(2).unwrap().density();
        assert!(partial_trace(&bell, &[]).is_err());
        assert!(partial_trace(&bell, &[2]).is_err());
        assert!(partial_trace(&bell, &[0, 0]).is_err());
    }

    #[test]
    fn hsd_orthogonal_projectors() {
        let zero = PureState::basis(1, 0).density();
        let one = PureState::basis(1, 1).density();
        assert_abs_diff_eq!(hsd_exact(&zero, &one).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hsd_exact(&zero, &zero).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hsd_decomposition_identity_on_random_pairs() {
        let mut rng = rng_from_seed(11);
        for i in 0..1000 {
            let n = 1 + (i % 3);
            let a = random_mixed_state(n, &mut rng);
            let b = random_mixed_state(n, &mut rng);
            let direct = hsd_exact(&a, &b).unwrap();
            let cross: f64 = a
                .matrix()
                .iter()
                .zip(b.matrix().iter())
                .map(|(x, y)| (x * y.conj()).re)
                .sum();
            let decomp = a.purity() + b.purity() - 2.0 * cross;
            assert_abs_diff_eq!(direct, decomp, epsilon = 1e-12);
        }
    }

    #[test]
    fn hsd_rejects_dimension_mismatch() {
        let a = PureState::basis(1, 0).density();
        let b = PureState::basis(2, 0).density();
        assert!(hsd_exact(&a, &b).is_err());
    }

    #[test]
    fn density_matrix_validation_rejects_bad_inputs() {
        // non-Hermitian
        let mut m = DMatrix::from_element(2, 2, Complex64::ZERO);
        m[(0, 0)] = c(1.0, 0.0);
        m[(0, 1)] = c(0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        // wrong trace
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.7, 0.0), c(0.7, 0.0)]));
        assert!(DensityMatrix::new(m).is_err());
        // negative eigenvalue
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn permute_qubits_roundtrip() {
        let mut rng = rng_from_seed(3);
        let rho = random_mixed_state(3, &mut rng);
        let perm = [2, 0, 1];
        let inv = [1, 2, 0];
        let once = permute_qubits(&rho, &perm).unwrap();
        let back = permute_qubits(&once, &inv).unwrap();
        assert!(hsd_exact(&rho, &back).unwrap() < 1e-24);
    }

    proptest! {
        #[test]
        fn product_state_reduced_states_are_pure(seed in 0u64..500) {
            let mut rng = rng_from_seed(seed);
            let n = 1 + (seed as usize % 3);
            let params = random_product_params(n, &mut rng);
            let psi = build_product_state(&params);
            let norm_sq: f64 = psi.amplitudes().iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((norm_sq - 1.0).abs() < 1e-12);
            let rho = psi.density();
            for q in 0..n {
                let red = partial_trace(&rho, &[q]).unwrap();
                prop_assert!((red.purity() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn wrap_angle_lands_in_range(a in -100.0f64..100.0) {
            let w = wrap_angle(a);
            prop_assert!((0.0..TAU).contains(&w));
        }
    }
}
