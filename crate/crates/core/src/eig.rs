//! Hermitian and normal eigendecompositions plus the brute-force matrix
//! exponential used as the reference oracle everywhere else.
//!
//! The decomposition itself is delegated to `nalgebra`'s Hermitian
//! eigensolver; the contract enforced here is the residual bound, not the
//! algorithm.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector, ToleranceConfig};

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Hermitian eigendecomposition with residual verification.
pub fn herm_eig(h: &ComplexMatrix, tol: &ToleranceConfig) -> Result<HermEig> {
    if !h.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let defect = h.hermiticity_defect();
    if defect > tol.condition_tol {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian: defect {defect:e} exceeds {:e}",
            tol.condition_tol
        )));
    }
    let n = h.rows();
    if n == 0 {
        return Ok(HermEig {
            eigenvalues: vec![],
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    // Symmetrize so rounding-level defects cannot leak into the solver.
    let hs = h.add(&h.dagger())?.scale(Complex64::new(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(&hs));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[k]);
        for i in 0..n {
            eigenvectors[(i, col)] = eig.eigenvectors[(i, k)];
        }
    }
    let out = HermEig {
        eigenvalues,
        eigenvectors,
    };
    verify_residuals(&hs, &out, tol.eig_residual_tol)?;
    Ok(out)
}

fn verify_residuals(h: &ComplexMatrix, eig: &HermEig, tol: f64) -> Result<()> {
    let n = h.rows();
    // Scale-aware residual check: nalgebra delivers ~1e-14 relative accuracy.
    let scale = 1.0_f64.max(h.max_abs());
    for k in 0..n {
        let v = eig.eigenvector(k);
        let hv = h.apply(&v)?;
        let lv = v.scale(Complex64::new(eig.eigenvalues[k], 0.0));
        let resid = hv.sub(&lv)?.norm();
        if resid > tol * scale {
            return Err(Error::Contract(format!(
                "eigenpair {k} residual {resid:e} exceeds {tol:e} (scale {scale})"
            )));
        }
        for k2 in 0..k {
            let ip = eig.eigenvector(k2).inner(&v)?.norm();
            if ip > tol {
                return Err(Error::Contract(format!(
                    "eigenvectors {k2},{k} not orthogonal: overlap {ip:e}"
                )));
            }
        }
    }
    Ok(())
}

impl HermEig {
    pub fn eigenvector(&self, k: usize) -> StateVector {
        let n = self.eigenvectors.rows();
        StateVector::new((0..n).map(|i| self.eigenvectors[(i, k)]).collect())
    }

    /// Rebuilds `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn apply_function(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.eigenvectors.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            let fv = f(self.eigenvalues[k]);
            if fv.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.eigenvectors[(i, k)];
                if vi.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += fv * vi * self.eigenvectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Brute-force `exp(-i h t)` through the spectral decomposition.
pub fn expm_herm(h: &ComplexMatrix, t: f64, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    let eig = herm_eig(h, tol)?;
    let u = eig.apply_function(|lam| Complex64::from_polar(1.0, -lam * t));
    let defect = crate::matrix::unitarity_defect(&u)?;
    if defect > tol.unitarity_tol.max(1e-12 * h.rows() as f64) {
        return Err(Error::Contract(format!(
            "matrix exponential lost unitarity: defect {defect:e}"
        )));
    }
    Ok(u)
}

/// Largest eigenvalue of a positive semidefinite Hermitian matrix.
pub(crate) fn top_eigenvalue_psd(g: &ComplexMatrix) -> Result<f64> {
    if g.rows() == 0 {
        return Ok(0.0);
    }
    // Gram matrices arrive here with rounding-level asymmetry only.
    let gs = g.add(&g.dagger())?.scale(Complex64::new(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(&gs));
    Ok(eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Eigendecomposition of a normal matrix, done by simultaneously
/// diagonalizing its commuting Hermitian and anti-Hermitian parts. Vectors
/// within a degenerate cluster of the Hermitian part are rotated to
/// diagonalize the anti-Hermitian part there.
pub struct NormalEig {
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: ComplexMatrix,
}

pub fn normal_eig(c: &ComplexMatrix, tol: &ToleranceConfig) -> Result<NormalEig> {
    if !c.is_square() {
        return Err(Error::Shape("normal_eig requires a square matrix".into()));
    }
    let n = c.rows();
    let cd = c.dagger();
    let comm = c.matmul(&cd)?.sub(&cd.matmul(c)?)?.max_abs();
    let scale = 1.0_f64.max(c.max_abs() * c.max_abs());
    if comm > 1e-9 * scale {
        return Err(Error::Contract(format!(
            "matrix is not normal: commutator defect {comm:e}"
        )));
    }
    let re = c.add(&cd)?.scale(Complex64::new(0.5, 0.0));
    let im = c.sub(&cd)?.scale(Complex64::new(0.0, -0.5));
    let eig_re = herm_eig(&re, tol)?;

    let mut eigenvectors = eig_re.eigenvectors.clone();
    let mut eigenvalues = vec![Complex64::new(0.0, 0.0); n];

    // Cluster equal real parts, then diagonalize the imaginary part inside
    // each cluster.
    let cluster_gap = 1e-9 * 1.0_f64.max(re.max_abs());
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eig_re.eigenvalues[end] - eig_re.eigenvalues[end - 1]).abs() <= cluster_gap
        {
            end += 1;
        }
        let k = end - start;
        if k == 1 {
            let v = column(&eigenvectors, start);
            let bv = im.apply(&v)?;
            let beta = v.inner(&bv)?.re;
            eigenvalues[start] = Complex64::new(eig_re.eigenvalues[start], beta);
        } else {
            // Small Hermitian problem restricted to the cluster.
            let mut sub = ComplexMatrix::zeros(k, k);
            let vs: Vec<StateVector> = (start..end).map(|j| column(&eigenvectors, j)).collect();
            for (a, va) in vs.iter().enumerate() {
                let bv = im.apply(va)?;
                for (b, vb) in vs.iter().enumerate() {
                    sub[(b, a)] = vb.inner(&bv)?;
                }
            }
            let sub_eig = herm_eig(&sub, tol)?;
            for (local, col) in (start..end).enumerate() {
                eigenvalues[col] =
                    Complex64::new(eig_re.eigenvalues[col], sub_eig.eigenvalues[local]);
                for i in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (m, vm) in vs.iter().enumerate() {
                        acc += vm.amplitudes()[i] * sub_eig.eigenvectors[(m, local)];
                    }
                    eigenvectors[(i, col)] = acc;
                }
            }
        }
        start = end;
    }

    // Residual check against the original matrix.
    for k in 0..n {
        let v = column(&eigenvectors, k);
        let cv = c.apply(&v)?;
        let lv = v.scale(eigenvalues[k]);
        let resid = cv.sub(&lv)?.norm();
        if resid > 1e-8 * 1.0_f64.max(c.max_abs()) {
            return Err(Error::Contract(format!(
                "normal eigenpair {k} residual {resid:e} too large"
            )));
        }
    }
    Ok(NormalEig {
        eigenvalues,
        eigenvectors,
    })
}

fn column(m: &ComplexMatrix, j: usize) -> StateVector {
    StateVector::new((0..m.rows()).map(|i| m[(i, j)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{operator_distance, pauli, kron};
    use rand::Rng;
    use rand::SeedableRng;

    fn tols() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
                m[(i, j)] = Complex64::new(re, im);
                m[(j, i)] = Complex64::new(re, -im);
            }
        }
        m
    }

    #[test]
    fn pauli_z_spectrum() {
        let eig = herm_eig(&pauli::z(), &tols()).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hadamard_like_spectrum() {
        // (X + Z)/sqrt(2) has eigenvalues -1, 1 from its characteristic polynomial.
        let s = 1.0 / 2.0_f64.sqrt();
        let h = pauli::x().add(&pauli::z()).unwrap().scale(Complex64::new(s, 0.0));
        let eig = herm_eig(&h, &tols()).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_residuals_and_reconstruction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(8, &mut rng);
        let eig = herm_eig(&h, &tols()).unwrap();
        let rebuilt = eig.apply_function(|lam| Complex64::new(lam, 0.0));
        assert!(h.max_abs_diff(&rebuilt) < 1e-9);
        for k in 1..8 {
            assert!(eig.eigenvalues[k] >= eig.eigenvalues[k - 1]);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(herm_eig(&m, &tols()).is_err());
    }

    #[test]
    fn expm_at_zero_time_is_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(4, &mut rng);
        let u = expm_herm(&h, 0.0, &tols()).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn expm_pauli_z_at_pi() {
        let u = expm_herm(&pauli::z(), std::f64::consts::PI, &tols()).unwrap();
        let minus_i2 = ComplexMatrix::identity(2).scale(Complex64::new(-1.0, 0.0));
        assert!(u.max_abs_diff(&minus_i2) < 1e-12);
    }

    #[test]
    fn expm_matches_finite_difference_derivative() {
        // d/dt exp(-iHt) = -iH exp(-iHt), checked with a central difference.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let h = random_hermitian(4, &mut rng);
        let t = 1.7;
        let step = 1e-6;
        let up = expm_herm(&h, t + step, &tols()).unwrap();
        let dn = expm_herm(&h, t - step, &tols()).unwrap();
        let fd = up.sub(&dn).unwrap().scale(Complex64::new(1.0 / (2.0 * step), 0.0));
        let exact = h
            .matmul(&expm_herm(&h, t, &tols()).unwrap())
            .unwrap()
            .scale(Complex64::new(0.0, -1.0));
        assert!(operator_distance(&fd, &exact).unwrap() < 1e-6);
    }

    #[test]
    fn expm_group_property() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(4, &mut rng);
        let (t, s) = (0.9, 1.3);
        let a = expm_herm(&h, t, &tols()).unwrap();
        let b = expm_herm(&h, s, &tols()).unwrap();
        let c = expm_herm(&h, t + s, &tols()).unwrap();
        assert!(a.matmul(&b).unwrap().max_abs_diff(&c) < 1e-10);
    }

    #[test]
    fn normal_eig_recovers_unitary_times_positive() {
        // Normal 4x4 built from commuting Hermitian + anti-Hermitian parts.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let h = random_hermitian(4, &mut rng);
        let eig = herm_eig(&h, &tols()).unwrap();
        let c = eig.apply_function(|lam| Complex64::from_polar(lam.abs().min(1.0), lam));
        let ne = normal_eig(&c, &tols()).unwrap();
        for k in 0..4 {
            let v = StateVector::new((0..4).map(|i| ne.eigenvectors[(i, k)]).collect());
            let resid = c.apply(&v).unwrap().sub(&v.scale(ne.eigenvalues[k])).unwrap().norm();
            assert!(resid < 1e-9);
        }
    }

    #[test]
    fn normal_eig_handles_degenerate_modulus() {
        // Z (x) I has two clusters of doubly degenerate eigenvalues.
        let m = kron(&pauli::z(), &pauli::i2()).unwrap();
        let ne = normal_eig(&m, &tols()).unwrap();
        let mut sorted: Vec<f64> = ne.eigenvalues.iter().map(|c| c.re).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sorted[0] + 1.0).abs() < 1e-12 && (sorted[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_eig_rejects_non_normal() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(normal_eig(&m, &tols()).is_err());
    }
}
