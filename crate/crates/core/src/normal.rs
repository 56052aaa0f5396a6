//! Qubitization of normal signal operators by alternating phased iterates.
//!
//! A normal signal `C` with polar eigenvalues `lambda e^{i theta}` does not
//! admit a single self-contained iterate, but the alternating pair
//! `W_{phi2,-} W_{phi1,+}` (one factor built from `u`, the next from
//! `u^dag`) preserves a two-dimensional subspace per eigenvalue. Inside it,
//! each factor acts as
//! `[[e^{+-i theta} l, -i e^{-i phi} g], [-i e^{i phi} g, e^{-+i theta} l]]`,
//! and Hermitian qubitization is recovered when every `theta = 0`.

use num_complex::Complex64;

use crate::encoding::{normal_spectrum, BlockEncoding, SignalSpectrum};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector, ToleranceConfig};
use crate::qubitize::{partial_reflection, reflection_about_g, EigenBasis};

/// Sign of one alternating factor: `+` uses `u`, `-` uses `u^dag`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterateSign {
    Plus,
    Minus,
}

/// Alternating-iterate qubitization of an encoding with a normal signal.
#[derive(Clone, Debug)]
pub struct NormalQubitization {
    pub enc: BlockEncoding,
    pub spectrum: SignalSpectrum,
    /// Per-eigenvalue invariant basis for alternating products.
    pub bases: Vec<EigenBasis>,
    w_plus_base: ComplexMatrix,
    w_minus_base: ComplexMatrix,
}

/// Builds the alternating-iterate pair for an encoding whose signal is
/// normal within tolerance.
pub fn normal_qubitize(enc: &BlockEncoding, tol: &ToleranceConfig) -> Result<NormalQubitization> {
    let signal = enc.signal_operator();
    let spectrum = normal_spectrum(&signal, tol)?;

    let refl = reflection_about_g(enc)?;
    let w_plus_base = refl.matmul(&enc.u)?;
    let w_minus_base = refl.matmul(&enc.u.dagger())?;

    // Basis per eigenvalue: |G_l> and the negated leak vector of u^dag,
    // which is the invariant partner for alternating products.
    let g_state = enc.g_state();
    let ud = enc.u.dagger();
    let mut bases = Vec::with_capacity(spectrum.eigenvalues.len());
    for i in 0..spectrum.eigenvalues.len() {
        let lambda = spectrum.eigenvalues[i];
        let theta = spectrum.phases[i];
        let sys_vec = StateVector::new(
            (0..enc.system_dim)
                .map(|r| spectrum.eigenvectors[(r, i)])
                .collect(),
        );
        let g_lambda = g_state.tensor(&sys_vec);
        let g = (1.0 - lambda * lambda).max(0.0).sqrt();
        let g_perp = if lambda >= 1.0 - 1e-9 || g < 1e-9 {
            None
        } else {
            let udg = ud.apply(&g_lambda)?;
            let eig = Complex64::from_polar(lambda, -theta);
            let f = udg
                .sub(&g_lambda.scale(eig))?
                .scale(Complex64::new(1.0 / g, 0.0));
            let norm = f.norm();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::Contract(format!(
                    "leak vector normalization drifted: {norm}"
                )));
            }
            Some(f.scale(Complex64::new(-1.0 / norm, 0.0)))
        };
        bases.push(EigenBasis {
            lambda,
            theta,
            g_lambda,
            g_perp,
        });
    }
    Ok(NormalQubitization {
        enc: enc.clone(),
        spectrum,
        bases,
        w_plus_base,
        w_minus_base,
    })
}

impl NormalQubitization {
    /// The phased iterate `W_{phi,+-} = Z_{phi+pi/2} (2|G><G|-I) u_{+-}
    /// Z_{-phi-pi/2}`.
    pub fn phased_iterate(&self, phi: f64, sign: IterateSign) -> Result<ComplexMatrix> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let left = partial_reflection(&self.enc, phi + half_pi)?;
        let right = partial_reflection(&self.enc, -phi - half_pi)?;
        let base = match sign {
            IterateSign::Plus => &self.w_plus_base,
            IterateSign::Minus => &self.w_minus_base,
        };
        left.matmul(base)?.matmul(&right)
    }

    /// Product `W_{phi_L, s_L} ... W_{phi_1, +}` with strictly alternating
    /// signs starting from `+` (rightmost factor applied first).
    pub fn alternating_product(&self, phases: &[f64]) -> Result<ComplexMatrix> {
        let dim = self.enc.total_dim();
        let mut acc = ComplexMatrix::identity(dim);
        for (k, &phi) in phases.iter().enumerate() {
            let sign = if k % 2 == 0 {
                IterateSign::Plus
            } else {
                IterateSign::Minus
            };
            acc = self.phased_iterate(phi, sign)?.matmul(&acc)?;
        }
        Ok(acc)
    }

    /// Product with all factors of the same sign, used to witness the loss
    /// of the invariant subspace.
    pub fn same_sign_product(&self, phases: &[f64], sign: IterateSign) -> Result<ComplexMatrix> {
        let dim = self.enc.total_dim();
        let mut acc = ComplexMatrix::identity(dim);
        for &phi in phases {
            acc = self.phased_iterate(phi, sign)?.matmul(&acc)?;
        }
        Ok(acc)
    }

    /// The expected 2x2 representation of a single alternating factor.
    pub fn block_formula(lambda: f64, theta: f64, phi: f64, sign: IterateSign) -> ComplexMatrix {
        let g = (1.0 - lambda * lambda).max(0.0).sqrt();
        let s = match sign {
            IterateSign::Plus => 1.0,
            IterateSign::Minus => -1.0,
        };
        let mi = Complex64::new(0.0, -1.0);
        ComplexMatrix::from_slice(
            2,
            2,
            &[
                Complex64::from_polar(lambda, s * theta),
                mi * Complex64::from_polar(g, -phi),
                mi * Complex64::from_polar(g, phi),
                Complex64::from_polar(lambda, -s * theta),
            ],
        )
        .unwrap()
    }

    /// Norm of the component of `op`'s action that leaves eigenvalue `i`'s
    /// two-dimensional subspace (the raw number, no threshold applied).
    pub fn subspace_leakage(&self, op: &ComplexMatrix, i: usize) -> Result<f64> {
        let basis = &self.bases[i];
        let mut vectors = vec![basis.g_lambda.clone()];
        if let Some(gp) = &basis.g_perp {
            vectors.push(gp.clone());
        }
        let mut worst = 0.0_f64;
        for v in &vectors {
            let out = op.apply(v)?;
            let mut resid = out.clone();
            for b in &vectors {
                let ip = b.inner(&resid)?;
                resid = resid.sub(&b.scale(ip))?;
            }
            worst = worst.max(resid.norm());
        }
        Ok(worst)
    }

    /// The 2x2 block of `op` in eigenvalue `i`'s basis (errors if `op`
    /// leaks out of the subspace).
    pub fn block(&self, op: &ComplexMatrix, i: usize) -> Result<ComplexMatrix> {
        Ok(crate::qubitize::su2_block_in_basis(op, &self.bases[i])?.block)
    }
}
