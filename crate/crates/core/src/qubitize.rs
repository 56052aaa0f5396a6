//! Qubitization: turning a block encoding into an iterate whose action on
//! each signal eigenvalue is confined to a two-dimensional invariant
//! subspace, where it acts as an SU(2) rotation.
//!
//! The phased-iterate convention used everywhere is
//! `W_phi = Z_{phi+pi/2} w Z_{-phi-pi/2}`, which puts the per-eigenvalue
//! block into the form `[[l, -i e^{-i phi} g], [-i e^{i phi} g, l]]`. The
//! alternative `Z_{phi-pi/2} .. Z_{-phi+pi/2}` ordering flips the sign of the
//! off-diagonal (it amounts to `phi -> phi + pi`); the convention here is the
//! one the signal-processing chain is built on.

use num_complex::Complex64;

use crate::encoding::{spectrum, BlockEncoding, SignalSpectrum};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, StateVector, ToleranceConfig};

/// Residuals of the two qubitization conditions: the signal must be
/// preserved and `S u` must square to the identity on the flagged block.
#[derive(Clone, Copy, Debug)]
pub struct QubitizationResiduals {
    pub signal_residual: f64,
    pub reflection_residual: f64,
}

impl QubitizationResiduals {
    pub fn passes(&self, tol: f64) -> bool {
        self.signal_residual <= tol && self.reflection_residual <= tol
    }
}

/// Checks both qubitization conditions for ancilla unitary `s_anc` against
/// the encoding: `<G| S u |G> = <G| u |G>` and `<G| (S u)^2 |G> = I`.
pub fn check_qubitized(
    enc: &BlockEncoding,
    s_anc: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<(bool, QubitizationResiduals)> {
    if s_anc.rows() != enc.ancilla_dim || s_anc.cols() != enc.ancilla_dim {
        return Err(Error::Contract(format!(
            "S must act on the ancilla register only ({}x{}), got {}x{}",
            enc.ancilla_dim,
            enc.ancilla_dim,
            s_anc.rows(),
            s_anc.cols()
        )));
    }
    if !crate::matrix::is_unitary(s_anc, tol.unitarity_tol)? {
        return Err(Error::Contract("S must be unitary".into()));
    }
    let s_full = crate::matrix::kron(s_anc, &ComplexMatrix::identity(enc.system_dim))?;
    let su = s_full.matmul(&enc.u)?;
    let su_enc = BlockEncoding {
        u: su.clone(),
        ..enc.clone()
    };
    let signal = enc.signal_operator();
    let signal_residual = crate::matrix::operator_distance(&su_enc.signal_operator(), &signal)?;
    let susq_enc = BlockEncoding {
        u: su.matmul(&su)?,
        ..enc.clone()
    };
    let reflection_residual = crate::matrix::operator_distance(
        &susq_enc.signal_operator(),
        &ComplexMatrix::identity(enc.system_dim),
    )?;
    let residuals = QubitizationResiduals {
        signal_residual,
        reflection_residual,
    };
    Ok((residuals.passes(tol.condition_tol), residuals))
}

/// Per-eigenvalue invariant-subspace basis: `|G_l> = |G> (x) |l>` and its
/// orthogonal partner, or just `|G_l>` when `|l| = 1` makes the partner
/// degenerate.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub lambda: f64,
    pub theta: f64,
    pub g_lambda: StateVector,
    pub g_perp: Option<StateVector>,
}

/// A qubitized encoding together with its iterate.
#[derive(Clone, Debug)]
pub struct QubitizedIterate {
    pub enc: BlockEncoding,
    /// Ancilla-register part of `S`.
    pub s_anc: ComplexMatrix,
    /// The iterate `(2|G><G| - I) S u`.
    pub w: ComplexMatrix,
    /// Whether the one-qubit Hermitizing extension was applied.
    pub extended: bool,
    pub spectrum: SignalSpectrum,
    pub bases: Vec<EigenBasis>,
    pub tol: ToleranceConfig,
}

/// Hermitian qubitization. If the encoding already satisfies the conditions
/// with `S = I` and a Hermitian signal, it is used as is. Otherwise the
/// encoding is extended by one flag qubit selecting `u` or `u^dag`, which
/// always satisfies the conditions and encodes the Hermitian part
/// `(C + C^dag) / 2` of the original signal.
pub fn hermitian_qubitize(enc: &BlockEncoding, tol: &ToleranceConfig) -> Result<QubitizedIterate> {
    let identity_s = ComplexMatrix::identity(enc.ancilla_dim);
    let signal = enc.signal_operator();
    let herm_defect = signal.hermiticity_defect();
    let (passes, _) = check_qubitized(enc, &identity_s, tol)?;
    if passes && herm_defect <= tol.condition_tol {
        return build_iterate(enc.clone(), identity_s, false, tol);
    }

    // One-qubit extension: u' = |0><0| (x) u + |1><1| (x) u^dag,
    // |G'> = (|0> + |1>)/sqrt(2) (x) |G>, S = sx (x) I.
    let dim = enc.total_dim();
    let mut u_ext = ComplexMatrix::zeros(2 * dim, 2 * dim);
    let ud = enc.u.dagger();
    for r in 0..dim {
        for c in 0..dim {
            u_ext[(r, c)] = enc.u[(r, c)];
            u_ext[(dim + r, dim + c)] = ud[(r, c)];
        }
    }
    let hadamard = ComplexMatrix::from_real(
        2,
        2,
        &[
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
            -std::f64::consts::FRAC_1_SQRT_2,
        ],
    )?;
    let g_prep_ext = crate::matrix::kron(&hadamard, &enc.g_prep)?;
    let s_anc = crate::matrix::kron(&crate::matrix::pauli::x(), &ComplexMatrix::identity(enc.ancilla_dim))?;
    let enc_ext = BlockEncoding::new(
        2 * enc.ancilla_dim,
        enc.system_dim,
        u_ext,
        g_prep_ext,
        enc.alpha,
        tol,
    )?;

    // The extension must now satisfy both conditions exactly.
    let (ok, residuals) = check_qubitized(&enc_ext, &s_anc, tol)?;
    if !ok {
        return Err(Error::Contract(format!(
            "hermitizing extension failed its own conditions: signal {:e}, reflection {:e}",
            residuals.signal_residual, residuals.reflection_residual
        )));
    }
    let expected = signal
        .add(&signal.dagger())?
        .scale(Complex64::new(0.5, 0.0));
    let got = {
        let s_full = crate::matrix::kron(&s_anc, &ComplexMatrix::identity(enc.system_dim))?;
        BlockEncoding {
            u: s_full.matmul(&enc_ext.u)?,
            ..enc_ext.clone()
        }
        .signal_operator()
    };
    if got.max_abs_diff(&expected) > 1e-12 {
        return Err(Error::Contract(
            "extension does not encode the Hermitian part of the signal".into(),
        ));
    }
    build_iterate(enc_ext, s_anc, true, tol)
}

fn build_iterate(
    enc: BlockEncoding,
    s_anc: ComplexMatrix,
    extended: bool,
    tol: &ToleranceConfig,
) -> Result<QubitizedIterate> {
    let s_full = crate::matrix::kron(&s_anc, &ComplexMatrix::identity(enc.system_dim))?;
    let su = s_full.matmul(&enc.u)?;
    let su_signal = BlockEncoding {
        u: su.clone(),
        ..enc.clone()
    }
    .signal_operator();
    let spec = spectrum(&su_signal, tol)?;
    let w = reflection_about_g(&enc)?.matmul(&su)?;

    let defect = crate::matrix::unitarity_defect(&w)?;
    if defect > tol.unitarity_tol {
        return Err(Error::Contract(format!(
            "iterate lost unitarity: defect {defect:e}"
        )));
    }

    let bases = eigen_bases(&w, &enc, &spec)?;
    let q = QubitizedIterate {
        enc,
        s_anc,
        w,
        extended,
        spectrum: spec,
        bases,
        tol: *tol,
    };
    // Every non-degenerate eigenvalue block must match the reflection form.
    for (i, basis) in q.bases.iter().enumerate() {
        if basis.g_perp.is_none() {
            continue;
        }
        let block = su2_block(&q.w, &q, i)?;
        let l = basis.lambda;
        let g = (1.0 - l * l).max(0.0).sqrt();
        let expected = ComplexMatrix::from_real(2, 2, &[l, -g, g, l])?;
        let diff = block.block.max_abs_diff(&expected);
        if diff > 1e-9 {
            return Err(Error::NotQubitized {
                residual: diff,
                tol: 1e-9,
            });
        }
    }
    Ok(q)
}

/// `2 |G><G| (x) I - I` on the full space.
pub fn reflection_about_g(enc: &BlockEncoding) -> Result<ComplexMatrix> {
    let g = enc.g_state();
    let proj = g.outer(&g).scale(Complex64::new(2.0, 0.0));
    let refl_anc = proj.sub(&ComplexMatrix::identity(enc.ancilla_dim))?;
    crate::matrix::kron(&refl_anc, &ComplexMatrix::identity(enc.system_dim))
}

/// Partial reflection about `|G>` by angle `a`:
/// `(1 + e^{-i a}) |G><G| (x) I - I`.
pub fn partial_reflection(enc: &BlockEncoding, a: f64) -> Result<ComplexMatrix> {
    let g = enc.g_state();
    let phase = Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, -a);
    let proj = g.outer(&g).scale(phase);
    let z_anc = proj.sub(&ComplexMatrix::identity(enc.ancilla_dim))?;
    crate::matrix::kron(&z_anc, &ComplexMatrix::identity(enc.system_dim))
}

fn eigen_bases(
    w: &ComplexMatrix,
    enc: &BlockEncoding,
    spec: &SignalSpectrum,
) -> Result<Vec<EigenBasis>> {
    let g_state = enc.g_state();
    let n_eigs = spec.eigenvalues.len();
    let mut out = Vec::with_capacity(n_eigs);
    for i in 0..n_eigs {
        let lambda = spec.eigenvalues[i];
        let sys_vec = StateVector::new(
            (0..enc.system_dim)
                .map(|r| spec.eigenvectors[(r, i)])
                .collect(),
        );
        let g_lambda = g_state.tensor(&sys_vec);
        let g_perp = if lambda.abs() >= 1.0 - 1e-9 {
            None
        } else {
            // Gram-Schmidt of w|G_l> against |G_l>; the leading coefficient
            // is fixed real positive by the reflection form.
            let wg = w.apply(&g_lambda)?;
            let overlap = g_lambda.inner(&wg)?;
            let resid = wg.sub(&g_lambda.scale(overlap))?;
            let norm = resid.norm();
            if norm < 1e-12 {
                None
            } else {
                Some(resid.scale(Complex64::new(1.0 / norm, 0.0)))
            }
        };
        out.push(EigenBasis {
            lambda,
            theta: spec.phases[i],
            g_lambda,
            g_perp,
        });
    }
    Ok(out)
}

/// A 2x2 block of an operator in one eigenvalue's invariant basis.
#[derive(Clone, Debug)]
pub struct SU2Block {
    pub lambda: f64,
    pub theta: f64,
    pub block: ComplexMatrix,
    /// Norm of the part of the operator's action that leaves the subspace.
    pub leakage: f64,
}

impl SU2Block {
    /// `theta = arccos(lambda)`.
    pub fn rotation_angle(&self) -> f64 {
        self.lambda.clamp(-1.0, 1.0).acos()
    }
}

/// Expresses `op` in the pinned basis of eigenvalue `i`. Degenerate
/// eigenvalues (`|l| = 1`) produce a 1x1 block. Leakage beyond 1e-9 is an
/// error: the operator does not preserve the invariant subspace.
pub fn su2_block(op: &ComplexMatrix, q: &QubitizedIterate, i: usize) -> Result<SU2Block> {
    let basis = &q.bases[i];
    su2_block_in_basis(op, basis)
}

/// Same as [`su2_block`] but with an explicit basis, used by the normal-
/// operator variant where the basis comes from the alternating construction.
pub fn su2_block_in_basis(op: &ComplexMatrix, basis: &EigenBasis) -> Result<SU2Block> {
    let ga = &basis.g_lambda;
    match &basis.g_perp {
        None => {
            let oga = op.apply(ga)?;
            let val = ga.inner(&oga)?;
            let leak = oga.sub(&ga.scale(val))?.norm();
            let block = ComplexMatrix::from_slice(1, 1, &[val])?;
            if leak > 1e-9 {
                return Err(Error::NotQubitized {
                    residual: leak,
                    tol: 1e-9,
                });
            }
            Ok(SU2Block {
                lambda: basis.lambda,
                theta: basis.theta,
                block,
                leakage: leak,
            })
        }
        Some(gp) => {
            let oga = op.apply(ga)?;
            let ogp = op.apply(gp)?;
            let b00 = ga.inner(&oga)?;
            let b10 = gp.inner(&oga)?;
            let b01 = ga.inner(&ogp)?;
            let b11 = gp.inner(&ogp)?;
            let leak0 = oga
                .sub(&ga.scale(b00))?
                .sub(&gp.scale(b10))?
                .norm();
            let leak1 = ogp
                .sub(&ga.scale(b01))?
                .sub(&gp.scale(b11))?
                .norm();
            let leakage = leak0.max(leak1);
            if leakage > 1e-9 {
                return Err(Error::NotQubitized {
                    residual: leakage,
                    tol: 1e-9,
                });
            }
            Ok(SU2Block {
                lambda: basis.lambda,
                theta: basis.theta,
                block: ComplexMatrix::from_slice(2, 2, &[b00, b01, b10, b11])?,
                leakage,
            })
        }
    }
}

impl QubitizedIterate {
    /// The phased iterate `W_phi = Z_{phi+pi/2} w Z_{-phi-pi/2}`.
    pub fn phased_iterate(&self, phi: f64) -> Result<ComplexMatrix> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let left = partial_reflection(&self.enc, phi + half_pi)?;
        let right = partial_reflection(&self.enc, -phi - half_pi)?;
        left.matmul(&self.w)?.matmul(&right)
    }

    /// Expected 2x2 block of `W_phi` at eigenvalue `l`:
    /// `[[l, -i e^{-i phi} g], [-i e^{i phi} g, l]]`.
    pub fn phased_block_formula(lambda: f64, phi: f64) -> ComplexMatrix {
        let g = (1.0 - lambda * lambda).max(0.0).sqrt();
        let mi = Complex64::new(0.0, -1.0);
        ComplexMatrix::from_slice(
            2,
            2,
            &[
                Complex64::new(lambda, 0.0),
                mi * Complex64::from_polar(g, -phi),
                mi * Complex64::from_polar(g, phi),
                Complex64::new(lambda, 0.0),
            ],
        )
        .unwrap()
    }

    /// The Hermitian signal the iterate acts on (after any extension).
    pub fn signal(&self) -> ComplexMatrix {
        let s_full = crate::matrix::kron(
            &self.s_anc,
            &ComplexMatrix::identity(self.enc.system_dim),
        )
        .unwrap();
        BlockEncoding {
            u: s_full.matmul(&self.enc.u).unwrap(),
            ..self.enc.clone()
        }
        .signal_operator()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{dilation_encode, lcu_encode, PauliDecomposition, PauliOp};
    use crate::matrix::pauli;
    use rand::Rng;
    use rand::SeedableRng;

    fn tols() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn scalar_rotation_encoding(lambda: f64) -> BlockEncoding {
        let c = ComplexMatrix::from_real(1, 1, &[lambda]).unwrap();
        dilation_encode(&c, &tols()).unwrap()
    }

    #[test]
    fn pauli_x_is_already_qubitized() {
        let enc = BlockEncoding::new(1, 2, pauli::x(), ComplexMatrix::identity(1), 1.0, &tols())
            .unwrap();
        let (ok, r) = check_qubitized(&enc, &ComplexMatrix::identity(1), &tols()).unwrap();
        assert!(ok, "residuals {r:?}");
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        assert!(!q.extended);
    }

    #[test]
    fn scalar_rotation_fails_conditions_then_extends() {
        // <G|(SU)^2|G> = cos(0.8) != 1 for a rotation by 0.4.
        let lam = 0.4_f64.cos();
        let enc = scalar_rotation_encoding(lam);
        let (ok, r) = check_qubitized(&enc, &ComplexMatrix::identity(2), &tols()).unwrap();
        assert!(!ok);
        assert!((r.reflection_residual - (1.0 - (0.8_f64).cos())).abs() < 1e-9);

        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        assert!(q.extended);
        let (ok2, _) = check_qubitized(&q.enc, &q.s_anc, &tols()).unwrap();
        assert!(ok2);
        let sig = q.signal();
        assert!((sig[(0, 0)].re - lam).abs() < 1e-12);
    }

    #[test]
    fn iterate_block_of_extended_scalar() {
        let enc = scalar_rotation_encoding(0.3);
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        // find the eigenvalue 0.3 entry (the signal is 1x1 so there is one)
        let i = q
            .spectrum
            .eigenvalues
            .iter()
            .position(|&l| (l - 0.3).abs() < 1e-9)
            .unwrap();
        let blk = su2_block(&q.w, &q, i).unwrap();
        let g = 0.91_f64.sqrt();
        let expected = ComplexMatrix::from_real(2, 2, &[0.3, -g, g, 0.3]).unwrap();
        assert!(blk.block.max_abs_diff(&expected) < 1e-9);
    }

    #[test]
    fn iterate_of_pauli_z_signal() {
        let enc = BlockEncoding::new(1, 2, pauli::z(), ComplexMatrix::identity(1), 1.0, &tols())
            .unwrap();
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        assert!(!q.extended);
        assert!(q.w.max_abs_diff(&pauli::z()) < 1e-12);
        // both eigenvalues are degenerate, blocks are 1x1
        for i in 0..2 {
            let blk = su2_block(&q.w, &q, i).unwrap();
            assert_eq!(blk.block.rows(), 1);
        }
    }

    #[test]
    fn lcu_pauli_sum_stays_unextended() {
        let p = PauliDecomposition::new(
            2,
            vec![
                (0.4, vec![PauliOp::Z, PauliOp::I]),
                (0.3, vec![PauliOp::X, PauliOp::X]),
                (-0.2, vec![PauliOp::Z, PauliOp::Z]),
            ],
        )
        .unwrap();
        let enc = lcu_encode(&p, &tols()).unwrap();
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        assert!(!q.extended);
    }

    #[test]
    fn random_encodings_pass_conditions_after_extension() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.gen_range(0..=2usize);
            let sys = 1usize << n;
            let anc = 1usize << rng.gen_range(0..=2usize);
            // random unitary via QR-free trick: exponentiate a random Hermitian
            let dim = anc * sys;
            let mut h = ComplexMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in i..dim {
                    let re: f64 = rng.gen_range(-1.0..1.0);
                    let im: f64 = if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
                    h[(i, j)] = Complex64::new(re, im);
                    h[(j, i)] = Complex64::new(re, -im);
                }
            }
            let u = crate::eig::expm_herm(&h, 1.0, &tols()).unwrap();
            let g_col = {
                let mut v = vec![Complex64::new(0.0, 0.0); anc];
                for z in v.iter_mut() {
                    *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
                StateVector::new(v).normalized().unwrap()
            };
            let g_prep = crate::encoding::unitary_with_first_column(&g_col).unwrap();
            let enc = BlockEncoding::new(anc, sys, u, g_prep, 1.0, &tols()).unwrap();
            let q = hermitian_qubitize(&enc, &tols()).unwrap();
            let (ok, r) = check_qubitized(&q.enc, &q.s_anc, &tols()).unwrap();
            assert!(
                ok && r.signal_residual <= 1e-10 && r.reflection_residual <= 1e-10,
                "{r:?}"
            );
            assert!(crate::matrix::unitarity_defect(&q.w).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn phased_iterate_matches_block_formula() {
        let enc = scalar_rotation_encoding(0.0);
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        let i = q
            .spectrum
            .eigenvalues
            .iter()
            .position(|&l| l.abs() < 1e-9)
            .unwrap();
        for &phi in &[0.0, 0.7, -1.3, std::f64::consts::FRAC_PI_2] {
            let wp = q.phased_iterate(phi).unwrap();
            let blk = su2_block(&wp, &q, i).unwrap();
            let expected = QubitizedIterate::phased_block_formula(0.0, phi);
            assert!(blk.block.max_abs_diff(&expected) < 1e-9, "phi={phi}");
            assert!(crate::matrix::unitarity_defect(&wp).unwrap() < 1e-12);
        }
    }

    #[test]
    fn phased_iterate_at_half_pi_is_the_plain_iterate() {
        let enc = scalar_rotation_encoding(0.6);
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        let wp = q.phased_iterate(std::f64::consts::FRAC_PI_2).unwrap();
        assert!(wp.max_abs_diff(&q.w) < 1e-12);
    }

    #[test]
    fn phased_block_grid_across_lambda() {
        // 64-point grid over (-1, 1), random 2-qubit LCU signal not needed:
        // scalar encodings sweep lambda directly.
        for k in 0..64 {
            let lam = -0.999 + 1.998 * (k as f64 + 0.5) / 64.0;
            let enc = scalar_rotation_encoding(lam);
            let q = hermitian_qubitize(&enc, &tols()).unwrap();
            let i = q
                .spectrum
                .eigenvalues
                .iter()
                .position(|&l| (l - lam).abs() < 1e-9)
                .unwrap();
            let phi = 0.9;
            let wp = q.phased_iterate(phi).unwrap();
            let blk = su2_block(&wp, &q, i).unwrap();
            let expected = QubitizedIterate::phased_block_formula(lam, phi);
            assert!(blk.block.max_abs_diff(&expected) < 1e-9, "lambda={lam}");
        }
    }

    #[test]
    fn block_product_homomorphism() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let p = {
            let mut terms = Vec::new();
            let strings = [
                vec![PauliOp::Z, PauliOp::I],
                vec![PauliOp::X, PauliOp::Z],
                vec![PauliOp::Y, PauliOp::Y],
            ];
            for s in strings {
                terms.push((rng.gen_range(-1.0..1.0), s));
            }
            PauliDecomposition::new(2, terms).unwrap()
        };
        let enc = lcu_encode(&p, &tols()).unwrap();
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        for l_pow in [2u64, 5, 16] {
            let wl = q.w.pow(l_pow).unwrap();
            for i in 0..q.spectrum.eigenvalues.len() {
                if q.bases[i].g_perp.is_none() {
                    continue;
                }
                let single = su2_block(&q.w, &q, i).unwrap().block;
                let powered = su2_block(&wl, &q, i).unwrap().block;
                let single_pow = single.pow(l_pow).unwrap();
                assert!(powered.max_abs_diff(&single_pow) < 1e-8, "L={l_pow}");
            }
        }
    }
}
