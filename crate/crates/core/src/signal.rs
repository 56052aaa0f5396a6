//! Phased-iterate sequences and their SU(2) function content, the
//! achievability checker for target polynomial pairs, and the controlled-
//! iterate sequences whose `|+>` projection realizes Fourier functions of the
//! iterate's rotation angle.

use num_complex::Complex64;

use crate::encoding::BlockEncoding;
use crate::error::{Error, Result};
use crate::matrix::{kron, ComplexMatrix, StateVector};
use crate::qubitize::{su2_block, QubitizedIterate};

/// What a phase list drives: a plain product of phased iterates, or the
/// controlled pair sequence with its extra control qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SequenceKind {
    Observable,
    Qsp,
}

/// A list of phase angles plus the global phase applied to the iterate.
#[derive(Clone, Debug)]
pub struct PhaseSequence {
    pub phases: Vec<f64>,
    pub global_phase: f64,
    pub kind: SequenceKind,
}

impl PhaseSequence {
    pub fn observable(phases: Vec<f64>) -> Self {
        Self {
            phases,
            global_phase: 0.0,
            kind: SequenceKind::Observable,
        }
    }

    /// A controlled-sequence phase list; the length must be even and positive.
    pub fn qsp(phases: Vec<f64>, global_phase: f64) -> Result<Self> {
        if phases.is_empty() || phases.len() % 2 != 0 {
            return Err(Error::Contract(format!(
                "controlled sequences need an even, positive phase count, got {}",
                phases.len()
            )));
        }
        Ok(Self {
            phases,
            global_phase,
            kind: SequenceKind::Qsp,
        })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Parses a phase file: one radian value per line with `#` comments, or CSV
/// rows `index,phase` (an optional `index,phase` header is skipped).
pub fn parse_phase_file(text: &str) -> Result<Vec<f64>> {
    let mut indexed: Vec<(usize, f64)> = Vec::new();
    let mut plain: Vec<f64> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((a, b)) = line.split_once(',') {
            let a = a.trim();
            let b = b.trim();
            if a.eq_ignore_ascii_case("index") {
                continue;
            }
            let idx: usize = a
                .parse()
                .map_err(|e| Error::Format(format!("line {}: bad index: {e}", lineno + 1)))?;
            let ph: f64 = b
                .parse()
                .map_err(|e| Error::Format(format!("line {}: bad phase: {e}", lineno + 1)))?;
            indexed.push((idx, ph));
        } else {
            let ph: f64 = line
                .parse()
                .map_err(|e| Error::Format(format!("line {}: bad phase: {e}", lineno + 1)))?;
            plain.push(ph);
        }
    }
    if !indexed.is_empty() && !plain.is_empty() {
        return Err(Error::Format("phase file mixes CSV and plain formats".into()));
    }
    if indexed.is_empty() {
        if plain.is_empty() {
            return Err(Error::Format("phase file contains no phases".into()));
        }
        return Ok(plain);
    }
    indexed.sort_by_key(|(i, _)| *i);
    for (pos, (i, _)) in indexed.iter().enumerate() {
        if *i != pos {
            return Err(Error::Format(format!(
                "phase indices must be 0..n-1 without gaps; saw {i} at position {pos}"
            )));
        }
    }
    Ok(indexed.into_iter().map(|(_, p)| p).collect())
}

pub fn write_phase_file<W: std::io::Write>(w: &mut W, phases: &[f64]) -> std::io::Result<()> {
    for p in phases {
        writeln!(w, "{p:.17e}")?;
    }
    Ok(())
}

/// `<G| w^L |G>`, which equals the degree-L Chebyshev polynomial of the
/// signal operator.
pub fn chebyshev_block(q: &QubitizedIterate, l: u64) -> Result<ComplexMatrix> {
    let wl = q.w.pow(l)?;
    Ok(BlockEncoding {
        u: wl,
        ..q.enc.clone()
    }
    .signal_operator())
}

/// Spectral-oracle Chebyshev polynomial `T_L[H]` for tests and verification.
pub fn chebyshev_oracle(q: &QubitizedIterate, l: u64) -> ComplexMatrix {
    let spec = &q.spectrum;
    let n = spec.eigenvectors.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for k in 0..spec.eigenvalues.len() {
        let theta = spec.eigenvalues[k].clamp(-1.0, 1.0).acos();
        let tl = (l as f64 * theta).cos();
        for i in 0..n {
            let vi = spec.eigenvectors[(i, k)];
            for j in 0..n {
                out[(i, j)] += Complex64::new(tl, 0.0) * vi * spec.eigenvectors[(j, k)].conj();
            }
        }
    }
    out
}

/// Product of phased iterates `W_{phi_L} ... W_{phi_1}` (rightmost applied
/// first).
pub fn observable_sequence(q: &QubitizedIterate, phases: &PhaseSequence) -> Result<ComplexMatrix> {
    if phases.kind != SequenceKind::Observable {
        return Err(Error::Contract("expected an observable phase sequence".into()));
    }
    let dim = q.w.rows();
    let mut acc = ComplexMatrix::identity(dim);
    for &phi in &phases.phases {
        let wp = q.phased_iterate(phi)?;
        acc = wp.matmul(&acc)?;
    }
    Ok(acc)
}

/// Real SU(2) content of a sequence: per-sample `(lambda, A, B, C, D)` with
/// the block written as `A I + i(B sz + C sx + D sy)`, plus Chebyshev fits.
///
/// `C` and `D` carry one factor of `g(lambda) = sqrt(1 - lambda^2)`, so the
/// fitted coefficients for them describe `C/g` and `D/g`, which are
/// polynomials of degree `L - 1`.
#[derive(Clone, Debug)]
pub struct SU2Decomposition {
    pub degree: usize,
    pub samples: Vec<(f64, f64, f64, f64, f64)>,
    pub a_cheb: Vec<f64>,
    pub b_cheb: Vec<f64>,
    pub c_over_g_cheb: Vec<f64>,
    pub d_over_g_cheb: Vec<f64>,
    /// Largest Chebyshev coefficient violating the expected parity, per
    /// function (A, B, C/g, D/g).
    pub parity_defects: [f64; 4],
}

fn decompose_su2(block: &ComplexMatrix) -> Result<(f64, f64, f64, f64)> {
    if block.rows() != 2 {
        return Err(Error::Shape("SU(2) decomposition needs a 2x2 block".into()));
    }
    let det = block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)];
    let root = det.sqrt(); // blocks are SU(2) up to rounding, det near 1
    let m = block.scale(root.inv());
    let a = (m[(0, 0)] + m[(1, 1)]).re / 2.0;
    let b = (m[(0, 0)] - m[(1, 1)]).im / 2.0;
    let c = (m[(0, 1)] + m[(1, 0)]).im / 2.0;
    let d = (m[(0, 1)] - m[(1, 0)]).re / 2.0;
    let imag_defect = ((m[(0, 0)] + m[(1, 1)]).im / 2.0)
        .abs()
        .max(((m[(0, 0)] - m[(1, 1)]).re / 2.0).abs())
        .max(((m[(0, 1)] + m[(1, 0)]).re / 2.0).abs())
        .max(((m[(0, 1)] - m[(1, 0)]).im / 2.0).abs());
    if imag_defect > 1e-8 {
        return Err(Error::Contract(format!(
            "block is not special-unitary after phase removal: defect {imag_defect:e}"
        )));
    }
    Ok((a, b, c, d))
}

/// Extracts `(A, B, C, D)` samples of a sequence operator at every
/// non-degenerate eigenvalue of the iterate's signal, then fits Chebyshev
/// interpolants of the given degree.
pub fn extract_abcd(
    seq: &ComplexMatrix,
    q: &QubitizedIterate,
    degree: usize,
) -> Result<SU2Decomposition> {
    let mut samples = Vec::new();
    for i in 0..q.spectrum.eigenvalues.len() {
        if q.bases[i].g_perp.is_none() {
            continue;
        }
        let blk = su2_block(seq, q, i)?;
        let (a, b, c, d) = decompose_su2(&blk.block)?;
        samples.push((blk.lambda, a, b, c, d));
    }
    if samples.is_empty() {
        return Err(Error::Contract(
            "no non-degenerate eigenvalues to sample".into(),
        ));
    }
    decomposition_from_samples(samples, degree)
}

/// Samples the sequence's SU(2) blocks analytically at Chebyshev nodes using
/// the per-eigenvalue block formula. This is the route for recovering the
/// full degree-L functions regardless of the encoding's spectrum.
pub fn abcd_scalar_sweep(phases: &[f64], degree: usize) -> Result<SU2Decomposition> {
    let nodes = chebyshev_nodes(degree + 1);
    let mut samples = Vec::with_capacity(nodes.len());
    for &lambda in &nodes {
        let mut block = ComplexMatrix::identity(2);
        for &phi in phases {
            let w = QubitizedIterate::phased_block_formula(lambda, phi);
            block = w.matmul(&block)?;
        }
        let (a, b, c, d) = decompose_su2(&block)?;
        samples.push((lambda, a, b, c, d));
    }
    decomposition_from_samples(samples, degree)
}

fn decomposition_from_samples(
    samples: Vec<(f64, f64, f64, f64, f64)>,
    degree: usize,
) -> Result<SU2Decomposition> {
    let mut lams: Vec<f64> = samples.iter().map(|s| s.0).collect();
    lams.sort_by(|x, y| x.partial_cmp(y).unwrap());
    lams.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let fit_degree = degree.min(lams.len().saturating_sub(1));

    let a_cheb = fit_chebyshev(&samples, 1, fit_degree)?;
    let b_cheb = fit_chebyshev(&samples, 2, fit_degree)?;
    // C and D carry a factor g(lambda); divide it out before fitting.
    let cg_samples: Vec<(f64, f64, f64, f64, f64)> = samples
        .iter()
        .map(|&(l, a, b, c, d)| {
            let g = (1.0 - l * l).max(1e-300).sqrt();
            (l, a, b, c / g, d / g)
        })
        .collect();
    let sub_degree = fit_degree.saturating_sub(1);
    let c_over_g_cheb = fit_chebyshev(&cg_samples, 3, sub_degree)?;
    let d_over_g_cheb = fit_chebyshev(&cg_samples, 4, sub_degree)?;

    let parity_defects = [
        parity_defect(&a_cheb, degree % 2),
        parity_defect(&b_cheb, degree % 2),
        parity_defect(&c_over_g_cheb, (degree + 1) % 2),
        parity_defect(&d_over_g_cheb, (degree + 1) % 2),
    ];
    Ok(SU2Decomposition {
        degree,
        samples,
        a_cheb,
        b_cheb,
        c_over_g_cheb,
        d_over_g_cheb,
        parity_defects,
    })
}

/// Chebyshev nodes `cos((2j+1) pi / (2 m))` for `j = 0..m`.
pub fn chebyshev_nodes(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos())
        .collect()
}

fn component(sample: &(f64, f64, f64, f64, f64), which: usize) -> f64 {
    match which {
        1 => sample.1,
        2 => sample.2,
        3 => sample.3,
        _ => sample.4,
    }
}

/// Least-squares Chebyshev fit of one component over the sample set.
fn fit_chebyshev(
    samples: &[(f64, f64, f64, f64, f64)],
    which: usize,
    degree: usize,
) -> Result<Vec<f64>> {
    let m = samples.len();
    let cols = degree + 1;
    let mut design = nalgebra::DMatrix::<f64>::zeros(m, cols);
    let mut rhs = nalgebra::DVector::<f64>::zeros(m);
    for (row, s) in samples.iter().enumerate() {
        let x = s.0;
        let mut tkm1 = 1.0;
        let mut tk = x;
        for col in 0..cols {
            let val = match col {
                0 => 1.0,
                1 => x,
                _ => {
                    let next = 2.0 * x * tk - tkm1;
                    tkm1 = tk;
                    tk = next;
                    next
                }
            };
            design[(row, col)] = val;
        }
        rhs[row] = component(s, which);
    }
    let svd = design.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Contract(format!("Chebyshev fit failed: {e}")))?;
    Ok(sol.iter().cloned().collect())
}

pub fn eval_chebyshev(coeffs: &[f64], x: f64) -> f64 {
    // Clenshaw recurrence.
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    b1 - x * b2
}

fn parity_defect(coeffs: &[f64], want_parity: usize) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| k % 2 != want_parity)
        .map(|(_, c)| c.abs())
        .fold(0.0, f64::max)
}

/// Polynomial coefficient basis accepted by the achievability checker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyBasis {
    Monomial,
    Chebyshev,
}

/// Chebyshev-to-monomial conversion.
pub fn chebyshev_to_monomial(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    if n == 0 {
        return vec![];
    }
    // rows of Chebyshev polynomials in the monomial basis
    let mut t_prev = vec![0.0; n];
    let mut t_curr = vec![0.0; n];
    t_prev[0] = 1.0;
    if n > 1 {
        t_curr[1] = 1.0;
    }
    let mut out = vec![0.0; n];
    out.iter_mut().zip(&t_prev).for_each(|(o, v)| *o += coeffs[0] * v);
    if n > 1 {
        out.iter_mut().zip(&t_curr).for_each(|(o, v)| *o += coeffs[1] * v);
    }
    for k in 2..n {
        let mut t_next = vec![0.0; n];
        for j in 0..n - 1 {
            t_next[j + 1] += 2.0 * t_curr[j];
        }
        for j in 0..n {
            t_next[j] -= t_prev[j];
        }
        out.iter_mut().zip(&t_next).for_each(|(o, v)| *o += coeffs[k] * v);
        t_prev = t_curr;
        t_curr = t_next;
    }
    out
}

fn eval_monomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `p(i x)` for a parity-pure polynomial with real monomial coefficients;
/// even polynomials give `sum c_{2k} (-1)^k x^{2k}`, odd ones carry a global
/// factor `i` which squares to `-1`.
fn eval_monomial_at_ix_squared(coeffs: &[f64], x: f64) -> f64 {
    let mut even_acc = 0.0;
    let mut odd_acc = 0.0;
    let mut xpow = 1.0;
    for (k, &c) in coeffs.iter().enumerate() {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            even_acc += c * sign * xpow;
        } else {
            odd_acc += c * sign * xpow;
        }
        xpow *= x;
    }
    // p(ix)^2 = even^2 - odd^2 + 2 i even*odd; for parity-pure input one of
    // the two terms vanishes.
    even_acc * even_acc - odd_acc * odd_acc
}

/// One failed achievability condition, with a short diagnostic.
#[derive(Clone, Debug)]
pub struct FailedCondition {
    pub index: usize,
    pub message: String,
}

/// Checks the five achievability conditions for a target pair `(A, B)` of
/// degree-`L` parity-`L` polynomials:
/// 1. degree at most L with parity L,
/// 2. `A(1) = 1`,
/// 3. `A^2 + B^2 <= 1` on `[-1, 1]`,
/// 4. `A^2 + B^2 >= 1` for `x >= 1`,
/// 5. for even L, `A^2(ix) + B^2(ix) >= 1` for `x >= 0`.
///
/// The grids are finite: 2049 Chebyshev points on `[-1, 1]`, 257-point log
/// grids on `[1, 1e3]` and `{0} + [1e-3, 1e3]`.
pub fn check_achievable(
    a_coeffs: &[f64],
    b_coeffs: &[f64],
    basis: PolyBasis,
    l: usize,
) -> (bool, Vec<FailedCondition>) {
    let to_monomial = |c: &[f64]| match basis {
        PolyBasis::Monomial => c.to_vec(),
        PolyBasis::Chebyshev => chebyshev_to_monomial(c),
    };
    let a_mono = to_monomial(a_coeffs);
    let b_mono = to_monomial(b_coeffs);
    let mut failures = Vec::new();

    // (1) degree and parity
    let deg_of = |c: &[f64]| c.iter().rposition(|&x| x.abs() > 1e-12).unwrap_or(0);
    let parity_bad = |c: &[f64]| -> f64 {
        c.iter()
            .enumerate()
            .filter(|(k, _)| k % 2 != l % 2)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    };
    if deg_of(&a_mono) > l || deg_of(&b_mono) > l {
        failures.push(FailedCondition {
            index: 1,
            message: format!(
                "degree exceeds {l}: deg A = {}, deg B = {}",
                deg_of(&a_mono),
                deg_of(&b_mono)
            ),
        });
    }
    let pa = parity_bad(&a_mono).max(parity_bad(&b_mono));
    if pa > 1e-12 {
        failures.push(FailedCondition {
            index: 1,
            message: format!("wrong-parity coefficient of magnitude {pa:e}"),
        });
    }

    // (2) A(1) = 1
    let a1 = eval_monomial(&a_mono, 1.0);
    if (a1 - 1.0).abs() > 1e-9 {
        failures.push(FailedCondition {
            index: 2,
            message: format!("A(1) = {a1}, expected 1"),
        });
    }

    // (3) A^2 + B^2 <= 1 on [-1, 1]
    for &x in &chebyshev_grid_closed(2049) {
        let v = eval_monomial(&a_mono, x).powi(2) + eval_monomial(&b_mono, x).powi(2);
        if v > 1.0 + 1e-9 {
            failures.push(FailedCondition {
                index: 3,
                message: format!("A^2 + B^2 = {v} at x = {x}"),
            });
            break;
        }
    }

    // (4) A^2 + B^2 >= 1 on [1, 1e3]
    for &x in &log_grid(1.0, 1e3, 257) {
        let v = eval_monomial(&a_mono, x).powi(2) + eval_monomial(&b_mono, x).powi(2);
        if v < 1.0 - 1e-9 {
            failures.push(FailedCondition {
                index: 4,
                message: format!("A^2 + B^2 = {v} at x = {x}"),
            });
            break;
        }
    }

    // (5) even L: A^2(ix) + B^2(ix) >= 1 on {0} + [1e-3, 1e3]
    if l % 2 == 0 {
        let mut grid = vec![0.0];
        grid.extend(log_grid(1e-3, 1e3, 257));
        for &x in &grid {
            let v = eval_monomial_at_ix_squared(&a_mono, x)
                + eval_monomial_at_ix_squared(&b_mono, x);
            if v < 1.0 - 1e-9 {
                failures.push(FailedCondition {
                    index: 5,
                    message: format!("A^2(ix) + B^2(ix) = {v} at x = {x}"),
                });
                break;
            }
        }
    }
    (failures.is_empty(), failures)
}

fn chebyshev_grid_closed(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| (j as f64 * std::f64::consts::PI / (m - 1) as f64).cos())
        .collect()
}

fn log_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..m)
        .map(|j| (ll + (lh - ll) * j as f64 / (m - 1) as f64).exp())
        .collect()
}

/// Controlled-iterate sequence on an extra control qubit:
/// `V_0 = |+><+| (x) I + |-><-| (x) (e^{i Phi} W_axis)`,
/// `V_phi = (Rz(phi) (x) I) V_0 (Rz(-phi) (x) I)`, and the product pairs
/// `V_{phi_{k+1}+pi}^dag V_{phi_k}` for odd `k`, rightmost pair first.
pub fn qsp_sequence(
    q: &QubitizedIterate,
    phases: &PhaseSequence,
    phi_axis: f64,
    global_phase: f64,
) -> Result<ComplexMatrix> {
    if phases.kind != SequenceKind::Qsp {
        return Err(Error::Contract("expected a controlled phase sequence".into()));
    }
    let n = phases.len();
    if n == 0 || n % 2 != 0 {
        return Err(Error::Contract(format!(
            "controlled sequences need an even, positive phase count, got {n}"
        )));
    }
    let dim = q.w.rows();
    let w_axis = q
        .phased_iterate(phi_axis)?
        .scale(Complex64::from_polar(1.0, global_phase));

    // V0 in the control (x) iterate ordering.
    let half = Complex64::new(0.5, 0.0);
    let id = ComplexMatrix::identity(dim);
    let mut v0 = ComplexMatrix::zeros(2 * dim, 2 * dim);
    for r in 0..dim {
        for c in 0..dim {
            let idp = id[(r, c)] * half;
            let wp = w_axis[(r, c)] * half;
            // |+><+| (x) I + |-><-| (x) W in computational components
            v0[(r, c)] = idp + wp;
            v0[(r, dim + c)] = idp - wp;
            v0[(dim + r, c)] = idp - wp;
            v0[(dim + r, dim + c)] = idp + wp;
        }
    }

    let v_phi = |phi: f64| -> Result<ComplexMatrix> {
        let rz = ComplexMatrix::from_slice(
            2,
            2,
            &[
                Complex64::from_polar(1.0, -phi / 2.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::from_polar(1.0, phi / 2.0),
            ],
        )?;
        let left = kron(&rz, &id)?;
        let right = kron(&rz.dagger(), &id)?;
        left.matmul(&v0)?.matmul(&right)
    };

    let mut acc = ComplexMatrix::identity(2 * dim);
    let mut k = 0;
    while k + 1 < n {
        let first = v_phi(phases.phases[k])?;
        let second = v_phi(phases.phases[k + 1] + std::f64::consts::PI)?;
        let pair = second.dagger().matmul(&first)?;
        acc = pair.matmul(&acc)?;
        k += 2;
    }
    Ok(acc)
}

/// Projects a sequence output onto the `|+>` control state and the flag
/// state: returns the unnormalized system-register output and the squared
/// norm of the full `|+>`-projected component.
pub fn qsp_project(
    v: &ComplexMatrix,
    enc: &BlockEncoding,
    input: &StateVector,
) -> Result<(StateVector, f64)> {
    let dim = enc.total_dim();
    if v.rows() != 2 * dim {
        return Err(Error::Shape(format!(
            "sequence operator must act on twice the encoding dimension {dim}, got {}",
            v.rows()
        )));
    }
    if input.dim() != enc.system_dim {
        return Err(Error::Shape("input must live on the system register".into()));
    }
    let g = enc.g_state();
    let full_in = {
        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        let ga_in = g.tensor(input);
        let mut amps = Vec::with_capacity(2 * dim);
        for &z in ga_in.amplitudes() {
            amps.push(z * sqrt_half);
        }
        for &z in ga_in.amplitudes() {
            amps.push(z * sqrt_half);
        }
        StateVector::new(amps)
    };
    let out_full = v.apply(&full_in)?;
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    let mut projected = Vec::with_capacity(dim);
    for i in 0..dim {
        projected.push((out_full.amplitudes()[i] + out_full.amplitudes()[dim + i]) * sqrt_half);
    }
    let projected = StateVector::new(projected);
    let success_prob = projected.norm().powi(2);

    let sys = enc.system_dim;
    let mut out_sys = vec![Complex64::new(0.0, 0.0); sys];
    for a in 0..enc.ancilla_dim {
        let ga = g.amplitudes()[a].conj();
        if ga.norm_sqr() == 0.0 {
            continue;
        }
        for (s_i, out) in out_sys.iter_mut().enumerate() {
            *out += ga * projected.amplitudes()[a * sys + s_i];
        }
    }
    Ok((StateVector::new(out_sys), success_prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{dilation_encode, lcu_encode, PauliDecomposition, PauliOp};
    use crate::matrix::{operator_distance, ToleranceConfig};
    use crate::qubitize::hermitian_qubitize;
    use rand::Rng;
    use rand::SeedableRng;

    fn tols() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn random_lcu_iterate(seed: u64, n: usize, terms: usize) -> QubitizedIterate {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut used = std::collections::HashSet::new();
        let mut list = Vec::new();
        while list.len() < terms {
            let string: Vec<PauliOp> = (0..n)
                .map(|_| match rng.gen_range(0..4) {
                    0 => PauliOp::I,
                    1 => PauliOp::X,
                    2 => PauliOp::Y,
                    _ => PauliOp::Z,
                })
                .collect();
            if used.insert(string.clone()) {
                list.push((rng.gen_range(-1.0..1.0f64), string));
            }
        }
        let p = PauliDecomposition::new(n, list).unwrap();
        let enc = lcu_encode(&p, &tols()).unwrap();
        hermitian_qubitize(&enc, &tols()).unwrap()
    }

    #[test]
    fn chebyshev_block_degree_zero_and_one() {
        let q = random_lcu_iterate(101, 2, 3);
        let t0 = chebyshev_block(&q, 0).unwrap();
        assert!(t0.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        let t1 = chebyshev_block(&q, 1).unwrap();
        assert!(t1.max_abs_diff(&q.signal()) < 1e-10);
    }

    #[test]
    fn chebyshev_block_matches_spectral_oracle() {
        for seed in [5u64, 6, 7] {
            let q = random_lcu_iterate(seed, 2, 4);
            for l in [2u64, 5, 9, 16] {
                let got = chebyshev_block(&q, l).unwrap();
                let want = chebyshev_oracle(&q, l);
                assert!(
                    operator_distance(&got, &want).unwrap() < 1e-8,
                    "seed={seed} L={l}"
                );
            }
        }
    }

    #[test]
    fn observable_sequence_empty_is_identity() {
        let q = random_lcu_iterate(8, 1, 2);
        let seq = observable_sequence(&q, &PhaseSequence::observable(vec![])).unwrap();
        assert!(seq.max_abs_diff(&ComplexMatrix::identity(q.w.rows())) < 1e-14);
    }

    #[test]
    fn observable_sequence_is_unitary_and_block_structured() {
        let q = random_lcu_iterate(9, 2, 3);
        let phases = PhaseSequence::observable(vec![0.3, -1.2, 2.2]);
        let seq = observable_sequence(&q, &phases).unwrap();
        assert!(crate::matrix::unitarity_defect(&seq).unwrap() < 1e-10);
        for i in 0..q.spectrum.eigenvalues.len() {
            if q.bases[i].g_perp.is_none() {
                continue;
            }
            // block extraction itself enforces leakage <= 1e-9
            let _ = su2_block(&seq, &q, i).unwrap();
        }
    }

    #[test]
    fn abcd_of_identity_sequence() {
        let dec = abcd_scalar_sweep(&[], 0).unwrap();
        for &(_, a, b, c, d) in &dec.samples {
            assert!((a - 1.0).abs() < 1e-12);
            assert!(b.abs() < 1e-12 && c.abs() < 1e-12 && d.abs() < 1e-12);
        }
    }

    #[test]
    fn abcd_single_phase() {
        // W_phi block at phi = 0: A = lambda, C = -g; at phi = pi/2: D = -g.
        let dec0 = abcd_scalar_sweep(&[0.0], 1).unwrap();
        for &(l, a, _, c, d) in &dec0.samples {
            let g = (1.0 - l * l).max(0.0).sqrt();
            assert!((a - l).abs() < 1e-12);
            assert!((c + g).abs() < 1e-12);
            assert!(d.abs() < 1e-12);
        }
        let dec1 = abcd_scalar_sweep(&[std::f64::consts::FRAC_PI_2], 1).unwrap();
        for &(l, a, _, c, d) in &dec1.samples {
            let g = (1.0 - l * l).max(0.0).sqrt();
            assert!((a - l).abs() < 1e-12);
            assert!((d + g).abs() < 1e-12);
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn abcd_iterate_power_is_chebyshev() {
        // phi = pi/2 repeated L times is the plain iterate power, so A = T_L.
        for l in [2usize, 4, 7] {
            let phases = vec![std::f64::consts::FRAC_PI_2; l];
            let dec = abcd_scalar_sweep(&phases, l).unwrap();
            for &(lam, a, b, _, _) in &dec.samples {
                let tl = (l as f64 * lam.clamp(-1.0, 1.0).acos()).cos();
                assert!((a - tl).abs() < 1e-10, "L={l} lambda={lam}");
                assert!(b.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn abcd_unitarity_and_parity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for l in 1..=8usize {
            let phases: Vec<f64> = (0..l)
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            let dec = abcd_scalar_sweep(&phases, l).unwrap();
            for &(lam, a, b, c, d) in &dec.samples {
                let norm = a * a + b * b + c * c + d * d;
                assert!((norm - 1.0).abs() < 1e-9, "L={l} lambda={lam} norm={norm}");
            }
            for (f, defect) in dec.parity_defects.iter().enumerate() {
                assert!(*defect < 1e-8, "L={l} function {f} parity defect {defect:e}");
            }
        }
    }

    #[test]
    fn full_matrix_abcd_matches_scalar_sweep() {
        let q = random_lcu_iterate(12, 2, 4);
        let phase_list = vec![0.4, -0.9, 1.7];
        let seq = observable_sequence(&q, &PhaseSequence::observable(phase_list.clone())).unwrap();
        let dec = extract_abcd(&seq, &q, 3).unwrap();
        for &(lam, a, b, c, d) in &dec.samples {
            let mut block = ComplexMatrix::identity(2);
            for &phi in &phase_list {
                block = QubitizedIterate::phased_block_formula(lam, phi)
                    .matmul(&block)
                    .unwrap();
            }
            let (ea, eb, ec, ed) = super::decompose_su2(&block).unwrap();
            assert!((a - ea).abs() < 1e-9);
            assert!((b - eb).abs() < 1e-9);
            assert!((c - ec).abs() < 1e-9);
            assert!((d - ed).abs() < 1e-9);
        }
    }

    #[test]
    fn achievable_chebyshev_family() {
        for l in 1..=16usize {
            let mut coeffs = vec![0.0; l + 1];
            coeffs[l] = 1.0; // A = T_L
            let b = vec![0.0; l + 1];
            let (ok, failures) = check_achievable(&coeffs, &b, PolyBasis::Chebyshev, l);
            assert!(ok, "T_{l} should be achievable: {failures:?}");
        }
    }

    #[test]
    fn achievable_rejects_x_squared() {
        // A = x^2 satisfies conditions 1-4 but fails the imaginary-axis bound.
        let a = vec![0.0, 0.0, 1.0];
        let b = vec![0.0, 0.0, 0.0];
        let (ok, failures) = check_achievable(&a, &b, PolyBasis::Monomial, 2);
        assert!(!ok);
        assert!(failures.iter().any(|f| f.index == 5));
    }

    #[test]
    fn achievable_rejects_scaled_t1() {
        let a = vec![0.0, 0.5];
        let b = vec![0.0, 0.0];
        let (ok, failures) = check_achievable(&a, &b, PolyBasis::Monomial, 1);
        assert!(!ok);
        assert!(failures.iter().any(|f| f.index == 2));
    }

    #[test]
    fn qsp_inverse_pair_is_identity() {
        let enc = dilation_encode(&ComplexMatrix::from_real(1, 1, &[0.42]).unwrap(), &tols())
            .unwrap();
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        // phases (0, -pi): the second factor becomes V_0^dag, cancelling V_0.
        let phases = PhaseSequence::qsp(vec![0.0, -std::f64::consts::PI], 0.0).unwrap();
        let v = qsp_sequence(&q, &phases, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        assert!(v.max_abs_diff(&ComplexMatrix::identity(v.rows())) < 1e-12);
    }

    #[test]
    fn qsp_rejects_odd_length() {
        assert!(PhaseSequence::qsp(vec![0.1, 0.2, 0.3], 0.0).is_err());
    }

    #[test]
    fn qsp_project_identity() {
        let enc = dilation_encode(&ComplexMatrix::from_real(1, 1, &[0.42]).unwrap(), &tols())
            .unwrap();
        let q = hermitian_qubitize(&enc, &tols()).unwrap();
        let v = ComplexMatrix::identity(2 * q.enc.total_dim());
        let input = StateVector::basis(1, 0);
        let (out, prob) = qsp_project(&v, &q.enc, &input).unwrap();
        assert!((prob - 1.0).abs() < 1e-12);
        assert!((out.amplitudes()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn qsp_block_diagonal_over_eigenspaces() {
        let q = random_lcu_iterate(33, 2, 4);
        let phases = PhaseSequence::qsp(vec![0.3, -0.8, 1.1, 2.0], 0.0).unwrap();
        let v = qsp_sequence(
            &q,
            &phases,
            std::f64::consts::FRAC_PI_2,
            -std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let dim = q.enc.total_dim();
        // for each eigenvalue, the 4-dim control (x) SU(2) subspace must be
        // preserved by the sequence
        for i in 0..q.spectrum.eigenvalues.len() {
            let basis = &q.bases[i];
            let mut vectors = vec![basis.g_lambda.clone()];
            if let Some(gp) = &basis.g_perp {
                vectors.push(gp.clone());
            }
            let mut full_basis = Vec::new();
            for b_amp in 0..2usize {
                for vec_part in &vectors {
                    let mut amps = vec![Complex64::new(0.0, 0.0); 2 * dim];
                    for (j, &z) in vec_part.amplitudes().iter().enumerate() {
                        amps[b_amp * dim + j] = z;
                    }
                    full_basis.push(StateVector::new(amps));
                }
            }
            for vec_in in &full_basis {
                let out = v.apply(vec_in).unwrap();
                let mut resid = out.clone();
                for bvec in &full_basis {
                    let ip = bvec.inner(&resid).unwrap();
                    resid = resid.sub(&bvec.scale(ip)).unwrap();
                }
                let leak = resid.norm();
                assert!(leak < 1e-9, "eigenvalue {i} leaks {leak:e}");
            }
        }
    }
}
