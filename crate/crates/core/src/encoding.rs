//! Block encodings: unitaries `u` whose top-left block, flagged by an ancilla
//! state `|G>`, holds a (sub)normalized signal operator.
//!
//! Constructors are provided for Pauli linear combinations, sparse Hermitian
//! matrices given by entry/column oracles, purified density matrices, and a
//! direct dilation of any normal contraction. Register ordering is fixed
//! globally as ancilla (x) system, most significant first, so a full-space
//! index is `anc * system_dim + sys`.

use num_complex::Complex64;

use crate::eig::{herm_eig, normal_eig};
use crate::error::{Error, Result};
use crate::matrix::{kron, pauli, ComplexMatrix, StateVector, ToleranceConfig, DIM_CAP};

/// A unitary `u` on `ancilla_dim * system_dim`, a preparation unitary for the
/// flag state `|G>`, and the normalization `alpha` such that the encoded
/// block approximates `H / alpha`.
#[derive(Clone, Debug)]
pub struct BlockEncoding {
    pub ancilla_dim: usize,
    pub system_dim: usize,
    pub u: ComplexMatrix,
    pub g_prep: ComplexMatrix,
    pub alpha: f64,
}

impl BlockEncoding {
    /// Validates shapes, unitarity of `u` and `g_prep`, and the subnormalization
    /// of the encoded block.
    pub fn new(
        ancilla_dim: usize,
        system_dim: usize,
        u: ComplexMatrix,
        g_prep: ComplexMatrix,
        alpha: f64,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let dim = ancilla_dim
            .checked_mul(system_dim)
            .filter(|&d| d <= DIM_CAP)
            .ok_or(Error::Capacity {
                requested: usize::MAX,
                cap: DIM_CAP,
            })?;
        if u.rows() != dim || u.cols() != dim {
            return Err(Error::Shape(format!(
                "u must be {dim}x{dim}, got {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        if g_prep.rows() != ancilla_dim || g_prep.cols() != ancilla_dim {
            return Err(Error::Shape(format!(
                "g_prep must be {ancilla_dim}x{ancilla_dim}, got {}x{}",
                g_prep.rows(),
                g_prep.cols()
            )));
        }
        if !(alpha >= 0.0) {
            return Err(Error::Contract(format!("alpha must be >= 0, got {alpha}")));
        }
        let ud = crate::matrix::unitarity_defect(&u)?;
        if ud > tol.unitarity_tol {
            return Err(Error::Contract(format!(
                "u is not unitary: defect {ud:e} exceeds {:e}",
                tol.unitarity_tol
            )));
        }
        let gd = crate::matrix::unitarity_defect(&g_prep)?;
        if gd > tol.unitarity_tol {
            return Err(Error::Contract(format!(
                "g_prep is not unitary: defect {gd:e} exceeds {:e}",
                tol.unitarity_tol
            )));
        }
        let enc = Self {
            ancilla_dim,
            system_dim,
            u,
            g_prep,
            alpha,
        };
        let norm = crate::matrix::spectral_norm(&enc.signal_operator())?;
        if norm > 1.0 + 1e-9 {
            return Err(Error::Normalization(format!(
                "encoded block has norm {norm}, exceeding 1"
            )));
        }
        Ok(enc)
    }

    /// The flag state `|G>`: first column of `g_prep`.
    pub fn g_state(&self) -> StateVector {
        StateVector::new(
            (0..self.ancilla_dim)
                .map(|i| self.g_prep[(i, 0)])
                .collect(),
        )
    }

    pub fn total_dim(&self) -> usize {
        self.ancilla_dim * self.system_dim
    }

    /// The encoded block `(<G| (x) I) u (|G> (x) I)` on the system register.
    pub fn signal_operator(&self) -> ComplexMatrix {
        let g = self.g_state();
        let n = self.system_dim;
        let mut out = ComplexMatrix::zeros(n, n);
        for a_out in 0..self.ancilla_dim {
            let ga_out = g.amplitudes()[a_out];
            if ga_out.norm_sqr() == 0.0 {
                continue;
            }
            for a_in in 0..self.ancilla_dim {
                let ga_in = g.amplitudes()[a_in];
                if ga_in.norm_sqr() == 0.0 {
                    continue;
                }
                let w = ga_out.conj() * ga_in;
                for s_out in 0..n {
                    for s_in in 0..n {
                        out[(s_out, s_in)] += w * self.u[(a_out * n + s_out, a_in * n + s_in)];
                    }
                }
            }
        }
        out
    }
}

/// Spectrum of a signal operator: eigenvalues in `[-1, 1]`, polar phases
/// (zero for Hermitian signals), and `g_i = sqrt(1 - lambda_i^2)`.
#[derive(Clone, Debug)]
pub struct SignalSpectrum {
    pub eigenvalues: Vec<f64>,
    pub phases: Vec<f64>,
    pub g: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// Spectrum of a Hermitian signal with `|lambda| <= 1`. Eigenvalues within
/// 1e-9 outside `[-1, 1]` are clamped; a larger excursion is an error naming
/// the offending norm.
pub fn spectrum(h: &ComplexMatrix, tol: &ToleranceConfig) -> Result<SignalSpectrum> {
    let eig = herm_eig(h, tol)?;
    let norm = eig
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max);
    if norm > 1.0 + 1e-9 {
        return Err(Error::Normalization(format!(
            "signal norm {norm} exceeds 1; rescale the encoding"
        )));
    }
    let eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|l| l.clamp(-1.0, 1.0)).collect();
    let g = eigenvalues
        .iter()
        .map(|l| (1.0 - l * l).max(0.0).sqrt())
        .collect();
    Ok(SignalSpectrum {
        phases: vec![0.0; eigenvalues.len()],
        g,
        eigenvalues,
        eigenvectors: eig.eigenvectors,
    })
}

/// Spectrum of a normal signal in polar form `lambda * e^{i theta}` with
/// `lambda >= 0`.
pub fn normal_spectrum(c: &ComplexMatrix, tol: &ToleranceConfig) -> Result<SignalSpectrum> {
    let ne = normal_eig(c, tol)?;
    let norm = ne.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if norm > 1.0 + 1e-9 {
        return Err(Error::Normalization(format!(
            "signal norm {norm} exceeds 1; rescale the encoding"
        )));
    }
    let eigenvalues: Vec<f64> = ne.eigenvalues.iter().map(|z| z.norm().min(1.0)).collect();
    let phases = ne.eigenvalues.iter().map(|z| z.arg()).collect();
    let g = eigenvalues
        .iter()
        .map(|l| (1.0 - l * l).max(0.0).sqrt())
        .collect();
    Ok(SignalSpectrum {
        eigenvalues,
        phases,
        g,
        eigenvectors: ne.eigenvectors,
    })
}

/// Single-qubit Pauli letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            PauliOp::I => pauli::i2(),
            PauliOp::X => pauli::x(),
            PauliOp::Y => pauli::y(),
            PauliOp::Z => pauli::z(),
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' | 'i' => Ok(PauliOp::I),
            'X' | 'x' => Ok(PauliOp::X),
            'Y' | 'y' => Ok(PauliOp::Y),
            'Z' | 'z' => Ok(PauliOp::Z),
            other => Err(Error::Format(format!("invalid Pauli letter `{other}`"))),
        }
    }
}

/// A weighted sum of Pauli strings on `n` qubits. Negative coefficients are
/// allowed; they are folded into the selector unitary at encoding time.
#[derive(Clone, Debug)]
pub struct PauliDecomposition {
    pub n: usize,
    pub terms: Vec<(f64, Vec<PauliOp>)>,
}

impl PauliDecomposition {
    pub fn new(n: usize, terms: Vec<(f64, Vec<PauliOp>)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Contract("Pauli decomposition needs at least one term".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (coef, string) in &terms {
            if string.len() != n {
                return Err(Error::Contract(format!(
                    "Pauli string length {} does not match qubit count {n}",
                    string.len()
                )));
            }
            if !coef.is_finite() {
                return Err(Error::Contract("Pauli coefficient must be finite".into()));
            }
            if !seen.insert(string.clone()) {
                return Err(Error::Contract("duplicate Pauli string".into()));
            }
        }
        let dec = Self { n, terms };
        if dec.alpha() <= 0.0 {
            return Err(Error::Contract("sum of |coefficients| must be positive".into()));
        }
        Ok(dec)
    }

    /// `alpha = sum_j |alpha_j|`.
    pub fn alpha(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn string_matrix(string: &[PauliOp]) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::identity(1);
        for op in string {
            m = kron(&m, &op.matrix())?;
        }
        Ok(m)
    }

    /// The dense sum `sum_j alpha_j P_j` (the reference oracle for LCU tests).
    pub fn dense_matrix(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.n;
        let mut h = ComplexMatrix::zeros(dim, dim);
        for (coef, string) in &self.terms {
            let p = Self::string_matrix(string)?.scale(Complex64::new(*coef, 0.0));
            h = h.add(&p)?;
        }
        Ok(h)
    }

    /// Parses the Pauli text format: `<coefficient> <string over IXYZ>` per
    /// line, with `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut n: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let coef_tok = it.next().unwrap();
            let string_tok = it
                .next()
                .ok_or_else(|| Error::Format(format!("line {}: missing Pauli string", lineno + 1)))?;
            if it.next().is_some() {
                return Err(Error::Format(format!(
                    "line {}: expected `<coefficient> <string>`",
                    lineno + 1
                )));
            }
            let coef: f64 = coef_tok
                .parse()
                .map_err(|e| Error::Format(format!("line {}: bad coefficient: {e}", lineno + 1)))?;
            let string: Vec<PauliOp> = string_tok
                .chars()
                .map(PauliOp::from_char)
                .collect::<Result<_>>()?;
            match n {
                None => n = Some(string.len()),
                Some(len) if len != string.len() => {
                    return Err(Error::Format(format!(
                        "line {}: string length {} differs from earlier length {len}",
                        lineno + 1,
                        string.len()
                    )));
                }
                _ => {}
            }
            terms.push((coef, string));
        }
        let n = n.ok_or_else(|| Error::Format("no Pauli terms in input".into()))?;
        Self::new(n, terms)
    }
}

/// Parses a Pauli file split into labeled blocks. A comment of the form
/// `# label <name>` starts a new block; terms before any label go into a
/// block named `default`.
pub fn parse_labeled_pauli_blocks(text: &str) -> Result<Vec<(String, PauliDecomposition)>> {
    let mut blocks: Vec<(String, String)> = Vec::new();
    let mut current_label = String::from("default");
    let mut current = String::new();
    for raw in text.lines() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("# label") {
            if !current.trim().is_empty() {
                blocks.push((current_label.clone(), std::mem::take(&mut current)));
            }
            current_label = rest.trim_start_matches(':').trim().to_string();
            if current_label.is_empty() {
                return Err(Error::Format("empty block label".into()));
            }
            continue;
        }
        current.push_str(raw);
        current.push('\n');
    }
    if !current.trim().is_empty() {
        blocks.push((current_label, current));
    }
    blocks
        .into_iter()
        .map(|(label, body)| PauliDecomposition::parse(&body).map(|d| (label, d)))
        .collect()
}

fn next_power_of_two(x: usize) -> usize {
    x.next_power_of_two().max(1)
}

/// Builds a unitary whose first column is the given unit vector, completing
/// the remaining columns from standard basis vectors by Gram-Schmidt.
pub fn unitary_with_first_column(v: &StateVector) -> Result<ComplexMatrix> {
    unitary_completion(&[(0, v.clone())], v.dim())
}

/// Completes a partial set of orthonormal columns (given as
/// `(column_index, column)` pairs) to a full unitary. Remaining columns are
/// drawn from standard basis vectors, orthogonalized twice for stability.
pub fn unitary_completion(
    defined: &[(usize, StateVector)],
    dim: usize,
) -> Result<ComplexMatrix> {
    let mut cols: Vec<Option<Vec<Complex64>>> = vec![None; dim];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for (idx, v) in defined {
        if v.dim() != dim {
            return Err(Error::Shape("column has wrong dimension".into()));
        }
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!(
                "column {idx} is not normalized (norm {})",
                v.norm()
            )));
        }
        cols[*idx] = Some(v.amplitudes().to_vec());
        basis.push(v.amplitudes().to_vec());
    }
    let mut candidate = 0usize;
    for slot in 0..dim {
        if cols[slot].is_some() {
            continue;
        }
        loop {
            if candidate >= dim {
                return Err(Error::Contract(
                    "could not complete unitary: defined columns are rank deficient".into(),
                ));
            }
            let mut w = vec![Complex64::new(0.0, 0.0); dim];
            w[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for b in &basis {
                    let ip: Complex64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= ip * bi;
                    }
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for wi in &mut w {
                    *wi /= norm;
                }
                cols[slot] = Some(w.clone());
                basis.push(w);
                break;
            }
        }
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (j, col) in cols.into_iter().enumerate() {
        let col = col.unwrap();
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

/// Encodes a Pauli linear combination: ancilla slots select terms, the flag
/// state carries `sqrt(|alpha_j| / alpha)` amplitudes, and term signs are
/// folded into the selector. The slot count is padded to a power of two with
/// zero amplitude and identity action.
pub fn lcu_encode(p: &PauliDecomposition, tol: &ToleranceConfig) -> Result<BlockEncoding> {
    let alpha = p.alpha();
    let d = next_power_of_two(p.terms.len());
    let sys = 1usize << p.n;

    let g_col = StateVector::new(
        (0..d)
            .map(|j| {
                let amp = p
                    .terms
                    .get(j)
                    .map(|(c, _)| (c.abs() / alpha).sqrt())
                    .unwrap_or(0.0);
                Complex64::new(amp, 0.0)
            })
            .collect(),
    );
    let g_prep = unitary_with_first_column(&g_col)?;

    let mut u = ComplexMatrix::zeros(d * sys, d * sys);
    for j in 0..d {
        let block = match p.terms.get(j) {
            Some((coef, string)) => {
                let sign = if *coef < 0.0 { -1.0 } else { 1.0 };
                PauliDecomposition::string_matrix(string)?.scale(Complex64::new(sign, 0.0))
            }
            None => ComplexMatrix::identity(sys),
        };
        for r in 0..sys {
            for c in 0..sys {
                u[(j * sys + r, j * sys + c)] = block[(r, c)];
            }
        }
    }
    BlockEncoding::new(d, sys, u, g_prep, alpha, tol)
}

/// Sparse Hermitian matrix described by per-row nonzero columns. `f(j, l)`
/// enumerates the columns; rows shorter than the sparsity are padded with
/// zero-amplitude slots.
#[derive(Clone, Debug)]
pub struct SparseHamiltonianSpec {
    pub n: usize,
    pub sparsity: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
    pub h_max: f64,
}

impl SparseHamiltonianSpec {
    /// Builds from entry triplets `(row, col, value)`. The pattern and values
    /// are symmetrized and checked for Hermiticity.
    pub fn from_triplets(
        n: usize,
        sparsity: usize,
        triplets: &[(usize, usize, Complex64)],
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let dim = 1usize << n;
        let mut dense: Vec<std::collections::BTreeMap<usize, Complex64>> =
            vec![std::collections::BTreeMap::new(); dim];
        for &(j, k, v) in triplets {
            if j >= dim || k >= dim {
                return Err(Error::Contract(format!(
                    "entry ({j},{k}) outside dimension {dim}"
                )));
            }
            if let Some(prev) = dense[j].insert(k, v) {
                if (prev - v).norm() > tol.condition_tol {
                    return Err(Error::Contract(format!(
                        "conflicting duplicate entry at ({j},{k})"
                    )));
                }
            }
        }
        // Hermiticity: every stored (j,k) must match conj of (k,j); missing
        // mirror entries are filled in.
        let snapshot: Vec<Vec<(usize, Complex64)>> = dense
            .iter()
            .map(|row| row.iter().map(|(&k, &v)| (k, v)).collect())
            .collect();
        for (j, row) in snapshot.iter().enumerate() {
            for &(k, v) in row {
                match dense[k].get(&j) {
                    Some(&mirror) => {
                        if (mirror - v.conj()).norm() > tol.condition_tol {
                            return Err(Error::Contract(format!(
                                "entries ({j},{k}) and ({k},{j}) violate Hermiticity"
                            )));
                        }
                    }
                    None => {
                        dense[k].insert(j, v.conj());
                    }
                }
            }
        }
        let rows: Vec<Vec<(usize, Complex64)>> = dense
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .filter(|(_, v)| v.norm() > 0.0)
                    .collect::<Vec<_>>()
            })
            .collect();
        for (j, row) in rows.iter().enumerate() {
            if row.len() > sparsity {
                return Err(Error::Contract(format!(
                    "row {j} has {} nonzeros, exceeding sparsity {sparsity}",
                    row.len()
                )));
            }
        }
        let h_max = rows
            .iter()
            .flat_map(|row| row.iter().map(|(_, v)| v.norm()))
            .fold(0.0, f64::max);
        Ok(Self {
            n,
            sparsity,
            rows,
            h_max,
        })
    }

    /// Entry lookup `H[j, k]`.
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.rows[j]
            .iter()
            .find(|(c, _)| *c == k)
            .map(|(_, v)| *v)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Column index of the `l`-th slot of row `j`; padded slots return `None`.
    pub fn col_index(&self, j: usize, l: usize) -> Option<usize> {
        self.rows[j].get(l).map(|(c, _)| *c)
    }

    pub fn dense_matrix(&self) -> ComplexMatrix {
        let dim = 1usize << self.n;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (j, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                m[(j, k)] = v;
            }
        }
        m
    }
}

/// Flag values on the two-qubit branch register of the sparse encoding.
const FLAG_GOOD: usize = 0;
const FLAG_ROW_GARBAGE: usize = 1;
const FLAG_COL_GARBAGE: usize = 2;
const FLAG_DIM: usize = 4;

/// Encodes a sparse Hermitian matrix as `H / (d * h_max)` via two state-
/// preparation isometries completed to unitaries, `u = T2^dag T1`.
///
/// Each isometry sends `|G>|j>` to a superposition over the row's column
/// slots, carrying `sqrt(entry / h_max)` on a good branch and the remaining
/// weight on a garbage branch. The two isometries use disjoint garbage flags
/// and index garbage by slot, so the garbage branches drop out of the
/// `<G| . |G>` block and the good branches multiply to `H / (d h_max)`
/// exactly.
pub fn sparse_encode(s: &SparseHamiltonianSpec, tol: &ToleranceConfig) -> Result<BlockEncoding> {
    let sys = 1usize << s.n;
    let d = s.sparsity;
    if d == 0 || d > sys {
        return Err(Error::Contract(format!(
            "sparsity must be in 1..={sys}, got {d}"
        )));
    }
    let anc = FLAG_DIM * sys; // branch flags (x) column register
    let dim = anc * sys;
    if dim > DIM_CAP {
        return Err(Error::Capacity {
            requested: dim,
            cap: DIM_CAP,
        });
    }
    let h_max = s.h_max;
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();

    // index helper: (flag, column register, system) -> full index
    let idx = |flag: usize, a2: usize, sysi: usize| (flag * sys + a2) * sys + sysi;

    let mut t1_cols: Vec<(usize, StateVector)> = Vec::with_capacity(sys);
    let mut t2_cols: Vec<(usize, StateVector)> = Vec::with_capacity(sys);
    for j in 0..sys {
        // T1: good branch holds sqrt(H*_{j,f}/h_max) at |f(j,l)> (x) |j>,
        // garbage branch holds the residual weight at slot index l.
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        let mut chi = vec![Complex64::new(0.0, 0.0); dim];
        for l in 0..d {
            match s.col_index(j, l) {
                Some(col) => {
                    let v = s.entry(j, col);
                    // Amplitudes have modulus sqrt(|entry| / h_max); the
                    // entry's phase is carried entirely by the lower-triangle
                    // slot so that the cross term in <chi_k|psi_j> multiplies
                    // out to exactly H_{k,j} / h_max with no branch-cut
                    // sensitivity. The row isometry and the column isometry
                    // agree on each slot up to the conjugation below.
                    let r = (v.norm() / h_max).sqrt();
                    let phased = if r > 0.0 {
                        v.conj() / (h_max * r)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    let (good_psi, good_chi) = if col > j {
                        (Complex64::new(r, 0.0), Complex64::new(r, 0.0))
                    } else if col < j {
                        (phased, phased)
                    } else {
                        // diagonal: the row side stays real, the column side
                        // carries the sign
                        (Complex64::new(r, 0.0), phased.conj())
                    };
                    let garbage = (1.0 - v.norm() / h_max).max(0.0).sqrt() * inv_sqrt_d;
                    psi[idx(FLAG_GOOD, col, j)] += good_psi * inv_sqrt_d;
                    psi[idx(FLAG_ROW_GARBAGE, l, j)] += Complex64::new(garbage, 0.0);
                    chi[idx(FLAG_GOOD, j, col)] += good_chi * inv_sqrt_d;
                    chi[idx(FLAG_COL_GARBAGE, j, l)] += Complex64::new(garbage, 0.0);
                }
                None => {
                    psi[idx(FLAG_ROW_GARBAGE, l, j)] += Complex64::new(inv_sqrt_d, 0.0);
                    chi[idx(FLAG_COL_GARBAGE, j, l)] += Complex64::new(inv_sqrt_d, 0.0);
                }
            }
        }
        t1_cols.push((j, StateVector::new(psi)));
        t2_cols.push((j, StateVector::new(chi)));
    }
    let t1 = unitary_completion(&t1_cols, dim)?;
    let t2 = unitary_completion(&t2_cols, dim)?;
    let u = t2.dagger().matmul(&t1)?;

    let alpha = if h_max > 0.0 { d as f64 * h_max } else { 0.0 };
    BlockEncoding::new(anc, sys, u, ComplexMatrix::identity(anc), alpha, tol)
}

/// A density matrix given by its purification weights and purifier states.
#[derive(Clone, Debug)]
pub struct PurifiedDensity {
    pub n: usize,
    pub weights: Vec<f64>,
    pub purifiers: Vec<StateVector>,
}

impl PurifiedDensity {
    pub fn new(n: usize, weights: Vec<f64>, purifiers: Vec<StateVector>) -> Result<Self> {
        if weights.len() != purifiers.len() || weights.is_empty() {
            return Err(Error::Contract(
                "weights and purifier states must be non-empty and equal in number".into(),
            ));
        }
        let sys = 1usize << n;
        for (j, chi) in purifiers.iter().enumerate() {
            if chi.dim() != sys {
                return Err(Error::Shape(format!(
                    "purifier {j} has dimension {}, expected {sys}",
                    chi.dim()
                )));
            }
            chi.check_normalized(1e-9)?;
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Contract("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!(
                "weights must sum to 1 within 1e-12, got {total}"
            )));
        }
        Ok(Self {
            n,
            weights,
            purifiers,
        })
    }

    /// The density matrix `rho = sum_j alpha_j |chi_j><chi_j|`.
    pub fn rho(&self) -> ComplexMatrix {
        let sys = 1usize << self.n;
        let mut rho = ComplexMatrix::zeros(sys, sys);
        for (w, chi) in self.weights.iter().zip(&self.purifiers) {
            let proj = chi.outer(chi).scale(Complex64::new(*w, 0.0));
            rho = rho.add(&proj).unwrap();
        }
        rho
    }

    /// Parses the purified-density text format: first line `J n`, then `J`
    /// lines of `<weight> <2^n amplitudes as re im pairs>`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty purified-density file".into()))?;
        let toks: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("bad header `{header}`: {e}")))?;
        if toks.len() != 2 {
            return Err(Error::Format("header must be `J n`".into()));
        }
        let (j_count, n) = (toks[0], toks[1]);
        let sys = 1usize << n;
        let mut weights = Vec::with_capacity(j_count);
        let mut purifiers = Vec::with_capacity(j_count);
        for row in 0..j_count {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing purifier line {row}")))?;
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("bad number on line {row}: {e}")))?;
            if nums.len() != 1 + 2 * sys {
                return Err(Error::Format(format!(
                    "purifier line {row} has {} numbers, expected {}",
                    nums.len(),
                    1 + 2 * sys
                )));
            }
            weights.push(nums[0]);
            purifiers.push(StateVector::new(
                nums[1..]
                    .chunks(2)
                    .map(|p| Complex64::new(p[0], p[1]))
                    .collect(),
            ));
        }
        Self::new(n, weights, purifiers)
    }
}

/// Encodes a purified density matrix: the flag state is the purification
/// itself and `u` swaps the purifier register with the system, so the encoded
/// block is `rho` with `alpha = 1`.
pub fn purify_encode(p: &PurifiedDensity, tol: &ToleranceConfig) -> Result<BlockEncoding> {
    let sys = 1usize << p.n;
    let j_pad = next_power_of_two(p.weights.len());
    let anc = j_pad * sys; // a1 (x) a2
    let dim = anc * sys;
    if dim > DIM_CAP {
        return Err(Error::Capacity {
            requested: dim,
            cap: DIM_CAP,
        });
    }

    let mut g = vec![Complex64::new(0.0, 0.0); anc];
    for (j, (w, chi)) in p.weights.iter().zip(&p.purifiers).enumerate() {
        let amp = w.sqrt();
        for (s_i, c) in chi.amplitudes().iter().enumerate() {
            g[j * sys + s_i] += Complex64::new(amp, 0.0) * c;
        }
    }
    let g_prep = unitary_with_first_column(&StateVector::new(g))?;

    // u = I_{a1} (x) SWAP(a2, s)
    let mut u = ComplexMatrix::zeros(dim, dim);
    for a1 in 0..j_pad {
        for a2 in 0..sys {
            for s_i in 0..sys {
                let from = (a1 * sys + a2) * sys + s_i;
                let to = (a1 * sys + s_i) * sys + a2;
                u[(to, from)] = Complex64::new(1.0, 0.0);
            }
        }
    }
    BlockEncoding::new(anc, sys, u, g_prep, 1.0, tol)
}

/// Encodes a normal contraction `C` directly via the two-block dilation
/// `[[C, -S], [S, C^dag]]` with `S = (I - C^dag C)^{1/2}`, which is unitary
/// whenever `C` is normal with norm at most 1.
pub fn dilation_encode(c: &ComplexMatrix, tol: &ToleranceConfig) -> Result<BlockEncoding> {
    if !c.is_square() {
        return Err(Error::Shape("dilation requires a square matrix".into()));
    }
    let m = c.rows();
    let ne = normal_eig(c, tol)?;
    let norm = ne.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if norm > 1.0 + 1e-9 {
        return Err(Error::Normalization(format!(
            "cannot dilate: norm {norm} exceeds 1"
        )));
    }
    // S = sum_i sqrt(1 - |c_i|^2) |v_i><v_i|
    let mut s_mat = ComplexMatrix::zeros(m, m);
    for k in 0..m {
        let gk = (1.0 - ne.eigenvalues[k].norm_sqr()).max(0.0).sqrt();
        if gk == 0.0 {
            continue;
        }
        let v = StateVector::new((0..m).map(|i| ne.eigenvectors[(i, k)]).collect());
        s_mat = s_mat.add(&v.outer(&v).scale(Complex64::new(gk, 0.0)))?;
    }
    let cd = c.dagger();
    let mut u = ComplexMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            u[(i, j)] = c[(i, j)];
            u[(i, m + j)] = -s_mat[(i, j)];
            u[(m + i, j)] = s_mat[(i, j)];
            u[(m + i, m + j)] = cd[(i, j)];
        }
    }
    BlockEncoding::new(2, m, u, ComplexMatrix::identity(2), 1.0, tol)
}

/// Partial trace over the leading register of dimension `lead` of the
/// projector `|v><v|`, leaving an operator on the trailing register.
pub fn partial_trace_leading(v: &StateVector, lead: usize) -> Result<ComplexMatrix> {
    if v.dim() % lead != 0 {
        return Err(Error::Shape("vector dimension not divisible by register".into()));
    }
    let rest = v.dim() / lead;
    let mut out = ComplexMatrix::zeros(rest, rest);
    for a in 0..lead {
        for i in 0..rest {
            for j in 0..rest {
                out[(i, j)] += v.amplitudes()[a * rest + i] * v.amplitudes()[a * rest + j].conj();
            }
        }
    }
    Ok(out)
}
