//! Numerical computation of phase vectors realizing the time-evolution
//! target `h(theta) = t sin(theta)` on the scalar SU(2) model, and
//! verification of arbitrary phase vectors against that model.
//!
//! The solver is a seeded multi-start local optimizer: Levenberg-Marquardt
//! least squares over a uniform angle grid, followed by a Lawson-weighted
//! minimax polish. Seeds come from a small library of precomputed phase
//! vectors for this target (continued in `t` and padded with identity pairs
//! as the sequence grows), plus the all-zeros vector and uniform random
//! draws.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::planner::{plan_queries, JacobiAngerTable};
use crate::signal::{PhaseSequence, SequenceKind};

/// The scalar model: one eigenvalue `lambda = cos(theta)` swept over a grid,
/// with the iterate axis and global phase of the full construction.
#[derive(Clone, Debug)]
pub struct ScalarModel {
    pub theta_grid: Vec<f64>,
    pub axis: f64,
    pub global_phase: f64,
}

impl ScalarModel {
    pub fn uniform(points: usize, axis: f64, global_phase: f64) -> Self {
        let n = points.max(2);
        let theta_grid = (0..n)
            .map(|j| -std::f64::consts::PI + (2.0 * std::f64::consts::PI) * (j as f64 + 0.5) / n as f64)
            .collect();
        Self {
            theta_grid,
            axis,
            global_phase,
        }
    }
}

impl Default for ScalarModel {
    fn default() -> Self {
        Self::uniform(
            1024,
            std::f64::consts::FRAC_PI_2,
            -std::f64::consts::FRAC_PI_2,
        )
    }
}

/// Outcome of a solve: the phases, the verified grid error, and whether the
/// requested tolerance was met.
#[derive(Clone, Debug)]
pub struct SolverReport {
    pub phases: PhaseSequence,
    pub n: usize,
    pub t: f64,
    pub eps: f64,
    pub max_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Tuning knobs for the solver.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub grid: usize,
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    pub continuation_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid: 1024,
            seed: 0,
            restarts: 200,
            iterations: 2000,
            continuation_step: 0.5,
        }
    }
}

/// Truncated Fourier pair for `e^{i t sin(theta)}`: cosine coefficients
/// `a_k` (nonzero at even `k`) and sine coefficients `c_k` (nonzero at odd
/// `k`), for `k = 0..N/2`.
pub fn target_fourier(t: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Contract(format!("N must be even and positive, got {n}")));
    }
    let order = n / 2;
    let table = JacobiAngerTable::build(t)?;
    let mut a = vec![0.0; order + 1];
    let mut c = vec![0.0; order + 1];
    a[0] = table.bessel(0);
    for k in 1..=order {
        if k % 2 == 0 {
            a[k] = 2.0 * table.bessel(k);
        } else {
            c[k] = 2.0 * table.bessel(k);
        }
    }
    Ok((a, c))
}

// ---------------------------------------------------------------------------
// fast 2x2 kernels for the scalar response

#[derive(Clone, Copy)]
struct M2([Complex64; 4]);

impl M2 {
    const IDENTITY: M2 = M2([
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ]);

    #[inline]
    fn mul(&self, other: &M2) -> M2 {
        let a = &self.0;
        let b = &other.0;
        M2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }

    /// `<+| M |+>` = mean of all four entries.
    #[inline]
    fn plus_expectation(&self) -> Complex64 {
        (self.0[0] + self.0[1] + self.0[2] + self.0[3]) * Complex64::new(0.5, 0.0)
    }
}

/// `e^{-i (alpha/2) sigma_phi}` with `sigma_phi = cos phi sx + sin phi sy`.
#[inline]
fn half_rotation(cos_half: f64, sin_half: f64, e_iphi: Complex64) -> M2 {
    let mi_s = Complex64::new(0.0, -sin_half);
    M2([
        Complex64::new(cos_half, 0.0),
        mi_s * e_iphi.conj(),
        mi_s * e_iphi,
        Complex64::new(cos_half, 0.0),
    ])
}

/// Branch response `<+| prod_k e^{-i (alpha/2) sigma_{phi_k}} |+>` for every
/// grid angle; optionally also the gradient with respect to each phase.
fn responses(
    phases: &[f64],
    alphas: &[f64],
    mut grad_sink: Option<&mut [Complex64]>,
) -> Vec<Complex64> {
    let n = phases.len();
    let e_iphi: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    let mut out = Vec::with_capacity(alphas.len());
    let mut prefixes: Vec<M2> = Vec::with_capacity(n + 1);
    for (j, &alpha) in alphas.iter().enumerate() {
        let ch = (alpha / 2.0).cos();
        let sh = (alpha / 2.0).sin();
        prefixes.clear();
        prefixes.push(M2::IDENTITY);
        for e in &e_iphi {
            let r = half_rotation(ch, sh, *e);
            let last = prefixes.last().unwrap();
            prefixes.push(r.mul(last));
        }
        out.push(prefixes[n].plus_expectation());
        if let Some(sink) = grad_sink.as_deref_mut() {
            // suffix sweep: d/dphi_k of the rotation is
            // -i (sin(alpha/2)) d(sigma_phi)/dphi -> off-diagonals rotate by pi/2
            let mut suffix = M2::IDENTITY;
            for k in (0..n).rev() {
                let e = e_iphi[k];
                // dR = [[0, -s e^{-i phi}], [s e^{i phi}, 0]]
                let dr = M2([
                    Complex64::new(0.0, 0.0),
                    -Complex64::new(sh, 0.0) * e.conj(),
                    Complex64::new(sh, 0.0) * e,
                    Complex64::new(0.0, 0.0),
                ]);
                let m = suffix.mul(&dr).mul(&prefixes[k]);
                sink[j * n + k] = m.plus_expectation();
                let r = half_rotation(ch, sh, e);
                suffix = suffix.mul(&r);
            }
        }
    }
    out
}

fn sin_target(t: f64, alphas: &[f64]) -> Vec<Complex64> {
    alphas
        .iter()
        .map(|&a| Complex64::from_polar(1.0, t * a.sin()))
        .collect()
}

fn max_abs_residual(resp: &[Complex64], target: &[Complex64]) -> f64 {
    resp.iter()
        .zip(target)
        .map(|(r, t)| (r - t).norm())
        .fold(0.0, f64::max)
}

/// Levenberg-Marquardt with optional Lawson reweighting. Returns the best
/// phases seen, their grid max error, and the iteration count consumed.
fn lm_polish(
    _t: f64,
    start: &[f64],
    alphas: &[f64],
    target: &[Complex64],
    eps: f64,
    max_outer: usize,
    lawson: bool,
) -> (Vec<f64>, f64, usize) {
    let n = start.len();
    let m = alphas.len();
    if n == 0 {
        let resp = responses(start, alphas, None);
        return (start.to_vec(), max_abs_residual(&resp, target), 0);
    }
    let mut phases = start.to_vec();
    let mut weights = vec![1.0_f64; m];
    let mut lambda = 1e-3_f64;
    let mut grads = vec![Complex64::new(0.0, 0.0); m * n];
    let mut resp = responses(&phases, alphas, Some(&mut grads));
    let mut best_err = max_abs_residual(&resp, target);
    let mut best = phases.clone();
    let mut stall = 0usize;
    let mut iterations = 0usize;

    for outer in 0..max_outer {
        iterations += 1;
        // normal equations with weights
        let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut gvec = nalgebra::DVector::<f64>::zeros(n);
        let mut cost = 0.0;
        for j in 0..m {
            let w = weights[j];
            let r = resp[j] - target[j];
            cost += w * r.norm_sqr();
            for a in 0..n {
                let ga = grads[j * n + a];
                gvec[a] += w * (r.re * ga.re + r.im * ga.im);
                for b in a..n {
                    let gb = grads[j * n + b];
                    h[(a, b)] += w * (ga.re * gb.re + ga.im * gb.im);
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }

        let mut accepted = false;
        for _ in 0..25 {
            let mut damped = h.clone();
            for a in 0..n {
                damped[(a, a)] += lambda * (h[(a, a)].abs() + 1e-12);
            }
            let step = match damped.clone().cholesky() {
                Some(ch) => ch.solve(&gvec),
                None => match damped.lu().solve(&gvec) {
                    Some(s) => s,
                    None => break,
                },
            };
            let cand: Vec<f64> = phases.iter().zip(step.iter()).map(|(p, s)| p - s).collect();
            let cand_resp = responses(&cand, alphas, None);
            let cand_cost: f64 = cand_resp
                .iter()
                .zip(target)
                .zip(&weights)
                .map(|((r, t), w)| w * (r - t).norm_sqr())
                .sum();
            if cand_cost < cost {
                phases = cand;
                lambda = (lambda * 0.33).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 3.0;
        }
        resp = responses(&phases, alphas, Some(&mut grads));
        let err = max_abs_residual(&resp, target);
        if err < best_err {
            best_err = err;
            best = phases.clone();
            stall = 0;
        } else {
            stall += 1;
        }
        if best_err <= 0.85 * eps || stall > 40 || !accepted && stall > 10 {
            break;
        }
        if lawson && outer >= 8 {
            let mut total = 0.0;
            for (w, (r, tv)) in weights.iter_mut().zip(resp.iter().zip(target)) {
                *w = *w * (r - tv).norm() + 1e-16;
                total += *w;
            }
            let scale = m as f64 / total;
            for w in weights.iter_mut() {
                *w *= scale;
            }
        }
    }
    (best, best_err, iterations)
}

// ---------------------------------------------------------------------------
// seed library: precomputed phase vectors for the sin target

/// Precomputed `(t, phases)` seed vectors for `h(theta) = t sin(theta)`.
/// These realize the target to a few times 1e-2 or 1e-4 and serve as
/// continuation anchors; the optimizer polishes from them.
pub const SEED_LIBRARY: &[(f64, &[f64])] = &[
    (0.0070711, &[-1.574, 1.5817]),
    (0.0707, &[-1.61, 1.67]),
    (0.066948, &[-0.6741, 2.5806, 0.7772, -2.4675]),
    (0.311, &[-1.03, 2.54, 1.36, -2.11]),
    (0.47498, &[-0.0914, -1.2861, 2.1995, 0.995, -2.637, -1.5369, 1.9236, -3.0502]),
    (2.2164, &[
        -0.5228, -2.9239, 1.3204, 2.6065, -1.73, -2.6191, 1.7225, 3.0121, -1.2286, -2.5276,
        1.8058, -0.4605, 1.1563, -2.3492, 2.1623, -2.6188,
    ]),
    (3.78, &[
        0.23, 1.17, 3.07, -1.63, -1.78, 2.88, 1.71, 2.77, -1.95, 3.12, 1.97, -2.56, -2.87, 2.00,
        -2.29, 2.92,
    ]),
    (7.3957, &[
        1.3594, -2.7039, -1.5041, -1.0845, 2.4817, 2.5571, -3.0846, 1.0661, 2.6256, -2.0267,
        -2.0383, 3.0857, 1.9338, 2.6966, -2.1759, -2.562, 2.2839, 2.6493, -2.2281, -2.9435,
        2.1726, -2.9934, -2.9327, 1.7167, -3.0853, -0.9383, -0.2802, -0.2376, -2.9556, 2.7875,
        -2.2875, 1.7822,
    ]),
    (10.1, &[
        -2.94, 2.64, -2.32, 2.42, -2.86, -2.72, 2.4, -2.57, -2.96, 2.43, -2.53, -2.63, 2.33,
        3.11, -2.17, 3.07, 2.24, -2.98, -1.99, -2.77, 2.22, 2.33, -2.62, -1.75, -2.15, 2.84,
        1.68, 1.48, 2.46, -2.26, -0.92, -0.21,
    ]),
];

/// Appends an identity pair `(b, b + pi)` (which leaves the response
/// unchanged) just inside the final pair, keeping the boundary phases at the
/// ends of the sequence.
fn grow_by_identity_pair(phases: &mut Vec<f64>, base: f64) {
    let insert_at = phases.len().saturating_sub(2);
    phases.insert(insert_at, base);
    phases.insert(insert_at + 1, base + std::f64::consts::PI);
}

fn identity_pairs(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut phases = Vec::with_capacity(n);
    for _ in 0..n / 2 {
        let b: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        phases.push(b);
        phases.push(b + std::f64::consts::PI);
    }
    phases
}

/// Verifies a phase vector on the scalar model: for each grid angle the full
/// control-qubit sequence is assembled literally and compared against
/// `e^{-i t cos(theta)} I`. Returns the maximum operator distance.
pub fn verify_phases(phases: &PhaseSequence, t: f64, model: &ScalarModel) -> Result<f64> {
    if phases.kind != SequenceKind::Qsp {
        return Err(Error::Contract("verification expects a controlled sequence".into()));
    }
    let n = phases.len();
    if n % 2 != 0 || n == 0 {
        return Err(Error::Contract("phase count must be even and positive".into()));
    }
    let mut worst = 0.0_f64;
    for &theta in &model.theta_grid {
        let err = scalar_point_error(&phases.phases, t, theta, model.axis, model.global_phase);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Error at one grid angle, from the literal 4x4 construction.
fn scalar_point_error(phases: &[f64], t: f64, theta: f64, axis: f64, global_phase: f64) -> f64 {
    let l = theta.cos();
    let s = theta.sin();
    let mi = Complex64::new(0.0, -1.0);
    let block = [
        Complex64::new(l, 0.0),
        mi * Complex64::from_polar(s, -axis),
        mi * Complex64::from_polar(s, axis),
        Complex64::new(l, 0.0),
    ];
    let phase = Complex64::from_polar(1.0, global_phase);
    let w = M2([block[0] * phase, block[1] * phase, block[2] * phase, block[3] * phase]);

    // V0 on control (x) block space, 4x4 laid out as 2x2 of M2 blocks
    let half = Complex64::new(0.5, 0.0);
    let mk = |z: Complex64| -> M2 { M2([z, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), z]) };
    let idh = mk(half);
    let wh = M2([w.0[0] * half, w.0[1] * half, w.0[2] * half, w.0[3] * half]);
    // 4x4 as [[p, m], [m, p]] with p = (I + W)/2, m = (I - W)/2
    let p = M2([
        idh.0[0] + wh.0[0],
        idh.0[1] + wh.0[1],
        idh.0[2] + wh.0[2],
        idh.0[3] + wh.0[3],
    ]);
    let mblk = M2([
        idh.0[0] - wh.0[0],
        idh.0[1] - wh.0[1],
        idh.0[2] - wh.0[2],
        idh.0[3] - wh.0[3],
    ]);
    let v0 = Block4 {
        tl: p,
        tr: mblk,
        bl: mblk,
        br: p,
    };

    let mut acc = Block4::identity();
    let mut k = 0;
    while k + 1 < phases.len() {
        let first = v0.conjugate_rz(phases[k]);
        let second = v0.conjugate_rz(phases[k + 1] + std::f64::consts::PI);
        let pair = second.dagger().mul(&first);
        acc = pair.mul(&acc);
        k += 2;
    }
    // <+| acc |+> on the control qubit
    let proj = M2([
        (acc.tl.0[0] + acc.tr.0[0] + acc.bl.0[0] + acc.br.0[0]) * half,
        (acc.tl.0[1] + acc.tr.0[1] + acc.bl.0[1] + acc.br.0[1]) * half,
        (acc.tl.0[2] + acc.tr.0[2] + acc.bl.0[2] + acc.br.0[2]) * half,
        (acc.tl.0[3] + acc.tr.0[3] + acc.bl.0[3] + acc.br.0[3]) * half,
    ]);
    let ideal = Complex64::from_polar(1.0, -t * l);
    let d = M2([
        proj.0[0] - ideal,
        proj.0[1],
        proj.0[2],
        proj.0[3] - ideal,
    ]);
    spectral_norm_2x2(&d)
}

/// 4x4 operator stored as four 2x2 blocks over the control qubit.
#[derive(Clone, Copy)]
struct Block4 {
    tl: M2,
    tr: M2,
    bl: M2,
    br: M2,
}

impl Block4 {
    fn identity() -> Self {
        let z = M2([
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        Block4 {
            tl: M2::IDENTITY,
            tr: z,
            bl: z,
            br: M2::IDENTITY,
        }
    }

    fn mul(&self, o: &Block4) -> Block4 {
        let add = |x: &M2, y: &M2| M2([x.0[0] + y.0[0], x.0[1] + y.0[1], x.0[2] + y.0[2], x.0[3] + y.0[3]]);
        Block4 {
            tl: add(&self.tl.mul(&o.tl), &self.tr.mul(&o.bl)),
            tr: add(&self.tl.mul(&o.tr), &self.tr.mul(&o.br)),
            bl: add(&self.bl.mul(&o.tl), &self.br.mul(&o.bl)),
            br: add(&self.bl.mul(&o.tr), &self.br.mul(&o.br)),
        }
    }

    fn dagger(&self) -> Block4 {
        let dag = |m: &M2| M2([m.0[0].conj(), m.0[2].conj(), m.0[1].conj(), m.0[3].conj()]);
        Block4 {
            tl: dag(&self.tl),
            tr: dag(&self.bl),
            bl: dag(&self.tr),
            br: dag(&self.br),
        }
    }

    /// `(Rz(phi) (x) I) self (Rz(phi)^dag (x) I)` with `Rz = diag(e^{-i
    /// phi/2}, e^{i phi/2})`; only the off-diagonal blocks pick up phases.
    fn conjugate_rz(&self, phi: f64) -> Block4 {
        let a = Complex64::from_polar(1.0, -phi);
        let b = Complex64::from_polar(1.0, phi);
        let scale = |m: &M2, z: Complex64| M2([m.0[0] * z, m.0[1] * z, m.0[2] * z, m.0[3] * z]);
        Block4 {
            tl: self.tl,
            tr: scale(&self.tr, a),
            bl: scale(&self.bl, b),
            br: self.br,
        }
    }
}

fn spectral_norm_2x2(m: &M2) -> f64 {
    // largest singular value via the 2x2 Gram matrix
    let a = m.0[0];
    let b = m.0[1];
    let c = m.0[2];
    let d = m.0[3];
    let g00 = a.norm_sqr() + c.norm_sqr();
    let g11 = b.norm_sqr() + d.norm_sqr();
    let g01 = a.conj() * b + c.conj() * d;
    let tr = g00 + g11;
    let det = g00 * g11 - g01.norm_sqr();
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

// ---------------------------------------------------------------------------
// the solver

/// Solves for phases realizing `e^{i t sin(theta)}` with `N` taken from the
/// query planner.
pub fn solve_phases(t: f64, eps: f64, opts: &SolverOptions) -> Result<SolverReport> {
    if !(eps > 1e-12 && eps < 1.0) {
        return Err(Error::Range(format!("eps must be in (1e-12, 1), got {eps}")));
    }
    let n = plan_queries(t, eps)?.n;
    solve_phases_with_n(t, eps, n, opts)
}

/// Solves at a caller-chosen even sequence length.
pub fn solve_phases_with_n(t: f64, eps: f64, n: usize, opts: &SolverOptions) -> Result<SolverReport> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Contract(format!("N must be even and positive, got {n}")));
    }
    if !(eps > 1e-12 && eps < 1.0) {
        return Err(Error::Range(format!("eps must be in (1e-12, 1), got {eps}")));
    }
    let alphas = uniform_circle_grid(opts.grid.max(64));
    let target = sin_target(t, &alphas);
    let model = ScalarModel::uniform(
        opts.grid.max(64),
        std::f64::consts::FRAC_PI_2,
        -std::f64::consts::FRAC_PI_2,
    );
    let mut total_iterations = 0usize;
    let mut best: Option<(f64, Vec<f64>)> = None;

    let consider = |cand: (Vec<f64>, f64, usize), total: &mut usize, best: &mut Option<(f64, Vec<f64>)>| {
        *total += cand.2;
        let replace = match best {
            None => true,
            Some((err, inc)) => {
                cand.1 < *err - 1e-15
                    || ((cand.1 - *err).abs() <= 1e-15 && cand.0.as_slice() < inc.as_slice())
            }
        };
        if replace {
            *best = Some((cand.1, cand.0));
        }
    };

    // Strategy 1: continuation from the nearest library anchor.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let anchored = anchored_continuation(t, eps, n, &alphas, opts, &mut rng);
    consider(anchored, &mut total_iterations, &mut best);

    // Strategy 2: nearest anchor padded straight to length N.
    if !converged(&best, eps) {
        let mut seedvec = nearest_anchor(t)
            .map(|(_, p)| p.to_vec())
            .unwrap_or_else(|| identity_pairs(n, &mut rng));
        while seedvec.len() < n {
            let b: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            grow_by_identity_pair(&mut seedvec, b);
        }
        seedvec.truncate(n);
        if seedvec.len() == n {
            let cand = lm_polish(t, &seedvec, &alphas, &target, eps, opts.iterations, true);
            consider(cand, &mut total_iterations, &mut best);
        }
    }

    // Strategy 3: all zeros.
    if !converged(&best, eps) {
        let cand = lm_polish(t, &vec![0.0; n], &alphas, &target, eps, opts.iterations / 4, true);
        consider(cand, &mut total_iterations, &mut best);
    }

    // Strategy 4: random restarts, in deterministic parallel batches.
    if !converged(&best, eps) {
        let batch = rayon::current_num_threads().max(4);
        let mut done = 0usize;
        while done < opts.restarts && !converged(&best, eps) {
            let count = batch.min(opts.restarts - done);
            let seeds: Vec<Vec<f64>> = (0..count)
                .map(|_| {
                    (0..n)
                        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                        .collect()
                })
                .collect();
            let results: Vec<(Vec<f64>, f64, usize)> = seeds
                .par_iter()
                .map(|s| lm_polish(t, s, &alphas, &target, eps, opts.iterations / 4, true))
                .collect();
            for cand in results {
                consider(cand, &mut total_iterations, &mut best);
            }
            done += count;
        }
    }

    let (_, phases) = best.expect("at least one candidate was evaluated");
    let seq = PhaseSequence::qsp(phases, model.global_phase)?;
    let max_error = verify_phases(&seq, t, &model)?;
    Ok(SolverReport {
        n,
        t,
        eps,
        max_error,
        iterations: total_iterations,
        converged: max_error <= eps,
        seed: opts.seed,
        phases: seq,
    })
}

/// Branch responses `<+| prod e^{-i (alpha/2) sigma_{phi_k}} |+>` on a
/// uniform circle grid, for diagnostics and seeding experiments.
pub fn response_on_grid(phases: &[f64], grid: usize) -> Vec<Complex64> {
    responses(phases, &uniform_circle_grid(grid.max(4)), None)
}

/// The sin-target samples `e^{i t sin(alpha)}` on the same grid.
pub fn sin_target_on_grid(t: f64, grid: usize) -> Vec<Complex64> {
    sin_target(t, &uniform_circle_grid(grid.max(4)))
}

/// Polishes a starting phase vector against the sin target: least squares
/// then minimax reweighting. Returns the improved phases and their grid max
/// error.
pub fn polish_phases(
    t: f64,
    start: &[f64],
    eps: f64,
    grid: usize,
    max_outer: usize,
) -> (Vec<f64>, f64) {
    let alphas = uniform_circle_grid(grid.max(64));
    let target = sin_target(t, &alphas);
    let (phases, err, _) = lm_polish(t, start, &alphas, &target, eps, max_outer, true);
    (phases, err)
}

fn converged(best: &Option<(f64, Vec<f64>)>, eps: f64) -> bool {
    best.as_ref().map(|(e, _)| *e <= 0.98 * eps).unwrap_or(false)
}

fn uniform_circle_grid(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64)
        .collect()
}

fn nearest_anchor(t: f64) -> Option<(f64, &'static [f64])> {
    SEED_LIBRARY
        .iter()
        .min_by(|a, b| {
            let da = (a.0 - t).abs();
            let db = (b.0 - t).abs();
            da.partial_cmp(&db).unwrap()
        })
        .map(|&(at, ph)| (at, ph))
}

/// Walks the target time from the best anchor at or below `t` up to `t`,
/// growing the sequence with identity pairs as the planner demands and
/// polishing at every step.
fn anchored_continuation(
    t: f64,
    eps: f64,
    n_final: usize,
    alphas: &[f64],
    opts: &SolverOptions,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64, usize) {
    let below: Vec<&(f64, &[f64])> = SEED_LIBRARY
        .iter()
        .filter(|(at, p)| *at <= t + 1e-12 && p.len() <= n_final)
        .collect();
    let (anchor_t, anchor_p) = match below.iter().max_by(|a, b| a.0.partial_cmp(&b.0).unwrap()) {
        Some(&&(at, p)) => (at, p.to_vec()),
        None => (0.0, identity_pairs(2, rng)),
    };
    let mut phases = anchor_p;
    let mut tau = anchor_t;
    let mut iterations = 0usize;
    let step = opts.continuation_step.max(1e-3);
    loop {
        let last = (t - tau).abs() < 1e-12;
        let n_here = if last {
            n_final
        } else {
            plan_queries(tau, eps).map(|p| p.n).unwrap_or(2).min(n_final).max(2)
        };
        while phases.len() < n_here {
            let b: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            grow_by_identity_pair(&mut phases, b);
        }
        let target = sin_target(tau, alphas);
        let budget = if last { opts.iterations } else { opts.iterations.min(200) };
        let (next, _, used) = lm_polish(tau, &phases, alphas, &target, eps, budget, last);
        phases = next;
        iterations += used;
        if last {
            let target_final = sin_target(t, alphas);
            let resp = responses(&phases, alphas, None);
            let final_err = max_abs_residual(&resp, &target_final);
            return (phases, final_err, iterations);
        }
        tau = (tau + step).min(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::truncation_error;

    #[test]
    fn target_fourier_at_zero_time() {
        let (a, c) = target_fourier(0.0, 4).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-15);
        assert!(a[1..].iter().all(|x| x.abs() < 1e-15));
        assert!(c.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn target_fourier_truncation_bound() {
        for &(t, n) in &[(0.0707, 2usize), (1.0, 8), (3.0, 16)] {
            let (a, c) = target_fourier(t, n).unwrap();
            let bound = truncation_error(t, 1 + n / 2).unwrap();
            let mut worst = 0.0_f64;
            for j in 0..512 {
                let th = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / 512.0;
                let mut re = 0.0;
                let mut im = 0.0;
                for (k, (&ak, &ck)) in a.iter().zip(&c).enumerate() {
                    re += ak * (k as f64 * th).cos();
                    im += ck * (k as f64 * th).sin();
                }
                let diff = Complex64::new(re, im) - Complex64::from_polar(1.0, t * th.sin());
                worst = worst.max(diff.norm());
            }
            assert!(worst <= bound * (1.0 + 1e-9), "t={t} N={n}: {worst} > {bound}");
        }
    }

    #[test]
    fn target_fourier_parseval() {
        let (a, c) = target_fourier(2.0, 16).unwrap();
        let mut total = a[0] * a[0];
        for k in 1..a.len() {
            total += (a[k] * a[k] + c[k] * c[k]) / 2.0;
        }
        assert!(total <= 1.0 + 1e-12, "Parseval sum {total}");
    }

    #[test]
    fn identity_sequence_verifies_at_zero_time() {
        let seq = PhaseSequence::qsp(vec![0.0, -std::f64::consts::PI], -std::f64::consts::FRAC_PI_2)
            .unwrap();
        let err = verify_phases(&seq, 0.0, &ScalarModel::default()).unwrap();
        assert!(err < 1e-12, "err = {err:e}");
    }

    #[test]
    fn library_row_verifies_to_quoted_accuracy() {
        let seq = PhaseSequence::qsp(vec![-1.61, 1.67], -std::f64::consts::FRAC_PI_2).unwrap();
        let err = verify_phases(&seq, 0.0707, &ScalarModel::default()).unwrap();
        assert!(err <= 5.0 * 1e-2, "err = {err:e}");
        assert!(err > 1e-4); // coarse printed phases cannot be perfect
    }

    #[test]
    fn grid_refinement_is_stable() {
        let seq = PhaseSequence::qsp(
            vec![-0.6741, 2.5806, 0.7772, -2.4675],
            -std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        let m1 = ScalarModel::uniform(1024, std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2);
        let m2 = ScalarModel::uniform(2048, std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2);
        let e1 = verify_phases(&seq, 0.066948, &m1).unwrap();
        let e2 = verify_phases(&seq, 0.066948, &m2).unwrap();
        assert!((e1 - e2).abs() < 0.1 * e1.max(e2));
    }

    #[test]
    fn solve_tiny_time() {
        let opts = SolverOptions {
            grid: 256,
            ..Default::default()
        };
        let report = solve_phases(0.0707, 1e-2, &opts).unwrap();
        assert!(report.converged, "max_error {:e}", report.max_error);
        assert!(report.max_error <= 1e-2);
    }

    #[test]
    fn solve_at_fixed_length_matches_library_pairing() {
        let opts = SolverOptions {
            grid: 512,
            ..Default::default()
        };
        let report = solve_phases_with_n(0.311, 1e-2, 4, &opts).unwrap();
        assert!(report.converged, "max_error {:e}", report.max_error);
    }

    #[test]
    fn solve_rejects_bad_eps() {
        assert!(solve_phases(1.0, 0.0, &SolverOptions::default()).is_err());
        assert!(solve_phases(1.0, 1.5, &SolverOptions::default()).is_err());
    }

    #[test]
    fn solver_determinism() {
        let opts = SolverOptions {
            grid: 256,
            seed: 42,
            ..Default::default()
        };
        let a = solve_phases(0.5, 1e-2, &opts).unwrap();
        let b = solve_phases(0.5, 1e-2, &opts).unwrap();
        assert_eq!(a.phases.phases, b.phases.phases);
        assert_eq!(a.max_error, b.max_error);
    }
}
