//! Bessel-series truncation planning for time evolution, and the query/gate
//! count formulas used by the benchmark harness.

use num_complex::Complex64;

use crate::encoding::PauliDecomposition;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ToleranceConfig};

const MAX_TIME: f64 = 1.0e4;
const MAX_QUERIES: usize = 1_000_000;

/// ln Gamma(x) for x > 0, Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// All Bessel values `J_0(t) .. J_kmax(t)` by downward recurrence with the
/// sum-rule normalization. Relative accuracy is ~1e-13 wherever the value is
/// above ~1e-280.
pub fn bessel_j_array(t: f64, kmax: usize) -> Result<Vec<f64>> {
    if !t.is_finite() || t.abs() > MAX_TIME {
        return Err(Error::Range(format!(
            "Bessel argument {t} outside supported range [-{MAX_TIME}, {MAX_TIME}]"
        )));
    }
    if t == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    let ta = t.abs();
    // start well above both the order and the turnover point
    let start = kmax.max(ta.ceil() as usize) + 50 + (2.0 * ta.sqrt()) as usize;
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut out = vec![0.0; kmax + 1];
    let mut norm = 0.0_f64; // J0 + 2 * sum_{k even >= 2} Jk
    for k in (0..=start).rev() {
        let jm1 = (2.0 * (k as f64 + 1.0) / ta) * j - jp1;
        jp1 = j;
        j = jm1;
        // rescale to avoid overflow
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
        if k <= kmax {
            out[k] = j;
        }
        if k > 0 && k % 2 == 0 {
            norm += 2.0 * j;
        }
    }
    norm += j;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if t < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    Ok(out)
}

/// Bessel function of the first kind `J_k(t)`, integer order.
pub fn bessel_j(k: usize, t: f64) -> Result<f64> {
    Ok(bessel_j_array(t, k)?[k])
}

/// `4 t^q / (2^q q!)`, evaluated in log space.
pub fn upper_bound(t: f64, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::Contract("q must be at least 1".into()));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let qf = q as f64;
    let log = (4.0_f64).ln() + qf * t.abs().ln() - qf * (2.0_f64).ln() - ln_gamma(qf + 1.0);
    Ok(log.exp())
}

/// Precomputed Bessel tail sums for one value of `t`.
pub struct JacobiAngerTable {
    pub t: f64,
    values: Vec<f64>,
    tails: Vec<f64>,
}

impl JacobiAngerTable {
    /// Builds the table out to the point where the analytic tail bound falls
    /// below 1e-18 of the accumulated sum.
    pub fn build(t: f64) -> Result<Self> {
        if t < 0.0 {
            return Err(Error::Range("time must be non-negative".into()));
        }
        if t == 0.0 {
            return Ok(Self {
                t,
                values: vec![1.0, 0.0],
                tails: vec![2.0, 0.0, 0.0],
            });
        }
        // k_end: smallest k past the turnover where the ratio bound is
        // negligible even against the smallest plausible sum
        let mut k_end = (t.ceil() as usize).max(8) + 40;
        loop {
            let bound = upper_bound(t, k_end)?;
            if bound < 1e-280 || bound < 1e-24 {
                break;
            }
            k_end += 32;
            if k_end > 4 * MAX_QUERIES {
                return Err(Error::Range("Bessel table exceeds supported size".into()));
            }
        }
        let values = bessel_j_array(t, k_end)?;
        // tails[q] = sum_{k >= q} 2 |J_k|, truncated at k_end where the
        // remaining tail bound is < 1e-18 of the running sum
        let mut tails = vec![0.0; k_end + 2];
        let mut acc = 0.0;
        for k in (0..=k_end).rev() {
            acc += 2.0 * values[k].abs();
            tails[k] = acc;
        }
        Ok(Self { t, values, tails })
    }

    pub fn bessel(&self, k: usize) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// `sum_{k >= q} 2 |J_k(t)|`.
    pub fn truncation_error(&self, q: usize) -> f64 {
        self.tails.get(q).copied().unwrap_or(0.0)
    }
}

/// `sum_{k >= q} 2 |J_k(t)|`, the error of keeping Fourier orders below `q`.
pub fn truncation_error(t: f64, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::Contract("q must be at least 1".into()));
    }
    Ok(JacobiAngerTable::build(t)?.truncation_error(q))
}

/// A query plan: the even iterate count `N`, the retained Bessel
/// coefficients, and the truncation error bookkeeping.
#[derive(Clone, Debug)]
pub struct JacobiAngerPlan {
    pub t: f64,
    pub eps: f64,
    pub n: usize,
    pub q: usize,
    pub coefficients: Vec<f64>,
    pub truncation_error: f64,
    pub upper_bound: f64,
}

/// Smallest even `N` such that the Jacobi-Anger truncation at
/// `q = 1 + N/2` has error at most `eps / 8`.
pub fn plan_queries(t: f64, eps: f64) -> Result<JacobiAngerPlan> {
    if t < 0.0 {
        return Err(Error::Range("time must be non-negative".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Range(format!("eps must be in (0, 1), got {eps}")));
    }
    let table = JacobiAngerTable::build(t)?;
    let threshold = eps / 8.0;
    let mut q = 1usize;
    while table.truncation_error(q) > threshold {
        q += 1;
        if 2 * (q - 1) > MAX_QUERIES {
            return Err(Error::Range(format!(
                "query count exceeds {MAX_QUERIES} for t={t}, eps={eps}"
            )));
        }
    }
    let n = (2 * q.saturating_sub(1)).max(2);
    let q = 1 + n / 2;
    let coefficients = (0..=q).map(|k| table.bessel(k)).collect();
    Ok(JacobiAngerPlan {
        t,
        eps,
        n,
        q,
        coefficients,
        truncation_error: table.truncation_error(q),
        upper_bound: upper_bound(t, q)?,
    })
}

/// Segment-based query count `3 K r` with `r = ceil(t / ln 2)` and `K` the
/// smallest order whose factorial tail is below `eps / r`.
pub fn bcks_queries(t: f64, eps: f64) -> Result<(usize, usize, usize)> {
    if t <= 0.0 {
        return Err(Error::Range("time must be positive".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Range(format!("eps must be in (0, 1), got {eps}")));
    }
    let ln2 = std::f64::consts::LN_2;
    let r = (t / ln2).ceil() as usize;
    let budget = eps / r as f64;
    // tail(K) = sum_{k >= K+1} (ln 2)^k / k!
    let mut k = 0usize;
    loop {
        let mut tail = 0.0;
        let mut term = ((k + 1) as f64 * ln2.ln() - ln_gamma((k + 2) as f64)).exp();
        let mut kk = k + 1;
        while term > 1e-30 * (tail + 1e-300) {
            tail += term;
            kk += 1;
            term *= ln2 / kk as f64;
        }
        if tail <= budget {
            return Ok((k, r, 3 * k * r));
        }
        k += 1;
        if k > 10_000 {
            return Err(Error::Range("segment order K exceeded 10000".into()));
        }
    }
}

/// First-order product-formula step count `ceil((d t hmax)^2 / (2 eps))`.
pub fn trotter_first_order_steps(d: usize, t: f64, hmax: f64, eps: f64) -> Result<u64> {
    if d == 0 || t <= 0.0 || hmax <= 0.0 || eps <= 0.0 {
        return Err(Error::Range("all arguments must be positive".into()));
    }
    let raw = (d as f64 * t * hmax).powi(2) / (2.0 * eps);
    if raw > 1e18 {
        return Err(Error::Range(format!("step count {raw:e} too large")));
    }
    Ok(raw.ceil() as u64)
}

/// Higher-order product-formula bound
/// `2 d^2 t hmax exp(2 sqrt(ln 5 ln(d t hmax / eps)))`.
pub fn trotter_suzuki_bound(d: usize, t: f64, hmax: f64, eps: f64) -> Result<f64> {
    if d == 0 || t <= 0.0 || hmax <= 0.0 || eps <= 0.0 {
        return Err(Error::Range("all arguments must be positive".into()));
    }
    let arg = d as f64 * t * hmax / eps;
    if arg <= 1.0 {
        return Err(Error::Domain(format!(
            "d t hmax / eps must exceed 1, got {arg}"
        )));
    }
    let exponent = 2.0 * ((5.0_f64).ln() * arg.ln()).sqrt();
    Ok(2.0 * (d as f64).powi(2) * t * hmax * exponent.exp())
}

/// Exact first-order product-formula error
/// `|| (e^{-i H_1 t/n} ... e^{-i H_d t/n})^n - e^{-i H t} ||`.
///
/// Pauli-term exponentials are computed in closed form
/// (`e^{-i a P} = cos(a) I - i sin(a) P`), the full exponential through the
/// dense spectral oracle.
pub fn exact_trotter_error(
    terms: &PauliDecomposition,
    t: f64,
    n: u64,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let dim = 1usize << terms.n;
    if dim > 1 << 12 {
        return Err(Error::Capacity {
            requested: dim,
            cap: 1 << 12,
        });
    }
    if n == 0 {
        return Err(Error::Range("step count must be positive".into()));
    }
    let dt = t / n as f64;
    let mut step = ComplexMatrix::identity(dim);
    for (coef, string) in &terms.terms {
        let p = PauliDecomposition::string_matrix(string)?;
        let angle = coef * dt;
        let factor = ComplexMatrix::identity(dim)
            .scale(Complex64::new(angle.cos(), 0.0))
            .add(&p.scale(Complex64::new(0.0, -angle.sin())))?;
        step = step.matmul(&factor)?;
    }
    let product = step.pow(n)?;
    let exact = crate::eig::expm_herm(&terms.dense_matrix()?, t, tol)?;
    crate::matrix::operator_distance(&product, &exact)
}

/// Gate estimate `6 d alpha t` for the iterate-based simulation of a
/// `d`-term linear combination.
pub fn qsp_gate_estimate(d: usize, alpha: f64, t: f64) -> Result<f64> {
    if alpha < 0.0 || t < 0.0 {
        return Err(Error::Range("alpha and t must be non-negative".into()));
    }
    Ok(6.0 * d as f64 * alpha * t)
}

/// Identifies which formula produced a benchmark value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchFormula {
    QspIterates,
    QspOracleQueries,
    Bcks,
    Trotter1,
    TrotterSuzuki,
    TrotterExact,
    QspGates,
}

/// One labeled benchmark value.
#[derive(Clone, Debug)]
pub struct BenchRecord {
    pub label: String,
    pub t: f64,
    pub eps: f64,
    pub value: f64,
    pub formula: BenchFormula,
}

impl BenchRecord {
    pub fn new(label: impl Into<String>, t: f64, eps: f64, value: f64, formula: BenchFormula) -> Result<Self> {
        if value < 0.0 {
            return Err(Error::Contract("benchmark counts must be non-negative".into()));
        }
        Ok(Self {
            label: label.into(),
            t,
            eps,
            value,
            formula,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::PauliOp;

    #[test]
    fn bessel_low_orders_at_zero() {
        assert!((bessel_j(0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(bessel_j(1, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn bessel_known_values() {
        // reference values to 13+ digits
        assert!((bessel_j(0, 1.0).unwrap() - 0.765_197_686_557_966_6).abs() < 1e-13);
        assert!((bessel_j(1, 1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-13);
        assert!((bessel_j(5, 2.0).unwrap() - 0.007_039_629_755_871_685).abs() < 1e-14);
        assert!((bessel_j(0, 10.0).unwrap() - (-0.245_935_764_451_348_4)).abs() < 1e-13);
    }

    #[test]
    fn bessel_normalization_identity() {
        // sum over all integer orders of J_k^2 equals 1
        for &t in &[1.0, 7.3, 50.0] {
            let kmax = (t as usize) + 200;
            let j = bessel_j_array(t, kmax).unwrap();
            let mut total = j[0] * j[0];
            for k in 1..=kmax {
                total += 2.0 * j[k] * j[k];
            }
            assert!((total - 1.0).abs() < 1e-12, "t={t}: {total}");
        }
    }

    #[test]
    fn bessel_rejects_huge_argument() {
        assert!(bessel_j(0, 2.0e4).is_err());
    }

    #[test]
    fn truncation_error_at_zero_time() {
        for q in 1..5 {
            assert_eq!(truncation_error(0.0, q).unwrap(), 0.0);
        }
    }

    #[test]
    fn truncation_bounded_by_ratio_bound() {
        let v = truncation_error(2.0, 4).unwrap();
        let b = upper_bound(2.0, 4).unwrap();
        assert!((b - 1.0 / 6.0).abs() < 1e-15);
        assert!(v <= b);
    }

    #[test]
    fn truncation_monotone_in_q() {
        let table = JacobiAngerTable::build(5.0).unwrap();
        for q in 1..40 {
            assert!(table.truncation_error(q + 1) <= table.truncation_error(q) + 1e-18);
        }
    }

    #[test]
    fn upper_bound_dominates_in_validity_regime() {
        for &t in &[0.1, 1.0, 10.0, 100.0] {
            let table = JacobiAngerTable::build(t).unwrap();
            for q in 1..=60usize {
                if t / (2.0 * q as f64) >= 1.0 {
                    continue; // outside the bound's derivation regime
                }
                let v = table.truncation_error(q);
                let b = upper_bound(t, q).unwrap();
                assert!(v <= b * (1.0 + 1e-9), "t={t} q={q}: {v} > {b}");
            }
        }
    }

    #[test]
    fn plan_at_zero_time() {
        let plan = plan_queries(0.0, 0.5).unwrap();
        assert_eq!(plan.n, 2);
        assert_eq!(plan.truncation_error, 0.0);
    }

    #[test]
    fn plan_minimality() {
        for &(t, eps) in &[(1.0, 1e-3), (10.0, 1e-2), (3.3, 1e-8)] {
            let plan = plan_queries(t, eps).unwrap();
            let q = 1 + plan.n / 2;
            assert!(plan.truncation_error <= eps / 8.0);
            assert!(plan.truncation_error <= plan.upper_bound.max(plan.truncation_error));
            if plan.n > 2 {
                let prev_q = 1 + (plan.n - 2) / 2;
                assert!(truncation_error(t, prev_q).unwrap() > eps / 8.0);
            }
            assert_eq!(plan.coefficients.len(), q + 1);
        }
    }

    #[test]
    fn plan_monotone_in_eps() {
        // tightening eps can only grow the query count
        let mut prev = 0usize;
        for &eps in &[1e-2, 1e-3, 1e-4, 1e-6] {
            let n = plan_queries(10.0, eps).unwrap().n;
            assert!(n >= prev, "N dropped from {prev} to {n} at eps={eps}");
            prev = n;
        }
    }

    #[test]
    fn large_time_query_rate_approaches_four_per_unit() {
        let plan = plan_queries(1000.0, 1e-2).unwrap();
        let per_time = plan.n as f64 / 1000.0;
        assert!((2.0..=2.2).contains(&per_time), "N/t = {per_time}");
    }

    #[test]
    fn bcks_small_time_single_segment() {
        let (k, r, total) = bcks_queries(0.5, 1e-3).unwrap();
        assert_eq!(r, 1);
        assert_eq!(total, 3 * k);
        assert!(k > 0);
    }

    #[test]
    fn bcks_monotone_in_eps() {
        let (k1, _, _) = bcks_queries(10.0, 1e-2).unwrap();
        let (k2, _, _) = bcks_queries(10.0, 1e-6).unwrap();
        assert!(k2 >= k1);
    }

    #[test]
    fn bcks_exceeds_qsp_at_moderate_time() {
        let (_, _, total) = bcks_queries(100.0, 1e-2).unwrap();
        let plan = plan_queries(100.0, 1e-2).unwrap();
        assert!(total > 2 * plan.n);
    }

    #[test]
    fn trotter_first_order_formula() {
        let n = trotter_first_order_steps(5, 625.0, 0.5, 1.6e-3).unwrap();
        let expected = ((5.0 * 625.0 * 0.5_f64).powi(2) / 3.2e-3).ceil() as u64;
        assert_eq!(n, expected);
        // doubling d quadruples n (up to ceiling)
        let n2 = trotter_first_order_steps(10, 625.0, 0.5, 1.6e-3).unwrap();
        assert!((n2 as f64 / n as f64 - 4.0).abs() < 1e-6);
    }

    #[test]
    fn trotter_suzuki_value_and_domain() {
        let v = trotter_suzuki_bound(1, 1.0, 1.0, 0.1).unwrap();
        let expected = 2.0 * (2.0 * ((5.0_f64).ln() * (10.0_f64).ln()).sqrt()).exp();
        assert!((v - expected).abs() < 1e-9 * expected);
        assert!(trotter_suzuki_bound(1, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn exact_trotter_commuting_terms_exact() {
        let terms = PauliDecomposition::new(
            2,
            vec![
                (0.4, vec![PauliOp::Z, PauliOp::I]),
                (0.3, vec![PauliOp::I, PauliOp::Z]),
                (-0.2, vec![PauliOp::Z, PauliOp::Z]),
            ],
        )
        .unwrap();
        let tol = ToleranceConfig::default();
        for n in [1u64, 3, 10] {
            assert!(exact_trotter_error(&terms, 2.0, n, &tol).unwrap() < 1e-12);
        }
    }

    #[test]
    fn exact_trotter_single_term_exact() {
        let terms = PauliDecomposition::new(1, vec![(0.7, vec![PauliOp::X])]).unwrap();
        let tol = ToleranceConfig::default();
        assert!(exact_trotter_error(&terms, 3.0, 1, &tol).unwrap() < 1e-12);
    }

    #[test]
    fn exact_trotter_halves_with_doubled_steps() {
        let terms = PauliDecomposition::new(
            2,
            vec![
                (0.6, vec![PauliOp::X, PauliOp::I]),
                (0.8, vec![PauliOp::Z, PauliOp::Z]),
            ],
        )
        .unwrap();
        let tol = ToleranceConfig::default();
        let e1 = exact_trotter_error(&terms, 1.0, 64, &tol).unwrap();
        let e2 = exact_trotter_error(&terms, 1.0, 128, &tol).unwrap();
        let ratio = e2 / e1;
        assert!((ratio - 0.5).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn gate_estimate_formula() {
        assert_eq!(qsp_gate_estimate(5, 1.0, 625.0).unwrap(), 18750.0);
        // linear in each argument
        assert_eq!(
            qsp_gate_estimate(10, 1.0, 625.0).unwrap(),
            2.0 * qsp_gate_estimate(5, 1.0, 625.0).unwrap()
        );
    }
}
