//! Block encodings of Hamiltonians, qubitized iterates, signal-processing
//! sequences realizing operator functions, and query-count planning for
//! Hamiltonian time evolution — all on dense matrices small enough to check
//! against brute-force spectral oracles.

pub mod eig;
pub mod encoding;
pub mod error;
pub mod matrix;
pub mod normal;
pub mod planner;
pub mod qubitize;
pub mod signal;
pub mod solver;

pub use eig::{expm_herm, herm_eig, normal_eig, HermEig, NormalEig};
pub use encoding::{
    dilation_encode, lcu_encode, normal_spectrum, purify_encode, sparse_encode, spectrum,
    BlockEncoding, PauliDecomposition, PauliOp, PurifiedDensity, SignalSpectrum,
    SparseHamiltonianSpec,
};
pub use error::{Error, Result};
pub use matrix::{
    is_unitary, kron, operator_distance, spectral_norm, ComplexMatrix, StateVector,
    ToleranceConfig, DIM_CAP,
};
pub use normal::{normal_qubitize, IterateSign, NormalQubitization};
pub use planner::{
    bcks_queries, bessel_j, exact_trotter_error, plan_queries, qsp_gate_estimate,
    trotter_first_order_steps, trotter_suzuki_bound, truncation_error, upper_bound, BenchFormula,
    BenchRecord, JacobiAngerPlan, JacobiAngerTable,
};
pub use qubitize::{
    check_qubitized, hermitian_qubitize, su2_block, QubitizationResiduals, QubitizedIterate,
    SU2Block,
};
pub use signal::{
    abcd_scalar_sweep, check_achievable, chebyshev_block, extract_abcd, observable_sequence,
    qsp_project, qsp_sequence, PhaseSequence, PolyBasis, SequenceKind, SU2Decomposition,
};
pub use solver::{
    polish_phases, response_on_grid, sin_target_on_grid,
    solve_phases, solve_phases_with_n, target_fourier, verify_phases, ScalarModel, SolverOptions,
    SolverReport, SEED_LIBRARY,
};
