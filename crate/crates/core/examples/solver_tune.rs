use hamsim_core::*;
use std::time::Instant;

fn main() {
    let model = ScalarModel::default();
    let rows: &[(usize, f64, f64)] = &[
        (2, 1e-2, 0.0707),
        (4, 1e-2, 0.311),
        (16, 1e-2, 3.78),
        (32, 1e-2, 10.1),
        (2, 1e-4, 0.0070711),
        (4, 1e-4, 0.066948),
        (8, 1e-4, 0.47498),
        (16, 1e-4, 2.2164),
        (32, 1e-4, 7.3957),
    ];

    println!("== library row verification ==");
    for &(n, eps, t) in rows {
        let anchor = SEED_LIBRARY
            .iter()
            .find(|(at, p)| (*at - t).abs() < 1e-12 && p.len() == n)
            .unwrap();
        let seq = PhaseSequence::qsp(anchor.1.to_vec(), -std::f64::consts::FRAC_PI_2).unwrap();
        let err = verify_phases(&seq, t, &model).unwrap();
        println!("N={n:2} eps={eps:.0e} t={t}: verify={err:.4e} (<=5eps: {})", err <= 5.0 * eps);
    }

    println!("\n== solve at table N ==");
    let opts = SolverOptions::default();
    for &(n, eps, t) in rows {
        let t0 = Instant::now();
        let rep = solve_phases_with_n(t, eps, n, &opts).unwrap();
        println!(
            "N={n:2} eps={eps:.0e} t={t}: err={:.4e} conv={} iters={} ({:.2}s)",
            rep.max_error,
            rep.converged,
            rep.iterations,
            t0.elapsed().as_secs_f64()
        );
    }

    println!("\n== planner-N solves over tau in [1,20], eps=1e-3 ==");
    for &tau in &[1.0, 3.7, 5.0, 8.33, 12.9, 16.6, 20.0] {
        let t0 = Instant::now();
        let rep = solve_phases(tau, 1e-3, &opts).unwrap();
        println!(
            "tau={tau:5}: N={} err={:.4e} conv={} iters={} ({:.2}s)",
            rep.n,
            rep.max_error,
            rep.converged,
            rep.iterations,
            t0.elapsed().as_secs_f64()
        );
    }

    println!("\n== eps=1e-4 solves ==");
    for &tau in &[1.0, 5.0, 9.0] {
        let t0 = Instant::now();
        let rep = solve_phases(tau, 1e-4, &opts).unwrap();
        println!(
            "tau={tau:5}: N={} err={:.4e} conv={} iters={} ({:.2}s)",
            rep.n,
            rep.max_error,
            rep.converged,
            rep.iterations,
            t0.elapsed().as_secs_f64()
        );
    }
}
