//! Offline generator for the solver's seed ladder: one tightly converged
//! phase vector per even sequence length, walking the planner's threshold
//! curve. Writes Rust source for inclusion in the seed library.

use hamsim_core::*;
use rand::Rng;
use rand::SeedableRng;
use std::io::Write;
use std::time::Instant;

const GRID: usize = 768;

fn insert_pair(ph: &[f64], pos: usize, b: f64, detune: f64) -> Vec<f64> {
    let mut out = ph.to_vec();
    out.insert(pos, b);
    out.insert(pos + 1, b + std::f64::consts::PI + detune);
    out
}

/// residual-matched insertion: scan bases and positions, pick the pair whose
/// first-order direction best reduces the residual
fn matched_pad(ph: &[f64], t: f64) -> Vec<(usize, f64, f64)> {
    let resp = response_on_grid(ph, GRID);
    let target = sin_target_on_grid(t, GRID);
    let resid: Vec<_> = resp.iter().zip(&target).map(|(r, s)| r - s).collect();
    let h = 1e-4;
    let mut scored: Vec<(f64, usize, f64, f64)> = Vec::new();
    let positions: Vec<usize> = (0..=ph.len() / 2).map(|p| 2 * p).collect();
    for &pos in &positions {
        for kb in 0..8 {
            let b = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (kb as f64 + 0.5) / 8.0;
            let bumped = insert_pair(ph, pos, b, h);
            let resp2 = response_on_grid(&bumped, GRID);
            // direction g = (resp2 - resp)/h ; optimal step d* = -<g,resid>/<g,g>
            let mut gg = 0.0;
            let mut gr = 0.0;
            for (r2, (r, res)) in resp2.iter().zip(resp.iter().zip(&resid)) {
                let g = (r2 - r) / h;
                gg += g.norm_sqr();
                gr += (g.conj() * res).re;
            }
            if gg < 1e-18 {
                continue;
            }
            let dstar = -gr / gg;
            let gain = gr * gr / gg; // reduction of sum |resid|^2
            scored.push((gain, pos, b, dstar.clamp(-1.0, 1.0)));
        }
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    scored
        .into_iter()
        .take(6)
        .map(|(_, pos, b, d)| (pos, b, d))
        .collect()
}

fn join(
    ph: &[f64],
    t: f64,
    eps_goal: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
    budget_outer: usize,
) -> (Vec<f64>, f64) {
    let mut best: (f64, Vec<f64>) = (f64::INFINITY, ph.to_vec());
    // candidate insertions: residual-matched first, then random
    let mut candidates = matched_pad(ph, t);
    for _ in 0..6 {
        let pos = 2 * rng.gen_range(0..=(ph.len() / 2));
        let b = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        candidates.push((pos, b, rng.gen_range(-0.3..0.3)));
    }
    for (pos, b, d) in candidates {
        let seed = insert_pair(ph, pos, b, d);
        let (mut cur, mut err) = polish_phases(t, &seed, eps_goal, GRID, budget_outer);
        // basin hops on stall
        for _hop in 0..4 {
            if err <= eps_goal {
                break;
            }
            let mut kicked = cur.clone();
            for p in kicked.iter_mut() {
                *p += rng.gen_range(-0.06..0.06);
            }
            let (c2, e2) = polish_phases(t, &kicked, eps_goal, GRID, budget_outer);
            if e2 < err {
                cur = c2;
                err = e2;
            }
        }
        if err < best.0 {
            best = (err, cur);
        }
        if best.0 <= eps_goal {
            break;
        }
    }
    (best.1, best.0)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eps_curve: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1e-3);
    let tau_max: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(21.0);
    let out_path = format!("/root/notes/ladder_{:e}.rs", eps_curve);

    // start from the best library anchor below the curve start
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20260810);
    let mut rungs: Vec<(f64, Vec<f64>)> = Vec::new();

    // thresholds: for each even N, the largest tau with plan(tau, eps) = N,
    // found by bisection on plan_queries
    let plan_n = |tau: f64| plan_queries(tau, eps_curve).unwrap().n;

    let mut phases: Vec<f64> = vec![0.0, std::f64::consts::PI];
    let mut tau = 1e-6;
    let mut current_n = 2;
    let t_total = Instant::now();
    while tau < tau_max {
        // find the threshold tau for the next N jump
        let mut lo = tau;
        let mut hi = tau_max;
        if plan_n(hi) <= current_n {
            lo = hi;
        } else {
            while hi - lo > 1e-4 {
                let mid = 0.5 * (lo + hi);
                if plan_n(mid) <= current_n {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let tau_threshold = lo.min(tau_max);
        // walk tau at fixed N to the threshold
        let mut steps = ((tau_threshold - tau) / 0.4).ceil() as usize;
        if steps == 0 {
            steps = 1;
        }
        for s in 1..=steps {
            let tt = tau + (tau_threshold - tau) * s as f64 / steps as f64;
            let (p2, _e) = polish_phases(tt, &phases, eps_curve * 0.5, GRID, 400);
            phases = p2;
        }
        tau = tau_threshold;
        let (p2, err) = polish_phases(tau, &phases, eps_curve * 0.5, GRID, 1200);
        phases = p2;
        rungs.push((tau, phases.clone()));
        println!(
            "rung N={current_n:3} tau={tau:8.4}: err={err:.3e} ({:.0}s total)",
            t_total.elapsed().as_secs_f64()
        );
        if tau >= tau_max {
            break;
        }
        // pad to N+2 at this tau
        let t0 = Instant::now();
        let (p3, err3) = join(&phases, tau, eps_curve * 0.6, &mut rng, 1200);
        println!(
            "  join N={} -> {}: err={err3:.3e} ({:.0}s)",
            current_n,
            current_n + 2,
            t0.elapsed().as_secs_f64()
        );
        phases = p3;
        current_n += 2;
    }

    let mut f = std::fs::File::create(&out_path).unwrap();
    writeln!(f, "// ladder eps={eps_curve:e}").unwrap();
    for (t, p) in &rungs {
        let items: Vec<String> = p.iter().map(|x| format!("{x:.12}")).collect();
        writeln!(f, "    ({t:.6}, &[{}]),", items.join(", ")).unwrap();
    }
    println!("wrote {} rungs to {out_path}", rungs.len());
}
