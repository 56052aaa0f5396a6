use hamsim_core::*;
use rand::Rng;
use rand::SeedableRng;
use std::time::Instant;

fn pad(ph: &mut Vec<f64>, n: usize, rng: &mut impl Rng, detune: f64) {
    while ph.len() < n {
        let b = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let at = ph.len() - 2;
        ph.insert(at, b);
        ph.insert(at + 1, b + std::f64::consts::PI + if detune > 0.0 { rng.gen_range(-detune..detune) } else { 0.0 });
    }
}

fn main() {
    let cases: &[(f64, f64, f64)] = &[
        (7.3957, 10.0, 1e-3),
        (10.1, 12.9, 1e-3),
        (10.1, 20.0, 1e-3),
        (7.3957, 9.0, 1e-4),
    ];
    for &(at, tau, eps) in cases {
        let nstar = plan_queries(tau, eps).unwrap().n;
        let anchor: Vec<f64> = SEED_LIBRARY
            .iter()
            .filter(|(t, _)| (*t - at).abs() < 1e-9)
            .map(|(_, p)| p.to_vec())
            .next()
            .unwrap();
        for &(noise, detune, anchor_first) in
            &[(0.1, 0.0, false), (0.3, 0.0, false), (0.0, 0.3, false), (0.1, 0.3, false), (0.1, 0.3, true)]
        {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            let mut wins = 0;
            let trials = 6;
            let t0 = Instant::now();
            let mut best_overall = f64::INFINITY;
            for _ in 0..trials {
                let mut ph = anchor.clone();
                pad(&mut ph, nstar, &mut rng, detune);
                for p in ph.iter_mut() {
                    *p += if noise > 0.0 { rng.gen_range(-noise..noise) } else { 0.0 };
                }
                if anchor_first {
                    let (better, _) = polish_phases(at, &ph, eps, 512, 300);
                    ph = better;
                }
                let (_ph2, err) = polish_phases(tau, &ph, eps, 512, 800);
                best_overall = best_overall.min(err);
                if err <= eps {
                    wins += 1;
                }
            }
            println!(
                "t={at}->tau={tau} eps={eps:.0e} dN={} noise={noise} detune={detune} anchor_first={anchor_first}: {wins}/{trials} best={best_overall:.3e} ({:.1}s)",
                nstar - anchor.len(),
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
