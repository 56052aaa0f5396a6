use hamsim_core::*;
use num_complex::Complex64;

fn main() {
    let tol = ToleranceConfig::default();
    let t = [
        (0usize, 0usize, Complex64::new(0.5, 0.0)),
        (1, 1, Complex64::new(-0.5, 0.0)),
    ];
    let s = SparseHamiltonianSpec::from_triplets(1, 1, &t, &tol).unwrap();
    let enc = sparse_encode(&s, &tol).unwrap();
    println!("alpha = {}", enc.alpha);
    let sig = enc.signal_operator();
    for i in 0..2 {
        for j in 0..2 {
            print!("{:+.6}{:+.6}i  ", sig[(i,j)].re, sig[(i,j)].im);
        }
        println!();
    }
    println!("u unitary defect: {:e}", {
        let g = enc.u.dagger().matmul(&enc.u).unwrap();
        g.max_abs_diff(&ComplexMatrix::identity(enc.u.rows()))
    });
}
