use nalgebra::DMatrix;

use super::CounterRng;

const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Latin hypercube block: `n` rows, `d` columns, one point per stratum
/// `[i/n, (i+1)/n)` in every column, with independent column permutations and
/// uniform within-stratum offsets.
pub fn lhs_block(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = CounterRng::new(seed);
    let mut out = DMatrix::zeros(n, d);
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        rng.shuffle(&mut perm);
        for i in 0..n {
            let u = (perm[i] as f64 + rng.next_f64()) / n as f64;
            out[(i, j)] = u.min(BELOW_ONE);
        }
    }
    out
}
