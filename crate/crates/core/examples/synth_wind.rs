//! Writes synthetic wind-speed CSVs (m/s, one column per farm) drawn from a
//! fixed mixture of a calm and a windy regime.
//!
//! ```text
//! cargo run -p popf-core --example synth_wind -- <farms> <rows> <seed> > out.csv
//! ```

use nalgebra::DMatrix;
use popf_core::gmm::GaussianMixture;

fn regime(d: usize, sd: f64, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| {
        let r = if i == j { 1.0 } else { rho.powi((i as i32 - j as i32).abs()) };
        r * sd * sd
    })
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let d: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let rows: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1440);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2024);

    let calm: Vec<f64> = (0..d).map(|j| 7.0 + 0.5 * (j % 3) as f64).collect();
    let windy: Vec<f64> = (0..d).map(|j| 11.0 - 0.5 * (j % 2) as f64).collect();
    let model = GaussianMixture::new(vec![0.6, 0.4], vec![calm, windy], vec![regime(d, 3.0, 0.5), regime(d, 2.5, 0.4)])
        .expect("valid generating mixture");

    let data = model.sample_direct(rows, seed);
    let header: Vec<String> = (1..=d).map(|j| format!("farm{j}")).collect();
    println!("{}", header.join(","));
    for i in 0..rows {
        let row: Vec<String> = (0..d).map(|j| format!("{:.3}", data[(i, j)].max(0.0))).collect();
        println!("{}", row.join(","));
    }
}
