#![allow(dead_code)]

use ndarray::Array2;
use rkhm::{BlockMatrix, GaussianStream, GramMatrix, StructuredSample, C64};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn random_samples(rng: &mut GaussianStream, n: usize, m: usize, d: usize, scale: f64) -> Vec<StructuredSample> {
    (0..n)
        .map(|_| {
            let values: Vec<f64> = (0..m * d).map(|_| rng.next_normal(scale)).collect();
            let rows: Vec<Vec<f64>> = values.chunks(d).map(|r| r.to_vec()).collect();
            StructuredSample::from_rows(&rows).unwrap()
        })
        .collect()
}

pub fn random_complex(rng: &mut GaussianStream, rows: usize, cols: usize) -> Array2<C64> {
    Array2::from_shape_fn((rows, cols), |_| C64::new(rng.next_standard(), rng.next_standard()))
}

/// `A*A` for a random complex `A` with `rank` rows, as an n×n block Gram matrix.
pub fn random_gram(rng: &mut GaussianStream, n: usize, m: usize, rank: usize) -> GramMatrix {
    let a = random_complex(rng, rank, n * m);
    let g = a.t().mapv(|z| z.conj()).dot(&a);
    let g = (&g + &g.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
    GramMatrix::from_block_matrix(rkhm::unflatten(&g, m).unwrap()).unwrap()
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn op_norm_flat(a: &BlockMatrix) -> f64 {
    a.op_norm().unwrap()
}
