mod common;

use common::{c, max_abs, random_complex};
use ndarray::Array2;
use ndarray_linalg::Inverse;
use proptest::prelude::*;
use rkhm::algebra::herm_eig;
use rkhm::{flatten, strict_upper_inverse, unflatten, Block, BlockMatrix, Error, GaussianStream, C64};

fn block_product_oracle(a: &BlockMatrix, b: &BlockMatrix) -> BlockMatrix {
    let m = a.block_dim();
    BlockMatrix::from_fn(a.n_rows(), b.n_cols(), m, |i, j| {
        (0..a.n_cols()).fold(Block::zeros(m), |acc, k| &acc + &a.block(i, k).dot(&b.block(k, j)))
    })
    .unwrap()
}

proptest! {
    #[test]
    fn flatten_is_a_homomorphism(seed in any::<u64>(), n in 1usize..5, m in 1usize..4) {
        let mut rng = GaussianStream::new(seed);
        let a = unflatten(&random_complex(&mut rng, n * m, n * m), m).unwrap();
        let b = unflatten(&random_complex(&mut rng, n * m, n * m), m).unwrap();
        let prod = a.dot(&b).unwrap();
        let oracle = block_product_oracle(&a, &b);
        prop_assert!(max_abs(&(flatten(&prod) - flatten(&oracle))) < 1e-12);
        let adj = flatten(&a.adjoint());
        let oracle_adj = flatten(&a).t().mapv(|z| z.conj());
        prop_assert_eq!(adj, oracle_adj);
        prop_assert_eq!(unflatten(&flatten(&a), m).unwrap(), a);
    }

    #[test]
    fn strict_upper_inverse_matches_dense_inverse(seed in any::<u64>(), n in 1usize..6, m in 1usize..4) {
        let mut rng = GaussianStream::new(seed);
        let full = unflatten(&random_complex(&mut rng, n * m, n * m), m).unwrap();
        let nil = full.strict_upper();
        let x = strict_upper_inverse(&nil).unwrap();
        let dense = (Array2::<C64>::eye(n * m) + flatten(&nil)).inv().unwrap();
        let scale = 1.0 + max_abs(&dense);
        prop_assert!(max_abs(&(flatten(&x) - dense)) <= 1e-10 * scale);
    }

    #[test]
    fn herm_eig_reconstructs(seed in any::<u64>(), m in 1usize..6) {
        let mut rng = GaussianStream::new(seed);
        let a = Block::from_array(random_complex(&mut rng, m, m)).unwrap();
        let h = &a + &a.adjoint();
        let e = herm_eig(&h).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((&e.reconstruct() - &h).max_abs() <= 1e-10 * (1.0 + h.op_norm()));
        let u = &e.vectors;
        prop_assert!((&u.adjoint().dot(u) - &Block::identity(m)).max_abs() < 1e-12);
    }
}

#[test]
fn flatten_examples() {
    let a = BlockMatrix::from_blocks(&[vec![Block::diag(&[c(1.0), c(2.0)]), Block::identity(2)]]).unwrap();
    let f = flatten(&a);
    assert_eq!(f.dim(), (2, 4));
    assert_eq!(f[[1, 1]], c(2.0));
    assert_eq!(f[[1, 3]], c(1.0));
    assert_eq!(f[[0, 3]], c(0.0));
}

#[test]
fn lower_blocks_are_rejected() {
    let mut n = BlockMatrix::zeros(2, 2, 1);
    n.set_block(1, 0, &Block::diag(&[c(1e-3)])).unwrap();
    assert!(matches!(strict_upper_inverse(&n), Err(Error::NotStrictlyUpper { .. })));
}

#[test]
fn non_hermitian_input_is_rejected() {
    let b = Block::from_fn(2, |(i, j)| c((i * 2 + j) as f64));
    assert!(matches!(herm_eig(&b), Err(Error::NonHermitianInput { .. })));
}
