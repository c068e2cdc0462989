//! Seeded random test fixtures shared across module tests.

use rand::{Rng, SeedableRng};

use crate::tensor::{dagger, trace, C64, CMat, DensityMatrix};

pub(crate) fn random_matrix(dim: usize, seed: u64) -> CMat {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    CMat::from_shape_fn((dim, dim), |_| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

pub(crate) fn random_hermitian(dim: usize, seed: u64) -> CMat {
    let m = random_matrix(dim, seed);
    (&m + &dagger(&m)).mapv(|z| z * 0.5)
}

pub(crate) fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let m = random_matrix(dim, seed);
    let pos = m.dot(&dagger(&m));
    let tr = trace(&pos);
    DensityMatrix::new(pos.mapv(|z| z / tr)).unwrap()
}
