use super::matrix::{SpdMatrix, SymMatrix};
use super::random::{random_spd_with_cond, random_symmetric, trial_rng};

pub fn random_sym(n: usize, seed: u64) -> SymMatrix {
    random_symmetric(n, &mut trial_rng(0xC0FFEE, seed))
}

pub fn random_spd(n: usize, cond: f64, seed: u64) -> SpdMatrix {
    random_spd_with_cond(n, cond, &mut trial_rng(0xBEEF, seed))
}
