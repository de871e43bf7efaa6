//! Shared fixtures for the benchmarks.

use carleman_core::{MonomialBasis, PolynomialOperator, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense random polynomial system of degree `p` with coefficients in
/// `[-1, 1]`, reproducible from `seed`.
pub fn random_system(n: usize, p: u32, seed: u64) -> PolynomialOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = MonomialBasis::generate(n, p).expect("small basis");
    let terms: Vec<Term> = (0..n)
        .flat_map(|i| basis.members().iter().map(move |b| (i, b.clone())))
        .map(|(row, exponents)| Term {
            row,
            exponents,
            coeff: rng.gen_range(-1.0..1.0),
        })
        .collect();
    PolynomialOperator::from_terms(n, p, &terms).expect("valid terms")
}

pub fn random_point(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
}
