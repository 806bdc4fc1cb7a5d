//! Fixtures shared by the benchmarks.

use dpbandit_core::environment::{generate_instance, BanditInstance, InstanceParams};
use dpbandit_core::nalgebra::{DMatrix, DVector};
use dpbandit_core::rng::SimRng;
use dpbandit_core::sparse_regression::RegressionProblem;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// `t × d` uniform design with a 5-sparse response.
pub fn lasso_problem(d: usize, t: usize, lambda: f64) -> RegressionProblem {
    let mut r = rng(1);
    let z = DMatrix::from_fn(t, d, |_, _| r.random_range(-1.0..1.0));
    let theta = DVector::from_fn(d, |i, _| if i % (d / 5).max(1) == 0 { 0.7 } else { 0.0 });
    let y = &z * theta + DVector::from_fn(t, |_, _| r.random_range(-0.1..0.1));
    RegressionProblem::from_design(&z, &y, lambda, 1e9)
}

pub fn instance(d: usize, s0: usize) -> BanditInstance {
    generate_instance(&InstanceParams { d, s0, seed: 5, ..InstanceParams::default() }).expect("valid fixture")
}

pub fn contexts(d: usize, n: usize) -> Vec<(DVector<f64>, f64)> {
    let mut r = rng(2);
    (0..n)
        .map(|_| (DVector::from_fn(d, |_, _| r.random_range(-0.1..0.1)), r.random_range(-1.0..1.0)))
        .collect()
}
