#![allow(dead_code)]

use latgas::coverings::{perfect_coverings, CoveringFamily};
use latgas::lattice::ModelSpec;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

pub fn model(name: &str) -> ModelSpec {
    ModelSpec::builtin(name).expect("built-in model")
}

pub fn family(m: &ModelSpec, bound: usize) -> CoveringFamily {
    perfect_coverings(m, bound).expect("perfect coverings")
}

pub fn diamonds() -> (ModelSpec, CoveringFamily) {
    let m = model("hyperdiamond-2d");
    let f = family(&m, 4);
    (m, f)
}

pub fn crosses() -> (ModelSpec, CoveringFamily) {
    let m = model("cross");
    let f = family(&m, 10);
    (m, f)
}

pub fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(d))
}

pub fn big(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

pub fn nums(v: &[u64]) -> Vec<BigUint> {
    v.iter().map(|&x| BigUint::from(x)).collect()
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    (0..k).fold(BigUint::from(1u32), |acc, i| acc * (n - i) / (i + 1))
}

/// Independent sets of size `k` on the `n`-cycle.
pub fn cycle_independent_sets(n: u64, k: u64) -> BigUint {
    if k == 0 {
        return BigUint::from(1u32);
    }
    if 2 * k > n {
        return BigUint::from(0u32);
    }
    binomial(n - k, k) * n / (n - k)
}
