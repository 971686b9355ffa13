#![allow(dead_code)]

use std::sync::Arc;

use nsens::prob::{FiniteLaw, ProductSpace, TabulatedFunction};
use proptest::prelude::*;

/// Laws on `k` atoms `0, 1, …` with weights bounded away from zero.
pub fn arb_law(max_k: usize) -> impl Strategy<Value = FiniteLaw> {
    prop::collection::vec(0.05f64..1.0, 2..=max_k).prop_map(|w| {
        let total: f64 = w.iter().sum();
        FiniteLaw::new((0..w.len()).map(|a| a as f64).collect(), w.iter().map(|x| x / total).collect()).unwrap()
    })
}

pub fn arb_space(max_n: usize, max_k: usize) -> impl Strategy<Value = Arc<ProductSpace>> {
    prop::collection::vec(arb_law(max_k), 1..=max_n).prop_map(|laws| Arc::new(ProductSpace::new(laws).unwrap()))
}

pub fn arb_function_on(space: Arc<ProductSpace>) -> impl Strategy<Value = TabulatedFunction> {
    let len = space.check_enumerable().unwrap();
    prop::collection::vec(-2.0f64..2.0, len).prop_map(move |v| TabulatedFunction::from_values(space.clone(), v).unwrap())
}

/// Real functions on mixed-support spaces.
pub fn arb_function(max_n: usize, max_k: usize) -> impl Strategy<Value = TabulatedFunction> {
    arb_space(max_n, max_k).prop_flat_map(arb_function_on)
}

/// Two real functions on the same space.
pub fn arb_pair(max_n: usize, max_k: usize) -> impl Strategy<Value = (TabulatedFunction, TabulatedFunction)> {
    arb_space(max_n, max_k).prop_flat_map(|s| (arb_function_on(s.clone()), arb_function_on(s)))
}

/// Binary coordinates with arbitrary biases.
pub fn arb_binary_space(max_n: usize) -> impl Strategy<Value = Arc<ProductSpace>> {
    prop::collection::vec(0.1f64..0.9, 1..=max_n).prop_map(|ps| {
        Arc::new(ProductSpace::new(ps.into_iter().map(|p| FiniteLaw::binary(-1.0, 1.0, p).unwrap()).collect()).unwrap())
    })
}

/// 0/1-valued functions of binary coordinates.
pub fn arb_boolean_on(space: Arc<ProductSpace>) -> impl Strategy<Value = TabulatedFunction> {
    let len = space.check_enumerable().unwrap();
    prop::collection::vec(any::<bool>(), len)
        .prop_map(move |v| TabulatedFunction::from_values(space.clone(), v.into_iter().map(|b| b as u8 as f64).collect()).unwrap())
}

pub fn rademacher_cube(n: usize) -> Arc<ProductSpace> {
    Arc::new(ProductSpace::iid(FiniteLaw::rademacher(), n).unwrap())
}

/// Boolean functions on `n` Rademacher signs, `n` chosen in `1..=max_n`.
pub fn arb_cube_boolean(max_n: usize) -> impl Strategy<Value = TabulatedFunction> {
    (1..=max_n).prop_flat_map(|n| arb_boolean_on(rademacher_cube(n)))
}

/// Real functions on `n` Rademacher signs.
pub fn arb_cube_function(max_n: usize) -> impl Strategy<Value = TabulatedFunction> {
    (1..=max_n).prop_flat_map(|n| arb_function_on(rademacher_cube(n)))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
