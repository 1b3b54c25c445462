#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use trpchain::chaining::FiniteMetricSpace;
use trpchain::{DenseTensor, Shape};

pub fn modes(max_modes: usize, max_extent: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_extent, 1..=max_modes)
}

pub fn entries(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-4.0..4.0f64, -4.0..4.0f64), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

pub fn tensor_with(rows: Vec<usize>, cols: Vec<usize>) -> impl Strategy<Value = DenseTensor> {
    let shape = Shape::new(rows, cols).unwrap();
    entries(shape.len()).prop_map(move |d| DenseTensor::new(shape.clone(), d).unwrap())
}

pub fn hermitian(modes: Vec<usize>) -> impl Strategy<Value = DenseTensor> {
    tensor_with(modes.clone(), modes).prop_map(|a| a.add(&a.conjugate_transpose()).unwrap().scale(0.5))
}

/// Points in the plane give a metric space that satisfies the triangle
/// inequality by construction.
pub fn planar_space(max_points: usize) -> impl Strategy<Value = FiniteMetricSpace> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..=max_points).prop_map(|pts| {
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|(x, y)| vec![x, y]).collect();
        FiniteMetricSpace::from_points("d", &pts).unwrap()
    })
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
