//! The discrete flat 2-torus and the fields living on it.
//!
//! Nodes are the uniform collocation points θ_i = i·h_θ, φ_j = j·h_φ with
//! h = 2π/N per direction, stored row-major with θ as the row index:
//! `idx = i·N_φ + j`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::numeric::wrap_angle;
use crate::{Error, Result};

/// Uniform periodic grid on [0, 2π)². Node counts must be even and at
/// least 8: the spectral Coulomb projection needs a well-defined Nyquist
/// split, and the 4th-order stencils need room.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicGrid {
    n_theta: usize,
    n_phi: usize,
}

impl PeriodicGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        for (name, n) in [("n_theta", n_theta), ("n_phi", n_phi)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be even and >= 8, got {n}"
                )));
            }
        }
        Ok(Self { n_theta, n_phi })
    }

    /// Square grid N×N.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h_theta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn h_phi(&self) -> f64 {
        TAU / self.n_phi as f64
    }

    /// Quadrature weight of one node (midpoint rule cell area).
    pub fn cell_area(&self) -> f64 {
        self.h_theta() * self.h_phi()
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.h_theta()
    }

    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.h_phi()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_theta && j < self.n_phi);
        i * self.n_phi + j
    }

    /// Node index with periodic wraparound of the offsets.
    #[inline]
    pub fn idx_wrapped(&self, i: isize, j: isize) -> usize {
        let ni = self.n_theta as isize;
        let nj = self.n_phi as isize;
        let iw = i.rem_euclid(ni) as usize;
        let jw = j.rem_euclid(nj) as usize;
        iw * self.n_phi + jw
    }

    /// Inverse of `idx`.
    pub fn node(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_phi, idx % self.n_phi)
    }

    /// Node closest to an arbitrary torus point.
    pub fn nearest_node(&self, theta: f64, phi: f64) -> (usize, usize) {
        let i = (wrap_angle(theta) / self.h_theta()).round() as usize % self.n_theta;
        let j = (wrap_angle(phi) / self.h_phi()).round() as usize % self.n_phi;
        (i, j)
    }
}

/// Check that two grids coincide, with the first one as the reference.
pub fn same_grid(expected: PeriodicGrid, found: PeriodicGrid) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::GridMismatch {
            expected: (expected.n_theta, expected.n_phi),
            found: (found.n_theta, found.n_phi),
        })
    }
}

/// A value per grid node. `Field<Complex64>` carries order parameters,
/// `Field<f64>` real densities and gauge functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: PeriodicGrid,
    data: Vec<T>,
}

pub type ScalarField = Field<Complex64>;
pub type RealField = Field<f64>;

impl<T: Copy> Field<T> {
    pub fn constant(grid: PeriodicGrid, value: T) -> Self {
        Self { grid, data: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(f64, f64) -> T) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.n_theta() {
            let theta = grid.theta(i);
            for j in 0..grid.n_phi() {
                data.push(f(theta, grid.phi(j)));
            }
        }
        Self { grid, data }
    }

    pub fn from_vec(grid: PeriodicGrid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "field data length {} does not match grid size {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn at_wrapped(&self, i: isize, j: isize) -> T {
        self.data[self.grid.idx_wrapped(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        let idx = self.grid.idx(i, j);
        self.data[idx] = value;
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Field<f64> {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn mean(&self) -> f64 {
        crate::numeric::pairwise_sum(&self.data) / self.data.len() as f64
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

impl Field<Complex64> {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn ones(grid: PeriodicGrid) -> Self {
        Self::constant(grid, Complex64::new(1.0, 0.0))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Pointwise modulus |ψ|.
    pub fn modulus(&self) -> RealField {
        self.map(|z| z.norm())
    }
}

/// A 1-form (or, for Legendre images, a vector field) with one θ and one φ
/// component per node. Real components carry gauge potentials; complex
/// components carry covariant derivatives of the order parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm<T> {
    grid: PeriodicGrid,
    pub theta: Vec<T>,
    pub phi: Vec<T>,
}

impl<T: Copy + Default> OneForm<T> {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, T::default())
    }
}

impl<T: Copy> OneForm<T> {
    pub fn constant(grid: PeriodicGrid, value: T) -> Self {
        Self {
            grid,
            theta: vec![value; grid.len()],
            phi: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(f64, f64) -> (T, T)) -> Self {
        let mut theta = Vec::with_capacity(grid.len());
        let mut phi = Vec::with_capacity(grid.len());
        for i in 0..grid.n_theta() {
            let t = grid.theta(i);
            for j in 0..grid.n_phi() {
                let (vt, vp) = f(t, grid.phi(j));
                theta.push(vt);
                phi.push(vp);
            }
        }
        Self { grid, theta, phi }
    }

    pub fn from_components(grid: PeriodicGrid, theta: Vec<T>, phi: Vec<T>) -> Result<Self> {
        if theta.len() != grid.len() || phi.len() != grid.len() {
            return Err(Error::InvalidConfig(
                "one-form component length does not match grid".into(),
            ));
        }
        Ok(Self { grid, theta, phi })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> (T, T) {
        let idx = self.grid.idx(i, j);
        (self.theta[idx], self.phi[idx])
    }
}

impl OneForm<f64> {
    pub fn all_finite(&self) -> bool {
        self.theta.iter().chain(self.phi.iter()).all(|v| v.is_finite())
    }

    /// Grid means of the two components: the harmonic part of the form on
    /// the torus.
    pub fn harmonic_part(&self) -> [f64; 2] {
        let n = self.grid.len() as f64;
        [
            crate::numeric::pairwise_sum(&self.theta) / n,
            crate::numeric::pairwise_sum(&self.phi) / n,
        ]
    }
}

/// A real gauge function χ. When obtained from the Coulomb projection it is
/// normalized to zero grid mean and flagged as such.
#[derive(Clone, Debug)]
pub struct GaugeFunction {
    values: RealField,
    mean_zero: bool,
}

impl GaugeFunction {
    pub fn new(values: RealField) -> Self {
        Self { values, mean_zero: false }
    }

    /// Subtract the grid mean and flag the result.
    pub fn with_zero_mean(mut values: RealField) -> Self {
        let mean = values.mean();
        for v in values.data_mut() {
            *v -= mean;
        }
        Self { values, mean_zero: true }
    }

    pub fn values(&self) -> &RealField {
        &self.values
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.values.grid()
    }
}
