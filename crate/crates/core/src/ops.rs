//! Discrete differential operators on the periodic grid.
//!
//! All first derivatives use the 4th-order central stencil
//! `(u_{i-2} − 8u_{i-1} + 8u_{i+1} − u_{i+2}) / (12h)` with periodic
//! wraparound. The stencil is antisymmetric, so summation by parts
//! `Σ (Du) v = −Σ u (Dv)` holds to rounding on the periodic grid, and
//! θ/φ stencils commute, so d∘d = 0 holds to rounding as well. The
//! σ-weighted divergence is defined as the negative quadrature adjoint of
//! the exterior derivative, which makes the integration-by-parts identity
//! exact for any positive weight.
//!
//! The Coulomb projection splits A = A_C + dχ with div_σ(A_C) = 0. For
//! constant σ the weighted Poisson problem is solved spectrally; the
//! stencil symbol vanishes on the Nyquist modes, which are therefore
//! excluded alongside the constant mode (the right-hand side has no
//! content there). For nonconstant σ a conjugate-gradient iteration
//! preconditioned by the constant-coefficient spectral inverse is used.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{same_grid, Field, GaugeFunction, OneForm, PeriodicGrid, RealField, ScalarField};
use crate::measure::MeasureDensity;
use crate::numeric::pairwise_sum;
use crate::{Error, Result};

/// Scalar types the stencils operate on (`f64` and `Complex64`).
pub trait StencilScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}
impl StencilScalar for f64 {}
impl StencilScalar for Complex64 {}

pub(crate) fn d_theta_slice<T: StencilScalar>(grid: PeriodicGrid, u: &[T]) -> Vec<T> {
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let inv12h = 1.0 / (12.0 * grid.h_theta());
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..nt {
        let im2 = (i + nt - 2) % nt * np;
        let im1 = (i + nt - 1) % nt * np;
        let ip1 = (i + 1) % nt * np;
        let ip2 = (i + 2) % nt * np;
        for j in 0..np {
            let v = (u[ip1 + j] - u[im1 + j]) * 8.0 - (u[ip2 + j] - u[im2 + j]);
            out.push(v * inv12h);
        }
    }
    out
}

pub(crate) fn d_phi_slice<T: StencilScalar>(grid: PeriodicGrid, u: &[T]) -> Vec<T> {
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let inv12h = 1.0 / (12.0 * grid.h_phi());
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..nt {
        let row = i * np;
        for j in 0..np {
            let jm2 = row + (j + np - 2) % np;
            let jm1 = row + (j + np - 1) % np;
            let jp1 = row + (j + 1) % np;
            let jp2 = row + (j + 2) % np;
            let v = (u[jp1] - u[jm1]) * 8.0 - (u[jp2] - u[jm2]);
            out.push(v * inv12h);
        }
    }
    out
}

/// Exterior derivative du = (∂_θ u, ∂_φ u) of a scalar field.
pub fn exterior_d<T: StencilScalar>(u: &Field<T>) -> OneForm<T> {
    let grid = u.grid();
    OneForm::from_components(grid, d_theta_slice(grid, u.data()), d_phi_slice(grid, u.data()))
        .expect("derivative preserves grid")
}

/// Covariant derivative D_Aψ = dψ − iAψ, componentwise at the nodes.
pub fn covariant_derivative(psi: &ScalarField, a: &OneForm<f64>) -> Result<OneForm<Complex64>> {
    same_grid(psi.grid(), a.grid())?;
    let grid = psi.grid();
    let mut d = exterior_d(psi);
    let minus_i = Complex64::new(0.0, -1.0);
    for idx in 0..grid.len() {
        let z = psi.data()[idx];
        d.theta[idx] += minus_i * a.theta[idx] * z;
        d.phi[idx] += minus_i * a.phi[idx] * z;
    }
    Ok(d)
}

/// The single component ∂_θ A_φ − ∂_φ A_θ of the 2-form dA.
pub fn curl(a: &OneForm<f64>) -> RealField {
    let grid = a.grid();
    let dt = d_theta_slice(grid, &a.phi);
    let dp = d_phi_slice(grid, &a.theta);
    let data = dt.iter().zip(dp.iter()).map(|(x, y)| x - y).collect();
    Field::from_vec(grid, data).expect("curl preserves grid")
}

/// Gauge transformation (ψ, A) ↦ (e^{iχ}ψ, A + dχ).
pub fn gauge_transform(
    psi: &ScalarField,
    a: &OneForm<f64>,
    chi: &GaugeFunction,
) -> Result<(ScalarField, OneForm<f64>)> {
    same_grid(psi.grid(), a.grid())?;
    same_grid(psi.grid(), chi.grid())?;
    let grid = psi.grid();
    let phase: Vec<Complex64> = chi
        .values()
        .data()
        .iter()
        .map(|&x| Complex64::from_polar(1.0, x))
        .collect();
    let psi_new = Field::from_vec(
        grid,
        psi.data().iter().zip(phase.iter()).map(|(&z, &p)| z * p).collect(),
    )?;
    let dchi = exterior_d(chi.values());
    let a_new = OneForm::from_components(
        grid,
        a.theta.iter().zip(dchi.theta.iter()).map(|(x, y)| x + y).collect(),
        a.phi.iter().zip(dchi.phi.iter()).map(|(x, y)| x + y).collect(),
    )?;
    Ok((psi_new, a_new))
}

/// σ-weighted divergence div_σ X = (1/σ)(∂_θ(σ X_θ) + ∂_φ(σ X_φ)): the
/// negative adjoint of the exterior derivative under the σ-weighted
/// midpoint quadrature.
pub fn weighted_divergence(x: &OneForm<f64>, density: &MeasureDensity) -> Result<RealField> {
    same_grid(density.grid(), x.grid())?;
    let grid = x.grid();
    let sigma = density.sigma().data();
    let st: Vec<f64> = x.theta.iter().zip(sigma).map(|(v, s)| v * s).collect();
    let sp: Vec<f64> = x.phi.iter().zip(sigma).map(|(v, s)| v * s).collect();
    let dt = d_theta_slice(grid, &st);
    let dp = d_phi_slice(grid, &sp);
    let data = dt
        .iter()
        .zip(dp.iter())
        .zip(sigma)
        .map(|((a, b), s)| (a + b) / s)
        .collect();
    Field::from_vec(grid, data)
}

// ----------------------------------------------------------------------
// Spectral machinery
// ----------------------------------------------------------------------

/// Fourier symbol s(m) of the 4th-order first-derivative stencil:
/// D e^{imθ} = i s(m) e^{imθ}. Exactly zero for m = 0 and the Nyquist mode.
fn stencil_symbol(mode: usize, n: usize, h: f64) -> f64 {
    let m = if mode <= n / 2 {
        mode as isize
    } else {
        mode as isize - n as isize
    };
    if m == 0 || 2 * m.unsigned_abs() == n {
        return 0.0;
    }
    let x = m as f64 * h;
    (8.0 * x.sin() - (2.0 * x).sin()) / (6.0 * h)
}

struct Spectral {
    grid: PeriodicGrid,
    fwd_theta: Arc<dyn Fft<f64>>,
    inv_theta: Arc<dyn Fft<f64>>,
    fwd_phi: Arc<dyn Fft<f64>>,
    inv_phi: Arc<dyn Fft<f64>>,
    /// −Δ symbol s_θ(k)² + s_φ(l)² per mode, zero on degenerate modes.
    neg_laplace_symbol: Vec<f64>,
}

impl Spectral {
    fn new(grid: PeriodicGrid) -> Self {
        let mut planner = FftPlanner::new();
        let (nt, np) = (grid.n_theta(), grid.n_phi());
        let mut symbol = Vec::with_capacity(grid.len());
        for k in 0..nt {
            let st = stencil_symbol(k, nt, grid.h_theta());
            for l in 0..np {
                let sp = stencil_symbol(l, np, grid.h_phi());
                symbol.push(st * st + sp * sp);
            }
        }
        Self {
            grid,
            fwd_theta: planner.plan_fft_forward(nt),
            inv_theta: planner.plan_fft_inverse(nt),
            fwd_phi: planner.plan_fft_forward(np),
            inv_phi: planner.plan_fft_inverse(np),
            neg_laplace_symbol: symbol,
        }
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let (nt, np) = (self.grid.n_theta(), self.grid.n_phi());
        let fft_phi = if inverse { &self.inv_phi } else { &self.fwd_phi };
        for row in data.chunks_mut(np) {
            fft_phi.process(row);
        }
        let fft_theta = if inverse { &self.inv_theta } else { &self.fwd_theta };
        let mut column = vec![Complex64::default(); nt];
        for j in 0..np {
            for i in 0..nt {
                column[i] = data[i * np + j];
            }
            fft_theta.process(&mut column);
            for i in 0..nt {
                data[i * np + j] = column[i];
            }
        }
    }

    /// Solve the discrete Poisson problem (−Δ)χ = f for the mean-zero χ,
    /// zeroing the degenerate (constant and Nyquist) modes.
    fn solve_neg_laplace(&self, f: &[f64]) -> Vec<f64> {
        let mut hat: Vec<Complex64> =
            f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut hat, false);
        for (v, &lam) in hat.iter_mut().zip(self.neg_laplace_symbol.iter()) {
            *v = if lam == 0.0 { Complex64::default() } else { *v / lam };
        }
        self.fft2(&mut hat, true);
        let scale = 1.0 / self.grid.len() as f64;
        hat.iter().map(|v| v.re * scale).collect()
    }
}

/// Result of the Coulomb projection A = A_C + dχ.
#[derive(Clone, Debug)]
pub struct CoulombProjection {
    /// Divergence-free representative; retains the harmonic (mean) part.
    pub a_coulomb: OneForm<f64>,
    /// Mean-zero gauge function with A − A_C = dχ.
    pub chi: GaugeFunction,
    /// Grid means of (A_θ, A_φ): the harmonic component, untouched by the
    /// projection.
    pub harmonic: [f64; 2],
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let products: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x * y).collect();
    pairwise_sum(&products)
}

const CG_MAX_ITERS: usize = 2000;

/// Decompose A = A_C + dχ with div_σ(A_C) = 0 (to 1e-10) and χ of zero
/// grid mean. The harmonic part (the component means) is reported and
/// preserved exactly.
pub fn coulomb_project(a: &OneForm<f64>, density: &MeasureDensity) -> Result<CoulombProjection> {
    same_grid(density.grid(), a.grid())?;
    let grid = a.grid();
    let spectral = Spectral::new(grid);
    let sigma = density.sigma().data();

    // weighted Poisson problem B χ = −D(σ A) with B = −D(σ D ·), which is
    // symmetric positive semidefinite in ℓ²
    let st: Vec<f64> = a.theta.iter().zip(sigma).map(|(v, s)| v * s).collect();
    let sp: Vec<f64> = a.phi.iter().zip(sigma).map(|(v, s)| v * s).collect();
    let rhs: Vec<f64> = {
        let dt = d_theta_slice(grid, &st);
        let dp = d_phi_slice(grid, &sp);
        dt.iter().zip(dp.iter()).map(|(x, y)| -(x + y)).collect()
    };

    let chi_data: Vec<f64> = if density.is_constant() {
        // B = σ(−Δ): the spectral inverse is exact.
        let s0 = sigma[0];
        let f: Vec<f64> = rhs.iter().map(|v| v / s0).collect();
        spectral.solve_neg_laplace(&f)
    } else {
        solve_weighted_poisson_cg(grid, sigma, &rhs, &spectral)?
    };

    let chi_field = RealField::from_vec(grid, chi_data)?;
    let dchi = exterior_d(&chi_field);
    let a_coulomb = OneForm::from_components(
        grid,
        a.theta.iter().zip(dchi.theta.iter()).map(|(x, y)| x - y).collect(),
        a.phi.iter().zip(dchi.phi.iter()).map(|(x, y)| x - y).collect(),
    )?;

    Ok(CoulombProjection {
        harmonic: a.harmonic_part(),
        chi: GaugeFunction::with_zero_mean(chi_field),
        a_coulomb,
    })
}

/// Conjugate gradient on B χ = rhs with B = −D(σ D ·), preconditioned by
/// the spectral inverse of mean(σ)·(−Δ).
fn solve_weighted_poisson_cg(
    grid: PeriodicGrid,
    sigma: &[f64],
    rhs: &[f64],
    spectral: &Spectral,
) -> Result<Vec<f64>> {
    let apply_b = |chi: &[f64]| -> Vec<f64> {
        let dt = d_theta_slice(grid, chi);
        let dp = d_phi_slice(grid, chi);
        let st: Vec<f64> = dt.iter().zip(sigma).map(|(v, s)| v * s).collect();
        let sp: Vec<f64> = dp.iter().zip(sigma).map(|(v, s)| v * s).collect();
        let ddt = d_theta_slice(grid, &st);
        let ddp = d_phi_slice(grid, &sp);
        ddt.iter().zip(ddp.iter()).map(|(x, y)| -(x + y)).collect()
    };
    let sigma_mean = pairwise_sum(sigma) / sigma.len() as f64;
    let precondition = |r: &[f64]| -> Vec<f64> {
        let scaled: Vec<f64> = r.iter().map(|v| v / sigma_mean).collect();
        spectral.solve_neg_laplace(&scaled)
    };

    // Div of the stencil image has no content on degenerate modes, and the
    // target divergence bound 1e-10 translates into an absolute ℓ² residual
    // tolerance through the quadrature weights.
    let sigma_min = sigma.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let tol = 1e-11 * sigma_min.sqrt() / grid.cell_area().sqrt();

    let mut x = vec![0.0; rhs.len()];
    let mut r = rhs.to_vec();
    let mut r_norm = dot(&r, &r).sqrt();
    if r_norm <= tol {
        return Ok(x);
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..CG_MAX_ITERS {
        let bp = apply_b(&p);
        let pbp = dot(&p, &bp);
        if pbp <= 0.0 || !pbp.is_finite() {
            return Err(Error::IterativeFailure {
                context: "weighted Poisson CG (indefinite step)",
                residual: r_norm,
                iterations: CG_MAX_ITERS,
            });
        }
        let alpha = rz / pbp;
        for ((xv, pv), (rv, bv)) in
            x.iter_mut().zip(p.iter()).zip(r.iter_mut().zip(bp.iter()))
        {
            *xv += alpha * pv;
            *rv -= alpha * bv;
        }
        r_norm = dot(&r, &r).sqrt();
        if r_norm <= tol {
            return Ok(x);
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for (pv, zv) in p.iter_mut().zip(z.iter()) {
            *pv = zv + beta * *pv;
        }
        rz = rz_new;
    }
    Err(Error::IterativeFailure {
        context: "weighted Poisson CG",
        residual: r_norm,
        iterations: CG_MAX_ITERS,
    })
}
