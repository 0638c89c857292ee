//! Canonical volume densities of a Finsler norm and quadrature against them.
//!
//! In two dimensions both canonical measures reduce to areas of convex
//! bodies: the Busemann-Hausdorff density is π / area{F(x,·) < 1} and the
//! Holmes-Thompson density is area{F*(x,·) < 1} / π. For quadratic norms the
//! two coincide with the Riemannian volume √(a b).
//!
//! Areas are computed by the polar formula ½∫ r(ω)² dω, which for smooth
//! norms converges spectrally in the number of angles.

use std::f64::consts::{PI, TAU};

use crate::grid::{same_grid, PeriodicGrid, RealField};
use crate::norm::FinslerNorm;
use crate::numeric::pairwise_sum;
use crate::{Error, Result};

/// Which canonical density to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    BusemannHausdorff,
    HolmesThompson,
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::BusemannHausdorff => "busemann-hausdorff",
            MeasureKind::HolmesThompson => "holmes-thompson",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "busemann-hausdorff" | "bh" => Ok(MeasureKind::BusemannHausdorff),
            "holmes-thompson" | "ht" => Ok(MeasureKind::HolmesThompson),
            other => Err(Error::InvalidConfig(format!(
                "unknown measure kind '{other}' (expected busemann-hausdorff or holmes-thompson)"
            ))),
        }
    }
}

/// Number of angles in the polar area quadrature.
const AREA_QUADRATURE_ANGLES: usize = 4096;

/// Area of the primal unit ball {y : F(x,y) < 1}, or of the dual ball
/// {ξ : F*(x,ξ) < 1} when `dual` is set.
pub fn unit_ball_volume(norm: &FinslerNorm, theta: f64, phi: f64, dual: bool) -> Result<f64> {
    unit_ball_volume_with(norm, theta, phi, dual, AREA_QUADRATURE_ANGLES)
}

/// Same as [`unit_ball_volume`] with an explicit angle count (used by the
/// quadrature-convergence checks).
pub fn unit_ball_volume_with(
    norm: &FinslerNorm,
    theta: f64,
    phi: f64,
    dual: bool,
    n_angles: usize,
) -> Result<f64> {
    let mut r_sq = Vec::with_capacity(n_angles);
    for k in 0..n_angles {
        let w = k as f64 * TAU / n_angles as f64;
        let dir = [w.cos(), w.sin()];
        let f = if dual {
            norm.dual_norm_raw(theta, phi, dir)?
        } else {
            norm.eval_raw(theta, phi, dir)
        };
        r_sq.push(1.0 / (f * f));
    }
    // composite trapezoid on a periodic integrand = uniform rectangle rule
    Ok(0.5 * pairwise_sum(&r_sq) * TAU / n_angles as f64)
}

/// Busemann-Hausdorff density σ(x) = vol(B²) / vol(B_F(x)) = π / area.
pub fn bh_density(norm: &FinslerNorm, theta: f64, phi: f64) -> Result<f64> {
    Ok(PI / unit_ball_volume(norm, theta, phi, false)?)
}

/// Holmes-Thompson density σ(x) = vol(B*_F(x)) / vol(B²) = area* / π.
pub fn ht_density(norm: &FinslerNorm, theta: f64, phi: f64) -> Result<f64> {
    Ok(unit_ball_volume(norm, theta, phi, true)? / PI)
}

/// A canonical density σ(x) > 0 cached on a grid, with midpoint quadrature
/// against it.
#[derive(Clone, Debug)]
pub struct MeasureDensity {
    kind: MeasureKind,
    grid: PeriodicGrid,
    sigma: RealField,
}

impl MeasureDensity {
    /// Evaluate the density at every node. For position-independent norms a
    /// single area quadrature is reused across the grid.
    pub fn build(kind: MeasureKind, norm: &FinslerNorm, grid: PeriodicGrid) -> Result<Self> {
        let sigma = if norm.is_position_independent() {
            let value = Self::density_at(kind, norm, 0.0, 0.0)?;
            RealField::constant(grid, value)
        } else {
            let mut data = Vec::with_capacity(grid.len());
            for i in 0..grid.n_theta() {
                let theta = grid.theta(i);
                for j in 0..grid.n_phi() {
                    data.push(Self::density_at(kind, norm, theta, grid.phi(j))?);
                }
            }
            RealField::from_vec(grid, data)?
        };
        if sigma.min() <= 0.0 || !sigma.all_finite() {
            return Err(Error::InvalidNorm(
                "volume density must be positive and finite".into(),
            ));
        }
        Ok(Self { kind, grid, sigma })
    }

    /// Density of the flat Euclidean norm, σ ≡ 1: the classical reduction.
    pub fn flat(grid: PeriodicGrid) -> Self {
        Self {
            kind: MeasureKind::BusemannHausdorff,
            grid,
            sigma: RealField::constant(grid, 1.0),
        }
    }

    fn density_at(kind: MeasureKind, norm: &FinslerNorm, theta: f64, phi: f64) -> Result<f64> {
        match kind {
            MeasureKind::BusemannHausdorff => bh_density(norm, theta, phi),
            MeasureKind::HolmesThompson => ht_density(norm, theta, phi),
        }
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    /// Cached σ at a node.
    #[inline]
    pub fn sigma_at(&self, i: usize, j: usize) -> f64 {
        self.sigma.at(i, j)
    }

    /// The cached density as a field.
    pub fn sigma(&self) -> &RealField {
        &self.sigma
    }

    pub fn is_constant(&self) -> bool {
        let first = self.sigma.data()[0];
        self.sigma.data().iter().all(|&v| v == first)
    }

    /// Midpoint-rule integral ∫ f dμ = Σ f σ h_θ h_φ, with a deterministic
    /// pairwise reduction.
    pub fn integrate(&self, f: &RealField) -> Result<f64> {
        same_grid(self.grid, f.grid())?;
        let weighted: Vec<f64> = f
            .data()
            .iter()
            .zip(self.sigma.data().iter())
            .map(|(&fv, &sv)| fv * sv)
            .collect();
        Ok(pairwise_sum(&weighted) * self.grid.cell_area())
    }

    /// Total measure of the torus, ∫ 1 dμ.
    pub fn total_volume(&self) -> f64 {
        pairwise_sum(self.sigma.data()) * self.grid.cell_area()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Coefficient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad(a: f64, b: f64) -> FinslerNorm {
        FinslerNorm::quadratic(Coefficient::Constant(a), Coefficient::Constant(b)).unwrap()
    }

    fn randers_half() -> FinslerNorm {
        FinslerNorm::randers(
            Coefficient::Constant(1.0),
            Coefficient::Constant(1.0),
            [0.5, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn primal_ball_areas() {
        // ellipse with semi-axes 1/2 and 1
        let area = unit_ball_volume(&quad(4.0, 1.0), 0.0, 0.0, false).unwrap();
        assert!((area - PI / 2.0).abs() < 1e-10 * PI);
        // unit disk
        let area = unit_ball_volume(&quad(1.0, 1.0), 0.0, 0.0, false).unwrap();
        assert!((area - PI).abs() < 1e-12 * PI);
        // Randers ball is the translated ellipse of area π (1 − |β|²)^(−3/2)
        let area = unit_ball_volume(&randers_half(), 0.0, 0.0, false).unwrap();
        let exact = PI * (1.0 - 0.25f64).powf(-1.5);
        assert!(
            (area - exact).abs() < 1e-8 * exact,
            "randers area {area} vs {exact}"
        );
    }

    #[test]
    fn density_reference_values() {
        assert!((bh_density(&quad(4.0, 1.0), 0.0, 0.0).unwrap() - 2.0).abs() < 1e-10);
        assert!((bh_density(&quad(1.0, 1.0), 0.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((ht_density(&quad(4.0, 1.0), 0.0, 0.0).unwrap() - 2.0).abs() < 1e-8);
        assert!((ht_density(&quad(1.0, 1.0), 0.0, 0.0).unwrap() - 1.0).abs() < 1e-10);

        let bh = bh_density(&randers_half(), 0.0, 0.0).unwrap();
        assert!(((0.75f64).powf(1.5) - bh).abs() < 1e-8);
    }

    #[test]
    fn randers_separates_bh_from_ht() {
        // The dual ball of this Randers norm is the unit disk shifted by
        // (1/2, 0), so the Holmes-Thompson density is exactly 1 while the
        // Busemann-Hausdorff density is 0.75^{3/2} ≈ 0.6495.
        let ht = ht_density(&randers_half(), 0.0, 0.0).unwrap();
        assert!((ht - 1.0).abs() < 1e-8, "ht = {ht}");
        let bh = bh_density(&randers_half(), 0.0, 0.0).unwrap();
        assert!((ht - bh).abs() > 0.3);
    }

    #[test]
    fn bh_equals_ht_for_quadratic_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let a = rng.random_range(0.2..5.0);
            let b = rng.random_range(0.2..5.0);
            let norm = quad(a, b);
            let t = rng.random_range(0.0..TAU);
            let p = rng.random_range(0.0..TAU);
            let bh = bh_density(&norm, t, p).unwrap();
            let ht = ht_density(&norm, t, p).unwrap();
            let riem = (a * b).sqrt();
            assert!((bh - riem).abs() <= 1e-8 * riem, "bh {bh} vs √(ab) {riem}");
            assert!((ht - riem).abs() <= 1e-8 * riem, "ht {ht} vs √(ab) {riem}");
        }
    }

    #[test]
    fn bh_equals_ht_for_position_dependent_quadratic() {
        let norm = FinslerNorm::quadratic(
            Coefficient::Profile { base: 2.0, cos_theta: 0.7, cos_phi: 0.0 },
            Coefficient::Profile { base: 1.5, cos_theta: 0.0, cos_phi: 0.5 },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let t = rng.random_range(0.0..TAU);
            let p = rng.random_range(0.0..TAU);
            let (a, b) = norm.base_coefficients(t, p);
            let riem = (a * b).sqrt();
            assert!((bh_density(&norm, t, p).unwrap() - riem).abs() <= 1e-8 * riem);
            assert!((ht_density(&norm, t, p).unwrap() - riem).abs() <= 1e-8 * riem);
        }
    }

    #[test]
    fn quadrature_resolution_already_converged() {
        for norm in [quad(3.0, 0.5), quad(1.0, 1.0)] {
            let coarse = unit_ball_volume_with(&norm, 0.0, 0.0, false, 2048).unwrap();
            let fine = unit_ball_volume_with(&norm, 0.0, 0.0, false, 4096).unwrap();
            assert!(
                (coarse - fine).abs() <= 1e-9 * fine,
                "area quadrature not converged: {coarse} vs {fine}"
            );
        }
    }

    #[test]
    fn integrate_constant_and_analytic() {
        let grid = PeriodicGrid::square(64).unwrap();

        let density = MeasureDensity::build(
            MeasureKind::BusemannHausdorff,
            &quad(1.0, 1.0),
            grid,
        )
        .unwrap();
        let one = RealField::constant(grid, 1.0);
        let total = density.integrate(&one).unwrap();
        assert!((total - TAU * TAU).abs() < 1e-12 * TAU * TAU);

        let density2 = MeasureDensity::build(
            MeasureKind::BusemannHausdorff,
            &quad(2.0, 1.0),
            grid,
        )
        .unwrap();
        let total2 = density2.integrate(&one).unwrap();
        assert!((total2 - TAU * TAU * 2.0f64.sqrt()).abs() < 1e-8 * total2);

        // ∫ cos²θ dμ over the flat torus = 2π²
        let f = RealField::from_fn(grid, |t, _| t.cos() * t.cos());
        let integral = density.integrate(&f).unwrap();
        assert!((integral - 2.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn integrate_is_linear_and_monotone() {
        let grid = PeriodicGrid::square(32).unwrap();
        let density =
            MeasureDensity::build(MeasureKind::HolmesThompson, &randers_half(), grid).unwrap();
        let f = RealField::from_fn(grid, |t, p| (t.sin() * p.cos()).abs());
        let g = RealField::from_fn(grid, |t, p| t.cos() + 0.5 * p.sin());

        let int_f = density.integrate(&f).unwrap();
        let int_g = density.integrate(&g).unwrap();
        let combo = RealField::from_fn(grid, |t, p| {
            2.0 * (t.sin() * p.cos()).abs() - 3.0 * (t.cos() + 0.5 * p.sin())
        });
        let int_combo = density.integrate(&combo).unwrap();
        assert!((int_combo - (2.0 * int_f - 3.0 * int_g)).abs() < 1e-10);
        assert!(int_f >= 0.0);
    }

    #[test]
    fn integrate_rejects_grid_mismatch() {
        let grid = PeriodicGrid::square(16).unwrap();
        let other = PeriodicGrid::square(32).unwrap();
        let density =
            MeasureDensity::build(MeasureKind::BusemannHausdorff, &quad(1.0, 1.0), grid).unwrap();
        let f = RealField::constant(other, 1.0);
        assert!(density.integrate(&f).is_err());
    }

    #[test]
    fn euclidean_densities_are_unity() {
        let norm = FinslerNorm::euclidean();
        assert!((bh_density(&norm, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((ht_density(&norm, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-10);
    }
}
