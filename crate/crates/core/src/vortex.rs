//! Vortex detection, winding numbers, the discrete Jacobian density, and
//! length functionals of polyline currents.
//!
//! Plaquette winding numbers are sums of principal-value phase differences
//! around the four edges of a grid cell; they are exact integers by
//! construction. Nonzero plaquettes are clustered by 8-connectivity into
//! vortices with summed degrees and intensity-weighted centroids. Cycle
//! windings separate the torus' two global phase classes, which carry
//! energy without any zeros of ψ.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::grid::{same_grid, Field, OneForm, RealField, ScalarField};
use crate::norm::{FinslerNorm, TorusPoint};
use crate::numeric::{wrap_angle, GAUSS5};
use crate::ops::{covariant_derivative, curl};
use crate::{Error, Result};

/// Modulus below which a node counts as a zero of ψ.
const ZERO_NODE_TOL: f64 = 1e-12;

/// A detected vortex: intensity-weighted centroid and integer degree.
#[derive(Clone, Copy, Debug)]
pub struct Vortex {
    pub position: TorusPoint,
    pub degree: i64,
}

/// The vortex content of a field.
#[derive(Clone, Debug, Default)]
pub struct VortexSet {
    pub vortices: Vec<Vortex>,
}

impl VortexSet {
    pub fn total_degree(&self) -> i64 {
        self.vortices.iter().map(|v| v.degree).sum()
    }

    pub fn len(&self) -> usize {
        self.vortices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }

    /// Sorted absolute-degree multiset, convenient for assertions.
    pub fn degrees(&self) -> Vec<i64> {
        let mut d: Vec<i64> = self.vortices.iter().map(|v| v.degree).collect();
        d.sort_unstable();
        d
    }
}

fn principal_arg_diff(from: Complex64, to: Complex64) -> f64 {
    (to * from.conj()).arg()
}

/// Stand-in for an exact zero of ψ. Off-axis so that edge ratios avoid the
/// branch cut of the principal value, keeping opposite edge traversals
/// antisymmetric and plaquette degrees telescoping to zero.
fn zero_replacement() -> Complex64 {
    Complex64::from_polar(ZERO_NODE_TOL, 0.7)
}

/// Winding of the bilinear interpolant around one cell, given the corner
/// values in counterclockwise order. Near-zero corners are resolved by
/// subdividing the cell; at the recursion limit the corner is replaced by
/// a fixed tiny value (the same for every cell, so shared edges stay
/// consistent and degrees still telescope to zero globally).
fn cell_winding(corners: [Complex64; 4], depth: usize) -> f64 {
    let degenerate = corners.iter().any(|z| z.norm() < ZERO_NODE_TOL);
    if degenerate {
        if depth == 0 {
            let fixed = corners.map(|z| {
                if z.norm() < ZERO_NODE_TOL {
                    zero_replacement()
                } else {
                    z
                }
            });
            return cell_winding(fixed, 0);
        }
        // bilinear midpoints and center
        let [c00, c10, c11, c01] = corners;
        let m_bottom = (c00 + c10) * 0.5;
        let m_right = (c10 + c11) * 0.5;
        let m_top = (c11 + c01) * 0.5;
        let m_left = (c01 + c00) * 0.5;
        let center = (c00 + c10 + c11 + c01) * 0.25;
        return cell_winding([c00, m_bottom, center, m_left], depth - 1)
            + cell_winding([m_bottom, c10, m_right, center], depth - 1)
            + cell_winding([center, m_right, c11, m_top], depth - 1)
            + cell_winding([m_left, center, m_top, c01], depth - 1);
    }
    let [c00, c10, c11, c01] = corners;
    (principal_arg_diff(c00, c10)
        + principal_arg_diff(c10, c11)
        + principal_arg_diff(c11, c01)
        + principal_arg_diff(c01, c00))
        / TAU
}

fn plaquette_degrees(psi: &ScalarField) -> Vec<i64> {
    let grid = psi.grid();
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    // exact node zeros get one consistent tiny replacement, so that the four
    // plaquettes sharing the node agree and the edge sums still telescope
    let patched: Vec<Complex64> = psi
        .data()
        .iter()
        .map(|&z| {
            if z.norm() < ZERO_NODE_TOL {
                zero_replacement()
            } else {
                z
            }
        })
        .collect();
    let at = |i: isize, j: isize| patched[grid.idx_wrapped(i, j)];
    let mut degrees = vec![0i64; grid.len()];
    for i in 0..nt as isize {
        for j in 0..np as isize {
            let c00 = at(i, j);
            let c10 = at(i + 1, j);
            let c11 = at(i + 1, j + 1);
            let c01 = at(i, j + 1);
            let w = cell_winding([c00, c10, c11, c01], 4);
            degrees[grid.idx(i as usize, j as usize)] = w.round() as i64;
        }
    }
    degrees
}

/// Locate the zeros of ψ with their integer winding numbers.
///
/// Plaquettes with nonzero winding are clustered by 8-connectivity (with
/// periodic wraparound); each cluster becomes one vortex at the
/// degree-weighted circular centroid of its plaquette centers. Clusters
/// whose degrees cancel exactly carry no vorticity and are dropped.
pub fn detect_vortices(psi: &ScalarField) -> VortexSet {
    let grid = psi.grid();
    let degrees = plaquette_degrees(psi);
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let mut visited = vec![false; grid.len()];
    let mut vortices = Vec::new();

    for start in 0..grid.len() {
        if degrees[start] == 0 || visited[start] {
            continue;
        }
        // BFS over the 8-neighborhood
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        let mut members = Vec::new();
        while let Some(idx) = queue.pop_front() {
            members.push(idx);
            let (i, j) = grid.node(idx);
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let nb = grid.idx_wrapped(i as isize + di, j as isize + dj);
                    if degrees[nb] != 0 && !visited[nb] {
                        visited[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }

        let total: i64 = members.iter().map(|&k| degrees[k]).sum();
        if total == 0 {
            continue;
        }
        // degree-weighted circular centroid of the plaquette centers
        let mut st = 0.0;
        let mut ct = 0.0;
        let mut sp = 0.0;
        let mut cp = 0.0;
        for &k in &members {
            let (i, j) = grid.node(k);
            let weight = degrees[k].unsigned_abs() as f64;
            let theta_c = grid.theta(i) + 0.5 * grid.h_theta();
            let phi_c = grid.phi(j) + 0.5 * grid.h_phi();
            st += weight * theta_c.sin();
            ct += weight * theta_c.cos();
            sp += weight * phi_c.sin();
            cp += weight * phi_c.cos();
        }
        let _ = (nt, np);
        vortices.push(Vortex {
            position: TorusPoint::new(st.atan2(ct), sp.atan2(cp)),
            degree: total,
        });
    }
    VortexSet { vortices }
}

/// Winding numbers of the phase along the two coordinate cycles. The θ
/// winding is sampled along a column of constant φ (and vice versa); if ψ
/// vanishes on a cycle the next parallel cycle is tried.
pub fn cycle_windings(psi: &ScalarField) -> Result<(i64, i64)> {
    let grid = psi.grid();
    let (nt, np) = (grid.n_theta(), grid.n_phi());

    let theta_winding = (0..np)
        .find_map(|j| {
            let column: Vec<Complex64> = (0..nt).map(|i| psi.at(i, j)).collect();
            cycle_sum(&column)
        })
        .ok_or_else(|| {
            Error::Domain("ψ vanishes on every θ-cycle; winding undefined".into())
        })?;
    let phi_winding = (0..nt)
        .find_map(|i| {
            let row: Vec<Complex64> = (0..np).map(|j| psi.at(i, j)).collect();
            cycle_sum(&row)
        })
        .ok_or_else(|| {
            Error::Domain("ψ vanishes on every φ-cycle; winding undefined".into())
        })?;
    Ok((theta_winding, phi_winding))
}

fn cycle_sum(values: &[Complex64]) -> Option<i64> {
    if values.iter().any(|z| z.norm() < ZERO_NODE_TOL) {
        return None;
    }
    let mut total = 0.0;
    for k in 0..values.len() {
        total += principal_arg_diff(values[k], values[(k + 1) % values.len()]);
    }
    Some((total / TAU).round() as i64)
}

/// The discrete Jacobian density together with the mask of excluded core
/// nodes.
#[derive(Clone, Debug)]
pub struct JacobianField {
    /// Coefficient of ½ d⟨iu, D_A u⟩ with u = ψ/|ψ|; zero on the mask.
    pub values: RealField,
    /// Nodes within 3 cells of a zero of ψ, where u is not defined.
    pub mask: Vec<bool>,
}

impl JacobianField {
    /// Integral of the density over an h-disk around a center, skipping
    /// masked nodes.
    pub fn integrate_disk(&self, center: TorusPoint, radius: f64) -> f64 {
        let grid = self.values.grid();
        let mut total = 0.0;
        for idx in 0..grid.len() {
            if self.mask[idx] {
                continue;
            }
            let (i, j) = grid.node(idx);
            let dt = crate::numeric::wrap_delta(center.theta, grid.theta(i));
            let dp = crate::numeric::wrap_delta(center.phi, grid.phi(j));
            if dt.hypot(dp) <= radius {
                total += self.values.data()[idx] * grid.cell_area();
            }
        }
        total
    }
}

/// Vorticity 2-form coefficient ½ curl⟨iu, D_A u⟩ of the normalized phase
/// u = ψ/|ψ|. Zeros of ψ (and a 3-cell neighborhood around them) are
/// masked and the density is set to zero there. With this orientation a
/// vortex of degree d integrates to ≈ πd, and for ψ ≡ 1 the density
/// reduces to −½ curl A.
pub fn jacobian_field(psi: &ScalarField, a: &OneForm<f64>) -> Result<JacobianField> {
    same_grid(psi.grid(), a.grid())?;
    let grid = psi.grid();

    let mut mask = vec![false; grid.len()];
    let mut any_zero = false;
    for (idx, z) in psi.data().iter().enumerate() {
        if z.norm() < ZERO_NODE_TOL {
            any_zero = true;
            mask[idx] = true;
        }
    }
    if any_zero {
        // dilate by the 3-cell core radius
        let zero_nodes: Vec<usize> =
            mask.iter().enumerate().filter(|(_, &m)| m).map(|(k, _)| k).collect();
        for idx in zero_nodes {
            let (i, j) = grid.node(idx);
            for di in -3isize..=3 {
                for dj in -3isize..=3 {
                    mask[grid.idx_wrapped(i as isize + di, j as isize + dj)] = true;
                }
            }
        }
    }

    let unit = Field::from_vec(
        grid,
        psi.data()
            .iter()
            .zip(mask.iter())
            .map(|(&z, &m)| {
                if m {
                    Complex64::default()
                } else {
                    z / z.norm()
                }
            })
            .collect(),
    )?;
    let cov = covariant_derivative(&unit, a)?;
    let current = OneForm::from_components(
        grid,
        (0..grid.len())
            .map(|k| (unit.data()[k].conj() * cov.theta[k]).im)
            .collect(),
        (0..grid.len())
            .map(|k| (unit.data()[k].conj() * cov.phi[k]).im)
            .collect(),
    )?;
    let mut values = curl(&current);
    for (v, &m) in values.data_mut().iter_mut().zip(mask.iter()) {
        if m {
            *v = 0.0;
        }
        *v *= 0.5;
    }
    Ok(JacobianField { values, mask })
}

/// Sharp-interface limit energy of a vortex set: π Σ|dᵢ|. In two
/// dimensions the vortex set is a finite point set and the normal-direction
/// weight degenerates to 1, so the norm does not enter; the parameter is
/// kept for interface parity with the length functional.
pub fn gamma_limit_energy(_norm: &FinslerNorm, vortices: &VortexSet) -> f64 {
    PI * vortices
        .vortices
        .iter()
        .map(|v| v.degree.unsigned_abs() as f64)
        .sum::<f64>()
}

/// An oriented polyline with integer multiplicity, the 1-current carrier
/// for length functionals. Vertices are stored in unwrapped coordinates so
/// that segments may wind around the torus; only the position modulo 2π
/// enters coefficient evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct PolylineCurrent {
    vertices: Vec<[f64; 2]>,
    closed: bool,
    multiplicity: i64,
}

impl PolylineCurrent {
    pub fn new(vertices: Vec<[f64; 2]>, closed: bool, multiplicity: i64) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidConfig(
                "polyline needs at least two vertices".into(),
            ));
        }
        for pair in vertices.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidConfig(
                    "consecutive polyline vertices must be distinct".into(),
                ));
            }
        }
        if closed && vertices.first() == vertices.last() {
            return Err(Error::InvalidConfig(
                "closed polylines must not repeat the first vertex; the closing segment is implied"
                    .into(),
            ));
        }
        Ok(Self { vertices, closed, multiplicity })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn multiplicity(&self) -> i64 {
        self.multiplicity
    }

    /// Orientation-reversed copy. For asymmetric norms the length of the
    /// reversal differs.
    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices, closed: self.closed, multiplicity: self.multiplicity }
    }

    fn segments(&self) -> Vec<([f64; 2], [f64; 2])> {
        let mut segs: Vec<_> = self.vertices.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed {
            // the closing segment takes the shortest torus displacement per
            // component (explicit winding belongs in the vertex list)
            let last = *self.vertices.last().unwrap();
            let first = self.vertices[0];
            let close = [
                last[0] + crate::numeric::wrap_delta(last[0], first[0]),
                last[1] + crate::numeric::wrap_delta(last[1], first[1]),
            ];
            if close != last {
                segs.push((last, close));
            }
        }
        segs
    }
}

/// Finsler length Σ ∫ F(x(t), ẋ(t)) dt over the segments, by 5-point Gauss
/// quadrature per segment, times |multiplicity|. Orientation matters for
/// asymmetric norms.
pub fn finsler_length(norm: &FinslerNorm, curve: &PolylineCurrent) -> f64 {
    let mut total = 0.0;
    for (start, end) in curve.segments() {
        let velocity = [end[0] - start[0], end[1] - start[1]];
        if velocity[0] == 0.0 && velocity[1] == 0.0 {
            continue;
        }
        for &(t, w) in GAUSS5.iter() {
            let theta = wrap_angle(start[0] + t * velocity[0]);
            let phi = wrap_angle(start[1] + t * velocity[1]);
            total += w * norm.eval_raw(theta, phi, velocity);
        }
    }
    total * curve.multiplicity().unsigned_abs() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Coefficient;

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

    /// ±1 vortex pair built from a product of half-angle sines: the factor
    /// sin((w − w₊)/2) has a simple +1 zero at w₊, its conjugate partner a
    /// −1 zero at w₋, and the product is exactly 2π-periodic in θ. The
    /// linear counter-phase removes the constant phase jump θ₊ − θ₋ the
    /// product picks up across the φ-wrap.
    fn synthetic_pair(grid: crate::grid::PeriodicGrid, core_plus: [f64; 2], core_minus: [f64; 2]) -> ScalarField {
        let seam_jump = crate::numeric::wrap_delta(core_minus[0], core_plus[0]);
        ScalarField::from_fn(grid, |t, p| {
            let w = Complex64::new(t, p);
            let zp = ((w - Complex64::new(core_plus[0], core_plus[1])) / 2.0).sin();
            let zm = ((w - Complex64::new(core_minus[0], core_minus[1])) / 2.0).sin();
            zp * zm.conj() * Complex64::from_polar(1.0, -seam_jump * p / TAU)
        })
    }

    #[test]
    fn no_vortices_in_constant_field() {
        let grid = crate::grid::PeriodicGrid::square(16).unwrap();
        let set = detect_vortices(&ScalarField::ones(grid));
        assert!(set.is_empty());
    }

    #[test]
    fn pure_winding_has_no_vortices_but_cycles_report() {
        let grid = crate::grid::PeriodicGrid::square(32).unwrap();
        let psi = ScalarField::from_fn(grid, |t, _| Complex64::from_polar(1.0, 2.0 * t));
        assert!(detect_vortices(&psi).is_empty());
        assert_eq!(cycle_windings(&psi).unwrap(), (2, 0));

        let psi = ScalarField::from_fn(grid, |t, p| Complex64::from_polar(1.0, 2.0 * t - 3.0 * p));
        assert_eq!(cycle_windings(&psi).unwrap(), (2, -3));
        let psi = ScalarField::from_fn(grid, |t, _| Complex64::from_polar(1.0, t));
        assert_eq!(cycle_windings(&psi).unwrap(), (1, 0));
    }

    #[test]
    fn cycle_windings_gauge_invariant() {
        let grid = crate::grid::PeriodicGrid::square(32).unwrap();
        let psi = ScalarField::from_fn(grid, |t, _| Complex64::from_polar(1.0, t));
        // periodic gauge functions cannot change the cycle class
        let chi = RealField::from_fn(grid, |t, p| 0.8 * t.sin() + 0.5 * (p + 0.3).cos());
        let gauged = Field::from_vec(
            grid,
            psi.data()
                .iter()
                .zip(chi.data())
                .map(|(&z, &x)| z * Complex64::from_polar(1.0, x))
                .collect(),
        )
        .unwrap();
        assert_eq!(cycle_windings(&gauged).unwrap(), (1, 0));
    }

    #[test]
    fn synthetic_pair_detected_with_exact_degrees() {
        let grid = crate::grid::PeriodicGrid::square(64).unwrap();
        let h = grid.h_theta();
        let plus = [PI - 1.0 + 0.5 * h, PI + 0.5 * h];
        let minus = [PI + 1.0 + 0.5 * h, PI + 0.5 * h];
        let psi = synthetic_pair(grid, plus, minus);
        let set = detect_vortices(&psi);
        assert_eq!(set.degrees(), vec![-1, 1]);
        assert_eq!(set.total_degree(), 0);
        for v in &set.vortices {
            let target = if v.degree > 0 { plus } else { minus };
            let dist = crate::numeric::wrap_delta(v.position.theta, target[0])
                .hypot(crate::numeric::wrap_delta(v.position.phi, target[1]));
            assert!(dist <= 1.5 * h, "vortex off target by {dist}");
        }
    }

    #[test]
    fn plaquette_total_degree_vanishes() {
        let grid = crate::grid::PeriodicGrid::square(48).unwrap();
        let psi = synthetic_pair(grid, [2.0, 3.0], [4.5, 3.2]);
        let total: i64 = plaquette_degrees(&psi).iter().sum();
        assert_eq!(total, 0);
    }

    #[test]
    fn indeterminate_plaquette_resolved_by_subdivision() {
        // put an exact zero on a corner node
        let grid = crate::grid::PeriodicGrid::square(32).unwrap();
        let h = grid.h_theta();
        let plus = [8.0 * h, 8.0 * h];
        let minus = [24.0 * h, 8.0 * h];
        let psi = synthetic_pair(grid, plus, minus);
        let set = detect_vortices(&psi);
        assert_eq!(set.total_degree(), 0);
        assert_eq!(set.degrees(), vec![-1, 1]);
    }

    #[test]
    fn jacobian_reduces_to_half_curl_for_unit_field() {
        let grid = crate::grid::PeriodicGrid::square(64).unwrap();
        let psi = ScalarField::ones(grid);
        let a = OneForm::from_fn(grid, |t, p| (p.sin(), (2.0 * t).cos()));
        let jac = jacobian_field(&psi, &a).unwrap();
        let rot = curl(&a);
        for idx in 0..grid.len() {
            assert!(
                (jac.values.data()[idx] + 0.5 * rot.data()[idx]).abs() < 1e-12,
                "J vs −½curl A at {idx}"
            );
        }
    }

    #[test]
    fn jacobian_of_pure_winding_vanishes() {
        let grid = crate::grid::PeriodicGrid::square(32).unwrap();
        let psi = ScalarField::from_fn(grid, |t, _| Complex64::from_polar(1.0, t));
        let jac = jacobian_field(&psi, &OneForm::zeros(grid)).unwrap();
        assert!(jac.values.max_abs() < 1e-11, "max {}", jac.values.max_abs());
    }

    #[test]
    fn jacobian_bumps_integrate_to_pi_per_degree() {
        let grid = crate::grid::PeriodicGrid::square(128).unwrap();
        let h = grid.h_theta();
        let plus = [PI - 1.2 + 0.5 * h, PI + 0.5 * h];
        let minus = [PI + 1.2 + 0.5 * h, PI + 0.5 * h];
        let psi = synthetic_pair(grid, plus, minus);
        let jac = jacobian_field(&psi, &OneForm::zeros(grid)).unwrap();
        let flux_plus = jac.integrate_disk(TorusPoint::new(plus[0], plus[1]), 0.8);
        let flux_minus = jac.integrate_disk(TorusPoint::new(minus[0], minus[1]), 0.8);
        assert!(
            (flux_plus - PI).abs() < 0.05 * PI,
            "positive core flux {flux_plus} vs π"
        );
        assert!(
            (flux_minus + PI).abs() < 0.05 * PI,
            "negative core flux {flux_minus} vs −π"
        );
    }

    #[test]
    fn gamma_limit_counts_absolute_degrees() {
        let norm = quad(1.0, 1.0);
        assert_eq!(gamma_limit_energy(&norm, &VortexSet::default()), 0.0);
        let set = VortexSet {
            vortices: vec![
                Vortex { position: TorusPoint::new(1.0, 1.0), degree: 1 },
                Vortex { position: TorusPoint::new(4.0, 4.0), degree: -1 },
            ],
        };
        assert!((gamma_limit_energy(&norm, &set) - 2.0 * PI).abs() < 1e-15);
        let double = VortexSet {
            vortices: vec![Vortex { position: TorusPoint::new(0.5, 2.0), degree: 2 }],
        };
        assert!((gamma_limit_energy(&norm, &double) - 2.0 * PI).abs() < 1e-15);
        // additive over disjoint sets
        let merged = VortexSet {
            vortices: set.vortices.iter().chain(double.vortices.iter()).copied().collect(),
        };
        assert!(
            (gamma_limit_energy(&norm, &merged)
                - gamma_limit_energy(&norm, &set)
                - gamma_limit_energy(&norm, &double))
            .abs()
                < 1e-15
        );
    }

    #[test]
    fn polyline_validation() {
        assert!(PolylineCurrent::new(vec![[0.0, 0.0]], false, 1).is_err());
        assert!(PolylineCurrent::new(vec![[0.0, 0.0], [0.0, 0.0]], false, 1).is_err());
        assert!(
            PolylineCurrent::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]], true, 1).is_err()
        );
        assert!(PolylineCurrent::new(vec![[0.0, 0.0], [1.0, 0.0]], false, 1).is_ok());
    }

    #[test]
    fn finsler_length_reference_values() {
        let seg = PolylineCurrent::new(vec![[0.0, 0.0], [1.0, 0.0]], false, 1).unwrap();
        assert!((finsler_length(&quad(4.0, 1.0), &seg) - 2.0).abs() < 1e-14);

        // unit-speed θ-circle as a closed polyline along the flat direction
        let n = 16;
        let circle = PolylineCurrent::new(
            (0..n).map(|k| [k as f64 * TAU / n as f64, 0.0]).collect(),
            true,
            1,
        )
        .unwrap();
        assert!((finsler_length(&quad(1.0, 1.0), &circle) - TAU).abs() < 1e-12);

        // drift makes the two orientations differ
        let norm = randers_half();
        assert!((finsler_length(&norm, &seg) - 1.5).abs() < 1e-14);
        assert!((finsler_length(&norm, &seg.reversed()) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn length_invariant_under_vertex_insertion() {
        let norm = quad(3.0, 0.7);
        let direct = PolylineCurrent::new(vec![[0.2, 0.1], [2.0, 1.4]], false, 1).unwrap();
        let split = PolylineCurrent::new(
            vec![[0.2, 0.1], [1.1, 0.75], [2.0, 1.4]],
            false,
            1,
        )
        .unwrap();
        assert!(
            (finsler_length(&norm, &direct) - finsler_length(&norm, &split)).abs() < 1e-12
        );
    }

    #[test]
    fn length_stable_under_quadrature_refinement() {
        // splitting every segment in four is a strictly richer quadrature;
        // for smooth coefficient profiles the value moves below 1e-10
        let norm = FinslerNorm::quadratic(
            Coefficient::Profile { base: 2.0, cos_theta: 0.4, cos_phi: 0.0 },
            Coefficient::Profile { base: 1.0, cos_theta: 0.0, cos_phi: 0.3 },
        )
        .unwrap();
        let coarse = PolylineCurrent::new(vec![[0.3, 0.2], [1.7, 1.1]], false, 1).unwrap();
        let mut refined_vertices = Vec::new();
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            refined_vertices.push([0.3 + t * 1.4, 0.2 + t * 0.9]);
        }
        let refined = PolylineCurrent::new(refined_vertices, false, 1).unwrap();
        let lc = finsler_length(&norm, &coarse);
        let lr = finsler_length(&norm, &refined);
        assert!((lc - lr).abs() < 1e-10, "quadrature drift {}", (lc - lr).abs());
    }

    #[test]
    fn triangle_inequality_for_convex_norms() {
        for norm in [quad(2.0, 1.0), randers_half()] {
            let direct = PolylineCurrent::new(vec![[0.1, 0.1], [1.3, 0.9]], false, 1).unwrap();
            let detour = PolylineCurrent::new(
                vec![[0.1, 0.1], [0.9, 1.4], [1.3, 0.9]],
                false,
                1,
            )
            .unwrap();
            assert!(
                finsler_length(&norm, &detour)
                    >= finsler_length(&norm, &direct) - 1e-12
            );
        }
    }

    #[test]
    fn multiplicity_scales_length() {
        let norm = quad(1.0, 1.0);
        let single = PolylineCurrent::new(vec![[0.0, 0.0], [1.0, 1.0]], false, 1).unwrap();
        let triple = PolylineCurrent::new(vec![[0.0, 0.0], [1.0, 1.0]], false, -3).unwrap();
        assert!(
            (finsler_length(&norm, &triple) - 3.0 * finsler_length(&norm, &single)).abs()
                < 1e-12
        );
    }
}
