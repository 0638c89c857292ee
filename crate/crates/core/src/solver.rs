//! Energy minimization over the Coulomb slice by line-searched descent.
//!
//! The driver pairs the exact discrete gradient with monotone step rules
//! (fixed, Armijo backtracking, Barzilai-Borwein with an Armijo safeguard),
//! reprojects the gauge field onto the Coulomb slice at a configurable
//! cadence, and records a full per-iteration trace. Everything is seeded
//! and deterministic: identical configurations reproduce identical traces.
//!
//! Topological sectors are entered through `init_winding`: pure phase
//! windings along either cycle, or a vortex-antivortex pair (net degree
//! zero, as periodicity of ψ requires). For pair sectors the cores can be
//! frozen on 3×3 node patches during descent, a measurement device that
//! prevents pair annihilation during long ε-sweeps.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{gl_energy, gl_gradient, EnergyBreakdown, GlGradient, GlParams};
use crate::grid::{same_grid, Field, OneForm, PeriodicGrid, ScalarField};
use crate::measure::{MeasureDensity, MeasureKind};
use crate::norm::FinslerNorm;
use crate::numeric::{pairwise_sum, wrap_delta};
use crate::ops::coulomb_project;
use crate::vortex::detect_vortices;
use crate::{Error, Result};

/// Step-size rule of the descent loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// Constant trial step; the step is still rejected (and the solver
    /// stalls) if it fails to decrease the energy.
    Fixed(f64),
    /// Backtracking line search with sufficient decrease c = 1e-4 and
    /// shrink factor 0.5, warm-started from the previous accepted step.
    Armijo,
    /// Barzilai-Borwein spectral step, safeguarded by the same Armijo
    /// backtracking.
    BarzilaiBorwein,
}

const ARMIJO_C: f64 = 1e-4;
const ARMIJO_SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-14;

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop when the L²(dμ) norm of the (masked) gradient drops below.
    pub grad_tol: f64,
    pub step_rule: StepRule,
    /// Coulomb reprojection cadence in iterations; 0 disables projection.
    pub gauge_reproject_every: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            grad_tol: 1e-8,
            step_rule: StepRule::BarzilaiBorwein,
            gauge_reproject_every: 50,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        if let StepRule::Fixed(s) = self.step_rule {
            if !(s > 0.0) {
                return Err(Error::InvalidConfig("fixed step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    /// Gradient norm fell below `grad_tol`.
    Converged,
    MaxIters,
    /// Line search found no decrease above the minimum step.
    Stall,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TerminationReason::Converged => "converged",
            TerminationReason::MaxIters => "max-iters",
            TerminationReason::Stall => "stall",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: EnergyBreakdown,
    pub grad_norm: f64,
    /// Step accepted by the previous descent step (0 on the first row).
    pub step: f64,
    /// Whether a Coulomb reprojection was applied before this row's
    /// evaluation.
    pub reprojected: bool,
}

#[derive(Clone, Debug)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub termination: TerminationReason,
}

impl SolverTrace {
    pub fn final_energy(&self) -> EnergyBreakdown {
        self.rows.last().map(|r| r.energy).unwrap_or_default()
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.rows.last().map(|r| r.grad_norm).unwrap_or(f64::NAN)
    }

    pub fn iterations(&self) -> usize {
        self.rows.last().map(|r| r.iter).unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub psi: ScalarField,
    pub a: OneForm<f64>,
    pub trace: SolverTrace,
}

/// Topological sector of the initial configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sector {
    ThetaWinding { m: i64 },
    PhiWinding { n: i64 },
    /// A +1/−1 zero pair at distance `separation` along the θ-circle, with
    /// tanh modulus dips of width `core_radius` at the cores.
    VortexPair { separation: f64, core_radius: f64 },
}

/// Build an initial configuration in the requested sector, with an
/// additive seeded perturbation of amplitude `noise` on ψ. The gauge field
/// starts at zero.
pub fn init_winding(
    grid: PeriodicGrid,
    sector: &Sector,
    noise: f64,
    seed: u64,
) -> Result<(ScalarField, OneForm<f64>)> {
    let mut psi = match *sector {
        Sector::ThetaWinding { m } => {
            ScalarField::from_fn(grid, |t, _| Complex64::from_polar(1.0, m as f64 * t))
        }
        Sector::PhiWinding { n } => {
            ScalarField::from_fn(grid, |_, p| Complex64::from_polar(1.0, n as f64 * p))
        }
        Sector::VortexPair { separation, core_radius } => {
            if !(separation > 0.0) || separation >= TAU {
                return Err(Error::InvalidConfig(format!(
                    "vortex pair separation must lie in (0, 2π), got {separation}"
                )));
            }
            if !(core_radius > 0.0) {
                return Err(Error::InvalidConfig("core radius must be positive".into()));
            }
            let [plus, minus] = vortex_pair_cores(grid, separation);
            // The half-angle sine product is exactly 2π-periodic in θ and
            // carries a +1 zero at the first core, a −1 zero at the second.
            // Across the φ-wrap it picks up an asymptotically constant
            // phase jump θ₊ − θ₋; the linear counter-phase removes it so
            // the stored field has no seam (the leftover wobble decays
            // exponentially in the core-to-seam distance).
            let seam_jump = wrap_delta(minus[0], plus[0]);
            ScalarField::from_fn(grid, |t, p| {
                let w = Complex64::new(t, p);
                let zp = ((w - Complex64::new(plus[0], plus[1])) / 2.0).sin();
                let zm = ((w - Complex64::new(minus[0], minus[1])) / 2.0).sin();
                let phase = zp * zm.conj() * Complex64::from_polar(1.0, -seam_jump * p / TAU);
                let len = phase.norm();
                let unit = if len > 0.0 { phase / len } else { Complex64::new(1.0, 0.0) };
                let dp = wrap_delta(plus[0], t).hypot(wrap_delta(plus[1], p));
                let dm = wrap_delta(minus[0], t).hypot(wrap_delta(minus[1], p));
                unit * (dp / core_radius).tanh() * (dm / core_radius).tanh()
            })
        }
    };

    if noise != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in psi.data_mut() {
            *v += Complex64::new(
                noise * rng.random_range(-1.0..1.0),
                noise * rng.random_range(-1.0..1.0),
            );
        }
    }
    Ok((psi, OneForm::zeros(grid)))
}

/// Core positions of the pair sector, snapped to cell centers so the zeros
/// sit strictly between nodes.
pub fn vortex_pair_cores(grid: PeriodicGrid, separation: f64) -> [[f64; 2]; 2] {
    let snap = |theta: f64, phi: f64| {
        let i = ((theta / grid.h_theta()) - 0.5).round();
        let j = ((phi / grid.h_phi()) - 0.5).round();
        [(i + 0.5) * grid.h_theta(), (j + 0.5) * grid.h_phi()]
    };
    [
        snap(PI - 0.5 * separation, PI),
        snap(PI + 0.5 * separation, PI),
    ]
}

/// Node indices frozen around the pair cores during pinned minimization:
/// all nodes within `radius` of either core, and always at least the 3×3
/// patch around each core. A radius tracking the core size (~1.5ε) keeps
/// descent from parking an opposite winding right at the patch edge, which
/// a bare 3×3 patch cannot prevent once the released far-field energy
/// exceeds the O(1) cost of the intruding core.
pub fn vortex_pair_pins(grid: PeriodicGrid, separation: f64, radius: f64) -> Vec<usize> {
    let mut pins = Vec::new();
    for core in vortex_pair_cores(grid, separation) {
        let (ci, cj) = grid.nearest_node(core[0], core[1]);
        for di in -1isize..=1 {
            for dj in -1isize..=1 {
                pins.push(grid.idx_wrapped(ci as isize + di, cj as isize + dj));
            }
        }
        if radius > 0.0 {
            let reach_t = (radius / grid.h_theta()).ceil() as isize;
            let reach_p = (radius / grid.h_phi()).ceil() as isize;
            for di in -reach_t..=reach_t {
                for dj in -reach_p..=reach_p {
                    let idx = grid.idx_wrapped(ci as isize + di, cj as isize + dj);
                    let (i, j) = grid.node(idx);
                    let d = wrap_delta(core[0], grid.theta(i))
                        .hypot(wrap_delta(core[1], grid.phi(j)));
                    if d <= radius {
                        pins.push(idx);
                    }
                }
            }
        }
    }
    pins.sort_unstable();
    pins.dedup();
    pins
}

fn weighted_inner(
    density: &MeasureDensity,
    psi1: &ScalarField,
    a1: &OneForm<f64>,
    psi2: &ScalarField,
    a2: &OneForm<f64>,
) -> f64 {
    let grid = density.grid();
    let cell = grid.cell_area();
    let values: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let (i, j) = grid.node(idx);
            let w = density.sigma_at(i, j) * cell;
            w * ((psi1.data()[idx].conj() * psi2.data()[idx]).re
                + a1.theta[idx] * a2.theta[idx]
                + a1.phi[idx] * a2.phi[idx])
        })
        .collect();
    pairwise_sum(&values)
}

fn advance(
    psi: &ScalarField,
    a: &OneForm<f64>,
    dir: &GlGradient,
    t: f64,
) -> (ScalarField, OneForm<f64>) {
    let grid = psi.grid();
    let psi_new = Field::from_vec(
        grid,
        psi.data()
            .iter()
            .zip(dir.psi.data())
            .map(|(&z, &d)| z - d * t)
            .collect(),
    )
    .expect("same grid");
    let a_new = OneForm::from_components(
        grid,
        a.theta.iter().zip(&dir.a.theta).map(|(x, d)| x - t * d).collect(),
        a.phi.iter().zip(&dir.a.phi).map(|(x, d)| x - t * d).collect(),
    )
    .expect("same grid");
    (psi_new, a_new)
}

/// Minimize the energy from an initial configuration. See
/// [`minimize_pinned`] for the pinned variant; this one leaves every node
/// free.
pub fn minimize(
    norm: &FinslerNorm,
    density: &MeasureDensity,
    params: &GlParams,
    config: &SolverConfig,
    psi0: ScalarField,
    a0: OneForm<f64>,
) -> Result<MinimizeResult> {
    minimize_pinned(norm, density, params, config, psi0, a0, &[])
}

/// Line-searched descent on the discrete energy, with ψ frozen at the
/// `pins` node indices and periodic Coulomb reprojection. The trace is
/// energy-monotone across descent steps; reprojection rows are flagged
/// (the projection is a gauge motion whose energy defect is pure
/// discretization error).
///
/// The harmonic (grid-mean) components of A are held at their initial
/// values: they are the torus' flux moduli, cost nothing in the Maxwell
/// term, and with a cycle winding present they would otherwise absorb the
/// entire winding energy along a barrier-free path. Descent therefore
/// moves A only in the mean-zero complement, matching the Coulomb
/// projection, which preserves the harmonic part as well.
pub fn minimize_pinned(
    norm: &FinslerNorm,
    density: &MeasureDensity,
    params: &GlParams,
    config: &SolverConfig,
    psi0: ScalarField,
    a0: OneForm<f64>,
    pins: &[usize],
) -> Result<MinimizeResult> {
    config.validate()?;
    same_grid(density.grid(), psi0.grid())?;
    same_grid(density.grid(), a0.grid())?;
    if !psi0.all_finite() || !a0.all_finite() {
        return Err(Error::InvalidConfig(
            "initial fields must be finite".into(),
        ));
    }

    let mut psi = psi0;
    let mut a = a0;
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut termination = TerminationReason::MaxIters;
    let mut last_step = 0.0f64;
    let mut armijo_start = 1.0f64;
    // previous iterate and gradient for the Barzilai-Borwein step
    let mut bb_memory: Option<(ScalarField, OneForm<f64>, GlGradient)> = None;

    let constrain = |grad: &mut GlGradient| {
        for &idx in pins {
            grad.psi.data_mut()[idx] = Complex64::default();
        }
        // project out the flux moduli directions
        let n = grad.a.theta.len() as f64;
        let mean_t = pairwise_sum(&grad.a.theta) / n;
        let mean_p = pairwise_sum(&grad.a.phi) / n;
        for v in grad.a.theta.iter_mut() {
            *v -= mean_t;
        }
        for v in grad.a.phi.iter_mut() {
            *v -= mean_p;
        }
    };

    for iter in 0..=config.max_iters {
        let reproject = config.gauge_reproject_every > 0
            && iter % config.gauge_reproject_every == 0;
        if reproject {
            let proj = coulomb_project(&a, density)?;
            let chi = proj.chi;
            for (z, &x) in psi.data_mut().iter_mut().zip(chi.values().data()) {
                *z *= Complex64::from_polar(1.0, -x);
            }
            a = proj.a_coulomb;
            bb_memory = None;
        }

        let energy = gl_energy(norm, density, params, &psi, &a)?;
        if !energy.total.is_finite() {
            return Err(Error::InvalidConfig(
                "energy diverged to a non-finite value".into(),
            ));
        }
        let mut grad = gl_gradient(norm, density, params, &psi, &a)?;
        constrain(&mut grad);
        let grad_norm =
            weighted_inner(density, &grad.psi, &grad.a, &grad.psi, &grad.a).sqrt();

        rows.push(TraceRow {
            iter,
            energy,
            grad_norm,
            step: last_step,
            reprojected: reproject,
        });

        if grad_norm <= config.grad_tol {
            termination = TerminationReason::Converged;
            break;
        }
        if iter == config.max_iters {
            termination = TerminationReason::MaxIters;
            break;
        }

        // descent direction is −grad; slope of t ↦ E(x − t g) at 0
        let slope = -(grad_norm * grad_norm);

        let t0 = match config.step_rule {
            StepRule::Fixed(s) => s,
            StepRule::Armijo => armijo_start,
            StepRule::BarzilaiBorwein => match &bb_memory {
                Some((psi_prev, a_prev, grad_prev)) => {
                    let dx_psi = Field::from_vec(
                        psi.grid(),
                        psi.data()
                            .iter()
                            .zip(psi_prev.data())
                            .map(|(&x, &y)| x - y)
                            .collect(),
                    )?;
                    let dx_a = OneForm::from_components(
                        a.grid(),
                        a.theta.iter().zip(&a_prev.theta).map(|(x, y)| x - y).collect(),
                        a.phi.iter().zip(&a_prev.phi).map(|(x, y)| x - y).collect(),
                    )?;
                    let dg_psi = Field::from_vec(
                        psi.grid(),
                        grad.psi
                            .data()
                            .iter()
                            .zip(grad_prev.psi.data())
                            .map(|(&x, &y)| x - y)
                            .collect(),
                    )?;
                    let dg_a = OneForm::from_components(
                        a.grid(),
                        grad.a
                            .theta
                            .iter()
                            .zip(&grad_prev.a.theta)
                            .map(|(x, y)| x - y)
                            .collect(),
                        grad.a
                            .phi
                            .iter()
                            .zip(&grad_prev.a.phi)
                            .map(|(x, y)| x - y)
                            .collect(),
                    )?;
                    let xx = weighted_inner(density, &dx_psi, &dx_a, &dx_psi, &dx_a);
                    let xg = weighted_inner(density, &dx_psi, &dx_a, &dg_psi, &dg_a);
                    if xg > 0.0 && xx.is_finite() && xg.is_finite() {
                        (xx / xg).clamp(1e-12, 1e4)
                    } else {
                        (last_step * 2.0).clamp(1e-6, 1.0)
                    }
                }
                None => 1e-2,
            },
        };

        let accepted = match config.step_rule {
            StepRule::Fixed(s) => {
                let (psi_t, a_t) = advance(&psi, &a, &grad, s);
                let e_t = gl_energy(norm, density, params, &psi_t, &a_t)?;
                if e_t.total.is_finite() && e_t.total <= energy.total {
                    Some((s, psi_t, a_t))
                } else {
                    None
                }
            }
            StepRule::Armijo | StepRule::BarzilaiBorwein => {
                let mut t = t0;
                let mut found = None;
                while t >= MIN_STEP {
                    let (psi_t, a_t) = advance(&psi, &a, &grad, t);
                    let e_t = gl_energy(norm, density, params, &psi_t, &a_t)?;
                    if e_t.total.is_finite()
                        && e_t.total <= energy.total + ARMIJO_C * t * slope
                    {
                        found = Some((t, psi_t, a_t));
                        break;
                    }
                    t *= ARMIJO_SHRINK;
                }
                found
            }
        };

        match accepted {
            Some((t, psi_t, a_t)) => {
                bb_memory = Some((psi.clone(), a.clone(), grad));
                psi = psi_t;
                a = a_t;
                last_step = t;
                armijo_start = (t * 2.0).clamp(1e-10, 1e4);
            }
            None => {
                termination = TerminationReason::Stall;
                break;
            }
        }
    }

    Ok(MinimizeResult {
        psi,
        a,
        trace: SolverTrace { rows, termination },
    })
}

/// Grid-resolution policy for the ε-sweep: either derive the smallest even
/// node count with h ≤ ε/4, or use explicit per-ε counts (validated
/// against the same bound).
#[derive(Clone, Debug, PartialEq)]
pub enum GridSchedule {
    Auto,
    Explicit(Vec<usize>),
}

fn auto_grid_size(epsilon: f64) -> usize {
    // h = 2π/N ≤ ε/4  ⟺  N ≥ 8π/ε
    let min_n = (8.0 * PI / epsilon).ceil() as usize;
    let n = min_n.max(8);
    if n % 2 == 0 {
        n
    } else {
        n + 1
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub epsilon: f64,
    pub n: usize,
    pub energy: EnergyBreakdown,
    pub vortex_count: usize,
    pub degrees: Vec<i64>,
    pub energy_over_logeps: f64,
    pub termination: TerminationReason,
}

/// Minimize in a fixed sector across a decreasing list of ε, with the grid
/// resolving every core (h ≤ ε/4) and pair cores pinned against
/// annihilation. Emits one row per ε; slope fitting over |log ε| is left
/// to the caller.
pub fn epsilon_sweep(
    norm: &FinslerNorm,
    measure: MeasureKind,
    lambda: f64,
    sector: &Sector,
    eps_list: &[f64],
    schedule: &GridSchedule,
    config: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    if eps_list.is_empty() {
        return Err(Error::InvalidConfig("eps_list must not be empty".into()));
    }
    for pair in eps_list.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::InvalidConfig(
                "eps_list must be strictly decreasing".into(),
            ));
        }
    }
    if eps_list[eps_list.len() - 1] <= 0.0 {
        return Err(Error::InvalidConfig("epsilon values must be positive".into()));
    }
    if let GridSchedule::Explicit(ns) = schedule {
        if ns.len() != eps_list.len() {
            return Err(Error::InvalidConfig(format!(
                "grid schedule has {} entries for {} epsilon values",
                ns.len(),
                eps_list.len()
            )));
        }
    }

    let mut rows = Vec::with_capacity(eps_list.len());
    for (k, &epsilon) in eps_list.iter().enumerate() {
        let n = match schedule {
            GridSchedule::Auto => auto_grid_size(epsilon),
            GridSchedule::Explicit(ns) => ns[k],
        };
        let grid = PeriodicGrid::square(n)?;
        if grid.h_theta() > epsilon / 4.0 {
            return Err(Error::InvalidConfig(format!(
                "grid N = {n} leaves cores unresolved at epsilon = {epsilon}: need h ≤ ε/4"
            )));
        }

        let density = MeasureDensity::build(measure, norm, grid)?;
        let params = GlParams::new(lambda, epsilon)?;
        // core width and pin radius track ε at every sweep point
        let (sector_eps, pins) = match *sector {
            Sector::VortexPair { separation, .. } => (
                Sector::VortexPair { separation, core_radius: epsilon },
                vortex_pair_pins(grid, separation, 1.5 * epsilon),
            ),
            other => (other, Vec::new()),
        };
        let (psi0, a0) = init_winding(grid, &sector_eps, 0.0, config.rng_seed)?;
        let result = minimize_pinned(norm, &density, &params, config, psi0, a0, &pins)?;
        let vortices = detect_vortices(&result.psi);
        let energy = result.trace.final_energy();
        rows.push(SweepRow {
            epsilon,
            n,
            energy,
            vortex_count: vortices.len(),
            degrees: vortices.degrees(),
            energy_over_logeps: energy.total / epsilon.recip().ln(),
            termination: result.trace.termination,
        });
    }
    Ok(rows)
}

/// Least-squares slope of total energy against |log ε| over sweep rows.
pub fn fit_energy_slope(rows: &[SweepRow]) -> f64 {
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon.recip().ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.energy.total).collect();
    let mean_x = pairwise_sum(&xs) / n;
    let mean_y = pairwise_sum(&ys) / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Coefficient;
    use crate::vortex::cycle_windings;

    fn euclid() -> FinslerNorm {
        FinslerNorm::euclidean()
    }

    fn quad(a: f64, b: f64) -> FinslerNorm {
        FinslerNorm::quadratic(Coefficient::Constant(a), Coefficient::Constant(b)).unwrap()
    }

    fn flat(n: usize) -> MeasureDensity {
        MeasureDensity::flat(PeriodicGrid::square(n).unwrap())
    }

    #[test]
    fn init_theta_winding_exact() {
        let grid = PeriodicGrid::square(16).unwrap();
        let (psi, a) = init_winding(grid, &Sector::ThetaWinding { m: 1 }, 0.0, 7).unwrap();
        for i in 0..grid.n_theta() {
            for j in 0..grid.n_phi() {
                let expect = Complex64::from_polar(1.0, grid.theta(i));
                assert_eq!(psi.at(i, j), expect);
            }
        }
        assert!(a.theta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_is_bit_deterministic() {
        let grid = PeriodicGrid::square(16).unwrap();
        let sector = Sector::VortexPair { separation: 2.0, core_radius: 0.3 };
        let (psi1, _) = init_winding(grid, &sector, 0.05, 42).unwrap();
        let (psi2, _) = init_winding(grid, &sector, 0.05, 42).unwrap();
        assert_eq!(psi1.data(), psi2.data());
        let (psi3, _) = init_winding(grid, &sector, 0.05, 43).unwrap();
        assert_ne!(psi1.data(), psi3.data());
    }

    #[test]
    fn init_vortex_pair_detected() {
        let grid = PeriodicGrid::square(48).unwrap();
        let sep = 2.0;
        let (psi, _) = init_winding(
            grid,
            &Sector::VortexPair { separation: sep, core_radius: 0.4 },
            0.0,
            0,
        )
        .unwrap();
        let set = detect_vortices(&psi);
        assert_eq!(set.degrees(), vec![-1, 1]);
        let cores = vortex_pair_cores(grid, sep);
        for v in &set.vortices {
            let target = if v.degree > 0 { cores[0] } else { cores[1] };
            let dist = wrap_delta(v.position.theta, target[0])
                .hypot(wrap_delta(v.position.phi, target[1]));
            assert!(dist < 2.0 * grid.h_theta(), "core displaced by {dist}");
        }
    }

    #[test]
    fn init_rejects_bad_sector_parameters() {
        let grid = PeriodicGrid::square(16).unwrap();
        assert!(init_winding(
            grid,
            &Sector::VortexPair { separation: 0.0, core_radius: 0.2 },
            0.0,
            0
        )
        .is_err());
        assert!(init_winding(
            grid,
            &Sector::VortexPair { separation: 7.0, core_radius: 0.2 },
            0.0,
            0
        )
        .is_err());
    }

    #[test]
    fn ground_state_converges_immediately() {
        let density = flat(16);
        let grid = density.grid();
        let config = SolverConfig::default();
        let result = minimize(
            &euclid(),
            &density,
            &GlParams::new(1.0, 0.5).unwrap(),
            &config,
            ScalarField::ones(grid),
            OneForm::zeros(grid),
        )
        .unwrap();
        assert_eq!(result.trace.termination, TerminationReason::Converged);
        assert_eq!(result.trace.rows.len(), 1);
        assert_eq!(result.trace.final_energy().total, 0.0);
    }

    #[test]
    fn damped_modulus_start_descends_and_converges() {
        // ψ = 0.5 e^{iθ} at ε = 0.5: descent lifts the modulus back to the
        // sector optimum √(1−ε²) while the winding survives (the flux
        // moduli are held, so no barrier-free unwinding path exists).
        let density = flat(32);
        let grid = density.grid();
        let params = GlParams::new(1.0, 0.5).unwrap();
        let config = SolverConfig {
            grad_tol: 1e-9,
            max_iters: 5000,
            ..Default::default()
        };
        let psi0 = ScalarField::from_fn(grid, |t, _| Complex64::from_polar(0.5, t));
        let a0 = OneForm::zeros(grid);
        let e0 = gl_energy(&euclid(), &density, &params, &psi0, &a0).unwrap();

        let result = minimize(&euclid(), &density, &params, &config, psi0, a0).unwrap();
        assert_eq!(result.trace.termination, TerminationReason::Converged);
        let e_final = result.trace.final_energy();
        assert!(e_final.total <= e0.total);
        assert!(result.trace.final_grad_norm() <= config.grad_tol);
        assert_eq!(cycle_windings(&result.psi).unwrap(), (1, 0));
        // regression baseline from the first validated run: the winding
        // optimum (2π)²(1/2 − ε²/4) up to stencil corrections
        let expect = TAU * TAU * (0.5 - 0.25 * 0.25);
        assert!(
            (e_final.total - expect).abs() < 1e-3 * expect,
            "final energy {} vs sector optimum {expect}",
            e_final.total
        );
    }

    #[test]
    fn unit_modulus_winding_relaxes_to_sector_optimum() {
        // in the stiff-potential regime the winding class survives descent
        // from a noisy modulus-1 start; the minimizer relaxes the modulus
        // to ~√(1−ε²) but keeps essentially the full winding kinetic energy
        let density = flat(32);
        let grid = density.grid();
        let params = GlParams::new(1.0, 0.15).unwrap();
        let config = SolverConfig {
            grad_tol: 1e-9,
            max_iters: 10_000,
            ..Default::default()
        };
        let (psi0, a0) = init_winding(grid, &Sector::ThetaWinding { m: 1 }, 0.05, 17).unwrap();
        let result = minimize(&euclid(), &density, &params, &config, psi0, a0).unwrap();
        assert_eq!(result.trace.termination, TerminationReason::Converged);
        assert_eq!(cycle_windings(&result.psi).unwrap(), (1, 0));

        let (ansatz, a_zero) = init_winding(grid, &Sector::ThetaWinding { m: 1 }, 0.0, 0).unwrap();
        let e_ansatz = gl_energy(&euclid(), &density, &params, &ansatz, &a_zero)
            .unwrap()
            .total;
        let e_final = result.trace.final_energy();
        let h_sq = grid.h_theta() * grid.h_theta();
        assert!(
            e_final.kinetic >= 2.0 * PI * PI * (1.0 - 5.0 * h_sq),
            "kinetic energy {} below winding floor",
            e_final.kinetic
        );
        assert!(e_final.total <= e_ansatz + 1e-9);
    }

    #[test]
    fn trace_energy_monotone_across_descent_rows() {
        let density = flat(24);
        let grid = density.grid();
        let params = GlParams::new(0.8, 0.4).unwrap();
        let config = SolverConfig {
            max_iters: 400,
            grad_tol: 1e-10,
            gauge_reproject_every: 25,
            ..Default::default()
        };
        let (mut psi0, _) = init_winding(grid, &Sector::ThetaWinding { m: 1 }, 0.05, 9).unwrap();
        // roughen the modulus so the solver has work to do
        for (k, v) in psi0.data_mut().iter_mut().enumerate() {
            if k % 3 == 0 {
                *v *= 0.7;
            }
        }
        let a0 = OneForm::from_fn(grid, |t, p| (0.2 * p.sin(), 0.1 * (t + 0.4).cos()));
        let result = minimize(&euclid(), &density, &params, &config, psi0, a0).unwrap();

        for pair in result.trace.rows.windows(2) {
            if !pair[1].reprojected {
                let scale = pair[0].energy.total.abs().max(1.0);
                assert!(
                    pair[1].energy.total <= pair[0].energy.total + 1e-12 * scale,
                    "energy rose on a descent step: {} -> {}",
                    pair[0].energy.total,
                    pair[1].energy.total
                );
            }
        }
    }

    #[test]
    fn identical_config_and_seed_reproduce_trace() {
        let density = flat(16);
        let grid = density.grid();
        let params = GlParams::new(1.0, 0.5).unwrap();
        let config = SolverConfig { max_iters: 60, grad_tol: 1e-12, ..Default::default() };
        let run = || {
            let (psi0, a0) =
                init_winding(grid, &Sector::ThetaWinding { m: 1 }, 0.1, 4242).unwrap();
            minimize(&euclid(), &density, &params, &config, psi0, a0).unwrap()
        };
        let r1 = run();
        let r2 = run();
        assert_eq!(r1.trace.rows.len(), r2.trace.rows.len());
        for (a, b) in r1.trace.rows.iter().zip(r2.trace.rows.iter()) {
            assert_eq!(a.energy.total.to_bits(), b.energy.total.to_bits());
            assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
            assert_eq!(a.step.to_bits(), b.step.to_bits());
        }
        assert_eq!(r1.psi.data(), r2.psi.data());
    }

    #[test]
    fn fixed_step_stalls_honestly() {
        let density = flat(16);
        let grid = density.grid();
        let params = GlParams::new(1.0, 0.3).unwrap();
        let config = SolverConfig {
            step_rule: StepRule::Fixed(1e6),
            max_iters: 10,
            grad_tol: 1e-14,
            gauge_reproject_every: 0,
            ..Default::default()
        };
        let (psi0, a0) = init_winding(grid, &Sector::ThetaWinding { m: 2 }, 0.2, 5).unwrap();
        let result = minimize(&euclid(), &density, &params, &config, psi0, a0).unwrap();
        assert_eq!(result.trace.termination, TerminationReason::Stall);
        // best iterate is returned, not the rejected trial
        assert!(result.trace.final_energy().total.is_finite());
    }

    #[test]
    fn reprojection_energy_defect_shrinks_under_refinement() {
        let params = GlParams::new(1.0, 0.5).unwrap();
        let defect_at = |n: usize| -> f64 {
            let density = flat(n);
            let grid = density.grid();
            let psi = ScalarField::from_fn(grid, |t, p| {
                Complex64::from_polar(1.0, t + 0.3 * (t + 2.0 * p).sin())
            });
            // mixed-mode components so the form has genuine divergence
            let a = OneForm::from_fn(grid, |t, p| {
                (0.4 * (t + p).sin(), 0.3 * (2.0 * t - p).cos())
            });
            let before = gl_energy(&euclid(), &density, &params, &psi, &a)
                .unwrap()
                .total;
            let proj = coulomb_project(&a, &density).unwrap();
            let mut psi_rot = psi;
            for (z, &x) in psi_rot.data_mut().iter_mut().zip(proj.chi.values().data()) {
                *z *= Complex64::from_polar(1.0, -x);
            }
            let after = gl_energy(&euclid(), &density, &params, &psi_rot, &proj.a_coulomb)
                .unwrap()
                .total;
            (before - after).abs() / before
        };
        let d32 = defect_at(32);
        let d64 = defect_at(64);
        assert!(
            d32 / d64 >= 4.0,
            "projection defect should shrink under refinement: {d32} -> {d64}"
        );
    }

    #[test]
    fn pins_freeze_psi_nodes() {
        let density = flat(32);
        let grid = density.grid();
        let params = GlParams::new(1.0, 0.25).unwrap();
        let sep = 2.0;
        let (psi0, a0) = init_winding(
            grid,
            &Sector::VortexPair { separation: sep, core_radius: 0.25 },
            0.0,
            0,
        )
        .unwrap();
        let pins = vortex_pair_pins(grid, sep, 1.5 * 0.25);
        let config = SolverConfig {
            max_iters: 40,
            grad_tol: 1e-12,
            gauge_reproject_every: 0,
            ..Default::default()
        };
        let pinned_before: Vec<Complex64> = pins.iter().map(|&k| psi0.data()[k]).collect();
        let result =
            minimize_pinned(&euclid(), &density, &params, &config, psi0, a0, &pins).unwrap();
        for (&k, &before) in pins.iter().zip(pinned_before.iter()) {
            assert_eq!(result.psi.data()[k], before, "pinned node {k} moved");
        }
        // cores survive
        assert_eq!(detect_vortices(&result.psi).degrees(), vec![-1, 1]);
    }

    #[test]
    fn theta_winding_sweep_energy_nearly_epsilon_independent() {
        // no vortices: the winding energy carries no |log ε| divergence.
        // The minimizer's modulus settles at √(1−ε²), so the residual ε
        // dependence is the O(ε²) modulus relaxation, far below the 2π
        // slope of a vortex sector.
        let config = SolverConfig { grad_tol: 3e-5, max_iters: 3000, ..Default::default() };
        let rows = epsilon_sweep(
            &quad(1.0, 1.0),
            MeasureKind::BusemannHausdorff,
            1.0,
            &Sector::ThetaWinding { m: 1 },
            &[0.2, 0.15, 0.1],
            &GridSchedule::Auto,
            &config,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        let e0 = rows[0].energy.total;
        for r in &rows {
            assert!(
                (r.energy.total - e0).abs() <= 2e-2 * e0,
                "totals spread: {} vs {}",
                r.energy.total,
                e0
            );
            // the relaxed modulus leaves potential ≈ ε²/(2−ε²) of the total
            assert!(r.energy.potential <= 3e-2 * r.energy.total);
            assert_eq!(r.vortex_count, 0);
        }
        let slope = fit_energy_slope(&rows);
        assert!(slope.abs() < 0.6, "winding sector slope {slope}");
    }

    #[test]
    fn sweep_rejects_unresolved_grid() {
        let config = SolverConfig { max_iters: 5, grad_tol: 1e-3, ..Default::default() };
        let err = epsilon_sweep(
            &quad(1.0, 1.0),
            MeasureKind::BusemannHausdorff,
            1.0,
            &Sector::VortexPair { separation: 2.0, core_radius: 0.25 },
            &[0.5, 0.25],
            &GridSchedule::Explicit(vec![64, 64]),
            &config,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)), "got {err}");
    }

    #[test]
    fn sweep_rejects_nondecreasing_eps() {
        let config = SolverConfig::default();
        assert!(epsilon_sweep(
            &quad(1.0, 1.0),
            MeasureKind::BusemannHausdorff,
            1.0,
            &Sector::ThetaWinding { m: 1 },
            &[0.25, 0.25],
            &GridSchedule::Auto,
            &config,
        )
        .is_err());
        assert!(epsilon_sweep(
            &quad(1.0, 1.0),
            MeasureKind::BusemannHausdorff,
            1.0,
            &Sector::ThetaWinding { m: 1 },
            &[],
            &GridSchedule::Auto,
            &config,
        )
        .is_err());
    }

    #[test]
    fn vortex_pair_sweep_keeps_quantized_degrees() {
        // the pinned patches protect the windings once the cores are
        // reasonably sharp relative to the pair attraction
        let config = SolverConfig {
            grad_tol: 3e-4,
            max_iters: 4000,
            gauge_reproject_every: 100,
            ..Default::default()
        };
        let rows = epsilon_sweep(
            &quad(1.0, 1.0),
            MeasureKind::BusemannHausdorff,
            1.0,
            &Sector::VortexPair { separation: PI, core_radius: 0.5 },
            &[0.3, 0.25],
            &GridSchedule::Auto,
            &config,
        )
        .unwrap();
        for r in &rows {
            assert_eq!(r.degrees, vec![-1, 1], "degrees at eps {}", r.epsilon);
            assert_eq!(r.vortex_count, 2);
            assert!(r.energy.total.is_finite());
        }
        // energies grow as the cores sharpen
        assert!(rows[1].energy.total > rows[0].energy.total);
    }
}
