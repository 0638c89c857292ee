//! Finsler norms on the tangent planes of the flat 2-torus, with exact
//! derivative information.
//!
//! Two families are supported:
//!
//! * `Quadratic` — F(x,y) = √(a(x) y_θ² + b(x) y_φ²), the Riemannian case
//!   with diagonal, possibly position-dependent coefficients;
//! * `Randers` — F(x,y) = √(a(x) y_θ² + b(x) y_φ²) + β·y, the minimal
//!   genuinely asymmetric extension (drift 1-form β, ‖β‖ < 1 in the dual
//!   base norm).
//!
//! The Legendre map L(y) = ∂_y(½F²) = g(x,y)·y pairs tangent and cotangent
//! vectors; its inverse is closed-form for quadratic norms and a damped
//! Newton iteration for Randers norms. The dual norm is evaluated through
//! the inverse map as F*(x,ξ) = F(x, L⁻¹(ξ)).

use crate::numeric::wrap_angle;
use crate::{Error, Result};

/// Point on the flat torus; both angles are stored in [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint {
    pub theta: f64,
    pub phi: f64,
}

impl TorusPoint {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            theta: wrap_angle(theta),
            phi: wrap_angle(phi),
        }
    }

    /// Origin of the chart, (0, 0).
    pub fn origin() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }
}

/// Tangent vector y = y_θ ∂_θ + y_φ ∂_φ attached at a torus point.
#[derive(Clone, Copy, Debug)]
pub struct TangentVector {
    pub at: TorusPoint,
    pub components: [f64; 2],
}

impl TangentVector {
    pub fn new(at: TorusPoint, y_theta: f64, y_phi: f64) -> Self {
        Self { at, components: [y_theta, y_phi] }
    }

    /// Tangent vector at the chart origin.
    pub fn at_origin(y_theta: f64, y_phi: f64) -> Self {
        Self::new(TorusPoint::origin(), y_theta, y_phi)
    }
}

/// Cotangent vector ξ = ξ_θ dθ + ξ_φ dφ attached at a torus point.
#[derive(Clone, Copy, Debug)]
pub struct CotangentVector {
    pub at: TorusPoint,
    pub components: [f64; 2],
}

impl CotangentVector {
    pub fn new(at: TorusPoint, xi_theta: f64, xi_phi: f64) -> Self {
        Self { at, components: [xi_theta, xi_phi] }
    }

    pub fn at_origin(xi_theta: f64, xi_phi: f64) -> Self {
        Self::new(TorusPoint::origin(), xi_theta, xi_phi)
    }

    /// Natural pairing ξ(y) with a tangent 2-vector given by components.
    pub fn pair(&self, y: [f64; 2]) -> f64 {
        self.components[0] * y[0] + self.components[1] * y[1]
    }
}

/// Scalar coefficient field on the torus, evaluable exactly at any point:
/// `base + ct·cos θ + cp·cos φ`. A plain constant has ct = cp = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    Profile { base: f64, cos_theta: f64, cos_phi: f64 },
}

impl Coefficient {
    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        match *self {
            Coefficient::Constant(v) => v,
            Coefficient::Profile { base, cos_theta, cos_phi } => {
                base + cos_theta * theta.cos() + cos_phi * phi.cos()
            }
        }
    }

    /// Exact infimum over the torus.
    pub fn min_value(&self) -> f64 {
        match *self {
            Coefficient::Constant(v) => v,
            Coefficient::Profile { base, cos_theta, cos_phi } => {
                base - cos_theta.abs() - cos_phi.abs()
            }
        }
    }

    /// Exact supremum over the torus.
    pub fn max_value(&self) -> f64 {
        match *self {
            Coefficient::Constant(v) => v,
            Coefficient::Profile { base, cos_theta, cos_phi } => {
                base + cos_theta.abs() + cos_phi.abs()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            Coefficient::Constant(_) => true,
            Coefficient::Profile { cos_theta, cos_phi, .. } => {
                cos_theta == 0.0 && cos_phi == 0.0
            }
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            Coefficient::Constant(v) => v.is_finite(),
            Coefficient::Profile { base, cos_theta, cos_phi } => {
                base.is_finite() && cos_theta.is_finite() && cos_phi.is_finite()
            }
        }
    }

    /// Values at the four corners of the (cos θ, cos φ) square, used for
    /// exact extremal bounds of corner-monotone expressions.
    fn corner_values(&self) -> [f64; 4] {
        match *self {
            Coefficient::Constant(v) => [v; 4],
            Coefficient::Profile { base, cos_theta, cos_phi } => [
                base + cos_theta + cos_phi,
                base + cos_theta - cos_phi,
                base - cos_theta + cos_phi,
                base - cos_theta - cos_phi,
            ],
        }
    }
}

/// Symmetric 2×2 matrix in the (θ, φ) coordinate frame.
#[derive(Clone, Copy, Debug)]
pub struct SymMat2 {
    pub tt: f64,
    pub tp: f64,
    pub pp: f64,
}

impl SymMat2 {
    pub fn diagonal(tt: f64, pp: f64) -> Self {
        Self { tt, tp: 0.0, pp }
    }

    pub fn det(&self) -> f64 {
        self.tt * self.pp - self.tp * self.tp
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.tt * v[0] + self.tp * v[1],
            self.tp * v[0] + self.pp * v[1],
        ]
    }

    /// Solve M x = rhs by the 2×2 closed form.
    pub fn solve(&self, rhs: [f64; 2]) -> Result<[f64; 2]> {
        let det = self.det();
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::Domain(format!(
                "singular 2x2 system (det = {det:.3e})"
            )));
        }
        Ok([
            (self.pp * rhs[0] - self.tp * rhs[1]) / det,
            (self.tt * rhs[1] - self.tp * rhs[0]) / det,
        ])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let half_tr = 0.5 * (self.tt + self.pp);
        let disc = (0.5 * (self.tt - self.pp)).hypot(self.tp);
        half_tr - disc
    }
}

#[derive(Clone, Copy, Debug)]
enum NormKind {
    Quadratic {
        a: Coefficient,
        b: Coefficient,
    },
    Randers {
        a: Coefficient,
        b: Coefficient,
        drift: [f64; 2],
    },
}

/// A point-dependent Minkowski norm family F(x, ·) with exact derivatives.
///
/// Construction validates the structure axioms (positive coefficients,
/// sub-unit drift) and records uniform equivalence bounds `c₁ |ξ| ≤ F*(x,ξ)
/// ≤ c₂ |ξ|` against the Euclidean co-norm, obtained by an angular sweep.
#[derive(Clone, Copy, Debug)]
pub struct FinslerNorm {
    kind: NormKind,
    dual_bounds: (f64, f64),
}

/// Tolerance below which a cotangent argument is treated as 0 and the
/// continuous extensions L⁻¹(0) = 0, F*(x, 0) = 0 apply.
pub const ZERO_COVECTOR_TOL: f64 = 1e-14;

const NEWTON_MAX_ITERS: usize = 50;
const NEWTON_TOL: f64 = 1e-13;

impl FinslerNorm {
    pub fn quadratic(a: Coefficient, b: Coefficient) -> Result<Self> {
        Self::validate_coefficients(a, b)?;
        let mut norm = Self {
            kind: NormKind::Quadratic { a, b },
            dual_bounds: (0.0, 0.0),
        };
        norm.dual_bounds = norm.sweep_dual_bounds()?;
        Ok(norm)
    }

    pub fn randers(a: Coefficient, b: Coefficient, drift: [f64; 2]) -> Result<Self> {
        Self::validate_coefficients(a, b)?;
        if !drift[0].is_finite() || !drift[1].is_finite() {
            return Err(Error::InvalidNorm("drift components must be finite".into()));
        }
        // ‖β‖²(x) = β_θ²/a(x) + β_φ²/b(x) is monotone in a and b separately,
        // so its supremum over the torus is attained at a corner of the
        // (cos θ, cos φ) square.
        let sup_drift_sq = a
            .corner_values()
            .iter()
            .zip(b.corner_values().iter())
            .map(|(&av, &bv)| drift[0] * drift[0] / av + drift[1] * drift[1] / bv)
            .fold(f64::NEG_INFINITY, f64::max);
        if sup_drift_sq >= 1.0 {
            return Err(Error::InvalidNorm(format!(
                "Randers drift must satisfy ‖β‖ < 1 in the base co-norm everywhere (sup ‖β‖ = {:.6})",
                sup_drift_sq.sqrt()
            )));
        }
        let mut norm = Self {
            kind: NormKind::Randers { a, b, drift },
            dual_bounds: (0.0, 0.0),
        };
        norm.dual_bounds = norm.sweep_dual_bounds()?;
        Ok(norm)
    }

    /// The isotropic norm F(y) = |y|.
    pub fn euclidean() -> Self {
        Self::quadratic(Coefficient::Constant(1.0), Coefficient::Constant(1.0))
            .expect("euclidean norm parameters are valid")
    }

    fn validate_coefficients(a: Coefficient, b: Coefficient) -> Result<()> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidNorm("coefficients must be finite".into()));
        }
        if a.min_value() <= 0.0 || b.min_value() <= 0.0 {
            return Err(Error::InvalidNorm(format!(
                "coefficients must be positive everywhere (min a = {:.6}, min b = {:.6})",
                a.min_value(),
                b.min_value()
            )));
        }
        Ok(())
    }

    /// Whether F(x, ·) is the same norm at every x.
    pub fn is_position_independent(&self) -> bool {
        match self.kind {
            NormKind::Quadratic { a, b } => a.is_constant() && b.is_constant(),
            NormKind::Randers { a, b, .. } => a.is_constant() && b.is_constant(),
        }
    }

    /// True for the quadratic (Riemannian) family.
    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, NormKind::Quadratic { .. })
    }

    /// Diagonal coefficients (a(x), b(x)) of the base quadratic form.
    pub fn base_coefficients(&self, theta: f64, phi: f64) -> (f64, f64) {
        match self.kind {
            NormKind::Quadratic { a, b } | NormKind::Randers { a, b, .. } => {
                (a.eval(theta, phi), b.eval(theta, phi))
            }
        }
    }

    /// Uniform equivalence interval [c₁, c₂] for F*(x, ξ)/|ξ| against the
    /// Euclidean co-norm, from the construction-time angular sweep (the
    /// interval carries a 1% resolution margin).
    pub fn equivalence_bounds(&self) -> (f64, f64) {
        self.dual_bounds
    }

    // ------------------------------------------------------------------
    // Primal norm and derivatives
    // ------------------------------------------------------------------

    /// F(x, y). Exactly 0 iff y = 0.
    pub fn eval_raw(&self, theta: f64, phi: f64, y: [f64; 2]) -> f64 {
        match self.kind {
            NormKind::Quadratic { a, b } => {
                let (av, bv) = (a.eval(theta, phi), b.eval(theta, phi));
                (av * y[0] * y[0] + bv * y[1] * y[1]).sqrt()
            }
            NormKind::Randers { a, b, drift } => {
                let (av, bv) = (a.eval(theta, phi), b.eval(theta, phi));
                let alpha = (av * y[0] * y[0] + bv * y[1] * y[1]).sqrt();
                alpha + drift[0] * y[0] + drift[1] * y[1]
            }
        }
    }

    pub fn eval(&self, y: &TangentVector) -> f64 {
        self.eval_raw(y.at.theta, y.at.phi, y.components)
    }

    /// Fundamental tensor g_ij(x,y) = ½ ∂²(F²)/∂y^i ∂y^j. Requires y ≠ 0:
    /// F² is not twice differentiable at the origin for non-quadratic norms.
    pub fn fundamental_raw(&self, theta: f64, phi: f64, y: [f64; 2]) -> Result<SymMat2> {
        if y[0] == 0.0 && y[1] == 0.0 {
            return Err(Error::Domain(
                "fundamental tensor is undefined at y = 0".into(),
            ));
        }
        Ok(match self.kind {
            NormKind::Quadratic { a, b } => {
                SymMat2::diagonal(a.eval(theta, phi), b.eval(theta, phi))
            }
            NormKind::Randers { a, b, drift } => {
                let (av, bv) = (a.eval(theta, phi), b.eval(theta, phi));
                let gy = [av * y[0], bv * y[1]];
                let alpha = (gy[0] * y[0] + gy[1] * y[1]).sqrt();
                let f = alpha + drift[0] * y[0] + drift[1] * y[1];
                // dF = Gy/α + β, d²F = G/α − (Gy)(Gy)ᵀ/α³
                let df = [gy[0] / alpha + drift[0], gy[1] / alpha + drift[1]];
                let a3 = alpha * alpha * alpha;
                let h_tt = av / alpha - gy[0] * gy[0] / a3;
                let h_tp = -gy[0] * gy[1] / a3;
                let h_pp = bv / alpha - gy[1] * gy[1] / a3;
                SymMat2 {
                    tt: df[0] * df[0] + f * h_tt,
                    tp: df[0] * df[1] + f * h_tp,
                    pp: df[1] * df[1] + f * h_pp,
                }
            }
        })
    }

    pub fn fundamental_tensor(&self, y: &TangentVector) -> Result<SymMat2> {
        self.fundamental_raw(y.at.theta, y.at.phi, y.components)
    }

    // ------------------------------------------------------------------
    // Legendre map and dual norm
    // ------------------------------------------------------------------

    /// Legendre image L(y) = ∂_y(½F²) = g(x,y)·y, with L(0) = 0 by
    /// continuous extension.
    pub fn legendre_raw(&self, theta: f64, phi: f64, y: [f64; 2]) -> [f64; 2] {
        if y[0] == 0.0 && y[1] == 0.0 {
            return [0.0, 0.0];
        }
        match self.kind {
            NormKind::Quadratic { a, b } => {
                [a.eval(theta, phi) * y[0], b.eval(theta, phi) * y[1]]
            }
            NormKind::Randers { a, b, drift } => {
                let (av, bv) = (a.eval(theta, phi), b.eval(theta, phi));
                let gy = [av * y[0], bv * y[1]];
                let alpha = (gy[0] * y[0] + gy[1] * y[1]).sqrt();
                let f = alpha + drift[0] * y[0] + drift[1] * y[1];
                [
                    f * (gy[0] / alpha + drift[0]),
                    f * (gy[1] / alpha + drift[1]),
                ]
            }
        }
    }

    pub fn legendre(&self, y: &TangentVector) -> CotangentVector {
        let xi = self.legendre_raw(y.at.theta, y.at.phi, y.components);
        CotangentVector { at: y.at, components: xi }
    }

    /// Inverse Legendre map. Closed form for quadratic norms; damped Newton
    /// on L(y) = ξ for Randers norms, solved at unit scale (L is positively
    /// 1-homogeneous) with the base quadratic form as the initial guess.
    pub fn legendre_inverse_raw(&self, theta: f64, phi: f64, xi: [f64; 2]) -> Result<[f64; 2]> {
        let scale = xi[0].hypot(xi[1]);
        if scale < ZERO_COVECTOR_TOL {
            return Ok([0.0, 0.0]);
        }
        match self.kind {
            NormKind::Quadratic { a, b } => Ok([
                xi[0] / a.eval(theta, phi),
                xi[1] / b.eval(theta, phi),
            ]),
            NormKind::Randers { a, b, .. } => {
                let unit = [xi[0] / scale, xi[1] / scale];
                let (av, bv) = (a.eval(theta, phi), b.eval(theta, phi));
                let mut y = [unit[0] / av, unit[1] / bv];
                let mut res = self.residual(theta, phi, y, unit);
                let mut res_norm = res[0].hypot(res[1]);
                for _ in 0..NEWTON_MAX_ITERS {
                    if res_norm <= NEWTON_TOL {
                        return Ok([scale * y[0], scale * y[1]]);
                    }
                    let jac = self.fundamental_raw(theta, phi, y)?;
                    let step = jac.solve([-res[0], -res[1]])?;
                    // Armijo damping on the residual norm.
                    let mut t = 1.0;
                    loop {
                        let trial = [y[0] + t * step[0], y[1] + t * step[1]];
                        let trial_res = self.residual(theta, phi, trial, unit);
                        let trial_norm = trial_res[0].hypot(trial_res[1]);
                        if trial_norm <= (1.0 - 1e-4 * t) * res_norm || t < 1e-10 {
                            y = trial;
                            res = trial_res;
                            res_norm = trial_norm;
                            break;
                        }
                        t *= 0.5;
                    }
                }
                if res_norm <= NEWTON_TOL {
                    Ok([scale * y[0], scale * y[1]])
                } else {
                    Err(Error::IterativeFailure {
                        context: "Legendre inverse Newton",
                        residual: res_norm * scale,
                        iterations: NEWTON_MAX_ITERS,
                    })
                }
            }
        }
    }

    fn residual(&self, theta: f64, phi: f64, y: [f64; 2], xi: [f64; 2]) -> [f64; 2] {
        let l = self.legendre_raw(theta, phi, y);
        [l[0] - xi[0], l[1] - xi[1]]
    }

    pub fn legendre_inverse(&self, xi: &CotangentVector) -> Result<TangentVector> {
        let y = self.legendre_inverse_raw(xi.at.theta, xi.at.phi, xi.components)?;
        Ok(TangentVector { at: xi.at, components: y })
    }

    /// Dual norm F*(x, ξ) = F(x, L⁻¹(ξ)), with F*(x, 0) = 0.
    pub fn dual_norm_raw(&self, theta: f64, phi: f64, xi: [f64; 2]) -> Result<f64> {
        match self.kind {
            NormKind::Quadratic { a, b } => {
                let (av, bv) = (a.eval(theta, phi), b.eval(theta, phi));
                Ok((xi[0] * xi[0] / av + xi[1] * xi[1] / bv).sqrt())
            }
            NormKind::Randers { .. } => {
                let y = self.legendre_inverse_raw(theta, phi, xi)?;
                Ok(self.eval_raw(theta, phi, y))
            }
        }
    }

    pub fn dual_norm(&self, xi: &CotangentVector) -> Result<f64> {
        self.dual_norm_raw(xi.at.theta, xi.at.phi, xi.components)
    }

    /// ½F*(x,ξ)² together with its ξ-gradient L⁻¹(ξ), sharing one Newton
    /// solve. This is the kinetic-term kernel of the energy assembly.
    pub fn dual_half_sq_and_grad(
        &self,
        theta: f64,
        phi: f64,
        xi: [f64; 2],
    ) -> Result<(f64, [f64; 2])> {
        if xi[0].hypot(xi[1]) < ZERO_COVECTOR_TOL {
            return Ok((0.0, [0.0, 0.0]));
        }
        match self.kind {
            NormKind::Quadratic { a, b } => {
                let (av, bv) = (a.eval(theta, phi), b.eval(theta, phi));
                let grad = [xi[0] / av, xi[1] / bv];
                Ok((0.5 * (xi[0] * grad[0] + xi[1] * grad[1]), grad))
            }
            NormKind::Randers { .. } => {
                let y = self.legendre_inverse_raw(theta, phi, xi)?;
                let f = self.eval_raw(theta, phi, y);
                Ok((0.5 * f * f, y))
            }
        }
    }

    /// Fenchel-Young gap ½F(y)² + ½F*(ξ)² − ξ(y); nonnegative, and zero
    /// exactly when ξ = L(y). Both vectors must sit in the same fiber.
    pub fn fenchel_gap(&self, y: &TangentVector, xi: &CotangentVector) -> Result<f64> {
        let same_fiber = (y.at.theta - xi.at.theta).abs() < 1e-9
            && (y.at.phi - xi.at.phi).abs() < 1e-9;
        if !same_fiber {
            return Err(Error::Domain(
                "Fenchel-Young pairing requires a common base point".into(),
            ));
        }
        let f = self.eval(y);
        let fs = self.dual_norm_raw(y.at.theta, y.at.phi, xi.components)?;
        Ok(0.5 * f * f + 0.5 * fs * fs - xi.pair(y.components))
    }

    /// Construction-time angular sweep for the equivalence constants of F*
    /// against the Euclidean co-norm. Sampled over 512 covector angles and,
    /// for position-dependent coefficients, a 17×17 grid of base points;
    /// padded by 1% to cover the sweep resolution.
    fn sweep_dual_bounds(&self) -> Result<(f64, f64)> {
        let n_angles = 512;
        let points: Vec<(f64, f64)> = if self.is_position_independent() {
            vec![(0.0, 0.0)]
        } else {
            let n = 17;
            let mut pts = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let t = i as f64 * std::f64::consts::TAU / n as f64;
                    let p = j as f64 * std::f64::consts::TAU / n as f64;
                    pts.push((t, p));
                }
            }
            pts
        };
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &(t, p) in &points {
            for k in 0..n_angles {
                let w = k as f64 * std::f64::consts::TAU / n_angles as f64;
                let ratio = self.dual_norm_raw(t, p, [w.cos(), w.sin()])?;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        Ok((lo * 0.99, hi * 1.01))
    }
}
