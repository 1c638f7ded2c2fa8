//! Benchmark objectives with analytic gradients, closed-form Hessians, and
//! the metadata (known minimum, gradient Lipschitz constant, default start)
//! that the optimizer and the theory engine consume.
//!
//! Two benchmarks ship:
//!
//! * `quad100` — the ill-conditioned 100-dimensional quadratic
//!   `f(x) = Σᵢ x_{2i−1}² + Σᵢ x_{2i}²/100` (odd positions carry coefficient 1,
//!   even positions 1/100), with `L = 2` and gradient-dominance modulus
//!   `μ = 0.02`;
//! * `rosenbrock:<b>` — the 2-D valley `f(x) = (1 − x₁)² + b(x₂ − x₁²)²`
//!   (default `b = 100`), whose Hessian is unbounded, so no global `L` is
//!   attached; callers derive an empirical surrogate from trajectory Hessians.
//!
//! A 1-D quadratic `f(x) = x²` is included for worked examples and tests.

use serde::Serialize;
use thiserror::Error;

/// Errors from objective construction and lookup.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("unknown objective `{0}` (expected `quad100` or `rosenbrock:<b>`)")]
    UnknownName(String),
    #[error("rosenbrock curvature parameter must be positive, got {0}")]
    InvalidCurvature(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
enum ObjectiveKind {
    Quad100,
    Rosenbrock { b: f64 },
    Quad1d,
}

/// A differentiable benchmark function.
///
/// Evaluations are pure and the struct is immutable; instances are freely
/// shared across threads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Objective {
    kind: ObjectiveKind,
    /// Problem dimension.
    pub dimension: usize,
    /// Known global minimum value.
    pub f_star: f64,
    /// Gradient Lipschitz constant, when one exists globally.
    pub lipschitz: Option<f64>,
    /// Gradient-dominance (Polyak-type) modulus `μ` with
    /// `‖∇f(x)‖² ≥ 2μ(f(x) − f*)`, when known analytically.
    pub pl_modulus: Option<f64>,
    /// Conventional starting point for experiments.
    pub default_x0: Vec<f64>,
}

impl Objective {
    /// The 100-dimensional ill-conditioned quadratic.
    ///
    /// `f(x) = Σ_{i=1}^{50} x_{2i−1}² + Σ_{i=1}^{50} x_{2i}²/100` (1-based
    /// positions), `f* = 0`, `L = 2`, `μ = 2·(1/100) = 0.02`, start `(1,…,1)`.
    pub fn quadratic_100d() -> Self {
        Objective {
            kind: ObjectiveKind::Quad100,
            dimension: 100,
            f_star: 0.0,
            lipschitz: Some(2.0),
            pl_modulus: Some(0.02),
            default_x0: vec![1.0; 100],
        }
    }

    /// The 2-D Rosenbrock valley `f(x) = (1 − x₁)² + b(x₂ − x₁²)²` with
    /// minimizer `(1, 1)`, start `(−3, −4)`.
    ///
    /// No global Lipschitz constant is attached: the Hessian grows without
    /// bound, so per-run surrogates come from
    /// [`Objective::hessian_spectral_norm`] along a trajectory.
    pub fn rosenbrock(b: f64) -> Self {
        assert!(b > 0.0, "rosenbrock curvature must be positive, got {b}");
        Objective {
            kind: ObjectiveKind::Rosenbrock { b },
            dimension: 2,
            f_star: 0.0,
            lipschitz: None,
            pl_modulus: None,
            default_x0: vec![-3.0, -4.0],
        }
    }

    /// The scalar quadratic `f(x) = x²` used by worked examples and tests.
    pub fn quadratic_1d() -> Self {
        Objective {
            kind: ObjectiveKind::Quad1d,
            dimension: 1,
            f_star: 0.0,
            lipschitz: Some(2.0),
            pl_modulus: Some(2.0),
            default_x0: vec![1.0],
        }
    }

    /// Parses a configuration name: `quad100`, `rosenbrock` (b = 100), or
    /// `rosenbrock:<b>`.
    pub fn parse(name: &str) -> Result<Self, ObjectiveError> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "quad100" => Ok(Self::quadratic_100d()),
            "rosenbrock" => Ok(Self::rosenbrock(100.0)),
            _ => {
                if let Some(b_text) = lower.strip_prefix("rosenbrock:") {
                    let b: f64 = b_text
                        .parse()
                        .map_err(|_| ObjectiveError::UnknownName(name.to_string()))?;
                    if b > 0.0 {
                        Ok(Self::rosenbrock(b))
                    } else {
                        Err(ObjectiveError::InvalidCurvature(b))
                    }
                } else {
                    Err(ObjectiveError::UnknownName(name.to_string()))
                }
            }
        }
    }

    /// Canonical configuration name.
    pub fn name(&self) -> String {
        match self.kind {
            ObjectiveKind::Quad100 => "quad100".to_string(),
            ObjectiveKind::Rosenbrock { b } => format!("rosenbrock:{b}"),
            ObjectiveKind::Quad1d => "quad1d".to_string(),
        }
    }

    /// `f(x)`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        match self.kind {
            ObjectiveKind::Quad100 => {
                let mut f = 0.0;
                for (j, &xj) in x.iter().enumerate() {
                    // 0-based even j is 1-based odd position: coefficient 1.
                    let coeff = if j % 2 == 0 { 1.0 } else { 0.01 };
                    f += coeff * xj * xj;
                }
                f
            }
            ObjectiveKind::Rosenbrock { b } => {
                let (x1, x2) = (x[0], x[1]);
                (1.0 - x1) * (1.0 - x1) + b * (x2 - x1 * x1) * (x2 - x1 * x1)
            }
            ObjectiveKind::Quad1d => x[0] * x[0],
        }
    }

    /// Analytic gradient `∇f(x)`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        self.gradient_into(x, &mut out);
        out
    }

    /// Analytic gradient written into `out` (allocation-free hot path).
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dimension);
        debug_assert_eq!(out.len(), self.dimension);
        match self.kind {
            ObjectiveKind::Quad100 => {
                for (j, (&xj, oj)) in x.iter().zip(out.iter_mut()).enumerate() {
                    // d/dx of x² is 2x; of x²/100 is 2x/100 = 0.02·x.
                    *oj = if j % 2 == 0 { 2.0 * xj } else { 0.02 * xj };
                }
            }
            ObjectiveKind::Rosenbrock { b } => {
                let (x1, x2) = (x[0], x[1]);
                let gap = x2 - x1 * x1;
                out[0] = -2.0 * (1.0 - x1) - 4.0 * b * x1 * gap;
                out[1] = 2.0 * b * gap;
            }
            ObjectiveKind::Quad1d => out[0] = 2.0 * x[0],
        }
    }

    /// Closed-form Hessian (row-major `dimension × dimension`), available for
    /// every shipped objective.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dimension;
        let mut h = vec![0.0; d * d];
        match self.kind {
            ObjectiveKind::Quad100 => {
                for j in 0..d {
                    h[j * d + j] = if j % 2 == 0 { 2.0 } else { 0.02 };
                }
            }
            ObjectiveKind::Rosenbrock { b } => {
                let (x1, x2) = (x[0], x[1]);
                h[0] = 2.0 - 4.0 * b * (x2 - x1 * x1) + 8.0 * b * x1 * x1;
                h[1] = -4.0 * b * x1;
                h[2] = -4.0 * b * x1;
                h[3] = 2.0 * b;
            }
            ObjectiveKind::Quad1d => h[0] = 2.0,
        }
        h
    }

    /// Spectral norm of the Hessian at `x` — the largest absolute eigenvalue.
    ///
    /// Constant for the quadratics; the closed-form symmetric 2×2 eigenvalue
    /// formula for Rosenbrock. Trajectory maxima of this quantity serve as the
    /// empirical Lipschitz surrogate where no global constant exists.
    pub fn hessian_spectral_norm(&self, x: &[f64]) -> f64 {
        match self.kind {
            ObjectiveKind::Quad100 => 2.0,
            ObjectiveKind::Quad1d => 2.0,
            ObjectiveKind::Rosenbrock { .. } => {
                let h = self.hessian(x);
                let (a, b_off, c) = (h[0], h[1], h[3]);
                let mean = 0.5 * (a + c);
                let disc = (0.5 * (a - c)).hypot(b_off);
                (mean + disc).abs().max((mean - disc).abs())
            }
        }
    }
}

/// Central-difference gradient approximation with per-coordinate step
/// `h·(1 + |x_j|)`; the verification oracle for analytic gradients.
pub fn finite_difference_gradient(obj: &Objective, x: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut out = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let hj = h * (1.0 + x[j].abs());
        probe[j] = x[j] + hj;
        let fp = obj.evaluate(&probe);
        probe[j] = x[j] - hj;
        let fm = obj.evaluate(&probe);
        probe[j] = x[j];
        out[j] = (fp - fm) / (2.0 * hj);
    }
    out
}
