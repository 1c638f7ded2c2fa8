//! Energy functions F̂: ℝ⁺ → ℝ⁺ for the energy-adaptive gradient iteration.
//!
//! An *energy function* transforms the shifted objective value `f(x) + c` into
//! the energy `F = F̂(f(x) + c)` that drives the adaptive step-size mechanism.
//! Admissible energies are smooth, strictly increasing (`F̂' > 0`), and concave;
//! the two shipped families are
//!
//! * **Power**: `F̂(s) = s^p` with exponent `p ∈ (0, 1]` — `p = 0.5` is the
//!   classic square-root energy,
//! * **Logarithmic**: `F̂(s) = log(s + 1)`.
//!
//! Each energy exposes its derivative, inverse, and derivative-inverse in
//! closed form (the theory engine needs all four), plus metadata flags used to
//! decide which closed-form bounds apply: strict concavity, a vanishing
//! derivative at infinity, and unboundedness.
//!
//! Concavity can also be probed *numerically* on a user-supplied grid via
//! [`EnergyFunction::check_admissibility`], which keeps the admissibility
//! notion open to exponents outside `(0, 1]` constructed for negative testing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from energy-function evaluation and construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    /// Energies are defined on s > 0 only.
    #[error("energy functions are defined for positive inputs only, got s = {0}")]
    NonPositiveInput(f64),
    /// The requested value lies outside the function's range.
    #[error("value {value} is outside the range of {what}")]
    OutOfRange { what: String, value: f64 },
    /// `power:1` has a constant derivative, so its derivative has no inverse.
    #[error("the derivative of power:1 is constant and cannot be inverted")]
    ConstantDerivative,
    /// Power exponents must lie in (0, 1] for an admissible energy.
    #[error("power exponent must lie in (0, 1], got {0}")]
    InvalidExponent(f64),
    /// Unrecognized energy name in configuration.
    #[error("unknown energy `{0}` (expected `power:<p>`, `log`, `aegd`, or `alegd`)")]
    UnknownName(String),
}

/// The concrete functional form of an energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnergyKind {
    /// `F̂(s) = s^p`.
    Power(f64),
    /// `F̂(s) = log(s + 1)`.
    Logarithmic,
}

/// An energy function together with the admissibility metadata the theory
/// engine consults.
///
/// Values are immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyFunction {
    pub kind: EnergyKind,
    /// True iff `F̂'' < 0` everywhere on ℝ⁺ (power with p < 1; logarithmic).
    pub strictly_concave: bool,
    /// True iff `F̂'(s) → 0` as `s → ∞` (power with p < 1; logarithmic).
    pub derivative_vanishes: bool,
    /// True iff `F̂(s) → ∞` as `s → ∞` (all shipped energies).
    pub unbounded: bool,
}

/// Numeric admissibility probe results for a given grid, alongside the
/// constructed metadata flags. Report-only: construction never fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// Values strictly increase along the grid.
    pub monotone_increasing: bool,
    /// Closed-form derivative is positive at every grid point.
    pub derivative_positive: bool,
    /// Finite-difference slopes are non-increasing along the grid.
    pub concave: bool,
    pub strictly_concave: bool,
    pub derivative_vanishes: bool,
    pub unbounded: bool,
}

impl AdmissibilityReport {
    /// The optimizer accepts exactly the energies passing the monotonicity
    /// and concavity probes with a positive derivative.
    pub fn is_admissible(&self) -> bool {
        self.monotone_increasing && self.derivative_positive && self.concave
    }
}

impl EnergyFunction {
    /// The power energy `F̂(s) = s^p`, restricted to admissible exponents
    /// `p ∈ (0, 1]`.
    pub fn power(p: f64) -> Result<Self, EnergyError> {
        if !(p > 0.0 && p <= 1.0) || !p.is_finite() {
            return Err(EnergyError::InvalidExponent(p));
        }
        Ok(Self::power_unchecked(p))
    }

    /// A power energy with an arbitrary positive exponent, including the
    /// inadmissible convex range `p > 1`. Exists so admissibility probes can
    /// be negative-tested; the optimizer will reject such energies.
    pub fn power_unchecked(p: f64) -> Self {
        EnergyFunction {
            kind: EnergyKind::Power(p),
            strictly_concave: p < 1.0,
            derivative_vanishes: p < 1.0,
            unbounded: p > 0.0,
        }
    }

    /// The logarithmic energy `F̂(s) = log(s + 1)`.
    pub fn logarithmic() -> Self {
        EnergyFunction {
            kind: EnergyKind::Logarithmic,
            strictly_concave: true,
            derivative_vanishes: true,
            unbounded: true,
        }
    }

    /// The square-root energy `F̂(s) = √s` used by the original
    /// energy-adaptive method.
    pub fn sqrt() -> Self {
        Self::power_unchecked(0.5)
    }

    /// Parses a configuration name: `power:<p>`, `log`, or the method aliases
    /// `aegd` (→ `power:0.5`) and `alegd` (→ `log`).
    pub fn parse(name: &str) -> Result<Self, EnergyError> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "log" | "alegd" => Ok(Self::logarithmic()),
            "aegd" => Ok(Self::sqrt()),
            _ => {
                if let Some(p_text) = lower.strip_prefix("power:") {
                    let p: f64 = p_text
                        .parse()
                        .map_err(|_| EnergyError::UnknownName(name.to_string()))?;
                    Self::power(p)
                } else {
                    Err(EnergyError::UnknownName(name.to_string()))
                }
            }
        }
    }

    /// Canonical configuration name of this energy.
    pub fn name(&self) -> String {
        match self.kind {
            EnergyKind::Power(p) => format!("power:{p}"),
            EnergyKind::Logarithmic => "log".to_string(),
        }
    }

    /// `F̂(s)` for `s > 0`.
    pub fn value(&self, s: f64) -> Result<f64, EnergyError> {
        if !(s > 0.0) {
            return Err(EnergyError::NonPositiveInput(s));
        }
        Ok(match self.kind {
            EnergyKind::Power(p) => s.powf(p),
            EnergyKind::Logarithmic => s.ln_1p(),
        })
    }

    /// `F̂'(s)` for `s > 0`: `p·s^(p−1)` for powers, `1/(s+1)` for the
    /// logarithm.
    pub fn derivative(&self, s: f64) -> Result<f64, EnergyError> {
        if !(s > 0.0) {
            return Err(EnergyError::NonPositiveInput(s));
        }
        Ok(match self.kind {
            EnergyKind::Power(p) => p * s.powf(p - 1.0),
            EnergyKind::Logarithmic => 1.0 / (s + 1.0),
        })
    }

    /// `F̂⁻¹(y)`: the unique `s > 0` with `F̂(s) = y`. Both shipped families
    /// map ℝ⁺ onto ℝ⁺, so any `y > 0` is in range.
    pub fn inverse(&self, y: f64) -> Result<f64, EnergyError> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(EnergyError::OutOfRange {
                what: self.name(),
                value: y,
            });
        }
        Ok(match self.kind {
            EnergyKind::Power(p) => y.powf(1.0 / p),
            EnergyKind::Logarithmic => y.exp_m1(),
        })
    }

    /// `(F̂')⁻¹(y)`: the unique `s > 0` with `F̂'(s) = y`, defined when the
    /// derivative is strictly decreasing. For `power:p` with `p < 1` this is
    /// `(y/p)^(1/(p−1))`; for the logarithm, `1/y − 1` on `y ∈ (0, 1)`.
    ///
    /// `power:1` has the constant derivative 1 and returns
    /// [`EnergyError::ConstantDerivative`], signalling that the bounds built
    /// on this inverse are undefined for that energy.
    pub fn derivative_inverse(&self, y: f64) -> Result<f64, EnergyError> {
        match self.kind {
            EnergyKind::Power(p) => {
                if (p - 1.0).abs() < f64::EPSILON {
                    return Err(EnergyError::ConstantDerivative);
                }
                if !(y > 0.0) || !y.is_finite() {
                    return Err(EnergyError::OutOfRange {
                        what: format!("the derivative of {}", self.name()),
                        value: y,
                    });
                }
                Ok((y / p).powf(1.0 / (p - 1.0)))
            }
            EnergyKind::Logarithmic => {
                // 1/(s+1) maps s ∈ (0, ∞) onto (0, 1).
                if !(y > 0.0 && y < 1.0) {
                    return Err(EnergyError::OutOfRange {
                        what: "the derivative of log".to_string(),
                        value: y,
                    });
                }
                Ok(1.0 / y - 1.0)
            }
        }
    }

    /// Probes monotonicity, derivative positivity, and concavity numerically
    /// on `grid`, which must be strictly positive, strictly increasing, and
    /// hold at least 3 points.
    ///
    /// Concavity is judged by non-increasing finite-difference slopes (with a
    /// small relative slack so the exactly-linear `power:1` passes as weakly
    /// concave), deliberately avoiding symbolic criteria so that the notion
    /// extends to user-defined grids and exponents.
    pub fn check_admissibility(&self, grid: &[f64]) -> AdmissibilityReport {
        assert!(
            grid.len() >= 3,
            "admissibility grid needs at least 3 points, got {}",
            grid.len()
        );
        assert!(
            grid.windows(2).all(|w| 0.0 < w[0] && w[0] < w[1]),
            "admissibility grid must be strictly positive and strictly increasing"
        );

        let values: Vec<f64> = grid
            .iter()
            .map(|&s| self.value(s).expect("grid points are positive"))
            .collect();
        let monotone_increasing = values.windows(2).all(|w| w[0] < w[1]);
        let derivative_positive = grid
            .iter()
            .all(|&s| self.derivative(s).map(|d| d > 0.0).unwrap_or(false));

        let slopes: Vec<f64> = values
            .windows(2)
            .zip(grid.windows(2))
            .map(|(v, s)| (v[1] - v[0]) / (s[1] - s[0]))
            .collect();
        let concave = slopes
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);

        AdmissibilityReport {
            monotone_increasing,
            derivative_positive,
            concave,
            strictly_concave: self.strictly_concave,
            derivative_vanishes: self.derivative_vanishes,
            unbounded: self.unbounded,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let (llo, lhi) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn value_matches_closed_forms() {
        let sqrt = EnergyFunction::sqrt();
        assert_relative_eq!(sqrt.value(4.0).unwrap(), 2.0, max_relative = 1e-15);
        let log = EnergyFunction::logarithmic();
        assert!(
            log.value(1e-15).unwrap() < 1.1e-15,
            "log energy must vanish as s → 0⁺"
        );
        let p02 = EnergyFunction::power(0.2).unwrap();
        assert_relative_eq!(p02.value(32.0).unwrap(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn derivative_matches_closed_forms() {
        assert_relative_eq!(
            EnergyFunction::sqrt().derivative(4.0).unwrap(),
            0.25,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            EnergyFunction::logarithmic().derivative(1.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            EnergyFunction::power(1.0).unwrap().derivative(7.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn inverse_matches_closed_forms() {
        assert_relative_eq!(
            EnergyFunction::sqrt().inverse(3.0).unwrap(),
            9.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            EnergyFunction::logarithmic().inverse(3f64.ln()).unwrap(),
            2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            EnergyFunction::power(0.2).unwrap().inverse(2.0).unwrap(),
            32.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn derivative_inverse_matches_closed_forms() {
        assert_relative_eq!(
            EnergyFunction::logarithmic()
                .derivative_inverse(0.5)
                .unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            EnergyFunction::sqrt().derivative_inverse(0.25).unwrap(),
            4.0,
            max_relative = 1e-14
        );
        assert_eq!(
            EnergyFunction::power(1.0).unwrap().derivative_inverse(0.3),
            Err(EnergyError::ConstantDerivative),
            "power:1 has a constant derivative and must refuse inversion"
        );
    }

    #[test]
    fn domain_errors_for_non_positive_inputs() {
        let e = EnergyFunction::sqrt();
        assert!(matches!(
            e.value(0.0),
            Err(EnergyError::NonPositiveInput(_))
        ));
        assert!(matches!(
            e.value(-1.0),
            Err(EnergyError::NonPositiveInput(_))
        ));
        assert!(matches!(
            e.derivative(-2.0),
            Err(EnergyError::NonPositiveInput(_))
        ));
        assert!(matches!(
            e.inverse(0.0),
            Err(EnergyError::OutOfRange { .. })
        ));
        assert!(matches!(
            EnergyFunction::logarithmic().derivative_inverse(1.5),
            Err(EnergyError::OutOfRange { .. })
        ));
    }

    #[test]
    fn round_trips_on_log_grid() {
        let grid = log_grid(1e-6, 1e6, 50);
        for energy in [
            EnergyFunction::sqrt(),
            EnergyFunction::power(0.2).unwrap(),
            EnergyFunction::power(0.9).unwrap(),
            EnergyFunction::logarithmic(),
        ] {
            for &s in &grid {
                let y = energy.value(s).unwrap();
                assert_relative_eq!(
                    energy.inverse(y).unwrap(),
                    s,
                    max_relative = 1e-12,
                    epsilon = 1e-300
                );
                let d = energy.derivative(s).unwrap();
                assert_relative_eq!(
                    energy.derivative_inverse(d).unwrap(),
                    s,
                    max_relative = 1e-10,
                    epsilon = 1e-300
                );
            }
        }
    }

    #[test]
    fn sqrt_energy_value_derivative_product_is_half() {
        // F̂(s)·F̂'(s) = √s · 1/(2√s) = 1/2 — the identity behind the
        // equivalence with the original square-root method.
        let e = EnergyFunction::sqrt();
        for &s in &log_grid(1e-6, 1e6, 50) {
            let product = e.value(s).unwrap() * e.derivative(s).unwrap();
            assert_relative_eq!(product, 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn admissibility_accepts_shipped_energies_and_rejects_convex_powers() {
        let grid = [0.1, 1.0, 10.0, 100.0];
        let ok = EnergyFunction::logarithmic().check_admissibility(&grid);
        assert!(ok.is_admissible(), "log energy must pass admissibility");
        let ok = EnergyFunction::sqrt().check_admissibility(&grid);
        assert!(ok.is_admissible(), "sqrt energy must pass admissibility");

        let convex = EnergyFunction::power_unchecked(1.5).check_admissibility(&grid);
        assert!(
            !convex.concave,
            "power:1.5 is convex and must fail the concavity probe"
        );
        assert!(!convex.is_admissible());
    }

    #[test]
    fn derivative_is_non_increasing() {
        for energy in [
            EnergyFunction::sqrt(),
            EnergyFunction::power(0.3).unwrap(),
            EnergyFunction::power(1.0).unwrap(),
            EnergyFunction::logarithmic(),
        ] {
            let grid = log_grid(1e-6, 1e6, 60);
            let derivs: Vec<f64> = grid
                .iter()
                .map(|&s| energy.derivative(s).unwrap())
                .collect();
            for w in derivs.windows(2) {
                assert!(
                    w[1] <= w[0] * (1.0 + 1e-12),
                    "derivative of {} increased along the grid",
                    energy.name()
                );
            }
        }
    }

    #[test]
    fn parse_accepts_names_and_aliases() {
        assert_eq!(
            EnergyFunction::parse("aegd").unwrap().kind,
            EnergyKind::Power(0.5)
        );
        assert_eq!(
            EnergyFunction::parse("alegd").unwrap().kind,
            EnergyKind::Logarithmic
        );
        assert_eq!(
            EnergyFunction::parse("power:0.3").unwrap().kind,
            EnergyKind::Power(0.3)
        );
        assert_eq!(
            EnergyFunction::parse("log").unwrap().kind,
            EnergyKind::Logarithmic
        );
        assert!(EnergyFunction::parse("power:1.5").is_err());
        assert!(EnergyFunction::parse("sqrtish").is_err());
    }
}
