//! Closed-form constants and convergence bounds for the energy-adaptive
//! method, plus verifiers that check them against computed trajectories.
//!
//! All quantities live in the scalar-coupling setting on objectives with an
//! L-Lipschitz gradient that are bounded below. Writing `F* = F̂(f* + c)`,
//! `F₀ = F̂(f₀ + c)` and `r₀` for the initial energy, the engine computes:
//!
//! * stability envelopes `F̄ = F₀ + Lη r₀²/(4F*)`, `f̄ = F̂⁻¹(F̄) − c`, the
//!   derivative bracket `F̂'(f̄+c) ≤ F'_k ≤ F̂'(f*+c)`, and the contraction
//!   modulus `α̲ = F̂'(f̄+c)/F̄`;
//! * the energy gap bound `F_k − r_k ≤ F_m − r_m + (Lη/4F*)(r_m² − r_k²)`
//!   for any `m ≤ k`;
//! * the two-stage threshold `N₀` after which either the squared gradient
//!   norm has dipped below ε or the energy has fallen to a chosen level `C`;
//! * the step-size threshold `η_{r0} = 4F*(r₀ − F₀ + F*)/(Lr₀²)` under which
//!   the energy stays bounded away from zero, with the explicit floor
//!   `r* ≥ (Lr₀²/4F*)(η_{r0} − η)`;
//! * the robust-shift constants `c*` (min–max construction), `c̄` and `c̃`
//!   that guarantee non-degenerate energies by choosing `c` large enough;
//! * the worst-case iteration count `N(ε)` to reach `min_k ‖∇f_k‖² < ε`;
//! * the gradient-domination (KL) rate constants `Q, C₁, C₂, C₃` and the
//!   finite-termination count `k₀` across the three exponent regimes.
//!
//! The linear energy `power:1` is accepted by the optimizer but rejected by
//! the calculators that require strict concavity and a vanishing derivative
//! (the robust-shift construction and everything downstream of it).

use crate::energy::{EnergyError, EnergyFunction, EnergyKind};
use crate::objectives::Objective;
use crate::optimizer::{GaegdConfig, R0Policy, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Errors from theory calculations.
#[derive(Debug, Error)]
pub enum TheoryError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("invalid input: {what} = {value}")]
    InvalidInput { what: &'static str, value: f64 },
    #[error("the objective does not carry a gradient-Lipschitz constant; supply one explicitly")]
    MissingLipschitz,
    #[error("the linear energy has a constant derivative; the robust-shift construction needs a strictly concave energy with vanishing derivative")]
    UnsupportedEnergy,
    #[error("gradient-domination exponent must lie in (0, 2), got {0}")]
    ExponentOutOfRange(f64),
    #[error("contraction factor Q = {0} is not in (0, 1); the linear-rate bound is vacuous")]
    NoContraction(f64),
}

/// The symbols every bound is built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryInputs {
    pub eta: f64,
    pub c: f64,
    pub r0: f64,
    pub f0: f64,
    pub f_star: f64,
    /// Gradient Lipschitz constant of the objective.
    pub lipschitz: f64,
    pub energy: EnergyFunction,
}

impl TheoryInputs {
    /// Validates `eta > 0`, `r0 > 0`, `f* + c > 0`, `L > 0`, `f0 ≥ f*`.
    pub fn new(
        eta: f64,
        c: f64,
        r0: f64,
        f0: f64,
        f_star: f64,
        lipschitz: f64,
        energy: EnergyFunction,
    ) -> Result<Self, TheoryError> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(TheoryError::InvalidInput {
                what: "eta",
                value: eta,
            });
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(TheoryError::InvalidInput {
                what: "r0",
                value: r0,
            });
        }
        if !(f_star + c > 0.0) {
            return Err(TheoryError::InvalidInput {
                what: "f_star + c",
                value: f_star + c,
            });
        }
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(TheoryError::InvalidInput {
                what: "lipschitz",
                value: lipschitz,
            });
        }
        if !(f0 >= f_star) {
            return Err(TheoryError::InvalidInput {
                what: "f0 - f_star",
                value: f0 - f_star,
            });
        }
        Ok(TheoryInputs {
            eta,
            c,
            r0,
            f0,
            f_star,
            lipschitz,
            energy,
        })
    }

    /// Builds inputs from a run configuration, taking `f₀` at `x0`, the
    /// Lipschitz constant from the objective, and `r₀` from the config's
    /// policy.
    pub fn from_config(
        config: &GaegdConfig,
        obj: &Objective,
        x0: &[f64],
    ) -> Result<Self, TheoryError> {
        let lipschitz = obj.lipschitz.ok_or(TheoryError::MissingLipschitz)?;
        let f0 = obj.evaluate(x0);
        let r0 = match config.r0_policy {
            R0Policy::DefaultF0 => config.energy.value(f0 + config.c)?,
            R0Policy::Explicit(r0) => r0,
        };
        TheoryInputs::new(
            config.eta,
            config.c,
            r0,
            f0,
            obj.f_star,
            lipschitz,
            config.energy.clone(),
        )
    }
}

/// Stability envelopes: every run's `F_k`, `f_k`, `F'_k` stay inside these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityBounds {
    /// `F* = F̂(f* + c)` — lower envelope of `F_k`.
    #[serde(rename = "F_star")]
    pub big_f_star: f64,
    /// `F₀ = F̂(f₀ + c)`.
    #[serde(rename = "F0")]
    pub big_f0: f64,
    /// `F̄ = F₀ + Lη r₀²/(4F*)` — upper envelope of `F_k`.
    #[serde(rename = "F_bar")]
    pub big_f_bar: f64,
    /// `f̄ = F̂⁻¹(F̄) − c` — upper envelope of `f_k`.
    pub f_bar: f64,
    /// `F̂'(f* + c)` — upper envelope of `F'_k` (concavity).
    #[serde(rename = "Fp_star")]
    pub fp_star: f64,
    /// `F̂'(f̄ + c)` — lower envelope of `F'_k`.
    #[serde(rename = "Fp_bar")]
    pub fp_bar: f64,
    /// `α̲ = F̂'(f̄+c)/F̄`, the worst-case per-step contraction modulus.
    pub alpha_lower: f64,
}

/// Computes the stability envelopes (see [`StabilityBounds`]).
pub fn stability_bounds(inputs: &TheoryInputs) -> Result<StabilityBounds, TheoryError> {
    let energy = &inputs.energy;
    let big_f_star = energy.value(inputs.f_star + inputs.c)?;
    let big_f0 = energy.value(inputs.f0 + inputs.c)?;
    let big_f_bar =
        big_f0 + inputs.lipschitz * inputs.eta * inputs.r0 * inputs.r0 / (4.0 * big_f_star);
    let f_bar = energy.inverse(big_f_bar)? - inputs.c;
    let fp_star = energy.derivative(inputs.f_star + inputs.c)?;
    let fp_bar = energy.derivative(f_bar + inputs.c)?;
    Ok(StabilityBounds {
        big_f_star,
        big_f0,
        big_f_bar,
        f_bar,
        fp_star,
        fp_bar,
        alpha_lower: fp_bar / big_f_bar,
    })
}

/// Evaluates the energy gap bound along a trajectory and returns the worst
/// violation `max (LHS − RHS)` of
///
/// ```text
/// F_k − r_k ≤ F_m − r_m + (Lη/4F*)(r_m² − r_k²),   m ≤ k,
/// ```
///
/// checked for `m = 0` against every `k`, plus 100 seeded-random `(m, k)`
/// pairs with `k > m`. A correct run keeps this at numerical-noise level.
pub fn gap_bound_check(trajectory: &Trajectory, inputs: &TheoryInputs) -> Result<f64, TheoryError> {
    let energy = &inputs.energy;
    let big_f_star = energy.value(inputs.f_star + inputs.c)?;
    let scale = inputs.lipschitz * inputs.eta / (4.0 * big_f_star);

    // Gather (F_k, r_k) for k = 0..=n, the terminal iterate included.
    let mut gaps = Vec::with_capacity(trajectory.records.len() + 1);
    let mut energies = Vec::with_capacity(trajectory.records.len() + 1);
    for rec in &trajectory.records {
        gaps.push(energy.value(rec.f + inputs.c)? - rec.r);
        energies.push(rec.r);
    }
    if trajectory.final_f.is_finite() {
        gaps.push(energy.value(trajectory.final_f + inputs.c)? - trajectory.final_r);
        energies.push(trajectory.final_r);
    }
    let n = gaps.len();
    if n == 0 {
        return Ok(0.0);
    }

    let violation = |m: usize, k: usize| -> f64 {
        gaps[k] - gaps[m] - scale * (energies[m] * energies[m] - energies[k] * energies[k])
    };

    let mut worst = f64::NEG_INFINITY;
    for k in 0..n {
        worst = worst.max(violation(0, k));
    }
    if n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(20268);
        for _ in 0..100 {
            let k = rng.gen_range(1..n);
            let m = rng.gen_range(0..k);
            worst = worst.max(violation(m, k));
        }
    }
    Ok(worst)
}

/// The two-stage threshold `N₀ = max{ ln(r₀/C) / ln(1 + α̲·η·ε), 1 }`: by
/// iteration `⌈N₀⌉`, either some squared gradient norm has dipped below ε or
/// the energy has fallen to `C` (the natural level being `C = F*/(Lη)`).
pub fn two_stage_threshold(eps: f64, big_c: f64, r0: f64, eta: f64, alpha_lower: f64) -> f64 {
    assert!(eps > 0.0, "tolerance must be positive");
    assert!(big_c > 0.0, "energy level must be positive");
    let denom = (1.0 + alpha_lower * eta * eps).ln();
    ((r0 / big_c).ln() / denom).max(1.0)
}

/// The step-size threshold and the a-priori energy floor it yields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaThreshold {
    /// `η_{r0} = 4F*(r₀ − F₀ + F*)/(Lr₀²)`; running with `η < η_{r0}` keeps
    /// the energy bounded away from zero.
    pub eta_r0: f64,
    /// `r* ≥ (Lr₀²/4F*)(η_{r0} − η)` — meaningful when positive.
    pub r_star_lb: f64,
    /// Whether the hypotheses hold (`r₀ > F₀ − F*` and `η < η_{r0}`), i.e.
    /// whether the floor is guaranteed positive.
    pub guaranteed_positive: bool,
}

/// Computes the step-size threshold `η_{r0}` and the explicit lower bound on
/// the limiting energy (see [`EtaThreshold`]).
pub fn eta_threshold(inputs: &TheoryInputs) -> Result<EtaThreshold, TheoryError> {
    let energy = &inputs.energy;
    let big_f_star = energy.value(inputs.f_star + inputs.c)?;
    let big_f0 = energy.value(inputs.f0 + inputs.c)?;
    let eta_r0 = 4.0 * big_f_star * (inputs.r0 - big_f0 + big_f_star)
        / (inputs.lipschitz * inputs.r0 * inputs.r0);
    let r_star_lb =
        inputs.lipschitz * inputs.r0 * inputs.r0 / (4.0 * big_f_star) * (eta_r0 - inputs.eta);
    Ok(EtaThreshold {
        eta_r0,
        r_star_lb,
        guaranteed_positive: inputs.r0 > big_f0 - big_f_star && inputs.eta < eta_r0,
    })
}

/// The robust shift `c*` with the interior point `a*` realizing the min–max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CStar {
    pub c_star: f64,
    pub a_star: f64,
}

/// First robust-shift branch `c₁(a) = F̂'⁻¹(a·r₀/(f₀ − f*)) − f*`, strictly
/// decreasing in `a`. Where the argument misses the derivative's range the
/// constraint is vacuous, encoded as a value below every admissible shift.
fn c1_branch(energy: &EnergyFunction, a: f64, r0: f64, f0: f64, f_star: f64) -> f64 {
    let y = a * r0 / (f0 - f_star);
    match energy.derivative_inverse(y) {
        Ok(s) => s - f_star,
        Err(_) => -f_star - 1.0,
    }
}

/// Second robust-shift branch `c₂(a) = F̂⁻¹(Lηr₀/(4(1 − a))) − f*`, strictly
/// increasing in `a`.
fn c2_branch(
    energy: &EnergyFunction,
    a: f64,
    eta: f64,
    r0: f64,
    lipschitz: f64,
    f_star: f64,
) -> f64 {
    match energy.inverse(lipschitz * eta * r0 / (4.0 * (1.0 - a))) {
        Ok(s) => s - f_star,
        Err(_) => f64::INFINITY,
    }
}

/// Solves the min–max defining the robust shift,
///
/// ```text
/// c* = min_{a ∈ (0,1)} max{ c₁(a), c₂(a) },
/// ```
///
/// by bisecting for the crossing of the decreasing branch `c₁` and the
/// increasing branch `c₂` (to `|c₁ − c₂| ≤ 1e-10·(1 + |c₁|)`, at most 200
/// halvings). Should the branches not cross inside `(0, 1)` the endpoint
/// infimum is returned. Any shift `c ≥ c*` keeps the energy from collapsing.
///
/// Requires a strictly concave, unbounded energy whose derivative vanishes
/// at infinity; the linear energy is rejected.
pub fn c_star(
    eta: f64,
    r0: f64,
    f0: f64,
    f_star: f64,
    lipschitz: f64,
    energy: &EnergyFunction,
) -> Result<CStar, TheoryError> {
    if !(energy.strictly_concave && energy.derivative_vanishes && energy.unbounded) {
        return Err(TheoryError::UnsupportedEnergy);
    }
    if !(f0 > f_star) {
        return Err(TheoryError::InvalidInput {
            what: "f0 - f_star",
            value: f0 - f_star,
        });
    }
    if !(eta > 0.0) || !(r0 > 0.0) || !(lipschitz > 0.0) {
        return Err(TheoryError::InvalidInput {
            what: "eta/r0/L",
            value: eta.min(r0).min(lipschitz),
        });
    }

    let c1 = |a: f64| c1_branch(energy, a, r0, f0, f_star);
    let c2 = |a: f64| c2_branch(energy, a, eta, r0, lipschitz, f_star);
    let at = |a: f64| (c1(a), c2(a));

    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    let (c1_lo, c2_lo) = at(lo);
    let (c1_hi, c2_hi) = at(hi);
    if c1_lo <= c2_lo {
        // c₁ already below c₂ at the left edge: the max is c₂ everywhere,
        // minimized toward a → 0.
        return Ok(CStar {
            c_star: c1_lo.max(c2_lo),
            a_star: lo,
        });
    }
    if c1_hi >= c2_hi {
        return Ok(CStar {
            c_star: c1_hi.max(c2_hi),
            a_star: hi,
        });
    }

    let mut a_mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        a_mid = 0.5 * (lo + hi);
        let (v1, v2) = at(a_mid);
        if (v1 - v2).abs() <= 1e-10 * (1.0 + v1.abs()) {
            break;
        }
        if v1 > v2 {
            lo = a_mid;
        } else {
            hi = a_mid;
        }
    }
    let (v1, v2) = at(a_mid);
    Ok(CStar {
        c_star: v1.max(v2),
        a_star: a_mid,
    })
}

/// The two shift guards tied to the energy floor: `c̄ = F̂⁻¹(Lηr*) − f₀`
/// (used with `c ≥ max{c*, c̄}` for the iteration bound) and
/// `c̃ = F̂⁻¹(Lηr₀) − f*` (used with `c ≥ max{c*, c̃}` for the KL rates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CGuards {
    pub c_bar: f64,
    pub c_tilde: f64,
}

/// Computes both shift guards (see [`CGuards`]); `r_star` may be the
/// a-priori floor or a measured infimum.
pub fn c_guards(inputs: &TheoryInputs, r_star: f64) -> Result<CGuards, TheoryError> {
    if !(r_star > 0.0) {
        return Err(TheoryError::InvalidInput {
            what: "r_star",
            value: r_star,
        });
    }
    let energy = &inputs.energy;
    let c_bar = energy.inverse(inputs.lipschitz * inputs.eta * r_star)? - inputs.f0;
    let c_tilde = energy.inverse(inputs.lipschitz * inputs.eta * inputs.r0)? - inputs.f_star;
    Ok(CGuards { c_bar, c_tilde })
}

/// Which form of the worst-case iteration count applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundBranch {
    /// `r₀ ≤ F*/(Lη)`: the energy is small enough from the start that every
    /// step behaves like damped descent.
    Direct,
    /// `r₀ > F*/(Lη)`: a two-stage count — first the energy decays to the
    /// `F*/(Lη)` level, then descent finishes the job.
    TwoStage,
}

/// The worst-case iteration count to reach `min_{k≤N} ‖∇f_k‖² < ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationBound {
    pub n: f64,
    pub branch: BoundBranch,
    /// Whether the shift hypothesis `c ≥ max{c*, c̄}` held; when it does not
    /// the count is still computed but is not a guarantee.
    pub precondition_ok: bool,
}

/// Computes the worst-case iteration count (see [`IterationBound`]):
///
/// ```text
/// r₀ ≤ F*/(Lη):  N = 1 + ⌈(1/ε)·2F̄(f₀ − f*)/(ηr*)⌉
/// r₀ > F*/(Lη):  N = 1 + ⌈max{ln(Lr₀η/F*)/ln(1 + α̲ηε), 1}
///                        + (1/ε)·2F̄(f̄ − f*)/(ηr*)⌉
/// ```
///
/// The boundary `r₀ = F*/(Lη)` belongs to the first branch.
pub fn iteration_bound(
    inputs: &TheoryInputs,
    eps: f64,
    r_star: f64,
    bounds: &StabilityBounds,
) -> Result<IterationBound, TheoryError> {
    if !(eps > 0.0) {
        return Err(TheoryError::InvalidInput {
            what: "eps",
            value: eps,
        });
    }
    if !(r_star > 0.0) {
        return Err(TheoryError::InvalidInput {
            what: "r_star",
            value: r_star,
        });
    }
    if !inputs.energy.strictly_concave {
        return Err(TheoryError::UnsupportedEnergy);
    }

    let precondition_ok = match c_star(
        inputs.eta,
        inputs.r0,
        inputs.f0,
        inputs.f_star,
        inputs.lipschitz,
        &inputs.energy,
    ) {
        Ok(cs) => {
            let guards = c_guards(inputs, r_star)?;
            inputs.c >= cs.c_star.max(guards.c_bar)
        }
        // Degenerate f0 = f*: nothing to solve, the hypothesis is moot.
        Err(_) => inputs.f0 == inputs.f_star,
    };

    let level = bounds.big_f_star / (inputs.lipschitz * inputs.eta);
    let (branch, n) = if inputs.r0 <= level {
        let tail = (1.0 / eps) * 2.0 * bounds.big_f_bar * (inputs.f0 - inputs.f_star)
            / (inputs.eta * r_star);
        (BoundBranch::Direct, 1.0 + tail.ceil())
    } else {
        let decay = ((inputs.lipschitz * inputs.r0 * inputs.eta / bounds.big_f_star).ln()
            / (1.0 + bounds.alpha_lower * inputs.eta * eps).ln())
        .max(1.0);
        let tail = (1.0 / eps) * 2.0 * bounds.big_f_bar * (bounds.f_bar - inputs.f_star)
            / (inputs.eta * r_star);
        (BoundBranch::TwoStage, 1.0 + (decay + tail).ceil())
    };
    Ok(IterationBound {
        n,
        branch,
        precondition_ok,
    })
}

/// Rate constants under the gradient-domination condition
/// `‖∇f(x)‖² ≥ 2μ(f(x) − f(x̃))^α`, for the three exponent regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlConstants {
    /// Contraction factor `Q = μηr*/F₀`; for `α = 1` the gap obeys
    /// `w_{k+1} ≤ (1 − Q)w_k`.
    #[serde(rename = "Q")]
    pub q: f64,
    /// Linear-regime constant `C₁ = 2√(2·exp{QN₁}·w_{N₁}/μ)` (α = 1).
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    /// Sublinear-regime constant (α ∈ (1,2)).
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    /// Sublinear-regime shift `C₃ = w_{N₁}^{1−α}/((α−1)Q) − N₁` (α ∈ (1,2)).
    #[serde(rename = "C3")]
    pub c3: Option<f64>,
    /// Finite-termination count `k₀ = N₁ + ⌈w_{N₁}^{1−α}/((1−α)Q)⌉` (α < 1).
    pub k0: Option<f64>,
}

/// Computes the gradient-domination rate constants (see [`KlConstants`]).
///
/// `w_n1` is the objective gap at the regime-entry iteration `n1` (taking
/// `n1 = 0` with `w_0 = f₀ − f(x̃)` is always valid when the shift guard
/// holds from the start).
pub fn kl_constants(
    mu: f64,
    alpha: f64,
    eta: f64,
    r_star: f64,
    big_f0: f64,
    w_n1: f64,
    n1: usize,
) -> Result<KlConstants, TheoryError> {
    if !(mu > 0.0) {
        return Err(TheoryError::InvalidInput {
            what: "mu",
            value: mu,
        });
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(TheoryError::ExponentOutOfRange(alpha));
    }
    if !(r_star > 0.0) {
        return Err(TheoryError::InvalidInput {
            what: "r_star",
            value: r_star,
        });
    }
    if !(w_n1 >= 0.0) {
        return Err(TheoryError::InvalidInput {
            what: "w_n1",
            value: w_n1,
        });
    }

    let q = mu * eta * r_star / big_f0;
    let mut out = KlConstants {
        q,
        c1: None,
        c2: None,
        c3: None,
        k0: None,
    };

    if alpha == 1.0 {
        if !(q > 0.0 && q < 1.0) {
            return Err(TheoryError::NoContraction(q));
        }
        out.c1 = Some(2.0 * (2.0 * (q * n1 as f64).exp() * w_n1 / mu).sqrt());
    } else if alpha > 1.0 {
        let p = -(2.0 - alpha) / (2.0 * (alpha - 1.0));
        out.c2 = Some((2.0 / mu).sqrt() * (2.0 / (2.0 - alpha)) * ((alpha - 1.0) * q).powf(p));
        out.c3 = Some(w_n1.powf(1.0 - alpha) / ((alpha - 1.0) * q) - n1 as f64);
    } else {
        out.k0 = Some(n1 as f64 + (w_n1.powf(1.0 - alpha) / ((1.0 - alpha) * q)).ceil());
    }
    Ok(out)
}

/// Where the `r*` used by a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RStarSource {
    /// The conservative pre-run floor from [`eta_threshold`].
    APriori,
    /// The measured infimum of the energy over a completed run.
    Measured,
}

/// Every closed-form constant for one configuration, serialized as the
/// `theory.json` artifact. Non-finite or inapplicable entries serialize as
/// `null`.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    #[serde(rename = "F_star")]
    pub big_f_star: f64,
    #[serde(rename = "F0")]
    pub big_f0: f64,
    #[serde(rename = "F_bar")]
    pub big_f_bar: f64,
    pub f_bar: f64,
    #[serde(rename = "Fp_star")]
    pub fp_star: f64,
    #[serde(rename = "Fp_bar")]
    pub fp_bar: f64,
    pub alpha_lower: f64,
    pub eta_r0: f64,
    pub r_star_lb: f64,
    pub r_star: f64,
    pub r_star_source: RStarSource,
    /// `None` in the degenerate start-at-optimum case `f0 = f*`, where no
    /// shift constraint exists.
    pub c_star: Option<f64>,
    pub a_star: Option<f64>,
    pub c_bar: Option<f64>,
    pub c_tilde: Option<f64>,
    /// Two-stage threshold at the report's ε with `C = F*/(Lη)`.
    #[serde(rename = "N0")]
    pub n0: f64,
    #[serde(rename = "N_bound")]
    pub n_bound: Option<f64>,
    pub branch: Option<BoundBranch>,
    pub precondition_ok: Option<bool>,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    #[serde(rename = "C3")]
    pub c3: Option<f64>,
    pub eps: f64,
}

/// Assembles the full report for one configuration at accuracy `eps`.
///
/// `r_star_measured` switches the `r*`-dependent constants to a measured
/// energy infimum; otherwise the a-priori floor is used (bounds that need a
/// positive `r*` come back `null` when the floor is not guaranteed). `mu`
/// enables the gradient-domination block at exponent 1 with `N₁ = 0` and
/// `w₀ = f₀ − f*`.
pub fn full_report(
    inputs: &TheoryInputs,
    eps: f64,
    r_star_measured: Option<f64>,
    mu: Option<f64>,
) -> Result<TheoryReport, TheoryError> {
    let bounds = stability_bounds(inputs)?;
    let thresholds = eta_threshold(inputs)?;
    let (r_star, r_star_source) = match r_star_measured {
        Some(r) => (r, RStarSource::Measured),
        None => (thresholds.r_star_lb, RStarSource::APriori),
    };
    // The robust shift is only defined away from the optimum; a run started
    // exactly at the minimizer has no constraint to satisfy.
    let cs = if inputs.f0 > inputs.f_star {
        Some(c_star(
            inputs.eta,
            inputs.r0,
            inputs.f0,
            inputs.f_star,
            inputs.lipschitz,
            &inputs.energy,
        )?)
    } else {
        None
    };
    let guards = if r_star > 0.0 {
        Some(c_guards(inputs, r_star)?)
    } else {
        None
    };
    let n0 = two_stage_threshold(
        eps,
        bounds.big_f_star / (inputs.lipschitz * inputs.eta),
        inputs.r0,
        inputs.eta,
        bounds.alpha_lower,
    );
    let bound = if r_star > 0.0 {
        Some(iteration_bound(inputs, eps, r_star, &bounds)?)
    } else {
        None
    };
    let kl = match mu {
        Some(mu) if r_star > 0.0 => Some(kl_constants(
            mu,
            1.0,
            inputs.eta,
            r_star,
            bounds.big_f0,
            inputs.f0 - inputs.f_star,
            0,
        )?),
        _ => None,
    };

    Ok(TheoryReport {
        big_f_star: bounds.big_f_star,
        big_f0: bounds.big_f0,
        big_f_bar: bounds.big_f_bar,
        f_bar: bounds.f_bar,
        fp_star: bounds.fp_star,
        fp_bar: bounds.fp_bar,
        alpha_lower: bounds.alpha_lower,
        eta_r0: thresholds.eta_r0,
        r_star_lb: thresholds.r_star_lb,
        r_star,
        r_star_source,
        c_star: cs.as_ref().map(|c| c.c_star),
        a_star: cs.as_ref().map(|c| c.a_star),
        c_bar: guards.as_ref().map(|g| g.c_bar),
        c_tilde: guards.as_ref().map(|g| g.c_tilde),
        n0,
        n_bound: bound.as_ref().map(|b| b.n),
        branch: bound.as_ref().map(|b| b.branch),
        precondition_ok: bound.as_ref().map(|b| b.precondition_ok),
        q: kl.as_ref().map(|k| k.q),
        c1: kl.as_ref().and_then(|k| k.c1),
        c2: kl.as_ref().and_then(|k| k.c2),
        c3: kl.as_ref().and_then(|k| k.c3),
        eps,
    })
}

/// Convenience: `true` when the energy supports the robust-shift machinery.
pub fn supports_sharp_bounds(energy: &EnergyFunction) -> bool {
    match energy.kind {
        EnergyKind::Power(p) => p < 1.0,
        EnergyKind::Logarithmic => true,
    }
}
