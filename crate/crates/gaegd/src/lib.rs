//! Energy-adaptive gradient methods with pluggable energy transforms.
//!
//! The iteration maintains, next to the iterate `x_k`, a strictly positive
//! "energy" `r_k` that starts at a transformed initial objective value and
//! can only shrink. Each step first discounts the energy by the locally
//! observed squared gradient norm, then moves the iterate with an effective
//! step size proportional to the freshly discounted energy:
//!
//! ```text
//! r_{k+1} = r_k / (1 + η (F̂'(f_k+c)/F̂(f_k+c)) ‖∇f(x_k)‖²)
//! x_{k+1} = x_k − η (r_{k+1}/F̂(f_k+c)) ∇f(x_k)
//! ```
//!
//! The transform `F̂` — the *energy function* — is any increasing concave
//! function of the shifted objective; the square root reproduces the
//! original energy-adaptive method, the logarithm its heavy-tailed sibling,
//! and `s^p` a whole family in between. Stability (monotone, positive
//! energy) holds unconditionally, for every base step size η.
//!
//! The crate has four public layers:
//!
//! * [`energy`] — the transform family and its admissibility probes;
//! * [`objectives`] — the benchmark objectives (an ill-conditioned
//!   100-dimensional quadratic and the Rosenbrock valley);
//! * [`optimizer`] — the iteration itself: scalar or per-coordinate
//!   energies, per-step records, exact per-step energy identities;
//! * [`theory`] — every closed-form constant and bound (stability
//!   envelopes, step-size thresholds, robust shifts, iteration counts,
//!   gradient-domination rates) plus trajectory verifiers;
//! * [`bench`] — the experiment harness behind the `gaegd` binary: specs,
//!   tuning, shift sweeps, diagnostics, and plot data.
//!
//! # Example
//!
//! ```
//! use gaegd::energy::EnergyFunction;
//! use gaegd::objectives::Objective;
//! use gaegd::optimizer::{run, GaegdConfig};
//!
//! let obj = Objective::quadratic_100d();
//! let config = GaegdConfig::new(13.0, 1.0, EnergyFunction::sqrt())
//!     .per_coordinate()
//!     .with_target(1e-7, 100_000);
//! let (result, trajectory) = run(&config, &obj, &obj.default_x0).unwrap();
//! assert!(result.iterations_to_target.is_some());
//! assert!(trajectory.min_r() > 0.0);
//! ```

// Guards are written `!(x > 0.0)` rather than `x <= 0.0` so that NaN is
// rejected by the same branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod energy;
pub mod objectives;
pub mod optimizer;
pub mod theory;
