//! Exact evaluation and projected policy-gradient optimization of tabular
//! average-reward MDPs.
//!
//! - [`mdp`]: instances, policies, validation and seeded generators.
//! - [`chain`]: stationary distributions, the resolvent `(I − ΦP)⁻¹`,
//!   chain structure and spectra.
//! - [`evaluator`]: gain, Φ-gauge differential values, relative Q.
//! - [`gradient`]: analytic gradient and finite-difference probes.
//! - [`optimizer`]: simplex projection, the ascent loop, traces and the
//!   per-step inequality checks.
//! - [`complexity`]: the constants `C_m, C_p, C_r, κ_r, L₁, L₂, C_PL`.
//! - [`oracle`]: optimal gain by relative value iteration or enumeration.
//! - [`discounted`]: the discounted counterpart and γ → 1 diagnostics.
//!
//! ```
//! use avgpg::mdp::{generate_mdp, KernelFamily, MdpGeneratorSpec, Policy, RewardFamily};
//! use avgpg::optimizer::{run_pga, RunConfig, StepSize};
//!
//! let spec = MdpGeneratorSpec::new(3, 2, KernelFamily::DirichletUniform, RewardFamily::UniformRange, 7);
//! let mdp = generate_mdp(&spec).unwrap();
//! let config = RunConfig { step_size: StepSize::Fixed(0.5), max_iters: 50, ..RunConfig::default() };
//! let trace = run_pga(&mdp, &Policy::uniform(3, 2), &config, None, None).unwrap();
//! let rho = trace.rhos();
//! assert!(rho.last().unwrap() >= &rho[0]);
//! ```

pub mod chain;
pub mod complexity;
pub mod discounted;
pub mod error;
pub mod evaluator;
pub mod gradient;
pub mod linalg;
pub mod mdp;
pub mod optimizer;
pub mod oracle;

pub use error::{Error, Result};
pub use mdp::{Policy, TabularMdp};
