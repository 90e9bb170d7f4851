//! Joint price and assortment optimization under the Markov chain choice
//! model.
//!
//! A market has `J` products. A customer arrives at product `j` with
//! probability `theta_j` and, when product `i` is offered at price `x_i`,
//! buys it with probability `Q_i(x_i) = exp(alpha_i - beta_i * x_i)`.
//! A customer who does not buy at `i` moves to product `j` with probability
//! `rho_ij` or leaves. The seller picks prices and an offer set (or a
//! schedule of offer sets) to maximize expected profit, optionally under
//! linear resource constraints with arrival rate `lambda_bar`.
//!
//! The crate solves this by compiling the market into small exponential-cone
//! programs, solving them with a first-order operator-splitting conic
//! solver, and mapping solutions back to prices, offer intensities,
//! assortment mixtures, and time schedules:
//!
//! * [`model`] - market data, validation, and the balance equations that
//!   give expected visit rates per product.
//! * [`conic`] - cone geometry (exponential cone membership and projection)
//!   and the homogeneous self-dual embedding solver.
//! * [`reformulate`] - builders that compile a market into the conic
//!   programs (static, resource-constrained, pricing-only, and the explicit
//!   dual), plus a text dump format and a strictly feasible dual point.
//! * [`recovery`] - turns conic solutions into prices and offer
//!   intensities, decomposes fractional intensities into a mixture of at
//!   most `J + 1` nested assortments, and lays mixtures out on a time
//!   horizon.
//! * [`oracle`] - independent brute-force optima, Monte Carlo simulation of
//!   the choice process, random market generation, and self-check suites.
//! * [`pipeline`] - the end-to-end solve used by the CLI.
//! * [`report`] - serializable solution and verification reports.
//!
//! Data-parallel batch work (oracle grids, Monte Carlo, batched solves)
//! runs through [`exec::Parallelism`]: `Rayon` when the `parallel` feature
//! (default) is enabled, `Sequential` otherwise or on request.

pub mod conic;
pub mod exec;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod recovery;
pub mod reformulate;
pub mod report;

pub use conic::{ConeBlock, ConeKind, ConicProgram, PrimalDualSolution, SolveStatus, SolverSettings};
pub use exec::Parallelism;
pub use model::{Assortment, McInstance, ResourceModel, UncheckedInstance, ValidationReport};
pub use recovery::{AssortmentMixture, OfferSchedule, StaticDecision};
pub use reformulate::{ProgramKind, VariableMap};
