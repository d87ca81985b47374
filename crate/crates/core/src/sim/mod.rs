//! Stochastic and deterministic integrators on manifolds.

mod field;
mod ode;
mod two_way;
mod sample;
mod walk;

pub use field::{DriftField, FnDrift, ProbabilityFlow, ZeroDrift};
pub use ode::{divergence, divergence_batch, nll, solve_ode, solve_ode_path, OdeMethod, DIV_STEP};
pub(crate) use two_way::partial_step;
pub use two_way::{simulate_two_way, simulate_two_way_batch, Leg, TrajectoryBatch, TwoWayConfig, TwoWayPath};
pub use sample::{prior_draws, sample_sde, walk_batch, SampleBatch};
pub use walk::{geodesic_random_walk, simulate_bridge, uniform_grid, FinalStep, Trajectory, MAX_RESAMPLES};
