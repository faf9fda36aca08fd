//! Stochastic simulation and exact analysis of the displacement CTMC.

mod equilibrium;
mod hitting;
mod linalg;
mod sim;
mod statespace;

pub use equilibrium::{
    check_detailed_balance, log_weights, stationary_distribution, BalanceReport, EquilibriumError,
    Stationary, BALANCE_TOLERANCE,
};
pub use hitting::{hitting_time_stats, log_log_slope, HitStatus, HittingStats, ReplicaHit};
pub use linalg::solve_dense;
pub use sim::{
    simulate, simulate_until, Event, Record, SimConfig, SimError, Simulator, Status, Trajectory,
    RNG_ALGORITHM,
};
pub use statespace::{enumerate_state_space, Edge, StateGraph};
