//! End-to-end scenarios over a whole deployment, and ORAM cost
//! measurements.

mod bench;
mod engine;
mod scenario;

pub use bench::{bench_cell, bench_grid, crossover, read_bench, write_bench, BenchResult};
pub use engine::{run_scenario, AuditOutcome, Engine, Event, Report};
pub use scenario::{Action, CardRef, Scenario, ScenarioError, ScenarioLimits};
