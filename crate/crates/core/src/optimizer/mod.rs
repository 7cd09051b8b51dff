//! Strategy bound, segment optimization by projected gradient ascent, and
//! the Cesàro convergence study across nested segments.

mod bound;
mod convergence;
mod segment;

pub use bound::{bound_from_inputs, strategy_bound, BoundInputs, StrategyBound};
pub use convergence::{cesaro, convergence_run, ConvergenceOptions, ConvergenceReport, MONOTONE_SLACK};
pub use segment::{maximize_segment, project, OptimizationResult, OptimizerOptions, SegmentObjective};
