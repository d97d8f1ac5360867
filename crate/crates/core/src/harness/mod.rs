pub mod complexity;
pub mod scenario;
pub mod stats;
pub mod throughput;

pub use complexity::{complexity_report, default_architecture, model_complexity, ArchLayer, ComplexityReport, LayerCost};
pub use scenario::{run_scenario, run_scenario_with, sweep, MetricsRecord, ScenarioConfig, SweepPoint};
pub use stats::{wilson, Interval};
pub use throughput::{throughput_estimation, throughput_prediction};
