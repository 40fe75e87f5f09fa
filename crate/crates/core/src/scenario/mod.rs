//! Scenario definition, result export and metrics.

mod export;
mod metrics;
mod model;

pub use export::{
    export_trajectories, pair_samples, read_trajectory_csv, render_paths_svg, render_samples_svg,
    render_svg, sample_rows, write_trajectory_csv, CsvSample, RENDER_SAMPLES, SAMPLE_RATE_HZ,
};
pub use metrics::{compute_metrics, min_pairwise_distance, Metrics, METRIC_SAMPLES};
pub use model::{
    parse_scenario, serialize_scenario, Arena, Obstacle, Scenario, Vehicle, DEFAULT_VEHICLE_RADIUS,
};
