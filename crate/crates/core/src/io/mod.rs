//! Configuration, tables, metadata and figures.

mod config;
mod metadata;
mod svg;
mod tables;

pub use config::{parse_config, parse_usize_list, RunConfig, CONFIG_KEYS};
pub use metadata::{write_json, ResultMetadata};
pub use svg::{agent_lines, cost_vs_n, heatline, CostSeries, PlotKind};
pub use tables::{
    fmt_f64, read_numeric_table, read_sweep, write_control, write_sweep, write_trajectory, NumericTable,
    MAX_STATE_COLUMNS,
};
