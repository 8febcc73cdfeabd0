//! Declarative scenarios, the shipped registry, runs and their artifacts.

pub mod config;
pub mod plot;
pub mod registry;
pub mod run;

pub use config::{canonicalize, load_config, parse_config, Analysis, InitialState, ScenarioConfig};
pub use plot::{export_plots, PlotReport};
pub use registry::{list_scenarios, shipped, ScenarioInfo};
pub use run::{run_scenario, verify_run, RunManifest, Verification};
