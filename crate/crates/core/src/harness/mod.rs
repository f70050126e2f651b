//! Scenario files, reference experiments, brute-force oracles and result tables.

pub mod experiments;
pub mod file;
pub mod oracle;
pub mod plot;
pub mod table;

pub use experiments::{
    audit_table, repro, repro_with, run_fig1_experiment, run_fig23_experiment, run_fig4_sweep,
    run_sweep, selection_table, stability_table, summary_table, trajectory_table, QualitativeCheck,
    ReproReport, SweepResult, FIG4_WORKLOADS,
};
pub use file::{apply_override, load_scenario, load_scenario_str, ScenarioFile};
pub use oracle::{fd_jacobian, oracle_du_allocation, oracle_su_price};
pub use table::{write_tables, Column, Format, ResultTable, Value};
