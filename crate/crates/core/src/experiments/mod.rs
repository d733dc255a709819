//! Experiment protocols: efficacy runs, ablations, sweeps, benchmarks and reports.

mod ablations;
mod bench;
mod config;
mod pipeline;
mod plot;
mod report;

pub use ablations::{
    ablate_augmentation, ablate_before_after, ablate_overlap_removal, boundary_shift, select_r_by_validation, shift_grid,
    sweep_tau_efficacy, BoundaryShiftReport, RSelection, RSelectionRow, ShiftChoice,
};
pub use bench::{bench_data, bench_overlap, BenchResult};
pub use config::{DataSource, LoadedData, Mode, PipelineConfig, TestSource, TestSpec};
pub use pipeline::{
    build_training_set, classifier_seed, evaluate, prepare_split, run_arms, run_efficacy, Arm, Hygiene, PreparedSplit,
    Recipe, TrainingSet,
};
pub use plot::{emit_plot_data, plot_csv, toy_plot_run, PLOT_COLUMNS};
pub use report::{
    aggregates, emit_report, read_cells_csv, read_synthesis_csv, rebuild_report, render_markdown, series, summarize,
    write_cells_csv, write_synthesis_csv, Aggregate, Cell, CellMetrics, EvalReport, Metric, Summary, SynthesisRecord,
    AVG_OF_FOUR,
};
