//! Experiment matrix, zero-shot evaluation, summary statistics and plots.

mod canvas;
mod cross;
mod eval;
mod matrix;
mod plot;
mod stats;

pub use canvas::{Anchor, Canvas, Color, Mark};
pub use cross::{cell_name, cross_size_matrix, read_cross_size_episodes, CrossCell, CrossSizeGrid, CROSS_EPISODES_FILE, CROSS_SUMMARY_FILE};
pub use eval::{evaluate, evaluate_policy, EvalReport};
pub use matrix::{run_matrix, ExperimentMatrix, MatrixOutcome, RunRecord, RunSpec, MATRIX_FILE};
pub use plot::{aggregate_seeds, box_plot_figure, emit_plots, training_curve_figure, PlotReport, Series};
pub use stats::{quantile_sorted, summarize, Summary};

use std::path::Path;

use crate::error::Error;

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}
