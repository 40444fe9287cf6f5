//! CSV tables and SVG charts for experiment output.

mod svg;
mod table;

use thiserror::Error;

pub use svg::{emit_svg, ChartKind, ChartSpec};
pub use table::{Cell, Table};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("table has no rows")]
    EmptyTable,
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is not numeric in row {1}")]
    NotNumeric(String, usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
