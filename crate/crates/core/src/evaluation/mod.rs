//! Goodness of fit: ROC curves of alarm rules, gridded residuals, and their
//! tables and plots.

mod plots;
mod residuals;
mod roc;

pub use plots::{monthly_svg, residual_map_svg, roc_svg};
pub use residuals::{
    median, poisson_moments, residuals, write_summary_csv, Grouping, PoissonMoments, ResidualCell,
    ResidualGrid, SummaryRow,
};
pub use roc::{
    alarm_cells, quantile_thresholds, roc, roc_from_scores, RocCurve, RocPoint, DEFAULT_THRESHOLDS,
};
