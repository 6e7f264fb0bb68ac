//! Verification quantities comparing finite networks, intermediate systems and
//! limit systems.

mod ablation;
mod bounds;
mod coupling;
mod error_functional;
mod moments;
mod rate;
mod residuals;

pub use ablation::{ablation_study, AblationConfig, AblationReport, AblationRow, GroupDisplacement};
pub use bounds::{apriori_bound, BoundInputs, GronwallBound};
pub use coupling::{coupling_distance, CouplingSeries};
pub use error_functional::{error_functional, summarize_errors, ErrorEntry, ErrorReport, ErrorSummary};
pub use moments::{measure_moments, moment_study, MeasureSource, MomentRow, MomentStudyConfig, MomentStudyReport, TestFunction};
pub use rate::{fit_log_log, rate_study, RateFit, RateStudyConfig, RateStudyReport};
pub use residuals::{lyapunov_check, stationarity_residuals, LyapunovPoint, LyapunovSeries, ResidualReport};
