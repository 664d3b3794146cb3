//! Batch studies: exponential fits, the scaling study over problem sets ×
//! schemes × sizes, and the method × set exponent table.

pub mod config;
pub mod fit;
pub mod output;
pub mod study;
pub mod table;

pub use config::{configure_threads, RunConfig, SchemeSpec, ENV_OUT_DIR, ENV_THREADS};
pub use fit::{fit_exponential, ScalingFit};
pub use study::{gap_scaling, scaling_study, FitEntry, GapPoint, StudyResult, StudyRow};
pub use table::{table_one, ExponentTable, TableCell, GAP_COLUMN, TABLE_SCHEMES};
