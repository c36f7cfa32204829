pub mod ball;
pub mod claims;
pub mod config;
pub mod distortion;
pub mod error;
pub mod grunsky;
pub mod report;
pub mod schwarzian;
pub mod series;
pub mod univalence;

pub use config::RunConfig;
pub use error::{GftError, Result};
pub use num_complex::Complex64;
pub use report::{ClaimReport, Verdict};
pub use series::{BivariateTruncated, TruncatedSeries};
