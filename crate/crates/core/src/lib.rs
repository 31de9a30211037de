//! Extreme conditional quantile regression: GEV laws fitted to block maxima
//! by weighted maximum likelihood, with weights from a quantile-splitting
//! random forest.

pub mod benchmark;
pub mod data;
pub mod error;
pub mod eval;
pub mod forest;
pub mod gev;
pub mod optim;
pub mod pipeline;
pub mod simulate;

pub use error::{Error, Result};
