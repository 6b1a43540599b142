//! HTTP service and operator CLI around the taskbot engine.

pub mod api;
pub mod cli;

pub use api::{router, ApiError, AppState};
