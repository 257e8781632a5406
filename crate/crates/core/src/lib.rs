//! Day-ahead HVAC and distribution-grid scheduling under joint chance
//! constraints, with data-driven polyhedral uncertainty sets.

pub mod conic;
pub mod distflow;
pub mod eval;
pub mod error;
pub mod netdata;
pub mod robust;
pub mod scheduler;
pub mod svc;
pub mod thermal;
pub mod usets;

pub use error::{Error, ErrorClass, Result};
