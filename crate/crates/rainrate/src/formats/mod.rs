//! On-disk formats.

pub mod dataset;
pub mod disdrometer;
pub mod model;
pub mod scan;
