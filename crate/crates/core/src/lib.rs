//! Core library: domain model, catalogs, placement optimizer, workflow
//! engine and the simulated NFVI.

pub mod api;
pub mod catalogs;
pub mod deployer;
pub mod model;
pub mod optimizer;
pub mod placer;
pub mod report;
pub mod scenario;
pub mod topology;
pub mod units;
