//! Files, command line, benchmark harness and HTTP service around
//! [`lapinc_core`].

pub mod artifacts;
pub mod bench;
pub mod cli;
pub mod clock;
pub mod formats;
pub mod service;

pub use clock::StdClock;
