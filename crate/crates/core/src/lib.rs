pub mod codesign;
pub mod error;
pub mod fixed_modes;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod pattern;
pub mod sdp;
pub mod stabilizer;

pub use error::{Error, Result};
