pub mod droplet;
pub mod equilibrium;
pub mod error;
pub mod gen_airy;
pub mod hp;
pub mod model;
pub mod mop;
pub mod parametrix;
pub mod quad;
pub mod spectral_curve;
pub mod split;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
