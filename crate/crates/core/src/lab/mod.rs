//! Bound evaluators, the experiment sweep and the verification driver.

mod bounds;
pub mod oracle;
mod sweep;
mod verify;

pub use bounds::*;
pub use sweep::*;
pub use verify::*;
