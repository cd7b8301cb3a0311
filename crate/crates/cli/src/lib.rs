//! Batch runner and REPL for subset queries.

pub mod render;
pub mod session;

pub use render::{render, Format};
pub use session::{exit_code, Session};
