pub mod engine;
pub mod error;
pub mod omega;
pub mod oracle;
pub mod relation;
pub mod sql;
pub mod subset;
