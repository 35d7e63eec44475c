//! Normal forms, orders and HNN-tower machinery for a locally free group,
//! a dyadic abelian group and a family of strongly bounded HNN extensions.

pub mod catalog;
pub mod dyadic;
pub mod error;
pub mod hnn;
pub mod orders;
pub mod rewrite;
pub mod word;

pub use error::{Error, Result};
