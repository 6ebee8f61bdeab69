// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod effective;
pub mod error;
pub mod fbl;
pub mod figures;
pub mod numerics;
pub mod optimize;
pub mod output;
pub mod queuesim;

pub use error::{Error, Result};
