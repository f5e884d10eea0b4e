#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aroc;
pub mod data;
pub mod ddp;
pub mod error;
pub mod kernelaroc;
pub(crate) mod linalg;
pub mod modelcrit;
pub mod randkit;
pub mod simlab;
pub mod splines;

pub use error::{ArocError, Result};
