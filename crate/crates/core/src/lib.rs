//! Fuzzy and fractional-order PID control: operators, controllers, plant
//! models, closed-loop evaluation and genetic tuning.

pub mod controllers;
pub mod error;
pub mod fracops;
pub mod fuzzy;
pub mod plants;
pub mod simloop;
pub mod tables;
pub mod tuner;

pub use error::{Error, Result};
