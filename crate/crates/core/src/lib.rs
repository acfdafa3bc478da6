// SPDX-License-Identifier: Apache-2.0

pub mod attack;
pub mod config;
pub mod crossbar;
pub mod device;
pub mod error;
pub mod io;
pub mod laser;
pub mod mna;
pub mod reference;

pub use error::{Error, Result};
