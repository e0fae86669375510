//! Approval-based collective choice over a mix of divisible (cake) and
//! indivisible goods.
//!
//! The crate covers the exact model ([`model`], [`interval`], [`atoms`]), the
//! allocation rules ([`rules`]), axiom checkers and proportionality audits
//! ([`verify`]), instance constructions ([`generate`]) and brute-force oracles
//! ([`oracle`]). All model arithmetic is exact; floats only appear in
//! [`harmonic`] and the GPAV solver built on it.

pub mod atoms;
pub mod bench;
pub mod error;
pub mod generate;
pub mod groups;
pub mod harmonic;
pub mod interval;
pub mod io;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod rules;
pub mod verify;

pub use error::{Error, Result};
pub use interval::{Interval, IntervalSet};
pub use model::{Bundle, Instance};
pub use rational::Rational;
