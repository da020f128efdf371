//! Bid shading against sellers who set revenue-maximizing reserve prices.
//!
//! A strategic bidder can reshape its bid distribution so that the seller's
//! monopoly reserve falls to the bottom of the bid range. This crate
//! computes such strategies and evaluates them exactly by quadrature or
//! by seeded Monte Carlo. The `auction-lab` binary wraps it for batch runs.

// `!(a < b)` style guards are used on purpose so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auction;
pub mod cli;
pub mod dist;
pub mod error;
pub mod optimize;
pub mod quad;
pub mod robustness;
pub mod roots;
pub mod seller;
pub mod strategy;

pub use error::{Error, Result};
