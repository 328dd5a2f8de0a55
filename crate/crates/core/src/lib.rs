//! Contraction certificates, controller synthesis and simulation for
//! firing-rate and Hopfield recurrent neural networks.
#![no_std]
// NaN must fail validation, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod linalg;
pub mod lmi;
pub mod certificates;
pub mod synthesis;
pub mod sim;
pub mod math;
pub mod networks;
pub mod deq;
