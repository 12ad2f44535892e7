//! Oracles and generators shared by the property suites and the acceptance
//! harness.
#![allow(dead_code)]

pub mod algebra;
pub mod collapse;
pub mod measures;
