#![cfg_attr(not(any(test, feature = "testkit")), no_std)]
extern crate alloc;

pub mod geometry;
pub mod microlocal;
pub mod num;
pub mod states;
