#![allow(dead_code)]

pub mod datasets;
pub mod oracles;
pub mod stub_service;
