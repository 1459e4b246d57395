pub mod fuzzer;
pub mod gateway;
pub mod model;
pub mod oracle;
pub mod runner;
pub mod service;
pub mod simulator;
