//! Library surface of the `ppc` command-line tool; the binary in `main.rs`
//! is a thin dispatcher over [`commands`].

pub mod commands;
pub mod config;
