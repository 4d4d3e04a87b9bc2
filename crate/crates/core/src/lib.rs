//! Library for lifting GUI test scripts into reusable, parameterized task
//! methods.
//!
//! The pipeline has five stages, one module each:
//!
//! 1. [`script`] parses an Espresso-dialect test script into a structured
//!    event notation ([`script::TestCase`]).
//! 2. [`driver`] replays GUI events against a declarative simulated app
//!    ([`driver::AppModel`]) instead of a real device.
//! 3. [`mutation`] re-executes the test with one event swapped for a
//!    candidate alternative at a time and records which events tolerate
//!    substitution ([`mutation::MutationReport`]).
//! 4. [`methodgen`] turns the report into parameterized task methods
//!    ([`methodgen::TaskMethod`]) in a neutral task-script syntax.
//! 5. [`runtime`] loads a rendered task method, binds arguments, and runs
//!    it against the same simulated driver.
//!
//! [`gui`] holds the screen model shared by everything, and [`metrics`]
//! aggregates detection reports into evaluation summaries.

pub mod driver;
pub mod gui;
pub mod methodgen;
pub mod metrics;
pub mod mutation;
pub mod runtime;
pub mod script;
