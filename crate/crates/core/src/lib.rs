//! Ticket coverage: joins the methods added or changed for each ticket in a
//! version history with method-level coverage, split into coverage recorded
//! at program startup and coverage recorded while running tests.

pub mod changeset;
pub mod cli;
pub mod coverage;
pub mod diffmap;
pub mod history;
pub mod metric;
pub mod parser;
pub mod pipeline;
pub mod report;
pub mod triviality;
