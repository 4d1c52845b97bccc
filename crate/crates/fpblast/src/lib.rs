//! Bit-blasting of IEEE-754 floating-point arithmetic into symbolic
//! bit-vector circuits, so that any engine which reasons about bit-vectors
//! (or plain SAT) gains floating-point support.
//!
//! The crate provides:
//!
//! * [`bitvec`] — a word-level bit-vector expression IR with a concrete
//!   evaluator, Tseitin conversion to CNF, and brute-force satisfiability
//!   checking for small formulas;
//! * [`fpformat`] — floating-point formats, rounding modes, literals and
//!   special values, and reinterpretation to/from raw IEEE bit-vectors;
//! * [`pipeline`] — the unpack / round / pack stages shared by all
//!   operators;
//! * [`fpops`] — classification, comparison, conversion, and arithmetic
//!   operators as circuit builders;
//! * [`oracle`] — an independent exact-rational reference implementation
//!   used for differential testing;
//! * [`backend`] — SMT-LIB2 and DIMACS emission plus solver dispatch;
//! * [`script`] — a small s-expression constraint language for the CLI;
//! * [`difftest`], [`features`], [`demo`] — the differential sweep harness,
//!   the feature matrix, and the classic 0.1 + 0.2 demonstration.

pub mod backend;
pub mod bitvec;
pub mod demo;
pub mod difftest;
pub mod features;
pub mod fpformat;
pub mod fpops;
mod ir;
pub mod oracle;
pub mod pipeline;
pub mod script;
