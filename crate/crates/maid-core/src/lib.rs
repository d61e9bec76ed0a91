//! Multi-agent influence diagrams (MAIDs) and their parametrized form (MAIMs).
//!
//! A MAID is a DAG over chance, decision, and utility nodes, with decisions and
//! utilities partitioned among a finite set of agents. A MAIM attaches finite
//! domains and CPDs to the non-decision nodes; assigning decision rules to the
//! decisions turns it into an ordinary Bayesian network, from which expected
//! utilities are computed exactly.
//!
//! The crate covers:
//!
//! * graphical analysis: d-separation, r-reachability, relevance graphs and
//!   their SCC condensation ([`relevance`]),
//! * subgame decomposition: bases closed under directed paths and
//!   r-reachability, and their boundary instantiations ([`subgames`]),
//! * equilibrium computation: pure Nash, subgame perfect (generalized backward
//!   induction with tie forking), and trembling hand perfection in behavioural
//!   form ([`equilibria`]),
//! * conversion to and from extensive-form games, including games with
//!   absent-mindedness, plus a Gambit-style `.efg` text exporter ([`efg`],
//!   [`convert`], [`export`]).
//!
//! The crate is `no_std` (with `alloc`); all IO and file formats live in the
//! companion CLI crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod convert;
pub mod efg;
pub mod equilibria;
pub mod export;
pub mod infer;
pub mod model;
pub mod policy;
pub mod relevance;
pub mod subgames;

mod factor;
mod radix;

/// Absolute tolerance used for all probability and utility comparisons.
pub const TOL: f64 = 1e-9;
