//! Analysis toolkit for operational specifications of stream systems and
//! labeled transition systems.
//!
//! The crate provides:
//!
//! - signatures and terms with substitution ([`term`]),
//! - finite behavior prefixes for streams and finitely branching trees
//!   ([`behavior`]),
//! - a line-oriented rule DSL with a parser and a GSOS/coGSOS/mixed
//!   format classifier ([`rules`]),
//! - a queue-machine variant with simulator and a compiler from classical
//!   queue machines ([`qm`]),
//! - compilation of queue machines into stream and LTS rule specifications
//!   together with the direct run-to-prefix oracle ([`reduction`]),
//! - a bounded extension checker that either constructs the forced behavior
//!   prefix of every seed term, proves that no total behavior assignment
//!   exists, or reports ambiguity ([`engine`]).
//!
//! ```
//! use bigsos::engine::{check_extension, ExtensionParams, Verdict};
//! use bigsos::rules::parse_spec;
//!
//! let spec = parse_spec(
//!     "behavior stream\n\
//!      alphabet $, €\n\
//!      op C/0\n\
//!      op q/1\n\
//!      rule C => $ -> q(C)\n\
//!      rule q(x): x -l1-> y, y -l2-> z => l2 -> q(z)\n",
//! )?;
//! let outcome = check_extension(&spec, ExtensionParams::default())?;
//! // the lookahead rule forces the constant's tail to nest itself
//! assert!(matches!(outcome.verdict, Verdict::NoExtension { .. }));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod behavior;
pub mod engine;
pub mod qm;
pub mod reduction;
pub mod rules;
pub mod term;

pub use behavior::{Letter, StreamPrefix, TreePrefix};
pub use engine::{ExtensionOutcome, Verdict, Witness};
pub use qm::{ClassicalQm, Configuration, QueueMachine, RunOutcome};
pub use rules::{Behavior, FormatClass, FormatReport, Rule, Spec, SpecVerdict};
pub use term::{Signature, Sym, Term};
