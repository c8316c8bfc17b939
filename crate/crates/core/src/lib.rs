//! Template-based program repair over a C subset: mine recurrent changes from
//! patch corpora, infer editable generic patches (fix patterns with
//! metavariables and control-flow abstraction), and apply them to buggy
//! programs in a generate-and-validate loop with full provenance and
//! efficiency accounting.

pub mod cluster;
pub mod editscript;
pub mod engine;
pub mod patlang;
pub mod error;
pub mod infer;
pub mod minic;
pub mod repair;
pub mod mining;
pub mod udiff;
pub mod util;

pub use error::{Error, Result};
