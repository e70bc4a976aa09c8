//! Multi-agent S5 epistemic logic at desk scale: finite Kripke structures,
//! the canonical finite models of each knowledge depth, classification of
//! formulas by their common-knowledge behavior, and the finite-depth cell
//! constructions (alienated extensions and the fanout builder).

pub mod canonical;
pub mod cellbuilder;
pub mod commonknowledge;
pub mod error;
pub mod formula;
pub mod kripke;
pub mod shiftgen;
pub mod workspace;

pub use canonical::{AtomId, AtomStore};
pub use error::{CkError, Result};
pub use formula::Formula;
pub use kripke::KripkeStructure;
pub use workspace::{AgentId, PropId, WorkspaceConfig};
