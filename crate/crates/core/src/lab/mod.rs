//! Randomized verification of the inequalities behind the uniqueness
//! results, with reproducible reports.
pub mod chain;
pub mod checks;
pub mod random;
pub mod report;
pub mod suite;

pub use chain::{extract_chain, AngleDivergence, CommonCellChain};
pub use report::{ConfigDigest, Execution, TrialOutcome, Trials, VerificationReport};
pub use suite::{run_suite, Suite, SuiteOutput};
