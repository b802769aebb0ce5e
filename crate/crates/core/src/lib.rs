//! Batch Bayesian optimization over sequence pairs for fixed-outline macro
//! placement, with a simulated-annealing baseline.

pub mod acq_optimizer;
pub mod bo_engine;
pub mod acquisition;
pub mod diff_lp;
pub mod error;
pub mod hpwl_eval;
pub mod lcs_pack;
pub mod netlist;
pub mod run_record;
pub mod sa_engine;
pub mod seqpair;
pub mod surrogate_gp;

pub use error::{Error, Result, Violation};
pub use hpwl_eval::{evaluate_sp, hpwl_of, ObjectiveValue, Placement};
pub use lcs_pack::{is_feasible, pack, MacroShape, Outline, PackResult};
pub use netlist::{load_design, save_design, validate, Design, DesignFormat};
pub use seqpair::{random_sp, Permutation, Relation, SequencePair, SpKey};
