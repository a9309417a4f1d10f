//! Decision procedures, witness functions and finite-model constructions for
//! the SMT-LIB 2 theory of algebraic datatypes.
pub mod combine;
pub mod fixtures;
pub mod formula;
pub mod frontend;
pub mod oracle;
pub mod reduce;
pub mod sig;
pub mod unify;
pub mod witness;
pub mod witness_model;

pub use combine::{
    cardinality_backend, combine_check, purify, CardinalityBackend, CombineError, CombineOptions,
    MixedProblem, T0Backend, TheoryBackend,
};
pub use fixtures::{load_fixture, Fixture, GoldenScript};
pub use formula::{
    cube_vars, enumerate_arrangements, eval_formula, flatten, to_flat_dnf, Arrangement, Context,
    Cube, Formula, Func, Interpretation, Literal, SelectorMode, Term, Var,
};
pub use frontend::{
    parse_script, run_script, run_text, ParseError, Procedure, Run, RunOptions, Script,
};
pub use oracle::{brute_force_sat, OracleConfig, OracleError, OracleResult};
pub use reduce::{decide, reduce_cube, DecideOptions, DecisionResult, ReduceError};
pub use sig::{
    classify_sorts, enumerate_trees, tree_depth, validate_signature, CtorId, ElemDomain, ElemValue,
    Finiteness, RawSignature, SelectorId, Signature, SortId, Tree,
};
pub use unify::{apply_subst, check_disequalities, unify, SolvedForm, Unsat};
pub use witness::{
    extend_model, witness_cube, wtn_combined, wtn_finite, wtn_inductive, wtn_lift, Conjunct,
    WitnessKind, WitnessOutput,
};
pub use witness_model::{
    construct_inductive, finite_witness, finite_witness_finite, finite_witness_inductive,
    smooth_inflate, witness_conjuncts, ModelError,
};
