//! A laboratory for machine semantics at finite scale.
//!
//! * [`machine`]: deterministic k-tape machines and bounded runs.
//! * [`text`] and [`encoding`]: machine documents and the flat `<M;x>` encoding.
//! * [`universal`]: run engines, the clocked machine family and halting probes.
//! * [`nondet`]: transition relations explored breadth-first.
//! * [`dyadic`]: exact dyadic rationals and precision-n approximations.
//! * [`coin`]: fair-coin sources and exact sampling from them.
//! * [`qsim`]: precision-ω evolution and coin-flip measurement.

pub mod coin;
pub mod corpus;
pub mod dyadic;
pub mod encoding;
pub mod machine;
pub mod nondet;
pub mod qsim;
pub mod text;
pub mod universal;

pub use machine::{
    output_of, Action, Configuration, Control, Machine, MachineError, MachineSpec, Move, RuleSpec,
    RunResult, Signature, StateId, Status, Sym, Tape,
};
pub use nondet::{embed_deterministic, Frontier, NdResult, RelationalMachine};
pub use text::{parse_machine, parse_relational, serialize_machine, serialize_relational};
