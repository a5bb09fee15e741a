//! Nondeterministic machines as transition relations, explored breadth-first.
//!
//! The frontier at step `t` is the set of distinct configurations reachable in
//! exactly `t` steps. Halted members stay in the frontier (absorbed, only their
//! step counter advancing) so that later `no`/`h` branches remain observable.
//! Exploring the whole frontier is the exponential deterministic simulation of
//! a nondeterministic machine; the recorded frontier sizes expose that cost.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::machine::{
    compile_table, Action, Configuration, Control, Machine, MachineError, MachineSpec, Signature,
    StateId, Sym,
};

/// A machine whose transition table maps each key to one or more actions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationalMachine {
    sig: Signature,
    delta: Vec<Vec<Action>>,
}

impl RelationalMachine {
    pub fn new(spec: &MachineSpec) -> Result<RelationalMachine, MachineError> {
        let (sig, mut delta) = compile_table(spec, true)?;
        for acts in &mut delta {
            acts.sort();
        }
        Ok(RelationalMachine { sig, delta })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    /// Successor lists indexed by key.
    pub fn relation(&self) -> &[Vec<Action>] {
        &self.delta
    }

    /// Number of tuples in the relation.
    pub fn cardinality(&self) -> usize {
        self.delta.iter().map(Vec::len).sum()
    }

    pub fn branching(&self) -> usize {
        self.delta.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn successors(&self, q: StateId, read: &[Sym]) -> &[Action] {
        &self.delta[self.sig.key_of(q, read)]
    }

    pub fn initial_frontier(&self, input: &[Sym]) -> Result<Frontier, MachineError> {
        let c = self.sig.initial_configuration(input)?;
        Ok(Frontier {
            step: 0,
            members: BTreeSet::from([c]),
        })
    }

    fn expand(&self, c: &Configuration) -> Vec<Configuration> {
        match c.control {
            Control::State(q) => self
                .successors(q, &c.read_tuple())
                .iter()
                .map(|a| {
                    let mut next = c.clone();
                    next.apply(a);
                    next
                })
                .collect(),
            _ => {
                let mut next = c.clone();
                next.step += 1;
                vec![next]
            }
        }
    }

    /// Expands every member by all applicable tuples and deduplicates.
    pub fn nd_step(&self, frontier: &Frontier) -> Frontier {
        let members = frontier
            .members
            .iter()
            .flat_map(|c| self.expand(c))
            .collect();
        Frontier {
            step: frontier.step + 1,
            members,
        }
    }

    /// Same set as [`RelationalMachine::nd_step`], with members expanded on
    /// the rayon pool.
    pub fn nd_step_parallel(&self, frontier: &Frontier) -> Frontier {
        let members: Vec<Configuration> = frontier.members.iter().cloned().collect();
        let members = members
            .par_iter()
            .flat_map_iter(|c| self.expand(c))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        Frontier {
            step: frontier.step + 1,
            members,
        }
    }

    /// Breadth-first run for at most `budget` steps. Stops early once every
    /// branch has halted.
    pub fn nd_run(&self, input: &[Sym], budget: u64) -> Result<NdResult, MachineError> {
        self.nd_run_with(input, budget, false)
    }

    pub fn nd_run_with(
        &self,
        input: &[Sym],
        budget: u64,
        parallel: bool,
    ) -> Result<NdResult, MachineError> {
        let mut frontier = self.initial_frontier(input)?;
        let mut result = NdResult {
            accepts: false,
            mtime_yes: None,
            mtime_no: None,
            mtime_halt: None,
            frontier_sizes: vec![1],
            steps: 0,
            exhausted: false,
        };
        result.record(&frontier);
        while frontier.step < budget && !frontier.all_halted() {
            frontier = if parallel {
                self.nd_step_parallel(&frontier)
            } else {
                self.nd_step(&frontier)
            };
            result.frontier_sizes.push(frontier.len());
            result.record(&frontier);
        }
        result.steps = frontier.step;
        result.exhausted = !frontier.all_halted();
        result.accepts = result.mtime_yes.is_some();
        Ok(result)
    }
}

/// The deterministic machine as a relation with exactly one tuple per key.
pub fn embed_deterministic(machine: &Machine) -> RelationalMachine {
    RelationalMachine {
        sig: machine.signature().clone(),
        delta: machine.table().iter().map(|a| vec![a.clone()]).collect(),
    }
}

/// Distinct configurations reachable at one step of the computation tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frontier {
    pub step: u64,
    pub members: BTreeSet<Configuration>,
}

impl Frontier {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn all_halted(&self) -> bool {
        self.members.iter().all(|c| c.control.is_halted())
    }
}

/// Acceptance and the per-halting-state first-entry times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NdResult {
    pub accepts: bool,
    /// `None` means no branch entered the state within the budget.
    pub mtime_yes: Option<u64>,
    pub mtime_no: Option<u64>,
    pub mtime_halt: Option<u64>,
    /// Frontier size at steps 0, 1, ..., `steps`.
    pub frontier_sizes: Vec<usize>,
    pub steps: u64,
    /// Some branch was still running when the budget ran out.
    pub exhausted: bool,
}

impl NdResult {
    fn record(&mut self, frontier: &Frontier) {
        let t = frontier.step;
        for c in &frontier.members {
            let slot = match c.control {
                Control::Yes => &mut self.mtime_yes,
                Control::No => &mut self.mtime_no,
                Control::Halt => &mut self.mtime_halt,
                Control::State(_) => continue,
            };
            slot.get_or_insert(t);
        }
    }

    pub fn times(&self) -> (Option<u64>, Option<u64>, Option<u64>) {
        (self.mtime_yes, self.mtime_no, self.mtime_halt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Status;
    use crate::text::{parse_machine, parse_relational};

    const TRIPLE: &str = "\
name: triple
tapes: 1
mode: nondet
alphabet: > _ a b c
states: s t
start: s
s (>) -> t (>,R)
t (_) -> yes (a,S)
t (_) -> no (b,S)
t (_) -> h (c,S)
t * -> no (_,S)
s * -> no (_,S)
";

    #[test]
    fn three_successors() {
        let m = parse_relational(TRIPLE).unwrap();
        let f0 = m.initial_frontier(&[]).unwrap();
        let f1 = m.nd_step(&f0);
        assert_eq!(f1.len(), 1);
        let f2 = m.nd_step(&f1);
        assert_eq!(f2.len(), 3);
        assert!(f2.all_halted());
        let f3 = m.nd_step(&f2);
        assert_eq!(f3.len(), 3);
        assert_eq!(f3.step, 3);
        let r = m.nd_run(&[], 10).unwrap();
        assert!(r.accepts);
        assert_eq!(r.times(), (Some(2), Some(2), Some(2)));
        assert_eq!(r.frontier_sizes, vec![1, 1, 3]);
    }

    #[test]
    fn diamond_branches_merge() {
        // Both branches write the same symbol and reach the same state.
        let doc = "\
name: diamond
tapes: 1
mode: nondet
alphabet: > _ a
states: s l r j
start: s
s (>) -> l (>,R)
s (>) -> r (>,R)
l * -> j (a,S)
r * -> j (a,S)
j * -> yes (a,S)
s * -> no (_,S)
";
        let m = parse_relational(doc).unwrap();
        let f = m.nd_step(&m.initial_frontier(&[]).unwrap());
        assert_eq!(f.len(), 2);
        let f = m.nd_step(&f);
        assert_eq!(f.len(), 1);
        let r = m.nd_run(&[], 10).unwrap();
        assert_eq!(r.frontier_sizes, vec![1, 2, 1, 1]);
        assert_eq!(r.mtime_yes, Some(3));
    }

    #[test]
    fn embedding_preserves_run() {
        let doc = "\
name: appender
tapes: 1
alphabet: > _ 1
states: s q
start: s
s (>) -> q (>,R)
s * -> no (_,S)
q (1) -> q (1,R)
q (_) -> yes (1,S)
q * -> no (_,S)
";
        let m = parse_machine(doc).unwrap();
        let rel = embed_deterministic(&m);
        assert_eq!(rel.cardinality(), m.table().len());
        let x = m.parse_word("111").unwrap();
        let direct = m.run(&x, 100).unwrap();
        let nd = rel.nd_run(&x, 100).unwrap();
        assert_eq!(direct.status, Status::Yes);
        assert_eq!(nd.mtime_yes, direct.mtime);
        assert_eq!(nd.mtime_no, None);
        assert_eq!(nd.mtime_halt, None);
        assert!(nd.frontier_sizes.iter().all(|s| *s == 1));
    }

    #[test]
    fn zero_budget() {
        let m = parse_relational(TRIPLE).unwrap();
        let r = m.nd_run(&[], 0).unwrap();
        assert!(!r.accepts);
        assert_eq!(r.times(), (None, None, None));
        assert!(r.exhausted);
    }

    #[test]
    fn parallel_step_matches_sequential() {
        let m = parse_relational(TRIPLE).unwrap();
        let mut f = m.initial_frontier(&[]).unwrap();
        for _ in 0..4 {
            let a = m.nd_step(&f);
            let b = m.nd_step_parallel(&f);
            assert_eq!(a, b);
            f = a;
        }
        assert_eq!(
            m.nd_run_with(&[], 8, true).unwrap(),
            m.nd_run(&[], 8).unwrap()
        );
    }
}
