//! Universal interpretation of encoded `<M;x>` pairs, the clocked machine
//! family `U_n`, and halting probes over a clock schedule.
//!
//! Runs are dispatched through [`Engine`] implementations registered by name
//! in an [`EngineRegistry`]: `direct` steps a [`Machine`] value, `universal`
//! encodes the pair and interprets the flat encoding.

use std::collections::BTreeMap;

use crate::encoding::{encode_pair, parse_flat, EncodedPair, EncodingError};
use crate::machine::{Machine, RunResult, Status, Sym};

/// A run plus the interpreter work it cost beyond the simulated steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineRun {
    pub result: RunResult,
    pub overhead: u64,
}

/// A way of executing a machine on an input under a step budget.
pub trait Engine: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn execute(
        &self,
        machine: &Machine,
        input: &[Sym],
        budget: u64,
    ) -> Result<EngineRun, EncodingError>;
}

/// Steps the in-memory transition table.
#[derive(Debug, Default, Clone, Copy)]
pub struct DirectEngine;

impl Engine for DirectEngine {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn description(&self) -> &'static str {
        "step the validated transition table"
    }

    fn execute(
        &self,
        machine: &Machine,
        input: &[Sym],
        budget: u64,
    ) -> Result<EngineRun, EncodingError> {
        Ok(EngineRun {
            result: machine.run(input, budget)?,
            overhead: 0,
        })
    }
}

/// Encodes the pair and runs it through [`universal_run`].
#[derive(Debug, Default, Clone, Copy)]
pub struct UniversalEngine;

impl Engine for UniversalEngine {
    fn name(&self) -> &'static str {
        "universal"
    }

    fn description(&self) -> &'static str {
        "encode <M;x> and interpret the flat encoding on a multi-track tape"
    }

    fn execute(
        &self,
        machine: &Machine,
        input: &[Sym],
        budget: u64,
    ) -> Result<EngineRun, EncodingError> {
        let pair = encode_pair(machine, input)?;
        universal_run(&pair, budget)
    }
}

/// Engines by name.
pub struct EngineRegistry {
    engines: BTreeMap<&'static str, Box<dyn Engine>>,
}

impl Default for EngineRegistry {
    fn default() -> Self {
        let mut r = EngineRegistry {
            engines: BTreeMap::new(),
        };
        r.register(Box::new(DirectEngine));
        r.register(Box::new(UniversalEngine));
        r
    }
}

impl EngineRegistry {
    pub fn register(&mut self, engine: Box<dyn Engine>) {
        self.engines.insert(engine.name(), engine);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Engine> {
        self.engines.get(name).map(|e| e.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.engines.keys().copied()
    }
}

/// Interprets an encoded pair.
///
/// The simulated tapes live on one multi-track tape (cell `j` holds the `k`
/// symbols at position `j`). Each simulated step sweeps from cell 0 to the
/// rightmost head to read the tuple, indexes the action table, and sweeps
/// again to write back. `overhead` counts cells swept plus table-index work,
/// so it grows as `O(mtime^2)` since heads move at most one cell per step.
pub fn universal_run(pair: &EncodedPair, budget: u64) -> Result<EngineRun, EncodingError> {
    let prog = parse_flat(pair)?;
    let k = prog.tape_count;
    let radix = prog.symbol_count;
    let per = radix.pow(k as u32);
    let stride = prog.stride();
    let halted_from = prog.state_count as u32;

    let mut tracks: Vec<u32> = vec![1; k * (prog.input.len() + 2)];
    tracks[..k].fill(0);
    for (j, s) in prog.input.iter().enumerate() {
        tracks[(j + 1) * k] = *s;
    }
    let mut heads = vec![0usize; k];
    let mut control = prog.start;
    let mut t: u64 = 0;
    let mut overhead: u64 = 0;

    while control < halted_from && t < budget {
        let span = heads.iter().max().copied().unwrap_or(0) + 1;
        overhead += span as u64;
        let mut key = 0usize;
        for (i, h) in heads.iter().enumerate() {
            key = key * radix + tracks[h * k + i] as usize;
        }
        key += control as usize * per;
        overhead += k as u64 + 1;
        let act = &prog.actions[key * stride..(key + 1) * stride];
        overhead += span as u64;
        for i in 0..k {
            let w = act[1 + 2 * i];
            let d = act[2 + 2 * i];
            tracks[heads[i] * k + i] = w;
            match d {
                0 if heads[i] == 0 => {
                    return Err(EncodingError::Malformed(
                        "action moves a head left of the start marker".into(),
                    ))
                }
                0 => heads[i] -= 1,
                1 => heads[i] += 1,
                _ => {}
            }
        }
        let need = (heads.iter().max().copied().unwrap_or(0) + 1) * k;
        if tracks.len() < need {
            tracks.resize(need, 1);
        }
        control = act[0];
        t += 1;
    }

    let status = match control.checked_sub(halted_from) {
        None => Status::BudgetExhausted,
        Some(0) => Status::Halt,
        Some(1) => Status::Yes,
        Some(_) => Status::No,
    };
    let result = if status == Status::BudgetExhausted {
        RunResult {
            status,
            mtime: None,
            output: Vec::new(),
            steps: t,
            trace: None,
        }
    } else {
        let last = k - 1;
        let cells = tracks.len() / k;
        let end = (1..cells)
            .rev()
            .find(|j| tracks[j * k + last] != 1)
            .unwrap_or(0);
        RunResult {
            status,
            mtime: Some(t),
            output: (1..=end).map(|j| Sym(tracks[j * k + last])).collect(),
            steps: t,
            trace: None,
        }
    };
    Ok(EngineRun { result, overhead })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
}

/// Result of the clocked machine `U_n`: `Yes` with the simulated halting
/// time when that time is strictly below `n`, otherwise `No` at time `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClockedVerdict {
    pub verdict: Verdict,
    pub time: u64,
}

pub fn clocked_run(
    engine: &dyn Engine,
    machine: &Machine,
    input: &[Sym],
    n: u64,
) -> Result<ClockedVerdict, EncodingError> {
    let run = engine.execute(machine, input, n)?;
    Ok(match run.result.mtime {
        Some(t) if t < n => ClockedVerdict {
            verdict: Verdict::Yes,
            time: t,
        },
        _ => ClockedVerdict {
            verdict: Verdict::No,
            time: n,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeOutcome {
    /// First clock in the schedule at which `U_n` said yes.
    Witnessed {
        clock: u64,
        time: u64,
    },
    Exhausted,
}

/// Tries each clock of `schedule` in order and reports the first witness.
pub fn halt_probe(
    engine: &dyn Engine,
    machine: &Machine,
    input: &[Sym],
    schedule: &[u64],
) -> Result<ProbeOutcome, EncodingError> {
    for &n in schedule {
        let v = clocked_run(engine, machine, input, n)?;
        if v.verdict == Verdict::Yes {
            return Ok(ProbeOutcome::Witnessed {
                clock: n,
                time: v.time,
            });
        }
    }
    Ok(ProbeOutcome::Exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_machine;

    const APPENDER: &str = "\
name: appender
tapes: 1
alphabet: > _ 0 1
states: s q
start: s
s (>) -> q (>,R)
s * -> no (_,S)
q (1) -> q (1,R)
q (_) -> yes (1,S)
q * -> no (_,S)
";

    const LOOPER: &str = "\
name: looper
tapes: 1
alphabet: > _
states: s p q
start: s
s * -> p (_,S)
p * -> q (_,S)
q * -> p (_,S)
";

    #[test]
    fn universal_agrees_with_direct() {
        let m = parse_machine(APPENDER).unwrap();
        let x = m.parse_word("11").unwrap();
        let direct = m.run(&x, 100).unwrap();
        let u = universal_run(&encode_pair(&m, &x).unwrap(), 100).unwrap();
        assert_eq!(u.result.observables(), direct.observables());
        assert_eq!(m.render_word(&u.result.output), "111");
        assert!(u.overhead > 0);

        let l = parse_machine(LOOPER).unwrap();
        let u = universal_run(&encode_pair(&l, &[]).unwrap(), 1000).unwrap();
        assert_eq!(u.result.status, Status::BudgetExhausted);
    }

    #[test]
    fn clock_boundary_is_strict() {
        let reg = EngineRegistry::default();
        let m = parse_machine(APPENDER).unwrap();
        let x = m.parse_word("11").unwrap();
        for name in ["direct", "universal"] {
            let e = reg.get(name).unwrap();
            let at = clocked_run(e, &m, &x, 4).unwrap();
            assert_eq!(
                at,
                ClockedVerdict {
                    verdict: Verdict::No,
                    time: 4
                }
            );
            let after = clocked_run(e, &m, &x, 5).unwrap();
            assert_eq!(
                after,
                ClockedVerdict {
                    verdict: Verdict::Yes,
                    time: 4
                }
            );
        }
    }

    #[test]
    fn probe_schedule() {
        let reg = EngineRegistry::default();
        let e = reg.get("direct").unwrap();
        let m = parse_machine(APPENDER).unwrap();
        let x = m.parse_word("1").unwrap();
        // mtime is 3, so the first clock exceeding it is 4.
        assert_eq!(
            halt_probe(e, &m, &x, &[1, 2, 4, 8]).unwrap(),
            ProbeOutcome::Witnessed { clock: 4, time: 3 }
        );
        let l = parse_machine(LOOPER).unwrap();
        assert_eq!(
            halt_probe(e, &l, &[], &[2, 4, 8]).unwrap(),
            ProbeOutcome::Exhausted
        );
        assert_eq!(halt_probe(e, &m, &x, &[]).unwrap(), ProbeOutcome::Exhausted);
    }

    #[test]
    fn registry_lists_engines() {
        let reg = EngineRegistry::default();
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["direct", "universal"]);
        assert!(reg.get("nope").is_none());
    }
}
