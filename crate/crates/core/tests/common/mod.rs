//! Random machines and a reference stepper that works from rule names
//! directly, with a plain vector per tape.

#![allow(dead_code)]

use std::collections::HashMap;

use proptest::prelude::*;
use tapelab::{MachineSpec, Move, RuleSpec, Status};

pub const SYMS: [&str; 3] = ["a", "b", "c"];

fn keys(alphabet: &[String], k: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                alphabet.iter().map(move |s| {
                    let mut q = p.clone();
                    q.push(s.clone());
                    q
                })
            })
            .collect();
    }
    out
}

fn moves() -> impl Strategy<Value = Move> {
    prop_oneof![Just(Move::Left), Just(Move::Right), Just(Move::Stay)]
}

/// A fully explicit rule table over a small random signature.
pub fn machine_spec(max_tapes: usize) -> impl Strategy<Value = MachineSpec> {
    (1..=max_tapes, 1..=SYMS.len(), 1..=3usize).prop_flat_map(|(k, nsym, nstates)| {
        let mut alphabet = vec![">".to_string(), "_".to_string()];
        alphabet.extend(SYMS[..nsym].iter().map(|s| s.to_string()));
        let states: Vec<String> = (0..nstates).map(|i| format!("q{i}")).collect();
        let mut controls = states.clone();
        controls.extend(["h", "yes", "no"].map(String::from));
        let writable: Vec<String> = alphabet[1..].to_vec();
        let all: Vec<(String, Vec<String>)> = states
            .iter()
            .flat_map(|q| keys(&alphabet, k).into_iter().map(move |r| (q.clone(), r)))
            .collect();
        let n = all.len();
        let per_rule = (
            proptest::sample::select(controls),
            proptest::collection::vec((proptest::sample::select(writable), moves()), k),
        );
        proptest::collection::vec(per_rule, n).prop_map(move |choices| {
            let rules = all
                .iter()
                .zip(choices)
                .map(|((q, read), (next, writes))| RuleSpec {
                    state: q.clone(),
                    read: Some(read.clone()),
                    next,
                    writes: read
                        .iter()
                        .zip(writes)
                        .map(|(r, w)| {
                            if r == ">" {
                                (">".to_string(), Move::Right)
                            } else {
                                w
                            }
                        })
                        .collect(),
                })
                .collect();
            MachineSpec {
                name: "random".into(),
                tape_count: k,
                alphabet: alphabet.clone(),
                states: states.clone(),
                start: "q0".into(),
                rules,
            }
        })
    })
}

/// Input words over the non-reserved symbols of a spec.
pub fn word_for(spec: &MachineSpec, max_len: usize) -> impl Strategy<Value = Vec<String>> {
    let syms = spec.alphabet[2..].to_vec();
    proptest::collection::vec(proptest::sample::select(syms), 0..=max_len)
}

/// `(status, mtime, output)` by direct simulation of the named rules.
pub fn reference_run(
    spec: &MachineSpec,
    input: &[String],
    budget: u64,
) -> (Status, Option<u64>, Vec<String>) {
    let table: HashMap<(String, Vec<String>), &RuleSpec> = spec
        .rules
        .iter()
        .map(|r| {
            (
                (r.state.clone(), r.read.clone().expect("explicit rules")),
                r,
            )
        })
        .collect();
    let k = spec.tape_count;
    let mut tapes: Vec<Vec<String>> = vec![vec![">".to_string()]; k];
    tapes[0].extend(input.iter().cloned());
    let mut heads = vec![0usize; k];
    let mut control = spec.start.clone();
    let mut t = 0;
    let halting = |c: &str| matches!(c, "h" | "yes" | "no");
    while !halting(&control) && t < budget {
        let read: Vec<String> = (0..k)
            .map(|i| {
                tapes[i]
                    .get(heads[i])
                    .cloned()
                    .unwrap_or_else(|| "_".into())
            })
            .collect();
        let rule = table[&(control.clone(), read)];
        for i in 0..k {
            let (w, d) = &rule.writes[i];
            if tapes[i].len() <= heads[i] {
                tapes[i].resize(heads[i] + 1, "_".into());
            }
            tapes[i][heads[i]] = w.clone();
            match d {
                Move::Left => heads[i] -= 1,
                Move::Right => heads[i] += 1,
                Move::Stay => {}
            }
        }
        control = rule.next.clone();
        t += 1;
    }
    let status = match control.as_str() {
        "h" => Status::Halt,
        "yes" => Status::Yes,
        "no" => Status::No,
        _ => return (Status::BudgetExhausted, None, Vec::new()),
    };
    let mut out: Vec<String> = tapes[k - 1][1..].to_vec();
    while out.last().is_some_and(|s| s == "_") {
        out.pop();
    }
    (status, Some(t), out)
}
