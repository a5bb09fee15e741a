//! Hand-written machines with hand-traced behavior.
//!
//! Every deterministic entry lists inputs together with the `(status, mtime,
//! output)` triple worked out by tracing the rule table by hand.

use crate::machine::{Machine, Status};
use crate::nondet::{embed_deterministic, RelationalMachine};
use crate::text::{parse_machine, parse_relational};

/// Budget under which the expected results hold.
pub const BUDGET: u64 = 10_000;
/// Budget for the relational entries; every branch of every entry is at
/// most this deep or is cut off here.
pub const ND_BUDGET: u64 = 12;

#[derive(Clone, Copy, Debug)]
pub struct Case {
    pub input: &'static str,
    pub status: Status,
    pub mtime: Option<u64>,
    pub output: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub source: &'static str,
    pub cases: &'static [Case],
}

impl Entry {
    pub fn machine(&self) -> Machine {
        parse_machine(self.source).expect("corpus machine is valid")
    }
}

const fn ok(input: &'static str, status: Status, mtime: u64, output: &'static str) -> Case {
    Case {
        input,
        status,
        mtime: Some(mtime),
        output,
    }
}

const fn cut(input: &'static str) -> Case {
    Case {
        input,
        status: Status::BudgetExhausted,
        mtime: None,
        output: "",
    }
}

use Status::{Halt as H, No as N, Yes as Y};

macro_rules! entry {
    ($name:literal, [$($case:expr),* $(,)?]) => {
        Entry {
            name: $name,
            source: include_str!(concat!("../machines/", $name, ".tm")),
            cases: &[$($case),*],
        }
    };
}

pub const MACHINES: &[Entry] = &[
    entry!(
        "appender",
        [ok("11", Y, 4, "111"), ok("", Y, 2, "1"), ok("0", N, 2, "")]
    ),
    entry!("looper", [cut("")]),
    entry!("eraser", [ok("101", H, 5, ""), ok("", H, 2, "")]),
    entry!(
        "incrementer",
        [
            ok("1101", H, 4, "0011"),
            ok("", H, 2, "1"),
            ok("11", H, 4, "001")
        ]
    ),
    entry!(
        "parity",
        [
            ok("1101", N, 6, "1101"),
            ok("11", Y, 4, "11"),
            ok("", Y, 2, "")
        ]
    ),
    entry!(
        "unary_double",
        [
            ok("11", H, 6, "1111"),
            ok("", H, 2, ""),
            ok("1", H, 4, "11")
        ]
    ),
    entry!("copier", [ok("101", H, 5, "101"), ok("", H, 2, "")]),
    entry!(
        "reverser",
        [
            ok("10", H, 7, "01"),
            ok("", H, 3, ""),
            ok("110", H, 9, "011")
        ]
    ),
    entry!(
        "unary_adder",
        [
            ok("11+111", H, 8, "11111"),
            ok("+", H, 3, ""),
            ok("1+", H, 4, "1")
        ]
    ),
    entry!(
        "empty_tester",
        [ok("", Y, 2, ""), ok("01", N, 2, "_1"), ok("1", N, 2, "")]
    ),
    entry!(
        "first_symbol",
        [ok("10", Y, 2, "10"), ok("01", N, 2, "01"), ok("", N, 2, "")]
    ),
    entry!("immediate_halt", [ok("101", H, 1, "101"), ok("", H, 1, "")]),
    entry!("immediate_no", [ok("01", N, 1, "01")]),
    entry!("bouncer", [ok("111", H, 9, "111"), ok("", H, 3, "")]),
    entry!(
        "mod3",
        [
            ok("111", Y, 5, "111"),
            ok("11", N, 4, "11"),
            ok("", Y, 2, "")
        ]
    ),
    entry!("complement", [ok("1001", H, 6, "0110"), ok("", H, 2, "")]),
    entry!(
        "zeros_ones",
        [
            ok("0011", Y, 7, "00"),
            ok("", Y, 3, ""),
            ok("01", Y, 5, "0"),
            ok("001", N, 6, "00"),
            ok("011", N, 5, "0"),
            ok("10", N, 3, ""),
            ok("00", N, 5, "00"),
        ]
    ),
    entry!("copier3", [ok("0110", H, 6, "0110"), ok("", H, 2, "")]),
    entry!("duplicator", [ok("10", H, 6, "1100"), ok("", H, 2, "")]),
    entry!("runner", [cut("1")]),
    entry!(
        "third_bits",
        [
            ok("111", H, 5, "010"),
            ok("", H, 2, ""),
            ok("1111", H, 6, "0101")
        ]
    ),
];

pub fn entry(name: &str) -> Option<&'static Entry> {
    MACHINES.iter().find(|e| e.name == name)
}

const ND_SOURCES: &[(&str, &str)] = &[
    ("nd_find_one", include_str!("../machines/nd_find_one.tm")),
    ("nd_mark_one", include_str!("../machines/nd_mark_one.tm")),
    (
        "nd_three_ways",
        include_str!("../machines/nd_three_ways.tm"),
    ),
    (
        "nd_maybe_exit",
        include_str!("../machines/nd_maybe_exit.tm"),
    ),
    ("nd_recolor", include_str!("../machines/nd_recolor.tm")),
    (
        "nd_write_or_stop",
        include_str!("../machines/nd_write_or_stop.tm"),
    ),
    (
        "nd_all_reject",
        include_str!("../machines/nd_all_reject.tm"),
    ),
    ("nd_guess3", include_str!("../machines/nd_guess3.tm")),
];

/// A relational machine with inputs to explore.
#[derive(Clone, Debug)]
pub struct NdEntry {
    pub name: String,
    pub machine: RelationalMachine,
    pub inputs: Vec<&'static str>,
}

/// Guesses `n` bits onto the tape, steps back onto the last one and
/// accepts iff it is 1. `n + 3` steps deep; `2^n` distinct branches.
pub fn guess_bits_source(n: usize) -> String {
    let guess: Vec<String> = (0..n).map(|i| format!("g{i}")).collect();
    let mut s = format!(
        "name: guess_bits_{n}\nmode: nondet\ntapes: 1\nalphabet: > _ 0 1\nstates: s {} c d\nstart: s\n",
        guess.join(" ")
    );
    let first = guess.first().map(String::as_str).unwrap_or("c");
    s.push_str(&format!("s (>) -> {first} (>,R)\ns * -> no (_,S)\n"));
    for (i, g) in guess.iter().enumerate() {
        let next = guess.get(i + 1).map(String::as_str).unwrap_or("c");
        s.push_str(&format!("{g} * -> {next} (0,R)\n{g} * -> {next} (1,R)\n"));
    }
    s.push_str("c (_) -> d (_,L)\nc * -> no (_,S)\n");
    s.push_str("d (1) -> yes (1,S)\nd (0) -> no (0,S)\nd * -> no (_,S)\n");
    s
}

pub fn guess_bits(n: usize) -> RelationalMachine {
    parse_relational(&guess_bits_source(n)).expect("generated machine is valid")
}

/// Relational corpus: the hand-written files, the guess-bits family at a
/// few sizes and two embedded deterministic machines.
pub fn nd_corpus() -> Vec<NdEntry> {
    let mut out: Vec<NdEntry> = ND_SOURCES
        .iter()
        .map(|(name, src)| NdEntry {
            name: name.to_string(),
            machine: parse_relational(src).expect("corpus machine is valid"),
            inputs: match *name {
                "nd_three_ways" => vec!["", "11"],
                "nd_maybe_exit" | "nd_write_or_stop" => vec![""],
                "nd_mark_one" => vec!["111", "", "1"],
                "nd_guess3" => vec!["10", "0"],
                _ => vec!["0101", "", "00", "101"],
            },
        })
        .collect();
    for n in [3, 6, 9] {
        out.push(NdEntry {
            name: format!("guess_bits_{n}"),
            machine: guess_bits(n),
            inputs: vec![""],
        });
    }
    for (name, inputs) in [
        ("parity", vec!["1101", "11"]),
        ("zeros_ones", vec!["0011", "001"]),
    ] {
        out.push(NdEntry {
            name: format!("embedded_{name}"),
            machine: embed_deterministic(&entry(name).unwrap().machine()),
            inputs,
        });
    }
    out
}
