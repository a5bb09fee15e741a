//! `tapelab`: run machines, probe bounded halting, expand nondeterministic
//! computation trees, run coin-flip quantum experiments and print dyadic
//! approximations. Every command writes one JSON record per line.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use tapelab::coin::{CoinSource, DEFAULT_GENERATOR};
use tapelab::dyadic::{Approximable, Dyadic, RealExpr};
use tapelab::encoding::encode_pair;
use tapelab::qsim::{
    evolve, fidelity_bound, measurement_probabilities, outcome_label, parse_experiment,
    sample_histogram, Experiment, QsimError,
};
use tapelab::text::TextError;
use tapelab::universal::{halt_probe, EngineRegistry, ProbeOutcome};
use tapelab::{parse_machine, parse_relational, Configuration, Machine, Status, Sym};

const SEED_ENV: &str = "TAPELAB_SEED";

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NOINPUT: u8 = 66;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(
    name = "tapelab",
    version,
    about = "Finite-scale machine semantics laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a deterministic machine under a step budget.
    Run {
        machine: PathBuf,
        #[arg(short = 'x', long, default_value = "")]
        input: String,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        /// Emit one record per configuration.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value = "direct")]
        engine: String,
    },
    /// Try the clocked machine U_n for each n in the schedule.
    HaltProbe {
        machine: PathBuf,
        #[arg(short = 'x', long, default_value = "")]
        input: String,
        /// Comma-separated clock values, tried in order.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        clocks: Vec<u64>,
        #[arg(long, default_value = "universal")]
        engine: String,
    },
    /// Breadth-first expansion of a relational machine.
    NdRun {
        machine: PathBuf,
        #[arg(short = 'x', long, default_value = "")]
        input: String,
        #[arg(long, default_value_t = 12)]
        budget: u64,
        /// Emit the frontier size at every step.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        parallel: bool,
    },
    /// Run a quantum experiment file.
    Qsim {
        experiment: PathBuf,
        #[arg(long)]
        samples: Option<u64>,
        /// Overrides the file's seed and the TAPELAB_SEED variable.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        omega: Option<u64>,
        /// Comma-separated precisions; one report per value.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<u64>,
        #[arg(long, default_value = DEFAULT_GENERATOR)]
        generator: String,
        /// Print exact amplitudes as m/2^n instead of floating point.
        #[arg(long)]
        exact: bool,
    },
    /// Precision-n dyadic approximation of `p/q` or `sqrt(p/q)`; `x@n` also works.
    Approx {
        spec: String,
        #[arg(short, long)]
        n: Option<u64>,
    },
    /// Print the flat encoding of a machine and input.
    Encode {
        machine: PathBuf,
        #[arg(short = 'x', long, default_value = "")]
        input: String,
    },
    /// List the registered run engines.
    Engines,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl ToString) -> Failure {
        Failure {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

type Out<'a> = BufWriter<io::StdoutLock<'a>>;

fn emit(out: &mut Out, record: Value) -> Result<(), Failure> {
    serde_json::to_writer(&mut *out, &record).map_err(io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: if e.kind() == io::ErrorKind::NotFound {
            EXIT_NOINPUT
        } else {
            EXIT_DATA
        },
        message: format!("{}: {e}", path.display()),
    })
}

fn load_machine(path: &Path) -> Result<Machine, Failure> {
    let text = read_file(path)?;
    parse_machine(&text).map_err(|e: TextError| Failure::data(format!("{}: {e}", path.display())))
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Yes => 0,
        Status::No => 1,
        Status::Halt => 2,
        Status::BudgetExhausted => 3,
    }
}

const WINDOW: usize = 3;

fn trace_record(m: &Machine, c: &Configuration, budget: u64) -> Value {
    let sig = m.signature();
    let event = if c.control.is_halted() {
        "halted"
    } else if c.step >= budget {
        "budget"
    } else {
        "stepped"
    };
    let tapes: Vec<Value> = c
        .tapes
        .iter()
        .zip(&c.cursors)
        .map(|(t, &cur)| {
            let from = cur.saturating_sub(WINDOW);
            let cells: Vec<&str> = (from..=cur + WINDOW)
                .map(|j| sig.symbol_name(t.read(j)))
                .collect();
            json!({"cursor": cur, "from": from, "cells": cells})
        })
        .collect();
    json!({
        "record": "trace",
        "step": c.step,
        "control": sig.control_name(c.control),
        "tapes": tapes,
        "event": event,
    })
}

fn cmd_run(
    out: &mut Out,
    path: &Path,
    input: &str,
    budget: u64,
    trace: bool,
    engine: &str,
) -> Result<u8, Failure> {
    let m = load_machine(path)?;
    let x = m.parse_word(input).map_err(Failure::data)?;
    let registry = EngineRegistry::default();
    let eng = registry.get(engine).ok_or_else(|| {
        Failure::usage(format!(
            "unknown engine `{engine}`; available: {}",
            registry.names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    if trace {
        let mut err = Ok(());
        m.run_observed(&x, budget, |c| {
            if err.is_ok() {
                err = emit(out, trace_record(&m, c, budget));
            }
        })
        .map_err(Failure::data)?;
        err?;
    }
    let run = eng.execute(&m, &x, budget).map_err(Failure::data)?;
    let r = &run.result;
    emit(
        out,
        json!({
            "record": "result",
            "machine": m.name(),
            "engine": eng.name(),
            "input": input,
            "status": r.status.name(),
            "mtime": r.mtime,
            "output": m.render_word(&r.output),
            "steps": r.steps,
            "overhead": run.overhead,
        }),
    )?;
    Ok(status_code(r.status))
}

fn cmd_halt_probe(
    out: &mut Out,
    path: &Path,
    input: &str,
    clocks: &[u64],
    engine: &str,
) -> Result<u8, Failure> {
    let m = load_machine(path)?;
    let x = m.parse_word(input).map_err(Failure::data)?;
    let registry = EngineRegistry::default();
    let eng = registry
        .get(engine)
        .ok_or_else(|| Failure::usage(format!("unknown engine `{engine}`")))?;
    let outcome = halt_probe(eng, &m, &x, clocks).map_err(Failure::data)?;
    let (record, code) = match outcome {
        ProbeOutcome::Witnessed { clock, time } => (
            json!({"record": "probe", "machine": m.name(), "input": input, "clocks": clocks,
                   "outcome": "witnessed", "clock": clock, "mtime": time}),
            0,
        ),
        ProbeOutcome::Exhausted => (
            json!({"record": "probe", "machine": m.name(), "input": input, "clocks": clocks,
                   "outcome": "exhausted"}),
            3,
        ),
    };
    emit(out, record)?;
    Ok(code)
}

fn cmd_nd_run(
    out: &mut Out,
    path: &Path,
    input: &str,
    budget: u64,
    trace: bool,
    parallel: bool,
) -> Result<u8, Failure> {
    let text = read_file(path)?;
    let m =
        parse_relational(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let x: Vec<Sym> = m.signature().parse_word(input).map_err(Failure::data)?;
    let r = m.nd_run_with(&x, budget, parallel).map_err(Failure::data)?;
    if trace {
        for (t, size) in r.frontier_sizes.iter().enumerate() {
            emit(out, json!({"record": "frontier", "step": t, "size": size}))?;
        }
    }
    emit(
        out,
        json!({
            "record": "nd_result",
            "machine": m.signature().name(),
            "input": input,
            "accepts": r.accepts,
            "mtime_yes": r.mtime_yes,
            "mtime_no": r.mtime_no,
            "mtime_halt": r.mtime_halt,
            "steps": r.steps,
            "exhausted": r.exhausted,
            "branching": m.branching(),
            "frontier_sizes": r.frontier_sizes,
        }),
    )?;
    Ok(if r.accepts {
        0
    } else if r.exhausted {
        3
    } else {
        1
    })
}

/// Seed precedence: flag, then the experiment file, then the environment.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<(u64, &'static str), Failure> {
    if let Some(s) = flag {
        return Ok((s, "flag"));
    }
    if let Some(s) = file {
        return Ok((s, "file"));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(|s| (s, "env")).map_err(|_| {
            Failure::usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))
        }),
        Err(_) => Ok((0, "default")),
    }
}

fn dyadic_value(d: &Dyadic, exact: bool) -> Value {
    if exact {
        Value::String(d.to_string())
    } else {
        json!(d.to_f64())
    }
}

fn qsim_error(e: QsimError) -> Failure {
    Failure::data(e)
}

fn run_qsim_at(
    out: &mut Out,
    exp: &Experiment,
    omega: u64,
    samples: u64,
    coin: &mut CoinSource,
    exact: bool,
) -> Result<(), Failure> {
    let setup = exp.setup_at(omega).map_err(qsim_error)?;
    let n = setup.dim();
    let evo = evolve(&setup);
    if !exp.measure {
        let amps: Vec<Value> = evo
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| {
                json!({"label": outcome_label(k, n), "re": dyadic_value(&a.re, exact),
                       "im": dyadic_value(&a.im, exact)})
            })
            .collect();
        return emit(
            out,
            json!({"record": "amplitudes", "omega": omega, "bit_ops": evo.bit_ops, "flips": 0,
                   "amplitudes": amps}),
        );
    }
    let dist = measurement_probabilities(&evo.amplitudes, setup.omega_bar());
    let bound = fidelity_bound(&dist, n, omega);
    let before = coin.consumed();
    let hist = sample_histogram(&dist, samples, coin).map_err(qsim_error)?;
    let outcomes: Vec<Value> = dist
        .weights
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let count = hist.counts[k];
            json!({
                "label": outcome_label(k, n),
                "weight": m,
                "probability": m as f64 / dist.total as f64,
                "count": count,
                "frequency": if samples == 0 { 0.0 } else { count as f64 / samples as f64 },
            })
        })
        .collect();
    emit(
        out,
        json!({
            "record": "histogram",
            "omega": omega,
            "omega_bar": setup.omega_bar(),
            "total": dist.total,
            "total_within_2_omega": dist.total <= 2 * omega,
            "epsilon": dist.epsilon().to_f64(),
            "bound": bound.to_f64(),
            "bound_limit": Dyadic::pow2_neg(setup.omega_bar().saturating_sub(3)).to_f64(),
            "samples": samples,
            "flips": hist.flips,
            "coin_bits_consumed": coin.consumed() - before,
            "bit_ops": evo.bit_ops,
            "outcomes": outcomes,
        }),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_qsim(
    out: &mut Out,
    path: &Path,
    samples: Option<u64>,
    seed: Option<u64>,
    omega: Option<u64>,
    sweep: &[u64],
    generator: &str,
    exact: bool,
) -> Result<u8, Failure> {
    let text = read_file(path)?;
    let exp =
        parse_experiment(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let (seed, seed_source) = resolve_seed(seed, exp.seed)?;
    let samples = samples.unwrap_or(exp.samples);
    let mut coin =
        CoinSource::with_generator(generator, seed).map_err(|e| Failure::usage(e.to_string()))?;
    let omegas: Vec<u64> = if sweep.is_empty() {
        vec![omega.unwrap_or(exp.omega)]
    } else {
        sweep.to_vec()
    };
    emit(
        out,
        json!({
            "record": "experiment",
            "file": path.display().to_string(),
            "name": exp.name,
            "dimension": exp.dimension,
            "measure": exp.measure,
            "omegas": omegas,
            "samples": samples,
            "seed": seed,
            "seed_source": seed_source,
            "generator": coin.generator(),
        }),
    )?;
    for w in omegas {
        run_qsim_at(out, &exp, w, samples, &mut coin, exact)?;
    }
    Ok(0)
}

fn cmd_approx(out: &mut Out, spec: &str, n: Option<u64>) -> Result<u8, Failure> {
    let (expr, n) = match (spec.rsplit_once('@'), n) {
        (Some((e, p)), None) => (
            e,
            p.trim()
                .parse()
                .map_err(|_| Failure::usage(format!("bad precision `{p}`")))?,
        ),
        (None, Some(n)) => (spec, n),
        (Some(_), Some(_)) => {
            return Err(Failure::usage(
                "give the precision either as `x@n` or with --n",
            ))
        }
        (None, None) => return Err(Failure::usage("missing precision: use `x@n` or --n")),
    };
    let x: RealExpr = expr.parse().map_err(Failure::data)?;
    let d = x.approx(n);
    // exactly representable inputs come back unchanged
    let exact = match &x {
        RealExpr::Rational(_) => x.as_dyadic().is_some_and(|v| v == d),
        RealExpr::Sqrt { negative, radicand } => {
            let sq = (&d * &d).to_rational();
            &sq == radicand && d.is_negative() == *negative
        }
    };
    let bound = if exact {
        "0".to_string()
    } else {
        match x {
            RealExpr::Rational(_) => format!("2^-{}", n + 1),
            RealExpr::Sqrt { .. } => format!("2^-{n}"),
        }
    };
    emit(
        out,
        json!({
            "record": "approx",
            "x": x.label(),
            "n": n,
            "value": d.to_string(),
            "mantissa": d.mantissa().to_string(),
            "exponent": d.exponent(),
            "decimal": d.to_decimal_string(),
            "binary": d.to_binary_string(),
            "error_bound": bound,
        }),
    )?;
    Ok(0)
}

fn cmd_encode(out: &mut Out, path: &Path, input: &str) -> Result<u8, Failure> {
    let m = load_machine(path)?;
    let x = m.parse_word(input).map_err(Failure::data)?;
    let pair = encode_pair(&m, &x).map_err(Failure::data)?;
    emit(
        out,
        json!({"record": "encoding", "machine": m.name(), "input": input, "pair": pair.as_str()}),
    )?;
    Ok(0)
}

fn cmd_engines(out: &mut Out) -> Result<u8, Failure> {
    let registry = EngineRegistry::default();
    for name in registry.names() {
        let e = registry.get(name).expect("listed");
        emit(
            out,
            json!({"record": "engine", "name": name, "description": e.description()}),
        )?;
    }
    Ok(0)
}

fn dispatch(cli: Cli, out: &mut Out) -> Result<u8, Failure> {
    match cli.command {
        Command::Run {
            machine,
            input,
            budget,
            trace,
            engine,
        } => cmd_run(out, &machine, &input, budget, trace, &engine),
        Command::HaltProbe {
            machine,
            input,
            clocks,
            engine,
        } => cmd_halt_probe(out, &machine, &input, &clocks, &engine),
        Command::NdRun {
            machine,
            input,
            budget,
            trace,
            parallel,
        } => cmd_nd_run(out, &machine, &input, budget, trace, parallel),
        Command::Qsim {
            experiment,
            samples,
            seed,
            omega,
            sweep,
            generator,
            exact,
        } => cmd_qsim(
            out,
            &experiment,
            samples,
            seed,
            omega,
            &sweep,
            &generator,
            exact,
        ),
        Command::Approx { spec, n } => cmd_approx(out, &spec, n),
        Command::Encode { machine, input } => cmd_encode(out, &machine, &input),
        Command::Engines => cmd_engines(out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = dispatch(cli, &mut out);
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(code), Ok(())) => ExitCode::from(code),
        (Err(f), _) => {
            eprintln!("tapelab: error: {}", f.message);
            ExitCode::from(f.code)
        }
        (Ok(_), Err(e)) => {
            eprintln!("tapelab: error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}
