//! Finite-state quantum evolution at precision ω and measurement by fair
//! coin flips.
//!
//! The pipeline:
//!
//! 1. Approximate every entry of the unitary `U` and the input state `v` by
//!    an element of `D_ω` (real and imaginary parts separately).
//! 2. Compute `b_ω = U_ω v_ω` exactly. Dyadics are closed under `+` and `*`,
//!    so the only error in `b_ω` comes from step 1.
//! 3. Without measurement, `b_ω` is the result.
//! 4. With measurement, round each `|b_ω^k|^2` to precision `ω̄ = floor(log2 ω)`,
//!    giving `pr_k = m_k / 2^ω̄`. If some `pr_k >= 1` the outcome is `k` with no
//!    coin flips; otherwise sample `k` with probability exactly `m_k / T`,
//!    `T = Σ m_k`.
//!
//! Error bounds, with `n` the dimension:
//!
//! * each entry of `U_ω`, `v_ω` is within `(3/4)·2^-ω` of the truth per real
//!   part (nearest rounding plus two guard bits for square roots), so within
//!   `1.07·2^-ω` in modulus;
//! * `|b_ω^k - b^k| <= ε_amp = n·2^-(ω-2)`: sum over `n` terms of
//!   `|ΔU|·|v_ω| + |U|·|Δv|` with `|U|, |v| <= 1`;
//! * `||b_ω^k|^2 - |b^k|^2| <= (2 + ε_amp)·ε_amp <= 3·ε_amp` for `ε_amp <= 1`;
//! * `|pr_k - |b_ω^k|^2| <= 2^-(ω̄+1)`;
//! * with `Σ pr_k = 1 + ε`, `|m_k/T - pr_k| = pr_k·|ε|/(1+ε)`.
//!
//! The certified fidelity bound is the sum of the last three terms.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::coin::{sample_weighted, Coin, CoinError};
use crate::dyadic::{Approximable, ComplexDyadic, Dyadic, DyadicError, RealExpr};

/// Largest dimension accepted.
pub const MAX_DIMENSION: usize = 64;
/// Largest ω accepted; keeps mantissas within a few megabytes.
pub const MAX_OMEGA: u64 = 1 << 26;
/// Precision at which exact inputs are checked for unitarity and norm.
pub const CHECK_PRECISION: u64 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsimError {
    #[error("precision ω must satisfy 2 <= ω <= {max}, got {0}", max = MAX_OMEGA)]
    Omega(u64),
    #[error("dimension must be between 1 and {max}, got {0}", max = MAX_DIMENSION)]
    Dimension(usize),
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("input vector has {found} entries, matrix dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not unitary: |U*U - I| entry {defect:e} exceeds {tolerance:e}")]
    NotUnitary { defect: f64, tolerance: f64 },
    #[error("input state is not normalized: | |v|^2 - 1 | = {defect:e} exceeds {tolerance:e}")]
    NotNormalized { defect: f64, tolerance: f64 },
    #[error("every probability rounded to zero at precision ω̄ = {omega_bar}; raise ω")]
    ZeroTotal { omega_bar: u64 },
    #[error(transparent)]
    Coin(#[from] CoinError),
}

/// An exact complex entry `re + i·im`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexExpr {
    pub re: RealExpr,
    pub im: RealExpr,
}

impl ComplexExpr {
    pub fn real(re: RealExpr) -> ComplexExpr {
        ComplexExpr {
            re,
            im: RealExpr::Rational(BigRational::zero()),
        }
    }

    pub fn approx(&self, n: u64) -> ComplexDyadic {
        ComplexDyadic::new(self.re.approx(n), self.im.approx(n))
    }
}

impl FromStr for ComplexExpr {
    type Err = DyadicError;

    /// A real expression, or `(re,im)`.
    fn from_str(s: &str) -> Result<ComplexExpr, DyadicError> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            // Split at the comma that is not nested inside sqrt(...).
            let mut depth = 0i32;
            let mut split = None;
            for (i, c) in inner.char_indices() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    ',' if depth == 0 => split = Some(i),
                    _ => {}
                }
            }
            let i = split.ok_or_else(|| DyadicError::Parse(s.to_string()))?;
            return Ok(ComplexExpr {
                re: inner[..i].parse()?,
                im: inner[i + 1..].parse()?,
            });
        }
        Ok(ComplexExpr::real(t.parse()?))
    }
}

impl fmt::Display for ComplexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "({},{})", self.re, self.im)
        }
    }
}

/// `floor(log2 ω)`.
pub fn omega_bar(omega: u64) -> u64 {
    omega.ilog2() as u64
}

/// `ε_amp = n·2^-(ω-2)`.
pub fn amplitude_error_bound(dim: usize, omega: u64) -> Dyadic {
    Dyadic::new(dim as u64, omega.saturating_sub(2))
}

/// Precision-ω inputs of an experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantumSetup {
    dim: usize,
    /// Row-major `dim × dim`.
    unitary: Vec<ComplexDyadic>,
    input: Vec<ComplexDyadic>,
    omega: u64,
    omega_bar: u64,
}

fn gram_defect(m: &[ComplexDyadic], dim: usize) -> Dyadic {
    // max over (j, k) of |(M* M)_{jk} - δ_jk| in the max-of-parts norm
    let mut worst = Dyadic::zero();
    for j in 0..dim {
        for k in 0..dim {
            let mut acc = ComplexDyadic::zero();
            for i in 0..dim {
                let a = &m[i * dim + j];
                let b = &m[i * dim + k];
                if !a.is_zero() && !b.is_zero() {
                    acc = &acc + &(&a.conj() * b);
                }
            }
            if j == k {
                acc.re = &acc.re - &Dyadic::one();
            }
            worst = worst.max(acc.re.abs()).max(acc.im.abs());
        }
    }
    worst
}

impl QuantumSetup {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> u64 {
        self.omega
    }

    pub fn omega_bar(&self) -> u64 {
        self.omega_bar
    }

    pub fn unitary(&self) -> &[ComplexDyadic] {
        &self.unitary
    }

    pub fn entry(&self, row: usize, col: usize) -> &ComplexDyadic {
        &self.unitary[row * self.dim + col]
    }

    pub fn input(&self) -> &[ComplexDyadic] {
        &self.input
    }

    /// Largest `|(U_ω* U_ω - I)_{jk}|` part, computed exactly. Bounded by
    /// `n·2^-(ω-2)`; costs `n^3` products of ω-bit numbers.
    pub fn unitarity_defect(&self) -> Dyadic {
        gram_defect(&self.unitary, self.dim)
    }

    /// Largest deviation of a row or column squared norm from 1.
    pub fn row_column_defect(&self) -> Dyadic {
        let n = self.dim;
        let mut worst = Dyadic::zero();
        for i in 0..n {
            let mut row = Dyadic::zero();
            let mut col = Dyadic::zero();
            for j in 0..n {
                row = &row + &self.entry(i, j).norm_sqr();
                col = &col + &self.entry(j, i).norm_sqr();
            }
            worst = worst
                .max((&row - &Dyadic::one()).abs())
                .max((&col - &Dyadic::one()).abs());
        }
        worst
    }
}

/// Approximates `unitary` and `input` at precision `omega`.
///
/// The exact inputs are first checked at [`CHECK_PRECISION`]: the Gram matrix
/// of the approximated unitary must be within `n·2^-(p-2)` of the identity and
/// the squared norm of the approximated input within the same margin of 1.
pub fn make_setup(
    unitary: &[Vec<ComplexExpr>],
    input: &[ComplexExpr],
    omega: u64,
) -> Result<QuantumSetup, QsimError> {
    if !(2..=MAX_OMEGA).contains(&omega) {
        return Err(QsimError::Omega(omega));
    }
    let dim = unitary.len();
    if dim == 0 || dim > MAX_DIMENSION {
        return Err(QsimError::Dimension(dim));
    }
    for (row, r) in unitary.iter().enumerate() {
        if r.len() != dim {
            return Err(QsimError::NotSquare {
                row,
                len: r.len(),
                expected: dim,
            });
        }
    }
    if input.len() != dim {
        return Err(QsimError::DimensionMismatch {
            expected: dim,
            found: input.len(),
        });
    }

    let p = CHECK_PRECISION;
    let tolerance = amplitude_error_bound(dim, p);
    let coarse: Vec<ComplexDyadic> = unitary.iter().flatten().map(|e| e.approx(p)).collect();
    let defect = gram_defect(&coarse, dim);
    if defect > tolerance {
        return Err(QsimError::NotUnitary {
            defect: defect.to_f64(),
            tolerance: tolerance.to_f64(),
        });
    }
    let norm = input
        .iter()
        .map(|e| e.approx(p).norm_sqr())
        .fold(Dyadic::zero(), |a, b| &a + &b);
    let defect = (&norm - &Dyadic::one()).abs();
    if defect > tolerance {
        return Err(QsimError::NotNormalized {
            defect: defect.to_f64(),
            tolerance: tolerance.to_f64(),
        });
    }

    Ok(QuantumSetup {
        dim,
        unitary: unitary.iter().flatten().map(|e| e.approx(omega)).collect(),
        input: input.iter().map(|e| e.approx(omega)).collect(),
        omega,
        omega_bar: omega_bar(omega),
    })
}

/// Output of the evolution stage with its arithmetic cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evolution {
    pub amplitudes: Vec<ComplexDyadic>,
    /// Sum over real multiplications of the product of operand bit lengths,
    /// plus operand bit lengths for additions.
    pub bit_ops: u64,
}

fn mul_cost(a: &Dyadic, b: &Dyadic) -> u64 {
    if a.is_zero() || b.is_zero() {
        0
    } else {
        a.bits() * b.bits()
    }
}

/// `U_ω v_ω`, exactly.
pub fn evolve(setup: &QuantumSetup) -> Evolution {
    let n = setup.dim;
    let mut bit_ops = 0u64;
    let amplitudes = (0..n)
        .map(|k| {
            let mut acc = ComplexDyadic::zero();
            for j in 0..n {
                let u = setup.entry(k, j);
                let v = &setup.input[j];
                if u.is_zero() || v.is_zero() {
                    continue;
                }
                bit_ops += mul_cost(&u.re, &v.re)
                    + mul_cost(&u.im, &v.im)
                    + mul_cost(&u.re, &v.im)
                    + mul_cost(&u.im, &v.re);
                let term = u * v;
                bit_ops += acc.re.bits().max(term.re.bits()) + acc.im.bits().max(term.im.bits());
                acc = &acc + &term;
            }
            acc
        })
        .collect();
    Evolution {
        amplitudes,
        bit_ops,
    }
}

/// Rounded measurement probabilities `pr_k = m_k / 2^ω̄`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementDistribution {
    pub omega_bar: u64,
    pub weights: Vec<u64>,
    pub total: u64,
}

impl MeasurementDistribution {
    pub fn probability(&self, k: usize) -> Dyadic {
        Dyadic::new(self.weights[k], self.omega_bar)
    }

    /// `Σ pr_k - 1`.
    pub fn epsilon(&self) -> Dyadic {
        &Dyadic::new(self.total, self.omega_bar) - &Dyadic::one()
    }

    /// Index of the first `pr_k >= 1`, if any.
    pub fn certain_outcome(&self) -> Option<usize> {
        let one = 1u64 << self.omega_bar;
        self.weights.iter().position(|m| *m >= one)
    }

    /// `m_k / T` as an exact rational.
    pub fn sampling_probability(&self, k: usize) -> BigRational {
        BigRational::new(self.weights[k].into(), self.total.into())
    }
}

/// Rounds `|b_k|^2` to precision `omega_bar`, nearest with ties to even.
pub fn measurement_probabilities(
    amplitudes: &[ComplexDyadic],
    omega_bar: u64,
) -> MeasurementDistribution {
    let weights: Vec<u64> = amplitudes
        .iter()
        .map(|b| {
            let pr = b.norm_sqr().round_to_precision(omega_bar);
            let m = pr
                .scaled_mantissa(omega_bar)
                .expect("rounded into D_omega_bar");
            if m.is_negative() {
                0
            } else {
                m.to_u64().expect("|b|^2 is at most a few units")
            }
        })
        .collect();
    let total = weights.iter().sum();
    MeasurementDistribution {
        omega_bar,
        weights,
        total,
    }
}

/// One measurement: the outcome and how many coin flips it used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub outcome: usize,
    pub flips: u64,
}

struct Counting<'a, C: Coin + ?Sized> {
    inner: &'a mut C,
    flips: u64,
}

impl<C: Coin + ?Sized> Coin for Counting<'_, C> {
    fn flip(&mut self) -> bool {
        self.flips += 1;
        self.inner.flip()
    }
}

pub fn measure<C: Coin + ?Sized>(
    dist: &MeasurementDistribution,
    coin: &mut C,
) -> Result<Measurement, QsimError> {
    if let Some(k) = dist.certain_outcome() {
        return Ok(Measurement {
            outcome: k,
            flips: 0,
        });
    }
    if dist.total == 0 {
        return Err(QsimError::ZeroTotal {
            omega_bar: dist.omega_bar,
        });
    }
    let mut counting = Counting {
        inner: coin,
        flips: 0,
    };
    let outcome = sample_weighted(&mut counting, &dist.weights)?;
    Ok(Measurement {
        outcome,
        flips: counting.flips,
    })
}

/// Upper bound on `|m_k/T - |b^k|^2|` over all `k`, as a dyadic.
pub fn fidelity_bound(dist: &MeasurementDistribution, dim: usize, omega: u64) -> Dyadic {
    let wb = dist.omega_bar;
    let eps = dist.epsilon();
    let one_plus = &Dyadic::one() + &eps;
    // max_k pr_k · |ε| / (1 + ε), rounded up at precision 2ω̄ + 8
    let max_pr = dist
        .weights
        .iter()
        .max()
        .map(|m| Dyadic::new(*m, wb))
        .unwrap_or_else(Dyadic::zero);
    let num = (&max_pr * &eps.abs()).to_rational();
    let renorm = if one_plus.is_zero() || one_plus.is_negative() {
        Dyadic::one()
    } else {
        let q = num / one_plus.to_rational();
        let p = 2 * wb + 8;
        let scaled = q * BigRational::from_integer(BigInt::one() << p);
        Dyadic::new(scaled.numer().div_ceil(scaled.denom()), p)
    };
    let rounding = Dyadic::pow2_neg(wb + 1);
    let amp = amplitude_error_bound(dim, omega);
    let prob = if amp <= Dyadic::one() {
        &Dyadic::from_int(3) * &amp
    } else {
        &(&Dyadic::from_int(2) + &amp) * &amp
    };
    &(&renorm + &rounding) + &prob
}

/// What an experiment produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExperimentOutcome {
    Amplitudes(Vec<ComplexDyadic>),
    Measured {
        measurement: Measurement,
        distribution: MeasurementDistribution,
    },
}

/// Step and flip accounting of one experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentRun {
    pub outcome: ExperimentOutcome,
    pub bit_ops: u64,
    pub flips: u64,
}

/// Evolves and, if `measure` is set, measures once.
pub fn run_experiment<C: Coin + ?Sized>(
    setup: &QuantumSetup,
    measure_flag: bool,
    coin: &mut C,
) -> Result<ExperimentRun, QsimError> {
    let evo = evolve(setup);
    if !measure_flag {
        return Ok(ExperimentRun {
            outcome: ExperimentOutcome::Amplitudes(evo.amplitudes),
            bit_ops: evo.bit_ops,
            flips: 0,
        });
    }
    let distribution = measurement_probabilities(&evo.amplitudes, setup.omega_bar);
    let measurement = measure(&distribution, coin)?;
    Ok(ExperimentRun {
        bit_ops: evo.bit_ops,
        flips: measurement.flips,
        outcome: ExperimentOutcome::Measured {
            measurement,
            distribution,
        },
    })
}

/// Outcome counts of repeated measurement of one distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub flips: u64,
}

pub fn sample_histogram<C: Coin + ?Sized>(
    dist: &MeasurementDistribution,
    samples: u64,
    coin: &mut C,
) -> Result<Histogram, QsimError> {
    let mut counts = vec![0u64; dist.weights.len()];
    let mut flips = 0;
    for _ in 0..samples {
        let m = measure(dist, coin)?;
        counts[m.outcome] += 1;
        flips += m.flips;
    }
    Ok(Histogram { counts, flips })
}

/// Outcome label: a bit string (first party's bit first) when the dimension
/// is a power of two, otherwise the decimal index.
pub fn outcome_label(index: usize, dim: usize) -> String {
    if dim.is_power_of_two() && dim > 1 {
        let width = dim.trailing_zeros() as usize;
        format!("{index:0width$b}")
    } else {
        index.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ExperimentParseError {
    pub line: usize,
    pub message: String,
}

/// Contents of an experiment description file.
///
/// ```text
/// # Bell pair from |00>
/// dimension: 4
/// omega: 1048576
/// measure: true
/// seed: 7
/// samples: 100000
/// row: sqrt(1/2) 0 sqrt(1/2) 0
/// row: 0 sqrt(1/2) 0 sqrt(1/2)
/// row: 0 sqrt(1/2) 0 -sqrt(1/2)
/// row: sqrt(1/2) 0 -sqrt(1/2) 0
/// input: 1 0 0 0
/// ```
///
/// Entries are `p`, `p/q`, `±sqrt(p/q)`, or `(re,im)` with no spaces inside
/// an entry. `seed` and `samples` are optional.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Experiment {
    pub name: Option<String>,
    pub dimension: usize,
    pub unitary: Vec<Vec<ComplexExpr>>,
    pub input: Vec<ComplexExpr>,
    pub omega: u64,
    pub measure: bool,
    pub seed: Option<u64>,
    pub samples: u64,
}

impl Experiment {
    pub fn setup(&self) -> Result<QuantumSetup, QsimError> {
        self.setup_at(self.omega)
    }

    pub fn setup_at(&self, omega: u64) -> Result<QuantumSetup, QsimError> {
        make_setup(&self.unitary, &self.input, omega)
    }
}

fn entries(value: &str, line: usize) -> Result<Vec<ComplexExpr>, ExperimentParseError> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse().map_err(|e: DyadicError| ExperimentParseError {
                line,
                message: format!("entry `{tok}`: {e}"),
            })
        })
        .collect()
}

pub fn parse_experiment(text: &str) -> Result<Experiment, ExperimentParseError> {
    let mut name = None;
    let mut dimension = None;
    let mut omega = None;
    let mut measure = true;
    let mut seed = None;
    let mut samples = 1;
    let mut unitary = Vec::new();
    let mut input = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| ExperimentParseError { line, message };
        let (key, value) = body
            .split_once(':')
            .ok_or_else(|| err(format!("expected `key: value`, got `{body}`")))?;
        let value = value.trim();
        let int = |v: &str| -> Result<u64, ExperimentParseError> {
            v.parse()
                .map_err(|_| err(format!("`{}` expects an integer, got `{v}`", key.trim())))
        };
        match key.trim() {
            "name" => name = Some(value.to_string()),
            "dimension" => dimension = Some(int(value)? as usize),
            "omega" => omega = Some(int(value)?),
            "seed" => seed = Some(int(value)?),
            "samples" => samples = int(value)?,
            "measure" => {
                measure = match value {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => {
                        return Err(err(format!(
                            "`measure` expects true or false, got `{value}`"
                        )))
                    }
                }
            }
            "row" => unitary.push(entries(value, line)?),
            "input" => {
                if input.is_some() {
                    return Err(err("`input` given twice".into()));
                }
                input = Some(entries(value, line)?);
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    let missing = |what: &str| ExperimentParseError {
        line: 0,
        message: format!("missing `{what}`"),
    };
    let dimension = dimension.ok_or_else(|| missing("dimension"))?;
    let input = input.ok_or_else(|| missing("input"))?;
    let omega = omega.ok_or_else(|| missing("omega"))?;
    if unitary.len() != dimension || input.len() != dimension {
        return Err(ExperimentParseError {
            line: 0,
            message: format!(
                "dimension {dimension} but {} rows and {} input entries",
                unitary.len(),
                input.len()
            ),
        });
    }
    Ok(Experiment {
        name,
        dimension,
        unitary,
        input,
        omega,
        measure,
        seed,
        samples,
    })
}
