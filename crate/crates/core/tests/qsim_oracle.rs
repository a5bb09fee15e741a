use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use tapelab::coin::CoinSource;
use tapelab::dyadic::{ComplexDyadic, Dyadic, RealExpr};
use tapelab::qsim::*;

fn rat(d: &Dyadic) -> BigRational {
    BigRational::new(d.mantissa().clone(), BigInt::one() << d.exponent())
}

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn pow2(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::one() << n)
}

fn c(s: &str) -> ComplexExpr {
    s.parse().unwrap()
}

fn real(x: BigRational) -> ComplexExpr {
    ComplexExpr::real(RealExpr::Rational(x))
}

/// `|a - sign*sqrt(x)| <= tol`, decided exactly.
fn near_sqrt(a: &BigRational, x: &BigRational, negative: bool, tol: &BigRational) -> bool {
    let a = if negative { -a } else { a.clone() };
    let lo = &a - tol;
    let hi = &a + tol;
    !hi.is_negative() && (lo.is_negative() || &lo * &lo <= *x) && *x <= &hi * &hi
}

fn hadamard() -> Vec<Vec<ComplexExpr>> {
    vec![
        vec![c("sqrt(1/2)"), c("sqrt(1/2)")],
        vec![c("sqrt(1/2)"), c("-sqrt(1/2)")],
    ]
}

fn matmul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(BigRational::zero(), |s, k| s + &a[i][k] * &b[k][j]))
                .collect()
        })
        .collect()
}

const TRIPLES: [(i64, i64, i64); 4] = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25)];

/// Rational rotation in plane (i, j) of R^3.
fn rotation(i: usize, j: usize, t: usize, flip: bool) -> Vec<Vec<BigRational>> {
    let (a, b, h) = TRIPLES[t];
    let mut m: Vec<Vec<BigRational>> = (0..3)
        .map(|x| {
            (0..3)
                .map(|y| {
                    if x == y {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    let s = if flip { r(-b, h) } else { r(b, h) };
    m[i][i] = r(a, h);
    m[j][j] = r(a, h);
    m[i][j] = -s.clone();
    m[j][i] = s;
    m
}

fn rational_unitary() -> impl Strategy<Value = Vec<Vec<BigRational>>> {
    (0..4usize, 0..4usize, any::<bool>(), any::<bool>())
        .prop_map(|(t1, t2, f1, f2)| matmul(&rotation(0, 1, t1, f1), &rotation(1, 2, t2, f2)))
}

fn unit_vector() -> impl Strategy<Value = Vec<BigRational>> {
    (0..4usize, 0..3usize).prop_map(|(t, axis)| {
        let (a, b, h) = TRIPLES[t];
        let mut v = vec![BigRational::zero(); 3];
        v[axis] = r(a, h);
        v[(axis + 1) % 3] = r(b, h);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_exact_and_close(u in rational_unitary(), v in unit_vector(), omega in 4u64..300) {
        let ue: Vec<Vec<ComplexExpr>> = u.iter().map(|row| row.iter().cloned().map(real).collect()).collect();
        let ve: Vec<ComplexExpr> = v.iter().cloned().map(real).collect();
        let s = make_setup(&ue, &ve, omega).unwrap();
        let b = evolve(&s).amplitudes;
        let eps_amp = rat(&amplitude_error_bound(3, omega));
        for k in 0..3 {
            // exact product of the approximated inputs
            let mut re = BigRational::zero();
            for j in 0..3 {
                re += rat(&s.entry(k, j).re) * rat(&s.input()[j].re);
            }
            prop_assert_eq!(rat(&b[k].re), re);
            prop_assert!(b[k].im.is_zero());
            // close to the exact product of the exact inputs
            let exact = (0..3).fold(BigRational::zero(), |a, j| a + &u[k][j] * &v[j]);
            prop_assert!((rat(&b[k].re) - &exact).abs() <= eps_amp);
        }
        prop_assert!(s.row_column_defect() <= amplitude_error_bound(3, omega));
        prop_assert!(s.unitarity_defect() <= amplitude_error_bound(3, omega));

        let dist = measurement_probabilities(&b, s.omega_bar());
        prop_assert!(dist.total <= 2 << s.omega_bar());
        prop_assert!(dist.total <= 2 * omega);
        let bound = rat(&fidelity_bound(&dist, 3, omega));
        for (k, row) in u.iter().enumerate() {
            let exact = (0..3).fold(BigRational::zero(), |a, j| a + &row[j] * &v[j]);
            let err = (dist.sampling_probability(k) - &exact * &exact).abs();
            prop_assert!(err <= bound, "k={} err={} bound={}", k, err, bound);
        }
    }
}

#[test]
fn hadamard_entries_near_root_half() {
    for omega in [16u64, 64, 1000] {
        let s = make_setup(&hadamard(), &[c("1"), c("0")], omega).unwrap();
        let tol = pow2(omega).recip();
        for (i, e) in s.unitary().iter().enumerate() {
            assert!(
                near_sqrt(&rat(&e.re), &r(1, 2), i == 3, &tol),
                "entry {i} at {omega}"
            );
        }
    }
    assert_eq!(omega_bar(1000), 9);
}

#[test]
fn hadamard_amplitudes_at_32() {
    let s = make_setup(&hadamard(), &[c("1"), c("0")], 32).unwrap();
    let b = evolve(&s).amplitudes;
    for a in &b {
        assert!(near_sqrt(&rat(&a.re), &r(1, 2), false, &pow2(28).recip()));
    }
}

#[test]
fn identity_on_basis_vector() {
    let id: Vec<Vec<ComplexExpr>> = (0..3)
        .map(|i| (0..3).map(|j| c(if i == j { "1" } else { "0" })).collect())
        .collect();
    let s = make_setup(&id, &[c("1"), c("0"), c("0")], 50).unwrap();
    let mut coin = CoinSource::new(0);
    let run = run_experiment(&s, false, &mut coin).unwrap();
    let one = ComplexDyadic::real(Dyadic::one());
    assert_eq!(
        run.outcome,
        ExperimentOutcome::Amplitudes(vec![one, ComplexDyadic::zero(), ComplexDyadic::zero()])
    );
    let dist = measurement_probabilities(&evolve(&s).amplitudes, s.omega_bar());
    assert_eq!(dist.weights, vec![1 << s.omega_bar(), 0, 0]);
    assert_eq!(dist.total, 1 << s.omega_bar());
}

#[test]
fn complex_entries_and_phases() {
    // (1/sqrt2) [[1, i], [i, 1]]
    let u = vec![
        vec![c("sqrt(1/2)"), c("(0,sqrt(1/2))")],
        vec![c("(0,sqrt(1/2))"), c("sqrt(1/2)")],
    ];
    let s = make_setup(&u, &[c("1"), c("0")], 64).unwrap();
    let b = evolve(&s).amplitudes;
    assert!(b[0].im.is_zero() && b[1].re.is_zero());
    let dist = measurement_probabilities(&b, s.omega_bar());
    assert_eq!(dist.weights, vec![32, 32]);
}

#[test]
fn random_unit_vector_probability_sum() {
    // a 4x4 signed permutation applied to (1/2)(1, -1, sqrt 2 i, 0) style vector
    let u: Vec<Vec<ComplexExpr>> = [[0, 1, 0, 0], [0, 0, -1, 0], [1, 0, 0, 0], [0, 0, 0, 1]]
        .iter()
        .map(|row| row.iter().map(|x| real(r(*x, 1))).collect())
        .collect();
    let v = vec![c("1/2"), c("(0,-1/2)"), c("sqrt(1/3)"), c("sqrt(1/6)")];
    let omega = 64;
    let s = make_setup(&u, &v, omega).unwrap();
    let dist = measurement_probabilities(&evolve(&s).amplitudes, s.omega_bar());
    assert_eq!(s.omega_bar(), 6);
    let eps = rat(&dist.epsilon()).abs();
    let limit = r(4, 1) * (pow2(7).recip() + rat(&amplitude_error_bound(4, omega)));
    assert!(eps <= limit);
}

#[test]
fn bound_shrinks_over_sweep() {
    let mut last: Option<Dyadic> = None;
    let mut worst_cost = 0f64;
    for omega in [1u64 << 8, 1 << 10, 1 << 12, 1 << 14, 1 << 16] {
        let s = make_setup(&hadamard(), &[c("1"), c("0")], omega).unwrap();
        let evo = evolve(&s);
        let dist = measurement_probabilities(&evo.amplitudes, s.omega_bar());
        assert!(dist.total <= 2 * omega);
        let bound = fidelity_bound(&dist, 2, omega);
        assert!(bound <= Dyadic::pow2_neg(s.omega_bar() - 3));
        for k in 0..2 {
            let err = (dist.sampling_probability(k) - r(1, 2)).abs();
            assert!(err <= rat(&bound));
        }
        if let Some(prev) = &last {
            assert!(bound <= *prev);
        }
        last = Some(bound);
        worst_cost = worst_cost.max(evo.bit_ops as f64 / ((omega * omega) as f64 * 8.0));
    }
    assert!(worst_cost <= 1.0, "bit-op constant {worst_cost}");
}

/// Chi-square critical values at alpha = 0.001 for 1..=5 degrees of freedom.
const CHI2_001: [f64; 5] = [10.828, 13.816, 16.266, 18.467, 20.515];

#[test]
fn sampling_passes_chi_square() {
    let s = make_setup(&hadamard(), &[c("1"), c("0")], 256).unwrap();
    let had = measurement_probabilities(&evolve(&s).amplitudes, s.omega_bar());
    let mut dists = vec![had];
    for w in [
        vec![1u64, 2, 1],
        vec![1, 1, 1],
        vec![5, 3, 0, 8],
        vec![1, 6, 2, 2, 9, 3],
    ] {
        let total = w.iter().sum();
        dists.push(MeasurementDistribution {
            omega_bar: 4,
            weights: w,
            total,
        });
    }
    for (i, d) in dists.iter().enumerate() {
        let mut coin = CoinSource::new(1000 + i as u64);
        let n = 100_000u64;
        let h = sample_histogram(d, n, &mut coin).unwrap();
        let mut chi2 = 0.0;
        let mut cells = 0;
        for (k, &m) in d.weights.iter().enumerate() {
            if m == 0 {
                assert_eq!(h.counts[k], 0);
                continue;
            }
            let expected = n as f64 * m as f64 / d.total as f64;
            chi2 += (h.counts[k] as f64 - expected).powi(2) / expected;
            cells += 1;
        }
        assert!(chi2 <= CHI2_001[cells - 2], "{:?}: chi2 {chi2}", d.weights);
    }
}

#[test]
fn bell_outcomes_only_00_and_11() {
    let u: Vec<Vec<ComplexExpr>> = [
        ["sqrt(1/2)", "0", "sqrt(1/2)", "0"],
        ["0", "sqrt(1/2)", "0", "sqrt(1/2)"],
        ["0", "sqrt(1/2)", "0", "-sqrt(1/2)"],
        ["sqrt(1/2)", "0", "-sqrt(1/2)", "0"],
    ]
    .iter()
    .map(|row| row.iter().map(|e| c(e)).collect())
    .collect();
    let v = vec![c("1"), c("0"), c("0"), c("0")];
    let s = make_setup(&u, &v, 4096).unwrap();
    let mut coin = CoinSource::new(3);
    for _ in 0..200 {
        match run_experiment(&s, true, &mut coin).unwrap().outcome {
            ExperimentOutcome::Measured { measurement, .. } => {
                assert!([0, 3].contains(&measurement.outcome));
            }
            _ => unreachable!(),
        }
    }
    let dist = measurement_probabilities(&evolve(&s).amplitudes, s.omega_bar());
    for k in [0, 3] {
        assert!((rat(&dist.probability(k)) - r(1, 2)).abs() <= pow2(s.omega_bar() - 1).recip());
    }
}
