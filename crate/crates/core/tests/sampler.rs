use tapelab::coin::{sample_weighted, uniform_below, Coin, CoinSource};

struct Scripted<'a> {
    bits: &'a [bool],
    pos: usize,
    overran: bool,
}

impl Coin for Scripted<'_> {
    fn flip(&mut self) -> bool {
        match self.bits.get(self.pos) {
            Some(b) => {
                self.pos += 1;
                *b
            }
            None => {
                self.overran = true;
                false
            }
        }
    }
}

/// Outcome masses over every coin sequence of length <= depth, as numerators
/// over 2^depth; paths still undecided at depth are dropped.
fn coin_tree(depth: usize, outcomes: usize, run: &dyn Fn(&mut Scripted) -> usize) -> Vec<u64> {
    let mut mass = vec![0u64; outcomes];
    let mut stack = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let mut coin = Scripted {
            bits: &prefix,
            pos: 0,
            overran: false,
        };
        let k = run(&mut coin);
        if !coin.overran {
            assert_eq!(coin.pos, prefix.len());
            mass[k] += 1 << (depth - prefix.len());
        } else if prefix.len() < depth {
            for b in [false, true] {
                let mut p = prefix.clone();
                p.push(b);
                stack.push(p);
            }
        }
    }
    mass
}

fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

#[test]
fn exact_to_depth_20() {
    const DEPTH: usize = 20;
    for t in 1..=16u64 {
        let mass = coin_tree(DEPTH, t as usize, &|c| {
            uniform_below(c, t).unwrap() as usize
        });
        for m in &mass {
            assert!((t * m).abs_diff(1 << DEPTH) <= t, "T={t}");
        }
        for parts in 1..=4 {
            for w in compositions(t, parts) {
                let mass = coin_tree(DEPTH, parts, &|c| sample_weighted(c, &w).unwrap());
                for (k, m) in mass.iter().enumerate() {
                    assert!((t * m).abs_diff(w[k] << DEPTH) <= t, "weights {w:?}");
                }
            }
        }
    }
}

#[test]
fn reproducible_outcomes() {
    let draw = |seed| {
        let mut c = CoinSource::new(seed);
        (0..1000)
            .map(|_| sample_weighted(&mut c, &[3, 1, 4, 1, 5]).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(99), draw(99));
    assert_ne!(draw(99), draw(100));
}

#[test]
fn entropy_accounting() {
    let mut c = CoinSource::new(5);
    for t in 1..=40u64 {
        let before = c.consumed();
        for _ in 0..100_000 {
            uniform_below(&mut c, t).unwrap();
        }
        let avg = (c.consumed() - before) as f64 / 1e5;
        let log = (t as f64).log2().ceil();
        assert!(avg <= log + 2.0, "T={t}: {avg}");
    }
}
