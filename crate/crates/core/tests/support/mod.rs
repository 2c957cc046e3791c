//! Shared helpers for the acceptance suite: a deterministic RNG, random
//! instance generators, brute-force oracles, and uniform reporting.

use hiregame::score_dist::ScoreDistribution;
use hiregame::{DecisionScheme, Instance};

/// Splitmix64 counter generator; deterministic across platforms.
pub struct TestRng {
    state: u64,
}

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

/// Cycles the three density families with randomized but valid parameters
/// (densities stay bounded away from zero).
pub fn random_dist(rng: &mut TestRng, family: usize) -> ScoreDistribution {
    match family % 3 {
        0 => ScoreDistribution::uniform(),
        1 => {
            let knee = rng.range(0.2, 0.8);
            let left = rng.range(0.3, 2.0);
            let right = rng.range(0.3, 2.0);
            ScoreDistribution::piecewise_constant(&[0.0, knee, 1.0], &[left, right]).unwrap()
        }
        _ => {
            let lo = rng.range(0.3, 1.5);
            let hi = rng.range(0.3, 1.5);
            ScoreDistribution::piecewise_linear(&[0.0, 1.0], &[lo, hi]).unwrap()
        }
    }
}

pub fn random_instance(rng: &mut TestRng, i: usize, max_firms: u32, c_hi: f64) -> Instance {
    let scheme = if i % 2 == 0 {
        DecisionScheme::Correlated
    } else {
        DecisionScheme::Independent
    };
    let dist = random_dist(rng, i / 2);
    let n = 2 + (rng.below(max_firms as usize - 1) as u32);
    let c = rng.range(0.05, c_hi);
    Instance::new(n, c, dist, scheme).unwrap()
}

/// Shrinks the final piece so the union's mass does not exceed `cap`.
/// Works through the public mass() accessor only (bisection on the
/// endpoint), so it stays independent of the crate's internals.
pub fn trim_pairs_to_mass(
    pairs: &[(f64, f64)],
    cap: f64,
    dist: &ScoreDistribution,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut left = cap;
    for &(lo, hi) in pairs {
        let w = dist.mass(lo, hi).unwrap();
        if w <= left {
            out.push((lo, hi));
            left -= w;
            continue;
        }
        if left > 1e-12 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..64 {
                let mid = 0.5 * (a + b);
                if dist.mass(lo, mid).unwrap() > left {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            if a > lo {
                out.push((lo, a));
            }
        }
        break;
    }
    out
}

/// Binomial pmf row for Bin(k, p), built by the multiplicative recurrence.
fn binomial_pmf(k: u32, p: f64) -> Vec<f64> {
    let k = k as usize;
    let mut pmf = vec![0.0; k + 1];
    pmf[0] = (1.0 - p).powi(k as i32);
    let ratio = p / (1.0 - p);
    for i in 0..k {
        pmf[i + 1] = pmf[i] * ((k - i) as f64 / (i + 1) as f64) * ratio;
    }
    pmf
}

/// Direct joint-pmf enumeration of P(pool-2 count strictly exceeds pool-1
/// count): the full (k+1)^2 outcome sum, ties counting as failure. Quadratic
/// in k; the second, independent route for the comparison rule.
pub fn enumerate_prob_correct(k: u32, p1: f64, p2: f64) -> f64 {
    let a_pmf = binomial_pmf(k, p1);
    let b_pmf = binomial_pmf(k, p2);
    let mut total = 0.0;
    for (a, &pa) in a_pmf.iter().enumerate() {
        for (b, &pb) in b_pmf.iter().enumerate() {
            if b > a {
                total += pa * pb;
            }
        }
    }
    total
}

/// Smallest k <= cap whose enumerated decision probability reaches q.
pub fn enumerate_min_samples(p1: f64, p2: f64, q: f64, cap: u32) -> Option<u32> {
    (1..=cap).find(|&k| enumerate_prob_correct(k, p1, p2) >= q)
}

/// Collects sub-check failures for one acceptance criterion and prints the
/// single PASS/FAIL verdict line.
pub struct Checks {
    failures: Vec<String>,
}

impl Checks {
    pub fn new() -> Self {
        Checks {
            failures: Vec::new(),
        }
    }

    pub fn require(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.failures.push(msg.into());
        }
    }

    pub fn done(self, name: &str) {
        if self.failures.is_empty() {
            println!("[PASS] {name}");
        } else {
            println!("[FAIL] {name}");
            panic!("{name}: {}", self.failures.join(" | "));
        }
    }
}
