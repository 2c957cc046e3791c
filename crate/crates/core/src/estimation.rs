//! Sample-size arithmetic for telling two applicant pools apart.
//!
//! A firm draws k hire/reject samples from each pool (success rates p1 and
//! p2) and concludes correctly when the pool-2 count strictly exceeds the
//! pool-1 count. Everything here is exact binomial arithmetic; there is no
//! simulation.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::numfmt::sig12;
use crate::{Error, Result};

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie strictly inside (0,1), got {p}"
        )));
    }
    Ok(())
}

fn binom_ln_pmf(k: u32, j: u32, p: f64) -> f64 {
    let (kf, jf) = (k as f64, j as f64);
    ln_gamma(kf + 1.0) - ln_gamma(jf + 1.0) - ln_gamma(kf - jf + 1.0)
        + jf * p.ln()
        + (kf - jf) * (1.0 - p).ln()
}

/// Exact Pr(X1 < X2) for X1 ~ Binom(k, p1), X2 ~ Binom(k, p2), by
/// Σ_j Pr(X2 = j) · Pr(X1 <= j-1) with log-space pmf terms and a running
/// cdf. Ties count as failure.
pub fn prob_correct(k: u32, p1: f64, p2: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidArgument("need k >= 1 samples".into()));
    }
    check_prob("p1", p1)?;
    check_prob("p2", p2)?;
    let mut cdf1 = 0.0; // Pr(X1 <= j-1), updated after use
    let mut acc = 0.0;
    for j in 0..=k {
        acc += binom_ln_pmf(k, j, p2).exp() * cdf1;
        cdf1 += binom_ln_pmf(k, j, p1).exp();
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// The smallest k with prob_correct(k, p1, p2) >= q, scanning k = 1, 2, …
/// (the literal smallest; no monotonicity in k is assumed).
pub fn min_samples(p1: f64, p2: f64, q: f64, k_max: u32) -> Result<u32> {
    check_prob("p1", p1)?;
    check_prob("p2", p2)?;
    check_prob("q", q)?;
    if p1 >= p2 {
        return Err(Error::InvalidArgument(format!(
            "need p1 < p2, got p1 = {p1}, p2 = {p2}"
        )));
    }
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let mut best_k = 1;
    let mut best_prob = f64::NEG_INFINITY;
    for k in 1..=k_max {
        let prob = prob_correct(k, p1, p2)?;
        if prob >= q {
            return Ok(k);
        }
        if prob > best_prob {
            best_prob = prob;
            best_k = k;
        }
    }
    Err(Error::SearchExhausted {
        k_max,
        best_k,
        best_prob,
    })
}

/// A resolved pool-comparison query.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoolComparison {
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub k_star: u32,
}

impl PoolComparison {
    pub fn solve(p1: f64, p2: f64, q: f64, k_max: u32) -> Result<Self> {
        Ok(PoolComparison {
            p1,
            p2,
            q,
            k_star: min_samples(p1, p2, q, k_max)?,
        })
    }
}

/// One sweep cell; `k` is None when no k <= k_max sufficed (or p2 <= p1).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleRow {
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub k: Option<u32>,
}

/// Tabulates min_samples over a p2 grid (start, stop, step) crossed with
/// `q_list`. Rows are grouped by p2 with q in the given order; unresolved
/// cells are kept as rows with an empty k.
pub fn sweep_sample_complexity(
    p1: f64,
    p2_range: (f64, f64, f64),
    q_list: &[f64],
    k_max: u32,
) -> Result<Vec<SampleRow>> {
    check_prob("p1", p1)?;
    for &q in q_list {
        check_prob("q", q)?;
    }
    let (start, stop, step) = p2_range;
    if !(step > 0.0 && step.is_finite()) || start > stop {
        return Err(Error::InvalidArgument(format!(
            "bad p2 range: start {start}, stop {stop}, step {step}"
        )));
    }
    // Integer stepping avoids drift; the epsilon absorbs representation
    // error in (stop-start)/step when the range is an exact multiple.
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    let mut rows = Vec::with_capacity(count * q_list.len());
    for i in 0..count {
        let p2 = start + i as f64 * step;
        check_prob("p2", p2)?;
        let mut ks: Vec<Option<u32>> = vec![None; q_list.len()];
        if p2 > p1 {
            let mut unresolved = q_list.len();
            'scan: for k in 1..=k_max {
                let prob = prob_correct(k, p1, p2)?;
                for (qi, &q) in q_list.iter().enumerate() {
                    if ks[qi].is_none() && prob >= q {
                        ks[qi] = Some(k);
                        unresolved -= 1;
                        if unresolved == 0 {
                            break 'scan;
                        }
                    }
                }
            }
        }
        for (qi, &q) in q_list.iter().enumerate() {
            rows.push(SampleRow {
                p1,
                p2,
                q,
                k: ks[qi],
            });
        }
    }
    Ok(rows)
}

/// CSV export with header `p1,p2,q,k`; unresolved rows leave k empty.
pub fn rows_to_csv(rows: &[SampleRow]) -> String {
    let mut out = String::from("p1,p2,q,k\n");
    for r in rows {
        let k = r.k.map(|k| k.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", sig12(r.p1), sig12(r.p2), sig12(r.q), k));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_outcome_enumeration() {
        // Pr(X1 = 0) · Pr(X2 = 1) at k = 1.
        assert!((prob_correct(1, 0.1, 0.9).unwrap() - 0.81).abs() < 1e-14);
    }

    #[test]
    fn equal_pools_stay_below_half() {
        for k in [1u32, 2, 5, 17, 50] {
            assert!(prob_correct(k, 0.3, 0.3).unwrap() < 0.5);
        }
    }

    #[test]
    fn threshold_crossing_at_eighty() {
        assert!(prob_correct(80, 0.1, 0.15).unwrap() >= 0.8);
        assert!(prob_correct(79, 0.1, 0.15).unwrap() < 0.8);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(prob_correct(0, 0.1, 0.2).is_err());
        assert!(prob_correct(5, 0.0, 0.2).is_err());
        assert!(prob_correct(5, 0.1, 1.0).is_err());
        assert!(min_samples(0.3, 0.2, 0.8, 100).is_err());
        assert!(min_samples(0.3, 0.3, 0.8, 100).is_err());
    }

    #[test]
    fn min_samples_known_values() {
        assert_eq!(min_samples(0.1, 0.15, 0.8, 10_000).unwrap(), 80);
        assert_eq!(min_samples(0.1, 0.15, 0.9, 10_000).unwrap(), 162);
        assert_eq!(min_samples(0.1, 0.15, 0.95, 10_000).unwrap(), 254);
        assert_eq!(min_samples(0.5, 0.7, 0.9, 10_000).unwrap(), 24);
        assert_eq!(min_samples(0.1, 0.9, 0.5, 10_000).unwrap(), 1);
    }

    #[test]
    fn search_exhaustion_reports_best() {
        match min_samples(0.5, 0.5001, 0.99, 40) {
            Err(Error::SearchExhausted {
                k_max, best_prob, ..
            }) => {
                assert_eq!(k_max, 40);
                assert!(best_prob > 0.0 && best_prob < 0.99);
            }
            other => panic!("expected SearchExhausted, got {other:?}"),
        }
    }

    // Independent pmf route: multiplicative recurrence, no gamma calls.
    fn pmf_by_recurrence(k: u32, p: f64) -> Vec<f64> {
        let mut pmf = vec![0.0; k as usize + 1];
        pmf[0] = (1.0 - p).powi(k as i32);
        for j in 0..k as usize {
            pmf[j + 1] = pmf[j] * (k as f64 - j as f64) / (j as f64 + 1.0) * p / (1.0 - p);
        }
        pmf
    }

    #[test]
    fn outcomes_partition_to_one() {
        for k in [1u32, 5, 20, 100] {
            for (p1, p2) in [(0.1, 0.15), (0.5, 0.7), (0.2, 0.9), (0.4, 0.4)] {
                let win = prob_correct(k, p1, p2).unwrap();
                let lose = prob_correct(k, p2, p1).unwrap();
                let a = pmf_by_recurrence(k, p1);
                let b = pmf_by_recurrence(k, p2);
                let tie: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
                assert!(
                    (win + lose + tie - 1.0).abs() < 1e-12,
                    "k={k} p1={p1} p2={p2}: {} + {} + {}",
                    win,
                    lose,
                    tie
                );
            }
        }
    }

    #[test]
    fn prob_increases_with_p2() {
        for k in [5u32, 30, 120] {
            let mut prev = 0.0;
            for i in 1..10 {
                let p2 = 0.1 + 0.08 * i as f64;
                let v = prob_correct(k, 0.1, p2).unwrap();
                // strict gain until the probability saturates at 1 in f64;
                // past that only roundoff-level wobble is tolerated
                if prev <= 1.0 - 1e-9 {
                    assert!(v > prev);
                } else {
                    assert!(v >= prev - 1e-12);
                }
                prev = v;
            }
        }
    }

    #[test]
    fn sweep_shapes_and_values() {
        let rows =
            sweep_sample_complexity(0.1, (0.15, 0.4, 0.01), &[0.8, 0.9, 0.95], 10_000).unwrap();
        assert_eq!(rows.len(), 78);
        let hit = rows
            .iter()
            .find(|r| (r.p2 - 0.15).abs() < 1e-12 && (r.q - 0.95).abs() < 1e-12)
            .unwrap();
        assert_eq!(hit.k, Some(254));

        assert!(sweep_sample_complexity(0.1, (0.15, 0.4, 0.01), &[], 100)
            .unwrap()
            .is_empty());

        let mono = sweep_sample_complexity(0.5, (0.55, 0.8, 0.01), &[0.9], 10_000).unwrap();
        for w in mono.windows(2) {
            assert!(w[1].k.unwrap() <= w[0].k.unwrap());
        }
    }

    #[test]
    fn csv_format() {
        let rows = vec![
            SampleRow {
                p1: 0.1,
                p2: 0.15,
                q: 0.8,
                k: Some(80),
            },
            SampleRow {
                p1: 0.1,
                p2: 0.15,
                q: 0.999,
                k: None,
            },
        ];
        assert_eq!(rows_to_csv(&rows), "p1,p2,q,k\n0.1,0.15,0.8,80\n0.1,0.15,0.999,\n");
    }
}
