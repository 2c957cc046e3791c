//! Firms, strategies, utility curves, welfare, and a hiring simulator.
//!
//! A strategy is a finite union of half-open score intervals [a, b); a
//! profile is one strategy per firm plus the derived multiplicity bands
//! (maximal intervals where the number of interviewing firms is constant).

use serde::Serialize;

use crate::score_dist::ScoreDistribution;
use crate::{Error, Result};

/// Adjacent intervals closer than this are merged during normalization.
pub(crate) const MERGE_TOL: f64 = 1e-12;

/// Slack allowed when checking a strategy's mass against the capacity.
pub(crate) const CAPACITY_SLACK: f64 = 1e-12;

/// Whether interview outcomes are shared across firms or drawn per firm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionScheme {
    Correlated,
    Independent,
}

impl DecisionScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionScheme::Correlated => "correlated",
            DecisionScheme::Independent => "independent",
        }
    }
}

impl std::str::FromStr for DecisionScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlated" => Ok(DecisionScheme::Correlated),
            "independent" => Ok(DecisionScheme::Independent),
            other => Err(Error::Validation(format!(
                "unknown scheme {other:?}; expected correlated or independent"
            ))),
        }
    }
}

/// Expected hire probability U_n(s) for one of `n` firms interviewing
/// score `s`: s/n when outcomes are correlated, (1-(1-s)^n)/n when
/// independent.
pub fn utility(n: u32, s: f64, scheme: DecisionScheme) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("utility needs n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "score must lie in [0,1], got {s}"
        )));
    }
    Ok(u_of(n, s, scheme))
}

pub(crate) fn u_of(n: u32, s: f64, scheme: DecisionScheme) -> f64 {
    debug_assert!(n >= 1);
    let nf = n as f64;
    match scheme {
        DecisionScheme::Correlated => s / nf,
        // (1-(1-s)^n)/n via expm1/ln_1p, stable for small s and large n.
        DecisionScheme::Independent => -(nf * (-s).ln_1p()).exp_m1() / nf,
    }
}

/// The unique s with utility(n, s) = t. Errors if t exceeds U_n(1) = 1/n
/// (beyond rounding slack); callers clip thresholds to 1 themselves.
pub fn inverse_utility(n: u32, t: f64, scheme: DecisionScheme) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("inverse_utility needs n >= 1".into()));
    }
    let cap = 1.0 / n as f64;
    if !(t >= 0.0 && t <= cap * (1.0 + 1e-9) + 1e-15) {
        return Err(Error::OutOfRange(format!(
            "utility level {t} outside [0, {cap}] for n = {n}"
        )));
    }
    Ok(inv_u(n, t, scheme))
}

pub(crate) fn inv_u(n: u32, t: f64, scheme: DecisionScheme) -> f64 {
    debug_assert!(n >= 1 && t >= 0.0);
    let nf = n as f64;
    let x = (nf * t).min(1.0);
    match scheme {
        DecisionScheme::Correlated => x,
        // 1-(1-nt)^{1/n}
        DecisionScheme::Independent => -((-x).ln_1p() / nf).exp_m1(),
    }
}

/// A half-open score interval [lo, hi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// Sorts, drops empty pieces, and merges intervals that overlap or touch
/// within MERGE_TOL. The result is sorted and pairwise disjoint.
pub(crate) fn normalize_intervals(mut raw: Vec<Interval>) -> Vec<Interval> {
    raw.retain(|iv| !iv.is_empty());
    raw.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(raw.len());
    for iv in raw {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi + MERGE_TOL => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// One firm's interview set: a finite union of disjoint half-open
/// intervals, with the distribution mass cached at construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strategy {
    intervals: Vec<Interval>,
    mass: f64,
}

impl Strategy {
    pub fn empty() -> Self {
        Strategy {
            intervals: Vec::new(),
            mass: 0.0,
        }
    }

    /// Builds from raw (lo, hi) pairs. Pieces may touch (they are merged)
    /// but genuine overlaps are rejected.
    pub fn new(pairs: &[(f64, f64)], dist: &ScoreDistribution) -> Result<Self> {
        let mut raw = Vec::with_capacity(pairs.len());
        for &(lo, hi) in pairs {
            if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi > 1.0 {
                return Err(Error::Validation(format!(
                    "interval [{lo}, {hi}) outside [0,1]"
                )));
            }
            if hi < lo {
                return Err(Error::Validation(format!(
                    "interval [{lo}, {hi}) has negative length"
                )));
            }
            raw.push(Interval { lo, hi });
        }
        raw.retain(|iv| !iv.is_empty());
        let mut sorted = raw.clone();
        sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in sorted.windows(2) {
            if w[1].lo < w[0].hi - MERGE_TOL {
                return Err(Error::Validation(format!(
                    "intervals [{}, {}) and [{}, {}) overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(Self::from_normalized(normalize_intervals(sorted), dist))
    }

    /// Wraps intervals already known to be sorted and disjoint.
    pub(crate) fn from_normalized(intervals: Vec<Interval>, dist: &ScoreDistribution) -> Self {
        let mass = intervals
            .iter()
            .map(|iv| dist.mass(iv.lo, iv.hi).expect("intervals validated"))
            .sum();
        Strategy { intervals, mass }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, s: f64) -> bool {
        let k = self.intervals.partition_point(|iv| iv.hi <= s);
        k < self.intervals.len() && self.intervals[k].lo <= s
    }

    /// The portion of this strategy inside [lo, hi).
    pub fn clipped_to(&self, lo: f64, hi: f64) -> Vec<Interval> {
        self.intervals
            .iter()
            .filter_map(|iv| {
                let a = iv.lo.max(lo);
                let b = iv.hi.min(hi);
                (a < b).then_some(Interval { lo: a, hi: b })
            })
            .collect()
    }
}

/// A maximal interval on which exactly `m` firms interview.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub m: u32,
}

/// One strategy per firm plus the derived multiplicity bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyProfile {
    strategies: Vec<Strategy>,
    bands: Vec<Band>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<Strategy>) -> Self {
        let bands = derive_bands(&strategies);
        StrategyProfile { strategies, bands }
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.strategies
    }

    pub fn n_firms(&self) -> usize {
        self.strategies.len()
    }

    /// Multiplicity bands partitioning [0, 1].
    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn m_max(&self) -> u32 {
        self.bands.iter().map(|b| b.m).max().unwrap_or(0)
    }

    pub fn multiplicity_at(&self, s: f64) -> u32 {
        self.strategies.iter().filter(|f| f.contains(s)).count() as u32
    }

    /// A copy with firm `i` replaced (the bands are re-derived).
    pub fn with_strategy(&self, i: usize, strategy: Strategy) -> Result<Self> {
        if i >= self.strategies.len() {
            return Err(Error::InvalidArgument(format!(
                "firm index {i} out of range for {} firms",
                self.strategies.len()
            )));
        }
        let mut strategies = self.strategies.clone();
        strategies[i] = strategy;
        Ok(StrategyProfile::new(strategies))
    }

    /// Capacity check used by verification and simulation entry points.
    pub(crate) fn check_capacity(&self, inst: &Instance) -> Result<()> {
        if self.strategies.len() != inst.n_firms as usize {
            return Err(Error::Validation(format!(
                "profile has {} firms, instance expects {}",
                self.strategies.len(),
                inst.n_firms
            )));
        }
        for (i, f) in self.strategies.iter().enumerate() {
            if f.mass() > inst.capacity + CAPACITY_SLACK {
                return Err(Error::Validation(format!(
                    "firm {i} interviews mass {} exceeding capacity {}",
                    f.mass(),
                    inst.capacity
                )));
            }
        }
        Ok(())
    }
}

fn derive_bands(strategies: &[Strategy]) -> Vec<Band> {
    let mut cuts = vec![0.0, 1.0];
    for f in strategies {
        for iv in f.intervals() {
            if iv.lo > 0.0 && iv.lo < 1.0 {
                cuts.push(iv.lo);
            }
            if iv.hi > 0.0 && iv.hi < 1.0 {
                cuts.push(iv.hi);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bands: Vec<Band> = Vec::new();
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let m = strategies.iter().filter(|f| f.contains(mid)).count() as u32;
        match bands.last_mut() {
            Some(last) if last.m == m => last.hi = w[1],
            _ => bands.push(Band {
                lo: w[0],
                hi: w[1],
                m,
            }),
        }
    }
    bands
}

/// A market: firm count, per-firm capacity, score distribution, scheme.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n_firms: u32,
    pub capacity: f64,
    pub dist: ScoreDistribution,
    pub scheme: DecisionScheme,
}

impl Instance {
    pub fn new(
        n_firms: u32,
        capacity: f64,
        dist: ScoreDistribution,
        scheme: DecisionScheme,
    ) -> Result<Self> {
        if n_firms < 1 {
            return Err(Error::Validation("need at least one firm".into()));
        }
        if !(capacity > 0.0 && capacity <= 1.0) {
            return Err(Error::Validation(format!(
                "capacity must lie in (0, 1], got {capacity}"
            )));
        }
        Ok(Instance {
            n_firms,
            capacity,
            dist,
            scheme,
        })
    }
}

/// Firm i's expected hire mass: the integral of U_{M(s)}(s) φ(s) over its
/// interview set, band by band.
pub fn firm_utility(profile: &StrategyProfile, i: usize, inst: &Instance) -> Result<f64> {
    if i >= profile.n_firms() {
        return Err(Error::InvalidArgument(format!(
            "firm index {i} out of range for {} firms",
            profile.n_firms()
        )));
    }
    let mut total = 0.0;
    for band in profile.bands() {
        if band.m == 0 {
            continue;
        }
        for piece in profile.strategies()[i].clipped_to(band.lo, band.hi) {
            total += band_utility_integral(band.m, piece.lo, piece.hi, inst)?;
        }
    }
    Ok(total)
}

/// Total expected hires: Σ over bands of m · ∫ U_m(s) φ(s) ds.
pub fn social_welfare(profile: &StrategyProfile, inst: &Instance) -> Result<f64> {
    let mut total = 0.0;
    for band in profile.bands() {
        if band.m == 0 {
            continue;
        }
        total += band.m as f64 * band_utility_integral(band.m, band.lo, band.hi, inst)?;
    }
    Ok(total)
}

/// ∫ U_m(s) φ(s) ds over [lo, hi). Correlated uses the exact first moment;
/// independent uses quadrature.
pub(crate) fn band_utility_integral(m: u32, lo: f64, hi: f64, inst: &Instance) -> Result<f64> {
    match inst.scheme {
        DecisionScheme::Correlated => Ok(inst.dist.first_moment(lo, hi)? / m as f64),
        DecisionScheme::Independent => inst
            .dist
            .integrate_weighted(|s| u_of(m, s, DecisionScheme::Independent), lo, hi),
    }
}

/// Every firm interviews the top-capacity mass [s_c, 1).
pub fn naive_profile(inst: &Instance) -> Result<StrategyProfile> {
    let s_c = inst.dist.top_mass_threshold(inst.capacity)?;
    let f = Strategy::new(&[(s_c, 1.0)], &inst.dist)?;
    Ok(StrategyProfile::new(vec![
        f;
        inst.n_firms as usize
    ]))
}

// ---------------------------------------------------------------------------
// Profile text format: one firm per line, `firm_id: a1-b1, a2-b2, ...`.

pub fn format_profile_text(profile: &StrategyProfile) -> String {
    use crate::numfmt::sig12;
    let mut out = String::new();
    for (i, f) in profile.strategies().iter().enumerate() {
        out.push_str(&format!("{i}:"));
        for (k, iv) in f.intervals().iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!(" {}-{}", sig12(iv.lo), sig12(iv.hi)));
        }
        out.push('\n');
    }
    out
}

pub fn parse_profile_text(text: &str, dist: &ScoreDistribution) -> Result<StrategyProfile> {
    let mut by_id: Vec<(usize, Strategy)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id_part, rest) = line.split_once(':').ok_or_else(|| {
            Error::Validation(format!("line {}: expected `firm_id: ...`", lineno + 1))
        })?;
        let id: usize = id_part.trim().parse().map_err(|_| {
            Error::Validation(format!("line {}: bad firm id {:?}", lineno + 1, id_part))
        })?;
        let mut pairs = Vec::new();
        for tok in rest.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let (a, b) = tok.split_once('-').ok_or_else(|| {
                Error::Validation(format!("line {}: expected `lo-hi`, got {tok:?}", lineno + 1))
            })?;
            let lo: f64 = a.trim().parse().map_err(|_| {
                Error::Validation(format!("line {}: bad number {:?}", lineno + 1, a))
            })?;
            let hi: f64 = b.trim().parse().map_err(|_| {
                Error::Validation(format!("line {}: bad number {:?}", lineno + 1, b))
            })?;
            pairs.push((lo, hi));
        }
        by_id.push((id, Strategy::new(&pairs, dist)?));
    }
    by_id.sort_by_key(|(id, _)| *id);
    for (k, (id, _)) in by_id.iter().enumerate() {
        if *id != k {
            return Err(Error::Validation(format!(
                "firm ids must be 0..{} with no gaps or repeats, found {id}",
                by_id.len() - 1
            )));
        }
    }
    Ok(StrategyProfile::new(
        by_id.into_iter().map(|(_, f)| f).collect(),
    ))
}

// ---------------------------------------------------------------------------
// Hiring simulator.

/// A Bernoulli-rate estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl RateEstimate {
    fn from_count(count: u64, n: u64) -> Self {
        let p = count as f64 / n as f64;
        RateEstimate {
            estimate: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    pub per_firm: Vec<RateEstimate>,
    pub welfare: RateEstimate,
    pub num_applicants: u64,
}

/// Counter-based generator: each applicant gets an independent stream keyed
/// by (seed, index), so results do not depend on iteration order.
struct DetRng {
    state: u64,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl DetRng {
    fn for_applicant(seed: u64, index: u64) -> Self {
        DetRng {
            state: mix64(seed ^ mix64(index ^ 0x9E37_79B9_7F4A_7C15)),
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        mix64(self.state)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next_below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

/// Simulates the interview/offer/acceptance process for `num_applicants`
/// independent applicants and returns mass-scaled hire-rate estimates.
///
/// Per applicant, in order: score draw (inverse CDF), pass draws (one shared
/// draw under the correlated scheme, one per interviewing firm in index
/// order under the independent scheme), then a uniform acceptance draw among
/// offering firms.
pub fn simulate_hiring(
    profile: &StrategyProfile,
    inst: &Instance,
    num_applicants: u64,
    seed: u64,
) -> Result<SimulationResult> {
    if num_applicants == 0 {
        return Err(Error::InvalidArgument(
            "need at least one applicant to simulate".into(),
        ));
    }
    profile.check_capacity(inst)?;
    let firms = profile.strategies();
    let mut hires = vec![0u64; firms.len()];
    let mut total_hired = 0u64;
    let mut offers: Vec<usize> = Vec::with_capacity(firms.len());
    for idx in 0..num_applicants {
        let mut rng = DetRng::for_applicant(seed, idx);
        let s = inst.dist.quantile(rng.next_f64());
        offers.clear();
        match inst.scheme {
            DecisionScheme::Correlated => {
                let interviewing: Vec<usize> = (0..firms.len())
                    .filter(|&i| firms[i].contains(s))
                    .collect();
                if !interviewing.is_empty() && rng.next_f64() < s {
                    offers.extend(interviewing);
                }
            }
            DecisionScheme::Independent => {
                for (i, f) in firms.iter().enumerate() {
                    if f.contains(s) && rng.next_f64() < s {
                        offers.push(i);
                    }
                }
            }
        }
        if !offers.is_empty() {
            hires[offers[rng.next_below(offers.len())]] += 1;
            total_hired += 1;
        }
    }
    Ok(SimulationResult {
        per_firm: hires
            .iter()
            .map(|&h| RateEstimate::from_count(h, num_applicants))
            .collect(),
        welfare: RateEstimate::from_count(total_hired, num_applicants),
        num_applicants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    // proptest's `Strategy` trait collides with our own type in this module.
    use proptest::strategy::Strategy as PropStrategy;

    fn uniform_inst(n: u32, c: f64, scheme: DecisionScheme) -> Instance {
        Instance::new(n, c, ScoreDistribution::uniform(), scheme).unwrap()
    }

    #[test]
    fn utility_values() {
        for scheme in [DecisionScheme::Correlated, DecisionScheme::Independent] {
            assert!((utility(1, 0.73, scheme).unwrap() - 0.73).abs() < 1e-15);
            assert_eq!(utility(4, 0.0, scheme).unwrap(), 0.0);
        }
        assert!((utility(2, 0.8, DecisionScheme::Correlated).unwrap() - 0.4).abs() < 1e-15);
        assert!((utility(2, 0.5, DecisionScheme::Independent).unwrap() - 0.375).abs() < 1e-15);
        assert!(utility(0, 0.5, DecisionScheme::Correlated).is_err());
        assert!(utility(2, 1.5, DecisionScheme::Correlated).is_err());
    }

    #[test]
    fn inverse_utility_values() {
        assert!((inverse_utility(3, 0.2, DecisionScheme::Correlated).unwrap() - 0.6).abs() < 1e-15);
        let s = inverse_utility(4, 0.2, DecisionScheme::Independent).unwrap();
        assert!((s - (1.0 - 0.2f64.powf(0.25))).abs() < 1e-12);
        let s2 = inverse_utility(2, 13.0 / 30.0, DecisionScheme::Correlated).unwrap();
        assert!((s2 - 13.0 / 15.0).abs() < 1e-15);
        assert!(inverse_utility(2, 0.6, DecisionScheme::Correlated).is_err());
    }

    #[test]
    fn utility_monotone_in_s_and_n() {
        for scheme in [DecisionScheme::Correlated, DecisionScheme::Independent] {
            for n in 1..=10u32 {
                for k in 1..99 {
                    let s0 = (k as f64) / 100.0;
                    let s1 = (k as f64 + 1.0) / 100.0;
                    let (u0, u1) = (u_of(n, s0, scheme), u_of(n, s1, scheme));
                    // strictness saturates once (1-s)^n drops below f64 resolution
                    if scheme == DecisionScheme::Correlated || (1.0 - s0).powi(n as i32) > 1e-15 {
                        assert!(u0 < u1);
                    } else {
                        assert!(u0 <= u1);
                    }
                    if n > 1 {
                        assert!(u_of(n, s0, scheme) < u_of(n - 1, s0, scheme));
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for n in 1..=10u32 {
            for k in 1..=99 {
                let s = k as f64 / 100.0;
                let corr = DecisionScheme::Correlated;
                assert!((inv_u(n, u_of(n, s, corr), corr) - s).abs() < 1e-12);

                let ind = DecisionScheme::Independent;
                let t = u_of(n, s, ind);
                // Utility-space round trip is well conditioned everywhere.
                assert!((u_of(n, inv_u(n, t, ind), ind) - t).abs() < 1e-12);
                // Score-space round trip only where the curve is not flat:
                // ds/dt blows up like (1-s)^{1-n} near s = 1.
                if n as f64 * (1.0 - s).powi(n as i32 - 1) >= 1e-3 {
                    assert!((inv_u(n, t, ind) - s).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn scaled_utility_identities() {
        for n in 1..=10u32 {
            for k in 0..=20 {
                let s = k as f64 / 20.0;
                let c = n as f64 * u_of(n, s, DecisionScheme::Correlated);
                assert!((c - s).abs() < 1e-15);
                let i = n as f64 * u_of(n, s, DecisionScheme::Independent);
                assert!((i - (1.0 - (1.0 - s).powi(n as i32))).abs() < 1e-12);
            }
        }
        // n·U_n under independence is increasing and concave in n.
        let s = 0.3;
        let g: Vec<f64> = (1..=8u32)
            .map(|n| n as f64 * u_of(n, s, DecisionScheme::Independent))
            .collect();
        for w in g.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in g.windows(3) {
            assert!(w[2] - w[1] < w[1] - w[0]);
        }
    }

    #[test]
    fn strategy_construction_and_mass() {
        let d = ScoreDistribution::uniform();
        let f = Strategy::new(&[(0.8, 1.0), (0.2, 0.4)], &d).unwrap();
        assert_eq!(f.intervals().len(), 2);
        assert!((f.mass() - 0.4).abs() < 1e-15);
        assert!(f.contains(0.25) && f.contains(0.9) && !f.contains(0.5));
        // Touching pieces merge; overlapping pieces are rejected.
        let merged = Strategy::new(&[(0.2, 0.4), (0.4, 0.5)], &d).unwrap();
        assert_eq!(merged.intervals().len(), 1);
        assert!(Strategy::new(&[(0.2, 0.4), (0.3, 0.5)], &d).is_err());
        assert!(Strategy::new(&[(0.2, 1.2)], &d).is_err());
    }

    #[test]
    fn bands_partition_and_count() {
        let d = ScoreDistribution::uniform();
        let a = Strategy::new(&[(0.4, 0.55), (0.8, 1.0)], &d).unwrap();
        let b = Strategy::new(&[(0.55, 0.8), (0.9, 1.0)], &d).unwrap();
        let p = StrategyProfile::new(vec![a, b]);
        let total: f64 = p.bands().iter().map(|b| b.hi - b.lo).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(p.bands().first().unwrap().lo, 0.0);
        assert_eq!(p.bands().last().unwrap().hi, 1.0);
        assert_eq!(p.multiplicity_at(0.95), 2);
        assert_eq!(p.multiplicity_at(0.85), 1);
        assert_eq!(p.multiplicity_at(0.2), 0);
        assert_eq!(p.m_max(), 2);
        for band in p.bands() {
            let mid = 0.5 * (band.lo + band.hi);
            assert_eq!(p.multiplicity_at(mid), band.m);
        }
    }

    #[test]
    fn firm_utility_values() {
        let inst = uniform_inst(2, 0.2, DecisionScheme::Correlated);
        let top = Strategy::new(&[(0.8, 1.0)], &inst.dist).unwrap();
        let both = StrategyProfile::new(vec![top.clone(), top.clone()]);
        for i in 0..2 {
            assert!((firm_utility(&both, i, &inst).unwrap() - 0.09).abs() < 1e-10);
        }
        let a = Strategy::new(&[(0.6, 0.8)], &inst.dist).unwrap();
        let split = StrategyProfile::new(vec![a, top]);
        assert!((firm_utility(&split, 0, &inst).unwrap() - 0.14).abs() < 1e-10);
        assert!((firm_utility(&split, 1, &inst).unwrap() - 0.18).abs() < 1e-10);
        let lonely = StrategyProfile::new(vec![Strategy::empty(), Strategy::empty()]);
        assert_eq!(firm_utility(&lonely, 0, &inst).unwrap(), 0.0);
        assert!(firm_utility(&split, 2, &inst).is_err());
    }

    #[test]
    fn social_welfare_values() {
        let inst = uniform_inst(2, 0.2, DecisionScheme::Correlated);
        let a = Strategy::new(&[(0.6, 0.8)], &inst.dist).unwrap();
        let b = Strategy::new(&[(0.8, 1.0)], &inst.dist).unwrap();
        let disjoint = StrategyProfile::new(vec![a, b.clone()]);
        assert!((social_welfare(&disjoint, &inst).unwrap() - 0.32).abs() < 1e-10);
        let empty = StrategyProfile::new(vec![Strategy::empty(), Strategy::empty()]);
        assert_eq!(social_welfare(&empty, &inst).unwrap(), 0.0);
        let both = StrategyProfile::new(vec![b.clone(), b]);
        assert!((social_welfare(&both, &inst).unwrap() - 0.18).abs() < 1e-10);
    }

    #[test]
    fn naive_profile_shape_and_welfare() {
        let inst = uniform_inst(3, 0.2, DecisionScheme::Correlated);
        let p = naive_profile(&inst).unwrap();
        for f in p.strategies() {
            assert_eq!(f.intervals().len(), 1);
            assert!((f.intervals()[0].lo - 0.8).abs() < 1e-12);
            assert!((f.mass() - 0.2).abs() < 1e-12);
        }
        assert!((social_welfare(&p, &inst).unwrap() - 0.18).abs() < 1e-9);

        let ind = uniform_inst(2, 0.2, DecisionScheme::Independent);
        let pi = naive_profile(&ind).unwrap();
        // 2·∫_{0.8}^1 (1-(1-s)^2)/2 ds = 0.592/3
        assert!((social_welfare(&pi, &ind).unwrap() - 0.592 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn profile_text_round_trip() {
        let d = ScoreDistribution::uniform();
        let a = Strategy::new(&[(13.0f64 / 30.0, 0.65), (13.0f64 / 15.0, 1.0)], &d).unwrap();
        let b = Strategy::new(&[(0.65, 13.0f64 / 15.0)], &d).unwrap();
        let p = StrategyProfile::new(vec![a, b, Strategy::empty()]);
        let text = format_profile_text(&p);
        let back = parse_profile_text(&text, &d).unwrap();
        assert_eq!(back.n_firms(), 3);
        for (f, g) in p.strategies().iter().zip(back.strategies()) {
            assert_eq!(f.intervals().len(), g.intervals().len());
            for (x, y) in f.intervals().iter().zip(g.intervals()) {
                assert!((x.lo - y.lo).abs() < 1e-11 && (x.hi - y.hi).abs() < 1e-11);
            }
        }
        assert!(parse_profile_text("0: 0.5-0.4", &d).is_err());
        assert!(parse_profile_text("0: 0.1-0.2\n2: 0.3-0.4", &d).is_err());
    }

    #[test]
    fn simulate_empty_profile_is_exactly_zero() {
        let inst = uniform_inst(2, 0.2, DecisionScheme::Correlated);
        let p = StrategyProfile::new(vec![Strategy::empty(), Strategy::empty()]);
        let r = simulate_hiring(&p, &inst, 1000, 7).unwrap();
        assert_eq!(r.welfare.estimate, 0.0);
        for f in &r.per_firm {
            assert_eq!(f.estimate, 0.0);
            assert_eq!(f.std_error, 0.0);
        }
    }

    #[test]
    fn simulate_matches_analytic_correlated() {
        let inst = uniform_inst(2, 0.2, DecisionScheme::Correlated);
        let top = Strategy::new(&[(0.8, 1.0)], &inst.dist).unwrap();
        let p = StrategyProfile::new(vec![top.clone(), top]);
        let r = simulate_hiring(&p, &inst, 1_000_000, 42).unwrap();
        for i in 0..2 {
            let analytic = firm_utility(&p, i, &inst).unwrap();
            let e = &r.per_firm[i];
            assert!(
                (e.estimate - analytic).abs() <= 3.0 * e.std_error,
                "firm {i}: {} vs {analytic} (se {})",
                e.estimate,
                e.std_error
            );
        }
    }

    #[test]
    fn simulate_matches_analytic_independent() {
        let inst = uniform_inst(4, 0.25, DecisionScheme::Independent);
        let strategies: Vec<Strategy> = [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]
            .iter()
            .map(|&(a, b)| Strategy::new(&[(a, b)], &inst.dist).unwrap())
            .collect();
        let p = StrategyProfile::new(strategies);
        let r = simulate_hiring(&p, &inst, 1_000_000, 11).unwrap();
        let analytic = social_welfare(&p, &inst).unwrap();
        assert!((r.welfare.estimate - analytic).abs() <= 3.0 * r.welfare.std_error);
        assert!(simulate_hiring(&p, &inst, 0, 1).is_err());
    }

    #[test]
    fn simulate_is_deterministic_per_seed() {
        let inst = uniform_inst(2, 0.3, DecisionScheme::Independent);
        let a = Strategy::new(&[(0.5, 0.8)], &inst.dist).unwrap();
        let b = Strategy::new(&[(0.7, 1.0)], &inst.dist).unwrap();
        let p = StrategyProfile::new(vec![a, b]);
        let r1 = simulate_hiring(&p, &inst, 50_000, 9).unwrap();
        let r2 = simulate_hiring(&p, &inst, 50_000, 9).unwrap();
        assert_eq!(r1.per_firm[0].estimate, r2.per_firm[0].estimate);
        assert_eq!(r1.welfare.estimate, r2.welfare.estimate);
        let r3 = simulate_hiring(&p, &inst, 50_000, 10).unwrap();
        assert!(r1.welfare.estimate != r3.welfare.estimate);
    }

    fn arb_cutpoints() -> impl PropStrategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, 2..8).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            v
        })
    }

    fn profile_from_cuts(all: Vec<Vec<f64>>, d: &ScoreDistribution) -> StrategyProfile {
        let strategies: Vec<Strategy> = all
            .into_iter()
            .map(|cuts| {
                let pairs: Vec<(f64, f64)> =
                    cuts.chunks(2).filter(|c| c.len() == 2).map(|c| (c[0], c[1])).collect();
                Strategy::new(&pairs, d).unwrap()
            })
            .collect();
        StrategyProfile::new(strategies)
    }

    proptest! {
        #[test]
        fn welfare_equals_per_firm_sum(
            cuts in proptest::collection::vec(arb_cutpoints(), 1..5),
            scheme_ind in proptest::bool::ANY,
        ) {
            let d = ScoreDistribution::uniform();
            let p = profile_from_cuts(cuts, &d);
            let scheme = if scheme_ind { DecisionScheme::Independent } else { DecisionScheme::Correlated };
            let inst = Instance::new(p.n_firms() as u32, 1.0, d, scheme).unwrap();
            let by_band = social_welfare(&p, &inst).unwrap();
            let by_firm: f64 = (0..p.n_firms())
                .map(|i| firm_utility(&p, i, &inst).unwrap())
                .sum();
            prop_assert!((by_band - by_firm).abs() < 1e-9);
        }

        #[test]
        fn bands_partition_unit_interval(cuts in proptest::collection::vec(arb_cutpoints(), 1..5)) {
            let d = ScoreDistribution::uniform();
            let p = profile_from_cuts(cuts, &d);
            let bands = p.bands();
            prop_assert_eq!(bands.first().unwrap().lo, 0.0);
            prop_assert_eq!(bands.last().unwrap().hi, 1.0);
            for w in bands.windows(2) {
                prop_assert_eq!(w[0].hi, w[1].lo);
                prop_assert!(w[0].m != w[1].m);
            }
            prop_assert!(p.m_max() as usize <= p.n_firms());
        }

        #[test]
        fn text_round_trip_preserves_bands(cuts in proptest::collection::vec(arb_cutpoints(), 1..5)) {
            let d = ScoreDistribution::uniform();
            let rounded: Vec<Vec<f64>> = cuts
                .into_iter()
                .map(|v| v.into_iter().map(crate::numfmt::round_sig12).collect())
                .collect();
            let p = profile_from_cuts(rounded, &d);
            let back = parse_profile_text(&format_profile_text(&p), &d).unwrap();
            prop_assert_eq!(p.bands(), back.bands());
        }
    }
}
