//! Equilibrium solving and verification, centralized optima, and the
//! welfare ratios built on them.
//!
//! The solver targets equal-utility equilibria: thresholds τ_1 <= τ_2 <= …
//! where scores in [τ_m, τ_{m+1}) are interviewed by exactly m firms and
//! every interior threshold sits at a common utility level t. Arbitrary
//! profiles are checked against the full threshold characterization
//! (conditions 1-4 below) plus a behavioral best-response test.

use serde::Serialize;

use crate::dynamics;
use crate::market_model::{
    band_utility_integral, firm_utility, inv_u, naive_profile, normalize_intervals,
    social_welfare, u_of, DecisionScheme, Instance, Interval, Strategy, StrategyProfile,
};
use crate::numeric::bisect;
use crate::{Error, Result};

/// Structural tolerance for the threshold-condition checks.
const STRUCT_TOL: f64 = 1e-8;

/// Default cell count for the grid-greedy centralized optimizer.
pub const DEFAULT_SW_MAX_GRID: usize = 100_000;

/// Thresholds τ_0..τ_{N+1} at a common utility level.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSet {
    /// Common threshold utility t: U_m(τ_m) = t for every m <= m_max.
    pub level: f64,
    /// τ_0 = 0 and τ_{N+1} = 1 are sentinels; length is N+2.
    pub thresholds: Vec<f64>,
    /// Largest m with τ_m < 1.
    pub m_max: u32,
}

impl ThresholdSet {
    pub fn tau(&self, m: usize) -> f64 {
        self.thresholds[m]
    }

    pub fn n_firms(&self) -> usize {
        self.thresholds.len() - 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    EqualUtility,
    VariableUtility,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSolution {
    pub thresholds: ThresholdSet,
    pub profile: StrategyProfile,
    pub kind: SolutionKind,
    pub scheme: DecisionScheme,
    /// True when the sequential construction was not applicable and the
    /// band-sweep assignment produced the profile instead.
    pub fallback_used: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionViolation {
    /// 1 = capacity, 2 = band structure, 3 = threshold utilities,
    /// 4 = cross-band membership.
    pub condition: u8,
    pub location: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub is_equilibrium: bool,
    pub max_deviation_gain: f64,
    pub condition_violations: Vec<ConditionViolation>,
    /// Condition-4 pairs that reach past the interior thresholds; logged
    /// rather than judged.
    pub boundary_notes: Vec<String>,
}

// ---------------------------------------------------------------------------
// Equal-utility solver.

/// τ_m(t) = min(inverse_utility(m, t), 1) for m = 0..n+1.
fn taus_at_level(n: u32, t: f64, scheme: DecisionScheme) -> Vec<f64> {
    let mut taus = Vec::with_capacity(n as usize + 2);
    taus.push(0.0);
    for m in 1..=n {
        let tau = if t * m as f64 >= 1.0 {
            1.0
        } else {
            inv_u(m, t, scheme).min(1.0)
        };
        taus.push(tau);
    }
    taus.push(1.0);
    taus
}

/// Total interview mass Σ_m m·mass([τ_m, τ_{m+1})) demanded at level t.
fn total_capacity_at(n: u32, t: f64, inst: &Instance) -> f64 {
    let taus = taus_at_level(n, t, inst.scheme);
    let mut total = 0.0;
    for m in 1..=n as usize {
        if taus[m] < taus[m + 1] {
            total += m as f64 * (inst.dist.cdf(taus[m + 1]) - inst.dist.cdf(taus[m]));
        }
    }
    total
}

pub(crate) fn m_max_of(taus: &[f64]) -> u32 {
    let n = taus.len() - 2;
    (1..=n).rev().find(|&m| taus[m] < 1.0 - 1e-12).unwrap_or(0) as u32
}

/// Finds the common utility level t at which the threshold bands demand
/// exactly N·c interview mass. The demand T(t) falls strictly from N at
/// t = 0 to 0 at t = 1, so bisection applies; t is resolved to machine
/// precision.
pub fn solve_equal_utility_thresholds(inst: &Instance) -> Result<ThresholdSet> {
    let n = inst.n_firms;
    let target = n as f64 * inst.capacity;
    let t = if inst.capacity >= 1.0 {
        0.0
    } else {
        bisect(
            0.0,
            1.0,
            |t| total_capacity_at(n, t, inst) - target,
            0.0,
            200,
        )?
    };
    let taus = taus_at_level(n, t, inst.scheme);
    let m_max = m_max_of(&taus);
    Ok(ThresholdSet {
        level: t,
        thresholds: taus,
        m_max,
    })
}

// ---------------------------------------------------------------------------
// Firm assignment.

/// One refinement of a k-firm equal-utility solution to k+1 firms at a
/// lower common level t: the entering firm takes ∪_m [τ'_{m+1}(t), τ_{m+1})
/// where τ'_j(t) are the thresholds re-solved at level t, and t is chosen
/// so the union has mass exactly c.
pub(crate) struct Refinement {
    pub level: f64,
    /// Refined thresholds for k+1 firms (length k+3).
    pub taus: Vec<f64>,
    pub entrant: Vec<Interval>,
}

pub(crate) fn refine_level_and_strategy(
    taus: &[f64],
    level: f64,
    inst: &Instance,
) -> Result<Refinement> {
    let k = taus.len() - 2;
    let c = inst.capacity;
    let scheme = inst.scheme;
    let m_max = m_max_of(taus) as usize;
    if m_max == 0 {
        return Err(Error::Numerical(
            "refinement needs at least one interior threshold".into(),
        ));
    }
    // Below t* = max_m U_{m+1}(τ_m) the refined thresholds would cross the
    // current ones and the piecewise form of the mass function changes.
    let t_star = (1..=m_max)
        .map(|m| u_of(m as u32 + 1, taus[m], scheme))
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = t_star + 1e-12;
    let hi = level;
    if lo >= hi {
        return Err(Error::Numerical(format!(
            "refinement bracket is empty: t* = {t_star}, current level = {level}"
        )));
    }
    let tau_prime = |j: usize, t: f64| -> f64 {
        if t * j as f64 >= 1.0 {
            1.0
        } else {
            inv_u(j as u32, t, scheme).min(1.0)
        }
    };
    // Entering mass at level t: Σ_{m=0}^{m_max} mass([τ'_{m+1}(t), τ_{m+1})).
    let entrant_mass = |t: f64| -> f64 {
        let mut total = 0.0;
        for m in 0..=m_max {
            let piece_lo = tau_prime(m + 1, t).min(taus[m + 1]);
            if piece_lo < taus[m + 1] {
                total += inst.dist.cdf(taus[m + 1]) - inst.dist.cdf(piece_lo);
            }
        }
        total
    };
    if entrant_mass(lo) < c {
        return Err(Error::Numerical(format!(
            "capacity {c} exceeds the refinable mass {} at the bracket edge",
            entrant_mass(lo)
        )));
    }
    let t = bisect(lo, hi, |t| entrant_mass(t) - c, 0.0, 200)?;

    let mut new_taus = Vec::with_capacity(k + 3);
    new_taus.push(0.0);
    for j in 1..=k + 1 {
        new_taus.push(tau_prime(j, t));
    }
    new_taus.push(1.0);
    // Refined thresholds must interleave the current ones, and the refined
    // structure may not demand a band deeper than m_max + 1.
    for m in 1..=m_max {
        if new_taus[m + 1] < taus[m] - 1e-9 || new_taus[m + 1] > taus[m + 1] + 1e-9 {
            return Err(Error::Numerical(format!(
                "refined threshold {} escaped [{}, {}]",
                new_taus[m + 1],
                taus[m],
                taus[m + 1]
            )));
        }
    }
    if m_max + 2 <= k + 1 && new_taus[m_max + 2] < 1.0 - 1e-9 {
        return Err(Error::Numerical(format!(
            "refinement at level {t} opens a depth-{} band",
            m_max + 2
        )));
    }
    let mut entrant = Vec::new();
    for m in 0..=m_max {
        let piece_lo = new_taus[m + 1].min(taus[m + 1]);
        if piece_lo < taus[m + 1] {
            entrant.push(Interval {
                lo: piece_lo,
                hi: taus[m + 1],
            });
        }
    }
    Ok(Refinement {
        level: t,
        taus: new_taus,
        entrant,
    })
}

fn assign_by_recursion(ts: &ThresholdSet, inst: &Instance) -> Result<StrategyProfile> {
    let s_c = inst.dist.top_mass_threshold(inst.capacity)?;
    let mut strategies = vec![Strategy::new(&[(s_c, 1.0)], &inst.dist)?];
    let mut taus = vec![0.0, s_c, 1.0];
    let mut level = s_c; // U_1(s) = s under both schemes
    for _ in 1..inst.n_firms {
        let mut r = refine_level_and_strategy(&taus, level, inst)?;
        trim_entrant_front(&mut r, inst)?;
        let entrant = Strategy::from_normalized(normalize_intervals(r.entrant), &inst.dist);
        if (entrant.mass() - inst.capacity).abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "entrant mass {} differs from capacity {}",
                entrant.mass(),
                inst.capacity
            )));
        }
        strategies.push(entrant);
        taus = r.taus;
        level = r.level;
    }
    let drift = taus
        .iter()
        .zip(&ts.thresholds)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if drift > 1e-9 {
        return Err(Error::Numerical(format!(
            "sequential thresholds drifted {drift} from the direct solve"
        )));
    }
    Ok(StrategyProfile::new(strategies))
}

/// Shaves any capacity overshoot (a root-residual artifact, ≲1e−9) off the
/// front of the entrant's lowest piece. That piece starts at the entrant's
/// own refined threshold, where its coverage is the only one, so raising the
/// edge just moves the threshold up; the refined tau is updated to match so
/// the next entrant fills exactly up to it and no coverage hole opens.
fn trim_entrant_front(r: &mut Refinement, inst: &Instance) -> Result<()> {
    let total: f64 = r
        .entrant
        .iter()
        .map(|iv| inst.dist.mass(iv.lo, iv.hi).unwrap_or(0.0))
        .sum();
    let excess = total - inst.capacity;
    if excess <= 0.0 {
        return Ok(());
    }
    let first = r.entrant.first().copied().ok_or_else(|| {
        Error::Numerical("entrant with positive mass has no pieces".into())
    })?;
    if inst.dist.mass(first.lo, first.hi)? <= excess {
        return Err(Error::Numerical(format!(
            "capacity overshoot {excess} swallows the entrant's lowest piece"
        )));
    }
    let lo = inst.dist.quantile(inst.dist.cdf(first.lo) + excess);
    r.entrant[0] = Interval { lo, hi: first.hi };
    for tau in r.taus.iter_mut() {
        if *tau == first.lo {
            *tau = lo;
            break;
        }
    }
    Ok(())
}

/// Sweeps the bands [τ_m, τ_{m+1}) in order, splitting each into chunks for
/// the m least-loaded firms. Every firm takes exactly m·W/n of a band with
/// mass W, so loads stay tied throughout (each chunk goes to firms at the
/// current minimum) and every firm ends at Σ_m m·W_m/n. Within a band the
/// m-fold coverage is laid out wrap-around style: firm shares are placed
/// end to end on a tape of length m·W and the tape is cut into m rows of
/// length W; a share of at most W overlaps each row at most once, so the m
/// owners above any point are distinct.
///
/// The solved thresholds carry a tiny residual Σ_m m·W_m − N·c (the capacity
/// root is found in the level variable, where the deepest band's edge can be
/// steep). A positive residual would push every firm just over c, so it is
/// shaved off band bottoms, deepest band first, by skipping a prefix of the
/// band's first tape row: the bottom sliver of the band drops to (m−1)-fold
/// coverage, which keeps multiplicity monotone and only nudges the extracted
/// threshold by the sliver width.
fn assign_by_sweep(ts: &ThresholdSet, inst: &Instance) -> Result<StrategyProfile> {
    let n = inst.n_firms as usize;
    let mut covers: Vec<(f64, f64, usize)> = Vec::new();
    let mut total = 0.0;
    for m in 1..=n {
        let band_lo = ts.tau(m);
        let band_hi = ts.tau(m + 1);
        let w = inst.dist.mass(band_lo, band_hi)?;
        if w <= 1e-15 {
            continue;
        }
        covers.push((band_lo, band_hi, m));
        total += m as f64 * w;
    }
    // the capacity root is found in the level variable, where the band-mass
    // total can be so steep that machine resolution in the level leaves a
    // visible mass residual; anything beyond this scale is a solver failure,
    // not roundoff
    let mut residual = total - n as f64 * inst.capacity;
    if residual > 1e-4 * (n as f64 * inst.capacity).max(1.0) {
        return Err(Error::Numerical(format!(
            "band masses exceed the firms' joint capacity by {residual}"
        )));
    }
    // (lo, hi, multiplicity, skipped prefix of the first row)
    let mut adjusted: Vec<(f64, f64, usize, f64)> = Vec::new();
    for &(lo, hi, m) in covers.iter().rev() {
        let w = inst.dist.mass(lo, hi)?;
        if residual <= 0.0 {
            adjusted.push((lo, hi, m, 0.0));
        } else if residual < w {
            adjusted.push((lo, hi, m, residual));
            residual = 0.0;
        } else {
            // a whole row comes off; the band sits one multiplicity lower
            if m > 1 {
                adjusted.push((lo, hi, m - 1, 0.0));
            }
            residual -= w;
        }
    }
    adjusted.reverse();

    let mut pieces: Vec<Vec<Interval>> = vec![Vec::new(); n];
    for &(band_lo, band_hi, m, skip) in &adjusted {
        let w = inst.dist.mass(band_lo, band_hi)?;
        if w <= 0.0 {
            continue;
        }
        let share = (m as f64 * w - skip) / n as f64;
        let base = inst.dist.cdf(band_lo);
        // Walk the tape with one cursor so adjacent pieces share the exact
        // same floats: the end of one firm's fragment is the next firm's
        // start, row bottoms are exactly 0, and row tops are exactly w.
        let mut row = 0usize;
        let mut u = skip;
        let last = pieces.len() - 1;
        for (j, out) in pieces.iter_mut().enumerate() {
            // the last firm flushes the tape so subtraction drift cannot
            // leave an uncovered sliver at the band top
            let mut need = if j == last { f64::INFINITY } else { share };
            while need > 0.0 && row < m {
                let x0 = if u <= 0.0 {
                    band_lo
                } else {
                    inst.dist.quantile(base + u)
                };
                if need < w - u {
                    let u2 = u + need;
                    let x1 = if u2 >= w {
                        band_hi
                    } else {
                        inst.dist.quantile(base + u2)
                    };
                    if x1 > x0 {
                        out.push(Interval { lo: x0, hi: x1 });
                    }
                    u = u2;
                    need = 0.0;
                } else {
                    if band_hi > x0 {
                        out.push(Interval { lo: x0, hi: band_hi });
                    }
                    need -= w - u;
                    row += 1;
                    u = 0.0;
                }
            }
        }
    }
    Ok(StrategyProfile::new(
        pieces
            .into_iter()
            .map(|p| Strategy::from_normalized(normalize_intervals(p), &inst.dist))
            .collect(),
    ))
}

/// Builds per-firm interview sets realizing an equal-utility threshold set.
///
/// The primary route adds firms one at a time, re-solving the threshold
/// level so each entrant takes exactly mass c; it also certifies itself by
/// checking the final thresholds against `ts`. When any step fails (large
/// capacities can exhaust the refinable range) a least-loaded band sweep
/// takes over, polished and checked by best-response dynamics, and the
/// result is flagged.
pub fn assign_firms(ts: &ThresholdSet, inst: &Instance) -> Result<EquilibriumSolution> {
    if ts.n_firms() != inst.n_firms as usize {
        return Err(Error::InvalidArgument(format!(
            "threshold set is for {} firms, instance has {}",
            ts.n_firms(),
            inst.n_firms
        )));
    }
    if let Ok(profile) = assign_by_recursion(ts, inst) {
        return Ok(EquilibriumSolution {
            thresholds: ts.clone(),
            profile,
            kind: SolutionKind::EqualUtility,
            scheme: inst.scheme,
            fallback_used: false,
        });
    }
    let swept = assign_by_sweep(ts, inst)?;
    let (polished, _) = dynamics::run_best_response_dynamics(inst, &swept, 1e-6, 20)?;
    let report = verify_equilibrium(&polished, inst, 1e-6)?;
    if !report.is_equilibrium {
        return Err(Error::NonConvergence {
            message: format!(
                "fallback assignment failed verification: max gain {}, {} violations",
                report.max_deviation_gain,
                report.condition_violations.len()
            ),
            best: Some(Box::new(polished)),
        });
    }
    Ok(EquilibriumSolution {
        thresholds: ts.clone(),
        profile: polished,
        kind: SolutionKind::EqualUtility,
        scheme: inst.scheme,
        fallback_used: true,
    })
}

// ---------------------------------------------------------------------------
// Verification and classification.

/// Reads thresholds off a profile's multiplicity bands: τ_m is the first
/// score where the multiplicity reaches m.
pub fn extract_thresholds(profile: &StrategyProfile, inst: &Instance) -> ThresholdSet {
    let n = profile.n_firms();
    let bands = profile.bands();
    let mut taus = vec![0.0];
    for m in 1..=n as u32 {
        taus.push(
            bands
                .iter()
                .find(|b| b.m >= m)
                .map(|b| b.lo)
                .unwrap_or(1.0),
        );
    }
    taus.push(1.0);
    let m_max = m_max_of(&taus);
    let level = if m_max >= 1 {
        u_of(1, taus[1], inst.scheme)
    } else {
        0.0
    };
    ThresholdSet {
        level,
        thresholds: taus,
        m_max,
    }
}

fn classify_thresholds(ts: &ThresholdSet, scheme: DecisionScheme) -> SolutionKind {
    let levels: Vec<f64> = (1..=ts.m_max as usize)
        .filter(|&m| ts.tau(m) > 1e-12 && ts.tau(m) < 1.0 - 1e-12)
        .map(|m| u_of(m as u32, ts.tau(m), scheme))
        .collect();
    let spread = levels
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v))
        - levels.iter().fold(f64::INFINITY, |acc, &v| acc.min(v));
    if levels.len() <= 1 || spread <= STRUCT_TOL {
        SolutionKind::EqualUtility
    } else {
        SolutionKind::VariableUtility
    }
}

/// equal_utility iff all interior thresholds share one utility level.
pub fn classify(sol: &EquilibriumSolution) -> SolutionKind {
    classify_thresholds(&sol.thresholds, sol.scheme)
}

/// Wraps an externally supplied profile as a solution, with thresholds
/// extracted from its bands and the kind classified.
pub fn solution_from_profile(profile: StrategyProfile, inst: &Instance) -> EquilibriumSolution {
    let ts = extract_thresholds(&profile, inst);
    let kind = classify_thresholds(&ts, inst.scheme);
    EquilibriumSolution {
        thresholds: ts,
        profile,
        kind,
        scheme: inst.scheme,
        fallback_used: false,
    }
}

/// Checks a profile against the threshold characterization (structural)
/// and against per-firm best responses (behavioral).
///
/// Structural conditions, each reported with a location on failure:
/// 1. every firm interviews mass exactly c;
/// 2. multiplicity is non-decreasing in the score (bands step upward);
/// 3. threshold utilities are non-decreasing: U_n(τ_n) <= U_m(τ_m) for n < m;
/// 4. a firm active below a strictly-better band must already hold every
///    part of that band it would prefer.
///
/// The behavioral check reports the largest best-response gain; the profile
/// passes when no structural violation exceeds 1e-8 and the gain is at most
/// ε·c.
pub fn verify_equilibrium(
    profile: &StrategyProfile,
    inst: &Instance,
    epsilon: f64,
) -> Result<VerificationReport> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    profile.check_capacity(inst)?;
    let c = inst.capacity;
    let scheme = inst.scheme;
    let ts = extract_thresholds(profile, inst);
    let m_max = ts.m_max as usize;
    let mut violations = Vec::new();
    let mut boundary_notes = Vec::new();

    for (i, f) in profile.strategies().iter().enumerate() {
        if (f.mass() - c).abs() > STRUCT_TOL {
            violations.push(ConditionViolation {
                condition: 1,
                location: f.intervals().first().map(|iv| iv.lo).unwrap_or(0.0),
                detail: format!("firm {i} interviews mass {} instead of {c}", f.mass()),
            });
        }
    }

    // A multiplicity drop above a denser band is judged by the deviation it
    // implies: a firm in the denser band moves its swappable mass up into the
    // thinner band, where it earns at least U_{m'+1} at a higher score. Drops
    // whose implied gain stays within tolerance are left alone; ε-converged
    // dynamics legitimately leave such residue where the utility landscape is
    // flat (scores near 1 or regions of negligible density).
    let bands = profile.bands();
    for i in 0..bands.len() {
        for j in i + 1..bands.len() {
            if bands[j].m >= bands[i].m {
                continue;
            }
            let gain_per_mass = u_of(bands[j].m + 1, bands[j].hi, scheme)
                - u_of(bands[i].m, bands[i].lo, scheme);
            let swappable = inst
                .dist
                .mass(bands[i].lo, bands[i].hi)?
                .min(inst.dist.mass(bands[j].lo, bands[j].hi)?);
            let implied = gain_per_mass.max(0.0) * swappable;
            if implied > STRUCT_TOL {
                violations.push(ConditionViolation {
                    condition: 2,
                    location: bands[j].lo,
                    detail: format!(
                        "multiplicity falls from {} to {} at {}; moving mass up would gain {}",
                        bands[i].m, bands[j].m, bands[j].lo, implied
                    ),
                });
            }
        }
    }

    for lo_m in 1..=m_max {
        for hi_m in lo_m + 1..=m_max {
            let u_lo = u_of(lo_m as u32, ts.tau(lo_m), scheme);
            let u_hi = u_of(hi_m as u32, ts.tau(hi_m), scheme);
            if u_lo > u_hi + STRUCT_TOL {
                violations.push(ConditionViolation {
                    condition: 3,
                    location: ts.tau(lo_m),
                    detail: format!(
                        "U_{lo_m}(tau_{lo_m}) = {u_lo} exceeds U_{hi_m}(tau_{hi_m}) = {u_hi}"
                    ),
                });
            }
        }
    }

    // Condition 4: for n < m with U_n(τ_n) < U_m(τ_m), any firm holding
    // scores in band n below the U_m(τ_m) level must fully hold the part
    // of [τ_{m-1}, τ_m) it strictly prefers to those scores.
    for n_band in 1..=m_max {
        for m_band in n_band + 1..=m_max + 1 {
            let u_n = u_of(n_band as u32, ts.tau(n_band), scheme);
            let u_m = if m_band <= m_max {
                u_of(m_band as u32, ts.tau(m_band), scheme)
            } else {
                u_of(m_band as u32, 1.0, scheme)
            };
            if u_m <= u_n + STRUCT_TOL {
                continue;
            }
            if m_band > m_max {
                boundary_notes.push(format!(
                    "pair ({n_band}, {m_band}) reaches the non-interior threshold tau_{m_band} = 1 \
                     with U_{m_band}(1) = {u_m} > U_{n_band}(tau_{n_band}) = {u_n}; not judged"
                ));
                continue;
            }
            let x_cut = inv_u(n_band as u32, u_m, scheme).min(ts.tau(n_band + 1));
            for (i, f) in profile.strategies().iter().enumerate() {
                let trigger = f.clipped_to(ts.tau(n_band), x_cut);
                let trigger_mass: f64 = trigger
                    .iter()
                    .map(|iv| inst.dist.cdf(iv.hi) - inst.dist.cdf(iv.lo))
                    .sum();
                if trigger_mass <= STRUCT_TOL {
                    continue;
                }
                let s_inf = trigger[0].lo;
                let req_lo = ts
                    .tau(m_band - 1)
                    .max(inv_u(m_band as u32, u_of(n_band as u32, s_inf, scheme), scheme));
                let req_hi = ts.tau(m_band);
                if req_lo >= req_hi {
                    continue;
                }
                let required = inst.dist.cdf(req_hi) - inst.dist.cdf(req_lo);
                let covered: f64 = f
                    .clipped_to(req_lo, req_hi)
                    .iter()
                    .map(|iv| inst.dist.cdf(iv.hi) - inst.dist.cdf(iv.lo))
                    .sum();
                if required - covered > STRUCT_TOL {
                    violations.push(ConditionViolation {
                        condition: 4,
                        location: s_inf,
                        detail: format!(
                            "firm {i} holds scores from {s_inf} in band {n_band} but misses mass \
                             {} of the preferred region [{req_lo}, {req_hi})",
                            required - covered
                        ),
                    });
                }
            }
        }
    }

    let mut max_gain = f64::NEG_INFINITY;
    for i in 0..profile.n_firms() {
        let current = firm_utility(profile, i, inst)?;
        let br = dynamics::best_response(profile, i, inst)?;
        let best = firm_utility(&profile.with_strategy(i, br)?, i, inst)?;
        max_gain = max_gain.max(best - current);
    }

    Ok(VerificationReport {
        is_equilibrium: violations.is_empty() && max_gain <= epsilon * c,
        max_deviation_gain: max_gain,
        condition_violations: violations,
        boundary_notes,
    })
}

// ---------------------------------------------------------------------------
// Welfare quantities and ratios.

/// Equal-utility equilibrium welfare. Correlated: the closed form
/// ∫_{τ_1}^1 s φ(s) ds. Independent: welfare of a constructed profile.
pub fn sw_ne(inst: &Instance) -> Result<f64> {
    let ts = solve_equal_utility_thresholds(inst)?;
    match inst.scheme {
        DecisionScheme::Correlated => inst.dist.first_moment(ts.tau(1), 1.0),
        DecisionScheme::Independent => {
            let sol = assign_firms(&ts, inst)?;
            social_welfare(&sol.profile, inst)
        }
    }
}

/// Welfare when every firm interviews the same top-capacity mass.
pub fn sw_naive(inst: &Instance) -> Result<f64> {
    social_welfare(&naive_profile(inst)?, inst)
}

/// Centralized optimum with the default optimizer grid.
pub fn sw_max(inst: &Instance) -> Result<f64> {
    sw_max_with_grid(inst, DEFAULT_SW_MAX_GRID)
}

/// Centralized optimum. Correlated: duplicate interviews add nothing, so
/// the planner covers the top N·c mass once: ∫_{s_{Nc}}^1 s φ ds, or E[S]
/// when N·c > 1. Independent: grid-greedy marginal allocation.
pub fn sw_max_with_grid(inst: &Instance, cells: usize) -> Result<f64> {
    match inst.scheme {
        DecisionScheme::Correlated => {
            let nc = inst.n_firms as f64 * inst.capacity;
            if nc < 1.0 {
                let s_nc = inst.dist.top_mass_threshold(nc)?;
                inst.dist.first_moment(s_nc, 1.0)
            } else {
                Ok(inst.dist.expected_score())
            }
        }
        DecisionScheme::Independent => sw_max_greedy(inst, cells),
    }
}

#[derive(PartialEq)]
struct GreedyItem {
    rate: f64,
    cell: usize,
    depth: u32,
}

impl Eq for GreedyItem {}

impl Ord for GreedyItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rate
            .total_cmp(&other.rate)
            .then(other.cell.cmp(&self.cell))
            .then(other.depth.cmp(&self.depth))
    }
}

impl PartialOrd for GreedyItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy centralized optimizer on a uniform score grid, valid for either
/// scheme. Raising a cell's interview depth from n to n+1 gains
/// s(1-s)^n per unit mass (independent) or s only at n = 0 (correlated);
/// both fall with n, so descending-rate greedy with a fractional final
/// unit solves the discretized program exactly.
pub fn sw_max_greedy(inst: &Instance, cells: usize) -> Result<f64> {
    if cells < 10 {
        return Err(Error::InvalidArgument(format!(
            "optimizer grid needs at least 10 cells, got {cells}"
        )));
    }
    let rate = |s: f64, depth: u32| -> f64 {
        match inst.scheme {
            DecisionScheme::Correlated => {
                if depth == 0 {
                    s
                } else {
                    0.0
                }
            }
            DecisionScheme::Independent => s * (1.0 - s).powi(depth as i32),
        }
    };
    let mut masses = Vec::with_capacity(cells);
    let mut mids = Vec::with_capacity(cells);
    let mut heap = std::collections::BinaryHeap::with_capacity(cells);
    for i in 0..cells {
        let lo = i as f64 / cells as f64;
        let hi = (i + 1) as f64 / cells as f64;
        let w = inst.dist.cdf(hi) - inst.dist.cdf(lo);
        let s = 0.5 * (lo + hi);
        masses.push(w);
        mids.push(s);
        let r = rate(s, 0);
        if r > 0.0 && w > 0.0 {
            heap.push(GreedyItem {
                rate: r,
                cell: i,
                depth: 0,
            });
        }
    }
    let mut budget = inst.n_firms as f64 * inst.capacity;
    let mut welfare = 0.0;
    while budget > 1e-15 {
        let Some(item) = heap.pop() else { break };
        let take = masses[item.cell].min(budget);
        welfare += take * item.rate;
        budget -= take;
        if take >= masses[item.cell] && item.depth + 1 < inst.n_firms {
            let r = rate(mids[item.cell], item.depth + 1);
            if r > 0.0 {
                heap.push(GreedyItem {
                    rate: r,
                    cell: item.cell,
                    depth: item.depth + 1,
                });
            }
        }
    }
    Ok(welfare)
}

/// Equilibrium welfare over naive welfare.
pub fn pons(inst: &Instance) -> Result<f64> {
    Ok(sw_ne(inst)? / sw_naive(inst)?)
}

/// Centralized-optimal welfare over equilibrium welfare.
pub fn poa(inst: &Instance) -> Result<f64> {
    poa_with_grid(inst, DEFAULT_SW_MAX_GRID)
}

pub fn poa_with_grid(inst: &Instance, cells: usize) -> Result<f64> {
    Ok(sw_max_with_grid(inst, cells)? / sw_ne(inst)?)
}

// ---------------------------------------------------------------------------
// Flexible-capacity constructions.

/// The capacity at which the naive solution yields welfare exactly W:
/// solves N·∫_{x}^1 U_N(s) φ(s) ds = W for the threshold x (the left side
/// falls strictly in x), then returns mass([x, 1]).
pub fn naive_capacity_for_welfare(
    w: f64,
    n_firms: u32,
    dist: &crate::ScoreDistribution,
    scheme: DecisionScheme,
) -> Result<f64> {
    if n_firms < 1 {
        return Err(Error::InvalidArgument("need at least one firm".into()));
    }
    let inst = Instance::new(n_firms, 1.0, dist.clone(), scheme)?;
    let naive_welfare_from = |x: f64| -> Result<f64> {
        Ok(n_firms as f64 * band_utility_integral(n_firms, x, 1.0, &inst)?)
    };
    let w_max = naive_welfare_from(0.0)?;
    if !(w > 0.0 && w < w_max) {
        return Err(Error::InvalidArgument(format!(
            "target welfare must lie in (0, {w_max}), got {w}"
        )));
    }
    let x = bisect(
        0.0,
        1.0,
        |x| naive_welfare_from(x).unwrap_or(f64::NAN) - w,
        0.0,
        200,
    )?;
    dist.mass(x, 1.0)
}

/// A flexible-capacity equilibrium plan: same welfare as the naive outcome
/// but with each firm restricted to capacity c/N.
#[derive(Debug, Clone, Serialize)]
pub struct FlexCapOutcome {
    pub total_capacity: f64,
    pub per_firm_capacity: f64,
    pub threshold: f64,
    pub welfare: f64,
    pub solution: EquilibriumSolution,
}

/// Builds the N-firm equilibrium in which disjoint strategies of mass c/N
/// partition [x*, 1), with c chosen so the naive solution would deliver
/// welfare W. Requires W <= ∫_{0.5}^1 s φ ds so that x* >= 0.5, which makes
/// single coverage an equilibrium. Under the correlated scheme the
/// construction's welfare equals W; under the independent scheme it is the
/// single-coverage value ∫_{x*}^1 s φ ds, which is smaller.
pub fn ne_with_capacity_over_n(
    w: f64,
    n_firms: u32,
    dist: &crate::ScoreDistribution,
    scheme: DecisionScheme,
) -> Result<FlexCapOutcome> {
    let bound = dist.first_moment(0.5, 1.0)?;
    if w > bound + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "target welfare {w} exceeds the single-coverage bound {bound} \
             (the integral of s over the top half of the score range)"
        )));
    }
    let c_total = naive_capacity_for_welfare(w, n_firms, dist, scheme)?;
    let x_star = dist.top_mass_threshold(c_total)?;
    let per_firm = c_total / n_firms as f64;
    let inst = Instance::new(n_firms, per_firm, dist.clone(), scheme)?;
    let base = dist.cdf(x_star);
    // Chunk boundaries by equal mass; firm 0 takes the top chunk.
    let mut strategies = Vec::with_capacity(n_firms as usize);
    for i in 0..n_firms as usize {
        let k = n_firms as usize - 1 - i;
        let lo = if k == 0 {
            x_star
        } else {
            dist.quantile(base + k as f64 * per_firm)
        };
        let hi = if k + 1 == n_firms as usize {
            1.0
        } else {
            dist.quantile(base + (k + 1) as f64 * per_firm)
        };
        strategies.push(Strategy::new(&[(lo, hi)], dist)?);
    }
    let profile = StrategyProfile::new(strategies);
    let report = verify_equilibrium(&profile, &inst, 1e-6)?;
    if !report.is_equilibrium {
        return Err(Error::Numerical(format!(
            "flexible-capacity construction failed verification: max gain {}",
            report.max_deviation_gain
        )));
    }
    let welfare = social_welfare(&profile, &inst)?;
    let mut thresholds = vec![0.0, x_star];
    thresholds.extend(std::iter::repeat(1.0).take(n_firms as usize));
    Ok(FlexCapOutcome {
        total_capacity: c_total,
        per_firm_capacity: per_firm,
        threshold: x_star,
        welfare,
        solution: EquilibriumSolution {
            thresholds: ThresholdSet {
                level: x_star,
                thresholds,
                m_max: 1,
            },
            profile,
            kind: SolutionKind::EqualUtility,
            scheme,
            fallback_used: false,
        },
    })
}
