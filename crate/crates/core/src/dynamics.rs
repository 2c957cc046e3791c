//! Better-response processes: the exact potential, best responses,
//! round-robin best-response dynamics, and one-turn lookahead dynamics in
//! which firms enter a market one at a time.

use serde::Serialize;

use crate::equilibrium::{
    m_max_of, refine_level_and_strategy, EquilibriumSolution, SolutionKind, ThresholdSet,
};
use crate::market_model::{
    band_utility_integral, inv_u, normalize_intervals, u_of, Band, DecisionScheme, Instance,
    Interval, Strategy, StrategyProfile,
};
use crate::numeric::bisect;
use crate::numfmt::sig12;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsStep {
    pub round: u32,
    pub firm: usize,
    pub u_before: f64,
    pub u_after: f64,
    pub p_before: f64,
    pub p_after: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsTrace {
    /// Accepted strategy replacements, in order.
    pub steps: Vec<DynamicsStep>,
    pub converged: bool,
    pub rounds_used: u32,
}

impl DynamicsTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,firm,u_before,u_after,p_before,p_after\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.round,
                s.firm,
                sig12(s.u_before),
                sig12(s.u_after),
                sig12(s.p_before),
                sig12(s.p_after)
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Potential.

/// The exact potential P = ∫ Σ_{j=1}^{M(s)} U_j(s) φ(s) ds: a unilateral
/// strategy change moves P by exactly the firm's utility change.
pub fn potential(profile: &StrategyProfile, inst: &Instance) -> Result<f64> {
    let mut total = 0.0;
    for band in profile.bands() {
        if band.m == 0 {
            continue;
        }
        match inst.scheme {
            DecisionScheme::Correlated => {
                // Σ_{j<=m} s/j = s·H_m integrates in closed form.
                let h: f64 = (1..=band.m).map(|j| 1.0 / j as f64).sum();
                total += h * inst.dist.first_moment(band.lo, band.hi)?;
            }
            DecisionScheme::Independent => {
                let m = band.m;
                total += inst.dist.integrate_weighted(
                    |s| (1..=m).map(|j| u_of(j, s, inst.scheme)).sum(),
                    band.lo,
                    band.hi,
                )?;
            }
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Best response.

/// Multiplicity bands of everyone except `skip`.
fn bands_excluding(profile: &StrategyProfile, skip: usize) -> Vec<Band> {
    let own = profile.strategies()[skip].intervals();
    let mut cuts = vec![0.0, 1.0];
    for b in profile.bands() {
        cuts.push(b.lo);
        cuts.push(b.hi);
    }
    for iv in own {
        cuts.push(iv.lo);
        cuts.push(iv.hi);
    }
    cuts.retain(|x| (0.0..=1.0).contains(x));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bands: Vec<Band> = Vec::new();
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let mut m = profile.multiplicity_at(mid);
        if profile.strategies()[skip].contains(mid) {
            m -= 1;
        }
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

/// Utility of an interval set against fixed opponents: on a band where
/// m others interview, held scores pay U_{m+1}.
fn utility_on(intervals: &[Interval], minus_bands: &[Band], inst: &Instance) -> Result<f64> {
    let mut total = 0.0;
    for band in minus_bands {
        for iv in intervals {
            let lo = iv.lo.max(band.lo);
            let hi = iv.hi.min(band.hi);
            if lo < hi {
                total += band_utility_integral(band.m + 1, lo, hi, inst)?;
            }
        }
    }
    Ok(total)
}

/// Selects {s : g(s) > λ} of mass exactly c where g(s) = U_{m+1}(s) on a
/// band where m opponents interview. λ comes from bisection; a final trim
/// at the marginal cut pins the mass to c.
fn best_response_against(minus_bands: &[Band], inst: &Instance) -> Result<(Vec<Interval>, f64)> {
    let c = inst.capacity;
    let scheme = inst.scheme;
    let dist = &inst.dist;
    // Selection start inside one band at level λ, or None when the whole
    // band falls below λ.
    let cut_in = |band: &Band, lambda: f64| -> Option<f64> {
        let depth = band.m + 1;
        if lambda >= u_of(depth, band.hi, scheme) {
            return None;
        }
        if lambda <= u_of(depth, band.lo, scheme) {
            return Some(band.lo);
        }
        Some(inv_u(depth, lambda, scheme).clamp(band.lo, band.hi))
    };
    let mass_above = |lambda: f64| -> f64 {
        minus_bands
            .iter()
            .filter_map(|b| cut_in(b, lambda).map(|x| dist.cdf(b.hi) - dist.cdf(x)))
            .sum()
    };
    let lambda = bisect(0.0, 1.0, |l| mass_above(l) - c, 0.0, 200)?;

    let mut pieces: Vec<(usize, f64)> = Vec::new(); // (band index, selection start)
    for (i, b) in minus_bands.iter().enumerate() {
        if let Some(x) = cut_in(b, lambda) {
            if x < b.hi {
                pieces.push((i, x));
            }
        }
    }
    let mut excess: f64 = pieces
        .iter()
        .map(|&(i, x)| dist.cdf(minus_bands[i].hi) - dist.cdf(x))
        .sum::<f64>()
        - c;
    // Trim the marginal pieces (smallest utility at the cut) until the
    // residual from λ-bisection is absorbed.
    if excess.abs() > 1e-15 {
        let mut order: Vec<usize> = (0..pieces.len()).collect();
        order.sort_by(|&a, &b| {
            let ga = u_of(minus_bands[pieces[a].0].m + 1, pieces[a].1, scheme);
            let gb = u_of(minus_bands[pieces[b].0].m + 1, pieces[b].1, scheme);
            ga.total_cmp(&gb).then(a.cmp(&b))
        });
        for &pi in &order {
            if excess.abs() <= 1e-15 {
                break;
            }
            let (bi, x) = pieces[pi];
            let band = &minus_bands[bi];
            let shifted = dist.cdf(x) + excess;
            if shifted >= dist.cdf(band.hi) {
                // Piece vanishes; push the rest of the excess onward.
                excess -= dist.cdf(band.hi) - dist.cdf(x);
                pieces[pi].1 = band.hi;
            } else if shifted <= dist.cdf(band.lo) {
                // Piece saturates its band.
                excess += dist.cdf(x) - dist.cdf(band.lo);
                pieces[pi].1 = band.lo;
            } else {
                pieces[pi].1 = dist.quantile(shifted).clamp(band.lo, band.hi);
                excess = 0.0;
            }
        }
    }
    let intervals = normalize_intervals(
        pieces
            .iter()
            .filter(|&&(bi, x)| x < minus_bands[bi].hi)
            .map(|&(bi, x)| Interval {
                lo: x,
                hi: minus_bands[bi].hi,
            })
            .collect(),
    );
    let utility = utility_on(&intervals, minus_bands, inst)?;
    Ok((intervals, utility))
}

/// The firm's utility-maximizing strategy holding everyone else fixed.
pub fn best_response(profile: &StrategyProfile, firm: usize, inst: &Instance) -> Result<Strategy> {
    if firm >= profile.n_firms() {
        return Err(Error::InvalidArgument(format!(
            "firm index {firm} out of range for {} firms",
            profile.n_firms()
        )));
    }
    let minus = bands_excluding(profile, firm);
    let (intervals, _) = best_response_against(&minus, inst)?;
    Ok(Strategy::from_normalized(intervals, &inst.dist))
}

// ---------------------------------------------------------------------------
// Round-robin best-response dynamics.

/// Firms revise in index order, adopting a best response whenever it gains
/// more than ε·c. Stops after a full quiet round, or after `max_rounds`
/// with `converged = false`.
pub fn run_best_response_dynamics(
    inst: &Instance,
    init: &StrategyProfile,
    epsilon: f64,
    max_rounds: u32,
) -> Result<(StrategyProfile, DynamicsTrace)> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if max_rounds == 0 {
        return Err(Error::InvalidArgument("max_rounds must be at least 1".into()));
    }
    init.check_capacity(inst)?;
    let mut current = init.clone();
    let mut current_potential = potential(&current, inst)?;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut rounds_used = 0;
    for round in 1..=max_rounds {
        rounds_used = round;
        let mut updated = false;
        for firm in 0..current.n_firms() {
            let minus = bands_excluding(&current, firm);
            let u_before = utility_on(current.strategies()[firm].intervals(), &minus, inst)?;
            let (intervals, u_after) = best_response_against(&minus, inst)?;
            if u_after - u_before > epsilon * inst.capacity {
                let next = current.with_strategy(
                    firm,
                    Strategy::from_normalized(intervals, &inst.dist),
                )?;
                let p_after = potential(&next, inst)?;
                steps.push(DynamicsStep {
                    round,
                    firm,
                    u_before,
                    u_after,
                    p_before: current_potential,
                    p_after,
                });
                current = next;
                current_potential = p_after;
                updated = true;
            }
        }
        if !updated {
            converged = true;
            break;
        }
    }
    Ok((
        current,
        DynamicsTrace {
            steps,
            converged,
            rounds_used,
        },
    ))
}

// ---------------------------------------------------------------------------
// One-turn lookahead dynamics.

/// Capacity bound under which each entry step of the independent scheme
/// provably refines: c0 = δ·min(1/2, min_m gap between consecutive
/// uniform-market thresholds at n firms).
pub fn c0_bound(n_firms: u32, delta: f64) -> Result<f64> {
    if n_firms < 1 {
        return Err(Error::InvalidArgument("need at least one firm".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let nf = n_firms as f64 + 1.0;
    let gap = (1..=n_firms)
        .map(|m| {
            let a = (1.0 - m as f64 / nf).powf(1.0 / m as f64);
            let b = (1.0 - (m as f64 + 1.0) / nf).powf(1.0 / (m as f64 + 1.0));
            a - b
        })
        .fold(f64::INFINITY, f64::min);
    Ok((0.5 * delta).min(delta * gap))
}

fn check_entry_preconditions(taus: &[f64], inst: &Instance) -> Result<()> {
    match inst.scheme {
        DecisionScheme::Correlated => {
            let bound = 0.5 * inst.dist.delta();
            if inst.capacity > bound + 1e-12 {
                return Err(Error::Precondition(format!(
                    "one-turn entry under the correlated scheme requires capacity <= delta/2 \
                     = {bound}; got {}",
                    inst.capacity
                )));
            }
        }
        DecisionScheme::Independent => {
            let k = (taus.len() - 2) as u32;
            let bound = c0_bound(k, inst.dist.delta())?;
            if inst.capacity > bound + 1e-12 {
                return Err(Error::Precondition(format!(
                    "one-turn entry under the independent scheme at {k} incumbent firms \
                     requires capacity <= c0_bound({k}, delta) = {bound}; got {}",
                    inst.capacity
                )));
            }
            let m_max = m_max_of(taus);
            let floor = 1.0 / (m_max as f64 + 1.0);
            if taus[1] <= floor {
                return Err(Error::Precondition(format!(
                    "one-turn entry under the independent scheme requires tau_1 > \
                     1/(m_max+1) = {floor}; got tau_1 = {}",
                    taus[1]
                )));
            }
        }
    }
    Ok(())
}

/// One entering firm's strategy against an incumbent equal-utility
/// equilibrium: thresholds re-solve at a lower common level and the
/// entrant takes the vacated slices.
pub fn one_turn_step(current: &EquilibriumSolution, inst: &Instance) -> Result<Strategy> {
    if current.kind != SolutionKind::EqualUtility {
        return Err(Error::Precondition(
            "one-turn entry requires an equal-utility incumbent solution".into(),
        ));
    }
    if current.profile.n_firms() >= inst.n_firms as usize {
        return Err(Error::InvalidArgument(format!(
            "market already holds {} firms of {}",
            current.profile.n_firms(),
            inst.n_firms
        )));
    }
    check_entry_preconditions(&current.thresholds.thresholds, inst)?;
    let r = refine_level_and_strategy(
        &current.thresholds.thresholds,
        current.thresholds.level,
        inst,
    )?;
    Ok(Strategy::from_normalized(
        normalize_intervals(r.entrant),
        &inst.dist,
    ))
}

/// Grows the market one firm at a time from a single incumbent, each
/// entrant playing its one-turn strategy. Every intermediate state is an
/// equal-utility equilibrium; the final one is verified.
pub fn run_one_turn_dynamics(inst: &Instance) -> Result<(EquilibriumSolution, DynamicsTrace)> {
    let s_c = inst.dist.top_mass_threshold(inst.capacity)?;
    let mut strategies = vec![Strategy::new(&[(s_c, 1.0)], &inst.dist)?];
    let mut taus = vec![0.0, s_c, 1.0];
    let mut level = s_c;
    let mut profile = StrategyProfile::new(strategies.clone());
    let mut p_before = 0.0;
    let mut p_after = potential(&profile, inst)?;
    let mut steps = vec![DynamicsStep {
        round: 1,
        firm: 0,
        u_before: 0.0,
        u_after: crate::market_model::firm_utility(&profile, 0, inst)?,
        p_before,
        p_after,
    }];
    for k in 1..inst.n_firms as usize {
        check_entry_preconditions(&taus, inst)?;
        let r = refine_level_and_strategy(&taus, level, inst)?;
        strategies.push(Strategy::from_normalized(
            normalize_intervals(r.entrant),
            &inst.dist,
        ));
        taus = r.taus;
        level = r.level;
        profile = StrategyProfile::new(strategies.clone());
        p_before = p_after;
        p_after = potential(&profile, inst)?;
        steps.push(DynamicsStep {
            round: k as u32 + 1,
            firm: k,
            u_before: 0.0,
            u_after: crate::market_model::firm_utility(&profile, k, inst)?,
            p_before,
            p_after,
        });
    }
    let m_max = m_max_of(&taus);
    let solution = EquilibriumSolution {
        thresholds: ThresholdSet {
            level,
            thresholds: taus,
            m_max,
        },
        profile,
        kind: SolutionKind::EqualUtility,
        scheme: inst.scheme,
        fallback_used: false,
    };
    let report = crate::equilibrium::verify_equilibrium(&solution.profile, inst, 1e-6)?;
    if !report.is_equilibrium {
        return Err(Error::Numerical(format!(
            "one-turn dynamics ended off-equilibrium: max gain {}, {} violations",
            report.max_deviation_gain,
            report.condition_violations.len()
        )));
    }
    let rounds_used = inst.n_firms;
    Ok((
        solution,
        DynamicsTrace {
            steps,
            converged: true,
            rounds_used,
        },
    ))
}
