//! One function per subcommand. Each builds its inputs from the merged
//! settings, runs the engine, writes the artifact, and prints a one-line
//! summary to stdout.

use hiregame::dynamics::{run_best_response_dynamics, run_one_turn_dynamics};
use hiregame::equilibrium::{
    assign_firms, naive_capacity_for_welfare, ne_with_capacity_over_n,
    solve_equal_utility_thresholds, verify_equilibrium, EquilibriumSolution, SolutionKind,
};
use hiregame::estimation::{rows_to_csv, sweep_sample_complexity, PoolComparison};
use hiregame::market_model::{firm_utility, naive_profile, simulate_hiring, social_welfare};
use hiregame::numfmt::sig12;
use hiregame::{Error, Instance};
use serde_json::{json, Value};

use crate::config::{Result, Settings};
use crate::model::{
    build_dist, build_instance, instance_json, load_profile, parse_scheme, profile_json,
    report_json,
};
use crate::output::{artifact_path, write_json, write_text};

const DEFAULT_EPSILON: f64 = 1e-6;

fn kind_str(kind: SolutionKind) -> &'static str {
    match kind {
        SolutionKind::EqualUtility => "equal_utility",
        SolutionKind::VariableUtility => "variable_utility",
    }
}

/// Thresholds up to the first saturated one: [τ_0, ..., τ_{m_max+1}].
fn tau_list(sol: &EquilibriumSolution) -> Vec<f64> {
    let cut = (sol.thresholds.m_max as usize + 2).min(sol.thresholds.thresholds.len());
    sol.thresholds.thresholds[..cut].to_vec()
}

fn fmt_taus(taus: &[f64]) -> String {
    let inner: Vec<String> = taus.iter().map(|t| sig12(*t)).collect();
    format!("[{}]", inner.join(", "))
}

fn solution_json(sol: &EquilibriumSolution, inst: &Instance, report: &Value) -> Value {
    json!({
        "instance": instance_json(inst),
        "level": sol.thresholds.level,
        "tau": tau_list(sol),
        "m_max": sol.thresholds.m_max,
        "kind": kind_str(sol.kind),
        "fallback_used": sol.fallback_used,
        "profile": profile_json(&sol.profile),
        "verification": report,
    })
}

pub fn solve(settings: &Settings) -> Result<()> {
    let inst = build_instance(settings)?;
    let epsilon = settings.f64_or("epsilon", DEFAULT_EPSILON)?;
    let ts = solve_equal_utility_thresholds(&inst)?;
    let sol = assign_firms(&ts, &inst)?;
    let report = verify_equilibrium(&sol.profile, &inst, epsilon)?;
    let path = artifact_path(settings, "solution.json");
    write_json(&path, solution_json(&sol, &inst, &report_json(&report)))?;
    println!(
        "solve: n={} c={} {} -> tau = {}, level = {}, kind = {}, verified = {} -> {}",
        inst.n_firms,
        sig12(inst.capacity),
        inst.scheme.as_str(),
        fmt_taus(&tau_list(&sol)),
        sig12(sol.thresholds.level),
        kind_str(sol.kind),
        report.is_equilibrium,
        path.display()
    );
    Ok(())
}

pub fn verify(settings: &Settings) -> Result<()> {
    let profile_path = settings.require("profile")?.to_string();
    let epsilon = settings.f64_or("epsilon", DEFAULT_EPSILON)?;
    let (profile, inst) = load_profile(std::path::Path::new(&profile_path), settings)?;
    let report = verify_equilibrium(&profile, &inst, epsilon)?;
    let path = artifact_path(settings, "verification.json");
    write_json(
        &path,
        json!({
            "instance": instance_json(&inst),
            "epsilon": epsilon,
            "profile": profile_json(&profile),
            "verification": report_json(&report),
        }),
    )?;
    println!(
        "verify: n={} c={} {} -> is_equilibrium = {}, max gain = {}, violations = {} -> {}",
        inst.n_firms,
        sig12(inst.capacity),
        inst.scheme.as_str(),
        report.is_equilibrium,
        sig12(report.max_deviation_gain),
        report.condition_violations.len(),
        path.display()
    );
    Ok(())
}

pub fn dynamics(settings: &Settings) -> Result<()> {
    let inst = build_instance(settings)?;
    let epsilon = settings.f64_or("epsilon", DEFAULT_EPSILON)?;
    let max_rounds = settings.u32_or("max-rounds", 200)?;
    let start = match settings.get("start") {
        None | Some("naive") => naive_profile(&inst)?,
        Some(path) => load_profile(std::path::Path::new(path), settings)?.0,
    };
    let (end, trace) = run_best_response_dynamics(&inst, &start, epsilon, max_rounds)?;
    let report = verify_equilibrium(&end, &inst, epsilon)?;
    let trace_path = artifact_path(settings, "dynamics_trace.csv");
    write_text(&trace_path, &trace.to_csv())?;
    let final_path = trace_path.with_file_name("dynamics_final.json");
    write_json(
        &final_path,
        json!({
            "instance": instance_json(&inst),
            "epsilon": epsilon,
            "converged": trace.converged,
            "rounds_used": trace.rounds_used,
            "steps": trace.steps.len(),
            "profile": profile_json(&end),
            "verification": report_json(&report),
        }),
    )?;
    println!(
        "dynamics: n={} c={} {} -> converged = {} in {} rounds, {} steps, \
         is_equilibrium = {} -> {}, {}",
        inst.n_firms,
        sig12(inst.capacity),
        inst.scheme.as_str(),
        trace.converged,
        trace.rounds_used,
        trace.steps.len(),
        report.is_equilibrium,
        trace_path.display(),
        final_path.display()
    );
    if !trace.converged {
        return Err(Error::NonConvergence {
            message: format!("best-response dynamics still improving after {max_rounds} rounds"),
            best: Some(Box::new(end)),
        }
        .into());
    }
    Ok(())
}

pub fn one_turn(settings: &Settings) -> Result<()> {
    let inst = build_instance(settings)?;
    let epsilon = settings.f64_or("epsilon", DEFAULT_EPSILON)?;
    let (sol, trace) = run_one_turn_dynamics(&inst)?;
    let report = verify_equilibrium(&sol.profile, &inst, epsilon)?;
    let path = artifact_path(settings, "one_turn.json");
    write_json(&path, solution_json(&sol, &inst, &report_json(&report)))?;
    let trace_path = path.with_file_name("one_turn_trace.csv");
    write_text(&trace_path, &trace.to_csv())?;
    println!(
        "one-turn: n={} c={} {} -> tau = {}, level = {}, verified = {} -> {}, {}",
        inst.n_firms,
        sig12(inst.capacity),
        inst.scheme.as_str(),
        fmt_taus(&tau_list(&sol)),
        sig12(sol.thresholds.level),
        report.is_equilibrium,
        path.display(),
        trace_path.display()
    );
    Ok(())
}

pub fn simulate(settings: &Settings) -> Result<()> {
    let inst = build_instance(settings)?;
    let applicants: u64 = settings.get_parsed("applicants")?.unwrap_or(1_000_000);
    let seed: u64 = settings.get_parsed("seed")?.unwrap_or(0);
    let (profile, source) = match settings.get("profile") {
        None => {
            let ts = solve_equal_utility_thresholds(&inst)?;
            (assign_firms(&ts, &inst)?.profile, "equilibrium".to_string())
        }
        Some("naive") => (naive_profile(&inst)?, "naive".to_string()),
        Some(path) => (
            load_profile(std::path::Path::new(path), settings)?.0,
            path.to_string(),
        ),
    };
    let result = simulate_hiring(&profile, &inst, applicants, seed)?;
    let mut worst_sigmas = 0.0f64;
    let per_firm: Vec<Value> = result
        .per_firm
        .iter()
        .enumerate()
        .map(|(i, est)| {
            let analytic = firm_utility(&profile, i, &inst)?;
            let sigmas = if est.std_error > 0.0 {
                (est.estimate - analytic) / est.std_error
            } else {
                0.0
            };
            worst_sigmas = worst_sigmas.max(sigmas.abs());
            Ok(json!({
                "firm": i,
                "estimate": est.estimate,
                "std_error": est.std_error,
                "analytic": analytic,
                "sigmas": sigmas,
            }))
        })
        .collect::<Result<_>>()?;
    let welfare_analytic = social_welfare(&profile, &inst)?;
    let path = artifact_path(settings, "simulation.json");
    write_json(
        &path,
        json!({
            "instance": instance_json(&inst),
            "profile_source": source,
            "num_applicants": applicants,
            "seed": seed,
            "per_firm": per_firm,
            "welfare": {
                "estimate": result.welfare.estimate,
                "std_error": result.welfare.std_error,
                "analytic": welfare_analytic,
            },
        }),
    )?;
    println!(
        "simulate: n={} c={} {} applicants={} seed={} -> worst firm deviation {} sigma -> {}",
        inst.n_firms,
        sig12(inst.capacity),
        inst.scheme.as_str(),
        applicants,
        seed,
        sig12(worst_sigmas),
        path.display()
    );
    Ok(())
}

pub fn samples(settings: &Settings) -> Result<()> {
    let p1: f64 = settings.req_parsed("p1")?;
    let k_max = settings.u32_or("k-max", 10_000)?;
    if settings.get("p2-stop").is_some() || settings.get("q-list").is_some() {
        let p2_start: f64 = settings.req_parsed("p2")?;
        let p2_stop: f64 = settings.req_parsed("p2-stop")?;
        let p2_step = settings.f64_or("p2-step", 0.01)?;
        let q_list: Vec<f64> = settings.req_list("q-list")?;
        let rows = sweep_sample_complexity(p1, (p2_start, p2_stop, p2_step), &q_list, k_max)?;
        let path = artifact_path(settings, "samples.csv");
        write_text(&path, &rows_to_csv(&rows))?;
        let unresolved = rows.iter().filter(|r| r.k.is_none()).count();
        println!(
            "samples: p1={} p2={}..{} step {} q={:?} -> {} rows ({} unresolved) -> {}",
            sig12(p1),
            sig12(p2_start),
            sig12(p2_stop),
            sig12(p2_step),
            q_list.iter().map(|q| sig12(*q)).collect::<Vec<_>>(),
            rows.len(),
            unresolved,
            path.display()
        );
    } else {
        let p2: f64 = settings.req_parsed("p2")?;
        let q: f64 = settings.req_parsed("q")?;
        let cmp = PoolComparison::solve(p1, p2, q, k_max)?;
        let path = artifact_path(settings, "samples.json");
        write_json(
            &path,
            json!({"p1": cmp.p1, "p2": cmp.p2, "q": cmp.q, "k_star": cmp.k_star}),
        )?;
        println!(
            "samples: p1={} p2={} q={} -> k = {} -> {}",
            sig12(p1),
            sig12(p2),
            sig12(q),
            cmp.k_star,
            path.display()
        );
    }
    Ok(())
}

pub fn flexcap(settings: &Settings) -> Result<()> {
    let w: f64 = settings.req_parsed("welfare")?;
    let n_list: Vec<u32> = settings.req_list("n-list")?;
    let scheme = parse_scheme(settings.get("scheme").unwrap_or("correlated"))?;
    let dist = build_dist(settings)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in &n_list {
        let naive_c = naive_capacity_for_welfare(w, n, &dist, scheme)?;
        let outcome = ne_with_capacity_over_n(w, n, &dist, scheme)?;
        rows.push(json!({
            "n": n,
            "naive_per_firm_capacity": naive_c,
            "naive_total_capacity": naive_c * n as f64,
            "total_capacity": outcome.total_capacity,
            "per_firm_capacity": outcome.per_firm_capacity,
            "threshold": outcome.threshold,
            "welfare": outcome.welfare,
        }));
    }
    let path = artifact_path(settings, "flexcap.json");
    write_json(
        &path,
        json!({
            "welfare_target": w,
            "scheme": scheme.as_str(),
            "outcomes": rows,
        }),
    )?;
    println!(
        "flexcap: W={} {} over n = {:?} -> {}",
        sig12(w),
        scheme.as_str(),
        n_list,
        path.display()
    );
    Ok(())
}
