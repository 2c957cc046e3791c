//! Instance and profile plumbing shared by the commands.

use hiregame::equilibrium::{ConditionViolation, VerificationReport};
use hiregame::market_model::parse_profile_text;
use hiregame::score_dist::DensityKind;
use hiregame::{DecisionScheme, Instance, ScoreDistribution, Strategy, StrategyProfile};
use serde_json::{json, Value};

use crate::config::{usage, Result, Settings};

pub fn parse_scheme(raw: &str) -> Result<DecisionScheme> {
    Ok(raw.parse::<DecisionScheme>()?)
}

pub fn build_dist(settings: &Settings) -> Result<ScoreDistribution> {
    let kind = settings.get("dist").unwrap_or("uniform");
    Ok(ScoreDistribution::from_config(
        kind,
        settings.get("breakpoints"),
        settings.get("values"),
    )?)
}

pub fn build_instance(settings: &Settings) -> Result<Instance> {
    let n: u32 = settings.req_parsed("n")?;
    let c: f64 = settings.req_parsed("c")?;
    let scheme = parse_scheme(settings.get("scheme").unwrap_or("correlated"))?;
    Ok(Instance::new(n, c, build_dist(settings)?, scheme)?)
}

fn kind_str(kind: DensityKind) -> &'static str {
    match kind {
        DensityKind::Uniform => "uniform",
        DensityKind::PiecewiseConstant => "piecewise-constant",
        DensityKind::PiecewiseLinear => "piecewise-linear",
    }
}

pub fn instance_json(inst: &Instance) -> Value {
    json!({
        "n": inst.n_firms,
        "c": inst.capacity,
        "scheme": inst.scheme.as_str(),
        "dist": {
            "kind": kind_str(inst.dist.kind()),
            "breakpoints": inst.dist.breakpoints(),
            "values": inst.dist.values(),
        },
    })
}

/// Per-firm interval lists as `[[ [lo, hi], ... ], ...]`.
pub fn profile_json(profile: &StrategyProfile) -> Value {
    Value::Array(
        profile
            .strategies()
            .iter()
            .map(|f| {
                Value::Array(
                    f.intervals()
                        .iter()
                        .map(|iv| json!([iv.lo, iv.hi]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn violation_json(v: &ConditionViolation) -> Value {
    json!({"condition": v.condition, "location": v.location, "detail": v.detail})
}

pub fn report_json(report: &VerificationReport) -> Value {
    json!({
        "is_equilibrium": report.is_equilibrium,
        "max_deviation_gain": report.max_deviation_gain,
        "violations": report.condition_violations.iter().map(violation_json).collect::<Vec<_>>(),
        "boundary_notes": report.boundary_notes,
    })
}

fn json_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| usage(format!("{what}: expected a number, got {v}")))
}

/// Rebuilds an instance from a solution file's `instance` object, with any
/// flag/config instance keys taking precedence.
pub fn instance_from_json(obj: &Value, settings: &Settings) -> Result<Instance> {
    let inst = obj
        .get("instance")
        .ok_or_else(|| usage("solution file has no `instance` object"))?;
    let n: u32 = match settings.get("n") {
        Some(_) => settings.req_parsed("n")?,
        None => json_f64(inst.get("n").unwrap_or(&Value::Null), "instance.n")? as u32,
    };
    let c: f64 = match settings.get("c") {
        Some(_) => settings.req_parsed("c")?,
        None => json_f64(inst.get("c").unwrap_or(&Value::Null), "instance.c")?,
    };
    let scheme = parse_scheme(match settings.get("scheme") {
        Some(s) => s,
        None => inst
            .get("scheme")
            .and_then(|v| v.as_str())
            .ok_or_else(|| usage("instance.scheme missing from solution file"))?,
    })?;
    let dist = if settings.get("dist").is_some() {
        build_dist(settings)?
    } else {
        let d = inst
            .get("dist")
            .ok_or_else(|| usage("instance.dist missing from solution file"))?;
        let kind = d
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| usage("instance.dist.kind missing"))?;
        if kind == "uniform" {
            ScoreDistribution::uniform()
        } else {
            let nums = |key: &str| -> Result<Vec<f64>> {
                d.get(key)
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| usage(format!("instance.dist.{key} missing")))?
                    .iter()
                    .map(|v| json_f64(v, key))
                    .collect()
            };
            let bp = nums("breakpoints")?;
            let vals = nums("values")?;
            match kind {
                "piecewise-constant" => ScoreDistribution::piecewise_constant(&bp, &vals)?,
                "piecewise-linear" => ScoreDistribution::piecewise_linear(&bp, &vals)?,
                other => return Err(usage(format!("unknown dist kind {other:?} in solution file"))),
            }
        }
    };
    Ok(Instance::new(n, c, dist, scheme)?)
}

/// Reads a profile from a solution JSON (`profile` field) or from the
/// one-firm-per-line text format.
pub fn load_profile(path: &std::path::Path, settings: &Settings) -> Result<(StrategyProfile, Instance)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read profile {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| usage(format!("{} is not valid JSON: {e}", path.display())))?;
        let inst = instance_from_json(&doc, settings)?;
        let firms = doc
            .get("profile")
            .and_then(|v| v.as_array())
            .ok_or_else(|| usage("solution file has no `profile` array"))?;
        let mut strategies = Vec::with_capacity(firms.len());
        for (i, firm) in firms.iter().enumerate() {
            let pairs: Vec<(f64, f64)> = firm
                .as_array()
                .ok_or_else(|| usage(format!("profile[{i}] is not an interval list")))?
                .iter()
                .map(|iv| {
                    let pair = iv
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .ok_or_else(|| usage(format!("profile[{i}]: intervals are [lo, hi] pairs")))?;
                    Ok((json_f64(&pair[0], "interval lo")?, json_f64(&pair[1], "interval hi")?))
                })
                .collect::<Result<_>>()?;
            strategies.push(Strategy::new(&pairs, &inst.dist)?);
        }
        Ok((StrategyProfile::new(strategies), inst))
    } else {
        let inst = build_instance(settings)?;
        let profile = parse_profile_text(&text, &inst.dist)?;
        Ok((profile, inst))
    }
}
