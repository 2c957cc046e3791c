//! Browser bindings for the hiring-game engine. Each export takes plain
//! scalars, runs on a uniform score distribution, and returns a JSON string;
//! failures come back as `{"error": "..."}` so the page never has to catch.

use hiregame::equilibrium::{solve_equal_utility_thresholds, sw_max, sw_naive, sw_ne};
use hiregame::market_model::{DecisionScheme, Instance};
use hiregame::numfmt::round_sig12;
use hiregame::score_dist::ScoreDistribution;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

fn err_json(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn parse_scheme(raw: &str) -> Result<DecisionScheme, String> {
    raw.parse::<DecisionScheme>().map_err(|e| e.to_string())
}

fn instance(n: u32, c: f64, scheme: DecisionScheme) -> Result<Instance, String> {
    let dist = ScoreDistribution::uniform();
    Instance::new(n, c, dist, scheme).map_err(|e| e.to_string())
}

fn r(x: f64) -> Value {
    json!(round_sig12(x))
}

/// Equilibrium thresholds and welfare for one instance.
#[wasm_bindgen]
pub fn solve_json(n: u32, c: f64, scheme: &str) -> String {
    let run = || -> Result<Value, String> {
        let scheme = parse_scheme(scheme)?;
        let inst = instance(n, c, scheme)?;
        let ts = solve_equal_utility_thresholds(&inst).map_err(|e| e.to_string())?;
        let shown = (ts.m_max as usize + 2).min(ts.thresholds.len());
        let naive = sw_naive(&inst).map_err(|e| e.to_string())?;
        let ne = sw_ne(&inst).map_err(|e| e.to_string())?;
        let mx = sw_max(&inst).map_err(|e| e.to_string())?;
        Ok(json!({
            "n": n,
            "c": r(c),
            "scheme": scheme.as_str(),
            "tau": ts.thresholds[..shown].iter().map(|&t| r(t)).collect::<Vec<_>>(),
            "level": r(ts.level),
            "m_max": ts.m_max,
            "sw_naive": r(naive),
            "sw_ne": r(ne),
            "sw_max": r(mx),
            "pons": r(ne / naive),
            "poa": r(mx / ne),
        }))
    };
    match run() {
        Ok(v) => v.to_string(),
        Err(e) => err_json(e),
    }
}

/// Price of monoculture and price of anarchy as the market grows, n = 1..=n_max.
#[wasm_bindgen]
pub fn pons_curve_json(c: f64, scheme: &str, n_max: u32) -> String {
    let run = || -> Result<Value, String> {
        let scheme = parse_scheme(scheme)?;
        if n_max == 0 || n_max > 200 {
            return Err(format!("n_max must lie in 1..=200, got {n_max}"));
        }
        let mut rows = Vec::new();
        for n in 1..=n_max {
            let inst = instance(n, c, scheme)?;
            let ne = sw_ne(&inst).map_err(|e| e.to_string())?;
            let naive = sw_naive(&inst).map_err(|e| e.to_string())?;
            let mx = sw_max(&inst).map_err(|e| e.to_string())?;
            rows.push(json!({ "n": n, "pons": r(ne / naive), "poa": r(mx / ne) }));
        }
        Ok(json!({ "c": r(c), "scheme": scheme.as_str(), "rows": rows }))
    };
    match run() {
        Ok(v) => v.to_string(),
        Err(e) => err_json(e),
    }
}

/// Smallest per-pool sample count that identifies the better applicant pool
/// with the asked-for confidence.
#[wasm_bindgen]
pub fn min_samples_json(p1: f64, p2: f64, q: f64, k_max: u32) -> String {
    match hiregame::estimation::PoolComparison::solve(p1, p2, q, k_max) {
        Ok(cmp) => json!({ "p1": r(p1), "p2": r(p2), "q": r(q), "k": cmp.k_star }).to_string(),
        Err(e) => err_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parsed(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn solve_matches_reference_instance() {
        let doc = parsed(&solve_json(2, 0.2, "correlated"));
        assert!(doc.get("error").is_none(), "{doc}");
        let tau: Vec<f64> = doc["tau"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert!((tau[1] - 0.6).abs() < 1e-9);
        assert!((doc["pons"].as_f64().unwrap() - 16.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn curve_rows_cover_the_range() {
        let doc = parsed(&pons_curve_json(0.2, "independent", 6));
        let rows = doc["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0]["n"], 1);
        assert!((rows[0]["pons"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        for row in rows {
            assert!(row["pons"].as_f64().unwrap() >= 1.0 - 1e-12);
            assert!(row["poa"].as_f64().unwrap() >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn min_samples_reports_k_or_error() {
        let doc = parsed(&min_samples_json(0.1, 0.15, 0.9, 10_000));
        assert_eq!(doc["k"], 162);
        let doc = parsed(&min_samples_json(0.1, 0.15, 0.9, 5));
        assert!(doc["error"].as_str().unwrap().contains("5"));
    }

    #[test]
    fn bad_inputs_surface_as_error_strings() {
        let doc = parsed(&solve_json(2, 1.5, "correlated"));
        assert!(doc["error"].as_str().unwrap().contains("capacity"));
        let doc = parsed(&solve_json(2, 0.2, "sideways"));
        assert!(doc.get("error").is_some());
        let doc = parsed(&pons_curve_json(0.2, "correlated", 0));
        assert!(doc.get("error").is_some());
    }
}
