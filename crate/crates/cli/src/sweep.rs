//! Welfare-ratio sweeps over an N or c axis.
//!
//! Both sweep commands emit the same table; they differ only in the default
//! artifact name and the summary line. One row per grid value:
//! `n,c,scheme,dist,sw_naive,sw_ne,sw_max,pons,poa,status`. A row whose
//! computation fails carries the error in `status` and the sweep continues.
//! Rows are computed in parallel and written in grid order, so identical
//! configs produce byte-identical files.

use hiregame::equilibrium::{sw_max, sw_ne, sw_naive};
use hiregame::numfmt::sig12;
use hiregame::score_dist::DensityKind;
use hiregame::{DecisionScheme, Instance, ScoreDistribution};
use rayon::prelude::*;

use crate::config::{usage, Result, Settings};
use crate::model::{build_dist, parse_scheme};
use crate::output::{artifact_path, write_text};

pub enum Axis {
    Firms,
    Capacity,
}

struct Row {
    n: u32,
    c: f64,
    welfare: std::result::Result<(f64, f64, f64), String>,
}

fn kind_str(kind: DensityKind) -> &'static str {
    match kind {
        DensityKind::Uniform => "uniform",
        DensityKind::PiecewiseConstant => "piecewise-constant",
        DensityKind::PiecewiseLinear => "piecewise-linear",
    }
}

fn compute_row(n: u32, c: f64, dist: &ScoreDistribution, scheme: DecisionScheme) -> Row {
    let welfare = (|| {
        let inst = Instance::new(n, c, dist.clone(), scheme)?;
        Ok((sw_naive(&inst)?, sw_ne(&inst)?, sw_max(&inst)?))
    })()
    .map_err(|e: hiregame::Error| e.to_string().replace(',', ";"));
    Row { n, c, welfare }
}

pub fn run(settings: &Settings, default_name: &str, headline: &str) -> Result<()> {
    let axis = match settings.require("axis")? {
        "n" => Axis::Firms,
        "c" => Axis::Capacity,
        other => return Err(usage(format!("bad value for `axis`: {other:?} (expected n or c)"))),
    };
    let scheme = parse_scheme(settings.get("scheme").unwrap_or("correlated"))?;
    let dist = build_dist(settings)?;
    let points: Vec<(u32, f64)> = match axis {
        Axis::Firms => {
            let c: f64 = settings.req_parsed("c")?;
            settings
                .req_list::<u32>("grid")?
                .into_iter()
                .map(|n| (n, c))
                .collect()
        }
        Axis::Capacity => {
            let n: u32 = settings.req_parsed("n")?;
            settings
                .req_list::<f64>("grid")?
                .into_iter()
                .map(|c| (n, c))
                .collect()
        }
    };

    let rows: Vec<Row> = points
        .par_iter()
        .map(|&(n, c)| compute_row(n, c, &dist, scheme))
        .collect();

    let mut csv = String::from("n,c,scheme,dist,sw_naive,sw_ne,sw_max,pons,poa,status\n");
    let mut failures = 0usize;
    let mut last_ok: Option<(f64, f64)> = None;
    for row in &rows {
        match &row.welfare {
            Ok((naive, ne, mx)) => {
                let pons = ne / naive;
                let poa = mx / ne;
                last_ok = Some((pons, poa));
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},ok\n",
                    row.n,
                    sig12(row.c),
                    scheme.as_str(),
                    kind_str(dist.kind()),
                    sig12(*naive),
                    sig12(*ne),
                    sig12(*mx),
                    sig12(pons),
                    sig12(poa),
                ));
            }
            Err(msg) => {
                failures += 1;
                csv.push_str(&format!(
                    "{},{},{},{},,,,,,{}\n",
                    row.n,
                    sig12(row.c),
                    scheme.as_str(),
                    kind_str(dist.kind()),
                    msg
                ));
            }
        }
    }
    let path = artifact_path(settings, default_name);
    write_text(&path, &csv)?;
    let tail = match last_ok {
        Some((pons, poa)) => format!("last row pons = {}, poa = {}", sig12(pons), sig12(poa)),
        None => "no row succeeded".to_string(),
    };
    println!(
        "{headline}: {} rows ({} failed), {} -> {}",
        rows.len(),
        failures,
        tail,
        path.display()
    );
    Ok(())
}
