//! Score distributions: piecewise-polynomial densities on [0,1].
//!
//! The density is either uniform, constant per segment, or linear per
//! segment. All mass and first-moment queries use exact antiderivatives;
//! only [`ScoreDistribution::integrate_weighted`] resorts to quadrature,
//! because the weight function is caller-supplied.

use crate::numeric::{adaptive_simpson, bisect};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Uniform,
    PiecewiseConstant,
    PiecewiseLinear,
}

impl DensityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DensityKind::Uniform => "uniform",
            DensityKind::PiecewiseConstant => "piecewise-constant",
            DensityKind::PiecewiseLinear => "piecewise-linear",
        }
    }
}

/// A probability density on [0,1], normalized at construction.
///
/// `delta` is the certified pointwise lower bound of the density; every
/// supported family attains its minimum at a breakpoint, so it is computed
/// exactly. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ScoreDistribution {
    kind: DensityKind,
    breakpoints: Vec<f64>,
    // Per-segment constants (one fewer than breakpoints), or per-breakpoint
    // values for the linear family. Normalized so total mass is 1.
    density_values: Vec<f64>,
    delta: f64,
    // cum[i] = mass of [0, breakpoints[i]]; cum.last() == 1.0 exactly.
    cum: Vec<f64>,
}

impl ScoreDistribution {
    pub fn uniform() -> Self {
        // Constructed directly; normalization is trivially satisfied.
        ScoreDistribution {
            kind: DensityKind::Uniform,
            breakpoints: vec![0.0, 1.0],
            density_values: vec![1.0],
            delta: 1.0,
            cum: vec![0.0, 1.0],
        }
    }

    /// Constant density `values[k]` on segment `[breakpoints[k], breakpoints[k+1])`.
    pub fn piecewise_constant(breakpoints: &[f64], values: &[f64]) -> Result<Self> {
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::Validation(format!(
                "piecewise-constant needs one value per segment: got {} breakpoints and {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        Self::build(DensityKind::PiecewiseConstant, breakpoints, values)
    }

    /// Density interpolated linearly between `values[k]` at `breakpoints[k]`.
    pub fn piecewise_linear(breakpoints: &[f64], values: &[f64]) -> Result<Self> {
        if values.len() != breakpoints.len() {
            return Err(Error::Validation(format!(
                "piecewise-linear needs one value per breakpoint: got {} breakpoints and {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        Self::build(DensityKind::PiecewiseLinear, breakpoints, values)
    }

    /// Builds from the plain-text config fields: `kind`, and for the
    /// piecewise families comma-separated `breakpoints` and `values`.
    pub fn from_config(
        kind: &str,
        breakpoints: Option<&str>,
        values: Option<&str>,
    ) -> Result<Self> {
        match kind {
            "uniform" => {
                if breakpoints.is_some() || values.is_some() {
                    return Err(Error::Validation(
                        "uniform distribution takes no breakpoints or values".into(),
                    ));
                }
                Ok(Self::uniform())
            }
            "piecewise-constant" | "piecewise-linear" => {
                let bp = parse_list(breakpoints.ok_or_else(|| {
                    Error::Validation(format!("{kind} distribution requires breakpoints"))
                })?)?;
                let vals = parse_list(values.ok_or_else(|| {
                    Error::Validation(format!("{kind} distribution requires values"))
                })?)?;
                if kind == "piecewise-constant" {
                    Self::piecewise_constant(&bp, &vals)
                } else {
                    Self::piecewise_linear(&bp, &vals)
                }
            }
            other => Err(Error::Validation(format!(
                "unknown distribution kind {other:?}; expected uniform, piecewise-constant, or piecewise-linear"
            ))),
        }
    }

    fn build(kind: DensityKind, breakpoints: &[f64], values: &[f64]) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Validation(
                "breakpoints must contain at least 0 and 1".into(),
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::Validation(format!(
                "breakpoints must start at 0 and end at 1, got {:?}",
                breakpoints
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            // Zeros would break delta > 0, which the equilibrium arguments need.
            return Err(Error::Validation(
                "density values must be finite and strictly positive".into(),
            ));
        }

        let mut cum = vec![0.0; breakpoints.len()];
        for k in 0..breakpoints.len() - 1 {
            let w = breakpoints[k + 1] - breakpoints[k];
            let seg = match kind {
                DensityKind::PiecewiseLinear => 0.5 * (values[k] + values[k + 1]) * w,
                _ => values[k] * w,
            };
            cum[k + 1] = cum[k] + seg;
        }
        let total = *cum.last().unwrap();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::Validation(format!(
                "density does not integrate to a positive value (got {total})"
            )));
        }
        let density_values: Vec<f64> = values.iter().map(|v| v / total).collect();
        for c in cum.iter_mut() {
            *c /= total; // last entry becomes exactly 1.0
        }
        let delta = density_values.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(ScoreDistribution {
            kind,
            breakpoints: breakpoints.to_vec(),
            density_values,
            delta,
            cum,
        })
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    /// Certified lower bound: density(s) >= delta > 0 everywhere.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Normalized density values (per segment, or per knot when linear).
    pub fn values(&self) -> &[f64] {
        &self.density_values
    }

    /// Density at `s` (right-continuous; `s = 1` uses the last segment).
    pub fn density(&self, s: f64) -> f64 {
        let k = self.segment_of(s);
        match self.kind {
            DensityKind::PiecewiseLinear => {
                let x0 = self.breakpoints[k];
                let w = self.breakpoints[k + 1] - x0;
                let v0 = self.density_values[k];
                let v1 = self.density_values[k + 1];
                v0 + (v1 - v0) * (s - x0) / w
            }
            _ => self.density_values[k],
        }
    }

    fn segment_of(&self, s: f64) -> usize {
        // Last index k with breakpoints[k] <= s, capped to a valid segment.
        let k = self.breakpoints.partition_point(|b| *b <= s);
        k.saturating_sub(1).min(self.breakpoints.len() - 2)
    }

    /// Pr(S <= s), by exact antiderivative.
    pub fn cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        let k = self.segment_of(s);
        let x0 = self.breakpoints[k];
        let dx = s - x0;
        let part = match self.kind {
            DensityKind::PiecewiseLinear => {
                let w = self.breakpoints[k + 1] - x0;
                let v0 = self.density_values[k];
                let slope = (self.density_values[k + 1] - v0) / w;
                (v0 + 0.5 * slope * dx) * dx
            }
            _ => self.density_values[k] * dx,
        };
        self.cum[k] + part
    }

    /// Pr(S in [a,b)), exact for these families.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        Ok((self.cdf(b) - self.cdf(a)).max(0.0))
    }

    /// The threshold s_c with mass([s_c, 1]) = c, found by bisection.
    pub fn top_mass_threshold(&self, c: f64) -> Result<f64> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "capacity mass must lie in (0, 1], got {c}"
            )));
        }
        // cdf is strictly increasing (density > 0), so 1 - cdf(x) - c brackets.
        bisect(0.0, 1.0, |x| 1.0 - self.cdf(x) - c, 1e-15, 200)
    }

    /// ∫_a^b s φ(s) ds, by exact per-segment antiderivatives.
    pub fn first_moment(&self, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        let mut total = 0.0;
        for k in 0..self.breakpoints.len() - 1 {
            let lo = self.breakpoints[k].max(a);
            let hi = self.breakpoints[k + 1].min(b);
            if lo >= hi {
                continue;
            }
            total += match self.kind {
                DensityKind::PiecewiseLinear => {
                    let x0 = self.breakpoints[k];
                    let w = self.breakpoints[k + 1] - x0;
                    let v0 = self.density_values[k];
                    let slope = (self.density_values[k + 1] - v0) / w;
                    // φ(s) = p + slope·s with p = v0 - slope·x0
                    let p = v0 - slope * x0;
                    p * (hi * hi - lo * lo) / 2.0 + slope * (hi * hi * hi - lo * lo * lo) / 3.0
                }
                _ => self.density_values[k] * (hi * hi - lo * lo) / 2.0,
            };
        }
        Ok(total)
    }

    /// E[S] = ∫₀¹ s φ(s) ds.
    pub fn expected_score(&self) -> f64 {
        self.first_moment(0.0, 1.0).expect("full support is valid")
    }

    /// ∫_a^b g(s) φ(s) ds by adaptive quadrature, splitting at breakpoints
    /// so the integrand is smooth wherever g is. Absolute tolerance 1e-10.
    pub fn integrate_weighted<F>(&self, g: F, a: f64, b: f64) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        check_interval(a, b)?;
        if a == b {
            return Ok(0.0);
        }
        let mut cuts = vec![a];
        for &x in &self.breakpoints {
            if x > a && x < b {
                cuts.push(x);
            }
        }
        cuts.push(b);
        let tol = 1e-10 / cuts.len() as f64;
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += adaptive_simpson(|s| g(s) * self.density(s), w[0], w[1], tol)?;
        }
        Ok(total)
    }

    /// Inverse CDF: the s with cdf(s) = p, solved in closed form per segment.
    pub(crate) fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let k = self
            .cum
            .partition_point(|c| *c <= p)
            .saturating_sub(1)
            .min(self.breakpoints.len() - 2);
        let r = p - self.cum[k];
        let x0 = self.breakpoints[k];
        let w = self.breakpoints[k + 1] - x0;
        let v0 = self.density_values[k];
        let dx = match self.kind {
            DensityKind::PiecewiseLinear => {
                let slope = (self.density_values[k + 1] - v0) / w;
                // Solve 0.5·slope·dx² + v0·dx = r; the stable positive root.
                let disc = (v0 * v0 + 2.0 * slope * r).max(0.0);
                2.0 * r / (v0 + disc.sqrt())
            }
            _ => r / v0,
        };
        (x0 + dx).min(self.breakpoints[k + 1])
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= a <= b <= 1, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Validation(format!("could not parse number {:?}", tok.trim())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn step_dist() -> ScoreDistribution {
        // Density 2 on [0, 0.25), 2/3 on [0.25, 1]; already normalized.
        ScoreDistribution::piecewise_constant(&[0.0, 0.25, 1.0], &[2.0, 2.0 / 3.0]).unwrap()
    }

    fn tent_dist() -> ScoreDistribution {
        ScoreDistribution::piecewise_linear(&[0.0, 0.5, 1.0], &[0.5, 1.5, 0.5]).unwrap()
    }

    #[test]
    fn mass_uniform_interval() {
        let d = ScoreDistribution::uniform();
        assert!((d.mass(0.6, 1.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(d.mass(0.3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn mass_step_density() {
        let d = step_dist();
        assert!((d.mass(0.0, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.mass(0.25, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mass_rejects_bad_interval() {
        let d = ScoreDistribution::uniform();
        assert!(d.mass(0.5, 0.2).is_err());
        assert!(d.mass(-0.1, 0.5).is_err());
    }

    #[test]
    fn top_mass_threshold_examples() {
        let d = ScoreDistribution::uniform();
        assert!((d.top_mass_threshold(0.2).unwrap() - 0.8).abs() < 1e-12);
        assert!(d.top_mass_threshold(1.0).unwrap().abs() < 1e-12);
        let s = step_dist();
        assert!((s.top_mass_threshold(0.5).unwrap() - 0.25).abs() < 1e-12);
        assert!(s.top_mass_threshold(0.0).is_err());
        assert!(s.top_mass_threshold(1.5).is_err());
    }

    #[test]
    fn integrate_weighted_examples() {
        let d = ScoreDistribution::uniform();
        assert!((d.integrate_weighted(|s| s, 0.6, 1.0).unwrap() - 0.32).abs() < 1e-10);
        assert_eq!(d.integrate_weighted(|_| 0.0, 0.1, 0.9).unwrap(), 0.0);
        assert!((d.integrate_weighted(|s| s, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn integrate_weighted_reports_bad_integrand() {
        let d = ScoreDistribution::uniform();
        assert!(d.integrate_weighted(|s| 1.0 / (s - 0.5), 0.0, 1.0).is_err());
    }

    #[test]
    fn expected_score_values() {
        assert!((ScoreDistribution::uniform().expected_score() - 0.5).abs() < 1e-12);
        // Exact antiderivative: 2·(0.25²/2) + (2/3)·(1² − 0.25²)/2 = 0.375.
        assert!((step_dist().expected_score() - 0.375).abs() < 1e-12);
        // Symmetric density around 0.5.
        assert!((tent_dist().expected_score() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normalization_rescales_input() {
        let d = ScoreDistribution::piecewise_constant(&[0.0, 0.5, 1.0], &[6.0, 2.0]).unwrap();
        assert!((d.mass(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((d.density(0.25) - 1.5).abs() < 1e-15);
        assert!((d.density(0.75) - 0.5).abs() < 1e-15);
        assert!((d.delta() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(ScoreDistribution::piecewise_constant(&[0.0, 0.5], &[1.0]).is_err());
        assert!(ScoreDistribution::piecewise_constant(&[0.0, 0.5, 0.5, 1.0], &[1.0; 3]).is_err());
        assert!(ScoreDistribution::piecewise_constant(&[0.0, 0.5, 1.0], &[1.0, 0.0]).is_err());
        assert!(ScoreDistribution::piecewise_linear(&[0.0, 1.0], &[1.0]).is_err());
        assert!(ScoreDistribution::piecewise_constant(&[0.1, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn from_config_parses_families() {
        let d = ScoreDistribution::from_config(
            "piecewise-constant",
            Some("0, 0.25, 1"),
            Some("2, 0.6666666666666666"),
        )
        .unwrap();
        assert!((d.mass(0.0, 0.25).unwrap() - 0.5).abs() < 1e-12);
        assert!(ScoreDistribution::from_config("uniform", None, None).is_ok());
        assert!(ScoreDistribution::from_config("uniform", Some("0,1"), None).is_err());
        assert!(ScoreDistribution::from_config("gaussian", None, None).is_err());
        assert!(ScoreDistribution::from_config("piecewise-linear", None, Some("1")).is_err());
    }

    #[test]
    fn quantile_closed_form() {
        let d = step_dist();
        assert!((d.quantile(0.5) - 0.25).abs() < 1e-15);
        assert!((d.quantile(0.25) - 0.125).abs() < 1e-15);
        assert_eq!(d.quantile(0.0), 0.0);
        assert_eq!(d.quantile(1.0), 1.0);
    }

    fn arb_dist() -> impl Strategy<Value = ScoreDistribution> {
        let cuts = proptest::collection::vec(0.05f64..0.95, 0..4);
        let vals = proptest::collection::vec(0.1f64..5.0, 5);
        (cuts, vals, 0..3u8).prop_map(|(mut cuts, vals, kind)| {
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 0.01);
            let mut bp = vec![0.0];
            bp.extend(cuts);
            bp.push(1.0);
            match kind {
                0 => ScoreDistribution::uniform(),
                1 => ScoreDistribution::piecewise_constant(&bp, &vals[..bp.len() - 1]).unwrap(),
                _ => ScoreDistribution::piecewise_linear(&bp, &vals[..bp.len()]).unwrap(),
            }
        })
    }

    proptest! {
        #[test]
        fn total_mass_is_one(d in arb_dist()) {
            prop_assert!((d.mass(0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn mass_is_additive(d in arb_dist(), a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            let whole = d.mass(v[0], v[2]).unwrap();
            let split = d.mass(v[0], v[1]).unwrap() + d.mass(v[1], v[2]).unwrap();
            prop_assert!((whole - split).abs() < 1e-12);
        }

        #[test]
        fn top_mass_threshold_inverts_mass(d in arb_dist()) {
            for c in [0.01, 0.2, 0.5, 0.99] {
                let s = d.top_mass_threshold(c).unwrap();
                prop_assert!((d.mass(s, 1.0).unwrap() - c).abs() < 1e-10);
            }
        }

        #[test]
        fn unit_weight_matches_mass(d in arb_dist(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            let byquad = d.integrate_weighted(|_| 1.0, a, b).unwrap();
            prop_assert!((byquad - d.mass(a, b).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn density_respects_delta(d in arb_dist(), s in 0.0f64..=1.0) {
            prop_assert!(d.density(s) >= d.delta() - 1e-12);
        }

        #[test]
        fn quantile_inverts_cdf(d in arb_dist(), p in 0.0f64..1.0) {
            prop_assert!((d.cdf(d.quantile(p)) - p).abs() < 1e-12);
        }

        #[test]
        fn first_moment_matches_quadrature(d in arb_dist(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            let exact = d.first_moment(a, b).unwrap();
            let byquad = d.integrate_weighted(|s| s, a, b).unwrap();
            prop_assert!((exact - byquad).abs() < 1e-9);
        }
    }
}
