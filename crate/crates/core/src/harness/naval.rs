//! Synthetic maritime surveillance trajectories.
//!
//! Vessels start in the open sea (upper right of the `(x1, x2)` plane) and
//! move along piecewise-linear routes through randomised waypoints:
//!
//! * normal: two coastal waypoints, then the harbour. `x1` falls below the
//!   reference line 31.65 while `x2` is still above 22.46.
//! * red: a southern detour that takes `x2` below 22.46 while `x1` is still
//!   well east of 31.65, then the harbour.
//! * blue: approaches the coast, then turns back to sea without crossing
//!   `x1 = 31.65`.
//!
//! Every route keeps a margin of several noise standard deviations from both
//! reference lines, and each trace is checked against the reference formula
//! below before it is accepted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::stl::{parse, robustness, Formula, Trace};
use crate::{Error, Result};

/// A formula that separates the generated classes.
pub const REFERENCE_FORMULA: &str = "(x2 > 22.46) U[49,287] (x1 <= 31.65)";

const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavalGenConfig {
    pub n_normal: usize,
    pub n_anomalous_red: usize,
    pub n_anomalous_blue: usize,
    pub samples_per_trace: usize,
    pub horizon: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for NavalGenConfig {
    fn default() -> Self {
        NavalGenConfig {
            n_normal: 1000,
            n_anomalous_red: 500,
            n_anomalous_blue: 500,
            samples_per_trace: 61,
            horizon: 300.0,
            noise_std: 0.5,
            seed: 0,
        }
    }
}

impl NavalGenConfig {
    pub fn with_seed(seed: u64) -> Self {
        NavalGenConfig { seed, ..NavalGenConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_trace < 2 {
            return Err(Error::Config(format!("need at least 2 samples per trace, got {}", self.samples_per_trace)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise must be non-negative, got {}", self.noise_std)));
        }
        // Routes keep about 3.5 units from the reference lines.
        if self.noise_std > 1.0 {
            return Err(Error::Config(format!("noise {} too large for the route margins", self.noise_std)));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / (self.samples_per_trace - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VesselClass {
    Normal,
    Red,
    Blue,
}

/// A point `(time, x1, x2)` of a route.
type Waypoint = (f64, f64, f64);

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}

fn route<R: Rng + ?Sized>(class: VesselClass, rng: &mut R) -> Vec<Waypoint> {
    let start = (0.0, uniform(rng, 60.0, 75.0), uniform(rng, 40.0, 50.0));
    let mut pts = vec![start];
    match class {
        VesselClass::Normal => {
            let t1 = uniform(rng, 50.0, 110.0);
            pts.push((t1, uniform(rng, 36.0, 42.0), uniform(rng, 30.0, 36.0)));
            let t2 = t1 + uniform(rng, 30.0, 60.0);
            pts.push((t2, uniform(rng, 24.0, 28.0), uniform(rng, 26.0, 30.0)));
            let t3 = t2 + uniform(rng, 30.0, 70.0);
            pts.push((t3, uniform(rng, 10.0, 16.0), uniform(rng, 8.0, 14.0)));
        }
        VesselClass::Red => {
            let t1 = uniform(rng, 90.0, 200.0);
            pts.push((t1, uniform(rng, 44.0, 52.0), uniform(rng, 12.0, 18.0)));
            let t2 = t1 + uniform(rng, 40.0, 90.0);
            pts.push((t2, uniform(rng, 10.0, 16.0), uniform(rng, 8.0, 14.0)));
        }
        VesselClass::Blue => {
            let t1 = uniform(rng, 80.0, 150.0);
            pts.push((t1, uniform(rng, 38.0, 46.0), uniform(rng, 30.0, 38.0)));
            let t2 = t1 + uniform(rng, 80.0, 150.0);
            pts.push((t2, uniform(rng, 65.0, 80.0), uniform(rng, 45.0, 55.0)));
        }
    }
    pts
}

/// Position on the route at time `t`; the vessel holds its last waypoint.
fn position(route: &[Waypoint], t: f64) -> (f64, f64) {
    for w in route.windows(2) {
        let (t0, a1, a2) = w[0];
        let (t1, b1, b2) = w[1];
        if t <= t1 {
            let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            return (a1 + s * (b1 - a1), a2 + s * (b2 - a2));
        }
    }
    let (_, x1, x2) = *route.last().expect("route has a start");
    (x1, x2)
}

fn draw<R: Rng + ?Sized>(class: VesselClass, cfg: &NavalGenConfig, rng: &mut R) -> Result<Trace> {
    let r = route(class, rng);
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::Generator(e.to_string()))?;
    let dt = cfg.dt();
    let mut x1 = Vec::with_capacity(cfg.samples_per_trace);
    let mut x2 = Vec::with_capacity(cfg.samples_per_trace);
    for j in 0..cfg.samples_per_trace {
        let (p1, p2) = position(&r, j as f64 * dt);
        x1.push(p1 + noise.sample(rng));
        x2.push(p2 + noise.sample(rng));
    }
    Trace::new(vec!["x1".into(), "x2".into()], 0.0, dt, vec![x1, x2])
}

/// Draws one trace of `class`, redrawing until the reference formula gives
/// the expected verdict.
pub fn generate_trace<R: Rng + ?Sized>(
    class: VesselClass,
    cfg: &NavalGenConfig,
    reference: &Formula,
    rng: &mut R,
) -> Result<Trace> {
    for _ in 0..MAX_REDRAWS {
        let t = draw(class, cfg, rng)?;
        let rho = robustness(reference, &t, 0)?;
        let ok = match class {
            VesselClass::Normal => rho > 0.0,
            _ => rho < 0.0,
        };
        if ok {
            return Ok(t);
        }
    }
    Err(Error::Generator(format!(
        "could not draw a {class:?} trace consistent with `{REFERENCE_FORMULA}` in {MAX_REDRAWS} attempts"
    )))
}

/// Generates the labelled dataset: normal vessels positive, red and blue
/// anomalies negative.
pub fn generate_naval(cfg: &NavalGenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let reference = parse(REFERENCE_FORMULA)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut batch = |class, n| (0..n).map(|_| generate_trace(class, cfg, &reference, &mut rng)).collect::<Result<Vec<_>>>();
    let positives = batch(VesselClass::Normal, cfg.n_normal)?;
    let mut negatives = batch(VesselClass::Red, cfg.n_anomalous_red)?;
    negatives.extend(batch(VesselClass::Blue, cfg.n_anomalous_blue)?);
    let manifest = serde_json::json!({
        "schema_version": 1,
        "generator": "naval",
        "config": cfg,
        "reference_formula": REFERENCE_FORMULA,
    });
    Ok(Dataset::new(positives, negatives)?.with_manifest(manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NavalGenConfig {
        NavalGenConfig { n_normal: 30, n_anomalous_red: 15, n_anomalous_blue: 15, ..NavalGenConfig::with_seed(3) }
    }

    #[test]
    fn layout() {
        let d = generate_naval(&small()).unwrap();
        assert_eq!(d.positives().len(), 30);
        assert_eq!(d.negatives().len(), 30);
        assert_eq!(d.samples(), 61);
        assert_eq!(d.dt(), 5.0);
        assert_eq!(d.variables(), ["x1", "x2"]);
    }

    #[test]
    fn route_interpolation() {
        let r = vec![(0.0, 0.0, 10.0), (10.0, 10.0, 0.0)];
        assert_eq!(position(&r, 5.0), (5.0, 5.0));
        assert_eq!(position(&r, 50.0), (10.0, 0.0));
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_naval(&small()).unwrap(), generate_naval(&small()).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate_naval(&NavalGenConfig { samples_per_trace: 1, ..small() }).is_err());
        assert!(generate_naval(&NavalGenConfig { noise_std: -1.0, ..small() }).is_err());
    }
}
