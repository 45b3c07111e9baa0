//! Monte-Carlo noise bench for the solvers on synthetic facing scenes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::projective::{join, HomPoint2};
use crate::scene::{add_noise, generate_scene, NoiseSpec, SceneConfig, SceneMode};
use crate::solvers::{solve_five, solve_four_with, solve_six, LineParam};
use crate::{ConicClass, Viewport};

pub const CSV_HEADER: &str = "method,sigma,median_px,p90_px,fail_rate";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    Solve4,
    Solve5,
    Solve6,
}

impl BenchMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BenchMethod::Solve4 => "solve4",
            BenchMethod::Solve5 => "solve5",
            BenchMethod::Solve6 => "solve6",
        }
    }
}

impl std::str::FromStr for BenchMethod {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve4" => Ok(BenchMethod::Solve4),
            "solve5" => Ok(BenchMethod::Solve5),
            "solve6" => Ok(BenchMethod::Solve6),
            other => Err(GeometryError::InvalidInput(format!("unknown bench method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub method: BenchMethod,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub perturb_epipole: bool,
    pub mode: SceneMode,
}

impl BenchConfig {
    pub fn new(method: BenchMethod, sigmas: Vec<f64>, trials: usize, seed: u64) -> Self {
        BenchConfig {
            method,
            sigmas,
            trials,
            seed,
            perturb_epipole: true,
            mode: SceneMode::Facing,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: BenchMethod,
    pub sigma: f64,
    pub median_px: f64,
    pub p90_px: f64,
    pub fail_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Pixel errors of the successful trials, per sigma, in trial order.
    pub errors: Vec<Vec<f64>>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(',')).unwrap();
        for r in &self.rows {
            w.write_record([
                r.method.name().to_string(),
                r.sigma.to_string(),
                r.median_px.to_string(),
                r.p90_px.to_string(),
                r.fail_rate.to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Linear-interpolated quantile of already sorted values; NaN when empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

fn pixel_error(est: &HomPoint2, truth: &HomPoint2) -> Option<f64> {
    let a = est.to_pixel()?;
    let b = truth.to_pixel()?;
    Some((a[0] - b[0]).hypot(a[1] - b[1]))
}

/// One trial: `None` when the solver fails.
fn run_trial(cfg: &BenchConfig, trial: usize, sigma: f64) -> Option<f64> {
    let scene_seed = cfg.seed.wrapping_add(trial as u64);
    let scene = generate_scene(&SceneConfig::random(cfg.mode, scene_seed)).ok()?;
    // Same draws for every sigma, so errors across sigmas are paired.
    let noise = NoiseSpec {
        sigma,
        seed: scene_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5EED,
        perturb_epipole: cfg.perturb_epipole,
    };
    let noisy = add_noise(&scene.corr, &noise).ok()?;
    let e = noisy.epipole?;
    match cfg.method {
        BenchMethod::Solve4 => {
            let corr = noisy.prefix(4);
            let [w, h] = scene.image_size;
            let sol = solve_four_with(&e, &corr, &Viewport::image(w, h), 16).ok()?;
            if sol.class != ConicClass::Nondegenerate {
                return None;
            }
            sol.conic.pixel().distance_to(&scene.e_prime_true)
        }
        BenchMethod::Solve5 => {
            let est = solve_five(&e, &noisy.prefix(5)).ok()?;
            pixel_error(&est.e_prime, &scene.e_prime_true)
        }
        BenchMethod::Solve6 => {
            let corr = noisy.prefix(6);
            let held_out = noisy.pairs.get(6)?.p;
            let line = join(&e, &held_out).ok()?;
            let pts = corr.points1();
            let cx = pts.iter().filter_map(|p| p.to_pixel()).map(|p| p[0]).sum::<f64>() / 6.0;
            let cy = pts.iter().filter_map(|p| p.to_pixel()).map(|p| p[1]).sum::<f64>() / 6.0;
            let lp = LineParam::from_line(line, [cx, cy], 0.5 * scene.image_size[0]).ok()?;
            let roots = solve_six(&lp, &corr).ok()?;
            pixel_error(&roots.first()?.e_prime, &scene.e_prime_true)
        }
    }
}

/// Per sigma: median and 90th percentile pixel error plus the failure rate.
///
/// solve5/solve6 measure the distance from the estimated to the true `e'`;
/// solve4 measures the distance from the true `e'` to the conic. Trial `k`
/// uses the facing scene with seed `seed + k`; trials run in parallel and
/// are reduced in trial order.
pub fn bench_noise(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.trials == 0 {
        return Err(GeometryError::InvalidInput("trials must be positive".into()));
    }
    if cfg.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(GeometryError::InvalidInput(
            "sigmas must be finite and non-negative".into(),
        ));
    }
    let mut rows = Vec::with_capacity(cfg.sigmas.len());
    let mut errors = Vec::with_capacity(cfg.sigmas.len());
    for &sigma in &cfg.sigmas {
        let results: Vec<Option<f64>> = (0..cfg.trials)
            .into_par_iter()
            .map(|k| run_trial(cfg, k, sigma).filter(|e| e.is_finite()))
            .collect();
        let ok: Vec<f64> = results.iter().flatten().copied().collect();
        let fails = results.len() - ok.len();
        let mut sorted = ok.clone();
        sorted.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            method: cfg.method,
            sigma,
            median_px: quantile(&sorted, 0.5),
            p90_px: quantile(&sorted, 0.9),
            fail_rate: fails as f64 / cfg.trials as f64,
        });
        errors.push(ok);
    }
    Ok(BenchReport { rows, errors })
}
