//! Stochastic-geometry simulator for the downlink model.
//!
//! Each drop places the typical user at the origin and generates the BS
//! process radially: the squared distances `π λ_b r_k²` are partial sums of
//! unit exponentials, so the nearest point is the serving BS and enlarging the
//! window only appends points. Every drop and every fading sample reads from
//! its own ChaCha8 stream, which makes results independent of how drops are
//! scheduled across threads:
//!
//! | stream bits | use |
//! |---|---|
//! | `drop << 32 \| sample << 2 \| 0` | desired-link gain, sum of `M` unit exponentials |
//! | `drop << 32 \| sample << 2 \| 1` | one unit exponential per BS, in distance order |
//! | `drop << 32 \| 2` | BS geometry |
//! | `drop << 32 \| 3` | activity (thinning uniforms or user positions) |
//!
//! Inactive BSs still consume their interference draw, so the two activity
//! models see identical fading on every link.

use std::f64::consts::PI;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coverage::{CoverageError, NetworkConfig};

/// Default window radius in units of `1/√λ_b`.
pub const DEFAULT_WINDOW_SCALE: f64 = 20.0;

/// Expected BS count per drop below which estimates carry a warning.
pub const MIN_EXPECTED_BS: f64 = 50.0;

/// Share of mean interference lost to the window edge above which estimates
/// carry a warning.
pub const MAX_TAIL_SHARE: f64 = 0.01;

/// Guard band for active-probability estimation, in mean cell radii
/// `1/√(π λ_b)`.
pub const INTERIOR_GUARD_CELLS: f64 = 3.0;

const MAX_FADING_PER_DROP: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error("invalid Monte-Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("no interior base stations: window radius {window} is within the {guard} guard band")]
    NoInteriorStations { window: f64, guard: f64 },
    #[error("drop {drop} has neither interference nor noise; log2(1 + SINR) is unbounded")]
    UnboundedSinr { drop: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ActivityModel {
    /// A BS is active when its Voronoi cell holds at least one user of a
    /// user PPP of intensity `λ_u`.
    VoronoiOccupancy,
    /// Each interfering BS is active independently with probability `p_active`.
    IndependentThinning { p_active: f64 },
}

impl ActivityModel {
    /// Independent thinning at the closed-form activity of `network`.
    pub fn thinning_for(network: &NetworkConfig) -> Result<Self, McError> {
        Ok(ActivityModel::IndependentThinning {
            p_active: network.active_probability()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub network: NetworkConfig,
    pub window_radius: f64,
    pub n_drops: usize,
    pub n_fading_per_drop: usize,
    pub seed: u64,
    pub activity: ActivityModel,
}

impl McConfig {
    /// 1000 drops of 100 fading samples in a window of radius `20/√λ_b`.
    pub fn new(network: NetworkConfig, activity: ActivityModel) -> Self {
        Self {
            window_radius: DEFAULT_WINDOW_SCALE / network.lambda_b.sqrt(),
            network,
            n_drops: 1000,
            n_fading_per_drop: 100,
            seed: 0,
            activity,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, n_drops: usize, n_fading_per_drop: usize) -> Self {
        self.n_drops = n_drops;
        self.n_fading_per_drop = n_fading_per_drop;
        self
    }

    pub fn with_window_radius(mut self, window_radius: f64) -> Self {
        self.window_radius = window_radius;
        self
    }

    pub fn with_activity(mut self, activity: ActivityModel) -> Self {
        self.activity = activity;
        self
    }

    pub fn expected_stations(&self) -> f64 {
        self.network.lambda_b * PI * self.window_radius * self.window_radius
    }

    /// Mean interference from BSs beyond the window, relative to the mean
    /// interference from beyond the median serving distance `1/(2√λ_b)`.
    pub fn tail_share(&self) -> f64 {
        let median = 0.5 / self.network.lambda_b.sqrt();
        (median / self.window_radius).powf(self.network.alpha - 2.0)
    }

    pub fn validate(&self) -> Result<(), McError> {
        self.network.validate()?;
        let bad = |msg: String| Err(McError::InvalidConfig(msg));
        if !(self.window_radius > 0.0 && self.window_radius.is_finite()) {
            return bad(format!("window radius must be > 0, got {}", self.window_radius));
        }
        if self.n_drops == 0 || self.n_drops > u32::MAX as usize {
            return bad(format!("n_drops must be in [1, 2^32), got {}", self.n_drops));
        }
        if self.n_fading_per_drop == 0 || self.n_fading_per_drop > MAX_FADING_PER_DROP {
            return bad(format!(
                "n_fading_per_drop must be in [1, 2^30], got {}",
                self.n_fading_per_drop
            ));
        }
        if !(self.network.tx_power > 0.0 && self.network.tx_power.is_finite()) {
            return bad(format!("tx power must be > 0, got {}", self.network.tx_power));
        }
        if let ActivityModel::IndependentThinning { p_active } = self.activity {
            if !(p_active > 0.0 && p_active <= 1.0) {
                return bad(format!("p_active must be in (0, 1], got {p_active}"));
            }
        }
        Ok(())
    }

    fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let expected = self.expected_stations();
        if expected < MIN_EXPECTED_BS {
            out.push(format!(
                "only {expected:.1} BSs expected per drop (< {MIN_EXPECTED_BS}); enlarge the window"
            ));
        }
        let tail = self.tail_share();
        if tail > MAX_TAIL_SHARE {
            out.push(format!(
                "window truncates about {:.1}% of mean interference; estimates are biased low",
                100.0 * tail
            ));
        }
        if self.n_drops == 1 {
            out.push("single drop: standard error ignores correlation between fading samples".into());
        }
        out
    }
}

/// Monte-Carlo estimate with its standard error.
///
/// Drops are the independent replicates: `std_error` is the sample standard
/// deviation of per-drop means over `√n_drops`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub n_drops: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl McEstimate {
    fn from_drops(per_drop: &[f64], fallback: Option<&[f64]>, samples_per_drop: usize, cfg: &McConfig) -> Self {
        let n = per_drop.len();
        let mean = per_drop.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            sample_std(per_drop, mean) / (n as f64).sqrt()
        } else {
            // One drop: fall back to the per-sample spread.
            let samples = fallback.unwrap_or(per_drop);
            let m = samples.len();
            if m > 1 {
                sample_std(samples, mean) / (m as f64).sqrt()
            } else {
                0.0
            }
        };
        Self {
            mean,
            std_error,
            n_samples: n * samples_per_drop,
            n_drops: n,
            seed: cfg.seed,
            warnings: cfg.warnings(),
        }
    }

    /// `|mean − reference| ≤ k · std_error`.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.std_error
    }
}

fn sample_std(xs: &[f64], mean: f64) -> f64 {
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn drop_stream(seed: u64, drop: usize, kind: u64) -> ChaCha8Rng {
    stream(seed, (drop as u64) << 32 | kind)
}

fn fading_stream(seed: u64, drop: usize, sample: usize, kind: u64) -> ChaCha8Rng {
    stream(seed, (drop as u64) << 32 | (sample as u64) << 2 | kind)
}

/// BS distances and bearings of one drop, nearest first. The serving BS is
/// always present, even when it lies outside the window.
struct Geometry {
    distances: Vec<f64>,
    bearings: Vec<f64>,
}

impl Geometry {
    fn positions(&self) -> Vec<[f64; 2]> {
        self.distances
            .iter()
            .zip(&self.bearings)
            .map(|(r, t)| [r * t.cos(), r * t.sin()])
            .collect()
    }
}

fn geometry(cfg: &McConfig, drop: usize) -> Geometry {
    let mut rng = drop_stream(cfg.seed, drop, 2);
    let scale = 1.0 / (PI * cfg.network.lambda_b);
    let capacity = cfg.expected_stations().min(1e7).ceil() as usize + 16;
    let mut distances = Vec::with_capacity(capacity);
    let mut bearings = Vec::with_capacity(capacity);
    let mut area = 0.0;
    loop {
        let e: f64 = Exp1.sample(&mut rng);
        area += e;
        let theta = 2.0 * PI * rng.random::<f64>();
        let r = (area * scale).sqrt();
        if r > cfg.window_radius && !distances.is_empty() {
            break;
        }
        distances.push(r);
        bearings.push(theta);
    }
    Geometry { distances, bearings }
}

/// Activity mask over the BSs of `geo`; the serving BS is always active.
/// Also returns the per-BS user counts under Voronoi occupancy, which exclude
/// the typical user.
fn activity(cfg: &McConfig, model: ActivityModel, drop: usize, geo: &Geometry) -> (Vec<bool>, Option<Vec<u32>>) {
    let mut rng = drop_stream(cfg.seed, drop, 3);
    let n = geo.distances.len();
    match model {
        ActivityModel::IndependentThinning { p_active } => {
            let mut active: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < p_active).collect();
            active[0] = true;
            (active, None)
        }
        ActivityModel::VoronoiOccupancy => {
            let mut counts = vec![0u32; n];
            let mean_users = cfg.network.lambda_u * PI * cfg.window_radius * cfg.window_radius;
            let users = Poisson::new(mean_users).map(|p| p.sample(&mut rng)).unwrap_or(0.0) as usize;
            if users > 0 {
                let tree: ImmutableKdTree<f64, 2> =
                    ImmutableKdTree::new_from_slice(&geo.positions()).expect("BS slice is non-empty and finite");
                for _ in 0..users {
                    let r = cfg.window_radius * rng.random::<f64>().sqrt();
                    let theta = 2.0 * PI * rng.random::<f64>();
                    let hit = tree
                        .query(&[r * theta.cos(), r * theta.sin()])
                        .nearest_one::<SquaredEuclidean<f64>>()
                        .execute();
                    counts[hit.item as usize] += 1;
                }
            }
            let mut active: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
            active[0] = true;
            (active, Some(counts))
        }
    }
}

fn path_gains(cfg: &McConfig, geo: &Geometry) -> Vec<f64> {
    let p = cfg.network.tx_power;
    let a = cfg.network.alpha;
    geo.distances.iter().map(|r| p * r.powf(-a)).collect()
}

/// Calls `visit(sample, sinr_per_mask)` for every fading sample of `drop`.
fn for_each_fading(
    cfg: &McConfig,
    drop: usize,
    gains: &[f64],
    masks: &[&[bool]],
    mut visit: impl FnMut(&[f64]) -> Result<(), McError>,
) -> Result<(), McError> {
    let m = cfg.network.antennas;
    let noise = cfg.network.noise_power;
    let mut interference = vec![0.0; masks.len()];
    let mut sinr = vec![0.0; masks.len()];
    for s in 0..cfg.n_fading_per_drop {
        let mut desired_rng = fading_stream(cfg.seed, drop, s, 0);
        let desired: f64 = (0..m).map(|_| -> f64 { Exp1.sample(&mut desired_rng) }).sum::<f64>() * gains[0];
        let mut cross_rng = fading_stream(cfg.seed, drop, s, 1);
        interference.iter_mut().for_each(|x| *x = 0.0);
        for (j, &g) in gains.iter().enumerate().skip(1) {
            let h: f64 = Exp1.sample(&mut cross_rng);
            let term = h * g;
            for (k, mask) in masks.iter().enumerate() {
                if mask[j] {
                    interference[k] += term;
                }
            }
        }
        for k in 0..masks.len() {
            let denom = noise + interference[k];
            sinr[k] = if denom > 0.0 { desired / denom } else { f64::INFINITY };
        }
        visit(&sinr)?;
    }
    Ok(())
}

fn per_drop<F>(cfg: &McConfig, f: F) -> Result<Vec<Vec<f64>>, McError>
where
    F: Fn(usize) -> Result<Vec<f64>, McError> + Sync + Send,
{
    (0..cfg.n_drops).into_par_iter().map(f).collect()
}

/// Per-drop means and, for a single drop, per-sample values.
type ModelRows = (Vec<f64>, Vec<f64>);

/// Runs `observable(sinr)` over every drop and fading sample for each
/// activity model, returning per-drop means (and per-sample values when there
/// is a single drop).
fn simulate_sinr<O>(cfg: &McConfig, models: &[ActivityModel], observable: O) -> Result<Vec<ModelRows>, McError>
where
    O: Fn(f64, usize) -> Result<f64, McError> + Sync,
{
    cfg.validate()?;
    let keep_samples = cfg.n_drops == 1;
    let k = models.len();
    let rows = per_drop(cfg, |drop| {
        let geo = geometry(cfg, drop);
        let gains = path_gains(cfg, &geo);
        let masks: Vec<Vec<bool>> = models.iter().map(|&m| activity(cfg, m, drop, &geo).0).collect();
        let mask_refs: Vec<&[bool]> = masks.iter().map(|m| m.as_slice()).collect();
        let mut sums = vec![0.0; k];
        let mut samples = Vec::new();
        for_each_fading(cfg, drop, &gains, &mask_refs, |sinr| {
            for (i, &x) in sinr.iter().enumerate() {
                let v = observable(x, drop)?;
                sums[i] += v;
                if keep_samples {
                    samples.push(v);
                }
            }
            Ok(())
        })?;
        let n = cfg.n_fading_per_drop as f64;
        sums.iter_mut().for_each(|s| *s /= n);
        sums.extend(samples);
        Ok(sums)
    })?;

    Ok((0..k)
        .map(|i| {
            let means: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let samples: Vec<f64> = if keep_samples {
                rows[0][k..].iter().skip(i).step_by(k).copied().collect()
            } else {
                Vec::new()
            };
            (means, samples)
        })
        .collect())
}

fn estimate(cfg: &McConfig, series: &(Vec<f64>, Vec<f64>)) -> McEstimate {
    let fallback = (!series.1.is_empty()).then_some(series.1.as_slice());
    McEstimate::from_drops(&series.0, fallback, cfg.n_fading_per_drop, cfg)
}

fn check_threshold(threshold: f64) -> Result<(), McError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(McError::InvalidConfig(format!(
            "threshold must be finite and > 0, got {threshold}"
        )));
    }
    Ok(())
}

/// Empirical `P[SINR < T]` at the typical user.
pub fn simulate_outage(cfg: &McConfig, threshold: f64) -> Result<McEstimate, McError> {
    check_threshold(threshold)?;
    let series = simulate_sinr(cfg, &[cfg.activity], |sinr, _| {
        Ok(if sinr < threshold { 1.0 } else { 0.0 })
    })?;
    Ok(estimate(cfg, &series[0]))
}

/// Empirical `E[log2(1 + SINR)]`, bits/s/Hz.
pub fn simulate_spectral_efficiency(cfg: &McConfig) -> Result<McEstimate, McError> {
    let series = simulate_sinr(cfg, &[cfg.activity], |sinr, drop| {
        if sinr.is_finite() {
            Ok(sinr.ln_1p() / std::f64::consts::LN_2)
        } else {
            Err(McError::UnboundedSinr { drop })
        }
    })?;
    Ok(estimate(cfg, &series[0]))
}

/// Empirical mean of the desired-link beamforming gain (ideally `M`).
pub fn simulate_desired_gain(cfg: &McConfig) -> Result<McEstimate, McError> {
    cfg.validate()?;
    let m = cfg.network.antennas;
    let rows = per_drop(cfg, |drop| {
        let values: Vec<f64> = (0..cfg.n_fading_per_drop)
            .map(|s| {
                let mut rng = fading_stream(cfg.seed, drop, s, 0);
                (0..m).map(|_| -> f64 { Exp1.sample(&mut rng) }).sum::<f64>()
            })
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut row = vec![mean];
        if cfg.n_drops == 1 {
            row.extend(values);
        }
        Ok(row)
    })?;
    let means: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let fallback = (cfg.n_drops == 1).then(|| &rows[0][1..]);
    Ok(McEstimate::from_drops(&means, fallback, cfg.n_fading_per_drop, cfg))
}

/// Fraction of interior BSs whose Voronoi cell holds at least one user.
///
/// Interior means at least three mean cell radii inside the window edge. The
/// BS covering the origin is excluded, as its cell is size-biased.
pub fn simulate_active_probability(cfg: &McConfig) -> Result<McEstimate, McError> {
    cfg.validate()?;
    if cfg.activity != ActivityModel::VoronoiOccupancy {
        return Err(McError::InvalidConfig(
            "active probability is only defined for Voronoi occupancy".into(),
        ));
    }
    let guard = INTERIOR_GUARD_CELLS / (PI * cfg.network.lambda_b).sqrt();
    let inner = cfg.window_radius - guard;
    if inner <= 0.0 {
        return Err(McError::NoInteriorStations {
            window: cfg.window_radius,
            guard,
        });
    }
    let rows = per_drop(cfg, |drop| {
        let geo = geometry(cfg, drop);
        let (_, counts) = activity(cfg, ActivityModel::VoronoiOccupancy, drop, &geo);
        let counts = counts.expect("occupancy model returns counts");
        let (mut interior, mut occupied) = (0usize, 0usize);
        for (&d, &c) in geo.distances.iter().zip(&counts).skip(1) {
            if d <= inner {
                interior += 1;
                occupied += usize::from(c > 0);
            }
        }
        Ok(vec![interior as f64, occupied as f64])
    })?;
    let fractions: Vec<f64> = rows.iter().filter(|r| r[0] > 0.0).map(|r| r[1] / r[0]).collect();
    if fractions.is_empty() {
        return Err(McError::NoInteriorStations {
            window: cfg.window_radius,
            guard,
        });
    }
    let interior_total: f64 = rows.iter().map(|r| r[0]).sum();
    let mut est = McEstimate::from_drops(&fractions, None, 1, cfg);
    est.n_samples = interior_total as usize;
    if fractions.len() < cfg.n_drops {
        est.warnings.push(format!(
            "{} of {} drops had no interior BS and were skipped",
            cfg.n_drops - fractions.len(),
            cfg.n_drops
        ));
    }
    Ok(est)
}

/// Outage under Voronoi occupancy against independent thinning at the
/// closed-form activity, on common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityGap {
    pub threshold: f64,
    pub p_active: f64,
    pub voronoi: McEstimate,
    pub thinning: McEstimate,
    /// Paired `voronoi − thinning` difference.
    pub gap: McEstimate,
}

pub fn activity_gap_report(cfg: &McConfig, threshold: f64) -> Result<ActivityGap, McError> {
    check_threshold(threshold)?;
    let thinning = ActivityModel::thinning_for(&cfg.network)?;
    let p_active = match thinning {
        ActivityModel::IndependentThinning { p_active } => p_active,
        ActivityModel::VoronoiOccupancy => unreachable!(),
    };
    let models = [ActivityModel::VoronoiOccupancy, thinning];
    let series = simulate_sinr(cfg, &models, |sinr, _| Ok(if sinr < threshold { 1.0 } else { 0.0 }))?;
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let gap_series = (diff(&series[0].0, &series[1].0), diff(&series[0].1, &series[1].1));
    Ok(ActivityGap {
        threshold,
        p_active,
        voronoi: estimate(cfg, &series[0]),
        thinning: estimate(cfg, &series[1]),
        gap: estimate(cfg, &gap_series),
    })
}
