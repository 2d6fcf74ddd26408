//! Seeded Monte Carlo for stationary birth-death trajectories.
//!
//! Replica `i` draws from the base generator advanced by `i + 1` xoshiro
//! jumps, which gives non-overlapping streams of length `2^128`. The pilot
//! run uses a long jump. Replicas run on a rayon pool sized by
//! `BD_CLT_THREADS` and are reduced in replica order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chain::BirthDeathChain;
use crate::error::{Error, Result};
use crate::measure::StationaryMeasure;
use crate::observable::Observable;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "BD_CLT_THREADS";
/// Batch length in units of the integrated autocorrelation time.
pub const BATCH_TAU_MULTIPLE: f64 = 100.0;
/// Upper bound on batches per replica run; longer batches shrink the `O(1/b)` bias.
pub const MAX_BATCHES_PER_REPLICA: usize = 20;
/// Relative change of `D^2_N` over the last rung flagged as still trending.
pub const TREND_TOLERANCE: f64 = 0.10;

pub type SimRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Stationary,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replicas: usize,
    pub steps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "default_start")]
    pub start: Start,
    /// Values of `N`; defaults to `steps, steps/2, ...` (at most 8 rungs, `N >= 8`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<usize>>,
    /// Length of the autocorrelation pilot run; defaults to `max(steps, 10^5)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot_steps: Option<usize>,
}

fn default_start() -> Start {
    Start::Stationary
}

impl SimConfig {
    pub fn new(seed: u64, replicas: usize, steps: usize) -> Self {
        SimConfig {
            seed,
            replicas,
            steps,
            burn_in: 0,
            start: Start::Stationary,
            ladder: None,
            pilot_steps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 || self.steps == 0 {
            return Err(Error::Domain("replicas and steps must be at least 1".into()));
        }
        if let Some(ladder) = &self.ladder {
            if ladder.is_empty() || ladder.iter().any(|&n| n == 0 || n > self.steps) {
                return Err(Error::Domain(format!(
                    "ladder entries must lie in 1..={}",
                    self.steps
                )));
            }
        }
        Ok(())
    }

    /// Sorted, deduplicated values of `N`.
    pub fn ladder(&self) -> Vec<usize> {
        let mut out = match &self.ladder {
            Some(l) => l.clone(),
            None => {
                let mut v = Vec::new();
                let mut n = self.steps;
                while v.len() < 8 && n >= 8.min(self.steps) && n > 0 {
                    v.push(n);
                    n /= 2;
                }
                v
            }
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    fn pilot_len(&self) -> usize {
        self.pilot_steps.unwrap_or(self.steps.max(100_000))
    }
}

/// Generator for replica `index` (`index + 1` jumps past the seed state).
pub fn replica_rngs(seed: u64, count: usize) -> Vec<SimRng> {
    let mut base = SimRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            base.jump();
            base.clone()
        })
        .collect()
}

fn pilot_rng(seed: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.long_jump();
    rng
}

/// Worker count from `BD_CLT_THREADS`, else the machine parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Inverse-CDF sampler over the truncated stationary law.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    cdf: Vec<f64>,
}

impl StationarySampler {
    pub fn new(measure: &StationaryMeasure) -> Result<Self> {
        if !measure.is_normalized() {
            return Err(Error::Domain("stationary start needs a normalized measure".into()));
        }
        let mut acc = crate::sum::Compensated::new();
        let mut cdf: Vec<f64> = measure
            .probabilities()
            .into_iter()
            .map(|p| {
                acc.add(p);
                acc.value()
            })
            .collect();
        let total = *cdf.last().expect("measure has states");
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Ok(StationarySampler { cdf })
    }

    /// State `x` with `cdf(x-1) <= u < cdf(x)`.
    pub fn state_for(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.state_for(rng.random::<f64>())
    }
}

/// One draw from the truncated `pi` by inverse CDF.
pub fn sample_stationary_start<R: Rng + ?Sized>(measure: &StationaryMeasure, rng: &mut R) -> Result<usize> {
    Ok(StationarySampler::new(measure)?.sample(rng))
}

/// Up-probabilities cached for the states most trajectories visit.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    chain: &'a BirthDeathChain,
    p: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(chain: &'a BirthDeathChain, cached_states: usize) -> Self {
        let p = (0..=cached_states).map(|x| chain.p(x)).collect();
        Stepper { chain, p }
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let p = match self.p.get(x) {
            Some(&p) => p,
            None => self.chain.p(x),
        };
        if rng.random::<f64>() < p {
            x + 1
        } else {
            x - 1
        }
    }
}

/// `X_0 = start, ..., X_steps`.
pub fn sample_path<R: Rng + ?Sized>(chain: &BirthDeathChain, start: usize, steps: usize, rng: &mut R) -> Vec<usize> {
    let stepper = Stepper::new(chain, 1024);
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = start;
    out.push(x);
    for _ in 0..steps {
        x = stepper.step(x, rng);
        out.push(x);
    }
    out
}

/// `N^{-1/2} sum_{n=0}^{N} V(X_n)`.
pub fn partial_sum(v: &Observable, trajectory: &[usize], n: usize) -> f64 {
    assert!(n >= 1 && n < trajectory.len(), "N must lie in 1..len");
    let s = crate::sum::sum(trajectory[..=n].iter().map(|&x| v.value(x)));
    s / (n as f64).sqrt()
}

/// Writes `n,x_n` rows.
pub fn write_trajectory_csv<W: Write>(trajectory: &[usize], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "x_n"])?;
    for (n, x) in trajectory.iter().enumerate() {
        w.write_record([n.to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    #[serde(rename = "N")]
    pub n: usize,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchMeans {
    pub value: f64,
    pub standard_error: f64,
    pub batch_length: usize,
    pub batches: usize,
    /// Integrated autocorrelation time from the pilot run.
    pub tau: f64,
    pub pilot_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = crate::sum::sum(values.iter().copied()) / n as f64;
        let variance = if n > 1 {
            crate::sum::sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64
        } else {
            0.0
        };
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        SummaryStats { count: n, mean, variance, min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub config: SimConfig,
    pub variance_curve: Vec<VariancePoint>,
    /// Absent when one batch would exceed a replica run.
    pub sigma2_mc: Option<BatchMeans>,
    pub ks_distance: f64,
    /// `D^2_N = 0` at the largest `N`.
    pub degenerate: bool,
    /// `D^2_N` moved by more than 10% over the last rung.
    pub no_convergence_warning: bool,
    /// `Y_N` over replicas at the largest `N`.
    pub replica_sums: SummaryStats,
}

struct ReplicaOutcome {
    /// `sum_{n=0}^{N} V(X_n)` for each ladder rung.
    sums: Vec<f64>,
    batch_sums: Vec<f64>,
}

struct ReplicaPlan<'a> {
    burn_in: usize,
    steps: usize,
    ladder: &'a [usize],
    /// Zero disables batching.
    batch_length: usize,
}

fn run_replica(v: &Observable, stepper: &Stepper, start: usize, plan: &ReplicaPlan, rng: &mut SimRng) -> ReplicaOutcome {
    let ReplicaPlan { burn_in, steps, ladder, batch_length } = *plan;
    let mut x = start;
    for _ in 0..burn_in {
        x = stepper.step(x, rng);
    }
    let mut sums = Vec::with_capacity(ladder.len());
    let mut batch_sums = Vec::new();
    let mut rung = 0;
    let (mut total, mut batch) = (0.0, 0.0);
    let mut in_batch = 0;
    for n in 0..=steps {
        if n > 0 {
            x = stepper.step(x, rng);
        }
        let val = v.value(x);
        total += val;
        batch += val;
        in_batch += 1;
        if batch_length > 0 && in_batch == batch_length {
            batch_sums.push(batch);
            batch = 0.0;
            in_batch = 0;
        }
        if rung < ladder.len() && ladder[rung] == n {
            sums.push(total);
            rung += 1;
        }
    }
    ReplicaOutcome { sums, batch_sums }
}

/// Integrated autocorrelation time `1 + 2 sum_k rho_k`, truncated by the
/// initial positive sequence rule on `Gamma_m = gamma_{2m} + gamma_{2m+1}`.
pub fn integrated_autocorrelation_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 1.0;
    }
    let mean = crate::sum::sum(series.iter().copied()) / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let gamma = |k: usize| buf[k].re / (size as f64 * n as f64);
    let g0 = gamma(0);
    if g0 <= 0.0 || !g0.is_finite() {
        return 1.0;
    }
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (gamma(2 * m) + gamma(2 * m + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    tau.max(1.0)
}

/// Kolmogorov-Smirnov distance of a sample from the standard normal.
pub fn ks_distance_normal(sample: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &y)| {
        let f = normal.cdf(y);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

/// Pilot run, replicas, and the derived report.
pub fn variance_growth(
    v: &Observable,
    chain: &BirthDeathChain,
    measure: &StationaryMeasure,
    config: &SimConfig,
) -> Result<CltReport> {
    config.validate()?;
    let sampler = StationarySampler::new(measure)?;
    let stepper = Stepper::new(chain, measure.truncation().max(v.truncation()) + 1);
    let ladder = config.ladder();
    let start_for = |rng: &mut SimRng| match config.start {
        Start::Stationary => sampler.sample(rng),
        Start::Fixed(x) => x,
    };

    let pilot_len = config.pilot_len();
    let mut rng = pilot_rng(config.seed);
    let mut x = start_for(&mut rng);
    for _ in 0..config.burn_in {
        x = stepper.step(x, &mut rng);
    }
    let mut pilot = Vec::with_capacity(pilot_len + 1);
    pilot.push(v.value(x));
    for _ in 0..pilot_len {
        x = stepper.step(x, &mut rng);
        pilot.push(v.value(x));
    }
    let tau = integrated_autocorrelation_time(&pilot);
    drop(pilot);
    let batch_length = ((BATCH_TAU_MULTIPLE * tau).ceil() as usize).max((config.steps + 1) / MAX_BATCHES_PER_REPLICA);
    let batch_length = if batch_length <= config.steps + 1 { batch_length } else { 0 };

    let plan = ReplicaPlan {
        burn_in: config.burn_in,
        steps: config.steps,
        ladder: &ladder,
        batch_length,
    };
    let rngs = replica_rngs(config.seed, config.replicas);
    let outcomes: Vec<ReplicaOutcome> = thread_pool()?.install(|| {
        rngs.into_par_iter()
            .map(|mut rng| {
                let start = start_for(&mut rng);
                run_replica(v, &stepper, start, &plan, &mut rng)
            })
            .collect()
    });

    let variance_curve: Vec<VariancePoint> = ladder
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let d2 = crate::sum::sum(outcomes.iter().map(|o| o.sums[k] * o.sums[k] / n as f64))
                / outcomes.len() as f64;
            VariancePoint { n, d2 }
        })
        .collect();

    let sigma2_mc = if batch_length > 0 {
        let means: Vec<f64> = outcomes
            .iter()
            .flat_map(|o| o.batch_sums.iter().map(|s| s / batch_length as f64))
            .collect();
        let k = means.len();
        (k >= 2).then(|| {
            let grand = crate::sum::sum(means.iter().copied()) / k as f64;
            let ss = crate::sum::sum(means.iter().map(|m| (m - grand) * (m - grand)));
            let value = batch_length as f64 * ss / (k - 1) as f64;
            BatchMeans {
                value,
                standard_error: value * (2.0 / (k - 1) as f64).sqrt(),
                batch_length,
                batches: k,
                tau,
                pilot_steps: pilot_len,
            }
        })
    } else {
        None
    };

    let last = ladder.len() - 1;
    let n_max = ladder[last] as f64;
    let ys: Vec<f64> = outcomes.iter().map(|o| o.sums[last] / n_max.sqrt()).collect();
    let d2_last = variance_curve[last].d2;
    let degenerate = d2_last == 0.0;
    let ks_distance = if degenerate {
        1.0
    } else {
        let sd = d2_last.sqrt();
        ks_distance_normal(&ys.iter().map(|y| y / sd).collect::<Vec<_>>())
    };
    let no_convergence_warning = last > 0 && {
        let prev = variance_curve[last - 1].d2;
        (d2_last - prev).abs() > TREND_TOLERANCE * prev.abs().max(d2_last.abs())
    };

    Ok(CltReport {
        config: config.clone(),
        variance_curve,
        sigma2_mc,
        ks_distance,
        degenerate,
        no_convergence_warning,
        replica_sums: SummaryStats::of(&ys),
    })
}
