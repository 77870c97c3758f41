//! Monte Carlo estimation of the error metrics.
//!
//! Sample `k` always consumes the same stretch of one ChaCha8 stream: its
//! keystream position is `k * WORDS_PER_SAMPLE`. Samples are tallied in
//! fixed-size chunks that are merged in chunk order, so a seed yields the
//! same report on any number of worker threads.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::analytic::mae_closed_form;
use crate::distribution::InputDistribution;
use crate::error::{Error, Result};
use crate::metrics::{ErrorReport, Method, Tally};
use crate::multiplier::{check_width, evaluate, MultiplierConfig};

pub const DEFAULT_SAMPLES: u64 = 1 << 20;
pub const MAX_SAMPLES: u64 = 1 << 32;
/// 32-bit keystream words reserved per sample: one `u64` per operand.
pub const WORDS_PER_SAMPLE: u128 = 4;
const CHUNK: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPlan {
    pub sample_count: u64,
    pub seed: u64,
    pub dist_a: InputDistribution,
    pub dist_b: InputDistribution,
    /// Two-sided level of the reported intervals.
    pub confidence_level: f64,
}

impl SamplingPlan {
    pub fn uniform(n: u32, sample_count: u64, seed: u64) -> Result<Self> {
        Ok(Self {
            sample_count,
            seed,
            dist_a: InputDistribution::uniform(n)?,
            dist_b: InputDistribution::uniform(n)?,
            confidence_level: 0.95,
        })
    }

    fn validate(&self, n: u32) -> Result<()> {
        if self.sample_count == 0 || self.sample_count > MAX_SAMPLES {
            return Err(Error::Plan(format!(
                "sample count must be in 1..={MAX_SAMPLES}, got {}",
                self.sample_count
            )));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::Plan(format!(
                "confidence level must lie in (0, 1), got {}",
                self.confidence_level
            )));
        }
        for d in [&self.dist_a, &self.dist_b] {
            if d.width() != n {
                return Err(Error::Distribution(format!(
                    "distribution width {} does not match n={n}",
                    d.width()
                )));
            }
        }
        Ok(())
    }
}

/// Draws operand `k` of a stream: keystream words `4k, 4k+1` feed operand
/// A and `4k+2, 4k+3` feed operand B.
pub fn sample_operands(seed: u64, k: u64, dist_a: &InputDistribution, dist_b: &InputDistribution) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(k as u128 * WORDS_PER_SAMPLE);
    let a = dist_a.sample(rng.next_u64());
    let b = dist_b.sample(rng.next_u64());
    (a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Wilson score interval for a proportion observed `successes` times in
/// `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        lower: (centre - half).max(0.0),
        upper: (centre + half).min(1.0),
    }
}

fn mean_interval(sum: f64, sum_sq: f64, count: u64, z: f64) -> Interval {
    let n = count as f64;
    let mean = sum / n;
    let var = if count > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let se = (var / n).sqrt();
    Interval {
        estimate: mean,
        std_error: se,
        lower: mean - z * se,
        upper: mean + z * se,
    }
}

/// Normal quantile for a two-sided interval at `level`.
pub fn z_value(level: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + level / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    /// `mae` holds the closed-form bound where it applies and the sample
    /// maximum otherwise.
    #[serde(flatten)]
    pub report: ErrorReport,
    pub confidence_level: f64,
    pub er_interval: Interval,
    pub ber_intervals: Vec<Interval>,
    pub med_abs_interval: Interval,
    pub mred_conventional_interval: Interval,
    pub sample_max_abs_ed: u128,
    pub sample_witness: Option<(u64, u64)>,
}

fn tally_range(cfg: &MultiplierConfig, plan: &SamplingPlan, start: u64, end: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_word_pos(start as u128 * WORDS_PER_SAMPLE);
    let mut tally = Tally::new(cfg.n);
    for _ in start..end {
        let a = plan.dist_a.sample(rng.next_u64());
        let b = plan.dist_b.sample(rng.next_u64());
        tally.record(a, b, a as u128 * b as u128, evaluate(a, b, cfg).product);
    }
    tally
}

pub fn report_monte_carlo(cfg: &MultiplierConfig, plan: &SamplingPlan) -> Result<MonteCarloReport> {
    cfg.validate()?;
    check_width(cfg.n)?;
    plan.validate(cfg.n)?;

    let chunks = plan.sample_count.div_ceil(CHUNK);
    let shards: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            tally_range(cfg, plan, start, (start + CHUNK).min(plan.sample_count))
        })
        .collect();
    let mut total = Tally::new(cfg.n);
    for shard in &shards {
        total.merge(shard);
    }

    let z = z_value(plan.confidence_level);
    let count = total.pairs;
    let mut report = total.to_report(cfg, Method::MonteCarlo);
    report.seed = Some(plan.seed);
    if cfg.fix_active() {
        if let Ok(bound) = mae_closed_form(cfg) {
            report.mae = bound;
        }
    }
    let med_abs = mean_interval(total.sum_abs_ed as f64, total.sum_sq_ed, count, z);
    let mred = mean_interval(total.sum_rel, total.sum_sq_rel, count, z);
    Ok(MonteCarloReport {
        report,
        confidence_level: plan.confidence_level,
        er_interval: wilson_interval(total.errors, count, z),
        ber_intervals: total.ber.iter().map(|&c| wilson_interval(c, count, z)).collect(),
        med_abs_interval: med_abs,
        mred_conventional_interval: mred,
        sample_max_abs_ed: total.max_abs_ed,
        sample_witness: total.witness,
    })
}
