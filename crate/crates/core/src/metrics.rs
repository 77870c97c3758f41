//! Exhaustive error metrics for the approximate multiplier.
//!
//! All `2^(2n)` operand pairs are enumerated in shards of one multiplier
//! value each. Under uniform inputs the shard tallies are integer counts, so
//! the merged result does not depend on how shards were scheduled. Weighted
//! runs sum `f64` weights in a fixed order within each shard and merge the
//! shards in index order, which is equally reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::InputDistribution;
use crate::error::{Error, Result};
use crate::multiplier::{evaluate, MultiplierConfig, Product};

/// Default largest `n` evaluated exhaustively.
pub const DEFAULT_CEILING: u32 = 14;
/// Largest ceiling a caller may opt into.
pub const MAX_CEILING: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    MonteCarlo,
    Estimate,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::MonteCarlo => "monte_carlo",
            Method::Estimate => "estimate",
        }
    }
}

/// Metric bundle for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub config: MultiplierConfig,
    pub method: Method,
    pub er: f64,
    /// One entry per product bit, LSB first.
    pub ber: Vec<f64>,
    pub mae: u128,
    pub med_signed: f64,
    pub med_abs: f64,
    pub nmed: f64,
    /// Mean of `|ED| / max(1, p(a, b))`.
    pub mred_conventional: f64,
    /// Mean of `|ED|` over the largest accurate product; equals `nmed`.
    pub mred_global: f64,
    pub sample_count: u64,
    pub seed: Option<u64>,
}

/// `(2^n - 1)^2`, the largest accurate product.
pub fn max_product(n: u32) -> f64 {
    let m = (n as f64).exp2() - 1.0;
    m * m
}

/// `dec(p) - dec(p_hat)`.
///
/// Differences beyond the `i128` range (only reachable with 64-bit operands
/// and unrelated products) saturate.
pub fn error_distance(p: &Product, p_hat: &Product) -> i128 {
    assert_eq!(p.width(), p_hat.width(), "products of different widths");
    signed_difference(p.value(), p_hat.value())
}

pub(crate) fn signed_difference(p: u128, p_hat: u128) -> i128 {
    if p >= p_hat {
        i128::try_from(p - p_hat).unwrap_or(i128::MAX)
    } else {
        i128::try_from(p_hat - p).map(|d| -d).unwrap_or(i128::MIN)
    }
}

/// The error distance as a signed sum over differing bits:
/// `sum_i 2^i * (p_i xor p_hat_i) * sgn(p_i - p_hat_i)`.
pub fn error_distance_bitwise(p: &Product, p_hat: &Product) -> i128 {
    assert_eq!(p.width(), p_hat.width(), "products of different widths");
    (0..p.width()).fold(0i128, |acc, i| {
        let sign = p.bit(i) as i128 - p_hat.bit(i) as i128;
        if sign == 0 {
            acc
        } else {
            acc.saturating_add(sign.saturating_mul(1i128.checked_shl(i).unwrap_or(i128::MAX)))
        }
    })
}

pub(crate) fn check_ceiling(n: u32, ceiling: u32) -> Result<()> {
    let ceiling = ceiling.min(MAX_CEILING);
    if n > ceiling {
        return Err(Error::AboveCeiling { n, ceiling });
    }
    Ok(())
}

/// Integer tally of per-pair error statistics, mergeable in any grouping.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Tally {
    pub pairs: u64,
    pub errors: u64,
    pub ber: Vec<u64>,
    pub sum_ed: i128,
    pub sum_abs_ed: u128,
    pub sum_sq_ed: f64,
    pub sum_rel: f64,
    pub sum_sq_rel: f64,
    pub max_abs_ed: u128,
    pub witness: Option<(u64, u64)>,
}

impl Tally {
    pub fn new(n: u32) -> Self {
        Self {
            pairs: 0,
            errors: 0,
            ber: vec![0; 2 * n as usize],
            sum_ed: 0,
            sum_abs_ed: 0,
            sum_sq_ed: 0.0,
            sum_rel: 0.0,
            sum_sq_rel: 0.0,
            max_abs_ed: 0,
            witness: None,
        }
    }

    #[inline]
    pub fn record(&mut self, a: u64, b: u64, exact: u128, approx: u128) {
        self.pairs += 1;
        let mut diff = exact ^ approx;
        if diff == 0 {
            return;
        }
        self.errors += 1;
        while diff != 0 {
            self.ber[diff.trailing_zeros() as usize] += 1;
            diff &= diff - 1;
        }
        let ed = signed_difference(exact, approx);
        let abs = ed.unsigned_abs();
        self.sum_ed = self.sum_ed.saturating_add(ed);
        self.sum_abs_ed = self.sum_abs_ed.saturating_add(abs);
        let abs_f = abs as f64;
        self.sum_sq_ed += abs_f * abs_f;
        let rel = abs_f / exact.max(1) as f64;
        self.sum_rel += rel;
        self.sum_sq_rel += rel * rel;
        if abs > self.max_abs_ed {
            self.max_abs_ed = abs;
            self.witness = Some((a, b));
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.pairs += other.pairs;
        self.errors += other.errors;
        for (x, y) in self.ber.iter_mut().zip(&other.ber) {
            *x += y;
        }
        self.sum_ed = self.sum_ed.saturating_add(other.sum_ed);
        self.sum_abs_ed = self.sum_abs_ed.saturating_add(other.sum_abs_ed);
        self.sum_sq_ed += other.sum_sq_ed;
        self.sum_rel += other.sum_rel;
        self.sum_sq_rel += other.sum_sq_rel;
        if other.max_abs_ed > self.max_abs_ed {
            self.max_abs_ed = other.max_abs_ed;
            self.witness = other.witness;
        }
    }

    pub fn to_report(&self, cfg: &MultiplierConfig, method: Method) -> ErrorReport {
        let total = self.pairs as f64;
        let denom = max_product(cfg.n);
        let med_abs = self.sum_abs_ed as f64 / total;
        ErrorReport {
            config: *cfg,
            method,
            er: self.errors as f64 / total,
            ber: self.ber.iter().map(|&c| c as f64 / total).collect(),
            mae: self.max_abs_ed,
            med_signed: self.sum_ed as f64 / total,
            med_abs,
            nmed: med_abs / denom,
            mred_conventional: self.sum_rel / total,
            mred_global: (self.sum_abs_ed as f64 / denom) / total,
            sample_count: self.pairs,
            seed: None,
        }
    }
}

#[derive(Clone, Debug)]
struct WeightedTally {
    mass: f64,
    errors: f64,
    ber: Vec<f64>,
    sum_ed: f64,
    sum_abs_ed: f64,
    sum_rel: f64,
    max_abs_ed: u128,
    pairs: u64,
}

impl WeightedTally {
    fn new(n: u32) -> Self {
        Self {
            mass: 0.0,
            errors: 0.0,
            ber: vec![0.0; 2 * n as usize],
            sum_ed: 0.0,
            sum_abs_ed: 0.0,
            sum_rel: 0.0,
            max_abs_ed: 0,
            pairs: 0,
        }
    }

    fn merge(&mut self, other: &WeightedTally) {
        self.mass += other.mass;
        self.errors += other.errors;
        for (x, y) in self.ber.iter_mut().zip(&other.ber) {
            *x += y;
        }
        self.sum_ed += other.sum_ed;
        self.sum_abs_ed += other.sum_abs_ed;
        self.sum_rel += other.sum_rel;
        self.max_abs_ed = self.max_abs_ed.max(other.max_abs_ed);
        self.pairs += other.pairs;
    }
}

/// Evaluates every operand pair of `cfg`, weighted by `dist_a(a) * dist_b(b)`.
pub fn report_exhaustive(
    cfg: &MultiplierConfig,
    dist_a: &InputDistribution,
    dist_b: &InputDistribution,
    ceiling: u32,
) -> Result<ErrorReport> {
    cfg.validate()?;
    check_ceiling(cfg.n, ceiling)?;
    for d in [dist_a, dist_b] {
        if d.width() != cfg.n {
            return Err(Error::Distribution(format!(
                "distribution width {} does not match n={}",
                d.width(),
                cfg.n
            )));
        }
    }
    if dist_a.is_uniform() && dist_b.is_uniform() {
        return Ok(exhaustive_tally(cfg).to_report(cfg, Method::Exhaustive));
    }

    let n = cfg.n;
    let shards: Vec<WeightedTally> = (0..1u64 << n)
        .into_par_iter()
        .map(|a| {
            let mut tally = WeightedTally::new(n);
            let wa = dist_a.prob(a);
            if wa == 0.0 {
                return tally;
            }
            for b in 0..1u64 << n {
                let w = wa * dist_b.prob(b);
                if w == 0.0 {
                    continue;
                }
                let exact = a as u128 * b as u128;
                let approx = evaluate(a, b, cfg).product;
                tally.mass += w;
                tally.pairs += 1;
                let mut diff = exact ^ approx;
                if diff == 0 {
                    continue;
                }
                tally.errors += w;
                while diff != 0 {
                    tally.ber[diff.trailing_zeros() as usize] += w;
                    diff &= diff - 1;
                }
                let ed = signed_difference(exact, approx);
                let abs = ed.unsigned_abs();
                tally.sum_ed += w * ed as f64;
                tally.sum_abs_ed += w * abs as f64;
                tally.sum_rel += w * abs as f64 / exact.max(1) as f64;
                tally.max_abs_ed = tally.max_abs_ed.max(abs);
            }
            tally
        })
        .collect();
    let mut total = WeightedTally::new(n);
    for shard in &shards {
        total.merge(shard);
    }

    let denom = max_product(n);
    let mass = total.mass;
    let med_abs = total.sum_abs_ed / mass;
    Ok(ErrorReport {
        config: *cfg,
        method: Method::Exhaustive,
        er: total.errors / mass,
        ber: total.ber.iter().map(|w| w / mass).collect(),
        mae: total.max_abs_ed,
        med_signed: total.sum_ed / mass,
        med_abs,
        nmed: med_abs / denom,
        mred_conventional: total.sum_rel / mass,
        mred_global: (total.sum_abs_ed / denom) / mass,
        sample_count: total.pairs,
        seed: None,
    })
}

/// Uniform exhaustive tally over all pairs; the caller checks the ceiling.
pub(crate) fn exhaustive_tally(cfg: &MultiplierConfig) -> Tally {
    let n = cfg.n;
    let shards: Vec<Tally> = (0..1u64 << n)
        .into_par_iter()
        .map(|a| {
            let mut tally = Tally::new(n);
            for b in 0..1u64 << n {
                tally.record(a, b, a as u128 * b as u128, evaluate(a, b, cfg).product);
            }
            tally
        })
        .collect();
    let mut total = Tally::new(n);
    for shard in &shards {
        total.merge(shard);
    }
    total
}

/// Largest `|ED|` together with one operand pair attaining it.
pub fn max_abs_error_witness(cfg: &MultiplierConfig, ceiling: u32) -> Result<(u128, Option<(u64, u64)>)> {
    cfg.validate()?;
    check_ceiling(cfg.n, ceiling)?;
    let tally = exhaustive_tally(cfg);
    Ok((tally.max_abs_ed, tally.witness))
}

/// Fraction of uniformly distributed pairs whose product bit `r` is wrong.
pub fn ber_exhaustive(cfg: &MultiplierConfig, r: u32, ceiling: u32) -> Result<f64> {
    cfg.validate()?;
    if r >= 2 * cfg.n {
        return Err(Error::BitIndex {
            index: r,
            width: 2 * cfg.n,
        });
    }
    check_ceiling(cfg.n, ceiling)?;
    let n = cfg.n;
    let wrong: u64 = (0..1u64 << n)
        .into_par_iter()
        .map(|a| {
            (0..1u64 << n)
                .filter(|&b| (((a as u128 * b as u128) ^ evaluate(a, b, cfg).product) >> r) & 1 == 1)
                .count() as u64
        })
        .sum();
    Ok(wrong as f64 / (1u64 << (2 * n)) as f64)
}

/// Two readings of how likely the largest error is.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxErrorProbability {
    pub mae: u128,
    /// Fraction of pairs with `|ED| = MAE`; zero when the MAE is zero.
    pub achieving_fraction: f64,
    /// Fraction of pairs whose LSP carries out in cycle `n-2` but not in
    /// cycle `n-1`.
    pub carry_event_fraction: f64,
    pub achieving_pairs: u64,
    pub carry_event_pairs: u64,
}

impl MaxErrorProbability {
    pub fn difference(&self) -> f64 {
        self.achieving_fraction - self.carry_event_fraction
    }
}

pub fn max_error_probability(cfg: &MultiplierConfig, ceiling: u32) -> Result<MaxErrorProbability> {
    cfg.validate()?;
    check_ceiling(cfg.n, ceiling)?;
    let n = cfg.n;
    let (mae, _) = max_abs_error_witness(cfg, ceiling)?;
    let (achieving, events) = (0..1u64 << n)
        .into_par_iter()
        .map(|a| {
            let mut achieving = 0u64;
            let mut events = 0u64;
            for b in 0..1u64 << n {
                let e = evaluate(a, b, cfg);
                let abs = signed_difference(a as u128 * b as u128, e.product).unsigned_abs();
                if mae > 0 && abs == mae {
                    achieving += 1;
                }
                let before_last = (e.lsp_carries >> (n - 2)) & 1 == 1;
                if before_last && !e.last_carry(n) {
                    events += 1;
                }
            }
            (achieving, events)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let total = (1u64 << (2 * n)) as f64;
    Ok(MaxErrorProbability {
        mae,
        achieving_fraction: achieving as f64 / total,
        carry_event_fraction: events as f64 / total,
        achieving_pairs: achieving,
        carry_event_pairs: events,
    })
}
