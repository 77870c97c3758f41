//! Closed-form error results and probability-propagation estimators.
//!
//! The closed forms hold for `n > 4` and `t <= n/2` only; outside that regime
//! they return [`Error::OutOfRegime`] instead of extrapolating.

mod events;
mod propagation;

pub use events::{
    accumulation_event, accumulation_event_frequencies, error_events, inclusion_exclusion_check,
    EventKind, InclusionExclusionReport, INCLUSION_EXCLUSION_CEILING,
};
pub use propagation::{
    propagate_probabilities, InputBitProbabilities, Literal, ProbabilityTable, Signal,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::Method;
use crate::multiplier::MultiplierConfig;

fn check_regime(cfg: &MultiplierConfig) -> Result<()> {
    cfg.validate()?;
    let (n, t) = (cfg.n, cfg.t);
    if n <= 4 {
        return Err(Error::OutOfRegime { n, t, reason: "requires n > 4" });
    }
    if 2 * t > n {
        return Err(Error::OutOfRegime { n, t, reason: "requires t <= n/2" });
    }
    if !cfg.segmented {
        return Err(Error::OutOfRegime { n, t, reason: "carry chain is not split" });
    }
    Ok(())
}

/// Largest absolute error distance with fix-to-1 enabled:
/// `2^(n+t-1) - 2^(t+1)`.
pub fn mae_closed_form(cfg: &MultiplierConfig) -> Result<u128> {
    check_regime(cfg)?;
    if !cfg.fix_to_1 {
        return Err(Error::OutOfRegime {
            n: cfg.n,
            t: cfg.t,
            reason: "the bound assumes fix-to-1",
        });
    }
    Ok((1u128 << (cfg.n + cfg.t - 1)) - (1u128 << (cfg.t + 1)))
}

fn check_table(cfg: &MultiplierConfig, table: &ProbabilityTable) -> Result<()> {
    if table.config != *cfg {
        return Err(Error::Distribution(
            "probability table was built for a different configuration".into(),
        ));
    }
    Ok(())
}

/// Probability that accumulation `j` produces an LSP carry-out, i.e. that a
/// carry is generated at the LSP MSB, or generated lower and propagated
/// through every LSP position above it. Terms are disjoint and each is
/// evaluated with independent factors from the table.
pub fn er_accumulation(cfg: &MultiplierConfig, j: u32, table: &ProbabilityTable) -> Result<f64> {
    cfg.validate()?;
    check_table(cfg, table)?;
    if j >= cfg.n {
        return Err(Error::AccumulationIndex { index: j, n: cfg.n });
    }
    if j == 0 {
        return Ok(0.0);
    }
    let t = cfg.t;
    let pa = &table.inputs.a;
    let addend = |l: u32, value: bool| table.sum_given(l + 1, j - 1, Literal { index: l, value });
    let generate = |i: u32| pa[i as usize] * addend(i, true);
    let propagate = |l: u32| {
        (1.0 - pa[l as usize]) * addend(l, false) + pa[l as usize] * (1.0 - addend(l, true))
    };

    let mut total = 0.0;
    let mut above = 1.0;
    for i in (0..t).rev() {
        total += generate(i) * above;
        above *= propagate(i);
    }
    Ok((table.inputs.b[j as usize] * total).clamp(0.0, 1.0))
}

/// Estimated error probability of each accumulation, cycle 0 included.
pub fn er_accumulations(cfg: &MultiplierConfig, table: &ProbabilityTable) -> Result<Vec<f64>> {
    (0..cfg.n).map(|j| er_accumulation(cfg, j, table)).collect()
}

/// Event probabilities behind [`er_estimate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErEstimate {
    /// Error anywhere in product bits `n..2n`.
    pub msp: f64,
    /// `(r, Pr[bit r wrong])` for the LSB events `r` in `t+1..n`.
    pub lsb: Vec<(u32, f64)>,
    pub er: f64,
}

/// Error-rate estimate combining the MSP event and the per-bit LSB events as
/// independent: `1 - prod(1 - p_k)`.
///
/// A carry delayed out of accumulation `j` lands on product bit `t + j`.
/// Accumulations `1..n-t` therefore feed the LSB bit events `t+1..n` one to
/// one, and accumulations `n-t..n` together form the MSP event.
pub fn er_estimate_events(cfg: &MultiplierConfig, table: &ProbabilityTable) -> Result<ErEstimate> {
    check_regime(cfg)?;
    check_table(cfg, table)?;
    let (n, t) = (cfg.n, cfg.t);
    let acc = er_accumulations(cfg, table)?;
    let msp = 1.0 - acc[(n - t) as usize..].iter().map(|p| 1.0 - p).product::<f64>();
    let lsb: Vec<(u32, f64)> = (t + 1..n).map(|r| (r, acc[(r - t) as usize])).collect();
    let miss = (1.0 - msp) * lsb.iter().map(|(_, p)| 1.0 - p).product::<f64>();
    Ok(ErEstimate {
        msp,
        lsb,
        er: (1.0 - miss).clamp(0.0, 1.0),
    })
}

pub fn er_estimate(cfg: &MultiplierConfig, table: &ProbabilityTable) -> Result<f64> {
    Ok(er_estimate_events(cfg, table)?.er)
}

/// Estimated probability that the error distance reaches the MAE, read as
/// an LSP carry-out in cycle `n-2` and none in cycle `n-1`.
pub fn max_error_probability_estimate(
    cfg: &MultiplierConfig,
    table: &ProbabilityTable,
) -> Result<f64> {
    cfg.validate()?;
    check_table(cfg, table)?;
    if !cfg.segmented {
        return Ok(0.0);
    }
    let (n, t) = (cfg.n, cfg.t);
    let p = table.carry(t - 1, n - 2) * (1.0 - table.carry(t - 1, n - 1));
    Ok(p.clamp(0.0, 1.0))
}

/// Everything the estimator predicts for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub config: MultiplierConfig,
    pub method: Method,
    pub depth: usize,
    pub er: f64,
    pub msp_event: f64,
    pub lsb_events: Vec<(u32, f64)>,
    /// LSP carry-out probability of each accumulation.
    pub accumulation_er: Vec<f64>,
    pub max_error_probability: f64,
    /// Closed-form MAE where the bound applies.
    pub mae: Option<u128>,
}

pub fn estimate_report(
    cfg: &MultiplierConfig,
    inputs: &InputBitProbabilities,
    depth: usize,
) -> Result<EstimateReport> {
    let table = propagate_probabilities(cfg, inputs, depth)?;
    let events = er_estimate_events(cfg, &table)?;
    Ok(EstimateReport {
        config: *cfg,
        method: Method::Estimate,
        depth,
        er: events.er,
        msp_event: events.msp,
        lsb_events: events.lsb,
        accumulation_er: er_accumulations(cfg, &table)?,
        max_error_probability: max_error_probability_estimate(cfg, &table)?,
        mae: mae_closed_form(cfg).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let cfg = MultiplierConfig::new(8, 4, true).unwrap();
        assert_eq!(mae_closed_form(&cfg).unwrap(), 2016);
        let cfg = MultiplierConfig::new(6, 3, true).unwrap();
        assert_eq!(mae_closed_form(&cfg).unwrap(), 240);
    }

    #[test]
    fn closed_form_refuses_outside_regime() {
        for (n, t) in [(4, 2), (8, 5), (6, 4)] {
            let cfg = MultiplierConfig::new(n, t, true).unwrap();
            assert!(matches!(mae_closed_form(&cfg), Err(Error::OutOfRegime { .. })));
        }
        let cfg = MultiplierConfig::new(8, 4, false).unwrap();
        assert!(mae_closed_form(&cfg).is_err());
        let cfg = MultiplierConfig::degenerate(8, 4).unwrap();
        assert!(mae_closed_form(&cfg).is_err());
    }

    #[test]
    fn closed_form_monotone() {
        for n in 5..=40u32 {
            for t in 1..=n / 2 {
                let here = mae_closed_form(&MultiplierConfig::new(n, t, true).unwrap()).unwrap();
                if t < n / 2 {
                    let next = mae_closed_form(&MultiplierConfig::new(n, t + 1, true).unwrap()).unwrap();
                    assert!(next > here);
                }
                let wider = mae_closed_form(&MultiplierConfig::new(n + 1, t, true).unwrap()).unwrap();
                assert!(wider > here);
            }
        }
    }

    #[test]
    fn accumulation_zero_and_zero_inputs() {
        let cfg = MultiplierConfig::new(8, 4, true).unwrap();
        let table = propagate_probabilities(&cfg, &InputBitProbabilities::uniform(8), 1).unwrap();
        assert_eq!(er_accumulation(&cfg, 0, &table).unwrap(), 0.0);
        assert!(matches!(
            er_accumulation(&cfg, 8, &table),
            Err(Error::AccumulationIndex { .. })
        ));
        let zero =
            propagate_probabilities(&cfg, &InputBitProbabilities::constant(8, 0.0, 0.0), 1).unwrap();
        for j in 0..8 {
            assert_eq!(er_accumulation(&cfg, j, &zero).unwrap(), 0.0);
        }
        assert_eq!(er_estimate(&cfg, &zero).unwrap(), 0.0);
        assert_eq!(max_error_probability_estimate(&cfg, &zero).unwrap(), 0.0);
    }

    #[test]
    fn estimates_stay_in_unit_interval() {
        for (n, t) in [(6, 2), (6, 3), (8, 4), (12, 6), (16, 8)] {
            for depth in 0..3 {
                for pa in [0.0, 0.3, 0.5, 0.9, 1.0] {
                    let cfg = MultiplierConfig::new(n, t, true).unwrap();
                    let inputs = InputBitProbabilities::constant(n, pa, 1.0 - pa / 2.0);
                    let table = propagate_probabilities(&cfg, &inputs, depth).unwrap();
                    let er = er_estimate(&cfg, &table).unwrap();
                    assert!((0.0..=1.0).contains(&er));
                    let m = max_error_probability_estimate(&cfg, &table).unwrap();
                    assert!((0.0..=1.0).contains(&m));
                    for j in 0..n {
                        let p = er_accumulation(&cfg, j, &table).unwrap();
                        assert!((0.0..=1.0).contains(&p));
                    }
                }
            }
        }
    }

    #[test]
    fn estimator_regime_and_table_mismatch() {
        let cfg = MultiplierConfig::new(8, 5, true).unwrap();
        let table = propagate_probabilities(&cfg, &InputBitProbabilities::uniform(8), 1).unwrap();
        assert!(matches!(er_estimate(&cfg, &table), Err(Error::OutOfRegime { .. })));
        let other = MultiplierConfig::new(8, 4, true).unwrap();
        assert!(er_accumulation(&other, 1, &table).is_err());
    }

    #[test]
    fn degenerate_mode_has_no_max_error_event() {
        let cfg = MultiplierConfig::degenerate(8, 4).unwrap();
        let table = propagate_probabilities(&cfg, &InputBitProbabilities::uniform(8), 1).unwrap();
        assert_eq!(max_error_probability_estimate(&cfg, &table).unwrap(), 0.0);
    }
}
