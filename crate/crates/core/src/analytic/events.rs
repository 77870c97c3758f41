//! Exhaustive checks of the error-event structure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiplier::{accurate_datapath, check_width, evaluate, MultiplierConfig};
use crate::trace::CycleTrace;

/// Widest configuration accepted by [`inclusion_exclusion_check`].
pub const INCLUSION_EXCLUSION_CEILING: u32 = 10;

/// Evaluates the accumulation-error expression on a concrete trace:
/// `b_j` and some LSP position `i` generates a carry (`a_i = S_{i+1}^{j-1} = 1`)
/// that every higher LSP position propagates (`a_l != S_{l+1}^{j-1}`).
///
/// On a segmented trace this equals the LSP carry-out of cycle `j`.
pub fn accumulation_event(a: u64, b: u64, traces: &[CycleTrace], t: u32, j: u32) -> bool {
    if j == 0 || (b >> j) & 1 == 0 {
        return false;
    }
    let prev = &traces[j as usize - 1];
    let a_bit = |i: u32| (a >> i) & 1 == 1;
    (0..t).any(|i| {
        a_bit(i) && prev.sum_bit(i + 1) && (i + 1..t).all(|l| a_bit(l) != prev.sum_bit(l + 1))
    })
}

/// Exhaustive fraction of uniform input pairs whose accumulation `j`
/// produces an LSP carry-out, for every `j`.
pub fn accumulation_event_frequencies(cfg: &MultiplierConfig, ceiling: u32) -> Result<Vec<f64>> {
    cfg.validate()?;
    crate::metrics::check_ceiling(cfg.n, ceiling)?;
    let n = cfg.n;
    let mut counts = vec![0u64; n as usize];
    for a in 0..1u64 << n {
        for b in 0..1u64 << n {
            let carries = evaluate(a, b, cfg).lsp_carries;
            for (j, count) in counts.iter_mut().enumerate() {
                *count += (carries >> j) & 1;
            }
        }
    }
    let total = (1u64 << (2 * n)) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Any error in product bits `n..2n`.
    Msp,
    /// Error in product bit `r < n`.
    Bit(u32),
}

impl EventKind {
    fn mask(self, n: u32) -> u128 {
        match self {
            EventKind::Msp => ((1u128 << n) - 1) << n,
            EventKind::Bit(r) => 1u128 << r,
        }
    }
}

/// Events whose union is the error event. Without fix-to-1 the `t + 1`
/// lowest product bits are never wrong, so they get no event.
pub fn error_events(cfg: &MultiplierConfig) -> Vec<EventKind> {
    let lowest = if cfg.fix_active() { 0 } else { (cfg.t + 1).min(cfg.n) };
    std::iter::once(EventKind::Msp)
        .chain((lowest..cfg.n).map(EventKind::Bit))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionExclusionReport {
    pub config: MultiplierConfig,
    pub events: Vec<EventKind>,
    /// Pairs in each single event, in `events` order.
    pub event_counts: Vec<u64>,
    /// Pairs in the intersection of each event subset, indexed by the subset
    /// bitmask over `events`. Entry 0 is the total pair count.
    pub intersection_counts: Vec<u64>,
    /// Inclusion-exclusion sum over all non-empty subsets.
    pub union_count: u64,
    /// Pairs with `p_hat != p`, counted directly.
    pub direct_count: u64,
    pub pairs: u64,
    pub holds: bool,
}

impl InclusionExclusionReport {
    pub fn union_er(&self) -> f64 {
        self.union_count as f64 / self.pairs as f64
    }

    pub fn direct_er(&self) -> f64 {
        self.direct_count as f64 / self.pairs as f64
    }
}

/// Exhaustively evaluates the inclusion-exclusion expansion of the error
/// rate over [`error_events`] and compares it with the direct count.
pub fn inclusion_exclusion_check(cfg: &MultiplierConfig) -> Result<InclusionExclusionReport> {
    cfg.validate()?;
    check_width(cfg.n)?;
    if cfg.n > INCLUSION_EXCLUSION_CEILING {
        return Err(Error::AboveCeiling {
            n: cfg.n,
            ceiling: INCLUSION_EXCLUSION_CEILING,
        });
    }
    let n = cfg.n;
    let events = error_events(cfg);
    let masks: Vec<u128> = events.iter().map(|e| e.mask(n)).collect();
    let k = events.len();

    let mut hist = vec![0u64; 1 << k];
    let mut direct_count = 0u64;
    for a in 0..1u64 << n {
        for b in 0..1u64 << n {
            let diff = evaluate(a, b, cfg).product ^ accurate_datapath(a, b, n);
            direct_count += (diff != 0) as u64;
            let occurred = masks
                .iter()
                .enumerate()
                .fold(0usize, |m, (e, mask)| m | (((diff & mask != 0) as usize) << e));
            hist[occurred] += 1;
        }
    }

    // superset sums turn the occurrence histogram into intersection counts
    let mut inter = hist;
    for e in 0..k {
        for s in 0..1usize << k {
            if s & (1 << e) == 0 {
                inter[s] += inter[s | (1 << e)];
            }
        }
    }

    let mut union: i128 = 0;
    for (s, &count) in inter.iter().enumerate().skip(1) {
        let sign = if s.count_ones() % 2 == 1 { 1 } else { -1 };
        union += sign * count as i128;
    }
    let union_count = u64::try_from(union)
        .map_err(|_| Error::Plan("inclusion-exclusion sum is negative".into()))?;

    Ok(InclusionExclusionReport {
        config: *cfg,
        event_counts: (0..k).map(|e| inter[1 << e]).collect(),
        events,
        union_count,
        direct_count,
        pairs: 1u64 << (2 * n),
        holds: union_count == direct_count,
        intersection_counts: inter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::Operand;
    use crate::trace::trace_approx;

    #[test]
    fn accumulation_expression_matches_carry_out() {
        for t in 1..6u32 {
            let cfg = MultiplierConfig::new(6, t, true).unwrap();
            for a in 0..64u64 {
                for b in 0..64u64 {
                    let tr = trace_approx(
                        &Operand::new(a, 6).unwrap(),
                        &Operand::new(b, 6).unwrap(),
                        &cfg,
                    )
                    .unwrap();
                    for j in 0..6 {
                        assert_eq!(
                            accumulation_event(a, b, &tr, t, j),
                            tr[j as usize].lsp_carry_out,
                            "a={a} b={b} t={t} j={j}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn union_matches_direct_count() {
        for (n, t) in [(4, 2), (5, 2), (6, 3), (6, 2)] {
            for fix in [false, true] {
                let cfg = MultiplierConfig::new(n, t, fix).unwrap();
                let rep = inclusion_exclusion_check(&cfg).unwrap();
                assert!(rep.holds, "{n} {t} {fix}");
                assert_eq!(rep.intersection_counts[0], rep.pairs);
            }
        }
    }

    #[test]
    fn events_cover_expected_bits() {
        let off = error_events(&MultiplierConfig::new(8, 4, false).unwrap());
        assert_eq!(off.len(), 1 + 3);
        assert_eq!(off[1], EventKind::Bit(5));
        let on = error_events(&MultiplierConfig::new(8, 4, true).unwrap());
        assert_eq!(on.len(), 1 + 8);
    }

    #[test]
    fn ceiling_enforced() {
        let cfg = MultiplierConfig::new(11, 5, true).unwrap();
        assert!(matches!(
            inclusion_exclusion_check(&cfg),
            Err(Error::AboveCeiling { .. })
        ));
    }

    #[test]
    fn first_accumulation_never_carries() {
        let cfg = MultiplierConfig::new(6, 3, false).unwrap();
        let f = accumulation_event_frequencies(&cfg, 14).unwrap();
        assert_eq!(f[0], 0.0);
        assert!(f[1..].iter().all(|&p| p > 0.0));
    }
}
