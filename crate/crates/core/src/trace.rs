//! Bit-level evaluation of the sum/carry recurrences with per-cycle state.
//!
//! Every sum bit `S_i^j` and carry bit `C_i^j` is computed individually from
//! the defining case equations, so a trace can be compared bit for bit with
//! the register-level datapath in [`crate::multiplier`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiplier::{MultiplierConfig, Operand, Product};

/// Datapath state during one clock cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleTrace {
    pub cycle: u32,
    /// `S_0^j ..= S_n^j` (bit `i` is `S_i^j`).
    pub sum_bits: u128,
    /// `C_0^j .. C_{n-1}^j`.
    pub carry_bits: u64,
    /// Register B while the cycle's addition takes place.
    pub reg_b: u64,
    /// Delayed carry entering the MSP this cycle, `C_{t-1}^{j-1}`.
    pub carry_ff: bool,
    /// LSP carry-out `C_{t-1}^j`.
    pub lsp_carry_out: bool,
    pub fix_applied: bool,
}

impl CycleTrace {
    pub fn sum_bit(&self, i: u32) -> bool {
        (self.sum_bits >> i) & 1 == 1
    }

    pub fn carry_bit(&self, i: u32) -> bool {
        i < 64 && (self.carry_bits >> i) & 1 == 1
    }
}

#[derive(Clone, Copy)]
struct Split {
    t: u32,
    delayed: bool,
    fix: bool,
}

fn check_operands(a: &Operand, b: &Operand) -> Result<u32> {
    if a.width() != b.width() {
        return Err(Error::WidthMismatch {
            left: a.width(),
            right: b.width(),
        });
    }
    Ok(a.width())
}

/// Per-cycle trace of the accurate multiplier.
pub fn trace_accurate(a: &Operand, b: &Operand) -> Result<Vec<CycleTrace>> {
    let n = check_operands(a, b)?;
    Ok(run(a, b, n, None))
}

/// Per-cycle trace of the approximate multiplier.
pub fn trace_approx(a: &Operand, b: &Operand, cfg: &MultiplierConfig) -> Result<Vec<CycleTrace>> {
    let n = check_operands(a, b)?;
    cfg.validate()?;
    if n != cfg.n {
        return Err(Error::WidthMismatch {
            left: n,
            right: cfg.n,
        });
    }
    let split = Split {
        t: cfg.t,
        delayed: cfg.segmented,
        fix: cfg.fix_active(),
    };
    Ok(run(a, b, n, Some(split)))
}

fn run(a: &Operand, b: &Operand, n: u32, split: Option<Split>) -> Vec<CycleTrace> {
    let mut traces: Vec<CycleTrace> = Vec::with_capacity(n as usize);
    let mut sums = vec![false; n as usize + 1];
    let mut carries = vec![false; n as usize];
    let mut shifted_out: u64 = 0;

    for j in 0..n {
        let bj = b.bit(j);
        let mut next_sums = vec![false; n as usize + 1];
        let mut next_carries = vec![false; n as usize];
        let mut carry_ff = false;

        if j == 0 {
            for i in 0..n {
                next_sums[i as usize] = a.bit(i) && bj;
            }
        } else {
            for i in 0..n {
                let addend = sums[i as usize + 1];
                let pp = a.bit(i) && bj;
                let carry_in = match split {
                    _ if i == 0 => false,
                    Some(s) if s.delayed && i == s.t => {
                        carry_ff = carries[(s.t - 1) as usize];
                        carry_ff
                    }
                    _ => next_carries[i as usize - 1],
                };
                next_sums[i as usize] = addend ^ carry_in ^ pp;
                next_carries[i as usize] = if i == 0 {
                    addend && pp
                } else {
                    ((addend ^ pp) && carry_in) || (addend && pp)
                };
            }
            next_sums[n as usize] = next_carries[n as usize - 1];
        }

        let lsp_carry_out = split.is_some_and(|s| next_carries[(s.t - 1) as usize]);
        let fix_applied = j == n - 1 && split.is_some_and(|s| s.fix) && lsp_carry_out;
        let reg_b = if j == 0 {
            b.value()
        } else {
            (b.value() >> j) | (shifted_out << (n - j))
        };

        traces.push(CycleTrace {
            cycle: j,
            sum_bits: pack(&next_sums) as u128,
            carry_bits: pack(&next_carries) as u64,
            reg_b,
            carry_ff,
            lsp_carry_out,
            fix_applied,
        });

        if next_sums[0] {
            shifted_out |= 1 << j;
        }
        sums = next_sums;
        carries = next_carries;
    }
    traces
}

fn pack(bits: &[bool]) -> u128 {
    bits.iter()
        .enumerate()
        .fold(0u128, |acc, (i, &bit)| acc | ((bit as u128) << i))
}

/// Reassembles the accurate product from a trace: `p_r = S_0^r` for
/// `r < n - 1`, then the final accumulation.
pub fn assemble_accurate(traces: &[CycleTrace]) -> Product {
    let n = traces.len() as u32;
    Product::new(assemble_bits(traces, n), 2 * n)
}

/// Reassembles the approximate product, applying the fix-to-1 case split.
pub fn assemble_approx(traces: &[CycleTrace], cfg: &MultiplierConfig) -> Product {
    let n = traces.len() as u32;
    let mut value = assemble_bits(traces, n);
    if traces.last().is_some_and(|tr| tr.fix_applied) {
        value |= cfg.fix_mask();
    }
    Product::new(value, 2 * n)
}

fn assemble_bits(traces: &[CycleTrace], n: u32) -> u128 {
    let mut value = 0u128;
    for r in 0..n.saturating_sub(1) {
        value |= (traces[r as usize].sum_bits & 1) << r;
    }
    value | (traces[n as usize - 1].sum_bits << (n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{evaluate, mul_approx_sequential};

    fn op(v: u64, n: u32) -> Operand {
        Operand::new(v, n).unwrap()
    }

    #[test]
    fn accurate_worked_example_rows() {
        let tr = trace_accurate(&op(11, 4), &op(13, 4)).unwrap();
        assert_eq!(tr.len(), 4);
        assert_eq!(tr[0].sum_bits, 0b01011);
        // augend of cycle 1 is register A (0101) followed by the bit shifted into B (1)
        let augend = ((tr[0].sum_bits >> 1) << 1) as u64 | (tr[1].reg_b >> 3);
        assert_eq!(augend, 0b01011);
        assert_eq!(tr[1].sum_bits, 0b00101);
        assert_eq!(tr[2].sum_bits, 0b01101);
        assert_eq!(tr[3].sum_bits, 0b10001);
        assert_eq!(assemble_accurate(&tr).value(), 143);
    }

    #[test]
    fn approx_worked_example_delayed_carry() {
        let cfg = MultiplierConfig::new(4, 2, true).unwrap();
        let tr = trace_approx(&op(11, 4), &op(13, 4), &cfg).unwrap();
        assert_eq!(tr[2].sum_bits, 0b01001);
        assert_eq!(tr[3].sum_bits, 0b10011);
        assert!(tr[2].lsp_carry_out);
        assert!(tr[3].carry_ff);
        assert!(!tr[3].lsp_carry_out);
        assert!(!tr[3].fix_applied);
        assert_eq!(assemble_approx(&tr, &cfg).value(), 159);
    }

    #[test]
    fn zero_trace_is_all_zero() {
        let cfg = MultiplierConfig::new(6, 3, true).unwrap();
        for tr in trace_approx(&op(0, 6), &op(0, 6), &cfg)
            .unwrap()
            .into_iter()
            .chain(trace_accurate(&op(0, 6), &op(0, 6)).unwrap())
        {
            assert_eq!(tr.sum_bits, 0);
            assert_eq!(tr.carry_bits, 0);
            assert!(!tr.carry_ff && !tr.lsp_carry_out && !tr.fix_applied);
        }
    }

    #[test]
    fn trace_agrees_with_datapath_exhaustively() {
        for n in 2..=7u32 {
            for t in 1..n {
                for fix in [false, true] {
                    let cfg = MultiplierConfig::new(n, t, fix).unwrap();
                    for a in 0..1u64 << n {
                        for b in 0..1u64 << n {
                            let (oa, ob) = (op(a, n), op(b, n));
                            let tr = trace_approx(&oa, &ob, &cfg).unwrap();
                            let eval = evaluate(a, b, &cfg);
                            assert_eq!(assemble_approx(&tr, &cfg).value(), eval.product);
                            let carries = tr
                                .iter()
                                .fold(0u64, |m, c| m | ((c.lsp_carry_out as u64) << c.cycle));
                            assert_eq!(carries, eval.lsp_carries);
                            let acc = trace_accurate(&oa, &ob).unwrap();
                            assert_eq!(assemble_accurate(&acc).value(), a as u128 * b as u128);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fix_flag_only_on_last_cycle() {
        let cfg = MultiplierConfig::new(6, 3, true).unwrap();
        for a in 0..64u64 {
            for b in 0..64u64 {
                let tr = trace_approx(&op(a, 6), &op(b, 6), &cfg).unwrap();
                for c in &tr[..5] {
                    assert!(!c.fix_applied);
                }
                assert_eq!(tr[5].fix_applied, tr[5].lsp_carry_out);
            }
        }
    }

    #[test]
    fn register_b_holds_product_low_bits() {
        let (a, b) = (op(201, 8), op(99, 8));
        let cfg = MultiplierConfig::new(8, 4, false).unwrap();
        let tr = trace_approx(&a, &b, &cfg).unwrap();
        let p = mul_approx_sequential(&a, &b, &cfg).unwrap().value();
        assert_eq!(tr[0].reg_b, 99);
        // after seven shifts the top seven bits of B are p_0..p_6
        assert_eq!(tr[7].reg_b >> 1, (p & 0x7f) as u64);
        assert_eq!(tr[7].reg_b & 1, 0);
    }
}
