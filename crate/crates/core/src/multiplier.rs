//! Cycle-accurate functional models of the accurate and the approximate
//! shift-and-add multipliers.
//!
//! Both designs compute one partial-product accumulation per clock cycle.
//! Register A holds the `n + 1` bit running sum, register B starts with the
//! multiplicand and receives the sum LSB on every right shift. The
//! approximate design cuts the accumulation adder at bit `t`: the carry out
//! of the `t`-bit least significant part (LSP) is stored in a flip-flop and
//! only enters the most significant part (MSP) in the following cycle. The
//! carry produced in the last cycle is lost; with fix-to-1 enabled the
//! product bits held in register B and in the LSP of register A (the
//! `n + t - 1` least significant bits, value `2^(n+t-1) - 1`) are forced to
//! one instead, the value closest to the dropped carry.
//!
//! The functions here work on whole registers. [`crate::trace`] evaluates the
//! same designs one sum/carry bit at a time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest supported operand.
pub const MAX_WIDTH: u32 = 64;

/// An unsigned `width`-bit operand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Operand {
    value: u64,
    width: u32,
}

impl Operand {
    pub fn new(value: u64, width: u32) -> Result<Self> {
        check_width(width)?;
        if width < 64 && value >> width != 0 {
            return Err(Error::OperandOutOfRange { value, width });
        }
        Ok(Self { value, width })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Bit `i` of the operand (`a_i` or `b_j`).
    pub fn bit(&self, i: u32) -> bool {
        i < self.width && (self.value >> i) & 1 == 1
    }
}

/// A `2n`-bit product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Product {
    value: u128,
    width: u32,
}

impl Product {
    pub(crate) fn new(value: u128, width: u32) -> Self {
        debug_assert!(width == 128 || value >> width == 0);
        Self { value, width }
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    /// Bit count, always twice the operand width.
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bit(&self, r: u32) -> bool {
        r < self.width && (self.value >> r) & 1 == 1
    }
}

/// One design point of the approximate multiplier.
///
/// `segmented = false` keeps the splitting point but removes the delayed
/// carry, so the recurrences collapse to the accurate multiplier. That mode
/// exists to check the error-free limit of every analysis; fix-to-1 never
/// fires in it because no carry is ever lost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiplierConfig {
    pub n: u32,
    pub t: u32,
    pub fix_to_1: bool,
    #[serde(default = "default_segmented")]
    pub segmented: bool,
}

fn default_segmented() -> bool {
    true
}

impl MultiplierConfig {
    pub fn new(n: u32, t: u32, fix_to_1: bool) -> Result<Self> {
        let cfg = Self {
            n,
            t,
            fix_to_1,
            segmented: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The same `(n, t)` with the carry chain left intact.
    pub fn degenerate(n: u32, t: u32) -> Result<Self> {
        let cfg = Self {
            n,
            t,
            fix_to_1: false,
            segmented: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_width(self.n)?;
        if self.t < 1 || self.t >= self.n {
            return Err(Error::SplitOutOfRange {
                n: self.n,
                t: self.t,
            });
        }
        Ok(())
    }

    /// Whether the last LSP carry-out triggers the fix-to-1 correction.
    pub fn fix_active(&self) -> bool {
        self.segmented && self.fix_to_1
    }

    /// Product bits forced to one by fix-to-1.
    pub fn fix_mask(&self) -> u128 {
        (1u128 << (self.n + self.t - 1)) - 1
    }
}

/// Result of one evaluation of the register-level datapath.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub product: u128,
    /// Bit `j` holds the LSP carry-out of cycle `j`.
    pub lsp_carries: u64,
}

impl Evaluation {
    pub fn last_carry(&self, n: u32) -> bool {
        (self.lsp_carries >> (n - 1)) & 1 == 1
    }
}

pub(crate) fn check_width(n: u32) -> Result<()> {
    if (1..=MAX_WIDTH).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidWidth(n))
    }
}

pub(crate) fn width_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_pair(a: &Operand, b: &Operand) -> Result<()> {
    if a.width != b.width {
        return Err(Error::WidthMismatch {
            left: a.width,
            right: b.width,
        });
    }
    Ok(())
}

/// Exact integer product; the oracle for every accuracy check.
pub fn mul_reference(a: &Operand, b: &Operand) -> Result<Product> {
    check_pair(a, b)?;
    Ok(Product::new(
        a.value as u128 * b.value as u128,
        2 * a.width,
    ))
}

/// Accurate shift-and-add multiplier, one accumulation per cycle.
pub fn mul_accurate_sequential(a: &Operand, b: &Operand) -> Result<Product> {
    check_pair(a, b)?;
    Ok(Product::new(
        accurate_datapath(a.value, b.value, a.width),
        2 * a.width,
    ))
}

/// Approximate multiplier with the carry chain split at `cfg.t`.
pub fn mul_approx_sequential(
    a: &Operand,
    b: &Operand,
    cfg: &MultiplierConfig,
) -> Result<Product> {
    check_pair(a, b)?;
    cfg.validate()?;
    if a.width != cfg.n {
        return Err(Error::WidthMismatch {
            left: a.width,
            right: cfg.n,
        });
    }
    Ok(Product::new(evaluate(a.value, b.value, cfg).product, 2 * cfg.n))
}

/// Register-level accurate datapath on raw words. Operands must fit in `n`
/// bits.
pub fn accurate_datapath(a: u64, b: u64, n: u32) -> u128 {
    let mut acc: u128 = if b & 1 == 1 { a as u128 } else { 0 };
    let mut shifted_out: u64 = 0;
    for j in 1..n {
        shifted_out |= ((acc & 1) as u64) << (j - 1);
        let addend = if (b >> j) & 1 == 1 { a as u128 } else { 0 };
        acc = (acc >> 1) + addend;
    }
    shifted_out as u128 | (acc << (n - 1))
}

/// Register-level approximate datapath on raw words.
///
/// The configuration is assumed valid and the operands to fit in `cfg.n`
/// bits; the checked entry point is [`mul_approx_sequential`].
pub fn evaluate(a: u64, b: u64, cfg: &MultiplierConfig) -> Evaluation {
    let n = cfg.n;
    let t = cfg.t;
    let lsp_mask: u128 = (1u128 << t) - 1;
    let a_lsp = a as u128 & lsp_mask;
    let a_msp = a as u128 >> t;

    let mut acc: u128 = if b & 1 == 1 { a as u128 } else { 0 };
    let mut shifted_out: u64 = 0;
    let mut carry_ff: u128 = 0;
    let mut lsp_carries: u64 = 0;

    for j in 1..n {
        shifted_out |= ((acc & 1) as u64) << (j - 1);
        let x = acc >> 1;
        let take = (b >> j) & 1 == 1;
        let lsp = (x & lsp_mask) + if take { a_lsp } else { 0 };
        let carry_out = lsp >> t;
        lsp_carries |= (carry_out as u64) << j;
        if cfg.segmented {
            let msp = (x >> t) + if take { a_msp } else { 0 } + carry_ff;
            acc = (msp << t) | (lsp & lsp_mask);
            carry_ff = carry_out;
        } else {
            acc = x + if take { a as u128 } else { 0 };
        }
    }

    let mut product = shifted_out as u128 | (acc << (n - 1));
    if cfg.fix_active() && (lsp_carries >> (n - 1)) & 1 == 1 {
        product |= cfg.fix_mask();
    }
    Evaluation {
        product,
        lsp_carries,
    }
}
