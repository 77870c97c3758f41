//! Signal-probability propagation through the approximate recurrences.
//!
//! Each sum and carry bit is written as a full-adder output over three
//! inputs: the previous accumulation bit, the incoming carry and the partial
//! product `a_i & b_j`. Their probabilities are combined as if independent,
//! except that every quantity is evaluated under a cofactor with respect to
//! a small set of multiplier-bit literals. When the recurrence consumes
//! `a_i`, the literal `a_i = 0/1` is pushed onto the conditioning set so the
//! operands that reconverge on `a_i` are evaluated on the matching cofactor.
//! At most `depth` literals are kept; the oldest is dropped first.
//!
//! Multiplicand bits are never put in the conditioning set. A cycle's carry
//! bits are instead split on the current `b_j` only, which is exact because
//! no earlier signal depends on `b_j`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::distribution::InputDistribution;
use crate::error::{Error, Result};
use crate::multiplier::MultiplierConfig;

/// Independent per-bit probabilities of the two operands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputBitProbabilities {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl InputBitProbabilities {
    pub fn constant(n: u32, pa: f64, pb: f64) -> Self {
        Self {
            a: vec![pa; n as usize],
            b: vec![pb; n as usize],
        }
    }

    pub fn uniform(n: u32) -> Self {
        Self::constant(n, 0.5, 0.5)
    }

    /// Marginal bit probabilities of two operand distributions.
    pub fn from_distributions(a: &InputDistribution, b: &InputDistribution) -> Self {
        Self {
            a: (0..a.width()).map(|i| a.bit_probability(i)).collect(),
            b: (0..b.width()).map(|i| b.bit_probability(i)).collect(),
        }
    }

    fn validate(&self, n: u32) -> Result<()> {
        if self.a.len() != n as usize || self.b.len() != n as usize {
            return Err(Error::Distribution(format!(
                "expected {n} bit probabilities per operand, got {} and {}",
                self.a.len(),
                self.b.len()
            )));
        }
        if let Some(p) = self
            .a
            .iter()
            .chain(&self.b)
            .find(|p| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::Distribution(format!("{p} is not a probability")));
        }
        Ok(())
    }
}

/// A multiplier-bit literal `a_index = value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Literal {
    pub index: u32,
    pub value: bool,
}

/// A sum bit `S_i^j` or a carry bit `C_i^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Signal {
    Sum { i: u32, j: u32 },
    Carry { i: u32, j: u32 },
}

/// Estimated signal probabilities of one configuration.
#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityTable {
    pub config: MultiplierConfig,
    pub depth: usize,
    pub inputs: InputBitProbabilities,
    /// `sums[j][i]` estimates `Pr[S_i^j = 1]`, `i` in `0..=n`.
    sums: Vec<Vec<f64>>,
    /// `carries[j][i]` estimates `Pr[C_i^j = 1]`, `i` in `0..n`.
    carries: Vec<Vec<f64>>,
    /// Cofactored estimates, keyed by signal and ordered literal set.
    #[serde(skip)]
    conditional: BTreeMap<(Signal, Vec<Literal>), f64>,
}

impl ProbabilityTable {
    pub fn sum(&self, i: u32, j: u32) -> f64 {
        self.sums[j as usize][i as usize]
    }

    pub fn carry(&self, i: u32, j: u32) -> f64 {
        self.carries[j as usize][i as usize]
    }

    /// Estimate of `Pr[signal = 1 | literals]`. With an empty literal set this
    /// is the marginal estimate.
    pub fn get(&self, signal: Signal, literals: &[Literal]) -> Option<f64> {
        if literals.is_empty() {
            return Some(match signal {
                Signal::Sum { i, j } => self.sum(i, j),
                Signal::Carry { i, j } => self.carry(i, j),
            });
        }
        self.conditional.get(&(signal, literals.to_vec())).copied()
    }

    /// Estimate of `Pr[signal = 0 | literals]`.
    pub fn get_complement(&self, signal: Signal, literals: &[Literal]) -> Option<f64> {
        self.get(signal, literals).map(|p| 1.0 - p)
    }

    /// `Pr[S_i^j = 1]` conditioned on one multiplier bit, falling back to the
    /// marginal estimate when the table was built without conditioning.
    pub fn sum_given(&self, i: u32, j: u32, literal: Literal) -> f64 {
        if self.depth == 0 {
            return self.sum(i, j);
        }
        self.get(Signal::Sum { i, j }, &[literal])
            .unwrap_or_else(|| self.sum(i, j))
    }

    /// Every stored probability, marginal and conditional.
    pub fn entries(&self) -> impl Iterator<Item = (Signal, &[Literal], f64)> + '_ {
        let sums = self.sums.iter().enumerate().flat_map(|(j, row)| {
            row.iter().enumerate().map(move |(i, &p)| {
                (Signal::Sum { i: i as u32, j: j as u32 }, &[][..], p)
            })
        });
        let carries = self.carries.iter().enumerate().flat_map(|(j, row)| {
            row.iter().enumerate().map(move |(i, &p)| {
                (Signal::Carry { i: i as u32, j: j as u32 }, &[][..], p)
            })
        });
        let conditional = self
            .conditional
            .iter()
            .map(|((s, lits), &p)| (*s, lits.as_slice(), p));
        sums.chain(carries).chain(conditional)
    }
}

type Literals = Vec<Literal>;

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    carry: bool,
    i: u32,
    j: u32,
    literals: Literals,
    b: Option<bool>,
}

struct Propagator<'a> {
    cfg: &'a MultiplierConfig,
    inputs: &'a InputBitProbabilities,
    depth: usize,
    memo: HashMap<Key, f64>,
}

impl<'a> Propagator<'a> {
    fn a_given(&self, i: u32, value: bool, lits: &[Literal]) -> f64 {
        match lits.iter().find(|l| l.index == i) {
            Some(l) => (l.value == value) as u8 as f64,
            None => {
                let p = self.inputs.a[i as usize];
                if value {
                    p
                } else {
                    1.0 - p
                }
            }
        }
    }

    fn b_weight(&self, j: u32, b: Option<bool>) -> f64 {
        let p = self.inputs.b[j as usize];
        match b {
            None => p,
            Some(true) => 1.0,
            Some(false) => 0.0,
        }
    }

    fn push(&self, lits: &[Literal], lit: Literal) -> Literals {
        if self.depth == 0 {
            return Vec::new();
        }
        if lits.iter().any(|l| l.index == lit.index) {
            return lits.to_vec();
        }
        let mut out = lits.to_vec();
        out.push(lit);
        if out.len() > self.depth {
            out.remove(0);
        }
        out
    }

    fn sum(&mut self, i: u32, j: u32, lits: &[Literal], b: Option<bool>) -> f64 {
        let n = self.cfg.n;
        if j == 0 {
            return if i == n {
                0.0
            } else {
                self.a_given(i, true, lits) * self.b_weight(0, b)
            };
        }
        if i == n {
            return self.carry(n - 1, j, lits, b);
        }
        self.adder_output(false, i, j, lits, b)
    }

    fn carry(&mut self, i: u32, j: u32, lits: &[Literal], b: Option<bool>) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.adder_output(true, i, j, lits, b)
    }

    fn adder_output(&mut self, carry: bool, i: u32, j: u32, lits: &[Literal], b: Option<bool>) -> f64 {
        let key = Key {
            carry,
            i,
            j,
            literals: lits.to_vec(),
            b,
        };
        if let Some(&p) = self.memo.get(&key) {
            return p;
        }
        let p = match b {
            None => {
                let pb = self.inputs.b[j as usize];
                let one = if pb > 0.0 {
                    self.adder_output(carry, i, j, lits, Some(true))
                } else {
                    0.0
                };
                let zero = if pb < 1.0 {
                    self.adder_output(carry, i, j, lits, Some(false))
                } else {
                    0.0
                };
                pb * one + (1.0 - pb) * zero
            }
            Some(bj) => {
                let mut total = 0.0;
                for value in [false, true] {
                    let pa = self.a_given(i, value, lits);
                    if pa == 0.0 {
                        continue;
                    }
                    let cof = self.push(lits, Literal { index: i, value });
                    let x = self.sum(i + 1, j - 1, &cof, None);
                    let c = self.carry_in(i, j, &cof, bj);
                    let y = value && bj;
                    let out = if carry {
                        if y {
                            x + c - x * c
                        } else {
                            x * c
                        }
                    } else {
                        let odd = x * (1.0 - c) + (1.0 - x) * c;
                        if y {
                            1.0 - odd
                        } else {
                            odd
                        }
                    };
                    total += pa * out;
                }
                total
            }
        };
        let p = p.clamp(0.0, 1.0);
        self.memo.insert(key, p);
        p
    }

    fn carry_in(&mut self, i: u32, j: u32, lits: &[Literal], bj: bool) -> f64 {
        if i == 0 {
            0.0
        } else if self.cfg.segmented && i == self.cfg.t {
            self.carry(self.cfg.t - 1, j - 1, lits, None)
        } else {
            self.carry(i - 1, j, lits, Some(bj))
        }
    }
}

/// Builds the probability table of `cfg` with conditioning sets of at most
/// `depth` multiplier-bit literals.
pub fn propagate_probabilities(
    cfg: &MultiplierConfig,
    inputs: &InputBitProbabilities,
    depth: usize,
) -> Result<ProbabilityTable> {
    cfg.validate()?;
    inputs.validate(cfg.n)?;
    let n = cfg.n;
    let mut prop = Propagator {
        cfg,
        inputs,
        depth,
        memo: HashMap::new(),
    };

    let mut sums = Vec::with_capacity(n as usize);
    let mut carries = Vec::with_capacity(n as usize);
    for j in 0..n {
        carries.push((0..n).map(|i| prop.carry(i, j, &[], None)).collect::<Vec<_>>());
        sums.push((0..=n).map(|i| prop.sum(i, j, &[], None)).collect::<Vec<_>>());
    }

    // Single-literal cofactors of every accumulation bit against the
    // multiplier bit it meets in the next cycle.
    let mut cofactors = Vec::new();
    if depth > 0 {
        for j in 0..n {
            for i in 1..=n {
                for value in [false, true] {
                    let lits = vec![Literal { index: i - 1, value }];
                    let p = prop.sum(i, j, &lits, None);
                    cofactors.push(((Signal::Sum { i, j }, lits), p));
                }
            }
        }
    }

    let mut conditional: BTreeMap<(Signal, Vec<Literal>), f64> = prop
        .memo
        .into_iter()
        .filter(|(k, _)| k.b.is_none() && !k.literals.is_empty())
        .map(|(k, p)| {
            let signal = if k.carry {
                Signal::Carry { i: k.i, j: k.j }
            } else {
                Signal::Sum { i: k.i, j: k.j }
            };
            ((signal, k.literals), p)
        })
        .collect();
    conditional.extend(cofactors);

    Ok(ProbabilityTable {
        config: *cfg,
        depth,
        inputs: inputs.clone(),
        sums,
        carries,
        conditional,
    })
}
