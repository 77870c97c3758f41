//! Probability mass functions over `n`-bit operand values.
//!
//! File format: a first line `n=<width>`, followed by exactly `2^n` lines,
//! each holding the decimal probability of the operand value equal to the
//! line index. Files whose probabilities do not sum to one within `1e-9` are
//! rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::multiplier::{check_width, width_mask};

/// Largest width for which an explicit table is accepted.
pub const MAX_EXPLICIT_WIDTH: u32 = 24;

pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum InputDistribution {
    Uniform {
        width: u32,
    },
    Explicit {
        width: u32,
        pmf: Vec<f64>,
        /// Inclusive prefix sums; entries from the last non-zero mass on are
        /// `+inf` so inverse-CDF lookups never run past the support.
        cdf: Vec<f64>,
    },
}

impl InputDistribution {
    pub fn uniform(width: u32) -> Result<Self> {
        check_width(width).map_err(|_| Error::Distribution(format!("width {width} out of range")))?;
        Ok(Self::Uniform { width })
    }

    pub fn from_pmf(width: u32, pmf: Vec<f64>) -> Result<Self> {
        if width == 0 || width > MAX_EXPLICIT_WIDTH {
            return Err(Error::Distribution(format!(
                "explicit tables are limited to widths 1..={MAX_EXPLICIT_WIDTH}, got {width}"
            )));
        }
        let expected = 1usize << width;
        if pmf.len() != expected {
            return Err(Error::Distribution(format!(
                "expected {expected} probabilities for n={width}, found {}",
                pmf.len()
            )));
        }
        if let Some((i, p)) = pmf
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::Distribution(format!("entry {i} is not a probability: {p}")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Distribution(format!("probabilities sum to {total}, not 1")));
        }
        let mut cdf: Vec<f64> = pmf
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let last = pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        cdf[last..].iter_mut().for_each(|c| *c = f64::INFINITY);
        Ok(Self::Explicit { width, pmf, cdf })
    }

    pub fn point_mass(width: u32, value: u64) -> Result<Self> {
        if width > MAX_EXPLICIT_WIDTH || width == 0 {
            return Err(Error::Distribution(format!("width {width} out of range")));
        }
        if value >> width != 0 {
            return Err(Error::Distribution(format!("{value} does not fit in {width} bits")));
        }
        let mut pmf = vec![0.0; 1 << width];
        pmf[value as usize] = 1.0;
        Self::from_pmf(width, pmf)
    }

    pub fn width(&self) -> u32 {
        match self {
            Self::Uniform { width } | Self::Explicit { width, .. } => *width,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Self::Uniform { .. })
    }

    /// Probability of operand value `v`.
    pub fn prob(&self, v: u64) -> f64 {
        match self {
            Self::Uniform { width } => {
                if v > width_mask(*width) {
                    0.0
                } else {
                    (-(*width as f64)).exp2()
                }
            }
            Self::Explicit { pmf, .. } => pmf.get(v as usize).copied().unwrap_or(0.0),
        }
    }

    /// Probability that bit `i` of the operand is one.
    pub fn bit_probability(&self, i: u32) -> f64 {
        match self {
            Self::Uniform { width } => {
                if i < *width {
                    0.5
                } else {
                    0.0
                }
            }
            Self::Explicit { pmf, .. } => pmf
                .iter()
                .enumerate()
                .filter(|(v, _)| (v >> i) & 1 == 1)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// Maps one 64-bit random word to an operand value: direct word sampling
    /// for the uniform case, inverse CDF otherwise.
    pub fn sample(&self, word: u64) -> u64 {
        match self {
            Self::Uniform { width } => word & width_mask(*width),
            Self::Explicit { cdf, .. } => {
                let u = (word >> 11) as f64 * (-53f64).exp2();
                cdf.partition_point(|&c| c <= u) as u64
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Distribution("empty file".into()))?;
        let width: u32 = header
            .strip_prefix("n=")
            .and_then(|w| w.trim().parse().ok())
            .ok_or_else(|| Error::Distribution(format!("bad header line {header:?}")))?;
        if width == 0 || width > MAX_EXPLICIT_WIDTH {
            return Err(Error::Distribution(format!("width {width} out of range")));
        }
        let pmf = lines
            .enumerate()
            .map(|(i, l)| {
                l.parse::<f64>()
                    .map_err(|_| Error::Distribution(format!("line {}: {l:?} is not a number", i + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_pmf(width, pmf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Renders the distribution in the file format. Uniform distributions
    /// are expanded, so this is limited to explicit-table widths.
    pub fn to_text(&self) -> Result<String> {
        let width = self.width();
        if width > MAX_EXPLICIT_WIDTH {
            return Err(Error::Distribution(format!("width {width} too large to expand")));
        }
        let mut out = format!("n={width}\n");
        for v in 0..1u64 << width {
            let _ = writeln!(out, "{:e}", self.prob(v));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_format() {
        let d = InputDistribution::parse("n=2\n0.25\n0.25\n0.5\n0\n").unwrap();
        assert_eq!(d.width(), 2);
        assert_eq!(d.prob(2), 0.5);
        assert_eq!(d.prob(3), 0.0);
        assert!((d.bit_probability(1) - 0.5).abs() < 1e-15);
        assert!((d.bit_probability(0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_files() {
        for text in [
            "",
            "width=2\n0.25\n0.25\n0.25\n0.25",
            "n=2\n0.25\n0.25\n0.25",
            "n=2\n0.25\n0.25\n0.25\n0.3",
            "n=1\n-0.5\n1.5",
            "n=1\nabc\n1",
            "n=0\n1",
        ] {
            assert!(
                matches!(InputDistribution::parse(text), Err(Error::Distribution(_))),
                "{text:?}"
            );
        }
    }

    #[test]
    fn tolerance_is_one_in_a_billion() {
        assert!(InputDistribution::parse("n=1\n0.5\n0.5000000005").is_ok());
        assert!(InputDistribution::parse("n=1\n0.5\n0.500000002").is_err());
    }

    #[test]
    fn text_round_trip() {
        let d = InputDistribution::from_pmf(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let again = InputDistribution::parse(&d.to_text().unwrap()).unwrap();
        assert_eq!(d, again);
        let u = InputDistribution::uniform(3).unwrap();
        let expanded = InputDistribution::parse(&u.to_text().unwrap()).unwrap();
        assert_eq!(expanded.prob(5), 0.125);
    }

    #[test]
    fn sampling_never_leaves_support() {
        let d = InputDistribution::from_pmf(2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        for w in [0, 1, u64::MAX, u64::MAX / 2, 1 << 63] {
            let v = d.sample(w);
            assert!(v == 1 || v == 2, "{v}");
        }
        let pm = InputDistribution::point_mass(4, 9).unwrap();
        for w in [0, 12345, u64::MAX] {
            assert_eq!(pm.sample(w), 9);
        }
        let u = InputDistribution::uniform(64).unwrap();
        assert_eq!(u.sample(u64::MAX), u64::MAX);
    }
}
