//! Parsers for the command-line value syntaxes.

use std::fmt;
use std::str::FromStr;

use rabi_core::{Baseline, Branch};

/// `lo:hi:steps`. What `steps` counts (grid points or scan cells) is up to
/// the consumer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts[..] else {
            return Err(format!("expected lo:hi:steps, got `{s}`"));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{v}` is not a finite number"))
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        let steps = steps
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("`{steps}` is not a step count"))?;
        if !(hi > lo) {
            return Err(format!("range `{s}` needs lo < hi"));
        }
        if steps < 2 {
            return Err(format!("range `{s}` needs at least 2 steps"));
        }
        Ok(Range { lo, hi, steps })
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.lo, self.hi, self.steps)
    }
}

/// Comma-separated baseline indices, each a number or an inclusive `a:b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levels(pub Vec<u32>);

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let int = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| format!("`{v}` is not a baseline index"))
        };
        let mut out = Vec::new();
        for item in s.split(',') {
            match item.split_once(':') {
                Some((a, b)) => {
                    let (a, b) = (int(a)?, int(b)?);
                    if a > b {
                        return Err(format!("`{item}` is decreasing"));
                    }
                    out.extend(a..=b);
                }
                None => out.push(int(item)?),
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(Levels(out))
    }
}

impl fmt::Display for Levels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&items.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BranchChoice {
    Plus,
    Minus,
    Both,
}

impl BranchChoice {
    pub fn branches(self) -> &'static [Branch] {
        match self {
            BranchChoice::Plus => &[Branch::Plus],
            BranchChoice::Minus => &[Branch::Minus],
            BranchChoice::Both => &Branch::BOTH,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BranchChoice::Plus => "plus",
            BranchChoice::Minus => "minus",
            BranchChoice::Both => "both",
        }
    }
}

/// Baselines in output order: ascending `N`, plus before minus.
pub fn baselines(levels: &Levels, branch: BranchChoice) -> Vec<Baseline> {
    levels
        .0
        .iter()
        .flat_map(|&n| branch.branches().iter().map(move |&b| Baseline::new(n, b)))
        .collect()
}
