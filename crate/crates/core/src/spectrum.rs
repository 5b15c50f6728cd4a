//! Eigenvalues as zeros of 𝒢ε(x): grid scan, bisection, baseline
//! insertion, and sweeps over the coupling.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exceptional::Baseline;
use crate::gfunction::{default_n_prod, g_reg_at_baseline, g_reg_continuous, ZeroVerdict};
use crate::math;
use crate::params::{ModelParams, Truncation};

/// Default grid step, in units of ω.
pub const GRID_STEP: f64 = 1.0 / 40.0;

/// Bisection stops once the bracket is this narrow, in units of ω.
const BISECTION_WIDTH: f64 = 1e-12;

/// Extra room, in units of ω, kept above the highest requested level.
const WINDOW_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    /// Ordinal of the zero, ascending in `x`, starting at 0.
    pub index: usize,
    pub x: f64,
    /// `x − g²/ω`.
    pub energy: f64,
    pub on_baseline: Option<Baseline>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    x: f64,
    sign: i8,
    converged: bool,
}

struct Scanner<'a> {
    p: &'a ModelParams,
    t: Truncation,
    n_prod: usize,
}

impl Scanner<'_> {
    fn sample(&self, x: f64) -> Result<Sample> {
        let v = g_reg_continuous(x, self.p, &self.t, self.n_prod)?;
        Ok(Sample {
            x,
            sign: v.value.sign(),
            converged: v.converged,
        })
    }

    fn bisect(&self, mut lo: Sample, mut hi: Sample) -> Result<(f64, bool)> {
        let width = BISECTION_WIDTH * self.p.omega;
        let mut converged = lo.converged && hi.converged;
        while hi.x - lo.x > width {
            let mid = 0.5 * (lo.x + hi.x);
            if mid <= lo.x || mid >= hi.x {
                break;
            }
            let s = self.sample(mid)?;
            converged &= s.converged;
            if s.sign == 0 {
                return Ok((mid, converged));
            }
            if s.sign == lo.sign {
                lo = s;
            } else {
                hi = s;
            }
        }
        Ok((0.5 * (lo.x + hi.x), converged))
    }
}

/// Indices `i` such that cells `i..i+3` hold at least two sign changes.
fn crowded_cells(samples: &[Sample]) -> Vec<bool> {
    let cells = samples.len().saturating_sub(1);
    let change: Vec<bool> = (0..cells)
        .map(|i| samples[i].sign != samples[i + 1].sign)
        .collect();
    let mut refine = alloc::vec![false; cells];
    for start in 0..cells {
        let end = (start + 3).min(cells);
        if change[start..end].iter().filter(|c| **c).count() >= 2 {
            for r in &mut refine[start..end] {
                *r = true;
            }
        }
    }
    refine
}

/// All zeros of 𝒢ε in `[x_lo, x_hi]`.
///
/// Sign changes on the grid are bisected; cells near a pair of sign
/// changes are sampled three times more densely first. Baselines where
/// 𝒢ε(x_p) vanishes without a sign change are inserted twice.
pub fn scan_zeros(
    p: &ModelParams,
    x_lo: f64,
    x_hi: f64,
    grid_step: f64,
    t: &Truncation,
) -> Result<Vec<SpectralPoint>> {
    p.require_coupling()?;
    p.require_non_resonant()?;
    t.validate()?;
    if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
        return Err(Error::InvalidArgument(
            "scan window must satisfy x_lo < x_hi",
        ));
    }
    if !(grid_step > 0.0) || grid_step > p.omega / 20.0 {
        return Err(Error::InvalidArgument("grid step must lie in (0, ω/20]"));
    }
    let scanner = Scanner {
        p,
        t: t.for_coupling(p.g, p.omega),
        n_prod: default_n_prod(x_hi, p.omega),
    };

    let cells = math::ceil((x_hi - x_lo) / grid_step) as usize;
    let step = (x_hi - x_lo) / cells as f64;
    let mut samples = Vec::with_capacity(cells + 1);
    for i in 0..=cells {
        let x = if i == cells {
            x_hi
        } else {
            x_lo + i as f64 * step
        };
        samples.push(scanner.sample(x)?);
    }

    let refine = crowded_cells(&samples);
    if refine.iter().any(|r| *r) {
        let mut dense = Vec::with_capacity(samples.len() * 2);
        for i in 0..samples.len() {
            dense.push(samples[i]);
            if i < refine.len() && refine[i] {
                let (a, b) = (samples[i].x, samples[i + 1].x);
                for k in 1..3 {
                    dense.push(scanner.sample(a + (b - a) * k as f64 / 3.0)?);
                }
            }
        }
        samples = dense;
    }

    let mut roots: Vec<(f64, bool)> = Vec::new();
    for i in 0..samples.len() {
        let s = samples[i];
        if s.sign == 0 {
            roots.push((s.x, s.converged));
            let left = i.checked_sub(1).map(|j| samples[j].sign);
            let right = samples.get(i + 1).map(|r| r.sign);
            if let (Some(l), Some(r)) = (left, right) {
                if l != 0 && l == r {
                    // touches zero without crossing
                    roots.push((s.x, s.converged));
                }
            }
            continue;
        }
        if let Some(&next) = samples.get(i + 1) {
            if next.sign != 0 && next.sign != s.sign {
                roots.push(scanner.bisect(s, next)?);
            }
        }
    }

    let guard = scanner.t.guard(p.omega);
    let mut points: Vec<(f64, bool, Option<Baseline>)> =
        roots.iter().map(|&(x, c)| (x, c, None)).collect();

    // baselines inside the window
    let n_top = math::ceil((x_hi + p.epsilon.abs()) / p.omega).max(0.0) as u32;
    for b in Baseline::up_to(n_top) {
        if p.epsilon == 0.0 && b.branch == crate::params::Branch::Minus {
            continue;
        }
        let xp = b.x_p(p.omega, p.epsilon);
        if xp < x_lo || xp > x_hi {
            continue;
        }
        let bv = g_reg_at_baseline(b, p, &scanner.t)?;
        if bv.verdict != ZeroVerdict::Zero {
            continue;
        }
        let near = 1e-8 * p.omega;
        let mut matched = false;
        for pt in points.iter_mut().filter(|pt| (pt.0 - xp).abs() <= near) {
            *pt = (xp, pt.1, Some(b));
            matched = true;
        }
        if matched {
            continue;
        }
        // even multiplicity: no sign change along x
        points.push((xp, bv.value.converged, Some(b)));
        points.push((xp, bv.value.converged, Some(b)));
    }

    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let shift = p.energy_shift();
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(index, (x, converged, on))| {
            let on_baseline = on.or_else(|| {
                let (b, d) = crate::gfunction::nearest_baseline(x, p);
                (d < guard).then_some(b)
            });
            SpectralPoint {
                index,
                x,
                energy: x - shift,
                on_baseline,
                converged,
            }
        })
        .collect())
}

/// Lower end of the automatic window: below the ground level of every
/// coupling, since `x_0 ≥ −√(Δ² + ε²)`.
pub fn window_floor(p: &ModelParams) -> f64 {
    -(math::sqrt(p.delta * p.delta + p.epsilon * p.epsilon) + p.omega)
}

/// Default upper limit of the automatic window for `count` levels.
pub fn default_ceiling(p: &ModelParams, count: usize) -> f64 {
    window_floor(p) + (2 * count + 40) as f64 * p.omega
}

/// The lowest `count` zeros, extending the window upward as needed.
pub fn energy_levels(p: &ModelParams, count: usize, t: &Truncation) -> Result<Vec<SpectralPoint>> {
    energy_levels_with_ceiling(p, count, t, default_ceiling(p, count))
}

pub fn energy_levels_with_ceiling(
    p: &ModelParams,
    count: usize,
    t: &Truncation,
    ceiling: f64,
) -> Result<Vec<SpectralPoint>> {
    let (points, complete) = levels_up_to(p, count, t, ceiling)?;
    if !complete {
        return Err(Error::WindowExhausted {
            requested: count,
            found: points.len(),
            ceiling,
        });
    }
    Ok(points)
}

fn levels_up_to(
    p: &ModelParams,
    count: usize,
    t: &Truncation,
    ceiling: f64,
) -> Result<(Vec<SpectralPoint>, bool)> {
    if count == 0 {
        return Err(Error::InvalidArgument("level count must be at least 1"));
    }
    let lo = window_floor(p);
    let mut hi = (lo + (count as f64 + WINDOW_MARGIN) * p.omega).min(ceiling);
    loop {
        let mut points = scan_zeros(p, lo, hi, GRID_STEP * p.omega, t)?;
        let enough = points.len() >= count && hi - points[count - 1].x >= WINDOW_MARGIN * p.omega;
        if enough || hi >= ceiling {
            let complete = points.len() >= count;
            points.truncate(count);
            return Ok((points, complete));
        }
        hi = (hi + (count as f64).max(4.0) * p.omega).min(ceiling);
    }
}

/// Eigenvalues over a grid of couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSweep {
    pub omega: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub g_values: Vec<f64>,
    /// One row per coupling.
    pub levels: Vec<Vec<SpectralPoint>>,
    /// Rows that hold fewer than the requested count.
    pub truncated: Vec<bool>,
    pub count: usize,
}

impl SpectrumSweep {
    /// Any row short or any point from a non-converged series.
    pub fn flagged(&self) -> bool {
        self.truncated.iter().any(|t| *t) || self.levels.iter().flatten().any(|pt| !pt.converged)
    }

    /// Assembles a sweep from independently computed columns.
    pub fn from_columns(
        p: &ModelParams,
        count: usize,
        columns: Vec<(f64, Vec<SpectralPoint>, bool)>,
    ) -> Self {
        let mut g_values = Vec::with_capacity(columns.len());
        let mut levels = Vec::with_capacity(columns.len());
        let mut truncated = Vec::with_capacity(columns.len());
        for (g, row, complete) in columns {
            g_values.push(g);
            levels.push(row);
            truncated.push(!complete);
        }
        SpectrumSweep {
            omega: p.omega,
            delta: p.delta,
            epsilon: p.epsilon,
            g_values,
            levels,
            truncated,
            count,
        }
    }
}

/// Evenly spaced couplings, both ends included.
pub fn coupling_grid(g_lo: f64, g_hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(g_lo > 0.0) || !(g_hi > g_lo) {
        return Err(Error::InvalidArgument("sweep must satisfy 0 < g_lo < g_hi"));
    }
    if points < 2 {
        return Err(Error::InvalidArgument("sweep needs at least two points"));
    }
    let step = (g_hi - g_lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                g_hi
            } else {
                g_lo + i as f64 * step
            }
        })
        .collect())
}

/// One column of a sweep: the lowest `count` levels at coupling `g`, and
/// whether all of them were found.
pub fn sweep_column(
    p: &ModelParams,
    g: f64,
    count: usize,
    t: &Truncation,
) -> Result<(Vec<SpectralPoint>, bool)> {
    let q = p.with_g(g);
    levels_up_to(&q, count, t, default_ceiling(&q, count))
}

/// The lowest `count` levels at `points` couplings in `[g_lo, g_hi]`.
/// `p.g` is ignored.
pub fn sweep_spectrum(
    p: &ModelParams,
    g_lo: f64,
    g_hi: f64,
    points: usize,
    count: usize,
    t: &Truncation,
) -> Result<SpectrumSweep> {
    let gs = coupling_grid(g_lo, g_hi, points)?;
    let mut columns = Vec::with_capacity(gs.len());
    for g in gs {
        let (row, complete) = sweep_column(p, g, count, t)?;
        columns.push((g, row, complete));
    }
    Ok(SpectrumSweep::from_columns(p, count, columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn params(g: f64, delta: f64, epsilon: f64) -> ModelParams {
        ModelParams::new(1.0, g, delta, epsilon).unwrap()
    }

    #[test]
    fn displaced_ladder_is_doubly_degenerate() {
        let p = params(0.5, 0.0, 0.0);
        let pts = scan_zeros(&p, -0.5, 3.5, GRID_STEP, &Truncation::default()).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        assert_eq!(xs, [0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        for (i, pt) in pts.iter().enumerate() {
            assert_eq!(pt.index, i);
            assert!((pt.energy - ((i / 2) as f64 - 0.25)).abs() < 1e-15);
            assert!(pt.on_baseline.is_some());
        }
    }

    #[test]
    fn matches_oracle_in_window() {
        let p = params(0.7, 1.2, 0.3);
        let pts = scan_zeros(&p, -2.0, 5.0, GRID_STEP, &Truncation::default()).unwrap();
        let ev = oracle::spectrum(&p, 60).unwrap();
        let shift = p.energy_shift();
        let inside: Vec<f64> = ev
            .iter()
            .copied()
            .filter(|e| e + shift > -2.0 && e + shift < 5.0)
            .collect();
        assert_eq!(pts.len(), inside.len());
        for (a, b) in pts.iter().zip(&inside) {
            assert!((a.energy - b).abs() < 1e-6, "{} vs {}", a.energy, b);
        }
    }

    #[test]
    fn weak_coupling_ground_level() {
        let p = params(0.01, 1.2, 0.3);
        let lv = energy_levels(&p, 2, &Truncation::default()).unwrap();
        assert!((lv[0].energy + libm::sqrt(1.53)).abs() < 1e-3);
        // the next level is the first boson excitation of the lower doublet
        assert!((lv[1].energy - (1.0 - libm::sqrt(1.53))).abs() < 1e-3);
    }

    #[test]
    fn window_growth_keeps_roots() {
        let p = params(0.45, 0.8, 0.15);
        let t = Truncation::default();
        let small = scan_zeros(&p, -1.9, 2.0, GRID_STEP, &t).unwrap();
        let large = scan_zeros(&p, -1.9, 4.5, GRID_STEP, &t).unwrap();
        for a in &small {
            assert!(large.iter().any(|b| (a.x - b.x).abs() < 1e-10));
        }
    }

    #[test]
    fn ceiling_reports_exhaustion() {
        let p = params(0.3, 1.0, 0.1);
        let err = energy_levels_with_ceiling(&p, 30, &Truncation::default(), 2.0).unwrap_err();
        assert!(matches!(err, Error::WindowExhausted { requested: 30, .. }));
    }

    #[test]
    fn argument_checks() {
        let p = params(0.3, 1.0, 0.1);
        let t = Truncation::default();
        assert!(scan_zeros(&p, 1.0, 0.0, GRID_STEP, &t).is_err());
        assert!(scan_zeros(&p, 0.0, 1.0, 0.1, &t).is_err());
        assert!(scan_zeros(&p.with_g(0.0), 0.0, 1.0, GRID_STEP, &t).is_err());
        assert!(energy_levels(&p, 0, &t).is_err());
        assert!(coupling_grid(0.0, 1.0, 5).is_err());
    }

    #[test]
    fn unbiased_sweep_merges_baselines() {
        let b_plus = Baseline::new(2, crate::params::Branch::Plus);
        let b_minus = Baseline::new(2, crate::params::Branch::Minus);
        assert_eq!(b_plus.x_p(1.0, 0.0), b_minus.x_p(1.0, 0.0));
    }
}
