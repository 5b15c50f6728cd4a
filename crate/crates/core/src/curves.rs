//! Constraint curves in the Δ–g plane.
//!
//! A [`PlaneGrid`] holds either `𝒢ε(x_p)` or the constraint polynomial
//! `K_N^∓(x_p)` on a uniform (Δ, g) grid for one baseline; the zero level
//! set is extracted with marching squares.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exceptional::{constraint_value, Baseline};
use crate::gfunction::g_reg_at_baseline;
use crate::math;
use crate::params::{ModelParams, Truncation};
use crate::signed_log::SignedLog;

/// Uniform axis with `points` samples from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument("axis must satisfy lo < hi"));
        }
        if points < 2 {
            return Err(Error::InvalidArgument("axis needs at least two points"));
        }
        Ok(Axis { lo, hi, points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }
}

/// What a grid samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridKind {
    /// `𝒢ε(x_p)`: every exceptional point.
    Regularized,
    /// `K_N^∓(x_p)`: the S1 subset.
    Constraint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// `None` when evaluation failed.
    pub value: Option<SignedLog>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneGrid {
    pub baseline: Baseline,
    pub kind: GridKind,
    pub omega: f64,
    pub epsilon: f64,
    pub delta_axis: Axis,
    pub g_axis: Axis,
    /// Row-major: `cells[j * delta_axis.points + i]` is `(Δ_i, g_j)`.
    pub cells: Vec<Cell>,
}

impl PlaneGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.delta_axis.points + i]
    }

    pub fn flagged(&self) -> usize {
        self.cells.iter().filter(|c| c.value.is_none()).count()
    }

    /// Builds a grid from already evaluated cells, e.g. computed in parallel.
    pub fn from_cells(
        baseline: Baseline,
        kind: GridKind,
        p: &ModelParams,
        delta_axis: Axis,
        g_axis: Axis,
        cells: Vec<Cell>,
    ) -> Result<Self> {
        if cells.len() != delta_axis.points * g_axis.points {
            return Err(Error::InvalidArgument("cell count does not match the axes"));
        }
        Ok(PlaneGrid {
            baseline,
            kind,
            omega: p.omega,
            epsilon: p.epsilon,
            delta_axis,
            g_axis,
            cells,
        })
    }
}

/// Evaluates one grid cell at `(Δ, g)`; failures become flagged cells.
pub fn evaluate_cell(
    kind: GridKind,
    b: Baseline,
    p: &ModelParams,
    delta: f64,
    g: f64,
    t: &Truncation,
) -> Cell {
    let q = p.with_delta(delta).with_g(g);
    match kind {
        GridKind::Regularized => match g_reg_at_baseline(b, &q, &t.for_coupling(g, p.omega)) {
            Ok(bv) => Cell {
                value: Some(bv.value.value),
                converged: bv.value.converged,
            },
            Err(_) => Cell {
                value: None,
                converged: false,
            },
        },
        GridKind::Constraint => match constraint_value(b, &q, t) {
            Ok(k) if k.is_finite() => Cell {
                value: Some(SignedLog::from_f64(k)),
                converged: true,
            },
            _ => Cell {
                value: None,
                converged: false,
            },
        },
    }
}

/// Argument checks shared by every plane sampler.
pub fn check_plane(p: &ModelParams, g_axis: &Axis) -> Result<()> {
    p.validate()?;
    p.require_non_resonant()?;
    if !(g_axis.lo > 0.0) {
        return Err(Error::InvalidArgument("g axis must start above zero"));
    }
    Ok(())
}

/// Samples `kind` over the plane for one baseline. `p.delta` and `p.g`
/// are ignored.
pub fn sample_plane(
    kind: GridKind,
    b: Baseline,
    p: &ModelParams,
    delta_axis: Axis,
    g_axis: Axis,
    t: &Truncation,
) -> Result<PlaneGrid> {
    check_plane(p, &g_axis)?;
    let mut cells = Vec::with_capacity(delta_axis.points * g_axis.points);
    for j in 0..g_axis.points {
        let g = g_axis.value(j);
        for i in 0..delta_axis.points {
            cells.push(evaluate_cell(kind, b, p, delta_axis.value(i), g, t));
        }
    }
    PlaneGrid::from_cells(b, kind, p, delta_axis, g_axis, cells)
}

/// Which zero set a contour belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContourKind {
    S1,
    S2OrAll,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    /// `(Δ, g)` vertices. Closed polylines repeat their first vertex last.
    pub vertices: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub baseline: Baseline,
    pub kind: ContourKind,
    pub polylines: Vec<Polyline>,
    /// Saddle cells `(i, j)` resolved with the centre-sign rule.
    pub saddles: Vec<(usize, usize)>,
    /// Cells skipped because a corner failed to evaluate.
    pub gaps: usize,
    pub delta_step: f64,
    pub g_step: f64,
}

impl ContourSet {
    /// `g` values where the contours cross the vertical line `Δ = delta`,
    /// ascending.
    pub fn crossings_at_delta(&self, delta: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for line in &self.polylines {
            for w in line.vertices.windows(2) {
                let ((d0, g0), (d1, g1)) = (w[0], w[1]);
                let (lo, hi) = if d0 <= d1 { (d0, d1) } else { (d1, d0) };
                if lo == hi || delta < lo || delta >= hi {
                    continue;
                }
                let s = (delta - d0) / (d1 - d0);
                out.push(g0 + s * (g1 - g0));
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(|l| l.vertices.len()).sum()
    }

    /// Length of a cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        math::sqrt(self.delta_step * self.delta_step + self.g_step * self.g_step)
    }
}

/// Fraction along an edge from `a` to `b` where the zero is placed.
///
/// Each side is weighted by `ln(1 + |v| / min(|a|, |b|))`, which depends
/// only on the log magnitudes and stays finite for any range.
fn crossing_fraction(a: SignedLog, b: SignedLog) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    if b.is_zero() {
        return 1.0;
    }
    let (la, lb) = (a.log_mag(), b.log_mag());
    let m = la.min(lb);
    let wa = math::ln_1p(math::exp(la - m));
    let wb = math::ln_1p(math::exp(lb - m));
    if !wa.is_finite() {
        return 1.0;
    }
    if !wb.is_finite() {
        return 0.0;
    }
    wa / (wa + wb)
}

/// Edge identifiers: horizontal edges run along Δ from corner `(i, j)`,
/// vertical edges along g.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

fn inside(v: SignedLog) -> bool {
    v.sign() < 0
}

/// Zero level set of a grid as polylines.
pub fn trace_contours(grid: &PlaneGrid) -> Result<ContourSet> {
    let total = grid.cells.len();
    let flagged = grid.flagged();
    if flagged * 20 > total {
        return Err(Error::TooManyFlaggedCells { flagged, total });
    }
    let nd = grid.delta_axis.points;
    let ng = grid.g_axis.points;
    let value = |i: usize, j: usize| grid.cell(i, j).value;

    let position = |e: Edge| -> (f64, f64) {
        match e {
            Edge::H(i, j) => {
                let s = crossing_fraction(value(i, j).unwrap(), value(i + 1, j).unwrap());
                let d0 = grid.delta_axis.value(i);
                let d1 = grid.delta_axis.value(i + 1);
                (d0 + s * (d1 - d0), grid.g_axis.value(j))
            }
            Edge::V(i, j) => {
                let s = crossing_fraction(value(i, j).unwrap(), value(i, j + 1).unwrap());
                let g0 = grid.g_axis.value(j);
                let g1 = grid.g_axis.value(j + 1);
                (grid.delta_axis.value(i), g0 + s * (g1 - g0))
            }
        }
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    let mut saddles = Vec::new();
    let mut gaps = 0;
    for j in 0..ng - 1 {
        for i in 0..nd - 1 {
            let (Some(v00), Some(v10), Some(v11), Some(v01)) = (
                value(i, j),
                value(i + 1, j),
                value(i + 1, j + 1),
                value(i, j + 1),
            ) else {
                gaps += 1;
                continue;
            };
            let case = (inside(v00) as u8)
                | (inside(v10) as u8) << 1
                | (inside(v11) as u8) << 2
                | (inside(v01) as u8) << 3;
            let bottom = Edge::H(i, j);
            let right = Edge::V(i + 1, j);
            let top = Edge::H(i, j + 1);
            let left = Edge::V(i, j);
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 | 10 => {
                    saddles.push((i, j));
                    let centre: SignedLog = [v00, v10, v11, v01].into_iter().sum();
                    let centre_inside = inside(centre);
                    // corners 0 and 2 share a side in case 5
                    let diagonal_02_inside = case == 5;
                    if centre_inside == diagonal_02_inside {
                        // the centre joins corners 0 and 2
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut adjacency: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }

    let mut used = alloc::vec![false; segments.len()];
    let mut polylines = Vec::new();
    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut chain = alloc::vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            chain.push(next);
            at = next;
            match adjacency[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        chain
    };

    // open chains start at edges touched by a single segment
    let ends: Vec<(Edge, usize)> = adjacency
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(e, segs)| (*e, segs[0]))
        .collect();
    for (edge, seg) in ends {
        if used[seg] {
            continue;
        }
        let chain = walk(seg, edge, &mut used);
        polylines.push(Polyline {
            vertices: chain.into_iter().map(position).collect(),
            closed: false,
        });
    }
    for seg in 0..segments.len() {
        if used[seg] {
            continue;
        }
        let chain = walk(seg, segments[seg].0, &mut used);
        let closed = chain.first() == chain.last();
        polylines.push(Polyline {
            vertices: chain.into_iter().map(position).collect(),
            closed,
        });
    }

    Ok(ContourSet {
        baseline: grid.baseline,
        kind: match grid.kind {
            GridKind::Regularized => ContourKind::S2OrAll,
            GridKind::Constraint => ContourKind::S1,
        },
        polylines,
        saddles,
        gaps,
        delta_step: grid.delta_axis.step(),
        g_step: grid.g_axis.step(),
    })
}
