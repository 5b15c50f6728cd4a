//! Rayon-backed versions of the core drivers. Results are assembled in
//! input order, so output is identical to the sequential drivers.

use rayon::prelude::*;

use rabi_core::curves::{check_plane, evaluate_cell, Axis, GridKind, PlaneGrid};
use rabi_core::exceptional::{
    find_s1_with, find_s2_with, Baseline, ExceptionalPoint, SearchOptions,
};
use rabi_core::spectrum::{coupling_grid, sweep_column};
use rabi_core::{ModelParams, Result, SpectrumSweep, Truncation};

pub fn sweep_spectrum(
    p: &ModelParams,
    g_lo: f64,
    g_hi: f64,
    points: usize,
    count: usize,
    t: &Truncation,
) -> Result<SpectrumSweep> {
    let gs = coupling_grid(g_lo, g_hi, points)?;
    let columns = gs
        .par_iter()
        .map(|&g| sweep_column(p, g, count, t).map(|(row, complete)| (g, row, complete)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSweep::from_columns(p, count, columns))
}

pub fn sample_plane(
    kind: GridKind,
    b: Baseline,
    p: &ModelParams,
    delta_axis: Axis,
    g_axis: Axis,
    t: &Truncation,
) -> Result<PlaneGrid> {
    check_plane(p, &g_axis)?;
    let nd = delta_axis.points;
    let cells = (0..nd * g_axis.points)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nd, k / nd);
            evaluate_cell(kind, b, p, delta_axis.value(i), g_axis.value(j), t)
        })
        .collect();
    PlaneGrid::from_cells(b, kind, p, delta_axis, g_axis, cells)
}

/// S1 and S2 points for each baseline, one task per baseline.
pub fn exceptional_points(
    baselines: &[Baseline],
    p: &ModelParams,
    g_lo: f64,
    g_hi: f64,
    t: &Truncation,
    opts: &SearchOptions,
) -> Result<Vec<(Vec<ExceptionalPoint>, Vec<ExceptionalPoint>)>> {
    baselines
        .par_iter()
        .map(|&b| {
            let s1 = find_s1_with(b, p, g_lo, g_hi, t, opts)?;
            let s2 = find_s2_with(b, p, g_lo, g_hi, t, opts)?;
            Ok((s1, s2))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rabi_core::Branch;

    #[test]
    fn parallel_sweep_matches_sequential() {
        let p = ModelParams::new(1.0, 0.0, 1.2, 0.3).unwrap();
        let t = Truncation::default();
        let a = sweep_spectrum(&p, 0.1, 1.0, 10, 4, &t).unwrap();
        let b = rabi_core::spectrum::sweep_spectrum(&p, 0.1, 1.0, 10, 4, &t).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_plane_matches_sequential() {
        let p = ModelParams::new(1.0, 0.5, 1.2, 0.3).unwrap();
        let t = Truncation::default();
        let b = Baseline::new(1, Branch::Plus);
        let d = Axis::new(0.0, 2.0, 11).unwrap();
        let g = Axis::new(0.05, 1.0, 9).unwrap();
        for kind in [GridKind::Regularized, GridKind::Constraint] {
            let x = sample_plane(kind, b, &p, d, g, &t).unwrap();
            let y = rabi_core::curves::sample_plane(kind, b, &p, d, g, &t).unwrap();
            assert_eq!(x, y);
        }
    }
}
