use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use rabi_core::curves::{trace_contours, Axis, ContourSet, GridKind};
use rabi_core::exceptional::{baseline_energy, Baseline, OracleCutoff, SearchOptions};
use rabi_core::spectrum::energy_levels;
use rabi_core::{oracle, ExceptionalClass, ExceptionalPoint, ModelParams, Truncation};

use crate::args::{baselines, Range};
use crate::cli::{
    Common, CurveKind, CurvesArgs, ExceptionalArgs, OracleCheckArgs, OracleSetting, SpectrumArgs,
};
use crate::error::{CliError, CliResult};
use crate::parallel;
use crate::records::{
    write_exceptional, write_table, ContourRecord, ExceptionalDoc, ExceptionalRecord, Field,
    Format, Meta, S2Count, Table,
};

/// Files written by a command and the reasons, if any, its results are
/// flagged.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub flags: Vec<String>,
    pub summary: Vec<String>,
}

fn prepare_dir(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })
}

fn common_meta(meta: &mut Meta, command: &str, c: &Common, t: &Truncation) {
    meta.push("tool", concat!("rabi ", env!("CARGO_PKG_VERSION")));
    meta.push("command", command);
    meta.push_f64("omega", c.omega);
    meta.push_f64("epsilon", c.epsilon);
    meta.push("n_max", t.n_max);
    meta.push_f64("tail_tol", t.tail_tol);
    meta.push("tail_run", t.tail_run);
    meta.push_f64("pole_guard", t.pole_guard);
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn baseline_label(b: Baseline) -> String {
    format!("{}:{}", b.n_level, b.branch.name())
}

pub fn spectrum(a: &SpectrumArgs) -> CliResult<Outcome> {
    let c = &a.common;
    let p = c.params(a.delta)?;
    let t = c.truncation()?;
    if a.levels == 0 {
        return Err(CliError::Invalid("--levels must be at least 1".into()));
    }
    if a.g.lo <= 0.0 {
        return Err(CliError::Invalid("--g must start above zero".into()));
    }
    if let Some(m) = a.oracle_check {
        if m < 2 {
            return Err(CliError::Invalid(
                "--oracle-check needs a cutoff of at least 2".into(),
            ));
        }
    }
    let format = c.format.unwrap_or(Format::Csv);
    prepare_dir(&c.out)?;

    let sweep = parallel::sweep_spectrum(&p, a.g.lo, a.g.hi, a.g.steps, a.levels, &t)?;
    let oracle_rows: Option<Vec<Vec<f64>>> = match a.oracle_check {
        Some(m) => Some(
            sweep
                .g_values
                .par_iter()
                .map(|&g| oracle::spectrum(&p.with_g(g), m))
                .collect::<rabi_core::Result<_>>()?,
        ),
        None => None,
    };

    let mut rows = Vec::new();
    let mut max_de: f64 = 0.0;
    for (j, (&g, levels)) in sweep.g_values.iter().zip(&sweep.levels).enumerate() {
        for pt in levels {
            let mut row = vec![
                Field::Float(g),
                Field::Int(pt.index as i64),
                Field::Float(pt.x),
                Field::Float(pt.energy),
                Field::Text(pt.on_baseline.map(baseline_label).unwrap_or_default()),
            ];
            if let Some(ev) = &oracle_rows {
                let de = pt.energy - ev[j][pt.index];
                max_de = max_de.max(de.abs());
                row.push(Field::Float(de));
            }
            rows.push(row);
        }
    }

    let truncated = sweep.truncated.iter().filter(|t| **t).count();
    let unconverged = sweep
        .levels
        .iter()
        .flatten()
        .filter(|pt| !pt.converged)
        .count();
    let mut out = Outcome::default();
    if truncated > 0 {
        out.flags.push(format!(
            "{truncated} couplings have fewer than {} levels",
            a.levels
        ));
    }
    if unconverged > 0 {
        out.flags
            .push(format!("{unconverged} levels come from unconverged series"));
    }

    let mut meta = Meta::default();
    common_meta(&mut meta, "spectrum", c, &t);
    meta.push_f64("delta", a.delta);
    meta.push("g", a.g);
    meta.push("levels", a.levels);
    meta.push("truncated_columns", truncated);
    meta.push("unconverged_levels", unconverged);
    if let Some(m) = a.oracle_check {
        meta.push("oracle_cutoff", m);
        meta.push_f64("oracle_max_dE", max_de);
        if !(max_de < 1e-6) {
            out.flags
                .push(format!("oracle deviation {max_de:.3e} exceeds 1e-6"));
        }
    }
    let mut cols = columns(&["g", "N", "x", "E", "on_baseline"]);
    if a.oracle_check.is_some() {
        cols.push("oracle_dE".into());
    }
    out.files.push(write_table(
        &Table {
            meta: meta.clone(),
            columns: cols,
            rows,
        },
        &c.out.join("spectrum"),
        format,
    )?);

    let lines: Vec<Baseline> = Baseline::up_to(a.max_baseline).collect();
    let mut cols = vec!["g".to_string()];
    cols.extend(
        lines
            .iter()
            .map(|b| format!("E_{}_{}", b.n_level, b.branch.name())),
    );
    let rows = sweep
        .g_values
        .iter()
        .map(|&g| {
            let mut row = vec![Field::Float(g)];
            row.extend(
                lines
                    .iter()
                    .map(|&b| Field::Float(baseline_energy(b, p.omega, p.epsilon, g))),
            );
            row
        })
        .collect();
    let mut meta = Meta::default();
    common_meta(&mut meta, "spectrum", c, &t);
    meta.push_f64("delta", a.delta);
    meta.push("g", a.g);
    meta.push("max_baseline", a.max_baseline);
    out.files.push(write_table(
        &Table {
            meta,
            columns: cols,
            rows,
        },
        &c.out.join("baselines"),
        format,
    )?);

    out.summary.push(format!(
        "{} couplings × {} levels{}",
        sweep.g_values.len(),
        a.levels,
        match a.oracle_check {
            Some(m) => format!(", max |E − E_oracle(M={m})| = {max_de:.3e}"),
            None => String::new(),
        }
    ));
    Ok(out)
}

fn record(e: &ExceptionalPoint) -> ExceptionalRecord {
    ExceptionalRecord {
        n: e.baseline.n_level,
        branch: e.baseline.branch.name().into(),
        delta: e.delta,
        g: e.g,
        x_p: e.x_p,
        energy: e.energy,
        class: e.class.name().into(),
        constraint_value: e.constraint_value,
        oracle_nearest: e.oracle.map(|o| o.nearest),
        oracle_second: e.oracle.map(|o| o.second),
    }
}

pub fn exceptional(a: &ExceptionalArgs) -> CliResult<Outcome> {
    let c = &a.common;
    let p = c.params(a.delta)?;
    let t = c.truncation()?;
    if a.g.lo <= 0.0 {
        return Err(CliError::Invalid("--g must start above zero".into()));
    }
    if a.s1_steps < 2 {
        return Err(CliError::Invalid("--s1-steps must be at least 2".into()));
    }
    if let OracleSetting::Fixed(m) = a.oracle {
        if m < 2 {
            return Err(CliError::Invalid(
                "--oracle cutoff must be at least 2".into(),
            ));
        }
    }
    let format = c.format.unwrap_or(Format::Json);
    prepare_dir(&c.out)?;

    let opts = SearchOptions {
        s1_steps: a.s1_steps,
        s2_steps: a.g.steps,
        oracle: match a.oracle {
            OracleSetting::Off => None,
            OracleSetting::Auto => Some(OracleCutoff::Auto),
            OracleSetting::Fixed(m) => Some(OracleCutoff::Fixed(m)),
        },
    };
    let lines = baselines(&a.baselines, a.branch);
    let found = parallel::exceptional_points(&lines, &p, a.g.lo, a.g.hi, &t, &opts)?;

    let mut points = Vec::new();
    let mut s2_counts = Vec::new();
    let mut ambiguous = 0;
    for (&b, (s1, s2)) in lines.iter().zip(&found) {
        let mut here: Vec<&ExceptionalPoint> = s1.iter().chain(s2).collect();
        here.sort_by(|x, y| x.g.total_cmp(&y.g));
        ambiguous += here
            .iter()
            .filter(|e| e.class == ExceptionalClass::Ambiguous)
            .count();
        points.extend(here.into_iter().map(record));
        s2_counts.push(S2Count {
            n: b.n_level,
            branch: b.branch.name().into(),
            count: s2
                .iter()
                .filter(|e| e.class == ExceptionalClass::S2)
                .count(),
        });
    }

    let mut meta = Meta::default();
    common_meta(&mut meta, "exceptional", c, &t);
    meta.push_f64("delta", a.delta);
    meta.push("baselines", &a.baselines);
    meta.push("branch", a.branch.name());
    meta.push("g", a.g);
    meta.push("s1_steps", a.s1_steps);
    meta.push("oracle", a.oracle);
    meta.push("ambiguous_points", ambiguous);

    let mut out = Outcome::default();
    if ambiguous > 0 {
        out.flags
            .push(format!("{ambiguous} points could not be classified"));
    }
    let doc = ExceptionalDoc {
        meta,
        points,
        s2_counts,
    };
    out.summary.extend(doc.s2_counts.iter().map(|s| {
        let s1 = doc
            .points
            .iter()
            .filter(|r| r.n == s.n && r.branch == s.branch && r.class == "S1")
            .count();
        format!("N={} {}: {} S1, {} S2", s.n, s.branch, s1, s.count)
    }));
    out.files
        .push(write_exceptional(&doc, &c.out.join("exceptional"), format)?);
    Ok(out)
}

fn contour_rows(set: &ContourSet) -> Vec<Vec<Field>> {
    let mut rows = Vec::new();
    for (id, line) in set.polylines.iter().enumerate() {
        for (k, &(d, g)) in line.vertices.iter().enumerate() {
            rows.push(vec![
                Field::Int(set.baseline.n_level.into()),
                Field::Text(set.baseline.branch.name().into()),
                Field::Int(id as i64),
                Field::Int(k as i64),
                Field::Float(d),
                Field::Float(g),
                Field::Int(line.closed.into()),
            ]);
        }
    }
    rows
}

fn axis(r: Range, name: &str) -> CliResult<Axis> {
    Axis::new(r.lo, r.hi, r.steps).map_err(|e| CliError::Invalid(format!("--{name}: {e}")))
}

pub fn curves(a: &CurvesArgs) -> CliResult<Outcome> {
    let c = &a.common;
    let p = c.params(0.0)?;
    let t = c.truncation()?;
    if a.g.lo <= 0.0 {
        return Err(CliError::Invalid("--g must start above zero".into()));
    }
    let (delta_axis, g_axis) = (axis(a.delta, "delta")?, axis(a.g, "g")?);
    let format = c.format.unwrap_or(Format::Csv);
    prepare_dir(&c.out)?;

    let kinds: &[(GridKind, &str)] = match a.kind {
        CurveKind::Full => &[(GridKind::Regularized, "full")],
        CurveKind::S1 => &[(GridKind::Constraint, "s1")],
        CurveKind::Both => &[
            (GridKind::Regularized, "full"),
            (GridKind::Constraint, "s1"),
        ],
    };
    let mut out = Outcome::default();
    for b in baselines(&a.baselines, a.branch) {
        for &(kind, name) in kinds {
            let grid = parallel::sample_plane(kind, b, &p, delta_axis, g_axis, &t)?;
            let set = trace_contours(&grid)?;
            let failed = grid.flagged();
            let unconverged = grid
                .cells
                .iter()
                .filter(|c| c.value.is_some() && !c.converged)
                .count();
            let closed = set.polylines.iter().filter(|l| l.closed).count();
            let label = format!("{name} N={} {}", b.n_level, b.branch.name());
            if failed > 0 {
                out.flags
                    .push(format!("{label}: {failed} cells failed to evaluate"));
            }
            if unconverged > 0 {
                out.flags.push(format!(
                    "{label}: {unconverged} cells from unconverged series"
                ));
            }

            let mut meta = Meta::default();
            common_meta(&mut meta, "curves", c, &t);
            meta.push("kind", name);
            meta.push("baseline_N", b.n_level);
            meta.push("branch", b.branch.name());
            meta.push("delta", a.delta);
            meta.push("g", a.g);
            meta.push("failed_cells", failed);
            meta.push("unconverged_cells", unconverged);
            meta.push("skipped_cells", set.gaps);
            meta.push("saddles", set.saddles.len());
            meta.push("polylines", set.polylines.len());
            meta.push("closed_polylines", closed);
            let table = Table {
                meta,
                columns: columns(&ContourRecord::COLUMNS),
                rows: contour_rows(&set),
            };
            let stem = format!("contours_{name}_N{}_{}", b.n_level, b.branch.name());
            out.files
                .push(write_table(&table, &c.out.join(stem), format)?);
            out.summary.push(format!(
                "{label}: {} polylines ({closed} closed), {} vertices",
                set.polylines.len(),
                set.vertex_count()
            ));
        }
    }
    Ok(out)
}

struct Check {
    name: &'static str,
    g: f64,
    value: f64,
    tolerance: f64,
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn energies(p: &ModelParams, count: usize, t: &Truncation) -> rabi_core::Result<Vec<f64>> {
    Ok(energy_levels(p, count, t)?
        .iter()
        .map(|pt| pt.energy)
        .collect())
}

fn checks_at(
    a: &OracleCheckArgs,
    p: &ModelParams,
    t: &Truncation,
) -> rabi_core::Result<Vec<Check>> {
    let n = a.levels;
    let g = p.g;
    let scanned = energies(p, n, t)?;
    let reference = oracle::spectrum(p, a.fock)?;
    let larger = oracle::spectrum(p, a.fock_check)?;
    let mirrored = [
        p.with_epsilon(-p.epsilon),
        p.with_g(-p.g),
        p.with_delta(-p.delta),
    ];
    let mut scan_sym: f64 = 0.0;
    let mut oracle_sym: f64 = 0.0;
    for q in &mirrored {
        scan_sym = scan_sym.max(max_gap(&scanned, &energies(q, n, t)?));
        oracle_sym = oracle_sym.max(max_gap(&reference[..n], &oracle::spectrum(q, a.fock)?[..n]));
    }
    Ok(vec![
        Check {
            name: "equivalence",
            g,
            value: max_gap(&scanned, &reference[..n]),
            tolerance: a.tolerance,
        },
        Check {
            name: "cutoff",
            g,
            value: max_gap(&reference[..n], &larger[..n]),
            tolerance: 1e-9,
        },
        Check {
            name: "symmetry_g_function",
            g,
            value: scan_sym,
            tolerance: 1e-10,
        },
        Check {
            name: "symmetry_oracle",
            g,
            value: oracle_sym,
            tolerance: 1e-10,
        },
    ])
}

pub fn oracle_check(a: &OracleCheckArgs) -> CliResult<Outcome> {
    let c = &a.common;
    let p = c.params(a.delta)?;
    let t = c.truncation()?;
    if a.g.lo <= 0.0 {
        return Err(CliError::Invalid("--g must start above zero".into()));
    }
    if a.levels == 0 || a.fock < 2 || a.fock_check <= a.fock || 2 * (a.fock + 1) < a.levels {
        return Err(CliError::Invalid(
            "need --levels ≥ 1, --fock ≥ 2, --fock-check > --fock and 2(M+1) ≥ --levels".into(),
        ));
    }
    let format = c.format.unwrap_or(Format::Csv);
    prepare_dir(&c.out)?;

    let gs = rabi_core::spectrum::coupling_grid(a.g.lo, a.g.hi, a.g.steps)?;
    let checks: Vec<Vec<Check>> = gs
        .par_iter()
        .map(|&g| checks_at(a, &p.with_g(g), &t))
        .collect::<rabi_core::Result<_>>()?;

    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut worst: Vec<(&'static str, f64, f64)> = Vec::new();
    for ch in checks.iter().flatten() {
        let pass = ch.value <= ch.tolerance;
        if !pass {
            out.flags.push(format!(
                "{} at g={}: {:.3e} > {:.0e}",
                ch.name, ch.g, ch.value, ch.tolerance
            ));
        }
        match worst.iter_mut().find(|w| w.0 == ch.name) {
            Some(w) => w.1 = w.1.max(ch.value),
            None => worst.push((ch.name, ch.value, ch.tolerance)),
        }
        rows.push(vec![
            Field::Text(ch.name.into()),
            Field::Float(ch.g),
            Field::Float(ch.value),
            Field::Float(ch.tolerance),
            Field::Int(pass.into()),
        ]);
    }

    let mut meta = Meta::default();
    common_meta(&mut meta, "oracle-check", c, &t);
    meta.push_f64("delta", a.delta);
    meta.push("g", a.g);
    meta.push("levels", a.levels);
    meta.push("fock", a.fock);
    meta.push("fock_check", a.fock_check);
    meta.push("failed_checks", out.flags.len());
    out.files.push(write_table(
        &Table {
            meta,
            columns: columns(&["check", "g", "value", "tolerance", "pass"]),
            rows,
        },
        &c.out.join("oracle_check"),
        format,
    )?);
    out.summary.extend(worst.iter().map(|(name, v, tol)| {
        format!(
            "{} {name}: max {v:.3e} (tol {tol:.0e})",
            if v <= tol { "PASS" } else { "FAIL" }
        )
    }));
    Ok(out)
}
