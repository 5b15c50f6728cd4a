//! Exceptional points on the baselines `E = Nω − g²/ω ± ε`.
//!
//! A baseline carries a pole of the series branch opposite to its own sign.
//! When the constraint polynomial `K_N^∓(x_p)` vanishes the residue cancels
//! and the point belongs to S1. Any other zero of `𝒢ε(x_p)` along the
//! baseline belongs to S2.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gfunction::{g_reg_at_baseline, ZeroVerdict};
use crate::oracle;
use crate::params::{Branch, ModelParams, Truncation};
use crate::series::k_value;
use crate::signed_log::SignedLog;

/// An exceptional energy `E = Nω − g²/ω ± ε`, i.e. `x_p = Nω ± ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Baseline {
    pub n_level: u32,
    pub branch: Branch,
}

impl Baseline {
    pub fn new(n_level: u32, branch: Branch) -> Self {
        Baseline { n_level, branch }
    }

    pub fn x_p(&self, omega: f64, epsilon: f64) -> f64 {
        self.n_level as f64 * omega + self.branch.sign() * epsilon
    }

    pub fn energy(&self, p: &ModelParams) -> f64 {
        self.x_p(p.omega, p.epsilon) - p.energy_shift()
    }

    /// Branch of the series whose pole sits on this baseline: plus
    /// baselines are poles of `R̄⁻`, minus baselines of `R̄⁺`.
    pub fn series_branch(&self) -> Branch {
        self.branch.opposite()
    }

    /// Both branches of every level `0..=n_max`.
    pub fn up_to(n_max: u32) -> impl Iterator<Item = Baseline> {
        (0..=n_max).flat_map(|n| Branch::BOTH.into_iter().map(move |b| Baseline::new(n, b)))
    }
}

/// Energy of a baseline at coupling `g`.
pub fn baseline_energy(b: Baseline, omega: f64, epsilon: f64, g: f64) -> f64 {
    b.x_p(omega, epsilon) - g * g / omega
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExceptionalClass {
    S1,
    S2,
    Ambiguous,
}

impl ExceptionalClass {
    pub fn name(self) -> &'static str {
        match self {
            ExceptionalClass::S1 => "S1",
            ExceptionalClass::S2 => "S2",
            ExceptionalClass::Ambiguous => "ambiguous",
        }
    }
}

/// How the oracle sees the energy of an exceptional point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub fock_cutoff: usize,
    /// Distance to the closest oracle eigenvalue.
    pub nearest: f64,
    /// Distance to the second closest.
    pub second: f64,
}

impl OracleCheck {
    /// Two eigenvalues within `gap` of the energy.
    pub fn is_degenerate(&self, gap: f64) -> bool {
        self.nearest < gap && self.second < gap
    }

    /// One eigenvalue within `hit` and no second one within `clear`.
    pub fn is_isolated(&self, hit: f64, clear: f64) -> bool {
        self.nearest < hit && self.second >= clear
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceptionalPoint {
    pub baseline: Baseline,
    pub delta: f64,
    pub g: f64,
    pub x_p: f64,
    pub energy: f64,
    pub class: ExceptionalClass,
    /// `K_N^∓(x_p)`, branch-matched.
    pub constraint_value: f64,
    /// `𝒢ε(x_p)` estimate.
    pub g_value: SignedLog,
    pub oracle: Option<OracleCheck>,
}

/// Knobs for the scanners along a baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Grid cells for the constraint-polynomial scan.
    pub s1_steps: usize,
    /// Grid cells for the 𝒢 sign scan.
    pub s2_steps: usize,
    /// Oracle cutoff for the degeneracy check; `None` skips the oracle.
    pub oracle: Option<OracleCutoff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleCutoff {
    Auto,
    Fixed(usize),
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            s1_steps: 400,
            s2_steps: 2000,
            oracle: Some(OracleCutoff::Auto),
        }
    }
}

/// `K_N^∓(x_p)`: the constraint polynomial of a baseline.
pub fn constraint_value(b: Baseline, p: &ModelParams, t: &Truncation) -> Result<f64> {
    p.require_coupling()?;
    p.require_non_resonant()?;
    let xp = b.x_p(p.omega, p.epsilon);
    k_value(b.n_level as usize, xp, p, b.series_branch(), t)
}

fn constraint_slope(b: Baseline, p: &ModelParams, t: &Truncation) -> Result<f64> {
    let h = 1e-6 * p.g.abs().max(1e-3 * p.omega);
    let up = constraint_value(b, &p.with_g(p.g + h), t)?;
    let down = constraint_value(b, &p.with_g(p.g - h), t)?;
    Ok((up - down) / (2.0 * h))
}

fn grid(lo: f64, hi: f64, cells: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / cells as f64;
    (0..=cells).map(move |i| if i == cells { hi } else { lo + i as f64 * step })
}

/// Bisects a sign change of `sign_at` on `[lo, hi]` down to adjacent
/// floating-point numbers.
fn bisect<F>(mut lo: f64, mut hi: f64, sign_lo: i8, mut sign_at: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<i8>,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = sign_at(mid)?;
        if s == 0 {
            return Ok(mid);
        }
        if s == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn check_window(g_lo: f64, g_hi: f64) -> Result<()> {
    if !(g_lo > 0.0) || !(g_hi > g_lo) || !g_hi.is_finite() {
        return Err(Error::InvalidArgument(
            "g window must satisfy 0 < g_lo < g_hi",
        ));
    }
    Ok(())
}

/// Roots in `g` of a sign function on a uniform grid. Grid points where the
/// function is exactly zero count once.
fn scan_roots<F>(g_lo: f64, g_hi: f64, cells: usize, mut sign_at: F) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<i8>,
{
    let gs: Vec<f64> = grid(g_lo, g_hi, cells.max(1)).collect();
    let mut signs = Vec::with_capacity(gs.len());
    for &g in &gs {
        signs.push(sign_at(g)?);
    }
    let mut roots = Vec::new();
    for i in 0..gs.len() {
        if signs[i] == 0 {
            roots.push(gs[i]);
            continue;
        }
        if i + 1 < gs.len() && signs[i + 1] != 0 && signs[i] != signs[i + 1] {
            roots.push(bisect(gs[i], gs[i + 1], signs[i], &mut sign_at)?);
        }
    }
    Ok(roots)
}

/// S1 points along a baseline at fixed `Δ = p.delta`; `p.g` is ignored.
pub fn find_s1(
    b: Baseline,
    p: &ModelParams,
    g_lo: f64,
    g_hi: f64,
    t: &Truncation,
) -> Result<Vec<ExceptionalPoint>> {
    find_s1_with(b, p, g_lo, g_hi, t, &SearchOptions::default())
}

pub fn find_s1_with(
    b: Baseline,
    p: &ModelParams,
    g_lo: f64,
    g_hi: f64,
    t: &Truncation,
    opts: &SearchOptions,
) -> Result<Vec<ExceptionalPoint>> {
    check_window(g_lo, g_hi)?;
    p.validate()?;
    p.require_non_resonant()?;
    if b.n_level == 0 {
        // K_0 ≡ 1
        return Ok(Vec::new());
    }
    let roots = scan_roots(g_lo, g_hi, opts.s1_steps, |g| {
        constraint_value(b, &p.with_g(g), t).map(sign_of)
    })?;
    roots
        .into_iter()
        .map(|g| classify_with(b, &p.with_g(g), t, opts))
        .collect()
}

/// S2 points along a baseline at fixed `Δ = p.delta`; `p.g` is ignored.
/// Zeros of 𝒢 that classify as S1 are excluded; ambiguous ones are kept.
pub fn find_s2(
    b: Baseline,
    p: &ModelParams,
    g_lo: f64,
    g_hi: f64,
    t: &Truncation,
) -> Result<Vec<ExceptionalPoint>> {
    find_s2_with(b, p, g_lo, g_hi, t, &SearchOptions::default())
}

pub fn find_s2_with(
    b: Baseline,
    p: &ModelParams,
    g_lo: f64,
    g_hi: f64,
    t: &Truncation,
    opts: &SearchOptions,
) -> Result<Vec<ExceptionalPoint>> {
    check_window(g_lo, g_hi)?;
    p.validate()?;
    p.require_non_resonant()?;
    let s1_roots: Vec<f64> = find_s1_with(
        b,
        p,
        g_lo,
        g_hi,
        t,
        &SearchOptions {
            oracle: None,
            ..*opts
        },
    )?
    .iter()
    .map(|e| e.g)
    .collect();

    let roots = scan_roots(g_lo, g_hi, opts.s2_steps, |g| {
        let tg = t.for_coupling(g, p.omega);
        g_reg_at_baseline(b, &p.with_g(g), &tg).map(|bv| bv.sign())
    })?;

    let mut out = Vec::new();
    for g in roots {
        if s1_roots
            .iter()
            .any(|s| (s - g).abs() <= 1e-8 * s.abs().max(1.0))
        {
            continue;
        }
        let q = p.with_g(g);
        let point = match classify_with(b, &q, t, opts) {
            Ok(pt) => pt,
            Err(Error::NotExceptional) => unresolved_point(b, &q, t, opts)?,
            Err(e) => return Err(e),
        };
        if point.class != ExceptionalClass::S1 {
            out.push(point);
        }
    }
    Ok(out)
}

fn oracle_check(b: Baseline, p: &ModelParams, cutoff: OracleCutoff) -> Result<OracleCheck> {
    let m = match cutoff {
        OracleCutoff::Auto => oracle::auto_fock_cutoff(p.g, p.omega),
        OracleCutoff::Fixed(m) => m,
    };
    let values = oracle::spectrum(p, m)?;
    let (nearest, second) = oracle::nearest_two(&values, b.energy(p));
    Ok(OracleCheck {
        fock_cutoff: m,
        nearest,
        second,
    })
}

fn unresolved_point(
    b: Baseline,
    p: &ModelParams,
    t: &Truncation,
    opts: &SearchOptions,
) -> Result<ExceptionalPoint> {
    let tg = t.for_coupling(p.g, p.omega);
    let bv = g_reg_at_baseline(b, p, &tg)?;
    Ok(ExceptionalPoint {
        baseline: b,
        delta: p.delta,
        g: p.g,
        x_p: b.x_p(p.omega, p.epsilon),
        energy: b.energy(p),
        class: ExceptionalClass::Ambiguous,
        constraint_value: constraint_value(b, p, t)?,
        g_value: bv.value.value,
        oracle: opts.oracle.map(|c| oracle_check(b, p, c)).transpose()?,
    })
}

/// Classifies a candidate at `(Δ, g) = (p.delta, p.g)`.
pub fn classify(b: Baseline, p: &ModelParams, t: &Truncation) -> Result<ExceptionalPoint> {
    classify_with(b, p, t, &SearchOptions::default())
}

/// S1 when `|K_N^∓(x_p)|` is below `1e-8 · |∂K/∂g|`, S2 otherwise.
/// Fails with [`Error::NotExceptional`] when 𝒢(x_p) is clearly nonzero.
pub fn classify_with(
    b: Baseline,
    p: &ModelParams,
    t: &Truncation,
    opts: &SearchOptions,
) -> Result<ExceptionalPoint> {
    let tg = t.for_coupling(p.g, p.omega);
    let bv = g_reg_at_baseline(b, p, &tg)?;
    if bv.verdict == ZeroVerdict::NonZero {
        return Err(Error::NotExceptional);
    }
    let k = constraint_value(b, p, t)?;
    let tol = 1e-8 * constraint_slope(b, p, t)?.abs();
    let class = if bv.verdict == ZeroVerdict::Ambiguous {
        ExceptionalClass::Ambiguous
    } else if k.abs() <= tol {
        ExceptionalClass::S1
    } else {
        ExceptionalClass::S2
    };
    Ok(ExceptionalPoint {
        baseline: b,
        delta: p.delta,
        g: p.g,
        x_p: b.x_p(p.omega, p.epsilon),
        energy: b.energy(p),
        class,
        constraint_value: k,
        g_value: bv.value.value,
        oracle: opts.oracle.map(|c| oracle_check(b, p, c)).transpose()?,
    })
}
