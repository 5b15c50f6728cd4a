//! `Gε(x) = Δ² R̄⁺ R̄⁻ − R⁺ R⁻` and its pole-free counterpart
//! `𝒢ε(x) = Gε(x) · Π_n (x − nω − ε)(x − nω + ε)`.
//!
//! Off the poles both share the same zero set; 𝒢 stays finite at the
//! baselines `x = Nω ± ε`, where its value is obtained as a symmetric limit.

use crate::error::{Error, Result};
use crate::exceptional::Baseline;
use crate::math;
use crate::params::{Branch, ModelParams, Truncation};
use crate::series::branch_sums;
use crate::signed_log::SignedLog;

/// Default half-width of the symmetric limit at a baseline, in units of ω.
pub const BASELINE_DELTA: f64 = 1e-6;

/// An evaluated G-function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValue {
    pub value: SignedLog,
    /// False if any of the underlying series hit `n_max`.
    pub converged: bool,
    /// Largest series stopping index used.
    pub stop_index: usize,
}

/// `Gε(x)`.
pub fn g_eps(x: f64, p: &ModelParams, t: &Truncation) -> Result<GValue> {
    let plus = branch_sums(x, p, Branch::Plus, t)?;
    let minus = branch_sums(x, p, Branch::Minus, t)?;
    let d2 = SignedLog::from_f64(p.delta * p.delta);
    let bars = d2 * SignedLog::from_f64(plus.rbar.value) * SignedLog::from_f64(minus.rbar.value);
    let plain = SignedLog::from_f64(plus.r.value) * SignedLog::from_f64(minus.r.value);
    let converged = plus.r.converged && minus.r.converged;
    let stop_index = plus.r.stop_index.max(minus.r.stop_index);
    Ok(GValue {
        value: bars - plain,
        converged,
        stop_index,
    })
}

/// Smallest product cutoff that covers every pole up to `x`.
pub fn default_n_prod(x: f64, omega: f64) -> usize {
    let n = math::ceil(x / omega) + 1.0;
    if n > 0.0 {
        n as usize
    } else {
        0
    }
}

/// `Π_{n=0}^{n_prod} (x − nω − ε)(x − nω + ε)`.
pub fn pole_product(x: f64, p: &ModelParams, n_prod: usize) -> SignedLog {
    (0..=n_prod)
        .map(|n| {
            let base = x - n as f64 * p.omega;
            SignedLog::from_f64(base - p.epsilon) * SignedLog::from_f64(base + p.epsilon)
        })
        .product()
}

/// `𝒢ε(x)` with the product truncated at `n_prod`.
pub fn g_reg(x: f64, p: &ModelParams, t: &Truncation, n_prod: usize) -> Result<GValue> {
    if n_prod < default_n_prod(x, p.omega) {
        return Err(Error::InvalidArgument(
            "n_prod must be at least ceil(x/ω) + 1",
        ));
    }
    let g = g_eps(x, p, t)?;
    Ok(GValue {
        value: g.value * pole_product(x, p, n_prod),
        ..g
    })
}

/// Outcome of the zero test at a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZeroVerdict {
    Zero,
    NonZero,
    /// The estimate sits within a factor two of the detection floor.
    Ambiguous,
}

/// The finite limit of 𝒢 at a baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineValue {
    /// Richardson-refined estimate.
    pub value: GValue,
    /// `10 · |estimate(δ) − estimate(δ/2)|`.
    pub floor: SignedLog,
    pub verdict: ZeroVerdict,
}

impl BaselineValue {
    /// Sign used for bracketing: the estimate's sign, or zero when the
    /// verdict is [`ZeroVerdict::Zero`].
    pub fn sign(&self) -> i8 {
        match self.verdict {
            ZeroVerdict::Zero => 0,
            _ => self.value.value.sign(),
        }
    }
}

/// `𝒢ε(x_p)` at a baseline with the default limit width.
pub fn g_reg_at_baseline(b: Baseline, p: &ModelParams, t: &Truncation) -> Result<BaselineValue> {
    g_reg_at_baseline_with(b, p, t, BASELINE_DELTA)
}

/// `𝒢ε(x_p)` from symmetric averages at `x_p ± δ` and `x_p ± δ/2`
/// combined by one Richardson step; `delta` is in units of ω.
pub fn g_reg_at_baseline_with(
    b: Baseline,
    p: &ModelParams,
    t: &Truncation,
    delta: f64,
) -> Result<BaselineValue> {
    p.require_coupling()?;
    p.require_non_resonant()?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(
            "baseline limit width must be positive",
        ));
    }
    let xp = b.x_p(p.omega, p.epsilon);
    let h = delta * p.omega;
    let n_prod = default_n_prod(xp + h, p.omega);

    let at = |x: f64| g_reg(x, p, t, n_prod);
    let samples = [
        at(xp + h)?,
        at(xp - h)?,
        at(xp + h / 2.0)?,
        at(xp - h / 2.0)?,
    ];
    let converged = samples.iter().all(|s| s.converged);
    let stop_index = samples.iter().map(|s| s.stop_index).max().unwrap_or(0);

    let shift = samples
        .iter()
        .filter(|s| !s.value.is_zero())
        .map(|s| s.value.exponent())
        .max()
        .unwrap_or(0);
    let v: [f64; 4] = core::array::from_fn(|i| samples[i].value.to_f64_scaled(shift));
    let wide = 0.5 * (v[0] + v[1]);
    let narrow = 0.5 * (v[2] + v[3]);
    let estimate = (4.0 * narrow - wide) / 3.0;
    let floor = 10.0 * (wide - narrow).abs();

    let verdict = if estimate.abs() < floor {
        ZeroVerdict::Zero
    } else if estimate.abs() < 2.0 * floor {
        ZeroVerdict::Ambiguous
    } else {
        ZeroVerdict::NonZero
    };

    Ok(BaselineValue {
        value: GValue {
            value: SignedLog::from_f64_scaled(estimate, shift),
            converged,
            stop_index,
        },
        floor: SignedLog::from_f64_scaled(floor, shift),
        verdict,
    })
}

/// The baseline whose pole lies closest to `x`, with the distance.
pub fn nearest_baseline(x: f64, p: &ModelParams) -> (Baseline, f64) {
    let pick = |branch: Branch| {
        let raw = math::round((x - branch.sign() * p.epsilon) / p.omega);
        let n = if raw > 0.0 { raw as u32 } else { 0 };
        let b = Baseline::new(n, branch);
        (b, (x - b.x_p(p.omega, p.epsilon)).abs())
    };
    let plus = pick(Branch::Plus);
    let minus = pick(Branch::Minus);
    if minus.1 < plus.1 {
        minus
    } else {
        plus
    }
}

/// `𝒢ε(x)` anywhere: the direct product form away from poles, the
/// baseline limit within the pole guard.
pub fn g_reg_continuous(x: f64, p: &ModelParams, t: &Truncation, n_prod: usize) -> Result<GValue> {
    let (b, dist) = nearest_baseline(x, p);
    if dist <= t.guard(p.omega) {
        let bv = g_reg_at_baseline(b, p, t)?;
        let value = if bv.verdict == ZeroVerdict::Zero {
            SignedLog::ZERO
        } else {
            bv.value.value
        };
        return Ok(GValue { value, ..bv.value });
    }
    g_reg(x, p, t, n_prod)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, delta: f64, epsilon: f64) -> ModelParams {
        ModelParams::new(1.0, g, delta, epsilon).unwrap()
    }

    #[test]
    fn nonpositive_without_splitting() {
        let p = params(0.5, 0.0, 0.0);
        let t = Truncation::default();
        for i in 0..60 {
            let x = -1.9 + 0.113 * i as f64;
            if let Ok(v) = g_eps(x, &p, &t) {
                assert!(v.value.sign() <= 0, "x = {x}");
            }
        }
    }

    #[test]
    fn regularized_sign_is_factorized() {
        let p = params(0.5, 1.2, 0.3);
        let t = Truncation::default();
        let x = 1.0; // midway between the poles 0.7 and 1.3
        let n_prod = default_n_prod(x, 1.0);
        let g = g_eps(x, &p, &t).unwrap();
        let reg = g_reg(x, &p, &t, n_prod).unwrap();
        let negative = (0..=n_prod)
            .flat_map(|n| [x - n as f64 - 0.3, x - n as f64 + 0.3])
            .filter(|f| *f < 0.0)
            .count();
        let product_sign = if negative % 2 == 0 { 1 } else { -1 };
        assert_eq!(reg.value.sign(), g.value.sign() * product_sign);
    }

    #[test]
    fn squared_product_keeps_sign_without_bias() {
        let p = params(0.6, 0.9, 0.0);
        let t = Truncation::default();
        for i in 0..40 {
            let x = -1.37 + 0.171 * i as f64;
            let g = g_eps(x, &p, &t).unwrap();
            let r = g_reg(x, &p, &t, default_n_prod(6.0, 1.0)).unwrap();
            assert_eq!(g.value.sign(), r.value.sign());
        }
    }

    #[test]
    fn product_cutoff_must_cover_window() {
        let p = params(0.5, 1.2, 0.3);
        let t = Truncation::default();
        assert!(matches!(
            g_reg(3.5, &p, &t, 2),
            Err(Error::InvalidArgument(_))
        ));
        assert!(g_reg(3.5, &p, &t, 5).is_ok());
    }

    #[test]
    fn first_constraint_point_is_zero() {
        let p = params(0.2, 1.2, 0.3);
        let bv =
            g_reg_at_baseline(Baseline::new(1, Branch::Plus), &p, &Truncation::default()).unwrap();
        assert_eq!(bv.verdict, ZeroVerdict::Zero, "{bv:?}");
    }

    #[test]
    fn off_constraint_point_is_nonzero() {
        let p = params(0.05, 1.2, 0.3);
        let bv =
            g_reg_at_baseline(Baseline::new(1, Branch::Plus), &p, &Truncation::default()).unwrap();
        assert_eq!(bv.verdict, ZeroVerdict::NonZero, "{bv:?}");
    }

    #[test]
    fn resonant_bias_rejected() {
        let p = params(0.3, 1.2, 0.5);
        assert!(matches!(
            g_reg_at_baseline(Baseline::new(1, Branch::Plus), &p, &Truncation::default()),
            Err(Error::ResonantParameters { .. })
        ));
    }

    #[test]
    fn pole_guard_applies_to_direct_form_only() {
        let p = params(0.4, 1.2, 0.3);
        let t = Truncation::default();
        assert!(matches!(
            g_reg(1.3, &p, &t, 3),
            Err(Error::PoleProximity { .. })
        ));
        assert!(g_reg_continuous(1.3, &p, &t, 3).is_ok());
    }

    #[test]
    fn nearest_baseline_picks_closest_pole() {
        let p = params(0.4, 1.2, 0.3);
        let (b, d) = nearest_baseline(1.29, &p);
        assert_eq!(b, Baseline::new(1, Branch::Plus));
        assert!((d - 0.01).abs() < 1e-12);
        let (b, _) = nearest_baseline(-0.25, &p);
        assert_eq!(b, Baseline::new(0, Branch::Minus));
    }
}
