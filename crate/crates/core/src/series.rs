//! Recursive coefficients `K_n^±(x)` and the series `R^±(x)`, `R̄^±(x)`.
//!
//! ```text
//! f_n^±(x) = 2g/ω + (nω − x ± ε + Δ²/(x − nω ± ε)) / 2g
//! n K_n^±  = f_{n−1}^± K_{n−1}^± − K_{n−2}^±,   K_0 = 1, K_1 = f_0
//! R^±(x)   = Σ K_n^± (g/ω)^n
//! R̄^±(x)   = Σ K_n^± (g/ω)^n / (x − nω ± ε)
//! ```
//!
//! The sums carry the scaled coefficient `c_n = K_n (g/ω)^n` through its own
//! recurrence `n c_n = q f_{n−1} c_{n−1} − q² c_{n−2}` (with `q = g/ω`), so
//! large `K_n` and small powers never meet as separate numbers.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::{Branch, ModelParams, Truncation};

/// A truncated partial sum together with where it stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub stop_index: usize,
    /// False when `n_max` was reached before the tail criterion held.
    pub converged: bool,
}

impl SeriesSum {
    pub fn require_converged(self, n_max: usize) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NonConvergence { n_max })
        }
    }
}

/// `x − nω ± ε`, the denominator of the pole term of `f_n^±` and of the
/// `n`-th term of `R̄^±`.
#[inline]
pub fn pole_offset(n: usize, x: f64, p: &ModelParams, b: Branch) -> f64 {
    x - n as f64 * p.omega + b.sign() * p.epsilon
}

#[inline]
fn checked_offset(n: usize, x: f64, p: &ModelParams, b: Branch, guard: f64) -> Result<f64> {
    let d = pole_offset(n, x, p, b);
    if d.abs() <= guard {
        return Err(Error::PoleProximity { n, branch: b });
    }
    Ok(d)
}

#[inline]
fn f_with_offset(n: usize, x: f64, p: &ModelParams, b: Branch, offset: f64) -> f64 {
    let pole_term = p.delta * p.delta / offset;
    2.0 * p.g / p.omega + (n as f64 * p.omega - x + b.sign() * p.epsilon + pole_term) / (2.0 * p.g)
}

/// `f_n^±(x)`.
pub fn f_coeff(n: usize, x: f64, p: &ModelParams, b: Branch, t: &Truncation) -> Result<f64> {
    p.require_coupling()?;
    let offset = checked_offset(n, x, p, b, t.guard(p.omega))?;
    Ok(f_with_offset(n, x, p, b, offset))
}

/// `K_0 … K_{n_max}` by forward recursion.
pub fn k_sequence(x: f64, p: &ModelParams, b: Branch, t: &Truncation) -> Result<Vec<f64>> {
    t.validate()?;
    k_prefix(t.n_max, x, p, b, t)
}

/// `K_0 … K_n`; only `f_0 … f_{n−1}` are touched, so poles at index `n` and
/// above do not matter.
pub fn k_prefix(n: usize, x: f64, p: &ModelParams, b: Branch, t: &Truncation) -> Result<Vec<f64>> {
    p.require_coupling()?;
    let guard = t.guard(p.omega);
    let mut k = Vec::with_capacity(n + 1);
    k.push(1.0);
    if n == 0 {
        return Ok(k);
    }
    let f0 = f_with_offset(0, x, p, b, checked_offset(0, x, p, b, guard)?);
    k.push(f0);
    for m in 2..=n {
        let f = f_with_offset(m - 1, x, p, b, checked_offset(m - 1, x, p, b, guard)?);
        let next = (f * k[m - 1] - k[m - 2]) / m as f64;
        k.push(next);
    }
    Ok(k)
}

/// `K_n^±(x)` alone.
pub fn k_value(n: usize, x: f64, p: &ModelParams, b: Branch, t: &Truncation) -> Result<f64> {
    Ok(*k_prefix(n, x, p, b, t)?
        .last()
        .expect("k_prefix is never empty"))
}

#[derive(Clone, Copy)]
enum Which {
    R,
    RBar,
    Both,
}

struct Tail {
    tol: f64,
    need: usize,
    run: usize,
}

impl Tail {
    fn observe(&mut self, term: f64, sum: f64) -> bool {
        if term.abs() < self.tol * sum.abs() {
            self.run += 1;
        } else {
            self.run = 0;
        }
        self.run >= self.need
    }
}

/// Both series of one branch from a single pass over the scaled
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSums {
    pub r: SeriesSum,
    pub rbar: SeriesSum,
}

fn accumulate(
    x: f64,
    p: &ModelParams,
    b: Branch,
    t: &Truncation,
    which: Which,
) -> Result<BranchSums> {
    p.require_coupling()?;
    t.validate()?;
    let guard = t.guard(p.omega);
    let q = p.g / p.omega;
    let want_r = !matches!(which, Which::RBar);
    let want_rbar = !matches!(which, Which::R);

    let mut tail_r = Tail {
        tol: t.tail_tol,
        need: t.tail_run,
        run: 0,
    };
    let mut tail_rbar = Tail {
        tol: t.tail_tol,
        need: t.tail_run,
        run: 0,
    };

    let d0 = checked_offset(0, x, p, b, guard)?;
    let mut c_prev = 0.0;
    let mut c = 1.0;
    let mut r = 1.0;
    let mut rbar = if want_rbar { 1.0 / d0 } else { 0.0 };
    let mut offset = d0;
    let mut done_r = !want_r;
    let mut done_rbar = !want_rbar;
    let mut n = 0;

    while n < t.n_max && !(done_r && done_rbar) {
        // step to c_{n+1} using f_n
        let f = f_with_offset(n, x, p, b, offset);
        let c_next = (q * f * c - q * q * c_prev) / (n + 1) as f64;
        c_prev = c;
        c = c_next;
        n += 1;
        offset = checked_offset(n, x, p, b, guard)?;

        r += c;
        let rbar_term = if want_rbar { c / offset } else { 0.0 };
        rbar += rbar_term;
        if !r.is_finite() || !rbar.is_finite() {
            return Err(Error::NonConvergence { n_max: t.n_max });
        }
        if !done_r && tail_r.observe(c, r) {
            done_r = true;
        }
        if !done_rbar && tail_rbar.observe(rbar_term, rbar) {
            done_rbar = true;
        }
    }

    let converged = done_r && done_rbar;
    let sum = |value| SeriesSum {
        value,
        stop_index: n,
        converged,
    };
    Ok(BranchSums {
        r: sum(r),
        rbar: sum(rbar),
    })
}

/// `R^±(x)`.
pub fn r_series(x: f64, p: &ModelParams, b: Branch, t: &Truncation) -> Result<SeriesSum> {
    Ok(accumulate(x, p, b, t, Which::R)?.r)
}

/// `R̄^±(x)`.
pub fn rbar_series(x: f64, p: &ModelParams, b: Branch, t: &Truncation) -> Result<SeriesSum> {
    Ok(accumulate(x, p, b, t, Which::RBar)?.rbar)
}

/// `R^±(x)` and `R̄^±(x)` stopped at a common index where both tails are
/// small.
pub fn branch_sums(x: f64, p: &ModelParams, b: Branch, t: &Truncation) -> Result<BranchSums> {
    accumulate(x, p, b, t, Which::Both)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(omega: f64, g: f64, delta: f64, epsilon: f64) -> ModelParams {
        ModelParams::new(omega, g, delta, epsilon).unwrap()
    }

    #[test]
    fn f_coeff_without_pole_term() {
        let p = params(1.0, 0.5, 0.0, 0.0);
        let f = f_coeff(0, 1.0, &p, Branch::Plus, &Truncation::default()).unwrap();
        assert!(f.abs() < 1e-15);
    }

    #[test]
    fn f_coeff_vanishes_on_first_constraint() {
        // 0.4 + 2.5·(−1.6 + 1.44) = 0
        let p = params(1.0, 0.2, 1.2, 0.3);
        let f = f_coeff(0, 1.3, &p, Branch::Minus, &Truncation::default()).unwrap();
        assert!(f.abs() < 1e-14, "{f}");
    }

    #[test]
    fn f_coeff_hand_value() {
        // 1 + (0.5 + 0.25/(−0.5)) = 1
        let p = params(1.0, 0.5, 0.5, 0.0);
        let f = f_coeff(1, 0.5, &p, Branch::Plus, &Truncation::default()).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f_coeff_pole_guard() {
        let p = params(1.0, 0.3, 1.2, 0.3);
        let t = Truncation::default();
        // plus-branch pole at x = nω − ε
        assert_eq!(
            f_coeff(2, 1.7, &p, Branch::Plus, &t),
            Err(Error::PoleProximity {
                n: 2,
                branch: Branch::Plus
            })
        );
        assert!(f_coeff(2, 1.7, &p, Branch::Minus, &t).is_ok());
        assert!(f_coeff(2, 1.7 + 1e-7, &p, Branch::Plus, &t).is_ok());
    }

    #[test]
    fn zero_coupling_rejected() {
        let p = params(1.0, 0.0, 1.2, 0.3);
        assert_eq!(
            f_coeff(0, 0.5, &p, Branch::Plus, &Truncation::default()),
            Err(Error::ZeroCoupling)
        );
        assert_eq!(
            r_series(0.5, &p, Branch::Plus, &Truncation::default()),
            Err(Error::ZeroCoupling)
        );
    }

    #[test]
    fn k_sequence_initial_conditions() {
        let p = params(1.0, 0.2, 1.2, 0.3);
        let t = Truncation::default();
        // x = 1.3 is the pole of f_1^−, so only K_0, K_1 exist there
        assert!(matches!(
            k_sequence(1.3, &p, Branch::Minus, &t),
            Err(Error::PoleProximity { n: 1, .. })
        ));
        let k = k_prefix(1, 1.3, &p, Branch::Minus, &t).unwrap();
        assert_eq!(k[0], 1.0);
        assert!(k[1].abs() < 1e-14);
        let k = k_sequence(1.25, &p, Branch::Minus, &t).unwrap();
        assert_eq!(k[0], 1.0);
        assert_eq!(k.len(), 201);
    }

    #[test]
    fn k_two_by_hand() {
        let (x, g, d, e) = (2.0, 0.6, 0.4, 0.1);
        let f = |n: f64| 2.0 * g + (n - x + e + d * d / (x - n + e)) / (2.0 * g);
        let expected = (f(1.0) * f(0.0) - 1.0) / 2.0;
        let p = params(1.0, g, d, e);
        let k = k_prefix(2, x, &p, Branch::Plus, &Truncation::default()).unwrap();
        assert!((k[1] - f(0.0)).abs() < 1e-15);
        assert!((k[2] - expected).abs() < 1e-14 * expected.abs().max(1.0));
    }

    #[test]
    fn k_prefix_ignores_pole_at_its_own_index() {
        // x = Nω + ε is a pole of f_N^−, but K_N^− only needs f_0..f_{N−1}.
        let p = params(1.0, 0.4, 1.2, 0.3);
        let t = Truncation::default();
        assert!(k_value(3, 3.3, &p, Branch::Minus, &t).is_ok());
        assert!(k_value(4, 3.3, &p, Branch::Minus, &t).is_err());
    }

    #[test]
    fn weak_coupling_limit() {
        // K_n ~ (2g)^{-n} cancels the powers of g: the scaled recurrence
        // tends to n c_n = (n − 1 − x)/2 · c_{n−1}, so R → Σ (−x)_n / (2^n n!) = 2^{−x}.
        let p = params(1.0, 1e-3, 0.0, 0.0);
        let r = r_series(0.5, &p, Branch::Plus, &Truncation::default()).unwrap();
        assert!(r.converged);
        assert!((r.value - libm::pow(2.0, -0.5)).abs() < 1e-2);
    }

    #[test]
    fn branches_coincide_without_bias() {
        let p = params(1.0, 0.4, 0.7, 0.0);
        let t = Truncation::default();
        let plus = branch_sums(0.5, &p, Branch::Plus, &t).unwrap();
        let minus = branch_sums(0.5, &p, Branch::Minus, &t).unwrap();
        assert_eq!(plus, minus);
    }

    #[test]
    fn nonconvergence_is_flagged_not_fatal() {
        let p = params(1.0, 8.0, 1.2, 0.3);
        let t = Truncation::default();
        let r = r_series(0.45, &p, Branch::Plus, &t).unwrap();
        assert!(!r.converged);
        assert_eq!(r.stop_index, t.n_max);
        assert!(r.require_converged(t.n_max).is_err());
        let r = r_series(0.45, &p, Branch::Plus, &t.for_coupling(p.g, p.omega)).unwrap();
        assert!(r.converged);
    }

    proptest! {
        #[test]
        fn recurrence_identity(
            x in -2.0f64..6.0,
            g in 0.05f64..1.5,
            delta in -2.0f64..2.0,
            eps in -0.6f64..0.6,
            plus in proptest::bool::ANY,
        ) {
            let b = if plus { Branch::Plus } else { Branch::Minus };
            let p = params(1.0, g, delta, eps);
            let t = Truncation { n_max: 60, ..Default::default() };
            let Ok(k) = k_sequence(x, &p, b, &t) else { return Ok(()); };
            for n in 2..k.len() {
                let f = f_coeff(n - 1, x, &p, b, &t).unwrap();
                let a = n as f64 * k[n];
                let m = f * k[n - 1];
                let scale = a.abs().max(m.abs()).max(k[n - 2].abs());
                if !scale.is_finite() { break; }
                prop_assert!((a - m + k[n - 2]).abs() <= 8.0 * f64::EPSILON * scale);
            }
        }

        #[test]
        fn coefficients_alternate_under_coupling_flip(
            x in -2.0f64..6.0,
            g in 0.05f64..1.5,
            delta in -2.0f64..2.0,
            eps in -0.6f64..0.6,
        ) {
            let p = params(1.0, g, delta, eps);
            let t = Truncation { n_max: 30, ..Default::default() };
            let Ok(k) = k_sequence(x, &p, Branch::Plus, &t) else { return Ok(()); };
            let kneg = k_sequence(x, &p.with_g(-g), Branch::Plus, &t).unwrap();
            for n in 0..k.len() {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert_eq!(kneg[n], sign * k[n]);
            }
            let a = branch_sums(x, &p, Branch::Plus, &t).unwrap();
            let b = branch_sums(x, &p.with_g(-g), Branch::Plus, &t).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn raising_cutoff_keeps_converged_value(
            x in -1.5f64..4.0,
            g in 0.05f64..1.2,
            delta in 0.0f64..2.0,
            eps in -0.4f64..0.4,
        ) {
            let p = params(1.0, g, delta, eps);
            let t = Truncation::default();
            let Ok(a) = r_series(x, &p, Branch::Minus, &t) else { return Ok(()); };
            prop_assume!(a.converged);
            let b = r_series(x, &p, Branch::Minus, &Truncation { n_max: 800, ..t }).unwrap();
            prop_assert!((a.value - b.value).abs() <= t.tail_tol * a.value.abs().max(1.0));
        }
    }
}
