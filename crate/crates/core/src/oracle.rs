//! Reference spectrum by brute force: the Hamiltonian in a truncated
//! Fock ⊗ spin basis, diagonalized with cyclic Jacobi rotations.
//!
//! Nothing here touches the G-function code. In the σx eigenbasis
//! `|n, s⟩` (`s = ±1`) the matrix is real symmetric:
//!
//! ```text
//! ⟨n, s| H |n, s⟩     = nω + sε
//! ⟨n+1, s| H |n, s⟩   = s g √(n+1)
//! ⟨n, −s| H |n, s⟩    = Δ
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::params::ModelParams;

/// Default sweep cap for [`eigenvalues`].
pub const MAX_SWEEPS: usize = 100;

/// Dense real symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    order: usize,
    entries: Vec<f64>,
}

impl DenseSymmetric {
    pub fn zeros(order: usize) -> Self {
        DenseSymmetric {
            order,
            entries: vec![0.0; order * order],
        }
    }

    /// Builds from a full row-major array, symmetrizing as `(A + Aᵀ)/2`.
    pub fn from_rows(order: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != order * order {
            return Err(Error::InvalidArgument("row data does not match the order"));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite"));
        }
        let mut m = DenseSymmetric::zeros(order);
        for i in 0..order {
            for j in i..order {
                m.set(i, j, 0.5 * (rows[i * order + j] + rows[j * order + i]));
            }
        }
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.order + j] = v;
        self.entries[j * self.order + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        math::sqrt(self.entries.iter().map(|v| v * v).sum())
    }

    fn off_diagonal(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.order {
            for j in (i + 1)..self.order {
                let v = self.get(i, j);
                s += 2.0 * v * v;
            }
        }
        math::sqrt(s)
    }
}

/// The Hamiltonian with `fock_cutoff` boson states per spin block.
pub fn build_hamiltonian(p: &ModelParams, fock_cutoff: usize) -> Result<DenseSymmetric> {
    p.validate()?;
    if fock_cutoff < 2 {
        return Err(Error::InvalidArgument("Fock cutoff must be at least 2"));
    }
    let m = fock_cutoff;
    let mut h = DenseSymmetric::zeros(2 * m);
    for (block, s) in [(0, 1.0), (1, -1.0)] {
        let base = block * m;
        for n in 0..m {
            h.set(base + n, base + n, n as f64 * p.omega + s * p.epsilon);
            if n + 1 < m {
                h.set(base + n, base + n + 1, s * p.g * math::sqrt((n + 1) as f64));
            }
        }
    }
    for n in 0..m {
        h.set(n, m + n, p.delta);
    }
    Ok(h)
}

/// Result of a Jacobi run, flagged when the sweep cap was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiOutcome {
    /// Ascending.
    pub values: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Cyclic Jacobi. Stops once the off-diagonal Frobenius mass drops below
/// `1e-12` of the full norm.
pub fn jacobi(m: &DenseSymmetric, max_sweeps: usize) -> JacobiOutcome {
    let n = m.order();
    let mut a = m.clone();
    let target = 1e-12 * a.frobenius();
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < max_sweeps {
        let off = a.off_diagonal();
        if off <= target || off == 0.0 {
            converged = true;
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                // skip rotations that cannot change the diagonal in double precision
                if sweeps > 4
                    && (100.0 * apq).abs() + app.abs() == app.abs()
                    && (100.0 * apq).abs() + aqq.abs() == aqq.abs()
                {
                    a.set(p, q, 0.0);
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let r = math::sqrt(theta * theta + 1.0);
                    let t = 1.0 / (theta.abs() + r);
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                let tau = s / (1.0 + c);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, arp - s * (arq + arp * tau));
                    a.set(r, q, arq + s * (arp - arq * tau));
                }
            }
        }
    }
    if !converged {
        let off = a.off_diagonal();
        converged = off <= target || off == 0.0;
    }

    let mut values: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    values.sort_by(f64::total_cmp);
    JacobiOutcome {
        values,
        converged,
        sweeps,
    }
}

/// Sorted eigenvalues; errors if Jacobi does not converge within
/// [`MAX_SWEEPS`].
pub fn eigenvalues(m: &DenseSymmetric) -> Result<Vec<f64>> {
    let out = jacobi(m, MAX_SWEEPS);
    if !out.converged {
        return Err(Error::IterationCap { sweeps: out.sweeps });
    }
    Ok(out.values)
}

/// Sorted eigenvalues of the Hamiltonian truncated at `fock_cutoff`.
pub fn spectrum(p: &ModelParams, fock_cutoff: usize) -> Result<Vec<f64>> {
    eigenvalues(&build_hamiltonian(p, fock_cutoff)?)
}

/// A cutoff comfortably above the coherent-state displacement `(g/ω)²`.
pub fn auto_fock_cutoff(g: f64, omega: f64) -> usize {
    let q = g / omega;
    let m = math::ceil(6.0 * q * q) as usize + 40;
    m.max(60)
}

/// Largest deviation among the lowest `levels` eigenvalues between cutoffs
/// `m` and `m + step`.
pub fn cutoff_deviation(p: &ModelParams, m: usize, step: usize, levels: usize) -> Result<f64> {
    let a = spectrum(p, m)?;
    let b = spectrum(p, m + step)?;
    Ok(a.iter()
        .zip(&b)
        .take(levels)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Distances from `energy` to the closest and second-closest eigenvalue.
pub fn nearest_two(values: &[f64], energy: f64) -> (f64, f64) {
    let mut first = f64::INFINITY;
    let mut second = f64::INFINITY;
    for v in values {
        let d = (v - energy).abs();
        if d < first {
            second = first;
            first = d;
        } else if d < second {
            second = d;
        }
    }
    (first, second)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_by_two_closed_form() {
        let (a, b, c) = (1.5, -0.7, -2.0);
        let m = DenseSymmetric::from_rows(2, &[a, b, b, c]).unwrap();
        let ev = eigenvalues(&m).unwrap();
        let mid = 0.5 * (a + c);
        let r = libm::sqrt(0.25 * (a - c) * (a - c) + b * b);
        assert!(close(ev[0], mid - r, 1e-14));
        assert!(close(ev[1], mid + r, 1e-14));
    }

    #[test]
    fn identity() {
        let mut m = DenseSymmetric::zeros(7);
        for i in 0..7 {
            m.set(i, i, 1.0);
        }
        assert_eq!(eigenvalues(&m).unwrap(), vec![1.0; 7]);
    }

    #[test]
    fn uncoupled_doublets() {
        let p = ModelParams::new(1.0, 0.0, 1.2, 0.3).unwrap();
        let ev = spectrum(&p, 20).unwrap();
        let r = libm::sqrt(1.53);
        let mut expected: Vec<f64> = (0..20).flat_map(|n| [n as f64 - r, n as f64 + r]).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expected) {
            assert!(close(*a, *b, 1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn displaced_oscillator_ladder() {
        let p = ModelParams::new(1.0, 0.5, 0.0, 0.0).unwrap();
        let ev = spectrum(&p, 60).unwrap();
        for n in 0..8 {
            let e = n as f64 - 0.25;
            assert!(close(ev[2 * n], e, 1e-9));
            assert!(close(ev[2 * n + 1], e, 1e-9));
        }
    }

    #[test]
    fn cutoff_self_convergence() {
        let p = ModelParams::new(1.0, 0.7, 1.2, 0.3).unwrap();
        assert!(cutoff_deviation(&p, 60, 20, 8).unwrap() < 1e-9);
    }

    #[test]
    fn trace_preserved() {
        let p = ModelParams::new(1.0, 0.9, 0.8, -0.2).unwrap();
        let h = build_hamiltonian(&p, 30).unwrap();
        let sum: f64 = eigenvalues(&h).unwrap().iter().sum();
        assert!(close(sum, h.trace(), 1e-9 * h.trace().abs()));
    }

    #[test]
    fn unitary_equivalences() {
        let p = ModelParams::new(1.0, 0.7, 1.2, 0.3).unwrap();
        let base = spectrum(&p, 40).unwrap();
        for q in [p.with_epsilon(-0.3), p.with_g(-0.7), p.with_delta(-1.2)] {
            let other = spectrum(&q, 40).unwrap();
            for (a, b) in base.iter().zip(&other) {
                assert!(close(*a, *b, 1e-10));
            }
        }
    }

    #[test]
    fn small_cutoff_rejected() {
        let p = ModelParams::new(1.0, 0.7, 1.2, 0.3).unwrap();
        assert!(build_hamiltonian(&p, 1).is_err());
    }

    #[test]
    fn sweep_cap_is_flagged() {
        let p = ModelParams::new(1.0, 0.7, 1.2, 0.3).unwrap();
        let h = build_hamiltonian(&p, 20).unwrap();
        let out = jacobi(&h, 1);
        assert!(!out.converged);
        assert_eq!(out.values.len(), 40);
    }

    #[test]
    fn nearest_two_distances() {
        let (a, b) = nearest_two(&[0.0, 1.0, 1.1, 3.0], 1.04);
        assert!(close(a, 0.04, 1e-12) && close(b, 0.06, 1e-12));
    }
}
