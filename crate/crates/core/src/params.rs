use crate::error::{Error, Result};
use crate::math;

/// Physical parameters of `H = ω a†a + g σx(a† + a) + Δ σz + ε σx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub omega: f64,
    pub g: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl ModelParams {
    pub fn new(omega: f64, g: f64, delta: f64, epsilon: f64) -> Result<Self> {
        let p = ModelParams {
            omega,
            g,
            delta,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_g(self, g: f64) -> Self {
        ModelParams { g, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        ModelParams { delta, ..self }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        ModelParams { epsilon, ..self }
    }

    /// Checks `ω > 0` and that every field is finite. `g = 0` passes.
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidFrequency(self.omega));
        }
        if !self.g.is_finite() || !self.delta.is_finite() || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument("model parameters must be finite"));
        }
        Ok(())
    }

    /// The G-function path divides by `2g`.
    pub(crate) fn require_coupling(&self) -> Result<()> {
        self.validate()?;
        if self.g == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        Ok(())
    }

    /// True when `2ε/ω` lies within `1e-6` of a nonzero integer.
    pub fn is_resonant(&self) -> bool {
        let ratio = 2.0 * self.epsilon / self.omega;
        let k = math::round(ratio);
        k != 0.0 && (ratio - k).abs() < 1e-6
    }

    pub(crate) fn require_non_resonant(&self) -> Result<()> {
        if self.is_resonant() {
            return Err(Error::ResonantParameters {
                ratio: 2.0 * self.epsilon / self.omega,
            });
        }
        Ok(())
    }

    /// `x` offset between the spectral variable and the energy, `g²/ω`.
    pub fn energy_shift(&self) -> f64 {
        self.g * self.g / self.omega
    }
}

/// Series and product cutoffs shared by every evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Largest series index evaluated.
    pub n_max: usize,
    /// A term counts as small when `|term| < tail_tol · |partial sum|`.
    pub tail_tol: f64,
    /// Consecutive small terms needed before the sum stops.
    pub tail_run: usize,
    /// Minimum distance from any pole, in units of ω.
    pub pole_guard: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            n_max: 200,
            tail_tol: 1e-14,
            tail_run: 5,
            pole_guard: 1e-8,
        }
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(Error::InvalidArgument("n_max must be at least 2"));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidArgument("tail_tol must be positive"));
        }
        if self.tail_run < 1 {
            return Err(Error::InvalidArgument("tail_run must be at least 1"));
        }
        if !(self.pole_guard > 0.0) {
            return Err(Error::InvalidArgument("pole_guard must be positive"));
        }
        Ok(())
    }

    /// Absolute pole guard for a given ω.
    pub fn guard(&self, omega: f64) -> f64 {
        self.pole_guard * omega
    }

    /// Raises `n_max` so the series can reach its geometric tail at this
    /// coupling. Terms `K_n (g/ω)^n` peak near `n ≈ 2(g/ω)²` and only decay
    /// past `n ≈ 4(g/ω)²`.
    pub fn for_coupling(&self, g: f64, omega: f64) -> Self {
        let q = g / omega;
        let needed = math::ceil(7.0 * q * q + 60.0);
        let needed = if needed.is_finite() {
            needed as usize
        } else {
            usize::MAX
        };
        Truncation {
            n_max: self.n_max.max(needed),
            ..*self
        }
    }
}

/// Selects the `±` superscript of `K_n^±`, `f_n^±`, `R^±`, `R̄^±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

impl core::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            _ => Err(Error::InvalidArgument("branch must be `plus` or `minus`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_frequency() {
        assert_eq!(
            ModelParams::new(0.0, 0.1, 1.0, 0.0),
            Err(Error::InvalidFrequency(0.0))
        );
        assert!(ModelParams::new(-1.0, 0.1, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn resonance() {
        let p = ModelParams::new(1.0, 0.3, 1.0, 0.5).unwrap();
        assert!(p.is_resonant());
        assert!(!p.with_epsilon(0.0).is_resonant());
        assert!(!p.with_epsilon(0.3).is_resonant());
        assert!(p.with_epsilon(-1.0).is_resonant());
    }

    #[test]
    fn truncation_validation() {
        assert!(Truncation::default().validate().is_ok());
        let t = Truncation {
            n_max: 1,
            ..Default::default()
        };
        assert!(t.validate().is_err());
        let t = Truncation {
            tail_run: 0,
            ..Default::default()
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn coupling_raises_cutoff_only() {
        let t = Truncation::default();
        assert_eq!(t.for_coupling(0.5, 1.0).n_max, 200);
        assert!(t.for_coupling(8.0, 1.0).n_max >= 7 * 64);
    }
}
