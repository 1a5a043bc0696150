//! Right-hand sides `f(t)`, represented through their Galerkin load vectors
//! `(⟨f(t), vᵢ⟩)ᵢ`.

use crate::error::{Error, Result};
use crate::function_space::GalerkinBasis;
use crate::operators::{OperatorFamily, PLaplace};

/// Smooth time amplitude `a(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeAmplitude {
    Zero,
    Constant(f64),
    /// `a₀ e^{−rate·t}`
    Exp { a0: f64, rate: f64 },
}

impl TimeAmplitude {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeAmplitude::Zero => 0.0,
            TimeAmplitude::Constant(c) => c,
            TimeAmplitude::Exp { a0, rate } => a0 * (-rate * t).exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeAmplitude::Zero | TimeAmplitude::Constant(_) => 0.0,
            TimeAmplitude::Exp { a0, rate } => -rate * a0 * (-rate * t).exp(),
        }
    }
}

/// Forcing chosen so that `a(t)·v_target` solves the Galerkin system of the
/// p-Laplacian exactly:
/// `⟨f(t), vᵢ⟩ = a′(t) δ_{i,target} + ⟨A₀(a(t) v_target), vᵢ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedForcing {
    operator: PLaplace,
    target: usize,
    amplitude: TimeAmplitude,
}

impl ManufacturedForcing {
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn amplitude(&self) -> TimeAmplitude {
        self.amplitude
    }

    /// Coefficients of the exact Galerkin solution at time `t`.
    pub fn exact_coefficients(&self, t: f64, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n];
        if self.target < n {
            c[self.target] = self.amplitude.value(t);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    /// Spatially constant scalar source `f(x) = c`.
    Constant(f64),
    Manufactured(ManufacturedForcing),
}

impl Forcing {
    pub fn load(&self, t: f64, basis: &GalerkinBasis) -> Result<Vec<f64>> {
        match self {
            Forcing::Zero => Ok(vec![0.0; basis.n()]),
            Forcing::Constant(c) => {
                if basis.components() != 1 {
                    return Err(Error::IncompatibleBasis(
                        "constant forcing needs a scalar basis".into(),
                    ));
                }
                Ok((0..basis.n())
                    .map(|i| {
                        c * basis
                            .weights()
                            .iter()
                            .zip(basis.values_of(i))
                            .map(|(w, v)| w * v)
                            .sum::<f64>()
                    })
                    .collect())
            }
            Forcing::Manufactured(m) => {
                if m.target >= basis.n() {
                    return Err(Error::InvalidInput(format!(
                        "manufactured target mode {} outside basis of size {}",
                        m.target + 1,
                        basis.n()
                    )));
                }
                let state = m.exact_coefficients(t, basis.n());
                let mut load = m.operator.load(t, &state, basis)?;
                load[m.target] += m.amplitude.derivative(t);
                Ok(load)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    pub fn describe(&self) -> String {
        match self {
            Forcing::Zero => "zero".into(),
            Forcing::Constant(c) => format!("constant({c})"),
            Forcing::Manufactured(m) => format!(
                "manufactured(p={}, mode={}, a={:?})",
                m.operator.p(),
                m.target + 1,
                m.amplitude
            ),
        }
    }
}

/// Manufactured forcing for the p-Laplacian targeting basis member `target`
/// (zero-based) with amplitude `a(t)`.
pub fn manufactured_forced(
    p: f64,
    target: usize,
    amplitude: TimeAmplitude,
    basis: &GalerkinBasis,
) -> Result<Forcing> {
    if basis.components() != 1 {
        return Err(Error::IncompatibleBasis(
            "manufactured forcing targets scalar sine modes".into(),
        ));
    }
    if target >= basis.n() {
        return Err(Error::InvalidInput(format!(
            "target mode {} outside the span of {} basis functions",
            target + 1,
            basis.n()
        )));
    }
    Ok(Forcing::Manufactured(ManufacturedForcing {
        operator: PLaplace::new(p)?,
        target,
        amplitude,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Domain;
    use std::f64::consts::PI;

    fn sine(n: usize) -> GalerkinBasis {
        GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 16, 8).unwrap(), n).unwrap()
    }

    #[test]
    fn stationary_p2_target_gives_laplace_load() {
        let b = sine(4);
        let f = manufactured_forced(2.0, 0, TimeAmplitude::Constant(1.0), &b).unwrap();
        let load = f.load(0.3, &b).unwrap();
        assert!((load[0] - PI * PI).abs() < 1e-10);
        assert!(load[1..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn zero_amplitude_gives_zero_load() {
        let b = sine(3);
        let f = manufactured_forced(3.0, 1, TimeAmplitude::Zero, &b).unwrap();
        assert_eq!(f.load(0.0, &b).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn target_outside_span_rejected() {
        let b = sine(3);
        assert!(manufactured_forced(2.0, 3, TimeAmplitude::Constant(1.0), &b).is_err());
    }

    #[test]
    fn constant_source_projects_onto_odd_modes() {
        let b = sine(4);
        let load = Forcing::Constant(1.0).load(0.0, &b).unwrap();
        // ∫ √2 sin(iπx) = √2 (1 − cos iπ)/(iπ)
        for (i, &l) in load.iter().enumerate() {
            let k = (i + 1) as f64;
            let exact = 2f64.sqrt() * (1.0 - (k * PI).cos()) / (k * PI);
            assert!((l - exact).abs() < 1e-13);
        }
    }
}
