//! Time-dependent operator families `A(t): V∩H → (V∩H)*`, evaluated through
//! duality pairings `⟨A(t)v, w⟩` and Galerkin load vectors
//! `(⟨A(t)v, vᵢ⟩)ᵢ`.
//!
//! Every operator here is local: at each quadrature node it produces a flux
//! pair `(F⁰, F¹)` and the pairing is `Σ_q ω_q (F⁰·w + F¹:Gw)`, with `G` the
//! basis' gradient. Pairings are therefore linear in `w` by construction.

mod fluid;
mod nemyckii;
mod p_laplace;
mod sum;

use std::fmt;
use std::sync::Arc;

pub use fluid::{Convective, Stress, StressParams};
pub use nemyckii::{interpolation_factor, Coefficient, NemyckiiGrowth, Nemyckii, Nonlinearity, PerturbationSpec, SignCondition, Term};
pub use p_laplace::PLaplace;
pub use sum::SumOperator;

use crate::error::{Error, Result};
use crate::function_space::{dot, BasisKind, FieldSamples, GalerkinBasis};

/// Fluxes at the quadrature nodes, laid out like [`FieldSamples`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flux {
    /// Zeroth-order flux `F⁰`, paired with the test function values.
    pub value: Option<Vec<f64>>,
    /// First-order flux `F¹`, paired with the test function gradients.
    pub grad: Option<Vec<f64>>,
}

impl Flux {
    fn add_assign(&mut self, other: Flux) {
        fn merge(a: &mut Option<Vec<f64>>, b: Option<Vec<f64>>) {
            match (a.as_mut(), b) {
                (Some(x), Some(y)) => x.iter_mut().zip(y).for_each(|(x, y)| *x += y),
                (None, Some(y)) => *a = Some(y),
                _ => {}
            }
        }
        merge(&mut self.value, other.value);
        merge(&mut self.grad, other.grad);
    }

    /// `Σ_q ω_q (F⁰·w + F¹:Gw)` against tabulated test samples.
    pub fn contract(&self, basis: &GalerkinBasis, values: &[f64], grads: &[f64]) -> f64 {
        let c = basis.components();
        let cd = c * basis.dim();
        let w = basis.weights();
        let mut total = 0.0;
        if let Some(f0) = &self.value {
            total += w
                .iter()
                .enumerate()
                .map(|(q, &wq)| wq * dot(&f0[q * c..(q + 1) * c], &values[q * c..(q + 1) * c]))
                .sum::<f64>();
        }
        if let Some(f1) = &self.grad {
            total += w
                .iter()
                .enumerate()
                .map(|(q, &wq)| wq * dot(&f1[q * cd..(q + 1) * cd], &grads[q * cd..(q + 1) * cd]))
                .sum::<f64>();
        }
        total
    }
}

/// Non-decreasing function `𝓑(s) = Σ_k c_k s^{e_k}` with `c_k, e_k ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub terms: Vec<(f64, f64)>,
}

impl Envelope {
    pub fn constant(c: f64) -> Self {
        Self { terms: vec![(c, 0.0)] }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, e)| if e == 0.0 { c } else { c * s.powf(e) })
            .sum()
    }

    pub fn describe(&self) -> String {
        self.terms
            .iter()
            .map(|(c, e)| format!("{c}*s^{e}"))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Declared growth bound
/// `‖A(t)v‖_* ≤ 𝓑(‖v‖_H)(α + β‖v‖_V^{p−1}) + γ` (constant in time).
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthConstants {
    pub envelope: Envelope,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GrowthConstants {
    pub fn rhs(&self, h_norm: f64, v_norm: f64, p: f64) -> f64 {
        self.envelope.eval(h_norm) * (self.alpha + self.beta * v_norm.powf(p - 1.0)) + self.gamma
    }
}

/// Declared semi-coercivity
/// `⟨A(t)v, v⟩ ≥ c₀‖v‖_V^p − c₁‖v‖_H² − c₂` (constant in time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl CoercivityConstants {
    pub fn lower_bound(&self, h_norm: f64, v_norm: f64, p: f64) -> f64 {
        self.c0 * v_norm.powf(p) - self.c1 * h_norm * h_norm - self.c2
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeclaredConstants {
    pub growth: Option<GrowthConstants>,
    pub coercivity: Option<CoercivityConstants>,
}

impl DeclaredConstants {
    /// Conservative combination for a sum of operators: coercivity
    /// constants add, growth envelopes concatenate and `α, β, γ` add. The
    /// product `(Σ𝓑ᵢ)(Σαᵢ + Σβᵢ X) + Σγᵢ` dominates `Σ [𝓑ᵢ(αᵢ + βᵢ X) + γᵢ]`.
    pub fn combine(parts: &[DeclaredConstants]) -> Self {
        let growth = parts
            .iter()
            .map(|c| c.growth.clone())
            .collect::<Option<Vec<_>>>()
            .map(|gs| GrowthConstants {
                envelope: Envelope {
                    terms: gs.iter().flat_map(|g| g.envelope.terms.clone()).collect(),
                },
                alpha: gs.iter().map(|g| g.alpha).sum(),
                beta: gs.iter().map(|g| g.beta).sum(),
                gamma: gs.iter().map(|g| g.gamma).sum(),
            });
        let coercivity = parts
            .iter()
            .map(|c| c.coercivity)
            .collect::<Option<Vec<_>>>()
            .map(|cs| CoercivityConstants {
                c0: cs.iter().map(|c| c.c0).sum(),
                c1: cs.iter().map(|c| c.c1).sum(),
                c2: cs.iter().map(|c| c.c2).sum(),
            });
        Self { growth, coercivity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector,
}

impl FieldKind {
    pub fn of(kind: BasisKind) -> Self {
        if kind.is_vector() {
            FieldKind::Vector
        } else {
            FieldKind::Scalar
        }
    }
}

/// A family of operators `A(t)` acting on Galerkin coefficient vectors.
pub trait OperatorFamily: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn field_kind(&self) -> FieldKind;

    /// Nodal fluxes of `A(t)v` for the sampled field `v`.
    fn flux(&self, t: f64, field: &FieldSamples, basis: &GalerkinBasis) -> Result<Flux>;

    /// Declared structural constants for this operator on `basis`.
    fn constants(&self, basis: &GalerkinBasis) -> DeclaredConstants;

    /// Analytic Jacobian `∂ loadᵢ / ∂αⱼ`, row-major, when available.
    fn jacobian(&self, _t: f64, _coeffs: &[f64], _basis: &GalerkinBasis) -> Option<Result<Vec<f64>>> {
        None
    }

    /// Per-part load vectors, for ledgers that track each summand.
    fn part_loads(&self, t: f64, coeffs: &[f64], basis: &GalerkinBasis) -> Result<Vec<(String, Vec<f64>)>> {
        Ok(vec![(self.name(), self.load(t, coeffs, basis)?)])
    }

    fn check_basis(&self, basis: &GalerkinBasis) -> Result<()> {
        if FieldKind::of(basis.kind()) != self.field_kind() {
            return Err(Error::IncompatibleBasis(format!(
                "{} acts on {:?} fields but basis {} is {:?}",
                self.name(),
                self.field_kind(),
                basis.kind().name(),
                FieldKind::of(basis.kind())
            )));
        }
        Ok(())
    }

    /// `⟨A(t)v, w⟩`.
    fn pairing(&self, t: f64, v: &[f64], w: &[f64], basis: &GalerkinBasis) -> Result<f64> {
        self.check_basis(basis)?;
        let flux = self.flux(t, &basis.evaluate(v)?, basis)?;
        let test = basis.evaluate(w)?;
        Ok(flux.contract(basis, &test.values, &test.grads))
    }

    /// `(⟨A(t)v, vᵢ⟩)_{i=1..n}`.
    fn load(&self, t: f64, v: &[f64], basis: &GalerkinBasis) -> Result<Vec<f64>> {
        self.check_basis(basis)?;
        let flux = self.flux(t, &basis.evaluate(v)?, basis)?;
        Ok((0..basis.n())
            .map(|i| flux.contract(basis, basis.values_of(i), basis.grads_of(i)))
            .collect())
    }
}

pub type SharedOperator = Arc<dyn OperatorFamily>;

/// `∫ |∇v|^{p−2} ∇v·∇w`.
pub fn p_laplace_pairing(v: &[f64], w: &[f64], basis: &GalerkinBasis, p: f64) -> Result<f64> {
    PLaplace::new(p)?.pairing(0.0, v, w, basis)
}

/// `∫ (δ + |Du|)^{p−2} Du : Dw`.
pub fn stress_pairing(u: &[f64], w: &[f64], basis: &GalerkinBasis, params: StressParams) -> Result<f64> {
    Stress::new(params)?.pairing(0.0, u, w, basis)
}

/// `−∫ u⊗u : Dw`.
pub fn convective_pairing(u: &[f64], w: &[f64], basis: &GalerkinBasis) -> Result<f64> {
    Convective::new(2.0)?.pairing(0.0, u, w, basis)
}

/// `∫ b(t, x, v) w`.
pub fn nemyckii_pairing(
    t: f64,
    v: &[f64],
    w: &[f64],
    basis: &GalerkinBasis,
    spec: &PerturbationSpec,
) -> Result<f64> {
    Nemyckii::new(spec.clone()).pairing(t, v, w, basis)
}

pub fn sum_operator(parts: Vec<SharedOperator>) -> Result<SumOperator> {
    SumOperator::new(parts)
}

pub fn assemble_load(t: f64, v: &[f64], op: &dyn OperatorFamily, basis: &GalerkinBasis) -> Result<Vec<f64>> {
    op.load(t, v, basis)
}

/// Guard for the removable singularity of `|ξ|^{p−2}` at `ξ = 0`, `p < 2`.
pub(crate) const SINGULAR_GUARD: f64 = 1e-14;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_and_combination() {
        let a = DeclaredConstants {
            growth: Some(GrowthConstants {
                envelope: Envelope::constant(1.0),
                alpha: 0.0,
                beta: 1.0,
                gamma: 0.0,
            }),
            coercivity: Some(CoercivityConstants { c0: 1.0, c1: 0.0, c2: 0.0 }),
        };
        let b = DeclaredConstants {
            growth: Some(GrowthConstants {
                envelope: Envelope { terms: vec![(2.0, 0.5)] },
                alpha: 1.0,
                beta: 0.0,
                gamma: 3.0,
            }),
            coercivity: Some(CoercivityConstants { c0: 0.0, c1: 2.0, c2: 0.5 }),
        };
        let s = DeclaredConstants::combine(&[a.clone(), b.clone()]);
        let g = s.growth.unwrap();
        assert_eq!(g.envelope.eval(4.0), 1.0 + 4.0);
        assert_eq!((g.alpha, g.beta, g.gamma), (1.0, 1.0, 3.0));
        let c = s.coercivity.unwrap();
        assert_eq!((c.c0, c.c1, c.c2), (1.0, 2.0, 0.5));
        // combined bound dominates the sum of the individual bounds
        for &(h, v) in &[(0.0, 0.0), (1.0, 3.0), (10.0, 0.1), (0.2, 50.0)] {
            let sep = a.growth.as_ref().unwrap().rhs(h, v, 3.0) + b.growth.as_ref().unwrap().rhs(h, v, 3.0);
            assert!(g.rhs(h, v, 3.0) >= sep);
        }
        let missing = DeclaredConstants::combine(&[a, DeclaredConstants::default()]);
        assert!(missing.growth.is_none() && missing.coercivity.is_none());
    }
}
