use super::{
    CoercivityConstants, DeclaredConstants, Envelope, FieldKind, Flux, GrowthConstants,
    OperatorFamily, SINGULAR_GUARD,
};
use crate::error::{Error, Result};
use crate::function_space::{dot, FieldSamples, GalerkinBasis};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressParams {
    pub p: f64,
    pub delta: f64,
}

impl StressParams {
    pub fn new(p: f64, delta: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {p} not in (1, inf)")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta = {delta} must be >= 0")));
        }
        Ok(Self { p, delta })
    }
}

/// Extra stress `S(Du) = (δ + |Du|)^{p−2} Du`, paired as `∫ S(Du) : Dw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stress {
    params: StressParams,
}

impl Stress {
    pub fn new(params: StressParams) -> Result<Self> {
        let params = StressParams::new(params.p, params.delta)?;
        Ok(Self { params })
    }

    pub fn params(&self) -> StressParams {
        self.params
    }
}

impl OperatorFamily for Stress {
    fn name(&self) -> String {
        format!("stress(p={},delta={})", self.params.p, self.params.delta)
    }

    fn field_kind(&self) -> FieldKind {
        FieldKind::Vector
    }

    fn flux(&self, _t: f64, field: &FieldSamples, basis: &GalerkinBasis) -> Result<Flux> {
        let block = basis.components() * basis.dim();
        let StressParams { p, delta } = self.params;
        let mut grad = Vec::with_capacity(field.grads.len());
        for g in field.grads.chunks_exact(block) {
            let mut base = delta + dot(g, g).sqrt();
            if p < 2.0 {
                base = base.max(SINGULAR_GUARD);
            }
            let scale = base.powf(p - 2.0);
            grad.extend(g.iter().map(|&x| scale * x));
        }
        Ok(Flux {
            value: None,
            grad: Some(grad),
        })
    }

    fn constants(&self, basis: &GalerkinBasis) -> DeclaredConstants {
        let StressParams { p, delta } = self.params;
        let measure = basis.domain().measure();
        let p_conj = p / (p - 1.0);
        let (growth, coercivity) = if delta == 0.0 {
            (
                GrowthConstants {
                    envelope: Envelope::constant(1.0),
                    alpha: 0.0,
                    beta: 1.0,
                    gamma: 0.0,
                },
                CoercivityConstants { c0: 1.0, c1: 0.0, c2: 0.0 },
            )
        } else if p >= 2.0 {
            // (δ+x)^{p−2} x ≤ 2^{p−2}(δ^{p−1} + x^{p−1}) and (δ+x)^{p−2} x² ≥ x^p
            let k = 2f64.powf(p - 2.0);
            (
                GrowthConstants {
                    envelope: Envelope::constant(1.0),
                    alpha: k * delta.powf(p - 1.0) * measure.powf(1.0 / p_conj),
                    beta: k,
                    gamma: 0.0,
                },
                CoercivityConstants { c0: 1.0, c1: 0.0, c2: 0.0 },
            )
        } else {
            // (δ+x)^{p−2} x ≤ x^{p−1}; (δ+x)^{p−2} x² ≥ 2^{p−2}(x^p − δ^p)
            let k = 2f64.powf(p - 2.0);
            (
                GrowthConstants {
                    envelope: Envelope::constant(1.0),
                    alpha: 0.0,
                    beta: 1.0,
                    gamma: 0.0,
                },
                CoercivityConstants {
                    c0: k,
                    c1: 0.0,
                    c2: k * delta.powf(p) * measure,
                },
            )
        };
        DeclaredConstants {
            growth: Some(growth),
            coercivity: Some(coercivity),
        }
    }
}

/// Convective term `⟨Bu, w⟩ = −∫ u⊗u : Dw`, in integrated-by-parts form.
///
/// The exponent `p` only enters the declared growth constants (through the
/// `V`-norm of the test function).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convective {
    p: f64,
}

impl Convective {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {p} not in (1, inf)")));
        }
        Ok(Self { p })
    }
}

impl OperatorFamily for Convective {
    fn name(&self) -> String {
        "convective".into()
    }

    fn field_kind(&self) -> FieldKind {
        FieldKind::Vector
    }

    fn flux(&self, _t: f64, field: &FieldSamples, basis: &GalerkinBasis) -> Result<Flux> {
        let c = basis.components();
        let d = basis.dim();
        let mut grad = Vec::with_capacity(field.grads.len());
        for u in field.values.chunks_exact(c) {
            for i in 0..c {
                for j in 0..d {
                    grad.push(-u[i] * u[j]);
                }
            }
        }
        Ok(Flux {
            value: None,
            grad: Some(grad),
        })
    }

    /// `⟨Bv, v⟩ = 0` for divergence-free fields. For growth,
    /// `|⟨Bv, w⟩| ≤ ‖v‖²_{L^{2p'}} ‖w‖_V` and on the span
    /// `‖v‖_{L^{2p'}} ≤ |Ω|^{1/(2p')} S_n ‖v‖_H`, where `S_n` is the basis'
    /// sup constant.
    fn constants(&self, basis: &GalerkinBasis) -> DeclaredConstants {
        let p_conj = self.p / (self.p - 1.0);
        let s_n = basis.sup_constant();
        let coeff = basis.domain().measure().powf(1.0 / p_conj) * s_n * s_n;
        DeclaredConstants {
            growth: Some(GrowthConstants {
                envelope: Envelope {
                    terms: vec![(coeff, 2.0)],
                },
                alpha: 1.0,
                beta: 0.0,
                gamma: 0.0,
            }),
            coercivity: Some(CoercivityConstants { c0: 0.0, c1: 0.0, c2: 0.0 }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Domain;
    use crate::operators::{convective_pairing, stress_pairing};
    use std::f64::consts::PI;

    fn torus(n: usize) -> GalerkinBasis {
        GalerkinBasis::divfree_fourier_2d(Domain::torus_2d(2.0 * PI, 2.0 * PI, 16).unwrap(), n).unwrap()
    }

    #[test]
    fn stress_zero_field_and_symmetry() {
        let b = torus(6);
        let w = [0.3, -1.0, 0.2, 0.8, 0.0, 0.4];
        let u = [1.0, 0.5, -0.5, 0.0, 0.3, -0.2];
        let params = StressParams::new(3.0, 0.0).unwrap();
        assert_eq!(stress_pairing(&[0.0; 6], &w, &b, params).unwrap(), 0.0);
        let lin = StressParams::new(2.0, 0.0).unwrap();
        let a = stress_pairing(&u, &w, &b, lin).unwrap();
        let c = stress_pairing(&w, &u, &b, lin).unwrap();
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn stress_rejects_scalar_basis() {
        let s = GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 8, 4).unwrap(), 2).unwrap();
        let params = StressParams::new(2.0, 0.0).unwrap();
        assert!(matches!(
            stress_pairing(&[1.0, 0.0], &[1.0, 0.0], &s, params),
            Err(Error::IncompatibleBasis(_))
        ));
        assert!(convective_pairing(&[1.0, 0.0], &[1.0, 0.0], &s).is_err());
        assert!(StressParams::new(2.0, -1.0).is_err());
    }

    #[test]
    fn convective_is_skew_on_divfree_fields() {
        let b = torus(10);
        let u = [0.4, -1.2, 0.7, 0.1, 2.0, -0.3, 0.5, 0.9, -1.1, 0.25];
        assert!(convective_pairing(&u, &u, &b).unwrap().abs() < 1e-10);
        assert_eq!(convective_pairing(&[0.0; 10], &u, &b).unwrap(), 0.0);
    }
}
