use super::{
    CoercivityConstants, DeclaredConstants, Envelope, FieldKind, Flux, GrowthConstants,
    OperatorFamily, SINGULAR_GUARD,
};
use crate::error::{Error, Result};
use crate::function_space::{dot, FieldSamples, GalerkinBasis};

/// The p-Laplacian `⟨A₀v, w⟩ = ∫ |∇v|^{p−2} ∇v·∇w` on scalar bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PLaplace {
    p: f64,
}

impl PLaplace {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {p} not in (1, inf)")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn magnitude(&self, g: &[f64]) -> f64 {
        let m = dot(g, g).sqrt();
        if self.p < 2.0 {
            m.max(SINGULAR_GUARD)
        } else {
            m
        }
    }
}

impl OperatorFamily for PLaplace {
    fn name(&self) -> String {
        format!("p_laplace(p={})", self.p)
    }

    fn field_kind(&self) -> FieldKind {
        FieldKind::Scalar
    }

    fn flux(&self, _t: f64, field: &FieldSamples, basis: &GalerkinBasis) -> Result<Flux> {
        let d = basis.dim();
        let mut grad = Vec::with_capacity(field.grads.len());
        for g in field.grads.chunks_exact(d) {
            let scale = self.magnitude(g).powf(self.p - 2.0);
            grad.extend(g.iter().map(|&x| scale * x));
        }
        Ok(Flux {
            value: None,
            grad: Some(grad),
        })
    }

    /// Hölder gives `‖A₀v‖_* ≤ ‖v‖_V^{p−1}` and `⟨A₀v, v⟩ = ‖v‖_V^p`.
    fn constants(&self, _basis: &GalerkinBasis) -> DeclaredConstants {
        DeclaredConstants {
            growth: Some(GrowthConstants {
                envelope: Envelope::constant(1.0),
                alpha: 0.0,
                beta: 1.0,
                gamma: 0.0,
            }),
            coercivity: Some(CoercivityConstants {
                c0: 1.0,
                c1: 0.0,
                c2: 0.0,
            }),
        }
    }

    fn jacobian(&self, _t: f64, coeffs: &[f64], basis: &GalerkinBasis) -> Option<Result<Vec<f64>>> {
        Some(self.analytic_jacobian(coeffs, basis))
    }
}

impl PLaplace {
    /// `J_ij = ∫ |g|^{p−2} ∇vᵢ·∇vⱼ + (p−2)|g|^{p−4} (g·∇vᵢ)(g·∇vⱼ)`.
    fn analytic_jacobian(&self, coeffs: &[f64], basis: &GalerkinBasis) -> Result<Vec<f64>> {
        self.check_basis(basis)?;
        let field = basis.evaluate(coeffs)?;
        let n = basis.n();
        let d = basis.dim();
        let mut jac = vec![0.0; n * n];
        let mut proj = vec![0.0; n];
        for (q, &w) in basis.weights().iter().enumerate() {
            let g = &field.grads[q * d..(q + 1) * d];
            let m = self.magnitude(g);
            let a = w * m.powf(self.p - 2.0);
            let b = w * (self.p - 2.0) * m.powf(self.p - 4.0);
            for (i, pi) in proj.iter_mut().enumerate() {
                *pi = dot(g, &basis.grads_of(i)[q * d..(q + 1) * d]);
            }
            for i in 0..n {
                let gi = &basis.grads_of(i)[q * d..(q + 1) * d];
                for j in i..n {
                    let gj = &basis.grads_of(j)[q * d..(q + 1) * d];
                    let v = a * dot(gi, gj) + b * proj[i] * proj[j];
                    jac[i * n + j] += v;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                jac[i * n + j] = jac[j * n + i];
            }
        }
        Ok(jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Domain;
    use crate::operators::p_laplace_pairing;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sine(n: usize) -> GalerkinBasis {
        GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 16, 8).unwrap(), n).unwrap()
    }

    #[test]
    fn pairing_examples() {
        let b = sine(4);
        let e1 = [1.0, 0.0, 0.0, 0.0];
        let v = [0.3, -0.2, 1.0, 0.5];
        assert_eq!(p_laplace_pairing(&v, &[0.0; 4], &b, 3.0).unwrap(), 0.0);
        assert_relative_eq!(p_laplace_pairing(&e1, &e1, &b, 2.0).unwrap(), PI * PI, max_relative = 1e-12);
        assert_relative_eq!(
            p_laplace_pairing(&e1, &e1, &b, 4.0).unwrap(),
            4.0 * PI.powi(4) * 3.0 / 8.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn load_is_diagonal_for_p2() {
        let b = sine(5);
        let op = PLaplace::new(2.0).unwrap();
        for i in 0..5 {
            let mut e = vec![0.0; 5];
            e[i] = 1.0;
            let load = op.load(0.0, &e, &b).unwrap();
            for (j, &l) in load.iter().enumerate() {
                let expected = if i == j { ((i + 1) as f64 * PI).powi(2) } else { 0.0 };
                assert!((l - expected).abs() < 1e-9 * (1.0 + expected), "({i},{j}) {l}");
            }
        }
    }

    #[test]
    fn rejects_vector_basis() {
        let t = GalerkinBasis::divfree_fourier_2d(Domain::torus_2d(1.0, 1.0, 8).unwrap(), 2).unwrap();
        assert!(matches!(
            p_laplace_pairing(&[1.0, 0.0], &[1.0, 0.0], &t, 2.0),
            Err(Error::IncompatibleBasis(_))
        ));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let b = sine(4);
        for p in [1.5, 2.0, 3.0] {
            let op = PLaplace::new(p).unwrap();
            let a = [0.7, -0.3, 0.2, 0.1];
            let jac = op.jacobian(0.0, &a, &b).unwrap().unwrap();
            let base = op.load(0.0, &a, &b).unwrap();
            for j in 0..4 {
                let h = 1e-6;
                let mut ap = a;
                ap[j] += h;
                let lp = op.load(0.0, &ap, &b).unwrap();
                for i in 0..4 {
                    let fd = (lp[i] - base[i]) / h;
                    assert!(
                        (fd - jac[i * 4 + j]).abs() < 1e-3 * (1.0 + fd.abs()),
                        "p={p} ({i},{j}) fd {fd} vs {}",
                        jac[i * 4 + j]
                    );
                }
            }
        }
    }
}
