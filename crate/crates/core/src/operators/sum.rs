use super::{DeclaredConstants, FieldKind, Flux, OperatorFamily, SharedOperator};
use crate::error::{Error, Result};
use crate::function_space::{FieldSamples, GalerkinBasis};

/// `A(t) = Σ_k A_k(t)`.
#[derive(Debug, Clone)]
pub struct SumOperator {
    parts: Vec<SharedOperator>,
    kind: FieldKind,
}

impl SumOperator {
    pub fn new(parts: Vec<SharedOperator>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("sum of zero operators".into()))?;
        let kind = first.field_kind();
        if let Some(bad) = parts.iter().find(|p| p.field_kind() != kind) {
            return Err(Error::IncompatibleBasis(format!(
                "cannot add {} ({:?}) to {} ({kind:?})",
                bad.name(),
                bad.field_kind(),
                first.name()
            )));
        }
        Ok(Self { parts, kind })
    }

    pub fn parts(&self) -> &[SharedOperator] {
        &self.parts
    }
}

impl OperatorFamily for SumOperator {
    fn name(&self) -> String {
        self.parts
            .iter()
            .map(|p| p.name())
            .collect::<Vec<_>>()
            .join(" + ")
    }

    fn field_kind(&self) -> FieldKind {
        self.kind
    }

    fn flux(&self, t: f64, field: &FieldSamples, basis: &GalerkinBasis) -> Result<Flux> {
        let mut total = Flux::default();
        for part in &self.parts {
            total.add_assign(part.flux(t, field, basis)?);
        }
        Ok(total)
    }

    fn constants(&self, basis: &GalerkinBasis) -> DeclaredConstants {
        let parts: Vec<_> = self.parts.iter().map(|p| p.constants(basis)).collect();
        DeclaredConstants::combine(&parts)
    }

    fn jacobian(&self, t: f64, coeffs: &[f64], basis: &GalerkinBasis) -> Option<Result<Vec<f64>>> {
        let mut total: Option<Vec<f64>> = None;
        for part in &self.parts {
            let jac = match part.jacobian(t, coeffs, basis)? {
                Ok(j) => j,
                Err(e) => return Some(Err(e)),
            };
            match total.as_mut() {
                Some(acc) => acc.iter_mut().zip(jac).for_each(|(a, b)| *a += b),
                None => total = Some(jac),
            }
        }
        total.map(Ok)
    }

    fn part_loads(&self, t: f64, coeffs: &[f64], basis: &GalerkinBasis) -> Result<Vec<(String, Vec<f64>)>> {
        let mut out = Vec::new();
        for part in &self.parts {
            out.extend(part.part_loads(t, coeffs, basis)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Domain;
    use crate::operators::{Convective, Nemyckii, PLaplace, PerturbationSpec};
    use std::sync::Arc;

    fn sine(n: usize) -> GalerkinBasis {
        GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 16, 8).unwrap(), n).unwrap()
    }

    #[test]
    fn single_part_sum_is_the_part() {
        let b = sine(3);
        let lap: SharedOperator = Arc::new(PLaplace::new(3.0).unwrap());
        let sum = SumOperator::new(vec![lap.clone()]).unwrap();
        let v = [0.5, -1.0, 0.25];
        assert_eq!(sum.load(0.1, &v, &b).unwrap(), lap.load(0.1, &v, &b).unwrap());
    }

    #[test]
    fn pairing_with_negative_identity_perturbation() {
        let b = sine(4);
        let lap = PLaplace::new(2.5).unwrap();
        let pert = Nemyckii::new(PerturbationSpec::linear_damping(1.0));
        let sum = SumOperator::new(vec![Arc::new(lap), Arc::new(pert)]).unwrap();
        let v = [0.5, -0.4, 0.2, 0.1];
        let expected = lap.pairing(0.0, &v, &v, &b).unwrap() - b.h_inner(&v, &v).unwrap();
        assert!((sum.pairing(0.0, &v, &v, &b).unwrap() - expected).abs() < 1e-12);

        let loads = sum.part_loads(0.0, &v, &b).unwrap();
        assert_eq!(loads.len(), 2);
        let total = sum.load(0.0, &v, &b).unwrap();
        for i in 0..4 {
            assert!((loads[0].1[i] + loads[1].1[i] - total[i]).abs() < 1e-12);
        }
        assert!(sum.jacobian(0.0, &v, &b).is_some());
    }

    #[test]
    fn mixed_field_kinds_rejected() {
        let parts: Vec<SharedOperator> = vec![
            Arc::new(PLaplace::new(2.0).unwrap()),
            Arc::new(Convective::new(2.0).unwrap()),
        ];
        assert!(matches!(SumOperator::new(parts), Err(Error::IncompatibleBasis(_))));
        assert!(SumOperator::new(Vec::new()).is_err());
    }
}
