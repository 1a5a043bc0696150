//! Superposition (Nemyckii) perturbations `⟨B(t)v, w⟩ = ∫ b(t, x, v) w` from a
//! closed catalogue of nonlinearities.

use super::{
    CoercivityConstants, DeclaredConstants, Envelope, FieldKind, Flux, GrowthConstants, OperatorFamily, SINGULAR_GUARD,
};
use crate::error::{Error, Result};
use crate::function_space::{FieldSamples, GalerkinBasis};

/// `(t, x)`-dependent coefficient of a perturbation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `a·cos(ωt)`
    TimeCos { amplitude: f64, omega: f64 },
    /// `a·cos(ω x₀)`
    SpaceCos { amplitude: f64, omega: f64 },
}

impl Coefficient {
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::TimeCos { amplitude, omega } => amplitude * (omega * t).cos(),
            Coefficient::SpaceCos { amplitude, omega } => amplitude * (omega * x[0]).cos(),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            Coefficient::Constant(c) => c.abs(),
            Coefficient::TimeCos { amplitude, .. } | Coefficient::SpaceCos { amplitude, .. } => {
                amplitude.abs()
            }
        }
    }
}

/// Nonlinearity in the state variable `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    /// `s^m`
    Power(u32),
    /// `s|s|^{q−1}`, `q > 0`
    SignedPower(f64),
    Sin,
    Cos,
    Tanh,
}

impl Nonlinearity {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Nonlinearity::Power(m) => s.powi(m as i32),
            Nonlinearity::SignedPower(q) if s == 0.0 && q > 0.0 => 0.0,
            Nonlinearity::SignedPower(q) => s * s.abs().powf(q - 1.0),
            Nonlinearity::Sin => s.sin(),
            Nonlinearity::Cos => s.cos(),
            Nonlinearity::Tanh => s.tanh(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            Nonlinearity::Power(0) => 0.0,
            Nonlinearity::Power(m) => m as f64 * s.powi(m as i32 - 1),
            Nonlinearity::SignedPower(q) => q * s.abs().max(SINGULAR_GUARD).powf(q - 1.0),
            Nonlinearity::Sin => s.cos(),
            Nonlinearity::Cos => -s.sin(),
            Nonlinearity::Tanh => 1.0 - s.tanh().powi(2),
        }
    }

    fn describe(&self) -> String {
        match self {
            Nonlinearity::Power(m) => format!("s^{m}"),
            Nonlinearity::SignedPower(q) => format!("s|s|^{}", q - 1.0),
            Nonlinearity::Sin => "sin(s)".into(),
            Nonlinearity::Cos => "cos(s)".into(),
            Nonlinearity::Tanh => "tanh(s)".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coefficient: Coefficient,
    pub nonlinearity: Nonlinearity,
}

/// Declared growth `|b(t,x,s)| ≤ C₁ + C₂(1 + |s|)^{r−1}` with constant
/// `C₁, C₂ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NemyckiiGrowth {
    pub c1: f64,
    pub c2: f64,
    pub r: f64,
}

impl NemyckiiGrowth {
    /// `ρ = max{1, 2(r−1)}`.
    pub fn rho(&self) -> f64 {
        (2.0 * (self.r - 1.0)).max(1.0)
    }
}

/// Declared sign condition `b(t,x,s)·s ≥ −c₁|s|² − c₂` with `c₁, c₂ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCondition {
    pub c1: f64,
    pub c2: f64,
}

/// `b(t, x, s) = Σ_k coef_k(t, x) · φ_k(s)` plus its declared constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub id: String,
    pub terms: Vec<Term>,
    pub growth: Option<NemyckiiGrowth>,
    pub sign: Option<SignCondition>,
}

impl PerturbationSpec {
    pub fn zero() -> Self {
        Self {
            id: "zero".into(),
            terms: Vec::new(),
            growth: Some(NemyckiiGrowth { c1: 0.0, c2: 0.0, r: 1.0 }),
            sign: Some(SignCondition { c1: 0.0, c2: 0.0 }),
        }
    }

    fn constant_terms(terms: &[(f64, Nonlinearity)]) -> Vec<Term> {
        terms
            .iter()
            .map(|&(c, nonlinearity)| Term {
                coefficient: Coefficient::Constant(c),
                nonlinearity,
            })
            .collect()
    }

    /// `b(s) = −λs`; energy-increasing for `λ > 0`.
    pub fn linear_damping(lambda: f64) -> Self {
        Self {
            id: format!("linear(-{lambda}s)"),
            terms: Self::constant_terms(&[(-lambda, Nonlinearity::Power(1))]),
            growth: Some(NemyckiiGrowth { c1: 0.0, c2: lambda.abs(), r: 2.0 }),
            sign: Some(SignCondition { c1: lambda.max(0.0), c2: 0.0 }),
        }
    }

    /// `b(s) = sin(s)`: `|b| ≤ 1`, `s sin s ≥ −s²`.
    pub fn sine() -> Self {
        Self {
            id: "sin(s)".into(),
            terms: Self::constant_terms(&[(1.0, Nonlinearity::Sin)]),
            growth: Some(NemyckiiGrowth { c1: 1.0, c2: 0.0, r: 1.0 }),
            sign: Some(SignCondition { c1: 1.0, c2: 0.0 }),
        }
    }

    /// `b(s) = −s + sin(s)`: `|b| ≤ 2(1+|s|)`, `b·s ≥ −2s²`.
    pub fn damped_sine() -> Self {
        Self {
            id: "-s+sin(s)".into(),
            terms: Self::constant_terms(&[(-1.0, Nonlinearity::Power(1)), (1.0, Nonlinearity::Sin)]),
            growth: Some(NemyckiiGrowth { c1: 0.0, c2: 2.0, r: 2.0 }),
            sign: Some(SignCondition { c1: 2.0, c2: 0.0 }),
        }
    }

    /// `b(s) = −λs + μ s|s|^{r−2}`, `λ ≥ 0`, `r ≥ 1`.
    pub fn damped_power(lambda: f64, mu: f64, r: f64) -> Result<Self> {
        if lambda < 0.0 || r < 1.0 {
            return Err(Error::InvalidInput(format!(
                "damped_power needs lambda >= 0 and r >= 1 (got {lambda}, {r})"
            )));
        }
        // |λs| + |μ||s|^{r−1} ≤ (λ + |μ|)(1 + |s|)^{max(r,2)−1}
        let growth = NemyckiiGrowth { c1: 0.0, c2: lambda + mu.abs(), r: r.max(2.0) };
        let sign = if mu >= 0.0 {
            SignCondition { c1: lambda, c2: 0.0 }
        } else if r <= 2.0 {
            // |s|^r ≤ s² + 1 for r ∈ [1, 2]
            SignCondition { c1: lambda + mu.abs(), c2: mu.abs() }
        } else {
            return Err(Error::InvalidInput(
                "damped_power with mu < 0 and r > 2 has no sign bound".into(),
            ));
        };
        let mut terms = Self::constant_terms(&[(-lambda, Nonlinearity::Power(1))]);
        if mu != 0.0 {
            terms.push(Term {
                coefficient: Coefficient::Constant(mu),
                nonlinearity: Nonlinearity::SignedPower(r - 1.0),
            });
        }
        Ok(Self {
            id: format!("-{lambda}s+{mu}s|s|^{}", r - 2.0),
            terms,
            growth: Some(growth),
            sign: Some(sign),
        })
    }

    /// Build from terms without declared constants.
    pub fn custom(id: impl Into<String>, terms: Vec<Term>) -> Self {
        Self {
            id: id.into(),
            terms,
            growth: None,
            sign: None,
        }
    }

    pub fn describe(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|t| format!("{:?}*{}", t.coefficient, t.nonlinearity.describe()))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn eval(&self, t: f64, x: &[f64], s: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coefficient.eval(t, x) * term.nonlinearity.eval(s))
            .sum()
    }

    pub fn derivative(&self, t: f64, x: &[f64], s: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coefficient.eval(t, x) * term.nonlinearity.derivative(s))
            .sum()
    }

    /// Check the declared growth exponent: `r ∈ [1, max{2, p(d+2)/d})`.
    pub fn validate(&self, p: f64, d: usize) -> Result<()> {
        if let Some(g) = self.growth {
            let upper = 2f64.max(p * (d as f64 + 2.0) / d as f64);
            if !(g.r >= 1.0 && g.r < upper) {
                return Err(Error::InvalidInput(format!(
                    "growth exponent r = {} outside [1, {upper}) for p = {p}, d = {d}",
                    g.r
                )));
            }
            if g.c1 < 0.0 || g.c2 < 0.0 {
                return Err(Error::InvalidInput("growth constants must be >= 0".into()));
            }
        }
        if let Some(s) = self.sign {
            if s.c1 < 0.0 || s.c2 < 0.0 {
                return Err(Error::InvalidInput("sign constants must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Factor `κ` in `(∫(1+|v|)^ρ)^{1/2} ≤ κ(|Ω|^{1/2} + ‖v‖_ρ^{ρ/2})`; one for
/// `ρ ≤ 2` (subadditivity of `a ↦ a^{ρ/2}`), `2^{ρ/2−1}` above (convexity).
pub fn interpolation_factor(rho: f64) -> f64 {
    2f64.powf(rho / 2.0 - 1.0).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nemyckii {
    spec: PerturbationSpec,
}

impl Nemyckii {
    pub fn new(spec: PerturbationSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &PerturbationSpec {
        &self.spec
    }
}

impl OperatorFamily for Nemyckii {
    fn name(&self) -> String {
        format!("nemyckii[{}]", self.spec.id)
    }

    fn field_kind(&self) -> FieldKind {
        FieldKind::Scalar
    }

    fn flux(&self, t: f64, field: &FieldSamples, basis: &GalerkinBasis) -> Result<Flux> {
        let mut value = Vec::with_capacity(field.values.len());
        for (q, &s) in field.values.iter().enumerate() {
            let x = basis.node(q);
            let b = self.spec.eval(t, x, s);
            if !b.is_finite() {
                return Err(Error::Evaluation {
                    t,
                    node: q,
                    x: x.to_vec(),
                    msg: format!("b({}) = {b} for s = {s}", self.spec.id),
                });
            }
            value.push(b);
        }
        Ok(Flux {
            value: Some(value),
            grad: None,
        })
    }

    /// From `(5.4)`-type estimates: `‖B(t)v‖_* ≤ ‖F_t v‖_{L²}
    /// ≤ ‖C₁‖_{L²} + C₂κ(|Ω|^{1/2} + ‖v‖_ρ^{ρ/2})` and
    /// `‖v‖_ρ ≤ E_ρ ‖v‖_H` with `E_ρ = |Ω|^{1/ρ−1/2}` for `ρ ≤ 2`, else
    /// `|Ω|^{1/ρ} S_n` on the span. Sign condition gives
    /// `⟨B(t)v, v⟩ ≥ −c₁‖v‖_H² − c₂|Ω|`.
    fn constants(&self, basis: &GalerkinBasis) -> DeclaredConstants {
        let measure = basis.domain().measure();
        let growth = self.spec.growth.map(|g| {
            let rho = g.rho();
            let kappa = interpolation_factor(rho);
            let embed = if rho <= 2.0 {
                measure.powf(1.0 / rho - 0.5)
            } else {
                measure.powf(1.0 / rho) * basis.sup_constant()
            };
            GrowthConstants {
                envelope: Envelope {
                    terms: vec![(g.c2 * kappa * embed.powf(rho / 2.0), rho / 2.0)],
                },
                alpha: 1.0,
                beta: 0.0,
                gamma: g.c1 * measure.sqrt() + g.c2 * kappa * measure.sqrt(),
            }
        });
        let coercivity = self.spec.sign.map(|s| CoercivityConstants {
            c0: 0.0,
            c1: s.c1,
            c2: s.c2 * measure,
        });
        DeclaredConstants { growth, coercivity }
    }

    fn jacobian(&self, t: f64, coeffs: &[f64], basis: &GalerkinBasis) -> Option<Result<Vec<f64>>> {
        Some((|| {
            self.check_basis(basis)?;
            let field = basis.evaluate(coeffs)?;
            let n = basis.n();
            let mut jac = vec![0.0; n * n];
            for (q, &w) in basis.weights().iter().enumerate() {
                let db = w * self.spec.derivative(t, basis.node(q), field.values[q]);
                if !db.is_finite() {
                    return Err(Error::Evaluation {
                        t,
                        node: q,
                        x: basis.node(q).to_vec(),
                        msg: format!("db/ds not finite for {}", self.spec.id),
                    });
                }
                for i in 0..n {
                    let vi = basis.values_of(i)[q] * db;
                    for j in i..n {
                        jac[i * n + j] += vi * basis.values_of(j)[q];
                    }
                }
            }
            for i in 0..n {
                for j in 0..i {
                    jac[i * n + j] = jac[j * n + i];
                }
            }
            Ok(jac)
        })())
    }
}
