//! Explicit a-priori bounds from semi-coercivity and Gronwall's inequality,
//! and the audit of solver trajectories against them.
//!
//! For `x` with `½‖x(t)‖_H² + ∫₀ᵗ⟨A(s)x, x⟩ ≤ ½‖x₀‖_H²` and
//! `⟨A(t)v, v⟩ ≥ c₀‖v‖_V^p − c₁(t)‖v‖_H² − c₂(t)`:
//!
//! ```text
//! ‖x‖²_{L^∞(H)} ≤ K₀ := (‖x₀‖² + 2‖c₂‖_{L¹}) exp(2‖c₁‖_{L¹})
//! c₀‖x‖^p_{L^p(V)} ≤ K₁ := ½‖x₀‖² + ‖c₂‖_{L¹} + K₀‖c₁‖_{L¹}
//! M := (K₁/c₀)^{1/p} + K₀^{1/2}
//! ```
//!
//! `K₀` groups the initial energy with the `c₂` term inside the
//! exponential; this dominates the ungrouped form `‖x₀‖² + 2‖c₂‖ e^{2‖c₁‖}`.

use crate::error::{Error, Result};
use crate::function_space::{bochner_norms, BochnerNorms, GalerkinBasis};
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriBounds {
    pub k0: f64,
    pub k1: f64,
    pub m: f64,
    pub x0_norm: f64,
    pub c0: f64,
    pub c1_l1: f64,
    pub c2_l1: f64,
    pub p: f64,
}

impl AprioriBounds {
    /// Bound on `‖x‖_{L^p(I,V)}`.
    pub fn lp_v_bound(&self) -> f64 {
        (self.k1 / self.c0).powf(1.0 / self.p)
    }

    /// Bound on `‖x‖_{L^∞(I,H)}`.
    pub fn linf_h_bound(&self) -> f64 {
        self.k0.sqrt()
    }
}

pub fn gronwall_bounds(x0_norm: f64, c0: f64, c1_l1: f64, c2_l1: f64, p: f64) -> Result<AprioriBounds> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "coercivity constant c0 = {c0} must be positive"
        )));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidInput(format!("p = {p} not in (1, inf)")));
    }
    if [x0_norm, c1_l1, c2_l1].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("norms must be finite and non-negative".into()));
    }
    let k0 = (x0_norm * x0_norm + 2.0 * c2_l1) * (2.0 * c1_l1).exp();
    let k1 = 0.5 * x0_norm * x0_norm + c2_l1 + k0 * c1_l1;
    let m = (k1 / c0).powf(1.0 / p) + k0.sqrt();
    Ok(AprioriBounds {
        k0,
        k1,
        m,
        x0_norm,
        c0,
        c1_l1,
        c2_l1,
        p,
    })
}

/// `Σ_{k≥1} (t_k − t_{k−1}) g(t_k)`: the right-endpoint rule matching the
/// implicit time grid.
pub fn time_l1(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.iter().skip(1))
        .map(|(w, v)| (w[1] - w[0]) * v.abs())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub norms: BochnerNorms,
    pub lp_v_bound: f64,
    pub linf_h_bound: f64,
    pub rel_tol: f64,
    pub lp_v_pass: bool,
    pub linf_h_pass: bool,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.lp_v_pass && self.linf_h_pass
    }
}

pub fn audit_trajectory(
    traj: &Trajectory,
    bounds: &AprioriBounds,
    basis: &GalerkinBasis,
    rel_tol: f64,
) -> Result<AuditReport> {
    let norms = bochner_norms(traj, basis, bounds.p)?;
    let lp_v_bound = bounds.lp_v_bound();
    let linf_h_bound = bounds.linf_h_bound();
    Ok(AuditReport {
        norms,
        lp_v_bound,
        linf_h_bound,
        rel_tol,
        lp_v_pass: norms.lp_v <= lp_v_bound * (1.0 + rel_tol),
        linf_h_pass: norms.linf_h <= linf_h_bound * (1.0 + rel_tol),
    })
}
