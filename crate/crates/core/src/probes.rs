//! Sampled probes of the structural conditions on operator families, plus
//! the two oscillation counterexamples.
//!
//! A probe evaluates `(lhs, rhs)` of an inequality `lhs ≤ rhs` on random
//! coefficient vectors and reports the worst normalized margin
//! `(rhs − lhs) / scale`, where `scale = max{1, |lhs|, |rhs|}` unless the
//! probe fixes an absolute scale. Sample `i` draws its time and coefficients
//! from its own ChaCha8 stream seeded by `(seed, i)` with amplitude cycling
//! through `0.1, 1, 10`, so reports do not depend on the worker count.
//!
//! The dual norm in the growth probe is taken over the Galerkin span only,
//! which is a lower bound for the true dual norm: a failure is conclusive,
//! a pass is evidence.
//!
//! Pseudo-monotonicity itself quantifies over weakly convergent sequences
//! and is not probed. For the operators here it follows from monotonicity
//! of the principal part plus strong continuity of the lower-order part,
//! and monotonicity is probed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function_space::{dot, Domain, GalerkinBasis};
use crate::operators::{
    interpolation_factor, CoercivityConstants, Convective, GrowthConstants, NemyckiiGrowth, OperatorFamily,
    PerturbationSpec, SignCondition,
};
use crate::output::{fmt_g17, CsvTable};
use crate::quadrature::{composite_gauss_legendre, periodic_trapezoid};

pub const AMPLITUDES: [f64; 3] = [0.1, 1.0, 10.0];
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub samples: usize,
    pub seed: u64,
    /// Sample times are uniform on `[0, t_end]`.
    pub t_end: f64,
    /// Worker threads; `0` or `1` runs sequentially.
    pub jobs: usize,
    pub tolerance: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            t_end: 1.0,
            jobs: 1,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: usize,
    pub seed: u64,
    pub t: f64,
    pub coeffs: Vec<f64>,
}

pub fn sample_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn draw_sample(base_seed: u64, index: usize, dim: usize, t_end: f64) -> Sample {
    let seed = sample_seed(base_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitude = AMPLITUDES[index % AMPLITUDES.len()];
    let t = if t_end > 0.0 { rng.gen_range(0.0..=t_end) } else { 0.0 };
    let coeffs = (0..dim).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
    Sample { index, seed, t, coeffs }
}

/// Two sides of `lhs ≤ rhs` at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl Evaluation {
    pub fn relative(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            scale: 1f64.max(lhs.abs()).max(rhs.abs()),
        }
    }

    pub fn absolute(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, scale: 1.0 }
    }

    pub fn raw_margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn margin(&self) -> f64 {
        self.raw_margin() / self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub index: usize,
    pub seed: u64,
    pub t: f64,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub condition: String,
    pub samples: usize,
    /// Worst normalized margin.
    pub margin: f64,
    /// `rhs − lhs` at the witness.
    pub raw_margin: f64,
    pub witness: Option<Witness>,
    pub witness_norm: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Largest `lhs / rhs` over samples with `rhs > 0`: the factor by which
    /// the declared right-hand side would have to grow to cover every
    /// sample.
    pub implied_scale: Option<f64>,
    pub note: String,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:<24} {:>4}  samples={:<5} margin={:+.3e} (tol {:.0e})",
            self.condition,
            self.verdict.to_string().to_uppercase(),
            self.samples,
            self.margin,
            self.tolerance
        );
        if let Some(w) = &self.witness {
            s.push_str(&format!(
                "  worst at sample {} t={:.4} |coeffs|={:.4e}",
                w.index, w.t, self.witness_norm
            ));
        }
        if let Some(k) = self.implied_scale {
            s.push_str(&format!("  implied={k:.4}"));
        }
        if !self.note.is_empty() {
            s.push_str(&format!("  [{}]", self.note));
        }
        s
    }
}

pub fn reports_csv(reports: &[ProbeReport]) -> CsvTable {
    let mut table = CsvTable::new([
        "condition",
        "n_samples",
        "margin",
        "raw_margin",
        "witness_norm",
        "verdict",
        "tolerance",
        "witness_index",
        "witness_seed",
        "witness_t",
    ]);
    for r in reports {
        let (index, seed, t) = match &r.witness {
            Some(w) => (w.index.to_string(), w.seed.to_string(), fmt_g17(w.t)),
            None => (String::new(), String::new(), String::new()),
        };
        table.push(vec![
            r.condition.clone(),
            r.samples.to_string(),
            fmt_g17(r.margin),
            fmt_g17(r.raw_margin),
            fmt_g17(r.witness_norm),
            r.verdict.to_string(),
            fmt_g17(r.tolerance),
            index,
            seed,
            t,
        ]);
    }
    table
}

/// An inequality that can be evaluated at a sample.
pub trait Probe: Sync {
    fn condition(&self) -> String;

    /// Length of the sampled coefficient vector.
    fn dim(&self) -> usize;

    fn evaluate(&self, sample: &Sample) -> Result<Evaluation>;

    fn tolerance(&self, opts: &ProbeOptions) -> f64 {
        opts.tolerance
    }

    fn note(&self) -> String {
        String::new()
    }
}

pub(crate) fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn run_probe(probe: &dyn Probe, opts: &ProbeOptions) -> Result<ProbeReport> {
    if opts.samples == 0 {
        return Err(Error::InvalidInput("probe needs at least one sample".into()));
    }
    let dim = probe.dim();
    let samples: Vec<Sample> = (0..opts.samples)
        .map(|i| draw_sample(opts.seed, i, dim, opts.t_end))
        .collect();
    let evals: Vec<Result<Evaluation>> = if opts.jobs <= 1 {
        samples.iter().map(|s| probe.evaluate(s)).collect()
    } else {
        with_pool(opts.jobs, || samples.par_iter().map(|s| probe.evaluate(s)).collect())?
    };
    let mut worst: Option<(usize, Evaluation)> = None;
    let mut implied: Option<f64> = None;
    for (i, e) in evals.into_iter().enumerate() {
        let e = e?;
        if e.rhs > 0.0 {
            let r = e.lhs / e.rhs;
            implied = Some(implied.map_or(r, |m: f64| m.max(r)));
        }
        let m = e.margin();
        if m.is_nan() {
            return Err(Error::Degenerate(format!(
                "{} produced a NaN margin at sample {i}",
                probe.condition()
            )));
        }
        if worst.map_or(true, |(_, w)| m < w.margin()) {
            worst = Some((i, e));
        }
    }
    let (index, eval) = worst.expect("at least one sample");
    let s = &samples[index];
    let tolerance = probe.tolerance(opts);
    Ok(ProbeReport {
        condition: probe.condition(),
        samples: opts.samples,
        margin: eval.margin(),
        raw_margin: eval.raw_margin(),
        witness_norm: dot(&s.coeffs, &s.coeffs).sqrt(),
        witness: Some(Witness {
            index,
            seed: s.seed,
            t: s.t,
            coeffs: s.coeffs.clone(),
        }),
        tolerance,
        verdict: if eval.margin() >= -tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        implied_scale: implied,
        note: probe.note(),
    })
}

/// Normalized margin at a stored witness.
pub fn reevaluate(probe: &dyn Probe, witness: &Witness) -> Result<f64> {
    let sample = Sample {
        index: witness.index,
        seed: witness.seed,
        t: witness.t,
        coeffs: witness.coeffs.clone(),
    };
    Ok(probe.evaluate(&sample)?.margin())
}

/// `max_β g·β / ‖β‖_{V∩H}` over the span: the best of `g`, the state, the
/// coordinate axes and eight random directions, refined by pattern search.
pub fn discrete_dual_norm(g: &[f64], state: &[f64], basis: &GalerkinBasis, p: f64, seed: u64) -> Result<f64> {
    let n = g.len();
    if g.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let ratio = |b: &[f64]| -> Result<f64> {
        let norm = basis.intersection_norm(b, p)?;
        Ok(if norm > 0.0 { dot(g, b) / norm } else { f64::NEG_INFINITY })
    };
    let mut candidates: Vec<Vec<f64>> = vec![g.to_vec(), state.to_vec()];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = g[i].signum();
        candidates.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
    for _ in 0..8 {
        candidates.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let mut best = candidates[0].clone();
    let mut best_r = f64::NEG_INFINITY;
    for c in candidates {
        let r = ratio(&c)?;
        if r > best_r {
            best_r = r;
            best = c;
        }
    }
    let mut step = 0.5;
    for _ in 0..16 {
        let scale = dot(&best, &best).sqrt();
        let mut improved = false;
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut trial = best.clone();
                trial[i] += sign * step * scale;
                let r = ratio(&trial)?;
                if r > best_r {
                    best_r = r;
                    best = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-3 {
                break;
            }
        }
    }
    Ok(best_r.max(0.0))
}

/// `‖A(t)v‖_* ≤ 𝓑(‖v‖_H)(α + β‖v‖_V^{p−1}) + γ`.
pub struct GrowthProbe<'a> {
    pub operator: &'a dyn OperatorFamily,
    pub basis: &'a GalerkinBasis,
    pub constants: GrowthConstants,
    pub p: f64,
}

impl Probe for GrowthProbe<'_> {
    fn condition(&self) -> String {
        "C3_growth".into()
    }

    fn dim(&self) -> usize {
        self.basis.n()
    }

    fn evaluate(&self, s: &Sample) -> Result<Evaluation> {
        let g = self.operator.load(s.t, &s.coeffs, self.basis)?;
        let lhs = discrete_dual_norm(&g, &s.coeffs, self.basis, self.p, s.seed)?;
        let h = self.basis.h_norm(&s.coeffs)?;
        let v = self.basis.v_norm(&s.coeffs, self.p)?;
        Ok(Evaluation::relative(lhs, self.constants.rhs(h, v, self.p)))
    }

    fn note(&self) -> String {
        "dual norm over the Galerkin span (lower bound)".into()
    }
}

/// `⟨A(t)v, v⟩ ≥ c₀‖v‖_V^p − c₁‖v‖_H² − c₂`.
pub struct CoercivityProbe<'a> {
    pub operator: &'a dyn OperatorFamily,
    pub basis: &'a GalerkinBasis,
    pub constants: CoercivityConstants,
    pub p: f64,
}

impl Probe for CoercivityProbe<'_> {
    fn condition(&self) -> String {
        "C5_coercivity".into()
    }

    fn dim(&self) -> usize {
        self.basis.n()
    }

    fn evaluate(&self, s: &Sample) -> Result<Evaluation> {
        let pairing = self.operator.pairing(s.t, &s.coeffs, &s.coeffs, self.basis)?;
        let h = self.basis.h_norm(&s.coeffs)?;
        let v = self.basis.v_norm(&s.coeffs, self.p)?;
        Ok(Evaluation::relative(self.constants.lower_bound(h, v, self.p), pairing))
    }
}

/// `‖b(t,·,v)‖_{L²} ≤ C₁|Ω|^{1/2} + C₂κ(|Ω|^{1/2} + ‖v‖_ρ^{ρ/2})`.
pub struct NemyckiiGrowthProbe<'a> {
    pub spec: &'a PerturbationSpec,
    pub basis: &'a GalerkinBasis,
    pub growth: NemyckiiGrowth,
}

impl Probe for NemyckiiGrowthProbe<'_> {
    fn condition(&self) -> String {
        "B2_nemyckii_growth".into()
    }

    fn dim(&self) -> usize {
        self.basis.n()
    }

    fn evaluate(&self, s: &Sample) -> Result<Evaluation> {
        let field = self.basis.evaluate(&s.coeffs)?;
        let b = nodal_b(self.spec, self.basis, s.t, &field.values)?;
        let lhs = self.basis.lq_norm_samples(&b, 2.0)?;
        let g = self.growth;
        let rho = g.rho();
        let root = self.basis.domain().measure().sqrt();
        let v_rho = self.basis.lq_norm_samples(&field.values, rho)?;
        let rhs = g.c1 * root + g.c2 * interpolation_factor(rho) * (root + v_rho.powf(rho / 2.0));
        Ok(Evaluation::relative(lhs, rhs))
    }
}

/// Pointwise `b(t,x,s)·s ≥ −c₁s² − c₂` at the quadrature nodes.
pub struct SignProbe<'a> {
    pub spec: &'a PerturbationSpec,
    pub basis: &'a GalerkinBasis,
    pub sign: SignCondition,
}

impl Probe for SignProbe<'_> {
    fn condition(&self) -> String {
        "B3_sign".into()
    }

    fn dim(&self) -> usize {
        self.basis.n()
    }

    fn evaluate(&self, s: &Sample) -> Result<Evaluation> {
        let field = self.basis.evaluate(&s.coeffs)?;
        let b = nodal_b(self.spec, self.basis, s.t, &field.values)?;
        let mut worst: Option<Evaluation> = None;
        for (&bq, &v) in b.iter().zip(&field.values) {
            let e = Evaluation::relative(-self.sign.c1 * v * v - self.sign.c2, bq * v);
            if worst.map_or(true, |w| e.margin() < w.margin()) {
                worst = Some(e);
            }
        }
        Ok(worst.unwrap_or(Evaluation::absolute(0.0, 0.0)))
    }
}

fn nodal_b(spec: &PerturbationSpec, basis: &GalerkinBasis, t: f64, values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(q, &v)| {
            let x = basis.node(q);
            let b = spec.eval(t, x, v);
            if b.is_finite() {
                Ok(b)
            } else {
                Err(Error::Evaluation {
                    t,
                    node: q,
                    x: x.to_vec(),
                    msg: format!("b({}) = {b} for s = {v}", spec.id),
                })
            }
        })
        .collect()
}

/// `⟨A(t)u − A(t)w, u − w⟩ ≥ 0` on pairs `(u, w)` packed as one sample.
pub struct MonotonicityProbe<'a> {
    pub operator: &'a dyn OperatorFamily,
    pub basis: &'a GalerkinBasis,
    pub tolerance: f64,
}

impl Probe for MonotonicityProbe<'_> {
    fn condition(&self) -> String {
        "monotonicity".into()
    }

    fn dim(&self) -> usize {
        2 * self.basis.n()
    }

    fn evaluate(&self, s: &Sample) -> Result<Evaluation> {
        let (u, w) = s.coeffs.split_at(self.basis.n());
        let d: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - b).collect();
        let au = self.operator.pairing(s.t, u, &d, self.basis)?;
        let aw = self.operator.pairing(s.t, w, &d, self.basis)?;
        Ok(Evaluation {
            lhs: 0.0,
            rhs: au - aw,
            scale: 1f64.max(au.abs()).max(aw.abs()),
        })
    }

    fn tolerance(&self, _opts: &ProbeOptions) -> f64 {
        self.tolerance
    }
}

/// `|⟨Bu, u⟩| = 0` for the convective term on a divergence-free span,
/// measured absolutely.
pub struct SkewProbe<'a> {
    pub basis: &'a GalerkinBasis,
    pub tolerance: f64,
}

impl Probe for SkewProbe<'_> {
    fn condition(&self) -> String {
        "skew_convective".into()
    }

    fn dim(&self) -> usize {
        self.basis.n()
    }

    fn evaluate(&self, s: &Sample) -> Result<Evaluation> {
        let b = Convective::new(2.0)?;
        let value = b.pairing(s.t, &s.coeffs, &s.coeffs, self.basis)?;
        Ok(Evaluation::absolute(value.abs(), 0.0))
    }

    fn tolerance(&self, _opts: &ProbeOptions) -> f64 {
        self.tolerance
    }
}

pub fn check_growth_c3(
    operator: &dyn OperatorFamily,
    constants: Option<&GrowthConstants>,
    basis: &GalerkinBasis,
    p: f64,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let constants = constants.ok_or_else(|| {
        Error::MissingConstants(format!("{} declares no growth constants", operator.name()))
    })?;
    operator.check_basis(basis)?;
    run_probe(
        &GrowthProbe {
            operator,
            basis,
            constants: constants.clone(),
            p,
        },
        opts,
    )
}

pub fn check_coercivity_c5(
    operator: &dyn OperatorFamily,
    constants: Option<&CoercivityConstants>,
    basis: &GalerkinBasis,
    p: f64,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let constants = *constants.ok_or_else(|| {
        Error::MissingConstants(format!("{} declares no coercivity constants", operator.name()))
    })?;
    operator.check_basis(basis)?;
    run_probe(
        &CoercivityProbe {
            operator,
            basis,
            constants,
            p,
        },
        opts,
    )
}

pub fn check_nemyckii_growth(
    spec: &PerturbationSpec,
    basis: &GalerkinBasis,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let growth = spec
        .growth
        .ok_or_else(|| Error::MissingConstants(format!("perturbation {} declares no growth", spec.id)))?;
    if !(growth.r >= 1.0 && growth.r.is_finite()) {
        return Err(Error::InvalidInput(format!("growth exponent r = {} must be >= 1", growth.r)));
    }
    if growth.c1 < 0.0 || growth.c2 < 0.0 {
        return Err(Error::InvalidInput("growth constants must be >= 0".into()));
    }
    if basis.components() != 1 {
        return Err(Error::IncompatibleBasis("perturbations act on scalar bases".into()));
    }
    run_probe(&NemyckiiGrowthProbe { spec, basis, growth }, opts)
}

pub fn check_sign_condition(
    spec: &PerturbationSpec,
    basis: &GalerkinBasis,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let sign = spec
        .sign
        .ok_or_else(|| Error::MissingConstants(format!("perturbation {} declares no sign condition", spec.id)))?;
    if basis.components() != 1 {
        return Err(Error::IncompatibleBasis("perturbations act on scalar bases".into()));
    }
    run_probe(&SignProbe { spec, basis, sign }, opts)
}

pub fn monotonicity_probe(
    operator: &dyn OperatorFamily,
    basis: &GalerkinBasis,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    operator.check_basis(basis)?;
    run_probe(
        &MonotonicityProbe {
            operator,
            basis,
            tolerance: 1e-10,
        },
        opts,
    )
}

pub fn skew_probe(basis: &GalerkinBasis, opts: &ProbeOptions) -> Result<ProbeReport> {
    if !basis.kind().is_vector() {
        return Err(Error::IncompatibleBasis("skewness needs a divergence-free basis".into()));
    }
    run_probe(&SkewProbe { basis, tolerance: 1e-10 }, opts)
}

/// Vector trigonometric fields on the 3D torus with wavevectors in
/// `{−1, 0, 1}³`, tested against
/// `‖v‖²_ρ ≤ ‖v‖_2^{4/5} ‖v‖_{p*}^{6/5}`, `ρ = 5p/3`, `p* = 3p/(3−p)`.
pub struct InterpolationProbe {
    p: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    wavevectors: Vec<[f64; 3]>,
}

impl InterpolationProbe {
    pub const GRID: usize = 8;

    pub fn new(p: f64) -> Result<Self> {
        if !(11.0 / 5.0 - 1e-12..3.0).contains(&p) {
            return Err(Error::InvalidInput(format!("p = {p} outside [11/5, 3)")));
        }
        let domain = Domain::torus_3d_probe(2.0 * PI, Self::GRID)?;
        let (nodes, weights) = domain.quadrature_grid();
        let mut wavevectors = Vec::with_capacity(27);
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    wavevectors.push([a as f64, b as f64, c as f64]);
                }
            }
        }
        Ok(Self {
            p,
            nodes,
            weights,
            wavevectors,
        })
    }

    pub fn exponents(&self) -> (f64, f64) {
        (5.0 * self.p / 3.0, 3.0 * self.p / (3.0 - self.p))
    }

    /// `|v(x_q)|` at every node; coefficients ordered
    /// `(wavevector, cos|sin, component)`.
    pub fn magnitudes(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        Ok(self
            .nodes
            .chunks_exact(3)
            .map(|x| {
                let mut v = [0.0; 3];
                for (k, kv) in self.wavevectors.iter().enumerate() {
                    let phase = kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2];
                    let (s, c) = phase.sin_cos();
                    for (comp, vc) in v.iter_mut().enumerate() {
                        *vc += coeffs[k * 6 + comp] * c + coeffs[k * 6 + 3 + comp] * s;
                    }
                }
                dot(&v, &v).sqrt()
            })
            .collect())
    }

    /// Discrete `L^q` norm, scaled by the largest magnitude so that large
    /// exponents near `p = 3` stay finite.
    pub fn lq(&self, magnitudes: &[f64], q: f64) -> f64 {
        let top = magnitudes.iter().fold(0.0f64, |m, &x| m.max(x));
        if top == 0.0 {
            return 0.0;
        }
        top * self
            .weights
            .iter()
            .zip(magnitudes)
            .map(|(w, m)| w * (m / top).powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    pub fn sides(&self, magnitudes: &[f64]) -> Evaluation {
        let (rho, p_star) = self.exponents();
        let lhs = self.lq(magnitudes, rho).powi(2);
        let rhs = self.lq(magnitudes, 2.0).powf(0.8) * self.lq(magnitudes, p_star).powf(1.2);
        Evaluation::relative(lhs, rhs)
    }
}

impl Probe for InterpolationProbe {
    fn condition(&self) -> String {
        format!("interpolation(p={})", self.p)
    }

    fn dim(&self) -> usize {
        self.wavevectors.len() * 6
    }

    fn evaluate(&self, s: &Sample) -> Result<Evaluation> {
        Ok(self.sides(&self.magnitudes(&s.coeffs)?))
    }
}

pub fn interpolation_probe(p: f64, opts: &ProbeOptions) -> Result<ProbeReport> {
    run_probe(&InterpolationProbe::new(p)?, opts)
}

/// `q_n = ∫₀^{2π} ⟨B(sin(nt)v), sin(nt)v − w⟩ dt` for `n = 1..n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comp2Report {
    pub q: Vec<f64>,
    /// `⟨Bv, w⟩`
    pub bvw: f64,
    /// `⟨Bv, v⟩`
    pub bvv: f64,
    /// `π|⟨Bv, w⟩|`
    pub target: f64,
    /// Sign of `q_n` for the largest `n`.
    pub observed_sign: f64,
    /// `|∫ sin³(nt) dt · ⟨Bv, v⟩|` per `n`.
    pub skew_part: Vec<f64>,
    /// Largest `||q_n| − target| / target` over `n ≥ 5`.
    pub tail_deviation: Option<f64>,
}

impl Comp2Report {
    pub fn skew_ok(&self) -> bool {
        self.skew_part.iter().all(|s| *s < 1e-10)
    }

    /// Plateau within one percent for `n ≥ 5` (vacuous below).
    pub fn plateau_ok(&self) -> bool {
        self.tail_deviation.map_or(true, |d| d < 0.01)
    }
}

/// `v = v₁ + v_j` for the first `j` whose interaction with `v₁` is
/// nonzero, and `w = v_i` maximizing `|⟨Bv, v_i⟩|`. Modes of equal
/// wavenumber do not interact, so `j` skips the first shell.
pub fn default_comp2_pair(basis: &GalerkinBasis) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = Convective::new(2.0)?;
    let n = basis.n();
    for j in 1..n {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v[j] = 1.0;
        let load = b.load(0.0, &v, basis)?;
        let (best, size) = load
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
        if size > 1e-8 {
            let mut w = vec![0.0; n];
            w[best] = 1.0;
            return Ok((v, w));
        }
    }
    Err(Error::Degenerate(format!("no interacting mode pair among the first {n} basis fields")))
}

/// `(q_n, |∫ sin³(nt) dt · ⟨Bv, v⟩|)` for `n = 1..n_max` by periodic
/// trapezoid quadrature in time, exact for the trigonometric integrand.
pub fn comp2_series(v: &[f64], w: &[f64], basis: &GalerkinBasis, n_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !basis.kind().is_vector() {
        return Err(Error::IncompatibleBasis("comp2 needs a divergence-free basis".into()));
    }
    basis.check_len(v)?;
    basis.check_len(w)?;
    let b = Convective::new(2.0)?;
    let bvv = b.pairing(0.0, v, v, basis)?;
    let rule = periodic_trapezoid(2.0 * PI, 64.max(8 * n_max));
    let mut q = Vec::with_capacity(n_max);
    let mut skew_part = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut total = 0.0;
        let mut sin3 = 0.0;
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let s = (n as f64 * t).sin();
            let x: Vec<f64> = v.iter().map(|c| s * c).collect();
            let test: Vec<f64> = x.iter().zip(w).map(|(a, b)| a - b).collect();
            total += wt * b.pairing(t, &x, &test, basis)?;
            sin3 += wt * s.powi(3);
        }
        q.push(total);
        skew_part.push((sin3 * bvv).abs());
    }
    Ok((q, skew_part))
}

pub fn comp2_demo(v: &[f64], w: &[f64], basis: &GalerkinBasis, n_max: usize) -> Result<Comp2Report> {
    if !basis.kind().is_vector() {
        return Err(Error::IncompatibleBasis("comp2 needs a divergence-free basis".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    basis.check_len(v)?;
    basis.check_len(w)?;
    let b = Convective::new(2.0)?;
    let bvw = b.pairing(0.0, v, w, basis)?;
    let bvv = b.pairing(0.0, v, v, basis)?;
    let scale = dot(v, v) * dot(w, w).sqrt();
    if bvw.abs() <= 1e-12 * scale.max(1.0) {
        return Err(Error::Degenerate(format!("<Bv,w> = {bvw:e} vanishes for the chosen pair")));
    }
    let (q, skew_part) = comp2_series(v, w, basis, n_max)?;
    let target = PI * bvw.abs();
    let tail_deviation = q
        .iter()
        .skip(4)
        .map(|qn| (qn.abs() - target).abs() / target)
        .reduce(f64::max);
    Ok(Comp2Report {
        observed_sign: q.last().map_or(0.0, |x| x.signum()),
        q,
        bvw,
        bvv,
        target,
        skew_part,
        tail_deviation,
    })
}

/// Smooth test functions on `[0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    One,
    Linear,
    Quadratic,
    Cosine,
    Gaussian,
}

impl TestFunction {
    pub const ALL: [TestFunction; 5] = [
        TestFunction::One,
        TestFunction::Linear,
        TestFunction::Quadratic,
        TestFunction::Cosine,
        TestFunction::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::One => "1",
            TestFunction::Linear => "t",
            TestFunction::Quadratic => "t2",
            TestFunction::Cosine => "cos",
            TestFunction::Gaussian => "gauss",
        }
    }

    pub fn eval(self, t: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Linear => t,
            TestFunction::Quadratic => t * t,
            TestFunction::Cosine => t.cos(),
            TestFunction::Gaussian => (-(t - PI).powi(2)).exp(),
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        match self {
            TestFunction::One => 0.0,
            TestFunction::Linear => 1.0,
            TestFunction::Quadratic => 2.0 * t,
            TestFunction::Cosine => -t.sin(),
            TestFunction::Gaussian => -2.0 * (t - PI) * (-(t - PI).powi(2)).exp(),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown test function '{s}' (expected one of 1, t, t2, cos, gauss)"
                ))
            })
    }
}

/// `s_n = ∫₀^{2π} sin(nt)φ(t) dt` against the integration-by-parts bound
/// `|s_n| ≤ C/n`, `C = |φ(0)| + |φ(2π)| + ‖φ′‖_{L¹}`, alongside
/// `∫ sin²(nt) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    pub phi: TestFunction,
    pub s: Vec<f64>,
    pub sin2: Vec<f64>,
    pub bound_c: f64,
    /// `max_n n|s_n|`
    pub fitted_c: f64,
}

impl OscillationReport {
    pub fn decay_ok(&self) -> bool {
        self.s
            .iter()
            .enumerate()
            .all(|(i, s)| s.abs() <= self.bound_c / (i + 1) as f64 + 1e-12)
    }

    pub fn no_strong_convergence(&self) -> bool {
        self.sin2.iter().all(|v| (v - PI).abs() < 1e-8)
    }
}

pub fn oscillation_demo(phi: TestFunction, n_max: usize) -> Result<OscillationReport> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let rule = composite_gauss_legendre(0.0, 2.0 * PI, 64.max(4 * n_max), 10);
    let derivative_l1 = rule.integrate(|t| phi.derivative(t).abs());
    let bound_c = phi.eval(0.0).abs() + phi.eval(2.0 * PI).abs() + derivative_l1;
    let mut s = Vec::with_capacity(n_max);
    let mut sin2 = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let nf = n as f64;
        s.push(rule.integrate(|t| (nf * t).sin() * phi.eval(t)));
        sin2.push(rule.integrate(|t| (nf * t).sin().powi(2)));
    }
    let fitted_c = s
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * v.abs())
        .fold(0.0, f64::max);
    Ok(OscillationReport {
        phi,
        s,
        sin2,
        bound_c,
        fitted_c,
    })
}

/// Probes selectable from scenario configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeKind {
    Growth,
    Coercivity,
    NemyckiiGrowth,
    Sign,
    Monotonicity,
    Skew,
    Interpolation,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 7] = [
        ProbeKind::Growth,
        ProbeKind::Coercivity,
        ProbeKind::NemyckiiGrowth,
        ProbeKind::Sign,
        ProbeKind::Monotonicity,
        ProbeKind::Skew,
        ProbeKind::Interpolation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Growth => "c3",
            ProbeKind::Coercivity => "c5",
            ProbeKind::NemyckiiGrowth => "b2",
            ProbeKind::Sign => "b3",
            ProbeKind::Monotonicity => "monotonicity",
            ProbeKind::Skew => "skew",
            ProbeKind::Interpolation => "interpolation",
        }
    }
}

impl FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProbeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown probe '{s}' (expected c3, c5, b2, b3, monotonicity, skew or interpolation)"
                ))
            })
    }
}
