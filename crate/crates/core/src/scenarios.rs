//! Preset problems, their flat-file configuration, and the convergence-study
//! driver.
//!
//! | id | domain | operator |
//! |----|--------|----------|
//! | `heat_1d` | `(0,1)` | `A₀`, `p = 2` |
//! | `p_laplace_1d` | `(0,1)` | `A₀` |
//! | `p_laplace_2d` | `(0,1)²` | `A₀` |
//! | `p_laplace_perturbed` | `(0,1)` | `A₀ + B(t)` |
//! | `p_nse_2d` | `(0,2π)²` periodic | `S + B` |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::apriori::{audit_trajectory, gronwall_bounds, time_l1, AprioriBounds, AuditReport};
use crate::config::FlatConfig;
use crate::error::{Error, Result};
use crate::forcing::{manufactured_forced, Forcing, TimeAmplitude};
use crate::function_space::{dot, BasisKind, Domain, FunctionValue, GalerkinBasis};
use crate::operators::{
    Convective, DeclaredConstants, Nemyckii, PLaplace, PerturbationSpec, SharedOperator,
    Stress, StressParams, SumOperator,
};
use crate::probes::{
    check_coercivity_c5, check_growth_c3, check_nemyckii_growth, check_sign_condition, interpolation_probe,
    monotonicity_probe, skew_probe, with_pool, ProbeKind, ProbeOptions, ProbeReport,
};
use crate::solver::{energy_report, solve, EnergyReport, Problem, Scheme, SolveConfig, SolveOutcome, Trajectory};

/// Relative tolerance of the a-priori audit.
pub const AUDIT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    Heat1d,
    PLaplace1d,
    PLaplace2d,
    PLaplacePerturbed,
    PNse2d,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::Heat1d,
        ScenarioId::PLaplace1d,
        ScenarioId::PLaplace2d,
        ScenarioId::PLaplacePerturbed,
        ScenarioId::PNse2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Heat1d => "heat_1d",
            ScenarioId::PLaplace1d => "p_laplace_1d",
            ScenarioId::PLaplace2d => "p_laplace_2d",
            ScenarioId::PLaplacePerturbed => "p_laplace_perturbed",
            ScenarioId::PNse2d => "p_nse_2d",
        }
    }

    pub fn is_fluid(self) -> bool {
        self == ScenarioId::PNse2d
    }

    pub fn spatial_dim(self) -> usize {
        match self {
            ScenarioId::PLaplace2d | ScenarioId::PNse2d => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scenario '{s}'")))
    }
}

/// Initial data `y₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    /// `amplitude · v_index` (one-based), given as samples.
    Mode { index: usize, amplitude: f64 },
    /// `amplitude · Π x_k(L_k − x_k)`, given as samples.
    Bubble { amplitude: f64 },
    /// Coefficients against the basis.
    Modes(Vec<f64>),
    /// The exact solution at `t = 0` of a manufactured problem.
    Exact,
}

impl InitialData {
    pub fn describe(&self) -> String {
        match self {
            InitialData::Zero => "zero".into(),
            InitialData::Mode { index, amplitude } => format!("mode:{index}:{amplitude}"),
            InitialData::Bubble { amplitude } => format!("bubble:{amplitude}"),
            InitialData::Modes(c) => format!(
                "modes:{}",
                c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
            InitialData::Exact => "exact".into(),
        }
    }
}

impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad number '{x}' in y0 '{s}'")))
        };
        match parts.as_slice() {
            ["zero"] => Ok(InitialData::Zero),
            ["exact"] => Ok(InitialData::Exact),
            ["bubble"] => Ok(InitialData::Bubble { amplitude: 1.0 }),
            ["bubble", a] => Ok(InitialData::Bubble { amplitude: num(a)? }),
            ["mode", i] | ["mode", i, _] => {
                let index = i
                    .parse::<usize>()
                    .ok()
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| Error::InvalidInput(format!("mode index '{i}' must be >= 1")))?;
                let amplitude = if parts.len() == 3 { num(parts[2])? } else { 1.0 };
                Ok(InitialData::Mode { index, amplitude })
            }
            ["modes", list] => Ok(InitialData::Modes(
                list.split(',').map(|x| num(x.trim())).collect::<Result<_>>()?,
            )),
            _ => Err(Error::InvalidInput(format!(
                "unknown y0 '{s}' (zero, exact, bubble[:a], mode:i[:a], modes:c1,c2,...)"
            ))),
        }
    }
}

/// Right-hand side `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Zero,
    Constant(f64),
    /// Manufactured forcing for `a(t) v_target` (one-based target).
    Manufactured { target: usize, amplitude: TimeAmplitude },
}

impl ForcingSpec {
    pub fn describe(&self) -> String {
        match self {
            ForcingSpec::Zero => "zero".into(),
            ForcingSpec::Constant(c) => format!("constant:{c}"),
            ForcingSpec::Manufactured { target, amplitude } => match amplitude {
                TimeAmplitude::Zero => format!("manufactured:{target}:zero"),
                TimeAmplitude::Constant(a) => format!("manufactured:{target}:const:{a}"),
                TimeAmplitude::Exp { a0, rate } => format!("manufactured:{target}:exp:{a0}:{rate}"),
            },
        }
    }
}

impl FromStr for ForcingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad number '{x}' in forcing '{s}'")))
        };
        match parts.as_slice() {
            ["zero"] => Ok(ForcingSpec::Zero),
            ["constant", c] => Ok(ForcingSpec::Constant(num(c)?)),
            ["manufactured", target, rest @ ..] => {
                let target = target
                    .parse::<usize>()
                    .ok()
                    .filter(|&t| t >= 1)
                    .ok_or_else(|| Error::InvalidInput(format!("target '{target}' must be >= 1")))?;
                let amplitude = match rest {
                    ["zero"] => TimeAmplitude::Zero,
                    ["const", a] => TimeAmplitude::Constant(num(a)?),
                    ["exp", a0, rate] => TimeAmplitude::Exp {
                        a0: num(a0)?,
                        rate: num(rate)?,
                    },
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "unknown amplitude in '{s}' (zero, const:a, exp:a0:rate)"
                        )))
                    }
                };
                Ok(ForcingSpec::Manufactured { target, amplitude })
            }
            _ => Err(Error::InvalidInput(format!(
                "unknown forcing '{s}' (zero, constant:c, manufactured:target:amplitude)"
            ))),
        }
    }
}

/// Scalar perturbation `b(t, x, s)` selected by name.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    Zero,
    /// `b = −λs`
    Linear(f64),
    Sine,
    /// `b = −s + sin s`
    DampedSine,
    DampedPower { lambda: f64, mu: f64, r: f64 },
    Custom(PerturbationSpec),
}

impl Perturbation {
    pub fn spec(&self) -> Result<PerturbationSpec> {
        Ok(match self {
            Perturbation::Zero => PerturbationSpec::zero(),
            Perturbation::Linear(l) => PerturbationSpec::linear_damping(*l),
            Perturbation::Sine => PerturbationSpec::sine(),
            Perturbation::DampedSine => PerturbationSpec::damped_sine(),
            Perturbation::DampedPower { lambda, mu, r } => PerturbationSpec::damped_power(*lambda, *mu, *r)?,
            Perturbation::Custom(spec) => spec.clone(),
        })
    }

    /// Config token; custom perturbations render as their id.
    pub fn token(&self) -> String {
        match self {
            Perturbation::Zero => "zero".into(),
            Perturbation::Linear(l) => format!("linear:{l}"),
            Perturbation::Sine => "sine".into(),
            Perturbation::DampedSine => "damped_sine".into(),
            Perturbation::DampedPower { lambda, mu, r } => format!("damped_power:{lambda}:{mu}:{r}"),
            Perturbation::Custom(spec) => spec.id.clone(),
        }
    }
}

/// Parse `none`, `zero`, `linear:λ`, `sine`, `damped_sine` or
/// `damped_power:λ:μ:r`.
pub fn parse_perturbation(s: &str) -> Result<Option<Perturbation>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |x: &str| {
        x.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad number '{x}' in perturbation '{s}'")))
    };
    let p = match parts.as_slice() {
        ["none"] => return Ok(None),
        ["zero"] => Perturbation::Zero,
        ["linear", l] => Perturbation::Linear(num(l)?),
        ["sine"] => Perturbation::Sine,
        ["damped_sine"] => Perturbation::DampedSine,
        ["damped_power", l, m, r] => Perturbation::DampedPower {
            lambda: num(l)?,
            mu: num(m)?,
            r: num(r)?,
        },
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown perturbation '{s}' (none, zero, linear:l, sine, damped_sine, damped_power:l:m:r)"
            )))
        }
    };
    p.spec()?;
    Ok(Some(p))
}

/// Overrides of the constants the operators declare.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DeclaredOverrides {
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub growth_alpha: Option<f64>,
    pub growth_beta: Option<f64>,
    pub growth_gamma: Option<f64>,
}

impl DeclaredOverrides {
    pub fn apply(&self, mut d: DeclaredConstants) -> DeclaredConstants {
        if let Some(c) = d.coercivity.as_mut() {
            c.c0 = self.c0.unwrap_or(c.c0);
            c.c1 = self.c1.unwrap_or(c.c1);
            c.c2 = self.c2.unwrap_or(c.c2);
        }
        if let Some(g) = d.growth.as_mut() {
            g.alpha = self.growth_alpha.unwrap_or(g.alpha);
            g.beta = self.growth_beta.unwrap_or(g.beta);
            g.gamma = self.growth_gamma.unwrap_or(g.gamma);
        }
        d
    }

    fn fields(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("c0", self.c0),
            ("c1", self.c1),
            ("c2", self.c2),
            ("growth_alpha", self.growth_alpha),
            ("growth_beta", self.growth_beta),
            ("growth_gamma", self.growth_gamma),
        ]
    }
}

/// Accepted sections and keys of a scenario file.
pub const SCHEMA: &[(&str, &[&str])] = &[
    ("scenario", &["id", "p", "delta", "T", "n", "seed", "elements"]),
    (
        "solver",
        &["dt", "scheme", "theta", "newton_tol", "newton_max_iter", "blow_up_factor"],
    ),
    ("data", &["y0", "forcing", "perturbation"]),
    (
        "declared",
        &["c0", "c1", "c2", "growth_alpha", "growth_beta", "growth_gamma"],
    ),
    ("probes", &["list", "samples"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: ScenarioId,
    pub p: f64,
    pub delta: f64,
    pub t_end: f64,
    pub n: usize,
    pub seed: u64,
    /// Quadrature elements per axis (grid points per axis on tori).
    pub elements: Option<usize>,
    pub solver: SolveConfig,
    pub y0: InitialData,
    pub forcing: ForcingSpec,
    pub perturbation: Option<Perturbation>,
    pub declared: DeclaredOverrides,
    pub probes: Vec<ProbeKind>,
    pub samples: usize,
}

impl ScenarioConfig {
    pub fn preset(id: ScenarioId) -> Self {
        let base = Self {
            id,
            p: 2.0,
            delta: 0.0,
            t_end: 0.1,
            n: 8,
            seed: 0,
            elements: None,
            solver: SolveConfig {
                t_end: 0.1,
                dt: 1e-3,
                ..SolveConfig::default()
            },
            y0: InitialData::Mode { index: 1, amplitude: 1.0 },
            forcing: ForcingSpec::Zero,
            perturbation: None,
            declared: DeclaredOverrides::default(),
            probes: vec![ProbeKind::Growth, ProbeKind::Coercivity, ProbeKind::Monotonicity],
            samples: 200,
        };
        match id {
            ScenarioId::Heat1d => base,
            ScenarioId::PLaplace1d => Self {
                p: 3.0,
                y0: InitialData::Bubble { amplitude: 4.0 },
                ..base
            },
            ScenarioId::PLaplace2d => Self {
                p: 3.0,
                n: 6,
                t_end: 0.05,
                solver: SolveConfig {
                    t_end: 0.05,
                    ..base.solver
                },
                y0: InitialData::Bubble { amplitude: 16.0 },
                ..base
            },
            ScenarioId::PLaplacePerturbed => Self {
                p: 1.5,
                perturbation: Some(Perturbation::DampedSine),
                probes: vec![
                    ProbeKind::Growth,
                    ProbeKind::Coercivity,
                    ProbeKind::NemyckiiGrowth,
                    ProbeKind::Sign,
                    ProbeKind::Monotonicity,
                ],
                ..base
            },
            ScenarioId::PNse2d => Self {
                p: 11.0 / 5.0,
                n: 12,
                y0: InitialData::Modes(vec![1.0, 0.0, 0.0, 0.0, 0.5]),
                probes: vec![
                    ProbeKind::Growth,
                    ProbeKind::Coercivity,
                    ProbeKind::Monotonicity,
                    ProbeKind::Skew,
                    ProbeKind::Interpolation,
                ],
                ..base
            },
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_flat(&FlatConfig::parse(text)?)
    }

    /// Start from the preset named by `[scenario] id` and apply every key.
    pub fn from_flat(cfg: &FlatConfig) -> Result<Self> {
        cfg.check_schema(SCHEMA)?;
        let id_entry = cfg.get("scenario", "id").ok_or(Error::Config {
            line: 0,
            msg: "missing `id` in section `[scenario]`".into(),
        })?;
        let id: ScenarioId = at_line(id_entry.line, id_entry.value.parse())?;
        let mut c = Self::preset(id);
        let parsed = |section: &str, key: &str| -> Result<Option<f64>> { cfg.parse_f64(section, key) };
        if let Some(v) = parsed("scenario", "p")? {
            c.p = v;
        }
        if let Some(v) = parsed("scenario", "delta")? {
            c.delta = v;
        }
        if let Some(v) = parsed("scenario", "T")? {
            c.t_end = v;
        }
        if let Some(v) = cfg.parse_usize("scenario", "n")? {
            c.n = v;
        }
        if let Some(v) = cfg.parse_u64("scenario", "seed")? {
            c.seed = v;
        }
        if let Some(v) = cfg.parse_usize("scenario", "elements")? {
            c.elements = Some(v);
        }
        if let Some(v) = parsed("solver", "dt")? {
            c.solver.dt = v;
        }
        let theta = parsed("solver", "theta")?;
        if let Some(e) = cfg.get("solver", "scheme") {
            c.solver.scheme = match e.value.as_str() {
                "implicit_euler" => Scheme::ImplicitEuler,
                "theta_method" => Scheme::Theta(theta.unwrap_or(0.5)),
                other => {
                    return Err(Error::Config {
                        line: e.line,
                        msg: format!("unknown scheme `{other}` (implicit_euler, theta_method)"),
                    })
                }
            };
        } else if let Some(th) = theta {
            c.solver.scheme = Scheme::Theta(th);
        }
        if let Some(v) = parsed("solver", "newton_tol")? {
            c.solver.newton_tol = v;
        }
        if let Some(v) = cfg.parse_usize("solver", "newton_max_iter")? {
            c.solver.newton_max_iter = v;
        }
        if let Some(v) = parsed("solver", "blow_up_factor")? {
            c.solver.blow_up_factor = v;
        }
        if let Some(e) = cfg.get("data", "y0") {
            c.y0 = at_line(e.line, e.value.parse())?;
        }
        if let Some(e) = cfg.get("data", "forcing") {
            c.forcing = at_line(e.line, e.value.parse())?;
        }
        if let Some(e) = cfg.get("data", "perturbation") {
            c.perturbation = at_line(e.line, parse_perturbation(&e.value))?;
        }
        c.declared = DeclaredOverrides {
            c0: parsed("declared", "c0")?,
            c1: parsed("declared", "c1")?,
            c2: parsed("declared", "c2")?,
            growth_alpha: parsed("declared", "growth_alpha")?,
            growth_beta: parsed("declared", "growth_beta")?,
            growth_gamma: parsed("declared", "growth_gamma")?,
        };
        if let Some(e) = cfg.get("probes", "list") {
            c.probes = if e.value.trim().is_empty() || e.value.trim() == "none" {
                Vec::new()
            } else {
                e.value
                    .split(',')
                    .map(|s| at_line(e.line, s.trim().parse()))
                    .collect::<Result<_>>()?
            };
        }
        if let Some(v) = cfg.parse_usize("probes", "samples")? {
            c.samples = v;
        }
        c.solver.t_end = c.t_end;
        Ok(c)
    }

    /// Full configuration, including defaults, in the flat format.
    pub fn to_flat(&self) -> FlatConfig {
        let mut f = FlatConfig::default();
        f.set("scenario", "id", self.id.name());
        f.set("scenario", "p", fmt_num(self.p));
        f.set("scenario", "delta", fmt_num(self.delta));
        f.set("scenario", "T", fmt_num(self.t_end));
        f.set("scenario", "n", self.n.to_string());
        f.set("scenario", "seed", self.seed.to_string());
        if let Some(e) = self.elements {
            f.set("scenario", "elements", e.to_string());
        }
        f.set("solver", "dt", fmt_num(self.solver.dt));
        f.set("solver", "scheme", self.solver.scheme.name());
        f.set("solver", "theta", fmt_num(self.solver.scheme.theta()));
        f.set("solver", "newton_tol", fmt_num(self.solver.newton_tol));
        f.set("solver", "newton_max_iter", self.solver.newton_max_iter.to_string());
        f.set("solver", "blow_up_factor", fmt_num(self.solver.blow_up_factor));
        f.set("data", "y0", self.y0.describe());
        f.set("data", "forcing", self.forcing.describe());
        f.set(
            "data",
            "perturbation",
            self.perturbation.as_ref().map_or("none".into(), Perturbation::token),
        );
        for (key, value) in self.declared.fields() {
            if let Some(v) = value {
                f.set("declared", key, fmt_num(v));
            }
        }
        let list: Vec<&str> = self.probes.iter().map(|k| k.name()).collect();
        f.set("probes", "list", if list.is_empty() { "none".into() } else { list.join(",") });
        f.set("probes", "samples", self.samples.to_string());
        f
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {} must lie in (1, inf)", self.p)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("T = {} must be positive", self.t_end)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidInput(format!("delta = {} must be >= 0", self.delta)));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        SolveConfig {
            t_end: self.t_end,
            ..self.solver
        }
        .validate()?;
        if self.id == ScenarioId::Heat1d && self.p != 2.0 {
            return Err(Error::InvalidInput("heat_1d is the p = 2 case".into()));
        }
        if self.id.is_fluid() {
            if self.perturbation.is_some() {
                return Err(Error::InvalidInput("p_nse_2d takes no scalar perturbation".into()));
            }
            if self.forcing != ForcingSpec::Zero {
                return Err(Error::InvalidInput("p_nse_2d supports zero forcing only".into()));
            }
            if matches!(self.y0, InitialData::Bubble { .. }) {
                return Err(Error::InvalidInput("bubble data is scalar; use modes or mode for p_nse_2d".into()));
            }
        } else if self.delta != 0.0 {
            return Err(Error::InvalidInput("delta applies to p_nse_2d only".into()));
        }
        if let Some(pert) = &self.perturbation {
            pert.spec()?.validate(self.p, self.id.spatial_dim())?;
        }
        if self.y0 == InitialData::Exact && !matches!(self.forcing, ForcingSpec::Manufactured { .. }) {
            return Err(Error::InvalidInput("y0 = exact needs a manufactured forcing".into()));
        }
        if self.samples == 0 && !self.probes.is_empty() {
            return Err(Error::InvalidInput("probe samples must be positive".into()));
        }
        Ok(())
    }

    /// Quadrature elements per axis (grid points per axis for the torus).
    pub fn resolved_elements(&self) -> usize {
        self.elements.unwrap_or(match self.id {
            ScenarioId::PLaplace2d => 8,
            ScenarioId::PNse2d => 24,
            _ => 16.max(2 * self.n),
        })
    }
}

/// Shortest round-trip form, in exponent notation for very small or large
/// magnitudes.
fn fmt_num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config {
        line,
        msg: match e {
            Error::InvalidInput(m) => m,
            other => other.to_string(),
        },
    })
}

/// A built problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub basis: GalerkinBasis,
    pub operator: SharedOperator,
    /// Monotone principal part (`A₀` or `S`).
    pub principal: SharedOperator,
    pub declared: DeclaredConstants,
    pub y0: FunctionValue,
    pub y0_norm: f64,
    pub forcing: Forcing,
    pub bounds: AprioriBounds,
    pub metadata: Vec<(String, String)>,
}

fn build_basis(config: &ScenarioConfig) -> Result<GalerkinBasis> {
    let e = config.resolved_elements();
    match config.id {
        ScenarioId::Heat1d | ScenarioId::PLaplace1d | ScenarioId::PLaplacePerturbed => {
            GalerkinBasis::dirichlet_sine(Domain::interval(1.0, e, 8)?, config.n)
        }
        ScenarioId::PLaplace2d => GalerkinBasis::tensor_sine_2d(Domain::square(1.0, 1.0, e, 6)?, config.n),
        ScenarioId::PNse2d => GalerkinBasis::divfree_fourier_2d(Domain::torus_2d(2.0 * PI, 2.0 * PI, e)?, config.n),
    }
}

fn bubble(x: &[f64], extent: &[f64]) -> f64 {
    x.iter().zip(extent).map(|(x, l)| x * (l - x)).product()
}

pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let basis = build_basis(config)?;
    let p = config.p;

    let (principal, operator): (SharedOperator, SharedOperator) = if config.id.is_fluid() {
        let stress: SharedOperator = Arc::new(Stress::new(StressParams::new(p, config.delta)?)?);
        let sum = SumOperator::new(vec![stress.clone(), Arc::new(Convective::new(p)?)])?;
        (stress, Arc::new(sum))
    } else {
        let a0: SharedOperator = Arc::new(PLaplace::new(p)?);
        match &config.perturbation {
            Some(pert) => {
                let b: SharedOperator = Arc::new(Nemyckii::new(pert.spec()?));
                (a0.clone(), Arc::new(SumOperator::new(vec![a0, b])?))
            }
            None => (a0.clone(), a0),
        }
    };
    let declared = config.declared.apply(operator.constants(&basis));

    let forcing = match &config.forcing {
        ForcingSpec::Zero => Forcing::Zero,
        ForcingSpec::Constant(c) => Forcing::Constant(*c),
        ForcingSpec::Manufactured { target, amplitude } => manufactured_forced(p, target - 1, *amplitude, &basis)?,
    };

    let extent = basis.domain().extent().to_vec();
    let c = basis.components();
    let (y0, y0_norm) = match &config.y0 {
        InitialData::Zero => (FunctionValue::Coefficients(vec![0.0; basis.n()]), 0.0),
        InitialData::Modes(coeffs) => {
            if coeffs.len() > basis.n() {
                return Err(Error::InvalidInput(format!(
                    "{} initial coefficients for a basis of size {}",
                    coeffs.len(),
                    basis.n()
                )));
            }
            let mut full = coeffs.clone();
            full.resize(basis.n(), 0.0);
            let norm = dot(&full, &full).sqrt();
            (FunctionValue::Coefficients(full), norm)
        }
        InitialData::Mode { index, amplitude } => {
            if *index > basis.n() {
                return Err(Error::InvalidInput(format!(
                    "initial mode {index} outside basis of size {}",
                    basis.n()
                )));
            }
            let samples: Vec<f64> = basis.values_of(index - 1).iter().map(|v| amplitude * v).collect();
            let norm = basis.l2_inner_samples(&samples, &samples)?.sqrt();
            (FunctionValue::Samples(samples), norm)
        }
        InitialData::Bubble { amplitude } => {
            if c != 1 {
                return Err(Error::IncompatibleBasis("bubble data needs a scalar basis".into()));
            }
            let samples = basis.sample(|x| vec![amplitude * bubble(x, &extent)])?;
            let norm = basis.l2_inner_samples(&samples, &samples)?.sqrt();
            (FunctionValue::Samples(samples), norm)
        }
        InitialData::Exact => match &forcing {
            Forcing::Manufactured(m) => {
                let coeffs = m.exact_coefficients(0.0, basis.n());
                let norm = dot(&coeffs, &coeffs).sqrt();
                (FunctionValue::Coefficients(coeffs), norm)
            }
            _ => return Err(Error::InvalidInput("y0 = exact needs a manufactured forcing".into())),
        },
    };

    let coercivity = declared.coercivity.ok_or_else(|| {
        Error::MissingConstants(format!("{} declares no coercivity constants", operator.name()))
    })?;
    let solve_cfg = SolveConfig {
        t_end: config.t_end,
        ..config.solver
    };
    let grid = solve_cfg.time_grid();
    let mut c1_series = Vec::with_capacity(grid.len());
    let mut c2_series = Vec::with_capacity(grid.len());
    for &t in &grid {
        let f = forcing.load(t, &basis)?;
        let half = 0.5 * dot(&f, &f).sqrt();
        c1_series.push(coercivity.c1 + half);
        c2_series.push(coercivity.c2 + half);
    }
    let bounds = gronwall_bounds(
        y0_norm,
        coercivity.c0,
        time_l1(&grid, &c1_series),
        time_l1(&grid, &c2_series),
        p,
    )?;

    let d = config.id.spatial_dim() as f64;
    let threshold = 2.0 * d / (d + 2.0);
    let regime = if p < threshold {
        format!("pre-evolution triple: p < 2d/(d+2) = {threshold}, V does not embed in H; intersection norm is the operative norm")
    } else {
        format!("evolution triple: p >= 2d/(d+2) = {threshold}")
    };
    let mut metadata = vec![
        ("basis".to_string(), basis.kind().name().to_string()),
        ("gradient_mode".into(), basis.gradient_mode().name().into()),
        ("operator".into(), operator.name()),
        ("forcing".into(), forcing.describe()),
        ("regime".into(), regime),
        (
            "gronwall_grouping".into(),
            "conservative: K0 = (|x0|^2 + 2|c2|_L1) exp(2|c1|_L1)".into(),
        ),
        (
            "forcing_shift".into(),
            "c1 and c2 raised by |f(t)|_H / 2 in the bounds".into(),
        ),
    ];
    if let Some(pert) = &config.perturbation {
        let spec = pert.spec()?;
        metadata.push(("perturbation".into(), format!("{} = {}", spec.id, spec.describe())));
    }
    if basis.kind() == BasisKind::DivFreeFourier2d {
        metadata.push(("max_divergence".into(), basis.max_divergence().to_string()));
    }

    Ok(Scenario {
        config: config.clone(),
        basis,
        operator,
        principal,
        declared,
        y0,
        y0_norm,
        forcing,
        bounds,
        metadata,
    })
}

/// Outcome of running a scenario through the solver.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub outcome: SolveOutcome,
    pub energy: EnergyReport,
    /// `1e−8 (1 + ‖y₀‖²)`
    pub slack_tolerance: f64,
    pub audit: AuditReport,
}

impl ScenarioRun {
    pub fn energy_ok(&self) -> bool {
        self.energy.min_slack >= -self.slack_tolerance
    }

    pub fn completed(&self) -> bool {
        self.outcome.completed()
    }

    pub fn blew_up(&self) -> bool {
        matches!(self.outcome.failure, Some(Error::BlowUp { .. }))
    }
}

impl Scenario {
    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            t_end: self.config.t_end,
            ..self.config.solver
        }
    }

    pub fn run(&self) -> Result<ScenarioRun> {
        let problem = Problem {
            basis: &self.basis,
            operator: self.operator.as_ref(),
            forcing: &self.forcing,
            apriori_m: Some(self.bounds.m),
        };
        let outcome = solve(&problem, &self.y0, &self.solve_config())?;
        let energy = energy_report(&outcome.ledger);
        let audit = audit_trajectory(&outcome.trajectory, &self.bounds, &self.basis, AUDIT_REL_TOL)?;
        Ok(ScenarioRun {
            slack_tolerance: 1e-8 * (1.0 + self.y0_norm * self.y0_norm),
            outcome,
            energy,
            audit,
        })
    }

    /// Exact coefficient solution when one is known: the heat equation from a
    /// single mode, or a manufactured problem started from its exact data.
    pub fn exact_coefficients(&self, t: f64) -> Option<Vec<f64>> {
        let n = self.basis.n();
        match (&self.config.id, &self.config.y0, &self.forcing, &self.config.perturbation) {
            (ScenarioId::Heat1d, InitialData::Mode { index, amplitude }, Forcing::Zero, None) => {
                let l = self.basis.domain().extent()[0];
                let k = *index as f64 * PI / l;
                let mut c = vec![0.0; n];
                c[index - 1] = amplitude * (-k * k * t).exp();
                Some(c)
            }
            (_, InitialData::Exact, Forcing::Manufactured(m), None) => Some(m.exact_coefficients(t, n)),
            _ => None,
        }
    }

    pub fn probe_applicable(&self, kind: ProbeKind) -> bool {
        match kind {
            ProbeKind::Growth | ProbeKind::Coercivity | ProbeKind::Monotonicity => true,
            ProbeKind::NemyckiiGrowth | ProbeKind::Sign => self.config.perturbation.is_some(),
            ProbeKind::Skew => self.basis.kind().is_vector(),
            ProbeKind::Interpolation => (11.0 / 5.0..3.0).contains(&self.config.p),
        }
    }

    pub fn probe_options(&self, jobs: usize) -> ProbeOptions {
        ProbeOptions {
            samples: self.config.samples,
            seed: self.config.seed,
            t_end: self.config.t_end,
            jobs,
            ..ProbeOptions::default()
        }
    }

    pub fn run_probe(&self, kind: ProbeKind, opts: &ProbeOptions) -> Result<ProbeReport> {
        let p = self.config.p;
        let op = self.operator.as_ref();
        match kind {
            ProbeKind::Growth => check_growth_c3(op, self.declared.growth.as_ref(), &self.basis, p, opts),
            ProbeKind::Coercivity => {
                check_coercivity_c5(op, self.declared.coercivity.as_ref(), &self.basis, p, opts)
            }
            ProbeKind::NemyckiiGrowth | ProbeKind::Sign => {
                let spec = self
                    .config
                    .perturbation
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput(format!("probe {} needs a perturbation", kind.name())))?
                    .spec()?;
                if kind == ProbeKind::Sign {
                    check_sign_condition(&spec, &self.basis, opts)
                } else {
                    check_nemyckii_growth(&spec, &self.basis, opts)
                }
            }
            ProbeKind::Monotonicity => monotonicity_probe(self.principal.as_ref(), &self.basis, opts),
            ProbeKind::Skew => skew_probe(&self.basis, opts),
            ProbeKind::Interpolation => interpolation_probe(p, opts),
        }
    }
}

/// `e^{−π²t} √2 sin(πx)` at the quadrature nodes of a unit-interval sine
/// basis.
pub fn manufactured_heat(t: f64, basis: &GalerkinBasis) -> Result<Vec<f64>> {
    if basis.kind() != BasisKind::DirichletSine {
        return Err(Error::IncompatibleBasis("manufactured_heat needs the 1D sine basis".into()));
    }
    let l = basis.domain().extent()[0];
    let k = PI / l;
    let decay = (-k * k * t).exp();
    basis.sample(|x| vec![decay * (2.0 / l).sqrt() * (k * x[0]).sin()])
}

/// `max_k ‖a_k − b_k‖` over a shared time grid, coefficient vectors
/// zero-padded to a common length.
pub fn linf_h_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} time points", a.len(), b.len())));
    }
    let n = a.dim().max(b.dim());
    let mut worst: f64 = 0.0;
    for (k, &t) in a.times().iter().enumerate() {
        if (t - b.times()[k]).abs() > 1e-12 * (1.0 + t.abs()) {
            return Err(Error::GridMismatch(format!("times differ at index {k}")));
        }
        let x = a.state_at(t, n).unwrap();
        let y = b.state_at(t, n).unwrap();
        let d: Vec<f64> = x.iter().zip(&y).map(|(x, y)| x - y).collect();
        worst = worst.max(dot(&d, &d).sqrt());
    }
    Ok(worst)
}

/// `‖traj_n − traj_{2n}‖_{L^∞(I,H)}` for each `n`, all runs sharing the
/// quadrature needed by the largest basis.
pub fn galerkin_stability(base: &ScenarioConfig, n_list: &[usize], jobs: usize) -> Result<Vec<f64>> {
    let n_top = 2 * n_list.iter().copied().max().unwrap_or(1);
    let elements = base.elements.unwrap_or_else(|| {
        ScenarioConfig {
            n: n_top,
            ..base.clone()
        }
        .resolved_elements()
    });
    let mut dims: Vec<usize> = n_list.iter().flat_map(|&n| [n, 2 * n]).collect();
    dims.sort_unstable();
    dims.dedup();
    let runs: Vec<Result<Trajectory>> = with_pool(jobs, || {
        dims.par_iter()
            .map(|&n| {
                let cfg = ScenarioConfig {
                    n,
                    elements: Some(elements),
                    ..base.clone()
                };
                let run = build_scenario(&cfg)?.run()?;
                match run.outcome.failure {
                    Some(e) => Err(e),
                    None => Ok(run.outcome.trajectory),
                }
            })
            .collect()
    })?;
    let mut trajs = Vec::with_capacity(runs.len());
    for r in runs {
        trajs.push(r?);
    }
    let find = |n: usize| &trajs[dims.iter().position(|&d| d == n).unwrap()];
    n_list.iter().map(|&n| linf_h_distance(find(n), find(2 * n))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum StudyReference {
    Exact,
    Finest { n: usize, dt: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyCell {
    pub n: usize,
    pub dt: f64,
    /// `L^∞(I,H)` error against the reference.
    pub linf_h: f64,
    /// `L^p(I,V)` error against the reference.
    pub lp_v: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub n_list: Vec<usize>,
    pub dt_list: Vec<f64>,
    /// Row-major in `(n, dt)`.
    pub cells: Vec<StudyCell>,
    pub reference: StudyReference,
    /// Least-squares slope of `log e` against `log Δt` per `n`, using the
    /// `L^∞(I,H)` error.
    pub temporal_orders: Vec<(usize, Option<f64>)>,
}

impl ConvergenceStudy {
    pub fn all_solved(&self) -> bool {
        self.cells.iter().all(|c| c.failure.is_none())
    }

    pub fn cell(&self, n: usize, dt: f64) -> Option<&StudyCell> {
        self.cells.iter().find(|c| c.n == n && c.dt == dt)
    }

    pub fn to_csv(&self) -> crate::output::CsvTable {
        let mut table = crate::output::CsvTable::new(["n", "dt", "linf_h_error", "lp_v_error", "status"]);
        for c in &self.cells {
            table.push(vec![
                c.n.to_string(),
                crate::output::fmt_g17(c.dt),
                crate::output::fmt_g17(c.linf_h),
                crate::output::fmt_g17(c.lp_v),
                c.failure
                    .as_deref()
                    .map_or("ok".into(), |m| format!("failed: {}", m.replace([',', '\n'], ";"))),
            ]);
        }
        table
    }
}

/// Slope of the least-squares line through `(log x, log y)`; `None` with
/// fewer than two usable points.
pub fn fitted_order(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn run_study(base: &ScenarioConfig, n_list: &[usize], dt_list: &[f64], jobs: usize) -> Result<ConvergenceStudy> {
    if n_list.is_empty() || dt_list.is_empty() {
        return Err(Error::InvalidInput("study lists must be nonempty".into()));
    }
    let mut n_list = n_list.to_vec();
    n_list.sort_unstable();
    n_list.dedup();
    let mut dt_list = dt_list.to_vec();
    dt_list.sort_by(|a, b| b.partial_cmp(a).unwrap());
    dt_list.dedup();
    if dt_list.iter().any(|dt| !(*dt > 0.0)) {
        return Err(Error::InvalidInput("dt values must be positive".into()));
    }
    let n_max = *n_list.last().unwrap();
    let dt_min = *dt_list.last().unwrap();
    let elements = base.elements.unwrap_or_else(|| {
        ScenarioConfig {
            n: n_max,
            ..base.clone()
        }
        .resolved_elements()
    });
    let cfg_for = |n: usize, dt: f64| ScenarioConfig {
        n,
        elements: Some(elements),
        solver: SolveConfig { dt, ..base.solver },
        ..base.clone()
    };
    // the measuring scenario provides the largest basis for V norms
    let measure = build_scenario(&cfg_for(n_max, dt_min))?;
    let exact = measure.exact_coefficients(0.0).is_some();

    let cells_in: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| dt_list.iter().map(move |&dt| (n, dt)))
        .collect();
    let runs: Vec<std::result::Result<Trajectory, String>> = with_pool(jobs, || {
        cells_in
            .par_iter()
            .map(|&(n, dt)| {
                let run = build_scenario(&cfg_for(n, dt))
                    .and_then(|s| s.run())
                    .map_err(|e| e.to_string())?;
                match run.outcome.failure {
                    Some(e) => Err(e.to_string()),
                    None => Ok(run.outcome.trajectory),
                }
            })
            .collect()
    })?;

    // a failed reference leaves every cell without an error metric
    let (reference_traj, reference_failure) = if exact {
        (None, None)
    } else {
        match &runs[cells_in.len() - 1] {
            Ok(t) => (Some(t.clone()), None),
            Err(e) => (None, Some(format!("reference cell failed: {e}"))),
        }
    };
    let p = base.p;
    let mut cells = Vec::with_capacity(cells_in.len());
    for (&(n, dt), run) in cells_in.iter().zip(&runs) {
        let cell = match run {
            Err(msg) if reference_failure.is_none() => StudyCell {
                n,
                dt,
                linf_h: f64::NAN,
                lp_v: f64::NAN,
                failure: Some(msg.clone()),
            },
            _ if reference_failure.is_some() => StudyCell {
                n,
                dt,
                linf_h: f64::NAN,
                lp_v: f64::NAN,
                failure: match run {
                    Err(msg) => Some(msg.clone()),
                    Ok(_) => reference_failure.clone(),
                },
            },
            Err(_) => unreachable!("handled above"),
            Ok(traj) => {
                let mut linf: f64 = 0.0;
                let mut lp = 0.0;
                let mut failure = None;
                for (k, &t) in traj.times().iter().enumerate() {
                    let reference = match &reference_traj {
                        None => measure.exact_coefficients(t),
                        Some(r) => r.state_at(t, n_max),
                    };
                    let Some(reference) = reference else {
                        failure = Some(format!("reference unavailable at t = {t}"));
                        break;
                    };
                    let mut state = traj.states()[k].clone();
                    state.resize(n_max, 0.0);
                    let d: Vec<f64> = state.iter().zip(&reference).map(|(a, b)| a - b).collect();
                    linf = linf.max(dot(&d, &d).sqrt());
                    if k > 0 {
                        lp += (t - traj.times()[k - 1]) * measure.basis.v_norm(&d, p)?.powf(p);
                    }
                }
                StudyCell {
                    n,
                    dt,
                    linf_h: if failure.is_some() { f64::NAN } else { linf },
                    lp_v: if failure.is_some() { f64::NAN } else { lp.powf(1.0 / p) },
                    failure,
                }
            }
        };
        cells.push(cell);
    }
    let temporal_orders = n_list
        .iter()
        .map(|&n| {
            let row: Vec<&StudyCell> = cells.iter().filter(|c| c.n == n).collect();
            let dts: Vec<f64> = row.iter().map(|c| c.dt).collect();
            let errs: Vec<f64> = row.iter().map(|c| c.linf_h).collect();
            (n, fitted_order(&dts, &errs))
        })
        .collect();
    Ok(ConvergenceStudy {
        n_list,
        dt_list,
        cells,
        reference: if exact {
            StudyReference::Exact
        } else {
            StudyReference::Finest { n: n_max, dt: dt_min }
        },
        temporal_orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build_and_validate() {
        for id in ScenarioId::ALL {
            let s = build_scenario(&ScenarioConfig::preset(id)).unwrap();
            assert!(s.bounds.m > 0.0, "{id}");
            assert_eq!(s.basis.n(), s.config.n);
        }
    }

    #[test]
    fn heat_preset_is_pure_laplace() {
        let s = build_scenario(&ScenarioConfig::preset(ScenarioId::Heat1d)).unwrap();
        assert_eq!(s.operator.name(), "p_laplace(p=2)");
        assert!(s.forcing.is_zero());
        assert!((s.y0_norm - 1.0).abs() < 1e-12);
        let b = s.bounds;
        assert!((b.k0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn manufactured_heat_examples() {
        let s = build_scenario(&ScenarioConfig::preset(ScenarioId::Heat1d)).unwrap();
        let u0 = manufactured_heat(0.0, &s.basis).unwrap();
        for (a, b) in u0.iter().zip(s.basis.values_of(0)) {
            assert!((a - b).abs() < 1e-14);
        }
        let c = s.basis.project_initial(&u0).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12);
        let t = 0.3;
        let ut = manufactured_heat(t, &s.basis).unwrap();
        let half = 0.5 * s.basis.l2_inner_samples(&ut, &ut).unwrap();
        assert!((half - 0.5 * (-2.0 * PI * PI * t).exp()).abs() < 1e-12);
        let late = manufactured_heat(10.0, &s.basis).unwrap();
        assert!(late.iter().all(|v| v.abs() < 1e-40));
    }

    #[test]
    fn config_round_trip_and_errors() {
        let text = "[scenario]\nid = p_laplace_perturbed\np = 1.5\n[data]\nperturbation = damped_power:1:0.5:1.5\n[probes]\nlist = c3, b2\n";
        let c = ScenarioConfig::from_text(text).unwrap();
        assert_eq!(c.probes, vec![ProbeKind::Growth, ProbeKind::NemyckiiGrowth]);
        let again = ScenarioConfig::from_flat(&c.to_flat()).unwrap();
        assert_eq!(again.probes, c.probes);
        assert_eq!(again.p, c.p);
        assert_eq!(again, c);

        let bad = ScenarioConfig::from_text("[scenario]\nid = heat_1d\nbogus = 1\n").unwrap_err();
        assert_eq!(bad, Error::Config { line: 3, msg: "unknown key `bogus` in section `[scenario]`".into() });
        let bad_y0 = ScenarioConfig::from_text("[scenario]\nid = heat_1d\n[data]\ny0 = wave\n").unwrap_err();
        assert!(matches!(bad_y0, Error::Config { line: 4, .. }));
        assert!(ScenarioConfig::from_text("[scenario]\np = 2\n").is_err());
    }

    #[test]
    fn incompatible_configs_rejected() {
        let mut c = ScenarioConfig::preset(ScenarioId::PNse2d);
        c.forcing = ForcingSpec::Constant(1.0);
        assert!(build_scenario(&c).is_err());
        let mut c = ScenarioConfig::preset(ScenarioId::PNse2d);
        c.n = 10_000;
        assert!(build_scenario(&c).is_err());
        let mut c = ScenarioConfig::preset(ScenarioId::Heat1d);
        c.p = 3.0;
        assert!(build_scenario(&c).is_err());
    }

    #[test]
    fn fitted_order_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((fitted_order(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert!(fitted_order(&[0.1], &[1.0]).is_none());
    }

    #[test]
    fn single_cell_study_has_zero_error() {
        let mut c = ScenarioConfig::preset(ScenarioId::PLaplace1d);
        c.t_end = 0.01;
        c.solver.t_end = 0.01;
        let study = run_study(&c, &[4], &[1e-3], 1).unwrap();
        assert_eq!(study.cells.len(), 1);
        assert_eq!(study.cells[0].linf_h, 0.0);
        assert_eq!(study.reference, StudyReference::Finest { n: 4, dt: 1e-3 });
    }
}
