//! Discrete function spaces: domains, quadrature grids, H-orthonormal
//! Galerkin bases and the norms of `V`, `H` and their intersection.
//!
//! A coefficient vector represents an element simultaneously in `V` and in
//! `H`: every basis is orthonormal in `L²`, so the mass matrix is the
//! identity and the `H` inner product of two elements is the Euclidean dot
//! product of their coefficients.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::output::fmt_g17;
use crate::quadrature::{composite_gauss_legendre, periodic_trapezoid, Rule1d};
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Interval1d,
    Square2d,
    Torus2d,
    Torus3dProbe,
}

impl DomainKind {
    pub fn dim(self) -> usize {
        match self {
            DomainKind::Interval1d => 1,
            DomainKind::Square2d | DomainKind::Torus2d => 2,
            DomainKind::Torus3dProbe => 3,
        }
    }

    pub fn is_periodic(self) -> bool {
        matches!(self, DomainKind::Torus2d | DomainKind::Torus3dProbe)
    }
}

/// Box-shaped domain together with its quadrature resolution.
///
/// On bounded domains `grid_resolution` counts Gauss–Legendre elements per
/// axis and `quadrature_order` the points per element. On tori
/// `grid_resolution` is the number of trapezoid points per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    extent: Vec<f64>,
    quadrature_order: usize,
    grid_resolution: Vec<usize>,
}

impl Domain {
    pub fn new(
        kind: DomainKind,
        extent: Vec<f64>,
        quadrature_order: usize,
        grid_resolution: Vec<usize>,
    ) -> Result<Self> {
        let d = kind.dim();
        if extent.len() != d || grid_resolution.len() != d {
            return Err(Error::InvalidInput(format!(
                "{kind:?} needs {d} extents and resolutions"
            )));
        }
        if extent.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput("domain extent must be positive".into()));
        }
        if quadrature_order < 2 {
            return Err(Error::InvalidInput("quadrature_order must be >= 2".into()));
        }
        if grid_resolution.iter().any(|&r| r < 4) {
            return Err(Error::InvalidInput("grid_resolution must be >= 4".into()));
        }
        Ok(Self {
            kind,
            extent,
            quadrature_order,
            grid_resolution,
        })
    }

    pub fn interval(length: f64, elements: usize, order: usize) -> Result<Self> {
        Self::new(DomainKind::Interval1d, vec![length], order, vec![elements])
    }

    pub fn square(lx: f64, ly: f64, elements: usize, order: usize) -> Result<Self> {
        Self::new(DomainKind::Square2d, vec![lx, ly], order, vec![elements, elements])
    }

    pub fn torus_2d(lx: f64, ly: f64, points: usize) -> Result<Self> {
        Self::new(DomainKind::Torus2d, vec![lx, ly], 2, vec![points, points])
    }

    pub fn torus_3d_probe(length: f64, points: usize) -> Result<Self> {
        Self::new(
            DomainKind::Torus3dProbe,
            vec![length; 3],
            2,
            vec![points; 3],
        )
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    pub fn grid_resolution(&self) -> &[usize] {
        &self.grid_resolution
    }

    /// Lebesgue measure `|Ω|`.
    pub fn measure(&self) -> f64 {
        self.extent.iter().product()
    }

    fn axis_rule(&self, axis: usize) -> Rule1d {
        let l = self.extent[axis];
        let r = self.grid_resolution[axis];
        if self.kind.is_periodic() {
            periodic_trapezoid(l, r)
        } else {
            composite_gauss_legendre(0.0, l, r, self.quadrature_order)
        }
    }

    /// Tensor-product quadrature grid: flat node coordinates (`Q × d`) and
    /// weights. The last axis varies fastest.
    pub fn quadrature_grid(&self) -> (Vec<f64>, Vec<f64>) {
        let rules: Vec<Rule1d> = (0..self.dim()).map(|a| self.axis_rule(a)).collect();
        let total: usize = rules.iter().map(Rule1d::len).product();
        let d = self.dim();
        let mut coords = Vec::with_capacity(total * d);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let mut w = 1.0;
            for a in 0..d {
                coords.push(rules[a].nodes[idx[a]]);
                w *= rules[a].weights[idx[a]];
            }
            weights.push(w);
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < rules[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
        (coords, weights)
    }

    /// Number of one-dimensional points per axis resolved by the rule.
    fn points_per_axis(&self, axis: usize) -> usize {
        if self.kind.is_periodic() {
            self.grid_resolution[axis]
        } else {
            self.grid_resolution[axis] * self.quadrature_order
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    DirichletSine,
    TensorSine2d,
    DivFreeFourier2d,
}

impl BasisKind {
    pub fn is_vector(self) -> bool {
        matches!(self, BasisKind::DivFreeFourier2d)
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisKind::DirichletSine => "dirichlet_sine",
            BasisKind::TensorSine2d => "tensor_sine_2d",
            BasisKind::DivFreeFourier2d => "divfree_fourier_2d",
        }
    }
}

/// Which gradient enters the `V` norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Full gradient `∇v` (p-Laplace scenarios).
    Full,
    /// Symmetric gradient `Dv = (∇v + ∇vᵀ)/2` (fluid scenarios).
    Symmetric,
}

impl GradientMode {
    pub fn name(self) -> &'static str {
        match self {
            GradientMode::Full => "full_gradient",
            GradientMode::Symmetric => "symmetric_gradient",
        }
    }
}

/// Values and `V`-gradients of a field at the quadrature nodes.
///
/// Layout: `values[q * c + comp]`, `grads[(q * c + comp) * d + dir]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
}

/// An element of `V ∩ H`, either as Galerkin coefficients or as raw samples
/// on the quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionValue {
    Coefficients(Vec<f64>),
    Samples(Vec<f64>),
}

/// Exponent pair `(p, p')` with `1/p + 1/p' = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceNorms {
    p: f64,
    p_conjugate: f64,
}

impl SpaceNorms {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("exponent p = {p} not in (1, inf)")));
        }
        Ok(Self {
            p,
            p_conjugate: p / (p - 1.0),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_conjugate(&self) -> f64 {
        self.p_conjugate
    }
}

/// Discrete norms of a trajectory in `L^p(I, V)` and `L^∞(I, H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BochnerNorms {
    pub lp_v: f64,
    pub linf_h: f64,
}

/// Finite basis `{v_1, …, v_n}` with `L²`-orthonormal members, tabulated on
/// the domain's quadrature grid.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    domain: Domain,
    kind: BasisKind,
    components: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
    divergence: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl GalerkinBasis {
    /// `v_i(x) = √(2/L) sin(iπx/L)`, `i = 1..=n`, on an interval.
    pub fn dirichlet_sine(domain: Domain, n: usize) -> Result<Self> {
        if domain.kind() != DomainKind::Interval1d {
            return Err(Error::IncompatibleBasis(
                "dirichlet_sine needs an interval domain".into(),
            ));
        }
        let available = domain.points_per_axis(0) / 2;
        check_mode_count(n, available)?;
        let l = domain.extent()[0];
        let (coords, weights) = domain.quadrature_grid();
        let scale = (2.0 / l).sqrt();
        let mut values = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 1..=n {
            let k = i as f64 * PI / l;
            values.push(coords.iter().map(|&x| scale * (k * x).sin()).collect());
            grads.push(coords.iter().map(|&x| scale * k * (k * x).cos()).collect());
            labels.push(format!("sin({i})"));
        }
        Ok(Self {
            domain,
            kind: BasisKind::DirichletSine,
            components: 1,
            coords,
            weights,
            values,
            grads,
            divergence: Vec::new(),
            labels,
        })
    }

    /// Products `sin(iπx/Lx) sin(jπy/Ly)` ordered by `i² + j²`.
    pub fn tensor_sine_2d(domain: Domain, n: usize) -> Result<Self> {
        if domain.kind() != DomainKind::Square2d {
            return Err(Error::IncompatibleBasis(
                "tensor_sine_2d needs a square domain".into(),
            ));
        }
        let max_i = domain.points_per_axis(0) / 2;
        let max_j = domain.points_per_axis(1) / 2;
        let mut modes: Vec<(usize, usize)> = (1..=max_i)
            .flat_map(|i| (1..=max_j).map(move |j| (i, j)))
            .collect();
        check_mode_count(n, modes.len())?;
        modes.sort_by_key(|&(i, j)| (i * i + j * j, i, j));
        modes.truncate(n);

        let (lx, ly) = (domain.extent()[0], domain.extent()[1]);
        let (coords, weights) = domain.quadrature_grid();
        let scale = 2.0 / (lx * ly).sqrt();
        let q = weights.len();
        let mut values = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for &(i, j) in &modes {
            let kx = i as f64 * PI / lx;
            let ky = j as f64 * PI / ly;
            let mut val = Vec::with_capacity(q);
            let mut grad = Vec::with_capacity(2 * q);
            for node in coords.chunks_exact(2) {
                let (sx, cx) = (kx * node[0]).sin_cos();
                let (sy, cy) = (ky * node[1]).sin_cos();
                val.push(scale * sx * sy);
                grad.push(scale * kx * cx * sy);
                grad.push(scale * ky * sx * cy);
            }
            values.push(val);
            grads.push(grad);
            labels.push(format!("sin({i})sin({j})"));
        }
        Ok(Self {
            domain,
            kind: BasisKind::TensorSine2d,
            components: 1,
            coords,
            weights,
            values,
            grads,
            divergence: Vec::new(),
            labels,
        })
    }

    /// Real divergence-free Fourier fields `∇^⊥ψ` with `ψ = cos(κ·x)` or
    /// `ψ = sin(κ·x)`, one wavevector per half-plane, ordered by `|k|²`.
    ///
    /// Stored gradients are symmetric gradients; the divergence of every
    /// member is tabulated separately from the full gradient.
    pub fn divfree_fourier_2d(domain: Domain, n: usize) -> Result<Self> {
        if domain.kind() != DomainKind::Torus2d {
            return Err(Error::IncompatibleBasis(
                "divfree_fourier_2d needs a 2D torus".into(),
            ));
        }
        // cubic products (convective term) must be resolved exactly
        let kmax = (domain.grid_resolution()[0].min(domain.grid_resolution()[1]) - 1) / 3;
        let kmax = kmax as i64;
        let mut wavevectors: Vec<(i64, i64)> = Vec::new();
        for k1 in 0..=kmax {
            for k2 in -kmax..=kmax {
                if k1 > 0 || k2 > 0 {
                    wavevectors.push((k1, k2));
                }
            }
        }
        wavevectors.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
        check_mode_count(n, 2 * wavevectors.len())?;

        let (lx, ly) = (domain.extent()[0], domain.extent()[1]);
        let (coords, weights) = domain.quadrature_grid();
        let norm = (2.0 / (lx * ly)).sqrt();
        let q = weights.len();
        let mut values = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        let mut divergence = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        'outer: for &(k1, k2) in &wavevectors {
            let kx = 2.0 * PI * k1 as f64 / lx;
            let ky = 2.0 * PI * k2 as f64 / ly;
            let kabs = (kx * kx + ky * ky).sqrt();
            // direction (-ky, kx)/|k|, perpendicular to the wavevector
            let (ax, ay) = (-ky / kabs, kx / kabs);
            for cosine in [false, true] {
                if values.len() == n {
                    break 'outer;
                }
                let mut val = Vec::with_capacity(2 * q);
                let mut grad = Vec::with_capacity(4 * q);
                let mut div = Vec::with_capacity(q);
                for node in coords.chunks_exact(2) {
                    let phase = kx * node[0] + ky * node[1];
                    // profile s(θ) and its derivative
                    let (s, ds) = if cosine {
                        (phase.cos(), -phase.sin())
                    } else {
                        (phase.sin(), phase.cos())
                    };
                    val.push(norm * ax * s);
                    val.push(norm * ay * s);
                    // full gradient ∂_j u_i = norm a_i k_j s'
                    let g = [
                        [norm * ax * kx * ds, norm * ax * ky * ds],
                        [norm * ay * kx * ds, norm * ay * ky * ds],
                    ];
                    let off = 0.5 * (g[0][1] + g[1][0]);
                    grad.extend_from_slice(&[g[0][0], off, off, g[1][1]]);
                    div.push(g[0][0] + g[1][1]);
                }
                values.push(val);
                grads.push(grad);
                divergence.push(div);
                labels.push(format!(
                    "k=({k1},{k2}) {}",
                    if cosine { "cos" } else { "sin" }
                ));
            }
        }
        Ok(Self {
            domain,
            kind: BasisKind::DivFreeFourier2d,
            components: 2,
            coords,
            weights,
            values,
            grads,
            divergence,
            labels,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, q: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[q * d..(q + 1) * d]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn gradient_mode(&self) -> GradientMode {
        if self.kind.is_vector() {
            GradientMode::Symmetric
        } else {
            GradientMode::Full
        }
    }

    /// Samples of basis member `i`.
    pub fn values_of(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// `V`-gradient samples of basis member `i`.
    pub fn grads_of(&self, i: usize) -> &[f64] {
        &self.grads[i]
    }

    pub fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    fn check_samples(&self, samples: &[f64]) -> Result<()> {
        let expected = self.num_nodes() * self.components;
        if samples.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: samples.len(),
            });
        }
        Ok(())
    }

    /// Field values and gradients at every quadrature node.
    pub fn evaluate(&self, coeffs: &[f64]) -> Result<FieldSamples> {
        self.check_len(coeffs)?;
        let mut values = vec![0.0; self.num_nodes() * self.components];
        let mut grads = vec![0.0; values.len() * self.dim()];
        for (i, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (acc, &v) in values.iter_mut().zip(&self.values[i]) {
                *acc += a * v;
            }
            for (acc, &g) in grads.iter_mut().zip(&self.grads[i]) {
                *acc += a * g;
            }
        }
        Ok(FieldSamples { values, grads })
    }

    /// Reconstructed samples `Σ αᵢ vᵢ` on the quadrature grid.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(coeffs)?.values)
    }

    /// Sample a scalar (or vector, returned as a slice) function at the nodes.
    pub fn sample(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.num_nodes() * self.components);
        for q in 0..self.num_nodes() {
            let v = f(self.node(q));
            if v.len() != self.components {
                return Err(Error::DimensionMismatch {
                    expected: self.components,
                    got: v.len(),
                });
            }
            out.extend(v);
        }
        Ok(out)
    }

    /// `(u, v)_H` via Parseval.
    pub fn h_inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(v)?;
        Ok(dot(u, v))
    }

    pub fn h_norm(&self, v: &[f64]) -> Result<f64> {
        Ok(self.h_inner(v, v)?.sqrt())
    }

    /// `L²` inner product of two sample vectors by direct quadrature.
    pub fn l2_inner_samples(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_samples(u)?;
        self.check_samples(v)?;
        let c = self.components;
        Ok(self
            .weights
            .iter()
            .enumerate()
            .map(|(q, &w)| w * dot(&u[q * c..(q + 1) * c], &v[q * c..(q + 1) * c]))
            .sum())
    }

    /// `‖v‖_V = (∫ |G v|^p)^{1/p}` with `G` the basis' gradient mode.
    pub fn v_norm(&self, v: &[f64], p: f64) -> Result<f64> {
        SpaceNorms::new(p)?;
        let field = self.evaluate(v)?;
        Ok(self.gradient_lp_norm(&field.grads, p))
    }

    pub(crate) fn gradient_lp_norm(&self, grads: &[f64], p: f64) -> f64 {
        let block = self.components * self.dim();
        let s: f64 = self
            .weights
            .iter()
            .zip(grads.chunks_exact(block))
            .map(|(&w, g)| w * dot(g, g).sqrt().powf(p))
            .sum();
        s.powf(1.0 / p)
    }

    /// `‖v‖_{V∩H} = ‖v‖_V + ‖v‖_H`.
    pub fn intersection_norm(&self, v: &[f64], p: f64) -> Result<f64> {
        Ok(self.v_norm(v, p)? + self.h_norm(v)?)
    }

    /// `L^q` norm of a sample vector (pointwise Euclidean magnitude).
    pub fn lq_norm_samples(&self, samples: &[f64], q_exp: f64) -> Result<f64> {
        self.check_samples(samples)?;
        let c = self.components;
        if q_exp.is_infinite() {
            return Ok(samples
                .chunks_exact(c)
                .map(|s| dot(s, s).sqrt())
                .fold(0.0, f64::max));
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(samples.chunks_exact(c))
            .map(|(&w, s)| w * dot(s, s).sqrt().powf(q_exp))
            .sum();
        Ok(s.powf(1.0 / q_exp))
    }

    /// `H`-projection `Σᵢ (y₀, vᵢ)_H vᵢ` of sampled data.
    pub fn project_initial(&self, y0: &[f64]) -> Result<Vec<f64>> {
        self.check_samples(y0)?;
        (0..self.n())
            .map(|i| self.l2_inner_samples(y0, &self.values[i]))
            .collect()
    }

    pub fn coefficients(&self, v: &FunctionValue) -> Result<Vec<f64>> {
        match v {
            FunctionValue::Coefficients(c) => {
                self.check_len(c)?;
                Ok(c.clone())
            }
            FunctionValue::Samples(s) => self.project_initial(s),
        }
    }

    /// Gram matrix `(vᵢ, vⱼ)_{L²}` by quadrature, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self
                    .l2_inner_samples(&self.values[i], &self.values[j])
                    .expect("basis samples have consistent length");
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }

    /// `max |Gram − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.n();
        self.gram()
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                let target = if k / n == k % n { 1.0 } else { 0.0 };
                (g - target).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Sampled constants `(c, C)` with
    /// `c‖α‖₂ ≤ ‖v‖_{V∩H} ≤ C‖α‖₂` over `samples` random directions.
    pub fn norm_equivalence(&self, p: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
        use rand::{Rng, SeedableRng};
        if samples == 0 {
            return Err(Error::InvalidInput("norm equivalence needs at least one sample".into()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..samples {
            let a: Vec<f64> = (0..self.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let size = dot(&a, &a).sqrt();
            if size == 0.0 {
                continue;
            }
            let r = self.intersection_norm(&a, p)? / size;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok((lo, hi))
    }

    /// Maximum pointwise divergence over nodes and members; zero for
    /// scalar bases.
    pub fn max_divergence(&self) -> f64 {
        self.divergence
            .iter()
            .flat_map(|d| d.iter())
            .fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// `max_q (Σᵢ |vᵢ(x_q)|²)^{1/2}`: by Cauchy–Schwarz,
    /// `‖v‖_∞ ≤ sup_constant · ‖v‖_H` on the span (at the nodes).
    pub fn sup_constant(&self) -> f64 {
        let c = self.components;
        (0..self.num_nodes())
            .map(|q| {
                self.values
                    .iter()
                    .map(|v| dot(&v[q * c..(q + 1) * c], &v[q * c..(q + 1) * c]))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Write nodes, weights and tabulated basis data as CSV.
    pub fn export_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.dim();
        let c = self.components;
        let axes = ["x", "y", "z"];
        let mut header: Vec<String> = axes[..d].iter().map(|s| s.to_string()).collect();
        header.push("weight".into());
        header.push("basis_index".into());
        for comp in 0..c {
            header.push(if c == 1 {
                "value".into()
            } else {
                format!("value_{comp}")
            });
        }
        for comp in 0..c {
            for dir in 0..d {
                header.push(format!("grad_{comp}_{dir}"));
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.n() {
            for q in 0..self.num_nodes() {
                let mut row: Vec<String> = self.node(q).iter().map(|&x| fmt_g17(x)).collect();
                row.push(fmt_g17(self.weights[q]));
                row.push(i.to_string());
                row.extend(self.values[i][q * c..(q + 1) * c].iter().map(|&v| fmt_g17(v)));
                row.extend(
                    self.grads[i][q * c * d..(q + 1) * c * d]
                        .iter()
                        .map(|&v| fmt_g17(v)),
                );
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

fn check_mode_count(n: usize, available: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("basis dimension must be positive".into()));
    }
    if n > available {
        return Err(Error::InvalidInput(format!(
            "basis dimension {n} exceeds the {available} modes resolved by the grid"
        )));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete `L^p(I, V)` and `L^∞(I, H)` norms of a trajectory. The `L^p`
/// sum uses right endpoints: `Σ_{k≥1} Δt_k ‖α(t_k)‖_V^p`.
pub fn bochner_norms(traj: &Trajectory, basis: &GalerkinBasis, p: f64) -> Result<BochnerNorms> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut linf_h: f64 = 0.0;
    let mut sum = 0.0;
    for (k, state) in traj.states().iter().enumerate() {
        linf_h = linf_h.max(basis.h_norm(state)?);
        if k > 0 {
            let dt = traj.times()[k] - traj.times()[k - 1];
            sum += dt * basis.v_norm(state, p)?.powf(p);
        }
    }
    Ok(BochnerNorms {
        lp_v: sum.powf(1.0 / p),
        linf_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sine(n: usize) -> GalerkinBasis {
        GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 16, 8).unwrap(), n).unwrap()
    }

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }

    #[test]
    fn domain_invariants_rejected() {
        assert!(Domain::interval(0.0, 8, 4).is_err());
        assert!(Domain::interval(1.0, 3, 4).is_err());
        assert!(Domain::interval(1.0, 8, 1).is_err());
        assert!(Domain::new(DomainKind::Square2d, vec![1.0], 4, vec![8]).is_err());
    }

    #[test]
    fn h_inner_examples() {
        let b = sine(4);
        assert_eq!(b.h_inner(&unit(4, 0), &unit(4, 0)).unwrap(), 1.0);
        assert_eq!(b.h_inner(&unit(4, 0), &unit(4, 1)).unwrap(), 0.0);
        let b2 = sine(2);
        assert_eq!(b2.h_inner(&[1.0, 2.0], &[3.0, -1.0]).unwrap(), 1.0);
        assert!(matches!(
            b2.h_inner(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn v_norm_of_first_sine_mode() {
        let b = sine(4);
        let e1 = unit(4, 0);
        assert_eq!(b.v_norm(&[0.0; 4], 2.0).unwrap(), 0.0);
        assert_relative_eq!(b.v_norm(&e1, 2.0).unwrap(), PI, max_relative = 1e-12);
        let expected = (4.0 * PI.powi(4) * 3.0 / 8.0).powf(0.25);
        assert_relative_eq!(b.v_norm(&e1, 4.0).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(b.intersection_norm(&e1, 2.0).unwrap(), PI + 1.0, max_relative = 1e-12);
        assert!(b.v_norm(&e1, 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let b = sine(3);
        let y0 = b.values_of(0).to_vec();
        let c = b.project_initial(&y0).unwrap();
        assert_relative_eq!(c[0], 1.0, epsilon = 1e-12);
        assert!(c[1].abs() < 1e-12 && c[2].abs() < 1e-12);

        let zero = vec![0.0; b.num_nodes()];
        assert_eq!(b.project_initial(&zero).unwrap(), vec![0.0; 3]);

        // ∫ x(1-x) √2 sin(iπx) dx = 4√2 / (iπ)³ for odd i, 0 for even i
        let bubble = b.sample(|x| vec![x[0] * (1.0 - x[0])]).unwrap();
        let c = b.project_initial(&bubble).unwrap();
        for (i, &ci) in c.iter().enumerate() {
            let k = (i + 1) as f64;
            let exact = if (i + 1) % 2 == 1 {
                4.0 * 2f64.sqrt() / (k * PI).powi(3)
            } else {
                0.0
            };
            assert!((ci - exact).abs() < 1e-14, "mode {}: {ci} vs {exact}", i + 1);
        }
    }

    #[test]
    fn bases_are_orthonormal() {
        assert!(sine(16).orthonormality_defect() < 1e-10);
        let sq = GalerkinBasis::tensor_sine_2d(Domain::square(1.0, 1.0, 8, 6).unwrap(), 12).unwrap();
        assert!(sq.orthonormality_defect() < 1e-10);
        let t = GalerkinBasis::divfree_fourier_2d(Domain::torus_2d(2.0 * PI, 2.0 * PI, 16).unwrap(), 20)
            .unwrap();
        assert!(t.orthonormality_defect() < 1e-10);
        assert!(t.max_divergence() < 1e-10);
        assert_eq!(t.gradient_mode(), GradientMode::Symmetric);
    }

    #[test]
    fn too_many_modes_rejected() {
        let d = Domain::interval(1.0, 4, 2).unwrap();
        assert!(GalerkinBasis::dirichlet_sine(d, 5).is_err());
        let t = Domain::torus_2d(1.0, 1.0, 8).unwrap();
        assert!(GalerkinBasis::divfree_fourier_2d(t, 100).is_err());
    }

    #[test]
    fn parseval_matches_direct_quadrature() {
        let b = sine(6);
        let u = [0.3, -1.0, 0.5, 0.0, 2.0, -0.7];
        let v = [1.1, 0.2, -0.4, 0.9, 0.0, 0.3];
        let direct = b
            .l2_inner_samples(&b.reconstruct(&u).unwrap(), &b.reconstruct(&v).unwrap())
            .unwrap();
        assert_relative_eq!(direct, b.h_inner(&u, &v).unwrap(), max_relative = 1e-8);
    }

    #[test]
    fn csv_export_has_one_row_per_node_and_member() {
        let b = GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 4, 2).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        b.export_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,weight,basis_index,value,grad_0_0");
        assert_eq!(lines.count(), 2 * 8);
    }
}
