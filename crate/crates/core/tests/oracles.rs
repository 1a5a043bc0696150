use std::f64::consts::PI;

use approx::assert_relative_eq;
use bochner_galerkin::function_space::{bochner_norms, Domain, GalerkinBasis};
use bochner_galerkin::operators::{
    convective_pairing, nemyckii_pairing, stress_pairing, Coefficient, Nonlinearity, PerturbationSpec,
    StressParams, Term,
};
use bochner_galerkin::probes::{comp2_demo, comp2_series, default_comp2_pair};
use bochner_galerkin::scenarios::{build_scenario, InitialData, Perturbation, ScenarioConfig, ScenarioId};
use bochner_galerkin::solver::Trajectory;

fn sine(n: usize) -> GalerkinBasis {
    GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 16, 8).unwrap(), n).unwrap()
}

fn torus(n: usize) -> GalerkinBasis {
    GalerkinBasis::divfree_fourier_2d(Domain::torus_2d(2.0 * PI, 2.0 * PI, 16).unwrap(), n).unwrap()
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Divergence-free Fourier field rebuilt from its label on the `2π` torus.
struct Mode {
    k: (f64, f64),
    cosine: bool,
}

impl Mode {
    fn parse(label: &str) -> Self {
        let (wave, profile) = label.split_once(' ').unwrap();
        let inner = wave.trim_start_matches("k=(").trim_end_matches(')');
        let (a, b) = inner.split_once(',').unwrap();
        Self {
            k: (a.parse().unwrap(), b.parse().unwrap()),
            cosine: profile == "cos",
        }
    }

    /// value and gradient `∂_j u_i` at `x`
    fn eval(&self, x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let norm = 1.0 / (2.0f64.sqrt() * PI);
        let (kx, ky) = self.k;
        let kabs = kx.hypot(ky);
        let a = [-ky / kabs, kx / kabs];
        let phase = kx * x + ky * y;
        let (s, ds) = if self.cosine { (phase.cos(), -phase.sin()) } else { (phase.sin(), phase.cos()) };
        let k = [kx, ky];
        let mut g = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] = norm * a[i] * k[j] * ds;
            }
        }
        ([norm * a[0] * s, norm * a[1] * s], g)
    }
}

fn field(modes: &[Mode], c: &[f64], x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut u = [0.0; 2];
    let mut g = [[0.0; 2]; 2];
    for (m, &a) in modes.iter().zip(c) {
        let (mu, mg) = m.eval(x, y);
        for i in 0..2 {
            u[i] += a * mu[i];
            for j in 0..2 {
                g[i][j] += a * mg[i][j];
            }
        }
    }
    (u, g)
}

fn sym(g: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

fn dense_torus(f: impl Fn(f64, f64) -> f64) -> f64 {
    let m = 96;
    let h = 2.0 * PI / m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..m {
            sum += f(i as f64 * h, j as f64 * h);
        }
    }
    sum * h * h
}

#[test]
fn first_mode_norms_in_closed_form() {
    let basis = sine(5);
    let e1 = unit(5, 0);
    assert_relative_eq!(basis.v_norm(&e1, 4.0).unwrap(), (4.0 * PI.powi(4) * 3.0 / 8.0).powf(0.25), max_relative = 1e-12);
    assert_relative_eq!(basis.v_norm(&e1, 2.0).unwrap(), PI, max_relative = 1e-12);
    assert_relative_eq!(basis.intersection_norm(&e1, 2.0).unwrap(), PI + 1.0, max_relative = 1e-12);
}

#[test]
fn projection_of_a_parabola() {
    let basis = sine(7);
    let samples = basis.sample(|x| vec![x[0] * (1.0 - x[0])]).unwrap();
    let coeffs = basis.project_initial(&samples).unwrap();
    for (i, c) in coeffs.iter().enumerate() {
        let k = (i + 1) as f64;
        let expected = if (i + 1) % 2 == 1 { 4.0 * 2f64.sqrt() / (k * PI).powi(3) } else { 0.0 };
        assert!((c - expected).abs() < 1e-12, "{i}: {c} vs {expected}");
    }
}

#[test]
fn cubic_perturbation_on_the_first_mode() {
    let basis = sine(3);
    let spec = PerturbationSpec::custom(
        "cube",
        vec![Term { coefficient: Coefficient::Constant(1.0), nonlinearity: Nonlinearity::Power(3) }],
    );
    let e1 = unit(3, 0);
    assert_relative_eq!(nemyckii_pairing(0.0, &e1, &e1, &basis, &spec).unwrap(), 1.5, max_relative = 1e-12);
    let e2 = unit(3, 1);
    assert!(nemyckii_pairing(0.0, &e1, &e2, &basis, &spec).unwrap().abs() < 1e-12);
}

#[test]
fn stress_pairing_against_dense_grid() {
    let basis = torus(6);
    let modes: Vec<Mode> = basis.labels().iter().map(|l| Mode::parse(l)).collect();
    let u = [0.7, -0.4, 0.0, 1.1, 0.3, -0.2];
    let w = [0.1, 0.5, -0.8, 0.0, 0.6, 0.9];
    for (p, delta) in [(2.0, 0.0), (2.5, 0.3), (1.6, 0.5), (3.0, 0.0)] {
        let params = StressParams::new(p, delta).unwrap();
        let got = stress_pairing(&u, &w, &basis, params).unwrap();
        let oracle = dense_torus(|x, y| {
            let du = sym(field(&modes, &u, x, y).1);
            let dw = sym(field(&modes, &w, x, y).1);
            let size = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| du[i][j] * du[i][j]).sum::<f64>().sqrt();
            let inner: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| du[i][j] * dw[i][j]).sum();
            (delta + size).powf(p - 2.0) * inner
        });
        // 16-point rule is coarse for non-polynomial fluxes
        let tol = if p == 2.0 { 1e-10 } else { 2e-3 };
        assert!((got - oracle).abs() <= tol * oracle.abs().max(1.0), "p={p} delta={delta}: {got} vs {oracle}");
    }
    let e1 = unit(6, 0);
    let first = stress_pairing(&e1, &e1, &basis, StressParams::new(2.0, 0.0).unwrap()).unwrap();
    assert_relative_eq!(first, 0.5, max_relative = 1e-12);
}

#[test]
fn convective_pairing_against_dense_grid() {
    let basis = torus(8);
    let modes: Vec<Mode> = basis.labels().iter().map(|l| Mode::parse(l)).collect();
    let cases = [
        (vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], unit(8, 6)),
        (vec![0.3, -0.7, 0.2, 0.5, 0.0, 1.0, -0.4, 0.8], vec![0.9, 0.1, -0.6, 0.0, 0.3, -0.2, 0.5, 0.4]),
    ];
    for (u, w) in cases {
        let got = convective_pairing(&u, &w, &basis).unwrap();
        let oracle = dense_torus(|x, y| {
            let (uv, _) = field(&modes, &u, x, y);
            let (_, gw) = field(&modes, &w, x, y);
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s -= uv[i] * uv[j] * gw[i][j];
                }
            }
            s
        });
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }
}

#[test]
fn bochner_norms_of_a_constant_step() {
    let basis = sine(4);
    let traj = Trajectory::new(vec![0.0, 1.0], vec![unit(4, 0), unit(4, 0)]).unwrap();
    let norms = bochner_norms(&traj, &basis, 2.0).unwrap();
    assert_relative_eq!(norms.lp_v, PI, max_relative = 1e-12);
    assert_relative_eq!(norms.linf_h, 1.0, max_relative = 1e-12);
    let scaled = bochner_norms(&traj.scaled(3.0), &basis, 2.0).unwrap();
    assert_relative_eq!(scaled.lp_v, 3.0 * PI, max_relative = 1e-12);
    assert_relative_eq!(scaled.linf_h, 3.0, max_relative = 1e-12);
}

#[test]
fn growing_linear_perturbation_tracks_exponential() {
    let lambda = 12.0;
    let mut cfg = ScenarioConfig::preset(ScenarioId::PLaplacePerturbed);
    cfg.p = 2.0;
    cfg.n = 4;
    cfg.t_end = 0.2;
    cfg.solver.t_end = 0.2;
    cfg.solver.dt = 1e-4;
    cfg.perturbation = Some(Perturbation::Linear(lambda));
    cfg.y0 = InitialData::Mode { index: 1, amplitude: 1.0 };
    cfg.declared.c1 = Some(lambda);
    let run = build_scenario(&cfg).unwrap().run().unwrap();
    assert!(run.completed());
    assert!(run.audit.passed());
    let (t, last) = run.outcome.trajectory.last().unwrap();
    let exact = ((lambda - PI * PI) * t).exp();
    assert!(exact > 1.0);
    assert!((last[0] - exact).abs() < 2e-3 * exact, "{} vs {exact}", last[0]);
    assert!(run.audit.norms.linf_h <= (lambda * t).exp());
}

#[test]
fn degenerate_diffusion_dissipates_energy() {
    let mut cfg = ScenarioConfig::preset(ScenarioId::PLaplace1d);
    cfg.p = 4.0;
    cfg.n = 6;
    cfg.y0 = InitialData::Modes(vec![1.0, 0.0, 0.5]);
    let run = build_scenario(&cfg).unwrap().run().unwrap();
    assert!(run.completed());
    let e = &run.outcome.ledger.half_energy;
    assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
}

#[test]
fn implicit_euler_is_contractive() {
    let solve = |y0: InitialData| {
        let mut cfg = ScenarioConfig::preset(ScenarioId::PLaplace1d);
        cfg.n = 6;
        cfg.y0 = y0;
        build_scenario(&cfg).unwrap().run().unwrap().outcome.trajectory
    };
    let a = solve(InitialData::Modes(vec![1.0, -0.5, 0.2]));
    let b = solve(InitialData::Mode { index: 2, amplitude: 2.0 });
    let dist: Vec<f64> = a
        .states()
        .iter()
        .zip(b.states())
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
        .collect();
    assert!(dist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{dist:?}");
}

#[test]
fn comp2_equals_minus_pi_times_interaction() {
    let basis = GalerkinBasis::divfree_fourier_2d(Domain::torus_2d(2.0 * PI, 2.0 * PI, 16).unwrap(), 8).unwrap();
    let (v, w) = default_comp2_pair(&basis).unwrap();
    let bvw = convective_pairing(&v, &w, &basis).unwrap();
    let (q, _) = comp2_series(&v, &w, &basis, 6).unwrap();
    for qn in &q {
        assert!((qn + PI * bvw).abs() < 1e-12 * PI * bvw.abs().max(1.0), "{qn} vs {}", -PI * bvw);
    }
    let single = comp2_demo(&v, &w, &basis, 1).unwrap();
    assert_eq!(single.q.len(), 1);
    assert!(single.tail_deviation.is_none() && single.plateau_ok());

    let (q_self, _) = comp2_series(&v, &v, &basis, 6).unwrap();
    assert!(q_self.iter().all(|x| x.abs() < 1e-12), "{q_self:?}");
    assert!(comp2_demo(&v, &v, &basis, 4).is_err());
}
