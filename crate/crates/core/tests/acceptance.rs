//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the test
//! fails if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use bochner_galerkin::forcing::TimeAmplitude;
use bochner_galerkin::function_space::{Domain, GalerkinBasis};
use bochner_galerkin::operators::{convective_pairing, CoercivityConstants, Envelope, GrowthConstants, PLaplace};
use bochner_galerkin::probes::{
    check_coercivity_c5, check_growth_c3, comp2_demo, default_comp2_pair, interpolation_probe, skew_probe,
    ProbeOptions,
};
use bochner_galerkin::scenarios::{
    build_scenario, galerkin_stability, manufactured_heat, run_study, ForcingSpec, InitialData, ScenarioConfig,
    ScenarioId,
};
use bochner_galerkin::solver::{discrete_ibp_check, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn heat_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = ScenarioConfig::preset(ScenarioId::Heat1d);
    let scenario = build_scenario(&cfg).unwrap();
    let run = scenario.run().unwrap();
    let traj = &run.outcome.trajectory;
    let mut err: f64 = 0.0;
    for (t, state) in traj.times().iter().zip(traj.states()) {
        let numeric = scenario.basis.reconstruct(state).unwrap();
        let exact = manufactured_heat(*t, &scenario.basis).unwrap();
        let d: Vec<f64> = numeric.iter().zip(&exact).map(|(a, b)| a - b).collect();
        err = err.max(scenario.basis.l2_inner_samples(&d, &d).unwrap().sqrt());
    }
    let study = run_study(&cfg, &[8], &[1e-2, 5e-3, 2.5e-3, 1.25e-3], 1).unwrap();
    let order = study.temporal_orders[0].1.unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        name: "heat-equation oracle",
        pass: run.completed() && err < 5e-3 && (order - 1.0).abs() <= 0.15 && secs < 5.0,
        detail: format!("Linf(H) error {err:.3e}, temporal order {order:.3}, {secs:.2}s"),
    }
}

fn preset_suite() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut energy_ok = true;
    let mut audit_ok = true;
    let mut lines = Vec::new();
    for id in ScenarioId::ALL {
        let scenario = build_scenario(&ScenarioConfig::preset(id)).unwrap();
        let run = scenario.run().unwrap();
        let completed = run.completed();
        energy_ok &= completed && run.energy_ok();
        audit_ok &= completed && run.audit.passed();
        worst = worst.min(run.energy.min_slack / run.slack_tolerance);
        lines.push(format!(
            "{id}: slack {:.2e} (tol {:.1e}), |x|_LpV {:.3e} <= {:.3e}, |x|_LinfH {:.3e} <= {:.3e}",
            run.energy.min_slack,
            run.slack_tolerance,
            run.audit.norms.lp_v,
            run.audit.lp_v_bound,
            run.audit.norms.linf_h,
            run.audit.linf_h_bound,
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    for l in &lines {
        println!("    {l}");
    }
    (
        Outcome {
            id: 2,
            name: "energy inequality",
            pass: energy_ok && secs < 60.0,
            detail: format!("worst slack / tolerance {worst:.3e}, suite {secs:.2}s"),
        },
        Outcome {
            id: 3,
            name: "a-priori box",
            pass: audit_ok,
            detail: "all presets audited at relative tolerance 1e-6".into(),
        },
    )
}

fn skewness() -> Outcome {
    let scenario = build_scenario(&ScenarioConfig::preset(ScenarioId::PNse2d)).unwrap();
    let opts = ProbeOptions {
        samples: 100,
        seed: 7,
        ..ProbeOptions::default()
    };
    let report = skew_probe(&scenario.basis, &opts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut direct: f64 = 0.0;
    for _ in 0..100 {
        let u: Vec<f64> = (0..scenario.basis.n()).map(|_| rng.gen_range(-10.0..10.0)).collect();
        direct = direct.max(convective_pairing(&u, &u, &scenario.basis).unwrap().abs());
    }
    let run = scenario.run().unwrap();
    let convective = run
        .outcome
        .ledger
        .part_work
        .iter()
        .find(|(name, _)| name.starts_with("convective"))
        .map(|(_, w)| w.iter().fold(0.0f64, |m, x| m.max(x.abs())))
        .unwrap_or(f64::NAN);
    Outcome {
        id: 4,
        name: "skewness",
        pass: report.passed() && direct < 1e-10 && convective < 1e-9,
        detail: format!(
            "probe max |<Bu,u>| {:.2e}, direct {direct:.2e}, cumulative convective work {convective:.2e}",
            -report.raw_margin
        ),
    }
}

fn comp2() -> Outcome {
    let basis = GalerkinBasis::divfree_fourier_2d(Domain::torus_2d(2.0 * PI, 2.0 * PI, 16).unwrap(), 8).unwrap();
    let (v, w) = default_comp2_pair(&basis).unwrap();
    let report = comp2_demo(&v, &w, &basis, 20).unwrap();
    let target = PI * report.bvw.abs();
    let worst = report.q[4..]
        .iter()
        .map(|q| (q - target * q.signum()).abs() / target)
        .fold(0.0f64, f64::max);
    let spread = report.q[4..]
        .iter()
        .map(|q| (q - report.q[4]).abs() / target)
        .fold(0.0f64, f64::max);
    Outcome {
        id: 5,
        name: "comp2 demo",
        pass: report.bvw.abs() > 1e-8 && worst < 0.01 && spread < 0.01 && report.plateau_ok(),
        detail: format!(
            "<Bv,w> = {:.6}, q_20 = {:.6}, max deviation n>=5 {worst:.2e}, plateau spread {spread:.2e}",
            report.bvw, report.q[19]
        ),
    }
}

fn condition_probes() -> Outcome {
    let basis = GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 32, 8).unwrap(), 8).unwrap();
    let opts = ProbeOptions {
        samples: 200,
        seed: 3,
        ..ProbeOptions::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let op = PLaplace::new(p).unwrap();
        let growth = GrowthConstants {
            alpha: 0.0,
            beta: 1.0,
            gamma: 0.0,
            envelope: Envelope::constant(1.0),
        };
        let coercivity = CoercivityConstants {
            c0: 1.0,
            c1: 0.0,
            c2: 0.0,
        };
        let g = check_growth_c3(&op, Some(&growth), &basis, p, &opts).unwrap();
        let c = check_coercivity_c5(&op, Some(&coercivity), &basis, p, &opts).unwrap();
        let g_bad = check_growth_c3(&op, Some(&GrowthConstants { beta: 0.5, ..growth }), &basis, p, &opts).unwrap();
        let c_bad = check_coercivity_c5(&op, Some(&CoercivityConstants { c0: 2.0, ..coercivity }), &basis, p, &opts)
            .unwrap();
        pass &= g.passed() && g.margin >= -1e-8 && c.passed() && c.margin >= -1e-8 && !g_bad.passed() && !c_bad.passed();
        parts.push(format!(
            "p={p}: C3 {:.1e} C5 {:.1e} falsified {:.1e}/{:.1e}",
            g.margin, c.margin, g_bad.margin, c_bad.margin
        ));
    }
    Outcome {
        id: 6,
        name: "condition probes",
        pass,
        detail: parts.join("; "),
    }
}

fn interpolation() -> Outcome {
    let opts = ProbeOptions {
        samples: 100,
        seed: 5,
        ..ProbeOptions::default()
    };
    let a = interpolation_probe(11.0 / 5.0, &opts).unwrap();
    let b = interpolation_probe(2.5, &opts).unwrap();
    Outcome {
        id: 7,
        name: "interpolation probe",
        pass: a.passed() && b.passed() && a.margin >= -1e-8 && b.margin >= -1e-8,
        detail: format!("margin p=11/5 {:.3e}, p=2.5 {:.3e}", a.margin, b.margin),
    }
}

fn discrete_ibp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=64);
        let basis = GalerkinBasis::dirichlet_sine(Domain::interval(1.0, 8, 4).unwrap(), n).unwrap();
        let mut times = vec![0.0];
        for _ in 0..k {
            let last = *times.last().unwrap();
            times.push(last + rng.gen_range(0.01..0.1));
        }
        let mut draw = || -> Vec<Vec<f64>> {
            (0..=k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
        };
        let x = Trajectory::new(times.clone(), draw()).unwrap();
        let y = Trajectory::new(times, draw()).unwrap();
        worst = worst.max(discrete_ibp_check(&x, &y, &basis).unwrap());
    }
    Outcome {
        id: 8,
        name: "discrete integration by parts",
        pass: worst < 1e-12,
        detail: format!("max defect {worst:.2e} over 50 pairs"),
    }
}

fn stability() -> Outcome {
    let mut cfg = ScenarioConfig::preset(ScenarioId::PLaplace1d);
    cfg.p = 3.0;
    cfg.y0 = InitialData::Bubble { amplitude: 4.0 };
    let d = galerkin_stability(&cfg, &[4, 8, 16, 32], 1).unwrap();
    let monotone = d.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        id: 9,
        name: "Galerkin stability surrogate",
        pass: monotone,
        detail: format!(
            "|traj_n - traj_2n| = {}",
            d.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn manufactured() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [1.5, 3.0] {
        let mut cfg = ScenarioConfig::preset(ScenarioId::PLaplace1d);
        cfg.p = p;
        cfg.n = 4;
        cfg.forcing = ForcingSpec::Manufactured {
            target: 1,
            amplitude: TimeAmplitude::Exp { a0: 1.0, rate: 1.0 },
        };
        cfg.y0 = InitialData::Exact;
        let study = run_study(&cfg, &[4], &[1e-2, 5e-3, 2.5e-3, 1.25e-3], 1).unwrap();
        let order = study.temporal_orders[0].1.unwrap_or(f64::NAN);
        pass &= study.all_solved() && order >= 0.9;
        parts.push(format!("p={p}: order {order:.3}"));
    }
    Outcome {
        id: 10,
        name: "manufactured forced solution",
        pass,
        detail: parts.join(", "),
    }
}

#[test]
fn acceptance() {
    let (energy, apriori) = preset_suite();
    let mut outcomes = vec![
        heat_oracle(),
        energy,
        apriori,
        skewness(),
        comp2(),
        condition_probes(),
        interpolation(),
        discrete_ibp(),
        stability(),
        manufactured(),
    ];
    outcomes.sort_by_key(|o| o.id);
    for o in &outcomes {
        println!(
            "[{}] criterion {:>2} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.detail
        );
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
