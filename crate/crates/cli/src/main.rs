//! `bg`: run scenarios, condition probes, demos and convergence studies.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 solve failure,
//! 4 invariant violation (energy, a-priori audit, blow-up), 5 probe failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bochner_galerkin::config::FlatConfig;
use bochner_galerkin::output::{fmt_g17, gnuplot_columns, CsvTable};
use bochner_galerkin::probes::{
    comp2_demo, default_comp2_pair, oscillation_demo, reports_csv, ProbeReport, TestFunction,
};
use bochner_galerkin::scenarios::{build_scenario, run_study, Scenario, ScenarioConfig, ScenarioId};
use bochner_galerkin::solver::trajectory_csv;
use bochner_galerkin::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVE: u8 = 3;
const EXIT_INVARIANT: u8 = 4;
const EXIT_PROBE: u8 = 5;

#[derive(Parser)]
#[command(name = "bg", version, about = "Faedo-Galerkin solver and structural-condition probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory
    #[arg(long, env = "BG_OUT_DIR", default_value = "bg-out")]
    out: PathBuf,
    /// Worker threads for probe and study fan-out
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario config file
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and audit the run
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        common: Common,
        /// Do not run the configured probes before solving
        #[arg(long)]
        skip_probes: bool,
    },
    /// Run every applicable condition probe of a scenario
    Check {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a demo sequence
    Demo {
        name: DemoName,
        #[command(flatten)]
        common: Common,
        /// Largest index of the sequence
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        n_max: u64,
        /// Test function for the oscillation demo: 1, t, t2, cos, gauss
        #[arg(long, default_value = "t")]
        phi: String,
        /// Fluid scenario config supplying the basis for comp2
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Convergence study over a grid of (n, dt)
    Study {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        common: Common,
        /// Comma-separated Galerkin dimensions (default: the config n)
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<usize>,
        /// Comma-separated time steps (default: the config dt)
        #[arg(long, value_delimiter = ',')]
        dt_list: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoName {
    Comp2,
    Oscillation,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StepFailure { .. } | Error::Evaluation { .. } | Error::EmptyTrajectory | Error::GridMismatch(_) => {
                EXIT_SOLVE
            }
            Error::BlowUp { .. } | Error::Degenerate(_) => EXIT_INVARIANT,
            _ => EXIT_CONFIG,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        msg: format!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    };
    ExitCode::from(code)
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Solve {
            scenario,
            common,
            skip_probes,
        } => cmd_solve(&scenario, &common, skip_probes),
        Command::Check { scenario, common } => cmd_check(&scenario, &common),
        Command::Demo {
            name,
            common,
            n_max,
            phi,
            config,
        } => cmd_demo(name, &common, n_max as usize, &phi, config.as_deref()),
        Command::Study {
            scenario,
            common,
            n_list,
            dt_list,
        } => cmd_study(&scenario, &common, n_list, dt_list),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut cfg = ScenarioConfig::from_text(&text).map_err(|e| Failure {
        code: EXIT_CONFIG,
        msg: format!("{}: {e}", path.display()),
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn text(&self, name: &str, body: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| io_failure(&path, e))
    }

    fn csv(&self, name: &str, table: &CsvTable) -> Result<(), Failure> {
        self.text(name, &table.to_string_lossy())
    }
}

/// Key-value run record written next to every command's outputs.
struct Manifest {
    doc: FlatConfig,
    started: Instant,
}

impl Manifest {
    fn new(command: &str, jobs: usize) -> Self {
        let mut doc = FlatConfig::default();
        doc.set("run", "command", command);
        doc.set("run", "version", env!("CARGO_PKG_VERSION"));
        doc.set("run", "jobs", jobs.to_string());
        Self {
            doc,
            started: Instant::now(),
        }
    }

    fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.doc.set(section, key, value);
    }

    fn scenario(&mut self, s: &Scenario) {
        self.set("run", "seed", s.config.seed.to_string());
        for e in s.config.to_flat().entries() {
            self.doc.set(&format!("config.{}", e.section), &e.key, e.value.clone());
        }
        let b = &s.bounds;
        for (k, v) in [
            ("x0_norm", b.x0_norm),
            ("c0", b.c0),
            ("c1_l1", b.c1_l1),
            ("c2_l1", b.c2_l1),
            ("k0", b.k0),
            ("k1", b.k1),
            ("m", b.m),
            ("lp_v_bound", b.lp_v_bound()),
            ("linf_h_bound", b.linf_h_bound()),
        ] {
            self.set("bounds", k, fmt_g17(v));
        }
        for (k, v) in &s.metadata {
            self.set("metadata", k, v.clone());
        }
    }

    fn probes(&mut self, reports: &[ProbeReport]) {
        for r in reports {
            self.set(
                "probes",
                &r.condition.replace(['(', ')', '=', ','], "_"),
                format!("{} margin={}", r.verdict, fmt_g17(r.margin)),
            );
        }
    }

    fn finish(mut self, out: &Output, code: u8) -> Result<u8, Failure> {
        self.set("run", "exit_code", code.to_string());
        self.set("run", "wall_clock_s", format!("{:.3}", self.started.elapsed().as_secs_f64()));
        out.text("manifest.cfg", &self.doc.render())?;
        Ok(code)
    }
}

fn run_probes(s: &Scenario, jobs: usize) -> Result<(Vec<ProbeReport>, Vec<String>), Failure> {
    let opts = s.probe_options(jobs);
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for &kind in &s.config.probes {
        if !s.probe_applicable(kind) {
            skipped.push(kind.name().to_string());
            continue;
        }
        reports.push(s.run_probe(kind, &opts)?);
    }
    Ok((reports, skipped))
}

fn cmd_solve(args: &ScenarioArgs, common: &Common, skip_probes: bool) -> Result<u8, Failure> {
    let cfg = load_config(&args.config, args.seed)?;
    let scenario = build_scenario(&cfg)?;
    let out = Output::new(&common.out)?;
    let mut manifest = Manifest::new("solve", common.jobs);
    manifest.scenario(&scenario);
    out.text("config.cfg", &cfg.to_flat().render())?;

    if !skip_probes {
        let (reports, skipped) = run_probes(&scenario, common.jobs)?;
        manifest.probes(&reports);
        if !skipped.is_empty() {
            manifest.set("probes", "skipped", skipped.join(","));
        }
    }

    let run = scenario.run()?;
    let traj = &run.outcome.trajectory;
    let ledger = &run.outcome.ledger;
    out.csv(
        "trajectory.csv",
        &trajectory_csv(traj, ledger, &scenario.basis, cfg.p)?,
    )?;
    out.csv("ledger.csv", &ledger.to_csv())?;
    let h: Vec<f64> = traj
        .states()
        .iter()
        .map(|s| scenario.basis.h_norm(s))
        .collect::<Result<_, _>>()?;
    out.text("h_norm.dat", &gnuplot_columns(traj.times(), &h))?;
    out.text("energy_slack.dat", &gnuplot_columns(&ledger.times, &ledger.slack))?;

    manifest.set("energy", "min_slack", fmt_g17(run.energy.min_slack));
    manifest.set("energy", "min_slack_time", fmt_g17(run.energy.min_slack_time));
    manifest.set("energy", "tolerance", fmt_g17(run.slack_tolerance));
    manifest.set("energy", "pass", run.energy_ok().to_string());
    manifest.set("audit", "lp_v", fmt_g17(run.audit.norms.lp_v));
    manifest.set("audit", "linf_h", fmt_g17(run.audit.norms.linf_h));
    manifest.set("audit", "lp_v_pass", run.audit.lp_v_pass.to_string());
    manifest.set("audit", "linf_h_pass", run.audit.linf_h_pass.to_string());
    manifest.set("audit", "rel_tol", fmt_g17(run.audit.rel_tol));
    manifest.set("run", "steps", (traj.len().saturating_sub(1)).to_string());

    let code = match &run.outcome.failure {
        Some(e @ Error::BlowUp { .. }) => {
            eprintln!("error: {e}");
            eprintln!("{}", audit_summary(&run.audit));
            manifest.set("run", "failure", e.to_string());
            EXIT_INVARIANT
        }
        Some(e) => {
            eprintln!("error: {e} (partial trajectory written)");
            manifest.set("run", "failure", e.to_string());
            EXIT_SOLVE
        }
        None if !run.energy_ok() => {
            eprintln!(
                "error: energy slack {} below -{}",
                run.energy.min_slack, run.slack_tolerance
            );
            EXIT_INVARIANT
        }
        None if !run.audit.passed() => {
            eprintln!("error: a-priori audit failed");
            eprintln!("{}", audit_summary(&run.audit));
            EXIT_INVARIANT
        }
        None => 0,
    };
    manifest.finish(&out, code)
}

fn audit_summary(a: &bochner_galerkin::apriori::AuditReport) -> String {
    format!(
        "audit: |x|_LpV = {} (bound {}, {}), |x|_LinfH = {} (bound {}, {})",
        fmt_g17(a.norms.lp_v),
        fmt_g17(a.lp_v_bound),
        if a.lp_v_pass { "pass" } else { "FAIL" },
        fmt_g17(a.norms.linf_h),
        fmt_g17(a.linf_h_bound),
        if a.linf_h_pass { "pass" } else { "FAIL" },
    )
}

fn cmd_check(args: &ScenarioArgs, common: &Common) -> Result<u8, Failure> {
    let cfg = load_config(&args.config, args.seed)?;
    let scenario = build_scenario(&cfg)?;
    let out = Output::new(&common.out)?;
    let mut manifest = Manifest::new("check", common.jobs);
    manifest.scenario(&scenario);
    out.text("config.cfg", &cfg.to_flat().render())?;

    if cfg.probes.is_empty() {
        eprintln!("warning: probe list is empty; nothing checked");
    }
    let (reports, skipped) = run_probes(&scenario, common.jobs)?;
    for name in &skipped {
        eprintln!("warning: probe {name} does not apply to {} and was skipped", cfg.id);
    }
    for r in &reports {
        println!("{}", r.summary());
    }
    out.csv("probes.csv", &reports_csv(&reports))?;
    manifest.probes(&reports);
    if !skipped.is_empty() {
        manifest.set("probes", "skipped", skipped.join(","));
    }
    let code = if reports.iter().all(ProbeReport::passed) { 0 } else { EXIT_PROBE };
    manifest.finish(&out, code)
}

fn cmd_demo(
    name: DemoName,
    common: &Common,
    n_max: usize,
    phi: &str,
    config: Option<&Path>,
) -> Result<u8, Failure> {
    let out = Output::new(&common.out)?;
    let mut manifest = Manifest::new("demo", common.jobs);
    let ns: Vec<f64> = (1..=n_max).map(|n| n as f64).collect();
    match name {
        DemoName::Comp2 => {
            let cfg = match config {
                Some(path) => load_config(path, None)?,
                None => ScenarioConfig::preset(ScenarioId::PNse2d),
            };
            let scenario = build_scenario(&cfg)?;
            let (v, w) = default_comp2_pair(&scenario.basis)?;
            let report = comp2_demo(&v, &w, &scenario.basis, n_max)?;
            let mut table = CsvTable::new(["n", "q_n", "target", "relative_deviation", "skew_part"]);
            for (i, q) in report.q.iter().enumerate() {
                table.push_numbers(&[
                    (i + 1) as f64,
                    *q,
                    report.target,
                    (q.abs() - report.target).abs() / report.target,
                    report.skew_part[i],
                ]);
            }
            out.csv("comp2.csv", &table)?;
            out.text("comp2.dat", &gnuplot_columns(&ns, &report.q))?;
            manifest.set("demo", "name", "comp2");
            manifest.set("demo", "scenario", cfg.id.name());
            manifest.set("demo", "n_max", n_max.to_string());
            manifest.set("demo", "bvw", fmt_g17(report.bvw));
            manifest.set("demo", "bvv", fmt_g17(report.bvv));
            manifest.set("demo", "target", fmt_g17(report.target));
            manifest.set("demo", "observed_sign", fmt_g17(report.observed_sign));
            if let Some(d) = report.tail_deviation {
                manifest.set("demo", "tail_deviation", fmt_g17(d));
            }
            manifest.set("demo", "plateau_ok", report.plateau_ok().to_string());
            manifest.set("demo", "skew_ok", report.skew_ok().to_string());
        }
        DemoName::Oscillation => {
            let phi: TestFunction = phi.parse()?;
            let report = oscillation_demo(phi, n_max)?;
            let mut table = CsvTable::new(["n", "s_n", "bound", "sin2_integral"]);
            for (i, s) in report.s.iter().enumerate() {
                let n = (i + 1) as f64;
                table.push_numbers(&[n, *s, report.bound_c / n, report.sin2[i]]);
            }
            out.csv("oscillation.csv", &table)?;
            out.text("oscillation.dat", &gnuplot_columns(&ns, &report.s))?;
            manifest.set("demo", "name", "oscillation");
            manifest.set("demo", "phi", phi.name());
            manifest.set("demo", "n_max", n_max.to_string());
            manifest.set("demo", "bound_c", fmt_g17(report.bound_c));
            manifest.set("demo", "fitted_c", fmt_g17(report.fitted_c));
            manifest.set("demo", "decay_ok", report.decay_ok().to_string());
            manifest.set("demo", "no_strong_convergence", report.no_strong_convergence().to_string());
        }
    }
    manifest.finish(&out, 0)
}

fn cmd_study(
    args: &ScenarioArgs,
    common: &Common,
    mut n_list: Vec<usize>,
    mut dt_list: Vec<f64>,
) -> Result<u8, Failure> {
    let cfg = load_config(&args.config, args.seed)?;
    if n_list.is_empty() {
        n_list.push(cfg.n);
    }
    if dt_list.is_empty() {
        dt_list.push(cfg.solver.dt);
    }
    let scenario = build_scenario(&cfg)?;
    let out = Output::new(&common.out)?;
    let mut manifest = Manifest::new("study", common.jobs);
    manifest.scenario(&scenario);
    out.text("config.cfg", &cfg.to_flat().render())?;

    let study = run_study(&cfg, &n_list, &dt_list, common.jobs)?;
    out.csv("study.csv", &study.to_csv())?;
    let mut orders = CsvTable::new(["n", "temporal_order"]);
    let mut dat = String::new();
    for &(n, order) in &study.temporal_orders {
        orders.push(vec![n.to_string(), order.map_or("nan".into(), fmt_g17)]);
        let row: Vec<_> = study.cells.iter().filter(|c| c.n == n).collect();
        let dts: Vec<f64> = row.iter().map(|c| c.dt).collect();
        let errs: Vec<f64> = row.iter().map(|c| c.linf_h).collect();
        if !dat.is_empty() {
            dat.push_str("\n\n");
        }
        dat.push_str(&format!("# n = {n}\n"));
        dat.push_str(&gnuplot_columns(&dts, &errs));
    }
    out.csv("orders.csv", &orders)?;
    out.text("study.dat", &dat)?;
    manifest.set(
        "study",
        "reference",
        match study.reference {
            bochner_galerkin::scenarios::StudyReference::Exact => "exact".to_string(),
            bochner_galerkin::scenarios::StudyReference::Finest { n, dt } => format!("finest n={n} dt={}", fmt_g17(dt)),
        },
    );
    for &(n, order) in &study.temporal_orders {
        manifest.set("study", &format!("order_n{n}"), order.map_or("nan".into(), fmt_g17));
        println!("n = {n}: fitted temporal order {}", order.map_or("n/a".into(), |o| format!("{o:.4}")));
    }
    let failed: Vec<_> = study.cells.iter().filter(|c| c.failure.is_some()).collect();
    for c in &failed {
        eprintln!("error: cell n={} dt={} failed: {}", c.n, c.dt, c.failure.as_deref().unwrap_or(""));
    }
    manifest.set("study", "failed_cells", failed.len().to_string());
    let code = if failed.is_empty() { 0 } else { EXIT_SOLVE };
    manifest.finish(&out, code)
}
