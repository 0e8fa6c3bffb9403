//! The five run modes.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::bundles::{by_name, friction_chain_check, ExampleBundle, FrictionParams};
use crate::certificate::{build_certificate_with, check_iss_growth, Certificate};
use crate::error::{Error, Result};
use crate::expr::Vars;
use crate::report::ViolationReport;
use crate::simverify::{
    check_batch, check_decrease_grid, check_iss_gated_decrease, estimate_alpha_star,
    falsify_assumption1, falsify_assumption2, integrate, seed_batch, simulate_iss, AlphaSearch,
    InitialCondition, InputSignal, OdeOptions, SampleGrid, Sampling,
};

use super::config::{Mode, RunConfig};
use super::custom::build_custom;
use super::output::{fmt_f64, trajectory_table, Artifacts, Table};

/// What a run produced.
pub struct Outcome {
    pub passed: bool,
    pub report: String,
    pub artifacts: Artifacts,
}

pub fn load_bundle(cfg: &RunConfig) -> Result<ExampleBundle> {
    match &cfg.custom {
        Some(spec) => build_custom(spec),
        None => by_name(&cfg.example),
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    bundle: ExampleBundle,
    report: String,
    artifacts: Artifacts,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let bundle = load_bundle(cfg)?;
    let mut run = Run {
        cfg,
        bundle,
        report: String::new(),
        artifacts: Artifacts::default(),
    };
    run.header();
    let passed = match cfg.mode {
        Mode::Validate => run.validate()?,
        Mode::Certify => run.certify()?,
        Mode::Sweep => run.sweep()?,
        Mode::Iss => run.iss()?,
        Mode::AlphaStar => run.alpha_star()?,
    };
    let _ = writeln!(
        run.report,
        "\nresult: {}",
        if passed { "PASS" } else { "FAIL" }
    );
    if cfg.output.text {
        run.artifacts.add(
            format!("{}_report.txt", cfg.mode.name()),
            run.report.clone().into_bytes(),
        );
    }
    Ok(Outcome {
        passed,
        report: run.report,
        artifacts: run.artifacts,
    })
}

impl Run<'_> {
    fn line(&mut self, s: impl AsRef<str>) {
        self.report.push_str(s.as_ref());
        self.report.push('\n');
    }

    fn header(&mut self) {
        let cfg = self.cfg;
        let b = &self.bundle;
        let text = format!(
            "slowcert {} on example '{}'\nseed: {}\nfamily: c_a = {}, c_b = {}, T = {}",
            cfg.mode.name(),
            b.name,
            cfg.grid.seed,
            fmt_f64(b.family.c_a),
            fmt_f64(b.family.c_b),
            fmt_f64(b.family.window)
        );
        self.line(text);
    }

    fn radius(&self) -> f64 {
        self.cfg.grid.radius.unwrap_or(self.bundle.radius)
    }

    fn horizon(&self) -> f64 {
        self.cfg.simulation.horizon.unwrap_or(self.bundle.horizon)
    }

    fn alphas(&self) -> Vec<f64> {
        if self.cfg.alpha_list.is_empty() {
            self.bundle.expected.test_alphas.clone()
        } else {
            self.cfg.alpha_list.clone()
        }
    }

    fn grid(&self) -> SampleGrid {
        let g = &self.cfg.grid;
        let mut grid = SampleGrid::new(self.radius(), g.samples, g.seed);
        if let Some(t) = g.t_max {
            grid = grid.with_t_max(t);
        }
        grid
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions::default().with_sampling(Sampling::Stride(self.cfg.simulation.stride))
    }

    fn certificate(&self, alpha: f64) -> Result<Certificate> {
        build_certificate_with(
            &self.bundle.family,
            &self.bundle.system_at(alpha)?,
            &self.bundle.cert_options,
        )
    }

    fn batch(&self, alpha: f64) -> Vec<InitialCondition> {
        let s = &self.cfg.simulation;
        let t0_max = s.t0_max.unwrap_or(2.0 * self.bundle.family.window * alpha);
        seed_batch(
            self.bundle.sys.dim_state(),
            s.trajectories,
            self.radius(),
            t0_max,
            self.cfg.grid.seed,
        )
    }

    fn reports(&mut self, reps: &[ViolationReport]) -> bool {
        let mut ok = true;
        for r in reps {
            let mark = if r.passed() { "ok  " } else { "FAIL" };
            self.line(format!("  [{mark}] {}", r.summary()));
            if let Some(w) = r.witnesses.first() {
                self.line(format!(
                    "         first witness at {:?}: lhs = {}, rhs = {}",
                    w.point,
                    fmt_f64(w.lhs),
                    fmt_f64(w.rhs)
                ));
            }
            ok &= r.passed();
        }
        ok
    }

    fn describe(&mut self, cert: &Certificate) {
        self.line(format!("alpha = {}", fmt_f64(cert.alpha())));
        self.line(format!(
            "  threshold_ugas = 2 T c_a p_bar / c_b = {}",
            fmt_f64(cert.threshold_ugas())
        ));
        if cert.family().c_a > 0.0 {
            self.line(format!(
                "  threshold_iss = {}",
                fmt_f64(cert.threshold_iss())
            ));
        }
        self.line(format!(
            "  p_bar = {}, M_bar = {}, ln sup E = {}",
            fmt_f64(cert.p_bar()),
            fmt_f64(cert.m_bar()),
            fmt_f64(cert.gain_log_bound())
        ));
        self.line(format!(
            "  decrease_coeff = {} (ln = {})",
            fmt_f64(cert.decrease_coeff()),
            fmt_f64(cert.log_decrease_coeff())
        ));
        if let Some(w) = cert.warning() {
            self.line(format!(
                "  warning: alpha = {} does not exceed the sufficient threshold {}; decrease is not guaranteed",
                fmt_f64(w.alpha),
                fmt_f64(w.threshold)
            ));
        }
    }

    fn trajectory_csvs(
        &mut self,
        cert: &Certificate,
        index: usize,
        batch: &[InitialCondition],
    ) -> Result<()> {
        if !self.cfg.output.csv {
            return Ok(());
        }
        let take = self.cfg.simulation.csv_trajectories.min(batch.len());
        for (j, ic) in batch.iter().take(take).enumerate() {
            let traj = match integrate(
                cert.system(),
                &ic.x0,
                ic.t0,
                ic.t0 + self.horizon(),
                None,
                &self.ode(),
            ) {
                Ok(t) => t,
                Err(Error::Integration { .. }) => continue,
                Err(e) => return Err(e),
            };
            let table = trajectory_table(cert, &traj, None)?
                .meta("example", self.bundle.name)
                .meta("mode", self.cfg.mode.name())
                .meta("alpha", fmt_f64(cert.alpha()))
                .meta("seed", self.cfg.grid.seed)
                .meta("trajectory", j);
            self.artifacts.add(
                format!("{}_alpha{index}_traj{j}.csv", self.cfg.mode.name()),
                table.to_bytes(),
            );
        }
        Ok(())
    }

    fn validate(&mut self) -> Result<bool> {
        let grid = self.grid();
        let (fam, sys) = (self.bundle.family.clone(), self.bundle.sys.clone());
        let (fam, sys) = (&fam, &sys);
        let weighted = fam.mu().is_some();
        self.line(format!(
            "hypotheses ({}), {} samples, radius {}",
            if weighted { "mu-weighted" } else { "plain" },
            grid.samples,
            fmt_f64(grid.radius)
        ));
        let mut reps = if weighted {
            falsify_assumption2(fam, sys, &grid)?
        } else {
            falsify_assumption1(fam, sys, &grid)?
        };
        if sys.frozen.has_control() && fam.c_a > 0.0 {
            reps.extend(check_iss_growth(fam, sys, &grid)?);
        }
        if matches!(self.bundle.name, "friction" | "controlled-friction") {
            reps.extend(friction_chain_check(
                &FrictionParams::default(),
                &self.bundle,
                &grid,
            )?);
        }
        let ok = self.reports(&reps);
        if self.cfg.output.csv {
            let mut t = Table::new(
                [
                    "condition",
                    "samples",
                    "violations",
                    "worst_slack",
                    "passed",
                ]
                .map(String::from)
                .to_vec(),
            )
            .meta("example", self.bundle.name)
            .meta("seed", self.cfg.grid.seed);
            for r in &reps {
                t.push(vec![
                    r.condition.to_string(),
                    r.samples_tested.to_string(),
                    r.violations.to_string(),
                    fmt_f64(r.worst_slack),
                    r.passed().to_string(),
                ]);
            }
            self.artifacts.add("validate_summary.csv", t.to_bytes());
        }
        Ok(ok)
    }

    fn certify(&mut self) -> Result<bool> {
        let mut ok = true;
        let grid = self.grid();
        for (i, alpha) in self.alphas().into_iter().enumerate() {
            let cert = self.certificate(alpha)?;
            self.describe(&cert);
            let batch = self.batch(alpha);
            let out = check_batch(
                &cert,
                &batch,
                self.horizon(),
                self.cfg.simulation.margin_tol,
                &self.ode(),
            )?;
            self.line(format!(
                "  trajectories: {} seeded, horizon {}",
                batch.len(),
                fmt_f64(self.horizon())
            ));
            let mut pass = self.reports(std::slice::from_ref(&out.report));
            for (ic, e) in &out.aborted {
                self.line(format!(
                    "  [FAIL] trajectory from t0 = {}, x0 = {:?} aborted: {e}",
                    ic.t0, ic.x0
                ));
            }
            pass &= out.aborted.is_empty();
            self.line("  pointwise decrease on the sampling grid:");
            pass &= self.reports(&[check_decrease_grid(&cert, &grid)?]);
            self.line(format!(
                "  alpha = {}: {}",
                fmt_f64(alpha),
                if pass { "pass" } else { "FAIL" }
            ));
            ok &= pass;
            self.trajectory_csvs(&cert, i, &batch)?;
        }
        Ok(ok)
    }

    /// Every `α` is checked, but only those above the sufficient threshold
    /// decide the outcome.
    fn sweep(&mut self) -> Result<bool> {
        let mut ok = true;
        let mut table = Table::new(
            [
                "alpha",
                "threshold_ugas",
                "ln_decrease_coeff",
                "ln_gain_bound",
                "samples",
                "violations",
                "worst_slack",
                "aborted",
                "passed",
                "guaranteed",
            ]
            .map(String::from)
            .to_vec(),
        )
        .meta("example", self.bundle.name)
        .meta("seed", self.cfg.grid.seed)
        .meta("trajectories", self.cfg.simulation.trajectories);
        self.line("alpha            threshold        violations/samples  aborted  result");
        for alpha in self.alphas() {
            let cert = self.certificate(alpha)?;
            let batch = self.batch(alpha);
            let out = check_batch(
                &cert,
                &batch,
                self.horizon(),
                self.cfg.simulation.margin_tol,
                &self.ode(),
            )?;
            let guaranteed = alpha > cert.threshold_ugas();
            let pass = out.passed();
            let verdict = match (pass, guaranteed) {
                (true, _) => "pass",
                (false, true) => "FAIL",
                (false, false) => "fail (below threshold, not counted)",
            };
            if guaranteed {
                ok &= pass;
            }
            self.line(format!(
                "{:<16} {:<16} {:>8}/{:<10} {:>7}  {verdict}",
                fmt_f64(alpha),
                fmt_f64(cert.threshold_ugas()),
                out.report.violations,
                out.report.samples_tested,
                out.aborted.len()
            ));
            table.push(vec![
                fmt_f64(alpha),
                fmt_f64(cert.threshold_ugas()),
                fmt_f64(cert.log_decrease_coeff()),
                fmt_f64(cert.gain_log_bound()),
                out.report.samples_tested.to_string(),
                out.report.violations.to_string(),
                fmt_f64(out.report.worst_slack),
                out.aborted.len().to_string(),
                pass.to_string(),
                guaranteed.to_string(),
            ]);
        }
        if self.cfg.output.csv {
            self.artifacts.add("sweep.csv", table.to_bytes());
        }
        Ok(ok)
    }

    fn input_signal(&self) -> InputSignal {
        let m = self.bundle.sys.frozen.dim_control();
        match &self.cfg.iss.input {
            Some(exprs) => {
                let exprs = Arc::new(exprs.clone());
                Arc::new(move |t, x| {
                    let v = Vars {
                        x,
                        t,
                        ..Default::default()
                    };
                    exprs.iter().map(|e| e.eval(&v)).collect()
                })
            }
            None => Arc::new(move |t, _| vec![0.1 * t.sin(); m]),
        }
    }

    fn iss(&mut self) -> Result<bool> {
        let sys = &self.bundle.sys;
        if !sys.frozen.has_control() {
            return Err(Error::Config(format!(
                "example '{}' has no control channel",
                self.bundle.name
            )));
        }
        let m = sys.frozen.dim_control();
        if let Some(e) = &self.cfg.iss.input {
            if e.len() != m {
                return Err(Error::Config(format!(
                    "iss.input needs {m} expressions, got {}",
                    e.len()
                )));
            }
        }
        let n = sys.dim_state();
        let x0 = self.cfg.iss.x0.clone().unwrap_or_else(|| {
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            x
        });
        if x0.len() != n {
            return Err(Error::Config(format!(
                "iss.x0 needs {n} entries, got {}",
                x0.len()
            )));
        }
        let input = self.input_signal();
        let horizon = self.cfg.iss.horizon.unwrap_or(self.bundle.horizon);
        let grid = self.grid();
        let mut ok = true;
        for (i, alpha) in self.alphas().into_iter().enumerate() {
            let cert = self.certificate(alpha)?;
            self.describe(&cert);
            self.line("  gated decrease with u on the gate boundary:");
            let mut pass = self.reports(&[check_iss_gated_decrease(&cert, &grid)?]);
            let rep = simulate_iss(
                &cert,
                &input,
                &x0,
                self.cfg.iss.t0,
                horizon,
                self.cfg.simulation.margin_tol,
                &self.ode(),
            )?;
            self.line(format!(
                "  disturbance run over horizon {}:",
                fmt_f64(horizon)
            ));
            pass &= self.reports(std::slice::from_ref(&rep.gated));
            self.line(format!(
                "  sup |u| = {}, gate radius = {}, tail sup |x| = {}",
                fmt_f64(rep.input_sup),
                fmt_f64(rep.gate_radius),
                fmt_f64(rep.tail_bound)
            ));
            if rep.below_threshold {
                self.line("  level bound not checked: alpha is below the ISS threshold");
            } else {
                self.line(format!(
                    "  [{}] V_sharp stays below exp({})",
                    if rep.level_holds { "ok  " } else { "FAIL" },
                    fmt_f64(rep.level_log)
                ));
                pass &= rep.level_holds;
            }
            self.line(format!(
                "  alpha = {}: {}",
                fmt_f64(alpha),
                if pass { "pass" } else { "FAIL" }
            ));
            ok &= pass;
            if self.cfg.output.csv {
                let table = trajectory_table(&cert, &rep.trajectory, Some(&input))?
                    .meta("example", self.bundle.name)
                    .meta("mode", "iss")
                    .meta("alpha", fmt_f64(alpha))
                    .meta("seed", self.cfg.grid.seed)
                    .meta("decrease_bound", "-(c_b/4T) V_sharp");
                self.artifacts
                    .add(format!("iss_alpha{i}.csv"), table.to_bytes());
            }
        }
        Ok(ok)
    }

    fn alpha_star(&mut self) -> Result<bool> {
        let probe = self.certificate(1.0)?;
        let analytic = probe.threshold_ugas();
        let (lo, hi) = if analytic > 0.0 {
            (analytic * 1e-6, 2.0 * analytic)
        } else {
            (1e-3, 10.0)
        };
        let a = &self.cfg.alpha_star;
        let (lo, hi) = (a.lo.unwrap_or(lo), a.hi.unwrap_or(hi));
        let batch = self.batch(hi);
        let mut search = AlphaSearch::new(lo, hi, batch, self.horizon());
        search.iterations = a.iterations;
        search.margin_tol = self.cfg.simulation.margin_tol;
        search.ode = self.ode();
        search.cert = self.bundle.cert_options.clone();
        self.line(format!(
            "bisection on [{}, {}], {} iterations, {} trajectories each",
            fmt_f64(lo),
            fmt_f64(hi),
            search.iterations,
            search.batch.len()
        ));
        let rep = estimate_alpha_star(&self.bundle.family, &self.bundle.sys, &search)?;
        self.line(format!("empirical alpha*: {}", fmt_f64(rep.empirical)));
        match rep.failing_below {
            Some(f) => self.line(format!("largest failing alpha: {}", fmt_f64(f))),
            None => self.line("no failure inside the bracket"),
        }
        self.line(format!(
            "analytic threshold 2 T c_a p_bar / c_b: {}",
            fmt_f64(rep.analytic)
        ));
        let ok = rep.consistent();
        self.line(format!(
            "[{}] empirical boundary does not exceed the analytic threshold",
            if ok { "ok  " } else { "FAIL" }
        ));
        if self.cfg.output.csv {
            let mut t = Table::new(vec!["alpha".into(), "passed".into()])
                .meta("example", self.bundle.name)
                .meta("seed", self.cfg.grid.seed)
                .meta("empirical", fmt_f64(rep.empirical))
                .meta("analytic", fmt_f64(rep.analytic));
            for (alpha, p) in &rep.history {
                t.push(vec![fmt_f64(*alpha), p.to_string()]);
            }
            self.artifacts.add("alpha_star.csv", t.to_bytes());
        }
        Ok(ok)
    }
}
