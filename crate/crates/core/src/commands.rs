//! The subcommands behind the command-line tool. Each writes its outputs and
//! a config echo into one directory and returns the checks it evaluated.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::cell_problems::{homogenize_phase, PhaseHomogenization, TensorFormula};
use crate::config::{ConfigError, SimConfig, Violation};
use crate::error::{GeometryError, RunError, SolveError, TensorError, UnfoldError};
use crate::fem::{CoefficientTensor, Field, Sym2};
use crate::geometry::{build_reference_cell, measures, LabeledGrid, Layout, Phase};
use crate::ionic::check_assumptions;
use crate::macro_solver::{run_macro, MacroDiagnostics, MacroProblem, MacroRun, MacroState};
use crate::micro_solver::{run_micro, MicroProblem, MicroState};
use crate::output::{write_echo, write_vtk, Csv};
use crate::unfolding::{gradient_errors, micro_macro_error, verify_identities, ErrorRecord, GradientErrors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CellProblems,
    Macro,
    Micro,
    Converge,
    CheckIonic,
    CheckUnfolding,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::CellProblems,
        Command::Macro,
        Command::Micro,
        Command::Converge,
        Command::CheckIonic,
        Command::CheckUnfolding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CellProblems => "cell-problems",
            Command::Macro => "macro",
            Command::Micro => "micro",
            Command::Converge => "converge",
            Command::CheckIonic => "check-ionic",
            Command::CheckUnfolding => "check-unfolding",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command {s:?}"))
    }
}

/// One evaluated assertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub command: Command,
    pub out_dir: PathBuf,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> serde_json::Value {
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        json!({
            "command": self.command,
            "status": if self.passed() { "ok" } else { "assertion_failure" },
            "exit_code": self.exit_code(),
            "out_dir": self.out_dir,
            "failed": failed,
            "checks": self.checks,
        })
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CommandError {
            fn from(e: $t) -> Self {
                CommandError::Runtime(e.to_string())
            }
        }
    )*};
}

runtime_from!(GeometryError, RunError, SolveError, TensorError, UnfoldError);

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Io { .. } | CommandError::Runtime(_) => 3,
        }
    }

    pub fn summary(&self, command: Command) -> serde_json::Value {
        match self {
            CommandError::Config(e) => json!({
                "command": command,
                "status": "config_error",
                "exit_code": 2,
                "violations": e.violations,
            }),
            other => json!({
                "command": command,
                "status": "runtime_error",
                "exit_code": 3,
                "message": other.to_string(),
            }),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::Io { path: path.to_path_buf(), source }
}

/// Collects written files and checks for one output directory.
struct Sink {
    dir: PathBuf,
    files: Vec<PathBuf>,
    checks: Vec<Check>,
}

impl Sink {
    fn new(dir: &Path, cfg: &SimConfig) -> Result<Self, CommandError> {
        let echo = write_echo(dir, cfg).map_err(io_err(dir))?;
        Ok(Self { dir: dir.to_path_buf(), files: vec![echo], checks: Vec::new() })
    }

    fn csv(&mut self, name: &str, csv: &Csv) -> Result<(), CommandError> {
        let path = self.dir.join(name);
        csv.write(&path).map_err(io_err(&path))?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<(), CommandError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(io_err(&path))?;
        self.files.push(path);
        Ok(())
    }

    fn vtk(&mut self, name: &str, grid: &LabeledGrid, title: &str, fields: &[(&str, &Field)], phases: bool) -> Result<(), CommandError> {
        let path = self.dir.join(name);
        write_vtk(&path, grid, title, fields, phases).map_err(io_err(&path))?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self, command: Command) -> Result<Outcome, CommandError> {
        let mut outcome = Outcome { command, out_dir: self.dir, checks: self.checks, files: self.files };
        let path = outcome.out_dir.join("summary.json");
        let text = serde_json::to_string_pretty(&outcome.summary()).expect("summary serializes");
        std::fs::write(&path, text).map_err(io_err(&path))?;
        outcome.files.push(path);
        Ok(outcome)
    }
}

/// Runs `cmd` with outputs under `out_dir`. `Ok` carries the checks, which
/// may have failed; `Err` means the run itself could not complete.
pub fn run_command(cmd: Command, cfg: &SimConfig, out_dir: &Path) -> Result<Outcome, CommandError> {
    match cmd {
        Command::CellProblems => cell_problems(cfg, out_dir),
        Command::Macro => macro_cmd(cfg, out_dir),
        Command::Micro => micro_cmd(cfg, out_dir),
        Command::Converge => converge(cfg, out_dir),
        Command::CheckIonic => check_ionic(cfg, out_dir),
        Command::CheckUnfolding => check_unfolding(cfg, out_dir),
    }
}

fn phase_tensor(cfg: &SimConfig, cell: &LabeledGrid, phase: Phase) -> Result<CoefficientTensor, TensorError> {
    match (cfg.geometry.layout, phase) {
        (Layout::LaminateX, _) => CoefficientTensor::laminate_x(cell, cfg.micro.laminate[0], cfg.micro.laminate[1]),
        (_, Phase::E) => CoefficientTensor::constant(cfg.m_e()),
        _ => CoefficientTensor::constant(cfg.m_i()),
    }
}

/// Homogenization of every phase present in `cell`.
pub fn homogenize_all(cfg: &SimConfig, cell: &LabeledGrid) -> Result<Vec<PhaseHomogenization>, CommandError> {
    let mut out = Vec::new();
    let m = measures(cell);
    for phase in Phase::ALL {
        if m.volume(phase) == 0.0 {
            continue;
        }
        let m = phase_tensor(cfg, cell, phase)?;
        out.push(homogenize_phase(cell, &m, phase, cfg.tolerances.cell)?);
    }
    Ok(out)
}

/// Energy-form tensors, zero for absent phases.
fn computed_tensors(homs: &[PhaseHomogenization]) -> [Sym2; 3] {
    let get = |p: Phase| homs.iter().find(|h| h.correctors.phase == p).map_or(Sym2::ZERO, |h| h.energy.sym());
    [get(Phase::I1), get(Phase::I2), get(Phase::E)]
}

fn require_membranes(cfg: &SimConfig) -> Result<(), CommandError> {
    match cfg.geometry.layout {
        Layout::Band | Layout::Island => Ok(()),
        other => Err(ConfigError {
            violations: vec![Violation {
                keys: vec!["geometry.layout".into()],
                message: format!("layout {:?} has no intracellular phases; time-dependent runs need band or island", other.name()),
            }],
        }
        .into()),
    }
}

fn cell_problems(cfg: &SimConfig, out: &Path) -> Result<Outcome, CommandError> {
    let mut sink = Sink::new(out, cfg)?;
    let cell = build_reference_cell(&cfg.spec(), cfg.grid.reference_n)?;
    let homs = homogenize_all(cfg, &cell)?;
    let mut csv = Csv::new(&["phase", "formula", "m11", "m12", "m22", "eig1", "eig2"]);
    for h in &homs {
        for t in [&h.divergence, &h.energy] {
            let e = t.entries;
            let eig = t.eigenvalues();
            csv.labeled(&[h.correctors.phase.name(), t.formula.name()], &[e[0][0], 0.5 * (e[0][1] + e[1][0]), e[1][1], eig[0], eig[1]]);
        }
        let r = &h.report;
        sink.checks.push(Check::new(
            format!("tensor {}", h.correctors.phase.name()),
            r.passed,
            format!(
                "symmetry defect {:.3e}, cross-formula defect {:.3e}, eigenvalues [{:.6}, {:.6}]",
                r.symmetry_defect, r.cross_defect, r.eigenvalues[0], r.eigenvalues[1]
            ),
        ));
        let [c1, c2] = &h.correctors.chi;
        let name = format!("corrector_{}.vtk", h.correctors.phase.name());
        sink.vtk(&name, &cell, "cell correctors", &[("chi_1", c1), ("chi_2", c2)], true)?;
    }
    let t = computed_tensors(&homs);
    let sum = t[0].plus(t[1]);
    csv.labeled(&["I1+I2", TensorFormula::EnergyForm.name()], &[sum.m11, sum.m12, sum.m22, sum.eigenvalues()[0], sum.eigenvalues()[1]]);
    sink.csv("tensors.csv", &csv)?;
    sink.finish(Command::CellProblems)
}

/// Macro problem with tensors from the config or from the cell problems.
pub fn macro_problem(cfg: &SimConfig) -> Result<(MacroProblem, Vec<PhaseHomogenization>), CommandError> {
    let cell = build_reference_cell(&cfg.spec(), cfg.grid.reference_n)?;
    let (tensors, homs) = match cfg.explicit_tensors() {
        Some(t) => (t, Vec::new()),
        None => {
            let homs = homogenize_all(cfg, &cell)?;
            (computed_tensors(&homs), homs)
        }
    };
    let mut prob = MacroProblem::new(cfg.grid.macro_n, tensors, &measures(&cell), cfg.ionic, cfg.time.dt, cfg.time.t_end);
    prob.sources = [cfg.sources.i1, cfg.sources.i2];
    prob.delta = cfg.tensors.delta;
    prob.tol = cfg.tolerances.solver;
    Ok((prob, homs))
}

pub fn micro_problem(cfg: &SimConfig, eps: f64) -> Result<MicroProblem, CommandError> {
    let mut prob = MicroProblem::new(
        cfg.spec(),
        eps,
        cfg.grid.n_per_cell,
        cfg.m_i(),
        cfg.m_e(),
        cfg.ionic,
        cfg.time.dt,
        cfg.time.t_end,
    )?;
    prob.sources = [cfg.sources.i1, cfg.sources.i2];
    prob.tol = cfg.tolerances.solver;
    Ok(prob)
}

fn dissipative(cfg: &SimConfig) -> bool {
    cfg.ionic.lambda_a == 0.0 && cfg.ionic.b_w == 0.0 && cfg.sources.i1.is_off() && cfg.sources.i2.is_off()
}

/// First index where the sequence increases beyond roundoff.
pub fn first_increase(values: &[f64]) -> Option<usize> {
    values.windows(2).position(|w| w[1] > w[0] + 1e-12 * w[0].abs().max(1e-300)).map(|i| i + 1)
}

fn snapshot_due(cfg: &SimConfig, step: usize, last: usize) -> bool {
    step == 0 || step == last || (cfg.time.snapshot_every > 0 && step.is_multiple_of(cfg.time.snapshot_every))
}

fn run_macro_with_output(cfg: &SimConfig, prob: &MacroProblem, sink: &mut Sink) -> Result<MacroRun, CommandError> {
    let last = prob.num_steps();
    let mut io_error = None;
    let run = run_macro(prob, MacroState::from_initial(&prob.grid, &cfg.initial), |step, state, _| {
        if io_error.is_none() && snapshot_due(cfg, step, last) {
            let (v1, v2, s) = (state.v1(), state.v2(), state.s());
            let fields = [("u_i1", &state.u_i1), ("u_i2", &state.u_i2), ("u_e", &state.u_e), ("v1", &v1), ("v2", &v2), ("s", &s)];
            let title = format!("macro t={}", state.t);
            if let Err(e) = sink.vtk(&format!("macro_{step:05}.vtk"), &prob.grid, &title, &fields, false) {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let mut csv = Csv::new(&["t", "energy", "mean_ue", "max_s", "max_v1", "max_v2", "ionic_norm_1", "ionic_norm_2"]);
    for d in &run.diagnostics {
        csv.numbers(&[d.t, d.energy, d.mean_ue, d.max_s, d.max_v1, d.max_v2, d.ionic_norm[0], d.ionic_norm[1]]);
    }
    sink.csv("macro_diagnostics.csv", &csv)?;
    Ok(run)
}

fn macro_checks(cfg: &SimConfig, diags: &[MacroDiagnostics]) -> Vec<Check> {
    let worst = diags.iter().map(|d| d.mean_ue.abs()).fold(0.0, f64::max);
    let mut checks = vec![Check::new("macro mean u_e", worst <= 1e-10, format!("max |mean u_e| = {worst:.3e}"))];
    if dissipative(cfg) {
        let e: Vec<f64> = diags.iter().map(|d| d.energy).collect();
        checks.push(energy_check("macro energy", &e));
    }
    checks
}

fn energy_check(name: &str, e: &[f64]) -> Check {
    match first_increase(e) {
        None => Check::new(name, true, format!("non-increasing over {} records", e.len())),
        Some(i) => Check::new(name, false, format!("increases at record {i}: {} -> {}", e[i - 1], e[i])),
    }
}

fn macro_cmd(cfg: &SimConfig, out: &Path) -> Result<Outcome, CommandError> {
    require_membranes(cfg)?;
    let mut sink = Sink::new(out, cfg)?;
    let (prob, _) = macro_problem(cfg)?;
    let run = run_macro_with_output(cfg, &prob, &mut sink)?;
    sink.checks.extend(macro_checks(cfg, &run.diagnostics));
    sink.finish(Command::Macro)
}

/// Directory name for one period, e.g. `eps_8` for `eps = 1/8`.
pub fn eps_dir(eps: f64) -> String {
    format!("eps_{}", (1.0 / eps).round() as usize)
}

struct MicroResult {
    final_state: MicroState,
    sink: Sink,
}

fn run_micro_with_output(cfg: &SimConfig, eps: f64, dir: &Path, snapshots: bool) -> Result<MicroResult, CommandError> {
    let mut sink = Sink::new(dir, cfg)?;
    let prob = micro_problem(cfg, eps)?;
    let last = prob.num_steps();
    let mut io_error = None;
    let run = run_micro(&prob, MicroState::from_initial(&prob.grid, &cfg.initial), |step, state, _| {
        if io_error.is_none() && (snapshot_due(cfg, step, last) && (snapshots || step == last)) {
            let fields = [
                ("u_i1", &state.u_i1),
                ("u_i2", &state.u_i2),
                ("u_e", &state.u_e),
                ("v1", &state.v1),
                ("v2", &state.v2),
                ("s", &state.s),
            ];
            let title = format!("micro eps={eps} t={}", state.t);
            if let Err(e) = sink.vtk(&format!("micro_{step:05}.vtk"), &prob.grid, &title, &fields, true) {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let mut csv = Csv::new(&[
        "t",
        "energy",
        "scaled_energy",
        "norm_v1",
        "norm_v2",
        "norm_s",
        "norm_w1",
        "norm_w2",
        "h1_ui1",
        "h1_ui2",
        "h1_ue",
        "mean_ue",
        "trace_defect",
        "max_s",
        "max_v1",
        "max_v2",
    ]);
    for d in &run.diagnostics {
        let n = d.scaled_norms;
        csv.numbers(&[
            d.t,
            d.energy,
            d.scaled_energy(),
            n[0],
            n[1],
            n[2],
            n[3],
            n[4],
            d.h1[0],
            d.h1[1],
            d.h1[2],
            d.mean_ue,
            d.trace_defect,
            d.max_s,
            d.max_v1,
            d.max_v2,
        ]);
    }
    sink.csv("micro_diagnostics.csv", &csv)?;

    let tag = eps_dir(eps);
    let trace = run.diagnostics.iter().map(|d| d.trace_defect).fold(0.0, f64::max);
    let mean = run.diagnostics.iter().map(|d| d.mean_ue.abs()).fold(0.0, f64::max);
    let trace_tol = 10.0 * cfg.tolerances.solver;
    sink.checks.push(Check::new(format!("micro {tag} trace defect"), trace <= trace_tol, format!("max {trace:.3e} (limit {trace_tol:.1e})")));
    sink.checks.push(Check::new(format!("micro {tag} mean u_e"), mean <= 1e-10, format!("max |integral u_e| = {mean:.3e}")));
    if dissipative(cfg) {
        let e: Vec<f64> = run.diagnostics.iter().map(|d| d.energy).collect();
        sink.checks.push(energy_check(&format!("micro {tag} energy"), &e));
    }
    Ok(MicroResult { final_state: run.final_state, sink })
}

fn micro_cmd(cfg: &SimConfig, out: &Path) -> Result<Outcome, CommandError> {
    require_membranes(cfg)?;
    let mut sink = Sink::new(out, cfg)?;
    for &eps in &cfg.micro.eps {
        let r = run_micro_with_output(cfg, eps, &out.join(eps_dir(eps)), true)?;
        sink.files.extend(r.sink.files);
        sink.checks.extend(r.sink.checks);
    }
    sink.finish(Command::Micro)
}

/// Errors of one period against the shared macro run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub errors: ErrorRecord,
    pub gradients: GradientErrors,
}

/// Strictly decreasing as `eps` decreases; `rows` must be ordered by
/// decreasing `eps`.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn converge(cfg: &SimConfig, out: &Path) -> Result<Outcome, CommandError> {
    require_membranes(cfg)?;
    let mut sink = Sink::new(out, cfg)?;
    let (prob, _) = macro_problem(cfg)?;
    let macro_run = run_macro_with_output(cfg, &prob, &mut sink)?;
    sink.checks.extend(macro_checks(cfg, &macro_run.diagnostics));

    // Correctors at the micro cell resolution for the corrected gradient errors.
    let cell = build_reference_cell(&cfg.spec(), cfg.grid.n_per_cell)?;
    let homs = homogenize_all(cfg, &cell)?;
    let find = |p: Phase| homs.iter().find(|h| h.correctors.phase == p).map(|h| &h.correctors);
    let correctors = match (find(Phase::I1), find(Phase::I2), find(Phase::E)) {
        (Some(a), Some(b), Some(c)) => [a, b, c],
        _ => return Err(CommandError::Runtime("reference cell lacks a phase".into())),
    };

    let mut eps_list = cfg.micro.eps.clone();
    eps_list.sort_by(|a, b| b.total_cmp(a));
    let results: Vec<Result<(ConvergenceRow, Sink), CommandError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = eps_list
            .iter()
            .map(|&eps| {
                let (prob, macro_run, cell) = (&prob, &macro_run, &cell);
                scope.spawn(move || -> Result<(ConvergenceRow, Sink), CommandError> {
                    let r = run_micro_with_output(cfg, eps, &out.join(eps_dir(eps)), false)?;
                    let tiled = crate::geometry::tile_microstructure(&cfg.spec(), eps, cfg.grid.n_per_cell)?;
                    let errors = micro_macro_error(&tiled, &r.final_state, eps, &prob.grid, &macro_run.final_state)?;
                    let gradients =
                        gradient_errors(&tiled, &r.final_state, eps, &prob.grid, &macro_run.final_state, cell, correctors)?;
                    Ok((ConvergenceRow { errors, gradients }, r.sink))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("micro worker panicked")).collect()
    });

    let mut rows = Vec::new();
    for r in results {
        let (row, micro_sink) = r?;
        sink.files.extend(micro_sink.files);
        sink.checks.extend(micro_sink.checks);
        rows.push(row);
    }

    let mut csv = Csv::new(&["eps", "t", "e_v1", "e_v2", "e_s", "e_ui1", "e_ui2", "e_ue"]);
    let mut grad = Csv::new(&["eps", "t", "plain_ui1", "plain_ui2", "plain_ue", "corrected_ui1", "corrected_ui2", "corrected_ue"]);
    for row in &rows {
        let e = row.errors;
        csv.numbers(&[e.eps, e.t, e.e_v1, e.e_v2, e.e_s, e.e_ui1, e.e_ui2, e.e_ue]);
        let g = row.gradients;
        grad.numbers(&[g.eps, g.t, g.plain[0], g.plain[1], g.plain[2], g.corrected[0], g.corrected[1], g.corrected[2]]);
    }
    sink.csv("errors.csv", &csv)?;
    sink.csv("gradient_errors.csv", &grad)?;

    type Column = (&'static str, fn(&ErrorRecord) -> f64);
    let columns: [Column; 4] =
        [("e_v1", |e| e.e_v1), ("e_v2", |e| e.e_v2), ("e_s", |e| e.e_s), ("e_ue", |e| e.e_ue)];
    for (name, get) in columns {
        let values: Vec<f64> = rows.iter().map(|r| get(&r.errors)).collect();
        let listed: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
        sink.checks.push(Check::new(
            format!("converge {name} decreasing"),
            strictly_decreasing(&values),
            format!("[{}] for eps {:?}", listed.join(", "), eps_list),
        ));
    }
    sink.finish(Command::Converge)
}

fn check_ionic(cfg: &SimConfig, out: &Path) -> Result<Outcome, CommandError> {
    let mut sink = Sink::new(out, cfg)?;
    let [lo, hi] = cfg.checks.ionic_range;
    let report = check_assumptions(&cfg.ionic, (lo, hi), cfg.checks.ionic_samples);
    sink.text("ionic_report.txt", &report.to_string())?;
    for c in &report.checks {
        let constants: Vec<String> = c.constants.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
        let mut detail = constants.join(" ");
        if let Some(w) = c.witnesses.first() {
            detail.push_str(&format!(" witness {w:?}"));
        }
        sink.checks.push(Check::new(format!("ionic {}", c.name), c.passed, detail));
    }
    sink.finish(Command::CheckIonic)
}

fn check_unfolding(cfg: &SimConfig, out: &Path) -> Result<Outcome, CommandError> {
    let mut sink = Sink::new(out, cfg)?;
    let mut csv = Csv::new(&["eps", "resolution", "seed", "identity", "defect"]);
    let seed = cfg.checks.seed;
    for &eps in &cfg.checks.unfolding_eps {
        for &n in &cfg.checks.unfolding_resolutions {
            let r = verify_identities(eps, n, seed)?;
            for (name, d) in &r.defects {
                csv.row(&[eps.to_string(), n.to_string(), seed.to_string(), name.to_string(), d.to_string()]);
            }
            let worst = r.max_defect();
            sink.checks.push(Check::new(
                format!("unfolding {} n={n}", eps_dir(eps)),
                worst <= cfg.tolerances.identity,
                format!("max defect {worst:.3e}"),
            ));
        }
    }
    sink.csv("identities.csv", &csv)?;
    sink.finish(Command::CheckUnfolding)
}
