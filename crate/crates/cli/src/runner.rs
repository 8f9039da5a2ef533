//! Scenario assembly, clause evaluation and artifact persistence.
//!
//! `run` turns a validated config into verdicts: assemble the operator
//! L = -Delta + V and the steady state v, solve the linearized principal
//! eigenpair (lambda_1, phi_1) with sigma^2 = -lambda_1, audit the declared
//! coefficient norms, integrate the perturbed equation, project onto the
//! Kaplan functional W(t) = <phi_1, u - v>, and evaluate every requested
//! clause against the series: positivity and monotone growth of W, the
//! norm floors ||u - v||_2 >= W / ||phi_1||_2 and
//! ||u - v||_inf >= W / ||phi_1||_1, domination of the closed-form lower
//! envelopes, and finite-time blow-up. Each run directory receives the
//! resolved config, steady state, eigenpair, time series, envelope
//! samples, metadata and verdicts; `verify` rebuilds the verdicts from
//! those files alone and compares them to the recorded ones.
//!
//! Failure classes are kept apart deliberately. A hypothesis violation
//! (non-positive sigma^2, a contradicted norm declaration, a parabolic run
//! whose damping is not positive) and a failed clause conclusion are both
//! verdicts and map to exit code 2; schema problems and I/O failures are
//! operational and map to exit code 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use instab_core::io::{self, DichotomyRow, RunMetadata, Verdict};
use instab_core::{
    add_potential, assemble_dirichlet_laplacian, assemble_linearized, build_interval_grid,
    build_radial_grid, chen_li_exponential, check_projected_inequality, compare_to_envelope,
    envelope_bounded_inertia, envelope_integrable_ratio, envelope_positive_damping,
    envelope_variable_inertia, fit_rate, gnw_condition, hyperbolic_threshold, pc_threshold,
    power_steady_shooting, principal_eigenpair, run_scenario, validate_steady, BlowupThresholds,
    CoefficientProfile, EigenPair, EnvelopeBound, EquationKind, Error, Grid, KaplanSeries,
    Nonlinearity, OperatorMatrix, RunStatus, Scenario, SignMode, SteadyState, PotentialField,
    MIN_WINDOW_SAMPLES,
};

use crate::config::{
    validate, Clause, ClauseRequest, ConfigDocument, DeltaPlan, GridPlan, NonlinPlan,
    PotentialPlan, SchemaError, SteadyPlan, ValidatedConfig,
};

/// Front-end error split by exit class.
#[derive(Debug)]
pub enum CliError {
    /// Config or artifact shape problems: exit code 1.
    Schema(String),
    /// Anything from the core pipeline. Hypothesis violations exit with
    /// code 2 (a verdict), the rest with 1 (an accident).
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 1,
            CliError::Core(e) if e.is_hypothesis_violation() => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Schema(msg) => write!(f, "config error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Schema(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Discrete stationary data shared by every subcommand.
pub struct Assembly {
    pub grid: Grid,
    /// L = -Delta + V on interior nodes.
    pub op: OperatorMatrix,
    pub steady: SteadyState,
    pub eig: EigenPair,
    pub prof: CoefficientProfile,
}

fn make_nonlinearity(plan: NonlinPlan) -> Result<Nonlinearity, CliError> {
    Ok(match plan {
        NonlinPlan::Quadratic => Nonlinearity::quadratic(),
        NonlinPlan::QuadraticNeg => Nonlinearity::quadratic_neg(),
        NonlinPlan::PowerAbs(p) => Nonlinearity::power_abs(p)?,
        NonlinPlan::PowerNeg(p) => Nonlinearity::power_neg(p)?,
        NonlinPlan::Exponential => Nonlinearity::exponential(),
    })
}

/// Reads a two-column table and returns the values restricted to interior
/// nodes, accepting either a full-node or an interior-only table.
fn interior_table(grid: &Grid, path: &Path) -> Result<Vec<f64>, CliError> {
    let (xs, vs) = io::parse_steady(&io::read_text(path)?)?;
    let tol = 1e-9 * grid.spacing.max(1.0);
    let check = |xs: &[f64], expect: &[f64]| -> bool {
        xs.len() == expect.len()
            && xs.iter().zip(expect).all(|(x, e)| (x - e).abs() <= tol)
    };
    if check(&xs, &grid.nodes()) {
        Ok(grid.interior_range().map(|i| vs[i]).collect())
    } else if check(&xs, &grid.interior_nodes()) {
        Ok(vs)
    } else {
        Err(CliError::Schema(format!(
            "{}: table nodes do not match the grid ({} rows for {} grid nodes)",
            path.display(),
            xs.len(),
            grid.node_count
        )))
    }
}

/// Builds grid, operator, steady state, eigenpair and coefficient profile.
/// `base` anchors relative table paths; `tol_scale` multiplies the
/// eigensolver tolerance.
pub fn assemble(cfg: &ValidatedConfig, base: &Path, tol_scale: f64) -> Result<Assembly, CliError> {
    let grid = match cfg.grid {
        GridPlan::Interval { x_lo, x_hi, nodes } => build_interval_grid(x_lo, x_hi, nodes)?,
        GridPlan::Radial {
            dimension,
            radius,
            nodes,
        } => build_radial_grid(dimension, radius, nodes)?,
    };
    let mut op = assemble_dirichlet_laplacian(&grid)?;
    match &cfg.potential {
        PotentialPlan::None => {}
        PotentialPlan::Constant(v) => {
            op = add_potential(&op, &PotentialField::constant(&grid, *v)?)?;
        }
        PotentialPlan::Table(file) => {
            let values = interior_table(&grid, &resolve(base, file))?;
            op = add_potential(&op, &PotentialField::from_values(values)?)?;
        }
    }
    let nonlin = make_nonlinearity(cfg.nonlin)?;
    let steady = match &cfg.steady {
        SteadyPlan::Zero => SteadyState::zero(&grid, nonlin)?,
        SteadyPlan::ChenLi { lambda } => chen_li_exponential(&grid, *lambda)?,
        SteadyPlan::Shooting { p, v_center } => {
            power_steady_shooting(&grid, *p, *v_center, 1e-10)?
        }
        SteadyPlan::Table(file) => {
            let path = resolve(base, file);
            let (xs, vs) = io::parse_steady(&io::read_text(&path)?)?;
            let tol = 1e-9 * grid.spacing.max(1.0);
            let nodes = grid.nodes();
            if xs.len() != nodes.len()
                || xs.iter().zip(&nodes).any(|(x, e)| (x - e).abs() > tol)
            {
                return Err(CliError::Schema(format!(
                    "{}: steady table nodes do not match the grid",
                    path.display()
                )));
            }
            SteadyState::from_samples(&grid, vs, nonlin)?
        }
    };
    let linearized = assemble_linearized(&op, &steady)?;
    let eig = principal_eigenpair(&linearized, None, 1e-10 * tol_scale)?;
    let a_plan = cfg.a_plan;
    let b_plan = cfg.b_plan;
    let prof = CoefficientProfile::new(
        format!("a(t) = {}; b(t) = {}", a_plan.describe(), b_plan.describe()),
        move |t| a_plan.eval(t),
        move |t| b_plan.eval(t),
        cfg.decl.clone(),
    )?;
    Ok(Assembly {
        grid,
        op,
        steady,
        eig,
        prof,
    })
}

/// Assembly plus the run-ready scenario and resolved initial rate.
pub struct Built {
    pub grid: Grid,
    pub eig: EigenPair,
    pub scenario: Scenario,
    pub delta: f64,
}

fn scenario_label(out_dir: &Path) -> String {
    out_dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string())
}

fn build_scenario(
    cfg: &ValidatedConfig,
    base: &Path,
    out_dir: &Path,
    tol_scale: f64,
) -> Result<Built, CliError> {
    let asm = assemble(cfg, base, tol_scale)?;
    if !(asm.eig.sigma_sq > 0.0) {
        return Err(CliError::Core(Error::HypothesisViolated(format!(
            "the steady state is not linearly unstable: lambda_1 = {} gives sigma^2 = {}",
            asm.eig.lambda1, asm.eig.sigma_sq
        ))));
    }
    // Audit every declared norm against dense samples of the handles; a
    // contradicted parabolicity declaration is reported in the theorem's
    // own terms.
    asm.prof.certify(cfg.t_max, 4096).map_err(|e| match e {
        Error::HypothesisViolated(msg) if msg.contains("declared positive") => {
            CliError::Core(Error::HypothesisViolated(format!(
                "parabolicity violated: {msg}"
            )))
        }
        other => CliError::Core(other),
    })?;
    let delta = match cfg.delta {
        DeltaPlan::Absolute(d) => d,
        DeltaPlan::Factor(f) => {
            // W(0) = eps for the normalized eigenfunction, so the certified
            // threshold rate is slope * eps and the factor scales it.
            let thr = hyperbolic_threshold(asm.eig.sigma_sq, &asm.prof, cfg.eps, 0.0)?;
            f * thr.required_rate
        }
    };
    let scenario = Scenario {
        label: scenario_label(out_dir),
        operator: asm.op,
        steady: asm.steady,
        profile: asm.prof,
        kind: cfg.kind,
        eps: cfg.eps,
        delta,
        concave: cfg.concave,
        t_max: cfg.t_max,
        cadence: cfg.cadence,
        thresholds: BlowupThresholds::default(),
        cfl: cfg.cfl,
        require_threshold: cfg.kind == EquationKind::Hyperbolic && !cfg.clauses.is_empty(),
    };
    Ok(Built {
        grid: asm.grid,
        eig: asm.eig,
        scenario,
        delta,
    })
}

// ---------------------------------------------------------------------------
// Clause evaluation
// ---------------------------------------------------------------------------

struct EvalData<'a> {
    label: &'a str,
    kind: EquationKind,
    prof: &'a CoefficientProfile,
    sigma_sq: f64,
    phi_l2: f64,
    phi_l1: f64,
    ks: &'a KaplanSeries,
    l2: &'a [f64],
    sup: &'a [f64],
    /// Start of the blow-up bracket, or +inf: envelope comparisons never
    /// use post-threshold samples.
    cut: f64,
    blowup: Option<(f64, (f64, f64))>,
    window: f64,
    ineq_tol: f64,
    rel_slack: f64,
    cadence: f64,
}

impl EvalData<'_> {
    /// The window audit needs at least one full window and the pinned
    /// minimum number of samples per window.
    fn audit_feasible(&self) -> bool {
        let t_last = *self.ks.times.last().unwrap_or(&0.0);
        t_last >= self.window && self.cadence <= self.window / MIN_WINDOW_SAMPLES as f64
    }

    fn fit_range(&self) -> (f64, f64) {
        let t_end = self.ks.times.last().copied().unwrap_or(0.0).min(self.cut);
        (0.25 * t_end, 0.75 * t_end)
    }
}

fn envelope_for(data: &EvalData<'_>, clause: Clause) -> Result<EnvelopeBound, CliError> {
    let y0 = data.ks.w[0];
    let yp0 = data.ks.wprime[0];
    let env = match clause {
        Clause::T1b => envelope_variable_inertia(data.sigma_sq, data.prof, y0, yp0)?,
        Clause::T1c => envelope_bounded_inertia(data.sigma_sq, data.prof, y0, yp0)?,
        Clause::T1d => envelope_integrable_ratio(data.sigma_sq, data.prof, y0, yp0)?,
        Clause::T2b => envelope_positive_damping(data.sigma_sq, data.prof, y0)?,
        other => {
            return Err(CliError::Schema(format!(
                "clause {other:?} carries no envelope"
            )))
        }
    };
    Ok(env)
}

fn evaluate_clause(data: &EvalData<'_>, req: &ClauseRequest) -> Result<Verdict, CliError> {
    let mut margins = BTreeMap::new();
    let mut rates = BTreeMap::new();
    let mut envelope_params = BTreeMap::new();
    let ks = data.ks;
    let pass = match req.clause {
        Clause::T1a | Clause::T1Concave => {
            let mut pass = true;
            // W' stays positive, so W is strictly increasing from W(0) > 0.
            let min_wp = ks.wprime.iter().copied().fold(f64::INFINITY, f64::min);
            margins.insert("min_wprime".to_string(), min_wp);
            pass &= min_wp > 0.0;
            // ||u - v||_2 >= W / ||phi_1||_2 > W(0) / ||phi_1||_2: the L2
            // distance never returns to its initial floor.
            let floor = ks.w[0] / data.phi_l2;
            let mut floor_margin = f64::INFINITY;
            let mut floor_ok = data.l2[0] >= floor * (1.0 - 1e-12);
            for &v in &data.l2[1..] {
                floor_margin = floor_margin.min((v - floor) / floor);
                floor_ok &= v > floor;
            }
            margins.insert("l2_floor_margin".to_string(), floor_margin);
            pass &= floor_ok;
            pass &= audit_inequality(data, &mut margins)?;
            record_fit(data, &mut rates);
            pass
        }
        Clause::T2a => {
            let mut pass = true;
            // W is monotone under positive damping, so it never returns to
            // W(0).
            let w0 = ks.w[0];
            let mut w_margin = f64::INFINITY;
            let mut w_ok = true;
            for &v in &ks.w[1..] {
                w_margin = w_margin.min((v - w0) / w0);
                w_ok &= v > w0;
            }
            margins.insert("w_floor_margin".to_string(), w_margin);
            pass &= w_ok;
            // ||u - v||_inf ||phi_1||_1 >= <phi_1, u - v> = W pointwise.
            let mut chain = f64::INFINITY;
            for (s, w) in data.sup.iter().zip(&ks.w) {
                let denom = w.abs().max(f64::MIN_POSITIVE);
                chain = chain.min((s * data.phi_l1 - w) / denom);
            }
            margins.insert("sup_floor_margin".to_string(), chain);
            pass &= chain >= -1e-9;
            pass &= audit_inequality(data, &mut margins)?;
            record_fit(data, &mut rates);
            pass
        }
        Clause::T1b | Clause::T1c | Clause::T1d | Clause::T2b => {
            let env = envelope_for(data, req.clause)?;
            let check = compare_to_envelope(ks, &env, data.rel_slack, data.cut);
            margins.insert("envelope_margin".to_string(), check.min_margin);
            envelope_params = env.params();
            record_fit(data, &mut rates);
            check.pass
        }
        Clause::T1Blow | Clause::T2c => match data.blowup {
            Some((time, bracket)) => {
                rates.insert("blowup_time".to_string(), time);
                rates.insert("bracket_lo".to_string(), bracket.0);
                rates.insert("bracket_hi".to_string(), bracket.1);
                time.is_finite()
            }
            None => false,
        },
    };
    Ok(Verdict {
        scenario: data.label.to_string(),
        theorem_clause: req.id.clone(),
        pass,
        margins,
        rates,
        envelope_params,
    })
}

/// Window-averaged integrated-by-parts inequality audit, skipped when the
/// sampling cannot support a single window.
fn audit_inequality(
    data: &EvalData<'_>,
    margins: &mut BTreeMap<String, f64>,
) -> Result<bool, CliError> {
    if !data.audit_feasible() {
        return Ok(true);
    }
    let report = check_projected_inequality(
        data.ks,
        data.prof,
        data.sigma_sq,
        data.window,
        data.ineq_tol,
        data.kind,
    )?;
    margins.insert("kaplan_inequality".to_string(), report.worst_margin);
    Ok(report.pass)
}

fn record_fit(data: &EvalData<'_>, rates: &mut BTreeMap<String, f64>) {
    let (t_lo, t_hi) = data.fit_range();
    if let Ok(mu) = fit_rate(data.ks, t_lo, t_hi) {
        rates.insert("fitted_rate".to_string(), mu);
    }
}

fn evaluate_all(data: &EvalData<'_>, reqs: &[ClauseRequest]) -> Result<Vec<Verdict>, CliError> {
    reqs.iter().map(|r| evaluate_clause(data, r)).collect()
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

/// Outcome of one completed run directory.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub scenario: String,
    pub status: String,
    pub blowup_time: Option<f64>,
    pub verdicts: Vec<Verdict>,
    pub all_pass: bool,
}

/// Integrates the scenario, evaluates every requested clause and persists
/// the artifact set into `out_dir`.
pub fn run(
    cfg: &ValidatedConfig,
    base: &Path,
    out_dir: &Path,
    tol_scale: f64,
) -> Result<RunSummary, CliError> {
    let built = build_scenario(cfg, base, out_dir, tol_scale)?;
    let record = run_scenario(&built.scenario, &built.eig)?;
    let ks = KaplanSeries {
        times: record.times.clone(),
        w: record.w_proj.clone(),
        wprime: record.wprime_proj.clone(),
        sign_mode: if cfg.concave {
            SignMode::ConcaveFlipped
        } else {
            SignMode::Standard
        },
    };
    let (blowup_time, blowup_bracket) = match record.status {
        RunStatus::Blowup { time, bracket } => (Some(time), Some(bracket)),
        _ => (None, None),
    };
    let label = scenario_label(out_dir);
    let data = EvalData {
        label: &label,
        kind: cfg.kind,
        prof: &built.scenario.profile,
        sigma_sq: built.eig.sigma_sq,
        phi_l2: built.grid.l2_norm_interior(&built.eig.phi1),
        phi_l1: built.grid.l1_norm_interior(&built.eig.phi1),
        ks: &ks,
        l2: &record.l2,
        sup: &record.sup,
        cut: blowup_bracket.map_or(f64::INFINITY, |b| b.0),
        blowup: blowup_time.map(|t| (t, blowup_bracket.unwrap())),
        window: cfg.window,
        ineq_tol: cfg.ineq_tol * tol_scale,
        rel_slack: cfg.rel_slack * tol_scale,
        cadence: cfg.cadence,
    };
    let verdicts = evaluate_all(&data, &cfg.clauses)?;

    std::fs::create_dir_all(out_dir)?;
    let mut doc = cfg.doc.clone();
    doc.output.directory = out_dir.display().to_string();
    io::write_text(
        out_dir.join("config.toml"),
        &crate::config::serialize_document(&doc)?,
    )?;
    io::write_text(out_dir.join("steady.csv"), &io::steady_csv(&built.scenario.steady))?;
    io::write_text(
        out_dir.join("eigenpair.csv"),
        &io::eigenpair_csv(&built.grid.interior_nodes(), &built.eig.phi1),
    )?;
    io::write_text(out_dir.join("timeseries.csv"), &io::timeseries_csv(&record))?;
    let mut env_list: Vec<EnvelopeBound> = Vec::new();
    for req in &cfg.clauses {
        if matches!(
            req.clause,
            Clause::T1b | Clause::T1c | Clause::T1d | Clause::T2b
        ) {
            let env = envelope_for(&data, req.clause)?;
            if env_list.iter().all(|e| e.kind.label() != env.kind.label()) {
                env_list.push(env);
            }
        }
    }
    if !env_list.is_empty() {
        let refs: Vec<&EnvelopeBound> = env_list.iter().collect();
        io::write_text(
            out_dir.join("envelopes.csv"),
            &io::envelopes_csv(&record.times, &refs),
        )?;
    }
    let meta = RunMetadata {
        scenario: label.clone(),
        equation: cfg.kind.label().to_string(),
        nodes: built.grid.node_count,
        spacing: built.grid.spacing,
        lambda1: built.eig.lambda1,
        sigma_sq: built.eig.sigma_sq,
        eigen_residual: built.eig.residual,
        eps: cfg.eps,
        delta: built.delta,
        concave: cfg.concave,
        t_max: cfg.t_max,
        cadence: cfg.cadence,
        cfl: cfg.cfl,
        status: io::status_label(&record.status).to_string(),
        blowup_time,
        blowup_bracket,
        steps: record.stats.steps,
        min_dt: record.stats.min_dt,
        max_dt: record.stats.max_dt,
        fingerprint: format!("{:016x}", record.fingerprint),
    };
    io::write_text(out_dir.join("metadata.json"), &meta.to_json()?)?;
    io::write_text(out_dir.join("verdicts.json"), &io::verdicts_to_json(&verdicts)?)?;

    let all_pass = verdicts.iter().all(|v| v.pass);
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        scenario: label,
        status: meta.status,
        blowup_time,
        verdicts,
        all_pass,
    })
}

// ---------------------------------------------------------------------------
// Eig and steady front ends
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EigSummary {
    pub lambda1: f64,
    pub sigma_sq: f64,
    pub residual: f64,
    pub iterations: usize,
    pub csv_path: PathBuf,
}

pub fn eig_command(
    cfg: &ValidatedConfig,
    base: &Path,
    out_dir: &Path,
    tol_scale: f64,
) -> Result<EigSummary, CliError> {
    let asm = assemble(cfg, base, tol_scale)?;
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("eigenpair.csv");
    io::write_text(
        &csv_path,
        &io::eigenpair_csv(&asm.grid.interior_nodes(), &asm.eig.phi1),
    )?;
    Ok(EigSummary {
        lambda1: asm.eig.lambda1,
        sigma_sq: asm.eig.sigma_sq,
        residual: asm.eig.residual,
        iterations: asm.eig.iterations,
        csv_path,
    })
}

#[derive(Debug, Clone)]
pub struct SteadySummary {
    pub residual_max: f64,
    pub boundary_value: f64,
    pub nodes_checked: usize,
    pub csv_path: PathBuf,
}

pub fn steady_command(
    cfg: &ValidatedConfig,
    base: &Path,
    out_dir: &Path,
) -> Result<SteadySummary, CliError> {
    let asm = assemble(cfg, base, 1.0)?;
    let report = validate_steady(&asm.op, &asm.steady)?;
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("steady.csv");
    io::write_text(&csv_path, &io::steady_csv(&asm.steady))?;
    Ok(SteadySummary {
        residual_max: report.residual_max,
        boundary_value: report.boundary_value,
        nodes_checked: report.nodes_checked,
        csv_path,
    })
}

// ---------------------------------------------------------------------------
// Verify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct VerifyReport {
    /// Recomputed verdicts, serialized for display.
    pub json: String,
    pub verdicts: Vec<Verdict>,
    /// Recomputation agrees with the recorded verdicts.
    pub matched: bool,
    pub mismatches: Vec<String>,
    /// Every recorded verdict passed.
    pub recorded_pass: bool,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn compare_maps(
    what: &str,
    clause: &str,
    got: &BTreeMap<String, f64>,
    want: &BTreeMap<String, f64>,
    mismatches: &mut Vec<String>,
) {
    if got.keys().ne(want.keys()) {
        mismatches.push(format!(
            "{clause}: {what} keys differ (recomputed {:?}, recorded {:?})",
            got.keys().collect::<Vec<_>>(),
            want.keys().collect::<Vec<_>>()
        ));
        return;
    }
    for (k, g) in got {
        let w = want[k];
        if !close(*g, w) {
            mismatches.push(format!(
                "{clause}: {what} {k} differs (recomputed {g}, recorded {w})"
            ));
        }
    }
}

/// Rebuilds the stationary data from `dir/config.toml`, replays the clause
/// evaluation on the stored time series, and compares against the stored
/// verdicts and eigen/steady artifacts.
pub fn verify(dir: &Path, tol_scale: f64) -> Result<VerifyReport, CliError> {
    let cfg = crate::config::parse_config(&io::read_text(dir.join("config.toml"))?)?;
    let meta = RunMetadata::from_json(&io::read_text(dir.join("metadata.json"))?)?;
    let rows = io::parse_timeseries(&io::read_text(dir.join("timeseries.csv"))?)?;
    let recorded = io::verdicts_from_json(&io::read_text(dir.join("verdicts.json"))?)?;
    if rows.is_empty() {
        return Err(CliError::Schema("timeseries.csv carries no samples".into()));
    }

    let asm = assemble(&cfg, dir, tol_scale)?;
    let mut mismatches = Vec::new();
    let steady_disk = io::read_text(dir.join("steady.csv"))?;
    if steady_disk != io::steady_csv(&asm.steady) {
        mismatches.push("steady.csv does not match the rebuilt steady state".to_string());
    }
    let eig_disk = io::read_text(dir.join("eigenpair.csv"))?;
    if eig_disk != io::eigenpair_csv(&asm.grid.interior_nodes(), &asm.eig.phi1) {
        mismatches.push("eigenpair.csv does not match the rebuilt eigenpair".to_string());
    }
    if !close(meta.lambda1, asm.eig.lambda1) || !close(meta.sigma_sq, asm.eig.sigma_sq) {
        mismatches.push(format!(
            "metadata eigenvalue differs (recomputed lambda_1 = {}, recorded {})",
            asm.eig.lambda1, meta.lambda1
        ));
    }

    let ks = KaplanSeries {
        times: rows.iter().map(|r| r.t).collect(),
        w: rows.iter().map(|r| r.w).collect(),
        wprime: rows.iter().map(|r| r.wprime).collect(),
        sign_mode: if cfg.concave {
            SignMode::ConcaveFlipped
        } else {
            SignMode::Standard
        },
    };
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_norm).collect();
    let sup: Vec<f64> = rows.iter().map(|r| r.sup_norm).collect();
    let blowup = match (meta.status.as_str(), meta.blowup_time, meta.blowup_bracket) {
        ("blowup", Some(t), Some(b)) => Some((t, b)),
        ("blowup", _, _) => {
            return Err(CliError::Schema(
                "metadata declares blow-up but carries no time bracket".into(),
            ))
        }
        _ => None,
    };
    let data = EvalData {
        label: &meta.scenario,
        kind: cfg.kind,
        prof: &asm.prof,
        sigma_sq: asm.eig.sigma_sq,
        phi_l2: asm.grid.l2_norm_interior(&asm.eig.phi1),
        phi_l1: asm.grid.l1_norm_interior(&asm.eig.phi1),
        ks: &ks,
        l2: &l2,
        sup: &sup,
        cut: blowup.map_or(f64::INFINITY, |(_, b)| b.0),
        blowup,
        window: cfg.window,
        ineq_tol: cfg.ineq_tol * tol_scale,
        rel_slack: cfg.rel_slack * tol_scale,
        cadence: cfg.cadence,
    };
    let verdicts = evaluate_all(&data, &cfg.clauses)?;

    if verdicts.len() != recorded.len() {
        mismatches.push(format!(
            "verdict count differs (recomputed {}, recorded {})",
            verdicts.len(),
            recorded.len()
        ));
    } else {
        for (got, want) in verdicts.iter().zip(&recorded) {
            if got.theorem_clause != want.theorem_clause {
                mismatches.push(format!(
                    "clause order differs (recomputed {}, recorded {})",
                    got.theorem_clause, want.theorem_clause
                ));
                continue;
            }
            let clause = &got.theorem_clause;
            if got.pass != want.pass {
                mismatches.push(format!(
                    "{clause}: pass differs (recomputed {}, recorded {})",
                    got.pass, want.pass
                ));
            }
            compare_maps("margin", clause, &got.margins, &want.margins, &mut mismatches);
            compare_maps("rate", clause, &got.rates, &want.rates, &mut mismatches);
            compare_maps(
                "envelope parameter",
                clause,
                &got.envelope_params,
                &want.envelope_params,
                &mut mismatches,
            );
        }
    }

    let json = io::verdicts_to_json(&verdicts)?;
    let recorded_pass = recorded.iter().all(|v| v.pass);
    Ok(VerifyReport {
        json,
        verdicts,
        matched: mismatches.is_empty(),
        mismatches,
        recorded_pass,
    })
}

// ---------------------------------------------------------------------------
// Batch
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    /// Dotted path into the config document, e.g. "coefficients.b.alpha".
    path: String,
    values: Vec<toml::Value>,
}

fn set_dotted(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Schema(format!("sweep: malformed path {path:?}")));
    }
    let mut cur = root;
    for part in &parts[..parts.len() - 1] {
        let table = cur.as_table_mut().ok_or_else(|| {
            CliError::Schema(format!("sweep: {part:?} in {path:?} is not a table"))
        })?;
        cur = table.get_mut(*part).ok_or_else(|| {
            CliError::Schema(format!(
                "sweep: path {path:?} does not exist in the base config"
            ))
        })?;
    }
    let table = cur.as_table_mut().ok_or_else(|| {
        CliError::Schema(format!("sweep: parent of {:?} is not a table", parts.last().unwrap()))
    })?;
    table.insert(parts.last().unwrap().to_string(), value);
    Ok(())
}

fn display_value(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One row of the sweep summary.
#[derive(Debug, Clone)]
pub struct BatchEntry {
    pub index: usize,
    pub value: String,
    pub status: String,
    pub blowup_time: Option<f64>,
    pub clauses_passed: usize,
    pub clauses_total: usize,
    pub all_pass: bool,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub entries: Vec<BatchEntry>,
    pub summary_path: PathBuf,
    /// Every entry certified all of its clauses.
    pub all_pass: bool,
}

/// Runs a one-parameter sweep: the `[sweep]` table names a dotted config
/// path and the values to substitute; each instance runs in its own
/// directory `run_NNN` under `out_root` with no shared mutable files, so
/// any worker count gives the same artifacts.
pub fn batch(
    text: &str,
    base: &Path,
    out_root: &Path,
    workers: usize,
    tol_scale: f64,
) -> Result<BatchOutcome, CliError> {
    let mut root: toml::Value =
        toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    let sweep_val = root
        .as_table_mut()
        .ok_or_else(|| CliError::Schema("config root must be a table".into()))?
        .remove("sweep")
        .ok_or_else(|| CliError::Schema("batch config needs a [sweep] table".into()))?;
    let sweep: SweepSpec = sweep_val
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Schema(format!("sweep: {e}")))?;
    if sweep.values.is_empty() {
        return Err(CliError::Schema("sweep: values must not be empty".into()));
    }

    // Validate every instance up front; a malformed sweep aborts before
    // any run starts.
    let mut jobs: Vec<(usize, String, ValidatedConfig)> = Vec::new();
    for (i, v) in sweep.values.iter().enumerate() {
        let mut doc_val = root.clone();
        set_dotted(&mut doc_val, &sweep.path, v.clone())?;
        let doc: ConfigDocument = doc_val
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Schema(format!("value {i}: {e}")))?;
        let cfg = validate(doc)
            .map_err(|e| CliError::Schema(format!("value {i} ({}): {}", display_value(v), e.0)))?;
        jobs.push((i, display_value(v), cfg));
    }

    std::fs::create_dir_all(out_root)?;
    let n_workers = workers.max(1).min(jobs.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<BatchEntry, CliError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let (index, value, cfg) = &jobs[i];
                let out_dir = out_root.join(format!("run_{index:03}"));
                let outcome = match run(cfg, base, &out_dir, tol_scale) {
                    Ok(s) => Ok(BatchEntry {
                        index: *index,
                        value: value.clone(),
                        status: s.status,
                        blowup_time: s.blowup_time,
                        clauses_passed: s.verdicts.iter().filter(|v| v.pass).count(),
                        clauses_total: s.verdicts.len(),
                        all_pass: s.all_pass,
                    }),
                    // A hypothesis violation is a verdict for that sweep
                    // point, not a reason to abort the sweep.
                    Err(CliError::Core(e)) if e.is_hypothesis_violation() => Ok(BatchEntry {
                        index: *index,
                        value: value.clone(),
                        status: "hypothesis-violated".to_string(),
                        blowup_time: None,
                        clauses_passed: 0,
                        clauses_total: cfg.clauses.len(),
                        all_pass: false,
                    }),
                    Err(e) => Err(e),
                };
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let mut entries = Vec::with_capacity(jobs.len());
    for slot in slots.into_inner().unwrap() {
        match slot {
            Some(Ok(entry)) => entries.push(entry),
            Some(Err(e)) => return Err(e),
            None => return Err(CliError::Schema("a sweep worker vanished".into())),
        }
    }
    entries.sort_by_key(|e| e.index);

    let mut csv =
        String::from("index,value,status,blowup_time,clauses_passed,clauses_total,all_pass\n");
    for e in &entries {
        let bt = e
            .blowup_time
            .map(|t| t.to_string())
            .unwrap_or_else(|| "none".to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            e.index, e.value, e.status, bt, e.clauses_passed, e.clauses_total, e.all_pass
        );
    }
    let summary_path = out_root.join("summary.csv");
    io::write_text(&summary_path, &csv)?;
    let all_pass = entries.iter().all(|e| e.all_pass);
    Ok(BatchOutcome {
        entries,
        summary_path,
        all_pass,
    })
}

// ---------------------------------------------------------------------------
// Dichotomy table
// ---------------------------------------------------------------------------

/// Tabulates the supercritical instability dichotomy for dimensions
/// `n_lo..=n_hi`: each row samples an exponent above the critical one and
/// records whether it falls below the joint-condition threshold p_c(n)
/// (every radial steady state unstable) or above it (stable steady states
/// exist). Returns the number of rows written.
pub fn dichotomy(
    n_lo: usize,
    n_hi: usize,
    samples: usize,
    out: &Path,
) -> Result<usize, CliError> {
    if n_lo < 3 {
        return Err(CliError::Schema(format!(
            "dichotomy: supercritical exponents need dimension n >= 3, got n_lo = {n_lo}"
        )));
    }
    if n_hi < n_lo {
        return Err(CliError::Schema(format!(
            "dichotomy: n_hi = {n_hi} is below n_lo = {n_lo}"
        )));
    }
    if samples == 0 {
        return Err(CliError::Schema("dichotomy: samples must be positive".into()));
    }
    let mut rows = Vec::with_capacity((n_hi - n_lo + 1) * samples);
    for n in n_lo..=n_hi {
        let p_c = pc_threshold(n)?;
        let critical = (n as f64 + 2.0) / (n as f64 - 2.0);
        let p_lo = critical * (1.0 + 1e-6);
        let p_hi = if p_c.is_finite() { 2.0 * p_c } else { critical + 4.0 };
        for k in 0..samples {
            let frac = if samples == 1 {
                0.5
            } else {
                k as f64 / (samples - 1) as f64
            };
            let p = p_lo + (p_hi - p_lo) * frac;
            rows.push(DichotomyRow {
                n,
                p,
                gnw: gnw_condition(n, p)?,
                p_c,
            });
        }
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    io::write_text(out, &io::dichotomy_csv(&rows))?;
    Ok(rows.len())
}
