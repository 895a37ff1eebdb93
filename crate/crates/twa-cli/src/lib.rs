//! Scenario-driven experiment runner: JSON configuration, method dispatch
//! (phase-space flow, operator ODE, short-time, Kraus stepping, oracle
//! check), fixed-schema CSV emission, and a hash-stamped JSON manifest per
//! run.
//!
//! Everything is deterministic: there is no RNG anywhere, summations run in
//! fixed index order, and parallelism only maps independent cells, so a
//! given config produces bit-identical CSV output at any thread count.

pub mod erratum;

use analysis::{AnalysisError, TrialFamily};
use classical::ClassicalError;
use fock::{state_prep, CMat, CVec, FockError, MonomialParams, StateKind, C64};
use generator::GeneratorError;
use phasespace::{KernelCache, PhaseGrid, PhaseSpaceError, WignerField, DEFAULT_CACHE_BUDGET};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str =
    "t,lambda_min,lambda_max,negative_sum,trace,purity,fidelity,self_correlation,minmax_bound";

/// Grid default: points chosen so the node spacing is at most 0.1.
pub const DEFAULT_GRID_SPACING: f64 = 0.1;
/// Grid default: margin added to the initial-state centroid radius.
pub const DEFAULT_GRID_MARGIN: f64 = 4.0;

// ---------------------------------------------------------------------------
// errors and exit codes

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// Stable process exit code: 2 validation, 3 divergence, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<PhaseSpaceError> for CliError {
    fn from(e: PhaseSpaceError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ClassicalError> for CliError {
    fn from(e: ClassicalError) -> Self {
        match e {
            ClassicalError::Divergence { .. } | ClassicalError::FieldDivergence { .. } => {
                CliError::Divergence(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::TraceDrift { .. } => CliError::Divergence(e.to_string()),
            GeneratorError::Classical(c) => ClassicalError::from(c).into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::ImaginaryResidue { .. } | AnalysisError::Eigen(_) => {
                CliError::Divergence(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianCfg {
    pub m: u32,
    pub n: u32,
    pub coupling: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StateKindCfg {
    Fock,
    Coherent,
    LowExcited,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateCfg {
    pub kind: StateKindCfg,
    #[serde(default)]
    pub parameters: StateParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub r_max: f64,
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeCfg {
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PhaseSpace,
    OperatorOde,
    ShortTime,
    Kraus,
    OracleCheck,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    Spectrum,
    Minmax,
    Fidelity,
    SelfCorrelation,
    Purity,
    KrausCompleteness,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub hamiltonian: HamiltonianCfg,
    pub initial_state: InitialStateCfg,
    pub dim: usize,
    #[serde(default)]
    pub grid: Option<GridCfg>,
    pub time: TimeCfg,
    pub method: Method,
    #[serde(default)]
    pub analyses: Vec<AnalysisKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub dump_fields: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// A validated configuration with every default made explicit, plus the
/// derived objects every method needs.
pub struct Resolved {
    pub config: ScenarioConfig,
    pub params: MonomialParams,
    pub psi0: CVec,
    pub alpha0: C64,
    pub grid: PhaseGrid,
    pub times: Vec<f64>,
}

pub fn resolve(mut config: ScenarioConfig) -> Result<Resolved, CliError> {
    let h = &config.hamiltonian;
    let params = MonomialParams::new(h.m, h.n, h.coupling)?;

    let sp = &mut config.initial_state.parameters;
    let (kind, alpha0) = match config.initial_state.kind {
        StateKindCfg::Fock => {
            let n = sp
                .n
                .ok_or_else(|| CliError::Validation("fock state needs parameters.n".into()))?;
            if sp.re.is_some() || sp.im.is_some() {
                return Err(CliError::Validation(
                    "fock state takes parameters.n only".into(),
                ));
            }
            (StateKind::Fock(n), C64::new((n as f64).sqrt(), 0.0))
        }
        StateKindCfg::Coherent | StateKindCfg::LowExcited => {
            if sp.n.is_some() {
                return Err(CliError::Validation(
                    "coherent/low_excited states take parameters.re/.im".into(),
                ));
            }
            sp.re.get_or_insert(0.0);
            sp.im.get_or_insert(0.0);
            let a = C64::new(sp.re.unwrap(), sp.im.unwrap());
            match config.initial_state.kind {
                StateKindCfg::Coherent => (StateKind::Coherent(a), a),
                _ => (StateKind::LowExcited(a), a),
            }
        }
    };
    let psi0 = state_prep(&kind, config.dim)?;

    if config.time.samples == 0 {
        return Err(CliError::Validation("time.samples must be >= 1".into()));
    }
    if !(config.time.t_max >= 0.0) {
        return Err(CliError::Validation("time.t_max must be >= 0".into()));
    }
    let times: Vec<f64> = if config.time.samples == 1 {
        vec![config.time.t_max]
    } else {
        let k = config.time.samples - 1;
        (0..=k).map(|i| config.time.t_max * i as f64 / k as f64).collect()
    };

    // grid defaults: centroid radius + margin, spacing at most 0.1
    let gcfg = config.grid.clone().unwrap_or_else(|| {
        let r_max = alpha0.norm() + DEFAULT_GRID_MARGIN;
        GridCfg {
            r_max,
            points_per_axis: (2.0 * r_max / DEFAULT_GRID_SPACING).ceil() as usize,
        }
    });
    let grid = PhaseGrid::new(gcfg.r_max, gcfg.points_per_axis)?;
    config.grid = Some(gcfg);

    if config.method != Method::PhaseSpace
        && generator::generator_for(&params, config.dim).is_none()
    {
        return Err(CliError::Validation(format!(
            "no operator-route generator for (m, n) = ({}, {}) at dim {}; \
             supported: (1,1), (2,2), (1,2)",
            h.m, h.n, config.dim
        )));
    }

    Ok(Resolved { config, params, psi0, alpha0, grid, times })
}

// ---------------------------------------------------------------------------
// run records

/// One CSV row; `None` fields are emitted empty (column order is fixed).
#[derive(Debug, Clone, Default)]
pub struct Row {
    pub t: f64,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub negative_sum: Option<f64>,
    pub trace: Option<f64>,
    pub purity: Option<f64>,
    pub fidelity: Option<f64>,
    pub self_correlation: Option<f64>,
    pub minmax_bound: Option<f64>,
}

fn fmt_field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.12e},{},{},{},{},{},{},{},{}",
            r.t,
            fmt_field(r.lambda_min),
            fmt_field(r.lambda_max),
            fmt_field(r.negative_sum),
            fmt_field(r.trace),
            fmt_field(r.purity),
            fmt_field(r.fidelity),
            fmt_field(r.self_correlation),
            fmt_field(r.minmax_bound),
        );
    }
    out
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct OracleExtras {
    pub probe_dim: usize,
    pub discrepancy_norm: f64,
    pub oracle_norm: f64,
    pub assembled_norm: f64,
    pub curvature_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct Extras {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minmax_family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus_step_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus_completeness_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleExtras>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route_discrepancy_max: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub route_discrepancies: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub rows: usize,
    pub rng: String,
    pub warnings: Vec<String>,
    pub resolved_config: ScenarioConfig,
    pub extras: Extras,
}

/// Outcome of a completed run, echoed back to callers and tests.
pub struct RunRecord {
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
    pub extras: Extras,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub config_hash: String,
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    let canon = serde_json::to_string(config).expect("config serializes");
    let mut h = Sha256::new();
    h.update(canon.as_bytes());
    let digest = h.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

// ---------------------------------------------------------------------------
// diagnostics

struct DiagnosticsCtx {
    analyses: Vec<AnalysisKind>,
    psi0: CVec,
    family: TrialFamily,
    h_sym: CMat,
}

impl DiagnosticsCtx {
    fn new(res: &Resolved) -> Result<Self, CliError> {
        let family = match res.config.initial_state.kind {
            StateKindCfg::Coherent => TrialFamily::coherent_default(res.alpha0),
            _ => TrialFamily::TwoLevel,
        };
        let h_sym = fock::symmetrized_hamiltonian(&res.params, res.config.dim)?;
        Ok(Self {
            analyses: res.config.analyses.clone(),
            psi0: res.psi0.clone(),
            family,
            h_sym,
        })
    }

    fn wants(&self, a: AnalysisKind) -> bool {
        self.analyses.contains(&a)
    }

    fn family_name(&self) -> &'static str {
        match self.family {
            TrialFamily::TwoLevel => "two_level",
            TrialFamily::CoherentOrthogonalized { .. } => "coherent_orthogonalized",
        }
    }

    fn row(&self, t: f64, r: &CMat) -> Result<Row, CliError> {
        let mut row = Row { t, ..Row::default() };
        row.trace = Some(r.trace().re);
        if self.wants(AnalysisKind::Purity) {
            row.purity = Some((r * r).trace().re);
        }
        if self.wants(AnalysisKind::Spectrum) {
            let s = analysis::hermitian_eigen(r)?;
            let (lmin, nsum) = analysis::negativity(&s);
            row.lambda_min = Some(lmin);
            row.lambda_max = s.eigenvalues.first().copied();
            row.negative_sum = Some(nsum);
        }
        if self.wants(AnalysisKind::Minmax) {
            row.minmax_bound = Some(analysis::minmax_bound(r, &self.psi0, &self.family)?);
        }
        if self.wants(AnalysisKind::Fidelity) {
            let psi_t = analysis::exact_evolve(&self.psi0, &self.h_sym, t)?;
            row.fidelity = Some(analysis::fidelity(r, &psi_t)?);
        }
        if self.wants(AnalysisKind::SelfCorrelation) {
            row.self_correlation = Some(analysis::self_correlation(r, &self.psi0)?);
        }
        Ok(row)
    }
}

// ---------------------------------------------------------------------------
// method dispatch

/// Evolved operators at the sample times for any time-series method.
/// Phase-space fields are returned alongside when requested for dumps.
fn evolve_series(
    res: &Resolved,
    warnings: &mut Vec<String>,
    extras: &mut Extras,
) -> Result<(Vec<(f64, CMat)>, Vec<(f64, WignerField)>), CliError> {
    let dim = res.config.dim;
    let rho0 = fock::projector(&res.psi0);
    let mut fields = Vec::new();
    let series = match res.config.method {
        Method::PhaseSpace => {
            let cache = KernelCache::new(&res.grid, dim, DEFAULT_CACHE_BUDGET);
            let mut out = Vec::with_capacity(res.times.len());
            for &t in &res.times {
                let field = classical::twa_field(&rho0, &res.grid, &res.params, t)?;
                let leak = field.boundary_leak();
                if leak > 1e-3 {
                    warnings.push(format!(
                        "boundary: field leak {leak:.3e} at t = {t:.6} (grid too small)"
                    ));
                }
                let r = phasespace::inverse_map_with(&field, &cache);
                if res.config.dump_fields {
                    fields.push((t, field));
                }
                out.push((t, r));
            }
            out
        }
        Method::OperatorOde => {
            let spec = generator::generator_for(&res.params, dim).expect("validated");
            generator::evolve_r_sampled(&spec, &rho0, &res.times)?
        }
        Method::ShortTime => {
            let spec = generator::generator_for(&res.params, dim).expect("validated");
            res.times
                .iter()
                .map(|&t| (t, generator::short_time_r(&spec, &rho0, t)))
                .collect()
        }
        Method::Kraus => {
            let spec = generator::generator_for(&res.params, dim).expect("validated");
            let hmax = generator::spectral_radius_estimate(&spec.h_eff).max(1.0);
            let dt_target = 1e-3 / hmax;
            extras.kraus_step_size = Some(dt_target);
            if res
                .config
                .analyses
                .contains(&AnalysisKind::KrausCompleteness)
            {
                extras.kraus_completeness_defect =
                    Some(generator::kraus_completeness_defect(&spec, dt_target));
            }
            let mut out = Vec::with_capacity(res.times.len());
            let mut r = rho0.clone();
            let mut t_now = 0.0f64;
            for &t in &res.times {
                let span = t - t_now;
                if span > 0.0 {
                    let n = (span / dt_target).ceil().max(1.0) as usize;
                    let dt = span / n as f64;
                    for _ in 0..n {
                        r = generator::kraus_step(&spec, &r, dt);
                    }
                    t_now = t;
                }
                out.push((t, r.clone()));
            }
            out
        }
        Method::OracleCheck => unreachable!("oracle_check handled separately"),
    };
    Ok((series, fields))
}

fn oracle_check(res: &Resolved) -> Result<OracleExtras, CliError> {
    let dim = res.config.dim;
    let probe_dim = dim.min(7);
    let spec = generator::generator_for(&res.params, dim).expect("validated");
    let oracle =
        generator::oracle_generator_block(&res.params, dim, probe_dim, &res.grid, 1e-4)?;
    let assembled = generator::SuperOperator::from_generator(&spec).sub_block(probe_dim);
    let diff = generator::SuperOperator {
        dim: probe_dim,
        mat: &oracle.superop.mat - &assembled.mat,
    };
    Ok(OracleExtras {
        probe_dim,
        discrepancy_norm: diff.op_norm(),
        oracle_norm: oracle.superop.op_norm(),
        assembled_norm: assembled.op_norm(),
        curvature_ratio: oracle.curvature_ratio,
    })
}

// ---------------------------------------------------------------------------
// top-level operations

fn prepare_out_dir(res: &Resolved, out_override: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| res.config.output_dir.clone())
        .ok_or_else(|| {
            CliError::Validation("no output directory (set output_dir or pass --out)".into())
        })?;
    fs::create_dir_all(&dir).map_err(io_err)?;
    Ok(dir)
}

fn write_outputs(
    dir: &Path,
    res: &Resolved,
    rows: &[Row],
    warnings: &[String],
    extras: &Extras,
    fields: &[(f64, WignerField)],
) -> Result<RunRecord, CliError> {
    let csv_path = dir.join("results.csv");
    let mut f = fs::File::create(&csv_path).map_err(io_err)?;
    f.write_all(rows_to_csv(rows).as_bytes()).map_err(io_err)?;

    let hash = config_hash(&res.config);
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: hash.clone(),
        rows: rows.len(),
        rng: "none".into(),
        warnings: warnings.to_vec(),
        resolved_config: res.config.clone(),
        extras: extras.clone(),
    };
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&manifest_path, text).map_err(io_err)?;

    for (idx, (_t, field)) in fields.iter().enumerate() {
        let path = dir.join(format!("wigner_t{idx}.csv"));
        let file = fs::File::create(&path).map_err(io_err)?;
        field.write_csv(file).map_err(|e| CliError::Io(e.to_string()))?;
    }

    Ok(RunRecord {
        rows: rows.to_vec(),
        warnings: warnings.to_vec(),
        extras: extras.clone(),
        csv_path,
        manifest_path,
        config_hash: hash,
    })
}

/// Execute one scenario end to end and persist results.csv + manifest.json.
pub fn run(config: ScenarioConfig, out_override: Option<&Path>) -> Result<RunRecord, CliError> {
    let res = resolve(config)?;
    let dir = prepare_out_dir(&res, out_override)?;
    let mut warnings = Vec::new();
    let mut extras = Extras::default();

    // tail warning: initial state poorly represented at this dim
    if let StateKindCfg::Coherent = res.config.initial_state.kind {
        let tail = fock::coherent_tail(res.alpha0, res.config.dim);
        if tail > 1e-8 {
            warnings.push(format!("tail: coherent-state truncation tail {tail:.3e}"));
        }
    }

    if res.config.method == Method::OracleCheck {
        extras.oracle = Some(oracle_check(&res)?);
        return write_outputs(&dir, &res, &[], &warnings, &extras, &[]);
    }

    let ctx = DiagnosticsCtx::new(&res)?;
    if ctx.wants(AnalysisKind::Minmax) {
        extras.minmax_family = Some(ctx.family_name().to_string());
    }
    let (series, fields) = evolve_series(&res, &mut warnings, &mut extras)?;
    let mut rows = Vec::with_capacity(series.len());
    for (t, r) in &series {
        let row = ctx.row(*t, r)?;
        if let Some(tr) = row.trace {
            if (tr - 1.0).abs() > 1e-6 {
                warnings.push(format!("step: |Tr R - 1| = {:.3e} at t = {t:.6}", (tr - 1.0).abs()));
            }
        }
        rows.push(row);
    }
    write_outputs(&dir, &res, &rows, &warnings, &extras, &fields)
}

/// Run the phase-space and operator-ODE routes on one scenario and report
/// the per-sample and maximal Frobenius discrepancy between the two R(t).
pub fn compare_routes(
    config: ScenarioConfig,
    out_override: Option<&Path>,
) -> Result<RunRecord, CliError> {
    let mut warnings = Vec::new();
    let mut extras = Extras::default();

    let mut ps_cfg = config.clone();
    ps_cfg.method = Method::PhaseSpace;
    let ps_res = resolve(ps_cfg)?;
    let (ps_series, _) = evolve_series(&ps_res, &mut warnings, &mut extras)?;

    let mut ode_cfg = config.clone();
    ode_cfg.method = Method::OperatorOde;
    let ode_res = resolve(ode_cfg)?;
    let (ode_series, _) = evolve_series(&ode_res, &mut warnings, &mut extras)?;

    let dir = prepare_out_dir(&ode_res, out_override)?;
    let mut discrepancies = Vec::with_capacity(ps_series.len());
    for ((t, rp), (_, ro)) in ps_series.iter().zip(&ode_series) {
        discrepancies.push((*t, (rp - ro).norm()));
    }
    let max_d = discrepancies.iter().map(|&(_, d)| d).fold(0.0f64, f64::max);
    extras.route_discrepancy_max = Some(max_d);
    extras.route_discrepancies = discrepancies;

    // diagnostics rows come from the operator route
    let ctx = DiagnosticsCtx::new(&ode_res)?;
    let mut rows = Vec::with_capacity(ode_series.len());
    for (t, r) in &ode_series {
        rows.push(ctx.row(*t, r)?);
    }
    write_outputs(&dir, &ode_res, &rows, &warnings, &extras, &[])
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    /// Dotted-path parameter lists, e.g. `"hamiltonian.coupling": [0.5, 1]`.
    pub vary: std::collections::BTreeMap<String, Vec<serde_json::Value>>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("sweep config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

fn set_dotted(value: &mut serde_json::Value, path: &str, v: &serde_json::Value) -> Result<(), CliError> {
    let mut cur = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Validation(format!("sweep path '{path}': not an object at '{key}'")))?;
        if i + 1 == parts.len() {
            obj.insert((*key).to_string(), v.clone());
            return Ok(());
        }
        cur = obj
            .entry((*key).to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Ok(())
}

/// Expand the cartesian product of `vary` into concrete configs
/// (deterministic order: keys sorted, values in listed order).
pub fn sweep_cells(sweep: &SweepConfig) -> Result<Vec<ScenarioConfig>, CliError> {
    let base = serde_json::to_value(&sweep.base)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let keys: Vec<&String> = sweep.vary.keys().collect();
    let mut cells = vec![base];
    for key in keys {
        let values = &sweep.vary[key];
        if values.is_empty() {
            return Err(CliError::Validation(format!("sweep list '{key}' is empty")));
        }
        let mut next = Vec::with_capacity(cells.len() * values.len());
        for cell in &cells {
            for v in values {
                let mut c = cell.clone();
                set_dotted(&mut c, key, v)?;
                next.push(c);
            }
        }
        cells = next;
    }
    cells
        .into_iter()
        .map(|v| serde_json::from_value(v).map_err(|e| CliError::Validation(e.to_string())))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SweepCellSummary {
    pub cell: String,
    pub config_hash: String,
    pub rows: usize,
    pub warnings: usize,
}

/// Run every cell of the sweep into `out/cell_NNN/`. Cells run concurrently;
/// each cell is internally deterministic and writes only its own files.
pub fn sweep(sweep_cfg: SweepConfig, out: &Path) -> Result<Vec<SweepCellSummary>, CliError> {
    use rayon::prelude::*;
    let cells = sweep_cells(&sweep_cfg)?;
    fs::create_dir_all(out).map_err(io_err)?;
    let summaries: Result<Vec<SweepCellSummary>, CliError> = cells
        .into_par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let name = format!("cell_{i:03}");
            let dir = out.join(&name);
            let rec = run(cfg, Some(&dir))?;
            Ok(SweepCellSummary {
                cell: name,
                config_hash: rec.config_hash,
                rows: rec.rows.len(),
                warnings: rec.warnings.len(),
            })
        })
        .collect();
    let summaries = summaries?;
    let text = serde_json::to_string_pretty(&summaries)
        .map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(out.join("sweep_manifest.json"), text).map_err(io_err)?;
    Ok(summaries)
}
