//! Subcommand implementations. Each returns data for `main` to print; nothing
//! here calls `process::exit`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use flrw_dirac::blowup::{self, BlowupCase, EmpiricalReport, Lifespan, RegimeVerdict};
use flrw_dirac::diagnostics::{self, Report};
use flrw_dirac::field::Grid;
use flrw_dirac::init::InitialData;
use flrw_dirac::kernels::{self, KernelEval};
use flrw_dirac::models::NonlinearitySpec;
use flrw_dirac::solver::{BlowupInfo, Model, RunRecord, Solver, SolverConfig};
use flrw_dirac::spacetime::Cosmology;
use flrw_dirac::{snapshot, Error, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EmpiricalConfig, RunConfig, SweepConfig, VerificationSuite};
use crate::error::{CliError, CliResult};

pub const RECORD_FILE: &str = "record.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const FINAL_SNAPSHOT: &str = "final.bin";

#[derive(Debug)]
pub struct SimulateSummary {
    pub record_path: PathBuf,
    pub records: usize,
    pub steps: usize,
    pub blowup: Option<BlowupInfo>,
}

/// Runs the configured simulation and writes `record.json` (plus snapshots
/// when enabled) into the output directory.
pub fn simulate(config: &Path, out_dir: Option<&Path>) -> CliResult<SimulateSummary> {
    let cfg = RunConfig::load(config)?;
    let prepared = cfg.build()?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.outputs.dir.clone());
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::runtime(e).context(format!("creating {}", dir.display())))?;

    let solver = Solver::new(prepared.model, prepared.grid)?;
    let f0 = prepared
        .initial_data
        .sample(&prepared.grid, prepared.solver.t_start)?;
    let mut names = Vec::new();
    let write_snapshots = cfg.outputs.snapshots;
    let mut observer = |f: &flrw_dirac::field::SpinorField| -> flrw_dirac::Result<()> {
        if write_snapshots {
            let name = format!("snap_{:05}.bin", names.len());
            snapshot::save(f, &dir.join(&name))?;
            names.push(name);
        }
        Ok(())
    };
    let out = solver.run(f0, &prepared.solver, None, &mut observer)?;
    let mut record = out.record;
    record.snapshots = names;
    if write_snapshots {
        snapshot::save(&out.field, &dir.join(FINAL_SNAPSHOT))?;
    }

    let record_path = dir.join(RECORD_FILE);
    std::fs::write(&record_path, serde_json::to_string_pretty(&record)?)?;
    let resolved = toml::to_string(&cfg).map_err(CliError::runtime)?;
    std::fs::write(dir.join(CONFIG_FILE), resolved)?;
    Ok(SimulateSummary {
        record_path,
        records: record.len(),
        steps: record.meta.steps,
        blowup: record.meta.blowup,
    })
}

pub fn load_record(path: &Path) -> CliResult<RunRecord> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(e).context(format!("reading {}", path.display())))?;
    let rec: RunRecord = serde_json::from_str(&text)
        .map_err(|e| CliError::runtime(e).context(format!("parsing {}", path.display())))?;
    rec.validate()
        .map_err(|e| CliError::runtime(e).context(format!("record {}", path.display())))?;
    Ok(rec)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub reports: Vec<Report>,
}

impl VerifyReport {
    pub fn failed_checks(&self) -> Vec<&str> {
        self.reports
            .iter()
            .filter(|r| !r.passed())
            .map(|r| r.check.as_str())
            .collect()
    }
}

/// Runs every check of the suite against the record. Failing checks are
/// reported, not raised; a check that cannot run (e.g. missing series) is an error.
pub fn verify(record: &Path, suite: &Path) -> CliResult<VerifyReport> {
    let rec = load_record(record)?;
    let suite = VerificationSuite::load(suite)?;
    verify_record(&rec, &suite)
}

pub fn verify_record(rec: &RunRecord, suite: &VerificationSuite) -> CliResult<VerifyReport> {
    suite.validate()?;
    let reports = suite
        .checks
        .iter()
        .map(|c| {
            diagnostics::run_check(&c.name, rec, c.tolerance, &c.params)
                .map_err(|e| CliError::runtime(e).context(format!("check {}", c.name)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(VerifyReport {
        passed: reports.iter().all(Report::passed),
        reports,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    K1,
    E,
}

#[derive(Clone, Debug)]
pub struct KernelTableArgs {
    pub ell: f64,
    pub mass: C64,
    pub epsilon: f64,
    pub kind: KernelKind,
    pub times: Vec<f64>,
    /// Base time of `E`; required for [`KernelKind::E`].
    pub t0: Option<f64>,
    /// Number of equally spaced radii on `[0, φ(t) - φ(t0)]`.
    pub r_points: usize,
}

pub const KERNEL_CSV_HEADER: &str = "r,t,t0_or_eps,re,im";

/// Tabulates `K₁(r,t)` or `E(r,t;t0)` over the light-cone range of `r`.
pub fn kernel_table(args: &KernelTableArgs) -> CliResult<String> {
    let cosmology = Cosmology::new(args.ell, 1.0)?;
    let ke = KernelEval::new(cosmology, args.mass, args.epsilon)?;
    let base = match args.kind {
        KernelKind::K1 => args.epsilon,
        KernelKind::E => args.t0.ok_or_else(|| {
            CliError::validation(Error::InvalidParameter {
                name: "t0".into(),
                reason: "required for the E kernel".into(),
            })
        })?,
    };
    if args.r_points == 0 {
        return Err(CliError::validation(Error::InvalidParameter {
            name: "r_points".into(),
            reason: "must be at least 1".into(),
        }));
    }
    let mut csv = String::from(KERNEL_CSV_HEADER);
    csv.push('\n');
    for &t in &args.times {
        if !(t >= base) {
            return Err(CliError::validation(Error::Domain {
                op: "kernel",
                reason: format!("t = {t} precedes the base time {base}"),
            }));
        }
        let span = cosmology.phi(t)? - cosmology.phi(base)?;
        for i in 0..args.r_points {
            let r = if args.r_points == 1 {
                0.0
            } else {
                span * i as f64 / (args.r_points - 1) as f64
            };
            let v = match args.kind {
                KernelKind::K1 => kernels::kernel_k1(r, t, &ke)?,
                KernelKind::E => kernels::kernel_e(r, t, base, &ke)?,
            };
            writeln!(csv, "{r},{t},{base},{},{}", v.re, v.im).expect("writing to a String");
        }
    }
    Ok(csv)
}

/// Reconstructs the free solution at `t` from the snapshot `input` (taken as
/// data at `ε = input.time`) and writes it to `output`. Returns the audit mismatch.
pub fn kernel_reconstruct(
    ell: f64,
    mass: C64,
    t: f64,
    input: &Path,
    output: &Path,
) -> CliResult<f64> {
    let psi1 = snapshot::load(input)
        .map_err(|e| CliError::from(e).context(format!("loading {}", input.display())))?;
    let ke = KernelEval::new(Cosmology::new(ell, 1.0)?, mass, psi1.time)?;
    let rec = kernels::reconstruct_free(&psi1, t, &ke)?;
    snapshot::save(&rec.field, output)?;
    Ok(rec.audit_mismatch)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub ell: f64,
    pub alpha: f64,
    pub im_m: f64,
    pub c0: f64,
    /// Support radius used for `T_bu` (measured from the data in empirical mode).
    pub r: f64,
    pub e1: f64,
    pub regime: String,
    pub branch: String,
    pub t_bu: Option<Lifespan>,
    pub t_numerical: Option<f64>,
    pub satisfied: Option<bool>,
    pub error: Option<String>,
}

pub const SWEEP_CSV_HEADER: &str =
    "ell,alpha,im_m,c0,R,E1,regime,branch,T_bu,t_numerical,satisfied,error";

fn cases(cfg: &SweepConfig) -> Vec<BlowupCase> {
    let mut out = Vec::with_capacity(cfg.len());
    for &ell in &cfg.ell {
        for &alpha in &cfg.alpha {
            for &im in &cfg.im_m {
                for &c0 in &cfg.c0 {
                    for &r in &cfg.r {
                        for &e1 in &cfg.e1 {
                            let mut c = BlowupCase::new(ell, alpha, im.abs(), c0, r, e1);
                            c.a0 = cfg.a0;
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    let key = |c: &BlowupCase| [c.ell, c.alpha, c.im_m_abs, c.c0, c.r, c.e1];
    out.sort_by(|a, b| {
        key(a)
            .iter()
            .zip(key(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

fn empirical_case(case: &BlowupCase, e: &EmpiricalConfig) -> flrw_dirac::Result<EmpiricalReport> {
    let grid = Grid::new(3, e.n, e.box_length)?;
    let raw = InitialData::gaussian(1.0, case.r, grid.center())
        .with_seed(e.seed)
        .sample(&grid, 1.0)?;
    let f0 = raw.scaled(C64::new((case.e1 / raw.l2_norm_sq()).sqrt(), 0.0));
    let cosmology = Cosmology::new(case.ell, case.a0)?;
    let model = Model::free(cosmology, C64::new(e.mass_re, case.im_m_abs)).with_nonlinearity(
        NonlinearitySpec::BlowupG {
            alpha: case.alpha,
            c0: case.c0,
        },
    );
    let solver = Solver::new(model, grid)?;
    let cfg = SolverConfig {
        t_end: e.t_end,
        cfl: e.cfl,
        dt_max: e.dt_max,
        ..SolverConfig::default()
    };
    Ok(blowup::empirical_blowup(&solver, f0, &cfg, e.slack, f64::INFINITY)?.0)
}

fn sweep_case(case: BlowupCase, empirical: Option<&EmpiricalConfig>) -> SweepRow {
    let verdict = blowup::classify(&case);
    let mut row = SweepRow {
        ell: case.ell,
        alpha: case.alpha,
        im_m: case.im_m_abs,
        c0: case.c0,
        r: case.r,
        e1: case.e1,
        regime: verdict.regime.name().to_string(),
        branch: verdict.branch.name().to_string(),
        t_bu: None,
        t_numerical: None,
        satisfied: None,
        error: None,
    };
    let result = case.validate().and_then(|_| match empirical {
        None => blowup::lifespan(&case).map(|t| (t, None, None, case.r)),
        Some(e) => empirical_case(&case, e)
            .map(|rep| (rep.t_bu, rep.t_numerical, rep.satisfied, rep.case.r)),
    });
    match result {
        Ok((t_bu, t_num, sat, r)) => {
            row.t_bu = Some(t_bu);
            row.t_numerical = t_num;
            row.satisfied = sat;
            row.r = r;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// One row per parameter combination, in parallel, sorted by parameters.
/// Per-case errors are recorded in the row.
pub fn sweep(cfg: &SweepConfig) -> CliResult<Vec<SweepRow>> {
    cfg.validate()?;
    Ok(cases(cfg)
        .into_par_iter()
        .map(|c| sweep_case(c, cfg.empirical.as_ref()))
        .collect())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = String::from(SWEEP_CSV_HEADER);
    csv.push('\n');
    for r in rows {
        let t_bu = match r.t_bu {
            Some(Lifespan::Finite(t)) => t.to_string(),
            Some(Lifespan::Infinite) => "inf".to_string(),
            None => String::new(),
        };
        let t_num = r.t_numerical.map(|t| t.to_string()).unwrap_or_default();
        let sat = r.satisfied.map(|s| s.to_string()).unwrap_or_default();
        let err = r.error.as_deref().map(csv_field).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{t_bu},{t_num},{sat},{err}",
            r.ell, r.alpha, r.im_m, r.c0, r.r, r.e1, r.regime, r.branch
        )
        .expect("writing to a String");
    }
    csv
}

#[derive(Clone, Debug, Serialize)]
pub struct LifespanReport {
    pub case: BlowupCase,
    pub verdict: RegimeVerdict,
    pub lifespan: Lifespan,
    pub j_infinity: Option<f64>,
    /// Smallest `E(1)` with a finite `T_bu` (absent when every size gives one).
    pub solvability_threshold: Option<f64>,
}

pub fn lifespan(case: &BlowupCase) -> CliResult<LifespanReport> {
    case.validate()?;
    Ok(LifespanReport {
        case: *case,
        verdict: blowup::classify(case),
        lifespan: blowup::lifespan(case)?,
        j_infinity: blowup::j_infinity(case)?,
        solvability_threshold: blowup::solvability_threshold(case)?,
    })
}

/// Regime of `(ell, alpha, |Im m|)`; data size plays no role.
pub fn classify(ell: f64, alpha: f64, im_m: f64) -> CliResult<RegimeVerdict> {
    for (name, v) in [("ell", ell), ("alpha", alpha), ("im_m", im_m)] {
        if !v.is_finite() {
            return Err(CliError::validation(Error::InvalidParameter {
                name: name.into(),
                reason: format!("must be finite, got {v}"),
            }));
        }
    }
    if !(ell >= 0.0) || !(alpha > 0.0) {
        return Err(CliError::validation(Error::InvalidParameter {
            name: if ell < 0.0 { "ell" } else { "alpha" }.into(),
            reason: "need ell >= 0 and alpha > 0".into(),
        }));
    }
    Ok(blowup::classify(&BlowupCase::new(
        ell,
        alpha,
        im_m.abs(),
        1.0,
        1.0,
        1.0,
    )))
}
