use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ggp_core::design::{
    design_asymmetric, design_closed_form, design_exact, design_heterogeneous, design_principal_agent,
    design_regime_change, symmetric_optimal, PrincipalAgentDesign, Provenance, RegimeChangeDesign, SymmetricOptimum,
    Target,
};
use ggp_core::oracle_sim::{brute_force_iesds, simulate_play, unraveling_trace_export, write_trace_csv, Band};
use ggp_core::solver::{solve_thresholds, verify_bne, BneCheck};
use ggp_core::{CoordinationGame, InformationStructure, SolveReport, SubsidyScheme, ThresholdProfile};
use log::info;
use serde::Serialize;

use crate::error::{io_error, CliError};
use crate::spec::{DesignMode, DesignRequest, GameSpecDocument, Policy, SCHEMA_VERSION};

/// A resolved document with its model built.
pub struct Loaded {
    pub doc: GameSpecDocument,
    pub game: CoordinationGame,
    pub info: InformationStructure,
}

impl Loaded {
    pub fn new(doc: GameSpecDocument) -> Result<Self, CliError> {
        let game = doc.game()?;
        let info = doc.information()?;
        Ok(Self { doc, game, info })
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_error(&format!("cannot create {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_error("cannot write JSON", e))?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| io_error("cannot write JSON", e))?;
    Ok(path)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| io_error(&format!("cannot create {}", path.display()), e))
}

pub fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(&format!("cannot create {}", dir.display()), e))
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignRow {
    pub player: usize,
    pub c_i: f64,
    pub avg_externality: f64,
    /// Subsidy, or the success reward in principal-agent mode.
    pub subsidy: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignOutput {
    pub schema_version: &'static str,
    pub spec: GameSpecDocument,
    pub mode: DesignMode,
    pub rows: Vec<DesignRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SubsidyScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub principal_agent: Option<PrincipalAgentDesign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime_change: Option<RegimeChangeDesign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetric_optimum: Option<SymmetricOptimum>,
}

fn need_target(req: &DesignRequest) -> Result<f64, CliError> {
    req.target
        .ok_or_else(|| CliError::Schema(format!("at `policy.design.target`: mode {:?} needs a target", req.mode)))
}

/// Runs the designer a request names.
pub fn run_design(l: &Loaded, req: &DesignRequest) -> Result<DesignOutput, CliError> {
    let g = &l.game;
    let mut out = DesignOutput {
        schema_version: SCHEMA_VERSION,
        spec: l.doc.clone(),
        mode: req.mode,
        rows: Vec::new(),
        scheme: None,
        principal_agent: None,
        regime_change: None,
        symmetric_optimum: None,
    };
    let (values, provenance) = match req.mode {
        DesignMode::PrincipalAgent => {
            let pa = design_principal_agent(g, need_target(req)?)?;
            let v = pa.rewards.clone();
            out.principal_agent = Some(pa);
            (v, Provenance::ClosedForm)
        }
        mode => {
            let scheme = match mode {
                DesignMode::ClosedForm => design_closed_form(g, need_target(req)?)?,
                DesignMode::Exact => design_exact(g, &l.info, need_target(req)?)?,
                DesignMode::Heterogeneous => design_heterogeneous(g, need_target(req)?)?,
                DesignMode::Asymmetric => {
                    let partition = req.partition.as_ref().ok_or_else(|| {
                        CliError::Schema("at `policy.design.partition`: asymmetric mode needs a partition".into())
                    })?;
                    design_asymmetric(g, &l.info, partition)?
                }
                DesignMode::RegimeChange => {
                    let rc = design_regime_change(g)?;
                    let s = rc.scheme.clone();
                    out.regime_change = Some(rc);
                    s
                }
                DesignMode::SymmetricOptimal => {
                    let opt = symmetric_optimal(g)?;
                    out.symmetric_optimum = Some(opt);
                    SubsidyScheme {
                        subsidies: vec![opt.subsidy; g.n_players()],
                        target: Target::Uniform { x: opt.efficiency_threshold },
                        provenance: Provenance::ClosedForm,
                    }
                }
                DesignMode::PrincipalAgent => unreachable!(),
            };
            let p = scheme.provenance;
            let v = scheme.subsidies.clone();
            out.scheme = Some(scheme);
            (v, p)
        }
    };
    out.rows = values
        .iter()
        .enumerate()
        .map(|(i, &s)| DesignRow {
            player: i,
            c_i: g.cost(i),
            avg_externality: g.mean_externality(i),
            subsidy: s,
            provenance,
        })
        .collect();
    Ok(out)
}

pub fn cmd_design(l: &Loaded, out_dir: &Path) -> Result<DesignOutput, CliError> {
    let Some(Policy::Design(req)) = &l.doc.policy else {
        return Err(CliError::Schema("at `policy`: design needs a `design` request (or --mode)".into()));
    };
    let out = run_design(l, req)?;
    prepare_out(out_dir)?;
    let mut w = csv::Writer::from_writer(create(out_dir, "design.csv")?);
    for row in &out.rows {
        w.serialize(row).map_err(|e| io_error("cannot write design.csv", e))?;
    }
    w.flush().map_err(|e| io_error("cannot write design.csv", e))?;
    write_json(out_dir, "design.json", &out)?;
    for row in &out.rows {
        println!("player {}: subsidy {}", row.player, row.subsidy);
    }
    Ok(out)
}

/// The scheme a solve-type command works with: explicit, or designed on the fly.
fn scheme_of(l: &Loaded) -> Result<Vec<f64>, CliError> {
    match &l.doc.policy {
        Some(Policy::Scheme { subsidies }) => Ok(subsidies.clone()),
        Some(Policy::Design(req)) => {
            if req.mode == DesignMode::PrincipalAgent {
                return Err(CliError::Schema(
                    "at `policy.design.mode`: principal_agent yields success rewards, not subsidies; \
                     put the reward into the production schedule and give an explicit scheme"
                        .into(),
                ));
            }
            Ok(run_design(l, req)?.scheme.expect("subsidy designers return a scheme").subsidies)
        }
        None => Err(CliError::Schema("at `policy`: an explicit scheme or a design request is required".into())),
    }
}

fn solve(l: &Loaded, subsidies: &[f64]) -> Result<SolveReport, CliError> {
    let report = solve_thresholds(&l.game, &l.info, subsidies, &l.doc.solver_config())?;
    info!(
        "solve: gap {:.3e}, {} upper and {} lower rounds",
        report.gap, report.upper.iterations, report.lower.iterations
    );
    Ok(report)
}

fn not_converged(report: &SolveReport, l: &Loaded) -> CliError {
    let cfg = l.doc.solver_config();
    CliError::NotConverged(format!(
        "gap {:.3e} (tolerance {:.1e}), upper sequence converged={} after {} rounds, lower converged={} after {}; \
         a smaller noise scale narrows the gap",
        report.gap,
        cfg.gap_tolerance,
        report.upper.converged,
        report.upper.iterations,
        report.lower.converged,
        report.lower.iterations
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub schema_version: &'static str,
    pub spec: GameSpecDocument,
    pub report: SolveReport,
}

pub fn cmd_solve(l: &Loaded, out_dir: &Path) -> Result<SolveOutput, CliError> {
    let subsidies = scheme_of(l)?;
    let report = solve(l, &subsidies)?;
    prepare_out(out_dir)?;
    write_trace_csv(&unraveling_trace_export(&report), create(out_dir, "trace.csv")?)?;
    let out = SolveOutput { schema_version: SCHEMA_VERSION, spec: l.doc.clone(), report };
    write_json(out_dir, "report.json", &out)?;
    if !out.report.converged {
        return Err(not_converged(&out.report, l));
    }
    println!("x(s) = {:?}, gap {:.3e}", out.report.x_of_s.0, out.report.gap);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOutput {
    pub schema_version: &'static str,
    pub spec: GameSpecDocument,
    pub subsidies: Vec<f64>,
    pub thresholds: ThresholdProfile,
    pub summary: ggp_core::oracle_sim::SimulationSummary,
}

pub fn cmd_simulate(l: &Loaded, out_dir: &Path) -> Result<SimulateOutput, CliError> {
    let subsidies = scheme_of(l)?;
    let report = solve(l, &subsidies)?;
    if !report.converged {
        return Err(not_converged(&report, l));
    }
    let opts = l.doc.simulate.clone().unwrap_or_default();
    let run = simulate_play(&l.game, &l.info, &subsidies, &report.x_of_s, &opts)?;
    prepare_out(out_dir)?;
    run.write_csv(create(out_dir, "draws.csv")?)?;
    let out = SimulateOutput {
        schema_version: SCHEMA_VERSION,
        spec: l.doc.clone(),
        subsidies,
        thresholds: report.x_of_s,
        summary: run.summary,
    };
    write_json(out_dir, "summary.json", &out)?;
    println!(
        "{} draws: all-1 {:.4}, all-0 {:.4}, inefficient {:.4}",
        out.summary.draws, out.summary.all_one_frequency, out.summary.all_zero_frequency, out.summary.inefficiency_frequency
    );
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutput {
    pub schema_version: &'static str,
    pub spec: GameSpecDocument,
    pub subsidies: Vec<f64>,
    pub thresholds: ThresholdProfile,
    pub bands: Vec<Band>,
    pub oracle_passes: usize,
    /// `max_i |band midpoint_i - x_i(s)|`.
    pub max_deviation: f64,
    /// Twice the oracle grid step.
    pub tolerance: f64,
    pub agree: bool,
    pub best_response: BneCheck,
}

pub fn cmd_verify(l: &Loaded, out_dir: &Path) -> Result<VerifyOutput, CliError> {
    let subsidies = scheme_of(l)?;
    let report = solve(l, &subsidies)?;
    if !report.converged {
        return Err(not_converged(&report, l));
    }
    let v = l.doc.verify.expect("resolved document has a verify section");
    let oracle = brute_force_iesds(&l.game, &l.info, &subsidies, v.step)?;
    let max_deviation =
        oracle.bands.iter().zip(&report.x_of_s.0).map(|(b, x)| (b.midpoint - x).abs()).fold(0.0, f64::max);
    let (lo, hi) = l.info.signal_envelope();
    let k = v.check_points.max(2);
    let grid: Vec<f64> = (0..k).map(|j| lo + (hi - lo) * j as f64 / (k - 1) as f64).collect();
    let best_response = verify_bne(&l.game, &l.info, &report.x_of_s, &subsidies, &grid)?;
    let tolerance = 2.0 * v.step;
    let out = VerifyOutput {
        schema_version: SCHEMA_VERSION,
        spec: l.doc.clone(),
        subsidies,
        thresholds: report.x_of_s,
        bands: oracle.bands,
        oracle_passes: oracle.passes,
        max_deviation,
        tolerance,
        agree: max_deviation <= tolerance,
        best_response,
    };
    prepare_out(out_dir)?;
    write_json(out_dir, "verify.json", &out)?;
    if !out.agree {
        return Err(CliError::Disagreement(format!(
            "oracle band midpoints differ from x(s) by {max_deviation:.3e} > {tolerance:.1e}"
        )));
    }
    println!(
        "oracle agrees: max deviation {max_deviation:.3e} <= {tolerance:.1e}; best-response violation {:.3e}",
        out.best_response.max_violation
    );
    Ok(out)
}
