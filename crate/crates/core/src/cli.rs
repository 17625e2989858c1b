//! The `branching` command line.
//!
//! Every subcommand computes all of its artifacts in memory, writes them
//! atomically into the output directory, and prints a JSON summary on stdout.
//! Failures print `{"error": {"kind", "message"}}` on stderr and exit nonzero.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{
    compute_metrics, project_truthful, sweep, sweep_csv, sweep_monotonicity, sweep_plot_json, CapFraction,
    MechanismRun, MetricsSummary, Rounding, SweepGrid,
};
use crate::axioms::{
    check_bradso_enforcement, check_bradso_ic, check_detectable_priority_reversals, check_individual_rationality,
    check_non_wastefulness, check_priority_reversals, check_strategic_bradso, check_strategy_proofness, Axiom,
    AxiomReport, DeviationScope, DEFAULT_BUDGET,
};
use crate::equilibrium::{enumerate_nash, find_bne, verify_equilibrium_outcomes, Game, GameSpec};
use crate::error::{Error, Result};
use crate::io::{
    allocation_csv, generate, load_bundle, parse_allocation, strategies_csvs, write_all_atomic, GeneratorConfig,
    LoadedBundle, OUT_DIR_ENV,
};
use crate::mechanisms::{
    com_bradso, phi_br, usma2006, usma2020, ComBradso, Consecutive, DirectMechanism, MechanismTrace, PhiBr,
    Projected, QuasiDirectMechanism, SerialDictatorship, TraceEvent, Usma2006, Usma2020,
};
use crate::model::{Allocation, Assignment, CadetId, ContractPreference, Economy, QuasiStrategy};
use crate::policies::PolicyKind;

/// Budgets above this need `--allow-large-budget`.
pub const MAX_DEFAULT_BUDGET: u128 = DEFAULT_BUDGET;

const DEFAULT_OUT_DIR: &str = "branching-out";

#[derive(Debug, Parser)]
#[command(name = "branching", version, about = "Branch assignment mechanisms, audits, equilibria and sweeps")]
pub struct Cli {
    /// Seed for commands that draw random numbers.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Table format for emitted artifacts.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Cap on enumerated profiles or mechanism runs.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    /// Permit budgets above 2^20.
    #[arg(long, global = true)]
    pub allow_large_budget: bool,
    /// Output directory; defaults to $BRANCHING_OUT_DIR, then ./branching-out.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MechanismName {
    ComBradso,
    PhiBr,
    Usma2006,
    Usma2020,
    SerialDictatorship,
}

impl MechanismName {
    fn as_str(self) -> &'static str {
        match self {
            MechanismName::ComBradso => "com-bradso",
            MechanismName::PhiBr => "phi-br",
            MechanismName::Usma2006 => "usma2006",
            MechanismName::Usma2020 => "usma2020",
            MechanismName::SerialDictatorship => "serial-dictatorship",
        }
    }

    fn is_direct(self) -> bool {
        matches!(self, MechanismName::ComBradso | MechanismName::PhiBr)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a mechanism on a bundle: allocation, trace and metrics.
    Run(RunArgs),
    /// Check axioms against an allocation and the mechanism that produced it.
    Audit(AuditArgs),
    /// Enumerate Nash or Bayes-Nash equilibria of a single-branch game file.
    Equilibrium(EquilibriumArgs),
    /// BRADSOs charged over a grid of caps and policies.
    Sweep(SweepArgs),
    /// Project contract preferences to truthful quasi-direct strategies.
    Project(BundleArg),
    /// Write a synthetic bundle.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct BundleArg {
    /// Directory holding the bundle's CSV files.
    #[arg(long)]
    pub bundle: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    #[arg(long, value_enum, default_value_t = MechanismName::ComBradso)]
    pub mechanism: MechanismName,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// Allocation CSV to audit; the mechanism's own output when omitted.
    #[arg(long)]
    pub allocation: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MechanismName::ComBradso)]
    pub mechanism: MechanismName,
    /// `all` or a comma-separated list such as `non_wastefulness,bradso_ic`.
    #[arg(long, default_value = "all")]
    pub axioms: String,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    /// Game JSON file.
    #[arg(long)]
    pub game: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// Comma-separated cap fractions (`0.15`, `15%`, `3/20`); 5%..75% by default.
    #[arg(long)]
    pub caps: Option<String>,
    /// Comma-separated policies, in the order monotonicity is checked.
    #[arg(long, default_value = "tier2020,tier2021,ultimate")]
    pub policies: String,
    #[arg(long, default_value = "floor")]
    pub rounding: String,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator config JSON; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub cadets: Option<usize>,
    #[arg(long)]
    pub branches: Option<usize>,
    /// Comma-separated tier shares summing to 1.
    #[arg(long)]
    pub tier_shares: Option<String>,
    #[arg(long)]
    pub willingness_rate: Option<f64>,
    #[arg(long)]
    pub cap_fraction: Option<String>,
    #[arg(long)]
    pub policy: Option<String>,
}

/// Files to write plus the stdout summary.
pub struct Outcome {
    pub files: BTreeMap<String, String>,
    pub summary: Value,
}

/// Parse `argv` (including the program name), execute, and return the exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", json!({"error": {"kind": "usage", "message": e.to_string().trim_end()}}));
            return 2;
        }
    };
    match execute(&cli) {
        Ok((dir, outcome)) => {
            let mut summary = outcome.summary;
            summary["out_dir"] = json!(dir.display().to_string());
            summary["files"] = json!(outcome.files.keys().collect::<Vec<_>>());
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            0
        }
        Err(e) => {
            eprintln!("{}", json!({"error": {"kind": e.kind(), "message": e.to_string()}}));
            1
        }
    }
}

pub fn main_exit() -> i32 {
    run_command(std::env::args_os())
}

/// Runs the command and writes its files. Nothing is written on error.
pub fn execute(cli: &Cli) -> Result<(PathBuf, Outcome)> {
    let outcome = compute(cli)?;
    let dir = out_dir(cli);
    write_all_atomic(&dir, &outcome.files)?;
    Ok((dir, outcome))
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// The command's artifacts, without touching the output directory.
pub fn compute(cli: &Cli) -> Result<Outcome> {
    if cli.budget > MAX_DEFAULT_BUDGET && !cli.allow_large_budget {
        return Err(Error::Config(format!(
            "--budget {} exceeds 2^20; pass --allow-large-budget to confirm",
            cli.budget
        )));
    }
    match &cli.command {
        Command::Run(a) => cmd_run(cli, a),
        Command::Audit(a) => cmd_audit(cli, a),
        Command::Equilibrium(a) => cmd_equilibrium(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Project(a) => cmd_project(cli, a),
        Command::Generate(a) => cmd_generate(cli, a),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn need_prefs(b: &LoadedBundle) -> Result<&[ContractPreference]> {
    b.preferences
        .as_deref()
        .ok_or_else(|| Error::Config(format!("{} has no contract_prefs.csv", b.dir.display())))
}

/// Submitted strategies if the bundle has them, else the truthful projection.
fn strategies_of(b: &LoadedBundle) -> Result<Vec<QuasiStrategy>> {
    match &b.strategies {
        Some(s) => Ok(s.clone()),
        None => Ok(project_truthful(need_prefs(b)?)),
    }
}

pub fn allocation_json(econ: &Economy, alloc: &Allocation) -> Value {
    let rows: Vec<Value> = alloc
        .assignments(econ.num_cadets())
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let name = econ.cadet_name(CadetId(i as u32));
            match a {
                Assignment::Unmatched => json!({"cadet_id": name, "branch_id": null, "cost": null}),
                Assignment::Matched(b, t) => {
                    json!({"cadet_id": name, "branch_id": econ.branch_name(*b), "cost": t.as_token()})
                }
            }
        })
        .collect();
    Value::from(rows)
}

fn trace_json(econ: &Economy, trace: &MechanismTrace) -> Value {
    let c = |x: &crate::model::Contract| {
        json!({"cadet": econ.cadet_name(x.cadet), "branch": econ.branch_name(x.branch), "cost": x.cost.as_token()})
    };
    let events: Vec<Value> = trace
        .events
        .iter()
        .map(|e| match e {
            TraceEvent::Propose { step, contract } => json!({"event": "propose", "step": step, "contract": c(contract)}),
            TraceEvent::Hold { step, contract } => json!({"event": "hold", "step": step, "contract": c(contract)}),
            TraceEvent::Reject { step, contract } => json!({"event": "reject", "step": step, "contract": c(contract)}),
            TraceEvent::Charge { contract } => json!({"event": "charge", "contract": c(contract)}),
        })
        .collect();
    json!({"steps": trace.steps(), "events": events})
}

pub fn metrics_json(econ: &Economy, m: &MetricsSummary) -> Value {
    let names = |v: &Option<Vec<CadetId>>| {
        v.as_ref()
            .map(|v| v.iter().map(|c| econ.cadet_name(*c).to_string()).collect::<Vec<_>>())
    };
    let pairs = |v: &[crate::analysis::ReversalPair]| {
        v.iter()
            .map(|p| {
                json!({
                    "cadet": econ.cadet_name(p.cadet),
                    "other": econ.cadet_name(p.other),
                    "branch": econ.branch_name(p.branch),
                })
            })
            .collect::<Vec<_>>()
    };
    let per_branch: Vec<Value> = m
        .per_branch
        .iter()
        .map(|b| {
            json!({
                "branch": econ.branch_name(b.branch),
                "bradso_charged": b.bradso_charged,
                "strategic_bradso": b.strategic_bradso,
                "bradso_ic_failures": b.bradso_ic_failures,
                "detectable_priority_reversals": b.detectable_priority_reversals,
                "priority_reversals": b.priority_reversals,
            })
        })
        .collect();
    json!({
        "bradso_charged_total": m.bradso_charged_total,
        "strategic_bradso": names(&m.strategic_bradso),
        "bradso_ic_failures": names(&m.bradso_ic_failures),
        "detectable_priority_reversals": pairs(&m.detectable_priority_reversals),
        "priority_reversals": m.priority_reversals.as_deref().map(pairs),
        "partial": m.partial,
        "per_branch": per_branch,
    })
}

fn allocation_file(cli: &Cli, econ: &Economy, alloc: &Allocation) -> (String, String) {
    match cli.format {
        Format::Csv => ("allocation.csv".into(), allocation_csv(econ, alloc)),
        Format::Json => ("allocation.json".into(), pretty(&allocation_json(econ, alloc))),
    }
}

fn run_mechanism(
    name: MechanismName,
    b: &LoadedBundle,
) -> Result<(Allocation, Option<MechanismTrace>, MetricsSummary)> {
    let econ = &b.economy;
    if name.is_direct() {
        let prefs = need_prefs(b)?;
        let (alloc, trace) = match name {
            MechanismName::ComBradso => {
                let (a, t) = com_bradso(econ, prefs, &econ.oml())?;
                (a, Some(t))
            }
            _ => (phi_br(econ, prefs)?, None),
        };
        let mech: &dyn DirectMechanism = if name == MechanismName::ComBradso { &ComBradso } else { &PhiBr };
        let m = compute_metrics(MechanismRun::Direct(mech, prefs), econ, &alloc, None)?;
        return Ok((alloc, trace, m));
    }
    let s = strategies_of(b)?;
    let (alloc, trace, mech): (Allocation, Option<MechanismTrace>, &dyn QuasiDirectMechanism) = match name {
        MechanismName::Usma2006 => {
            let (a, t) = usma2006(econ, &s)?;
            (a, Some(t), &Usma2006)
        }
        MechanismName::Usma2020 => {
            let (a, t) = usma2020(econ, &s)?;
            (a, Some(t), &Usma2020)
        }
        _ => (QuasiDirectMechanism::run(&SerialDictatorship, econ, &s)?, None, &SerialDictatorship),
    };
    let m = compute_metrics(MechanismRun::Quasi(mech, &s), econ, &alloc, b.preferences.as_deref())?;
    Ok((alloc, trace, m))
}

fn cmd_run(cli: &Cli, a: &RunArgs) -> Result<Outcome> {
    let b = load_bundle(&a.bundle.bundle)?;
    let econ = &b.economy;
    let (alloc, trace, metrics) = run_mechanism(a.mechanism, &b)?;
    let mut files = BTreeMap::new();
    let (name, text) = allocation_file(cli, econ, &alloc);
    files.insert(name, text);
    if let Some(t) = &trace {
        files.insert("trace.json".into(), pretty(&trace_json(econ, t)));
    }
    files.insert("metrics.json".into(), pretty(&metrics_json(econ, &metrics)));
    Ok(Outcome {
        files,
        summary: json!({
            "command": "run",
            "mechanism": a.mechanism.as_str(),
            "matched": alloc.len(),
            "bradso_charged": alloc.increased_total(),
        }),
    })
}

fn parse_axioms(s: &str) -> Result<Vec<Axiom>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Axiom::ALL.to_vec());
    }
    s.split(',').filter(|x| !x.trim().is_empty()).map(str::parse).collect()
}

fn cmd_audit(cli: &Cli, a: &AuditArgs) -> Result<Outcome> {
    let b = load_bundle(&a.bundle.bundle)?;
    let econ = &b.economy;
    let axioms = parse_axioms(&a.axioms)?;
    let alloc = match &a.allocation {
        Some(p) => parse_allocation(p, econ)?,
        None => run_mechanism(a.mechanism, &b)?.0,
    };
    let validity = crate::model::validate_allocation(econ, &alloc)?;
    if !validity.is_ok() {
        return Err(Error::invariant("allocation is feasible", format!("{:?}", validity.violations)));
    }
    let strategies = strategies_of(&b)?;
    let direct: Box<dyn DirectMechanism> = match a.mechanism {
        MechanismName::ComBradso => Box::new(ComBradso),
        MechanismName::PhiBr => Box::new(PhiBr),
        MechanismName::Usma2006 => Box::new(Projected(Usma2006)),
        MechanismName::Usma2020 => Box::new(Projected(Usma2020)),
        MechanismName::SerialDictatorship => Box::new(Projected(SerialDictatorship)),
    };
    let quasi: Box<dyn QuasiDirectMechanism> = match a.mechanism {
        MechanismName::ComBradso => Box::new(Consecutive(ComBradso)),
        MechanismName::PhiBr => Box::new(Consecutive(PhiBr)),
        MechanismName::Usma2006 => Box::new(Usma2006),
        MechanismName::Usma2020 => Box::new(Usma2020),
        MechanismName::SerialDictatorship => Box::new(SerialDictatorship),
    };
    let mut reports: Vec<AxiomReport> = Vec::with_capacity(axioms.len());
    for ax in &axioms {
        let r = match ax {
            Axiom::IndividualRationality => check_individual_rationality(econ, need_prefs(&b)?, &alloc)?,
            Axiom::NonWastefulness => check_non_wastefulness(econ, need_prefs(&b)?, &alloc)?,
            Axiom::NoPriorityReversals => check_priority_reversals(econ, need_prefs(&b)?, &alloc)?,
            Axiom::BradsoEnforcement => check_bradso_enforcement(econ, need_prefs(&b)?, &alloc)?,
            Axiom::StrategyProofness => check_strategy_proofness(
                direct.as_ref(),
                econ,
                need_prefs(&b)?,
                DeviationScope::SingleCadetExhaustive,
                cli.budget,
            )?,
            Axiom::BradsoIc => check_bradso_ic(quasi.as_ref(), econ, &strategies)?,
            Axiom::StrategicBradso => check_strategic_bradso(quasi.as_ref(), econ, &strategies)?,
            Axiom::NoDetectablePriorityReversals => check_detectable_priority_reversals(econ, &strategies, &alloc)?,
        };
        reports.push(r);
    }
    let all_hold = reports.iter().all(AxiomReport::holds);
    let verdicts: serde_json::Map<String, Value> =
        reports.iter().map(|r| (r.axiom.as_str().to_string(), json!(r.verdict))).collect();
    let body = json!({
        "mechanism": a.mechanism.as_str(),
        "all_hold": all_hold,
        "reports": reports.iter().map(|r| r.to_json(econ)).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        files: BTreeMap::from([("audit.json".to_string(), pretty(&body))]),
        summary: json!({"command": "audit", "all_hold": all_hold, "verdicts": verdicts}),
    })
}

fn cmd_equilibrium(cli: &Cli, a: &EquilibriumArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&a.game).map_err(|e| Error::io(&a.game, e))?;
    let spec = GameSpec::from_json(&text)?;
    let (body, summary) = match spec.build()? {
        Game::Complete(g) => {
            let econ = g.economy();
            let eq = enumerate_nash(&g, cli.budget)?;
            let verdict = verify_equilibrium_outcomes(econ, g.preferences(), cli.budget)?;
            let willing = |p: &[bool]| {
                p.iter()
                    .enumerate()
                    .filter(|(_, w)| **w)
                    .map(|(i, _)| econ.cadet_name(CadetId(i as u32)).to_string())
                    .collect::<Vec<_>>()
            };
            let names = |v: &[CadetId]| v.iter().map(|c| econ.cadet_name(*c).to_string()).collect::<Vec<_>>();
            let equilibria: Vec<Value> = eq
                .iter()
                .map(|e| {
                    json!({
                        "willing": willing(&e.profile),
                        "outcome": allocation_json(econ, &e.outcome),
                        "idle_volunteers": names(&e.idle_volunteers),
                    })
                })
                .collect();
            let outcomes: Vec<Value> = verdict.distinct_outcomes.iter().map(|o| allocation_json(econ, o)).collect();
            let body = json!({
                "kind": "nash",
                "equilibria": equilibria,
                "distinct_outcomes": outcomes,
                "direct_outcome": allocation_json(econ, &verdict.direct_outcome),
                "direct_outcome_is_equilibrium": verdict.direct_outcome_is_equilibrium,
                "unique_outcome_equals_direct": verdict.holds,
                "unique_outcome_equals_direct_without_idle_volunteers": verdict.holds_without_idle_volunteers,
            });
            let summary = json!({
                "command": "equilibrium",
                "kind": "nash",
                "equilibria": eq.len(),
                "distinct_outcomes": verdict.distinct_outcomes.len(),
            });
            (body, summary)
        }
        Game::Bayesian(g) => {
            let econ = g.economy();
            let bne = find_bne(&g, cli.budget)?;
            let rules: Vec<Value> = bne
                .iter()
                .map(|e| {
                    let rule: serde_json::Map<String, Value> = e
                        .rule
                        .iter()
                        .enumerate()
                        .map(|(i, acts)| {
                            let by_type: serde_json::Map<String, Value> = g.types()[i]
                                .iter()
                                .zip(acts)
                                .map(|(t, w)| (t.name.clone(), json!(w)))
                                .collect();
                            (econ.cadet_name(CadetId(i as u32)).to_string(), Value::Object(by_type))
                        })
                        .collect();
                    json!({"willing": rule, "expected_utilities": e.expected_utilities})
                })
                .collect();
            let truthful = bne.iter().any(|e| e.rule == g.truthful_rule());
            let body = json!({"kind": "bayes_nash", "equilibria": rules, "truthful_is_equilibrium": truthful});
            let summary = json!({"command": "equilibrium", "kind": "bayes_nash", "equilibria": bne.len()});
            (body, summary)
        }
    };
    Ok(Outcome {
        files: BTreeMap::from([("equilibrium.json".to_string(), pretty(&body))]),
        summary,
    })
}

fn split_list<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::parse).collect()
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<Outcome> {
    let b = load_bundle(&a.bundle.bundle)?;
    let econ = &b.economy;
    let prefs = need_prefs(&b)?;
    let mut grid = SweepGrid::standard();
    if let Some(c) = &a.caps {
        grid.caps = split_list::<CapFraction>(c)?;
    }
    grid.policies = split_list::<PolicyKind>(&a.policies)?;
    grid.rounding = a.rounding.parse::<Rounding>()?;
    if grid.caps.is_empty() || grid.policies.is_empty() {
        return Err(Error::Config("sweep needs at least one cap and one policy".into()));
    }
    let result = sweep(econ, prefs, &grid)?;
    let per_branch = sweep_monotonicity(&result, &grid, false);
    let aggregate = sweep_monotonicity(&result, &grid, true);
    let v = |vs: &[crate::analysis::MonotonicityViolation]| {
        vs.iter()
            .map(|x| {
                json!({
                    "branch": x.branch.map_or("ALL", |b| econ.branch_name(b)),
                    "from": x.from, "to": x.to,
                    "charged_before": x.charged_before, "charged_after": x.charged_after,
                })
            })
            .collect::<Vec<_>>()
    };
    let mono = json!({
        "per_branch_violations": v(&per_branch),
        "aggregate_violations": v(&aggregate),
        "warnings": result.warnings,
    });
    let mut files = BTreeMap::new();
    match cli.format {
        Format::Csv => {
            files.insert("sweep.csv".to_string(), sweep_csv(econ, &result)?);
        }
        Format::Json => {
            let rows: Vec<Value> = result
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "cap_fraction": r.cap_fraction.to_string(),
                        "policy": r.policy.as_str(),
                        "branch_id": r.branch.map_or("ALL", |b| econ.branch_name(b)),
                        "bradso_cap": r.bradso_cap,
                        "bradso_charged": r.bradso_charged,
                        "detectable_priority_reversals": r.detectable_priority_reversals,
                        "priority_reversals": r.priority_reversals,
                    })
                })
                .collect();
            files.insert("sweep.json".to_string(), pretty(&Value::from(rows)));
        }
    }
    files.insert("sweep_plot.json".to_string(), pretty(&sweep_plot_json(econ, &grid, &result)));
    files.insert("sweep_monotonicity.json".to_string(), pretty(&mono));
    Ok(Outcome {
        files,
        summary: json!({
            "command": "sweep",
            "cells": grid.caps.len() * grid.policies.len(),
            "per_branch_violations": per_branch.len(),
            "aggregate_violations": aggregate.len(),
        }),
    })
}

fn cmd_project(cli: &Cli, a: &BundleArg) -> Result<Outcome> {
    let b = load_bundle(&a.bundle)?;
    let econ = &b.economy;
    let s = project_truthful(need_prefs(&b)?);
    let files = match cli.format {
        Format::Csv => {
            let (st, w) = strategies_csvs(econ, &s);
            BTreeMap::from([
                (crate::io::STRATEGIES.to_string(), st),
                (crate::io::WILLING.to_string(), w),
            ])
        }
        Format::Json => {
            let rows: Vec<Value> = s
                .iter()
                .enumerate()
                .map(|(i, q)| {
                    json!({
                        "cadet_id": econ.cadet_name(CadetId(i as u32)),
                        "branches": q.branch_order().iter().map(|b| econ.branch_name(*b)).collect::<Vec<_>>(),
                        "willing": q.bradso_set().iter().map(|b| econ.branch_name(*b)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            BTreeMap::from([("strategies.json".to_string(), pretty(&Value::from(rows)))])
        }
    };
    let willing = s.iter().filter(|q| !q.bradso_set().is_empty()).count();
    Ok(Outcome {
        files,
        summary: json!({"command": "project", "cadets": s.len(), "cadets_willing_somewhere": willing}),
    })
}

fn read_config(path: &Path) -> Result<GeneratorConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_generate(cli: &Cli, a: &GenerateArgs) -> Result<Outcome> {
    let mut c = match &a.config {
        Some(p) => read_config(p)?,
        None => GeneratorConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(n) = a.cadets {
        c.cadets = n;
    }
    if let Some(m) = a.branches {
        c.branches = m;
    }
    if let Some(t) = &a.tier_shares {
        c.tier_shares = t
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Config(format!("tier share `{x}`: {e}"))))
            .collect::<Result<_>>()?;
    }
    if let Some(w) = a.willingness_rate {
        c.willingness_rate = w;
    }
    if let Some(f) = &a.cap_fraction {
        c.cap_fraction = f.parse()?;
    }
    if let Some(p) = &a.policy {
        c.policy = p.parse()?;
    }
    let g = generate(&c)?;
    Ok(Outcome {
        files: g.bundle.all_files(),
        summary: json!({
            "command": "generate",
            "seed": c.seed,
            "cadets": c.cadets,
            "branches": c.branches,
            "tier_counts": g.bundle.manifest.tier_counts,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("branching").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn large_budget_needs_flag() {
        let d = tempfile::tempdir().unwrap();
        let out = d.path().to_str().unwrap();
        let cli = parse(&["generate", "--cadets", "3", "--branches", "1", "--budget", "2000000", "--out", out]);
        assert!(matches!(compute(&cli), Err(Error::Config(_))));
        let cli = parse(&[
            "generate", "--cadets", "3", "--branches", "1", "--budget", "2000000", "--allow-large-budget",
        ]);
        assert!(compute(&cli).is_ok());
    }

    #[test]
    fn axioms_list() {
        assert_eq!(parse_axioms("all").unwrap().len(), 8);
        assert_eq!(
            parse_axioms("non-wastefulness,bradso_ic").unwrap(),
            vec![Axiom::NonWastefulness, Axiom::BradsoIc]
        );
        assert!(parse_axioms("fairness").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_command(["branching", "frobnicate"]), 2);
        assert_eq!(run_command(["branching", "--help"]), 0);
    }

    #[test]
    fn failed_command_writes_nothing() {
        let d = tempfile::tempdir().unwrap();
        let out = d.path().join("out");
        let code = run_command([
            "branching",
            "run",
            "--bundle",
            d.path().join("missing").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 1);
        assert!(!out.exists());
    }
}
