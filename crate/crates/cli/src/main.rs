//! Command-line front-end: parsing, evaluation, refinement, level
//! statistics, classification, extensions, alienated paths, separation
//! witnesses, the fanout builder, shift-window examples, and tautology
//! checks. All outputs are deterministic for a fixed configuration.

use std::collections::HashSet;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use ck_core::cellbuilder::{
    alienated_extend, beta_map, fanout_build, fanout_checks,
    good_subset_check, separation_witness, third_agent_structure, Schedule,
};
use ck_core::commonknowledge::{classify, ck_implies, CkSystem};
use ck_core::error::CkError;
use ck_core::formula::{parse, render, Formula};
use ck_core::kripke::{KripkeStructure, StructureJson};
use ck_core::shiftgen::{build_shift_structure, theory_separation_profile};
use ck_core::{AgentId, AtomId, AtomStore, WorkspaceConfig};

#[derive(Parser)]
#[command(
    name = "ck",
    about = "Multi-agent S5 epistemic logic: canonical finite models, \
             common-knowledge classification, and finite-depth cell constructions",
    version
)]
struct Cli {
    #[command(flatten)]
    workspace: WorkspaceArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WorkspaceArgs {
    /// Number of primitive propositions.
    #[arg(long, global = true, default_value_t = 1)]
    props: usize,
    /// Number of agents.
    #[arg(long, global = true, default_value_t = 2)]
    agents: usize,
    /// Full-enumeration level cap (env CK_FULL_CAP overrides the default).
    #[arg(long, global = true)]
    full_cap: Option<u32>,
    /// Lazy per-atom level cap (env CK_LAZY_CAP overrides the default).
    #[arg(long, global = true)]
    lazy_cap: Option<u32>,
    /// Output format; dot applies to structure-producing commands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and report its canonical rendering and depth.
    Parse {
        #[arg(short, long)]
        formula: String,
    },
    /// Evaluate a formula on a structure loaded from a JSON file.
    Eval {
        #[arg(short, long)]
        formula: String,
        #[arg(short, long)]
        model: String,
    },
    /// Run the refinement sequence on a structure file.
    Refine {
        #[arg(short, long)]
        model: String,
    },
    /// Enumerate a canonical level and report statistics.
    Omega {
        #[arg(long)]
        level: u32,
        /// Print atom count, per-agent block counts, and the diameter.
        #[arg(long, default_value_t = true)]
        stats: bool,
        /// Include the full atom registry in the output.
        #[arg(long, default_value_t = false)]
        atoms: bool,
    },
    /// Classify a formula: closure, connectedness, generativity.
    Classify {
        #[arg(short, long)]
        formula: String,
        /// Cap for the generative-level scan.
        #[arg(long, default_value_t = 2)]
        gen_cap: u32,
    },
    /// List extensions of one atom of a level (restricted when a formula
    /// is given).
    Extend {
        #[arg(long)]
        level: u32,
        /// Index of the atom in the canonical order of its level.
        #[arg(long)]
        index: usize,
        #[arg(short, long)]
        formula: Option<String>,
    },
    /// Walk an alienated extension along a schedule.
    Alienate {
        #[arg(short, long)]
        formula: String,
        /// Schedule as "prefix:rule", e.g. "1,3:+2", "0:all", "0,5,11:grow".
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        target: u32,
    },
    /// Certify a separation lower bound between two alienated paths.
    Separate {
        #[arg(short, long)]
        formula: String,
        #[arg(long)]
        schedule_s: String,
        #[arg(long)]
        schedule_t: String,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        horizon: u64,
    },
    /// Build the two-family fanout state and run its checks.
    Fanout {
        #[arg(short, long)]
        formula: String,
        #[arg(long)]
        schedule: String,
        /// Subset schedule driving the fresh-B levels; defaults to the main
        /// schedule.
        #[arg(long)]
        t_schedule: Option<String>,
        #[arg(long)]
        cap: u32,
        /// Enforce the theorem-scale schedule conditions.
        #[arg(long, default_value_t = false)]
        strict: bool,
    },
    /// Generate a circular-window shift structure.
    Shift {
        #[arg(long)]
        n: usize,
        /// Include the symbol-flip third agent.
        #[arg(long, default_value_t = false)]
        pi: bool,
        /// Depth for the separation profile.
        #[arg(long, default_value_t = 4)]
        profile_depth: u32,
    },
    /// Decide whether a formula is a tautology.
    Tautology {
        #[arg(short, long)]
        formula: String,
    },
    /// Compute the doubling-tower image of a schedule.
    Beta {
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        horizon: u64,
    },
    /// Augment a level with the third no-information partition and check a
    /// good subset.
    ThirdAgent {
        #[arg(long)]
        level: u32,
        /// Check the alienated images of this schedule as a good subset.
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Bounded search: does common knowledge of one formula imply another?
    Implies {
        #[arg(short, long)]
        formula: String,
        #[arg(short, long)]
        goal: String,
        #[arg(long, default_value_t = 2)]
        cap: u32,
    },
}

fn env_cap(name: &str) -> Option<u32> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn build_config(args: &WorkspaceArgs) -> Result<WorkspaceConfig, CkError> {
    let mut cfg = WorkspaceConfig::new(args.props, args.agents)?;
    if let Some(cap) = args.full_cap.or_else(|| env_cap("CK_FULL_CAP")) {
        cfg = cfg.with_full_enum_cap(cap);
    }
    if let Some(cap) = args.lazy_cap.or_else(|| env_cap("CK_LAZY_CAP")) {
        cfg = cfg.with_lazy_cap(cap);
    }
    Ok(cfg)
}

fn exit_code_for(err: &CkError) -> u8 {
    match err {
        CkError::Parse { .. } | CkError::PropOutOfRange { .. } | CkError::AgentOutOfRange { .. } => 2,
        CkError::CapExceeded { .. } | CkError::SizeGuardExceeded { .. } => 3,
        _ => 4,
    }
}

fn error_json(err: &CkError) -> String {
    let code = match exit_code_for(err) {
        2 => "parse",
        3 => "cap",
        _ => "precondition",
    };
    serde_json::to_string(&json!({
        "error": { "code": code, "message": err.to_string() }
    }))
    .expect("error serialization cannot fail")
}

fn emit<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serialization cannot fail")
    );
}

fn load_structure(path: &str) -> Result<KripkeStructure, CkError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CkError::MalformedStructure(format!("cannot read {path}: {e}")))?;
    let json: StructureJson = serde_json::from_str(&text)
        .map_err(|e| CkError::MalformedStructure(format!("bad structure JSON: {e}")))?;
    KripkeStructure::from_json(&json)
}

fn atom_at(store: &AtomStore, level: u32, index: usize) -> Result<AtomId, CkError> {
    let atoms = store.omega_level(level)?;
    atoms.get(index).copied().ok_or_else(|| {
        CkError::Precondition(format!(
            "index {index} out of range for level {level} with {} atoms",
            atoms.len()
        ))
    })
}

fn run(cli: Cli) -> Result<(), CkError> {
    let cfg = build_config(&cli.workspace)?;
    let format = cli.workspace.format;
    match cli.command {
        Command::Parse { formula } => {
            let f = parse(&formula, &cfg)?;
            emit(&json!({
                "formula": formula,
                "rendered": render(&f),
                "depth": f.depth(),
            }));
        }
        Command::Eval { formula, model } => {
            let structure = load_structure(&model)?;
            let model_cfg = WorkspaceConfig::new(structure.num_props(), structure.num_agents())?;
            let f = parse(&formula, &model_cfg)?;
            let truth = structure.alpha(&f)?;
            match format {
                Format::Dot => print!("{}", structure.to_dot("model")),
                _ => emit(&json!({
                    "formula": render(&f),
                    "true_at": truth.to_vec(),
                    "count": truth.count(),
                    "points": structure.num_points(),
                })),
            }
        }
        Command::Refine { model } => {
            let structure = load_structure(&model)?;
            let rounds = structure.refine();
            let stable = rounds.last().cloned().unwrap_or_default();
            emit(&json!({
                "rounds": rounds,
                "stabilization_index": rounds.len() - 1,
                "classes": stable.iter().copied().max().map(|m| m + 1).unwrap_or(0),
            }));
        }
        Command::Omega { level, stats, atoms } => {
            let store = AtomStore::new(cfg.clone());
            let view = store.level_view(level)?;
            match format {
                Format::Dot => print!("{}", view.structure.to_dot("omega")),
                _ => {
                    let block_counts: Vec<usize> = (0..cfg.num_agents)
                        .map(|j| view.structure.blocks_of_agent(AgentId(j)).len())
                        .collect();
                    let mut body = json!({
                        "level": level,
                        "atom_count": view.atoms.len(),
                    });
                    if stats {
                        body["block_counts"] = json!(block_counts);
                        body["diameter"] = json!(view.structure.diameter());
                        body["connected"] = json!(view.structure.is_connected());
                    }
                    if atoms {
                        body["atoms"] = json!(store.export_registry(&view.atoms)?);
                    }
                    emit(&body);
                }
            }
        }
        Command::Classify { formula, gen_cap } => {
            let store = Arc::new(AtomStore::new(cfg.clone()));
            let f = parse(&formula, &cfg)?;
            let report = classify(&store, &f, gen_cap)?;
            emit(&report);
        }
        Command::Extend {
            level,
            index,
            formula,
        } => {
            let store = Arc::new(AtomStore::new(cfg.clone()));
            let w = atom_at(&store, level, index)?;
            match formula {
                None => {
                    let extensions = store.extensions(w)?;
                    emit(&json!({
                        "atom": w,
                        "level": level,
                        "extensions": extensions,
                        "count": extensions.len(),
                        "registry": store.export_registry(&extensions)?,
                    }));
                }
                Some(text) => {
                    let f = parse(&text, &cfg)?;
                    let sys = CkSystem::new(store.clone(), f)?;
                    let extensions = sys.restricted_extensions(w)?;
                    let least = sys.least_info_extension(w)?;
                    emit(&json!({
                        "atom": w,
                        "level": level,
                        "restricted_extensions": extensions,
                        "count": extensions.len(),
                        "least_information": least,
                        "registry": store.export_registry(&extensions)?,
                    }));
                }
            }
        }
        Command::Alienate {
            formula,
            schedule,
            level,
            index,
            target,
        } => {
            let store = Arc::new(AtomStore::new(cfg.clone()));
            let f = parse(&formula, &cfg)?;
            let sys = CkSystem::new(store.clone(), f)?;
            let sched = Schedule::parse(&schedule)?;
            let atoms = sys.level(level)?;
            let w = *atoms.atoms.get(index).ok_or_else(|| {
                CkError::Precondition(format!("index {index} out of range at level {level}"))
            })?;
            let path = alienated_extend(&sys, &sched, w, target)?;
            emit(&json!({
                "schedule": sched.to_spec_string(),
                "entries": path.entries,
                "registry": store.export_registry(&[path.final_atom()])?,
            }));
        }
        Command::Separate {
            formula,
            schedule_s,
            schedule_t,
            level,
            index,
            horizon,
        } => {
            let store = Arc::new(AtomStore::new(cfg.clone()));
            let f = parse(&formula, &cfg)?;
            let sys = CkSystem::new(store.clone(), f)?;
            let s = Schedule::parse(&schedule_s)?;
            let t = Schedule::parse(&schedule_t)?;
            let atoms = sys.level(level)?;
            let w = *atoms.atoms.get(index).ok_or_else(|| {
                CkError::Precondition(format!("index {index} out of range at level {level}"))
            })?;
            let outcome = separation_witness(&sys, &s, &t, w, horizon)?;
            emit(&outcome);
        }
        Command::Fanout {
            formula,
            schedule,
            t_schedule,
            cap,
            strict,
        } => {
            let store = Arc::new(AtomStore::new(cfg.clone()));
            let f = parse(&formula, &cfg)?;
            let sys = CkSystem::new(store.clone(), f)?;
            let s = Schedule::parse(&schedule)?;
            let t = Schedule::parse(t_schedule.as_deref().unwrap_or(&schedule))?;
            let state = fanout_build(&sys, &s, &t, cap, !strict)?;
            let checks = fanout_checks(&sys, &state)?;
            emit(&json!({
                "state": state,
                "checks": checks,
            }));
        }
        Command::Shift {
            n,
            pi,
            profile_depth,
        } => {
            let structure = build_shift_structure(n, pi)?;
            match format {
                Format::Dot => print!("{}", structure.to_dot("shift")),
                _ => {
                    let agents = structure.num_agents();
                    let shift_cfg = WorkspaceConfig::new(1, agents)?
                        .with_lazy_cap(profile_depth.max(1));
                    let store = AtomStore::new(shift_cfg);
                    let profile =
                        theory_separation_profile(&structure, &store, profile_depth)?;
                    emit(&json!({
                        "n": n,
                        "pi": pi,
                        "structure": structure.to_json(),
                        "profile": profile,
                    }));
                }
            }
        }
        Command::Tautology { formula } => {
            let store = AtomStore::new(cfg.clone());
            let f = parse(&formula, &cfg)?;
            let value = store.is_tautology(&f)?;
            emit(&json!({ "formula": render(&f), "tautology": value }));
        }
        Command::Beta { schedule, horizon } => {
            let s = Schedule::parse(&schedule)?;
            let image = beta_map(&s, horizon)?;
            emit(&json!({
                "schedule": s.to_spec_string(),
                "horizon": horizon,
                "members": image.members_up_to(horizon),
            }));
        }
        Command::ThirdAgent { level, schedule } => {
            let store = Arc::new(AtomStore::new(cfg.clone()));
            let (structure, atoms) = third_agent_structure(&store, level)?;
            match format {
                Format::Dot => print!("{}", structure.to_dot("third_agent")),
                _ => {
                    let mut body = json!({
                        "level": level,
                        "structure": structure.to_json(),
                        "radius": structure.radius(),
                    });
                    if let Some(text) = schedule {
                        let sched = Schedule::parse(&text)?;
                        // Alienated images of the schedule's base level.
                        let sys = CkSystem::new(store.clone(), Formula::top())?;
                        let base = sched.min() as u32;
                        let mut subset = HashSet::new();
                        for &w in sys.level(base)?.atoms.iter() {
                            let path = alienated_extend(&sys, &sched, w, level)?;
                            subset.insert(path.final_atom());
                        }
                        let fiber_levels: Vec<u32> = sched
                            .members_up_to(level.saturating_sub(1) as u64)
                            .into_iter()
                            .map(|m| m as u32)
                            .collect();
                        let good = good_subset_check(
                            &store,
                            &structure,
                            &atoms,
                            &subset,
                            &fiber_levels,
                        )?;
                        body["good_subset"] = json!({
                            "schedule": sched.to_spec_string(),
                            "subset_size": subset.len(),
                            "fiber_levels": fiber_levels,
                            "good": good,
                        });
                    }
                    emit(&body);
                }
            }
        }
        Command::Implies { formula, goal, cap } => {
            let store = AtomStore::new(cfg.clone());
            let f = parse(&formula, &cfg)?;
            let g = parse(&goal, &cfg)?;
            let outcome = ck_implies(&store, &f, &g, cap)?;
            emit(&outcome);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::from(exit_code_for(&err))
        }
    }
}
