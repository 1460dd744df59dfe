//! `cdwb` — batch front door for the determinateness workbench.
//!
//! Subcommands: `build` runs the staged pipeline over a seed file and
//! writes the stage trace; `check` audits a trace against every axiom and
//! property suite; `ev` runs the satisfaction-class extension over a
//! formula set; `sim` decides syntactic similarity for pairs.
//!
//! Exit codes: 0 success (for `build`: fixpoint found; for `check`/`ev`:
//! all non-vacuous checks pass), 1 input or evaluation error, 2 stage cap
//! hit without a fixpoint, 3 a check failed, 4 extension precondition
//! violated.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cdwb_core::arith::EvalCaps;
use cdwb_core::checker::check_pipeline;
use cdwb_core::detcomp::{derive_fragment_pair, FragmentPair};
use cdwb_core::engine::{run_stages, t_final_table, StageTrace};
use cdwb_core::ev::{check_gamma, ev_extend, EvError, EvLimits, PrevGeneration};
use cdwb_core::intern::{Code, SentenceTable};
use cdwb_core::parse::{parse_formula_file, parse_formula_str, parse_source};
use cdwb_core::satclass::{similar, similar_oracle, SatClassError, SatEntry};
use cdwb_core::syntax::Assignment;
use cdwb_core::translate::to_disjunctive;
use cdwb_core::universe::{build_universe, Universe, UniverseCaps};

#[derive(Parser)]
#[command(name = "cdwb", version, about = "Staged determinateness and compositional truth over finite arithmetic fragments")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Seed file: one `name := formula` declaration per line.
    #[arg(long)]
    seeds: PathBuf,
    /// Upper end of the contiguous witness range 0..=N.
    #[arg(long, default_value_t = 3)]
    witness_max: u64,
    /// Universe size cap.
    #[arg(long, default_value_t = 5000)]
    cap_sentences: usize,
    /// Term value cap.
    #[arg(long, default_value_t = 1_000_000_000)]
    cap_value: u64,
}

#[derive(Subcommand)]
enum Commands {
    /// Build the universe, run the stage iteration, write the trace.
    Build {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Stage cap; defaults to |universe| + 2, which always suffices
        /// for a fixpoint.
        #[arg(long)]
        max_stages: Option<usize>,
        /// Write the stage-trace JSON here (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the universe dump JSON here.
        #[arg(long)]
        dump_universe: Option<PathBuf>,
        /// Re-run with a doubled witness range and report membership
        /// differences (surfacing witness-set sensitivity).
        #[arg(long)]
        diff_witness: bool,
    },
    /// Audit a trace file against the axiom and property suites.
    Check {
        /// Trace JSON produced by `build`.
        trace: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Write the check report JSON here (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the satisfaction-class extension for a formula set.
    Ev {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Formula file (seed grammar; conjunctive connectives are
        /// translated into the disjunctive fragment automatically).
        #[arg(long)]
        gamma: PathBuf,
        /// Entry cap for fragment and domain closures.
        #[arg(long, default_value_t = 50_000)]
        cap_entries: usize,
        /// Candidate determinate-entry dump replacing the
        /// pipeline-derived one (use together with --s0).
        #[arg(long)]
        d0: Option<PathBuf>,
        /// Candidate satisfied-entry dump replacing the pipeline-derived
        /// one (use together with --d0).
        #[arg(long)]
        s0: Option<PathBuf>,
        /// Write the satisfaction-class dump JSON here (stdout when
        /// omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the derived (d0, s0) pair here, for reuse via --d0/--s0.
        #[arg(long)]
        dump_pair: Option<PathBuf>,
    },
    /// Decide syntactic similarity for formula/assignment pairs.
    Sim {
        /// Pairs file: one `formula [@ v=1,w=2] ;; formula [@ ...]` per line.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 1_000_000_000)]
        cap_value: u64,
        /// Template-position bound for the brute-force oracle.
        #[arg(long, default_value_t = 14)]
        oracle_bound: usize,
        /// Write the verdicts JSON here (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Commands::Build {
            pipeline,
            max_stages,
            out,
            dump_universe,
            diff_witness,
        } => cmd_build(&pipeline, max_stages, out, dump_universe, diff_witness),
        Commands::Check { trace, pipeline, out } => cmd_check(&trace, &pipeline, out),
        Commands::Ev {
            pipeline,
            gamma,
            cap_entries,
            d0,
            s0,
            out,
            dump_pair,
        } => cmd_ev(&pipeline, &gamma, cap_entries, d0, s0, out, dump_pair),
        Commands::Sim {
            pairs,
            cap_value,
            oracle_bound,
            out,
        } => cmd_sim(&pairs, cap_value, oracle_bound, out),
    }
}

struct Pipeline {
    table: SentenceTable,
    universe: Universe,
}

fn load_pipeline(args: &PipelineArgs) -> Result<Pipeline> {
    let text = fs::read_to_string(&args.seeds)
        .with_context(|| format!("reading seed file {}", args.seeds.display()))?;
    let mut table = SentenceTable::new();
    let names = parse_source(&text, &mut table).context("parsing seed file")?;
    let seeds: BTreeSet<Code> = names.values().copied().collect();
    let caps = UniverseCaps {
        max_sentences: args.cap_sentences,
        eval: EvalCaps {
            max_value: args.cap_value,
        },
    };
    let universe = build_universe(&mut table, &seeds, args.witness_max, &caps)
        .context("building the universe")?;
    Ok(Pipeline { table, universe })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct WitnessDiff {
    witness_max: u64,
    doubled_witness_max: u64,
    d_omega_added: Vec<Code>,
    d_omega_removed: Vec<Code>,
    t_omega_added: Vec<Code>,
    t_omega_removed: Vec<Code>,
}

fn cmd_build(
    args: &PipelineArgs,
    max_stages: Option<usize>,
    out: Option<PathBuf>,
    dump_universe: Option<PathBuf>,
    diff_witness: bool,
) -> Result<u8> {
    let p = load_pipeline(args)?;
    let stages = max_stages.unwrap_or(p.universe.sentences.len() + 2);
    let trace = run_stages(&p.universe, &p.table, stages).context("running the stage iteration")?;

    write_json(&trace, out.as_deref())?;
    if let Some(path) = dump_universe {
        write_json(&p.universe.dump(&p.table), Some(&path))?;
    }
    eprintln!(
        "universe: {} sentences, {} witnesses; stages computed: {}; fixpoint: {}",
        p.universe.sentences.len(),
        p.universe.witnesses.len(),
        trace.stages.len(),
        trace
            .fixpoint_index
            .map(|k| k.to_string())
            .unwrap_or_else(|| "not reached".into()),
    );

    if diff_witness {
        let doubled = PipelineArgs {
            witness_max: args.witness_max * 2,
            ..args.clone()
        };
        let p2 = load_pipeline(&doubled)?;
        let stages2 = max_stages.unwrap_or(p2.universe.sentences.len() + 2);
        let trace2 = run_stages(&p2.universe, &p2.table, stages2)?;
        let diff = WitnessDiff {
            witness_max: args.witness_max,
            doubled_witness_max: doubled.witness_max,
            d_omega_added: trace2.d_omega.difference(&trace.d_omega).copied().collect(),
            d_omega_removed: trace.d_omega.difference(&trace2.d_omega).copied().collect(),
            t_omega_added: trace2.t_omega.difference(&trace.t_omega).copied().collect(),
            t_omega_removed: trace.t_omega.difference(&trace2.t_omega).copied().collect(),
        };
        println!("{}", serde_json::to_string_pretty(&diff)?);
    }

    Ok(if trace.fixpoint_index.is_some() { 0 } else { 2 })
}

fn cmd_check(trace_path: &Path, args: &PipelineArgs, out: Option<PathBuf>) -> Result<u8> {
    let text = fs::read_to_string(trace_path)
        .with_context(|| format!("reading trace {}", trace_path.display()))?;
    let trace: StageTrace = serde_json::from_str(&text).context("parsing trace JSON")?;
    let p = load_pipeline(args)?;
    for code in trace.d_omega.iter().chain(trace.t_omega.iter()) {
        if !p.universe.sentences.contains(code) {
            bail!("trace mentions code {code}, which is not in the rebuilt universe");
        }
    }
    let t_table = t_final_table(&p.universe, &p.table, &trace.d_omega, &trace.t_omega)
        .context("tabulating the final truth predicate")?;
    let report = check_pipeline(&trace, &t_table, &p.universe, &p.table).sorted();
    write_json(&report, out.as_deref())?;
    let failures: Vec<&str> = report.failures().map(|c| c.axiom.as_str()).collect();
    if failures.is_empty() {
        eprintln!("all checks pass ({} entries)", report.checks.len());
        Ok(0)
    } else {
        eprintln!("failed checks: {}", failures.join(", "));
        Ok(3)
    }
}

fn load_entries(path: &Path) -> Result<BTreeSet<SatEntry>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading entry dump {}", path.display()))?;
    let entries: Vec<SatEntry> = serde_json::from_str(&text).context("parsing entry dump")?;
    Ok(entries.into_iter().collect())
}

#[derive(Serialize)]
struct PairDump {
    d0: Vec<SatEntry>,
    s0: Vec<SatEntry>,
}

fn cmd_ev(
    args: &PipelineArgs,
    gamma_path: &Path,
    cap_entries: usize,
    d0_path: Option<PathBuf>,
    s0_path: Option<PathBuf>,
    out: Option<PathBuf>,
    dump_pair: Option<PathBuf>,
) -> Result<u8> {
    let mut p = load_pipeline(args)?;
    let caps = p.universe.caps.eval;
    let limits = EvLimits {
        max_entries: cap_entries,
    };

    let trace = run_stages(&p.universe, &p.table, p.universe.sentences.len() + 2)?;
    // The fragment is always derived (interning is deterministic, so the
    // codes in a dumped pair line up with a rerun on the same flags);
    // --d0/--s0 then replace the derived memberships with the candidate.
    let mut pair = derive_fragment_pair(
        &mut p.table,
        &p.universe,
        &trace.d_omega,
        &trace.t_omega,
        cap_entries,
    )
    .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    match (&d0_path, &s0_path) {
        (None, None) => {}
        (Some(d0), Some(s0)) => {
            pair = FragmentPair {
                fragment: pair.fragment,
                d0: load_entries(d0)?,
                s0: load_entries(s0)?,
            };
        }
        _ => bail!("--d0 and --s0 must be given together"),
    }
    if let Some(path) = dump_pair {
        let dump = PairDump {
            d0: pair.d0.iter().cloned().collect(),
            s0: pair.s0.iter().cloned().collect(),
        };
        write_json(&dump, Some(&path))?;
    }

    let gamma_text = fs::read_to_string(gamma_path)
        .with_context(|| format!("reading formula file {}", gamma_path.display()))?;
    let gamma_names =
        parse_formula_file(&gamma_text, &mut p.table).context("parsing formula file")?;
    let mut gamma = BTreeSet::new();
    for code in gamma_names.values() {
        let phi = p
            .table
            .decode(*code)
            .expect("bound declaration is interned")
            .clone();
        gamma.insert(p.table.intern(to_disjunctive(&phi)));
    }

    let witnesses = p.universe.witnesses.clone();
    let extension = match ev_extend(
        &mut p.table,
        &pair.fragment,
        &pair.d0,
        &pair.s0,
        &PrevGeneration::default(),
        &gamma,
        &witnesses,
        &caps,
        &limits,
    ) {
        Ok(ext) => ext,
        Err(EvError::Precondition { report, first }) => {
            eprintln!("input pair is not determinately compositional: {first}");
            write_json(&report.sorted(), out.as_deref())?;
            return Ok(4);
        }
        Err(e) => return Err(anyhow::anyhow!(e.to_string())),
    };

    let entries: Vec<SatEntry> = extension.satisfied.iter().cloned().collect();
    write_json(&entries, out.as_deref())?;

    let report = check_gamma(
        &mut p.table,
        &extension.satisfied,
        &gamma,
        &pair.d0,
        &pair.s0,
        &PrevGeneration::default(),
        &witnesses,
        &caps,
        &limits,
    )
    .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    let failures: Vec<&str> = report.failures().map(|c| c.axiom.as_str()).collect();
    eprintln!(
        "extension over {} entries ({} satisfied); checks: {}",
        extension.domain.len(),
        extension.satisfied.len(),
        if failures.is_empty() {
            "all pass".to_string()
        } else {
            format!("FAILED {}", failures.join(", "))
        }
    );
    Ok(if failures.is_empty() { 0 } else { 3 })
}

#[derive(Serialize)]
struct SimVerdict {
    left: String,
    right: String,
    similar: bool,
    /// Oracle verdict; absent when the pair exceeds the oracle bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<bool>,
}

fn parse_side(text: &str) -> Result<(String, Assignment)> {
    let (formula_text, binding_text) = match text.split_once('@') {
        Some((f, b)) => (f.trim(), b.trim()),
        None => (text.trim(), ""),
    };
    let mut pairs = Vec::new();
    if !binding_text.is_empty() {
        for part in binding_text.split(',') {
            let (var, value) = part
                .split_once('=')
                .with_context(|| format!("binding `{part}` is not `var=value`"))?;
            let n: u64 = value.trim().parse().context("binding value")?;
            pairs.push((var.trim().to_string(), n));
        }
    }
    Ok((formula_text.to_string(), Assignment::from_pairs(pairs)))
}

fn cmd_sim(
    pairs_path: &Path,
    cap_value: u64,
    oracle_bound: usize,
    out: Option<PathBuf>,
) -> Result<u8> {
    let caps = EvalCaps {
        max_value: cap_value,
    };
    let text = fs::read_to_string(pairs_path)
        .with_context(|| format!("reading pairs file {}", pairs_path.display()))?;
    let mut table = SentenceTable::new();
    let mut verdicts = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("# ") || line == "#" {
            continue;
        }
        let (lhs, rhs) = line
            .split_once(";;")
            .with_context(|| format!("line {}: expected `left ;; right`", idx + 1))?;
        let (ltext, lalpha) = parse_side(lhs)?;
        let (rtext, ralpha) = parse_side(rhs)?;
        let lphi = parse_formula_str(&ltext).with_context(|| format!("line {}", idx + 1))?;
        let rphi = parse_formula_str(&rtext).with_context(|| format!("line {}", idx + 1))?;
        let a = SatEntry::new(table.intern(lphi), lalpha);
        let b = SatEntry::new(table.intern(rphi), ralpha);
        let s = similar(&table, &a, &b, &caps).map_err(|e| anyhow::anyhow!(e.to_string()))?;
        let oracle = match similar_oracle(&table, &a, &b, &caps, oracle_bound) {
            Ok(v) => Some(v),
            Err(SatClassError::OracleBound { .. }) => None,
            Err(e) => return Err(anyhow::anyhow!(e.to_string())),
        };
        verdicts.push(SimVerdict {
            left: format!("{ltext} @ {}", a.assignment),
            right: format!("{rtext} @ {}", b.assignment),
            similar: s,
            oracle,
        });
    }
    write_json(&verdicts, out.as_deref())?;
    Ok(0)
}
