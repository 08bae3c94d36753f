//! The `lab` command line, runnable in-process through [`run`].

use std::fs;
use std::path::{Path, PathBuf};
use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lab_core::builder::{Oracle, OtherOracle, PseudoRandomOracle, ScriptedOracle, TreeState};
use lab_core::forcing::{self, Condition, Opponent, PassThrough, RandomOpponent, SeededOracle, Sigma};
use lab_core::schema::{self, tagged};
use lab_core::topology::{self, IntervalDesc, OpenSetExpr};
use lab_core::treelab::{self, FiniteTree, NodeDesc, QKappaSeq};
use lab_core::{NodeRef, Ordinal};

#[derive(Parser)]
#[command(name = "lab", about = "Ordinal, forcing and tree laboratory")]
struct Cli {
    /// Refinement precision for c-value queries: `k` (2^-k), `n/d` or a decimal.
    #[arg(long, global = true)]
    precision: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build trees of height below ω² and check their invariants.
    #[command(subcommand)]
    Builder(BuilderCmd),
    /// Forcing conditions and the strategic-closure game.
    #[command(subcommand)]
    Forcing(ForcingCmd),
    /// ℚ_κ comparisons and specialization certificates.
    #[command(subcommand)]
    Treelab(TreelabCmd),
    /// Normality separators on built trees.
    #[command(subcommand)]
    Topology(TopologyCmd),
}

#[derive(Args, Clone)]
struct BuildArgs {
    #[arg(long, default_value = "w*2")]
    height: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `other`, `pseudorandom` or `scripted:FILE`.
    #[arg(long, default_value = "pseudorandom")]
    oracle: String,
    #[arg(long, default_value_t = 12)]
    unfold: usize,
}

#[derive(Subcommand)]
enum BuilderCmd {
    /// Build the tree and emit its state.
    Run {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Low-level transcripts of every limit level.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Build the tree and re-check every engine invariant.
    Check {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ForcingCmd {
    /// Play the strategic-closure game against an opponent.
    Play {
        /// Game length: a natural number or `w`.
        #[arg(long, default_value = "6")]
        sigma: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `pass` or `random`.
        #[arg(long, default_value = "pass")]
        opponent: String,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run the truncated ω-fusion from the bootstrap condition.
    Fuse {
        #[arg(long, default_value_t = 8)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Validate a condition read from JSON.
    Validate {
        #[arg(long)]
        condition: PathBuf,
    },
}

#[derive(Subcommand)]
enum TreelabCmd {
    /// Compare two ℚ_κ sequences given as JSON arrays of ordinals.
    Qcmp { q: String, p: String },
    /// Build and verify a specialization certificate.
    Special {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        club: PathBuf,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TopologyCmd {
    /// Separate an antichain from the nodes on a set of levels.
    Separator {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        antichain: PathBuf,
        #[arg(long)]
        levels: PathBuf,
        /// Pairwise disjoint open sets, one per antichain member; defaults to the fixture family.
        #[arg(long)]
        ofamily: Option<PathBuf>,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

/// Usage errors exit 2, validation failures exit 1.
enum Fail {
    Usage(String),
    Invalid(String),
}

type Res<T> = Result<T, Fail>;

fn usage<E: std::fmt::Display>(e: E) -> Fail {
    Fail::Usage(e.to_string())
}

fn invalid<E: std::fmt::Display>(e: E) -> Fail {
    Fail::Invalid(e.to_string())
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Res<T> {
    serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always render");
    s.push('\n');
    s
}

/// Writes to `path` when given, the captured stdout otherwise.
fn emit(out: &mut String, path: Option<&Path>, v: &Value) -> Res<()> {
    match path {
        Some(p) => fs::write(p, render(v)).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            out.push_str(&render(v));
            Ok(())
        }
    }
}

fn parse_ordinal(s: &str) -> Res<Ordinal> {
    s.parse().map_err(|e| usage(format!("ordinal {s:?}: {e}")))
}

/// Everything needed to rebuild a state bit for bit.
fn replay_of(b: &BuildArgs) -> Res<Value> {
    let script = match b.oracle.strip_prefix("scripted:") {
        Some(file) => {
            let v: Value = serde_json::from_str(&read(Path::new(file))?).map_err(usage)?;
            v
        }
        None => Value::Null,
    };
    let kind = b.oracle.split(':').next().unwrap_or_default();
    Ok(json!({"height": b.height, "seed": b.seed, "oracle": kind, "unfold": b.unfold, "script": script}))
}

fn oracle_from(kind: &str, seed: u64, script: &Value) -> Res<Box<dyn Oracle>> {
    match kind {
        "other" => Ok(Box::new(OtherOracle)),
        "pseudorandom" => Ok(Box::new(PseudoRandomOracle { seed })),
        "scripted" => Ok(Box::new(ScriptedOracle::from_json(&script.to_string()).map_err(usage)?)),
        other => Err(usage(format!("unknown oracle {other:?}"))),
    }
}

fn build_from_replay(r: &Value) -> Res<(TreeState, Box<dyn Oracle>)> {
    let height = parse_ordinal(r["height"].as_str().ok_or_else(|| usage("replay: missing height"))?)?;
    let seed = r["seed"].as_u64().ok_or_else(|| usage("replay: missing seed"))?;
    let unfold = r["unfold"].as_u64().ok_or_else(|| usage("replay: missing unfold"))? as usize;
    let oracle = oracle_from(r["oracle"].as_str().unwrap_or_default(), seed, &r["script"])?;
    let st = TreeState::build(&height, unfold, oracle.as_ref()).map_err(invalid)?;
    Ok((st, oracle))
}

fn state_value(st: &TreeState, replay: Value) -> Value {
    let mut v = st.to_json();
    v["replay"] = replay;
    tagged(schema::BUILDER_STATE, v)
}

fn builder(out: &mut String, cmd: BuilderCmd) -> Res<()> {
    match cmd {
        BuilderCmd::Run { build, emit: dest, transcript } => {
            let replay = replay_of(&build)?;
            let (st, _) = build_from_replay(&replay)?;
            if let Some(t) = transcript {
                let body = json!({"height": st.height, "transcripts": st.transcripts_json().map_err(invalid)?});
                emit(out, Some(&t), &tagged(schema::BUILDER_TRANSCRIPT, body))?;
            }
            emit(out, dest.as_deref(), &state_value(&st, replay))
        }
        BuilderCmd::Check { build, emit: dest } => {
            let (st, oracle) = build_from_replay(&replay_of(&build)?)?;
            let rep = st.check_invariants(oracle.as_ref()).map_err(invalid)?;
            let ok = rep.ok();
            emit(out, dest.as_deref(), &tagged(schema::BUILDER_CHECK, json!({"ok": ok, "report": rep})))?;
            if ok {
                Ok(())
            } else {
                Err(Fail::Invalid("engine invariants failed".into()))
            }
        }
    }
}

fn parse_sigma(s: &str) -> Res<Sigma> {
    match s {
        "w" | "omega" => Ok(Sigma::Omega { materialize: 6 }),
        n => n.parse().map(Sigma::Finite).map_err(|_| usage(format!("sigma {n:?}: expected a number or w"))),
    }
}

fn forcing_cmd(out: &mut String, cmd: ForcingCmd) -> Res<()> {
    match cmd {
        ForcingCmd::Play { sigma, seed, opponent, transcript } => {
            let sigma = parse_sigma(&sigma)?;
            let mut opp: Box<dyn Opponent> = match opponent.as_str() {
                "pass" => Box::new(PassThrough),
                "random" => Box::new(RandomOpponent::new(seed)),
                o => return Err(usage(format!("unknown opponent {o:?}"))),
            };
            let mut oracle = SeededOracle::new(seed);
            let game = forcing::play_strategy(sigma, opp.as_mut(), &mut oracle).map_err(invalid)?;
            let ledgers_hold = game.ledgers().all(|l| l.all_hold());
            let body = json!({
                "sigma": game.sigma,
                "outcome": game.outcome,
                "ledgers_hold": ledgers_hold,
                "decided": game.decided(),
                "moves": game.moves,
            });
            emit(out, transcript.as_deref(), &tagged(schema::FORCING_PLAY, body))?;
            if ledgers_hold {
                Ok(())
            } else {
                Err(Fail::Invalid("a strategy ledger clause failed".into()))
            }
        }
        ForcingCmd::Fuse { steps, seed, emit: dest } => {
            let mut oracle = SeededOracle::new(seed);
            let res = forcing::fuse(&forcing::bootstrap(), &mut oracle, steps).map_err(invalid)?;
            let enough = res.decided_in_final_nacc as u64 >= steps;
            emit(out, dest.as_deref(), &tagged(schema::FORCING_FUSE, json!({"enough_decided": enough, "result": res})))?;
            if enough {
                Ok(())
            } else {
                Err(Fail::Invalid("fewer decided elements than steps".into()))
            }
        }
        ForcingCmd::Validate { condition } => {
            let c: Condition = read_json(&condition)?;
            let verdict = forcing::validate(&c);
            let body = json!({"valid": verdict.is_ok(), "error": verdict.as_ref().err().map(|e| e.to_string())});
            emit(out, None, &tagged(schema::FORCING_VALIDATE, body))?;
            verdict.map_err(invalid)
        }
    }
}

fn parse_seq(s: &str) -> Res<QKappaSeq> {
    serde_json::from_str(s).map_err(|e| usage(format!("sequence {s:?}: {e}")))
}

fn treelab_cmd(out: &mut String, cmd: TreelabCmd) -> Res<()> {
    match cmd {
        TreelabCmd::Qcmp { q, p } => {
            let _ = writeln!(out, "{}", treelab::qkappa_cmp(&parse_seq(&q)?, &parse_seq(&p)?));
            Ok(())
        }
        TreelabCmd::Special { tree, f, club, emit: dest } => {
            let tree: FiniteTree = read_json(&tree)?;
            let f: Vec<QKappaSeq> = read_json(&f)?;
            let club: Vec<Ordinal> = read_json(&club)?;
            let cert = treelab::build_special_map(&tree, &f, &club).map_err(invalid)?;
            let verified = treelab::verify_special(&tree, &f, &cert);
            emit(out, dest.as_deref(), &tagged(schema::TREELAB_SPECIAL, json!({"verified": verified, "certificate": cert})))?;
            if verified {
                Ok(())
            } else {
                Err(Fail::Invalid("certificate failed verification".into()))
            }
        }
    }
}

/// Levels may be given as JSON CNF ordinals or as literal strings.
fn read_levels(path: &Path) -> Res<Vec<Ordinal>> {
    let v: Value = read_json(path)?;
    let items = v.as_array().ok_or_else(|| usage("levels must be a JSON array"))?;
    items
        .iter()
        .map(|x| match x.as_str() {
            Some(s) => parse_ordinal(s),
            None => serde_json::from_value(x.clone()).map_err(usage),
        })
        .collect()
}

fn load_state(path: &Path) -> Res<TreeState> {
    let v: Value = read_json(path)?;
    schema::conforms(&v, schema::BUILDER_STATE, schema::BUILDER_STATE_FIELDS).map_err(usage)?;
    let (st, _) = build_from_replay(&v["replay"])?;
    if state_value(&st, v["replay"].clone()) != v {
        return Err(invalid("state file does not match its replay"));
    }
    Ok(st)
}

fn topology_cmd(out: &mut String, cmd: TopologyCmd) -> Res<()> {
    match cmd {
        TopologyCmd::Separator { state, antichain, levels, ofamily, emit: dest } => {
            let st = load_state(&state)?;
            let descs: Vec<NodeDesc> = read_json(&antichain)?;
            let a: Vec<NodeRef> = descs.iter().map(|d| st.node(d)).collect::<Result<_, _>>().map_err(invalid)?;
            let d = read_levels(&levels)?;
            let o = match ofamily {
                Some(p) => {
                    let raw: Vec<Vec<IntervalDesc>> = read_json(&p)?;
                    raw.iter().map(|parts| OpenSetExpr::from_descs(&st, parts)).collect::<Result<_, _>>().map_err(invalid)?
                }
                None => topology::fixture_o_family(&st, &a).map_err(invalid)?,
            };
            let mut zs = Vec::new();
            for l in &d {
                zs.extend(st.sample(l).map_err(invalid)?);
            }
            let sep = topology::normality_separator(&st, &a, &d, &o, &zs).map_err(invalid)?;
            let ok = sep.all_disjoint();
            let body = json!({
                "all_disjoint": ok,
                "ofamily": o.iter().map(|x| x.to_descs()).collect::<Vec<_>>(),
                "u": sep.u,
                "points": sep.points,
            });
            emit(out, dest.as_deref(), &tagged(schema::TOPOLOGY_SEPARATOR, body))?;
            if ok {
                Ok(())
            } else {
                Err(Fail::Invalid("some V_z meets U".into()))
            }
        }
    }
}

/// Captured result of one invocation.
pub struct Output {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command line `args` (program name first). Exit codes: 0 on
/// success, 1 on a validation failure, 2 on a usage error.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut o = Output { code: 0, stdout: String::new(), stderr: String::new() };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                o.stderr = text;
                o.code = 2;
            } else {
                o.stdout = text;
            }
            return o;
        }
    };
    if let Some(p) = &cli.precision {
        match treelab::parse_precision(p) {
            Some(r) if r > lab_core::Rational::from_integer(0.into()) => std::env::set_var("LAB_PRECISION", p),
            _ => {
                o.stderr = format!("error: precision {p:?} must be a positive rational\n");
                o.code = 2;
                return o;
            }
        }
    }
    let out = &mut o.stdout;
    let res = match cli.cmd {
        Cmd::Builder(c) => builder(out, c),
        Cmd::Forcing(c) => forcing_cmd(out, c),
        Cmd::Treelab(c) => treelab_cmd(out, c),
        Cmd::Topology(c) => topology_cmd(out, c),
    };
    match res {
        Ok(()) => {}
        Err(Fail::Invalid(m)) => {
            o.stderr = format!("validation failed: {m}\n");
            o.code = 1;
        }
        Err(Fail::Usage(m)) => {
            o.stderr = format!("error: {m}\n");
            o.code = 2;
        }
    }
    o
}
