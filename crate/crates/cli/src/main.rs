use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use auction_lab::duality::{canonical_flow, modified_flow, virtual_values, Flow, FlowDoc};
use auction_lab::lp::{assemble_lp, certified_auction, select_outcome, solve_instance, Backend, CertifiedKind};
use auction_lab::mechanisms::{spa_bidder1, spa_careful, witness_report};
use auction_lab::myerson::{iron, SingleDimDistribution, SingleDimDoc};
use auction_lab::numerics::{render, Bidder, Instance, Interest, TypeLabel};
use auction_lab::properties::describe;
use auction_lab::protocol::{
    disj_oracle, random_disj, render_singledim, render_support, run_fulltransfer_protocol, run_singledim_protocol,
    singledim_draw, TranscriptSummary,
};
use auction_lab::reduction::{build_instance, DisjInput};
use auction_lab::verify::{find_n_min, run_verification, VerificationConfig, RECORDED_N_MIN};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "auction-lab", version, about = "Exact revenue-optimal auctions for the FedEx disjointness construction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the instance for a disjointness input.
    Gen {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        /// Draws x and y when they are not given.
        #[arg(long, env = "AUCTION_LAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the construction trace (b, a, helpers, scaled masses).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build a flow for an instance; prints the flow JSON.
    Flow {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = FlowKind::Canonical)]
        kind: FlowKind,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the virtual-value CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Virtual-value CSV of an instance under a flow (canonical by default).
    Virtuals {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        flow: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificate report for a mechanism against a flow; exit 1 if it fails.
    Certify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        flow: PathBuf,
        #[arg(long, value_enum)]
        mechanism: MechanismKind,
        /// Tie-split level for `careful`; defaults to the modified flow's k*.
        #[arg(long)]
        k_star: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the revenue LP exactly.
    Lp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the LP in plain text, one constraint per line.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Ironed virtual values of a single-dimensional distribution.
    Iron {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a two-party protocol and print its transcript summary.
    Protocol {
        #[arg(long, value_enum)]
        mode: ProtocolMode,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long, env = "AUCTION_LAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide disjointness by reading a revenue-optimal auction. Inputs
    /// shorter than the recorded N_min are padded with zero bits.
    Disj {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Run the property suite; exit 1 if any check fails.
    Verify {
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, env = "AUCTION_LAB_SEED", default_value_t = 0)]
        seed: u64,
        /// Restrict to the named checks (repeatable).
        #[arg(long = "check")]
        checks: Vec<String>,
        /// Also determine the smallest n from which the flow suite passes.
        #[arg(long)]
        n_min: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowKind {
    Canonical,
    Modified,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismKind {
    Spa1,
    Careful,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolMode {
    SingleDim,
    Full,
}

enum Failure {
    /// Bad arguments or unreadable input; exit 2.
    Usage(String),
    /// A check ran and failed; exit 1.
    Verification,
}

impl From<auction_lab::Error> for Failure {
    fn from(e: auction_lab::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Ok(Instance::from_json(&read(path)?)?)
}

fn load_flow(path: &Path) -> Result<Flow, Failure> {
    let doc: FlowDoc = serde_json::from_str(&read(path)?).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(Flow::from_doc(&doc)?)
}

fn disj_input(n: Option<usize>, x: Option<String>, y: Option<String>, seed: u64) -> Result<DisjInput, Failure> {
    match (x, y) {
        (Some(x), Some(y)) => {
            let d = DisjInput::from_bits(&x, &y)?;
            if n.is_some_and(|n| n != d.n()) {
                return Err(Failure::Usage(format!("--n does not match the {}-bit inputs", d.n())));
            }
            Ok(d)
        }
        (None, None) => {
            let n = n.ok_or_else(|| Failure::Usage("give --x and --y, or --n with a seed".into()))?;
            if n == 0 {
                return Err(Failure::Usage("--n must be positive".into()));
            }
            Ok(random_disj(n, seed))
        }
        _ => Err(Failure::Usage("--x and --y go together".into())),
    }
}

#[derive(Serialize)]
struct DisjDoc {
    disjoint: bool,
    oracle: bool,
    /// Input length after zero padding.
    n: usize,
    certificate: String,
    k_star: Option<usize>,
    eps: Option<String>,
    support: String,
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Gen {
            n,
            x,
            y,
            seed,
            out,
            trace,
        } => {
            let d = disj_input(n, x, y, seed)?;
            let (inst, traces) = build_instance(&d)?;
            if let Some(path) = trace {
                emit(Some(&path), &json(&traces.to_doc()))?;
            }
            emit(out.as_deref(), &(inst.to_json() + "\n"))
        }
        Command::Flow {
            instance,
            kind,
            out,
            csv,
        } => {
            let inst = load_instance(&instance)?;
            let fl = match kind {
                FlowKind::Canonical => canonical_flow(&inst),
                FlowKind::Modified => modified_flow(&inst)?.flow,
            };
            if let Some(path) = csv {
                emit(Some(&path), &virtual_values(&inst, &fl)?.to_csv())?;
            }
            emit(out.as_deref(), &json(&fl.to_doc()))
        }
        Command::Virtuals { instance, flow, out } => {
            let inst = load_instance(&instance)?;
            let fl = match flow {
                Some(path) => load_flow(&path)?,
                None => canonical_flow(&inst),
            };
            emit(out.as_deref(), &virtual_values(&inst, &fl)?.to_csv())
        }
        Command::Certify {
            instance,
            flow,
            mechanism,
            k_star,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let fl = load_flow(&flow)?;
            let m = match mechanism {
                MechanismKind::Spa1 => spa_bidder1(&inst),
                MechanismKind::Careful => {
                    let k = match k_star {
                        Some(k) => k,
                        None => modified_flow(&inst)?
                            .k_star
                            .ok_or_else(|| Failure::Usage("no boost needed, so no k*; pass --k-star".into()))?,
                    };
                    spa_careful(&inst, k)?
                }
            };
            let report = witness_report(&inst, &fl, &m)?;
            emit(out.as_deref(), &json(&report.to_doc()))?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Lp { instance, out, dump } => {
            let inst = load_instance(&instance)?;
            if let Some(path) = dump {
                emit(Some(&path), &assemble_lp(&inst).lp.to_text())?;
            }
            let sol = solve_instance(&inst)?;
            emit(out.as_deref(), &json(&sol.to_doc()))
        }
        Command::Iron { dist, out } => {
            let doc: SingleDimDoc = serde_json::from_str(&read(&dist)?).map_err(|e| Failure::Usage(e.to_string()))?;
            let d = SingleDimDistribution::from_doc(&doc)?;
            emit(out.as_deref(), &iron(&d)?.to_csv(&d))
        }
        Command::Protocol {
            mode,
            n,
            x,
            y,
            seed,
            out,
        } => {
            if n == 0 {
                return Err(Failure::Usage("--n must be positive".into()));
            }
            let summary = match mode {
                ProtocolMode::SingleDim => {
                    if x.is_some() || y.is_some() {
                        return Err(Failure::Usage("single-dim mode draws its inputs from --seed".into()));
                    }
                    let (d1, v1, d2, v2) = singledim_draw(n, seed);
                    let run = run_singledim_protocol(&d1, v1, &d2, v2)?;
                    TranscriptSummary::new(&run.transcript, render_singledim(&run))
                }
                ProtocolMode::Full => {
                    let d = disj_input(Some(n), x, y, seed)?;
                    let run = run_fulltransfer_protocol(&d)?;
                    TranscriptSummary::new(&run.transcript, render_support(&run.outcome))
                }
            };
            emit(out.as_deref(), &json(&summary))
        }
        Command::Disj { x, y } => {
            let d = DisjInput::from_bits(&x, &y)?;
            let oracle = disj_oracle(&d);
            // zero bits never intersect, so padding preserves the answer
            let padded = if d.n() < RECORDED_N_MIN {
                let pad = |bits: &[bool]| -> Vec<bool> {
                    bits.iter().copied().chain(std::iter::repeat(false)).take(RECORDED_N_MIN).collect()
                };
                DisjInput::new(pad(d.x()), pad(d.y()))?
            } else {
                d.clone()
            };
            let (inst, _) = build_instance(&padded)?;
            let low = TypeLabel::new(1, Interest::Day1);
            // if the flow certificates fail, read an LP optimum instead
            let doc = match certified_auction(&inst) {
                Ok(cert) => {
                    let support = cert.mechanism.support(low, low);
                    let (certificate, k_star) = match cert.kind {
                        CertifiedKind::Canonical => ("canonical-flow", None),
                        CertifiedKind::Modified { k_star } => ("modified-flow", Some(k_star)),
                    };
                    DisjDoc {
                        disjoint: support == [Some(Bidder::One)],
                        oracle,
                        n: padded.n(),
                        certificate: certificate.to_string(),
                        k_star,
                        eps: Some(render(&cert.eps)),
                        support: render_support(&support),
                    }
                }
                Err(_) => {
                    let support = select_outcome(&inst, low, low, Backend::Lp)?;
                    DisjDoc {
                        disjoint: support == [Some(Bidder::One)],
                        oracle,
                        n: padded.n(),
                        certificate: "lp".to_string(),
                        k_star: None,
                        eps: None,
                        support: render_support(&support),
                    }
                }
            };
            println!("{}", if doc.disjoint { "yes" } else { "no" });
            print!("{}", json(&doc));
            Ok(())
        }
        Command::Verify {
            n,
            trials,
            seed,
            checks,
            n_min,
        } => {
            let sizes = if n.is_empty() { vec![RECORDED_N_MIN] } else { n };
            let config = VerificationConfig::new(sizes, trials, seed)?.with_checks(checks)?;
            let summary = run_verification(&config)?;
            println!("seed {seed}, {trials} random pairs per size plus structured inputs");
            for e in &summary.entries {
                let verdict = if e.passed() { "PASS" } else { "FAIL" };
                println!(
                    "n={:<3} {verdict} {:<34} inputs={} cases={} :: {}",
                    e.n,
                    e.name,
                    e.inputs,
                    e.cases,
                    describe(e.name).unwrap_or("")
                );
                if let Some(first) = &e.first_failure {
                    println!("        {} failing inputs; first: {first}", e.failed_inputs);
                }
            }
            let mut ok = summary.passed();
            if n_min {
                match find_n_min(trials, seed)? {
                    Some(found) => println!("N_min = {found}"),
                    None => {
                        println!("N_min not found up to the search ceiling");
                        ok = false;
                    }
                }
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
