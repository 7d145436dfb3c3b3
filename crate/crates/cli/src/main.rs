//! `dormant`: reports on dormant-entanglement states, CHSH values, and the
//! collective channel protocol.

mod report;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dormant_core::chsh::{evaluate_with, ChshSetting, TSIRELSON};
use dormant_core::{
    build_psi3, build_psi3l, build_psi_n, classify, conditional_report_with, plan_resources, rotation_sweep, BellState,
    ChannelSession, Error, PatternSet, PermutationMap, SessionStatus, StateVector, Unitary1Q,
};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use report::{Checks, Report};

#[derive(Parser)]
#[command(name = "dormant", version, about = "Dormant entanglement simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tolerance: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print the nonzero amplitudes of a state.
    Build {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// CHSH values with the default setting, optionally a rotation sweep.
    Chsh {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = parse_pair, default_value = "1,2")]
        pair: (usize, usize),
        #[arg(long, default_value_t = 0)]
        rotations: usize,
        /// Use all 8 sign patterns instead of the 4 admissible ones.
        #[arg(long)]
        all_patterns: bool,
    },
    /// Conditional probabilities of `target` given `measured`.
    Correlate {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        measured: usize,
        #[arg(long)]
        target: usize,
        #[arg(long, default_value = "comp")]
        basis_m: Unitary1Q,
        #[arg(long, default_value = "comp")]
        basis_t: Unitary1Q,
    },
    /// Check that psiN is invariant under qubit permutations.
    Permtest {
        #[arg(long)]
        n: usize,
        /// Random permutations to try. Without it, n <= 6 is checked exhaustively.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run one collective channel session.
    Channel {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_pair, default_value = "1,2")]
        endpoints: (usize, usize),
        /// Controller that measures in the Hadamard basis.
        #[arg(long)]
        deviant: Option<usize>,
        #[arg(long, default_value_t = 0)]
        teleport_trials: usize,
    },
    /// Type1/Type2/Type3/Other for a pair.
    Classify {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = parse_pair, default_value = "1,2")]
        pair: (usize, usize),
    },
    /// Qubit counts for point-to-point vs collective distribution.
    Resources {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

/// Bad parameter values are usage errors (exit 2); anything else is exit 1.
enum Failure {
    Usage(anyhow::Error),
    Other(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(_) => Failure::Usage(e.into()),
            _ => Failure::Other(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

type Outcome = Result<(Report, bool), Failure>;

fn family_state(family: &str, n: Option<usize>) -> Result<StateVector, Failure> {
    let state = match family.to_ascii_lowercase().as_str() {
        "psi3" => build_psi3().state,
        "psin" => {
            let n = n.ok_or_else(|| Failure::Usage(anyhow!("--family psiN needs --n")))?;
            build_psi_n(n)?.state
        }
        "psi3l" => build_psi3l().state,
        "phi1" => BellState::Phi1.state(),
        "phi2" => BellState::Phi2.state(),
        "phi3" => BellState::Phi3.state(),
        "phi4" => BellState::Phi4.state(),
        other => return Err(Failure::Usage(anyhow!("unknown family {other:?}"))),
    };
    Ok(state)
}

fn params(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn run(command: &Command, g: &Global) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let tol = g.tolerance;
    let mut checks = Checks::new();
    let (name, parameters, mut results) = match command {
        Command::Build { family, n } => {
            let s = family_state(family, *n)?;
            let amps: Vec<Value> = s
                .support()
                .into_iter()
                .map(|i| {
                    let a = s.amplitudes()[i];
                    json!({"bits": s.bitstring(i), "re": a.re, "im": a.im})
                })
                .collect();
            checks.add("normalized", (s.norm_sqr() - 1.0).abs() <= tol, s.norm_sqr());
            let results = json!({"n_qubits": s.n_qubits(), "nonzero": amps.len(), "amplitudes": amps});
            ("build", params(&[("family", json!(family)), ("n", json!(n))]), results)
        }
        Command::Chsh {
            family,
            n,
            pair,
            rotations,
            all_patterns,
        } => {
            let s = family_state(family, *n)?;
            let patterns = if *all_patterns {
                PatternSet::All
            } else {
                PatternSet::Admissible
            };
            let r = evaluate_with(&s, *pair, &ChshSetting::default_setting(), patterns)?;
            checks.add("tsirelson", r.s_max <= TSIRELSON + tol, r.s_max);
            let mut results = json!({"result": r.to_json()});
            if *rotations > 0 {
                let sweep = rotation_sweep(&s, *pair, *rotations, &mut rng, patterns)?;
                checks.add("sweep_tsirelson", sweep.sup_s_max <= TSIRELSON + tol, sweep.sup_s_max);
                results["sweep"] = json!(sweep);
            }
            let p = params(&[
                ("family", json!(family)),
                ("n", json!(n)),
                ("pair", json!([pair.0, pair.1])),
                ("rotations", json!(rotations)),
                ("all_patterns", json!(all_patterns)),
            ]);
            ("chsh", p, results)
        }
        Command::Correlate {
            family,
            n,
            measured,
            target,
            basis_m,
            basis_t,
        } => {
            let s = family_state(family, *n)?;
            let r = conditional_report_with(&s, *measured, basis_m, *target, basis_t, tol)?;
            let probs = [Some(r.p_marginal), r.p_conditional_given_0, r.p_conditional_given_1];
            checks.add(
                "probabilities",
                probs.iter().flatten().all(|p| (0.0..=1.0).contains(p)),
                Value::Null,
            );
            let p = params(&[
                ("family", json!(family)),
                ("n", json!(n)),
                ("measured", json!(measured)),
                ("target", json!(target)),
                ("basis_m", json!(basis_m.to_string())),
                ("basis_t", json!(basis_t.to_string())),
            ]);
            ("correlate", p, json!({"report": r}))
        }
        Command::Permtest { n, samples } => {
            let s = build_psi_n(*n)?.state;
            let perms: Vec<PermutationMap> = match samples {
                None if *n <= 6 => (1..=*n)
                    .permutations(*n)
                    .map(PermutationMap::new)
                    .collect::<Result<_, _>>()?,
                _ => (0..samples.unwrap_or(1000))
                    .map(|_| PermutationMap::random(*n, &mut rng))
                    .collect(),
            };
            let mut worst = 0.0f64;
            for p in &perms {
                worst = worst.max(s.apply_permutation(p)?.max_abs_diff(&s)?);
            }
            checks.add("invariant", worst <= tol, worst);
            let mode = if samples.is_none() && *n <= 6 {
                "exhaustive"
            } else {
                "random"
            };
            let results =
                json!({"mode": mode, "checked": perms.len(), "max_deviation": worst, "invariant": worst <= tol});
            (
                "permtest",
                params(&[("n", json!(n)), ("samples", json!(samples))]),
                results,
            )
        }
        Command::Channel {
            n,
            endpoints,
            deviant,
            teleport_trials,
        } => {
            let results = channel(*n, *endpoints, *deviant, *teleport_trials, tol, &mut rng, &mut checks)?;
            let p = params(&[
                ("n", json!(n)),
                ("endpoints", json!([endpoints.0, endpoints.1])),
                ("deviant", json!(deviant)),
                ("teleport_trials", json!(teleport_trials)),
            ]);
            ("channel", p, results)
        }
        Command::Classify { family, n, pair } => {
            let level = classify(&family_state(family, *n)?, *pair)?;
            let p = params(&[
                ("family", json!(family)),
                ("n", json!(n)),
                ("pair", json!([pair.0, pair.1])),
            ]);
            ("classify", p, json!({"level": level}))
        }
        Command::Resources { n, k } => {
            let plan = plan_resources(*n, *k)?;
            checks.add(
                "formula",
                plan.point_to_point_qubits == n * (n - 1) && plan.collective_qubits == k * n,
                Value::Null,
            );
            let results = json!({
                "n": plan.n,
                "k": plan.k,
                "point_to_point": plan.point_to_point_qubits,
                "collective": plan.collective_qubits,
            });
            ("resources", params(&[("n", json!(n)), ("k", json!(k))]), results)
        }
    };
    let pass = checks.all_pass();
    results["checks"] = checks.into_value();
    let report = Report {
        command: name,
        parameters,
        results,
        seed: g.seed,
    };
    Ok((report, pass))
}

fn channel(
    n: usize,
    endpoints: (usize, usize),
    deviant: Option<usize>,
    teleport_trials: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
    checks: &mut Checks,
) -> Result<Value, Failure> {
    let probe = ChannelSession::setup(n, endpoints)?;
    if let Some(d) = deviant {
        if !probe.controllers().contains(&d) {
            return Err(Failure::Usage(anyhow!("deviant {d} is not a controller")));
        }
    }
    let run_session = |rng: &mut ChaCha8Rng| -> dormant_core::Result<ChannelSession> {
        let mut session = ChannelSession::setup(n, endpoints)?;
        for id in session.controllers() {
            let basis = if Some(id) == deviant {
                Unitary1Q::hadamard()
            } else {
                Unitary1Q::identity()
            };
            session.controller_measure(id, &basis, rng)?;
        }
        session.deliver_and_resolve()?;
        Ok(session)
    };

    let mut session = run_session(rng)?;
    let mut teleport = Value::Null;
    match session.status() {
        SessionStatus::Activated(bell) => {
            let f = session
                .endpoint_state()
                .map(|s| s.fidelity(&bell.state()))
                .transpose()?
                .unwrap_or(0.0);
            checks.add("activated_fidelity", (f - 1.0).abs() <= tol, f);
            if teleport_trials > 0 {
                // each trial consumes a pair, so later trials run fresh sessions
                let mut fidelities = vec![session.teleport_over(&random_payload(rng)?, rng)?];
                let mut variants: BTreeMap<&str, usize> = BTreeMap::new();
                *variants.entry(bell.name()).or_default() += 1;
                for _ in 1..teleport_trials {
                    let mut s = run_session(rng)?;
                    if let SessionStatus::Activated(b) = s.status() {
                        *variants.entry(b.name()).or_default() += 1;
                    }
                    fidelities.push(s.teleport_over(&random_payload(rng)?, rng)?);
                }
                let min = fidelities.iter().cloned().fold(f64::INFINITY, f64::min);
                checks.add("teleport_fidelity", (min - 1.0).abs() <= tol, min);
                teleport = json!({
                    "trials": teleport_trials,
                    "min_fidelity": min,
                    "mean_fidelity": fidelities.iter().sum::<f64>() / fidelities.len() as f64,
                    "variants": variants,
                });
            }
        }
        SessionStatus::Destroyed => {
            let c = session.concurrence().unwrap_or(f64::NAN);
            checks.add("destroyed_concurrence", c < tol, c);
        }
        SessionStatus::Dormant => return Err(Failure::Other(anyhow!("session did not resolve"))),
    }
    // the last line is the final record, reported separately
    let jsonl = session.transcript_jsonl();
    let lines: Vec<&str> = jsonl.lines().collect();
    let transcript: Vec<Value> = lines[..lines.len() - 1]
        .iter()
        .map(|l| serde_json::from_str(l))
        .collect::<Result<_, _>>()
        .context("transcript is not JSON lines")?;
    Ok(json!({
        "controllers": session.controllers(),
        "transcript": transcript,
        "final": session.final_record(),
        "teleport": teleport,
    }))
}

fn random_payload(rng: &mut ChaCha8Rng) -> dormant_core::Result<StateVector> {
    StateVector::zero(1)?.apply_1q(&Unitary1Q::random(rng), 1)
}

fn emit(report: &Report, g: &Global) -> anyhow::Result<()> {
    let mut out: Box<dyn Write> = match &g.out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    match g.format {
        Format::Json => report.write_json(&mut out),
        Format::Csv => report.write_csv(&mut out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command, &cli.global) {
        Ok((report, pass)) => {
            if let Err(e) = emit(&report, &cli.global) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: one or more checks failed");
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}\n\nRun `dormant --help` for usage.");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
