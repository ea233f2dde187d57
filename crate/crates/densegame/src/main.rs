use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use densegame::dynamics::{pde_run, PdeConfig, UpdateOrder};
use densegame::format::{
    parse_game, run_self_tests, write_game_file, GameFile, LoadedGame, ParsedGame, RunResult,
};
use densegame::game::{
    build_h_from_g, mixed_to_density, payoff_trace, AbstractGame, DensityProfile,
};
use densegame::linalg::NumericPolicy;
use densegame::nash::{brute_force_ne, iterate_nash_map, qne_commuting, verify_ne, NashCertificate};
use densegame::quantum::{build_abstract, classify, verify_equivalence, OperatorGame};
use densegame::{Error, Result};

const EXIT_INPUT_ERROR: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "densegame", version, about = "Density-matrix game evaluation and equilibria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Game definition file (JSON).
    file: PathBuf,
    /// Seed for all randomness in this run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the file's embedded assertions instead of the command body.
    #[arg(long)]
    self_test: bool,
    /// Write a full machine-readable run record (includes wall time).
    #[arg(long)]
    result: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Method {
    FixedPoint,
    Oracle,
}

#[derive(Copy, Clone, ValueEnum)]
enum OrderArg {
    RoundRobin,
    Simultaneous,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate per-player payoffs at a profile.
    Payoff {
        #[command(flatten)]
        common: Common,
        /// Named profile from the file, or "uniform".
        #[arg(long, default_value = "uniform")]
        profile: String,
        /// Restrict output to one player.
        #[arg(long)]
        player: Option<usize>,
    },
    /// Find and certify Nash equilibria.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Method::FixedPoint)]
        method: Method,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Simplex grid resolution for the 3-player oracle.
        #[arg(long, default_value_t = 20)]
        resolution: usize,
        /// Starting profile for the fixed-point iteration.
        #[arg(long, default_value = "uniform")]
        start: String,
    },
    /// Boltzmann pseudo-dynamical iteration.
    Pde {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_enum, default_value_t = OrderArg::RoundRobin)]
        order: OrderArg,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Trajectory CSV output path.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value = "uniform")]
        start: String,
    },
    /// Compile or verify an operator-level quantum game.
    Quantum {
        #[command(flatten)]
        common: Common,
        /// Emit the compiled abstract game to this path.
        #[arg(long, conflicts_with = "verify")]
        build: Option<PathBuf>,
        /// Check operator-level vs compiled payoffs on random samples.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Reject non-unitary sampled strategies (restricts to physical ones).
        #[arg(long)]
        require_unitary: bool,
    },
    /// Print the payoff-operator taxonomy label.
    Classify {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Payoff { common, .. }
            | Command::Solve { common, .. }
            | Command::Pde { common, .. }
            | Command::Quantum { common, .. }
            | Command::Classify { common } => common,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut outputs = serde_json::Map::new();
    let code = match run(&cli.command, &mut outputs) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT_ERROR
        }
    };
    let common = cli.command.common();
    if let Some(path) = &common.result {
        let record = RunResult {
            command: std::env::args().skip(1).collect::<Vec<_>>().join(" "),
            seed: common.seed,
            outputs: serde_json::Value::Object(outputs),
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        let text = serde_json::to_string_pretty(&record).unwrap_or_default();
        if let Err(e) = std::fs::write(path, text) {
            eprintln!("error writing result file: {e}");
            return ExitCode::from(EXIT_INPUT_ERROR);
        }
    }
    ExitCode::from(code)
}

fn run(cmd: &Command, outputs: &mut serde_json::Map<String, serde_json::Value>) -> Result<u8> {
    let policy = NumericPolicy::default();
    let common = cmd.common();
    let loaded = parse_game(&common.file, &policy)?;

    if common.self_test {
        return self_test(&loaded, &policy, outputs);
    }

    match cmd {
        Command::Payoff {
            profile, player, ..
        } => cmd_payoff(&loaded, profile, *player, &policy, outputs),
        Command::Solve {
            method,
            tol,
            max_iter,
            resolution,
            start,
            ..
        } => cmd_solve(
            &loaded,
            *method,
            *tol,
            *max_iter,
            *resolution,
            start,
            &policy,
            outputs,
        ),
        Command::Pde {
            beta,
            order,
            steps,
            tol,
            csv,
            start,
            ..
        } => cmd_pde(
            &loaded,
            *beta,
            *order,
            *steps,
            *tol,
            csv.as_deref(),
            start,
            &policy,
            outputs,
        ),
        Command::Quantum {
            common,
            build,
            verify,
            samples,
            require_unitary,
        } => cmd_quantum(
            &loaded,
            build.as_deref(),
            *verify,
            *samples,
            common.seed,
            *require_unitary,
            outputs,
        ),
        Command::Classify { .. } => cmd_classify(&loaded, outputs),
    }
}

fn self_test(
    loaded: &LoadedGame,
    policy: &NumericPolicy,
    outputs: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<u8> {
    if loaded.file.self_test.is_empty() {
        println!("selftest: no embedded assertions");
        return Ok(0);
    }
    let results = run_self_tests(loaded, policy)?;
    let mut all_pass = true;
    let mut records = Vec::new();
    for r in &results {
        let status = if r.passed { "pass" } else { "FAIL" };
        println!("selftest {}: {status} ({})", r.name, r.detail);
        all_pass &= r.passed;
        records.push(serde_json::json!({
            "name": r.name, "passed": r.passed, "detail": r.detail
        }));
    }
    outputs.insert("self_test".into(), serde_json::Value::Array(records));
    Ok(if all_pass { 0 } else { EXIT_INPUT_ERROR })
}

/// The abstract view of whatever the file holds.
fn abstract_view(loaded: &LoadedGame) -> Result<AbstractGame> {
    match &loaded.game {
        ParsedGame::Classical(g) => Ok(build_h_from_g(g)),
        ParsedGame::Abstract(a) => Ok(a.clone()),
        ParsedGame::Operator(og) => build_abstract(og),
    }
}

fn resolve_density(
    loaded: &LoadedGame,
    name: &str,
    policy: &NumericPolicy,
) -> Result<DensityProfile> {
    let p = loaded.file.resolve_profile(name, policy)?;
    mixed_to_density(&p, policy)
}

/// 12 significant digits.
fn fmt_payoff(e: f64) -> String {
    format!("{:.11e}", e)
}

fn cmd_payoff(
    loaded: &LoadedGame,
    profile: &str,
    player: Option<usize>,
    policy: &NumericPolicy,
    outputs: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<u8> {
    let game = abstract_view(loaded)?;
    let rho = resolve_density(loaded, profile, policy)?;
    let n = game.n_players();
    if let Some(i) = player {
        if i >= n {
            return Err(Error::Invalid(format!("player {i} out of range (n = {n})")));
        }
    }
    let mut values = Vec::new();
    for i in 0..n {
        if player.is_some_and(|p| p != i) {
            continue;
        }
        let e = payoff_trace(&game, &rho, i)?;
        println!("payoff player={i} profile={profile} E={}", fmt_payoff(e));
        values.push(serde_json::json!({"player": i, "payoff": e}));
    }
    outputs.insert("payoffs".into(), serde_json::Value::Array(values));
    Ok(0)
}

fn print_certificate(label: &str, cert: &NashCertificate) {
    let probs: Vec<String> = cert
        .profile
        .diagonal_probs()
        .iter()
        .map(|p| {
            let entries: Vec<String> = p.iter().map(|x| fmt_payoff(*x)).collect();
            format!("[{}]", entries.join(", "))
        })
        .collect();
    println!(
        "{label} valid={} epsilon={:.3e} max_gain={:.3e} profile={}",
        cert.is_valid(),
        cert.epsilon,
        cert.max_gain().max(0.0),
        probs.join(" ")
    );
}

fn certificate_json(cert: &NashCertificate) -> serde_json::Value {
    serde_json::json!({
        "valid": cert.is_valid(),
        "epsilon": cert.epsilon,
        "per_player_gain": cert.per_player_gain,
        "probs": cert.profile.diagonal_probs(),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    loaded: &LoadedGame,
    method: Method,
    tol: Option<f64>,
    max_iter: Option<usize>,
    resolution: usize,
    start: &str,
    policy: &NumericPolicy,
    outputs: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<u8> {
    let solver = loaded.file.solver.clone().unwrap_or_default();
    let tol = tol.or(solver.tol).unwrap_or(1e-12);
    let max_iter = max_iter.or(solver.max_iter).unwrap_or(100_000);
    match method {
        Method::Oracle => {
            let g = match &loaded.game {
                ParsedGame::Classical(g) => g,
                _ => {
                    return Err(Error::Invalid(
                        "the oracle method requires a classical game file".into(),
                    ))
                }
            };
            let certs = brute_force_ne(g, resolution)?;
            println!("method=oracle equilibria={}", certs.len());
            let mut records = Vec::new();
            for (k, cert) in certs.iter().enumerate() {
                print_certificate(&format!("ne[{k}]"), cert);
                records.push(certificate_json(cert));
            }
            outputs.insert("certificates".into(), serde_json::Value::Array(records));
            Ok(if certs.iter().any(|c| c.is_valid()) {
                0
            } else {
                EXIT_NO_CONVERGENCE
            })
        }
        Method::FixedPoint => {
            let game = abstract_view(loaded)?;
            let diagonal = game
                .payoff_operators()
                .iter()
                .all(|h| densegame::linalg::off_diagonal_residual(h) <= policy.hermiticity);
            if !diagonal {
                // commuting quantum games: classify-then-solve in the
                // shared product eigenbasis
                match qne_commuting(&game, 1e-9, policy)? {
                    Some(cert) => {
                        println!("method=fixed-point mode=commuting-rotation");
                        print_certificate("qne", &cert);
                        outputs.insert("certificates".into(), serde_json::json!([certificate_json(&cert)]));
                        return Ok(if cert.is_valid() { 0 } else { EXIT_NO_CONVERGENCE });
                    }
                    None => {
                        println!("method=fixed-point mode=commuting-rotation no-product-eigenbasis");
                        return Ok(EXIT_NO_CONVERGENCE);
                    }
                }
            }
            let rho0 = resolve_density(loaded, start, policy)?;
            let report = iterate_nash_map(&game, &rho0, tol, max_iter, policy)?;
            println!(
                "method=fixed-point converged={} iterations={} residual={:.3e}",
                report.converged, report.iterations, report.residual
            );
            let cert = verify_ne(&game, &report.final_profile, tol.max(1e-9), policy)?;
            print_certificate("ne", &cert);
            outputs.insert(
                "report".into(),
                serde_json::json!({
                    "converged": report.converged,
                    "iterations": report.iterations,
                    "residual": report.residual,
                    "delta_e_norm": report.delta_e_norm,
                }),
            );
            outputs.insert("certificates".into(), serde_json::json!([certificate_json(&cert)]));
            Ok(if report.converged && cert.is_valid() {
                0
            } else {
                EXIT_NO_CONVERGENCE
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_pde(
    loaded: &LoadedGame,
    beta: Option<f64>,
    order: OrderArg,
    steps: Option<usize>,
    tol: Option<f64>,
    csv: Option<&std::path::Path>,
    start: &str,
    policy: &NumericPolicy,
    outputs: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<u8> {
    let solver = loaded.file.solver.clone().unwrap_or_default();
    let game = abstract_view(loaded)?;
    let cfg = PdeConfig {
        beta: beta.or(solver.beta).unwrap_or(1.0),
        order: match order {
            OrderArg::RoundRobin => UpdateOrder::RoundRobin,
            OrderArg::Simultaneous => UpdateOrder::Simultaneous,
        },
        tol: tol.or(solver.tol).unwrap_or(1e-10),
        max_steps: steps.or(solver.steps).unwrap_or(10_000),
        ..PdeConfig::default()
    };
    let rho0 = resolve_density(loaded, start, policy)?;
    let (traj, report) = pde_run(&game, &rho0, &cfg, policy)?;
    if let Some(path) = csv {
        let mut f = std::fs::File::create(path)?;
        traj.write_csv(&mut f)?;
        f.flush()?;
    }
    let last = traj.steps.last().expect("trajectory has at least step 0");
    for (i, probs) in last.probs.iter().enumerate() {
        let entries: Vec<String> = probs.iter().map(|p| fmt_payoff(*p)).collect();
        println!(
            "final player={i} probs=[{}] E={}",
            entries.join(", "),
            fmt_payoff(last.payoffs[i])
        );
    }
    println!("pattern={} residual={:.3e} steps={}", report.kind, report.residual, report.steps_taken);
    outputs.insert(
        "pattern".into(),
        serde_json::json!({
            "kind": report.kind.to_string(),
            "residual": report.residual,
            "steps": report.steps_taken,
            "final_probs": last.probs,
            "final_payoffs": last.payoffs,
        }),
    );
    Ok(0)
}

fn require_operator(loaded: &LoadedGame) -> Result<&OperatorGame> {
    match &loaded.game {
        ParsedGame::Operator(og) => Ok(og),
        _ => Err(Error::Invalid(
            "this command requires an operator game file".into(),
        )),
    }
}

fn cmd_quantum(
    loaded: &LoadedGame,
    build: Option<&std::path::Path>,
    verify: bool,
    samples: usize,
    seed: u64,
    require_unitary: bool,
    outputs: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<u8> {
    let og = require_operator(loaded)?;
    if require_unitary {
        let bad: Vec<usize> = (0..og.n_players())
            .filter(|&i| {
                og.basis(i).iter().any(|b| {
                    densegame::quantum::PlayerOperator::new(b.clone())
                        .map(|op| op.unitarity_residual() > 1e-10)
                        .unwrap_or(true)
                })
            })
            .collect();
        if !bad.is_empty() {
            return Err(Error::Invalid(format!(
                "--require-unitary: players {bad:?} declare non-unitary basis operators"
            )));
        }
    }
    let game = build_abstract(og)?;
    if let Some(out) = build {
        let file = GameFile::from_abstract(&game);
        write_game_file(out, &file)?;
        println!(
            "built abstract game: players={} joint_dim={} -> {}",
            game.n_players(),
            game.dims().joint_dim(),
            out.display()
        );
        outputs.insert(
            "build".into(),
            serde_json::json!({
                "players": game.n_players(),
                "joint_dim": game.dims().joint_dim(),
                "path": out.display().to_string(),
            }),
        );
        return Ok(0);
    }
    if verify {
        let dev = verify_equivalence(og, &game, samples, seed)?;
        println!("max_deviation={dev:.3e} samples={samples}");
        outputs.insert(
            "verify".into(),
            serde_json::json!({"max_deviation": dev, "samples": samples}),
        );
        return Ok(if dev <= 1e-9 { 0 } else { EXIT_INPUT_ERROR });
    }
    Err(Error::Invalid(
        "quantum requires either --build <out> or --verify".into(),
    ))
}

fn cmd_classify(
    loaded: &LoadedGame,
    outputs: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<u8> {
    let game = abstract_view(loaded)?;
    let label = classify(&game).to_string();
    println!("{label}");
    outputs.insert("classify".into(), serde_json::json!(label));
    Ok(0)
}
