use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use bertrand_core::constructions::{
    cce_asymmetric, cce_symmetric, phi_ce_asymmetric_v1, phi_ce_asymmetric_v2, phi_ce_symmetric,
    swap_vs_external_classes,
};
use bertrand_core::equilibrium::{expected_utility, symmetrize, total_expected_utility, verify, Witness};
use bertrand_core::experiments::{
    best_cce_lexicographic, run_dynamics_to, run_sweep, write_sweep_csv, DynamicsConfig, SweepConfig,
};
use bertrand_core::learners::{EtaMode, LearnerFamily};
use bertrand_core::lp::{lp_best_ce_duopoly, lp_best_symmetric_cce, Objective};
use bertrand_core::{Demand, DeviationClass, Game, GameConfig, JointDist, VerificationReport};

#[derive(Parser)]
#[command(name = "bertrand", version, about = "Equilibria and learning dynamics in discrete Bertrand games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a closed-form equilibrium, verify it and write it to disk.
    Construct(ConstructArgs),
    /// Check a distribution file against per-player deviation classes.
    Verify(VerifyArgs),
    /// LP sweeps over k, n or player 2's cost.
    SweepFig1(SweepArgs),
    /// Learning-dynamics batch over several seeds.
    SimulateFig2(SimulateArgs),
    /// Replace a CCE by its symmetrized diagonal form.
    Symmetrize(SymmetrizeArgs),
    /// Maximum-utility coarse correlated equilibrium by LP.
    BestCce(BestArgs),
    /// Maximum-utility correlated equilibrium of a duopoly by LP.
    BestCe(BestArgs),
}

#[derive(Args, Clone, Default)]
struct GameArgs {
    /// Grid size: prices are 1/k, ..., 1.
    #[arg(long)]
    k: Option<usize>,
    /// Number of players (with --cost).
    #[arg(long)]
    n: Option<usize>,
    /// Common marginal cost.
    #[arg(long, conflicts_with = "costs")]
    cost: Option<f64>,
    /// Per-player costs, comma separated.
    #[arg(long, value_delimiter = ',')]
    costs: Option<Vec<f64>>,
    /// constant | linear | quadratic | exponential | table:f1,f2,...
    #[arg(long)]
    demand: Option<String>,
}

impl GameArgs {
    fn demand(&self) -> Result<Demand> {
        match self.demand.as_deref() {
            None => Ok(Demand::Constant),
            Some(s) => parse_demand(s),
        }
    }

    fn costs(&self, default_n: usize) -> Vec<f64> {
        match (&self.costs, self.cost) {
            (Some(c), _) => c.clone(),
            (None, c) => vec![c.unwrap_or(0.0); self.n.unwrap_or(default_n)],
        }
    }

    fn build(&self, default_n: usize) -> Result<Game> {
        let k = self.k.ok_or_else(|| anyhow!("--k is required"))?;
        Ok(Game::new(k, &self.costs(default_n), self.demand()?)?)
    }

    fn is_empty(&self) -> bool {
        self.k.is_none() && self.n.is_none() && self.cost.is_none() && self.costs.is_none() && self.demand.is_none()
    }
}

fn parse_demand(s: &str) -> Result<Demand> {
    if let Some(rest) = s.strip_prefix("table:") {
        let table = rest
            .split(',')
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad demand value '{v}'")))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Demand::Table { table });
    }
    Ok(Demand::parse(s)?)
}

#[derive(Args)]
struct ConstructArgs {
    /// cce_symmetric | cce_asymmetric | phi_ce_symmetric | phi_ce_asymmetric_v1 | phi_ce_asymmetric_v2
    name: String,
    #[command(flatten)]
    game: GameArgs,
    /// Tail scale (cce_symmetric) or player-1 tail scale (cce_asymmetric).
    #[arg(long)]
    lambda: Option<f64>,
    /// Harmonic-marginal ratio for the phi_ce constructions (default e^10).
    #[arg(long)]
    ratio: Option<f64>,
    /// Verification tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Distribution JSON, bare or as written by `construct`.
    file: PathBuf,
    /// Game to check against when the file carries none.
    #[command(flatten)]
    game: GameArgs,
    /// Deviation classes: `cce`, `ce`, or one per player such as `all,const`.
    #[arg(long, default_value = "cce")]
    phi: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep description; replaces the sweep flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ratio_vs_k | ratio_vs_n | asym_vs_c2
    #[arg(long)]
    kind: Option<String>,
    /// Grid sizes, e.g. `10..100` or `10,20,50`.
    #[arg(long)]
    ks: Option<String>,
    /// Player counts, e.g. `2..10`.
    #[arg(long)]
    ns: Option<String>,
    /// Player-2 costs, e.g. `0..0.98/0.049`.
    #[arg(long)]
    c2s: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    cost: f64,
    #[arg(long, default_value_t = 0.0)]
    c1: f64,
    #[arg(long, default_value = "constant")]
    demand: String,
    #[arg(long, default_value = "p1")]
    objective: String,
    /// Tie-break among optima by this objective.
    #[arg(long)]
    secondary: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output file stem (default: config file stem or sweep kind).
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON run description; replaces the run flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5")]
    costs: Vec<f64>,
    #[arg(long, default_value = "constant")]
    demand: String,
    #[arg(long, default_value_t = 1_000_000)]
    rounds: u64,
    /// Seeds, e.g. `0..19` or `1,2,3`.
    #[arg(long, default_value = "0..19")]
    seeds: String,
    /// hedge_swap | hedge | regret_matching
    #[arg(long, default_value = "hedge_swap")]
    family: String,
    /// eta_base | eta_1_plus_10i | eta_11_minus_10i
    #[arg(long, default_value = "eta_base")]
    eta_mode: String,
    /// Base learning rate (default sqrt(ln k / T)).
    #[arg(long)]
    eta: Option<f64>,
    /// Freeze block lengths per player.
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    t0: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    station_iters: usize,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SymmetrizeArgs {
    file: PathBuf,
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BestArgs {
    #[command(flatten)]
    game: GameArgs,
    /// p1 | p2 | sum (duopoly LPs).
    #[arg(long, default_value = "p1")]
    objective: String,
    /// Restrict to symmetric (diagonal) CCEs; implied for n > 2.
    #[arg(long)]
    symmetric: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Deserialize)]
struct SweepFile {
    #[serde(flatten)]
    sweep: SweepConfig,
    #[serde(default)]
    threads: Option<usize>,
}

/// Process outcome: `Ok(true)` for success or a passing check.
type Outcome = Result<bool>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Construct(a) => cmd_construct(a),
        Command::Verify(a) => cmd_verify(a),
        Command::SweepFig1(a) => cmd_sweep(a),
        Command::SimulateFig2(a) => cmd_simulate(a),
        Command::Symmetrize(a) => cmd_symmetrize(a),
        Command::BestCce(a) => cmd_best(a, false),
        Command::BestCe(a) => cmd_best(a, true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn document(kind: &str, game: &Game, dist: &JointDist, extra: Value) -> Value {
    let mut doc = json!({
        "construction": kind,
        "game": game.to_config(),
        "distribution": dist.to_json(),
    });
    if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
        d.extend(e);
    }
    doc
}

/// Reads a distribution file; the game comes from the file or from flags.
fn load(path: &Path, args: &GameArgs) -> Result<(Game, JointDist)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let (dist_json, game_json) = match v.get("distribution") {
        Some(d) => (d.clone(), v.get("game").cloned()),
        None => (v, None),
    };
    let dist = JointDist::from_json(&dist_json)?;
    let game = match game_json {
        Some(g) if args.is_empty() => Game::from_config(&serde_json::from_value::<GameConfig>(g)?)?,
        _ => {
            let mut a = args.clone();
            a.k = a.k.or(Some(dist.k()));
            a.n = a.n.or(Some(dist.n()));
            a.build(dist.n())?
        }
    };
    Ok((game, dist))
}

fn parse_classes(spec: &str, n: usize) -> Result<Vec<DeviationClass>> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let classes = parts.iter().map(|p| DeviationClass::parse(p)).collect::<bertrand_core::Result<Vec<_>>>()?;
    match classes.len() {
        1 => Ok(vec![classes[0].clone(); n]),
        m if m == n => Ok(classes),
        m => bail!("--phi lists {m} classes for {n} players"),
    }
}

fn print_report(report: &VerificationReport) {
    for p in &report.players {
        let witness = match &p.witness {
            Witness::Constant { price } => format!("constant level {}", price + 1),
            Witness::Swap { responses } => format!("swap map moving {} prices", responses.len()),
            Witness::Explicit { map_index } => format!("explicit map #{map_index}"),
            Witness::Identity => "identity".into(),
        };
        println!(
            "player {}: utility {:.12} worst gain {:.3e} ({witness})",
            p.player + 1,
            p.expected_utility,
            p.worst_gain
        );
    }
    println!("{} (tol {:e})", if report.pass { "PASS" } else { "FAIL" }, report.tolerance);
}

fn cmd_construct(a: ConstructArgs) -> Outcome {
    fs::create_dir_all(&a.out)?;
    let (game, dist, classes, params) = match a.name.as_str() {
        "cce_symmetric" => {
            let game = a.game.build(2)?;
            let (d, p) = cce_symmetric(&game, a.lambda)?;
            let classes = vec![DeviationClass::ConstantOnly; game.n()];
            (game, d, classes, serde_json::to_value(p)?)
        }
        "cce_asymmetric" => {
            let game = a.game.build(2)?;
            let (d, p) = cce_asymmetric(&game, a.lambda)?;
            (game, d, vec![DeviationClass::ConstantOnly; 2], serde_json::to_value(p)?)
        }
        "phi_ce_symmetric" => {
            let game = a.game.build(2)?;
            let (d, p) = phi_ce_symmetric(&game, a.ratio)?;
            (game, d, swap_vs_external_classes(), serde_json::to_value(p)?)
        }
        "phi_ce_asymmetric_v1" | "phi_ce_asymmetric_v2" => {
            let k = a.game.k.ok_or_else(|| anyhow!("--k is required"))?;
            let (game, d, p) = if a.name.ends_with("v1") {
                phi_ce_asymmetric_v1(k, a.ratio)?
            } else {
                phi_ce_asymmetric_v2(k, a.ratio)?
            };
            (game, d, swap_vs_external_classes(), serde_json::to_value(p)?)
        }
        other => bail!("unknown construction '{other}'"),
    };
    let report = verify(&game, &dist, &classes, a.tol)?;
    write_json(&a.out.join(format!("{}.json", a.name)), &document(&a.name, &game, &dist, json!({ "params": params })))?;
    write_json(&a.out.join(format!("{}_report.json", a.name)), &serde_json::to_value(&report)?)?;
    print_report(&report);
    Ok(report.pass)
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let (game, dist) = load(&a.file, &a.game)?;
    let classes = parse_classes(&a.phi, game.n())?;
    let report = verify(&game, &dist, &classes, a.tol)?;
    print_report(&report);
    Ok(report.pass)
}

fn cmd_symmetrize(a: SymmetrizeArgs) -> Outcome {
    let (game, dist) = load(&a.file, &a.game)?;
    let sym = symmetrize(&game, &dist)?;
    let report = verify(&game, &sym, &vec![DeviationClass::ConstantOnly; game.n()], a.tol)?;
    let before = total_expected_utility(&game, &dist)?;
    let after = total_expected_utility(&game, &sym)?;
    fs::create_dir_all(&a.out)?;
    write_json(
        &a.out.join("symmetrized.json"),
        &document("symmetrize", &game, &sym, json!({ "total_utility_before": before, "total_utility_after": after })),
    )?;
    println!("total utility {before:.12} -> {after:.12}");
    print_report(&report);
    Ok(report.pass)
}

fn cmd_best(a: BestArgs, ce: bool) -> Outcome {
    let game = a.game.build(2)?;
    let objective = Objective::parse(&a.objective)?;
    let symmetric = !ce && (a.symmetric || game.n() > 2);
    let (dist, value, kind) = if ce {
        let (d, v, _) = lp_best_ce_duopoly(&game, objective)?;
        (d, v, "best_ce")
    } else if symmetric {
        let (d, v, _) = lp_best_symmetric_cce(&game)?;
        (d, v, "best_symmetric_cce")
    } else {
        let (d, v) = best_cce_lexicographic(&game, objective, None)?;
        (d, v, "best_cce")
    };
    let class = if ce { DeviationClass::AllMaps } else { DeviationClass::ConstantOnly };
    let report = verify(&game, &dist, &vec![class; game.n()], a.tol)?;
    let utilities = (0..game.n()).map(|i| expected_utility(&game, &dist, i)).collect::<bertrand_core::Result<Vec<_>>>()?;
    let monopoly: Vec<f64> = (0..game.n()).map(|i| game.monopoly_value(i)).collect();
    fs::create_dir_all(&a.out)?;
    write_json(
        &a.out.join(format!("{kind}.json")),
        &document(
            kind,
            &game,
            &dist,
            json!({
                "objective": if symmetric { "per_player" } else { objective.name() },
                "value": value,
                "utilities": utilities,
                "monopoly": monopoly,
            }),
        ),
    )?;
    println!("{kind}: value {value:.12}");
    print_report(&report);
    Ok(report.pass)
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let (hi, step) = match hi.split_once('/') {
            Some((h, st)) => (h, st.trim().parse::<usize>()?),
            None => (hi, 1),
        };
        let (lo, hi) = (lo.trim().parse::<usize>()?, hi.trim().parse::<usize>()?);
        if step == 0 || hi < lo {
            bail!("empty range '{s}'");
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    s.split(',').map(|v| v.trim().parse::<usize>().with_context(|| format!("bad integer '{v}'"))).collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = rest.split_once('/').ok_or_else(|| anyhow!("real ranges need a step: 'lo..hi/step'"))?;
        let (lo, hi, step) = (lo.trim().parse::<f64>()?, hi.trim().parse::<f64>()?, step.trim().parse::<f64>()?);
        if !(step > 0.0) || hi < lo {
            bail!("empty range '{s}'");
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| lo + i as f64 * step).collect());
    }
    s.split(',').map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number '{v}'"))).collect()
}

fn file_stem(path: &Path) -> Option<String> {
    path.file_stem().map(|s| s.to_string_lossy().into_owned())
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let (sweep, threads) = if let Some(path) = &a.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let f: SweepFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        (f.sweep, a.threads.or(f.threads))
    } else {
        let demand = parse_demand(&a.demand)?;
        let need = |v: &Option<String>, flag: &str| v.clone().ok_or_else(|| anyhow!("{flag} is required"));
        let sweep = match a.kind.as_deref() {
            Some("ratio_vs_k") => {
                SweepConfig::RatioVsK { ks: parse_usize_list(&need(&a.ks, "--ks")?)?, n: a.n, cost: a.cost, demand }
            }
            Some("ratio_vs_n") => SweepConfig::RatioVsN {
                k: a.k.ok_or_else(|| anyhow!("--k is required"))?,
                ns: parse_usize_list(&need(&a.ns, "--ns")?)?,
                cost: a.cost,
                demand,
            },
            Some("asym_vs_c2") => SweepConfig::AsymVsC2 {
                k: a.k.ok_or_else(|| anyhow!("--k is required"))?,
                c1: a.c1,
                c2s: parse_f64_list(&need(&a.c2s, "--c2s")?)?,
                objective: Objective::parse(&a.objective)?,
                demand,
                secondary: a.secondary.as_deref().map(Objective::parse).transpose()?,
            },
            Some(other) => bail!("unknown sweep kind '{other}' (ratio_vs_k, ratio_vs_n, asym_vs_c2)"),
            None => bail!("either --config or --kind is required"),
        };
        (sweep, a.threads)
    };
    let name = a.name.clone().or_else(|| a.config.as_deref().and_then(file_stem)).unwrap_or_else(|| sweep.kind().into());
    let rows = run_sweep(&sweep, threads)?;
    fs::create_dir_all(&a.out)?;
    let path = a.out.join(format!("{name}.csv"));
    write_sweep_csv(&rows, &path)?;
    println!("{} rows -> {}", rows.len(), path.display());
    if let Some(last) = rows.last() {
        println!("last: ratio1 {:.6} ratio2 {:.6}", last.ratio1, last.ratio2);
    }
    Ok(true)
}

fn cmd_simulate(a: SimulateArgs) -> Outcome {
    let cfg = if let Some(path) = &a.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: DynamicsConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.threads = a.threads.or(cfg.threads);
        cfg
    } else {
        if a.costs.len() != 2 {
            bail!("--costs needs two values");
        }
        if a.t0.len() != 2 {
            bail!("--t0 needs two values");
        }
        let mut cfg = DynamicsConfig::new(a.k, [a.costs[0], a.costs[1]], a.rounds, parse_u64_list(&a.seeds)?);
        cfg.demand = parse_demand(&a.demand)?;
        cfg.family = LearnerFamily::parse(&a.family)?;
        cfg.eta_mode = EtaMode::parse(&a.eta_mode)?;
        cfg.eta = a.eta;
        cfg.t0 = [a.t0[0], a.t0[1]];
        cfg.station_iters = a.station_iters;
        cfg.threads = a.threads;
        cfg
    };
    let name = a.name.clone().or_else(|| a.config.as_deref().and_then(file_stem)).unwrap_or_else(|| "dynamics".into());
    let res = run_dynamics_to(&cfg, &a.out, &name)?;
    let seeds = res.seeds.len() as f64;
    let mean = |f: &dyn Fn(&bertrand_core::experiments::SeedSummary) -> f64| res.seeds.iter().map(f).sum::<f64>() / seeds;
    let t = cfg.rounds as f64;
    println!("modal transaction price {:.2}", res.modal_transaction_price());
    for i in 0..2 {
        println!(
            "player {}: mean swap regret/T {:.5}, external regret/T {:.5}",
            i + 1,
            mean(&|s| s.swap_regret[i]) / t,
            mean(&|s| s.external_regret[i]) / t
        );
    }
    println!("wrote {}", a.out.join(format!("{name}.csv")).display());
    Ok(true)
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    Ok(parse_usize_list(s)?.into_iter().map(|v| v as u64).collect())
}
