//! Sweep and simulation drivers behind the figure-style experiments, and
//! their CSV/JSON artifacts.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{expected_utility, verify_cce};
use crate::error::{Error, Result};
use crate::game::{Demand, Game};
use crate::learners::{modal_index, simulate, EtaMode, LearnerConfig, LearnerFamily, SimResult};
use crate::lp::{lp_best_cce_duopoly, lp_best_symmetric_cce, Objective};

/// Number rendering for CSV output: 12 significant digits, `.` separator,
/// positional notation for moderate magnitudes.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-6..=15).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = exp + 1;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(trimmed);
    }
    out
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t.max(1));
    }
    b.build().map_err(|e| Error::input(format!("cannot start worker pool: {e}")))
}

/// Largest cost level `j` with `j / k <= cost`; off-grid costs snap down.
pub fn snap_cost(cost: f64, k: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&cost) {
        return Err(Error::input(format!("cost {cost} outside [0, 1]")));
    }
    Ok(((cost * k as f64 + 1e-9).floor() as usize).min(k))
}

fn default_demand() -> Demand {
    Demand::Constant
}

/// Which Figure-1 style sweep to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sweep", rename_all = "snake_case")]
pub enum SweepConfig {
    /// Best symmetric CCE per player / monopoly, over `k`.
    RatioVsK {
        ks: Vec<usize>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        cost: f64,
        #[serde(default = "default_demand")]
        demand: Demand,
    },
    /// Best symmetric CCE per player / monopoly, over `n`.
    RatioVsN {
        k: usize,
        ns: Vec<usize>,
        #[serde(default)]
        cost: f64,
        #[serde(default = "default_demand")]
        demand: Demand,
    },
    /// Best duopoly CCE for one objective, over player 2's cost.
    AsymVsC2 {
        k: usize,
        #[serde(default)]
        c1: f64,
        c2s: Vec<f64>,
        objective: Objective,
        #[serde(default = "default_demand")]
        demand: Demand,
        /// Break ties among optima by this objective.
        #[serde(default)]
        secondary: Option<Objective>,
    },
}

impl SweepConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            SweepConfig::RatioVsK { .. } => "ratio_vs_k",
            SweepConfig::RatioVsN { .. } => "ratio_vs_n",
            SweepConfig::AsymVsC2 { .. } => "asym_vs_c2",
        }
    }

    fn validate(&self) -> Result<()> {
        let empty = match self {
            SweepConfig::RatioVsK { ks, .. } => ks.is_empty(),
            SweepConfig::RatioVsN { ns, .. } => ns.is_empty(),
            SweepConfig::AsymVsC2 { c2s, .. } => c2s.is_empty(),
        };
        if empty {
            return Err(Error::input("sweep range is empty"));
        }
        Ok(())
    }
}

/// One sweep point. Symmetric sweeps fill only the player-1 columns.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub n: usize,
    pub demand: String,
    pub c1: f64,
    pub c2: f64,
    pub objective: String,
    /// Optimal objective value.
    pub value: f64,
    pub u1: f64,
    pub u2: f64,
    pub monopoly1: f64,
    pub monopoly2: f64,
    pub ratio1: f64,
    pub ratio2: f64,
    /// Worst CCE deviation gain of the optimum.
    pub max_gain: f64,
}

fn ratio(u: f64, monopoly: f64) -> f64 {
    if monopoly > 0.0 {
        u / monopoly
    } else {
        f64::NAN
    }
}

fn symmetric_point(k: usize, n: usize, cost: f64, demand: &Demand) -> Result<SweepRow> {
    let level = snap_cost(cost, k)?;
    let game = Game::symmetric(k, n, level, demand.clone())?;
    let (dist, value, _) =
        lp_best_symmetric_cce(&game).map_err(|e| Error::Solver(format!("k = {k}, n = {n}: {e}")))?;
    let report = verify_cce(&game, &dist, 0.0)?;
    let mono = game.monopoly_value(0);
    Ok(SweepRow {
        k,
        n,
        demand: demand.name().into(),
        c1: game.cost(0),
        c2: game.cost(0),
        objective: "per_player".into(),
        value,
        u1: value,
        u2: value,
        monopoly1: mono,
        monopoly2: mono,
        ratio1: ratio(value, mono),
        ratio2: ratio(value, mono),
        max_gain: report.max_gain(),
    })
}

/// Best duopoly CCE for `objective`, optionally breaking ties by `secondary`.
pub fn best_cce_lexicographic(
    game: &Game,
    objective: Objective,
    secondary: Option<Objective>,
) -> Result<(crate::equilibrium::JointDist, f64)> {
    let (dist, value, _) = lp_best_cce_duopoly(game, objective)?;
    let Some(sec) = secondary else {
        return Ok((dist, value));
    };
    let mut lp = crate::lp::duopoly_cce_lp(game, sec)?;
    let primary = crate::lp::duopoly_cce_lp(game, objective)?.objective;
    lp.add(primary, crate::lp::Sense::Ge, value - 1e-10 * value.abs().max(1.0));
    let sol = crate::lp::solve_lp(&lp)?;
    if sol.status != crate::lp::LpStatus::Optimal {
        return Ok((dist, value));
    }
    let total: f64 = sol.x.iter().sum();
    let tie_broken = crate::equilibrium::JointDist::dense2(game.k(), sol.x.iter().map(|v| v / total).collect())?;
    let v = match objective {
        Objective::P1 => expected_utility(game, &tie_broken, 0)?,
        Objective::P2 => expected_utility(game, &tie_broken, 1)?,
        Objective::Sum => crate::equilibrium::total_expected_utility(game, &tie_broken)?,
    };
    Ok((tie_broken, v))
}

fn asym_point(
    k: usize,
    c1: f64,
    c2: f64,
    objective: Objective,
    secondary: Option<Objective>,
    demand: &Demand,
) -> Result<SweepRow> {
    let levels = [snap_cost(c1, k)?, snap_cost(c2, k)?];
    let game = Game::with_cost_levels(k, &levels, demand.clone())?;
    let (dist, value) = best_cce_lexicographic(&game, objective, secondary)
        .map_err(|e| Error::Solver(format!("c2 = {c2}: {e}")))?;
    let report = verify_cce(&game, &dist, 0.0)?;
    let (u1, u2) = (expected_utility(&game, &dist, 0)?, expected_utility(&game, &dist, 1)?);
    let (m1, m2) = (game.monopoly_value(0), game.monopoly_value(1));
    Ok(SweepRow {
        k,
        n: 2,
        demand: demand.name().into(),
        c1: game.cost(0),
        c2: game.cost(1),
        objective: objective.name().into(),
        value,
        u1,
        u2,
        monopoly1: m1,
        monopoly2: m2,
        ratio1: ratio(u1, m1),
        ratio2: ratio(u2, m2),
        max_gain: report.max_gain(),
    })
}

/// Runs a sweep, one LP per point, in parallel. Rows come back in sweep order.
pub fn run_sweep(cfg: &SweepConfig, threads: Option<usize>) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let pool = pool(threads)?;
    pool.install(|| match cfg {
        SweepConfig::RatioVsK { ks, n, cost, demand } => {
            ks.par_iter().map(|&k| symmetric_point(k, n.unwrap_or(2), *cost, demand)).collect()
        }
        SweepConfig::RatioVsN { k, ns, cost, demand } => {
            ns.par_iter().map(|&n| symmetric_point(*k, n, *cost, demand)).collect()
        }
        SweepConfig::AsymVsC2 { k, c1, c2s, objective, demand, secondary } => c2s
            .par_iter()
            .map(|&c2| asym_point(*k, *c1, c2, *objective, *secondary, demand))
            .collect(),
    })
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k", "n", "demand", "c1", "c2", "objective", "value", "u1", "u2", "monopoly1", "monopoly2", "ratio1",
        "ratio2", "max_gain",
    ])?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.n.to_string(),
            r.demand.clone(),
            fmt_num(r.c1),
            fmt_num(r.c2),
            r.objective.clone(),
            fmt_num(r.value),
            fmt_num(r.u1),
            fmt_num(r.u2),
            fmt_num(r.monopoly1),
            fmt_num(r.monopoly2),
            fmt_num(r.ratio1),
            fmt_num(r.ratio2),
            fmt_num(r.max_gain),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn default_k() -> usize {
    100
}

fn default_costs() -> [f64; 2] {
    [0.0, 0.5]
}

fn default_t0() -> [usize; 2] {
    [1, 1]
}

fn default_iters() -> usize {
    20
}

fn default_family() -> LearnerFamily {
    LearnerFamily::HedgeSwap
}

fn default_eta_mode() -> EtaMode {
    EtaMode::Base
}

/// A batch of duopoly learning runs over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_costs")]
    pub costs: [f64; 2],
    #[serde(default = "default_demand")]
    pub demand: Demand,
    pub rounds: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_family")]
    pub family: LearnerFamily,
    #[serde(default = "default_eta_mode")]
    pub eta_mode: EtaMode,
    /// Base learning rate; defaults to `sqrt(ln k / T)`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_t0")]
    pub t0: [usize; 2],
    #[serde(default = "default_iters")]
    pub station_iters: usize,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl DynamicsConfig {
    pub fn new(k: usize, costs: [f64; 2], rounds: u64, seeds: Vec<u64>) -> Self {
        Self {
            k,
            costs,
            demand: Demand::Constant,
            rounds,
            seeds,
            family: LearnerFamily::HedgeSwap,
            eta_mode: EtaMode::Base,
            eta: None,
            t0: [1, 1],
            station_iters: 20,
            threads: None,
        }
    }

    pub fn game(&self) -> Result<Game> {
        Game::new(self.k, &self.costs, self.demand.clone())
    }

    pub fn learner(&self, player: usize) -> LearnerConfig {
        let (m1, m2) = self.eta_mode.multipliers();
        LearnerConfig {
            family: self.family,
            eta_multiplier: if player == 0 { m1 } else { m2 },
            eta: self.eta,
            t0: self.t0[player],
            station_iters: self.station_iters,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub modal_transaction_price: f64,
    pub cumulative_utility: [f64; 2],
    pub external_regret: [f64; 2],
    pub swap_regret: [f64; 2],
}

/// Histograms summed over seeds plus per-seed summaries.
#[derive(Debug, Clone, Serialize)]
pub struct DynamicsResult {
    pub config: DynamicsConfig,
    pub price_hist: [Vec<u64>; 2],
    pub transaction_hist: Vec<u64>,
    pub seeds: Vec<SeedSummary>,
    #[serde(skip)]
    pub runs: Vec<SimResult>,
}

impl DynamicsResult {
    /// Most frequent transaction price across all seeds (lowest on ties).
    pub fn modal_transaction_price(&self) -> f64 {
        (modal_index(&self.transaction_hist) + 1) as f64 / self.config.k as f64
    }
}

pub fn run_dynamics(cfg: &DynamicsConfig) -> Result<DynamicsResult> {
    if cfg.seeds.is_empty() {
        return Err(Error::input("no seeds given"));
    }
    let game = cfg.game()?;
    if game.n() != 2 {
        return Err(Error::input("dynamics need exactly two costs"));
    }
    let l1 = cfg.learner(0);
    let l2 = cfg.learner(1);
    l1.validate()?;
    l2.validate()?;
    let pool = pool(cfg.threads)?;
    let runs: Vec<SimResult> = pool.install(|| {
        cfg.seeds.par_iter().map(|&seed| simulate(&game, [&l1, &l2], cfg.rounds, seed)).collect::<Result<_>>()
    })?;
    let k = cfg.k;
    let mut price_hist = [vec![0u64; k], vec![0u64; k]];
    let mut transaction_hist = vec![0u64; k];
    for r in &runs {
        for i in 0..2 {
            for (acc, c) in price_hist[i].iter_mut().zip(&r.price_hist[i]) {
                *acc += c;
            }
        }
        for (acc, c) in transaction_hist.iter_mut().zip(&r.transaction_hist) {
            *acc += c;
        }
    }
    let seeds = runs
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            modal_transaction_price: (r.modal_transaction() + 1) as f64 / k as f64,
            cumulative_utility: r.cumulative_utility,
            external_regret: r.external_regret,
            swap_regret: r.swap_regret,
        })
        .collect();
    Ok(DynamicsResult { config: cfg.clone(), price_hist, transaction_hist, seeds, runs })
}

/// Per-price frequency rows: `price, freq_p1, freq_p2, freq_transaction`.
pub fn write_dynamics_csv(res: &DynamicsResult, path: &Path) -> Result<()> {
    let total = (res.config.rounds * res.config.seeds.len() as u64) as f64;
    let k = res.config.k;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["price", "freq_p1", "freq_p2", "freq_transaction"])?;
    for a in 0..k {
        w.write_record([
            fmt_num((a + 1) as f64 / k as f64),
            fmt_num(res.price_hist[0][a] as f64 / total),
            fmt_num(res.price_hist[1][a] as f64 / total),
            fmt_num(res.transaction_hist[a] as f64 / total),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON sidecar: configuration, per-seed regrets and wall-clock data.
pub fn write_dynamics_sidecar(res: &DynamicsResult, runtime_secs: f64, path: &Path) -> Result<()> {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let value = serde_json::json!({
        "config": res.config,
        "learners": [res.config.learner(0), res.config.learner(1)],
        "modal_transaction_price": res.modal_transaction_price(),
        "seeds": res.seeds,
        "runtime_secs": runtime_secs,
        "finished_unix": stamp,
    });
    std::fs::write(path, serde_json::to_string_pretty(&value)?)?;
    Ok(())
}

/// Runs a dynamics batch and writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn run_dynamics_to(cfg: &DynamicsConfig, dir: &Path, stem: &str) -> Result<DynamicsResult> {
    std::fs::create_dir_all(dir)?;
    let start = Instant::now();
    let res = run_dynamics(cfg)?;
    let secs = start.elapsed().as_secs_f64();
    write_dynamics_csv(&res, &dir.join(format!("{stem}.csv")))?;
    write_dynamics_sidecar(&res, secs, &dir.join(format!("{stem}.json")))?;
    Ok(res)
}
