//! The discrete Bertrand pricing game.
//!
//! Prices live on the grid `{1/k, 2/k, ..., 1}` and are handled as 0-based
//! indices: index `a` is the price `(a + 1) / k`. Marginal costs are grid
//! *levels* `j` in `0..=k` (cost `j / k`), so every comparison between prices
//! and costs is integer arithmetic and tie detection never touches floats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when snapping a floating-point price or cost onto the grid.
const GRID_SNAP_TOL: f64 = 1e-9;

/// The price grid `{1/k, ..., 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceGrid {
    k: usize,
}

impl PriceGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("grid resolution k must be positive"));
        }
        if k > u32::MAX as usize {
            return Err(Error::input("grid resolution k is too large"));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Price at 0-based index `a`.
    #[inline]
    pub fn price(&self, a: usize) -> f64 {
        (a + 1) as f64 / self.k as f64
    }

    pub fn prices(&self) -> Vec<f64> {
        (0..self.k).map(|a| self.price(a)).collect()
    }

    /// Index of a price given as a number; rejects anything off the grid.
    pub fn index_of(&self, price: f64) -> Result<usize> {
        let level = self.level_of(price)?;
        if level == 0 {
            return Err(Error::input(format!("price {price} is not on the grid (zero)")));
        }
        Ok(level - 1)
    }

    /// Grid level `j` with `j / k == value`, allowing `j = 0`.
    pub fn level_of(&self, value: f64) -> Result<usize> {
        if !value.is_finite() {
            return Err(Error::input(format!("{value} is not a finite number")));
        }
        let scaled = value * self.k as f64;
        let level = scaled.round();
        if (scaled - level).abs() > GRID_SNAP_TOL * self.k.max(1) as f64
            || level < 0.0
            || level > self.k as f64
        {
            return Err(Error::input(format!(
                "{value} is not of the form j/{} with 0 <= j <= {}",
                self.k, self.k
            )));
        }
        Ok(level as usize)
    }

    pub fn check_index(&self, a: usize) -> Result<()> {
        if a >= self.k {
            Err(Error::input(format!("price index {a} is off the grid (k = {})", self.k)))
        } else {
            Ok(())
        }
    }
}

/// Non-increasing demand `f: P -> [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Demand {
    /// `f(x) = 1`
    Constant,
    /// `f(x) = 1 - x`
    Linear,
    /// `f(x) = 1 - x^2`
    Quadratic,
    /// `f(x) = exp(-x)`
    Exponential,
    /// Explicit values at the `k` grid points, lowest price first.
    Table { table: Vec<f64> },
}

impl Demand {
    pub fn name(&self) -> &'static str {
        match self {
            Demand::Constant => "constant",
            Demand::Linear => "linear",
            Demand::Quadratic => "quadratic",
            Demand::Exponential => "exponential",
            Demand::Table { .. } => "table",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "constant" => Ok(Demand::Constant),
            "linear" => Ok(Demand::Linear),
            "quadratic" => Ok(Demand::Quadratic),
            "exponential" => Ok(Demand::Exponential),
            other => Err(Error::input(format!(
                "unknown demand kind '{other}' (tables must come from a config file)"
            ))),
        }
    }

    /// The four analytic families used throughout the experiments.
    pub fn builtins() -> [Demand; 4] {
        [Demand::Constant, Demand::Linear, Demand::Quadratic, Demand::Exponential]
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            Demand::Constant => 1.0,
            Demand::Linear => 1.0 - x,
            Demand::Quadratic => 1.0 - x * x,
            Demand::Exponential => (-x).exp(),
            Demand::Table { .. } => unreachable!("tables are indexed, not evaluated"),
        }
    }

    /// Demand values at every grid point, validated.
    pub fn values_on(&self, grid: &PriceGrid) -> Result<Vec<f64>> {
        let values = match self {
            Demand::Table { table } => {
                if table.len() != grid.k() {
                    return Err(Error::input(format!(
                        "demand table has {} entries, expected k = {}",
                        table.len(),
                        grid.k()
                    )));
                }
                table.clone()
            }
            analytic => (0..grid.k()).map(|a| analytic.eval(grid.price(a))).collect(),
        };
        for (a, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::input(format!("demand value {v} at index {a} is outside [0, 1]")));
            }
        }
        if let Some(a) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::input(format!(
                "demand table is not non-increasing: f[{}] = {} < f[{}] = {}",
                a,
                values[a],
                a + 1,
                values[a + 1]
            )));
        }
        Ok(values)
    }
}

/// Serializable description of a game: `{k, n, costs, demand}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub k: usize,
    pub n: usize,
    pub costs: Vec<f64>,
    pub demand: Demand,
}

/// A validated game with cached demand values and per-player margins.
#[derive(Debug, Clone)]
pub struct Game {
    grid: PriceGrid,
    cost_levels: Vec<usize>,
    demand: Demand,
    demand_values: Vec<f64>,
    margins: Vec<Vec<f64>>,
}

impl Game {
    /// Build a game from costs given as numbers; each must equal `j/k` for an integer `j`.
    pub fn new(k: usize, costs: &[f64], demand: Demand) -> Result<Self> {
        let grid = PriceGrid::new(k)?;
        let levels = costs
            .iter()
            .map(|&c| grid.level_of(c))
            .collect::<Result<Vec<_>>>()?;
        Self::with_cost_levels(k, &levels, demand)
    }

    /// Build a game from integer cost levels (`cost_i = levels[i] / k`).
    pub fn with_cost_levels(k: usize, levels: &[usize], demand: Demand) -> Result<Self> {
        let grid = PriceGrid::new(k)?;
        if levels.len() < 2 {
            return Err(Error::input(format!("need at least 2 players, got {}", levels.len())));
        }
        if let Some(&bad) = levels.iter().find(|&&j| j > k) {
            return Err(Error::input(format!("cost level {bad} exceeds k = {k}")));
        }
        let demand_values = demand.values_on(&grid)?;
        let margins = levels
            .iter()
            .map(|&j| {
                (0..k)
                    .map(|a| ((a + 1) as f64 - j as f64) / k as f64 * demand_values[a])
                    .collect()
            })
            .collect();
        Ok(Self { grid, cost_levels: levels.to_vec(), demand, demand_values, margins })
    }

    /// Symmetric-cost game with `n` players sharing cost level `j`.
    pub fn symmetric(k: usize, n: usize, cost_level: usize, demand: Demand) -> Result<Self> {
        Self::with_cost_levels(k, &vec![cost_level; n], demand)
    }

    pub fn from_config(cfg: &GameConfig) -> Result<Self> {
        if cfg.costs.len() != cfg.n {
            return Err(Error::input(format!(
                "config lists {} costs for n = {} players",
                cfg.costs.len(),
                cfg.n
            )));
        }
        Self::new(cfg.k, &cfg.costs, cfg.demand.clone())
    }

    pub fn to_config(&self) -> GameConfig {
        GameConfig { k: self.k(), n: self.n(), costs: self.costs(), demand: self.demand.clone() }
    }

    pub fn grid(&self) -> &PriceGrid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.grid.k()
    }

    pub fn n(&self) -> usize {
        self.cost_levels.len()
    }

    pub fn demand(&self) -> &Demand {
        &self.demand
    }

    /// Demand at grid index `a`.
    pub fn demand_at(&self, a: usize) -> f64 {
        self.demand_values[a]
    }

    pub fn demand_values(&self) -> &[f64] {
        &self.demand_values
    }

    pub fn cost_level(&self, i: usize) -> usize {
        self.cost_levels[i]
    }

    pub fn cost_levels(&self) -> &[usize] {
        &self.cost_levels
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.cost_levels[i] as f64 / self.k() as f64
    }

    pub fn costs(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.cost(i)).collect()
    }

    /// Common cost level when all players share one cost.
    pub fn symmetric_cost_level(&self) -> Option<usize> {
        let first = self.cost_levels[0];
        self.cost_levels.iter().all(|&j| j == first).then_some(first)
    }

    fn check_player(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            Err(Error::input(format!("player {i} does not exist (n = {})", self.n())))
        } else {
            Ok(())
        }
    }

    /// `(p - c_i) f(p)`; negative when the price is below cost.
    pub fn margin(&self, i: usize, a: usize) -> Result<f64> {
        self.check_player(i)?;
        self.grid.check_index(a)?;
        Ok(self.margins[i][a])
    }

    /// All margins of player `i`, indexed by price index.
    #[inline]
    pub fn margins(&self, i: usize) -> &[f64] {
        &self.margins[i]
    }

    /// Payoff of player `i` at the price profile `x` (price indices).
    pub fn utility(&self, i: usize, x: &[usize]) -> Result<f64> {
        self.check_player(i)?;
        if x.len() != self.n() {
            return Err(Error::input(format!(
                "profile has {} prices, game has {} players",
                x.len(),
                self.n()
            )));
        }
        for &a in x {
            self.grid.check_index(a)?;
        }
        Ok(self.utility_unchecked(i, x))
    }

    #[inline]
    pub(crate) fn utility_unchecked(&self, i: usize, x: &[usize]) -> f64 {
        let own = x[i];
        let mut ties = 0usize;
        for &other in x {
            if other < own {
                return 0.0;
            }
            if other == own {
                ties += 1;
            }
        }
        self.margins[i][own] / ties as f64
    }

    /// `u_i(., j)` for a duopoly: player `i`'s payoff at every own price
    /// against a single opponent posting index `opp`.
    pub fn duopoly_utility_vector(&self, i: usize, opp: usize) -> Vec<f64> {
        let m = &self.margins[i];
        (0..self.k())
            .map(|a| match a.cmp(&opp) {
                std::cmp::Ordering::Less => m[a],
                std::cmp::Ordering::Equal => m[a] * 0.5,
                std::cmp::Ordering::Greater => 0.0,
            })
            .collect()
    }

    /// Best monopoly price and value for player `i`; ties go to the lowest price.
    pub fn monopoly_optimum(&self, i: usize) -> Result<(usize, f64)> {
        self.check_player(i)?;
        let m = &self.margins[i];
        let mut best = 0;
        for a in 1..m.len() {
            if m[a] > m[best] + TIE_TOL * m[best].abs().max(1.0) {
                best = a;
            }
        }
        Ok((best, m[best]))
    }

    pub fn monopoly_value(&self, i: usize) -> f64 {
        self.margins[i].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Margins within this relative distance count as tied when picking an argmax.
pub(crate) const TIE_TOL: f64 = 1e-12;

/// Lowest price in a profile.
pub fn transaction_price(x: &[usize]) -> Option<usize> {
    x.iter().copied().min()
}
