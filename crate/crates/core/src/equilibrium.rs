//! Joint distributions over price profiles and the Φ-equilibrium verifier.
//!
//! Every deviation value is computed from a compressed view of the opponents:
//! against opponents whose lowest price is `m`, attained by `t` of them, a
//! player posting `a` earns `margin(a)` if `a < m`, `margin(a) / (t + 1)` if
//! `a == m`, and nothing otherwise. Grouping the support by the player's own
//! (recommended) price and accumulating `(m, t)` weights gives the value of
//! every alternative price in `O(k)` per recommendation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::game::Game;

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default absolute tolerance on deviation gains.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Storage layout of a [`JointDist`].
#[derive(Debug, Clone, PartialEq)]
pub enum Repr {
    /// Duopoly `k x k` matrix, row = player 1's price index.
    Dense2(Vec<f64>),
    /// All players post the same price; one weight per grid index.
    Diagonal(Vec<f64>),
    /// Explicit support: price-index tuples to weights.
    Sparse(BTreeMap<Vec<usize>, f64>),
}

impl Repr {
    pub fn name(&self) -> &'static str {
        match self {
            Repr::Dense2(_) => "dense2",
            Repr::Diagonal(_) => "diagonal",
            Repr::Sparse(_) => "sparse",
        }
    }
}

/// A probability distribution over price profiles of an `n`-player game on a `k`-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    k: usize,
    n: usize,
    repr: Repr,
}

fn check_weights<'a>(weights: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut total = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::input(format!("invalid weight {w}")));
        }
        total += w;
    }
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::input(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

impl JointDist {
    pub fn dense2(k: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != k * k {
            return Err(Error::input(format!("dense2 needs {} weights, got {}", k * k, weights.len())));
        }
        check_weights(weights.iter())?;
        Ok(Self { k, n: 2, repr: Repr::Dense2(weights) })
    }

    pub fn diagonal(k: usize, n: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != k {
            return Err(Error::input(format!("diagonal needs {k} weights, got {}", weights.len())));
        }
        if n < 2 {
            return Err(Error::input("a joint distribution needs at least 2 players"));
        }
        check_weights(weights.iter())?;
        Ok(Self { k, n, repr: Repr::Diagonal(weights) })
    }

    pub fn sparse(k: usize, n: usize, entries: BTreeMap<Vec<usize>, f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::input("a joint distribution needs at least 2 players"));
        }
        for x in entries.keys() {
            if x.len() != n {
                return Err(Error::input(format!("tuple {x:?} does not have {n} entries")));
            }
            if let Some(&a) = x.iter().find(|&&a| a >= k) {
                return Err(Error::input(format!("price index {a} is off the grid (k = {k})")));
            }
        }
        check_weights(entries.values())?;
        Ok(Self { k, n, repr: Repr::Sparse(entries) })
    }

    /// Point mass on one profile; duopolies use the dense layout.
    pub fn point_mass(k: usize, x: &[usize]) -> Result<Self> {
        if let Some(&a) = x.iter().find(|&&a| a >= k) {
            return Err(Error::input(format!("price index {a} is off the grid (k = {k})")));
        }
        if x.len() == 2 {
            let mut w = vec![0.0; k * k];
            w[x[0] * k + x[1]] = 1.0;
            Self::dense2(k, w)
        } else if x.iter().all(|&a| a == x[0]) {
            let mut w = vec![0.0; k];
            w[x[0]] = 1.0;
            Self::diagonal(k, x.len(), w)
        } else {
            Self::sparse(k, x.len(), BTreeMap::from([(x.to_vec(), 1.0)]))
        }
    }

    /// Uniform distribution over the listed profiles (repeats add weight).
    pub fn uniform_over(k: usize, profiles: &[Vec<usize>]) -> Result<Self> {
        let n = profiles.first().map(Vec::len).ok_or_else(|| Error::input("empty support"))?;
        let w = 1.0 / profiles.len() as f64;
        let mut entries = BTreeMap::new();
        for x in profiles {
            *entries.entry(x.clone()).or_insert(0.0) += w;
        }
        let sparse = Self::sparse(k, n, entries)?;
        if n == 2 {
            Ok(sparse.to_dense2())
        } else {
            Ok(sparse)
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    /// Visit every profile with positive weight.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        match &self.repr {
            Repr::Dense2(w) => {
                let mut x = [0usize; 2];
                for (idx, &wt) in w.iter().enumerate() {
                    if wt > 0.0 {
                        x[0] = idx / self.k;
                        x[1] = idx % self.k;
                        f(&x, wt);
                    }
                }
            }
            Repr::Diagonal(w) => {
                let mut x = vec![0usize; self.n];
                for (a, &wt) in w.iter().enumerate() {
                    if wt > 0.0 {
                        x.fill(a);
                        f(&x, wt);
                    }
                }
            }
            Repr::Sparse(entries) => {
                for (x, &wt) in entries {
                    if wt > 0.0 {
                        f(x, wt);
                    }
                }
            }
        }
    }

    /// Support as a sorted map (lexicographic on price indices).
    pub fn support(&self) -> BTreeMap<Vec<usize>, f64> {
        let mut out = BTreeMap::new();
        self.for_each(|x, w| {
            out.insert(x.to_vec(), w);
        });
        out
    }

    /// Weight of one profile.
    pub fn weight(&self, x: &[usize]) -> f64 {
        if x.len() != self.n || x.iter().any(|&a| a >= self.k) {
            return 0.0;
        }
        match &self.repr {
            Repr::Dense2(w) => w[x[0] * self.k + x[1]],
            Repr::Diagonal(w) => {
                if x.iter().all(|&a| a == x[0]) {
                    w[x[0]]
                } else {
                    0.0
                }
            }
            Repr::Sparse(entries) => entries.get(x).copied().unwrap_or(0.0),
        }
    }

    /// Convert a duopoly distribution to the dense layout.
    pub fn to_dense2(&self) -> Self {
        assert_eq!(self.n, 2, "dense layout is only defined for duopolies");
        if let Repr::Dense2(_) = self.repr {
            return self.clone();
        }
        let mut w = vec![0.0; self.k * self.k];
        self.for_each(|x, wt| w[x[0] * self.k + x[1]] += wt);
        Self { k: self.k, n: 2, repr: Repr::Dense2(w) }
    }

    /// Marginal distribution of player `i`'s price.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        self.for_each(|x, w| m[x[i]] += w);
        m
    }

    /// Distribution of the transaction (lowest) price.
    pub fn transaction_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        self.for_each(|x, w| m[*x.iter().min().unwrap()] += w);
        m
    }

    pub fn is_diagonal(&self) -> bool {
        let mut diag = true;
        self.for_each(|x, _| diag &= x.iter().all(|&a| a == x[0]));
        diag
    }

    /// L1 distance between two distributions on the same grid.
    pub fn l1_distance(&self, other: &JointDist) -> f64 {
        let a = self.support();
        let b = other.support();
        let mut d = 0.0;
        for (x, wa) in &a {
            d += (wa - b.get(x).copied().unwrap_or(0.0)).abs();
        }
        for (x, wb) in &b {
            if !a.contains_key(x) {
                d += wb;
            }
        }
        d
    }

    fn check_game(&self, game: &Game) -> Result<()> {
        if self.k != game.k() || self.n != game.n() {
            return Err(Error::input(format!(
                "distribution is for k = {}, n = {} but the game has k = {}, n = {}",
                self.k,
                self.n,
                game.k(),
                game.n()
            )));
        }
        Ok(())
    }

    /// JSON form: `{"k", "n", "repr", "entries": [[i_1, ..., i_n, w], ...]}` with
    /// 1-based grid levels (`price = level / k`). Diagonal entries carry one level.
    pub fn to_json(&self) -> Value {
        let mut entries = Vec::new();
        match &self.repr {
            Repr::Diagonal(w) => {
                for (a, &wt) in w.iter().enumerate() {
                    if wt > 0.0 {
                        entries.push(json!([a + 1, wt]));
                    }
                }
            }
            _ => self.for_each(|x, wt| {
                let mut row: Vec<Value> = x.iter().map(|&a| json!(a + 1)).collect();
                row.push(json!(wt));
                entries.push(Value::Array(row));
            }),
        }
        json!({ "k": self.k, "n": self.n, "repr": self.repr.name(), "entries": entries })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |name: &str| v.get(name).ok_or_else(|| Error::input(format!("missing field '{name}'")));
        let as_usize = |val: &Value, what: &str| {
            val.as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| Error::input(format!("'{what}' must be a non-negative integer")))
        };
        let k = as_usize(field("k")?, "k")?;
        let n = as_usize(field("n")?, "n")?;
        let repr = field("repr")?.as_str().ok_or_else(|| Error::input("'repr' must be a string"))?;
        let rows = field("entries")?.as_array().ok_or_else(|| Error::input("'entries' must be an array"))?;
        let width = if repr == "diagonal" { 2 } else { n + 1 };
        let mut parsed = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row.as_array().ok_or_else(|| Error::input("each entry must be an array"))?;
            if row.len() != width {
                return Err(Error::input(format!("entry {row:?} should have {width} elements")));
            }
            let mut idx = Vec::with_capacity(width - 1);
            for level in &row[..width - 1] {
                let level = as_usize(level, "price level")?;
                if level == 0 || level > k {
                    return Err(Error::input(format!("price level {level} is off the grid (k = {k})")));
                }
                idx.push(level - 1);
            }
            let w = row[width - 1].as_f64().ok_or_else(|| Error::input("weight must be a number"))?;
            parsed.push((idx, w));
        }
        match repr {
            "dense2" => {
                if n != 2 {
                    return Err(Error::input("dense2 requires n = 2"));
                }
                let mut w = vec![0.0; k * k];
                for (x, wt) in parsed {
                    w[x[0] * k + x[1]] += wt;
                }
                Self::dense2(k, w)
            }
            "diagonal" => {
                let mut w = vec![0.0; k];
                for (x, wt) in parsed {
                    w[x[0]] += wt;
                }
                Self::diagonal(k, n, w)
            }
            "sparse" => {
                let mut entries = BTreeMap::new();
                for (x, wt) in parsed {
                    *entries.entry(x).or_insert(0.0) += wt;
                }
                Self::sparse(k, n, entries)
            }
            other => Err(Error::input(format!("unknown repr '{other}'"))),
        }
    }
}

/// `E_{x ~ dist}[u_i(x)]`.
pub fn expected_utility(game: &Game, dist: &JointDist, i: usize) -> Result<f64> {
    dist.check_game(game)?;
    if i >= game.n() {
        return Err(Error::input(format!("player {i} does not exist")));
    }
    let mut total = 0.0;
    dist.for_each(|x, w| total += w * game.utility_unchecked(i, x));
    Ok(total)
}

/// Sum of all players' expected utilities.
pub fn total_expected_utility(game: &Game, dist: &JointDist) -> Result<f64> {
    (0..game.n()).map(|i| expected_utility(game, dist, i)).sum()
}

/// Opponent summary accumulated per recommendation; see the module docs.
struct Profile {
    strict: Vec<f64>,
    tie: Vec<f64>,
    touched: Vec<usize>,
}

impl Profile {
    fn new(k: usize) -> Self {
        Self { strict: vec![0.0; k], tie: vec![0.0; k], touched: Vec::new() }
    }

    #[inline]
    fn add(&mut self, opp_min: usize, opp_ties: usize, w: f64) {
        if self.strict[opp_min] == 0.0 && self.tie[opp_min] == 0.0 {
            self.touched.push(opp_min);
        }
        self.strict[opp_min] += w;
        self.tie[opp_min] += w / (opp_ties + 1) as f64;
    }

    /// Unnormalized value of every own price: `sum_x w(x) u_i(a, x_{-i})`.
    fn values_into(&self, margins: &[f64], out: &mut [f64]) {
        let mut above = 0.0;
        for a in (0..margins.len()).rev() {
            out[a] = margins[a] * (above + self.tie[a]);
            above += self.strict[a];
        }
    }

    fn clear(&mut self) {
        for &m in &self.touched {
            self.strict[m] = 0.0;
            self.tie[m] = 0.0;
        }
        self.touched.clear();
    }
}

#[inline]
fn opp_summary(x: &[usize], i: usize) -> (usize, usize) {
    let mut m = usize::MAX;
    let mut t = 0;
    for (j, &a) in x.iter().enumerate() {
        if j == i {
            continue;
        }
        if a < m {
            m = a;
            t = 1;
        } else if a == m {
            t += 1;
        }
    }
    (m, t)
}

/// Calls `f(rec, mass, values)` for each recommended price of player `i` with
/// positive probability, where `values[a]` is the unnormalized expected
/// payoff of switching to `a` on that recommendation.
fn for_each_recommendation(game: &Game, dist: &JointDist, i: usize, mut f: impl FnMut(usize, f64, &[f64])) {
    let k = dist.k;
    let margins = game.margins(i);
    let mut profile = Profile::new(k);
    let mut values = vec![0.0; k];
    let mut emit = |rec: usize, mass: f64, profile: &mut Profile| {
        if mass > 0.0 {
            profile.values_into(margins, &mut values);
            f(rec, mass, &values);
        }
        profile.clear();
    };
    match &dist.repr {
        Repr::Dense2(w) => {
            for rec in 0..k {
                let mut mass = 0.0;
                for opp in 0..k {
                    let wt = if i == 0 { w[rec * k + opp] } else { w[opp * k + rec] };
                    if wt > 0.0 {
                        profile.add(opp, 1, wt);
                        mass += wt;
                    }
                }
                emit(rec, mass, &mut profile);
            }
        }
        Repr::Diagonal(w) => {
            for (rec, &wt) in w.iter().enumerate() {
                if wt > 0.0 {
                    profile.add(rec, dist.n - 1, wt);
                    emit(rec, wt, &mut profile);
                }
            }
        }
        Repr::Sparse(entries) => {
            let mut grouped: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
            for (x, &wt) in entries {
                if wt > 0.0 {
                    let (m, t) = opp_summary(x, i);
                    grouped.entry(x[i]).or_default().push((m, t, wt));
                }
            }
            for (rec, list) in grouped {
                let mut mass = 0.0;
                for (m, t, wt) in list {
                    profile.add(m, t, wt);
                    mass += wt;
                }
                emit(rec, mass, &mut profile);
            }
        }
    }
}

/// `E[u_i(p, x_{-i})] - E[u_i(x)]` for a constant deviation to price index `p`.
pub fn constant_deviation_gain(game: &Game, dist: &JointDist, i: usize, p: usize) -> Result<f64> {
    dist.check_game(game)?;
    game.grid().check_index(p)?;
    let mut dev = 0.0;
    let mut own = 0.0;
    for_each_recommendation(game, dist, i, |rec, _, values| {
        dev += values[p];
        own += values[rec];
    });
    Ok(dev - own)
}

/// Best response to the opponents' conditional distribution given `x_i = p`.
///
/// Returns the best alternative price (lowest on ties) and its conditional
/// gain over obeying the recommendation.
pub fn best_conditional_deviation(game: &Game, dist: &JointDist, i: usize, p: usize) -> Result<(usize, f64)> {
    dist.check_game(game)?;
    game.grid().check_index(p)?;
    let mut found = None;
    for_each_recommendation(game, dist, i, |rec, mass, values| {
        if rec == p {
            let best = argmax_low(values);
            found = Some((best, (values[best] - values[rec]) / mass));
        }
    });
    found.ok_or_else(|| Error::domain(format!("price index {p} has zero marginal probability for player {i}")))
}

fn argmax_low(values: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = a;
        }
    }
    best
}

/// A player's deviation set Φ_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviationClass {
    /// Constant maps only (coarse correlated equilibrium).
    ConstantOnly,
    /// Every map `P -> P` (correlated equilibrium).
    AllMaps,
    /// Explicit maps, each a full table of price indices.
    Explicit { maps: Vec<Vec<usize>> },
}

impl DeviationClass {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "const" | "constant" | "constant_only" | "cce" => Ok(Self::ConstantOnly),
            "all" | "all_maps" | "ce" => Ok(Self::AllMaps),
            other => Err(Error::input(format!("unknown deviation class '{other}'"))),
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if let Self::Explicit { maps } = self {
            for map in maps {
                if map.len() != k || map.iter().any(|&a| a >= k) {
                    return Err(Error::input("explicit deviation maps must be total functions on the grid"));
                }
            }
        }
        Ok(())
    }
}

/// Which deviation attains a player's worst-case gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Constant { price: usize },
    /// Per-recommendation best responses `(recommended, replacement)`; unlisted
    /// recommendations are kept.
    Swap { responses: Vec<(usize, usize)> },
    Explicit { map_index: usize },
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerReport {
    pub player: usize,
    pub expected_utility: f64,
    pub worst_gain: f64,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tolerance: f64,
    pub players: Vec<PlayerReport>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn max_gain(&self) -> f64 {
        self.players.iter().map(|p| p.worst_gain).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn verify_player(game: &Game, dist: &JointDist, i: usize, class: &DeviationClass) -> PlayerReport {
    let k = dist.k;
    let mut own = 0.0;
    let (worst_gain, witness) = match class {
        DeviationClass::ConstantOnly => {
            let mut dev = vec![0.0; k];
            for_each_recommendation(game, dist, i, |rec, _, values| {
                own += values[rec];
                for (d, v) in dev.iter_mut().zip(values) {
                    *d += v;
                }
            });
            let best = argmax_low(&dev);
            (dev[best] - own, Witness::Constant { price: best })
        }
        DeviationClass::AllMaps => {
            let mut total = 0.0;
            let mut responses = Vec::new();
            for_each_recommendation(game, dist, i, |rec, _, values| {
                own += values[rec];
                let best = argmax_low(values);
                let gain = values[best] - values[rec];
                if gain > 0.0 {
                    total += gain;
                    responses.push((rec, best));
                }
            });
            (total, Witness::Swap { responses })
        }
        DeviationClass::Explicit { maps } => {
            let mut gains = vec![0.0; maps.len()];
            for_each_recommendation(game, dist, i, |rec, _, values| {
                own += values[rec];
                for (g, map) in gains.iter_mut().zip(maps) {
                    *g += values[map[rec]] - values[rec];
                }
            });
            match gains.iter().enumerate().fold(None, |acc: Option<(usize, f64)>, (idx, &g)| match acc {
                Some((_, b)) if b >= g => acc,
                _ => Some((idx, g)),
            }) {
                Some((idx, g)) => (g, Witness::Explicit { map_index: idx }),
                None => (0.0, Witness::Identity),
            }
        }
    };
    PlayerReport { player: i, expected_utility: own, worst_gain, witness }
}

/// Check the Φ-equilibrium inequalities for every player.
///
/// For `AllMaps` the reported gain is `sum_p max(0, best conditional gain at p)`
/// weighted by `Pr[x_i = p]`, which is the largest gain of any swap map.
pub fn verify(game: &Game, dist: &JointDist, classes: &[DeviationClass], tol: f64) -> Result<VerificationReport> {
    if !(tol >= 0.0) {
        return Err(Error::input(format!("tolerance must be non-negative, got {tol}")));
    }
    dist.check_game(game)?;
    if classes.len() != game.n() {
        return Err(Error::input(format!(
            "{} deviation classes given for {} players",
            classes.len(),
            game.n()
        )));
    }
    for class in classes {
        class.validate(game.k())?;
    }
    let players: Vec<PlayerReport> = (0..game.n()).map(|i| verify_player(game, dist, i, &classes[i])).collect();
    let pass = players.iter().all(|p| p.worst_gain <= tol);
    Ok(VerificationReport { tolerance: tol, players, pass })
}

/// Coarse correlated equilibrium check.
pub fn verify_cce(game: &Game, dist: &JointDist, tol: f64) -> Result<VerificationReport> {
    verify(game, dist, &vec![DeviationClass::ConstantOnly; game.n()], tol)
}

/// Correlated equilibrium check.
pub fn verify_ce(game: &Game, dist: &JointDist, tol: f64) -> Result<VerificationReport> {
    verify(game, dist, &vec![DeviationClass::AllMaps; game.n()], tol)
}

/// Collapse a distribution onto the diagonal: `(p, ..., p)` receives
/// `Pr[min(x) = p]`. Requires symmetric costs.
pub fn symmetrize(game: &Game, dist: &JointDist) -> Result<JointDist> {
    dist.check_game(game)?;
    if game.symmetric_cost_level().is_none() {
        return Err(Error::domain("symmetrization requires all players to share one marginal cost"));
    }
    JointDist::diagonal(dist.k, dist.n, dist.transaction_marginal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Demand;

    fn duo(k: usize, c: f64) -> Game {
        Game::new(k, &[c, c], Demand::Constant).unwrap()
    }

    #[test]
    fn expected_utility_examples() {
        let g = duo(2, 0.0);
        let d = JointDist::point_mass(2, &[0, 0]).unwrap();
        assert_eq!(expected_utility(&g, &d, 0).unwrap(), 0.25);
        assert_eq!(expected_utility(&g, &d, 1).unwrap(), 0.25);
        let d = JointDist::point_mass(2, &[0, 1]).unwrap();
        assert_eq!(expected_utility(&g, &d, 0).unwrap(), 0.5);
        assert_eq!(expected_utility(&g, &d, 1).unwrap(), 0.0);
        let d = JointDist::uniform_over(2, &[vec![0, 0], vec![1, 1]]).unwrap();
        assert!((expected_utility(&g, &d, 0).unwrap() - 0.375).abs() < 1e-15);
        let g3 = Game::new(2, &[0.0; 3], Demand::Constant).unwrap();
        assert!(expected_utility(&g3, &d, 0).is_err());
    }

    #[test]
    fn constant_deviation_examples() {
        let d = JointDist::point_mass(2, &[1, 1]).unwrap();
        assert_eq!(constant_deviation_gain(&duo(2, 0.0), &d, 0, 0).unwrap(), 0.0);
        let d4 = JointDist::point_mass(4, &[3, 3]).unwrap();
        assert_eq!(constant_deviation_gain(&duo(4, 0.0), &d4, 0, 2).unwrap(), 0.25);
        // Deviating to the cost earns nothing.
        let g = duo(4, 0.5);
        let u = expected_utility(&g, &d4, 0).unwrap();
        assert_eq!(constant_deviation_gain(&g, &d4, 0, 1).unwrap(), -u);
    }

    #[test]
    fn best_conditional_examples() {
        let g = duo(4, 0.0);
        let d = JointDist::point_mass(4, &[3, 3]).unwrap();
        assert_eq!(best_conditional_deviation(&g, &d, 0, 3).unwrap(), (2, 0.25));
        let d = JointDist::point_mass(4, &[0, 0]).unwrap();
        assert_eq!(best_conditional_deviation(&g, &d, 0, 0).unwrap().1, 0.0);
        let d = JointDist::point_mass(4, &[3, 1]).unwrap();
        assert_eq!(best_conditional_deviation(&g, &d, 0, 3).unwrap(), (0, 0.25));
        assert!(matches!(best_conditional_deviation(&g, &d, 0, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn verify_examples() {
        let g = duo(4, 0.0);
        let d = JointDist::point_mass(4, &[3, 3]).unwrap();
        let r = verify_cce(&g, &d, DEFAULT_TOL).unwrap();
        assert!(!r.pass);
        assert_eq!(r.max_gain(), 0.25);
        assert_eq!(r.players[0].witness, Witness::Constant { price: 2 });

        for (k, c) in [(4, 0.0), (10, 0.5), (20, 0.25)] {
            let g = duo(k, c);
            let level = g.cost_level(0);
            let d = JointDist::point_mass(k, &[level + 1, level + 1]).unwrap();
            let r = verify_ce(&g, &d, 0.0).unwrap();
            assert!(r.pass, "k={k} c={c}: {r:?}");
            for p in &r.players {
                assert_eq!(p.expected_utility, 1.0 / k as f64);
            }
        }
        assert!(verify_cce(&g, &d, -1.0).is_err());
        assert!(verify(&g, &d, &[DeviationClass::AllMaps], 0.0).is_err());
    }

    #[test]
    fn explicit_maps() {
        let g = duo(4, 0.0);
        let d = JointDist::point_mass(4, &[3, 3]).unwrap();
        let identity = vec![0, 1, 2, 3];
        let undercut = vec![0, 1, 2, 2];
        let classes = vec![
            DeviationClass::Explicit { maps: vec![identity.clone(), undercut] },
            DeviationClass::Explicit { maps: vec![identity] },
        ];
        let r = verify(&g, &d, &classes, 0.0).unwrap();
        assert_eq!(r.players[0].worst_gain, 0.25);
        assert_eq!(r.players[0].witness, Witness::Explicit { map_index: 1 });
        assert_eq!(r.players[1].worst_gain, 0.0);
        let bad = vec![DeviationClass::Explicit { maps: vec![vec![0, 1]] }, DeviationClass::AllMaps];
        assert!(verify(&g, &d, &bad, 0.0).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let g = duo(2, 0.0);
        let d = JointDist::point_mass(2, &[0, 1]).unwrap();
        let s = symmetrize(&g, &d).unwrap();
        assert_eq!(s.repr(), &Repr::Diagonal(vec![1.0, 0.0]));
        let diag = JointDist::diagonal(2, 2, vec![0.3, 0.7]).unwrap();
        assert_eq!(symmetrize(&g, &diag).unwrap(), diag);
        let d = JointDist::uniform_over(2, &[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(symmetrize(&g, &d).unwrap().repr(), &Repr::Diagonal(vec![1.0, 0.0]));
        let asym = Game::new(2, &[0.0, 0.5], Demand::Constant).unwrap();
        assert!(matches!(symmetrize(&asym, &d), Err(Error::Domain(_))));
    }

    #[test]
    fn representations_agree() {
        let g = Game::new(3, &[0.0, 0.0], Demand::Linear).unwrap();
        let mut entries = BTreeMap::new();
        entries.insert(vec![0, 2], 0.2);
        entries.insert(vec![1, 1], 0.5);
        entries.insert(vec![2, 0], 0.3);
        let sparse = JointDist::sparse(3, 2, entries).unwrap();
        let dense = sparse.to_dense2();
        for class in [DeviationClass::ConstantOnly, DeviationClass::AllMaps] {
            let a = verify(&g, &sparse, &[class.clone(), class.clone()], 0.0).unwrap();
            let b = verify(&g, &dense, &[class.clone(), class], 0.0).unwrap();
            for (pa, pb) in a.players.iter().zip(&b.players) {
                assert!((pa.worst_gain - pb.worst_gain).abs() < 1e-15);
                assert!((pa.expected_utility - pb.expected_utility).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let d = JointDist::uniform_over(4, &[vec![0, 1], vec![3, 3]]).unwrap();
        let back = JointDist::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        let diag = JointDist::diagonal(3, 5, vec![0.25, 0.0, 0.75]).unwrap();
        let v = diag.to_json();
        assert_eq!(v["entries"], json!([[1, 0.25], [3, 0.75]]));
        assert_eq!(JointDist::from_json(&v).unwrap(), diag);
        let bad = json!({"k": 2, "n": 2, "repr": "dense2", "entries": [[3, 1, 1.0]]});
        assert!(JointDist::from_json(&bad).is_err());
        let bad = json!({"k": 2, "n": 2, "repr": "dense2", "entries": [[1, 1, 0.5]]});
        assert!(JointDist::from_json(&bad).is_err());
    }
}
