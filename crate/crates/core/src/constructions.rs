//! Closed-form equilibrium distributions and utility bounds.
//!
//! * [`cce_symmetric`]: diagonal CCE whose tail probabilities are `B / S_i`,
//!   guaranteeing each duopolist a `1/(4e^2)` share of the monopoly value.
//! * [`phi_ce_symmetric`], [`phi_ce_asymmetric_v1`], [`phi_ce_asymmetric_v2`]:
//!   duopoly distributions where player 1 faces every swap map and player 2
//!   only constant deviations, built on a harmonic-tail marginal.
//! * [`cce_asymmetric`]: CCE for `c1 < c2` mixing a low undercut pair with a
//!   diagonal tail built from player 2's margins.
//! * [`thm5_bound`], [`ce_bound`]: upper bounds on total CCE utility and per
//!   player CE utility.

use std::f64::consts::E;

use serde::Serialize;

use crate::equilibrium::{DeviationClass, JointDist};
use crate::error::{Error, Result};
use crate::game::{Demand, Game, TIE_TOL};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `1 / (2 e^2)`, the tail scale of the symmetric CCE.
pub fn default_lambda() -> f64 {
    1.0 / (2.0 * E * E)
}

/// Default ratio `e^10` of the harmonic-marginal constructions.
pub fn default_ratio() -> f64 {
    10f64.exp()
}

/// Largest direct-summation argument for [`harmonic`].
const HARMONIC_DIRECT_MAX: usize = 1 << 22;

/// Harmonic number `H_n`; `H_0 = 0`.
///
/// Summed directly (smallest terms first) up to about four million, and by
/// the asymptotic expansion beyond that.
pub fn harmonic(n: usize) -> f64 {
    if n <= HARMONIC_DIRECT_MAX {
        (1..=n).rev().map(|i| 1.0 / i as f64).sum()
    } else {
        let x = n as f64;
        let x2 = x * x;
        x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2)
    }
}

/// Which branch of the symmetric CCE was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CceCase {
    /// No price earns a positive margin; point mass at the cost (or the lowest price).
    Degenerate,
    /// `s_{c+1/k} >= B`: everyone posts `c + 1/k`.
    PointMass,
    /// Randomized diagonal with tail probabilities `tau`.
    Tail,
}

/// Derived quantities of the symmetric CCE. Levels are 1-based (`price = level / k`).
#[derive(Debug, Clone, Serialize)]
pub struct SymmetricCceParams {
    pub lambda: f64,
    /// `s_i` for levels `1..=k` (stored at `i - 1`).
    pub margins: Vec<f64>,
    /// Prefix maxima `S_i`.
    pub prefix_max: Vec<f64>,
    pub s_max: f64,
    /// Smallest maximizing level.
    pub m: usize,
    pub b: f64,
    pub case: CceCase,
    /// First level with `S_i >= B` (tail case only).
    pub i0: Option<usize>,
    /// `tau_i = Pr[x >= i/k]` for levels `1..=k`.
    pub tau: Vec<f64>,
}

impl SymmetricCceParams {
    /// Point probabilities per grid index.
    pub fn point_probabilities(&self) -> Vec<f64> {
        let k = self.tau.len();
        (0..k).map(|a| self.tau[a] - if a + 1 < k { self.tau[a + 1] } else { 0.0 }).collect()
    }
}

/// Tail construction over one player's margins (indexed by price index)
/// with cost level `cost_level`.
fn symmetric_tail(margins: &[f64], cost_level: usize, lambda: f64) -> SymmetricCceParams {
    let k = margins.len();
    let mut prefix_max = Vec::with_capacity(k);
    let mut running = f64::NEG_INFINITY;
    for &s in margins {
        running = running.max(s);
        prefix_max.push(running);
    }
    let mut m_idx = 0;
    for a in 1..k {
        if margins[a] > margins[m_idx] + TIE_TOL * margins[m_idx].abs().max(1.0) {
            m_idx = a;
        }
    }
    let s_max = margins[m_idx];
    let b = lambda * s_max;
    let point = |idx: usize| {
        let mut tau = vec![0.0; k];
        tau[..=idx].fill(1.0);
        tau
    };
    let (case, i0, tau) = if s_max <= 0.0 {
        (CceCase::Degenerate, None, point(cost_level.max(1) - 1))
    } else if margins[cost_level] >= b {
        (CceCase::PointMass, None, point(cost_level))
    } else {
        let i0_idx = prefix_max.iter().position(|&s| s >= b).expect("S_k = s_max >= B");
        let tau = (0..k)
            .map(|a| {
                if a < i0_idx {
                    1.0
                } else if a <= m_idx {
                    b / prefix_max[a]
                } else {
                    0.0
                }
            })
            .collect();
        (CceCase::Tail, Some(i0_idx + 1), tau)
    };
    SymmetricCceParams {
        lambda,
        margins: margins.to_vec(),
        prefix_max,
        s_max,
        m: m_idx + 1,
        b,
        case,
        i0,
        tau,
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::input(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    Ok(())
}

/// Symmetric (diagonal) CCE for any number of players sharing one cost.
pub fn cce_symmetric(game: &Game, lambda: Option<f64>) -> Result<(JointDist, SymmetricCceParams)> {
    let level = game
        .symmetric_cost_level()
        .ok_or_else(|| Error::domain("cce_symmetric requires symmetric costs"))?;
    let lambda = lambda.unwrap_or_else(default_lambda);
    check_lambda(lambda)?;
    let params = symmetric_tail(game.margins(0), level, lambda);
    let dist = JointDist::diagonal(game.k(), game.n(), params.point_probabilities())?;
    Ok((dist, params))
}

/// Harmonic-tail marginal shared by the Φ-equilibrium constructions.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicMarginalParams {
    /// Number of price steps above the cost (`k - ck`, or `k` for the asymmetric variants).
    pub k0: usize,
    pub ratio: f64,
    /// `M = floor((k0 - 1) / ratio)`, at least 1.
    pub m: usize,
    /// `p_j` for relative levels `j = 1..=k0` (stored at `j - 1`).
    pub probs: Vec<f64>,
    /// Tail sums `S_i = sum_{j >= i} p_j`.
    pub tail: Vec<f64>,
}

impl HarmonicMarginalParams {
    pub fn new(k0: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(Error::input(format!("ratio must be a finite number > 1, got {ratio}")));
        }
        if k0 < 3 {
            return Err(Error::domain(format!(
                "need at least 3 price steps above cost for the harmonic marginal, got {k0}"
            )));
        }
        let top = k0 - 1;
        let mut m = (top as f64 / ratio).floor() as usize;
        // Settle floating rounding so that m * ratio <= top < (m + 1) * ratio.
        while m > 0 && m as f64 * ratio > top as f64 {
            m -= 1;
        }
        while ((m + 1) as f64) * ratio <= top as f64 {
            m += 1;
        }
        let m = m.max(1);
        let mut probs = vec![0.0; k0];
        probs[m - 1] = 1.0 / (m + 1) as f64;
        for j in m + 1..top {
            probs[j - 1] = m as f64 / (j as f64 * (j + 1) as f64);
        }
        probs[top - 1] = m as f64 / top as f64;
        let mut tail = vec![0.0; k0];
        let mut acc = 0.0;
        for j in (0..k0).rev() {
            acc += probs[j];
            tail[j] = acc;
        }
        Ok(Self { k0, ratio, m, probs, tail })
    }

    /// `1 + H_{k0-1} - H_M`: ratio of the mean markup to player 2's best deviation.
    pub fn harmonic_slack(&self) -> f64 {
        1.0 + harmonic(self.k0 - 1) - harmonic(self.m)
    }

    /// Sufficient analytic condition for player 2's constant deviations.
    /// Direct verification is authoritative; this is informational.
    pub fn analytic_condition_holds(&self) -> bool {
        self.harmonic_slack() >= 8.0
    }

    /// Closed form `(M / k)(1 + H_{k0-1} - H_M)` of player 1's mean markup.
    pub fn expected_markup(&self, k: usize) -> f64 {
        self.m as f64 / k as f64 * self.harmonic_slack()
    }
}

/// Given player 1 at relative level `i` above `base`, player 2 posts
/// `base + i + 1` or `base + floor(i / 2)` with equal probability.
fn harmonic_joint(k: usize, base: usize, params: &HarmonicMarginalParams) -> Result<JointDist> {
    let mut w = vec![0.0; k * k];
    for (rel_idx, &p) in params.probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let i = rel_idx + 1;
        let x1 = base + i - 1;
        let hi = base + i;
        let lo_level = base + i / 2;
        if lo_level == 0 {
            return Err(Error::domain(
                "M = 1 with zero cost sends player 2 to price 0, which is off the grid; use a smaller ratio",
            ));
        }
        w[x1 * k + hi] += p / 2.0;
        w[x1 * k + lo_level - 1] += p / 2.0;
    }
    JointDist::dense2(k, w)
}

fn require_constant_demand(game: &Game) -> Result<()> {
    let constant = matches!(game.demand(), Demand::Constant) || game.demand_values().iter().all(|&f| f == 1.0);
    if !constant {
        return Err(Error::domain("this construction is defined for constant demand f(x) = 1 only"));
    }
    Ok(())
}

/// Deviation classes the harmonic constructions are built against:
/// player 1 all maps, player 2 constant maps.
pub fn swap_vs_external_classes() -> Vec<DeviationClass> {
    vec![DeviationClass::AllMaps, DeviationClass::ConstantOnly]
}

/// Φ-equilibrium for a symmetric-cost duopoly with constant demand.
pub fn phi_ce_symmetric(game: &Game, ratio: Option<f64>) -> Result<(JointDist, HarmonicMarginalParams)> {
    if game.n() != 2 {
        return Err(Error::domain("phi_ce_symmetric is a duopoly construction"));
    }
    let level = game
        .symmetric_cost_level()
        .ok_or_else(|| Error::domain("phi_ce_symmetric requires symmetric costs"))?;
    require_constant_demand(game)?;
    let params = HarmonicMarginalParams::new(game.k() - level, ratio.unwrap_or_else(default_ratio))?;
    let dist = harmonic_joint(game.k(), level, &params)?;
    Ok((dist, params))
}

fn asymmetric_harmonic(k: usize, ratio: Option<f64>, low_cost_player: usize) -> Result<(Game, JointDist, HarmonicMarginalParams)> {
    let ratio = ratio.unwrap_or_else(default_ratio);
    let params = HarmonicMarginalParams::new(k, ratio)?;
    if ((k - 1) as f64) < ratio {
        return Err(Error::domain(format!("M = floor((k - 1) / ratio) < 1 for k = {k}, ratio = {ratio}")));
    }
    let high = params.m / 36;
    let levels = if low_cost_player == 0 { [0, high] } else { [high, 0] };
    let game = Game::with_cost_levels(k, &levels, Demand::Constant)?;
    let dist = harmonic_joint(k, 0, &params)?;
    Ok((game, dist, params))
}

/// Asymmetric Φ-equilibrium with `c1 = 0`, `c2 = floor(M/36)/k`.
pub fn phi_ce_asymmetric_v1(k: usize, ratio: Option<f64>) -> Result<(Game, JointDist, HarmonicMarginalParams)> {
    asymmetric_harmonic(k, ratio, 0)
}

/// Asymmetric Φ-equilibrium with `c1 = floor(M/36)/k`, `c2 = 0`; the
/// higher-cost player 1 faces every swap map.
pub fn phi_ce_asymmetric_v2(k: usize, ratio: Option<f64>) -> Result<(Game, JointDist, HarmonicMarginalParams)> {
    asymmetric_harmonic(k, ratio, 1)
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymmetricCceParams {
    pub lambda1: f64,
    pub s_max1: f64,
    pub s_max2: f64,
    /// Price index of `x0`.
    pub x0: usize,
    pub lambda0: f64,
    pub p0: f64,
    /// Diagonal part built from player 2's margins.
    pub tail: SymmetricCceParams,
}

/// CCE for a duopoly with `c1 < c2`.
///
/// `lambda1` defaults to `s_max^(2) / s_max^(1)` clamped into (0, 1). Fails with a domain error
/// naming the violated condition when the construction does not apply.
pub fn cce_asymmetric(game: &Game, lambda1: Option<f64>) -> Result<(JointDist, AsymmetricCceParams)> {
    if game.n() != 2 {
        return Err(Error::domain("cce_asymmetric is a duopoly construction"));
    }
    let (j1, j2) = (game.cost_level(0), game.cost_level(1));
    if j1 >= j2 {
        return Err(Error::domain("cce_asymmetric requires c1 < c2"));
    }
    let k = game.k();
    let s_max1 = game.monopoly_value(0).max(0.0);
    let s_max2 = game.monopoly_value(1).max(0.0);
    if s_max1 <= 0.0 {
        return Err(Error::domain("player 1 has no profitable price"));
    }
    // The default is pulled strictly inside (0, 1); an explicit value is taken as given.
    let lambda1 = lambda1.unwrap_or_else(|| (s_max2 / s_max1).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON));
    if !(lambda1 > 0.0 && lambda1 < 1.0) {
        return Err(Error::domain(format!("lambda1 must lie in (0, 1), got {lambda1}")));
    }
    let e2 = E * E;
    // condition 2
    if s_max2 < lambda1 * s_max1 * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "condition 2 violated: s_max2 = {s_max2} < lambda1 * s_max1 = {}",
            lambda1 * s_max1
        )));
    }
    // condition 3
    let m1 = game.margins(0);
    let below_c2 = m1[..j2.saturating_sub(1)].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(below_c2 >= lambda1 / (4.0 * e2) * s_max1) {
        return Err(Error::domain(format!(
            "condition 3 violated: best player-1 margin below c2 is {below_c2}, need {}",
            lambda1 / (4.0 * e2) * s_max1
        )));
    }
    let threshold = lambda1 / (8.0 * e2) * s_max1;
    // x0 is the smallest price with c1 < x0 < c2 - 1/k clearing the threshold.
    let x0 = (j1..j2.saturating_sub(2))
        .find(|&a| m1[a] >= threshold)
        .ok_or_else(|| {
            Error::domain(format!(
                "condition 3 violated: no price strictly between c1 and c2 - 1/k has player-1 margin >= {threshold}"
            ))
        })?;
    let lambda0 = m1[x0] / s_max1;
    // condition 1: the first qualifying price overshoots the threshold by less than one grid step.
    if lambda0 > lambda1 / (4.0 * e2) {
        return Err(Error::domain(format!(
            "condition 1 violated: grid too coarse, (x0 - c1) f(x0) / s_max1 = {lambda0} exceeds lambda1 / (4e^2) = {}",
            lambda1 / (4.0 * e2)
        )));
    }
    let p0 = 1.0 - lambda0;
    let tail = symmetric_tail(game.margins(1), j2, default_lambda());
    let mut w = vec![0.0; k * k];
    w[x0 * k + x0 + 1] = p0;
    for (a, q) in tail.point_probabilities().into_iter().enumerate() {
        w[a * k + a] += (1.0 - p0) * q;
    }
    let dist = JointDist::dense2(k, w)?;
    Ok((dist, AsymmetricCceParams { lambda1, s_max1, s_max2, x0, lambda0, p0, tail }))
}

/// Upper bound on total expected utility in any CCE with symmetric costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBound {
    pub value: f64,
    /// `c = 1`: demand was read at the top grid price instead of `c + 1/k`.
    pub clamped: bool,
}

/// `4 f(c+1/k) / k + n (1 - c) f(c+1/k) e^{1 - n/2}`.
pub fn thm5_bound(game: &Game) -> Result<DecayBound> {
    let level = game
        .symmetric_cost_level()
        .ok_or_else(|| Error::domain("the decay bound requires symmetric costs"))?;
    let k = game.k();
    if k < 5 {
        return Err(Error::domain(format!("the decay bound needs k >= 5, got {k}")));
    }
    let n = game.n() as f64;
    let clamped = level + 1 > k;
    let f = game.demand_at(level.min(k - 1));
    let c = game.cost(0);
    let value = 4.0 * f / k as f64 + n * (1.0 - c) * f * (1.0 - n / 2.0).exp();
    Ok(DecayBound { value, clamped })
}

/// Interval containing every player's expected utility in any CE of a
/// symmetric-cost duopoly: `[0, f(c+1/k)/k]`, or `[0, 0]` when `c = 1`.
pub fn ce_bound(game: &Game) -> Result<(f64, f64)> {
    if game.n() != 2 {
        return Err(Error::domain("the CE bound is stated for duopolies"));
    }
    let level = game
        .symmetric_cost_level()
        .ok_or_else(|| Error::domain("the CE bound requires symmetric costs"))?;
    if level == game.k() {
        return Ok((0.0, 0.0));
    }
    Ok((0.0, game.demand_at(level) / game.k() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{expected_utility, verify, verify_cce};

    #[test]
    fn cce_symmetric_case_one() {
        let g = Game::new(100, &[0.9, 0.9], Demand::Constant).unwrap();
        let (d, p) = cce_symmetric(&g, None).unwrap();
        assert_eq!(p.case, CceCase::PointMass);
        assert!((p.b - 0.1 / (2.0 * E * E)).abs() < 1e-15);
        assert_eq!(d.weight(&[90, 90]), 1.0);
        assert!((expected_utility(&g, &d, 0).unwrap() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn cce_symmetric_case_two_constant() {
        let g = Game::new(100, &[0.0, 0.0], Demand::Constant).unwrap();
        let (d, p) = cce_symmetric(&g, None).unwrap();
        assert_eq!(p.case, CceCase::Tail);
        assert_eq!(p.i0, Some(7));
        assert_eq!(p.m, 100);
        let b = default_lambda();
        for i in 7..=100 {
            assert!((p.tau[i - 1] - 100.0 * b / i as f64).abs() < 1e-12, "tau_{i}");
        }
        assert!(p.tau[..6].iter().all(|&t| t == 1.0));
        assert!(verify_cce(&g, &d, 1e-10).unwrap().pass);
    }

    #[test]
    fn cce_symmetric_linear_support() {
        let g = Game::new(100, &[0.0, 0.0], Demand::Linear).unwrap();
        let (d, p) = cce_symmetric(&g, None).unwrap();
        assert_eq!(p.m, 50);
        let i0 = p.i0.unwrap();
        d.for_each(|x, _| assert!(x[0] + 1 >= i0 - 1 && x[0] + 1 <= 50));
        assert!(verify_cce(&g, &d, 1e-10).unwrap().pass);
    }

    #[test]
    fn cce_symmetric_degenerate_and_errors() {
        let g = Game::new(10, &[1.0, 1.0], Demand::Constant).unwrap();
        let (d, p) = cce_symmetric(&g, None).unwrap();
        assert_eq!(p.case, CceCase::Degenerate);
        assert_eq!(d.weight(&[9, 9]), 1.0);
        let asym = Game::new(10, &[0.0, 0.5], Demand::Constant).unwrap();
        assert!(matches!(cce_symmetric(&asym, None), Err(Error::Domain(_))));
        let sym = Game::new(10, &[0.0, 0.0], Demand::Constant).unwrap();
        assert!(cce_symmetric(&sym, Some(1.5)).is_err());
    }

    #[test]
    fn harmonic_marginal_small_example() {
        let p = HarmonicMarginalParams::new(11, 4.0).unwrap();
        assert_eq!(p.m, 2);
        assert!((p.probs[1] - 1.0 / 3.0).abs() < 1e-15);
        for j in 3..=9 {
            assert!((p.probs[j - 1] - 2.0 / (j * (j + 1)) as f64).abs() < 1e-15);
        }
        assert!((p.probs[9] - 0.2).abs() < 1e-15);
        assert_eq!(p.probs[10], 0.0);
        assert!((p.tail[0] - 1.0).abs() < 1e-12);
        assert!((p.tail[4] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn harmonic_marginal_ratio_floor() {
        // (k0 - 1) / ratio lands exactly on an integer.
        let p = HarmonicMarginalParams::new(201, 100.0).unwrap();
        assert_eq!(p.m, 2);
        let p = HarmonicMarginalParams::new(200, 100.0).unwrap();
        assert_eq!(p.m, 1);
        assert!(HarmonicMarginalParams::new(2, 4.0).is_err());
        assert!(HarmonicMarginalParams::new(20, 1.0).is_err());
    }

    #[test]
    fn phi_ce_symmetric_verifies_small() {
        let g = Game::new(101, &[0.0, 0.0], Demand::Constant).unwrap();
        let (d, params) = phi_ce_symmetric(&g, Some(25.0)).unwrap();
        assert_eq!(params.m, 4);
        let r = verify(&g, &d, &swap_vs_external_classes(), 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
        let lin = Game::new(101, &[0.0, 0.0], Demand::Linear).unwrap();
        assert!(matches!(phi_ce_symmetric(&lin, Some(25.0)), Err(Error::Domain(_))));
        let tight = Game::new(10, &[0.8, 0.8], Demand::Constant).unwrap();
        assert!(matches!(phi_ce_symmetric(&tight, Some(2.0)), Err(Error::Domain(_))));
        // M = 1 at zero cost would need price 0.
        let g = Game::new(20, &[0.0, 0.0], Demand::Constant).unwrap();
        assert!(matches!(phi_ce_symmetric(&g, Some(15.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_asymmetric_costs() {
        let (g, d, p) = phi_ce_asymmetric_v1(3601, Some(100.0)).unwrap();
        assert_eq!(p.m, 36);
        assert_eq!(g.cost_levels(), &[0, 1]);
        let mean: f64 = d.marginal(0).iter().enumerate().map(|(a, w)| w * (a + 1) as f64 / 3601.0).sum();
        assert!((mean - p.expected_markup(3601)).abs() < 1e-12);
        let (g2, _, _) = phi_ce_asymmetric_v2(3601, Some(100.0)).unwrap();
        assert_eq!(g2.cost_levels(), &[1, 0]);
        assert!(phi_ce_asymmetric_v1(50, Some(100.0)).is_err());
    }

    #[test]
    fn cce_asymmetric_example() {
        let g = Game::new(100, &[0.0, 0.5], Demand::Constant).unwrap();
        let (d, p) = cce_asymmetric(&g, Some(0.5)).unwrap();
        assert_eq!(p.x0, 0);
        assert!((p.lambda0 - 0.01).abs() < 1e-15);
        assert!((p.p0 - 0.99).abs() < 1e-15);
        assert!((p.tail.b - 0.5 / (2.0 * E * E)).abs() < 1e-15);
        assert!(verify_cce(&g, &d, 1e-10).unwrap().pass);

        let coarse = Game::new(10, &[0.0, 0.5], Demand::Constant).unwrap();
        match cce_asymmetric(&coarse, Some(0.5)) {
            Err(Error::Domain(msg)) => assert!(msg.contains("condition 1"), "{msg}"),
            other => panic!("expected a condition-1 failure, got {other:?}"),
        }
        let sym = Game::new(100, &[0.5, 0.5], Demand::Constant).unwrap();
        assert!(cce_asymmetric(&sym, None).is_err());
    }

    #[test]
    fn decay_bound_examples() {
        let g = Game::new(100, &[0.0, 0.0], Demand::Constant).unwrap();
        assert!((thm5_bound(&g).unwrap().value - 2.04).abs() < 1e-12);
        let g10 = Game::new(100, &[0.0; 10], Demand::Constant).unwrap();
        let v = thm5_bound(&g10).unwrap().value;
        assert!((v - (0.04 + 10.0 * (-4f64).exp())).abs() < 1e-12);
        assert!((v - 0.2232).abs() < 1e-4);
        let top = Game::new(100, &[1.0, 1.0], Demand::Constant).unwrap();
        let b = thm5_bound(&top).unwrap();
        assert!(b.clamped);
        assert!((b.value - 0.04).abs() < 1e-15);
        let small = Game::new(4, &[0.0, 0.0], Demand::Constant).unwrap();
        assert!(thm5_bound(&small).is_err());
    }

    #[test]
    fn ce_bound_examples() {
        let g = Game::new(10, &[0.0, 0.0], Demand::Constant).unwrap();
        assert_eq!(ce_bound(&g).unwrap(), (0.0, 0.1));
        let g = Game::new(10, &[1.0, 1.0], Demand::Constant).unwrap();
        assert_eq!(ce_bound(&g).unwrap(), (0.0, 0.0));
        let g = Game::new(100, &[0.5, 0.5], Demand::Linear).unwrap();
        let (_, hi) = ce_bound(&g).unwrap();
        assert!((hi - 0.0049).abs() < 1e-15);
    }

    #[test]
    fn harmonic_small_values() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
        let big = harmonic(HARMONIC_DIRECT_MAX + 1);
        let direct: f64 = (1..=HARMONIC_DIRECT_MAX + 1).rev().map(|i| 1.0 / i as f64).sum();
        assert!((big - direct).abs() < 1e-12);
    }
}
