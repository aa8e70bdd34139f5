//! No-regret learners and the repeated duopoly simulation.
//!
//! Every learner sees full-information feedback: after each round it gets its
//! utility for every price against the opponent's realized price.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::JointDist;
use crate::error::{Error, Result};
use crate::game::Game;

/// Below this exponent magnitude the multiplicative update uses a Taylor series.
const TAYLOR_LIMIT: f64 = 0.05;
/// Multiplicative updates between exact resyncs from the log weights.
const RESYNC_EVERY: u32 = 64;

const INV_FACT: [f64; 9] = [
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
];

/// Degree-`D` Taylor polynomial of `exp`.
#[inline(always)]
fn exp_taylor<const D: usize>(x: f64) -> f64 {
    let mut acc = INV_FACT[D];
    for c in INV_FACT[..D].iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// `exp(x)` for `|x| < TAYLOR_LIMIT`, accurate to a few ulp.
#[inline(always)]
fn exp_small(x: f64) -> f64 {
    exp_taylor::<8>(x)
}

/// Smallest Taylor degree whose truncation error is below `1e-17` for `|x| <= bound`.
#[inline(always)]
fn taylor_degree(bound: f64) -> usize {
    if bound < 1e-4 {
        3
    } else if bound < 2e-3 {
        4
    } else if bound < 1e-2 {
        6
    } else {
        8
    }
}

fn normalize(v: &mut [f64]) {
    let s = kernels::lane_sum(v);
    let inv = 1.0 / s;
    v.iter_mut().for_each(|x| *x *= inv);
}

fn softmax_into(logw: &[f64], out: &mut [f64]) {
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (o, &l) in out.iter_mut().zip(logw) {
        *o = (l - m).exp();
    }
    normalize(out);
}

/// Multiplies `prob` by `exp(s * u)` and adds `s * u` to `logw`.
#[inline]
fn hedge_kernel(logw: &mut [f64], prob: &mut [f64], u: &[f64], s: f64, umax: f64) {
    if (s * umax).abs() < TAYLOR_LIMIT {
        for ((l, p), &ua) in logw.iter_mut().zip(prob.iter_mut()).zip(u) {
            let x = s * ua;
            *l += x;
            *p *= exp_small(x);
        }
    } else {
        for ((l, p), &ua) in logw.iter_mut().zip(prob.iter_mut()).zip(u) {
            let x = s * ua;
            *l += x;
            *p *= x.exp();
        }
    }
    normalize(prob);
}

fn sample(dist: &[f64], rng: &mut dyn RngCore) -> usize {
    let r: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    for (a, &p) in dist.iter().enumerate() {
        acc += p;
        if r < acc {
            return a;
        }
    }
    // Rounding left r above the running total; take the last supported action.
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(dist.len() - 1)
}

/// Exponential weights over `k` actions.
#[derive(Debug, Clone)]
pub struct HedgeState {
    eta: f64,
    logw: Vec<f64>,
    prob: Vec<f64>,
    since_sync: u32,
}

impl HedgeState {
    pub fn new(k: usize, eta: f64) -> Self {
        Self { eta, logw: vec![0.0; k], prob: vec![1.0 / k as f64; k], since_sync: 0 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn distribution(&self) -> &[f64] {
        &self.prob
    }

    /// `w_a <- w_a * exp(eta * u_a)`, renormalized.
    pub fn step(&mut self, utilities: &[f64]) {
        if self.eta == 0.0 {
            return;
        }
        let umax = utilities.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        hedge_kernel(&mut self.logw, &mut self.prob, utilities, self.eta, umax);
        self.since_sync += 1;
        if self.since_sync >= RESYNC_EVERY {
            softmax_into(&self.logw, &mut self.prob);
            self.since_sync = 0;
        }
    }
}

/// Swap-regret learner: one Hedge expert per action, recommending the
/// (approximate) stationary distribution of the expert matrix.
#[derive(Debug, Clone)]
pub struct SwapLearner {
    k: usize,
    eta: f64,
    iters: usize,
    /// Row `e` holds expert `e`'s log weights.
    logw: Vec<f64>,
    /// Row `e` holds expert `e`'s distribution; rows sum to 1.
    q_matrix: Vec<f64>,
    rec: Vec<f64>,
    scratch: Vec<f64>,
    since_sync: u32,
}

impl SwapLearner {
    pub fn new(k: usize, eta: f64, iters: usize) -> Self {
        let mut s = Self {
            k,
            eta,
            iters,
            logw: vec![0.0; k * k],
            q_matrix: vec![1.0 / k as f64; k * k],
            rec: vec![1.0 / k as f64; k],
            scratch: vec![0.0; k],
            since_sync: 0,
        };
        s.recompute();
        s
    }

    /// Expert matrix, row-major.
    pub fn matrix(&self) -> &[f64] {
        &self.q_matrix
    }

    /// Overwrites the expert distributions (rows are renormalized).
    pub fn set_matrix(&mut self, rows: &[f64]) {
        assert_eq!(rows.len(), self.k * self.k);
        for (e, row) in rows.chunks(self.k).enumerate() {
            for (a, &p) in row.iter().enumerate() {
                self.logw[e * self.k + a] = p.ln();
            }
            softmax_into(&self.logw[e * self.k..(e + 1) * self.k], &mut self.q_matrix[e * self.k..(e + 1) * self.k]);
        }
        self.recompute();
    }

    pub fn recommendation(&self) -> &[f64] {
        &self.rec
    }

    /// `iters` rounds of `v <- v Q / |v Q|` from the uniform vector.
    fn recompute(&mut self) {
        kernels::power_iterate(&self.q_matrix, &mut self.rec, &mut self.scratch, self.k, self.iters);
    }

    /// Expert `e` receives `rec[e] * u`.
    fn learn(&mut self, utilities: &[f64]) {
        let k = self.k;
        // Entries past the last nonzero utility are multiplied by exp(0) = 1.
        let active = utilities.iter().rposition(|&u| u != 0.0).map_or(0, |a| a + 1);
        let umax = utilities[..active].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let resync = self.since_sync + 1 >= RESYNC_EVERY;
        kernels::learn_rows(&mut self.logw, &mut self.q_matrix, &utilities[..active], &self.rec, self.eta, umax, k);
        if resync {
            for (lw, q) in self.logw.chunks_exact(k).zip(self.q_matrix.chunks_exact_mut(k)) {
                softmax_into(lw, q);
            }
        }
        self.since_sync = if resync { 0 } else { self.since_sync + 1 };
        self.recompute();
    }
}

/// Hot loops of the swap learner, compiled for several instruction sets.
///
/// Every variant performs the same floating-point operations in the same
/// order (sums use eight fixed lanes), so results do not depend on the CPU.
mod kernels {
    use super::{exp_taylor, taylor_degree, TAYLOR_LIMIT};

    #[inline(always)]
    pub(super) fn lane_sum(v: &[f64]) -> f64 {
        let mut acc = [0.0f64; 8];
        let mut chunks = v.chunks_exact(8);
        for c in &mut chunks {
            for i in 0..8 {
                acc[i] += c[i];
            }
        }
        let mut tail = 0.0;
        for &x in chunks.remainder() {
            tail += x;
        }
        ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
    }

    #[inline(always)]
    fn scale(v: &mut [f64]) {
        let inv = 1.0 / lane_sum(v);
        v.iter_mut().for_each(|x| *x *= inv);
    }

    /// `out = v Q`, accumulating rows in order, four at a time.
    #[inline(always)]
    fn matvec(q: &[f64], v: &[f64], out: &mut [f64], k: usize) {
        out.fill(0.0);
        let mut rows = q.chunks_exact(4 * k);
        let mut vs = v.chunks_exact(4);
        for (blk, vv) in (&mut rows).zip(&mut vs) {
            let (r0, rest) = blk.split_at(k);
            let (r1, rest) = rest.split_at(k);
            let (r2, r3) = rest.split_at(k);
            let (v0, v1, v2, v3) = (vv[0], vv[1], vv[2], vv[3]);
            for ((((o, &a), &b), &c), &d) in out.iter_mut().zip(r0).zip(r1).zip(r2).zip(r3) {
                *o = (((*o + v0 * a) + v1 * b) + v2 * c) + v3 * d;
            }
        }
        for (row, &ve) in rows.remainder().chunks_exact(k).zip(vs.remainder()) {
            for (o, &p) in out.iter_mut().zip(row) {
                *o += ve * p;
            }
        }
    }

    #[inline(always)]
    fn power_body(q: &[f64], rec: &mut Vec<f64>, scratch: &mut Vec<f64>, k: usize, iters: usize) {
        rec.fill(1.0 / k as f64);
        for _ in 0..iters {
            matvec(q, rec, scratch, k);
            scale(scratch);
            std::mem::swap(rec, scratch);
        }
    }

    #[inline(always)]
    fn learn_body(logw: &mut [f64], q: &mut [f64], u: &[f64], rec: &[f64], eta: f64, umax: f64, k: usize) {
        let active = u.len();
        for ((lw, row), &re) in logw.chunks_exact_mut(k).zip(q.chunks_exact_mut(k)).zip(rec) {
            let s = eta * re;
            if s == 0.0 || active == 0 {
                continue;
            }
            let (lw, pr) = (&mut lw[..active], &mut row[..active]);
            let bound = (s * umax).abs();
            if bound < TAYLOR_LIMIT {
                match taylor_degree(bound) {
                    3 => taylor_update::<3>(lw, pr, u, s),
                    4 => taylor_update::<4>(lw, pr, u, s),
                    6 => taylor_update::<6>(lw, pr, u, s),
                    _ => taylor_update::<8>(lw, pr, u, s),
                }
            } else {
                for ((l, p), &ua) in lw.iter_mut().zip(pr.iter_mut()).zip(u) {
                    let x = s * ua;
                    *l += x;
                    *p *= x.exp();
                }
            }
            scale(row);
        }
    }

    #[inline(always)]
    fn taylor_update<const D: usize>(lw: &mut [f64], pr: &mut [f64], u: &[f64], s: f64) {
        for ((l, p), &ua) in lw.iter_mut().zip(pr.iter_mut()).zip(u) {
            let x = s * ua;
            *l += x;
            *p *= exp_taylor::<D>(x);
        }
    }

    #[derive(Clone, Copy, PartialEq, Eq)]
    enum Level {
        Base,
        #[cfg(target_arch = "x86_64")]
        Avx2,
        #[cfg(target_arch = "x86_64")]
        Avx512,
    }

    fn level() -> Level {
        static LEVEL: std::sync::OnceLock<Level> = std::sync::OnceLock::new();
        *LEVEL.get_or_init(|| {
            #[cfg(target_arch = "x86_64")]
            {
                if std::arch::is_x86_feature_detected!("avx512f") {
                    return Level::Avx512;
                }
                if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
                    return Level::Avx2;
                }
            }
            Level::Base
        })
    }

    #[cfg(target_arch = "x86_64")]
    mod x86 {
        use super::*;

        #[target_feature(enable = "avx2,fma")]
        pub(super) unsafe fn power_avx2(q: &[f64], rec: &mut Vec<f64>, s: &mut Vec<f64>, k: usize, iters: usize) {
            power_body(q, rec, s, k, iters)
        }

        #[target_feature(enable = "avx512f,avx2,fma")]
        pub(super) unsafe fn power_avx512(q: &[f64], rec: &mut Vec<f64>, s: &mut Vec<f64>, k: usize, iters: usize) {
            power_body(q, rec, s, k, iters)
        }

        #[target_feature(enable = "avx2,fma")]
        pub(super) unsafe fn learn_avx2(
            logw: &mut [f64],
            q: &mut [f64],
            u: &[f64],
            rec: &[f64],
            eta: f64,
            umax: f64,
            k: usize,
        ) {
            learn_body(logw, q, u, rec, eta, umax, k)
        }

        #[target_feature(enable = "avx512f,avx2,fma")]
        pub(super) unsafe fn learn_avx512(
            logw: &mut [f64],
            q: &mut [f64],
            u: &[f64],
            rec: &[f64],
            eta: f64,
            umax: f64,
            k: usize,
        ) {
            learn_body(logw, q, u, rec, eta, umax, k)
        }
    }

    pub(super) fn power_iterate(q: &[f64], rec: &mut Vec<f64>, scratch: &mut Vec<f64>, k: usize, iters: usize) {
        match level() {
            Level::Base => power_body(q, rec, scratch, k, iters),
            // SAFETY: the feature was detected at runtime.
            #[cfg(target_arch = "x86_64")]
            Level::Avx2 => unsafe { x86::power_avx2(q, rec, scratch, k, iters) },
            #[cfg(target_arch = "x86_64")]
            Level::Avx512 => unsafe { x86::power_avx512(q, rec, scratch, k, iters) },
        }
    }

    pub(super) fn learn_rows(logw: &mut [f64], q: &mut [f64], u: &[f64], rec: &[f64], eta: f64, umax: f64, k: usize) {
        match level() {
            Level::Base => learn_body(logw, q, u, rec, eta, umax, k),
            // SAFETY: the feature was detected at runtime.
            #[cfg(target_arch = "x86_64")]
            Level::Avx2 => unsafe { x86::learn_avx2(logw, q, u, rec, eta, umax, k) },
            #[cfg(target_arch = "x86_64")]
            Level::Avx512 => unsafe { x86::learn_avx512(logw, q, u, rec, eta, umax, k) },
        }
    }

    #[cfg(test)]
    pub(super) fn power_base(q: &[f64], rec: &mut Vec<f64>, s: &mut Vec<f64>, k: usize, iters: usize) {
        power_body(q, rec, s, k, iters)
    }

    #[cfg(test)]
    pub(super) fn learn_base(logw: &mut [f64], q: &mut [f64], u: &[f64], rec: &[f64], eta: f64, umax: f64, k: usize) {
        learn_body(logw, q, u, rec, eta, umax, k)
    }
}

/// Regret matching: play proportional to positive cumulative regret.
#[derive(Debug, Clone)]
pub struct RegretMatching {
    regret: Vec<f64>,
    dist: Vec<f64>,
}

impl RegretMatching {
    pub fn new(k: usize) -> Self {
        Self { regret: vec![0.0; k], dist: vec![1.0 / k as f64; k] }
    }

    pub fn regrets(&self) -> &[f64] {
        &self.regret
    }

    pub fn distribution(&self) -> &[f64] {
        &self.dist
    }

    /// `R(a) += u_a - u_played`.
    pub fn step(&mut self, utilities: &[f64], played: usize) {
        let base = utilities[played];
        for (r, &u) in self.regret.iter_mut().zip(utilities) {
            *r += u - base;
        }
        let pos: f64 = self.regret.iter().map(|r| r.max(0.0)).sum();
        if pos > 0.0 {
            for (d, r) in self.dist.iter_mut().zip(&self.regret) {
                *d = r.max(0.0) / pos;
            }
        } else {
            self.dist.fill(1.0 / self.regret.len() as f64);
        }
    }
}

/// An online pricing algorithm with full-information feedback.
pub trait Learner: Send {
    fn act(&mut self, rng: &mut dyn RngCore) -> usize;
    /// Feedback for the round just played: own and opponent price, and the
    /// utility of every own price against the opponent's.
    fn update(&mut self, own: usize, opp: usize, utilities: &[f64]);
    /// Called once after the last round.
    fn finish(&mut self) {}
}

impl Learner for HedgeState {
    fn act(&mut self, rng: &mut dyn RngCore) -> usize {
        sample(&self.prob, rng)
    }

    fn update(&mut self, _own: usize, _opp: usize, utilities: &[f64]) {
        self.step(utilities);
    }
}

impl Learner for SwapLearner {
    fn act(&mut self, rng: &mut dyn RngCore) -> usize {
        sample(&self.rec, rng)
    }

    fn update(&mut self, _own: usize, _opp: usize, utilities: &[f64]) {
        self.learn(utilities);
    }
}

impl Learner for RegretMatching {
    fn act(&mut self, rng: &mut dyn RngCore) -> usize {
        sample(&self.dist, rng)
    }

    fn update(&mut self, own: usize, _opp: usize, utilities: &[f64]) {
        self.step(utilities, own);
    }
}

/// Repeats each recommendation for `t0` rounds and feeds the inner learner
/// the block-averaged utilities once per block.
pub struct FreezeWrapper {
    inner: Box<dyn Learner>,
    t0: usize,
    current: usize,
    remaining: usize,
    filled: usize,
    opp_last: usize,
    acc: Vec<f64>,
}

impl FreezeWrapper {
    pub fn new(inner: Box<dyn Learner>, k: usize, t0: usize) -> Result<Self> {
        if t0 == 0 {
            return Err(Error::input("freeze block length t0 must be at least 1"));
        }
        Ok(Self { inner, t0, current: 0, remaining: 0, filled: 0, opp_last: 0, acc: vec![0.0; k] })
    }

    fn flush(&mut self) {
        if self.filled == 0 {
            return;
        }
        let inv = 1.0 / self.filled as f64;
        let mean: Vec<f64> = self.acc.iter().map(|v| v * inv).collect();
        self.inner.update(self.current, self.opp_last, &mean);
        self.acc.fill(0.0);
        self.filled = 0;
    }
}

impl Learner for FreezeWrapper {
    fn act(&mut self, rng: &mut dyn RngCore) -> usize {
        if self.remaining == 0 {
            self.current = self.inner.act(rng);
            self.remaining = self.t0;
        }
        self.remaining -= 1;
        self.current
    }

    fn update(&mut self, _own: usize, opp: usize, utilities: &[f64]) {
        for (a, &u) in self.acc.iter_mut().zip(utilities) {
            *a += u;
        }
        self.filled += 1;
        self.opp_last = opp;
        if self.filled == self.t0 {
            self.flush();
        }
    }

    fn finish(&mut self) {
        self.flush();
        self.inner.finish();
    }
}

/// Lists each profile `x` of `dist` `floor(mu(x) sqrt(T))` times, in
/// lexicographic order. `T` must be a perfect square.
pub fn build_cycle(dist: &JointDist, t: u64) -> Result<Vec<Vec<usize>>> {
    let root = t.isqrt();
    if root * root != t {
        return Err(Error::input(format!("T = {t} is not a perfect square")));
    }
    let mut support = Vec::new();
    dist.for_each(|x, w| support.push((x.to_vec(), w)));
    support.sort_by(|a, b| a.0.cmp(&b.0));
    let mut script = Vec::new();
    for (x, w) in support {
        let copies = (w * root as f64).floor() as usize;
        script.extend(std::iter::repeat_n(x, copies));
    }
    if script.is_empty() {
        return Err(Error::input(format!(
            "every weight is below 1/sqrt(T) = {}; use a larger T",
            1.0 / root as f64
        )));
    }
    Ok(script)
}

/// Plays a scripted cycle while the opponent follows it; after the first
/// mismatch, hands over to a fallback learner for good.
pub struct CycleLearner {
    player: usize,
    script: Vec<[usize; 2]>,
    round: usize,
    switched_at: Option<usize>,
    fallback: Box<dyn Learner>,
}

impl CycleLearner {
    pub fn new(player: usize, script: &[Vec<usize>], fallback: Box<dyn Learner>) -> Result<Self> {
        if player > 1 {
            return Err(Error::input("cycle learners are duopoly players (0 or 1)"));
        }
        if script.is_empty() {
            return Err(Error::input("empty cycle script"));
        }
        let script = script
            .iter()
            .map(|x| match x.as_slice() {
                [a, b] => Ok([*a, *b]),
                _ => Err(Error::input("cycle script must contain duopoly profiles")),
            })
            .collect::<Result<_>>()?;
        Ok(Self { player, script, round: 0, switched_at: None, fallback })
    }

    /// Round at which the opponent first left the script.
    pub fn switched_at(&self) -> Option<usize> {
        self.switched_at
    }
}

impl Learner for CycleLearner {
    fn act(&mut self, rng: &mut dyn RngCore) -> usize {
        match self.switched_at {
            Some(_) => self.fallback.act(rng),
            None => self.script[self.round % self.script.len()][self.player],
        }
    }

    fn update(&mut self, own: usize, opp: usize, utilities: &[f64]) {
        match self.switched_at {
            Some(s) if s < self.round => self.fallback.update(own, opp, utilities),
            Some(_) => {}
            None => {
                if opp != self.script[self.round % self.script.len()][1 - self.player] {
                    self.switched_at = Some(self.round);
                }
            }
        }
        self.round += 1;
    }

    fn finish(&mut self) {
        self.fallback.finish();
    }
}

/// Plays a fixed price forever; used as a scripted opponent.
#[derive(Debug, Clone)]
pub struct FixedPrice(pub usize);

impl Learner for FixedPrice {
    fn act(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.0
    }

    fn update(&mut self, _own: usize, _opp: usize, _utilities: &[f64]) {}
}

/// Delegates to `before` for the first `at` rounds and to `after` from then on.
pub struct SwitchAt {
    at: usize,
    round: usize,
    before: Box<dyn Learner>,
    after: Box<dyn Learner>,
}

impl SwitchAt {
    pub fn new(at: usize, before: Box<dyn Learner>, after: Box<dyn Learner>) -> Self {
        Self { at, round: 0, before, after }
    }
}

impl Learner for SwitchAt {
    fn act(&mut self, rng: &mut dyn RngCore) -> usize {
        if self.round < self.at {
            self.before.act(rng)
        } else {
            self.after.act(rng)
        }
    }

    fn update(&mut self, own: usize, opp: usize, utilities: &[f64]) {
        if self.round < self.at {
            self.before.update(own, opp, utilities);
        } else {
            self.after.update(own, opp, utilities);
        }
        self.round += 1;
    }

    fn finish(&mut self) {
        self.before.finish();
        self.after.finish();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerFamily {
    HedgeSwap,
    Hedge,
    RegretMatching,
}

impl LearnerFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hedge_swap" | "hedge-swap" | "swap" => Ok(Self::HedgeSwap),
            "hedge" => Ok(Self::Hedge),
            "regret_matching" | "regret-matching" | "rm" => Ok(Self::RegretMatching),
            other => Err(Error::input(format!("unknown learner family '{other}'"))),
        }
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_t0() -> usize {
    1
}

fn default_iters() -> usize {
    20
}

/// One player's learner. The Hedge learning rate is
/// `eta.unwrap_or(sqrt(ln k / T)) * eta_multiplier`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub family: LearnerFamily,
    #[serde(default = "default_one")]
    pub eta_multiplier: f64,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_t0")]
    pub t0: usize,
    #[serde(default = "default_iters")]
    pub station_iters: usize,
}

impl LearnerConfig {
    pub fn new(family: LearnerFamily) -> Self {
        Self { family, eta_multiplier: 1.0, eta: None, t0: 1, station_iters: 20 }
    }

    pub fn with_multiplier(mut self, m: f64) -> Self {
        self.eta_multiplier = m;
        self
    }

    pub fn with_t0(mut self, t0: usize) -> Self {
        self.t0 = t0;
        self
    }

    pub fn learning_rate(&self, k: usize, horizon: u64) -> f64 {
        let base = self.eta.unwrap_or_else(|| ((k as f64).ln() / horizon as f64).sqrt());
        base * self.eta_multiplier
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_multiplier.is_finite() && self.eta_multiplier >= 0.0) {
            return Err(Error::input("eta_multiplier must be a finite non-negative number"));
        }
        if let Some(e) = self.eta {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::input("eta must be a finite non-negative number"));
            }
        }
        if self.t0 == 0 {
            return Err(Error::input("t0 must be at least 1"));
        }
        Ok(())
    }

    pub fn build(&self, k: usize, horizon: u64) -> Result<Box<dyn Learner>> {
        self.validate()?;
        let eta = self.learning_rate(k, horizon);
        let inner: Box<dyn Learner> = match self.family {
            LearnerFamily::HedgeSwap => Box::new(SwapLearner::new(k, eta, self.station_iters)),
            LearnerFamily::Hedge => Box::new(HedgeState::new(k, eta)),
            LearnerFamily::RegretMatching => Box::new(RegretMatching::new(k)),
        };
        if self.t0 == 1 {
            Ok(inner)
        } else {
            Ok(Box::new(FreezeWrapper::new(inner, k, self.t0)?))
        }
    }
}

/// Learning-rate multiplier pairs `(player 1, player 2)` used in the dynamics experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaMode {
    #[serde(rename = "eta_base")]
    Base,
    #[serde(rename = "eta_1_plus_10i")]
    FastPlayer2,
    #[serde(rename = "eta_11_minus_10i")]
    FastPlayer1,
}

impl EtaMode {
    pub fn multipliers(&self) -> (f64, f64) {
        match self {
            EtaMode::Base => (1.0, 1.0),
            EtaMode::FastPlayer2 => (1.0, 11.0),
            EtaMode::FastPlayer1 => (11.0, 1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EtaMode::Base => "eta_base",
            EtaMode::FastPlayer2 => "eta_1_plus_10i",
            EtaMode::FastPlayer1 => "eta_11_minus_10i",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eta_base" | "base" => Ok(Self::Base),
            "eta_1_plus_10i" => Ok(Self::FastPlayer2),
            "eta_11_minus_10i" => Ok(Self::FastPlayer1),
            other => Err(Error::input(format!("unknown eta mode '{other}'"))),
        }
    }
}

/// Digest of one simulated run.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub k: usize,
    pub rounds: u64,
    pub seed: u64,
    /// Price counts per player.
    pub price_hist: [Vec<u64>; 2],
    pub transaction_hist: Vec<u64>,
    pub cumulative_utility: [f64; 2],
    pub external_regret: [f64; 2],
    pub swap_regret: [f64; 2],
    /// Joint counts `joint[x1 * k + x2]`.
    #[serde(skip)]
    pub joint: Vec<u64>,
}

impl SimResult {
    /// Lowest transaction price index among the most frequent ones.
    pub fn modal_transaction(&self) -> usize {
        modal_index(&self.transaction_hist)
    }

    /// Empirical joint distribution of the played profiles.
    pub fn empirical(&self) -> Result<JointDist> {
        let t = self.rounds as f64;
        JointDist::dense2(self.k, self.joint.iter().map(|&c| c as f64 / t).collect())
    }
}

/// Lowest index among the maxima.
pub fn modal_index<T: PartialOrd + Copy>(hist: &[T]) -> usize {
    let mut best = 0;
    for (a, v) in hist.iter().enumerate() {
        if *v > hist[best] {
            best = a;
        }
    }
    best
}

/// One player's own-price by opponent-price counts, `c[p * k + j]`.
fn player_counts(joint: &[u64], k: usize, player: usize) -> Vec<u64> {
    if player == 0 {
        joint.to_vec()
    } else {
        let mut c = vec![0; k * k];
        for x1 in 0..k {
            for x2 in 0..k {
                c[x2 * k + x1] = joint[x1 * k + x2];
            }
        }
        c
    }
}

/// `g[p][a]`: gain from replacing every play of `p` by `a`.
fn replacement_gains(game: &Game, player: usize, joint: &[u64]) -> Vec<Vec<f64>> {
    let k = game.k();
    let c = player_counts(joint, k, player);
    let margin = game.margins(player);
    (0..k)
        .map(|p| {
            let row = &c[p * k..(p + 1) * k];
            let mut vals = vec![0.0; k];
            let mut above = 0u64;
            for a in (0..k).rev() {
                vals[a] = margin[a] * (above as f64 + row[a] as f64 / 2.0);
                above += row[a];
            }
            let base = vals[p];
            vals.iter().map(|v| v - base).collect()
        })
        .collect()
}

/// Best fixed price in hindsight minus realized utility, from joint counts.
pub fn external_regret(game: &Game, player: usize, joint: &[u64]) -> f64 {
    let g = replacement_gains(game, player, joint);
    let k = game.k();
    (0..k)
        .map(|a| g.iter().fold(0.0, |acc, row| acc + row[a]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best swap map in hindsight minus realized utility, from joint counts.
pub fn swap_regret(game: &Game, player: usize, joint: &[u64]) -> f64 {
    let g = replacement_gains(game, player, joint);
    g.iter().fold(0.0, |acc, row| acc + row.iter().copied().fold(0.0f64, f64::max))
}

/// Per-player random streams derived from one seed.
pub fn player_rng(seed: u64, player: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(player as u64);
    rng
}

/// Runs `rounds` rounds of the duopoly between two learners.
pub fn simulate_learners(
    game: &Game,
    learners: [&mut dyn Learner; 2],
    rounds: u64,
    seed: u64,
) -> Result<SimResult> {
    if game.n() != 2 {
        return Err(Error::domain("simulation is defined for duopolies"));
    }
    if rounds == 0 {
        return Err(Error::input("need at least one round"));
    }
    let k = game.k();
    // feedback[i][opp * k + a] = u_i(a, opp)
    let feedback: [Vec<f64>; 2] = [0, 1].map(|i| {
        let mut f = vec![0.0; k * k];
        for opp in 0..k {
            f[opp * k..(opp + 1) * k].copy_from_slice(&game.duopoly_utility_vector(i, opp));
        }
        f
    });
    let [l1, l2] = learners;
    let mut rngs = [player_rng(seed, 0), player_rng(seed, 1)];
    let mut joint = vec![0u64; k * k];
    for _ in 0..rounds {
        let x1 = l1.act(&mut rngs[0]);
        let x2 = l2.act(&mut rngs[1]);
        joint[x1 * k + x2] += 1;
        l1.update(x1, x2, &feedback[0][x2 * k..(x2 + 1) * k]);
        l2.update(x2, x1, &feedback[1][x1 * k..(x1 + 1) * k]);
    }
    l1.finish();
    l2.finish();
    Ok(summarize(game, joint, rounds, seed))
}

/// Builds a [`SimResult`] from joint counts.
pub fn summarize(game: &Game, joint: Vec<u64>, rounds: u64, seed: u64) -> SimResult {
    let k = game.k();
    let mut price_hist = [vec![0u64; k], vec![0u64; k]];
    let mut transaction_hist = vec![0u64; k];
    let mut cumulative_utility = [0.0; 2];
    for x1 in 0..k {
        for x2 in 0..k {
            let c = joint[x1 * k + x2];
            if c == 0 {
                continue;
            }
            price_hist[0][x1] += c;
            price_hist[1][x2] += c;
            transaction_hist[x1.min(x2)] += c;
            for (i, cu) in cumulative_utility.iter_mut().enumerate() {
                *cu += c as f64 * game.utility_unchecked(i, &[x1, x2]);
            }
        }
    }
    let external = [external_regret(game, 0, &joint), external_regret(game, 1, &joint)];
    let swap = [swap_regret(game, 0, &joint), swap_regret(game, 1, &joint)];
    SimResult {
        k,
        rounds,
        seed,
        price_hist,
        transaction_hist,
        cumulative_utility,
        external_regret: external,
        swap_regret: swap,
        joint,
    }
}

/// Runs two configured learners against each other.
pub fn simulate(game: &Game, cfg: [&LearnerConfig; 2], rounds: u64, seed: u64) -> Result<SimResult> {
    let mut l1 = cfg[0].build(game.k(), rounds)?;
    let mut l2 = cfg[1].build(game.k(), rounds)?;
    simulate_learners(game, [l1.as_mut(), l2.as_mut()], rounds, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Demand;

    #[test]
    fn taylor_matches_exp() {
        for i in -100..=100 {
            let x = i as f64 * TAYLOR_LIMIT / 100.0;
            assert!((exp_small(x) - x.exp()).abs() <= 4.0 * f64::EPSILON, "{x}");
            let eval = |x: f64| match taylor_degree(x.abs()) {
                3 => exp_taylor::<3>(x),
                4 => exp_taylor::<4>(x),
                6 => exp_taylor::<6>(x),
                _ => exp_taylor::<8>(x),
            };
            for scale in [1.0, 0.2, 0.04, 1e-3, 1e-4] {
                let y = x * scale;
                assert!((eval(y) - y.exp()).abs() <= 4.0 * f64::EPSILON, "{y}");
            }
        }
    }

    #[test]
    fn hedge_examples() {
        let mut h = HedgeState::new(2, 2f64.ln());
        h.step(&[1.0, 0.0]);
        assert!((h.distribution()[0] - 2.0 / 3.0).abs() < 1e-15);
        let mut z = HedgeState::new(3, 0.5);
        z.step(&[0.0; 3]);
        assert_eq!(z.distribution(), &[1.0 / 3.0; 3]);
        let mut still = HedgeState::new(2, 0.0);
        still.step(&[1.0, 0.0]);
        assert_eq!(still.distribution(), &[0.5, 0.5]);
    }

    #[test]
    fn swap_recommendation_examples() {
        let s = SwapLearner::new(4, 0.1, 20);
        assert!(s.recommendation().iter().all(|&p| (p - 0.25).abs() < 1e-15));
        let mut s = SwapLearner::new(2, 0.1, 20);
        s.set_matrix(&[0.0, 1.0, 1.0, 0.0]);
        assert!(s.recommendation().iter().all(|&p| (p - 0.5).abs() < 1e-15));
        let mut s = SwapLearner::new(3, 0.1, 20);
        s.set_matrix(&[0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        assert!((s.recommendation()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn swap_update_scales_by_recommendation() {
        let mut s = SwapLearner::new(2, 2f64.ln(), 20);
        s.rec = vec![1.0, 0.0];
        s.learn(&[1.0, 0.0]);
        assert!((s.q_matrix[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(&s.q_matrix[2..], &[0.5, 0.5]);
        let before = s.q_matrix.clone();
        s.learn(&[0.0, 0.0]);
        assert_eq!(s.q_matrix, before);
    }

    #[test]
    fn kernel_variants_agree() {
        let k = 13;
        let q: Vec<f64> = (0..k * k).map(|i| 1.0 + ((i * 37) % 11) as f64).collect();
        let mut q = q;
        for row in q.chunks_exact_mut(k) {
            normalize(row);
        }
        let (mut r1, mut s1) = (vec![0.0; k], vec![0.0; k]);
        let (mut r2, mut s2) = (vec![0.0; k], vec![0.0; k]);
        kernels::power_iterate(&q, &mut r1, &mut s1, k, 20);
        kernels::power_base(&q, &mut r2, &mut s2, k, 20);
        assert_eq!(r1, r2);
        let u: Vec<f64> = (0..k).map(|a| (a as f64 / k as f64) - 0.3).collect();
        let (mut l1, mut q1) = (vec![0.0; k * k], q.clone());
        let (mut l2, mut q2) = (vec![0.0; k * k], q.clone());
        kernels::learn_rows(&mut l1, &mut q1, &u, &r1, 0.02, 0.7, k);
        kernels::learn_base(&mut l2, &mut q2, &u, &r1, 0.02, 0.7, k);
        assert_eq!(q1, q2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn regret_matching_examples() {
        let mut rm = RegretMatching::new(2);
        assert_eq!(rm.distribution(), &[0.5, 0.5]);
        rm.step(&[0.0, 1.0], 0);
        assert_eq!(rm.regrets(), &[0.0, 1.0]);
        assert_eq!(rm.distribution(), &[0.0, 1.0]);
        let mut same = RegretMatching::new(3);
        same.step(&[0.4; 3], 1);
        assert_eq!(same.regrets(), &[0.0; 3]);
    }

    #[test]
    fn regret_examples() {
        let g = Game::new(2, &[0.0, 0.0], Demand::Constant).unwrap();
        // player 1 always at 1, player 2 always at 1/2, T = 10
        let joint = vec![0, 0, 10, 0];
        assert!((external_regret(&g, 0, &joint) - 2.5).abs() < 1e-12);
        assert!(swap_regret(&g, 0, &joint) >= external_regret(&g, 0, &joint));
        let both_low = vec![7, 0, 0, 0];
        assert_eq!(external_regret(&g, 0, &both_low), 0.0);
    }

    #[test]
    fn build_cycle_examples() {
        let mu = JointDist::dense2(2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let c = build_cycle(&mu, 16).unwrap();
        assert_eq!(c, vec![vec![0, 0], vec![0, 0], vec![1, 1], vec![1, 1]]);
        let point = JointDist::point_mass(3, &[1, 2]).unwrap();
        assert_eq!(build_cycle(&point, 100).unwrap().len(), 10);
        assert!(build_cycle(&point, 99).is_err());
        let thin = JointDist::dense2(4, vec![1.0 / 16.0; 16]).unwrap();
        assert!(build_cycle(&thin, 100).is_err());
    }

    #[test]
    fn one_round_uniform() {
        let g = Game::new(5, &[0.0, 0.0], Demand::Constant).unwrap();
        let rm = LearnerConfig::new(LearnerFamily::RegretMatching);
        let r = simulate(&g, [&rm, &rm], 1, 3).unwrap();
        assert_eq!(r.transaction_hist.iter().sum::<u64>(), 1);
    }

    #[test]
    fn freeze_one_is_transparent() {
        let g = Game::with_cost_levels(6, &[0, 1], Demand::Linear).unwrap();
        for family in [LearnerFamily::RegretMatching, LearnerFamily::HedgeSwap] {
            let bare = LearnerConfig::new(family);
            let mut l1: Box<dyn Learner> = bare.build(6, 500).unwrap();
            let mut l2: Box<dyn Learner> = bare.build(6, 500).unwrap();
            let a = simulate_learners(&g, [l1.as_mut(), l2.as_mut()], 500, 9).unwrap();
            let mut w1 = FreezeWrapper::new(bare.build(6, 500).unwrap(), 6, 1).unwrap();
            let mut w2 = FreezeWrapper::new(bare.build(6, 500).unwrap(), 6, 1).unwrap();
            let b = simulate_learners(&g, [&mut w1, &mut w2], 500, 9).unwrap();
            assert_eq!(a.joint, b.joint);
        }
    }

    #[test]
    fn freeze_holds_price_within_block() {
        use std::sync::{Arc, Mutex};
        struct Count(usize, Arc<Mutex<Vec<Vec<f64>>>>);
        impl Learner for Count {
            fn act(&mut self, _rng: &mut dyn RngCore) -> usize {
                self.0 += 1;
                self.0 % 3
            }
            fn update(&mut self, _own: usize, _opp: usize, u: &[f64]) {
                self.1.lock().unwrap().push(u.to_vec());
            }
        }
        let log = Arc::new(Mutex::new(Vec::new()));
        let mut w = FreezeWrapper::new(Box::new(Count(0, log.clone())), 3, 4).unwrap();
        let mut rng = player_rng(0, 0);
        let plays: Vec<usize> = (0..10)
            .map(|t| {
                let a = w.act(&mut rng);
                w.update(a, 0, &[t as f64, 0.0, 1.0]);
                a
            })
            .collect();
        w.finish();
        assert_eq!(plays, vec![1, 1, 1, 1, 2, 2, 2, 2, 0, 0]);
        assert_eq!(*log.lock().unwrap(), vec![vec![1.5, 0.0, 1.0], vec![5.5, 0.0, 1.0], vec![8.5, 0.0, 1.0]]);
    }

    #[test]
    fn seeded_runs_repeat() {
        let g = Game::new(8, &[0.0, 0.5], Demand::Constant).unwrap();
        let swap = LearnerConfig::new(LearnerFamily::HedgeSwap);
        let a = simulate(&g, [&swap, &swap], 300, 11).unwrap();
        let b = simulate(&g, [&swap, &swap], 300, 11).unwrap();
        assert_eq!(a.joint, b.joint);
        assert_eq!(a.swap_regret, b.swap_regret);
    }
}
