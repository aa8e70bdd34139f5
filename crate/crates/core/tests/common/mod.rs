//! Oracles shared by the integration tests, written from the definitions
//! without touching the library's verifier or solver.
#![allow(dead_code)]

use bertrand_core::lp::Objective;
use bertrand_core::{Game, JointDist};

/// Solves `a x = b` by Gaussian elimination; `None` if (nearly) singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn combinations(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..r).collect();
    if r > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = r;
        while i > 0 && idx[i - 1] == n - r + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best objective over basic feasible solutions of
/// `{x >= 0, le x <= le_rhs, eq x = eq_rhs}`; `None` if no vertex exists.
pub fn vertex_max(c: &[f64], le: &[Vec<f64>], le_rhs: &[f64], eq: &[Vec<f64>], eq_rhs: &[f64]) -> Option<f64> {
    let d = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = (0..d)
        .map(|j| {
            let mut r = vec![0.0; d];
            r[j] = -1.0;
            (r, 0.0)
        })
        .collect();
    rows.extend(le.iter().cloned().zip(le_rhs.iter().copied()));
    let need = d - eq.len();
    let mut best: Option<f64> = None;
    combinations(rows.len(), need, |pick| {
        let mut a: Vec<Vec<f64>> = eq.to_vec();
        let mut b: Vec<f64> = eq_rhs.to_vec();
        for &p in pick {
            a.push(rows[p].0.clone());
            b.push(rows[p].1);
        }
        let Some(x) = solve_dense(a, b) else { return };
        let feasible = rows.iter().all(|(r, rhs)| r.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= rhs + 1e-10);
        if feasible {
            let v: f64 = c.iter().zip(&x).map(|(u, v)| u * v).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    });
    best
}

fn u(game: &Game, i: usize, x1: usize, x2: usize) -> f64 {
    game.utility(i, &[x1, x2]).unwrap()
}

/// Duopoly CCE/CE polytopes written straight from the definitions.
pub fn duopoly_oracle(game: &Game, objective: Objective, ce: bool) -> f64 {
    let k = game.k();
    let idx = |a: usize, b: usize| a * k + b;
    let c: Vec<f64> = (0..k * k)
        .map(|v| {
            let (a, b) = (v / k, v % k);
            match objective {
                Objective::P1 => u(game, 0, a, b),
                Objective::P2 => u(game, 1, a, b),
                Objective::Sum => u(game, 0, a, b) + u(game, 1, a, b),
            }
        })
        .collect();
    let mut le = Vec::new();
    if ce {
        for p in 0..k {
            for alt in (0..k).filter(|&a| a != p) {
                let mut r1 = vec![0.0; k * k];
                let mut r2 = vec![0.0; k * k];
                for o in 0..k {
                    r1[idx(p, o)] = u(game, 0, alt, o) - u(game, 0, p, o);
                    r2[idx(o, p)] = u(game, 1, o, alt) - u(game, 1, o, p);
                }
                le.push(r1);
                le.push(r2);
            }
        }
    } else {
        for a in 0..k {
            let mut r1 = vec![0.0; k * k];
            let mut r2 = vec![0.0; k * k];
            for x1 in 0..k {
                for x2 in 0..k {
                    r1[idx(x1, x2)] = u(game, 0, a, x2) - u(game, 0, x1, x2);
                    r2[idx(x1, x2)] = u(game, 1, x1, a) - u(game, 1, x1, x2);
                }
            }
            le.push(r1);
            le.push(r2);
        }
    }
    let rhs = vec![0.0; le.len()];
    vertex_max(&c, &le, &rhs, &[vec![1.0; k * k]], &[1.0]).expect("the CCE polytope is nonempty")
}

/// Symmetric CCE over diagonal profiles of an `n`-player game.
pub fn symmetric_oracle(game: &Game) -> f64 {
    let (k, n) = (game.k(), game.n());
    let diag = |p: usize| vec![p; n];
    let c: Vec<f64> = (0..k).map(|p| game.utility(0, &diag(p)).unwrap()).collect();
    let le: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|p| {
                    let mut y = diag(p);
                    y[0] = a;
                    game.utility(0, &y).unwrap() - c[p]
                })
                .collect()
        })
        .collect();
    vertex_max(&c, &le, &vec![0.0; k], &[vec![1.0; k]], &[1.0]).unwrap()
}

/// Best gain over every map `P -> P`, by enumeration of all `k^k` maps.
pub fn all_maps_oracle(game: &Game, dist: &JointDist, i: usize) -> f64 {
    let k = game.k();
    let mut support = Vec::new();
    dist.for_each(|x, w| support.push((x.to_vec(), w)));
    let base: f64 = support.iter().map(|(x, w)| w * game.utility(i, x).unwrap()).sum();
    let mut best = f64::NEG_INFINITY;
    for code in 0..k.pow(k as u32) {
        let phi: Vec<usize> = (0..k).map(|a| code / k.pow(a as u32) % k).collect();
        let dev: f64 = support
            .iter()
            .map(|(x, w)| {
                let mut y = x.clone();
                y[i] = phi[x[i]];
                w * game.utility(i, &y).unwrap()
            })
            .sum();
        best = best.max(dev - base);
    }
    best
}

pub fn constant_oracle(game: &Game, dist: &JointDist, i: usize) -> f64 {
    let mut support = Vec::new();
    dist.for_each(|x, w| support.push((x.to_vec(), w)));
    let base: f64 = support.iter().map(|(x, w)| w * game.utility(i, x).unwrap()).sum();
    (0..game.k())
        .map(|a| {
            support
                .iter()
                .map(|(x, w)| {
                    let mut y = x.clone();
                    y[i] = a;
                    w * game.utility(i, &y).unwrap()
                })
                .sum::<f64>()
                - base
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
