//! Monte Carlo for the ASEP with step initial data and for the higher spin
//! stochastic six-vertex model in the quadrant.

use rand::Rng;
use rayon::prelude::*;
use std::io::Write;

use crate::dpp::replica_rng;
use crate::error::{param, Error, Result};

/// Window half-width used by [`asep_simulate`].
pub fn asep_window(t: f64, queries: &[i64]) -> i64 {
    let reach = queries.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64;
    (2.0 * t + reach + 8.0 * (t + 1.0).sqrt() + 20.0).ceil() as i64
}

/// Occupation of the window `{−L..R}` together with the sets of particles
/// that can currently jump right or left.
struct AsepState {
    left: i64,
    occ: Vec<bool>,
    movers: [Vec<usize>; 2],
    slot: [Vec<usize>; 2],
}

const NONE: usize = usize::MAX;

impl AsepState {
    fn step(l: i64, r: i64) -> Self {
        let size = (l + r + 1) as usize;
        let occ: Vec<bool> = (0..size).map(|i| (i as i64) < l).collect();
        let mut s = AsepState {
            left: l,
            occ,
            movers: [Vec::new(), Vec::new()],
            slot: [vec![NONE; size], vec![NONE; size]],
        };
        for i in 0..size {
            s.refresh(i);
        }
        s
    }

    fn can(&self, i: usize, dir: usize) -> bool {
        if !self.occ[i] {
            return false;
        }
        match dir {
            0 => i + 1 < self.occ.len() && !self.occ[i + 1],
            _ => i > 0 && !self.occ[i - 1],
        }
    }

    fn refresh(&mut self, i: usize) {
        for dir in 0..2 {
            let want = self.can(i, dir);
            let have = self.slot[dir][i] != NONE;
            if want && !have {
                self.slot[dir][i] = self.movers[dir].len();
                self.movers[dir].push(i);
            } else if !want && have {
                let k = self.slot[dir][i];
                let last = self.movers[dir].pop().expect("nonempty");
                if last != i {
                    self.movers[dir][k] = last;
                    self.slot[dir][last] = k;
                }
                self.slot[dir][i] = NONE;
            }
        }
    }

    fn jump(&mut self, from: usize, to: usize) {
        self.occ[from] = false;
        self.occ[to] = true;
        let lo = from.min(to).saturating_sub(1);
        let hi = (from.max(to) + 1).min(self.occ.len() - 1);
        for i in lo..=hi {
            self.refresh(i);
        }
    }

    /// `h(x)`: particles at sites `≥ x`, counting the jammed region left of
    /// the window.
    fn height(&self, x: i64) -> u64 {
        let i = x + self.left;
        if i >= self.occ.len() as i64 {
            return 0;
        }
        let inside = self.occ[i.max(0) as usize..].iter().filter(|&&b| b).count() as u64;
        inside + (-i).max(0) as u64
    }
}

/// Heights `h(x)` at time `t` of the ASEP with right rate 1 and left rate
/// `q`, started from particles on every negative site.
pub fn asep_simulate(q: f64, t: f64, queries: &[i64], rng: &mut impl Rng) -> Result<Vec<u64>> {
    if !(0.0..1.0).contains(&q) {
        return param(format!("ASEP needs q ∈ [0, 1), got {q}"));
    }
    if !(t >= 0.0) {
        return param("time must be nonnegative");
    }
    let w = asep_window(t, queries);
    let mut s = AsepState::step(w, w);
    let guard = 5usize;
    let size = s.occ.len();
    let mut now = 0.0;
    loop {
        let nr = s.movers[0].len() as f64;
        let nl = q * s.movers[1].len() as f64;
        let total = nr + nl;
        if total == 0.0 {
            break;
        }
        now += -(1.0 - rng.gen::<f64>()).ln() / total;
        if now > t {
            break;
        }
        let pick = rng.gen::<f64>() * total;
        let (from, to) = if pick < nr {
            let i = s.movers[0][(pick as usize).min(s.movers[0].len() - 1)];
            (i, i + 1)
        } else {
            let k = (((pick - nr) / q) as usize).min(s.movers[1].len() - 1);
            let i = s.movers[1][k];
            (i, i - 1)
        };
        if to + guard >= size || from <= guard {
            return Err(Error::WindowOverflow(format!("activity reached the edge of the {size}-site window at time {now}")));
        }
        s.jump(from, to);
    }
    Ok(queries.iter().map(|&x| s.height(x)).collect())
}

/// `replicas` independent runs; replica `i` uses `replica_rng(seed, i)`.
pub fn asep_heights(q: f64, t: f64, queries: &[i64], seed: u64, replicas: usize) -> Result<Vec<Vec<u64>>> {
    (0..replicas)
        .into_par_iter()
        .map(|i| asep_simulate(q, t, queries, &mut replica_rng(seed, i as u64)))
        .collect()
}

/// Spin parameter choice for the six-vertex weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SMode {
    /// `s = q^{−1/2}`: the stochastic six-vertex model.
    InvSqrtQ,
    /// `s = −q^{1/2}`.
    NegSqrtQ,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixVertexParams {
    pub q: f64,
    pub u: f64,
    pub mode: SMode,
}

impl SixVertexParams {
    pub fn s(&self) -> f64 {
        match self.mode {
            SMode::InvSqrtQ => self.q.powf(-0.5),
            SMode::NegSqrtQ => -self.q.sqrt(),
        }
    }

    /// `(P(stay), P(turn))` for input `(i₁, j₁)`: staying keeps `(i₁, j₁)`,
    /// turning moves one path between the vertical and horizontal outputs.
    pub fn vertex_probabilities(&self, i1: usize, j1: usize) -> (f64, f64) {
        let (q, u, s) = (self.q, self.u, self.s());
        let qi = q.powi(i1 as i32);
        let den = 1.0 - s * u;
        if j1 == 0 {
            ((1.0 - qi * s * u) / den, (qi - 1.0) * s * u / den)
        } else {
            ((s * s * qi - s * u) / den, (1.0 - s * s * qi) / den)
        }
    }

    /// Checks every transition that can occur with at most `max_paths`
    /// paths stacked on a vertical edge.
    pub fn validate(&self, max_paths: usize) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) || !(self.u > 0.0) {
            return param(format!("six-vertex model needs q ∈ (0,1), u > 0; got q={}, u={}", self.q, self.u));
        }
        let top = match self.mode {
            SMode::InvSqrtQ => 1,
            SMode::NegSqrtQ => max_paths,
        };
        for i1 in 0..=top {
            for j1 in 0..2 {
                let (stay, turn) = self.vertex_probabilities(i1, j1);
                let names = if j1 == 0 {
                    [format!("({i1},0)→({i1},0)"), format!("({i1},0)→({},1)", i1.wrapping_sub(1) as isize)]
                } else {
                    [format!("({i1},1)→({i1},1)"), format!("({i1},1)→({},0)", i1 + 1)]
                };
                for (p, name) in [stay, turn].into_iter().zip(names) {
                    if !(-1e-15..=1.0 + 1e-15).contains(&p) {
                        return param(format!("transition {name} has probability {p} outside [0,1] (q={}, u={})", self.q, self.u));
                    }
                }
                if ((stay + turn) - 1.0).abs() > 1e-14 {
                    return param(format!("outgoing probabilities at ({i1},{j1}) sum to {}", stay + turn));
                }
            }
        }
        Ok(())
    }
}

/// Heights `h(M, N)` at the `queries`, sampling the quadrant up to column
/// `max M − 1` and row `max N`.
///
/// Vertices are resolved row by row from the left; each vertex depends only
/// on its bottom and left inputs, so this realizes the same law as the
/// anti-diagonal recursion while storing one row of vertical occupations.
pub fn six_vertex_sample(params: &SixVertexParams, queries: &[(usize, usize)], rng: &mut impl Rng) -> Result<Vec<u64>> {
    if queries.iter().any(|&(m, n)| m == 0 || n == 0) {
        return param("six-vertex queries use M, N ≥ 1");
    }
    let m_max = queries.iter().map(|q| q.0).max().unwrap_or(1);
    let n_max = queries.iter().map(|q| q.1).max().unwrap_or(1);
    params.validate(n_max)?;
    let cols = m_max.saturating_sub(1);
    let mut vertical = vec![0usize; cols];
    let mut out = vec![0u64; queries.len()];
    for row in 1..=n_max {
        let mut j = 1usize;
        for v in vertical.iter_mut() {
            let (stay, _) = params.vertex_probabilities(*v, j);
            if rng.gen::<f64>() >= stay {
                if j == 0 {
                    *v -= 1;
                    j = 1;
                } else {
                    *v += 1;
                    j = 0;
                }
            }
        }
        for (k, &(m, n)) in queries.iter().enumerate() {
            if n == row {
                let up: usize = vertical[..m - 1].iter().sum();
                out[k] = (row - up) as u64;
            }
        }
    }
    Ok(out)
}

/// `replicas` independent six-vertex samples.
pub fn six_vertex_heights(params: &SixVertexParams, queries: &[(usize, usize)], seed: u64, replicas: usize) -> Result<Vec<Vec<u64>>> {
    (0..replicas)
        .into_par_iter()
        .map(|i| six_vertex_sample(params, queries, &mut replica_rng(seed, i as u64)))
        .collect()
}

/// Writes `replica,query,height` rows.
pub fn write_heights_csv(out: &mut impl Write, labels: &[String], samples: &[Vec<u64>]) -> std::io::Result<()> {
    writeln!(out, "replica,query,height")?;
    for (r, row) in samples.iter().enumerate() {
        for (label, h) in labels.iter().zip(row) {
            writeln!(out, "{r},{label},{h}")?;
        }
    }
    Ok(())
}
