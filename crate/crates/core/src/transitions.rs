//! Non-degenerate transitions, resonance sets and chains of connectedness.
//!
//! All checks quantify over the levels present in the truncation only; each
//! report carries the truncation size it was computed at.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::GalerkinSystem;

/// Default relative tolerance for comparing spectral gaps.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

fn gaps_equal(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn shares_index(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1
}

fn ordered(j: usize, k: usize) -> (usize, usize) {
    (j.min(k), j.max(k))
}

fn gap(sys: &GalerkinSystem, (l, m): (usize, usize)) -> f64 {
    (sys.eigenvalue(l) - sys.eigenvalue(m)).abs()
}

fn coupled(sys: &GalerkinSystem, (l, m): (usize, usize)) -> bool {
    sys.coupling_entry(l, m).norm() > 0.0
}

/// Unordered level pairs `l <= m` of the truncation.
fn level_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n).flat_map(move |l| (l..=n).map(move |m| (l, m)))
}

fn check_pair(sys: &GalerkinSystem, j: usize, k: usize) -> Result<()> {
    let n = sys.n_levels();
    if j == 0 || k == 0 || j > n || k > n {
        return Err(Error::validation(format!("pair ({j}, {k}) outside levels 1..={n}")));
    }
    if j == k {
        return Err(Error::validation(format!(
            "a transition needs two distinct levels, got ({j}, {k})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRecord {
    /// Ordered so that `pair.0 < pair.1`.
    pub pair: (usize, usize),
    pub gap: f64,
    pub coupled: bool,
    pub coupling_modulus: f64,
    /// Coupled pairs other than `pair` with the same gap that touch `pair`.
    pub degenerate_conflicts: Vec<(usize, usize)>,
    pub nondegenerate: bool,
    /// Number of levels the check ranged over.
    pub truncation: usize,
}

pub fn is_nondegenerate(sys: &GalerkinSystem, j: usize, k: usize, gap_tol: f64) -> Result<TransitionRecord> {
    check_pair(sys, j, k)?;
    let pair = ordered(j, k);
    let g = gap(sys, pair);
    let is_coupled = coupled(sys, pair);
    let degenerate_conflicts: Vec<_> = level_pairs(sys.n_levels())
        .filter(|&lm| lm != pair)
        .filter(|&lm| shares_index(lm, pair) && coupled(sys, lm) && gaps_equal(gap(sys, lm), g, gap_tol))
        .collect();
    Ok(TransitionRecord {
        pair,
        gap: g,
        coupled: is_coupled,
        coupling_modulus: sys.coupling_entry(pair.0, pair.1).norm(),
        nondegenerate: is_coupled && degenerate_conflicts.is_empty(),
        degenerate_conflicts,
        truncation: sys.n_levels(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonantPair {
    pub pair: (usize, usize),
    pub gap: f64,
    /// Integer `q >= 2` with `gap = q · |λ_j - λ_k|`.
    pub multiple: u64,
}

/// Coupled pairs touching `(j, k)` whose gap is an integer multiple `>= 2` of its gap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceSet {
    pub transition: (usize, usize),
    pub members: Vec<ResonantPair>,
    pub truncation: usize,
}

impl ResonanceSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.members.iter().map(|m| m.pair).collect()
    }
}

pub fn resonance_set(sys: &GalerkinSystem, j: usize, k: usize, gap_tol: f64) -> Result<ResonanceSet> {
    let record = is_nondegenerate(sys, j, k, gap_tol)?;
    if !record.nondegenerate {
        return Err(Error::validation(format!(
            "transition ({j}, {k}) is degenerate (coupled: {}, conflicts: {:?})",
            record.coupled, record.degenerate_conflicts
        )));
    }
    let base = record.gap;
    if base == 0.0 {
        return Err(Error::validation(format!("transition ({j}, {k}) has zero gap")));
    }
    let members = level_pairs(sys.n_levels())
        .filter(|&lm| shares_index(lm, record.pair) && coupled(sys, lm))
        .filter_map(|lm| {
            let g = gap(sys, lm);
            let q = (g / base).round();
            (q >= 2.0 && gaps_equal(g, q * base, gap_tol)).then_some(ResonantPair {
                pair: lm,
                gap: g,
                multiple: q as u64,
            })
        })
        .collect();
    Ok(ResonanceSet {
        transition: (j, k),
        members,
        truncation: sys.n_levels(),
    })
}

/// Graph of non-degenerate transitions on the levels of a truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub truncation: usize,
    pub exists: bool,
    pub edges: Vec<(usize, usize)>,
    /// Connected components, each sorted, in order of smallest level.
    pub components: Vec<Vec<usize>>,
}

impl ChainReport {
    fn neighbours(&self, level: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == level {
                Some(b)
            } else if b == level {
                Some(a)
            } else {
                None
            }
        })
    }

    /// Shortest edge sequence from `from` to `to`, `None` when they are not connected.
    pub fn path_between(&self, from: usize, to: usize) -> Option<Vec<(usize, usize)>> {
        let n = self.truncation;
        if from == 0 || to == 0 || from > n || to > n {
            return None;
        }
        let mut parent = vec![0usize; n + 1];
        let mut seen = vec![false; n + 1];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(level) = queue.pop_front() {
            if level == to {
                let mut path = Vec::new();
                let mut cur = to;
                while cur != from {
                    let prev = parent[cur];
                    path.push(ordered(prev, cur));
                    cur = prev;
                }
                path.reverse();
                return Some(path);
            }
            for next in self.neighbours(level).collect::<Vec<_>>() {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = level;
                    queue.push_back(next);
                }
            }
        }
        None
    }
}

pub fn chain_of_connectedness(sys: &GalerkinSystem, gap_tol: f64) -> ChainReport {
    let n = sys.n_levels();
    let edges: Vec<_> = level_pairs(n)
        .filter(|&(l, m)| l < m)
        .filter(|&(l, m)| {
            is_nondegenerate(sys, l, m, gap_tol)
                .map(|r| r.nondegenerate)
                .unwrap_or(false)
        })
        .collect();
    let mut report = ChainReport {
        truncation: n,
        exists: false,
        edges,
        components: Vec::new(),
    };
    let mut assigned = vec![false; n + 1];
    for start in 1..=n {
        if assigned[start] {
            continue;
        }
        let mut component = vec![start];
        assigned[start] = true;
        let mut i = 0;
        while i < component.len() {
            let level = component[i];
            for next in report.neighbours(level).collect::<Vec<_>>() {
                if !assigned[next] {
                    assigned[next] = true;
                    component.push(next);
                }
            }
            i += 1;
        }
        component.sort_unstable();
        report.components.push(component);
    }
    report.exists = report.components.len() == 1;
    report
}
