use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_elements, Order, ShiftSide, Witness};
use crate::error::{Error, Result};
use crate::groups::{GroupDescriptor, GroupElement};
use crate::int::Int;
use crate::sets::SetFamily;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Target size of `B`.
    pub k: usize,
    pub side: ShiftSide,
    pub order: Order,
    /// Only use candidates that lie in the target set.
    pub require_b_in_target: bool,
    /// Number of shifts handled by one worker.
    pub chunk: usize,
    /// Cap on search nodes summed over all workers.
    pub node_budget: u64,
}

impl SearchConfig {
    pub fn new(k: usize, side: ShiftSide, order: Order) -> Self {
        SearchConfig {
            k,
            side,
            order,
            require_b_in_target: false,
            chunk: 16,
            node_budget: 50_000_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub candidates: usize,
    pub shifts: usize,
    pub chunks: usize,
    /// Partial lists `B` that were extended.
    pub nodes: u64,
    /// Shifted products tested for membership.
    pub membership_tests: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub witness: Option<Witness>,
    pub stats: SearchStats,
}

struct Dfs<'a> {
    a: &'a SetFamily,
    g: &'a GroupDescriptor,
    cands: &'a [GroupElement],
    ts: &'a [GroupElement],
    cfg: &'a SearchConfig,
    // Only increasing index sequences need visiting when the pair products
    // do not depend on the order of `B`.
    canonical: bool,
    chosen: Vec<usize>,
    used: Vec<bool>,
    nodes: u64,
    tests: u64,
    cap: u64,
}

impl Dfs<'_> {
    fn run(&mut self, feasible: &[usize]) -> Result<Option<(Vec<usize>, usize)>> {
        if self.chosen.len() == self.cfg.k {
            return Ok(Some((self.chosen.clone(), feasible[0])));
        }
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::budget("witness search nodes", Int::from(self.nodes), self.cap));
        }
        let start = if self.canonical {
            self.chosen.last().map_or(0, |&i| i + 1)
        } else {
            0
        };
        let need = self.cfg.k - self.chosen.len();
        for c in start..self.cands.len() {
            if self.canonical && self.cands.len() - c < need {
                break;
            }
            if self.used[c] {
                continue;
            }
            let earlier: Vec<GroupElement> = self.chosen.iter().map(|&i| self.cands[i].clone()).collect();
            let products = self.cfg.order.new_products(self.g, &earlier, &self.cands[c]);
            let mut next = Vec::with_capacity(feasible.len());
            for &ti in feasible {
                let t = &self.ts[ti];
                let ok = products.iter().all(|p| {
                    self.tests += 1;
                    self.a.contains(&self.cfg.side.apply(self.g, t, p))
                });
                if ok {
                    next.push(ti);
                }
            }
            if next.is_empty() {
                continue;
            }
            self.chosen.push(c);
            self.used[c] = true;
            let found = self.run(&next)?;
            self.used[c] = false;
            self.chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// Depth-first search for `t, B` with `|B| = k` and every required shifted
/// pair product in `a`.
///
/// Candidates are visited in lexicographic order. A partial `B` is kept only
/// while some shift in the current chunk still accepts all of its pairs. The
/// shift window is split into consecutive chunks searched independently; the
/// witness from the first chunk that has one is returned, with the first
/// shift of that chunk that accepts it. The answer does not depend on the
/// number of threads.
pub fn search_witness(
    a: &SetFamily,
    candidates: &[GroupElement],
    shifts: &[GroupElement],
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    let g = a.group();
    if cfg.k == 0 {
        return Err(Error::InvalidInput("witness size k must be positive".into()));
    }
    if cfg.chunk == 0 {
        return Err(Error::InvalidInput("shift chunk size must be positive".into()));
    }
    let mut cands: Vec<GroupElement> = candidates.to_vec();
    cands.sort();
    cands.dedup();
    check_elements(g, &cands)?;
    if cfg.require_b_in_target {
        cands.retain(|x| a.contains(x));
    }
    let mut ts: Vec<GroupElement> = shifts.to_vec();
    ts.sort();
    ts.dedup();
    check_elements(g, &ts)?;

    let canonical = g.is_abelian() || cfg.order == Order::Both;
    let chunks: Vec<&[GroupElement]> = ts.chunks(cfg.chunk).collect();
    // Per chunk: the witness found (choice, shift index), nodes and membership tests.
    type ChunkResult = Result<(Option<(Vec<usize>, usize)>, u64, u64)>;
    let results: Vec<ChunkResult> = chunks
        .par_iter()
        .map(|chunk| {
            let mut dfs = Dfs {
                a,
                g,
                cands: &cands,
                ts: chunk,
                cfg,
                canonical,
                chosen: Vec::new(),
                used: vec![false; cands.len()],
                nodes: 0,
                tests: 0,
                cap: cfg.node_budget,
            };
            let all: Vec<usize> = (0..chunk.len()).collect();
            let found = dfs.run(&all)?;
            Ok((found, dfs.nodes, dfs.tests))
        })
        .collect();

    let mut stats = SearchStats {
        candidates: cands.len(),
        shifts: ts.len(),
        chunks: chunks.len(),
        ..Default::default()
    };
    let mut witness = None;
    for (ci, r) in results.into_iter().enumerate() {
        let (found, nodes, tests) = r?;
        stats.nodes += nodes;
        stats.membership_tests += tests;
        if witness.is_none() {
            if let Some((idx, ti)) = found {
                let b = idx.iter().map(|&i| cands[i].clone()).collect();
                let w = Witness::new(g, chunks[ci][ti].clone(), b, cfg.side, cfg.order)?
                    .with_b_in_target(cfg.require_b_in_target);
                witness = Some(w);
            }
        }
    }
    if stats.nodes > cfg.node_budget {
        return Err(Error::budget("witness search nodes", Int::from(stats.nodes), cfg.node_budget));
    }
    if let Some(w) = witness.as_mut() {
        let report = super::verify_witness(a, w)?;
        debug_assert!(report.passed);
        w.verified_pairs = report.pairs_checked;
    }
    Ok(SearchOutcome { witness, stats })
}
