//! Query solvers: exact branch-and-bound, its relaxed approximate variant,
//! the relevance-bound `Exact+` and the two-root `Fast` variant.

pub mod approx;
pub mod exact;
pub mod exact_plus;

use crate::scoring::{ScoreTable, SetScore};
use crate::{LocationId, Result, SslsError};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

/// Which solver produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Exact,
    Approx,
    ExactPlus,
    Fast,
    Brute,
    Gmc,
    Gne,
    Sos,
}

impl std::str::FromStr for Algorithm {
    type Err = SslsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "approx" => Ok(Self::Approx),
            "exactplus" => Ok(Self::ExactPlus),
            "fast" => Ok(Self::Fast),
            "brute" => Ok(Self::Brute),
            "gmc" => Ok(Self::Gmc),
            "gne" => Ok(Self::Gne),
            "sos" => Ok(Self::Sos),
            other => Err(SslsError::Param(format!("unknown algorithm {other:?}"))),
        }
    }
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Approx => "approx",
            Self::ExactPlus => "exactplus",
            Self::Fast => "fast",
            Self::Brute => "brute",
            Self::Gmc => "gmc",
            Self::Gne => "gne",
            Self::Sos => "sos",
        }
    }
}

/// Solver counters. Fields irrelevant to a given algorithm stay zero.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct Telemetry {
    pub states_expanded: u64,
    pub pruned_property1: u64,
    pub pruned_property2: u64,
    pub terminated_branches: u64,
    pub d_hat_evals: u64,
    pub roots_total: u64,
    pub roots_terminated: u64,
    pub greedy_steps: u64,
    /// Pairwise-diversity lookups performed during the solve.
    pub pair_diversity_evals: u64,
    /// Set when a node budget stopped the search early.
    pub exhausted: bool,
    /// Set by adaptive-SOS when the threshold constraint had to be relaxed.
    pub relaxed: bool,
    /// Wall-clock milliseconds. Excluded from deterministic output surfaces.
    #[serde(skip)]
    pub wall_ms: f64,
}

/// A solved query: the chosen locations with their score breakdown.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SelectionResult {
    pub algorithm: Algorithm,
    pub members: Vec<LocationId>,
    pub score: SetScore,
    pub telemetry: Telemetry,
}

/// Search node: partial set `S_I` plus the remaining pool `S_R` in
/// relevance-descending order. `mins` carries each member's minimum
/// diversity to the rest of `S_I`, with `INFINITY` for a singleton.
#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub members: Vec<usize>,
    pub mins: Vec<f64>,
    pub rel_sum: f64,
    pub remaining: Vec<usize>,
    pub f: f64,
}

impl Node {
    fn root(order: Vec<usize>) -> Self {
        Node {
            members: Vec::new(),
            mins: Vec::new(),
            rel_sum: 0.0,
            remaining: order,
            f: 0.0,
        }
    }

    #[allow(dead_code)]
    pub fn div_sum(&self) -> f64 {
        self.mins.iter().copied().filter(|d| d.is_finite()).sum()
    }
}

struct HeapEntry {
    node: Node,
    seq: u64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // highest F first, then deeper partial sets, then FIFO
        self.node
            .f
            .total_cmp(&other.node.f)
            .then_with(|| self.node.members.len().cmp(&other.node.members.len()))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// How the engine trims `S_R` when a child node is formed.
pub(crate) trait PruneRule {
    /// Trim `remaining` in place with respect to the freshly formed node.
    /// Returning `true` kills the whole branch (advanced termination).
    #[allow(clippy::too_many_arguments)]
    fn prune(
        &self,
        table: &ScoreTable<'_>,
        node: &Node,
        remaining: &mut Vec<usize>,
        k: usize,
        omega: f64,
        best_f: Option<f64>,
        telemetry: &mut Telemetry,
    ) -> bool;
}

/// Sum of `min(current_min, D(member, l))` over the members: the updated
/// aggregate diversity of the settled set if `l` joined it.
pub(crate) fn d_hat_cap(table: &ScoreTable<'_>, members: &[usize], mins: &[f64], l: usize) -> f64 {
    members
        .iter()
        .zip(mins)
        .map(|(&m, &mn)| mn.min(table.pair_diversity(m, l)))
        .sum()
}

/// Sum of the largest `m` values in `vals`.
pub fn top_m_sum(vals: &[f64], m: usize) -> f64 {
    let mut v = vals.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter().take(m).sum()
}

/// Sum of the first `m` relevances of a relevance-sorted pool.
pub fn top_m_relevance(table: &ScoreTable<'_>, pool: &[usize], m: usize) -> f64 {
    pool.iter().take(m).map(|&l| table.relevance(l)).sum()
}

pub(crate) struct BnbOutcome {
    pub best: Option<(Vec<usize>, f64)>,
    pub telemetry: Telemetry,
}

/// Best-first branch-and-bound over include/exclude decisions.
///
/// Every popped node branches on the head of its pool: the exclude side is
/// requeued unchanged, the include side becomes a new node whose pool is
/// trimmed by the supplied prune rule. Incumbents are replaced only on a
/// strict score improvement, so among equal-scoring optima the first one
/// reached in this fixed exploration order is kept.
pub(crate) fn run_bnb<P: PruneRule>(
    table: &ScoreTable<'_>,
    k: usize,
    omega: f64,
    rule: &P,
    max_states: Option<u64>,
) -> BnbOutcome {
    let start = Instant::now();
    let pair_calls_before = table.pair_diversity_calls();
    let mut telemetry = Telemetry::default();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(HeapEntry {
        node: Node::root(table.relevance_order().to_vec()),
        seq,
    });
    let mut best: Option<(Vec<usize>, f64)> = None;
    while let Some(HeapEntry { node, .. }) = heap.pop() {
        if node.members.len() + node.remaining.len() < k || node.remaining.is_empty() {
            continue;
        }
        if let Some(cap) = max_states {
            if telemetry.states_expanded >= cap {
                telemetry.exhausted = true;
                break;
            }
        }
        let l = node.remaining[0];
        // exclude-l sibling keeps everything else reachable
        if node.members.len() + node.remaining.len() > k {
            seq += 1;
            heap.push(HeapEntry {
                node: Node {
                    members: node.members.clone(),
                    mins: node.mins.clone(),
                    rel_sum: node.rel_sum,
                    remaining: node.remaining[1..].to_vec(),
                    f: node.f,
                },
                seq,
            });
        }
        // include-l child
        telemetry.states_expanded += 1;
        let (new_mins, rel_sum) = if node.members.is_empty() {
            (vec![f64::INFINITY], table.relevance(l))
        } else {
            let (_, _, mins) = table
                .updated_set_diversity(&node.members, &node.mins, l)
                .expect("members non-empty");
            (mins, node.rel_sum + table.relevance(l))
        };
        let mut members = node.members.clone();
        members.push(l);
        let f = table.f_from_parts(rel_sum, &new_mins, omega);
        if members.len() == k {
            if best.as_ref().map_or(true, |(_, bf)| f > *bf) {
                best = Some((members, f));
            }
            continue;
        }
        let mut remaining = node.remaining[1..].to_vec();
        let child = Node {
            members,
            mins: new_mins,
            rel_sum,
            remaining: Vec::new(),
            f,
        };
        let terminated = rule.prune(
            table,
            &child,
            &mut remaining,
            k,
            omega,
            best.as_ref().map(|(_, bf)| *bf),
            &mut telemetry,
        );
        if terminated {
            telemetry.terminated_branches += 1;
            continue;
        }
        if child.members.len() + remaining.len() >= k {
            seq += 1;
            heap.push(HeapEntry {
                node: Node { remaining, ..child },
                seq,
            });
        }
    }
    telemetry.pair_diversity_evals = table.pair_diversity_calls() - pair_calls_before;
    telemetry.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    BnbOutcome { best, telemetry }
}

/// Package a solved index set as a [`SelectionResult`].
pub(crate) fn finish(
    table: &ScoreTable<'_>,
    algorithm: Algorithm,
    set: &[usize],
    omega: f64,
    telemetry: Telemetry,
) -> Result<SelectionResult> {
    let score = table.set_score(set, omega)?;
    Ok(SelectionResult {
        algorithm,
        members: score.members.clone(),
        score,
        telemetry,
    })
}

/// Fallback when a node budget exhausts the search before any feasible set
/// was completed: the top-k by relevance.
pub(crate) fn relevance_prefix(table: &ScoreTable<'_>, k: usize) -> Vec<usize> {
    table.relevance_order()[..k].to_vec()
}

pub(crate) fn check_k(table: &ScoreTable<'_>, k: usize) -> Result<()> {
    if k == 0 || k > table.len() {
        return Err(SslsError::Domain(format!(
            "k = {k} outside 1..={} candidates",
            table.len()
        )));
    }
    Ok(())
}
