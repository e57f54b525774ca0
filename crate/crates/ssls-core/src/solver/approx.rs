//! Approximate solver: the exact skeleton with a relaxed per-location
//! diversity bound.
//!
//! Once an incumbent exists and the partial set has at least two members,
//! the updated aggregate diversity is over-approximated by the set's own
//! diversity, which turns the completion bound into a threshold on each
//! pool location's diversity to the set:
//!
//! ```text
//! d_lower = (F(S_b) - F(S_I) - omega·top_rel_mass) / ((1-omega)·(k-|S_I|))
//! ```
//!
//! A branch terminates when every pool location falls at or below
//! `d_lower`; otherwise exactly those locations are dropped. This needs one
//! diversity evaluation per pool location instead of one aggregate update
//! per (member, location) pair, trading exactness for speed.

use super::exact::prune_pre_feasible;
use super::{
    check_k, finish, relevance_prefix, run_bnb, top_m_relevance, Algorithm, Node, PruneRule,
    SelectionResult, Telemetry,
};
use crate::context::Params;
use crate::scoring::ScoreTable;
use crate::Result;

/// The relaxed per-location diversity bound.
pub fn d_lower_bound(
    table: &ScoreTable<'_>,
    node_f: f64,
    remaining: &[usize],
    k: usize,
    set_len: usize,
    omega: f64,
    best_f: f64,
) -> f64 {
    let m = k - set_len;
    let top_rel = top_m_relevance(table, remaining, m);
    (best_f - node_f - omega * top_rel) / ((1.0 - omega) * m as f64)
}

/// Outcome of one pruning pass.
#[derive(Debug, PartialEq, Eq)]
pub enum PruneOutcome {
    Terminate,
    Kept(usize),
}

/// Apply the relaxed bound: terminate the branch when no pool location
/// clears it, otherwise drop the ones that do not.
pub fn prune_or_terminate(
    table: &ScoreTable<'_>,
    members: &[usize],
    node_f: f64,
    remaining: &mut Vec<usize>,
    k: usize,
    omega: f64,
    best_f: f64,
    d_hat_evals: &mut u64,
) -> PruneOutcome {
    let bound = d_lower_bound(table, node_f, remaining, k, members.len(), omega, best_f);
    *d_hat_evals += remaining.len() as u64;
    let d_vals: Vec<f64> = remaining
        .iter()
        .map(|&l| table.div_to_set(l, members).expect("members non-empty"))
        .collect();
    if d_vals.iter().all(|&d| d <= bound) {
        return PruneOutcome::Terminate;
    }
    let mut keep = d_vals.iter().map(|&d| d > bound);
    remaining.retain(|_| keep.next().unwrap());
    PruneOutcome::Kept(remaining.len())
}

struct ApproxRule;

impl PruneRule for ApproxRule {
    fn prune(
        &self,
        table: &ScoreTable<'_>,
        node: &Node,
        remaining: &mut Vec<usize>,
        k: usize,
        omega: f64,
        best_f: Option<f64>,
        telemetry: &mut Telemetry,
    ) -> bool {
        // The relaxed bound is derived for partial sets with two or more
        // members; smaller sets fall back to the eligibility pruning, which
        // never fires on singletons.
        match best_f {
            Some(fb) if node.members.len() >= 2 => {
                let before = remaining.len();
                match prune_or_terminate(
                    table,
                    &node.members,
                    node.f,
                    remaining,
                    k,
                    omega,
                    fb,
                    &mut telemetry.d_hat_evals,
                ) {
                    PruneOutcome::Terminate => {
                        telemetry.pruned_property2 += remaining.len() as u64;
                        true
                    }
                    PruneOutcome::Kept(after) => {
                        telemetry.pruned_property2 += (before - after) as u64;
                        false
                    }
                }
            }
            _ => {
                telemetry.pruned_property1 +=
                    prune_pre_feasible(table, &node.members, &node.mins, remaining, omega);
                false
            }
        }
    }
}

/// Approximate top-k solve. Deterministic; not guaranteed optimal.
pub fn solve_approx(table: &ScoreTable<'_>, params: &Params) -> Result<SelectionResult> {
    params.validate()?;
    check_k(table, params.k)?;
    let outcome = run_bnb(table, params.k, params.omega, &ApproxRule, None);
    let mut telemetry = outcome.telemetry;
    let set = match outcome.best {
        Some((set, _)) => set,
        None => {
            telemetry.exhausted = true;
            relevance_prefix(table, params.k)
        }
    };
    finish(table, Algorithm::Approx, &set, params.omega, telemetry)
}
