//! Relevance-bound solver (`Exact+`) and its two-root `Fast` variant.
//!
//! Roots are visited in relevance order. Each root iteration greedily grows
//! a set to size k, at every step restricting the candidates to the
//! *potential locations* whose relevance clears the lower bound derived
//! from the current reference location, and picking the one that maximizes
//! the extended set score. Root iterations that provably cannot beat the
//! incumbent are cut short by the answer-set score bound.

use super::{check_k, finish, top_m_relevance, top_m_sum, Algorithm, SelectionResult, Telemetry};
use crate::context::Params;
use crate::scoring::ScoreTable;
use crate::{Result, SslsError};
use std::time::Instant;

/// Lower bound on relevance below which a pool location cannot out-score
/// the reference extension. `members`/`mins` describe `S_I`; `l_ref` must
/// be the highest-relevance member of `remaining`.
pub fn relevance_lower_bound(
    table: &ScoreTable<'_>,
    members: &[usize],
    mins: &[f64],
    l_ref: usize,
    remaining: &[usize],
    omega: f64,
) -> f64 {
    let ratio = (1.0 - omega) / omega;
    let d_max = remaining
        .iter()
        .map(|&l| table.div_to_set(l, members).expect("members non-empty"))
        .fold(f64::NEG_INFINITY, f64::max);
    if members.len() == 1 {
        let d_ref = table.pair_diversity(l_ref, members[0]);
        table.relevance(l_ref) + ratio * (d_ref - d_max)
    } else {
        let div_sum: f64 = mins.iter().copied().filter(|d| d.is_finite()).sum();
        let (d_hat, d_cap, _) = table
            .updated_set_diversity(members, mins, l_ref)
            .expect("members non-empty");
        let growth = (d_hat + d_cap) - div_sum;
        table.relevance(l_ref) + ratio * (growth - d_max)
    }
}

/// Pool locations whose relevance clears the bound. The reference location
/// always qualifies.
pub fn potential_locations(
    table: &ScoreTable<'_>,
    remaining: &[usize],
    r_lower: f64,
) -> Vec<usize> {
    let v_p: Vec<usize> = remaining
        .iter()
        .copied()
        .filter(|&l| table.relevance(l) >= r_lower)
        .collect();
    assert!(
        !v_p.is_empty(),
        "potential set cannot be empty: the reference location clears its own bound"
    );
    v_p
}

/// Answer-set score bound: true when no k-completion of `S_I` from
/// `remaining` can beat `best_f`. Sound only for partial sets with two or
/// more members; singleton sets under-count the second side of their first
/// pair and must not be terminated.
pub fn advanced_termination(
    table: &ScoreTable<'_>,
    members: &[usize],
    node_f: f64,
    remaining: &[usize],
    k: usize,
    omega: f64,
    best_f: Option<f64>,
) -> bool {
    let best_f = match best_f {
        Some(f) => f,
        None => return false,
    };
    if members.len() < 2 || members.len() >= k {
        return false;
    }
    let m = k - members.len();
    let r_max_sum = top_m_relevance(table, remaining, m);
    let d_vals: Vec<f64> = remaining
        .iter()
        .map(|&l| table.div_to_set(l, members).expect("members non-empty"))
        .collect();
    let d_max_sum = top_m_sum(&d_vals, m);
    let f_max = node_f + omega * r_max_sum + (1.0 - omega) * d_max_sum;
    best_f > f_max
}

fn run_roots(
    table: &ScoreTable<'_>,
    params: &Params,
    algorithm: Algorithm,
    root_limit: Option<usize>,
) -> Result<SelectionResult> {
    params.validate()?;
    check_k(table, params.k)?;
    let start = Instant::now();
    let pair_calls_before = table.pair_diversity_calls();
    let k = params.k;
    let omega = params.omega;
    let order = table.relevance_order();
    let mut telemetry = Telemetry::default();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for (pos, &root) in order.iter().enumerate() {
        if let Some(limit) = root_limit {
            if pos >= limit {
                break;
            }
        }
        let mut remaining: Vec<usize> = order[pos + 1..].to_vec();
        if 1 + remaining.len() < k {
            break; // later roots have even smaller pools
        }
        telemetry.roots_total += 1;
        let mut members = vec![root];
        let mut mins = vec![f64::INFINITY];
        let mut rel_sum = table.relevance(root);
        let mut node_f = omega * rel_sum;
        let mut terminated = false;
        while members.len() < k && members.len() + remaining.len() >= k {
            if advanced_termination(
                table,
                &members,
                node_f,
                &remaining,
                k,
                omega,
                best.as_ref().map(|(_, f)| *f),
            ) {
                telemetry.roots_terminated += 1;
                terminated = true;
                break;
            }
            let l_ref = remaining[0];
            let r_lower = relevance_lower_bound(table, &members, &mins, l_ref, &remaining, omega);
            let v_p = potential_locations(table, &remaining, r_lower);
            // best extension: max F, ties toward higher relevance then
            // lower location id
            let mut chosen: Option<(usize, f64, Vec<f64>)> = None;
            for &l in &v_p {
                let (_, _, new_mins) = table
                    .updated_set_diversity(&members, &mins, l)
                    .expect("members non-empty");
                let f_ext = table.f_from_parts(rel_sum + table.relevance(l), &new_mins, omega);
                let better = match &chosen {
                    None => true,
                    Some((cur, cur_f, _)) => match f_ext.total_cmp(cur_f) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Less => false,
                        std::cmp::Ordering::Equal => {
                            match table.relevance(l).total_cmp(&table.relevance(*cur)) {
                                std::cmp::Ordering::Greater => true,
                                std::cmp::Ordering::Less => false,
                                std::cmp::Ordering::Equal => {
                                    table.context().candidates()[l]
                                        < table.context().candidates()[*cur]
                                }
                            }
                        }
                    },
                };
                if better {
                    chosen = Some((l, f_ext, new_mins));
                }
            }
            let (l_top, f_ext, new_mins) = chosen.expect("potential set is non-empty");
            telemetry.greedy_steps += 1;
            members.push(l_top);
            mins = new_mins;
            rel_sum += table.relevance(l_top);
            node_f = f_ext;
            remaining.retain(|&l| l != l_top);
        }
        if !terminated && members.len() == k && best.as_ref().map_or(true, |(_, f)| node_f > *f) {
            best = Some((members, node_f));
        }
    }
    let (set, _) = best.ok_or_else(|| SslsError::Domain("no feasible k-set".into()))?;
    telemetry.pair_diversity_evals = table.pair_diversity_calls() - pair_calls_before;
    telemetry.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    finish(table, algorithm, &set, omega, telemetry)
}

/// Relevance-bound solve over all roots.
pub fn solve_exact_plus(table: &ScoreTable<'_>, params: &Params) -> Result<SelectionResult> {
    run_roots(table, params, Algorithm::ExactPlus, None)
}

/// Fast variant: the first two root iterations only.
pub fn solve_fast_approx(table: &ScoreTable<'_>, params: &Params) -> Result<SelectionResult> {
    run_roots(table, params, Algorithm::Fast, Some(2))
}
