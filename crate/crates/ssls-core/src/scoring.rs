//! Relevance and diversity scores and the set score `F(S)`.
//!
//! Per-location quantities:
//! - social relevance `S_sc(l)`: fraction of scoring friends with an exact
//!   check-in at `l`;
//! - spatial relevance `S_sp(l) = 1 - (sum_v mindist(l, L_v)) / (d_m(l)·|V_u|)`;
//! - blended relevance `R_ss(l) = alpha·S_sc + (1-alpha)·S_sp`.
//!
//! Pairwise quantities:
//! - social diversity `D_sc(l_i, l_j)`: Jaccard distance of visitor sets;
//! - spatial diversity `D_sp(l_i, l_j) = dist(l_i, l_j) / maxD`;
//! - blended diversity `D_ss = alpha·D_sc + (1-alpha)·D_sp`.
//!
//! For a set `S`, each member contributes its minimum blended diversity to
//! the rest of the set, and `F(S) = omega·sum R_ss + (1-omega)·sum min-div`.
//! A singleton set has diversity 0.

use crate::context::QueryContext;
use crate::{LocationId, Result, SslsError};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

/// Above this candidate count the full pairwise diversity matrix is not
/// materialized and pairs are computed on demand.
const PAIR_MATRIX_LIMIT: usize = 2048;

/// Precomputed per-location relevance plus pairwise-diversity access for one
/// `(context, alpha)` pair. Construction is single-threaded; afterwards all
/// reads are lock-free and deterministic.
pub struct ScoreTable<'a> {
    ctx: &'a QueryContext,
    alpha: f64,
    social: Vec<f64>,
    spatial: Vec<f64>,
    relevance: Vec<f64>,
    /// Candidate indices sorted by relevance descending, ties by descending
    /// location id.
    order: Vec<usize>,
    pair: Option<Vec<f64>>,
    pair_calls: AtomicU64,
}

/// Score breakdown of one location set.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SetScore {
    /// Members in ascending location-id order.
    pub members: Vec<LocationId>,
    pub relevance_sum: f64,
    pub diversity_sum: f64,
    /// Minimum blended diversity of each member to the rest of the set;
    /// 0 for a singleton.
    pub per_member_min_div: BTreeMap<LocationId, f64>,
    pub total: f64,
}

impl<'a> ScoreTable<'a> {
    pub fn build(ctx: &'a QueryContext, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SslsError::Param(format!("alpha {alpha} outside [0,1]")));
        }
        let n = ctx.len();
        let nf = ctx.friends().len() as f64;
        let mut social = Vec::with_capacity(n);
        let mut spatial = Vec::with_capacity(n);
        for i in 0..n {
            social.push(ctx.visitors(i).len() as f64 / nf);
            let dm = ctx.d_m(i);
            let sp = if dm == 0.0 {
                // every friend has a check-in exactly here
                1.0
            } else {
                let sum: f64 = (0..ctx.friends().len()).map(|f| ctx.mindist(i, f)).sum();
                1.0 - sum / (dm * nf)
            };
            spatial.push(sp);
        }
        let relevance: Vec<f64> = (0..n)
            .map(|i| alpha * social[i] + (1.0 - alpha) * spatial[i])
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            relevance[b]
                .total_cmp(&relevance[a])
                .then_with(|| ctx.candidates()[b].cmp(&ctx.candidates()[a]))
        });
        let pair = if n <= PAIR_MATRIX_LIMIT {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = pair_diversity_raw(ctx, alpha, i, j);
                    m[i * n + j] = d;
                    m[j * n + i] = d;
                }
            }
            Some(m)
        } else {
            None
        };
        Ok(ScoreTable {
            ctx,
            alpha,
            social,
            spatial,
            relevance,
            order,
            pair,
            pair_calls: AtomicU64::new(0),
        })
    }

    pub fn context(&self) -> &QueryContext {
        self.ctx
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.relevance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevance.is_empty()
    }

    /// Social relevance of candidate index `i`.
    pub fn social_relevance(&self, i: usize) -> f64 {
        self.social[i]
    }

    /// Spatial relevance of candidate index `i`.
    pub fn spatial_relevance(&self, i: usize) -> f64 {
        self.spatial[i]
    }

    /// Blended relevance of candidate index `i`.
    pub fn relevance(&self, i: usize) -> f64 {
        self.relevance[i]
    }

    /// Candidate indices in relevance-descending order (ties broken toward
    /// the larger location id).
    pub fn relevance_order(&self) -> &[usize] {
        &self.order
    }

    /// Social diversity (visitor-set Jaccard distance) between candidates.
    /// Two empty visitor sets yield 0.
    pub fn social_diversity(&self, i: usize, j: usize) -> f64 {
        social_diversity_raw(self.ctx, i, j)
    }

    /// Spatial diversity (distance normalized by maxD) between candidates.
    pub fn spatial_diversity(&self, i: usize, j: usize) -> f64 {
        spatial_diversity_raw(self.ctx, i, j)
    }

    /// Blended pairwise diversity. Symmetric; zero on the diagonal.
    pub fn pair_diversity(&self, i: usize, j: usize) -> f64 {
        self.pair_calls.fetch_add(1, Ordering::Relaxed);
        if i == j {
            return 0.0;
        }
        match &self.pair {
            Some(m) => m[i * self.len() + j],
            None => pair_diversity_raw(self.ctx, self.alpha, i, j),
        }
    }

    /// Number of pairwise-diversity lookups served so far.
    pub fn pair_diversity_calls(&self) -> u64 {
        self.pair_calls.load(Ordering::Relaxed)
    }

    /// Minimum blended diversity from candidate `i` to a non-empty set of
    /// candidate indices.
    pub fn div_to_set(&self, i: usize, set: &[usize]) -> Result<f64> {
        if set.is_empty() {
            return Err(SslsError::Domain("div_to_set over an empty set".into()));
        }
        Ok(set
            .iter()
            .map(|&j| self.pair_diversity(i, j))
            .fold(f64::INFINITY, f64::min))
    }

    /// Score a set of candidate indices under relevance weight `omega`.
    pub fn set_score(&self, set: &[usize], omega: f64) -> Result<SetScore> {
        if set.is_empty() {
            return Err(SslsError::Domain("set_score of the empty set".into()));
        }
        let relevance_sum: f64 = set.iter().map(|&i| self.relevance[i]).sum();
        let mut per_member = BTreeMap::new();
        let mut diversity_sum = 0.0;
        for &i in set {
            let min_div = if set.len() == 1 {
                0.0
            } else {
                set.iter()
                    .filter(|&&j| j != i)
                    .map(|&j| self.pair_diversity(i, j))
                    .fold(f64::INFINITY, f64::min)
            };
            diversity_sum += min_div;
            per_member.insert(self.ctx.candidates()[i], min_div);
        }
        let mut members: Vec<LocationId> = set.iter().map(|&i| self.ctx.candidates()[i]).collect();
        members.sort_unstable();
        Ok(SetScore {
            members,
            relevance_sum,
            diversity_sum,
            per_member_min_div: per_member,
            total: omega * relevance_sum + (1.0 - omega) * diversity_sum,
        })
    }

    /// Incremental diversity update for appending `l_new` to a set.
    ///
    /// `members`/`mins` describe the current set: for each member its
    /// minimum diversity to the rest, with `f64::INFINITY` standing in for
    /// the undefined minimum of a singleton. Returns `(d_hat, d_cap,
    /// new_mins)` where `d_hat` is the diversity of `l_new` to the set,
    /// `d_cap` the updated aggregate of the old members, and `new_mins` the
    /// per-member minima of the extended set (old members first, then
    /// `l_new`). `d_hat + d_cap` equals the extended set's diversity sum.
    pub fn updated_set_diversity(
        &self,
        members: &[usize],
        mins: &[f64],
        l_new: usize,
    ) -> Result<(f64, f64, Vec<f64>)> {
        if members.is_empty() {
            return Err(SslsError::Domain(
                "updated_set_diversity over an empty set".into(),
            ));
        }
        debug_assert_eq!(members.len(), mins.len());
        let mut new_mins = Vec::with_capacity(members.len() + 1);
        let mut d_hat = f64::INFINITY;
        let mut d_cap = 0.0;
        for (&m, &old) in members.iter().zip(mins) {
            let d = self.pair_diversity(m, l_new);
            d_hat = d_hat.min(d);
            let updated = old.min(d);
            d_cap += updated;
            new_mins.push(updated);
        }
        new_mins.push(d_hat);
        Ok((d_hat, d_cap, new_mins))
    }

    /// `F(S)` for member minima carrying the `INFINITY` singleton sentinel.
    pub(crate) fn f_from_parts(&self, rel_sum: f64, mins: &[f64], omega: f64) -> f64 {
        let div: f64 = mins.iter().copied().filter(|d| d.is_finite()).sum();
        omega * rel_sum + (1.0 - omega) * div
    }

    /// Resolve candidate indices for location ids.
    pub fn indices_of(&self, locations: &[LocationId]) -> Result<Vec<usize>> {
        locations
            .iter()
            .map(|&l| {
                self.ctx
                    .candidate_index(l)
                    .ok_or_else(|| SslsError::Domain(format!("{l} is not a candidate")))
            })
            .collect()
    }
}

fn social_diversity_raw(ctx: &QueryContext, i: usize, j: usize) -> f64 {
    let a = ctx.visitors(i);
    let b = ctx.visitors(j);
    let union = a.union(b).count();
    if union == 0 {
        // no diversity evidence from two friendless locations
        return 0.0;
    }
    1.0 - a.intersection(b).count() as f64 / union as f64
}

fn spatial_diversity_raw(ctx: &QueryContext, i: usize, j: usize) -> f64 {
    let maxd = ctx.max_d();
    if maxd == 0.0 {
        return 0.0;
    }
    ctx.distance(ctx.candidates()[i], ctx.candidates()[j]) / maxd
}

fn pair_diversity_raw(ctx: &QueryContext, alpha: f64, i: usize, j: usize) -> f64 {
    if i == j {
        return 0.0;
    }
    alpha * social_diversity_raw(ctx, i, j) + (1.0 - alpha) * spatial_diversity_raw(ctx, i, j)
}
