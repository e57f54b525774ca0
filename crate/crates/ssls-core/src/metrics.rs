//! Evaluation metrics: precision against the exact answer, mean of minimum
//! diversity, social coverage within a radius, and social entropy of the
//! visitor distribution.

use crate::context::QueryContext;
use crate::{LocationId, Result, SslsError};

/// Distance notion used by [`mmd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmdMode {
    /// Metric distance between locations.
    Spatial,
    /// Blended socio-spatial diversity: visitor-set Jaccard distance
    /// (over all friend locations) blended with metric distance normalized
    /// by the context's maxD.
    SocioSpatial,
}

/// Fraction of shared locations between a result and the exact answer.
pub fn precision(s: &[LocationId], s_exact: &[LocationId]) -> Result<f64> {
    if s.len() != s_exact.len() || s.is_empty() {
        return Err(SslsError::Domain(format!(
            "precision needs two non-empty sets of equal size, got {} and {}",
            s.len(),
            s_exact.len()
        )));
    }
    let common = s.iter().filter(|l| s_exact.contains(l)).count();
    Ok(common as f64 / s.len() as f64)
}

fn socio_spatial_distance(ctx: &QueryContext, alpha: f64, a: LocationId, b: LocationId) -> f64 {
    let empty = std::collections::BTreeSet::new();
    let va = ctx.visitors_of_location(a).unwrap_or(&empty);
    let vb = ctx.visitors_of_location(b).unwrap_or(&empty);
    let union = va.union(vb).count();
    let d_sc = if union == 0 {
        0.0
    } else {
        1.0 - va.intersection(vb).count() as f64 / union as f64
    };
    let d_sp = if ctx.max_d() == 0.0 {
        0.0
    } else {
        ctx.distance(a, b) / ctx.max_d()
    };
    alpha * d_sc + (1.0 - alpha) * d_sp
}

/// Mean over friends of the minimum distance between any of the friend's
/// check-in locations and the selected set.
pub fn mmd(ctx: &QueryContext, s: &[LocationId], mode: MmdMode, alpha: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(SslsError::Domain("mmd of an empty selection".into()));
    }
    let mut total = 0.0;
    for &v in ctx.friends() {
        let mut best = f64::INFINITY;
        for &lv in ctx.friend_locations(v) {
            for &sel in s {
                let d = match mode {
                    MmdMode::Spatial => ctx.distance(lv, sel),
                    MmdMode::SocioSpatial => socio_spatial_distance(ctx, alpha, lv, sel),
                };
                best = best.min(d);
            }
        }
        total += best;
    }
    Ok(total / ctx.friends().len() as f64)
}

/// Percentage of friends with at least one check-in within `theta` of the
/// selected set (metric units; `theta = 0` means an exact co-check-in
/// location).
pub fn social_coverage(ctx: &QueryContext, s: &[LocationId], theta: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(SslsError::Domain("coverage of an empty selection".into()));
    }
    let covered = ctx
        .friends()
        .iter()
        .filter(|&&v| {
            ctx.friend_locations(v)
                .iter()
                .any(|&lv| s.iter().any(|&sel| ctx.distance(lv, sel) <= theta))
        })
        .count();
    Ok(covered as f64 / ctx.friends().len() as f64 * 100.0)
}

/// Social entropy (bits) of the visitor distribution over the selected
/// set, with `0·log 0 := 0`. The boolean flags the degenerate case where
/// every selected location has an empty visitor set.
pub fn social_entropy(ctx: &QueryContext, s: &[LocationId]) -> Result<(f64, bool)> {
    if s.is_empty() {
        return Err(SslsError::Domain("entropy of an empty selection".into()));
    }
    let counts: Vec<f64> = s
        .iter()
        .map(|&l| {
            let i = ctx
                .candidate_index(l)
                .unwrap_or_else(|| panic!("{l} is not a candidate"));
            ctx.visitors(i).len() as f64
        })
        .collect();
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return Ok((0.0, true));
    }
    let se: f64 = counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum();
    // a single-location mass yields -0.0; normalize
    Ok((se.max(0.0), false))
}
