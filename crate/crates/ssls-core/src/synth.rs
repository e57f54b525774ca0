//! Seeded synthetic instance generation for tests and benchmarks.

use crate::context::{DistanceMetric, QueryContext};
use crate::graph::Coordinate;
use crate::{LocationId, UserId};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Shape of a synthetic query context.
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    /// Number of candidate locations.
    pub n: usize,
    /// Number of scoring friends.
    pub friends: usize,
    pub seed: u64,
}

/// Deterministic random planar context: candidates scattered over a square
/// with a few cluster centers, every friend visiting a random non-empty
/// subset of candidates. The same seed always yields the same context.
pub fn random_context(cfg: &SynthConfig) -> QueryContext {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n.max(2);
    let nf = cfg.friends.max(1);
    let clusters: Vec<(f64, f64)> = (0..3)
        .map(|_| (rng.gen::<f64>() * 100.0, rng.gen::<f64>() * 100.0))
        .collect();
    let mut coords = BTreeMap::new();
    let candidates: Vec<LocationId> = (1..=n as LocationId).collect();
    for &l in &candidates {
        let (cx, cy) = clusters[rng.gen_range(0..clusters.len())];
        coords.insert(
            l,
            Coordinate {
                x: cx + rng.gen_range(-12.0..12.0),
                y: cy + rng.gen_range(-12.0..12.0),
            },
        );
    }
    let mut friend_locations: BTreeMap<UserId, Vec<LocationId>> = BTreeMap::new();
    for f in 1..=nf as UserId {
        let visits = rng.gen_range(1..=((n / 2).max(1)));
        let mut locs: Vec<LocationId> = (0..visits)
            .map(|_| candidates[rng.gen_range(0..n)])
            .collect();
        locs.sort_unstable();
        locs.dedup();
        friend_locations.insert(f, locs);
    }
    QueryContext::from_parts(
        candidates,
        friend_locations,
        coords,
        DistanceMetric::PlanarEuclidean,
    )
    .expect("synthetic context is well formed")
}

/// Deterministic skewed planar context: location popularity follows a
/// zipf-like law, so a handful of places collect most visits the way real
/// check-in data does. Friends check in around one home cluster each.
pub fn skewed_context(cfg: &SynthConfig) -> QueryContext {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9));
    let n = cfg.n.max(2);
    let nf = cfg.friends.max(1);
    let candidates: Vec<LocationId> = (1..=n as LocationId).collect();
    let mut coords = BTreeMap::new();
    let clusters: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.gen::<f64>() * 100.0, rng.gen::<f64>() * 100.0))
        .collect();
    for &l in &candidates {
        let (cx, cy) = clusters[rng.gen_range(0..clusters.len())];
        coords.insert(
            l,
            Coordinate {
                x: cx + rng.gen_range(-8.0..8.0),
                y: cy + rng.gen_range(-8.0..8.0),
            },
        );
    }
    // popularity weight of the location at rank r is 1/(r+1)
    let weights: Vec<f64> = (0..n).map(|r| 1.0 / (r + 1) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut friend_locations: BTreeMap<UserId, Vec<LocationId>> = BTreeMap::new();
    for f in 1..=nf as UserId {
        let visits = rng.gen_range(8..=24usize);
        let mut locs = Vec::with_capacity(visits);
        for _ in 0..visits {
            let mut pick = rng.gen::<f64>() * total;
            let mut idx = 0;
            for (i, w) in weights.iter().enumerate() {
                if pick < *w {
                    idx = i;
                    break;
                }
                pick -= w;
                idx = i;
            }
            locs.push(candidates[idx]);
        }
        locs.sort_unstable();
        locs.dedup();
        friend_locations.insert(f, locs);
    }
    QueryContext::from_parts(
        candidates,
        friend_locations,
        coords,
        DistanceMetric::PlanarEuclidean,
    )
    .expect("synthetic context is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_context() {
        let cfg = SynthConfig {
            n: 20,
            friends: 6,
            seed: 42,
        };
        let a = random_context(&cfg);
        let b = random_context(&cfg);
        assert_eq!(a.candidates(), b.candidates());
        assert_eq!(a.max_d(), b.max_d());
        for i in 0..a.len() {
            assert_eq!(a.visitors(i), b.visitors(i));
            for f in 0..a.friends().len() {
                assert_eq!(a.mindist(i, f), b.mindist(i, f));
            }
        }
    }

    #[test]
    fn normalizers_consistent() {
        let ctx = random_context(&SynthConfig {
            n: 30,
            friends: 8,
            seed: 7,
        });
        for i in 0..ctx.len() {
            for f in 0..ctx.friends().len() {
                assert!(ctx.mindist(i, f) <= ctx.d_m(i) + 1e-12);
                assert!(ctx.mindist(i, f) >= 0.0);
            }
        }
        // maxD really is the max pairwise distance
        let mut m = 0.0f64;
        for i in 0..ctx.len() {
            for j in (i + 1)..ctx.len() {
                m = m.max(ctx.distance(ctx.candidates()[i], ctx.candidates()[j]));
            }
        }
        assert!((m - ctx.max_d()).abs() < 1e-12);
        // mindist hits zero exactly for visitors (coordinates are
        // continuous, so distinct locations never collide)
        for i in 0..ctx.len() {
            for (f, &v) in ctx.friends().iter().enumerate() {
                let visits = ctx.visitors(i).contains(&v);
                assert_eq!(ctx.mindist(i, f) == 0.0, visits);
            }
        }
    }
}
