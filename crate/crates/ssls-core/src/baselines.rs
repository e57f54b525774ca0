//! Brute-force oracle and the three adapted baselines: greedy marginal
//! contribution (GMC), randomized swap (GNE), and the threshold
//! independent-set adaptation (adaptive SOS).

use crate::context::Params;
use crate::scoring::ScoreTable;
use crate::solver::{check_k, finish, Algorithm, SelectionResult, Telemetry};
use crate::{Result, SslsError};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Default subset cap for the brute-force oracle.
pub const DEFAULT_BRUTE_CAP: u64 = 2_000_000;

/// Settings for the randomized-swap baseline. The cited heuristic leaves
/// these unspecified; the defaults keep desk-scale runs deterministic.
#[derive(Debug, Clone, Copy)]
pub struct GneConfig {
    /// Candidate pool = top `ceil(pool_fraction * n)` locations by relevance.
    pub pool_fraction: f64,
    pub max_swap_rounds: u32,
    pub rng_seed: u64,
}

impl Default for GneConfig {
    fn default() -> Self {
        GneConfig {
            pool_fraction: 0.25,
            max_swap_rounds: 50,
            rng_seed: 0,
        }
    }
}

/// Settings for the adaptive-SOS baseline.
#[derive(Debug, Clone, Copy)]
pub struct SosConfig {
    /// Visitor-set Jaccard similarity above which two locations conflict.
    pub similarity_threshold: f64,
}

impl Default for SosConfig {
    fn default() -> Self {
        SosConfig {
            similarity_threshold: 0.4,
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Exhaustive optimum over all k-subsets. Refuses instances beyond `cap`
/// subsets. Ties resolve to the lexicographically smallest id sequence.
pub fn brute_force(table: &ScoreTable<'_>, params: &Params, cap: u64) -> Result<SelectionResult> {
    params.validate()?;
    check_k(table, params.k)?;
    let n = table.len();
    let k = params.k;
    let combos = binomial(n as u64, k as u64);
    if combos > cap {
        return Err(SslsError::Domain(format!(
            "C({n},{k}) = {combos} exceeds the oracle cap {cap}"
        )));
    }
    let start = Instant::now();
    let pair_before = table.pair_diversity_calls();
    // candidate indices ascend with location id, so lexicographic index
    // order is lexicographic id order
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut states = 0u64;
    loop {
        states += 1;
        let f = table.set_score(&idx, params.omega)?.total;
        if best.as_ref().map_or(true, |(_, bf)| f > *bf) {
            best = Some((idx.clone(), f));
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in (i + 1)..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                let (set, _) = best.expect("at least one subset scored");
                let telemetry = Telemetry {
                    states_expanded: states,
                    pair_diversity_evals: table.pair_diversity_calls() - pair_before,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    ..Default::default()
                };
                return finish(table, Algorithm::Brute, &set, params.omega, telemetry);
            }
        }
    }
}

/// Greedy marginal contribution: repeatedly add the location with the
/// largest `F(S ∪ l) - F(S)`, ties toward higher relevance then lower id.
pub fn gmc(table: &ScoreTable<'_>, params: &Params) -> Result<SelectionResult> {
    params.validate()?;
    check_k(table, params.k)?;
    let start = Instant::now();
    let pair_before = table.pair_diversity_calls();
    let omega = params.omega;
    let mut members: Vec<usize> = Vec::new();
    let mut mins: Vec<f64> = Vec::new();
    let mut rel_sum = 0.0;
    let mut steps = 0u64;
    for _ in 0..params.k {
        let mut chosen: Option<(usize, f64, Vec<f64>)> = None;
        for l in 0..table.len() {
            if members.contains(&l) {
                continue;
            }
            let new_mins = if members.is_empty() {
                vec![f64::INFINITY]
            } else {
                table.updated_set_diversity(&members, &mins, l)?.2
            };
            let f_ext = table.f_from_parts(rel_sum + table.relevance(l), &new_mins, omega);
            let better = match &chosen {
                None => true,
                Some((cur, cur_f, _)) => match f_ext.total_cmp(cur_f) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => {
                        table.relevance(l) > table.relevance(*cur)
                            || (table.relevance(l) == table.relevance(*cur) && l < *cur)
                    }
                },
            };
            if better {
                chosen = Some((l, f_ext, new_mins));
            }
        }
        let (l, _, new_mins) = chosen.expect("k <= n leaves a candidate");
        members.push(l);
        mins = new_mins;
        rel_sum += table.relevance(l);
        steps += 1;
    }
    let telemetry = Telemetry {
        greedy_steps: steps,
        pair_diversity_evals: table.pair_diversity_calls() - pair_before,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    finish(table, Algorithm::Gmc, &members, omega, telemetry)
}

/// Randomized swap: seed a k-set from the top-relevance pool, then repeat
/// rounds that try to swap each member with the most diverse outside
/// candidate, accepting strict improvements only.
pub fn gne(table: &ScoreTable<'_>, params: &Params, config: &GneConfig) -> Result<SelectionResult> {
    params.validate()?;
    check_k(table, params.k)?;
    if !(config.pool_fraction > 0.0 && config.pool_fraction <= 1.0) {
        return Err(SslsError::Param(format!(
            "pool_fraction {} outside (0,1]",
            config.pool_fraction
        )));
    }
    let start = Instant::now();
    let pair_before = table.pair_diversity_calls();
    let n = table.len();
    let k = params.k;
    let omega = params.omega;
    let pool_size = ((config.pool_fraction * n as f64).ceil() as usize).clamp(k, n);
    let pool: Vec<usize> = table.relevance_order()[..pool_size].to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    // sample k distinct pool positions
    let mut picks: Vec<usize> = Vec::with_capacity(k);
    let mut available: Vec<usize> = pool.clone();
    for _ in 0..k {
        let i = rng.gen_range(0..available.len());
        picks.push(available.swap_remove(i));
    }
    picks.sort_unstable();
    let mut current = picks;
    let mut current_f = table.set_score(&current, omega)?.total;
    let mut rounds = 0u64;
    for _ in 0..config.max_swap_rounds {
        rounds += 1;
        let mut improved = false;
        // members in ascending id order for a deterministic sweep
        let sweep = current.clone();
        for member in sweep {
            if !current.contains(&member) {
                continue;
            }
            // most diverse outsider with respect to the current set
            let mut outsider: Option<(usize, f64)> = None;
            for l in 0..n {
                if current.contains(&l) {
                    continue;
                }
                let d = table.div_to_set(l, &current)?;
                let better = match outsider {
                    None => true,
                    Some((cur, cur_d)) => d > cur_d || (d == cur_d && l < cur),
                };
                if better {
                    outsider = Some((l, d));
                }
            }
            let (swap_in, _) = match outsider {
                Some(o) => o,
                None => break, // k == n: nothing outside the set
            };
            let mut trial: Vec<usize> = current.iter().copied().filter(|&x| x != member).collect();
            trial.push(swap_in);
            trial.sort_unstable();
            let trial_f = table.set_score(&trial, omega)?.total;
            if trial_f > current_f {
                current = trial;
                current_f = trial_f;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let telemetry = Telemetry {
        greedy_steps: rounds,
        pair_diversity_evals: table.pair_diversity_calls() - pair_before,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    finish(table, Algorithm::Gne, &current, omega, telemetry)
}

/// Threshold independent-set adaptation: walk candidates in relevance
/// order, skipping any location whose visitor-set similarity with an
/// already selected one exceeds the threshold; fill a shortfall with the
/// best remaining relevances and flag the result relaxed.
pub fn adaptive_sos(
    table: &ScoreTable<'_>,
    params: &Params,
    config: &SosConfig,
) -> Result<SelectionResult> {
    params.validate()?;
    check_k(table, params.k)?;
    if !(0.0..=1.0).contains(&config.similarity_threshold) {
        return Err(SslsError::Param(format!(
            "similarity_threshold {} outside [0,1]",
            config.similarity_threshold
        )));
    }
    let start = Instant::now();
    let pair_before = table.pair_diversity_calls();
    let mut selected: Vec<usize> = Vec::new();
    for &l in table.relevance_order() {
        if selected.len() == params.k {
            break;
        }
        let conflicts = selected.iter().any(|&s| {
            let similarity = 1.0 - table.social_diversity(l, s);
            similarity > config.similarity_threshold
        });
        if !conflicts {
            selected.push(l);
        }
    }
    let mut relaxed = false;
    if selected.len() < params.k {
        relaxed = true;
        for &l in table.relevance_order() {
            if selected.len() == params.k {
                break;
            }
            if !selected.contains(&l) {
                selected.push(l);
            }
        }
    }
    let telemetry = Telemetry {
        relaxed,
        pair_diversity_evals: table.pair_diversity_calls() - pair_before,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    finish(table, Algorithm::Sos, &selected, params.omega, telemetry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::QueryContext;
    use crate::solver::exact::solve_exact;
    use crate::synth::{random_context, SynthConfig};
    use std::fs::File;
    use std::io::BufReader;
    use std::path::PathBuf;

    fn toy() -> QueryContext {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy.ssls");
        QueryContext::load_fixture(BufReader::new(File::open(path).unwrap())).unwrap()
    }

    fn params(k: usize, omega: f64) -> Params {
        Params {
            k,
            alpha: 0.5,
            omega,
            ..Params::default()
        }
    }

    #[test]
    fn brute_force_on_the_toy() {
        let ctx = toy();
        let table = ScoreTable::build(&ctx, 0.5).unwrap();
        let res = brute_force(&table, &params(2, 0.5), DEFAULT_BRUTE_CAP).unwrap();
        assert_eq!(res.members, vec![5, 7]);
        assert!((res.score.total - 1.450833).abs() < 1e-5);
        assert_eq!(res.telemetry.states_expanded, 45);
    }

    #[test]
    fn brute_force_degenerate_k() {
        let ctx = toy();
        let table = ScoreTable::build(&ctx, 0.5).unwrap();
        // k = 1: highest relevance singleton (diversity contributes nothing)
        let res = brute_force(&table, &params(1, 0.5), DEFAULT_BRUTE_CAP).unwrap();
        assert_eq!(res.members, vec![8]);
        // k = n: the only subset
        let res = brute_force(&table, &params(10, 0.5), DEFAULT_BRUTE_CAP).unwrap();
        assert_eq!(res.members, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn brute_force_cap_refuses_large_instances() {
        let ctx = random_context(&SynthConfig {
            n: 40,
            friends: 5,
            seed: 0,
        });
        let table = ScoreTable::build(&ctx, 0.5).unwrap();
        assert!(brute_force(&table, &params(6, 0.5), 1000).is_err());
    }

    #[test]
    fn gmc_first_pick_is_relevance_argmax() {
        let ctx = toy();
        let table = ScoreTable::build(&ctx, 0.5).unwrap();
        let res = gmc(&table, &params(1, 0.5)).unwrap();
        assert_eq!(res.members, vec![8]);
    }

    #[test]
    fn gmc_never_beats_the_optimum() {
        for seed in 0..30 {
            let ctx = random_context(&SynthConfig {
                n: 10,
                friends: 5,
                seed,
            });
            let table = ScoreTable::build(&ctx, 0.5).unwrap();
            let p = params(3, 0.5);
            let g = gmc(&table, &p).unwrap();
            let ex = solve_exact(&table, &p).unwrap();
            assert!(g.score.total <= ex.score.total + 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn gne_is_seed_deterministic_and_monotone() {
        let ctx = random_context(&SynthConfig {
            n: 14,
            friends: 6,
            seed: 4,
        });
        let table = ScoreTable::build(&ctx, 0.5).unwrap();
        let p = params(4, 0.5);
        let cfg = GneConfig {
            rng_seed: 99,
            ..Default::default()
        };
        let a = gne(&table, &p, &cfg).unwrap();
        let b = gne(&table, &p, &cfg).unwrap();
        assert_eq!(a.members, b.members);
        // zero swap rounds with a k-sized pool degenerates to top-k by relevance
        let cfg0 = GneConfig {
            pool_fraction: 4.0 / 14.0,
            max_swap_rounds: 0,
            rng_seed: 1,
        };
        let r = gne(&table, &p, &cfg0).unwrap();
        let mut top: Vec<u64> = table.relevance_order()[..4]
            .iter()
            .map(|&i| ctx.candidates()[i])
            .collect();
        top.sort_unstable();
        assert_eq!(r.members, top);
    }

    #[test]
    fn gne_improves_over_rounds() {
        for seed in 0..10 {
            let ctx = random_context(&SynthConfig {
                n: 16,
                friends: 6,
                seed,
            });
            let table = ScoreTable::build(&ctx, 0.5).unwrap();
            let p = params(4, 0.5);
            let zero = gne(
                &table,
                &p,
                &GneConfig {
                    max_swap_rounds: 0,
                    rng_seed: seed,
                    ..Default::default()
                },
            )
            .unwrap();
            let many = gne(
                &table,
                &p,
                &GneConfig {
                    max_swap_rounds: 50,
                    rng_seed: seed,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(many.score.total >= zero.score.total - 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn sos_threshold_extremes() {
        let ctx = toy();
        let table = ScoreTable::build(&ctx, 0.5).unwrap();
        // threshold 1.0: nothing conflicts, top-k by relevance
        let res = adaptive_sos(
            &table,
            &params(3, 0.5),
            &SosConfig {
                similarity_threshold: 1.0,
            },
        )
        .unwrap();
        let mut top: Vec<u64> = table.relevance_order()[..3]
            .iter()
            .map(|&i| ctx.candidates()[i])
            .collect();
        top.sort_unstable();
        assert_eq!(res.members, top);
        assert!(!res.telemetry.relaxed);
    }

    #[test]
    fn sos_selected_pairs_respect_the_threshold() {
        let ctx = toy();
        let table = ScoreTable::build(&ctx, 0.5).unwrap();
        let cfg = SosConfig {
            similarity_threshold: 0.4,
        };
        let res = adaptive_sos(&table, &params(2, 0.5), &cfg).unwrap();
        if !res.telemetry.relaxed {
            let idx = table.indices_of(&res.members).unwrap();
            for i in 0..idx.len() {
                for j in (i + 1)..idx.len() {
                    let sim = 1.0 - table.social_diversity(idx[i], idx[j]);
                    assert!(sim <= cfg.similarity_threshold);
                }
            }
        }
    }

    #[test]
    fn sos_clique_falls_back_to_relaxed_fill() {
        // all candidates share one visitor: with threshold 0 everything
        // conflicts and the shortfall is filled by relevance
        use crate::graph::Coordinate;
        use std::collections::BTreeMap;
        let candidates: Vec<u64> = (1..=5).collect();
        let mut coords = BTreeMap::new();
        for &l in &candidates {
            coords.insert(
                l,
                Coordinate {
                    x: l as f64,
                    y: 0.0,
                },
            );
        }
        let mut fl = BTreeMap::new();
        fl.insert(1u64, candidates.clone());
        let ctx = QueryContext::from_parts(
            candidates,
            fl,
            coords,
            crate::context::DistanceMetric::PlanarEuclidean,
        )
        .unwrap();
        let table = ScoreTable::build(&ctx, 0.5).unwrap();
        let res = adaptive_sos(
            &table,
            &params(3, 0.5),
            &SosConfig {
                similarity_threshold: 0.0,
            },
        )
        .unwrap();
        assert!(res.telemetry.relaxed);
        assert_eq!(res.members.len(), 3);
    }
}
