//! Per-query view of the graph: candidate locations, scoring friends,
//! visitor sets, distance normalizers and the distance provider.

use crate::graph::{Coordinate, SocioSpatialGraph};
use crate::{LocationId, Result, SslsError, UserId};
use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

const EARTH_RADIUS_KM: f64 = 6371.0;

/// Distance interpretation for coordinates (or an injected matrix).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMetric {
    /// Coordinates are planar x/y; straight-line distance.
    PlanarEuclidean,
    /// Coordinates are latitude/longitude degrees; great-circle km.
    HaversineKm,
    /// Distances come from an explicit symmetric matrix (fixtures).
    InjectedMatrix,
}

impl std::str::FromStr for DistanceMetric {
    type Err = SslsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planar" | "planar-euclidean" => Ok(Self::PlanarEuclidean),
            "haversine" | "haversine-km" => Ok(Self::HaversineKm),
            "matrix" | "injected-matrix" => Ok(Self::InjectedMatrix),
            other => Err(SslsError::Param(format!("unknown metric {other:?}"))),
        }
    }
}

/// Query parameters. `alpha` blends social vs spatial terms, `omega` blends
/// relevance vs diversity, `theta` is the social-coverage radius.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub k: usize,
    pub alpha: f64,
    pub omega: f64,
    pub theta: f64,
    pub metric: DistanceMetric,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            k: 6,
            alpha: 0.5,
            omega: 0.5,
            theta: 1.0,
            metric: DistanceMetric::PlanarEuclidean,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(SslsError::Param("k must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SslsError::Param(format!(
                "alpha {} outside [0,1]",
                self.alpha
            )));
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(SslsError::Param(format!(
                "omega {} outside (0,1)",
                self.omega
            )));
        }
        if self.theta < 0.0 {
            return Err(SslsError::Param("theta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum DistanceProvider {
    Coords {
        metric: DistanceMetric,
        coords: BTreeMap<LocationId, Coordinate>,
    },
    Matrix {
        index: BTreeMap<LocationId, usize>,
        d: Vec<Vec<f64>>,
    },
}

impl DistanceProvider {
    fn dist(&self, a: LocationId, b: LocationId) -> f64 {
        match self {
            DistanceProvider::Coords { metric, coords } => {
                let ca = coords[&a];
                let cb = coords[&b];
                match metric {
                    DistanceMetric::PlanarEuclidean => {
                        ((ca.x - cb.x).powi(2) + (ca.y - cb.y).powi(2)).sqrt()
                    }
                    DistanceMetric::HaversineKm => haversine_km(ca, cb),
                    DistanceMetric::InjectedMatrix => {
                        unreachable!("matrix metric uses Matrix provider")
                    }
                }
            }
            DistanceProvider::Matrix { index, d } => d[index[&a]][index[&b]],
        }
    }
}

/// Great-circle distance in kilometers between two lat/lon points.
pub fn haversine_km(a: Coordinate, b: Coordinate) -> f64 {
    let lat1 = a.x.to_radians();
    let lat2 = b.x.to_radians();
    let dlat = (b.x - a.x).to_radians();
    let dlon = (b.y - a.y).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().asin()
}

/// Everything the solvers need to score one user's candidate locations.
///
/// Candidates are held in ascending location-id order; all per-candidate
/// vectors are indexed by that order.
#[derive(Debug, Clone)]
pub struct QueryContext {
    pub query_user: Option<UserId>,
    candidates: Vec<LocationId>,
    cand_index: BTreeMap<LocationId, usize>,
    friends: Vec<UserId>,
    /// Per-candidate set of friends with an exact check-in there.
    visitor_sets: Vec<BTreeSet<UserId>>,
    /// mindist[c][f]: min distance from candidate c to friend f's check-ins.
    mindist: Vec<Vec<f64>>,
    /// d_m[c] = max over friends of mindist[c][f].
    d_m: Vec<f64>,
    max_d: f64,
    metric: DistanceMetric,
    provider: DistanceProvider,
    /// Distinct check-in locations per friend (all locations, not only
    /// candidates); used by spatial relevance and the evaluation metrics.
    friend_locations: BTreeMap<UserId, Vec<LocationId>>,
    /// Visitor sets extended to every friend location.
    extended_visitors: BTreeMap<LocationId, BTreeSet<UserId>>,
    /// Display names when the context came from a fixture.
    candidate_names: Option<BTreeMap<LocationId, String>>,
}

impl QueryContext {
    /// Build the per-user view from a loaded graph.
    ///
    /// The scoring friend set `V_u` contains exactly the friends of `u`
    /// that have at least one check-in; the query is ineligible without at
    /// least one such friend or without candidates.
    pub fn build(graph: &SocioSpatialGraph, u: UserId, metric: DistanceMetric) -> Result<Self> {
        if metric == DistanceMetric::InjectedMatrix {
            return Err(SslsError::Param(
                "injected-matrix metric is only available through fixtures".into(),
            ));
        }
        if !graph.contains_user(u) {
            return Err(SslsError::UserNotFound(u));
        }
        let candidates: Vec<LocationId> = graph.distinct_locations(u).into_iter().collect();
        if candidates.is_empty() {
            return Err(SslsError::Ineligible(format!("user {u} has no check-ins")));
        }
        let friends: Vec<UserId> = graph
            .friends(u)
            .filter(|&v| !graph.checkins_of(v).is_empty())
            .collect();
        if friends.is_empty() {
            return Err(SslsError::Ineligible(format!(
                "user {u} has no friends with check-in information"
            )));
        }
        let mut friend_locations = BTreeMap::new();
        let mut coords = BTreeMap::new();
        for &l in &candidates {
            coords.insert(l, graph.coordinate(l).expect("candidate has coordinate"));
        }
        for &v in &friends {
            let locs: Vec<LocationId> = graph.distinct_locations(v).into_iter().collect();
            for &l in &locs {
                coords.insert(l, graph.coordinate(l).expect("check-in has coordinate"));
            }
            friend_locations.insert(v, locs);
        }
        let provider = DistanceProvider::Coords { metric, coords };
        Self::assemble(
            Some(u),
            candidates,
            friends,
            friend_locations,
            provider,
            metric,
            None,
        )
    }

    /// Build a context directly from explicit parts (fixtures, synthetic
    /// instances). `friend_locations` must give every friend at least one
    /// location; candidate ids must be distinct.
    pub fn from_parts(
        candidates: Vec<LocationId>,
        friend_locations: BTreeMap<UserId, Vec<LocationId>>,
        coords: BTreeMap<LocationId, Coordinate>,
        metric: DistanceMetric,
    ) -> Result<Self> {
        let friends: Vec<UserId> = friend_locations.keys().copied().collect();
        let provider = DistanceProvider::Coords { metric, coords };
        Self::assemble(
            None,
            candidates,
            friends,
            friend_locations,
            provider,
            metric,
            None,
        )
    }

    fn assemble(
        query_user: Option<UserId>,
        candidates: Vec<LocationId>,
        friends: Vec<UserId>,
        friend_locations: BTreeMap<UserId, Vec<LocationId>>,
        provider: DistanceProvider,
        metric: DistanceMetric,
        candidate_names: Option<BTreeMap<LocationId, String>>,
    ) -> Result<Self> {
        let mut cand_index = BTreeMap::new();
        for (i, &l) in candidates.iter().enumerate() {
            if cand_index.insert(l, i).is_some() {
                return Err(SslsError::Domain(format!("duplicate candidate {l}")));
            }
        }
        for (v, locs) in &friend_locations {
            if locs.is_empty() {
                return Err(SslsError::Ineligible(format!(
                    "friend {v} has no check-ins"
                )));
            }
        }
        let mut extended_visitors: BTreeMap<LocationId, BTreeSet<UserId>> = BTreeMap::new();
        for (&v, locs) in &friend_locations {
            for &l in locs {
                extended_visitors.entry(l).or_default().insert(v);
            }
        }
        let visitor_sets: Vec<BTreeSet<UserId>> = candidates
            .iter()
            .map(|l| extended_visitors.get(l).cloned().unwrap_or_default())
            .collect();
        let mindist: Vec<Vec<f64>> = candidates
            .iter()
            .map(|&l| {
                friends
                    .iter()
                    .map(|v| {
                        friend_locations[v]
                            .iter()
                            .map(|&fl| provider.dist(l, fl))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect()
            })
            .collect();
        let d_m: Vec<f64> = mindist
            .iter()
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .collect();
        let mut max_d = 0.0f64;
        for i in 0..candidates.len() {
            for j in (i + 1)..candidates.len() {
                max_d = max_d.max(provider.dist(candidates[i], candidates[j]));
            }
        }
        Ok(QueryContext {
            query_user,
            candidates,
            cand_index,
            friends,
            visitor_sets,
            mindist,
            d_m,
            max_d,
            metric,
            provider,
            friend_locations,
            extended_visitors,
            candidate_names,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[LocationId] {
        &self.candidates
    }

    pub fn candidate_index(&self, l: LocationId) -> Option<usize> {
        self.cand_index.get(&l).copied()
    }

    pub fn friends(&self) -> &[UserId] {
        &self.friends
    }

    pub fn friend_locations(&self, v: UserId) -> &[LocationId] {
        self.friend_locations
            .get(&v)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Friends of the query user with an exact check-in at candidate `i`
    /// (by candidate index).
    pub fn visitors(&self, i: usize) -> &BTreeSet<UserId> {
        &self.visitor_sets[i]
    }

    /// Visitor set of an arbitrary location (any friend check-in place).
    pub fn visitors_of_location(&self, l: LocationId) -> Option<&BTreeSet<UserId>> {
        self.extended_visitors.get(&l)
    }

    /// Min distance from candidate `i` to friend `f`'s check-ins (indices).
    pub fn mindist(&self, i: usize, f: usize) -> f64 {
        self.mindist[i][f]
    }

    /// Per-location spatial normalizer `d_m`.
    pub fn d_m(&self, i: usize) -> f64 {
        self.d_m[i]
    }

    /// Maximum pairwise distance among candidates.
    pub fn max_d(&self) -> f64 {
        self.max_d
    }

    pub fn metric(&self) -> DistanceMetric {
        self.metric
    }

    /// Distance between two locations under the active metric. Both must be
    /// known to the context (candidates or friend check-in places).
    pub fn distance(&self, a: LocationId, b: LocationId) -> f64 {
        self.provider.dist(a, b)
    }

    pub fn coordinate(&self, l: LocationId) -> Option<Coordinate> {
        match &self.provider {
            DistanceProvider::Coords { coords, .. } => coords.get(&l).copied(),
            DistanceProvider::Matrix { .. } => None,
        }
    }

    pub fn candidate_name(&self, l: LocationId) -> String {
        self.candidate_names
            .as_ref()
            .and_then(|m| m.get(&l).cloned())
            .unwrap_or_else(|| l.to_string())
    }

    /// Load the injected-matrix toy fixture format.
    ///
    /// The format is line oriented:
    ///
    /// ```text
    /// fixture_version: 1
    /// candidates: p1 p2 ... pN
    /// friends: a b c ...
    /// visitors <cand>: <friend> <friend> ...
    /// dist <cand> <cand>: <non-negative number>
    /// ```
    ///
    /// Candidate ids are assigned 1-based in listing order, friend ids
    /// likewise. Every distance pair must be given once (symmetry implied);
    /// giving both orientations with different values is a validation error.
    pub fn load_fixture<R: BufRead>(reader: R) -> Result<Self> {
        let mut cand_names: Vec<String> = Vec::new();
        let mut friend_names: Vec<String> = Vec::new();
        let mut visitors: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut dists: Vec<(String, String, f64, usize)> = Vec::new();
        let mut version_seen = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let bad = |msg: String| SslsError::Parse { line: lineno, msg };
            let (key, value) = t
                .split_once(':')
                .ok_or_else(|| bad(format!("expected `key: value`, got {t:?}")))?;
            let key = key.trim();
            let value = value.trim();
            if key == "fixture_version" {
                if value != "1" {
                    return Err(bad(format!("unsupported fixture_version {value}")));
                }
                version_seen = true;
            } else if key == "candidates" {
                cand_names = value.split_whitespace().map(str::to_string).collect();
            } else if key == "friends" {
                friend_names = value.split_whitespace().map(str::to_string).collect();
            } else if let Some(c) = key.strip_prefix("visitors ") {
                visitors.insert(
                    c.trim().to_string(),
                    value.split_whitespace().map(str::to_string).collect(),
                );
            } else if let Some(pair) = key.strip_prefix("dist ") {
                let mut it = pair.split_whitespace();
                let a = it.next().ok_or_else(|| bad("missing candidate".into()))?;
                let b = it.next().ok_or_else(|| bad("missing candidate".into()))?;
                let v: f64 = value
                    .parse()
                    .map_err(|_| bad(format!("bad distance {value:?}")))?;
                dists.push((a.to_string(), b.to_string(), v, lineno));
            } else {
                return Err(bad(format!("unknown key {key:?}")));
            }
        }
        if !version_seen {
            return Err(SslsError::Parse {
                line: 1,
                msg: "missing fixture_version".into(),
            });
        }
        if cand_names.is_empty() {
            return Err(SslsError::Parse {
                line: 1,
                msg: "no candidates".into(),
            });
        }
        let cand_id: BTreeMap<&str, LocationId> = cand_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), (i + 1) as LocationId))
            .collect();
        let friend_id: BTreeMap<&str, UserId> = friend_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), (i + 1) as UserId))
            .collect();
        let n = cand_names.len();
        let mut matrix = vec![vec![f64::NAN; n]; n];
        for i in 0..n {
            matrix[i][i] = 0.0;
        }
        for (a, b, v, lineno) in &dists {
            let bad = |msg: String| SslsError::Parse { line: *lineno, msg };
            let ia = *cand_id
                .get(a.as_str())
                .ok_or_else(|| bad(format!("unknown candidate {a}")))?
                as usize
                - 1;
            let ib = *cand_id
                .get(b.as_str())
                .ok_or_else(|| bad(format!("unknown candidate {b}")))?
                as usize
                - 1;
            if *v < 0.0 {
                return Err(bad(format!("negative distance {v}")));
            }
            if !matrix[ia][ib].is_nan() && matrix[ia][ib] != *v {
                return Err(bad(format!("asymmetric distance for {a} {b}")));
            }
            matrix[ia][ib] = *v;
            matrix[ib][ia] = *v;
        }
        for i in 0..n {
            for j in 0..n {
                if matrix[i][j].is_nan() {
                    return Err(SslsError::Parse {
                        line: 0,
                        msg: format!(
                            "missing distance between {} and {}",
                            cand_names[i], cand_names[j]
                        ),
                    });
                }
            }
        }
        let mut friend_locations: BTreeMap<UserId, Vec<LocationId>> = BTreeMap::new();
        for (c, vs) in &visitors {
            let cid = *cand_id.get(c.as_str()).ok_or_else(|| SslsError::Parse {
                line: 0,
                msg: format!("unknown candidate {c}"),
            })?;
            for vname in vs {
                let vid = *friend_id
                    .get(vname.as_str())
                    .ok_or_else(|| SslsError::Parse {
                        line: 0,
                        msg: format!("unknown friend {vname}"),
                    })?;
                friend_locations.entry(vid).or_default().push(cid);
            }
        }
        for (i, name) in friend_names.iter().enumerate() {
            let id = (i + 1) as UserId;
            if !friend_locations.contains_key(&id) {
                return Err(SslsError::Ineligible(format!(
                    "friend {name} has no check-ins"
                )));
            }
        }
        for locs in friend_locations.values_mut() {
            locs.sort_unstable();
            locs.dedup();
        }
        let candidates: Vec<LocationId> = (1..=n as LocationId).collect();
        let index: BTreeMap<LocationId, usize> =
            candidates.iter().map(|&l| (l, l as usize - 1)).collect();
        let names: BTreeMap<LocationId, String> = cand_names
            .iter()
            .enumerate()
            .map(|(i, s)| ((i + 1) as LocationId, s.clone()))
            .collect();
        let friends: Vec<UserId> = friend_locations.keys().copied().collect();
        let provider = DistanceProvider::Matrix { index, d: matrix };
        Self::assemble(
            None,
            candidates,
            friends,
            friend_locations,
            provider,
            DistanceMetric::InjectedMatrix,
            Some(names),
        )
    }
}
