//! Socio-spatial graph: users, friendship edges, check-ins and location
//! coordinates, loaded from SNAP-style TSV files.
//!
//! The graph is immutable after loading and safe to share across threads.

use crate::{LocationId, Result, SslsError, UserId};
use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

/// A geographic coordinate. `x` is latitude (or planar x), `y` is longitude
/// (or planar y). The interpretation is fixed by the distance metric chosen
/// at query time, never by the graph itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    pub x: f64,
    pub y: f64,
}

/// One recorded visit of a user at a location.
#[derive(Debug, Clone)]
pub struct CheckIn {
    pub location: LocationId,
    pub timestamp: Option<String>,
}

/// Immutable socio-spatial graph.
///
/// Invariants kept by the loaders:
/// - the social adjacency is symmetric and has no self loops;
/// - every location referenced by a check-in has a coordinate entry.
#[derive(Debug, Default, Clone)]
pub struct SocioSpatialGraph {
    users: BTreeSet<UserId>,
    adjacency: BTreeMap<UserId, BTreeSet<UserId>>,
    checkins: BTreeMap<UserId, Vec<CheckIn>>,
    locations: BTreeMap<LocationId, Coordinate>,
    self_loops_skipped: u64,
}

/// Tolerance (degrees) under which repeated coordinates for one location id
/// are treated as the same place. SNAP files occasionally repeat ids with
/// jittered coordinates.
pub const COORD_TOLERANCE: f64 = 1e-6;

/// Check-in group boundaries from the evaluation protocol: group id ->
/// inclusive range of distinct check-in locations.
const GROUPS: [(u32, u64, u64); 5] = [
    (50, 10, 50),
    (100, 51, 100),
    (200, 101, 200),
    (500, 201, 500),
    (1000, 501, 1000),
];

/// Aggregate dataset statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GraphStats {
    pub users: u64,
    pub edges: u64,
    pub checkins: u64,
    pub places: u64,
    /// Average check-ins per user.
    pub ac: f64,
    /// Average friendships per user.
    pub af: f64,
    /// Average number of friends that share at least one exact check-in
    /// place with the user.
    pub afc: f64,
}

impl SocioSpatialGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load friendship edges from `userA<TAB>userB` lines. Edges are stored
    /// symmetrically; duplicates are idempotent; self loops are skipped and
    /// counted.
    pub fn load_social_edges<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut it = trimmed.split_whitespace();
            let a = parse_id(it.next(), lineno, "user id")?;
            let b = parse_id(it.next(), lineno, "user id")?;
            if it.next().is_some() {
                return Err(SslsError::Parse {
                    line: lineno,
                    msg: "expected exactly two fields".into(),
                });
            }
            if a == b {
                self.self_loops_skipped += 1;
                continue;
            }
            self.users.insert(a);
            self.users.insert(b);
            self.adjacency.entry(a).or_default().insert(b);
            self.adjacency.entry(b).or_default().insert(a);
        }
        Ok(())
    }

    /// Load check-ins from `user<TAB>timestamp<TAB>lat<TAB>lon<TAB>locid`
    /// lines (SNAP Gowalla/Brightkite layout). The timestamp may be empty.
    /// The first coordinate seen for a location id wins; later coordinates
    /// for the same id must agree within [`COORD_TOLERANCE`].
    pub fn load_checkins<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(SslsError::Parse {
                    line: lineno,
                    msg: format!("expected 5 tab-separated fields, got {}", fields.len()),
                });
            }
            let user = parse_id(Some(fields[0]), lineno, "user id")?;
            let timestamp = if fields[1].is_empty() {
                None
            } else {
                Some(fields[1].to_string())
            };
            let x: f64 = fields[2].trim().parse().map_err(|_| SslsError::Parse {
                line: lineno,
                msg: format!("bad latitude {:?}", fields[2]),
            })?;
            let y: f64 = fields[3].trim().parse().map_err(|_| SslsError::Parse {
                line: lineno,
                msg: format!("bad longitude {:?}", fields[3]),
            })?;
            let loc = parse_id(Some(fields[4]), lineno, "location id")?;
            match self.locations.get(&loc) {
                Some(c)
                    if (c.x - x).abs() > COORD_TOLERANCE || (c.y - y).abs() > COORD_TOLERANCE =>
                {
                    return Err(SslsError::Data {
                        location: loc,
                        msg: format!(
                            "conflicting coordinates ({}, {}) vs ({}, {}) at line {}",
                            c.x, c.y, x, y, lineno
                        ),
                    });
                }
                Some(_) => {}
                None => {
                    self.locations.insert(loc, Coordinate { x, y });
                }
            }
            // Check-ins may precede edges; unknown users are created here.
            self.users.insert(user);
            self.checkins.entry(user).or_default().push(CheckIn {
                location: loc,
                timestamp,
            });
        }
        Ok(())
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.users.iter().copied()
    }

    pub fn contains_user(&self, u: UserId) -> bool {
        self.users.contains(&u)
    }

    pub fn friends(&self, u: UserId) -> impl Iterator<Item = UserId> + '_ {
        self.adjacency.get(&u).into_iter().flatten().copied()
    }

    pub fn checkins_of(&self, u: UserId) -> &[CheckIn] {
        self.checkins.get(&u).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct check-in locations of a user, ascending.
    pub fn distinct_locations(&self, u: UserId) -> BTreeSet<LocationId> {
        self.checkins_of(u).iter().map(|c| c.location).collect()
    }

    pub fn coordinate(&self, l: LocationId) -> Option<Coordinate> {
        self.locations.get(&l).copied()
    }

    pub fn self_loops_skipped(&self) -> u64 {
        self.self_loops_skipped
    }

    pub fn edge_count(&self) -> u64 {
        self.adjacency.values().map(|s| s.len() as u64).sum::<u64>() / 2
    }

    pub fn checkin_count(&self) -> u64 {
        self.checkins.values().map(|v| v.len() as u64).sum()
    }

    /// Group id for the user's distinct check-in count, per the evaluation
    /// grouping. `None` when the user falls outside every group (fewer than
    /// 10 or more than 1000 distinct locations).
    pub fn checkin_group(&self, u: UserId) -> Option<u32> {
        let n = self.distinct_locations(u).len() as u64;
        GROUPS
            .iter()
            .find(|(_, lo, hi)| n >= *lo && n <= *hi)
            .map(|(id, _, _)| *id)
    }

    /// Users eligible for querying: at least ten distinct check-in locations
    /// and at least two friends with check-in information.
    pub fn eligible_users(&self) -> Vec<UserId> {
        self.users
            .iter()
            .copied()
            .filter(|&u| {
                self.distinct_locations(u).len() >= 10
                    && self
                        .friends(u)
                        .filter(|&v| !self.checkins_of(v).is_empty())
                        .count()
                        >= 2
            })
            .collect()
    }

    /// Users of a given check-in group that are also query-eligible.
    pub fn group_members(&self, group: u32) -> Vec<UserId> {
        self.eligible_users()
            .into_iter()
            .filter(|&u| self.checkin_group(u) == Some(group))
            .collect()
    }

    pub fn stats(&self) -> GraphStats {
        let users = self.users.len() as u64;
        let edges = self.edge_count();
        let checkins = self.checkin_count();
        let places = self.locations.len() as u64;
        let ac = if users == 0 {
            0.0
        } else {
            checkins as f64 / users as f64
        };
        let af = if users == 0 {
            0.0
        } else {
            2.0 * edges as f64 / users as f64
        };
        let afc = if users == 0 {
            0.0
        } else {
            let total: u64 = self
                .users
                .iter()
                .map(|&u| {
                    let mine = self.distinct_locations(u);
                    if mine.is_empty() {
                        return 0;
                    }
                    self.friends(u)
                        .filter(|&v| {
                            self.distinct_locations(v)
                                .intersection(&mine)
                                .next()
                                .is_some()
                        })
                        .count() as u64
                })
                .sum();
            total as f64 / users as f64
        };
        GraphStats {
            users,
            edges,
            checkins,
            places,
            ac,
            af,
            afc,
        }
    }

    /// Write a deterministic text snapshot. Loading the written bytes
    /// reproduces the graph exactly; writing the same graph twice produces
    /// identical bytes.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ssls-snapshot 1")?;
        writeln!(w, "self-loops-skipped {}", self.self_loops_skipped)?;
        for u in &self.users {
            writeln!(w, "U {u}")?;
        }
        for (a, nbrs) in &self.adjacency {
            for b in nbrs {
                if a < b {
                    writeln!(w, "E {a} {b}")?;
                }
            }
        }
        for (l, c) in &self.locations {
            writeln!(w, "L {l} {} {}", fmt_f64(c.x), fmt_f64(c.y))?;
        }
        for (u, cs) in &self.checkins {
            for c in cs {
                writeln!(
                    w,
                    "C {u} {} {}",
                    c.location,
                    c.timestamp.as_deref().unwrap_or("")
                )?;
            }
        }
        Ok(())
    }

    /// Load a snapshot written by [`write_snapshot`](Self::write_snapshot).
    pub fn read_snapshot<R: BufRead>(reader: R) -> Result<Self> {
        let mut g = SocioSpatialGraph::new();
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| SslsError::Parse {
            line: 1,
            msg: "empty snapshot".into(),
        })?;
        let header = header?;
        if header.trim() != "ssls-snapshot 1" {
            return Err(SslsError::Parse {
                line: 1,
                msg: format!("unrecognized snapshot header {header:?}"),
            });
        }
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| SslsError::Parse {
                line: lineno,
                msg: msg.into(),
            };
            let mut it = line.splitn(2, ' ');
            let tag = it.next().unwrap_or("");
            let rest = it.next().unwrap_or("");
            match tag {
                "self-loops-skipped" => {
                    g.self_loops_skipped = rest
                        .trim()
                        .parse()
                        .map_err(|_| bad("bad self-loop count"))?;
                }
                "U" => {
                    g.users
                        .insert(rest.trim().parse().map_err(|_| bad("bad user id"))?);
                }
                "E" => {
                    let mut f = rest.split(' ');
                    let a: UserId = f
                        .next()
                        .ok_or_else(|| bad("missing"))?
                        .parse()
                        .map_err(|_| bad("bad id"))?;
                    let b: UserId = f
                        .next()
                        .ok_or_else(|| bad("missing"))?
                        .parse()
                        .map_err(|_| bad("bad id"))?;
                    g.users.insert(a);
                    g.users.insert(b);
                    g.adjacency.entry(a).or_default().insert(b);
                    g.adjacency.entry(b).or_default().insert(a);
                }
                "L" => {
                    let mut f = rest.split(' ');
                    let l: LocationId = f
                        .next()
                        .ok_or_else(|| bad("missing"))?
                        .parse()
                        .map_err(|_| bad("bad id"))?;
                    let x: f64 = f
                        .next()
                        .ok_or_else(|| bad("missing"))?
                        .parse()
                        .map_err(|_| bad("bad x"))?;
                    let y: f64 = f
                        .next()
                        .ok_or_else(|| bad("missing"))?
                        .parse()
                        .map_err(|_| bad("bad y"))?;
                    g.locations.insert(l, Coordinate { x, y });
                }
                "C" => {
                    let mut f = rest.splitn(3, ' ');
                    let u: UserId = f
                        .next()
                        .ok_or_else(|| bad("missing"))?
                        .parse()
                        .map_err(|_| bad("bad id"))?;
                    let l: LocationId = f
                        .next()
                        .ok_or_else(|| bad("missing"))?
                        .parse()
                        .map_err(|_| bad("bad id"))?;
                    let ts = f.next().unwrap_or("");
                    let timestamp = if ts.is_empty() {
                        None
                    } else {
                        Some(ts.to_string())
                    };
                    g.users.insert(u);
                    g.checkins.entry(u).or_default().push(CheckIn {
                        location: l,
                        timestamp,
                    });
                }
                _ => return Err(bad("unknown record tag")),
            }
        }
        Ok(g)
    }
}

fn parse_id(field: Option<&str>, line: usize, what: &str) -> Result<u64> {
    let f = field.ok_or_else(|| SslsError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    f.trim().parse().map_err(|_| SslsError::Parse {
        line,
        msg: format!("bad {what} {f:?}"),
    })
}

/// Shortest round-trip formatting for snapshot floats.
fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}
