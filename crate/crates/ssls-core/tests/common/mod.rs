//! Shared helpers for the integration suites.

use ssls_core::context::QueryContext;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

pub fn toy_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy.ssls")
}

pub fn toy() -> QueryContext {
    QueryContext::load_fixture(BufReader::new(File::open(toy_path()).unwrap())).unwrap()
}

/// Deterministic TSV dataset of a small geo-social network with enough
/// eligible users for the check-in-group machinery: 14 users on a ring
/// with chords, each with 12 distinct places out of a 40-place pool.
pub fn sample_dataset() -> (String, String) {
    let users = 14u64;
    let places = 40u64;
    let mut edges = String::new();
    for u in 0..users {
        edges.push_str(&format!("{}\t{}\n", u, (u + 1) % users));
        edges.push_str(&format!("{}\t{}\n", u, (u + 3) % users));
    }
    let mut checkins = String::new();
    // place p sits at a deterministic coordinate near Austin
    let coord = |p: u64| (30.0 + 0.01 * (p % 8) as f64, -97.0 - 0.01 * (p / 8) as f64);
    for u in 0..users {
        for i in 0..12u64 {
            let p = (u * 7 + i * 3) % places;
            let (lat, lon) = coord(p);
            checkins.push_str(&format!(
                "{}\t2010-07-{:02}T12:00:00Z\t{}\t{}\t{}\n",
                u,
                (i % 28) + 1,
                lat,
                lon,
                p
            ));
        }
    }
    (edges, checkins)
}
