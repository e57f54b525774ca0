//! Command-line front door: ingest datasets, answer queries, sweep
//! benchmarks over check-in groups, dump scores and export GeoJSON.
//!
//! Exit codes: 0 ok, 2 usage, 3 data error, 4 infeasible query.

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssls_core::baselines::{self, GneConfig, SosConfig, DEFAULT_BRUTE_CAP};
use ssls_core::context::{DistanceMetric, Params, QueryContext};
use ssls_core::graph::SocioSpatialGraph;
use ssls_core::metrics::{self, MmdMode};
use ssls_core::scoring::ScoreTable;
use ssls_core::solver::exact::{solve_exact, solve_exact_with, ExactOptions};
use ssls_core::solver::{approx, exact_plus, Algorithm, SelectionResult};
use ssls_core::{LocationId, SslsError, UserId};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Parser)]
#[command(name = "ssls", about = "Top-k socio-spatial location selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load edge and check-in TSVs and write a snapshot.
    Ingest {
        /// Friendship edges, `userA<TAB>userB` per line.
        #[arg(long)]
        edges: PathBuf,
        /// Check-ins, `user<TAB>timestamp<TAB>lat<TAB>lon<TAB>locid`.
        #[arg(long)]
        checkins: PathBuf,
        /// Snapshot output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer one top-k query and print the result document as JSON.
    Query(QueryArgs),
    /// Run a seeded benchmark over one check-in group and emit CSV.
    Bench(BenchArgs),
    /// Print dataset statistics of a snapshot.
    Stats {
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Dump per-location scores (and optionally the pair matrix) as CSV.
    ScoreDump(ScoreDumpArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Snapshot path; defaults to $SSLS_DATA_DIR/snapshot.ssls.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Toy fixture path (injected distance matrix); replaces the snapshot.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Query user id (snapshot sources only).
    #[arg(long)]
    user: Option<UserId>,
    /// Distance metric for snapshot sources: planar | haversine.
    #[arg(long, default_value = "haversine")]
    metric: String,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    /// exact | approx | exactplus | fast | gmc | gne | sos | brute
    #[arg(long, default_value = "exact")]
    algo: String,
    /// Social-coverage radius reported in the document.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Seed for randomized baselines.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node budget for the branch-and-bound solvers.
    #[arg(long)]
    max_states: Option<u64>,
    /// Subset cap for the brute-force oracle.
    #[arg(long, default_value_t = DEFAULT_BRUTE_CAP)]
    brute_cap: u64,
    /// Baseline config file (text, `baselines:` section).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write a GeoJSON FeatureCollection of the selection and friend
    /// check-ins (coordinate metrics only).
    #[arg(long)]
    geojson: Option<PathBuf>,
    /// Include wall-clock timings in the output (non-deterministic bytes).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Check-in group id: 50, 100, 200, 500 or 1000.
    #[arg(long)]
    group: u32,
    /// Comma-separated k values.
    #[arg(long, default_value = "2,4,6,8,10")]
    k_list: String,
    /// Comma-separated algorithms to run.
    #[arg(long, default_value = "exact,approx,exactplus,fast,gmc,gne,sos")]
    algos: String,
    /// Number of eligible users to sample from the group.
    #[arg(long, default_value_t = 10)]
    sample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// planar | haversine
    #[arg(long, default_value = "haversine")]
    metric: String,
    /// Worker threads for query fan-out.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    max_states: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_BRUTE_CAP)]
    brute_cap: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a wall_ms column (non-deterministic bytes).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct ScoreDumpArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Also dump the pairwise diversity matrix.
    #[arg(long)]
    pairs: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SslsError::Param(_) => 2,
                SslsError::Parse { .. } | SslsError::Data { .. } | SslsError::Io(_) => 3,
                SslsError::UserNotFound(_) | SslsError::Ineligible(_) | SslsError::Domain(_) => 4,
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> ssls_core::Result<()> {
    match cli.command {
        Command::Ingest {
            edges,
            checkins,
            out,
        } => cmd_ingest(&edges, &checkins, &out),
        Command::Query(args) => cmd_query(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Stats { snapshot } => cmd_stats(snapshot),
        Command::ScoreDump(args) => cmd_score_dump(args),
    }
}

fn default_snapshot(path: Option<PathBuf>) -> ssls_core::Result<PathBuf> {
    match path {
        Some(p) => Ok(p),
        None => match std::env::var_os("SSLS_DATA_DIR") {
            Some(dir) => Ok(PathBuf::from(dir).join("snapshot.ssls")),
            None => Err(SslsError::Param(
                "no --snapshot given and SSLS_DATA_DIR is unset".into(),
            )),
        },
    }
}

fn load_graph(path: &Path) -> ssls_core::Result<SocioSpatialGraph> {
    SocioSpatialGraph::read_snapshot(BufReader::new(File::open(path)?))
}

fn cmd_ingest(edges: &Path, checkins: &Path, out: &Path) -> ssls_core::Result<()> {
    let mut graph = SocioSpatialGraph::new();
    graph.load_social_edges(BufReader::new(File::open(edges)?))?;
    graph.load_checkins(BufReader::new(File::open(checkins)?))?;
    let mut w = BufWriter::new(File::create(out)?);
    graph.write_snapshot(&mut w)?;
    w.flush()?;
    let s = graph.stats();
    println!("users {}", s.users);
    println!("edges {}", s.edges);
    println!("checkins {}", s.checkins);
    println!("places {}", s.places);
    if graph.self_loops_skipped() > 0 {
        eprintln!(
            "warning: skipped {} self-loop edges",
            graph.self_loops_skipped()
        );
    }
    Ok(())
}

/// Clamp omega strictly inside (0,1); the score bounds divide by both
/// omega and 1-omega.
fn clamp_omega(omega: f64) -> f64 {
    if omega <= 0.0 {
        eprintln!("warning: omega clamped from {omega} to 1e-6");
        1e-6
    } else if omega >= 1.0 {
        eprintln!("warning: omega clamped from {omega} to 1-1e-6");
        1.0 - 1e-6
    } else {
        omega
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BaselineConfig {
    gne: GneConfig,
    sos: SosConfig,
}

/// Parse the `baselines:` section of a plain `key: value` config file.
fn load_baseline_config(path: Option<&Path>) -> ssls_core::Result<BaselineConfig> {
    let mut cfg = BaselineConfig::default();
    let Some(path) = path else { return Ok(cfg) };
    let mut in_section = false;
    for (idx, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !line.starts_with(' ') && t.ends_with(':') {
            in_section = t == "baselines:";
            continue;
        }
        if !in_section {
            continue;
        }
        let (key, value) = t.split_once(':').ok_or_else(|| SslsError::Parse {
            line: idx + 1,
            msg: format!("expected `key: value`, got {t:?}"),
        })?;
        let value = value.trim().to_string();
        let lineno = idx + 1;
        match key.trim() {
            "gne_pool_fraction" => {
                cfg.gne.pool_fraction = parse_cfg(&value, lineno)?;
            }
            "gne_max_swap_rounds" => {
                cfg.gne.max_swap_rounds = parse_cfg(&value, lineno)?;
            }
            "gne_rng_seed" => {
                cfg.gne.rng_seed = parse_cfg(&value, lineno)?;
            }
            "sos_similarity_threshold" => {
                cfg.sos.similarity_threshold = parse_cfg(&value, lineno)?;
            }
            other => {
                return Err(SslsError::Parse {
                    line: lineno,
                    msg: format!("unknown baselines key {other:?}"),
                })
            }
        }
    }
    Ok(cfg)
}

fn parse_cfg<T: std::str::FromStr>(value: &str, line: usize) -> ssls_core::Result<T> {
    value.parse().map_err(|_| SslsError::Parse {
        line,
        msg: format!("bad value {value:?}"),
    })
}

fn load_context(source: &SourceArgs) -> ssls_core::Result<QueryContext> {
    if let Some(fixture) = &source.fixture {
        return QueryContext::load_fixture(BufReader::new(File::open(fixture)?));
    }
    let metric: DistanceMetric = source.metric.parse()?;
    let snapshot = default_snapshot(source.snapshot.clone())?;
    let graph = load_graph(&snapshot)?;
    let user = source
        .user
        .ok_or_else(|| SslsError::Param("--user is required with a snapshot source".into()))?;
    QueryContext::build(&graph, user, metric)
}

#[allow(clippy::too_many_arguments)]
fn dispatch(
    algo: Algorithm,
    table: &ScoreTable<'_>,
    params: &Params,
    cfg: &BaselineConfig,
    seed: u64,
    max_states: Option<u64>,
    brute_cap: u64,
) -> ssls_core::Result<SelectionResult> {
    match algo {
        Algorithm::Exact => solve_exact_with(
            table,
            params,
            &ExactOptions {
                max_states,
                ..Default::default()
            },
        ),
        Algorithm::Approx => approx::solve_approx(table, params),
        Algorithm::ExactPlus => exact_plus::solve_exact_plus(table, params),
        Algorithm::Fast => exact_plus::solve_fast_approx(table, params),
        Algorithm::Brute => baselines::brute_force(table, params, brute_cap),
        Algorithm::Gmc => baselines::gmc(table, params),
        Algorithm::Gne => {
            let gne_cfg = GneConfig {
                rng_seed: cfg.gne.rng_seed ^ seed,
                ..cfg.gne
            };
            baselines::gne(table, params, &gne_cfg)
        }
        Algorithm::Sos => baselines::adaptive_sos(table, params, &cfg.sos),
    }
}

fn cmd_query(args: QueryArgs) -> ssls_core::Result<()> {
    let ctx = load_context(&args.source)?;
    let omega = clamp_omega(args.omega);
    let params = Params {
        k: args.k,
        alpha: args.alpha,
        omega,
        theta: args.theta,
        metric: ctx.metric(),
    };
    params.validate()?;
    let algo: Algorithm = args.algo.parse()?;
    let cfg = load_baseline_config(args.config.as_deref())?;
    let table = ScoreTable::build(&ctx, params.alpha)?;
    let result = dispatch(
        algo,
        &table,
        &params,
        &cfg,
        args.seed,
        args.max_states,
        args.brute_cap,
    )?;

    let selected: Vec<serde_json::Value> = result
        .members
        .iter()
        .map(|&l| {
            let mut obj = serde_json::Map::new();
            obj.insert("id".into(), serde_json::json!(l));
            obj.insert("name".into(), serde_json::json!(ctx.candidate_name(l)));
            if let Some(c) = ctx.coordinate(l) {
                obj.insert("x".into(), serde_json::json!(c.x));
                obj.insert("y".into(), serde_json::json!(c.y));
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    let mut doc = serde_json::json!({
        "algorithm": result.algorithm.name(),
        "user": ctx.query_user,
        "k": params.k,
        "alpha": params.alpha,
        "omega": params.omega,
        "metric": ctx.metric(),
        "selected": selected,
        "score": result.score,
        "telemetry": result.telemetry,
    });
    if args.timings {
        doc["telemetry"]["wall_ms"] = serde_json::json!(result.telemetry.wall_ms);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("serializable")
    );

    if let Some(path) = &args.geojson {
        write_geojson(path, &ctx, &result.members)?;
    }
    Ok(())
}

fn write_geojson(
    path: &Path,
    ctx: &QueryContext,
    selected: &[LocationId],
) -> ssls_core::Result<()> {
    if ctx.metric() == DistanceMetric::InjectedMatrix {
        return Err(SslsError::Param(
            "GeoJSON export needs a coordinate metric, not an injected matrix".into(),
        ));
    }
    let mut features = Vec::new();
    for &l in selected {
        let c = ctx
            .coordinate(l)
            .expect("selected candidate has a coordinate");
        features.push(serde_json::json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [c.y, c.x] },
            "properties": { "role": "selected", "location": l },
        }));
    }
    for &v in ctx.friends() {
        for &l in ctx.friend_locations(v) {
            let c = ctx.coordinate(l).expect("friend check-in has a coordinate");
            features.push(serde_json::json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [c.y, c.x] },
                "properties": { "role": "friend-checkin", "friend": v, "location": l },
            }));
        }
    }
    let doc = serde_json::json!({ "type": "FeatureCollection", "features": features });
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{}",
        serde_json::to_string_pretty(&doc).expect("serializable")
    )?;
    Ok(())
}

fn cmd_stats(snapshot: Option<PathBuf>) -> ssls_core::Result<()> {
    let graph = load_graph(&default_snapshot(snapshot)?)?;
    let s = graph.stats();
    println!("users {}", s.users);
    println!("edges {}", s.edges);
    println!("checkins {}", s.checkins);
    println!("places {}", s.places);
    println!("ac {:.6}", s.ac);
    println!("af {:.6}", s.af);
    println!("afc {:.6}", s.afc);
    Ok(())
}

fn cmd_score_dump(args: ScoreDumpArgs) -> ssls_core::Result<()> {
    let ctx = load_context(&args.source)?;
    let table = ScoreTable::build(&ctx, args.alpha)?;
    println!("locid,s_sc,s_sp,r_ss");
    for i in 0..table.len() {
        println!(
            "{},{:.6},{:.6},{:.6}",
            ctx.candidates()[i],
            table.social_relevance(i),
            table.spatial_relevance(i),
            table.relevance(i)
        );
    }
    if args.pairs {
        println!();
        println!("locid_a,locid_b,d_sc,d_sp,d_ss");
        for i in 0..table.len() {
            for j in (i + 1)..table.len() {
                println!(
                    "{},{},{:.6},{:.6},{:.6}",
                    ctx.candidates()[i],
                    ctx.candidates()[j],
                    table.social_diversity(i, j),
                    table.spatial_diversity(i, j),
                    table.pair_diversity(i, j)
                );
            }
        }
    }
    Ok(())
}

struct BenchRow {
    user: UserId,
    algo: &'static str,
    k: usize,
    f: f64,
    precision: f64,
    mmd_spatial: f64,
    mmd_ss: f64,
    sc_theta: f64,
    se: f64,
    wall_ms: f64,
}

fn cmd_bench(args: BenchArgs) -> ssls_core::Result<()> {
    let graph = load_graph(&default_snapshot(args.snapshot.clone())?)?;
    let metric: DistanceMetric = args.metric.parse()?;
    let omega = clamp_omega(args.omega);
    let cfg = load_baseline_config(args.config.as_deref())?;
    let k_list: Vec<usize> = args
        .k_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| SslsError::Param(format!("bad k {s:?}")))
        })
        .collect::<ssls_core::Result<_>>()?;
    let algos: Vec<Algorithm> = args
        .algos
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<ssls_core::Result<_>>()?;

    let members = graph.group_members(args.group);
    if members.is_empty() {
        return Err(SslsError::Ineligible(format!(
            "check-in group {} has no eligible users",
            args.group
        )));
    }
    // seeded sample without replacement
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut pool = members;
    let mut users = Vec::new();
    while users.len() < args.sample && !pool.is_empty() {
        let i = rng.gen_range(0..pool.len());
        users.push(pool.swap_remove(i));
    }
    users.sort_unstable();

    let next = Mutex::new(0usize);
    let rows = Mutex::new(Vec::<BenchRow>::new());
    let workers = args.workers.max(1).min(users.len().max(1));
    std::thread::scope(|scope| -> ssls_core::Result<()> {
        let mut handles = Vec::new();
        for _ in 0..workers {
            handles.push(scope.spawn(|| -> ssls_core::Result<()> {
                loop {
                    let idx = {
                        let mut guard = next.lock().expect("lock");
                        let i = *guard;
                        *guard += 1;
                        i
                    };
                    if idx >= users.len() {
                        return Ok(());
                    }
                    let user_rows = bench_user(
                        &graph,
                        users[idx],
                        metric,
                        &k_list,
                        &algos,
                        args.alpha,
                        omega,
                        args.theta,
                        &cfg,
                        args.seed,
                        args.max_states,
                        args.brute_cap,
                    )?;
                    rows.lock().expect("lock").extend(user_rows);
                }
            }));
        }
        for h in handles {
            h.join().expect("worker panicked")?;
        }
        Ok(())
    })?;
    let mut rows = rows.into_inner().expect("lock");
    rows.sort_by(|a, b| (a.user, a.algo, a.k).cmp(&(b.user, b.algo, b.k)));

    // aggregate means per (algo, k) cell
    let mut cells: BTreeMap<(&'static str, usize), (usize, BenchRow)> = BTreeMap::new();
    for r in &rows {
        let e = cells.entry((r.algo, r.k)).or_insert((
            0,
            BenchRow {
                user: 0,
                algo: r.algo,
                k: r.k,
                f: 0.0,
                precision: 0.0,
                mmd_spatial: 0.0,
                mmd_ss: 0.0,
                sc_theta: 0.0,
                se: 0.0,
                wall_ms: 0.0,
            },
        ));
        e.0 += 1;
        e.1.f += r.f;
        e.1.precision += r.precision;
        e.1.mmd_spatial += r.mmd_spatial;
        e.1.mmd_ss += r.mmd_ss;
        e.1.sc_theta += r.sc_theta;
        e.1.se += r.se;
        e.1.wall_ms += r.wall_ms;
    }

    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let header = if args.timings {
        "user,algo,k,alpha,omega,f,precision,mmd_spatial,mmd_ss,sc_theta,se,wall_ms"
    } else {
        "user,algo,k,alpha,omega,f,precision,mmd_spatial,mmd_ss,sc_theta,se"
    };
    writeln!(out, "{header}")?;
    let fmt_row = |r: &BenchRow, user: &str, n: usize| -> String {
        let scale = n as f64;
        let base = format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            user,
            r.algo,
            r.k,
            args.alpha,
            omega,
            r.f / scale,
            r.precision / scale,
            r.mmd_spatial / scale,
            r.mmd_ss / scale,
            r.sc_theta / scale,
            r.se / scale,
        );
        if args.timings {
            format!("{base},{:.3}", r.wall_ms / scale)
        } else {
            base
        }
    };
    for r in &rows {
        writeln!(out, "{}", fmt_row(r, &r.user.to_string(), 1))?;
    }
    for ((_, _), (n, mean)) in &cells {
        writeln!(out, "{}", fmt_row(mean, "mean", *n))?;
    }
    out.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench_user(
    graph: &SocioSpatialGraph,
    user: UserId,
    metric: DistanceMetric,
    k_list: &[usize],
    algos: &[Algorithm],
    alpha: f64,
    omega: f64,
    theta: f64,
    cfg: &BaselineConfig,
    seed: u64,
    max_states: Option<u64>,
    brute_cap: u64,
) -> ssls_core::Result<Vec<BenchRow>> {
    let ctx = QueryContext::build(graph, user, metric)?;
    let table = ScoreTable::build(&ctx, alpha)?;
    let mut rows = Vec::new();
    for &k in k_list {
        if k > ctx.len() {
            continue;
        }
        let params = Params {
            k,
            alpha,
            omega,
            theta,
            metric,
        };
        let exact = solve_exact(&table, &params)?;
        for &algo in algos {
            let res = if algo == Algorithm::Exact {
                exact.clone()
            } else {
                dispatch(
                    algo,
                    &table,
                    &params,
                    cfg,
                    seed ^ user ^ k as u64,
                    max_states,
                    brute_cap,
                )?
            };
            let precision = metrics::precision(&res.members, &exact.members)?;
            let mmd_spatial = metrics::mmd(&ctx, &res.members, MmdMode::Spatial, alpha)?;
            let mmd_ss = metrics::mmd(&ctx, &res.members, MmdMode::SocioSpatial, alpha)?;
            let sc_theta = metrics::social_coverage(&ctx, &res.members, theta)?;
            let (se, _) = metrics::social_entropy(&ctx, &res.members)?;
            rows.push(BenchRow {
                user,
                algo: res.algorithm.name(),
                k,
                f: res.score.total,
                precision,
                mmd_spatial,
                mmd_ss,
                sc_theta,
                se,
                wall_ms: res.telemetry.wall_ms,
            });
        }
    }
    Ok(rows)
}
