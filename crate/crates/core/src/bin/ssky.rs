use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spatial_skyline::bench::{
    derive_seed, gen_query, gen_uniform, parse_rows, read_points, run_experiment_with, ExperimentConfig,
};
use spatial_skyline::geom::{Point2, Rect};
use spatial_skyline::index::DEFAULT_FANOUT;
use spatial_skyline::skyline::{Algorithm, QueryContext, SpatialData};
use spatial_skyline::storage::{write_cells, CellFile};
use spatial_skyline::voronoi::{build_voronoi, default_clip_box};

#[derive(Parser)]
#[command(name = "ssky", version, about = "Spatial skyline queries over 2-D point sets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write uniform points in the unit square, one `x y` per line.
    GenData {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write query sets as `qid x y` lines.
    GenQueries(GenQueries),
    /// Build the Voronoi diagram of a data file and write it as a cell file.
    VdBuild {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run skyline queries and write a per-query CSV report.
    Query {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        vd: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// One or more of es, vs2, alg1, oracle.
        #[arg(long, value_delimiter = ',', default_value = "es")]
        algo: Vec<String>,
        /// Defaults to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_FANOUT)]
        fanout: usize,
    },
    /// Run an experiment sweep described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// CSV output; the summary table goes to stdout.
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "centers")]
struct CenterSource {
    /// Fixed center as `x,y`.
    #[arg(long, value_parser = parse_point)]
    center: Option<Point2>,
    /// Pick each center from the points of this data file.
    #[arg(long)]
    from_data: Option<PathBuf>,
}

#[derive(Args)]
struct GenQueries {
    #[command(flatten)]
    centers: CenterSource,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_point(s: &str) -> std::result::Result<Point2, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let p = Point2::new(
        x.trim().parse().map_err(|e| format!("{e}"))?,
        y.trim().parse().map_err(|e| format!("{e}"))?,
    );
    if p.is_finite() {
        Ok(p)
    } else {
        Err("coordinates must be finite".into())
    }
}

fn load_data(path: &Path) -> Result<Vec<Point2>> {
    let rows = read_points(path).with_context(|| format!("reading {}", path.display()))?;
    for (line, msg) in &rows.warnings {
        eprintln!("warning: {}:{line}: {msg}", path.display());
    }
    Ok(rows.points)
}

fn write_points(path: &Path, points: &[Point2]) -> Result<()> {
    let mut s = String::with_capacity(points.len() * 40);
    for p in points {
        let _ = writeln!(s, "{} {}", p.x, p.y);
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

/// Query sets keyed by id, from `qid x y` lines.
fn load_queries(path: &Path) -> Result<BTreeMap<u64, Vec<Point2>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out: BTreeMap<u64, Vec<Point2>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (qid, rest) = line
            .split_once(|c: char| c.is_whitespace() || c == ',')
            .with_context(|| format!("{}:{}: expected `qid x y`", path.display(), i + 1))?;
        let qid: u64 = qid
            .parse()
            .with_context(|| format!("{}:{}: bad query id `{qid}`", path.display(), i + 1))?;
        let row = parse_rows(rest);
        match row.points.as_slice() {
            [p] => out.entry(qid).or_default().push(*p),
            _ => bail!("{}:{}: expected `qid x y`", path.display(), i + 1),
        }
    }
    if out.is_empty() {
        bail!("{} holds no queries", path.display());
    }
    Ok(out)
}

fn gen_queries(a: GenQueries) -> Result<()> {
    let unit = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)];
    let (data, clip) = match &a.centers.from_data {
        Some(path) => {
            let d = load_data(path)?;
            let clip = default_clip_box(&d);
            (d, clip)
        }
        None => (Vec::new(), default_clip_box(&unit)),
    };
    let mut s = String::new();
    for qid in 0..a.count {
        let seed = derive_seed(a.seed, &[qid as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = match a.centers.center {
            Some(c) => c,
            None => data[rng.random_range(0..data.len())],
        };
        for p in gen_query(center, a.sigma, a.k, rng.random(), clip)? {
            let _ = writeln!(s, "{qid} {} {}", p.x, p.y);
        }
    }
    fs::write(&a.out, s).with_context(|| format!("writing {}", a.out.display()))
}

fn vd_build(data: &Path, out: &Path) -> Result<()> {
    let points = load_data(data)?;
    let clip = default_clip_box(&points);
    let diagram = build_voronoi(&points, clip)?;
    let file = write_cells(&diagram, out)?;
    eprintln!(
        "wrote {} cells to {} (clip box [{}, {}] x [{}, {}])",
        file.len(),
        out.display(),
        clip.min.x,
        clip.max.x,
        clip.min.y,
        clip.max.y
    );
    Ok(())
}

fn query(
    data: &Path,
    vd: &Path,
    queries: &Path,
    algos: &[String],
    report: Option<&Path>,
    fanout: usize,
) -> Result<()> {
    let algos: Vec<Algorithm> = algos.iter().map(|a| a.parse()).collect::<Result<_, _>>()?;
    let points = load_data(data)?;
    let cells = CellFile::open(vd).with_context(|| format!("opening {}", vd.display()))?;
    let cell_list = cells.load_all()?;
    if cell_list.iter().zip(&points).any(|(c, p)| c.site != *p) {
        bail!("{} was not built from {}", vd.display(), data.display());
    }
    let ds = SpatialData::with_cells(points, cells, &cell_list, fanout)?;
    let clip = Rect::bounding(cell_list.iter().flat_map(|c| c.vertices.iter().copied()))
        .context("cell file has no vertices")?;

    let mut out = String::from(
        "qid,algorithm,skyline_size,seed_count,dominance_tests,cell_reads,index_node_reads,wall_time_us,skyline\n",
    );
    for (qid, q) in load_queries(queries)? {
        if let Some(p) = q.iter().find(|p| !clip.contains(**p)) {
            bail!("query {qid}: point ({}, {}) lies outside the diagram", p.x, p.y);
        }
        let ctx = QueryContext::new(&q)?;
        for &algo in &algos {
            let r = ds.run(algo, &ctx).with_context(|| format!("query {qid}, {algo}"))?;
            let ids: Vec<String> = r.skyline_ids.iter().map(u32::to_string).collect();
            let m = r.metrics;
            let _ = writeln!(
                out,
                "{qid},{algo},{},{},{},{},{},{:.1},{}",
                r.skyline_ids.len(),
                r.seed_ids.len(),
                m.dominance_tests,
                m.cell_reads,
                m.index_node_reads,
                m.wall_time.as_secs_f64() * 1e6,
                ids.join(" ")
            );
        }
    }
    match report {
        Some(path) => fs::write(path, out).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn sweep(config: &Path, report: &Path) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let r = run_experiment_with(&cfg, |block| eprint!("{block}"))?;
    fs::write(report, r.to_csv()).with_context(|| format!("writing {}", report.display()))?;
    print!("{}", r.summary());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::GenData { n, seed, out } => {
            if n == 0 {
                bail!("--n must be at least 1");
            }
            write_points(&out, &gen_uniform(n, seed))
        }
        Cmd::GenQueries(a) => gen_queries(a),
        Cmd::VdBuild { data, out } => vd_build(&data, &out),
        Cmd::Query {
            data,
            vd,
            queries,
            algo,
            report,
            fanout,
        } => query(&data, &vd, &queries, &algo, report.as_deref(), fanout),
        Cmd::Sweep { config, report } => sweep(&config, &report),
    }
}
