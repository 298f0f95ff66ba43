//! Workload generation, POI ingestion and the experiment runner behind the
//! `ssky` CLI.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geom::{Point2, Rect};
use crate::index::DEFAULT_FANOUT;
use crate::metrics::Metrics;
use crate::skyline::{Algorithm, QueryContext, SpatialData};
use crate::voronoi::{default_clip_box, VoronoiDiagram};

/// Sweep values before desk scaling.
pub const SWEEP_CARDINALITIES: [usize; 5] = [50_000, 100_000, 200_000, 500_000, 1_000_000];
pub const SWEEP_QUERY_SIZES: [usize; 5] = [5, 10, 15, 20, 40];
pub const SWEEP_SIGMAS: [f64; 5] = [0.01, 0.02, 0.04, 0.06, 0.08];

/// Attempts per query before giving up on a hull that fits the clip box.
const MAX_REGENERATIONS: u32 = 1000;

/// `n` points uniform in the unit square.
pub fn gen_uniform(n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point2::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect()
}

/// `k` points with each coordinate drawn from a normal around `center`,
/// clamped into `clip`.
pub fn gen_query(center: Point2, sigma: f64, k: usize, seed: u64, clip: Rect) -> Result<Vec<Point2>> {
    if k == 0 {
        return Err(Error::InvalidArgument("query needs at least one point".into()));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|_| Error::InvalidArgument(format!("bad sigma {sigma}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..k)
        .map(|_| {
            let x = center.x + normal.sample(&mut rng);
            let y = center.y + normal.sample(&mut rng);
            Point2::new(x.clamp(clip.min.x, clip.max.x), y.clamp(clip.min.y, clip.max.y))
        })
        .collect())
}

/// Mix `parts` into `base`; used to give every query its own stream.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base;
    for &p in parts {
        h = splitmix(h ^ splitmix(p));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rows parsed from a coordinate file, plus complaints about the rest.
#[derive(Debug, Clone, Default)]
pub struct ParsedRows {
    pub points: Vec<Point2>,
    /// `(line number, message)`, one per skipped row.
    pub warnings: Vec<(usize, String)>,
}

/// Parse rows of whitespace- or comma-separated numbers, keeping the first
/// two fields. Blank lines and `#` comments are skipped.
pub fn parse_rows(text: &str) -> ParsedRows {
    let mut out = ParsedRows::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed = (fields.len() >= 2)
            .then(|| (fields[0].parse::<f64>(), fields[1].parse::<f64>()))
            .and_then(|(x, y)| Some(Point2::new(x.ok()?, y.ok()?)))
            .filter(Point2::is_finite);
        match parsed {
            Some(p) => out.points.push(p),
            None => out.warnings.push((i + 1, format!("malformed row `{line}`"))),
        }
    }
    out
}

pub fn read_points(path: &Path) -> Result<ParsedRows> {
    let rows = parse_rows(&std::fs::read_to_string(path)?);
    if rows.points.is_empty() {
        return Err(Error::NoValidRows(path.to_path_buf()));
    }
    Ok(rows)
}

/// Load a POI file and min-max normalize each axis to `[0, 1]`.
pub fn load_poi(path: &Path) -> Result<ParsedRows> {
    let mut rows = read_points(path)?;
    let bb = Rect::bounding(rows.points.iter().copied()).expect("non-empty");
    let norm = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
    for p in &mut rows.points {
        *p = Point2::new(norm(p.x, bb.min.x, bb.max.x), norm(p.y, bb.min.y, bb.max.y));
    }
    Ok(rows)
}

/// Drop repeated coordinates, keeping first occurrences in order.
pub fn dedup_points(points: &[Point2]) -> Vec<Point2> {
    let mut seen = HashSet::with_capacity(points.len());
    points
        .iter()
        .copied()
        .filter(|p| seen.insert(((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetKind {
    Uniform,
    Poi(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Vary one parameter at a time around the defaults.
    OneAtATime,
    /// Every combination.
    Grid,
    /// Defaults only.
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    /// Multiplies every cardinality.
    pub scale: f64,
    pub cardinalities: Vec<usize>,
    pub query_sizes: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub default_cardinality: usize,
    pub default_query_size: usize,
    pub default_sigma: f64,
    pub sweep: SweepMode,
    pub queries_per_setting: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub fanout: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetKind::Uniform,
            scale: 0.1,
            cardinalities: SWEEP_CARDINALITIES.to_vec(),
            query_sizes: SWEEP_QUERY_SIZES.to_vec(),
            sigmas: SWEEP_SIGMAS.to_vec(),
            default_cardinality: 500_000,
            default_query_size: 15,
            default_sigma: 0.06,
            sweep: SweepMode::OneAtATime,
            queries_per_setting: 100,
            seed: 1,
            algorithms: vec![Algorithm::Alg1, Algorithm::Es, Algorithm::Vs2],
            fanout: DEFAULT_FANOUT,
        }
    }
}

impl ExperimentConfig {
    /// Parse `key = value` lines; `#` starts a comment. Lists are
    /// comma-separated. Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut poi_path: Option<PathBuf> = None;
        let mut poi = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Config { line: i + 1, reason };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("bad number `{v}` for {key}")));
            let int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("bad integer `{v}` for {key}")));
            let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect::<Vec<_>>();
            match key {
                "dataset" => match value {
                    "uniform" => poi = false,
                    "poi" => poi = true,
                    _ => return Err(err(format!("unknown dataset `{value}`"))),
                },
                "poi_path" => poi_path = Some(PathBuf::from(value)),
                "scale" => c.scale = num(value)?,
                "cardinalities" => c.cardinalities = list().into_iter().map(int).collect::<Result<_>>()?,
                "query_sizes" => c.query_sizes = list().into_iter().map(int).collect::<Result<_>>()?,
                "sigmas" => c.sigmas = list().into_iter().map(num).collect::<Result<_>>()?,
                "default_cardinality" => c.default_cardinality = int(value)?,
                "default_query_size" => c.default_query_size = int(value)?,
                "default_sigma" => c.default_sigma = num(value)?,
                "sweep" => {
                    c.sweep = match value {
                        "one-at-a-time" => SweepMode::OneAtATime,
                        "grid" => SweepMode::Grid,
                        "single" => SweepMode::Single,
                        _ => return Err(err(format!("unknown sweep mode `{value}`"))),
                    }
                }
                "queries_per_setting" => c.queries_per_setting = int(value)?,
                "seed" => c.seed = value.parse().map_err(|_| err(format!("bad seed `{value}`")))?,
                "algorithms" => {
                    c.algorithms = list()
                        .into_iter()
                        .map(|a| a.parse::<Algorithm>().map_err(|e| err(e.to_string())))
                        .collect::<Result<_>>()?
                }
                "fanout" => c.fanout = int(value)?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        if poi {
            let path = poi_path.ok_or(Error::Config {
                line: 0,
                reason: "dataset = poi needs poi_path".into(),
            })?;
            c.dataset = DatasetKind::Poi(path);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::Config { line: 0, reason: reason.into() });
        if self.algorithms.is_empty() {
            return bad("no algorithms requested");
        }
        if self.queries_per_setting == 0 {
            return bad("queries_per_setting must be positive");
        }
        if self.scale.is_nan() || self.scale <= 0.0 {
            return bad("scale must be positive");
        }
        if self.query_sizes.iter().chain([&self.default_query_size]).any(|&k| k == 0) {
            return bad("query sizes must be positive");
        }
        if self.sigmas.iter().chain([&self.default_sigma]).any(|&s| s.is_nan() || s <= 0.0) {
            return bad("sigmas must be positive");
        }
        if self.cardinalities.iter().chain([&self.default_cardinality]).any(|&n| self.scaled(n) == 0) {
            return bad("cardinalities must stay positive after scaling");
        }
        Ok(())
    }

    pub fn scaled(&self, n: usize) -> usize {
        (n as f64 * self.scale).round() as usize
    }

    /// Sweep points in run order. Cardinalities are unscaled.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let d = SweepPoint {
            sweep: "default",
            cardinality: self.default_cardinality,
            query_size: self.default_query_size,
            sigma: self.default_sigma,
        };
        let poi = matches!(self.dataset, DatasetKind::Poi(_));
        match self.sweep {
            SweepMode::Single => vec![d],
            SweepMode::OneAtATime => {
                let mut v = Vec::new();
                if !poi {
                    v.extend(self.cardinalities.iter().map(|&n| SweepPoint { sweep: "cardinality", cardinality: n, ..d }));
                }
                v.extend(self.query_sizes.iter().map(|&k| SweepPoint { sweep: "query_size", query_size: k, ..d }));
                v.extend(self.sigmas.iter().map(|&s| SweepPoint { sweep: "sigma", sigma: s, ..d }));
                v
            }
            SweepMode::Grid => {
                let cards = if poi { vec![d.cardinality] } else { self.cardinalities.clone() };
                let mut v = Vec::new();
                for &n in &cards {
                    for &k in &self.query_sizes {
                        for &s in &self.sigmas {
                            v.push(SweepPoint { sweep: "grid", cardinality: n, query_size: k, sigma: s });
                        }
                    }
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Which parameter this point varies.
    pub sweep: &'static str,
    pub cardinality: usize,
    pub query_size: usize,
    pub sigma: f64,
}

/// One algorithm run on one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub sweep_index: usize,
    pub query_index: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub skyline_size: usize,
    pub seed_count: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoStats {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub failures: usize,
    pub mean_time: Duration,
    pub median_time: Duration,
    pub mean_cell_reads: f64,
    pub median_cell_reads: f64,
    pub mean_index_node_reads: f64,
    pub median_index_node_reads: f64,
    pub mean_io: f64,
    pub median_io: f64,
    pub mean_dominance_tests: f64,
    pub median_dominance_tests: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub point: SweepPoint,
    /// Actual dataset size after scaling and deduplication.
    pub dataset_size: usize,
    /// Queries redrawn because their hull did not fit the clip box.
    pub regenerations: u64,
    pub stats: Vec<AlgoStats>,
    /// `(query index, algorithm, error)` for runs that did not finish.
    pub failures: Vec<(usize, Algorithm, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub sweeps: Vec<SweepResult>,
    pub records: Vec<QueryRecord>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn stats(algorithm: Algorithm, runs: &[&QueryRecord], failures: usize) -> AlgoStats {
    let col = |f: &dyn Fn(&Metrics) -> f64| runs.iter().map(|r| f(&r.metrics)).collect::<Vec<f64>>();
    let times = col(&|m| m.wall_time.as_secs_f64());
    let cells = col(&|m| m.cell_reads as f64);
    let nodes = col(&|m| m.index_node_reads as f64);
    let io = col(&|m| m.io() as f64);
    let dom = col(&|m| m.dominance_tests as f64);
    AlgoStats {
        algorithm,
        runs: runs.len(),
        failures,
        mean_time: Duration::from_secs_f64(mean(&times)),
        median_time: Duration::from_secs_f64(median(times)),
        mean_cell_reads: mean(&cells),
        median_cell_reads: median(cells),
        mean_index_node_reads: mean(&nodes),
        median_index_node_reads: median(nodes),
        mean_io: mean(&io),
        median_io: median(io),
        mean_dominance_tests: mean(&dom),
        median_dominance_tests: median(dom),
    }
}

/// A query hull must stay clear of the clip box for the boundary walk.
fn fits(q: &[Point2], clip: &Rect) -> bool {
    let margin = 1e-6 * clip.diagonal();
    let inner = Rect::new(
        clip.min + Point2::new(margin, margin),
        clip.max - Point2::new(margin, margin),
    );
    q.iter().all(|&p| inner.contains(p))
}

/// Draw query `query_index` of a sweep point. Returns the points, the seed
/// that produced them and how many draws were rejected.
pub fn draw_query(
    config: &ExperimentConfig,
    data: &[Point2],
    clip: &Rect,
    point: &SweepPoint,
    sweep_index: usize,
    query_index: usize,
) -> Result<(Vec<Point2>, u64, u64)> {
    for attempt in 0..MAX_REGENERATIONS {
        let seed = derive_seed(config.seed, &[sweep_index as u64, query_index as u64, attempt as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = match config.dataset {
            DatasetKind::Uniform => Point2::new(rng.random::<f64>(), rng.random::<f64>()),
            DatasetKind::Poi(_) => data[rng.random_range(0..data.len())],
        };
        let q = gen_query(center, point.sigma, point.query_size, rng.random(), *clip)?;
        if fits(&q, clip) {
            return Ok((q, seed, attempt as u64));
        }
    }
    Err(Error::InvalidArgument(format!(
        "no query hull fitting the clip box after {MAX_REGENERATIONS} draws"
    )))
}

/// Run every requested algorithm on every query of every sweep point,
/// checking that they all return the same skyline.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    run_experiment_with(config, |_| {})
}

/// As [`run_experiment`], calling `progress` with a line of text after each
/// sweep point.
pub fn run_experiment_with(config: &ExperimentConfig, mut progress: impl FnMut(&str)) -> Result<Report> {
    config.validate()?;
    let poi = match &config.dataset {
        DatasetKind::Poi(path) => Some(dedup_points(&load_poi(path)?.points)),
        DatasetKind::Uniform => None,
    };
    let mut report = Report::default();
    let mut datasets: BTreeMap<usize, SpatialData<VoronoiDiagram>> = BTreeMap::new();

    for (si, point) in config.sweep_points().into_iter().enumerate() {
        let n = config.scaled(point.cardinality);
        if let std::collections::btree_map::Entry::Vacant(e) = datasets.entry(n) {
            let pts = match &poi {
                Some(p) => p.clone(),
                None => gen_uniform(n, derive_seed(config.seed, &[u64::MAX, n as u64])),
            };
            e.insert(SpatialData::build(pts, config.fanout)?);
        }
        let data = &datasets[&n];
        let clip = default_clip_box(&data.points);

        let mut regenerations = 0;
        let mut failures = Vec::new();
        let first_record = report.records.len();
        for qi in 0..config.queries_per_setting {
            let (q, seed, regen) = draw_query(config, &data.points, &clip, &point, si, qi)?;
            regenerations += regen;
            let ctx = QueryContext::new(&q)?;
            let mut reference: Option<(Algorithm, Vec<u32>)> = None;
            for &algo in &config.algorithms {
                let r = match data.run(algo, &ctx) {
                    Ok(r) => r,
                    Err(e) => {
                        failures.push((qi, algo, e.to_string()));
                        continue;
                    }
                };
                match &reference {
                    None => reference = Some((algo, r.skyline_ids.clone())),
                    Some((a0, s0)) if *s0 != r.skyline_ids => {
                        return Err(Error::Consistency {
                            seed,
                            detail: format!(
                                "{a0} returned {} points, {algo} returned {}",
                                s0.len(),
                                r.skyline_ids.len()
                            ),
                        });
                    }
                    Some(_) => {}
                }
                report.records.push(QueryRecord {
                    sweep_index: si,
                    query_index: qi,
                    seed,
                    algorithm: algo,
                    skyline_size: r.skyline_ids.len(),
                    seed_count: r.seed_ids.len(),
                    metrics: r.metrics,
                });
            }
        }
        let stats = config
            .algorithms
            .iter()
            .map(|&a| {
                let runs: Vec<&QueryRecord> = report.records[first_record..]
                    .iter()
                    .filter(|r| r.algorithm == a)
                    .collect();
                let failed = failures.iter().filter(|f| f.1 == a).count();
                stats(a, &runs, failed)
            })
            .collect();
        let result = SweepResult {
            point,
            dataset_size: data.points.len(),
            regenerations,
            stats,
            failures,
        };
        progress(&summary_block(&result));
        report.sweeps.push(result);
    }
    Ok(report)
}

pub const CSV_HEADER: &str = "sweep,cardinality,query_size,sigma,algorithm,statistic,value";

impl Report {
    /// One row per sweep point, algorithm and statistic. Times are in
    /// microseconds; `regenerations` rows use algorithm `all`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for s in &self.sweeps {
            let p = &s.point;
            let prefix = format!("{},{},{},{}", p.sweep, s.dataset_size, p.query_size, p.sigma);
            let _ = writeln!(out, "{prefix},all,regenerations,{}", s.regenerations);
            for a in &s.stats {
                let rows: [(&str, f64); 14] = [
                    ("runs", a.runs as f64),
                    ("failures", a.failures as f64),
                    ("mean_time_us", a.mean_time.as_secs_f64() * 1e6),
                    ("median_time_us", a.median_time.as_secs_f64() * 1e6),
                    ("mean_cell_reads", a.mean_cell_reads),
                    ("median_cell_reads", a.median_cell_reads),
                    ("mean_index_node_reads", a.mean_index_node_reads),
                    ("median_index_node_reads", a.median_index_node_reads),
                    ("mean_io", a.mean_io),
                    ("median_io", a.median_io),
                    ("mean_dominance_tests", a.mean_dominance_tests),
                    ("median_dominance_tests", a.median_dominance_tests),
                    ("mean_skyline_size", self.mean_of(s, a.algorithm, |r| r.skyline_size as f64)),
                    ("mean_seed_count", self.mean_of(s, a.algorithm, |r| r.seed_count as f64)),
                ];
                for (name, v) in rows {
                    let _ = writeln!(out, "{prefix},{},{name},{v}", a.algorithm);
                }
            }
        }
        out
    }

    fn mean_of(&self, s: &SweepResult, a: Algorithm, f: impl Fn(&QueryRecord) -> f64) -> f64 {
        let idx = self.sweeps.iter().position(|x| std::ptr::eq(x, s));
        let v: Vec<f64> = self
            .records
            .iter()
            .filter(|r| Some(r.sweep_index) == idx && r.algorithm == a)
            .map(f)
            .collect();
        mean(&v)
    }

    pub fn summary(&self) -> String {
        self.sweeps.iter().map(summary_block).collect::<Vec<_>>().join("\n")
    }

    /// Records for one sweep point and algorithm, in query order.
    pub fn records_for(&self, sweep_index: usize, algorithm: Algorithm) -> Vec<&QueryRecord> {
        self.records
            .iter()
            .filter(|r| r.sweep_index == sweep_index && r.algorithm == algorithm)
            .collect()
    }
}

fn summary_block(s: &SweepResult) -> String {
    let p = &s.point;
    let mut out = format!(
        "[{}] |P|={} |Q|={} sigma={} regenerations={}\n",
        p.sweep, s.dataset_size, p.query_size, p.sigma, s.regenerations
    );
    let _ = writeln!(
        out,
        "  {:<7} {:>6} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "algo", "runs", "med_time_ms", "med_cells", "med_nodes", "med_io", "med_dom"
    );
    for a in &s.stats {
        let _ = writeln!(
            out,
            "  {:<7} {:>6} {:>12.3} {:>12.1} {:>12.1} {:>12.1} {:>12.1}",
            a.algorithm.name(),
            a.runs,
            a.median_time.as_secs_f64() * 1e3,
            a.median_cell_reads,
            a.median_index_node_reads,
            a.median_io,
            a.median_dominance_tests
        );
    }
    for (qi, a, e) in &s.failures {
        let _ = writeln!(out, "  FAILED query {qi} {a}: {e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skyline::brute_force_skyline;

    #[test]
    fn uniform_is_deterministic_and_in_range() {
        assert_eq!(gen_uniform(1, 5).len(), 1);
        assert_eq!(gen_uniform(100, 5), gen_uniform(100, 5));
        assert_ne!(gen_uniform(100, 5), gen_uniform(100, 6));
        assert!(gen_uniform(1000, 7).iter().all(|p| (0.0..1.0).contains(&p.x) && (0.0..1.0).contains(&p.y)));
    }

    #[test]
    fn uniform_passes_chi_square_on_a_grid() {
        let pts = gen_uniform(100_000, 11);
        let mut counts = [0u32; 100];
        for p in &pts {
            let (i, j) = ((p.x * 10.0) as usize, (p.y * 10.0) as usize);
            counts[i * 10 + j] += 1;
        }
        let expected = 1000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // upper 1% point of chi-square with 99 degrees of freedom
        assert!(chi2 < 134.642, "chi2 = {chi2}");
    }

    fn unit_clip() -> Rect {
        Rect::new(Point2::new(-3.0, -3.0), Point2::new(4.0, 4.0))
    }

    #[test]
    fn query_generator() {
        let c = Point2::new(0.5, 0.5);
        let tight = gen_query(c, 1e-12, 20, 3, unit_clip()).unwrap();
        assert!(tight.iter().all(|p| p.dist(c) < 1e-9));
        assert_eq!(gen_query(c, 0.06, 15, 4, unit_clip()).unwrap(), gen_query(c, 0.06, 15, 4, unit_clip()).unwrap());
        assert!(gen_query(c, 0.0, 5, 1, unit_clip()).is_err());
        assert!(gen_query(c, 0.1, 0, 1, unit_clip()).is_err());

        let q = gen_query(c, 0.06, 10_000, 5, unit_clip()).unwrap();
        for coord in [|p: &Point2| p.x, |p: &Point2| p.y] {
            let v: Vec<f64> = q.iter().map(coord).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
            assert!((sd - 0.06).abs() <= 0.05 * 0.06, "sd = {sd}");
        }

        let small = Rect::new(Point2::new(0.45, 0.45), Point2::new(0.55, 0.55));
        let clamped = gen_query(c, 1.0, 100, 6, small).unwrap();
        assert!(clamped.iter().all(|p| small.contains(*p)));
    }

    #[test]
    fn row_parsing() {
        let rows = parse_rows("# header\n1 2\n3,4,cafe\n\n5\t6\n");
        assert_eq!(rows.points, vec![Point2::new(1.0, 2.0), Point2::new(3.0, 4.0), Point2::new(5.0, 6.0)]);
        assert!(rows.warnings.is_empty());

        let mut text = String::new();
        for i in 0..10 {
            if i == 4 {
                text.push_str("oops 1\n");
            } else {
                let _ = writeln!(text, "{i} {}", i * 2);
            }
        }
        let rows = parse_rows(&text);
        assert_eq!(rows.points.len(), 9);
        assert_eq!(rows.warnings.len(), 1);
        assert_eq!(rows.warnings[0].0, 5);
    }

    #[test]
    fn poi_is_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poi.txt");
        std::fs::write(&path, "-120.5 35.0 food\n-118.0 36.0 fuel\n-119.0 34.0 park\n").unwrap();
        let rows = load_poi(&path).unwrap();
        assert_eq!(rows.points.len(), 3);
        assert_eq!(rows.points[0], Point2::new(0.0, 0.5));
        assert_eq!(rows.points[1], Point2::new(1.0, 1.0));
        assert_eq!(rows.points[2], Point2::new(0.6, 0.0));

        std::fs::write(&path, "a b\n").unwrap();
        assert!(matches!(load_poi(&path), Err(Error::NoValidRows(_))));
        assert!(matches!(load_poi(&dir.path().join("missing")), Err(Error::Io(_))));
    }

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::parse(
            "# desk run\nscale = 0.001\ncardinalities = 50000, 100000\nsigmas=0.01,0.06\n\
             sweep = grid\nalgorithms = es, vs2 # compare\nqueries_per_setting = 3\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(c.cardinalities, vec![50_000, 100_000]);
        assert_eq!(c.sigmas, vec![0.01, 0.06]);
        assert_eq!(c.algorithms, vec![Algorithm::Es, Algorithm::Vs2]);
        assert_eq!(c.sweep_points().len(), 2 * 5 * 2);
        assert_eq!(c.scaled(50_000), 50);

        let d = ExperimentConfig::default();
        assert_eq!(d.sweep_points().len(), 15);
        assert_eq!(d.scaled(d.default_cardinality), 50_000);

        match ExperimentConfig::parse("seed = 1\nbogus = 2\n") {
            Err(Error::Config { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("algorithms = b2s2").is_err());
        assert!(ExperimentConfig::parse("dataset = poi").is_err());
        assert!(ExperimentConfig::parse("queries_per_setting = 0").is_err());
    }

    fn small_config(algorithms: Vec<Algorithm>, n: usize) -> ExperimentConfig {
        ExperimentConfig {
            scale: 1.0,
            default_cardinality: n,
            default_query_size: 5,
            sweep: SweepMode::Single,
            queries_per_setting: 10,
            algorithms,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn experiment_agreement_and_determinism() {
        let cfg = small_config(Algorithm::ALL.to_vec(), 500);
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a.sweeps.len(), 1);
        assert_eq!(a.records.len(), 40);
        assert!(a.sweeps[0].failures.is_empty());
        let b = run_experiment(&cfg).unwrap();
        let strip = |r: &Report| {
            r.records
                .iter()
                .map(|x| (x.seed, x.algorithm, x.skyline_size, x.metrics.dominance_tests, x.metrics.io()))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        let csv = a.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.contains("default,500,5,0.06,es,median_dominance_tests,"));
        assert!(a.summary().contains("vs2"));
    }

    #[test]
    fn oracle_only_experiment() {
        let a = run_experiment(&small_config(vec![Algorithm::Oracle], 200)).unwrap();
        assert_eq!(a.sweeps[0].stats.len(), 1);
        assert_eq!(a.sweeps[0].stats[0].runs, 10);
        assert!(a.records.iter().all(|r| r.metrics.dominance_tests == 0));
    }

    #[test]
    fn poi_experiment_uses_data_centers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poi.csv");
        let pts = gen_uniform(300, 12);
        let mut text = String::new();
        for p in &pts {
            let _ = writeln!(text, "{},{},shop", -124.0 + 10.0 * p.x, 32.0 + 10.0 * p.y);
        }
        text.push_str(&format!("{},{},dup\n", -124.0 + 10.0 * pts[0].x, 32.0 + 10.0 * pts[0].y));
        std::fs::write(&path, text).unwrap();
        let cfg = ExperimentConfig {
            dataset: DatasetKind::Poi(path),
            query_sizes: vec![5],
            sigmas: vec![0.02],
            queries_per_setting: 4,
            algorithms: vec![Algorithm::Es, Algorithm::Oracle],
            ..ExperimentConfig::default()
        };
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.sweeps.len(), 2);
        assert_eq!(r.sweeps[0].dataset_size, 300);
    }

    #[test]
    fn drawn_queries_fit_the_clip_box() {
        let cfg = small_config(vec![Algorithm::Es], 100);
        let data = gen_uniform(100, 1);
        let clip = default_clip_box(&data);
        let point = cfg.sweep_points()[0];
        let (q, _, regen) = draw_query(&cfg, &data, &clip, &point, 0, 0).unwrap();
        assert_eq!(regen, 0);
        assert_eq!(q.len(), 5);
        // a very wide spread forces redraws against a tight box
        let tight = Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        let wide = SweepPoint { sigma: 0.3, ..point };
        let (q, _, regen) = draw_query(&cfg, &data, &tight, &wide, 0, 0).unwrap();
        assert!(regen > 0);
        assert!(q.iter().all(|p| tight.contains(*p)));
        let _ = brute_force_skyline(&data, &q);
    }
}
