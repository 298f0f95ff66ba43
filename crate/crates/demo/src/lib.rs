//! WebAssembly bindings for the browser demo. Coordinates cross the boundary
//! as flat `[x0, y0, x1, y1, ...]` arrays.
//!
//! Every exported method wraps a plain Rust method returning
//! `Result<_, String>` so the logic can be tested natively.

use spatial_skyline::bench::gen_uniform;
use spatial_skyline::geom::{perpendicular_bisector, Point2, Rect};
use spatial_skyline::index::DEFAULT_FANOUT;
use spatial_skyline::skyline::{
    dominates_over, dominating_region_box, Algorithm, QueryContext, SpatialData,
};
use spatial_skyline::voronoi::{VoronoiDiagram, NO_NEIGHBOR};
use wasm_bindgen::prelude::*;

/// The square the page draws.
pub const VIEW: Rect = Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));

const MAX_POINTS: u32 = 20_000;

fn to_points(flat: &[f64]) -> Result<Vec<Point2>, String> {
    if !flat.len().is_multiple_of(2) {
        return Err("coordinate array has odd length".into());
    }
    flat.chunks_exact(2)
        .map(|c| Point2::try_new(c[0], c[1]).map_err(|e| e.to_string()))
        .collect()
}

fn flatten(points: impl IntoIterator<Item = Point2>) -> Vec<f64> {
    points.into_iter().flat_map(|p| [p.x, p.y]).collect()
}

/// Part of the line `a x + b y = c` inside `r`, by clipping its parametric
/// form against each slab.
fn clip_line(a: f64, b: f64, c: f64, r: &Rect) -> Option<(Point2, Point2)> {
    let n2 = a * a + b * b;
    let origin = Point2::new(a * c / n2, b * c / n2);
    let dir = Point2::new(-b, a);
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for (o, d, lo, hi) in [
        (origin.x, dir.x, r.min.x, r.max.x),
        (origin.y, dir.y, r.min.y, r.max.y),
    ] {
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let (u, v) = ((lo - o) / d, (hi - o) / d);
            t0 = t0.max(u.min(v));
            t1 = t1.min(u.max(v));
        }
    }
    (t0 <= t1).then(|| (origin + dir * t0, origin + dir * t1))
}

/// Result of one skyline query.
#[wasm_bindgen]
pub struct QueryOutcome {
    skyline: Vec<u32>,
    seeds: Vec<u32>,
    hull: Vec<f64>,
    /// Number of dominance tests made.
    pub dominance_tests: u64,
    pub cell_reads: u64,
    pub index_node_reads: u64,
    pub time_ms: f64,
}

#[wasm_bindgen]
impl QueryOutcome {
    #[wasm_bindgen(getter)]
    pub fn skyline(&self) -> Vec<u32> {
        self.skyline.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn seeds(&self) -> Vec<u32> {
        self.seeds.clone()
    }

    /// Hull vertices of the query points, flattened.
    #[wasm_bindgen(getter)]
    pub fn hull(&self) -> Vec<f64> {
        self.hull.clone()
    }
}

/// How two data points compare for a query set.
#[wasm_bindgen]
pub struct DominanceOutcome {
    /// `1` if the first point dominates, `-1` if the second does, `0` if neither.
    pub verdict: i32,
    /// Whether the bisector passes through the hull interior.
    pub crosses_hull: bool,
    bisector: Vec<f64>,
}

#[wasm_bindgen]
impl DominanceOutcome {
    /// The bisector clipped to the view as `[x0, y0, x1, y1]`, or empty.
    #[wasm_bindgen(getter)]
    pub fn bisector(&self) -> Vec<f64> {
        self.bisector.clone()
    }
}

#[wasm_bindgen]
pub struct Demo {
    data: SpatialData<VoronoiDiagram>,
}

impl Demo {
    pub fn try_new(n: u32, seed: u32) -> Result<Demo, String> {
        if n == 0 || n > MAX_POINTS {
            return Err(format!("point count must be in 1..={MAX_POINTS}"));
        }
        let data = SpatialData::build(gen_uniform(n as usize, seed as u64), DEFAULT_FANOUT)
            .map_err(|e| e.to_string())?;
        Ok(Demo { data })
    }

    fn context(&self, queries: &[f64]) -> Result<QueryContext, String> {
        let q = to_points(queries)?;
        if q.is_empty() {
            return Err("place at least one query point".into());
        }
        QueryContext::new(&q).map_err(|e| e.to_string())
    }

    fn point(&self, i: u32) -> Result<Point2, String> {
        self.data
            .points
            .get(i as usize)
            .copied()
            .ok_or_else(|| format!("no point {i}"))
    }

    pub fn try_run(&self, queries: &[f64], algo: &str) -> Result<QueryOutcome, String> {
        let algo: Algorithm = algo.parse().map_err(|e: spatial_skyline::Error| e.to_string())?;
        let ctx = self.context(queries)?;
        let r = self.data.run(algo, &ctx).map_err(|e| e.to_string())?;
        Ok(QueryOutcome {
            skyline: r.skyline_ids,
            seeds: r.seed_ids,
            hull: flatten(ctx.hull().vertices().iter().copied()),
            dominance_tests: r.metrics.dominance_tests,
            cell_reads: r.metrics.cell_reads,
            index_node_reads: r.metrics.index_node_reads,
            time_ms: r.metrics.wall_time.as_secs_f64() * 1e3,
        })
    }

    pub fn try_dominance(&self, i: u32, j: u32, queries: &[f64]) -> Result<DominanceOutcome, String> {
        let (a, b) = (self.point(i)?, self.point(j)?);
        let ctx = self.context(queries)?;
        let q = ctx.query_points();
        let verdict = if dominates_over(a, b, q) {
            1
        } else if dominates_over(b, a, q) {
            -1
        } else {
            0
        };
        let (crosses_hull, bisector) = match perpendicular_bisector(a, b) {
            Ok(l) => (
                ctx.hull().line_intersects_interior(&l, Default::default()),
                clip_line(l.a, l.b, l.c, &VIEW)
                    .map(|(u, v)| flatten([u, v]))
                    .unwrap_or_default(),
            ),
            Err(_) => (false, Vec::new()),
        };
        Ok(DominanceOutcome {
            verdict,
            crosses_hull,
            bisector,
        })
    }

    pub fn try_dominating_box(&self, i: u32, queries: &[f64]) -> Result<Vec<f64>, String> {
        let r = dominating_region_box(self.point(i)?, &self.context(queries)?);
        Ok(vec![r.min.x, r.min.y, r.max.x, r.max.y])
    }
}

#[wasm_bindgen]
impl Demo {
    /// `n` uniform points in the unit square and their Voronoi diagram.
    #[wasm_bindgen(constructor)]
    pub fn new(n: u32, seed: u32) -> Result<Demo, JsError> {
        Demo::try_new(n, seed).map_err(|e| JsError::new(&e))
    }

    pub fn len(&self) -> u32 {
        self.data.points.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.data.points.is_empty()
    }

    pub fn points(&self) -> Vec<f64> {
        flatten(self.data.points.iter().copied())
    }

    /// Every Voronoi edge once, as `[x0, y0, x1, y1, ...]`.
    pub fn cell_edges(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for c in self.data.cells.cells() {
            for k in 0..c.len() {
                let n = c.neighbors[k];
                let (u, v) = c.edge(k);
                if u != v && (n == NO_NEIGHBOR || n > c.site_id) {
                    out.extend([u.x, u.y, v.x, v.y]);
                }
            }
        }
        out
    }

    /// Id of the data point nearest `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> Option<u32> {
        self.data
            .point_index
            .nearest(Point2::new(x, y))
            .ok()
            .map(|(id, _)| id)
    }

    /// Skyline of the data for flattened query points; `algo` is one of
    /// `es`, `vs2`, `alg1`, `oracle`.
    pub fn run(&self, queries: &[f64], algo: &str) -> Result<QueryOutcome, JsError> {
        self.try_run(queries, algo).map_err(|e| JsError::new(&e))
    }

    /// Compare data points `i` and `j`.
    pub fn dominance(&self, i: u32, j: u32, queries: &[f64]) -> Result<DominanceOutcome, JsError> {
        self.try_dominance(i, j, queries).map_err(|e| JsError::new(&e))
    }

    /// Box outside which every point is dominated by point `i`, as
    /// `[min_x, min_y, max_x, max_y]`.
    pub fn dominating_box(&self, i: u32, queries: &[f64]) -> Result<Vec<f64>, JsError> {
        self.try_dominating_box(i, queries).map_err(|e| JsError::new(&e))
    }
}
