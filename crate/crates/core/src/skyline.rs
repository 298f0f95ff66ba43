//! Spatial dominance and the skyline algorithms: the brute-force oracle, the
//! sorted scan, seed extraction from the Voronoi diagram, the enhanced
//! seed-then-scan driver and a Voronoi-traversal baseline.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geom::{
    convex_hull, perpendicular_bisector, ConvexPolygon, Degeneracy, Point2, Rect, SearchMethod, EPS,
};
use crate::index::SpatialIndex;
use crate::metrics::Metrics;
use crate::voronoi::{
    boundary_walk, build_voronoi, cell_index, default_clip_box, interior_flood, locate_cell,
    CellSource, VoronoiCell, VoronoiDiagram,
};

/// Query points with their hull and the hull vertices used for ordering.
#[derive(Debug, Clone)]
pub struct QueryContext {
    query_points: Vec<Point2>,
    hull: ConvexPolygon,
    anchors: Vec<Point2>,
}

/// Lexicographic sort key: squared distances to the anchors, zero-padded.
pub type AnchorKey = [f64; 3];

impl QueryContext {
    pub fn new(query_points: &[Point2]) -> Result<Self> {
        let hull = convex_hull(query_points)?;
        let v = hull.vertices();
        let n = v.len();
        // vertices start at the lexicographically smallest one
        let anchors = match n {
            1 => vec![v[0]],
            2 => vec![v[0], v[1]],
            _ => vec![v[0], v[n / 3], v[2 * n / 3]],
        };
        Ok(QueryContext {
            query_points: query_points.to_vec(),
            hull,
            anchors,
        })
    }

    pub fn query_points(&self) -> &[Point2] {
        &self.query_points
    }

    pub fn hull(&self) -> &ConvexPolygon {
        &self.hull
    }

    pub fn anchors(&self) -> &[Point2] {
        &self.anchors
    }

    pub fn q1(&self) -> Point2 {
        self.anchors[0]
    }

    pub fn anchor_key(&self, p: Point2) -> AnchorKey {
        let mut k = [0.0; 3];
        for (slot, a) in k.iter_mut().zip(&self.anchors) {
            *slot = a.dist2(p);
        }
        k
    }

    /// Ids sorted by anchor key, then id.
    pub fn sort_by_anchor(&self, points: &[Point2], ids: &mut [u32]) {
        let mut keyed: Vec<(AnchorKey, u32)> =
            ids.iter().map(|&i| (self.anchor_key(points[i as usize]), i)).collect();
        keyed.sort_by(|a, b| cmp_key(&a.0, &b.0).then(a.1.cmp(&b.1)));
        for (slot, (_, id)) in ids.iter_mut().zip(keyed) {
            *slot = id;
        }
    }
}

fn cmp_key(a: &AnchorKey, b: &AnchorKey) -> Ordering {
    a[0].total_cmp(&b[0])
        .then(a[1].total_cmp(&b[1]))
        .then(a[2].total_cmp(&b[2]))
}

/// Direct check: `p1` is no farther than `p2` from every point of `qs` and
/// strictly closer to at least one.
pub fn dominates_over(p1: Point2, p2: Point2, qs: &[Point2]) -> bool {
    let mut strict = false;
    for &q in qs {
        let (d1, d2) = (p1.dist2(q), p2.dist2(q));
        if d1 > d2 {
            return false;
        }
        strict |= d1 < d2;
    }
    strict
}

/// Whether `p1` spatially dominates `p2`, decided on the hull of the query
/// points. Counts one dominance test.
pub fn spatially_dominates(
    p1: Point2,
    p2: Point2,
    ctx: &QueryContext,
    method: SearchMethod,
    metrics: &mut Metrics,
) -> bool {
    metrics.dominance_tests += 1;
    dominates_on_hull(p1, p2, &ctx.hull, method)
}

fn dominates_on_hull(p1: Point2, p2: Point2, hull: &ConvexPolygon, method: SearchMethod) -> bool {
    if p1 == p2 {
        return false;
    }
    if hull.degeneracy() != Degeneracy::Full {
        return dominates_over(p1, p2, hull.vertices());
    }
    // Any vertex nearer p2 settles it; every branch below agrees.
    let vs = hull.vertices();
    if p1.dist2(vs[0]) > p2.dist2(vs[0]) || p1.dist2(vs[vs.len() / 2]) > p2.dist2(vs[vs.len() / 2]) {
        return false;
    }
    // positive side is closer to p2
    let line = perpendicular_bisector(p1, p2).expect("points are distinct");
    let (lo, hi) = hull.signed_extent(&line, method);
    if hi > EPS && lo < -EPS {
        false
    } else if hi < -EPS {
        true
    } else if lo > EPS {
        false
    } else {
        // The hull touches the bisector; settle it on exact vertex distances.
        dominates_over(p1, p2, hull.vertices())
    }
}

/// Skyline by definition: every pair, every query point. Quadratic.
pub fn brute_force_skyline(points: &[Point2], queries: &[Point2]) -> Vec<u32> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, &p)| j != i && dominates_over(p, points[i], queries))
        })
        .map(|i| i as u32)
        .collect()
}

/// Bounding box of the circles around each query point through `p`. Points
/// outside it are dominated by `p`.
pub fn dominating_region_box(p: Point2, ctx: &QueryContext) -> Rect {
    let mut it = ctx.query_points.iter().map(|&q| {
        let r = q.dist(p);
        Rect::new(q - Point2::new(r, r), q + Point2::new(r, r))
    });
    let first = it.next().expect("query set is non-empty");
    it.fold(first, |acc, r| acc.union(&r))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkylineResult {
    /// Sorted ascending.
    pub skyline_ids: Vec<u32>,
    /// Sorted ascending; a subset of `skyline_ids`.
    pub seed_ids: Vec<u32>,
    pub metrics: Metrics,
}

fn finish(mut skyline: Vec<u32>, mut seeds: Vec<u32>, mut metrics: Metrics, t0: Instant) -> SkylineResult {
    skyline.sort_unstable();
    seeds.sort_unstable();
    metrics.wall_time = t0.elapsed();
    SkylineResult {
        skyline_ids: skyline,
        seed_ids: seeds,
        metrics,
    }
}

/// Skyline under construction, with coordinates kept alongside the ids.
#[derive(Default)]
struct Members {
    ids: Vec<u32>,
    pts: Vec<Point2>,
}

impl Members {
    fn from_ids(points: &[Point2], ids: &[u32]) -> Self {
        Members {
            ids: ids.to_vec(),
            pts: ids.iter().map(|&i| points[i as usize]).collect(),
        }
    }

    fn push(&mut self, id: u32, p: Point2) {
        self.ids.push(id);
        self.pts.push(p);
    }

    /// Whether any member dominates `p`, counting each test made.
    fn dominate(&self, p: Point2, ctx: &QueryContext, method: SearchMethod, metrics: &mut Metrics) -> bool {
        self.pts
            .iter()
            .any(|&s| spatially_dominates(s, p, ctx, method, metrics))
    }

    fn retain(&mut self, mut keep: impl FnMut(Point2) -> bool) {
        let mut k = 0;
        for i in 0..self.ids.len() {
            if keep(self.pts[i]) {
                self.ids[k] = self.ids[i];
                self.pts[k] = self.pts[i];
                k += 1;
            }
        }
        self.ids.truncate(k);
        self.pts.truncate(k);
    }
}

/// Scan all points in anchor order, testing each against the skyline so far.
pub fn spatial_skyline(points: &[Point2], ctx: &QueryContext) -> SkylineResult {
    let t0 = Instant::now();
    let mut m = Metrics::default();
    let mut order: Vec<u32> = (0..points.len() as u32).collect();
    ctx.sort_by_anchor(points, &mut order);
    let mut s = Members::default();
    for id in order {
        let p = points[id as usize];
        if !s.dominate(p, ctx, SearchMethod::Auto, &mut m) {
            s.push(id, p);
        }
    }
    finish(s.ids, Vec::new(), m, t0)
}

/// Sites whose cells meet the closed hull of the queries: the cells crossed
/// by the hull boundary plus those enclosed by it. All are skyline points
/// unless two sites tie exactly on the hull.
pub fn seed_skyline<C: CellSource + ?Sized>(
    cells: &C,
    cell_index: &SpatialIndex,
    ctx: &QueryContext,
    metrics: &mut Metrics,
) -> Result<Vec<u32>> {
    Ok(seed_cells(cells, cell_index, ctx, metrics)?.0)
}

/// Seeds, and the subset whose cells only graze the hull boundary.
fn seed_cells<C: CellSource + ?Sized>(
    cells: &C,
    cell_index: &SpatialIndex,
    ctx: &QueryContext,
    metrics: &mut Metrics,
) -> Result<(Vec<u32>, Vec<u32>)> {
    let v = ctx.hull.vertices();
    let mut start = locate_cell(cells, cell_index, v[0], metrics)?;
    let mut seeds: Vec<u32> = Vec::new();
    let mut weak: HashSet<u32> = HashSet::new();
    let mut strong: HashSet<u32> = HashSet::new();
    let edges: Vec<(Point2, Point2)> = match ctx.hull.degeneracy() {
        Degeneracy::Point => vec![(v[0], v[0])],
        Degeneracy::Segment => vec![(v[0], v[1])],
        Degeneracy::Full => (0..v.len()).map(|i| (v[i], v[(i + 1) % v.len()])).collect(),
    };
    for (a, b) in edges {
        let w = boundary_walk(cells, start, a, b, metrics)?;
        start = w.last;
        let grazed: HashSet<u32> = w.weak.into_iter().collect();
        for c in w.cells {
            if grazed.contains(&c) {
                weak.insert(c);
            } else {
                strong.insert(c);
            }
            seeds.push(c);
        }
    }
    seeds.sort_unstable();
    seeds.dedup();
    if ctx.hull.degeneracy() == Degeneracy::Full {
        let inside = interior_flood(cells, &seeds, &ctx.hull, metrics)?;
        seeds.extend(inside);
        seeds.sort_unstable();
    }
    let mut weak: Vec<u32> = weak.into_iter().filter(|c| !strong.contains(c)).collect();
    weak.sort_unstable();
    Ok((seeds, weak))
}

/// Seeds first, then the remaining candidates inside the shrinking
/// dominating box, in anchor order.
pub fn enhanced_spatial_skyline<C: CellSource + ?Sized>(
    points: &[Point2],
    cells: &C,
    cell_index: &SpatialIndex,
    point_index: &SpatialIndex,
    ctx: &QueryContext,
) -> Result<SkylineResult> {
    let t0 = Instant::now();
    let mut m = Metrics::default();
    let (mut seeds, weak) = seed_cells(cells, cell_index, ctx, &mut m)?;
    let seed_set: HashSet<u32> = seeds.iter().copied().collect();
    // A grazing seed can be tied with, and dominated by, a site whose cell
    // meets the hull at the same spot; that site is a seed as well.
    let mut rejected: HashSet<u32> = HashSet::new();
    for &w in &weak {
        let others: Vec<u32> = seeds.iter().copied().filter(|&x| x != w && !rejected.contains(&x)).collect();
        let others = Members::from_ids(points, &others);
        if others.dominate(points[w as usize], ctx, SearchMethod::Auto, &mut m) {
            rejected.insert(w);
        }
    }
    seeds.retain(|x| !rejected.contains(x));

    let mut bbox = seeds
        .iter()
        .map(|&s| dominating_region_box(points[s as usize], ctx))
        .reduce(|a, b| a.intersection(&b))
        .expect("seed set is non-empty");
    let (mut candidates, reads) = point_index.range_query(&bbox);
    m.index_node_reads += reads;
    ctx.sort_by_anchor(points, &mut candidates);

    let mut s = Members::from_ids(points, &seeds);
    for id in candidates {
        if seed_set.contains(&id) {
            continue;
        }
        let p = points[id as usize];
        if !bbox.contains(p) {
            continue;
        }
        if !s.dominate(p, ctx, SearchMethod::Auto, &mut m) {
            s.push(id, p);
            bbox = bbox.intersection(&dominating_region_box(p, ctx));
        }
    }
    Ok(finish(s.ids, seeds, m, t0))
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    key: AnchorKey,
    id: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on (key, id)
        cmp_key(&o.key, &self.key).then(o.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Voronoi-traversal baseline. Sites are visited best-first over the
/// Delaunay graph from the cell holding the first anchor, which yields them
/// in increasing distance from it; every visited site is tested against the
/// skyline so far with linear-scan dominance. The traversal stops once the
/// next site lies beyond the dominating box of the skyline.
///
/// With `prune_original`, a site whose one- and two-hop Delaunay neighbours
/// are all dominated by the current skyline is discarded untested. This
/// reproduces the incomplete pruning rule of the original method; the result
/// can miss skyline points but never contains extra ones.
pub fn vs2_corrected<C: CellSource + ?Sized>(
    points: &[Point2],
    cells: &C,
    cell_index: &SpatialIndex,
    ctx: &QueryContext,
    prune_original: bool,
) -> Result<SkylineResult> {
    let t0 = Instant::now();
    let mut m = Metrics::default();
    let method = SearchMethod::Linear;
    let q1 = ctx.q1();
    let start = locate_cell(cells, cell_index, q1, &mut m)?;

    let mut heap = BinaryHeap::new();
    let mut visited: HashSet<u32> = HashSet::from([start]);
    heap.push(HeapItem {
        key: ctx.anchor_key(points[start as usize]),
        id: start,
    });
    let mut s = Members::default();
    // pruned sites, still used as dominators so the result stays sound
    let mut pruned = Members::default();
    let mut known_dominated: HashSet<u32> = HashSet::new();
    let mut bbox: Option<Rect> = None;
    let mut neighbor_cache: HashMap<u32, Vec<u32>> = HashMap::new();

    while let Some(HeapItem { key, id }) = heap.pop() {
        if bbox.is_some_and(|b| key[0] > b.max_dist2(q1)) {
            break;
        }
        let cell = cells.read_cell(id, &mut m)?;
        let nbrs: Vec<u32> = cell.neighbor_sites().collect();
        drop(cell);
        for &n in &nbrs {
            if visited.insert(n) {
                heap.push(HeapItem {
                    key: ctx.anchor_key(points[n as usize]),
                    id: n,
                });
            }
        }
        let p = points[id as usize];

        if prune_original {
            let mut ring: HashSet<u32> = nbrs.iter().copied().collect();
            for &n in &nbrs {
                let second = match neighbor_cache.get(&n) {
                    Some(v) => v.clone(),
                    None => {
                        let c = cells.read_cell(n, &mut m)?;
                        let v: Vec<u32> = c.neighbor_sites().collect();
                        neighbor_cache.insert(n, v.clone());
                        v
                    }
                };
                ring.extend(second);
            }
            ring.remove(&id);
            let mut ring: Vec<u32> = ring.into_iter().collect();
            ring.sort_unstable();
            let all_dominated = !ring.is_empty()
                && ring.iter().all(|&x| {
                    known_dominated.contains(&x)
                        || s.dominate(points[x as usize], ctx, method, &mut m) && {
                            known_dominated.insert(x);
                            true
                        }
                });
            if all_dominated {
                pruned.push(id, points[id as usize]);
                continue;
            }
        }

        if s.dominate(p, ctx, method, &mut m) || pruned.dominate(p, ctx, method, &mut m)
        {
            known_dominated.insert(id);
            continue;
        }
        // A site tied with p on the first anchor may have been reached and
        // accepted before p although p dominates it.
        s.retain(|px| {
            (q1.dist2(px) - key[0]).abs() > EPS * key[0].max(EPS)
                || !spatially_dominates(p, px, ctx, method, &mut m)
        });
        s.push(id, p);
        let b = dominating_region_box(p, ctx);
        bbox = Some(bbox.map_or(b, |old| old.intersection(&b)));
    }
    Ok(finish(s.ids, Vec::new(), m, t0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Oracle,
    Alg1,
    Es,
    Vs2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Oracle, Algorithm::Alg1, Algorithm::Es, Algorithm::Vs2];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Oracle => "oracle",
            Algorithm::Alg1 => "alg1",
            Algorithm::Es => "es",
            Algorithm::Vs2 => "vs2",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{s}`")))
    }
}

/// A dataset with its cells and both indexes.
pub struct SpatialData<C> {
    pub points: Vec<Point2>,
    pub cells: C,
    pub cell_index: SpatialIndex,
    pub point_index: SpatialIndex,
}

impl SpatialData<VoronoiDiagram> {
    /// Build the diagram (clipped to the default box) and both indexes.
    pub fn build(points: Vec<Point2>, fanout: usize) -> Result<Self> {
        let diagram = build_voronoi(&points, default_clip_box(&points))?;
        let cell_list = diagram.cells().to_vec();
        SpatialData::with_cells(points, diagram, &cell_list, fanout)
    }
}

impl<C: CellSource> SpatialData<C> {
    /// `cell_list` must hold the same cells `cells` serves; it is only used
    /// to build the cell index.
    pub fn with_cells(points: Vec<Point2>, cells: C, cell_list: &[VoronoiCell], fanout: usize) -> Result<Self> {
        if cells.cell_count() != points.len() || cell_list.len() != points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} cells",
                points.len(),
                cells.cell_count()
            )));
        }
        Ok(SpatialData {
            cell_index: cell_index(cell_list, fanout)?,
            point_index: SpatialIndex::from_points(&points, fanout)?,
            points,
            cells,
        })
    }

    pub fn run(&self, algo: Algorithm, ctx: &QueryContext) -> Result<SkylineResult> {
        match algo {
            Algorithm::Oracle => {
                let t0 = Instant::now();
                let s = brute_force_skyline(&self.points, ctx.query_points());
                Ok(finish(s, Vec::new(), Metrics::default(), t0))
            }
            Algorithm::Alg1 => Ok(spatial_skyline(&self.points, ctx)),
            Algorithm::Es => enhanced_spatial_skyline(
                &self.points,
                &self.cells,
                &self.cell_index,
                &self.point_index,
                ctx,
            ),
            Algorithm::Vs2 => vs2_corrected(&self.points, &self.cells, &self.cell_index, ctx, false),
        }
    }
}
