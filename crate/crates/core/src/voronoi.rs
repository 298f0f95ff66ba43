//! Clipped Voronoi diagram with Delaunay adjacency, point location, boundary
//! walks along segments and interior flooding inside a convex region.
//!
//! Each cell is stored as a counterclockwise vertex ring together with the id
//! of the site across every edge. Cocircular sites produce zero-length edges
//! (a repeated vertex) so that the Delaunay graph keeps the diagonal the
//! triangulation picked; edges on the clip box carry [`NO_NEIGHBOR`].

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};

use spade::{DelaunayTriangulation, HasPosition, Triangulation};

use crate::error::{Error, Result};
use crate::geom::{on_segment, orient, Containment, ConvexPolygon, Point2, Rect, EPS};
use crate::index::{IndexEntry, SpatialIndex};
use crate::metrics::Metrics;

/// Neighbor id stored for edges lying on the clip box.
pub const NO_NEIGHBOR: u32 = u32::MAX;

/// Parameter slack used when deciding a walk has reached its endpoint.
const T_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub site_id: u32,
    pub site: Point2,
    /// Counterclockwise boundary ring.
    pub vertices: Vec<Point2>,
    /// `neighbors[i]` is the site across edge `(vertices[i], vertices[i + 1])`.
    pub neighbors: Vec<u32>,
}

impl VoronoiCell {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn mbr(&self) -> Rect {
        Rect::bounding(self.vertices.iter().copied()).expect("cell has vertices")
    }

    /// The cell as a clockwise [`ConvexPolygon`], zero-length edges removed.
    pub fn polygon(&self) -> ConvexPolygon {
        crate::geom::convex_hull(&self.vertices).expect("cell has finite vertices")
    }

    /// Delaunay neighbors, without the clip-box sentinel.
    pub fn neighbor_sites(&self) -> impl Iterator<Item = u32> + '_ {
        self.neighbors.iter().copied().filter(|&n| n != NO_NEIGHBOR)
    }

    /// Index of a vertex whose predecessor is a distinct point, so angles
    /// around the site increase strictly across the wrap.
    fn ring_base(&self) -> usize {
        let n = self.vertices.len();
        (0..n)
            .find(|&i| self.vertices[i] != self.vertices[(i + n - 1) % n])
            .unwrap_or(0)
    }

    /// Largest ring index `i` (in rotated order from `ring_base`) whose
    /// angle around the site does not exceed that of `p`.
    fn sector_of(&self, p: Point2) -> usize {
        let n = self.vertices.len();
        let base = self.ring_base();
        let base_angle = pseudo_angle(self.vertices[base] - self.site);
        let rel = |v: Point2| {
            let a = pseudo_angle(v - self.site) - base_angle;
            if a < 0.0 {
                a + 4.0
            } else {
                a
            }
        };
        let target = rel(p);
        let (mut lo, mut hi) = (0usize, n - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if rel(self.vertices[(base + mid) % n]) <= target {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        (base + lo) % n
    }

    /// Classify `p` by a fan search around the site, O(log k).
    pub fn contains(&self, p: Point2) -> Containment {
        let n = self.vertices.len();
        let i = self.sector_of(p);
        let (a, b) = self.edge(i);
        let o = orient(a, b, p);
        if o < -EPS {
            Containment::Outside
        } else if o <= EPS {
            Containment::Boundary
        } else {
            // Inside the sector triangle; p may still touch a neighbouring edge
            // when it sits on a fan ray through a vertex.
            let (pa, _) = self.edge((i + n - 1) % n);
            let (_, nb) = self.edge((i + 1) % n);
            if orient(pa, a, p).abs() <= EPS && on_segment(p, pa, a)
                || orient(b, nb, p).abs() <= EPS && on_segment(p, b, nb)
            {
                Containment::Boundary
            } else {
                Containment::Interior
            }
        }
    }

    /// Reference classification by testing every edge.
    pub fn contains_linear(&self, p: Point2) -> Containment {
        let mut worst = f64::INFINITY;
        for i in 0..self.vertices.len() {
            let (a, b) = self.edge(i);
            if a == b {
                continue;
            }
            worst = worst.min(orient(a, b, p));
        }
        if worst < -EPS {
            Containment::Outside
        } else if worst <= EPS {
            Containment::Boundary
        } else {
            Containment::Interior
        }
    }

    /// Largest `t >= t_in` with `a + t·d` in the closed cell, and the edge the
    /// line leaves through. `a + t_in·d` must lie in the cell.
    ///
    /// The leaving edge is found by binary search around the site; a linear
    /// clip is used only when the line passes (numerically) through the site.
    pub fn exit_along(&self, a: Point2, d: Point2, t_in: f64) -> (f64, usize) {
        self.exit_binary(a, d, t_in)
            .unwrap_or_else(|| self.exit_linear(a, d))
    }

    /// Cyrus-Beck clip of the line `a + t·d` against every edge.
    pub fn exit_linear(&self, a: Point2, d: Point2) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for i in 0..self.vertices.len() {
            let (v, w) = self.edge(i);
            let e = w - v;
            let denom = e.cross(d);
            if denom < 0.0 {
                let t = -e.cross(a - v) / denom;
                if t < best.0 {
                    best = (t, i);
                }
            }
        }
        best
    }

    fn exit_binary(&self, a: Point2, d: Point2, t_in: f64) -> Option<(f64, usize)> {
        let n = self.vertices.len();
        let p = self.site;
        let dn = d.norm2().sqrt();
        if dn == 0.0 {
            return None;
        }
        // side of the site relative to the directed line
        let fp = d.cross(p - a);
        if fp.abs() <= EPS * dn {
            return None;
        }
        let r = a + d * t_in;
        let turn = (r - p).cross(d);
        if turn.abs() <= EPS * dn {
            return None;
        }
        let sector = self.sector_of(r);
        let far = |v: Point2| d.cross(v - a) * fp <= 0.0;

        // Count vertices, walking around the site in the direction the line
        // sweeps, that lie within a half-turn of r and beyond the line.
        let (mut lo, mut hi) = (0usize, n - 1);
        let edge = if turn > 0.0 {
            let pred = |m: usize| {
                let v = self.vertices[(sector + m) % n];
                (r - p).cross(v - p) > 0.0 && far(v)
            };
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if pred(mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            (sector + lo) % n
        } else {
            let pred = |m: usize| {
                let v = self.vertices[(sector + 1 + n - m) % n];
                // the sector vertex is behind r by less than a half-turn
                (m == 1 || (r - p).cross(v - p) < 0.0) && far(v)
            };
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if pred(mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            (sector + n - lo) % n
        };

        let (v, w) = self.edge(edge);
        let e = w - v;
        let denom = e.cross(d);
        if denom >= 0.0 {
            return None;
        }
        let t = -e.cross(a - v) / denom;
        let x = a + d * t;
        if t + T_EPS < t_in || !on_segment(x, v, w) {
            return None;
        }
        Some((t.max(t_in), edge))
    }
}

/// Monotone stand-in for `atan2`, in `[0, 4)`.
#[inline]
fn pseudo_angle(v: Point2) -> f64 {
    let s = v.x.abs() + v.y.abs();
    if s == 0.0 {
        return 0.0;
    }
    let t = v.y / s;
    if v.x < 0.0 {
        2.0 - t
    } else if v.y < 0.0 {
        4.0 + t
    } else {
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiDiagram {
    sites: Vec<Point2>,
    cells: Vec<VoronoiCell>,
    clip_box: Rect,
}

impl VoronoiDiagram {
    pub fn sites(&self) -> &[Point2] {
        &self.sites
    }

    pub fn cells(&self) -> &[VoronoiCell] {
        &self.cells
    }

    pub fn cell(&self, id: u32) -> &VoronoiCell {
        &self.cells[id as usize]
    }

    pub fn clip_box(&self) -> Rect {
        self.clip_box
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Reassemble a diagram from cells (e.g. read back from storage).
    pub fn from_cells(cells: Vec<VoronoiCell>, clip_box: Rect) -> Self {
        let sites = cells.iter().map(|c| c.site).collect();
        VoronoiDiagram {
            sites,
            cells,
            clip_box,
        }
    }
}

/// Bounding box of `sites` grown by three times its diagonal on every side.
pub fn default_clip_box(sites: &[Point2]) -> Rect {
    let bb = Rect::bounding(sites.iter().copied()).unwrap_or(Rect::from_point(Point2::default()));
    let diag = bb.diagonal();
    bb.expanded(3.0 * if diag > 0.0 { diag } else { 1.0 })
}

struct SiteVertex {
    pos: spade::Point2<f64>,
    id: u32,
}

impl HasPosition for SiteVertex {
    type Scalar = f64;
    fn position(&self) -> spade::Point2<f64> {
        self.pos
    }
}

/// Delaunay neighbours of every site, counterclockwise around it.
fn delaunay_neighbors(sites: &[Point2]) -> Result<Vec<Vec<u32>>> {
    let mut out = vec![Vec::new(); sites.len()];
    if sites.len() < 2 {
        return Ok(out);
    }
    let verts = sites
        .iter()
        .enumerate()
        .map(|(i, p)| SiteVertex {
            pos: spade::Point2::new(p.x, p.y),
            id: i as u32,
        })
        .collect();
    let tri: DelaunayTriangulation<SiteVertex> = DelaunayTriangulation::bulk_load_stable(verts)
        .map_err(|e| Error::InvalidArgument(format!("triangulation failed: {e:?}")))?;
    for v in tri.vertices() {
        out[v.data().id as usize] = v.out_edges().map(|e| e.to().data().id).collect();
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    In,
    On,
    Out,
}

/// Clip a labelled counterclockwise ring by `{x : n·x <= c}`, labelling the
/// new edge along the clip line with `label`.
fn clip_ring(ring: &[(Point2, u32)], n: Point2, c: f64, label: u32) -> Vec<(Point2, u32)> {
    let scale = n.norm2().sqrt();
    let h = |p: Point2| n.dot(p) - c;
    let side = |v: f64| {
        if v < -EPS * scale {
            Side::In
        } else if v > EPS * scale {
            Side::Out
        } else {
            Side::On
        }
    };
    let mut out = Vec::with_capacity(ring.len() + 2);
    for i in 0..ring.len() {
        let (a, la) = ring[i];
        let (b, _) = ring[(i + 1) % ring.len()];
        let (ha, hb) = (h(a), h(b));
        let (sa, sb) = (side(ha), side(hb));
        match (sa, sb) {
            (Side::In, Side::Out) => {
                out.push((a, la));
                out.push((a + (b - a) * (ha / (ha - hb)), label));
            }
            (Side::On, Side::Out) => out.push((a, label)),
            (Side::In | Side::On, _) => out.push((a, la)),
            (Side::Out, Side::In) => out.push((a + (b - a) * (ha / (ha - hb)), la)),
            (Side::Out, _) => {}
        }
    }
    out
}

/// Build the Voronoi diagram of `sites` clipped to `clip_box`.
pub fn build_voronoi(sites: &[Point2], clip_box: Rect) -> Result<VoronoiDiagram> {
    if sites.is_empty() {
        return Err(Error::InvalidArgument("diagram needs at least one site".into()));
    }
    if sites.len() >= NO_NEIGHBOR as usize {
        return Err(Error::InvalidArgument("too many sites".into()));
    }
    if let Some(p) = sites.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite site ({}, {})", p.x, p.y)));
    }
    let mut first_seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(sites.len());
    let mut dups = Vec::new();
    for (i, p) in sites.iter().enumerate() {
        // +0.0 and -0.0 are the same site
        let key = ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits());
        if let Some(&j) = first_seen.get(&key) {
            dups.push((j, i));
        } else {
            first_seen.insert(key, i);
        }
    }
    if !dups.is_empty() {
        return Err(Error::DuplicateSites(dups));
    }
    let interior = Rect::new(
        clip_box.min + Point2::new(EPS, EPS),
        clip_box.max - Point2::new(EPS, EPS),
    );
    if let Some(p) = sites.iter().find(|p| !interior.contains(**p)) {
        return Err(Error::InvalidArgument(format!(
            "site ({}, {}) is not strictly inside the clip box",
            p.x, p.y
        )));
    }

    let adjacency = delaunay_neighbors(sites)?;
    let box_ring: Vec<(Point2, u32)> = clip_box.corners().iter().map(|&c| (c, NO_NEIGHBOR)).collect();

    let mut cells: Vec<VoronoiCell> = sites
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut ring = box_ring.clone();
            for &t in &adjacency[i] {
                let other = sites[t as usize];
                let n = other - s;
                let c = 0.5 * (other.norm2() - s.norm2());
                ring = clip_ring(&ring, n, c, t);
            }
            let (vertices, neighbors) = ring.into_iter().unzip();
            VoronoiCell {
                site_id: i as u32,
                site: s,
                vertices,
                neighbors,
            }
        })
        .collect();

    symmetrize(&mut cells, &adjacency, sites);
    Ok(VoronoiDiagram {
        sites: sites.to_vec(),
        cells,
        clip_box,
    })
}

/// Ensure each Delaunay pair is listed on both sides or on neither. Pairs
/// whose shared boundary collapsed to a point get a zero-length edge there.
fn symmetrize(cells: &mut [VoronoiCell], adjacency: &[Vec<u32>], sites: &[Point2]) {
    let lists = |c: &VoronoiCell, t: u32| c.neighbors.contains(&t);
    let mut inserts: Vec<(usize, u32)> = Vec::new();
    for (s, nbrs) in adjacency.iter().enumerate() {
        for &t in nbrs {
            let t = t as usize;
            if t < s {
                continue;
            }
            let (in_s, in_t) = (lists(&cells[s], t as u32), lists(&cells[t], s as u32));
            match (in_s, in_t) {
                (true, true) => {}
                (true, false) => inserts.push((t, s as u32)),
                (false, true) => inserts.push((s, t as u32)),
                (false, false) => {
                    let touch_s = nearest_vertex_on_bisector(&cells[s], sites[s], sites[t]);
                    let touch_t = nearest_vertex_on_bisector(&cells[t], sites[t], sites[s]);
                    if let (Some((_, ds)), Some((_, dt))) = (touch_s, touch_t) {
                        if ds <= EPS && dt <= EPS {
                            inserts.push((s, t as u32));
                            inserts.push((t, s as u32));
                        }
                    }
                }
            }
        }
    }
    for (cell, label) in inserts {
        let c = &mut cells[cell];
        let other = sites[label as usize];
        let (k, _) = nearest_vertex_on_bisector(c, c.site, other).expect("cell has vertices");
        let v = c.vertices[k];
        // ring ... v_k(label), v_k(old) ... gives a zero-length edge v_k -> v_k
        c.vertices.insert(k, v);
        c.neighbors.insert(k, label);
    }
}

fn nearest_vertex_on_bisector(cell: &VoronoiCell, s: Point2, t: Point2) -> Option<(usize, f64)> {
    let n = t - s;
    let len = n.norm2().sqrt();
    let c = 0.5 * (t.norm2() - s.norm2());
    cell.vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (n.dot(*v) - c).abs() / len))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Random access to cells, counting every read.
pub trait CellSource {
    fn cell_count(&self) -> usize;
    fn read_cell(&self, id: u32, metrics: &mut Metrics) -> Result<Cow<'_, VoronoiCell>>;
}

impl CellSource for VoronoiDiagram {
    fn cell_count(&self) -> usize {
        self.cells.len()
    }

    fn read_cell(&self, id: u32, metrics: &mut Metrics) -> Result<Cow<'_, VoronoiCell>> {
        let cell = self.cells.get(id as usize).ok_or(Error::OutOfRange {
            id,
            count: self.cells.len(),
        })?;
        metrics.cell_reads += 1;
        Ok(Cow::Borrowed(cell))
    }
}

/// Index over cell bounding rectangles, keyed by site id.
pub fn cell_index(cells: &[VoronoiCell], fanout: usize) -> Result<SpatialIndex> {
    let entries = cells
        .iter()
        .map(|c| IndexEntry {
            rect: c.mbr(),
            id: c.site_id,
        })
        .collect();
    SpatialIndex::build(entries, fanout)
}

/// Site whose cell contains `q`. A point on a shared boundary goes to the
/// lowest id among the equidistant sites.
pub fn locate_cell<C: CellSource + ?Sized>(
    cells: &C,
    index: &SpatialIndex,
    q: Point2,
    metrics: &mut Metrics,
) -> Result<u32> {
    let (candidates, reads) = index.range_query(&Rect::from_point(q));
    metrics.index_node_reads += reads;
    let mut hits: Vec<(f64, u32)> = Vec::new();
    for id in candidates {
        let cell = cells.read_cell(id, metrics)?;
        if cell.contains(q) != Containment::Outside {
            hits.push((cell.site.dist(q), id));
        }
    }
    let nearest = hits
        .iter()
        .map(|h| h.0)
        .min_by(f64::total_cmp)
        .ok_or(Error::OutOfDomain { x: q.x, y: q.y })?;
    Ok(hits
        .iter()
        .filter(|h| h.0 <= nearest + EPS)
        .map(|h| h.1)
        .min()
        .expect("nearest hit exists"))
}

/// Cells met by a segment, in traversal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub cells: Vec<u32>,
    /// Listed cells the segment only grazes: it never passes through their
    /// interior. Ties between sites can only happen in these.
    pub weak: Vec<u32>,
    /// Cell holding the far endpoint; the next hull edge starts here.
    pub last: u32,
}

/// Cells (other than `from`) whose closure contains `x`, found by hopping
/// across edges through `x`. Also reports whether `x` is on the clip box.
fn touching_cells<C: CellSource + ?Sized>(
    src: &C,
    from: &VoronoiCell,
    x: Point2,
    metrics: &mut Metrics,
) -> Result<(Vec<VoronoiCell>, bool)> {
    let mut found: Vec<VoronoiCell> = Vec::new();
    let mut visited: HashSet<u32> = HashSet::from([from.site_id]);
    let mut on_clip = false;
    let mut frontier: Vec<(u32, Vec<u32>)> = vec![(from.site_id, edges_through(from, x))];
    while let Some((_, nbrs)) = frontier.pop() {
        for n in nbrs {
            if n == NO_NEIGHBOR {
                on_clip = true;
                continue;
            }
            if !visited.insert(n) {
                continue;
            }
            let cell = src.read_cell(n, metrics)?.into_owned();
            frontier.push((n, edges_through(&cell, x)));
            found.push(cell);
        }
    }
    Ok((found, on_clip))
}

fn edges_through(cell: &VoronoiCell, x: Point2) -> Vec<u32> {
    (0..cell.len())
        .filter(|&i| {
            let (a, b) = cell.edge(i);
            on_segment(x, a, b)
        })
        .map(|i| cell.neighbors[i])
        .collect()
}

/// Orders cells touched at a single event point so that walking the segment
/// backwards yields the reverse sequence: left of the direction by ascending
/// id, then collinear sites along the direction, then right by descending id.
fn order_side_cells(cells: &mut [VoronoiCell], a: Point2, d: Point2) {
    cells.sort_by(|p, q| {
        let key = |c: &VoronoiCell| {
            let s = d.cross(c.site - a);
            if s > 0.0 {
                0
            } else if s == 0.0 {
                1
            } else {
                2
            }
        };
        let (kp, kq) = (key(p), key(q));
        kp.cmp(&kq).then_with(|| match kp {
            0 => p.site_id.cmp(&q.site_id),
            1 => d.dot(p.site - a).total_cmp(&d.dot(q.site - a)),
            _ => q.site_id.cmp(&p.site_id),
        })
    });
}

/// Every cell the closed segment `a -> b` meets, starting from the cell
/// `start`, which must contain `a`.
pub fn boundary_walk<C: CellSource + ?Sized>(
    src: &C,
    start: u32,
    a: Point2,
    b: Point2,
    metrics: &mut Metrics,
) -> Result<Walk> {
    let d = b - a;
    let first = src.read_cell(start, metrics)?.into_owned();
    let mut out: Vec<u32> = Vec::new();
    let mut seen: HashSet<u32> = HashSet::new();

    // Start event: `a` may lie on edges shared with other cells.
    let (mut around, _) = touching_cells(src, &first, a, metrics)?;
    around.push(first);
    if d.norm2() == 0.0 {
        around.sort_by_key(|c| c.site_id);
        let ids: Vec<u32> = around.iter().map(|c| c.site_id).collect();
        return Ok(Walk {
            last: start,
            weak: ids.clone(),
            cells: ids,
        });
    }
    let mut cur = pick_next(&mut around, a, d, 0.0).expect("start cell is present");
    order_side_cells(&mut around, a, d);
    for c in &around {
        if seen.insert(c.site_id) {
            out.push(c.site_id);
        }
    }
    seen.insert(cur.site_id);
    out.push(cur.site_id);

    let mut strong: HashSet<u32> = HashSet::new();
    let mut t = 0.0;
    loop {
        let (t_exit, _) = cur.exit_along(a, d, t);
        let t_end = t_exit.min(1.0);
        if t_end - t > T_EPS && cur.contains(a + d * (0.5 * (t + t_end))) == Containment::Interior {
            strong.insert(cur.site_id);
        }
        if t_exit >= 1.0 - T_EPS {
            let (mut around, _) = touching_cells(src, &cur, b, metrics)?;
            order_side_cells(&mut around, a, d);
            for c in &around {
                if seen.insert(c.site_id) {
                    out.push(c.site_id);
                }
            }
            let weak = out.iter().copied().filter(|c| !strong.contains(c)).collect();
            return Ok(Walk {
                cells: out,
                weak,
                last: cur.site_id,
            });
        }
        let x = a + d * t_exit;
        let (mut around, on_clip) = touching_cells(src, &cur, x, metrics)?;
        if on_clip {
            return Err(Error::ClipEscape { x: x.x, y: x.y });
        }
        let next = match pick_next(&mut around, a, d, t_exit) {
            Some(n) => n,
            None => return Err(Error::WalkStalled { x: x.x, y: x.y }),
        };
        order_side_cells(&mut around, a, d);
        for c in &around {
            if seen.insert(c.site_id) {
                out.push(c.site_id);
            }
        }
        if seen.insert(next.site_id) {
            out.push(next.site_id);
        }
        cur = next;
        t = t_exit;
    }
}

/// Remove and return the cell reaching farthest along the segment past `t`.
fn pick_next(cells: &mut Vec<VoronoiCell>, a: Point2, d: Point2, t: f64) -> Option<VoronoiCell> {
    let best = cells
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.exit_linear(a, d).0))
        .filter(|&(_, te)| te > t + T_EPS || t == 0.0)
        .max_by(|x, y| x.1.total_cmp(&y.1).then(cells[y.0].site_id.cmp(&cells[x.0].site_id)))?;
    Some(cells.swap_remove(best.0))
}

/// Cells lying inside the convex `hull`, reached from `boundary` through the
/// Delaunay graph. `boundary` must be every cell meeting the hull boundary.
pub fn interior_flood<C: CellSource + ?Sized>(
    src: &C,
    boundary: &[u32],
    hull: &ConvexPolygon,
    metrics: &mut Metrics,
) -> Result<Vec<u32>> {
    let mut inside = Vec::new();
    if hull.degeneracy() != crate::geom::Degeneracy::Full {
        return Ok(inside);
    }
    let mut seen: HashSet<u32> = boundary.iter().copied().collect();
    let mut stack: Vec<u32> = boundary.to_vec();
    while let Some(id) = stack.pop() {
        let cell = src.read_cell(id, metrics)?;
        for i in 0..cell.len() {
            let n = cell.neighbors[i];
            if n == NO_NEIGHBOR || !seen.insert(n) {
                continue;
            }
            // A cell that misses the hull boundary is wholly inside or wholly
            // outside, so one point of the shared edge decides it.
            let (p, q) = cell.edge(i);
            if hull.locate_point(p.midpoint(q)) != Containment::Outside {
                inside.push(n);
                stack.push(n);
            }
        }
    }
    inside.sort_unstable();
    Ok(inside)
}
