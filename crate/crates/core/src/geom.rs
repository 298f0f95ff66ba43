//! Planar primitives: points, lines, rectangles, convex hulls and the
//! logarithmic line-versus-hull test used for dominance checks.
//!
//! Orientation tests use a fixed absolute tolerance [`EPS`] on the cross
//! product; anything within it counts as collinear.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Tolerance on cross products and signed distances.
pub const EPS: f64 = 1e-9;

/// Hulls with at most this many vertices are searched linearly.
pub const LINEAR_SCAN_MAX_VERTICES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(Error::InvalidArgument(format!(
                "non-finite coordinate ({x}, {y})"
            )))
        }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2-D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist2(self, o: Point2) -> f64 {
        (self - o).norm2()
    }

    #[inline]
    pub fn dist(self, o: Point2) -> f64 {
        self.dist2(o).sqrt()
    }

    #[inline]
    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Lexicographic (x, then y) order.
    #[inline]
    pub fn lex_cmp(&self, o: &Point2) -> Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Cross product of `b - a` and `c - a`; positive when `a, b, c` turn
/// counterclockwise.
#[inline]
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// A line `a·x + b·y = c` with `(a, b)` of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let n = (a * a + b * b).sqrt();
        // hypot only when squaring under- or overflows
        let n = if n.is_normal() { n } else { a.hypot(b) };
        if n == 0.0 || !n.is_finite() || !c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "line normal ({a}, {b}) is degenerate"
            )));
        }
        Ok(Line {
            a: a / n,
            b: b / n,
            c: c / n,
        })
    }

    /// Signed distance; positive on the side `(a, b)` points to.
    #[inline]
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.y - self.c
    }

    #[inline]
    pub fn flipped(&self) -> Line {
        Line {
            a: -self.a,
            b: -self.b,
            c: -self.c,
        }
    }
}

/// Perpendicular bisector of `p1` and `p2`. Points on the positive side are
/// strictly closer to `p2`.
pub fn perpendicular_bisector(p1: Point2, p2: Point2) -> Result<Line> {
    if p1 == p2 {
        return Err(Error::DegeneratePair { x: p1.x, y: p1.y });
    }
    let n = p2 - p1;
    let mid = p1.midpoint(p2);
    Line::new(n.x, n.y, n.dot(mid))
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub const fn new(min: Point2, max: Point2) -> Self {
        Rect { min, max }
    }

    pub fn from_point(p: Point2) -> Self {
        Rect { min: p, max: p }
    }

    /// Bounding box of `points`; `None` when empty.
    pub fn bounding(points: impl IntoIterator<Item = Point2>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Rect::from_point(first), |r, p| r.including(p)))
    }

    pub fn including(&self, p: Point2) -> Rect {
        Rect {
            min: Point2::new(self.min.x.min(p.x), self.min.y.min(p.y)),
            max: Point2::new(self.max.x.max(p.x), self.max.y.max(p.y)),
        }
    }

    pub fn union(&self, o: &Rect) -> Rect {
        self.including(o.min).including(o.max)
    }

    /// Intersection; may be empty (min > max on some axis).
    pub fn intersection(&self, o: &Rect) -> Rect {
        Rect {
            min: Point2::new(self.min.x.max(o.min.x), self.min.y.max(o.min.y)),
            max: Point2::new(self.max.x.min(o.max.x), self.max.y.min(o.max.y)),
        }
    }

    pub fn expanded(&self, margin: f64) -> Rect {
        Rect {
            min: Point2::new(self.min.x - margin, self.min.y - margin),
            max: Point2::new(self.max.x + margin, self.max.y + margin),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point2 {
        self.min.midpoint(self.max)
    }

    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    #[inline]
    pub fn intersects(&self, o: &Rect) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
    }

    /// Squared distance from `p` to the rectangle (zero inside).
    #[inline]
    pub fn min_dist2(&self, p: Point2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx * dx + dy * dy
    }

    /// Squared distance from `p` to the farthest point of the rectangle.
    pub fn max_dist2(&self, p: Point2) -> f64 {
        let dx = (p.x - self.min.x).abs().max((self.max.x - p.x).abs());
        let dy = (p.y - self.min.y).abs().max((self.max.y - p.y).abs());
        dx * dx + dy * dy
    }

    /// Corners in counterclockwise order starting at `min`.
    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    Full,
    Segment,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Interior,
    Boundary,
    Outside,
}

/// How extreme vertices are located on a hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMethod {
    /// Linear scan for small hulls, binary search otherwise.
    #[default]
    Auto,
    BinarySearch,
    Linear,
}

/// A convex polygon stored clockwise from its lexicographically smallest
/// vertex. The upper chain is `vertices[0..=rightmost]`; the lower chain runs
/// from `rightmost` through the end and back to `vertices[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
    rightmost: usize,
    degeneracy: Degeneracy,
    // lower chain laid out contiguously, and the edge vectors of both chains
    lower: Vec<Point2>,
    upper_edges: Vec<Point2>,
    lower_edges: Vec<Point2>,
}

impl ConvexPolygon {
    fn from_parts(vertices: Vec<Point2>, rightmost: usize, degeneracy: Degeneracy) -> Self {
        let n = vertices.len();
        let lower: Vec<Point2> = (0..n - rightmost + 1).map(|k| vertices[(rightmost + k) % n]).collect();
        let diffs = |c: &[Point2]| c.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
        ConvexPolygon {
            upper_edges: diffs(&vertices[..=rightmost]),
            lower_edges: diffs(&lower),
            lower,
            vertices,
            rightmost,
            degeneracy,
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn degeneracy(&self) -> Degeneracy {
        self.degeneracy
    }

    pub fn rightmost_index(&self) -> usize {
        self.rightmost
    }

    pub fn upper_chain(&self) -> &[Point2] {
        &self.vertices[..=self.rightmost]
    }

    /// Lower chain from the rightmost vertex back to the leftmost.
    pub fn lower_chain(&self) -> impl Iterator<Item = Point2> + '_ {
        self.lower.iter().copied()
    }

    /// Edges in clockwise order as `(start, end)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        let count = match self.degeneracy {
            Degeneracy::Full => n,
            Degeneracy::Segment => 1,
            Degeneracy::Point => 0,
        };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bounding_rect(&self) -> Rect {
        Rect::bounding(self.vertices.iter().copied()).expect("polygon has vertices")
    }

    /// Minimum and maximum of `line.signed_distance` over the vertices.
    pub fn signed_extent(&self, line: &Line, method: SearchMethod) -> (f64, f64) {
        let linear = match method {
            SearchMethod::Linear => true,
            SearchMethod::BinarySearch => false,
            SearchMethod::Auto => self.vertices.len() <= LINEAR_SCAN_MAX_VERTICES,
        };
        if linear || self.degeneracy != Degeneracy::Full {
            self.signed_extent_linear(line)
        } else {
            self.signed_extent_binary(line)
        }
    }

    fn signed_extent_linear(&self, line: &Line) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.vertices {
            let s = line.signed_distance(v);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }

    fn signed_extent_binary(&self, line: &Line) -> (f64, f64) {
        // Orient the normal into the upper half-plane (or straight left) so the
        // maximum sits on the upper chain and the minimum on the lower chain.
        let flip = !(line.b > 0.0 || (line.b == 0.0 && line.a < 0.0));
        let l = if flip { line.flipped() } else { *line };
        let n = Point2::new(l.a, l.b);

        let top = chain_argmax(&self.upper_edges, n);
        let bottom = chain_argmax(&self.lower_edges, n * -1.0);

        let hi = l.signed_distance(self.vertices[top]);
        let lo = l.signed_distance(self.lower[bottom]);
        if flip {
            (-hi, -lo)
        } else {
            (lo, hi)
        }
    }

    /// Whether `line` passes through the open interior.
    pub fn line_intersects_interior(&self, line: &Line, method: SearchMethod) -> bool {
        if self.degeneracy != Degeneracy::Full {
            return false;
        }
        let (lo, hi) = self.signed_extent(line, method);
        hi > EPS && lo < -EPS
    }

    /// Classify `p` against the polygon in O(log n).
    pub fn locate_point(&self, p: Point2) -> Containment {
        let v = &self.vertices;
        match self.degeneracy {
            Degeneracy::Point => {
                if p.dist2(v[0]) <= EPS * EPS {
                    Containment::Boundary
                } else {
                    Containment::Outside
                }
            }
            Degeneracy::Segment => {
                if on_segment(p, v[0], v[1]) {
                    Containment::Boundary
                } else {
                    Containment::Outside
                }
            }
            Degeneracy::Full => {
                let n = v.len();
                let o = v[0];
                // Clockwise polygon: the interior lies right of each edge.
                let first = orient(o, v[1], p);
                let last = orient(o, v[n - 1], p);
                if first > EPS || last < -EPS {
                    return Containment::Outside;
                }
                // Largest i in [1, n-2] with p right of (or on) the ray o -> v[i].
                let (mut lo, mut hi) = (1usize, n - 2);
                while lo < hi {
                    let mid = (lo + hi).div_ceil(2);
                    if orient(o, v[mid], p) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                let outer = orient(v[lo], v[lo + 1], p);
                if outer > EPS {
                    Containment::Outside
                } else if outer >= -EPS
                    || (first.abs() <= EPS && on_segment(p, o, v[1]))
                    || (last.abs() <= EPS && on_segment(p, v[n - 1], o))
                {
                    Containment::Boundary
                } else {
                    Containment::Interior
                }
            }
        }
    }
}

/// Index of a vertex maximising `dir · v` on a chain whose edge directions
/// turn clockwise so that `dir · edge` is positive and then non-positive.
#[inline]
fn chain_argmax(edges: &[Point2], dir: Point2) -> usize {
    edges.partition_point(|e| dir.dot(*e) > 0.0)
}

/// Whether `p` lies on the closed segment `ab` within [`EPS`].
pub fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    let ab = b - a;
    let len2 = ab.norm2();
    if len2 == 0.0 {
        return p.dist2(a) <= EPS * EPS;
    }
    if orient(a, b, p).abs() > EPS * len2.sqrt().max(1.0) {
        return false;
    }
    let t = (p - a).dot(ab) / len2;
    let slack = EPS / len2.sqrt();
    t >= -slack && t <= 1.0 + slack
}

/// Convex hull by Graham's scan in Andrew's monotone-chain form. Collinear
/// boundary points are dropped.
pub fn convex_hull(points: &[Point2]) -> Result<ConvexPolygon> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("convex hull of no points".into()));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite point ({}, {})",
            p.x, p.y
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(Point2::lex_cmp);
    pts.dedup();

    if pts.len() == 1 {
        return Ok(ConvexPolygon::from_parts(pts, 0, Degeneracy::Point));
    }

    // Upper hull left to right is the clockwise path from the leftmost vertex.
    let mut upper: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) >= -EPS
        {
            upper.pop();
        }
        upper.push(p);
    }
    let mut lower: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) >= -EPS
        {
            lower.pop();
        }
        lower.push(p);
    }

    let rightmost = upper.len() - 1;
    let mut vertices = upper;
    // Lower hull runs rightmost -> leftmost; drop both shared endpoints.
    vertices.extend_from_slice(&lower[1..lower.len() - 1]);

    let degeneracy = if vertices.len() == 2 {
        Degeneracy::Segment
    } else {
        Degeneracy::Full
    };
    Ok(ConvexPolygon::from_parts(vertices, rightmost, degeneracy))
}

/// Free-function form of [`ConvexPolygon::line_intersects_interior`] using
/// [`SearchMethod::Auto`].
pub fn line_intersects_interior(line: &Line, hull: &ConvexPolygon) -> bool {
    hull.line_intersects_interior(line, SearchMethod::Auto)
}

pub fn point_in_convex_polygon(p: Point2, poly: &ConvexPolygon) -> Containment {
    poly.locate_point(p)
}
