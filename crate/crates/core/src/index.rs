//! Bulk-loaded bounding-rectangle hierarchy over points or cell MBRs.
//!
//! Entries are packed in Hilbert order of their rectangle centers, then each
//! level is packed into parents of near-equal size. Every query reports the
//! number of nodes it visited; the index itself holds no mutable state.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::geom::{Point2, Rect};

pub const DEFAULT_FANOUT: usize = 32;
pub const MIN_FANOUT: usize = 4;

/// Minimum fill of a non-root node as a fraction of the fanout.
const MIN_FILL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexEntry {
    pub rect: Rect,
    pub id: u32,
}

#[derive(Debug, Clone)]
struct Node {
    rect: Rect,
    leaf: bool,
    /// Entry range for leaves, child node range otherwise.
    span: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    nodes: Vec<Node>,
    entries: Vec<IndexEntry>,
    root: usize,
    fanout: usize,
    height: usize,
}

impl SpatialIndex {
    pub fn build(entries: Vec<IndexEntry>, fanout: usize) -> Result<Self> {
        if fanout < MIN_FANOUT {
            return Err(Error::InvalidArgument(format!(
                "fanout {fanout} is below the minimum of {MIN_FANOUT}"
            )));
        }
        if entries.is_empty() {
            return Err(Error::InvalidArgument("index needs at least one entry".into()));
        }
        let mut entries = entries;
        let bounds = entries
            .iter()
            .skip(1)
            .fold(entries[0].rect, |r, e| r.union(&e.rect));
        entries.sort_by_cached_key(|e| (hilbert_key(&bounds, e.rect.center()), e.id));

        let mut nodes = Vec::new();
        let mut level: Range<usize> = 0..0;
        let groups = balanced_groups(entries.len(), fanout);
        let start = nodes.len();
        for g in groups {
            let rect = entries[g.clone()]
                .iter()
                .skip(1)
                .fold(entries[g.start].rect, |r, e| r.union(&e.rect));
            nodes.push(Node {
                rect,
                leaf: true,
                span: g,
            });
        }
        level.start = start;
        level.end = nodes.len();
        let mut height = 1;

        while level.len() > 1 {
            let groups = balanced_groups(level.len(), fanout);
            let start = nodes.len();
            for g in groups {
                let children = (level.start + g.start)..(level.start + g.end);
                let rect = nodes[children.clone()]
                    .iter()
                    .skip(1)
                    .fold(nodes[children.start].rect, |r, n| r.union(&n.rect));
                nodes.push(Node {
                    rect,
                    leaf: false,
                    span: children,
                });
            }
            level = start..nodes.len();
            height += 1;
        }

        Ok(SpatialIndex {
            root: level.start,
            nodes,
            entries,
            fanout,
            height,
        })
    }

    /// Index over points, with each point's position as its id.
    pub fn from_points(points: &[Point2], fanout: usize) -> Result<Self> {
        let entries = points
            .iter()
            .enumerate()
            .map(|(i, &p)| IndexEntry {
                rect: Rect::from_point(p),
                id: i as u32,
            })
            .collect();
        Self::build(entries, fanout)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn fanout(&self) -> usize {
        self.fanout
    }

    pub fn bounds(&self) -> Rect {
        self.nodes[self.root].rect
    }

    /// Entry closest to `q` (rectangle distance), lowest id on ties.
    /// Returns the id and the number of nodes visited.
    pub fn nearest(&self, q: Point2) -> Result<(u32, u64)> {
        if self.entries.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut reads = 0u64;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Candidate {
            dist2: self.nodes[self.root].rect.min_dist2(q),
            kind: Kind::Node,
            key: self.root,
        }));
        while let Some(Reverse(c)) = heap.pop() {
            match c.kind {
                Kind::Entry => return Ok((c.key as u32, reads)),
                Kind::Node => {
                    reads += 1;
                    let node = &self.nodes[c.key];
                    if node.leaf {
                        for e in &self.entries[node.span.clone()] {
                            heap.push(Reverse(Candidate {
                                dist2: e.rect.min_dist2(q),
                                kind: Kind::Entry,
                                key: e.id as usize,
                            }));
                        }
                    } else {
                        for i in node.span.clone() {
                            heap.push(Reverse(Candidate {
                                dist2: self.nodes[i].rect.min_dist2(q),
                                kind: Kind::Node,
                                key: i,
                            }));
                        }
                    }
                }
            }
        }
        unreachable!("a non-empty index always yields an entry")
    }

    /// Ids of all entries whose rectangles intersect `rect`, plus nodes visited.
    pub fn range_query(&self, rect: &Rect) -> (Vec<u32>, u64) {
        let mut out = Vec::new();
        let reads = self.visit_range(rect, |e| out.push(e.id));
        (out, reads)
    }

    fn visit_range(&self, rect: &Rect, mut f: impl FnMut(&IndexEntry)) -> u64 {
        let mut reads = 0u64;
        if rect.is_empty() || !self.nodes[self.root].rect.intersects(rect) {
            return reads;
        }
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            reads += 1;
            let node = &self.nodes[n];
            if node.leaf {
                for e in &self.entries[node.span.clone()] {
                    if e.rect.intersects(rect) {
                        f(e);
                    }
                }
            } else {
                stack.extend(node.span.clone().filter(|&c| self.nodes[c].rect.intersects(rect)));
            }
        }
        reads
    }

    /// Structural audit: containment, fill bounds, and exactly-once entries.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let min_fill = (self.fanout as f64 * MIN_FILL).ceil() as usize;
        let mut seen = vec![0u32; self.entries.len()];
        let mut stack = vec![(self.root, 1usize)];
        while let Some((n, depth)) = stack.pop() {
            let node = &self.nodes[n];
            let count = node.span.len();
            if count > self.fanout {
                return Err(format!("node {n} has {count} > {} children", self.fanout));
            }
            if n != self.root && count < min_fill {
                return Err(format!("node {n} has {count} < {min_fill} children"));
            }
            if node.leaf {
                if depth != self.height {
                    return Err(format!("leaf {n} at depth {depth}, height {}", self.height));
                }
                for i in node.span.clone() {
                    if !node.rect.contains_rect(&self.entries[i].rect) {
                        return Err(format!("leaf {n} does not contain entry {i}"));
                    }
                    seen[i] += 1;
                }
            } else {
                for c in node.span.clone() {
                    if !node.rect.contains_rect(&self.nodes[c].rect) {
                        return Err(format!("node {n} does not contain child {c}"));
                    }
                    stack.push((c, depth + 1));
                }
            }
        }
        if let Some(i) = seen.iter().position(|&s| s != 1) {
            return Err(format!("entry {i} reached {} times", seen[i]));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Node,
    Entry,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist2: f64,
    kind: Kind,
    /// Node index for nodes, entry id for entries.
    key: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Candidate {
    // Nodes at a given distance are expanded before entries at that distance,
    // so the first entry popped is the lowest id among the closest.
    fn cmp(&self, o: &Self) -> Ordering {
        self.dist2
            .total_cmp(&o.dist2)
            .then(self.kind.cmp(&o.kind))
            .then(self.key.cmp(&o.key))
    }
}

/// Splits `n` items into `ceil(n / cap)` contiguous groups whose sizes differ
/// by at most one.
fn balanced_groups(n: usize, cap: usize) -> Vec<Range<usize>> {
    let k = n.div_ceil(cap);
    let base = n / k;
    let extra = n % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for g in 0..k {
        let len = base + usize::from(g < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

const HILBERT_ORDER: u32 = 16;

fn hilbert_key(bounds: &Rect, p: Point2) -> u64 {
    let side = ((1u32 << HILBERT_ORDER) - 1) as f64;
    let scale = |v: f64, lo: f64, extent: f64| -> u32 {
        if extent <= 0.0 {
            0
        } else {
            (((v - lo) / extent).clamp(0.0, 1.0) * side) as u32
        }
    };
    let x = scale(p.x, bounds.min.x, bounds.width());
    let y = scale(p.y, bounds.min.y, bounds.height());
    hilbert_d(x, y)
}

/// Distance along a Hilbert curve of order [`HILBERT_ORDER`].
fn hilbert_d(mut x: u32, mut y: u32) -> u64 {
    let n = 1u32 << HILBERT_ORDER;
    let mut d = 0u64;
    let mut s = n / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += s as u64 * s as u64 * ((3 * rx) ^ ry) as u64;
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn random_rects(rng: &mut ChaCha8Rng, n: usize) -> Vec<IndexEntry> {
        (0..n)
            .map(|i| {
                let c = p(rng.random::<f64>(), rng.random::<f64>());
                let w = rng.random::<f64>() * 0.05;
                let h = rng.random::<f64>() * 0.05;
                IndexEntry {
                    rect: Rect::new(c, c + p(w, h)),
                    id: i as u32,
                }
            })
            .collect()
    }

    #[test]
    fn rejects_small_fanout_and_empty_input() {
        let e = vec![IndexEntry {
            rect: Rect::from_point(p(0.0, 0.0)),
            id: 0,
        }];
        assert!(matches!(SpatialIndex::build(e, 3), Err(Error::InvalidArgument(_))));
        assert!(SpatialIndex::build(vec![], 8).is_err());
    }

    #[test]
    fn single_entry_is_a_leaf_root() {
        let idx = SpatialIndex::from_points(&[p(0.3, 0.4)], 8).unwrap();
        assert_eq!(idx.height(), 1);
        assert_eq!(idx.node_count(), 1);
        assert_eq!(idx.nearest(p(5.0, 5.0)).unwrap(), (0, 1));
        idx.validate().unwrap();
    }

    #[test]
    fn grid_of_unit_squares_has_bounded_height() {
        let entries: Vec<IndexEntry> = (0..10_000)
            .map(|i| {
                let c = p((i % 100) as f64, (i / 100) as f64);
                IndexEntry {
                    rect: Rect::new(c, c + p(1.0, 1.0)),
                    id: i as u32,
                }
            })
            .collect();
        let idx = SpatialIndex::build(entries, 16).unwrap();
        // ceil(log_16 10^4) + 1
        assert!(idx.height() <= 5, "height {}", idx.height());
        idx.validate().unwrap();
    }

    #[test]
    fn random_trees_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for fanout in [4, 5, 7, 16, 32] {
            for n in [1, 2, 3, 17, 100, 1_000, 3_333] {
                let idx = SpatialIndex::build(random_rects(&mut rng, n), fanout).unwrap();
                idx.validate().unwrap_or_else(|e| panic!("fanout {fanout}, n {n}: {e}"));
            }
        }
    }

    #[test]
    fn nearest_tie_prefers_lower_id() {
        let idx = SpatialIndex::from_points(&[p(1.0, 0.0), p(-1.0, 0.0), p(0.0, 5.0)], 4).unwrap();
        assert_eq!(idx.nearest(p(0.0, 0.0)).unwrap().0, 0);
        let idx = SpatialIndex::from_points(&[p(3.0, 0.0), p(-1.0, 0.0), p(1.0, 0.0)], 4).unwrap();
        assert_eq!(idx.nearest(p(0.0, 0.0)).unwrap().0, 1);
    }

    #[test]
    fn nearest_inside_rectangle() {
        let entries = vec![
            IndexEntry {
                rect: Rect::new(p(0.0, 0.0), p(1.0, 1.0)),
                id: 7,
            },
            IndexEntry {
                rect: Rect::new(p(2.0, 2.0), p(3.0, 3.0)),
                id: 3,
            },
        ];
        let idx = SpatialIndex::build(entries, 4).unwrap();
        assert_eq!(idx.nearest(p(0.5, 0.5)).unwrap().0, 7);
    }

    #[test]
    fn queries_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for w in 0..1_000 {
            let n = rng.random_range(1..300);
            let entries = random_rects(&mut rng, n);
            let idx = SpatialIndex::build(entries.clone(), [4, 8, 32][w % 3]).unwrap();

            let q = p(rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5));
            let best = entries
                .iter()
                .min_by(|a, b| {
                    a.rect
                        .min_dist2(q)
                        .total_cmp(&b.rect.min_dist2(q))
                        .then(a.id.cmp(&b.id))
                })
                .unwrap();
            let (got, reads) = idx.nearest(q).unwrap();
            assert_eq!(got, best.id);
            assert!(reads as usize <= idx.node_count());
            assert!(reads as usize >= idx.height());

            let c = p(rng.random_range(-0.2..1.2), rng.random_range(-0.2..1.2));
            let r = Rect::new(c, c + p(rng.random::<f64>() * 0.4, rng.random::<f64>() * 0.4));
            let (mut got, _) = idx.range_query(&r);
            got.sort_unstable();
            let want: Vec<u32> = entries
                .iter()
                .filter(|e| e.rect.intersects(&r))
                .map(|e| e.id)
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn range_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let idx = SpatialIndex::build(random_rects(&mut rng, 500), 8).unwrap();
        let (all, _) = idx.range_query(&Rect::new(p(-1.0, -1.0), p(2.0, 2.0)));
        assert_eq!(all.len(), 500);
        let (none, reads) = idx.range_query(&Rect::new(p(5.0, 5.0), p(6.0, 6.0)));
        assert!(none.is_empty());
        assert_eq!(reads, 0);
    }

    #[test]
    fn hilbert_curve_is_a_bijection_on_small_grid() {
        let mut codes: Vec<u64> = (0..4).flat_map(|x| (0..4).map(move |y| hilbert_d(x, y))).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), 16);
    }
}
