//! On-disk cell file: one block per Voronoi cell, addressed through an
//! offset table kept in memory.
//!
//! Layout, all little-endian:
//!
//! ```text
//! header   magic "SSKYVD1\0" | u32 cell_count | u32 precision (64)
//! offsets  u64 x cell_count, absolute byte offset of each block
//! block    u32 site_id | f64 site_x | f64 site_y | u32 vertex_count
//!          | f64 x, f64 y per vertex | u32 neighbor per edge
//! ```
//!
//! Clip-box edges store neighbor `0xFFFFFFFF`.

use std::borrow::Cow;
use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::metrics::Metrics;
use crate::voronoi::{CellSource, VoronoiCell, VoronoiDiagram};

pub const MAGIC: [u8; 8] = *b"SSKYVD1\0";
pub const PRECISION_F64: u32 = 64;
const HEADER_LEN: u64 = 16;
/// Guards against absurd vertex counts in corrupt blocks.
const MAX_VERTICES: u32 = 1 << 20;

/// Write `diagram` to `path` and return an open handle on the result.
pub fn write_cells(diagram: &VoronoiDiagram, path: &Path) -> Result<CellFile> {
    if diagram.is_empty() {
        return Err(Error::InvalidArgument("cannot write an empty diagram".into()));
    }
    let cells = diagram.cells();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&(cells.len() as u32).to_le_bytes())?;
    w.write_all(&PRECISION_F64.to_le_bytes())?;

    let mut offset = HEADER_LEN + 8 * cells.len() as u64;
    let mut offsets = Vec::with_capacity(cells.len());
    for c in cells {
        offsets.push(offset);
        offset += block_len(c.vertices.len());
    }
    for o in &offsets {
        w.write_all(&o.to_le_bytes())?;
    }
    for c in cells {
        w.write_all(&encode_block(c))?;
    }
    w.flush()?;
    drop(w);
    CellFile::open(path)
}

fn block_len(vertices: usize) -> u64 {
    4 + 16 + 4 + 16 * vertices as u64 + 4 * vertices as u64
}

fn encode_block(c: &VoronoiCell) -> Vec<u8> {
    let mut b = Vec::with_capacity(block_len(c.vertices.len()) as usize);
    b.extend_from_slice(&c.site_id.to_le_bytes());
    b.extend_from_slice(&c.site.x.to_le_bytes());
    b.extend_from_slice(&c.site.y.to_le_bytes());
    b.extend_from_slice(&(c.vertices.len() as u32).to_le_bytes());
    for v in &c.vertices {
        b.extend_from_slice(&v.x.to_le_bytes());
        b.extend_from_slice(&v.y.to_le_bytes());
    }
    for n in &c.neighbors {
        b.extend_from_slice(&n.to_le_bytes());
    }
    b
}

/// Open cell file. Every [`CellSource::read_cell`] reads exactly one block
/// unless an LRU cache was enabled.
#[derive(Debug)]
pub struct CellFile {
    file: Mutex<File>,
    offsets: Vec<u64>,
    len: u64,
    cache: Option<Mutex<Lru>>,
}

impl CellFile {
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = File::open(path)?;
        let len = file.metadata()?.len();
        let mut header = [0u8; HEADER_LEN as usize];
        file.read_exact(&mut header).map_err(|_| Error::Format {
            offset: 0,
            reason: "truncated header".into(),
        })?;
        if header[..8] != MAGIC {
            return Err(Error::Format {
                offset: 0,
                reason: "bad magic".into(),
            });
        }
        let count = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let precision = u32::from_le_bytes(header[12..16].try_into().unwrap());
        if precision != PRECISION_F64 {
            return Err(Error::Format {
                offset: 12,
                reason: format!("unsupported precision tag {precision}"),
            });
        }
        let table_end = HEADER_LEN + 8 * count as u64;
        if table_end > len {
            return Err(Error::Format {
                offset: HEADER_LEN,
                reason: "truncated offset table".into(),
            });
        }
        let mut raw = vec![0u8; 8 * count];
        file.read_exact(&mut raw)?;
        let offsets: Vec<u64> = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut prev = table_end;
        for (i, &o) in offsets.iter().enumerate() {
            if o < prev || o >= len || (i > 0 && o <= offsets[i - 1]) {
                return Err(Error::Format {
                    offset: HEADER_LEN + 8 * i as u64,
                    reason: format!("offset {o} out of order or past end of file"),
                });
            }
            prev = o;
        }
        Ok(CellFile {
            file: Mutex::new(file),
            offsets,
            len,
            cache: None,
        })
    }

    /// Keep up to `capacity` decoded cells in memory. Cache hits do not
    /// count as cell reads.
    pub fn with_cache(mut self, capacity: usize) -> Self {
        self.cache = (capacity > 0).then(|| Mutex::new(Lru::new(capacity)));
        self
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    fn read_block(&self, id: u32) -> Result<VoronoiCell> {
        let start = self.offsets[id as usize];
        let end = self
            .offsets
            .get(id as usize + 1)
            .copied()
            .unwrap_or(self.len);
        let mut buf = vec![0u8; (end - start) as usize];
        {
            let mut f = self.file.lock().expect("cell file lock poisoned");
            f.seek(SeekFrom::Start(start))?;
            f.read_exact(&mut buf).map_err(|_| Error::Format {
                offset: start,
                reason: "truncated block".into(),
            })?;
        }
        decode_block(&buf, start, id)
    }

    /// Decode every cell without touching any counters.
    pub fn load_all(&self) -> Result<Vec<VoronoiCell>> {
        (0..self.offsets.len() as u32).map(|i| self.read_block(i)).collect()
    }
}

fn decode_block(buf: &[u8], offset: u64, id: u32) -> Result<VoronoiCell> {
    let bad = |at: usize, reason: String| Error::Format {
        offset: offset + at as u64,
        reason,
    };
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = buf
            .get(pos..pos + n)
            .ok_or_else(|| bad(pos, "block ends early".into()))?;
        pos += n;
        Ok(s)
    };
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());

    let site_id = u32_at(take(4)?);
    if site_id != id {
        return Err(bad(0, format!("block holds site {site_id}, expected {id}")));
    }
    let site = Point2::new(f64_at(take(8)?), f64_at(take(8)?));
    let k = u32_at(take(4)?);
    if k == 0 || k > MAX_VERTICES {
        return Err(bad(20, format!("implausible vertex count {k}")));
    }
    let mut vertices = Vec::with_capacity(k as usize);
    for _ in 0..k {
        vertices.push(Point2::new(f64_at(take(8)?), f64_at(take(8)?)));
    }
    let mut neighbors = Vec::with_capacity(k as usize);
    for _ in 0..k {
        neighbors.push(u32_at(take(4)?));
    }
    if let Some(v) = vertices.iter().chain(std::iter::once(&site)).find(|v| !v.is_finite()) {
        return Err(bad(0, format!("non-finite coordinate ({}, {})", v.x, v.y)));
    }
    Ok(VoronoiCell {
        site_id,
        site,
        vertices,
        neighbors,
    })
}

impl CellSource for CellFile {
    fn cell_count(&self) -> usize {
        self.offsets.len()
    }

    fn read_cell(&self, id: u32, metrics: &mut Metrics) -> Result<Cow<'_, VoronoiCell>> {
        if id as usize >= self.offsets.len() {
            return Err(Error::OutOfRange {
                id,
                count: self.offsets.len(),
            });
        }
        if let Some(cache) = &self.cache {
            if let Some(c) = cache.lock().expect("cache lock poisoned").get(id) {
                return Ok(Cow::Owned(c));
            }
        }
        let cell = self.read_block(id)?;
        metrics.cell_reads += 1;
        if let Some(cache) = &self.cache {
            cache.lock().expect("cache lock poisoned").put(id, cell.clone());
        }
        Ok(Cow::Owned(cell))
    }
}

#[derive(Debug)]
struct Lru {
    capacity: usize,
    map: HashMap<u32, VoronoiCell>,
    order: VecDeque<u32>,
}

impl Lru {
    fn new(capacity: usize) -> Self {
        Lru {
            capacity,
            map: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    fn touch(&mut self, id: u32) {
        if let Some(i) = self.order.iter().position(|&x| x == id) {
            self.order.remove(i);
        }
        self.order.push_back(id);
    }

    fn get(&mut self, id: u32) -> Option<VoronoiCell> {
        let c = self.map.get(&id)?.clone();
        self.touch(id);
        Some(c)
    }

    fn put(&mut self, id: u32, cell: VoronoiCell) {
        self.map.insert(id, cell);
        self.touch(id);
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.map.remove(&old);
            }
        }
    }
}

/// Wraps a cell source and logs every id it hands out.
pub struct TracingSource<'a, C: ?Sized> {
    inner: &'a C,
    log: Mutex<Vec<u32>>,
}

impl<'a, C: CellSource + ?Sized> TracingSource<'a, C> {
    pub fn new(inner: &'a C) -> Self {
        TracingSource {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn trace(&self) -> Vec<u32> {
        self.log.lock().expect("trace lock poisoned").clone()
    }
}

impl<C: CellSource + ?Sized> CellSource for TracingSource<'_, C> {
    fn cell_count(&self) -> usize {
        self.inner.cell_count()
    }

    fn read_cell(&self, id: u32, metrics: &mut Metrics) -> Result<Cow<'_, VoronoiCell>> {
        let c = self.inner.read_cell(id, metrics)?;
        self.log.lock().expect("trace lock poisoned").push(id);
        Ok(c)
    }
}
