use std::ops::AddAssign;
use std::time::Duration;

/// Per-run counters. Each algorithm invocation owns one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Metrics {
    pub dominance_tests: u64,
    pub cell_reads: u64,
    pub index_node_reads: u64,
    pub wall_time: Duration,
}

impl Metrics {
    /// Total I/O: cell blocks plus index nodes.
    pub fn io(&self) -> u64 {
        self.cell_reads + self.index_node_reads
    }
}

impl AddAssign for Metrics {
    fn add_assign(&mut self, o: Metrics) {
        self.dominance_tests += o.dominance_tests;
        self.cell_reads += o.cell_reads;
        self.index_node_reads += o.index_node_reads;
        self.wall_time += o.wall_time;
    }
}
