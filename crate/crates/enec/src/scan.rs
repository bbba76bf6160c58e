//! Prefix sums over N x 16 tiles without intra-row element dependencies.
//!
//! The decoder needs exclusive prefix counts over the group mask to locate
//! each anomalous group's overflow run. [`tile_scan`] computes inclusive
//! prefix sums of a tile treated as a flattened 1-D array in two stages:
//!
//! 1. intra-row scan: transpose the tile so row neighbours become column
//!    neighbours, run log2(16) doubling vector additions down the rows,
//!    transpose back;
//! 2. inter-row propagation: hierarchically add rows on a working copy in
//!    log2(N) steps, read the inclusive row totals off the last column,
//!    shift them into exclusive offsets and broadcast-add onto stage 1.
//!
//! On a general-purpose CPU a serial scan would do; the staged form is the
//! decode-offset path of the block codec and is checked against
//! [`serial_scan`] as its sole correctness contract.

use crate::error::{Error, Result};

/// Lanes per tile row: sixteen 16-bit values, one 32-byte segment.
pub const LANES: usize = 16;

/// A row-major `rows x 16` matrix of 16-bit lanes.
///
/// Row count must be a power of two. Values must be small enough that the
/// grand total fits a lane; mask scans use {0,1} values so any tile with at
/// most 65535 set bits is safe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    rows: usize,
    values: Vec<u16>,
}

impl Tile {
    pub fn new(rows: usize, values: Vec<u16>) -> Result<Self> {
        if rows == 0 || !rows.is_power_of_two() {
            return Err(Error::Shape("tile row count must be a power of two"));
        }
        if values.len() != rows * LANES {
            return Err(Error::Shape("tile needs rows * 16 values"));
        }
        Ok(Tile { rows, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn into_values(self) -> Vec<u16> {
        self.values
    }
}

/// Inclusive prefix sums of the flattened tile.
pub fn tile_scan(tile: &Tile) -> Tile {
    let rows = tile.rows;

    // Stage 1: transpose, scan every column in log2(16) doubling steps,
    // transpose back. Each row then holds its local prefix sums.
    let mut t = transpose(&tile.values, rows, LANES);
    let mut step = 1;
    while step < LANES {
        for r in (step..LANES).rev() {
            let (lo, hi) = t.split_at_mut(r * rows);
            let src = &lo[(r - step) * rows..(r - step) * rows + rows];
            let dst = &mut hi[..rows];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = d.wrapping_add(*s);
            }
        }
        step <<= 1;
    }
    let mut scanned = transpose(&t, LANES, rows);

    // Stage 2: hierarchical row additions on a copy expose the inclusive
    // row totals in the last column.
    let mut c = scanned.clone();
    let mut step = 1;
    while step < rows {
        for i in (step..rows).rev() {
            let (lo, hi) = c.split_at_mut(i * LANES);
            let src = &lo[(i - step) * LANES..(i - step) * LANES + LANES];
            let dst = &mut hi[..LANES];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = d.wrapping_add(*s);
            }
        }
        step <<= 1;
    }
    let inclusive_totals: Vec<u16> = (0..rows).map(|i| c[i * LANES + LANES - 1]).collect();
    let offsets = exclusive_offsets(&inclusive_totals);

    // Broadcast each row's exclusive offset across its lanes.
    for (i, &off) in offsets.iter().enumerate() {
        for lane in &mut scanned[i * LANES..(i + 1) * LANES] {
            *lane = lane.wrapping_add(off);
        }
    }

    Tile {
        rows,
        values: scanned,
    }
}

/// Stage 1 alone: every row independently replaced by its prefix sums.
pub fn intra_row_scan(tile: &Tile) -> Tile {
    let rows = tile.rows;
    let mut t = transpose(&tile.values, rows, LANES);
    let mut step = 1;
    while step < LANES {
        for r in (step..LANES).rev() {
            let (lo, hi) = t.split_at_mut(r * rows);
            let src = &lo[(r - step) * rows..(r - step) * rows + rows];
            let dst = &mut hi[..rows];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = d.wrapping_add(*s);
            }
        }
        step <<= 1;
    }
    Tile {
        rows,
        values: transpose(&t, LANES, rows),
    }
}

/// Turn inclusive per-row totals into exclusive offsets: drop the bottom
/// element and push a zero on top.
pub fn exclusive_offsets(inclusive: &[u16]) -> Vec<u16> {
    let mut out = Vec::with_capacity(inclusive.len());
    out.push(0);
    out.extend_from_slice(&inclusive[..inclusive.len().saturating_sub(1)]);
    out
}

/// Textbook inclusive prefix sum, the oracle for [`tile_scan`].
pub fn serial_scan(values: &[u16]) -> Vec<u16> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0u16;
    for &v in values {
        acc = acc.wrapping_add(v);
        out.push(acc);
    }
    out
}

fn transpose(values: &[u16], rows: usize, cols: usize) -> Vec<u16> {
    let mut out = vec![0u16; values.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = values[r * cols + c];
        }
    }
    out
}
