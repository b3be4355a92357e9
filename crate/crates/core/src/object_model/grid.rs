use serde::{Deserialize, Serialize};

use super::Shape;
use crate::error::{Error, Result};

/// Partition of an array into equal chunks. Part numbers enumerate the grid
/// in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChunkGrid {
    chunk_dims: Vec<u64>,
    grid_dims: Vec<u64>,
    chunk_count: u64,
}

/// One contiguous byte run shared by a chunk buffer and the full array buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub chunk_offset: u64,
    pub array_offset: u64,
    pub len: u64,
}

/// Checks that `chunk_dims` tiles `shape` exactly and returns the grid.
pub fn validate_chunking(shape: &Shape, chunk_dims: &[u64]) -> Result<ChunkGrid> {
    if chunk_dims.len() != shape.rank() {
        return Err(Error::RankMismatch {
            shape: shape.rank(),
            chunk: chunk_dims.len(),
        });
    }
    if chunk_dims.contains(&0) {
        return Err(Error::InvalidShape("chunk dimension is zero".into()));
    }
    let non_divisible = || Error::NonDivisibleChunk {
        shape: shape.dims().to_vec(),
        chunk: chunk_dims.to_vec(),
    };
    let mut grid_dims = Vec::with_capacity(chunk_dims.len());
    for (&d, &c) in shape.dims().iter().zip(chunk_dims) {
        if d % c != 0 {
            return Err(non_divisible());
        }
        grid_dims.push(d / c);
    }
    let chunk_count: u64 = grid_dims.iter().product();
    // parts are u32 on disk and on the wire
    if chunk_count > u64::from(u32::MAX) + 1 {
        return Err(Error::InvalidShape(format!(
            "{chunk_count} chunks exceed the u32 part space"
        )));
    }
    Ok(ChunkGrid {
        chunk_dims: chunk_dims.to_vec(),
        grid_dims,
        chunk_count,
    })
}

impl ChunkGrid {
    /// Single chunk covering the whole shape.
    pub fn whole(shape: &Shape) -> ChunkGrid {
        ChunkGrid {
            chunk_dims: shape.dims().to_vec(),
            grid_dims: vec![1; shape.rank()],
            chunk_count: 1,
        }
    }

    pub fn chunk_dims(&self) -> &[u64] {
        &self.chunk_dims
    }

    pub fn grid_dims(&self) -> &[u64] {
        &self.grid_dims
    }

    pub fn chunk_count(&self) -> u64 {
        self.chunk_count
    }

    pub fn chunk_shape(&self) -> Shape {
        Shape::new(self.chunk_dims.clone()).expect("chunk dims validated on construction")
    }

    pub fn chunk_elements(&self) -> u64 {
        self.chunk_dims.iter().product()
    }

    pub fn shape(&self) -> Shape {
        let dims: Vec<u64> = self
            .chunk_dims
            .iter()
            .zip(&self.grid_dims)
            .map(|(c, g)| c * g)
            .collect();
        Shape::new(dims).expect("grid product validated on construction")
    }

    pub fn check_part(&self, part: u64) -> Result<u32> {
        if part >= self.chunk_count {
            return Err(Error::PartOutOfRange {
                part,
                chunk_count: self.chunk_count,
            });
        }
        Ok(part as u32)
    }

    pub fn parts(&self) -> impl Iterator<Item = u32> {
        (0..self.chunk_count).map(|p| p as u32)
    }

    /// Grid coordinates of a part (row-major, last axis fastest).
    pub fn part_coords(&self, part: u32) -> Vec<u64> {
        let mut rem = u64::from(part);
        let mut coords = vec![0; self.grid_dims.len()];
        for (c, &g) in coords.iter_mut().zip(&self.grid_dims).rev() {
            *c = rem % g;
            rem /= g;
        }
        coords
    }

    pub fn part_at(&self, coords: &[u64]) -> Option<u32> {
        if coords.len() != self.grid_dims.len() {
            return None;
        }
        let mut part = 0u64;
        for (&c, &g) in coords.iter().zip(&self.grid_dims) {
            if c >= g {
                return None;
            }
            part = part * g + c;
        }
        u32::try_from(part).ok()
    }

    /// Byte runs mapping chunk `part` into the full row-major array,
    /// coalesced where consecutive rows are adjacent in the array.
    pub fn runs(&self, part: u32, elem_size: usize) -> Vec<Run> {
        let rank = self.chunk_dims.len();
        let full = self.shape();
        let full_dims = full.dims();
        let origin: Vec<u64> = self
            .part_coords(part)
            .iter()
            .zip(&self.chunk_dims)
            .map(|(g, c)| g * c)
            .collect();
        let e = elem_size as u64;
        let row_len = self.chunk_dims[rank - 1] * e;
        let outer = &self.chunk_dims[..rank - 1];
        let rows: u64 = outer.iter().product();

        let mut runs: Vec<Run> = Vec::new();
        let mut idx = vec![0u64; rank - 1];
        for row in 0..rows {
            let mut linear = 0u64;
            for axis in 0..rank - 1 {
                linear = linear * full_dims[axis] + origin[axis] + idx[axis];
            }
            linear = linear * full_dims[rank - 1] + origin[rank - 1];
            let run = Run {
                chunk_offset: row * row_len,
                array_offset: linear * e,
                len: row_len,
            };
            match runs.last_mut() {
                Some(last) if last.array_offset + last.len == run.array_offset => last.len += run.len,
                _ => runs.push(run),
            }
            for axis in (0..rank - 1).rev() {
                idx[axis] += 1;
                if idx[axis] < outer[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        runs
    }
}
