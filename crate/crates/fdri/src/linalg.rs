//! Deterministic parallel matrix-vector kernels for the hot paths.
//!
//! Dot products use a fixed 8-lane accumulator layout so results do not
//! depend on thread count or scheduling; parallelism is over disjoint output
//! chunks only.

use rayon::prelude::*;

const PAR_CHUNK: usize = 512;

pub(crate) fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let mut ai = a.chunks_exact(8);
    let mut bi = b.chunks_exact(8);
    for (ac, bc) in (&mut ai).zip(&mut bi) {
        for l in 0..8 {
            acc[l] += ac[l] * bc[l];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ai.remainder().iter().zip(bi.remainder()) {
        s += x * y;
    }
    s
}

pub(crate) fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let mut ai = a.chunks_exact(8);
    let mut bi = b.chunks_exact(8);
    for (ac, bc) in (&mut ai).zip(&mut bi) {
        for l in 0..8 {
            acc[l] += ac[l] * bc[l];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ai.remainder().iter().zip(bi.remainder()) {
        s += x * y;
    }
    s
}

/// Row-major (rows x cols) matrix times vector, parallel over row chunks.
pub(crate) fn matvec_f64(rows: usize, cols: usize, data: &[f64], x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(data.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let mut out = vec![0.0f64; rows];
    out.par_chunks_mut(PAR_CHUNK)
        .zip(data.par_chunks(PAR_CHUNK * cols))
        .for_each(|(out_chunk, rows_chunk)| {
            for (o, row) in out_chunk.iter_mut().zip(rows_chunk.chunks_exact(cols)) {
                *o = dot_f64(row, x);
            }
        });
    out
}

/// Single-precision variant used by the real-time reconstruction path.
pub(crate) fn matvec_f32(rows: usize, cols: usize, data: &[f32], x: &[f32]) -> Vec<f32> {
    debug_assert_eq!(data.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let mut out = vec![0.0f32; rows];
    out.par_chunks_mut(PAR_CHUNK)
        .zip(data.par_chunks(PAR_CHUNK * cols))
        .for_each(|(out_chunk, rows_chunk)| {
            for (o, row) in out_chunk.iter_mut().zip(rows_chunk.chunks_exact(cols)) {
                *o = dot_f32(row, x);
            }
        });
    out
}
