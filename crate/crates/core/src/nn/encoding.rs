use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::Matrix;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

/// Sinusoidal feature map `[x, sin(2ᵏπx), cos(2ᵏπx)]` for `k = 0..L−1`.
///
/// Layout per point: the raw input (if included), then for each frequency the
/// `sin` of every component followed by the `cos` of every component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PositionalEncoding {
    pub num_freqs: usize,
    pub include_input: bool,
}

impl PositionalEncoding {
    pub fn new(num_freqs: usize, include_input: bool) -> Self {
        PositionalEncoding { num_freqs, include_input }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        input_dim * (2 * self.num_freqs + usize::from(self.include_input))
    }

    fn freq(k: usize) -> f64 {
        (1u64 << k) as f64 * PI
    }

    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim(x.len())];
        self.encode_into(x, &mut out);
        out
    }

    pub fn encode_into(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        let mut o = 0;
        if self.include_input {
            out[..d].copy_from_slice(x);
            o = d;
        }
        for k in 0..self.num_freqs {
            let w = Self::freq(k);
            for (c, &xc) in x.iter().enumerate() {
                let (s, co) = (w * xc).sin_cos();
                out[o + c] = s;
                out[o + d + c] = co;
            }
            o += 2 * d;
        }
    }

    /// Writes the encoding of each point (rows of `points`, `B×d`) into
    /// `out[row, col_offset..]`. With `tangents = true` the `d` blocks of rows
    /// after the first `B` receive the derivative along each input axis.
    pub fn encode_batch(&self, points: &[f64], d: usize, tangents: bool, out: &mut Matrix, col_offset: usize) {
        let batch = points.len() / d;
        let streams = if tangents { 1 + d } else { 1 };
        debug_assert!(out.rows() >= streams * batch);
        for b in 0..batch {
            let x = &points[b * d..(b + 1) * d];
            {
                let row = &mut out.row_mut(b)[col_offset..];
                self.encode_into(x, row);
            }
            if !tangents {
                continue;
            }
            for t in 0..d {
                let row = &mut out.row_mut((1 + t) * batch + b)[col_offset..col_offset + self.output_dim(d)];
                row.fill(0.0);
                let mut o = 0;
                if self.include_input {
                    row[t] = 1.0;
                    o = d;
                }
                for k in 0..self.num_freqs {
                    let w = Self::freq(k);
                    let (s, co) = (w * x[t]).sin_cos();
                    row[o + t] = w * co;
                    row[o + d + t] = -w * s;
                    o += 2 * d;
                }
            }
        }
    }

    /// Chain rule back to the points: `grad` holds gradients for the value
    /// rows (and tangent rows when `tangents`) at `col_offset`. Accumulates
    /// into `grad_points` (`B×d`).
    pub fn backward_batch(
        &self,
        points: &[f64],
        d: usize,
        tangents: bool,
        grad: &Matrix,
        col_offset: usize,
        grad_points: &mut [f64],
    ) {
        let batch = points.len() / d;
        for b in 0..batch {
            let x = &points[b * d..(b + 1) * d];
            let g = &grad.row(b)[col_offset..];
            let gp = &mut grad_points[b * d..(b + 1) * d];
            let mut o = 0;
            if self.include_input {
                for c in 0..d {
                    gp[c] += g[c];
                }
                o = d;
            }
            let base = o;
            for k in 0..self.num_freqs {
                let w = Self::freq(k);
                for c in 0..d {
                    let (s, co) = (w * x[c]).sin_cos();
                    gp[c] += w * (g[o + c] * co - g[o + d + c] * s);
                }
                o += 2 * d;
            }
            if !tangents {
                continue;
            }
            for t in 0..d {
                let gt = &grad.row((1 + t) * batch + b)[col_offset..];
                let mut o = base;
                for k in 0..self.num_freqs {
                    let w = Self::freq(k);
                    let (s, co) = (w * x[t]).sin_cos();
                    // d/dx_t of (w cos, −w sin) is (−w² sin, −w² cos).
                    gp[t] += -w * w * (gt[o + t] * s + gt[o + d + t] * co);
                    o += 2 * d;
                }
            }
        }
    }
}
