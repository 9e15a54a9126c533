//! Square 2D FFTs over row-major buffers.
//!
//! Forward transforms are unnormalized; inverse transforms carry the full
//! `1/N²` factor so that `inverse(forward(x)) == x`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft2d {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d").field("side", &self.side).finish()
    }
}

impl Fft2d {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    pub fn make_scratch(&self) -> Vec<Complex64> {
        vec![Complex64::default(); self.scratch_len()]
    }

    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.run(&*self.forward, buf, scratch);
    }

    pub fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.run(&*self.inverse, buf, scratch);
        let norm = 1.0 / (self.side * self.side) as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }

    /// Forward transform of a real field into a fresh complex buffer.
    pub fn forward_real(&self, data: &[f64], scratch: &mut [Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf, scratch);
        buf
    }

    fn run(&self, plan: &dyn Fft<f64>, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.side;
        debug_assert_eq!(buf.len(), n * n);
        plan.process_with_scratch(buf, scratch);
        transpose_in_place(buf, n);
        plan.process_with_scratch(buf, scratch);
        transpose_in_place(buf, n);
    }
}

fn transpose_in_place(buf: &mut [Complex64], n: usize) {
    for y in 0..n {
        for x in (y + 1)..n {
            buf.swap(y * n + x, x * n + y);
        }
    }
}

/// Signed frequency of a DFT bin: `0..N/2-1` then `-N/2..-1`.
#[inline]
pub fn signed_frequency(index: usize, side: usize) -> i64 {
    if index < side / 2 {
        index as i64
    } else {
        index as i64 - side as i64
    }
}
