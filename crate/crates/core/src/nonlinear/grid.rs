//! 2D complex FFTs on an `Ny × Nx` row-major grid (rows are `y`).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signed wavenumber of FFT index `i` on `n` points.
    pub fn signed(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// FFT index of signed wavenumber `k`.
    pub fn index_of(k: i64, n: usize) -> usize {
        k.rem_euclid(n as i64) as usize
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd_x, &self.fwd_y);
    }

    /// Unnormalized inverse transform in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv_x, &self.inv_y);
    }

    fn transform(&self, data: &mut [Complex64], fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
        data.par_chunks_mut(self.nx).for_each(|row| fx.process(row));
        self.columns(data, fy);
    }

    /// Unnormalized inverse transform along `x` only.
    pub fn inverse_rows(&self, data: &mut [Complex64]) {
        data.par_chunks_mut(self.nx)
            .for_each(|row| self.inv_x.process(row));
    }

    /// Unnormalized inverse transform along `y` only.
    pub fn inverse_columns(&self, data: &mut [Complex64]) {
        self.columns(data, &self.inv_y);
    }

    /// Unnormalized inverse transform of a single length-`Ny` column.
    pub fn inverse_column(&self, col: &mut [Complex64]) {
        self.inv_y.process(col);
    }

    fn columns(&self, data: &mut [Complex64], fy: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        let mut cols = vec![Complex64::new(0.0, 0.0); nx * ny];
        cols.par_chunks_mut(ny).enumerate().for_each(|(i, col)| {
            for (l, c) in col.iter_mut().enumerate() {
                *c = data[l * nx + i];
            }
            fy.process(col);
        });
        data.par_chunks_mut(nx).enumerate().for_each(|(l, row)| {
            for (i, c) in row.iter_mut().enumerate() {
                *c = cols[i * ny + l];
            }
        });
    }
}
