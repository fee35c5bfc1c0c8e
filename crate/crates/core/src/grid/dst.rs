//! Sine-transform Poisson solver for the 15-point Laplacian with zero
//! Dirichlet data.
//!
//! The discrete sine transform diagonalizes the operator on product sine
//! modes, so the solve is transform, divide by the symbol, transform
//! back. The transform itself runs through a complex FFT of the odd
//! extension, length 2n per axis.

use super::laplacian::lap15_symbol;
use super::CubeGrid;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct DstSolver {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    line: Vec<f64>,
}

impl DstSolver {
    /// Solver for grids with n cells per axis, so n - 1 interior nodes.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        let scratch_len = fft.get_inplace_scratch_len();
        DstSolver {
            n,
            fft,
            buf: vec![Complex::default(); 2 * n],
            scratch: vec![Complex::default(); scratch_len],
            line: vec![0.0; n - 1],
        }
    }

    /// Unnormalized type-I sine transform of one line:
    /// out[m-1] = sum_j in[j-1] sin(pi j m / n). Applying it twice
    /// multiplies by n/2.
    fn dst1_line(&mut self, line: &mut [f64]) {
        let n = self.n;
        self.buf.fill(Complex::default());
        for j in 1..n {
            let v = line[j - 1];
            self.buf[j].re = v;
            self.buf[2 * n - j].re = -v;
        }
        self.fft
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for m in 1..n {
            line[m - 1] = -0.5 * self.buf[m].im;
        }
    }

    /// Unnormalized 3D sine transform in place on interior-ordered data.
    pub fn dst3d(&mut self, a: &mut [f64]) {
        let d = self.n - 1;
        assert_eq!(a.len(), d * d * d);
        for i in 0..d {
            for j in 0..d {
                let base = (i * d + j) * d;
                let mut line = std::mem::take(&mut self.line);
                line.copy_from_slice(&a[base..base + d]);
                self.dst1_line(&mut line);
                a[base..base + d].copy_from_slice(&line);
                self.line = line;
            }
        }
        for i in 0..d {
            for k in 0..d {
                let base = i * d * d + k;
                let mut line = std::mem::take(&mut self.line);
                for j in 0..d {
                    line[j] = a[base + j * d];
                }
                self.dst1_line(&mut line);
                for j in 0..d {
                    a[base + j * d] = line[j];
                }
                self.line = line;
            }
        }
        for j in 0..d {
            for k in 0..d {
                let base = j * d + k;
                let mut line = std::mem::take(&mut self.line);
                for i in 0..d {
                    line[i] = a[base + i * d * d];
                }
                self.dst1_line(&mut line);
                for i in 0..d {
                    a[base + i * d * d] = line[i];
                }
                self.line = line;
            }
        }
    }

    /// Solve lap15 v = f with v = 0 on the cube boundary. `f` holds the
    /// right side in interior ordering and is overwritten by v.
    pub fn solve_poisson(&mut self, grid: &CubeGrid, f: &mut [f64]) {
        assert_eq!(grid.n, self.n);
        let n = self.n;
        self.dst3d(f);
        let d = n - 1;
        let mut idx = 0;
        for m1 in 1..n {
            for m2 in 1..n {
                for m3 in 1..n {
                    let lam = lap15_symbol(grid, [m1, m2, m3]);
                    debug_assert!(lam < 0.0);
                    f[idx] /= lam;
                    idx += 1;
                }
            }
        }
        debug_assert_eq!(idx, d * d * d);
        self.dst3d(f);
        let scale = (2.0 / n as f64).powi(3);
        for v in f.iter_mut() {
            *v *= scale;
        }
    }
}
