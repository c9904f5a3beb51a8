//! Real-to-complex 3D transforms on the half-spectrum layout.
//!
//! Spectral storage index is `kx + nh*(ky + n*kz)` with `nh = n/2 + 1`;
//! physical storage is x-fastest. The forward transform carries the `1/n³`
//! factor so that `f(x) = Σ_k c_k e^{i k·x}`.

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::GridSpec;

pub(crate) struct Plan {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plan_cache() -> &'static Mutex<HashMap<usize, Arc<Plan>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn plan(n: usize) -> Arc<Plan> {
    let mut cache = plan_cache().lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut rp = RealFftPlanner::<f64>::new();
            let mut cp = FftPlanner::<f64>::new();
            Arc::new(Plan {
                n,
                r2c: rp.plan_fft_forward(n),
                c2r: rp.plan_fft_inverse(n),
                fwd: cp.plan_fft_forward(n),
                inv: cp.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Storage indices along a full axis whose wavenumber magnitude is at most
/// `band`.
fn axis_keep(grid: &GridSpec, band: Option<usize>) -> Vec<bool> {
    (0..grid.n)
        .map(|j| match band {
            None => true,
            Some(b) => grid.wavenumber(j).unsigned_abs() as usize <= b,
        })
        .collect()
}

impl Plan {
    /// Forward transform of one real lattice. With `band = Some(b)` only modes
    /// with every `|k_i| ≤ b` are computed; the rest are left at zero.
    pub(crate) fn forward(&self, grid: &GridSpec, data: &[f64], band: Option<usize>) -> Vec<Complex64> {
        let n = self.n;
        let nh = n / 2 + 1;
        debug_assert_eq!(data.len(), n * n * n);
        let kx_max = band.map_or(nh - 1, |b| b.min(nh - 1));
        let ncols = kx_max + 1;
        let keep = axis_keep(grid, band);
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![zero; nh * n * n];

        // x: real rows to half spectra
        let mut rin = vec![0.0; n];
        let mut rout = vec![zero; nh];
        let mut rscratch = vec![zero; self.r2c.get_scratch_len()];
        for row in 0..n * n {
            rin.copy_from_slice(&data[row * n..(row + 1) * n]);
            self.r2c
                .process_with_scratch(&mut rin, &mut rout, &mut rscratch)
                .expect("r2c length mismatch");
            out[row * nh..row * nh + ncols].copy_from_slice(&rout[..ncols]);
        }

        let mut tmp = vec![zero; ncols * n];
        let mut scratch = vec![zero; self.fwd.get_inplace_scratch_len()];

        // y: columns of each z-plane
        for z in 0..n {
            let plane = &mut out[z * nh * n..(z + 1) * nh * n];
            for c in 0..ncols {
                for y in 0..n {
                    tmp[c * n + y] = plane[c + nh * y];
                }
            }
            self.fwd.process_with_scratch(&mut tmp, &mut scratch);
            for c in 0..ncols {
                for y in 0..n {
                    plane[c + nh * y] = if keep[y] { tmp[c * n + y] } else { zero };
                }
            }
        }

        // z: columns along kz for every retained ky
        for ky in 0..n {
            if !keep[ky] {
                continue;
            }
            for c in 0..ncols {
                for z in 0..n {
                    tmp[c * n + z] = out[c + nh * (ky + n * z)];
                }
            }
            self.fwd.process_with_scratch(&mut tmp, &mut scratch);
            for c in 0..ncols {
                for z in 0..n {
                    out[c + nh * (ky + n * z)] = if keep[z] { tmp[c * n + z] } else { zero };
                }
            }
        }

        let norm = 1.0 / (n * n * n) as f64;
        for c in out.iter_mut() {
            *c *= norm;
        }
        out
    }

    /// Inverse transform; columns that are identically zero are skipped.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        let nh = n / 2 + 1;
        debug_assert_eq!(coeffs.len(), nh * n * n);
        let zero = Complex64::new(0.0, 0.0);
        let mut work = coeffs.to_vec();
        let mut tmp = vec![zero; nh * n];
        let mut cols = Vec::with_capacity(nh);
        let mut scratch = vec![zero; self.inv.get_inplace_scratch_len()];

        // z columns
        for ky in 0..n {
            cols.clear();
            for c in 0..nh {
                if (0..n).any(|z| work[c + nh * (ky + n * z)] != zero) {
                    cols.push(c);
                }
            }
            if cols.is_empty() {
                continue;
            }
            for (j, &c) in cols.iter().enumerate() {
                for z in 0..n {
                    tmp[j * n + z] = work[c + nh * (ky + n * z)];
                }
            }
            self.inv
                .process_with_scratch(&mut tmp[..cols.len() * n], &mut scratch);
            for (j, &c) in cols.iter().enumerate() {
                for z in 0..n {
                    work[c + nh * (ky + n * z)] = tmp[j * n + z];
                }
            }
        }

        // y columns
        for z in 0..n {
            let plane = &mut work[z * nh * n..(z + 1) * nh * n];
            cols.clear();
            for c in 0..nh {
                if (0..n).any(|y| plane[c + nh * y] != zero) {
                    cols.push(c);
                }
            }
            if cols.is_empty() {
                continue;
            }
            for (j, &c) in cols.iter().enumerate() {
                for y in 0..n {
                    tmp[j * n + y] = plane[c + nh * y];
                }
            }
            self.inv
                .process_with_scratch(&mut tmp[..cols.len() * n], &mut scratch);
            for (j, &c) in cols.iter().enumerate() {
                for y in 0..n {
                    plane[c + nh * y] = tmp[j * n + y];
                }
            }
        }

        // x rows
        let mut out = vec![0.0; n * n * n];
        let mut cin = vec![zero; nh];
        let mut cscratch = vec![zero; self.c2r.get_scratch_len()];
        for row in 0..n * n {
            let src = &work[row * nh..(row + 1) * nh];
            let dst = &mut out[row * n..(row + 1) * n];
            if src.iter().all(|c| *c == zero) {
                continue;
            }
            cin.copy_from_slice(src);
            // A real row has real DC and Nyquist bins; drop round-off.
            cin[0].im = 0.0;
            cin[nh - 1].im = 0.0;
            self.c2r
                .process_with_scratch(&mut cin, dst, &mut cscratch)
                .expect("c2r length mismatch");
        }
        out
    }
}
