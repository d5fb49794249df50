//! Cached FFT plans and axis-wise transforms on `n^dim` periodic grids.
//!
//! Forward transforms are unnormalised; inverse transforms divide by `n^dim`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::C64;

pub(crate) struct Plans {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub(crate) fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let mut cache = CACHE
        .get_or_init(Default::default)
        .lock()
        .expect("fft cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

impl Plans {
    pub(crate) fn forward(&self, dim: usize, buf: &mut [C64]) {
        self.transform(dim, buf, &self.forward);
    }

    pub(crate) fn inverse(&self, dim: usize, buf: &mut [C64]) {
        self.transform(dim, buf, &self.inverse);
        let scale = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, dim: usize, buf: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n.pow(dim as u32));
        // axis 1 is contiguous
        fft.process(buf);
        if dim == 1 {
            return;
        }
        let mut line = vec![C64::default(); n];
        // axis 2: stride n inside each n*n plane
        for plane in buf.chunks_exact_mut(n * n) {
            for i0 in 0..n {
                for (j, v) in line.iter_mut().enumerate() {
                    *v = plane[i0 + n * j];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    plane[i0 + n * j] = *v;
                }
            }
        }
        // axis 3: stride n*n
        let nn = n * n;
        for base in 0..nn {
            for (k, v) in line.iter_mut().enumerate() {
                *v = buf[base + nn * k];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                buf[base + nn * k] = *v;
            }
        }
    }
}

/// Angular wavenumbers `2π j / L` in FFT order, Nyquist included as `-π n / L`.
pub(crate) fn wavenumbers(n: usize, box_length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / box_length;
    (0..n)
        .map(|j| {
            let s = if j < n / 2 {
                j as f64
            } else {
                j as f64 - n as f64
            };
            s * dk
        })
        .collect()
}

/// Wavenumbers used for first derivatives: the Nyquist entry is zeroed so the
/// discrete derivative maps real fields to real fields.
pub(crate) fn derivative_wavenumbers(n: usize, box_length: f64) -> Vec<f64> {
    let mut k = wavenumbers(n, box_length);
    k[n / 2] = 0.0;
    k
}
