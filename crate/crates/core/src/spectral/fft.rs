use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::field::{RealField, SpectralField};
use super::grid::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Spectrum position and conjugate position per mode, keyed by `(N, M)`.
type TableCache = Mutex<HashMap<(usize, usize), Arc<Vec<(usize, usize)>>>>;

/// Two-dimensional FFTs on square grids, with plan reuse.
///
/// Real fields are transformed two at a time through one complex FFT
/// (`a + i b`), and forward results are symmetrized so the returned
/// coefficients are exactly Hermitian. Plans are cached behind a mutex;
/// results depend only on inputs.
pub struct Transform {
    planner: Mutex<FftPlanner<f64>>,
    tables: TableCache,
}

impl Default for Transform {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").finish_non_exhaustive()
    }
}

impl Transform {
    pub fn new() -> Self {
        Self {
            planner: Mutex::new(FftPlanner::new()),
            tables: Mutex::new(HashMap::new()),
        }
    }

    fn table(&self, grid: &Grid, m: usize) -> Arc<Vec<(usize, usize)>> {
        let mut tables = self.tables.lock().expect("index table cache poisoned");
        tables
            .entry((grid.n(), m))
            .or_insert_with(|| Arc::new(index_table(grid, m)))
            .clone()
    }

    fn plan(&self, m: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
        let mut planner = self.planner.lock().expect("fft planner poisoned");
        planner.plan_fft(m, direction)
    }

    fn fft2(&self, data: &mut [Complex64], m: usize, direction: FftDirection) {
        let fft = self.plan(m, direction);
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, m);
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, m);
    }

    /// Coefficients of a real field on its own grid. Round-trips with
    /// [`Transform::inverse`], Nyquist modes included.
    pub fn forward(&self, f: &RealField) -> SpectralField {
        let grid = *f.grid();
        let comps = self.from_physical(f.comps(), grid.n(), &grid);
        SpectralField::new(grid, comps).expect("sizes match by construction")
    }

    /// Samples of a coefficient set on its own grid.
    pub fn inverse(&self, s: &SpectralField) -> RealField {
        let grid = *s.grid();
        let comps: Vec<&[Complex64]> = s.comps().iter().map(|c| c.as_slice()).collect();
        let values = self.to_physical(&comps, &grid, grid.n());
        RealField::new(grid, values).expect("sizes match by construction")
    }

    /// Evaluates spectra from `grid` on an `m × m` grid (`m >= N`), zero-padding
    /// the missing modes. When `m > N` the Nyquist lines of `grid` are dropped.
    pub fn to_physical(&self, spectra: &[&[Complex64]], grid: &Grid, m: usize) -> Vec<Vec<f64>> {
        assert!(m >= grid.n(), "evaluation grid must not be coarser");
        let table = self.table(grid, m);
        let mut out = Vec::with_capacity(spectra.len());
        for pair in spectra.chunks(2) {
            let mut buf = vec![ZERO; m * m];
            match pair {
                [a, b] => {
                    for (&(p, _), (&x, &y)) in table.iter().zip(a.iter().zip(b.iter())) {
                        if p != SKIP {
                            buf[p] = Complex64::new(x.re - y.im, x.im + y.re);
                        }
                    }
                }
                [a] => {
                    for (&(p, _), &x) in table.iter().zip(a.iter()) {
                        if p != SKIP {
                            buf[p] = x;
                        }
                    }
                }
                _ => unreachable!(),
            }
            self.fft2(&mut buf, m, FftDirection::Inverse);
            out.push(buf.iter().map(|z| z.re).collect());
            if pair.len() == 2 {
                out.push(buf.iter().map(|z| z.im).collect());
            }
        }
        out
    }

    /// Transforms `m × m` real samples and keeps the modes representable on
    /// `target` (Nyquist lines of `target` are zeroed when `m > N`).
    pub fn from_physical(&self, values: &[Vec<f64>], m: usize, target: &Grid) -> Vec<Vec<Complex64>> {
        assert!(m >= target.n(), "evaluation grid must not be coarser");
        let scale = 1.0 / (m * m) as f64;
        let table = self.table(target, m);
        let mut out = Vec::with_capacity(values.len());
        for pair in values.chunks(2) {
            let mut buf: Vec<Complex64> = match pair {
                [a, b] => a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect(),
                [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                _ => unreachable!(),
            };
            assert_eq!(buf.len(), m * m, "sample count does not match evaluation grid");
            self.fft2(&mut buf, m, FftDirection::Forward);
            let mut first = vec![ZERO; target.len()];
            let mut second = vec![ZERO; target.len()];
            for (idx, (a, b)) in first.iter_mut().zip(second.iter_mut()).enumerate() {
                let (p, q) = table[idx];
                if p == SKIP {
                    continue;
                }
                let zp = buf[p] * scale;
                let zq = buf[q].conj() * scale;
                *a = (zp + zq) * 0.5;
                *b = (zp - zq) * Complex64::new(0.0, -0.5);
            }
            out.push(first);
            if pair.len() == 2 {
                out.push(second);
            }
        }
        out
    }
}

const SKIP: usize = usize::MAX;

/// For each mode of `grid`: its position in an `m × m` spectrum and the
/// position of its conjugate, or `SKIP` for Nyquist modes dropped on padding.
fn index_table(grid: &Grid, m: usize) -> Vec<(usize, usize)> {
    let wrap = |f: i64| if f < 0 { (f + m as i64) as usize } else { f as usize };
    grid.modes()
        .map(|(_, [f1, f2])| {
            if m != grid.n() && grid.is_nyquist_mode([f1, f2]) {
                return (SKIP, SKIP);
            }
            let p = wrap(f1) * m + wrap(f2);
            let q = wrap(-f1) * m + wrap(-f2);
            (p, q)
        })
        .collect()
}

/// In-place square transpose, tiled for cache locality.
fn transpose(data: &mut [Complex64], m: usize) {
    const TILE: usize = 16;
    for bi in (0..m).step_by(TILE) {
        for bj in (bi..m).step_by(TILE) {
            for i in bi..(bi + TILE).min(m) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + TILE).min(m) {
                    data.swap(i * m + j, j * m + i);
                }
            }
        }
    }
}
