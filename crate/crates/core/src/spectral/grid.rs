use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension. The solver is two-dimensional only.
pub const DIM: usize = 2;

/// Uniform periodic collocation grid on `[0, L)^2` and its wavenumber lattice.
///
/// Index `i` along an axis maps to the integer frequency `i` for `i < N/2`
/// and `i - N` otherwise, so the lattice is `-N/2 <= k < N/2` (times `2π/L`).
/// Storage is row-major with the x index varying slowest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::config(format!("N must be at least 4 (got {n})")));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::config(format!("N must be even (got {n})")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::config(format!("L must be positive (got {length})")));
        }
        Ok(Self { n, length })
    }

    /// `N` modes per dimension on the standard `2π` box.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Same box, different resolution.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.length)
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one collocation point, `(L/N)^2`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    /// Domain area `L^2`; the Parseval factor for the coefficient convention.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Smallest nonzero wavenumber magnitude, `2π/L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    /// Signed integer frequency for axis index `i`.
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Axis index holding integer frequency `f` (wrapped modulo `N`).
    pub fn index_of(&self, f: i64) -> usize {
        f.rem_euclid(self.n as i64) as usize
    }

    /// Every flat index with its integer wavevector, in storage order.
    /// Avoids the per-index division of [`Grid::int_freqs`] in hot loops.
    pub fn modes(&self) -> Modes {
        Modes {
            n: self.n,
            idx: 0,
            i2: 0,
            f1: 0,
        }
    }

    /// Physical wavevector of integer frequencies `f`.
    pub fn wavevector_of(&self, f: [i64; 2]) -> [f64; 2] {
        let k0 = self.k0();
        [k0 * f[0] as f64, k0 * f[1] as f64]
    }

    /// True when either frequency sits on the Nyquist line `−N/2`.
    pub fn is_nyquist_mode(&self, f: [i64; 2]) -> bool {
        let ny = -((self.n / 2) as i64);
        f[0] == ny || f[1] == ny
    }

    /// Flat index of the integer wavevector `k`.
    pub fn mode_index(&self, k: [i64; 2]) -> usize {
        self.index_of(k[0]) * self.n + self.index_of(k[1])
    }

    /// Flat index of the mode `-k` for flat index `idx`.
    pub fn conj_index(&self, idx: usize) -> usize {
        let (i1, i2) = (idx / self.n, idx % self.n);
        let j1 = (self.n - i1) % self.n;
        let j2 = (self.n - i2) % self.n;
        j1 * self.n + j2
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// True when either axis index of the flat index sits on the Nyquist line.
    pub fn touches_nyquist(&self, idx: usize) -> bool {
        self.is_nyquist(idx / self.n) || self.is_nyquist(idx % self.n)
    }

    /// Physical wavevector of the flat index.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let k0 = self.k0();
        [
            k0 * self.freq(idx / self.n) as f64,
            k0 * self.freq(idx % self.n) as f64,
        ]
    }

    pub fn int_freqs(&self, idx: usize) -> [i64; 2] {
        [self.freq(idx / self.n), self.freq(idx % self.n)]
    }

    pub fn k_squared(&self, idx: usize) -> f64 {
        let [k1, k2] = self.wavevector(idx);
        k1 * k1 + k2 * k2
    }

    /// Largest integer frequency kept by the 2/3 rule: the largest `K` with `3K < N`.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.n as i64) - 1) / 3
    }

    pub fn passes_two_thirds(&self, idx: usize) -> bool {
        let [f1, f2] = self.int_freqs(idx);
        let kc = self.dealias_cutoff();
        f1.abs() <= kc && f2.abs() <= kc
    }

    /// Size of the zero-padded evaluation grid for a padding `factor >= 1`,
    /// rounded up to the next even integer.
    pub fn padded_n(&self, factor: f64) -> usize {
        let m = (self.n as f64 * factor.max(1.0) - 1e-9).ceil() as usize;
        m + m % 2
    }

    /// Flat indices of every mode shared with `other` (modes strictly inside
    /// both Nyquist bands), paired as `(self index, other index)`.
    pub fn shared_modes(&self, other: &Grid) -> Vec<(usize, usize)> {
        let kmax = (self.n.min(other.n) / 2) as i64;
        let mut pairs = Vec::new();
        for f1 in (1 - kmax)..kmax {
            for f2 in (1 - kmax)..kmax {
                let a = self.index_of(f1) * self.n + self.index_of(f2);
                let b = other.index_of(f1) * other.n + other.index_of(f2);
                pairs.push((a, b));
            }
        }
        pairs
    }

    pub fn same_box(&self, other: &Grid) -> bool {
        self.length == other.length
    }
}

/// Iterator returned by [`Grid::modes`].
#[derive(Debug, Clone)]
pub struct Modes {
    n: usize,
    idx: usize,
    i2: usize,
    f1: i64,
}

impl Iterator for Modes {
    type Item = (usize, [i64; 2]);

    #[inline]
    fn next(&mut self) -> Option<Self::Item> {
        if self.idx == self.n * self.n {
            return None;
        }
        let half = self.n / 2;
        let f2 = if self.i2 < half {
            self.i2 as i64
        } else {
            self.i2 as i64 - self.n as i64
        };
        let item = (self.idx, [self.f1, f2]);
        self.idx += 1;
        self.i2 += 1;
        if self.i2 == self.n {
            self.i2 = 0;
            let i1 = self.idx / self.n;
            self.f1 = if i1 < half { i1 as i64 } else { i1 as i64 - self.n as i64 };
        }
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.n * self.n - self.idx;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Modes {}
