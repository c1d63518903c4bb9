//! Banded LU factorization with partial pivoting.
//!
//! Storage follows the usual column-major band layout: entry `(i, j)` lives
//! at row `kl + ku + i - j` of column `j`, leaving `kl` extra rows above the
//! band for pivoting fill-in.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ld,
            data: vec![0.0; ld * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + j * self.ld
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) { self.data[self.slot(i, j)] } else { 0.0 }
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            *yi = (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum();
        }
    }

    /// Factorizes in place.
    pub fn factorize(mut self) -> Result<BandedLu> {
        let (n, kl, kv) = (self.n, self.kl, self.kl + self.ku);
        let ld = self.ld;
        let mut pivots = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ld;
            let mut jp = 0;
            let mut best = self.data[col + kv].abs();
            for t in 1..=km {
                let v = self.data[col + kv + t].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            pivots[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::InvalidParameter(format!("banded matrix is singular at column {j}")));
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = kv + j - c + c * ld;
                    self.data.swap(a, a + jp);
                }
            }
            if km > 0 {
                let inv = 1.0 / self.data[col + kv];
                for t in 1..=km {
                    self.data[col + kv + t] *= inv;
                }
                for c in j + 1..=ju {
                    let base = kv + j - c + c * ld;
                    let u = self.data[base];
                    if u != 0.0 {
                        for t in 1..=km {
                            self.data[base + t] -= self.data[col + kv + t] * u;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { lu: self, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.lu;
        let (n, kl, kv, ld) = (m.n, m.kl, m.kl + m.ku, m.ld);
        assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(p, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                for t in 1..=kl.min(n - 1 - j) {
                    b[j + t] -= m.data[kv + t + j * ld] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= m.data[kv + j * ld];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= m.data[kv + i - j + j * ld] * bj;
                }
            }
        }
    }
}
