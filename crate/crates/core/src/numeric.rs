//! Small numerical kernels shared by the solvers: compensated summation,
//! a banded Cholesky factorization and sequence extrapolation.

use crate::error::{Error, Result};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Symmetric banded matrix stored by rows of its lower band:
/// `band[i * (bw + 1) + k]` holds entry `(i, i - k)`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Adds `v` to entry (i, j); the caller adds each off-diagonal pair once.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = r - c;
        debug_assert!(k <= self.bw);
        self.band[r * (self.bw + 1) + k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = r - c;
        if k > self.bw {
            0.0
        } else {
            self.band[r * (self.bw + 1) + k]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let w = self.bw + 1;
        for i in 0..self.n {
            let row = &self.band[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for k in 1..w.min(i + 1) {
                let j = i - k;
                y[i] += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
        }
        y
    }

    /// In-place Cholesky factorization `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // s = A(i,j) - sum_k L(i,k) L(j,k)
                let mut s = self.band[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= self.band[i * w + (i - k)] * self.band[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    self.band[i * w] = s.sqrt();
                } else {
                    self.band[i * w + (i - j)] = s / self.band[j * w];
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let bw = self.l.bw;
        let w = bw + 1;
        let band = &self.l.band;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 1..w.min(i + 1) {
                s -= band[i * w + k] * y[i - k];
            }
            y[i] = s / band[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in 1..w.min(n - i) {
                s -= band[(i + k) * w + k] * y[i + k];
            }
            y[i] = s / band[i * w];
        }
        y
    }
}

/// Aitken delta-squared extrapolation of the last three terms, guarded
/// against vanishing denominators and non-monotone tails.
pub fn aitken_limit(seq: &[f64]) -> Option<f64> {
    if seq.len() < 3 {
        return seq.last().copied();
    }
    let n = seq.len();
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let d1 = b - a;
    let d2 = c - b;
    let denom = d2 - d1;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
    if denom.abs() <= 1e-14 * scale || d1 * d2 <= 0.0 {
        return Some(c);
    }
    // ratio of successive differences must indicate contraction
    let ratio = d2 / d1;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Some(c);
    }
    let lim = c - d2 * d2 / denom;
    lim.is_finite().then_some(lim)
}

fn aitken_step(a: f64, b: f64, c: f64) -> Option<f64> {
    let d1 = b - a;
    let d2 = c - b;
    let denom = d2 - d1;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
    let ratio = d2 / d1;
    if denom.abs() <= 1e-14 * scale || d1 * d2 <= 0.0 || !(ratio > 0.0 && ratio < 1.0) {
        return None;
    }
    let lim = c - d2 * d2 / denom;
    lim.is_finite().then_some(lim)
}

/// Repeated Aitken transforms of the whole sequence. A level is used only
/// if every one of its triples contracts, so a sequence dominated by a few
/// geometric modes is resolved while noisy tails stop the recursion.
pub fn aitken_iterated(seq: &[f64]) -> Option<f64> {
    let mut level = seq.to_vec();
    let mut best = *level.last()?;
    while level.len() >= 3 {
        let next: Option<Vec<f64>> = level
            .windows(3)
            .map(|w| aitken_step(w[0], w[1], w[2]))
            .collect();
        match next {
            Some(n) => {
                best = *n.last().unwrap();
                level = n;
            }
            None => break,
        }
    }
    Some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterated_aitken_removes_two_geometric_modes() {
        let seq: Vec<f64> = (0..9)
            .map(|i| 3.0 * 0.5f64.powi(i) + 0.7 * 0.25f64.powi(i) + 1.25)
            .collect();
        let single = aitken_limit(&seq).unwrap();
        let it = aitken_iterated(&seq).unwrap();
        assert!((it - 1.25).abs() < 1e-8, "{it}");
        assert!((it - 1.25).abs() < (single - 1.25).abs());
        assert_eq!(aitken_iterated(&[1.0, 2.0]), Some(2.0));
    }

    #[test]
    fn band_cholesky_solves_tridiagonal() {
        let n = 50;
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x);
        let chol = a.cholesky().unwrap();
        let y = chol.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn band_cholesky_rejects_indefinite() {
        let mut a = BandMatrix::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(matches!(a.cholesky(), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn band_cholesky_wide_band_matches_dense() {
        // random SPD with bandwidth 3
        let n = 12;
        let bw = 3;
        let mut a = BandMatrix::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 10.0 + i as f64);
            for k in 1..=bw.min(i) {
                a.add(i, i - k, ((i * 7 + k * 3) % 5) as f64 * 0.3 - 0.6);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let b = a.mul_vec(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn aitken_exact_on_geometric() {
        let seq: Vec<f64> = (0..6).map(|k| 3.0 + 0.5f64.powi(k)).collect();
        let lim = aitken_limit(&seq).unwrap();
        assert!((lim - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kahan_beats_naive() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat(1e-16).take(10_000));
        let s = kahan_sum(xs.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
