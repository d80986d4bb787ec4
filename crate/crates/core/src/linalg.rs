//! Banded LU with partial pivoting and a block-bordered direct solver.
//!
//! The step systems consist of one banded block per curve plus a handful of
//! border unknowns (junction displacement, multipliers) that couple the
//! blocks. The border is eliminated through a small dense Schur complement.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square matrix with `lower` sub-diagonals and `upper` super-diagonals.
///
/// Storage keeps `lower` extra super-diagonals so row interchanges during
/// factorisation stay inside the band.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.lower as isize;
        if off < 0 || off as usize >= self.width {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` to entry `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.lower >= i && j <= i + self.upper,
            "entry ({i}, {j}) outside band"
        );
        let k = self.slot(i, j).expect("inside band");
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Factorises in place; fails when no nonzero pivot is left in a column.
    pub fn factorize(mut self) -> Option<BandLu> {
        let n = self.n;
        let kl = self.lower;
        let w = self.width;
        let reach = self.lower + self.upper;
        let a = &mut self.data;
        // Entry (i, j) lives at i * w + j + kl - i; a row is contiguous in j.
        let at = |i: usize, j: usize| i * w + j + kl - i;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a[at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = a[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return None;
            }
            pivots[k] = p;
            let len = (k + reach).min(n - 1) - k;
            if p != k {
                for j in k..=k + len {
                    a.swap(at(k, j), at(p, j));
                }
            }
            let pivot = a[at(k, k)];
            for i in k + 1..=last_row {
                let (head, tail) = a.split_at_mut(i * w);
                let krow = &head[at(k, k + 1)..at(k, k + 1) + len];
                let off = k + kl - i;
                let factor = tail[off] / pivot;
                tail[off] = factor;
                if factor != 0.0 {
                    for (x, y) in tail[off + 1..off + 1 + len].iter_mut().zip(krow) {
                        *x -= factor * y;
                    }
                }
            }
        }
        Some(BandLu { band: self, pivots })
    }
}

/// LU factors of a [`BandMatrix`] (multipliers stored below the diagonal).
#[derive(Debug, Clone)]
pub struct BandLu {
    band: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.band.n;
        let kl = self.band.lower;
        let w = self.band.width;
        let reach = self.band.lower + self.band.upper;
        let a = &self.band.data;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..(k + kl + 1).min(n) {
                    b[i] -= a[i * w + k + kl - i] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let len = (k + reach).min(n - 1) - k;
            let row = &a[k * w + kl + 1..k * w + kl + 1 + len];
            let s: f64 = row.iter().zip(&b[k + 1..k + 1 + len]).map(|(x, y)| x * y).sum();
            b[k] = (b[k] - s) / a[k * w + kl];
        }
    }

    /// Solves for `m` right-hand sides at once; `b` is row-major, `n x m`.
    pub fn solve_many_in_place(&self, b: &mut [f64], m: usize) {
        let n = self.band.n;
        let kl = self.band.lower;
        let w = self.band.width;
        let reach = self.band.lower + self.band.upper;
        let a = &self.band.data;
        assert_eq!(b.len(), n * m);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                for c in 0..m {
                    b.swap(k * m + c, p * m + c);
                }
            }
            let (head, tail) = b.split_at_mut((k + 1) * m);
            let bk = &head[k * m..];
            for i in k + 1..(k + kl + 1).min(n) {
                let f = a[i * w + k + kl - i];
                if f != 0.0 {
                    let row = &mut tail[(i - k - 1) * m..(i - k) * m];
                    for (x, y) in row.iter_mut().zip(bk) {
                        *x -= f * y;
                    }
                }
            }
        }
        for k in (0..n).rev() {
            let len = (k + reach).min(n - 1) - k;
            let (head, tail) = b.split_at_mut((k + 1) * m);
            let bk = &mut head[k * m..];
            for (t, &f) in a[k * w + kl + 1..k * w + kl + 1 + len].iter().enumerate() {
                if f != 0.0 {
                    for (x, y) in bk.iter_mut().zip(&tail[t * m..(t + 1) * m]) {
                        *x -= f * y;
                    }
                }
            }
            let d = a[k * w + kl];
            for x in bk.iter_mut() {
                *x /= d;
            }
        }
    }
}

/// One diagonal block of a bordered system together with its couplings.
///
/// `couple_col[(i, k)]` is the coefficient of border unknown `k` in local
/// equation `i`; `couple_row[(k, i)]` that of local unknown `i` in border
/// equation `k`.
#[derive(Debug, Clone)]
pub struct Block {
    pub matrix: BandMatrix,
    pub couple_col: DMatrix<f64>,
    pub couple_row: DMatrix<f64>,
    pub rhs: Vec<f64>,
}

impl Block {
    pub fn new(n: usize, lower: usize, upper: usize, border: usize) -> Self {
        Self {
            matrix: BandMatrix::zeros(n, lower, upper),
            couple_col: DMatrix::zeros(n, border),
            couple_row: DMatrix::zeros(border, n),
            rhs: vec![0.0; n],
        }
    }
}

/// Square system
///
/// ```text
/// [ A_1          B_1 ] [x_1]   [f_1]
/// [     ...      ... ] [...] = [...]
/// [          A_n B_n ] [x_n]   [f_n]
/// [ C_1 ... C_n  D   ] [ y ]   [ g ]
/// ```
#[derive(Debug, Clone)]
pub struct BorderedSystem {
    pub blocks: Vec<Block>,
    pub corner: DMatrix<f64>,
    pub border_rhs: DVector<f64>,
}

/// Solution split into per-block parts and the border part.
#[derive(Debug, Clone, PartialEq)]
pub struct BorderedSolution {
    pub blocks: Vec<Vec<f64>>,
    pub border: Vec<f64>,
    /// `max |r_i|` of the final residual.
    pub residual: f64,
}

impl BorderedSolution {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.blocks.iter().flatten().copied().collect();
        out.extend_from_slice(&self.border);
        out
    }
}

impl BorderedSystem {
    pub fn border_dim(&self) -> usize {
        self.corner.nrows()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.matrix.dim()).sum::<usize>() + self.border_dim()
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.blocks.iter().flat_map(|b| b.rhs.iter().copied()).collect();
        out.extend(self.border_rhs.iter().copied());
        out
    }

    /// Matrix-vector product with the full system matrix.
    pub fn apply(&self, blocks: &[Vec<f64>], border: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let y = DVector::from_column_slice(border);
        let mut out_border = &self.corner * &y;
        let out_blocks = self
            .blocks
            .iter()
            .zip(blocks)
            .map(|(b, x)| {
                let xv = DVector::from_column_slice(x);
                out_border += &b.couple_row * &xv;
                let coupled = &b.couple_col * &y;
                b.matrix
                    .mul_vec(x)
                    .into_iter()
                    .zip(coupled.iter())
                    .map(|(a, c)| a + c)
                    .collect()
            })
            .collect();
        (out_blocks, out_border.iter().copied().collect())
    }

    /// Dense copy of the full matrix, unknowns ordered block by block then
    /// border.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let nb = self.border_dim();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let k = b.matrix.dim();
            m.view_mut((off, off), (k, k)).copy_from(&b.matrix.to_dense());
            m.view_mut((off, n - nb), (k, nb)).copy_from(&b.couple_col);
            m.view_mut((n - nb, off), (nb, k)).copy_from(&b.couple_row);
            off += k;
        }
        m.view_mut((n - nb, n - nb), (nb, nb)).copy_from(&self.corner);
        m
    }

    /// Direct solve by block elimination, with one round of iterative
    /// refinement when the residual exceeds `1e-12 * |rhs|`.
    ///
    /// On a singular diagonal block the error names that block (1-based).
    pub fn solve(&self) -> Result<BorderedSolution> {
        let factors = self.factorize()?;
        let f: Vec<Vec<f64>> = self.blocks.iter().map(|b| b.rhs.clone()).collect();
        let g: Vec<f64> = self.border_rhs.iter().copied().collect();
        let (mut x, mut y) = factors.solve(&f, &g)?;

        let rhs_norm = self.rhs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut residual = self.residual(&x, &y);
        if residual.0 > 1e-12 * rhs_norm {
            let (dx, dy) = factors.solve(&residual.1, &residual.2)?;
            for (xb, db) in x.iter_mut().zip(&dx) {
                for (a, d) in xb.iter_mut().zip(db) {
                    *a += d;
                }
            }
            for (a, d) in y.iter_mut().zip(&dy) {
                *a += d;
            }
            residual = self.residual(&x, &y);
        }
        Ok(BorderedSolution {
            blocks: x,
            border: y,
            residual: residual.0,
        })
    }

    fn residual(&self, x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
        let (ax, ay) = self.apply(x, y);
        let rb: Vec<Vec<f64>> = self
            .blocks
            .iter()
            .zip(ax)
            .map(|(b, a)| b.rhs.iter().zip(a).map(|(r, v)| r - v).collect())
            .collect();
        let ry: Vec<f64> = self.border_rhs.iter().zip(ay).map(|(r, v)| r - v).collect();
        let max = rb.iter().flatten().chain(ry.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        (max, rb, ry)
    }

    fn factorize(&self) -> Result<Factors<'_>> {
        let nb = self.border_dim();
        let mut schur = self.corner.clone();
        let mut lus = Vec::with_capacity(self.blocks.len());
        for (idx, b) in self.blocks.iter().enumerate() {
            let lu = b
                .matrix
                .clone()
                .factorize()
                .ok_or(Error::SingularSystem { curve: idx + 1 })?;
            // A^{-1} B, one border column at a time.
            let n = b.matrix.dim();
            let mut rows = vec![0.0; n * nb];
            for i in 0..n {
                for k in 0..nb {
                    rows[i * nb + k] = b.couple_col[(i, k)];
                }
            }
            lu.solve_many_in_place(&mut rows, nb);
            let ainv_b = DMatrix::from_row_slice(n, nb, &rows);
            schur -= &b.couple_row * &ainv_b;
            lus.push((lu, ainv_b));
        }
        let schur_lu = schur.clone().lu();
        let scale = schur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let det_ok = (0..nb).all(|i| schur_lu.u()[(i, i)].abs() > scale * 1e-14);
        if !det_ok {
            return Err(Error::SingularSystem { curve: 0 });
        }
        Ok(Factors {
            system: self,
            lus,
            schur: schur_lu,
        })
    }
}

struct Factors<'a> {
    system: &'a BorderedSystem,
    /// Per block: LU factors and `A^{-1} B`.
    lus: Vec<(BandLu, DMatrix<f64>)>,
    schur: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Factors<'_> {
    fn solve(&self, f: &[Vec<f64>], g: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut reduced = DVector::from_column_slice(g);
        let mut ainv_f = Vec::with_capacity(f.len());
        for ((b, (lu, _)), fb) in self.system.blocks.iter().zip(&self.lus).zip(f) {
            let mut z = fb.clone();
            lu.solve_in_place(&mut z);
            reduced -= &b.couple_row * DVector::from_column_slice(&z);
            ainv_f.push(z);
        }
        let y = self.schur.solve(&reduced).ok_or(Error::SingularSystem { curve: 0 })?;
        let x = self
            .lus
            .iter()
            .zip(ainv_f)
            .map(|((_, ainv_b), mut z)| {
                let shift = ainv_b * &y;
                for (a, c) in z.iter_mut().zip(shift.iter()) {
                    *a -= c;
                }
                z
            })
            .collect();
        Ok((x, y.iter().copied().collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(rng: &mut ChaCha8Rng, n: usize, kl: usize, ku: usize) -> BandMatrix {
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.add(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        a
    }

    #[test]
    fn band_lu_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (40, 3, 3), (33, 2, 4)] {
            let a = random_band(&mut rng, n, kl, ku);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dense = a.to_dense().lu().solve(&DVector::from_column_slice(&b)).unwrap();
            let lu = a.factorize().unwrap();
            let mut x = b.clone();
            lu.solve_in_place(&mut x);
            for (p, q) in x.iter().zip(dense.iter()) {
                assert!((p - q).abs() < 1e-9 * (1.0 + q.abs()), "{p} vs {q}");
            }
        }
    }

    #[test]
    fn many_rhs_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, m) = (37, 4);
        let lu = random_band(&mut rng, n, 3, 3).factorize().unwrap();
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut rows = vec![0.0; n * m];
        for (c, col) in cols.iter().enumerate() {
            for i in 0..n {
                rows[i * m + c] = col[i];
            }
        }
        lu.solve_many_in_place(&mut rows, m);
        for (c, col) in cols.iter().enumerate() {
            let mut x = col.clone();
            lu.solve_in_place(&mut x);
            for i in 0..n {
                assert!((x[i] - rows[i * m + c]).abs() < 1e-12 * (1.0 + x[i].abs()));
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 2, 1.0);
        a.add(2, 1, 1.0);
        a.add(2, 2, 1.0);
        let lu = a.factorize().unwrap();
        let mut b = vec![2.0, 4.0, 5.0];
        lu.solve_in_place(&mut b);
        // x1 = 2, x0 + x2 = 4, x1 + x2 = 5.
        for (x, e) in b.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_band_rejected() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(2, 2, 1.0);
        assert!(a.factorize().is_none());
    }

    #[test]
    fn bordered_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nb = 4;
        let blocks = (0..3)
            .map(|_| {
                let n = 17;
                let mut b = Block::new(n, 3, 3, nb);
                b.matrix = random_band(&mut rng, n, 3, 3);
                for i in 0..n {
                    b.matrix.add(i, i, 4.0);
                    b.rhs[i] = rng.gen_range(-1.0..1.0);
                    for k in 0..nb {
                        b.couple_col[(i, k)] = rng.gen_range(-1.0..1.0);
                        b.couple_row[(k, i)] = rng.gen_range(-1.0..1.0);
                    }
                }
                b
            })
            .collect();
        let sys = BorderedSystem {
            blocks,
            corner: DMatrix::from_fn(nb, nb, |i, j| if i == j { 3.0 } else { 0.5 }),
            border_rhs: DVector::from_fn(nb, |i, _| i as f64),
        };
        let sol = sys.solve().unwrap();
        let dense = sys.to_dense().lu().solve(&DVector::from_vec(sys.rhs())).unwrap();
        for (p, q) in sol.flatten().iter().zip(dense.iter()) {
            assert!((p - q).abs() < 1e-10, "{p} vs {q}");
        }
        assert!(sol.residual < 1e-12);
    }
}
