//! Dense exact linear algebra over [`Scalar`].
//!
//! All the linear problems in this crate are small (per-character graded
//! pieces, coefficient-matching for cochain solves), so plain rational
//! Gaussian elimination is enough.

use crate::scalar::Scalar;

/// A dense matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Scalar>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c));
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn at(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.cols + c] = v;
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        self.rref_within(self.cols)
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right kernel {x : A x = 0}, as column vectors.
    pub fn kernel(&self) -> Vec<Vec<Scalar>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivot_set.contains(c)).collect();
        let mut basis = Vec::new();
        for &f in &free {
            let mut v = vec![Scalar::zero(); self.cols];
            v[f] = Scalar::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.at(r, f).clone();
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of A x = b, or None if inconsistent.
    pub fn solve(&self, b: &[Scalar]) -> Option<Vec<Scalar>> {
        self.solve_many(std::slice::from_ref(&b.to_vec())).pop().unwrap()
    }

    /// Solutions of A x = b for several right-hand sides sharing one
    /// elimination pass.  Pivots are confined to the columns of A, so each
    /// augmented column independently reports consistency.
    pub fn solve_many(&self, bs: &[Vec<Scalar>]) -> Vec<Option<Vec<Scalar>>> {
        if bs.is_empty() {
            return Vec::new();
        }
        let k = bs.len();
        let mut aug = Matrix::zero(self.rows, self.cols + k);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.at(r, c).clone());
            }
            for (j, b) in bs.iter().enumerate() {
                assert_eq!(b.len(), self.rows);
                aug.set(r, self.cols + j, b[r].clone());
            }
        }
        let pivots = aug.rref_within(self.cols);
        let rank = pivots.len();
        bs.iter()
            .enumerate()
            .map(|(j, _)| {
                // rows past the rank have a zero A-part; a nonzero entry
                // there means this RHS is inconsistent
                if (rank..self.rows).any(|r| !aug.at(r, self.cols + j).is_zero()) {
                    return None;
                }
                let mut x = vec![Scalar::zero(); self.cols];
                for (r, &pc) in pivots.iter().enumerate() {
                    x[pc] = aug.at(r, self.cols + j).clone();
                }
                Some(x)
            })
            .collect()
    }

    /// Reduced row echelon form with pivot search restricted to the first
    /// `col_limit` columns; later columns are carried along passively.
    fn rref_within(&mut self, col_limit: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..col_limit {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self.at(r, col).is_zero()) else {
                continue;
            };
            for c in 0..self.cols {
                self.data.swap(row * self.cols + c, p * self.cols + c);
            }
            let inv = self.at(row, col).inv().unwrap();
            for c in col..self.cols {
                let v = self.at(row, c).clone() * inv.clone();
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r != row && !self.at(r, col).is_zero() {
                    let f = self.at(r, col).clone();
                    for c in col..self.cols {
                        let v = self.at(r, c).clone() - f.clone() * self.at(row, c).clone();
                        self.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }
}

/// Basis of the intersection of two subspaces of k^n given by spanning sets.
pub fn subspace_intersection(a: &[Vec<Scalar>], b: &[Vec<Scalar>], n: usize) -> Vec<Vec<Scalar>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    // Columns [A | -B]; kernel vectors give coefficients with A u = B v.
    let mut m = Matrix::zero(n, a.len() + b.len());
    for (j, col) in a.iter().enumerate() {
        for i in 0..n {
            m.set(i, j, col[i].clone());
        }
    }
    for (j, col) in b.iter().enumerate() {
        for i in 0..n {
            m.set(i, a.len() + j, -col[i].clone());
        }
    }
    let ker = m.kernel();
    let mut vecs: Vec<Vec<Scalar>> = Vec::new();
    for k in &ker {
        let mut v = vec![Scalar::zero(); n];
        for (j, col) in a.iter().enumerate() {
            for i in 0..n {
                v[i] += k[j].clone() * col[i].clone();
            }
        }
        vecs.push(v);
    }
    independent_subset(vecs, n)
}

/// Extracts a maximal linearly independent subset of the given vectors.
pub fn independent_subset(vecs: Vec<Vec<Scalar>>, n: usize) -> Vec<Vec<Scalar>> {
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    let mut out = Vec::new();
    for v in vecs {
        let mut m = Matrix::from_rows(rows.iter().cloned().chain([v.clone()]).collect());
        let r = m.rref().len();
        if r > rows.len() {
            rows.push(v.clone());
            out.push(v);
        }
        let _ = n;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: i64) -> Scalar {
        Scalar::from_i64(n)
    }

    #[test]
    fn rref_and_rank() {
        let m = Matrix::from_rows(vec![
            vec![s(1), s(2), s(3)],
            vec![s(2), s(4), s(6)],
            vec![s(0), s(1), s(1)],
        ]);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn kernel_annihilates() {
        let m = Matrix::from_rows(vec![vec![s(1), s(2), s(3)], vec![s(0), s(1), s(1)]]);
        let ker = m.kernel();
        assert_eq!(ker.len(), 1);
        for v in &ker {
            for r in 0..m.rows {
                let mut acc = Scalar::zero();
                for c in 0..m.cols {
                    acc += m.at(r, c).clone() * v[c].clone();
                }
                assert!(acc.is_zero());
            }
        }
    }

    #[test]
    fn solve_consistent_and_not() {
        let m = Matrix::from_rows(vec![vec![s(1), s(1)], vec![s(2), s(2)]]);
        assert!(m.solve(&[s(3), s(6)]).is_some());
        assert!(m.solve(&[s(3), s(7)]).is_none());
    }

    #[test]
    fn intersection_of_planes() {
        // span{e1, e2} ∩ span{e2, e3} = span{e2} in k^3.
        let a = vec![vec![s(1), s(0), s(0)], vec![s(0), s(1), s(0)]];
        let b = vec![vec![s(0), s(1), s(0)], vec![s(0), s(0), s(1)]];
        let i = subspace_intersection(&a, &b, 3);
        assert_eq!(i.len(), 1);
        assert!(i[0][0].is_zero() && !i[0][1].is_zero() && i[0][2].is_zero());
    }
}
