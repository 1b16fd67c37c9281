//! Dense linear algebra over GF(2) with bit-packed rows.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2System {
    ncols: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
    rhs: Vec<bool>,
}

impl Gf2System {
    pub fn new(ncols: usize) -> Self {
        Gf2System {
            ncols,
            words: ncols.div_ceil(64).max(1),
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Add the equation `Σ_{j ∈ vars} x_j = rhs`; repeated variables cancel.
    pub fn push(&mut self, vars: &[usize], rhs: bool) {
        let mut row = vec![0u64; self.words];
        for &j in vars {
            assert!(j < self.ncols, "variable {j} out of range");
            row[j / 64] ^= 1u64 << (j % 64);
        }
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    fn bit(row: &[u64], j: usize) -> bool {
        (row[j / 64] >> (j % 64)) & 1 == 1
    }

    /// Row-reduce; returns the pivot columns and whether the system is consistent.
    fn eliminate(&self) -> (Vec<bool>, Vec<usize>, bool) {
        let mut rows = self.rows.clone();
        let mut rhs = self.rhs.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..self.ncols {
            let Some(p) = (r..rows.len()).find(|&i| Self::bit(&rows[i], col)) else {
                continue;
            };
            rows.swap(r, p);
            rhs.swap(r, p);
            for i in 0..rows.len() {
                if i != r && Self::bit(&rows[i], col) {
                    let (src, dst) = if i < r {
                        let (a, b) = rows.split_at_mut(r);
                        (&b[0], &mut a[i])
                    } else {
                        let (a, b) = rows.split_at_mut(i);
                        (&a[r], &mut b[0])
                    };
                    for (d, s) in dst.iter_mut().zip(src.iter()) {
                        *d ^= *s;
                    }
                    rhs[i] ^= rhs[r];
                }
            }
            pivots.push(col);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        let consistent = (r..rows.len()).all(|i| !rhs[i]);
        (rhs, pivots, consistent)
    }

    pub fn rank(&self) -> usize {
        self.eliminate().1.len()
    }

    /// A solution with free variables set to zero, or `None` if inconsistent.
    pub fn solve(&self) -> Option<Vec<bool>> {
        let (rhs, pivots, consistent) = self.eliminate();
        if !consistent {
            return None;
        }
        // Rows are fully reduced, so with free variables at zero each pivot
        // variable equals its row's right-hand side.
        let mut x = vec![false; self.ncols];
        for (i, &col) in pivots.iter().enumerate() {
            x[col] = rhs[i];
        }
        Some(x)
    }

    /// Check a candidate assignment against every equation.
    pub fn satisfied_by(&self, x: &[bool]) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, &b)| {
            let mut acc = false;
            for (j, &xj) in x.iter().enumerate().take(self.ncols) {
                if xj && Self::bit(row, j) {
                    acc = !acc;
                }
            }
            acc == b
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut s = Gf2System::new(3);
        s.push(&[0, 1, 2], true);
        let x = s.solve().unwrap();
        assert!(s.satisfied_by(&x));
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn detects_inconsistency() {
        let mut s = Gf2System::new(2);
        s.push(&[0, 1], true);
        s.push(&[0], false);
        s.push(&[1], false);
        assert!(s.solve().is_none());
    }

    #[test]
    fn wide_system_crosses_word_boundary() {
        let n = 150;
        let mut s = Gf2System::new(n);
        for j in 0..n - 1 {
            s.push(&[j, j + 1], j % 3 == 0);
        }
        let x = s.solve().unwrap();
        assert!(s.satisfied_by(&x));
        assert_eq!(s.rank(), n - 1);
    }

    #[test]
    fn repeated_variables_cancel() {
        let mut s = Gf2System::new(2);
        s.push(&[0, 0], true);
        assert!(s.solve().is_none());
    }
}
