//! The simple-effect model matrix and exact integer determinants.
//!
//! Columns are ordered `(m0, a_1..a_{I-1}, b_1..b_{J-1})`: an intercept, the
//! indicators of the first `I − 1` levels of A and of the first `J − 1` levels
//! of B. The last level of each factor is the reference level.

use std::fmt;

use crate::design::{DesignSize, Fraction, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMatrix {
    size: DesignSize,
    labels: Vec<Point>,
    rows: Vec<Vec<i64>>,
}

fn model_row(size: DesignSize, p: Point) -> Vec<i64> {
    let (i, j) = (size.rows(), size.cols());
    let mut row = vec![0; size.parameters()];
    row[0] = 1;
    if p.i < i {
        row[p.i] = 1;
    }
    if p.j < j {
        row[i - 1 + p.j] = 1;
    }
    row
}

impl ModelMatrix {
    /// The `IJ × (I+J−1)` matrix of the full factorial, rows in
    /// lexicographic point order.
    pub fn full(size: DesignSize) -> Self {
        let labels: Vec<Point> = size.points().collect();
        let rows = labels.iter().map(|&p| model_row(size, p)).collect();
        Self { size, labels, rows }
    }

    /// Model matrix of a fraction, rows in the fraction's canonical order.
    pub fn for_fraction(f: &Fraction) -> Self {
        Self::full(f.size())
            .restrict(f)
            .expect("a fraction lies inside its own design")
    }

    /// Keeps the rows labelled by the points of `f`.
    pub fn restrict(&self, f: &Fraction) -> Result<Self> {
        if f.size() != self.size {
            return Err(Error::ShapeMismatch {
                expected: (self.size.rows(), self.size.cols()),
                found: (f.size().rows(), f.size().cols()),
            });
        }
        let mut labels = Vec::with_capacity(f.len());
        let mut rows = Vec::with_capacity(f.len());
        for &p in f.points() {
            let idx = self
                .labels
                .binary_search(&p)
                .map_err(|_| Error::PointOutOfRange {
                    point: p,
                    i: self.size.rows(),
                    j: self.size.cols(),
                })?;
            labels.push(p);
            rows.push(self.rows[idx].clone());
        }
        Ok(Self {
            size: self.size,
            labels,
            rows,
        })
    }

    pub fn size(&self) -> DesignSize {
        self.size
    }

    pub fn labels(&self) -> &[Point] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.size.parameters()
    }

    pub fn determinant(&self) -> Result<i64> {
        if self.nrows() != self.ncols() {
            return Err(Error::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            });
        }
        integer_determinant(&self.rows)
    }

    /// Column rank, by fraction-free elimination.
    pub fn rank(&self) -> Result<usize> {
        integer_rank(&self.rows, self.ncols())
    }
}

impl fmt::Display for ModelMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn bareiss_step(a: i64, b: i64, c: i64, d: i64, prev: i64) -> Result<i64> {
    let lhs = a.checked_mul(b).ok_or(Error::Overflow("determinant"))?;
    let rhs = c.checked_mul(d).ok_or(Error::Overflow("determinant"))?;
    let num = lhs.checked_sub(rhs).ok_or(Error::Overflow("determinant"))?;
    debug_assert_eq!(num % prev, 0, "Bareiss division must be exact");
    Ok(num / prev)
}

/// Exact determinant of a square integer matrix by Bareiss fraction-free
/// elimination. Overflow of an intermediate is reported rather than wrapped.
pub fn integer_determinant<R: AsRef<[i64]>>(m: &[R]) -> Result<i64> {
    let n = m.len();
    let mut a: Vec<Vec<i64>> = Vec::with_capacity(n);
    for row in m {
        let row = row.as_ref();
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: row.len(),
            });
        }
        a.push(row.to_vec());
    }
    if n == 0 {
        return Ok(1);
    }
    let mut sign = 1i64;
    let mut prev = 1i64;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = bareiss_step(a[i][j], a[k][k], a[i][k], a[k][j], prev)?;
            }
        }
        prev = a[k][k];
    }
    a[n - 1][n - 1]
        .checked_mul(sign)
        .ok_or(Error::Overflow("determinant"))
}

fn integer_rank<R: AsRef<[i64]>>(m: &[R], ncols: usize) -> Result<usize> {
    let mut a: Vec<Vec<i64>> = m.iter().map(|r| r.as_ref().to_vec()).collect();
    let nrows = a.len();
    let mut rank = 0;
    let mut prev = 1i64;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(piv) = (rank..nrows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        for i in rank + 1..nrows {
            for j in col + 1..ncols {
                a[i][j] = bareiss_step(a[i][j], a[rank][col], a[i][col], a[rank][j], prev)?;
            }
            a[i][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
    }
    Ok(rank)
}

/// Saturation certificate independent of any graph argument: the fraction
/// has `I + J − 1` points and its model matrix is non-singular.
pub fn is_saturated_by_determinant(f: &Fraction) -> bool {
    if f.len() != f.size().parameters() {
        return false;
    }
    ModelMatrix::for_fraction(f)
        .determinant()
        .map(|d| d != 0)
        .expect("0/1 model matrices of this size cannot overflow i64")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn sz(i: usize, j: usize) -> DesignSize {
        DesignSize::new(i, j).unwrap()
    }

    fn example_fraction() -> Fraction {
        Fraction::new(sz(3, 4), [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 4)]).unwrap()
    }

    // Rational Gaussian elimination, kept separate from the Bareiss path.
    fn rational_rank(rows: &[Vec<i64>]) -> usize {
        let mut a: Vec<Vec<Ratio<i64>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Ratio::from_integer(x)).collect())
            .collect();
        let ncols = a.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..ncols {
            let Some(p) = (rank..a.len()).find(|&r| !a[r][c].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            for r in 0..a.len() {
                if r != rank && !a[r][c].is_zero() {
                    let factor = a[r][c] / a[rank][c];
                    let pivot = a[rank].clone();
                    for (x, p) in a[r].iter_mut().zip(pivot) {
                        *x -= factor * p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn full_matrix_3x4_matches_published_layout() {
        let x = ModelMatrix::full(sz(3, 4));
        let expected: Vec<Vec<i64>> = vec![
            vec![1, 1, 0, 1, 0, 0],
            vec![1, 1, 0, 0, 1, 0],
            vec![1, 1, 0, 0, 0, 1],
            vec![1, 1, 0, 0, 0, 0],
            vec![1, 0, 1, 1, 0, 0],
            vec![1, 0, 1, 0, 1, 0],
            vec![1, 0, 1, 0, 0, 1],
            vec![1, 0, 1, 0, 0, 0],
            vec![1, 0, 0, 1, 0, 0],
            vec![1, 0, 0, 0, 1, 0],
            vec![1, 0, 0, 0, 0, 1],
            vec![1, 0, 0, 0, 0, 0],
        ];
        assert_eq!(x.rows(), expected.as_slice());
        assert_eq!(x.rank().unwrap(), 6);
    }

    #[test]
    fn full_matrix_2x2() {
        let x = ModelMatrix::full(sz(2, 2));
        assert_eq!(
            x.rows(),
            &[vec![1, 1, 1], vec![1, 1, 0], vec![1, 0, 1], vec![1, 0, 0]]
        );
    }

    #[test]
    fn full_matrix_2x3_has_full_column_rank() {
        let x = ModelMatrix::full(sz(2, 3));
        assert_eq!((x.nrows(), x.ncols()), (6, 4));
        assert_eq!(rational_rank(x.rows()), 4);
        assert_eq!(x.rank().unwrap(), 4);
    }

    #[test]
    fn restricted_example_matrix() {
        let xf = ModelMatrix::for_fraction(&example_fraction());
        let expected: Vec<Vec<i64>> = vec![
            vec![1, 1, 0, 1, 0, 0],
            vec![1, 1, 0, 0, 1, 0],
            vec![1, 0, 1, 0, 1, 0],
            vec![1, 0, 1, 0, 0, 1],
            vec![1, 0, 0, 0, 0, 1],
            vec![1, 0, 0, 0, 0, 0],
        ];
        assert_eq!(xf.rows(), expected.as_slice());
        assert_eq!(xf.determinant().unwrap(), 1);
    }

    #[test]
    fn restrict_edge_cases() {
        let x = ModelMatrix::full(sz(3, 4));
        let empty = x.restrict(&Fraction::empty(sz(3, 4))).unwrap();
        assert_eq!((empty.nrows(), empty.ncols()), (0, 6));
        assert_eq!(x.restrict(&Fraction::full(sz(3, 4))).unwrap(), x);
        assert!(x.restrict(&Fraction::full(sz(4, 3))).is_err());
    }

    #[test]
    fn determinant_basics() {
        let id: Vec<Vec<i64>> = (0..5)
            .map(|r| (0..5).map(|c| i64::from(r == c)).collect())
            .collect();
        assert_eq!(integer_determinant(&id).unwrap(), 1);
        assert_eq!(integer_determinant::<Vec<i64>>(&[]).unwrap(), 1);
        assert_eq!(
            integer_determinant(&[vec![1, 2], vec![3]]),
            Err(Error::NotSquare { rows: 2, cols: 1 })
        );
        assert_eq!(integer_determinant(&[[2, 3], [1, 4]]).unwrap(), 5);
        assert_eq!(integer_determinant(&[[0, 1], [1, 0]]).unwrap(), -1);
        assert_eq!(
            integer_determinant(&[[2, 0, 1], [1, 3, 2], [1, 1, 1]]).unwrap(),
            // first-row expansion: 2·(3−2) − 0 + 1·(1−3)
            0
        );
    }

    #[test]
    fn determinant_overflow_is_reported() {
        let big = i64::MAX / 2;
        assert_eq!(
            integer_determinant(&[[big, big], [big, 1]]),
            Err(Error::Overflow("determinant"))
        );
    }

    #[test]
    fn two_cycle_gives_zero_determinant() {
        let f = Fraction::new(sz(3, 4), [(1, 1), (1, 2), (2, 1), (2, 2), (3, 3), (3, 4)]).unwrap();
        let xf = ModelMatrix::for_fraction(&f);
        // +r11 − r12 − r21 + r22 vanishes.
        let combo: Vec<i64> = (0..6)
            .map(|c| xf.rows()[0][c] - xf.rows()[1][c] - xf.rows()[2][c] + xf.rows()[3][c])
            .collect();
        assert!(combo.iter().all(|&v| v == 0));
        assert_eq!(xf.determinant().unwrap(), 0);
        assert!(!is_saturated_by_determinant(&f));
    }

    #[test]
    fn saturation_by_determinant_examples() {
        assert!(is_saturated_by_determinant(&example_fraction()));
        let five = Fraction::new(sz(3, 4), [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)]).unwrap();
        assert!(!is_saturated_by_determinant(&five));
        let f1 = Fraction::new(
            sz(4, 4),
            [(1, 1), (1, 3), (2, 1), (2, 2), (3, 2), (3, 3), (4, 3)],
        )
        .unwrap();
        assert!(!is_saturated_by_determinant(&f1));
    }

    proptest! {
        #[test]
        fn permutation_matrices_have_unit_determinant(
            perm in proptest::sample::subsequence((0..7usize).collect::<Vec<_>>(), 7)
                .prop_shuffle()
        ) {
            let n = perm.len();
            let m: Vec<Vec<i64>> = (0..n)
                .map(|r| (0..n).map(|c| i64::from(perm[r] == c)).collect())
                .collect();
            let d = integer_determinant(&m).unwrap();
            prop_assert_eq!(d.abs(), 1);
        }

        #[test]
        fn repeated_row_gives_zero(
            rows in proptest::collection::vec(proptest::collection::vec(-3i64..4, 5), 5),
            src in 0usize..5, dst in 0usize..5,
        ) {
            prop_assume!(src != dst);
            let mut rows = rows;
            rows[dst] = rows[src].clone();
            prop_assert_eq!(integer_determinant(&rows).unwrap(), 0);
        }

        #[test]
        fn bareiss_rank_matches_rational_rank(
            rows in proptest::collection::vec(proptest::collection::vec(-2i64..3, 4), 1..6)
        ) {
            prop_assert_eq!(integer_rank(&rows, 4).unwrap(), rational_rank(&rows));
        }
    }
}
