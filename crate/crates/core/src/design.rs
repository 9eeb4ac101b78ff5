//! Value types: design sizes, points, fractions, binary tables and margins.

use std::fmt;

use crate::error::{Error, Result};

/// Number of levels of the two factors, `I` for A and `J` for B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DesignSize {
    i: usize,
    j: usize,
}

impl DesignSize {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i < 2 || j < 2 {
            return Err(Error::InvalidSize { i, j });
        }
        Ok(Self { i, j })
    }

    /// Levels of factor A.
    pub fn rows(&self) -> usize {
        self.i
    }

    /// Levels of factor B.
    pub fn cols(&self) -> usize {
        self.j
    }

    /// Number of estimable parameters, `I + J − 1`.
    pub fn parameters(&self) -> usize {
        self.i + self.j - 1
    }

    pub fn cells(&self) -> usize {
        self.i * self.j
    }

    pub fn transpose(&self) -> Self {
        Self {
            i: self.j,
            j: self.i,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        (1..=self.i).contains(&p.i) && (1..=self.j).contains(&p.j)
    }

    /// All design points in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (1..=self.i).flat_map(move |i| (1..=self.j).map(move |j| Point { i, j }))
    }

    pub(crate) fn check(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointOutOfRange {
                point: p,
                i: self.i,
                j: self.j,
            })
        }
    }
}

impl fmt::Display for DesignSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.i, self.j)
    }
}

/// A design point `(i, j)`, both levels 1-based. Orders lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub i: usize,
    pub j: usize,
}

impl Point {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

impl From<(usize, usize)> for Point {
    fn from((i, j): (usize, usize)) -> Self {
        Self { i, j }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// A set of distinct design points of an `I × J` grid.
///
/// Points are kept sorted, so two fractions with the same points compare
/// equal regardless of how they were built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fraction {
    size: DesignSize,
    points: Vec<Point>,
}

impl Fraction {
    pub fn new<P, It>(size: DesignSize, points: It) -> Result<Self>
    where
        P: Into<Point>,
        It: IntoIterator<Item = P>,
    {
        let mut points: Vec<Point> = points.into_iter().map(Into::into).collect();
        for &p in &points {
            size.check(p)?;
        }
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePoint(w[0]));
        }
        Ok(Self { size, points })
    }

    pub fn empty(size: DesignSize) -> Self {
        Self {
            size,
            points: Vec::new(),
        }
    }

    pub fn full(size: DesignSize) -> Self {
        Self {
            size,
            points: size.points().collect(),
        }
    }

    /// Builds a fraction from points already known to be valid and sorted.
    pub(crate) fn from_sorted_unchecked(size: DesignSize, points: Vec<Point>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(points.iter().all(|&p| size.contains(p)));
        Self { size, points }
    }

    pub fn size(&self) -> DesignSize {
        self.size
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.binary_search(&p).is_ok()
    }

    pub fn margins(&self) -> Margins {
        let mut a = vec![0; self.size.rows()];
        let mut b = vec![0; self.size.cols()];
        for p in &self.points {
            a[p.i - 1] += 1;
            b[p.j - 1] += 1;
        }
        Margins { a, b }
    }

    pub fn to_table(&self) -> BinaryTable {
        let mut t = BinaryTable::zeros(self.size);
        for &p in &self.points {
            t.set(p, 1);
        }
        t
    }

    pub fn from_table(t: &BinaryTable) -> Self {
        t.to_fraction()
    }

    /// The same fraction with the roles of the two factors exchanged.
    pub fn transpose(&self) -> Self {
        let pts = self.points.iter().map(|p| Point::new(p.j, p.i));
        Fraction::new(self.size.transpose(), pts).expect("transpose keeps points valid")
    }

    /// A copy with `p` removed; unchanged if `p` is absent.
    pub fn without(&self, p: Point) -> Self {
        let points = self.points.iter().copied().filter(|&q| q != p).collect();
        Self {
            size: self.size,
            points,
        }
    }

    /// A copy with `p` added.
    pub fn with(&self, p: Point) -> Result<Self> {
        Fraction::new(self.size, self.points.iter().copied().chain([p]))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, p) in self.points.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

/// The 0/1 incidence table `N(F)` of a fraction, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryTable {
    size: DesignSize,
    cells: Vec<u8>,
}

impl BinaryTable {
    pub fn zeros(size: DesignSize) -> Self {
        Self {
            size,
            cells: vec![0; size.cells()],
        }
    }

    /// Builds a table from nested rows, rejecting ragged input and entries
    /// other than 0 and 1.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let i = rows.len();
        let j = rows.first().map_or(0, |r| r.as_ref().len());
        let size = DesignSize::new(i, j)?;
        let mut cells = Vec::with_capacity(i * j);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != j {
                return Err(Error::ShapeMismatch {
                    expected: (i, j),
                    found: (i, row.len()),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0 && v != 1 {
                    return Err(Error::NonBinaryEntry {
                        row: r + 1,
                        col: c + 1,
                        value: v,
                    });
                }
                cells.push(v as u8);
            }
        }
        Ok(Self { size, cells })
    }

    pub(crate) fn from_cells_unchecked(size: DesignSize, cells: Vec<u8>) -> Self {
        debug_assert_eq!(cells.len(), size.cells());
        Self { size, cells }
    }

    pub fn size(&self) -> DesignSize {
        self.size
    }

    pub fn get(&self, p: Point) -> u8 {
        self.cells[self.offset(p)]
    }

    fn set(&mut self, p: Point, v: u8) {
        let o = self.offset(p);
        self.cells[o] = v;
    }

    fn offset(&self, p: Point) -> usize {
        (p.i - 1) * self.size.cols() + (p.j - 1)
    }

    pub(crate) fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.cells
            .chunks(self.size.cols())
            .map(<[u8]>::to_vec)
            .collect()
    }

    pub fn ones(&self) -> usize {
        self.cells.iter().filter(|&&v| v == 1).count()
    }

    pub fn to_fraction(&self) -> Fraction {
        let points = self
            .size
            .points()
            .filter(|&p| self.get(p) == 1)
            .collect();
        Fraction::from_sorted_unchecked(self.size, points)
    }

    pub fn margins(&self) -> Margins {
        let (i, j) = (self.size.rows(), self.size.cols());
        let mut a = vec![0; i];
        let mut b = vec![0; j];
        for (n, &v) in self.cells.iter().enumerate() {
            a[n / j] += v as usize;
            b[n % j] += v as usize;
        }
        Margins { a, b }
    }
}

impl fmt::Display for BinaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.size.cols()) {
            for &v in row {
                write!(f, "{v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Row and column sums `(m_A, m_B)` of a fraction's incidence table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Margins {
    a: Vec<usize>,
    b: Vec<usize>,
}

impl Margins {
    /// Checks that both vectors have at least two entries and equal sums.
    pub fn new(a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        DesignSize::new(a.len(), b.len())?;
        let (sa, sb) = (a.iter().sum::<usize>(), b.iter().sum::<usize>());
        if sa != sb {
            return Err(Error::InvalidMargins(format!(
                "row margins sum to {sa} but column margins sum to {sb}"
            )));
        }
        Ok(Self { a, b })
    }

    /// Margins of factor A (row sums).
    pub fn a(&self) -> &[usize] {
        &self.a
    }

    /// Margins of factor B (column sums).
    pub fn b(&self) -> &[usize] {
        &self.b
    }

    pub fn size(&self) -> DesignSize {
        DesignSize {
            i: self.a.len(),
            j: self.b.len(),
        }
    }

    pub fn total(&self) -> usize {
        self.a.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

impl fmt::Display for Margins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "({}) x ({})", join(&self.a), join(&self.b))
    }
}
