//! Circuit Markov basis of `K_{I,J}` and fixed-margin chains on binary
//! tables.
//!
//! A circuit of degree `k` visits A-levels `i1..ik` and B-levels `j1..jk` as
//! `(i1,j1),(j1,i2),(i2,j2),…,(ik,jk),(jk,i1)`. Its move puts `+1` on the
//! cells at even positions of that sequence (counting from 0) and `−1` on the
//! cells at odd positions, so every row and column sum of a move is zero.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use itertools::Itertools;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design::{BinaryTable, DesignSize, Margins, Point};
use crate::error::{Error, Result};
use crate::saturation::binomial;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Circuit {
    a: Vec<usize>,
    b: Vec<usize>,
}

impl Circuit {
    /// A circuit through A-levels `a[0], b[0], a[1], b[1], …` in that order.
    pub fn new(a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if a.len() < 2 || a.len() != b.len() {
            return Err(Error::InvalidCircuit(format!(
                "needs k ≥ 2 levels of each factor, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if !a.iter().all_unique() || !b.iter().all_unique() {
            return Err(Error::InvalidCircuit("levels must be distinct".into()));
        }
        if a.iter().chain(&b).any(|&v| v == 0) {
            return Err(Error::InvalidCircuit("levels are 1-based".into()));
        }
        Ok(Self { a, b })
    }

    /// Parses the alternating edge notation
    /// `(i1,j1),(j1,i2),(i2,j2),…,(jk,i1)`.
    pub fn from_edge_sequence(edges: &[(usize, usize)]) -> Result<Self> {
        if edges.len() < 4 || !edges.len().is_multiple_of(2) {
            return Err(Error::InvalidCircuit(format!(
                "an edge sequence has an even length of at least 4, got {}",
                edges.len()
            )));
        }
        let k = edges.len() / 2;
        let a: Vec<usize> = (0..k).map(|t| edges[2 * t].0).collect();
        let b: Vec<usize> = (0..k).map(|t| edges[2 * t].1).collect();
        for t in 0..k {
            let expected = (b[t], a[(t + 1) % k]);
            if edges[2 * t + 1] != expected {
                return Err(Error::InvalidCircuit(format!(
                    "edge {} is {:?}, expected {:?} to close the path",
                    2 * t + 2,
                    edges[2 * t + 1],
                    expected
                )));
            }
        }
        Self::new(a, b)
    }

    pub fn degree(&self) -> usize {
        self.a.len()
    }

    pub fn a_levels(&self) -> &[usize] {
        &self.a
    }

    pub fn b_levels(&self) -> &[usize] {
        &self.b
    }

    /// Cells of the circuit in sequence order, each with its sign.
    pub fn signed_cells(&self) -> Vec<(Point, i8)> {
        let k = self.degree();
        (0..k)
            .flat_map(|t| {
                [
                    (Point::new(self.a[t], self.b[t]), 1),
                    (Point::new(self.a[(t + 1) % k], self.b[t]), -1),
                ]
            })
            .collect()
    }

    /// The same circuit traversed the other way round from `a[0]`.
    pub fn reversed(&self) -> Self {
        let mut a = vec![self.a[0]];
        a.extend(self.a[1..].iter().rev());
        let b = self.b.iter().rev().copied().collect();
        Self { a, b }
    }

    /// Starts at the smallest A-level and, of the two directions, takes the
    /// one whose first B-level is smaller.
    pub fn canonical(&self) -> Self {
        let k = self.degree();
        let start = self.a.iter().position_min().expect("k ≥ 2");
        let a = (0..k).map(|t| self.a[(start + t) % k]).collect();
        let b = (0..k).map(|t| self.b[(start + t) % k]).collect();
        let rotated = Self { a, b };
        if rotated.b[0] < rotated.b[k - 1] {
            rotated
        } else {
            rotated.reversed()
        }
    }

    pub fn to_move(&self, size: DesignSize) -> Result<MarkovMove> {
        circuit_to_move(self, size)
    }
}

/// Integer table with zero row and column sums whose support is a k-cycle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkovMove {
    size: DesignSize,
    cells: Vec<i8>,
}

impl MarkovMove {
    /// Builds a move from nested rows and checks that every used row and
    /// column holds exactly one `+1` and one `−1`.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        let i = rows.len();
        let j = rows.first().map_or(0, |r| r.as_ref().len());
        let size = DesignSize::new(i, j)?;
        let mut cells = Vec::with_capacity(i * j);
        for row in rows {
            let row = row.as_ref();
            if row.len() != j {
                return Err(Error::ShapeMismatch {
                    expected: (i, j),
                    found: (i, row.len()),
                });
            }
            for &v in row {
                if !(-1..=1).contains(&v) {
                    return Err(Error::InvalidCircuit(format!("move entry {v}")));
                }
                cells.push(v as i8);
            }
        }
        let m = Self { size, cells };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let (i, j) = (self.size.rows(), self.size.cols());
        let line_ok = |vals: Vec<i8>| {
            let pos = vals.iter().filter(|&&v| v == 1).count();
            let neg = vals.iter().filter(|&&v| v == -1).count();
            (pos, neg) == (0, 0) || (pos, neg) == (1, 1)
        };
        let rows_ok = (0..i).all(|r| line_ok(self.cells[r * j..(r + 1) * j].to_vec()));
        let cols_ok = (0..j).all(|c| line_ok((0..i).map(|r| self.cells[r * j + c]).collect()));
        if !(rows_ok && cols_ok) || self.cells.iter().all(|&v| v == 0) {
            return Err(Error::InvalidCircuit(
                "each used row and column needs exactly one +1 and one -1".into(),
            ));
        }
        Ok(())
    }

    pub fn size(&self) -> DesignSize {
        self.size
    }

    pub fn get(&self, p: Point) -> i8 {
        self.cells[(p.i - 1) * self.size.cols() + (p.j - 1)]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        self.cells
            .chunks(self.size.cols())
            .map(<[i8]>::to_vec)
            .collect()
    }

    /// Number of rows the move touches.
    pub fn degree(&self) -> usize {
        self.cells
            .chunks(self.size.cols())
            .filter(|r| r.iter().any(|&v| v != 0))
            .count()
    }

    pub fn negated(&self) -> Self {
        Self {
            size: self.size,
            cells: self.cells.iter().map(|&v| -v).collect(),
        }
    }

    /// Cells carrying `+1` and `−1`, in lexicographic order.
    pub fn support(&self) -> (Vec<Point>, Vec<Point>) {
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for p in self.size.points() {
            match self.get(p) {
                1 => plus.push(p),
                -1 => minus.push(p),
                _ => {}
            }
        }
        (plus, minus)
    }

    /// `table + sign · self` if every entry stays in {0, 1}.
    pub fn apply(&self, t: &BinaryTable, sign: i8) -> Result<Option<BinaryTable>> {
        apply_move(t, self, sign)
    }
}

impl fmt::Display for MarkovMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.size.cols()) {
            let line: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

pub fn circuit_to_move(c: &Circuit, size: DesignSize) -> Result<MarkovMove> {
    let mut cells = vec![0i8; size.cells()];
    for (p, s) in c.signed_cells() {
        size.check(p)
            .map_err(|_| Error::InvalidCircuit(format!("cell {p} outside the {size} design")))?;
        cells[(p.i - 1) * size.cols() + (p.j - 1)] = s;
    }
    Ok(MarkovMove { size, cells })
}

/// Number of circuits of degree `k` in `K_{I,J}`:
/// `C(I,k) · C(J,k) · k! · (k−1)! / 2`.
pub fn count_circuits(size: DesignSize, k: usize) -> BigUint {
    if k < 2 || k > size.rows().min(size.cols()) {
        return BigUint::from(0u32);
    }
    let fact = |n: usize| (1..=n).fold(BigUint::from(1u32), |acc, v| acc * v);
    binomial(size.rows(), k) * binomial(size.cols(), k) * fact(k) * fact(k - 1) / 2u32
}

/// Canonical circuits of degree `k`, one per circuit of `K_{I,J}`.
pub fn circuits(size: DesignSize, k: usize) -> impl Iterator<Item = Circuit> {
    let kk = k.max(2);
    (1..=size.rows())
        .combinations(kk)
        .filter(move |_| k >= 2 && k <= size.rows().min(size.cols()))
        .flat_map(move |rows| {
            (1..=size.cols()).combinations(kk).flat_map(move |cols| {
                let first = rows[0];
                let rest = rows[1..].to_vec();
                let col_perms: Vec<Vec<usize>> = cols.iter().copied().permutations(kk).collect();
                rest.into_iter()
                    .permutations(kk - 1)
                    .flat_map(move |tail| {
                        let mut a = vec![first];
                        a.extend(tail);
                        col_perms
                            .iter()
                            .filter(|b| b[0] < b[kk - 1])
                            .map(|b| Circuit {
                                a: a.clone(),
                                b: b.clone(),
                            })
                            .collect::<Vec<_>>()
                    })
            })
        })
}

/// Circuit basis of all degrees up to `max_degree` (default `min(I, J)`),
/// degree by degree. Fails if it would hold more than `cap` moves.
pub fn markov_basis_with(
    size: DesignSize,
    max_degree: Option<usize>,
    cap: u64,
) -> Result<Vec<MarkovMove>> {
    let top = max_degree
        .unwrap_or(usize::MAX)
        .min(size.rows().min(size.cols()));
    let total: BigUint = (2..=top).map(|k| count_circuits(size, k)).sum();
    if total > BigUint::from(cap) {
        return Err(Error::CapExceeded {
            what: "Markov basis",
            needed: total.to_string(),
            cap,
        });
    }
    let mut out = Vec::new();
    for k in 2..=top {
        for c in circuits(size, k) {
            out.push(circuit_to_move(&c, size)?);
        }
    }
    Ok(out)
}

pub fn markov_basis(size: DesignSize) -> Result<Vec<MarkovMove>> {
    markov_basis_with(size, None, crate::DEFAULT_CAP)
}

pub fn apply_move(t: &BinaryTable, m: &MarkovMove, sign: i8) -> Result<Option<BinaryTable>> {
    if t.size() != m.size() {
        return Err(Error::ShapeMismatch {
            expected: (t.size().rows(), t.size().cols()),
            found: (m.size().rows(), m.size().cols()),
        });
    }
    let sign = if sign < 0 { -1 } else { 1 };
    let mut cells = Vec::with_capacity(t.cells().len());
    for (&v, &d) in t.cells().iter().zip(&m.cells) {
        let w = v as i8 + sign * d;
        if !(0..=1).contains(&w) {
            return Ok(None);
        }
        cells.push(w as u8);
    }
    Ok(Some(BinaryTable::from_cells_unchecked(t.size(), cells)))
}

/// Fixed-margin chain over binary tables. Each step draws a move uniformly
/// from the basis and a sign uniformly from {+1, −1}; if the result is not a
/// binary table the chain stays put and the step still counts.
pub struct MarkovChain<'a> {
    basis: &'a [MarkovMove],
    state: BinaryTable,
    rng: ChaCha8Rng,
}

impl<'a> MarkovChain<'a> {
    pub fn new(start: BinaryTable, basis: &'a [MarkovMove], seed: u64) -> Result<Self> {
        let first = basis.first().ok_or(Error::EmptyBasis)?;
        if first.size() != start.size() {
            return Err(Error::ShapeMismatch {
                expected: (start.size().rows(), start.size().cols()),
                found: (first.size().rows(), first.size().cols()),
            });
        }
        Ok(Self {
            basis,
            state: start,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn state(&self) -> &BinaryTable {
        &self.state
    }

    pub fn into_state(self) -> BinaryTable {
        self.state
    }

    fn propose(&mut self) -> Option<BinaryTable> {
        let m = &self.basis[self.rng.gen_range(0..self.basis.len())];
        let sign = if self.rng.gen::<bool>() { 1 } else { -1 };
        apply_move(&self.state, m, sign).expect("basis shape checked on construction")
    }

    /// One uniform-target step. Returns whether the state changed.
    pub fn step(&mut self) -> bool {
        match self.propose() {
            Some(next) => {
                self.state = next;
                true
            }
            None => false,
        }
    }

    /// One Metropolis–Hastings step towards a distribution proportional to
    /// `target`. The acceptance draw is only made when the weight ratio is
    /// below 1, so a constant target consumes randomness exactly like
    /// [`MarkovChain::step`].
    pub fn metropolis_step<F>(&mut self, target: &F) -> Result<bool>
    where
        F: Fn(&BinaryTable) -> f64,
    {
        let Some(next) = self.propose() else {
            return Ok(false);
        };
        let w_cur = positive_weight(target(&self.state))?;
        let w_next = positive_weight(target(&next))?;
        let ratio = w_next / w_cur;
        if ratio >= 1.0 || self.rng.gen::<f64>() < ratio {
            self.state = next;
            return Ok(true);
        }
        Ok(false)
    }
}

fn positive_weight(w: f64) -> Result<f64> {
    if w.is_finite() && w > 0.0 {
        Ok(w)
    } else {
        Err(Error::NonPositiveWeight(w))
    }
}

/// Runs the uniform chain for `steps` steps and returns the final table.
pub fn random_walk(
    start: &BinaryTable,
    basis: &[MarkovMove],
    steps: u64,
    seed: u64,
) -> Result<BinaryTable> {
    let mut chain = MarkovChain::new(start.clone(), basis, seed)?;
    for _ in 0..steps {
        chain.step();
    }
    Ok(chain.into_state())
}

/// Runs the Metropolis–Hastings chain for `steps` steps.
pub fn metropolis_walk<F>(
    start: &BinaryTable,
    basis: &[MarkovMove],
    target: F,
    steps: u64,
    seed: u64,
) -> Result<BinaryTable>
where
    F: Fn(&BinaryTable) -> f64,
{
    let mut chain = MarkovChain::new(start.clone(), basis, seed)?;
    positive_weight(target(chain.state()))?;
    for _ in 0..steps {
        chain.metropolis_step(&target)?;
    }
    Ok(chain.into_state())
}

/// All 0/1 tables with margins `m`, by row-wise backtracking. The search
/// refuses to start when the product of per-row placements `∏ C(J, m_A,i)`
/// exceeds `cap`.
pub fn fiber_enumerate(m: &Margins, cap: u64) -> Result<Vec<BinaryTable>> {
    let size = m.size();
    let (i, j) = (size.rows(), size.cols());
    let bound: BigUint = m.a().iter().map(|&r| binomial(j, r)).product();
    if bound > BigUint::from(cap) {
        return Err(Error::CapExceeded {
            what: "fiber enumeration",
            needed: bound.to_string(),
            cap,
        });
    }

    fn go(
        row: usize,
        m: &Margins,
        cols_left: &mut Vec<usize>,
        cells: &mut Vec<u8>,
        size: DesignSize,
        out: &mut Vec<BinaryTable>,
    ) {
        let (i, j) = (size.rows(), size.cols());
        if row == i {
            if cols_left.iter().all(|&c| c == 0) {
                out.push(BinaryTable::from_cells_unchecked(size, cells.clone()));
            }
            return;
        }
        let open: Vec<usize> = (0..j).filter(|&c| cols_left[c] > 0).collect();
        for chosen in open.into_iter().combinations(m.a()[row]) {
            for &c in &chosen {
                cols_left[c] -= 1;
                cells[row * j + c] = 1;
            }
            let rows_after = i - row - 1;
            if cols_left.iter().all(|&c| c <= rows_after) {
                go(row + 1, m, cols_left, cells, size, out);
            }
            for &c in &chosen {
                cols_left[c] += 1;
                cells[row * j + c] = 0;
            }
        }
    }

    let mut out = Vec::new();
    go(
        0,
        m,
        &mut m.b().to_vec(),
        &mut vec![0; i * j],
        size,
        &mut out,
    );
    Ok(out)
}

/// Whether the basis connects every pair of tables in the fiber of `m`.
pub fn verify_connectivity(m: &Margins, basis: &[MarkovMove], cap: u64) -> Result<bool> {
    let fiber = fiber_enumerate(m, cap)?;
    if let Some(mv) = basis.first() {
        if mv.size() != m.size() {
            return Err(Error::ShapeMismatch {
                expected: (m.size().rows(), m.size().cols()),
                found: (mv.size().rows(), mv.size().cols()),
            });
        }
    }
    Ok(fiber_components(&fiber, basis) <= 1)
}

/// Number of connected components of the move graph on `fiber`.
pub fn fiber_components(fiber: &[BinaryTable], basis: &[MarkovMove]) -> usize {
    let index: HashMap<&BinaryTable, usize> =
        fiber.iter().enumerate().map(|(n, t)| (t, n)).collect();
    let mut seen = vec![false; fiber.len()];
    let mut components = 0;
    for root in 0..fiber.len() {
        if seen[root] {
            continue;
        }
        components += 1;
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for mv in basis {
                for sign in [1, -1] {
                    let Ok(Some(next)) = apply_move(&fiber[u], mv, sign) else {
                        continue;
                    };
                    if let Some(&v) = index.get(&next) {
                        if !seen[v] {
                            seen[v] = true;
                            queue.push_back(v);
                        }
                    }
                }
            }
        }
    }
    components
}
