//! k-cycles of a fraction, their split into two orthogonal arrays, and
//! counting.
//!
//! A k-cycle is a set of `2k` points using `k` levels of each factor, every
//! used level exactly twice. Reading points as edges between A-levels and
//! B-levels, such a set is a 2-regular bipartite graph: a single circuit or a
//! disjoint union of smaller ones.

use std::collections::{BTreeMap, VecDeque};

use itertools::Itertools;

use crate::design::{DesignSize, Fraction, Point};
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KCycle {
    k: usize,
    points: Fraction,
}

impl KCycle {
    pub fn new(points: Fraction) -> Result<Self> {
        let k = check_two_regular(&points)?;
        Ok(Self { k, points })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[Point] {
        self.points.points()
    }

    pub fn as_fraction(&self) -> &Fraction {
        &self.points
    }

    pub fn into_fraction(self) -> Fraction {
        self.points
    }
}

fn check_two_regular(f: &Fraction) -> Result<usize> {
    let m = f.margins();
    let used_a: Vec<usize> = m.a().iter().copied().filter(|&c| c > 0).collect();
    let used_b: Vec<usize> = m.b().iter().copied().filter(|&c| c > 0).collect();
    if let Some(c) = used_a.iter().chain(&used_b).find(|&&c| c != 2) {
        return Err(Error::NotACycle(format!(
            "a used level appears {c} times instead of twice"
        )));
    }
    let k = used_a.len();
    if k < 2 || used_b.len() != k || f.len() != 2 * k {
        return Err(Error::NotACycle(format!(
            "{} points over {} A-levels and {} B-levels",
            f.len(),
            k,
            used_b.len()
        )));
    }
    Ok(k)
}

/// Two disjoint point sets, each with one replicate of every level used by
/// the cycle they form together.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OaPair {
    first: Fraction,
    second: Fraction,
}

impl OaPair {
    pub fn new(first: Fraction, second: Fraction) -> Result<Self> {
        if first.size() != second.size() {
            return Err(Error::NotACycle("parts come from different designs".into()));
        }
        if first.points().iter().any(|&p| second.contains(p)) {
            return Err(Error::NotACycle("parts are not disjoint".into()));
        }
        for part in [&first, &second] {
            let m = part.margins();
            if m.a().iter().chain(m.b()).any(|&c| c > 1) {
                return Err(Error::NotACycle(
                    "a part repeats a level of one factor".into(),
                ));
            }
        }
        let pair = Self { first, second };
        let union = pair.union()?;
        if pair.first.len() != union.k() {
            return Err(Error::NotACycle("parts do not cover all used levels".into()));
        }
        Ok(pair)
    }

    pub fn first(&self) -> &Fraction {
        &self.first
    }

    pub fn second(&self) -> &Fraction {
        &self.second
    }

    pub fn union(&self) -> Result<KCycle> {
        let pts = self.first.points().iter().chain(self.second.points()).copied();
        KCycle::new(Fraction::new(self.first.size(), pts)?)
    }

    pub fn swapped(self) -> Self {
        Self {
            first: self.second,
            second: self.first,
        }
    }
}

/// Bipartite incidence graph of a fraction. Vertices `0..I` are A-levels,
/// `I..I+J` are B-levels; adjacency lists are sorted.
struct Incidence {
    rows: usize,
    adj: Vec<Vec<usize>>,
}

impl Incidence {
    fn new(f: &Fraction) -> Self {
        let (i, j) = (f.size().rows(), f.size().cols());
        let mut adj = vec![Vec::new(); i + j];
        for p in f.points() {
            adj[p.i - 1].push(i + p.j - 1);
            adj[i + p.j - 1].push(p.i - 1);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { rows: i, adj }
    }

    fn cell(&self, u: usize, v: usize) -> Point {
        let (a, b) = if u < self.rows { (u, v) } else { (v, u) };
        Point::new(a + 1, b - self.rows + 1)
    }

    /// Shortest path from `src` to `dst` that does not use the edge
    /// `src–dst` itself, exploring neighbours in increasing order.
    fn detour(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.adj.len()];
        prev[src] = src;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if u == src && v == dst {
                    continue;
                }
                if prev[v] != usize::MAX {
                    continue;
                }
                prev[v] = u;
                if v == dst {
                    let mut path = vec![dst];
                    let mut w = dst;
                    while w != src {
                        w = prev[w];
                        path.push(w);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
        None
    }
}

/// Finds a k-cycle contained in `f`, or `None` if the fraction is cycle-free.
///
/// The returned cycle passes through the lexicographically smallest point
/// that lies on any cycle, and closes it by a shortest detour.
pub fn find_cycle(f: &Fraction) -> Option<KCycle> {
    let g = Incidence::new(f);
    for p in f.points() {
        let (a, b) = (p.i - 1, g.rows + p.j - 1);
        if let Some(path) = g.detour(a, b) {
            let pts = path
                .windows(2)
                .map(|w| g.cell(w[0], w[1]))
                .chain(std::iter::once(*p));
            let frac = Fraction::new(f.size(), pts).expect("cycle points come from f");
            return Some(KCycle::new(frac).expect("a simple circuit is a k-cycle"));
        }
    }
    None
}

/// True iff some subset of `f` is a k-cycle, i.e. the incidence graph is not
/// a forest. Decided by union-find edge insertion.
pub fn contains_cycle(f: &Fraction) -> bool {
    let i = f.size().rows();
    let mut uf = UnionFind::new(i + f.size().cols());
    f.points()
        .iter()
        .any(|p| !uf.union(p.i - 1, i + p.j - 1))
}

/// Splits a k-cycle into two orthogonal arrays by walking it and assigning
/// points alternately, switching between row-mate and column-mate at every
/// step. Each sub-cycle is walked from its smallest unassigned point.
pub fn decompose_cycle(c: &KCycle) -> OaPair {
    let pts = c.points();
    let mut row_mates: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
    let mut col_mates: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
    for &p in pts {
        row_mates.entry(p.i).or_default().push(p);
        col_mates.entry(p.j).or_default().push(p);
    }
    let other = |list: &Vec<Point>, p: Point| -> Point {
        *list.iter().find(|&&q| q != p).expect("every level used twice")
    };

    let mut assigned: BTreeMap<Point, bool> = BTreeMap::new();
    let mut first = Vec::with_capacity(c.k());
    let mut second = Vec::with_capacity(c.k());
    while let Some(&start) = pts.iter().find(|p| !assigned.contains_key(p)) {
        let mut cur = start;
        let mut to_first = true;
        let mut along_row = true;
        while !assigned.contains_key(&cur) {
            assigned.insert(cur, to_first);
            if to_first {
                first.push(cur);
            } else {
                second.push(cur);
            }
            cur = if along_row {
                other(&row_mates[&cur.i], cur)
            } else {
                other(&col_mates[&cur.j], cur)
            };
            to_first = !to_first;
            along_row = !along_row;
        }
    }
    let size = c.as_fraction().size();
    OaPair {
        first: Fraction::new(size, first).expect("subset of a valid fraction"),
        second: Fraction::new(size, second).expect("subset of a valid fraction"),
    }
}

/// Strength-`t` orthogonal-array test over the levels `f` actually uses.
///
/// Strength 1: every used level of each factor appears equally often.
/// Strength 2: every pair of used levels appears equally often, which for a
/// set of distinct points means `f` is the full product of its used levels.
pub fn is_orthogonal_array(f: &Fraction, t: usize) -> Result<bool> {
    let m = f.margins();
    let used_a: Vec<usize> = m.a().iter().copied().filter(|&c| c > 0).collect();
    let used_b: Vec<usize> = m.b().iter().copied().filter(|&c| c > 0).collect();
    let balanced = |v: &[usize]| v.iter().all_equal();
    match t {
        1 => Ok(balanced(&used_a) && balanced(&used_b)),
        2 => Ok(f.len() == used_a.len() * used_b.len()),
        _ => Err(Error::UnsupportedStrength(t)),
    }
}

/// Number of derangements `!k`, by `!k = (k−1)(!(k−1) + !(k−2))`.
pub fn derangements(k: usize) -> Result<u128> {
    let (mut prev, mut cur) = (1u128, 0u128);
    if k == 0 {
        return Ok(prev);
    }
    for n in 2..=k {
        let next = (prev.checked_add(cur))
            .and_then(|s| s.checked_mul((n - 1) as u128))
            .ok_or(Error::Overflow("derangements"))?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn factorial(k: usize) -> Result<u128> {
    (1..=k as u128).try_fold(1u128, |acc, n| acc.checked_mul(n).ok_or(Error::Overflow("factorial")))
}

/// Number of k-cycles on a fixed set of `k` rows and `k` columns, each
/// counted once per unordered split into two orthogonal arrays:
/// `k! · !k / 2`.
pub fn count_k_cycles(k: usize) -> Result<u128> {
    if k < 2 {
        return Err(Error::InvalidDegree(k));
    }
    let prod = factorial(k)?
        .checked_mul(derangements(k)?)
        .ok_or(Error::Overflow("k-cycle count"))?;
    Ok(prod / 2)
}

/// Every k-cycle of the grid together with an orthogonal-array split.
///
/// A split is fixed by two permutations of the chosen columns that disagree
/// on every chosen row; unordered pairs are produced once, with the
/// lexicographically smaller permutation as the first part. A k-cycle that is
/// a single circuit has exactly one split; one made of `c` disjoint circuits
/// has `2^(c−1)`, so it appears that many times. For `k ≤ 3` every k-cycle is
/// a single circuit.
pub fn enumerate_k_cycles(size: DesignSize, k: usize) -> Result<impl Iterator<Item = OaPair>> {
    let max = size.rows().min(size.cols());
    if k < 2 || k > max {
        return Err(Error::DegreeOutOfRange { k, max });
    }
    let row_sets = (1..=size.rows()).combinations(k);
    let iter = row_sets.flat_map(move |rows| {
        (1..=size.cols()).combinations(k).flat_map(move |cols| {
            let rows = rows.clone();
            let perms: Vec<Vec<usize>> = cols.iter().copied().permutations(k).collect();
            let mut out = Vec::new();
            for (a, p1) in perms.iter().enumerate() {
                for p2 in &perms[a + 1..] {
                    if p1.iter().zip(p2).any(|(x, y)| x == y) {
                        continue;
                    }
                    let part = |p: &[usize]| {
                        Fraction::new(size, rows.iter().zip(p).map(|(&i, &j)| (i, j)))
                            .expect("levels in range")
                    };
                    out.push(OaPair {
                        first: part(p1),
                        second: part(p2),
                    });
                }
            }
            out
        })
    });
    Ok(iter)
}
