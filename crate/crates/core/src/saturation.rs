//! Saturated fractions: certification, counting, enumeration, generation
//! with prescribed margins, and uniform sampling.
//!
//! A fraction of size `I + J − 1` is saturated iff it contains no k-cycle,
//! i.e. iff its points are the edges of a spanning tree of `K_{I,J}`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cycles::contains_cycle;
use crate::design::{DesignSize, Fraction, Margins, Point};
use crate::error::{Error, Result};

pub fn is_saturated(f: &Fraction) -> bool {
    f.len() == f.size().parameters() && !contains_cycle(f)
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub(crate) fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, t| acc * (n - t) / (t + 1))
}

fn multinomial(n: usize, parts: impl IntoIterator<Item = usize>) -> BigUint {
    parts
        .into_iter()
        .fold(factorial(n), |acc, k| acc / factorial(k))
}

fn check_saturated_margins(m: &Margins) -> Result<()> {
    let size = m.size();
    let p = size.parameters();
    if m.total() != p {
        return Err(Error::InvalidMargins(format!(
            "margins sum to {} but a saturated {size} fraction has {p} points",
            m.total()
        )));
    }
    if m.a().iter().chain(m.b()).any(|&v| v == 0) {
        return Err(Error::InvalidMargins(
            "every level of a saturated fraction appears at least once".into(),
        ));
    }
    Ok(())
}

/// Number of saturated fractions with margins `m`:
/// `multinomial(I−1; m_B − 1) · multinomial(J−1; m_A − 1)`.
pub fn count_with_margins(m: &Margins) -> Result<BigUint> {
    check_saturated_margins(m)?;
    let size = m.size();
    let by_cols = multinomial(size.rows() - 1, m.b().iter().map(|&v| v - 1));
    let by_rows = multinomial(size.cols() - 1, m.a().iter().map(|&v| v - 1));
    Ok(by_cols * by_rows)
}

/// `I^(J−1) · J^(I−1)`, the number of spanning trees of `K_{I,J}`.
pub fn count_saturated(size: DesignSize) -> BigUint {
    let (i, j) = (size.rows(), size.cols());
    BigUint::from(i).pow((j - 1) as u32) * BigUint::from(j).pow((i - 1) as u32)
}

/// All vectors of `parts` positive integers summing to `total`, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn go(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            if left >= 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for v in 1..=left.saturating_sub(parts - 1) {
            cur.push(v);
            go(left - v, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        go(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Every margin pair a saturated fraction of `size` can have.
pub fn saturated_margins(size: DesignSize) -> Vec<Margins> {
    let p = size.parameters();
    let rows = compositions(p, size.rows());
    let cols = compositions(p, size.cols());
    rows.iter()
        .flat_map(|a| {
            cols.iter()
                .map(move |b| Margins::new(a.clone(), b.clone()).expect("equal sums"))
        })
        .collect()
}

/// Saturated-fraction counts, in total and broken down by margins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturatedCount {
    pub total: BigUint,
    pub by_margins: BTreeMap<Margins, BigUint>,
}

pub fn count_by_margins(size: DesignSize) -> SaturatedCount {
    let by_margins: BTreeMap<Margins, BigUint> = saturated_margins(size)
        .into_iter()
        .map(|m| {
            let c = count_with_margins(&m).expect("margins enumerated as valid");
            (m, c)
        })
        .collect();
    let total = by_margins.values().sum();
    SaturatedCount { total, by_margins }
}

/// Probability that `I + J − 1` distinct points drawn at random form a
/// saturated fraction, kept as an unreduced ratio of exact counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationProbability {
    pub saturated: BigUint,
    pub subsets: BigUint,
}

impl SaturationProbability {
    pub fn ratio(&self) -> BigRational {
        BigRational::new(self.saturated.clone().into(), self.subsets.clone().into())
    }

    /// Decimal rendering with `places` digits, rounded half up.
    pub fn to_decimal(&self, places: usize) -> String {
        let scale = BigUint::from(10u32).pow(places as u32);
        let scaled = &self.saturated * &scale * 2u32 + &self.subsets;
        let rounded = scaled / (&self.subsets * 2u32);
        let (int, frac) = rounded.div_rem(&scale);
        if places == 0 {
            return int.to_string();
        }
        format!("{int}.{:0>places$}", frac.to_string())
    }

    pub fn to_f64(&self) -> f64 {
        self.ratio().to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for SaturationProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.saturated, self.subsets)
    }
}

pub fn saturation_probability(size: DesignSize) -> SaturationProbability {
    SaturationProbability {
        saturated: count_saturated(size),
        subsets: binomial(size.cells(), size.parameters()),
    }
}

#[derive(Clone)]
struct PeelState {
    deg_a: Vec<usize>,
    deg_b: Vec<usize>,
    alive_a: usize,
    alive_b: usize,
    chosen: Vec<Point>,
}

/// Saturated fractions with prescribed margins, produced by peeling leaves.
///
/// A level whose remaining margin is 1 carries exactly one point. At each
/// step the last such A-level (or, when there is none, the last such B-level)
/// is removed together with its point, and the point's other coordinate is
/// chosen among the levels of the opposite factor whose remaining margin is
/// still above 1. The choice made at each step is forced by the fraction, so
/// every fraction is produced exactly once.
pub struct WithMargins {
    size: DesignSize,
    stack: Vec<PeelState>,
}

impl Iterator for WithMargins {
    type Item = Fraction;

    fn next(&mut self) -> Option<Fraction> {
        while let Some(mut st) = self.stack.pop() {
            if st.alive_a + st.alive_b == 2 {
                let a = st.deg_a.iter().position(|&d| d == 1)?;
                let b = st.deg_b.iter().position(|&d| d == 1)?;
                st.chosen.push(Point::new(a + 1, b + 1));
                st.chosen.sort_unstable();
                return Some(Fraction::from_sorted_unchecked(self.size, st.chosen));
            }
            let a_leaf = if st.alive_a >= 2 {
                st.deg_a.iter().rposition(|&d| d == 1)
            } else {
                None
            };
            let (leaf_side_a, leaf) = match a_leaf {
                Some(v) => (true, v),
                None => (false, st.deg_b.iter().rposition(|&d| d == 1)?),
            };
            let other = if leaf_side_a { &st.deg_b } else { &st.deg_a };
            let candidates: Vec<usize> = (0..other.len()).filter(|&u| other[u] >= 2).collect();
            for &u in candidates.iter().rev() {
                let mut child = st.clone();
                if leaf_side_a {
                    child.deg_a[leaf] = 0;
                    child.deg_b[u] -= 1;
                    child.alive_a -= 1;
                    child.chosen.push(Point::new(leaf + 1, u + 1));
                } else {
                    child.deg_b[leaf] = 0;
                    child.deg_a[u] -= 1;
                    child.alive_b -= 1;
                    child.chosen.push(Point::new(u + 1, leaf + 1));
                }
                self.stack.push(child);
            }
        }
        None
    }
}

/// Every saturated fraction with margins `m`, each exactly once.
pub fn generate_with_margins(m: &Margins) -> Result<WithMargins> {
    check_saturated_margins(m)?;
    let size = m.size();
    let start = PeelState {
        deg_a: m.a().to_vec(),
        deg_b: m.b().to_vec(),
        alive_a: size.rows(),
        alive_b: size.cols(),
        chosen: Vec::with_capacity(size.parameters()),
    };
    Ok(WithMargins {
        size,
        stack: vec![start],
    })
}

struct TreeState {
    next_edge: usize,
    chosen: Vec<Point>,
    component: Vec<usize>,
}

/// Spanning trees of `K_{I,J}` by include/exclude branching over the cells
/// in lexicographic order. A branch includes a cell only when it joins two
/// components and excludes it only when enough cells remain to finish.
pub struct SpanningTrees {
    size: DesignSize,
    cells: Vec<Point>,
    stack: Vec<TreeState>,
}

impl Iterator for SpanningTrees {
    type Item = Fraction;

    fn next(&mut self) -> Option<Fraction> {
        let need = self.size.parameters();
        let rows = self.size.rows();
        while let Some(st) = self.stack.pop() {
            if st.chosen.len() == need {
                return Some(Fraction::from_sorted_unchecked(self.size, st.chosen));
            }
            let e = st.next_edge;
            if e == self.cells.len() {
                continue;
            }
            let remaining_after = self.cells.len() - e - 1;
            if remaining_after >= need - st.chosen.len() {
                self.stack.push(TreeState {
                    next_edge: e + 1,
                    chosen: st.chosen.clone(),
                    component: st.component.clone(),
                });
            }
            let p = self.cells[e];
            let (ca, cb) = (st.component[p.i - 1], st.component[rows + p.j - 1]);
            if ca != cb {
                let mut component = st.component;
                for c in &mut component {
                    if *c == cb {
                        *c = ca;
                    }
                }
                let mut chosen = st.chosen;
                chosen.push(p);
                self.stack.push(TreeState {
                    next_edge: e + 1,
                    chosen,
                    component,
                });
            }
        }
        None
    }
}

/// Every saturated fraction of `size`, via spanning-tree enumeration of
/// `K_{I,J}`. Refuses to start if the total exceeds `cap`.
pub fn enumerate_saturated(size: DesignSize, cap: u64) -> Result<SpanningTrees> {
    let total = count_saturated(size);
    if total > BigUint::from(cap) {
        return Err(Error::CapExceeded {
            what: "saturated-fraction enumeration",
            needed: total.to_string(),
            cap,
        });
    }
    let n = size.rows() + size.cols();
    Ok(SpanningTrees {
        size,
        cells: size.points().collect(),
        stack: vec![TreeState {
            next_edge: 0,
            chosen: Vec::with_capacity(size.parameters()),
            component: (0..n).collect(),
        }],
    })
}

/// Uniformly random saturated fraction: a uniform spanning tree of
/// `K_{I,J}` drawn with Wilson's loop-erased random walk.
pub fn sample_uniform_saturated_with<R: Rng + ?Sized>(size: DesignSize, rng: &mut R) -> Fraction {
    let (i, j) = (size.rows(), size.cols());
    let n = i + j;
    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    in_tree[0] = true;
    for start in 1..n {
        let mut u = start;
        while !in_tree[u] {
            next[u] = if u < i {
                i + rng.gen_range(0..j)
            } else {
                rng.gen_range(0..i)
            };
            u = next[u];
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    let mut points: Vec<Point> = (1..n)
        .map(|v| {
            let w = next[v];
            let (a, b) = if v < i { (v, w) } else { (w, v) };
            Point::new(a + 1, b - i + 1)
        })
        .collect();
    points.sort_unstable();
    Fraction::from_sorted_unchecked(size, points)
}

/// Seeded wrapper around [`sample_uniform_saturated_with`] using ChaCha8.
pub fn sample_uniform_saturated(size: DesignSize, seed: u64) -> Fraction {
    sample_uniform_saturated_with(size, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Endless stream of independent draws from one seeded generator. The first
/// draw equals `sample_uniform_saturated(size, seed)`.
pub fn sample_stream(size: DesignSize, seed: u64) -> impl Iterator<Item = Fraction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::repeat_with(move || sample_uniform_saturated_with(size, &mut rng))
}

/// Outcome of the four necessary margin conditions for a saturated square
/// design. Conditions are evaluated for any input; `square` and `saturated`
/// record what the input actually was.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarginLemmaReport {
    pub square: bool,
    pub saturated: bool,
    /// Both margins sum to `I + J − 1` (`2I − 1` when square).
    pub sums: bool,
    /// Every level appears at least once.
    pub all_positive: bool,
    /// Some A-level and some B-level appear exactly once.
    pub has_unit_margins: bool,
    /// The single point of every once-used A-level sits in a B-level used
    /// more than once.
    pub unit_rows_attach: bool,
}

impl MarginLemmaReport {
    pub fn conditions(&self) -> [bool; 4] {
        [
            self.sums,
            self.all_positive,
            self.has_unit_margins,
            self.unit_rows_attach,
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.conditions().iter().all(|&c| c)
    }
}

pub fn check_margin_lemma(f: &Fraction) -> MarginLemmaReport {
    let size = f.size();
    let m = f.margins();
    let p = size.parameters();
    let unit_rows_attach = f
        .points()
        .iter()
        .filter(|pt| m.a()[pt.i - 1] == 1)
        .all(|pt| m.b()[pt.j - 1] > 1);
    MarginLemmaReport {
        square: size.rows() == size.cols(),
        saturated: is_saturated(f),
        sums: m.total() == p && m.b().iter().sum::<usize>() == p,
        all_positive: m.a().iter().chain(m.b()).all(|&v| v >= 1),
        has_unit_margins: m.a().contains(&1) && m.b().contains(&1),
        unit_rows_attach,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_saturated_by_determinant;
    use itertools::Itertools;
    use num_bigint::BigInt;
    use std::collections::BTreeSet;

    fn sz(i: usize, j: usize) -> DesignSize {
        DesignSize::new(i, j).unwrap()
    }

    fn frac(i: usize, j: usize, pts: &[(usize, usize)]) -> Fraction {
        Fraction::new(sz(i, j), pts.iter().copied()).unwrap()
    }

    fn margins(a: &[usize], b: &[usize]) -> Margins {
        Margins::new(a.to_vec(), b.to_vec()).unwrap()
    }

    fn brute_force_saturated(size: DesignSize) -> Vec<Fraction> {
        size.points()
            .combinations(size.parameters())
            .map(|pts| Fraction::new(size, pts).unwrap())
            .filter(is_saturated_by_determinant)
            .collect()
    }

    #[test]
    fn saturation_examples() {
        assert!(is_saturated(&frac(3, 4, &[(1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 4)])));
        assert!(!is_saturated(&frac(
            4,
            4,
            &[(1, 1), (1, 3), (2, 1), (2, 2), (3, 2), (3, 3), (4, 3)]
        )));
        let remark = frac(
            5,
            5,
            &[(1, 1), (1, 2), (2, 1), (2, 3), (3, 2), (3, 3), (4, 4), (4, 5), (5, 4)],
        );
        assert!(!is_saturated(&remark));
        assert!(!is_saturated(&frac(3, 4, &[(1, 1), (1, 2)])));
    }

    #[test]
    fn per_margin_counts() {
        assert_eq!(
            count_with_margins(&margins(&[4, 1, 1, 1], &[4, 1, 1, 1])).unwrap(),
            BigUint::from(1u32)
        );
        assert_eq!(
            count_with_margins(&margins(&[3, 2, 1, 1], &[2, 2, 2, 1])).unwrap(),
            BigUint::from(18u32)
        );
        assert_eq!(
            count_with_margins(&margins(&[4, 1, 1], &[3, 1, 1, 1])).unwrap(),
            BigUint::from(1u32)
        );
    }

    #[test]
    fn per_margin_count_errors() {
        assert!(matches!(
            count_with_margins(&margins(&[3, 1, 1], &[2, 1, 1, 1])),
            Err(Error::InvalidMargins(_))
        ));
        assert!(matches!(
            count_with_margins(&margins(&[5, 1, 0], &[3, 1, 1, 1])),
            Err(Error::InvalidMargins(_))
        ));
    }

    #[test]
    fn totals() {
        assert_eq!(count_saturated(sz(4, 4)), BigUint::from(4096u32));
        assert_eq!(count_saturated(sz(2, 2)), BigUint::from(4u32));
        assert_eq!(count_saturated(sz(3, 4)), BigUint::from(432u32));
        assert_eq!(count_saturated(sz(6, 6)), BigUint::from(60_466_176u64));
    }

    #[test]
    fn closed_form_matches_brute_force_small() {
        for (i, j) in [(2, 2), (2, 3), (3, 3), (3, 4)] {
            let s = sz(i, j);
            assert_eq!(
                BigUint::from(brute_force_saturated(s).len()),
                count_saturated(s),
                "{s}"
            );
        }
    }

    #[test]
    fn by_margin_breakdown_sums_to_total() {
        for (i, j) in [(2, 2), (3, 4), (4, 3), (4, 4), (4, 5)] {
            let s = sz(i, j);
            let c = count_by_margins(s);
            assert_eq!(c.total, count_saturated(s), "{s}");
        }
    }

    #[test]
    fn probabilities() {
        let p = saturation_probability(sz(3, 3));
        assert_eq!(p.to_string(), "81/126");
        assert_eq!(p.to_decimal(3), "0.643");
        assert_eq!(p.ratio(), BigRational::new(BigInt::from(81), BigInt::from(126)));
        assert_eq!(saturation_probability(sz(4, 4)).to_string(), "4096/11440");
        assert_eq!(saturation_probability(sz(4, 4)).to_decimal(3), "0.358");
        let six = saturation_probability(sz(6, 6));
        assert_eq!(six.to_string(), "60466176/600805296");
        assert_eq!(six.to_decimal(3), "0.101");
        assert_eq!(saturation_probability(sz(2, 2)).to_decimal(0), "1");
    }

    #[test]
    fn decimal_rounding_is_half_up() {
        let p = SaturationProbability {
            saturated: BigUint::from(1u32),
            subsets: BigUint::from(8u32),
        };
        assert_eq!(p.to_decimal(2), "0.13");
        assert_eq!(p.to_decimal(3), "0.125");
        assert_eq!(p.to_decimal(1), "0.1");
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(7, 4).len(), 20);
        assert_eq!(compositions(3, 3), vec![vec![1, 1, 1]]);
        assert!(compositions(2, 3).is_empty());
    }

    #[test]
    fn generation_examples() {
        let got: Vec<_> = generate_with_margins(&margins(&[2, 1], &[2, 1]))
            .unwrap()
            .collect();
        assert_eq!(got, vec![frac(2, 2, &[(1, 1), (1, 2), (2, 1)])]);

        let got: Vec<_> = generate_with_margins(&margins(&[4, 1, 1], &[3, 1, 1, 1]))
            .unwrap()
            .collect();
        assert_eq!(
            got,
            vec![frac(3, 4, &[(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (3, 1)])]
        );

        let got: Vec<_> = generate_with_margins(&margins(&[4, 1, 1, 1], &[4, 1, 1, 1]))
            .unwrap()
            .collect();
        assert_eq!(
            got,
            vec![frac(
                4,
                4,
                &[(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (3, 1), (4, 1)]
            )]
        );
        assert!(generate_with_margins(&margins(&[2, 2], &[2, 2])).is_err());
    }

    #[test]
    fn generation_matches_count_for_every_margin_pair() {
        for (i, j) in [(3, 4), (4, 3), (4, 4), (2, 5)] {
            for m in saturated_margins(sz(i, j)) {
                let all: Vec<Fraction> = generate_with_margins(&m).unwrap().collect();
                let distinct: BTreeSet<_> = all.iter().collect();
                assert_eq!(distinct.len(), all.len());
                assert_eq!(BigUint::from(all.len()), count_with_margins(&m).unwrap(), "{m}");
                for f in &all {
                    assert!(is_saturated(f));
                    assert_eq!(f.margins(), m);
                }
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_saturated(sz(2, 2), 100).unwrap().count(), 4);
        assert_eq!(enumerate_saturated(sz(3, 3), 100).unwrap().count(), 81);
        let all: BTreeSet<Fraction> = enumerate_saturated(sz(3, 4), 1000).unwrap().collect();
        assert_eq!(all.len(), 432);
        let brute: BTreeSet<Fraction> = brute_force_saturated(sz(3, 4)).into_iter().collect();
        assert_eq!(all, brute);
    }

    #[test]
    fn enumeration_cap_refuses_to_start() {
        assert!(matches!(
            enumerate_saturated(sz(4, 4), 4095),
            Err(Error::CapExceeded { .. })
        ));
        assert!(enumerate_saturated(sz(4, 4), 4096).is_ok());
    }

    #[test]
    fn stream_starts_with_the_single_draw() {
        let size = sz(4, 5);
        let draws: Vec<Fraction> = sample_stream(size, 11).take(3).collect();
        assert_eq!(draws[0], sample_uniform_saturated(size, 11));
        assert_eq!(draws, sample_stream(size, 11).take(3).collect::<Vec<_>>());
        assert!(draws.iter().all(is_saturated));
    }

    #[test]
    fn sampler_is_deterministic_and_saturated() {
        for seed in 0..200 {
            for (i, j) in [(2, 2), (3, 5), (6, 4)] {
                let f = sample_uniform_saturated(sz(i, j), seed);
                assert!(is_saturated(&f), "{f}");
                assert_eq!(f, sample_uniform_saturated(sz(i, j), seed));
            }
        }
    }

    #[test]
    fn margin_lemma_examples() {
        let cross = frac(3, 3, &[(1, 1), (1, 2), (1, 3), (2, 1), (3, 1)]);
        let m = cross.margins();
        assert_eq!(m.a(), &[3, 1, 1]);
        assert_eq!(m.b(), &[3, 1, 1]);
        assert!(check_margin_lemma(&cross).all_pass());

        let remark = frac(
            5,
            5,
            &[(1, 1), (1, 2), (2, 1), (2, 3), (3, 2), (3, 3), (4, 4), (4, 5), (5, 4)],
        );
        let r = check_margin_lemma(&remark);
        assert!(r.all_pass());
        assert!(!r.saturated);

        let r = check_margin_lemma(&frac(3, 3, &[(1, 1)]));
        assert!(!r.sums && !r.all_positive);
    }

    #[test]
    fn every_saturated_four_by_four_passes_margin_lemma() {
        for f in enumerate_saturated(sz(4, 4), 5000).unwrap() {
            let r = check_margin_lemma(&f);
            assert!(r.all_pass() && r.saturated && r.square, "{f}");
        }
    }

    #[test]
    fn trees_are_maximal_and_minimal() {
        for f in enumerate_saturated(sz(3, 4), 1000).unwrap() {
            for &p in f.points() {
                assert!(!contains_cycle(&f.without(p)));
            }
            for p in f.size().points().filter(|&p| !f.contains(p)) {
                assert!(contains_cycle(&f.with(p).unwrap()));
            }
        }
    }
}
