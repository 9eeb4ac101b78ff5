//! Agreement between independent routes through the library.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num_bigint::BigUint;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use satfrac::cycles::{contains_cycle, find_cycle};
use satfrac::linalg::{is_saturated_by_determinant, ModelMatrix};
use satfrac::markov::{
    fiber_components, fiber_enumerate, markov_basis, markov_basis_with, metropolis_walk,
    random_walk, MarkovChain,
};
use satfrac::saturation::{
    check_margin_lemma, count_by_margins, count_saturated, enumerate_saturated,
    generate_with_margins, is_saturated, sample_uniform_saturated, saturated_margins,
};
use satfrac::{BinaryTable, DesignSize, Fraction, Margins};

fn sz(i: usize, j: usize) -> DesignSize {
    DesignSize::new(i, j).unwrap()
}

fn chi2_critical(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99)
}

#[test]
fn detectors_agree_on_small_subsets_of_3x4() {
    let size = sz(3, 4);
    for n in 0..=8 {
        for pts in size.points().combinations(n) {
            let f = Fraction::new(size, pts).unwrap();
            let by_union_find = contains_cycle(&f);
            let by_traversal = find_cycle(&f).is_some();
            assert_eq!(by_union_find, by_traversal, "{f}");
            if n == size.parameters() {
                assert_eq!(!by_union_find, is_saturated_by_determinant(&f), "{f}");
                let rank = ModelMatrix::for_fraction(&f).rank().unwrap();
                assert_eq!(rank == 6, !by_union_find);
            }
        }
    }
}

#[test]
fn reported_cycles_are_subsets_of_the_input() {
    let size = sz(3, 4);
    for pts in size.points().combinations(7) {
        let f = Fraction::new(size, pts).unwrap();
        let c = find_cycle(&f).expect("seven points on 3x4 always contain a cycle");
        assert!(c.points().iter().all(|&p| f.contains(p)));
    }
}

#[test]
fn generation_matches_filtered_enumeration() {
    for (i, j) in [(3, 4), (4, 3), (4, 4)] {
        let size = sz(i, j);
        let mut by_margins: BTreeMap<Margins, BTreeSet<Fraction>> = BTreeMap::new();
        for f in enumerate_saturated(size, 10_000).unwrap() {
            by_margins.entry(f.margins()).or_default().insert(f);
        }
        for m in saturated_margins(size) {
            let generated: Vec<Fraction> = generate_with_margins(&m).unwrap().collect();
            let unique: BTreeSet<Fraction> = generated.iter().cloned().collect();
            assert_eq!(unique.len(), generated.len(), "duplicates for {m}");
            let expected = by_margins.remove(&m).unwrap_or_default();
            assert_eq!(unique, expected, "margins {m}");
        }
        assert!(by_margins.is_empty(), "enumerated margins not covered");
    }
}

#[test]
fn margin_breakdown_sums_to_total() {
    for (i, j) in [(2, 2), (3, 5), (4, 4), (5, 6), (6, 6)] {
        let size = sz(i, j);
        let c = count_by_margins(size);
        assert_eq!(c.total, count_saturated(size));
        let formula = BigUint::from(i).pow(j as u32 - 1) * BigUint::from(j).pow(i as u32 - 1);
        assert_eq!(c.total, formula);
    }
}

#[test]
fn produced_fractions_satisfy_the_margin_lemma() {
    for n in 3..=6 {
        let size = sz(n, n);
        for seed in 0..200 {
            let f = sample_uniform_saturated(size, seed);
            assert!(is_saturated(&f));
            assert!(check_margin_lemma(&f).all_pass(), "{f}");
        }
    }
    let m = Margins::new(vec![3, 2, 1, 1], vec![2, 2, 2, 1]).unwrap();
    for f in generate_with_margins(&m).unwrap() {
        assert!(is_saturated(&f));
        assert!(check_margin_lemma(&f).all_pass(), "{f}");
    }
}

#[test]
fn unimodular_for_all_small_designs() {
    for i in 2..=4 {
        for j in 2..=4 {
            for f in enumerate_saturated(sz(i, j), 10_000).unwrap() {
                let d = ModelMatrix::for_fraction(&f).determinant().unwrap();
                assert_eq!(d.abs(), 1, "{f}");
            }
        }
    }
}

fn fibers_3x4() -> Vec<Margins> {
    let mut out = Vec::new();
    for total in 4..=8 {
        for a in (0..3).map(|_| 1..=4usize).multi_cartesian_product() {
            if a.iter().sum::<usize>() != total {
                continue;
            }
            for b in (0..4).map(|_| 1..=3usize).multi_cartesian_product() {
                if b.iter().sum::<usize>() == total {
                    out.push(Margins::new(a.clone(), b).unwrap());
                }
            }
        }
    }
    out
}

#[test]
fn every_3x4_fiber_is_connected() {
    let full = markov_basis(sz(3, 4)).unwrap();
    let twos = markov_basis_with(sz(3, 4), Some(2), 1000).unwrap();
    assert_eq!(twos.len(), 18);
    let mut checked = 0;
    for m in fibers_3x4() {
        let fiber = fiber_enumerate(&m, 100_000).unwrap();
        if fiber.is_empty() {
            continue;
        }
        assert_eq!(fiber_components(&fiber, &full), 1, "{m}");
        // interchanges alone already connect 0/1 tables with fixed margins
        assert_eq!(fiber_components(&fiber, &twos), 1, "{m}");
        checked += 1;
    }
    assert!(checked > 100, "only {checked} fibers");
}

#[test]
fn fiber_sizes_match_brute_force() {
    let size = sz(3, 3);
    let mut brute: BTreeMap<Margins, usize> = BTreeMap::new();
    for mask in 0u32..1 << 9 {
        let pts = size
            .points()
            .enumerate()
            .filter(|(n, _)| mask >> n & 1 == 1)
            .map(|(_, p)| p);
        let f = Fraction::new(size, pts).unwrap();
        if f.is_empty() {
            continue;
        }
        *brute.entry(f.margins()).or_default() += 1;
    }
    for (m, n) in brute {
        assert_eq!(fiber_enumerate(&m, 1000).unwrap().len(), n, "{m}");
    }
}

#[test]
fn long_walk_covers_a_larger_fiber() {
    let m = Margins::new(vec![2, 2, 2], vec![2, 2, 1, 1]).unwrap();
    let fiber: BTreeSet<BinaryTable> = fiber_enumerate(&m, 10_000).unwrap().into_iter().collect();
    let basis = markov_basis(sz(3, 4)).unwrap();
    let mut chain = MarkovChain::new(fiber.iter().next().unwrap().clone(), &basis, 7).unwrap();
    let mut seen = BTreeSet::new();
    for _ in 0..20_000 {
        chain.step();
        assert!(fiber.contains(chain.state()));
        seen.insert(chain.state().clone());
    }
    assert_eq!(seen, fiber);
}

#[test]
fn walk_on_3x4_fiber_is_uniform() {
    let m = Margins::new(vec![2, 2, 2], vec![2, 2, 1, 1]).unwrap();
    let fiber = fiber_enumerate(&m, 10_000).unwrap();
    let index: BTreeMap<&BinaryTable, usize> = fiber.iter().enumerate().map(|(n, t)| (t, n)).collect();
    let basis = markov_basis(sz(3, 4)).unwrap();
    let mut chain = MarkovChain::new(fiber[0].clone(), &basis, 99).unwrap();
    let mut counts = vec![0u64; fiber.len()];
    let draws = 6_000;
    for _ in 0..draws {
        for _ in 0..20 {
            chain.step();
        }
        counts[index[chain.state()]] += 1;
    }
    let e = draws as f64 / fiber.len() as f64;
    let stat: f64 = counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    assert!(stat < chi2_critical(fiber.len() - 1), "chi2 {stat}");
}

#[test]
fn metropolis_favours_saturated_tables() {
    // Weight 2 on saturated tables, 1 elsewhere; compare with the exact
    // stationary mass of the saturated part of the fiber.
    let m = Margins::new(vec![2, 2, 2], vec![2, 2, 1, 1]).unwrap();
    let fiber = fiber_enumerate(&m, 10_000).unwrap();
    let sat = fiber.iter().filter(|t| is_saturated(&t.to_fraction())).count();
    assert!(sat > 0 && sat < fiber.len());
    let target = |t: &BinaryTable| if is_saturated(&t.to_fraction()) { 2.0 } else { 1.0 };
    let exact = 2.0 * sat as f64 / (2.0 * sat as f64 + (fiber.len() - sat) as f64);

    let basis = markov_basis(sz(3, 4)).unwrap();
    let mut chain = MarkovChain::new(fiber[0].clone(), &basis, 5).unwrap();
    let (draws, thin) = (20_000, 20);
    let mut hits = 0;
    for _ in 0..draws {
        for _ in 0..thin {
            chain.metropolis_step(&target).unwrap();
        }
        hits += usize::from(is_saturated(&chain.state().to_fraction()));
    }
    let observed = hits as f64 / draws as f64;
    let sd = (exact * (1.0 - exact) / draws as f64).sqrt();
    assert!((observed - exact).abs() < 5.0 * sd, "observed {observed}, exact {exact}");
}

#[test]
fn constant_target_reproduces_the_uniform_walk() {
    let start = BinaryTable::from_rows(&[[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]]).unwrap();
    let basis = markov_basis(sz(3, 4)).unwrap();
    for seed in 0..20 {
        let a = random_walk(&start, &basis, 500, seed).unwrap();
        let b = metropolis_walk(&start, &basis, |_| 3.5, 500, seed).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn sampler_on_2x2_is_balanced() {
    let size = sz(2, 2);
    let mut counts: BTreeMap<Fraction, u32> = BTreeMap::new();
    let n = 10_000;
    for seed in 0..n {
        *counts.entry(sample_uniform_saturated(size, seed)).or_default() += 1;
    }
    assert_eq!(counts.len(), 4);
    for c in counts.values() {
        let freq = *c as f64 / n as f64;
        assert!((freq - 0.25).abs() < 0.02, "{freq}");
    }
}

#[test]
fn sampler_is_uniform_on_3x4() {
    let size = sz(3, 4);
    let support: Vec<Fraction> = enumerate_saturated(size, 1000).unwrap().collect();
    let pos: BTreeMap<&Fraction, usize> = support.iter().enumerate().map(|(n, f)| (f, n)).collect();
    let mut counts = vec![0u64; support.len()];
    let draws = 43_200u64;
    for seed in 0..draws {
        counts[pos[&sample_uniform_saturated(size, seed)]] += 1;
    }
    let e = draws as f64 / support.len() as f64;
    let stat: f64 = counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    assert!(stat < chi2_critical(support.len() - 1), "chi2 {stat}");
}
