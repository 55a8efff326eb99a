use bycm::prob::{binary_entropy, entropy, Alphabet, CondPmf, JointPmf};
use bycm::region::{
    aux_alphabet, expected_distortion, in_region, minimize_sum_rate, DistortionMatrix,
    InfoMeasures, RatePoint, ReconMap, SolverParams,
};
use proptest::prelude::*;

/// All ways to write `g` as an ordered sum of `k` nonnegative parts.
fn compositions(g: u32, k: usize) -> Vec<Vec<u32>> {
    if k == 1 {
        return vec![vec![g]];
    }
    let mut out = Vec::new();
    for first in 0..=g {
        for mut rest in compositions(g - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Exhaustive search: every grid channel row-by-row times every
/// deterministic reconstruction table.
fn brute_force(source: &JointPmf, d: &DistortionMatrix, budget: f64, g: u32, k: usize) -> f64 {
    let n1 = source.axis(0).size();
    let n2 = source.axis(1).size();
    let rows = compositions(g, k);
    let recon_count = d.cols().pow((n1 * k) as u32);
    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; n2];
    loop {
        let mass: Vec<f64> = choice
            .iter()
            .flat_map(|&r| rows[r].iter().map(|&c| c as f64 / g as f64))
            .collect();
        let aux = CondPmf::new(vec![source.axis(1).clone()], vec![aux_alphabet(k)], mass).unwrap();
        let rate = InfoMeasures::of(source, &aux).unwrap().sum_rate();
        if rate < best {
            for code in 0..recon_count {
                let mut c = code;
                let table = (0..n1)
                    .map(|_| {
                        (0..k)
                            .map(|_| {
                                let x = c % d.cols();
                                c /= d.cols();
                                x
                            })
                            .collect()
                    })
                    .collect();
                let recon = ReconMap::new(table).unwrap();
                if expected_distortion(source, &aux, &recon, d).unwrap() <= budget + 1e-9 {
                    best = rate;
                    break;
                }
            }
        }
        let mut pos = 0;
        loop {
            if pos == n2 {
                return best;
            }
            choice[pos] += 1;
            if choice[pos] < rows.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

fn params(grid: u32, aux_size: usize) -> SolverParams {
    SolverParams {
        grid,
        aux_size: Some(aux_size),
        ..SolverParams::default()
    }
}

#[test]
fn matches_exhaustive_search_on_small_grids() {
    let ham = DistortionMatrix::hamming(2);
    let skewed = JointPmf::new(
        vec![Alphabet::binary(), Alphabet::binary()],
        vec![0.4, 0.1, 0.15, 0.35],
    )
    .unwrap();
    for source in [JointPmf::dsbs(0.25).unwrap(), skewed] {
        for budget in [0.0, 0.05, 0.1, 0.2, 0.3] {
            let want = brute_force(&source, &ham, budget, 6, 3);
            let got = minimize_sum_rate(&source, &ham, budget, &params(6, 3)).unwrap();
            assert!(
                (got.sum_rate - want).abs() < 1e-9,
                "budget {budget}: solver {} vs exhaustive {want}",
                got.sum_rate
            );
            assert!(got.achieved_d <= budget + 1e-9);
        }
    }
}

#[test]
fn matches_exhaustive_search_with_ternary_reconstruction() {
    // X̂2 has an erasure-like third symbol at distortion 0.3.
    let d = DistortionMatrix::new(vec![vec![0.0, 1.0, 0.3], vec![1.0, 0.0, 0.3]]).unwrap();
    let source = JointPmf::dsbs(0.1).unwrap();
    for budget in [0.05, 0.15, 0.25] {
        let want = brute_force(&source, &d, budget, 4, 3);
        let got = minimize_sum_rate(&source, &d, budget, &params(4, 3)).unwrap();
        assert!((got.sum_rate - want).abs() < 1e-9, "budget {budget}");
    }
}

#[test]
fn refinement_gap_is_small() {
    let src = JointPmf::dsbs(0.25).unwrap();
    let ham = DistortionMatrix::hamming(2);
    let coarse = minimize_sum_rate(&src, &ham, 0.05, &SolverParams::with_grid(32)).unwrap();
    let fine = minimize_sum_rate(&src, &ham, 0.05, &SolverParams::with_grid(64)).unwrap();
    assert!(fine.sum_rate <= coarse.sum_rate + 1e-12);
    assert!(coarse.sum_rate - fine.sum_rate < 0.03);
}

#[test]
fn solution_invariants() {
    let src = JointPmf::dsbs(0.2).unwrap();
    let ham = DistortionMatrix::hamming(2);
    let sol = minimize_sum_rate(&src, &ham, 0.08, &SolverParams::with_grid(16)).unwrap();
    assert_eq!(sol.aux.to_len(), 4);
    let joint = bycm::prob::compose_markov(&src, &sol.aux).unwrap();
    let leak = bycm::prob::conditional_mutual_information(&joint, &[0], &[2], &[1]).unwrap();
    assert!(leak < 1e-10);
    assert!((sol.measures.sum_rate() - sol.measures.sum_rate_chain()).abs() < 1e-10);
    let e = expected_distortion(&src, &sol.aux, &sol.recon, &ham).unwrap();
    assert!((e - sol.achieved_d).abs() < 1e-12);
}

#[test]
fn extra_auxiliary_symbol_does_not_help() {
    let ham = DistortionMatrix::hamming(2);
    for source in [JointPmf::dsbs(0.2).unwrap(), JointPmf::dsbs(0.3).unwrap()] {
        for budget in [0.03, 0.1] {
            let four = minimize_sum_rate(&source, &ham, budget, &params(12, 4)).unwrap();
            let five = minimize_sum_rate(&source, &ham, budget, &params(12, 5)).unwrap();
            assert!(four.sum_rate - five.sum_rate < 0.01);
        }
    }
}

#[test]
fn deterministic_output() {
    let src = JointPmf::dsbs(0.25).unwrap();
    let ham = DistortionMatrix::hamming(2);
    let a = minimize_sum_rate(&src, &ham, 0.1, &SolverParams::with_grid(16)).unwrap();
    let b = minimize_sum_rate(&src, &ham, 0.1, &SolverParams::with_grid(16)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn constant_reconstruction_distortion() {
    // V constant, X2 ~ Bernoulli(0.3), best constant guess is 0.
    let src = JointPmf::new(
        vec![Alphabet::binary(), Alphabet::binary()],
        vec![0.35, 0.15, 0.35, 0.15],
    )
    .unwrap();
    let aux = CondPmf::constant(Alphabet::binary(), aux_alphabet(1));
    let ham = DistortionMatrix::hamming(2);
    let best = (0..2)
        .map(|c| expected_distortion(&src, &aux, &ReconMap::new(vec![vec![c], vec![c]]).unwrap(), &ham).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((best - 0.3).abs() < 1e-12);
}

fn point_a(source: &JointPmf, budget: f64, grid: u32) -> RatePoint {
    minimize_sum_rate(source, &DistortionMatrix::hamming(2), budget, &SolverParams::with_grid(grid))
        .unwrap()
        .corner_points
        .a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sum_rate_is_monotone_and_bounded(q in 0.05f64..0.45, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let src = JointPmf::dsbs(q).unwrap();
        let ham = DistortionMatrix::hamming(2);
        let p = SolverParams::with_grid(10);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let r_lo = minimize_sum_rate(&src, &ham, lo, &p).unwrap().sum_rate;
        let r_hi = minimize_sum_rate(&src, &ham, hi, &p).unwrap().sum_rate;
        prop_assert!(r_hi <= r_lo + 1e-12);
        let h1 = entropy(&src, &[0]).unwrap();
        prop_assert!(r_hi >= h1 - 1e-9);
        prop_assert!(r_lo <= 1.0 + binary_entropy(q) + 1e-9);
    }

    #[test]
    fn membership_is_monotone(q in 0.1f64..0.4, budget in 0.02f64..0.2, extra1 in 0.0f64..0.2, extra2 in 0.0f64..0.2) {
        let src = JointPmf::dsbs(q).unwrap();
        let ham = DistortionMatrix::hamming(2);
        let p = SolverParams::with_grid(8);
        let a = point_a(&src, budget, 8);
        prop_assert!(in_region(&src, &ham, &a, &p).unwrap());
        let bigger = RatePoint {
            r1p: a.r1p + extra1,
            r2p: a.r2p + extra2,
            r1: a.r1 + extra1,
            r2: a.r2 + extra2,
            ..a
        };
        prop_assert!(in_region(&src, &ham, &bigger, &p).unwrap());
        let skewed = RatePoint { r1: a.r1 + 0.05, ..a };
        prop_assert!(!in_region(&src, &ham, &skewed, &p).unwrap());
    }
}
