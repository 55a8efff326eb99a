use bycm::bigraph::{check_nearly_semi_regular, BipartiteGraph, SemiRegularParams};
use bycm::codec::{
    check_degree_events, decode, encode1, encode2, generate_codebooks, induce_graph, induced_degrees,
    run_monte_carlo, run_trials, typical_distortion_range, CodebookPair, CodecConfig, DecodeError, Rates,
    SourceModel,
};
use bycm::prob::{Alphabet, CondPmf, JointPmf};
use bycm::region::{CornerPoints, DistortionMatrix, InfoMeasures, ReconMap};
use bycm::seed::splitmix64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Relative-rule strong typicality computed from scratch.
fn typical(mass: &[f64], shape: &[usize], seqs: &[&[u8]], eps: f64) -> bool {
    let n = seqs[0].len();
    let mut counts = vec![0usize; mass.len()];
    for m in 0..n {
        let idx = seqs.iter().zip(shape).fold(0, |acc, (s, &k)| acc * k + s[m] as usize);
        counts[idx] += 1;
    }
    counts.iter().zip(mass).all(|(&c, &p)| {
        if p == 0.0 {
            c == 0
        } else {
            (c as f64 / n as f64 - p).abs() <= eps * p + 1e-9
        }
    })
}

fn model(source: JointPmf, aux: CondPmf) -> SourceModel {
    let nx1 = source.axis(0).size();
    let nv = aux.to_len();
    SourceModel::new(source, aux, ReconMap::from_v(nx1, nv), DistortionMatrix::hamming(2)).unwrap()
}

fn lossless() -> SourceModel {
    model(JointPmf::dsbs(0.25).unwrap(), CondPmf::identity(Alphabet::binary()))
}

fn lossy() -> SourceModel {
    model(JointPmf::dsbs(0.25).unwrap(), CondPmf::bsc(0.1).unwrap())
}

fn flat(r: f64) -> Rates {
    Rates {
        r1: r,
        r2: r,
        r1p: r,
        r2p: r,
    }
}

#[test]
fn fair_coin_codewords_have_three_to_five_ones() {
    let m = lossless();
    let cfg = CodecConfig::new(8, 0.25, 0.5, flat(0.5), 4);
    let cb = generate_codebooks(&m, &cfg).unwrap();
    // |k/8 - 1/2| <= 0.25 * 1/2 admits k in {3, 4, 5}.
    for k in 0..cb.c1.len() {
        let ones = cb.c1.word(k).iter().filter(|&&s| s == 1).count();
        assert!((3..=5).contains(&ones), "codeword {k} has {ones} ones");
    }
    assert_eq!(cb.c1.len(), 1 << 10);
    assert_eq!(cb.c2.len(), 1 << 10);
    assert_eq!((cb.c1.n_bins(), cb.c2.n_bins()), (16, 16));
    let mut seen = vec![false; cb.c1.len()];
    for b in 0..cb.c1.n_bins() {
        for &k in cb.c1.bin(b) {
            assert!(!seen[k as usize]);
            seen[k as usize] = true;
            assert_eq!(cb.c1.bin_of(k as usize) as usize, b);
        }
    }
    assert!(seen.into_iter().all(|s| s));
}

#[test]
fn codebooks_are_reproducible() {
    let m = lossy();
    let cfg = CodecConfig::new(10, 0.3, 0.5, flat(0.4), 21);
    let a = generate_codebooks(&m, &cfg).unwrap();
    let b = generate_codebooks(&m, &cfg).unwrap();
    for k in 0..a.c1.len() {
        assert_eq!(a.c1.word(k), b.c1.word(k));
        assert_eq!(a.c1.bin_of(k), b.c1.bin_of(k));
    }
    let other = generate_codebooks(&m, &CodecConfig { seed: 22, ..cfg }).unwrap();
    assert!((0..a.c2.len()).any(|k| a.c2.word(k) != other.c2.word(k)));
}

#[test]
fn single_symbol_source_never_errs() {
    let one = Alphabet::new(["a"]).unwrap();
    let m = SourceModel::new(
        JointPmf::new(vec![one.clone(), one.clone()], vec![1.0]).unwrap(),
        CondPmf::identity(one),
        ReconMap::from_v(1, 1),
        DistortionMatrix::hamming(1),
    )
    .unwrap();
    let cfg = CodecConfig::new(9, 0.2, 0.5, flat(0.0), 8);
    let cb = generate_codebooks(&m, &cfg).unwrap();
    assert_eq!(cb.c1.n_bins(), 1);
    assert!((0..cb.c1.len()).all(|k| cb.c1.word(k) == vec![0; 9]));
    let s = run_monte_carlo(&m, &cfg, 50).unwrap();
    assert_eq!(s.decode_error_rate, 0.0);
    assert_eq!((s.tau_x1, s.tau_x2), (0.0, 0.0));
    assert_eq!((s.e3, s.e4, s.e5, s.e6, s.e7), (0.0, 0.0, 0.0, 0.0, 0.0));
}

fn brute_force_graph(cb: &CodebookPair, m: &SourceModel, eps: f64) -> BipartiteGraph {
    let x1v = m.joint.marginal(&[0, 2]).unwrap();
    let mut edges = Vec::new();
    for i in 0..cb.c1.n_bins() {
        for j in 0..cb.c2.n_bins() {
            let hit = cb.c1.bin(i).iter().any(|&a| {
                let x = cb.c1.word(a as usize);
                cb.c2
                    .bin(j)
                    .iter()
                    .any(|&b| typical(x1v.mass(), &x1v.shape(), &[&x, &cb.c2.word(b as usize)], eps))
            });
            if hit {
                edges.push((i as u32, j as u32));
            }
        }
    }
    BipartiteGraph::new(cb.c1.n_bins(), cb.c2.n_bins(), edges).unwrap()
}

#[test]
fn induced_graph_matches_brute_force() {
    for (m, eps) in [(lossless(), 0.2), (lossy(), 0.4)] {
        let cfg = CodecConfig::new(8, eps, 0.5, flat(0.5), 3);
        let cb = generate_codebooks(&m, &cfg).unwrap();
        let g = induce_graph(&cb, &cfg).unwrap();
        assert_eq!(g, brute_force_graph(&cb, &m, eps));
        let (d1, d2) = induced_degrees(&cb, &cfg).unwrap();
        assert_eq!((d1, d2), g.degrees());
    }
}

#[test]
fn single_word_bins_match_brute_force() {
    // At least as many bins as codewords: every bin holds at most one word, and words repeat.
    for (m, eps) in [(lossless(), 0.2), (lossy(), 0.4)] {
        let cfg = CodecConfig::new(8, eps, 0.5, flat(1.5), 13);
        let cb = generate_codebooks(&m, &cfg).unwrap();
        assert!(cb.c1.n_bins() >= cb.c1.len() && cb.c2.n_bins() >= cb.c2.len());
        assert!(cb.c1.distinct_count() < cb.c1.len());
        let g = brute_force_graph(&cb, &m, eps);
        assert_eq!(induced_degrees(&cb, &cfg).unwrap(), g.degrees());
    }
}

#[test]
fn independent_sources_give_a_near_complete_graph() {
    let indep = JointPmf::new(vec![Alphabet::binary(), Alphabet::binary()], vec![0.25; 4]).unwrap();
    let m = model(indep, CondPmf::identity(Alphabet::binary()));
    let cfg = CodecConfig::new(8, 0.5, 0.5, flat(0.5), 5);
    let cb = generate_codebooks(&m, &cfg).unwrap();
    let g = induce_graph(&cb, &cfg).unwrap();
    let full = g.n1() * g.n2();
    assert!(g.edge_count() as f64 >= 0.95 * full as f64, "{} of {full}", g.edge_count());
}

fn point_d(m: &SourceModel) -> bycm::region::RatePoint {
    let measures = InfoMeasures::of(&m.source, &m.aux).unwrap();
    CornerPoints::from_measures(&measures, m.expected_distortion(), None).unwrap().d
}

#[test]
fn edge_count_tracks_the_sum_rate_at_point_d() {
    let m = lossless();
    let d = point_d(&m);
    let n = 10;
    let cfg = CodecConfig::new(n, 0.2, 0.5, Rates::from_point(&d, 0.0), 6);
    let cb = generate_codebooks(&m, &cfg).unwrap();
    let g = induce_graph(&cb, &cfg).unwrap();
    assert!(g.edge_count() < g.n1() * g.n2() / 4);
    // |E| ~ 2^{n (H(X1) + I(V;X2) - I(X1;V))}.
    let exponent = (g.edge_count() as f64).log2() / n as f64;
    assert!((exponent - d.sum_rate()).abs() < 0.1, "{exponent} vs {}", d.sum_rate());
}

#[test]
fn encode1_hits_and_misses() {
    let m = lossless();
    let cfg = CodecConfig::new(8, 0.2, 0.5, flat(0.5), 9);
    let cb = generate_codebooks(&m, &cfg).unwrap();
    let w = cb.c1.word(100);
    let hit = encode1(&w, &cb, &mut ChaCha8Rng::seed_from_u64(0));
    let k = hit.codeword.unwrap() as usize;
    assert_eq!(cb.c1.word(k), w);
    assert!(k <= 100);
    assert_eq!(hit.bin, cb.c1.bin_of(k));
    let atypical = [1u8; 8];
    let a = encode1(&atypical, &cb, &mut ChaCha8Rng::seed_from_u64(33));
    let b = encode1(&atypical, &cb, &mut ChaCha8Rng::seed_from_u64(33));
    assert_eq!(a, b);
    assert_eq!(a.codeword, None);
}

#[test]
fn encode2_tie_break_follows_the_salted_order() {
    let m = lossless();
    let cfg = CodecConfig::new(8, 0.2, 0.5, flat(0.25), 0);
    let v = vec![0, 1, 0, 1, 1, 0, 0, 1];
    let other = vec![1, 1, 1, 1, 0, 0, 0, 0];
    let c1 = vec![(v.clone(), 0)];
    let c2 = vec![(other.clone(), 0), (v.clone(), 1), (v.clone(), 2), (other, 3), (v.clone(), 3)];
    let cb = CodebookPair::from_parts(&m, &cfg, &c1, 4, &c2, 4).unwrap();
    for salt in [1u64, 2, 3, 99, 12345] {
        let want = [1u32, 2, 4].into_iter().min_by_key(|&k| (splitmix64(salt ^ k as u64), k)).unwrap();
        let got = encode2(&v, &cb, salt, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(got.codeword, Some(want));
        assert_eq!(got, encode2(&v, &cb, salt, &mut ChaCha8Rng::seed_from_u64(8)));
    }
    let none = encode2(&[0; 8], &cb, 1, &mut ChaCha8Rng::seed_from_u64(7));
    assert_eq!(none.codeword, None);
}

#[test]
fn decoder_outcomes() {
    let m = lossy();
    let cfg = CodecConfig::new(8, 0.2, 0.5, flat(0.25), 0);
    let x = vec![0, 0, 0, 0, 1, 1, 1, 1];
    let y = vec![1, 1, 1, 1, 0, 0, 0, 0];
    // Disagreeing in 2 of 8 places sits in every window at ε̃ = 0.6.
    let v = vec![1, 0, 0, 0, 1, 1, 1, 0];
    let c1 = vec![(x.clone(), 0), (y.clone(), 1), (x.clone(), 1)];
    let c2 = vec![(v.clone(), 0), (y.clone(), 1)];
    let cb = CodebookPair::from_parts(&m, &cfg, &c1, 2, &c2, 2).unwrap();
    let (hat1, hat2) = decode(0, 0, &cb, &m).unwrap();
    assert_eq!(hat1, x);
    assert_eq!(hat2, v);
    assert_eq!(decode(0, 1, &cb, &m), Err(DecodeError::NoCandidate));
    let wide = vec![(x.clone(), 0), (x.clone(), 0), ([0, 0, 0, 1, 1, 1, 1, 0].to_vec(), 0)];
    let cb = CodebookPair::from_parts(&m, &cfg, &wide, 1, &c2[..1], 1).unwrap();
    assert_eq!(decode(0, 0, &cb, &m), Err(DecodeError::Ambiguous(2)));
}

#[test]
fn degree_events_on_fixed_graphs() {
    let cfg = CodecConfig::new(4, 0.1, 0.01, flat(0.5), 0);
    assert_eq!(check_degree_events(&BipartiteGraph::complete(4, 4), &cfg), (false, false));
    assert_eq!(check_degree_events(&BipartiteGraph::new(4, 4, vec![]).unwrap(), &cfg), (true, true));
}

fn random_graph(n1: usize, n2: usize, density: f64, seed: u64) -> BipartiteGraph {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = (0..n1 as u32)
        .flat_map(|i| (0..n2 as u32).map(move |j| (i, j)))
        .filter(|_| rng.gen_bool(density))
        .collect();
    BipartiteGraph::new(n1, n2, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_events_agree_with_the_semi_regular_check(
        e1 in 1u32..4, e2 in 1u32..4, density in 0.05f64..1.0, eps_prime in 0.02f64..0.6, seed in 0u64..1000,
    ) {
        let n = 4;
        let g = random_graph(1 << e1, 1 << e2, density, seed);
        let r1p = e1 as f64 / n as f64 * 0.8;
        let r2p = e2 as f64 / n as f64 * 0.7;
        let rates = Rates { r1: e1 as f64 / n as f64, r2: 0.0, r1p, r2p: 0.0 };
        let rates = Rates { r2: rates.r1 + r2p - r1p, r2p, ..rates };
        prop_assume!(rates.r2 >= 0.0);
        let cfg = CodecConfig::new(n, 0.1, eps_prime, rates, 0);
        let (ev1, ev2) = check_degree_events(&g, &cfg);
        let params = SemiRegularParams::from_exponents(
            e1 as f64, e2 as f64, n as f64 * r1p, n as f64 * r2p, n as f64 * eps_prime,
        ).unwrap();
        let report = check_nearly_semi_regular(&g, &params);
        prop_assert_eq!(report.passed, !ev1 && !ev2);
    }
}

#[test]
fn monte_carlo_is_deterministic() {
    let m = lossy();
    let cfg = CodecConfig::new(10, 0.3, 0.5, flat(0.5), 77);
    let a = serde_json::to_string(&run_monte_carlo(&m, &cfg, 200).unwrap()).unwrap();
    let b = serde_json::to_string(&run_monte_carlo(&m, &cfg, 200).unwrap()).unwrap();
    assert_eq!(a, b);
    // Trial t does not depend on how many trials run.
    let cb = generate_codebooks(&m, &cfg).unwrap();
    let short = run_trials(&m, &cfg, &cb, 20).unwrap();
    let long = run_trials(&m, &cfg, &cb, 60).unwrap();
    assert_eq!(short[..], long[..20]);
}

#[test]
fn source_atypicality_falls_with_block_length() {
    // X1 constant, X2 a fair coin: only the X2 counts matter.
    let one = Alphabet::new(["a"]).unwrap();
    let src = JointPmf::new(vec![one, Alphabet::binary()], vec![0.5, 0.5]).unwrap();
    let m = SourceModel::new(
        src,
        CondPmf::constant(Alphabet::binary(), Alphabet::indexed(1)),
        ReconMap::from_v(1, 1),
        DistortionMatrix::hamming(2),
    )
    .unwrap();
    let e3: Vec<f64> = [8, 12, 16]
        .iter()
        .map(|&n| {
            let cfg = CodecConfig::new(n, 0.5, 0.5, flat(0.0), 5);
            run_monte_carlo(&m, &cfg, 4000).unwrap().e3
        })
        .collect();
    assert!(e3[0] > e3[1] && e3[1] > e3[2], "{e3:?}");
    // Binomial tails: P(|k - n/2| > n/4).
    let exact = [18.0 / 256.0, 158.0 / 4096.0, 1394.0 / 65536.0];
    for (got, want) in e3.iter().zip(exact) {
        assert!((got - want).abs() < 0.015, "{got} vs {want}");
    }
}

#[test]
fn rates_far_above_the_region_decode_reliably() {
    // X1 = X2 a fair coin, V = X2. Every rate is one bit above its bound.
    let src = JointPmf::new(vec![Alphabet::binary(), Alphabet::binary()], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
    let m = model(src, CondPmf::identity(Alphabet::binary()));
    let rates = Rates {
        r1: 2.0,
        r2: 2.0,
        r1p: 1.0,
        r2p: 1.0,
    };
    let cfg = CodecConfig::new(12, 0.75, 0.5, rates, 13);
    let s = run_monte_carlo(&m, &cfg, 500).unwrap();
    assert!(s.decode_error_rate < 0.05, "{s:?}");
    assert_eq!(s.lossless_violations, 0);
}

#[test]
fn lossless_whenever_no_event_fires() {
    for (m, eps) in [(lossless(), 0.2), (lossy(), 0.3)] {
        let cfg = CodecConfig::new(12, eps, 0.5, flat(0.9), 31);
        let cb = generate_codebooks(&m, &cfg).unwrap();
        for r in run_trials(&m, &cfg, &cb, 300).unwrap() {
            if r.success && r.e6 == Some(false) && r.e7 == Some(false) {
                assert!(r.lossless, "{r:?}");
            }
            assert!(r.distortion_x1 <= 1.0 && r.distortion_x2 >= 0.0);
        }
    }
}

#[test]
fn typical_distortion_range_matches_enumeration() {
    let m = lossy();
    let cfg = CodecConfig {
        markov_k: 2.0,
        ..CodecConfig::new(4, 0.5, 0.5, flat(0.5), 0)
    };
    let (lo, hi) = typical_distortion_range(&m, &cfg).unwrap();
    let mass = m.joint.mass();
    let mut seen = (f64::INFINITY, f64::NEG_INFINITY);
    for code in 0..(1u32 << 12) {
        let bit = |k: u32| ((code >> k) & 1) as u8;
        let x1: Vec<u8> = (0..4).map(|m| bit(m)).collect();
        let x2: Vec<u8> = (0..4).map(|m| bit(4 + m)).collect();
        let v: Vec<u8> = (0..4).map(|m| bit(8 + m)).collect();
        if typical(mass, &[2, 2, 2], &[&x1, &x2, &v], 1.0) {
            let d = x2.iter().zip(&v).filter(|(a, b)| a != b).count() as f64 / 4.0;
            seen = (seen.0.min(d), seen.1.max(d));
        }
    }
    assert_eq!((lo, hi), seen);
}

#[test]
fn measured_distortion_respects_the_bound() {
    let m = lossy();
    // ε̃ = 1.2 keeps the rare (x1, x2, v) cells satisfiable at n = 12.
    let cfg = CodecConfig {
        markov_k: 4.0,
        ..CodecConfig::new(12, 0.3, 0.5, Rates::from_point(&point_d(&m), 0.2), 2)
    };
    let s = run_monte_carlo(&m, &cfg, 300).unwrap();
    assert!(s.eps_star.is_finite());
    assert!(s.tau_x2 <= s.distortion_bound + 0.05, "{s:?}");
}

#[test]
fn zero_trials_is_a_config_error() {
    let cfg = CodecConfig::new(8, 0.2, 0.5, flat(0.5), 0);
    assert!(matches!(run_monte_carlo(&lossless(), &cfg, 0), Err(bycm::Error::Config(_))));
}
