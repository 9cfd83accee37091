use super::*;
use crate::road_network::{load_network, EdgeRecord, NetworkFile, NodeRecord};
use crate::rng::stream;
use crate::single_track::Sample;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn straight_road(len: f64) -> RoadNetwork {
    load_network(NetworkFile {
        crs: None,
        nodes: vec![NodeRecord { id: 0, x: 0.0, y: 0.0 }, NodeRecord { id: 1, x: len, y: 0.0 }],
        edges: vec![EdgeRecord { id: 0, from: 0, to: 1, speed_limit: 10.0, oneway: false, geometry: None }],
    })
    .unwrap()
}

fn track(points: &[(f64, f64)]) -> Track {
    Track::from_ordered_points(points.iter().map(|&(x, y)| Point::new(x, y))).unwrap()
}

fn exact_cfg() -> MatchConfig {
    MatchConfig::default().with_lambda(0.0)
}

/// Pairwise definition, quadratic.
fn consistency_brute(a: &[usize], b: &[usize]) -> i64 {
    let pa = |x: usize| a.iter().position(|&y| y == x);
    let pb = |x: usize| b.iter().position(|&y| y == x);
    let common: Vec<usize> = a.iter().copied().filter(|&x| pb(x).is_some()).collect();
    let mut s = 0;
    for i in 0..common.len() {
        for j in i + 1..common.len() {
            let (x, y) = (common[i], common[j]);
            let agree = (pa(x) < pa(y)) == (pb(x) < pb(y));
            s += if agree { 1 } else { -1 };
        }
    }
    s
}

fn random_partial_order(rng: &mut impl Rng, universe: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..universe).filter(|_| rng.gen_bool(0.7)).collect();
    v.shuffle(rng);
    v
}

#[test]
fn consistency_examples() {
    let a = vec![0, 1, 2, 3, 4];
    let rev: Vec<usize> = a.iter().rev().copied().collect();
    assert_eq!(consistency_score(&a, &a), 10);
    assert_eq!(consistency_score(&a, &rev), -10);
    assert_eq!(consistency_score(&[1, 2, 3], &[2, 1, 3]), 1);
    assert_eq!(consistency_score(&[1, 2], &[3, 4]), 0);
}

#[test]
fn consistency_fuzz() {
    let mut rng = stream(11);
    for _ in 0..10_000 {
        let a = random_partial_order(&mut rng, 9);
        let b = random_partial_order(&mut rng, 9);
        let s = consistency_score(&a, &b);
        assert_eq!(s, consistency_brute(&a, &b));
        assert_eq!(s, consistency_score(&b, &a));
        let c = a.iter().filter(|x| b.contains(x)).count() as i64;
        assert!(s.abs() <= c * (c - 1) / 2);
    }
}

#[test]
fn score_matrix_is_antisymmetric() {
    let mut rng = stream(12);
    for _ in 0..10_000 {
        let orders: Vec<Ordering> = (0..rng.gen_range(1..5)).map(|_| random_partial_order(&mut rng, 6)).collect();
        let sm = ScoreMatrix::new(&orders);
        for i in 0..sm.len() {
            assert_eq!(sm.get(i, i), 0);
            for j in 0..sm.len() {
                assert_eq!(sm.get(i, j), -sm.get(j, i));
            }
        }
    }
}

#[test]
fn score_equals_sum_of_consistencies() {
    let mut rng = stream(13);
    for _ in 0..200 {
        let orders: Vec<Ordering> = (0..4).map(|_| random_partial_order(&mut rng, 8)).collect();
        let sm = ScoreMatrix::new(&orders);
        let mut perm: Vec<usize> = (0..sm.len()).collect();
        perm.shuffle(&mut rng);
        let global: Vec<usize> = perm.iter().map(|&i| sm.elements[i]).collect();
        let direct: i64 = orders.iter().map(|o| consistency_score(&global, o)).sum();
        assert_eq!(sm.score(&perm), direct);
    }
}

#[test]
fn swap_gain_matches_rescoring() {
    let mut rng = stream(14);
    for _ in 0..200 {
        let orders: Vec<Ordering> = (0..5).map(|_| random_partial_order(&mut rng, 7)).collect();
        let sm = ScoreMatrix::new(&orders);
        let mut perm: Vec<usize> = (0..sm.len()).collect();
        perm.shuffle(&mut rng);
        for p in 0..perm.len() {
            for q in p + 1..perm.len() {
                let mut swapped = perm.clone();
                swapped.swap(p, q);
                assert_eq!(sm.swap_gain(&perm, p, q), sm.score(&swapped) - sm.score(&perm));
            }
        }
    }
}

#[test]
fn identical_orders_aggregate_to_themselves() {
    let order = vec![4, 2, 7, 0, 9, 1];
    let out = aggregate_orders(&vec![order.clone(); 5], 100, &mut stream(1)).unwrap();
    assert_eq!(out, order);
    let single = aggregate_orders(std::slice::from_ref(&order), 1, &mut stream(1)).unwrap();
    assert_eq!(single, order);
}

#[test]
fn consensus_dominates_inputs() {
    let mut rng = stream(15);
    for _ in 0..100 {
        let orders: Vec<Ordering> = (0..4).map(|_| random_partial_order(&mut rng, 10)).collect();
        let sm = ScoreMatrix::new(&orders);
        let best = consensus_permutation(&sm, &orders, 30, &mut rng);
        let mut sorted = best.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..sm.len()).collect::<Vec<_>>());
        for start in input_starts(&sm, &orders) {
            assert!(sm.score(&best) >= sm.score(&start));
        }
        let out = aggregate_orders(&orders, 30, &mut rng).unwrap();
        let mut unique = out.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), out.len());
    }
}

#[test]
fn heaviest_chain_skips_contested_element() {
    // Elements 0..3 agreed on by all; element 9 placed inconsistently.
    let orders = vec![vec![0, 9, 1, 2], vec![0, 1, 9, 2], vec![9, 0, 1, 2], vec![0, 1, 2, 9]];
    let out = aggregate_orders(&orders, 50, &mut stream(2)).unwrap();
    let core: Vec<usize> = out.iter().copied().filter(|&x| x != 9).collect();
    assert_eq!(core, vec![0, 1, 2]);
}

#[test]
fn path_graph_fiedler() {
    let l = [1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0];
    let (value, v) = fiedler_vector(&l, 3).unwrap();
    assert!((value - 1.0).abs() < 1e-12);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in v.iter().zip([h, 0.0, -h]) {
        assert!((a - b).abs() < 1e-12, "{v:?}");
    }
}

fn random_distances(rng: &mut impl Rng, n: usize) -> DistanceMatrix {
    let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0))).collect();
    DistanceMatrix::from_fn(n, |i, j| crate::geometry::distance(pts[i], pts[j])).unwrap()
}

#[test]
fn fiedler_against_nalgebra() {
    let mut rng = stream(16);
    for _ in 0..30 {
        let n = rng.gen_range(2..30);
        let d = random_distances(&mut rng, n);
        let l = laplacian(&d, ScaleRule::Median);
        let max = l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            let row: f64 = (0..n).map(|j| l[i * n + j]).sum();
            assert!(row.abs() <= 1e-9 * max);
        }
        let (value, v) = fiedler_vector(&l, n).unwrap();
        let lm = DMatrix::from_row_slice(n, n, &l);
        let resid = &lm * nalgebra::DVector::from_column_slice(&v) - nalgebra::DVector::from_column_slice(&v) * value;
        assert!(resid.norm() <= 1e-8, "{}", resid.norm());
        assert!(v.iter().sum::<f64>().abs() <= 1e-9);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        let mut oracle: Vec<f64> = lm.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        assert!((value - oracle[1]).abs() <= 1e-8 * oracle[n - 1].max(1.0));
    }
}

#[test]
fn two_points_keep_index_order() {
    let d = DistanceMatrix::from_fn(2, |_, _| 5.0).unwrap();
    assert_eq!(laplacian_order(&d, ScaleRule::Median).unwrap(), vec![0, 1]);
    let one = DistanceMatrix::from_fn(1, |_, _| 0.0).unwrap();
    assert!(laplacian_order(&one, ScaleRule::Median).is_err());
}

fn reversed_or_equal(order: &[usize], truth: &[usize]) -> bool {
    order == truth || order.iter().rev().eq(truth.iter())
}

#[test]
fn collinear_points_are_seriated() {
    let xs: [f64; 6] = [0.0, 35.0, 50.0, 120.0, 130.0, 300.0];
    let mut perm: Vec<usize> = (0..6).collect();
    perm.shuffle(&mut stream(3));
    let d = DistanceMatrix::from_fn(6, |i, j| (xs[perm[i]] - xs[perm[j]]).abs()).unwrap();
    let order = laplacian_order(&d, ScaleRule::Median).unwrap();
    let recovered: Vec<usize> = order.iter().map(|&k| perm[k]).collect();
    assert!(reversed_or_equal(&recovered, &[0, 1, 2, 3, 4, 5]), "{recovered:?}");
}

#[test]
fn median_scale_is_scale_free() {
    let mut rng = stream(17);
    for _ in 0..20 {
        let n = rng.gen_range(3..20);
        let d = random_distances(&mut rng, n);
        let scaled = DistanceMatrix::from_fn(n, |i, j| 7.5 * d.get(i, j)).unwrap();
        assert_eq!(laplacian_order(&d, ScaleRule::Median).unwrap(), laplacian_order(&scaled, ScaleRule::Median).unwrap());
    }
}

#[test]
fn distance_matrix_validation() {
    assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    assert!(DistanceMatrix::new(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
    assert!(DistanceMatrix::new(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
    assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
}

#[test]
fn hand_computed_distance_matrix() {
    let net = straight_road(1000.0);
    let ts = TrackSet::new(vec![track(&[(100.0, 10.0), (300.0, -5.0)]), track(&[(200.0, 20.0), (400.0, 0.0)])]).unwrap();
    let d = build_distance_matrix(&net, &ts, &exact_cfg()).unwrap();
    // Path A runs x = 100..300, path B x = 200..400.
    let a0_b0 = 0.5 * ((10.0 + 20.0 + 100.0) + (100f64.hypot(10.0) + 20.0));
    assert!((d.get(0, 2) - a0_b0).abs() < 1e-6);
    assert!((d.get(0, 1) - 215.0).abs() < 1e-6);
    // B1 lies 100 m past the end of path A.
    let a1_b1 = 0.5 * ((5.0 + 100.0 + 0.0) + (5.0 + 0.0 + 100.0));
    assert!((d.get(1, 3) - a1_b1).abs() < 1e-6);
    for i in 0..4 {
        assert_eq!(d.get(i, i), 0.0);
    }
}

#[test]
fn on_path_pair_distance_is_arc_gap() {
    let net = straight_road(1000.0);
    let ts = TrackSet::new(vec![track(&[(10.0, 0.0), (50.0, 0.0)])]).unwrap();
    let d = build_distance_matrix(&net, &ts, &exact_cfg()).unwrap();
    assert!((d.get(0, 1) - 40.0).abs() < 1e-9);
}

#[test]
fn initial_track_selection() {
    let full = track(&[(0.0, 0.0), (500.0, 0.0), (1000.0, 0.0)]);
    let left = track(&[(0.0, 5.0), (400.0, 5.0)]);
    let right = track(&[(600.0, -5.0), (1000.0, -5.0)]);
    assert_eq!(select_initial_track(&[left.clone(), full.clone(), right.clone()]), 1);
    assert_eq!(select_initial_track(&[left.clone(), left.clone()]), 0);
    assert_eq!(select_initial_track(&[right]), 0);
}

#[test]
fn single_track_orders_by_time() {
    let net = straight_road(1000.0);
    let t = track(&[(100.0, 30.0), (90.0, -30.0), (300.0, 0.0)]);
    let ts = TrackSet::new(vec![t.clone()]).unwrap();
    assert_eq!(iterative_projection_order(&net, &ts, &exact_cfg(), 20).unwrap(), vec![0, 1, 2]);
    for m in Method::ALL {
        let cfg = MultiConfig { matching: exact_cfg(), ..MultiConfig::default() };
        assert_eq!(match_multi(&net, &ts, m, &cfg).unwrap(), match_track(&net, &t, &exact_cfg()).unwrap());
    }
}

#[test]
fn noiseless_interleaved_tracks_on_straight_road() {
    let net = straight_road(2000.0);
    let a = track(&[(100.0, 0.0), (500.0, 0.0), (900.0, 0.0), (1300.0, 0.0)]);
    let b = track(&[(300.0, 0.0), (700.0, 0.0), (1100.0, 0.0), (1500.0, 0.0)]);
    let ts = TrackSet::new(vec![a, b]).unwrap();
    let truth = vec![0, 4, 1, 5, 2, 6, 3, 7];
    assert_eq!(iterative_projection_order(&net, &ts, &exact_cfg(), 20).unwrap(), truth);
    let d = build_distance_matrix(&net, &ts, &exact_cfg()).unwrap();
    assert!(reversed_or_equal(&laplacian_order(&d, ScaleRule::Median).unwrap(), &truth));
}

#[test]
fn boosting_with_full_inclusion_agrees_with_base() {
    let net = straight_road(2000.0);
    let a = track(&[(100.0, 8.0), (500.0, -3.0), (900.0, 4.0), (1300.0, 0.0)]);
    let b = track(&[(300.0, -6.0), (700.0, 2.0), (1100.0, 7.0), (1500.0, -1.0)]);
    let ts = TrackSet::new(vec![a, b]).unwrap();
    let cfg = MultiConfig {
        matching: exact_cfg(),
        boost: BoostConfig { inclusion_prob: 1.0, ..BoostConfig::default() },
        ..MultiConfig::default()
    };
    let base = iterative_projection_order(&net, &ts, &exact_cfg(), 20).unwrap();
    let boosted = boost(&net, &ts, BaseMethod::Iterative, &cfg).unwrap();
    let restricted: Vec<usize> = base.iter().copied().filter(|x| boosted.contains(x)).collect();
    assert_eq!(boosted, restricted);
    assert_eq!(boosted, boost(&net, &ts, BaseMethod::Iterative, &cfg).unwrap());
}

#[test]
fn subsamples_have_two_or_more_elements() {
    let cfg = BoostConfig { inclusion_prob: 0.05, subsamples: 50, ..BoostConfig::default() };
    for s in draw_subsamples(10, &cfg, &mut stream(4)) {
        assert!(s.len() >= 2);
    }
    assert!(BoostConfig { inclusion_prob: 0.0, ..BoostConfig::default() }.validate().is_err());
    assert!(BoostConfig { subsamples: 0, ..BoostConfig::default() }.validate().is_err());
}

#[test]
fn section_file_round_trip() {
    let ts = TrackSet::new(vec![
        Track::new(vec![Sample { t: 1.0, loc: Point::new(1.0, 2.0) }, Sample { t: 3.0, loc: Point::new(3.0, 4.0) }]).unwrap(),
        Track::new(vec![Sample { t: 0.5, loc: Point::new(-1.0, 0.25) }]).unwrap(),
    ])
    .unwrap();
    let parsed = TrackSet::parse_sections(&ts.to_sections()).unwrap();
    assert_eq!(parsed, ts);
    assert_eq!(parsed.pooled()[2].track, 1);
    assert_eq!(parsed.pooled()[1].rank, 1);
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
        assert_eq!(Method::with_boost(m.base(), m.boosted()), m);
    }
    assert!("spectral".parse::<Method>().is_err());
}

proptest! {
    #[test]
    fn aggregated_orders_are_valid(seed in 0u64..1000, k in 1usize..6) {
        let mut rng = stream(seed);
        let orders: Vec<Ordering> = (0..k).map(|_| random_partial_order(&mut rng, 12)).collect();
        let out = aggregate_orders(&orders, 10, &mut rng).unwrap();
        let mut seen = std::collections::HashSet::new();
        for x in &out {
            prop_assert!(seen.insert(*x));
            prop_assert!(orders.iter().any(|o| o.contains(x)));
        }
    }
}
