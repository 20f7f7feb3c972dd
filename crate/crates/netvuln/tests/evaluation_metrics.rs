//! Ranking metric fixtures and oracles: precision/AP examples, an
//! independent pair-enumeration check for tie-aware Kendall's tau, and
//! the tie handling of the T/U counts.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netvuln::evaluation::{
    ap_at_k, average_precision, ground_truth_community_ranking, kendall_tau,
    mean_average_precision, mean_average_precision_literal, precision_at_k, RankedList,
    SpreaderSet, TauOutcome,
};
use netvuln::graph::build_graph;
use netvuln::roles::{classify_roles, EdgeSemantics};
use netvuln::community::CommunityAssignment;

fn ranked(items: &[(u32, f64)]) -> RankedList {
    RankedList::from_scores(items.to_vec())
}

fn truth(items: &[u32]) -> BTreeSet<u32> {
    items.iter().copied().collect()
}

#[test]
fn precision_examples() {
    // ranked [s, x, s] with s = {0, 2}
    let r = ranked(&[(0, 3.0), (1, 2.0), (2, 1.0)]);
    let t = truth(&[0, 2]);
    assert_eq!(precision_at_k(&r, &t, 2).unwrap(), 0.5);
    assert_eq!(precision_at_k(&r, &t, 1).unwrap(), 1.0);
    // truncation: k = 5 over a 3-item list with 1 spreader
    let t1 = truth(&[2]);
    assert!((precision_at_k(&r, &t1, 5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!(precision_at_k(&r, &t1, 0).is_err());
}

#[test]
fn ap_at_k_averages_eligible_communities() {
    let a = (ranked(&[(0, 2.0), (1, 1.0)]), truth(&[0]));
    let b = (ranked(&[(2, 2.0), (3, 1.0)]), truth(&[3]));
    let both = vec![a.clone(), b];
    assert_eq!(ap_at_k(&both, 1).unwrap(), 0.5);
    // single community: AP@k = its P@k
    assert_eq!(ap_at_k(&[a], 1).unwrap(), 1.0);
    // no eligible community
    let none = vec![(ranked(&[(0, 1.0)]), truth(&[]))];
    assert!(ap_at_k(&none, 1).is_err());
}

#[test]
fn average_precision_examples() {
    assert_eq!(
        average_precision(&ranked(&[(0, 1.0)]), &truth(&[0]), 15),
        Some(1.0)
    );
    // ranked [x, s]: AP = (0 + 1/2) / 1
    assert_eq!(
        average_precision(&ranked(&[(1, 2.0), (0, 1.0)]), &truth(&[0]), 2),
        Some(0.5)
    );
    assert_eq!(average_precision(&ranked(&[(0, 1.0)]), &truth(&[]), 2), None);
}

/// Brute-force AP by direct summation, written independently of the
/// library path.
fn ap_oracle(order: &[u32], truth: &BTreeSet<u32>, k_max: usize) -> Option<f64> {
    let relevant = order.iter().filter(|i| truth.contains(i)).count();
    if relevant == 0 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..order.len().min(k_max) {
        if truth.contains(&order[i]) {
            let precision_here =
                order[..=i].iter().filter(|x| truth.contains(x)).count() as f64 / (i + 1) as f64;
            sum += precision_here;
        }
    }
    Some(sum / relevant.min(k_max) as f64)
}

#[test]
fn random_lists_match_ap_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..300 {
        let n = rng.gen_range(1..=6);
        let scores: Vec<(u32, f64)> = (0..n).map(|i| (i, rng.gen::<f64>())).collect();
        let list = RankedList::from_scores(scores);
        let t: BTreeSet<u32> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        let k_max = rng.gen_range(1..=8);
        let order: Vec<u32> = list.items().collect();
        assert_eq!(average_precision(&list, &t, k_max), ap_oracle(&order, &t, k_max));
    }
}

#[test]
fn map_perfect_ranking_is_one() {
    let per = vec![
        (ranked(&[(0, 3.0), (1, 2.0), (2, 1.0)]), truth(&[0, 1])),
        (ranked(&[(3, 2.0), (4, 1.0)]), truth(&[3])),
    ];
    assert_eq!(mean_average_precision(&per, 15).unwrap(), 1.0);
    let literal = mean_average_precision_literal(&per, 3).unwrap();
    assert!(literal > 0.0 && literal <= 1.0);
}

// ---------------------------------------------------------------------------
// Kendall's tau

#[test]
fn tau_perfect_and_reversed() {
    match kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() {
        TauOutcome::Defined { tau, .. } => assert_eq!(tau, 1.0),
        other => panic!("{other:?}"),
    }
    match kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() {
        TauOutcome::Defined { tau, .. } => assert_eq!(tau, -1.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn tau_worked_tie_example() {
    // rel = [1,1,2], ret = [1,2,3]: P=2, Q=0, T=1, U=0, tau = 2/sqrt(6)
    match kendall_tau(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap() {
        TauOutcome::Defined { tau, counts } => {
            assert_eq!(counts.concordant, 2);
            assert_eq!(counts.discordant, 0);
            assert_eq!(counts.ties_rel, 1);
            assert_eq!(counts.ties_ret, 0);
            assert!((tau - 2.0 / 6.0f64.sqrt()).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn tau_undefined_is_distinct() {
    // one list entirely tied: denominator collapses on one side only when
    // the other side also has no untied pairs
    match kendall_tau(&[1.0, 1.0], &[1.0, 2.0]).unwrap() {
        TauOutcome::Undefined { counts } => {
            assert_eq!(counts.ties_rel, 1);
        }
        other => panic!("{other:?}"),
    }
    assert!(kendall_tau(&[1.0], &[1.0]).is_err());
    assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
}

/// Independent O(n^2) enumeration using sign products.
fn tau_oracle(rel: &[f64], ret: &[f64]) -> (i64, i64, i64, i64, Option<f64>) {
    let n = rel.len();
    let (mut p, mut q, mut t, mut u) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dr = rel[i] - rel[j];
            let ds = ret[i] - ret[j];
            if dr == 0.0 && ds == 0.0 {
                continue;
            } else if dr == 0.0 {
                t += 1;
            } else if ds == 0.0 {
                u += 1;
            } else if dr * ds > 0.0 {
                p += 1;
            } else {
                q += 1;
            }
        }
    }
    let denom = (((p + q + t) as f64) * ((p + q + u) as f64)).sqrt();
    let tau = if denom == 0.0 {
        None
    } else {
        Some((p - q) as f64 / denom)
    };
    (p, q, t, u, tau)
}

#[test]
fn tau_matches_enumeration_oracle_on_random_tied_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..1000 {
        let n = rng.gen_range(2..=50);
        // small rank alphabet forces plenty of ties
        let rel: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=6) as f64).collect();
        let ret: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=6) as f64).collect();
        let (p, q, t, u, tau) = tau_oracle(&rel, &ret);
        let outcome = kendall_tau(&rel, &ret).unwrap();
        let counts = outcome.counts();
        assert_eq!(counts.concordant as i64, p, "trial {trial}");
        assert_eq!(counts.discordant as i64, q);
        assert_eq!(counts.ties_rel as i64, t);
        assert_eq!(counts.ties_ret as i64, u);
        match (outcome.value(), tau) {
            (Some(a), Some(b)) => assert_eq!(a, b, "trial {trial}"),
            (None, None) => {}
            other => panic!("trial {trial}: {other:?}"),
        }
    }
}

#[test]
fn tau_swapping_arguments_swaps_tie_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=4) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=4) as f64).collect();
        let ab = kendall_tau(&a, &b).unwrap().counts();
        let ba = kendall_tau(&b, &a).unwrap().counts();
        assert_eq!(ab.ties_rel, ba.ties_ret);
        assert_eq!(ab.ties_ret, ba.ties_rel);
        assert_eq!(ab.concordant, ba.concordant);
        assert_eq!(ab.discordant, ba.discordant);
    }
}

#[test]
fn precision_monotone_under_truth_growth() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..200 {
        let n = rng.gen_range(1..=10);
        let list = RankedList::from_scores((0..n).map(|i| (i, rng.gen::<f64>())).collect());
        let mut t: BTreeSet<u32> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        let k = rng.gen_range(1..=12);
        let before = precision_at_k(&list, &t, k).unwrap();
        let addition = rng.gen_range(0..n);
        t.insert(addition);
        let after = precision_at_k(&list, &t, k).unwrap();
        assert!(after >= before);
    }
}

// ---------------------------------------------------------------------------
// Ground-truth community ranking

#[test]
fn ground_truth_fraction_ranking() {
    // community 0: boundary {a, b}; community 1: no boundary;
    // community 2: boundary {e} all spreaders
    let g = build_graph([
        ("a", "x", None),
        ("b", "x", None),
        ("c", "d", None),
        ("d", "c", None),
        ("e", "x", None),
    ])
    .unwrap();
    let labels: Vec<u32> = g
        .nodes()
        .map(|v| match g.external_id(v) {
            "a" | "b" => 0,
            "c" | "d" => 1,
            "e" => 2,
            _ => 3,
        })
        .collect();
    let a = CommunityAssignment::from_labels(&labels);
    let roles = classify_roles(&g, &a, EdgeSemantics::FollowOut).unwrap();
    let truth = SpreaderSet::new(
        [g.resolve("a").unwrap(), g.resolve("e").unwrap()]
            .into_iter()
            .collect(),
    );
    let ranking = ground_truth_community_ranking(&roles, &truth);
    let scores: std::collections::HashMap<u32, f64> =
        ranking.entries().iter().copied().collect();
    // labels are compacted by first appearance, so look them up per node
    let c_ab = a.label(g.resolve("a").unwrap());
    let c_cd = a.label(g.resolve("c").unwrap());
    let c_e = a.label(g.resolve("e").unwrap());
    assert_eq!(scores[&c_ab], 0.5);
    assert_eq!(scores[&c_cd], 0.0);
    assert_eq!(scores[&c_e], 1.0);
    // ranked order: highest fraction first
    assert_eq!(ranking.entries()[0].0, c_e);
}
