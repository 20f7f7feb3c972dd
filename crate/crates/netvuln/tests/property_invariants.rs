//! Property-based invariants over random inputs: interning-independent
//! graph construction, symmetrization against a brute-force weight map,
//! order preservation of score normalization, and probability-range
//! guarantees of the vulnerability formulas.

use std::collections::HashMap;

use proptest::prelude::*;

use netvuln::graph::build_graph;
use netvuln::trust::{normalize_scores, RawTrustScores, TrustScores, TsmParams};
use netvuln::vulnerability::{community_vulnerability, node_vulnerability};

fn edge_strategy(n: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec(
        (0..n, 0..n, 0.01f64..10.0),
        0..40,
    )
}

/// All node names interned up front via self-loop tuples, so edge order
/// cannot change node ids.
fn graph_from(n: usize, edges: &[(usize, usize, f64)]) -> netvuln::graph::DirectedGraph {
    let names: Vec<String> = (0..n).map(|v| v.to_string()).collect();
    build_graph(
        names
            .iter()
            .map(|s| (s.clone(), s.clone(), None))
            .chain(
                edges
                    .iter()
                    .map(|&(u, v, w)| (names[u].clone(), names[v].clone(), Some(w))),
            ),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn edge_order_does_not_change_the_graph(
        edges in edge_strategy(12),
        rotation in 0usize..40,
    ) {
        let n = 12;
        let mut rotated = edges.clone();
        if !rotated.is_empty() {
            let by = rotation % rotated.len();
            rotated.rotate_left(by);
        }
        let a = graph_from(n, &edges);
        let b = graph_from(n, &rotated);
        prop_assert_eq!(a.edge_count(), b.edge_count());
        // duplicate edges get summed in input order, so weights may
        // differ by an ulp; structure must match exactly
        for v in a.nodes() {
            for (x, y) in [(a.out(v), b.out(v)), (a.incoming(v), b.incoming(v))] {
                prop_assert_eq!(x.len(), y.len());
                for (&(n1, w1), &(n2, w2)) in x.iter().zip(y) {
                    prop_assert_eq!(n1, n2);
                    prop_assert!((w1 - w2).abs() <= 1e-12 * w1.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn symmetrize_matches_brute_force(edges in edge_strategy(10)) {
        let n = 10;
        let g = graph_from(n, &edges);
        let view = g.symmetrize();

        // brute force: weight {u, v} = w(u, v) + w(v, u), self-loops gone
        let mut expect: HashMap<(u32, u32), f64> = HashMap::new();
        for &(u, v, w) in &edges {
            if u == v {
                continue;
            }
            let key = (u.min(v) as u32, u.max(v) as u32);
            *expect.entry(key).or_insert(0.0) += w;
        }
        let mut seen = 0usize;
        let mut total = 0.0;
        for u in g.nodes() {
            for &(v, w) in view.neighbors(u) {
                prop_assert_ne!(u, v);
                let key = (u.min(v), u.max(v));
                let want = expect[&key];
                prop_assert!((w - want).abs() < 1e-12, "{{{u},{v}}}: {w} vs {want}");
                if u < v {
                    seen += 1;
                    total += w;
                }
            }
        }
        prop_assert_eq!(seen, expect.len());
        prop_assert_eq!(view.edge_count(), expect.len());
        prop_assert!((view.total_weight() - total).abs() < 1e-9);
    }

    #[test]
    fn normalization_preserves_order_and_range(
        ti in prop::collection::vec(1e-12f64..1e6, 1..30),
        tw in prop::collection::vec(1e-12f64..1e6, 1..30),
    ) {
        let n = ti.len().min(tw.len());
        let raw = RawTrustScores {
            ti: ti[..n].to_vec(),
            tw: tw[..n].to_vec(),
            iterations_run: 1,
            converged: true,
        };
        let p = TsmParams::default();
        let ts = normalize_scores(&raw, &p);
        for slice in [ts.ti_slice(), ts.tw_slice()] {
            for &x in slice {
                prop_assert!((p.log_floor..=1.0).contains(&x), "{x} out of range");
            }
        }
        for i in 0..n {
            for j in 0..n {
                if raw.ti[i] < raw.ti[j] {
                    prop_assert!(ts.ti_slice()[i] <= ts.ti_slice()[j]);
                }
                if raw.tw[i] < raw.tw[j] {
                    prop_assert!(ts.tw_slice()[i] <= ts.tw_slice()[j]);
                }
            }
        }
    }

    #[test]
    fn node_vulnerability_is_a_probability(
        ti in prop::collection::vec(1e-9f64..=1.0, 2..16),
        tw in prop::collection::vec(1e-9f64..=1.0, 2..16),
    ) {
        let n = ti.len().min(tw.len());
        let ts = TrustScores::new(ti[..n].to_vec(), tw[..n].to_vec()).unwrap();
        let neighbors: Vec<u32> = (1..n as u32).collect();
        let v = node_vulnerability(&ts, 0, &neighbors);
        prop_assert!((0.0..=1.0).contains(&v), "{v}");
    }

    #[test]
    fn community_vulnerability_is_order_insensitive(
        scores in prop::collection::vec(0.0f64..=1.0, 0..12),
        rotation in 0usize..12,
    ) {
        let forward = community_vulnerability(&scores).unwrap();
        prop_assert!((0.0..=1.0).contains(&forward));
        let mut rotated = scores.clone();
        if !rotated.is_empty() {
            let by = rotation % rotated.len();
            rotated.rotate_left(by);
        }
        let other = community_vulnerability(&rotated).unwrap();
        prop_assert!((forward - other).abs() < 1e-12);
        // never below its largest input
        if let Some(max) = scores.iter().cloned().fold(None::<f64>, |m, x| {
            Some(m.map_or(x, |m| m.max(x)))
        }) {
            prop_assert!(forward >= max - 1e-15);
        }
    }
}
