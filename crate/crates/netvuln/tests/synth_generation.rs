//! Generator checks: determinism, exact edge sets at probability 0/1,
//! binomial edge-count bounds, and the planting strategies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netvuln::graph::Direction;
use netvuln::synth::{
    full_node_vulnerabilities, generate_sbm, plant_spreaders, PlantingStrategy, SbmParams,
};
use netvuln::trust::{compute_tsm, normalize_scores, TsmParams};

fn sbm(block_sizes: Vec<usize>, p_in: f64, p_out: f64, seed: u64, directed: bool) -> SbmParams {
    SbmParams {
        block_sizes,
        p_in,
        p_out,
        seed,
        directed,
    }
}

#[test]
fn probability_one_gives_directed_clique() {
    let (g, a) = generate_sbm(&sbm(vec![3], 1.0, 0.0, 0, true)).unwrap();
    assert_eq!(g.node_count(), 3);
    assert_eq!(g.edge_count(), 6);
    assert_eq!(a.community_count(), 1);
}

#[test]
fn probability_zero_cross_edges_disconnect_blocks() {
    let (g, a) = generate_sbm(&sbm(vec![2, 2], 1.0, 0.0, 1, true)).unwrap();
    assert_eq!(g.edge_count(), 4); // two directed 2-cliques
    for u in g.nodes() {
        for &(v, _) in g.neighbors(u, Direction::Out).unwrap() {
            assert_eq!(a.label(u), a.label(v));
        }
    }
}

#[test]
fn identical_params_and_seed_are_byte_identical() {
    let p = sbm(vec![25; 4], 0.3, 0.01, 42, true);
    let (g1, a1) = generate_sbm(&p).unwrap();
    let (g2, a2) = generate_sbm(&p).unwrap();
    assert_eq!(a1, a2);
    assert_eq!(g1.edge_count(), g2.edge_count());
    for v in g1.nodes() {
        assert_eq!(g1.out(v), g2.out(v));
        assert_eq!(g1.external_id(v), g2.external_id(v));
    }
}

#[test]
fn edge_counts_within_binomial_bounds() {
    // blocks 4 x 25, directed: in-block ordered pairs 4 * 25 * 24,
    // cross-block ordered pairs 100 * 99 - 2400
    let in_pairs = 4.0f64 * 25.0 * 24.0;
    let cross_pairs = 100.0 * 99.0 - in_pairs;
    let (p_in, p_out) = (0.3, 0.01);
    let mean = in_pairs * p_in + cross_pairs * p_out;
    let var = in_pairs * p_in * (1.0 - p_in) + cross_pairs * p_out * (1.0 - p_out);
    let sigma = var.sqrt();
    for seed in 0..10 {
        let (g, _) = generate_sbm(&sbm(vec![25; 4], p_in, p_out, seed, true)).unwrap();
        let observed = g.edge_count() as f64;
        assert!(
            (observed - mean).abs() < 4.0 * sigma,
            "seed {seed}: {observed} edges vs mean {mean:.1} (sigma {sigma:.1})"
        );
    }
}

#[test]
fn invalid_params_rejected() {
    assert!(generate_sbm(&sbm(vec![], 0.5, 0.1, 0, true)).is_err());
    assert!(generate_sbm(&sbm(vec![3, 0], 0.5, 0.1, 0, true)).is_err());
    assert!(generate_sbm(&sbm(vec![3], 0.1, 0.5, 0, true)).is_err());
    assert!(generate_sbm(&sbm(vec![3], 1.5, 0.1, 0, true)).is_err());
}

#[test]
fn rate_one_uniform_flags_everyone() {
    let (g, _) = generate_sbm(&sbm(vec![10], 0.5, 0.0, 3, true)).unwrap();
    let ts = normalize_scores(
        &compute_tsm(&g, &TsmParams::default()).unwrap(),
        &TsmParams::default(),
    );
    let set = plant_spreaders(&g, &ts, PlantingStrategy::UniformRandom { rate: 1.0 }, 0, None)
        .unwrap();
    assert_eq!(set.len(), g.node_count());
}

#[test]
fn planting_is_deterministic_per_seed() {
    let (g, _) = generate_sbm(&sbm(vec![20, 20], 0.3, 0.02, 5, true)).unwrap();
    let ts = normalize_scores(
        &compute_tsm(&g, &TsmParams::default()).unwrap(),
        &TsmParams::default(),
    );
    for strategy in [
        PlantingStrategy::UniformRandom { rate: 0.3 },
        PlantingStrategy::TrustWeighted { rate: 0.3 },
    ] {
        let a = plant_spreaders(&g, &ts, strategy, 17, None).unwrap();
        let b = plant_spreaders(&g, &ts, strategy, 17, None).unwrap();
        assert_eq!(a, b);
        let c = plant_spreaders(&g, &ts, strategy, 18, None).unwrap();
        // different seed almost surely differs on 40 nodes at rate 0.3
        assert_ne!(a, c);
    }
}

#[test]
fn boundary_biased_needs_boundary_and_respects_it() {
    let (g, _) = generate_sbm(&sbm(vec![10, 10], 0.5, 0.05, 6, true)).unwrap();
    let ts = normalize_scores(
        &compute_tsm(&g, &TsmParams::default()).unwrap(),
        &TsmParams::default(),
    );
    let strategy = PlantingStrategy::BoundaryBiased { rate: 1.0 };
    assert!(plant_spreaders(&g, &ts, strategy, 0, None).is_err());
    let boundary = [0u32, 3, 7];
    let set = plant_spreaders(&g, &ts, strategy, 0, Some(&boundary)).unwrap();
    assert_eq!(set.iter().collect::<Vec<_>>(), boundary);
}

#[test]
fn trust_weighted_planting_prefers_vulnerable_nodes() {
    // across seeded draws, flagged nodes under trust-weighted planting
    // average a higher full-neighborhood vulnerability than under
    // uniform planting, at comparable expected count
    let (g, _) = generate_sbm(&sbm(vec![50, 50], 0.2, 0.02, 7, true)).unwrap();
    let params = TsmParams::default();
    let ts = normalize_scores(&compute_tsm(&g, &params).unwrap(), &params);
    let scores = full_node_vulnerabilities(&g, &ts);

    let mean_score = |set: &netvuln::evaluation::SpreaderSet| -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        set.iter().map(|v| scores[v as usize]).sum::<f64>() / set.len() as f64
    };

    let mut trust_total = 0.0;
    let mut uniform_total = 0.0;
    let mut trust_count = 0usize;
    let mut uniform_count = 0usize;
    for seed in 0..100 {
        let t = plant_spreaders(&g, &ts, PlantingStrategy::TrustWeighted { rate: 0.2 }, seed, None)
            .unwrap();
        let u = plant_spreaders(&g, &ts, PlantingStrategy::UniformRandom { rate: 0.2 }, seed, None)
            .unwrap();
        trust_total += mean_score(&t);
        uniform_total += mean_score(&u);
        trust_count += t.len();
        uniform_count += u.len();
    }
    assert!(
        trust_total / 100.0 > uniform_total / 100.0,
        "trust-weighted mean {} vs uniform {}",
        trust_total / 100.0,
        uniform_total / 100.0
    );
    // expected counts stay comparable (within 25% of each other)
    let ratio = trust_count as f64 / uniform_count as f64;
    assert!((0.75..1.25).contains(&ratio), "count ratio {ratio}");
}

#[test]
fn undirected_mode_is_symmetric() {
    let (g, _) = generate_sbm(&sbm(vec![15, 15], 0.4, 0.03, 9, false)).unwrap();
    for u in g.nodes() {
        for &(v, w) in g.out(u) {
            assert_eq!(g.edge_weight(v, u), Some(w));
        }
    }
}

#[test]
fn rate_near_zero_flags_almost_nobody() {
    let (g, _) = generate_sbm(&sbm(vec![50], 0.2, 0.0, 11, true)).unwrap();
    let ts = normalize_scores(
        &compute_tsm(&g, &TsmParams::default()).unwrap(),
        &TsmParams::default(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let seed = rng.gen();
    let set = plant_spreaders(
        &g,
        &ts,
        PlantingStrategy::UniformRandom { rate: 1e-9 },
        seed,
        None,
    )
    .unwrap();
    assert!(set.len() <= 1);
}
