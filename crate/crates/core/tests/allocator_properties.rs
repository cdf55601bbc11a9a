use fogstore::allocator::{alloc_equal, alloc_opt, alloc_rate, kkt_residuals, oracle_opt, AllocConstraints};
use fogstore::model::{total_download_time, NodeSpec, NodeTier, Snapshot, TOLERANCE};
use fogstore::scenario::single_best_node;
use proptest::prelude::*;

fn node(tier: NodeTier, rate_mbps: f64, link_ms: f64, ts_ms: f64, load: f64) -> NodeSpec {
    NodeSpec::new(tier, rate_mbps * 1e6, link_ms / 1e3, ts_ms / 1e3, load).unwrap()
}

/// Eight nodes in the reference mix, written out by hand.
fn fixed_eight() -> Vec<(NodeTier, f64, f64, f64, f64)> {
    use NodeTier::*;
    vec![
        (Cloud, 40.0, 120.0, 20.0, 0.5),
        (Cloud, 22.0, 80.0, 20.0, 0.85),
        (Cloud, 65.0, 190.0, 20.0, 0.6),
        (Cloud, 15.5, 62.0, 20.0, 0.4),
        (Cloud, 50.0, 140.0, 20.0, 0.75),
        (Fog, 30.0, 35.0, 50.0, 0.3),
        (Fog, 71.0, 90.0, 50.0, 0.65),
        (Fog, 18.0, 55.0, 50.0, 0.2),
    ]
}

#[test]
fn equal_split_matches_hand_computation() {
    let rows = fixed_eight();
    let data_bits = 100.0 * 8e6;
    // T_i = link + ts/(1 - rho) + (1/8) * bits / rate, evaluated row by row
    let expected = rows
        .iter()
        .map(|&(_, rate, link, ts, rho)| link / 1e3 + (ts / 1e3) / (1.0 - rho) + 0.125 * data_bits / (rate * 1e6))
        .fold(f64::MIN, f64::max);
    let specs = rows.iter().map(|&(t, r, l, s, p)| node(t, r, l, s, p)).collect();
    let snapshot = Snapshot::new(specs, data_bits).unwrap();
    let eq = alloc_equal(&snapshot);
    assert!(eq.alphas.iter().all(|&a| a == 0.125));
    assert!((eq.total_time_s - expected).abs() < 1e-12);
    // slowest leg under the equal split is the 15.5 Mbps cloud: 0.062 + 0.02/0.6 + 100/15.5
    let by_hand = 0.062 + 0.02 / 0.6 + 12.5 * 8.0 / 15.5;
    assert!((eq.total_time_s - by_hand).abs() < 1e-12);
}

#[test]
fn rate_split_has_a_closed_form() {
    let rows = fixed_eight();
    let specs: Vec<NodeSpec> = rows.iter().map(|&(t, r, l, s, p)| node(t, r, l, s, p)).collect();
    let snapshot = Snapshot::new(specs, 8e8).unwrap();
    let total_rate: f64 = rows.iter().map(|r| r.1 * 1e6).sum();
    let worst_request = rows
        .iter()
        .map(|&(_, _, l, s, p)| l / 1e3 + (s / 1e3) / (1.0 - p))
        .fold(f64::MIN, f64::max);
    let rb = alloc_rate(&snapshot);
    assert!((rb.total_time_s - (worst_request + 8e8 / total_rate)).abs() < 1e-9);
}

prop_compose! {
    fn arb_node()(fog in any::<bool>(), rate in 1.0f64..100.0, link in 0.0f64..1000.0, ts in 1.0f64..100.0, load in 0.0f64..0.995) -> NodeSpec {
        let tier = if fog { NodeTier::Fog } else { NodeTier::Cloud };
        node(tier, rate, link, ts, load)
    }
}

prop_compose! {
    fn arb_snapshot(max: usize)(nodes in prop::collection::vec(arb_node(), 1..=max), mb in 0.01f64..500.0) -> Snapshot {
        Snapshot::new(nodes, mb * 8e6).unwrap()
    }
}

fn simplex_point(weights: &[f64]) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    weights.iter().map(|w| w / sum).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn optimum_is_never_beaten(s in arb_snapshot(12), weights in prop::collection::vec(0.001f64..1.0, 12)) {
        let sol = alloc_opt(&s, AllocConstraints::default()).unwrap();
        let t = sol.allocation.total_time_s;
        prop_assert!(t <= alloc_equal(&s).total_time_s + TOLERANCE);
        prop_assert!(t <= alloc_rate(&s).total_time_s + TOLERANCE);
        prop_assert!(t <= single_best_node(&s).total_time_s + TOLERANCE);
        let alphas = simplex_point(&weights[..s.len()]);
        prop_assert!(t <= total_download_time(&s, &alphas).unwrap() + TOLERANCE);
    }

    #[test]
    fn solution_is_feasible_and_certified(s in arb_snapshot(16)) {
        let sol = alloc_opt(&s, AllocConstraints::default()).unwrap();
        let alphas = &sol.allocation.alphas;
        prop_assert!(alphas.iter().all(|&a| (0.0..=1.0).contains(&a)));
        prop_assert!((alphas.iter().sum::<f64>() - 1.0).abs() <= TOLERANCE);
        prop_assert!(kkt_residuals(&s, alphas, sol.t_star) <= TOLERANCE);
        let total = total_download_time(&s, alphas).unwrap();
        prop_assert!((total - sol.t_star).abs() <= TOLERANCE * sol.t_star.max(1.0));
        let mut all: Vec<usize> = sol.active_set.iter().chain(&sol.saturated_set).chain(&sol.excluded_set).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..s.len()).collect::<Vec<_>>());
    }

    #[test]
    fn adding_a_node_never_hurts(s in arb_snapshot(10), extra in arb_node()) {
        let before = alloc_opt(&s, AllocConstraints::default()).unwrap().t_star;
        let mut specs: Vec<NodeSpec> = s.nodes().iter().map(|n| *n.spec()).collect();
        specs.push(extra);
        let grown = Snapshot::new(specs, s.data_bits()).unwrap();
        let after = alloc_opt(&grown, AllocConstraints::default()).unwrap().t_star;
        prop_assert!(after <= before + TOLERANCE);
    }

    #[test]
    fn time_scales_with_the_instance(s in arb_snapshot(8), c in 0.1f64..10.0) {
        // scaling every delay and the data volume by c scales the optimum by c
        let specs = s.nodes().iter().map(|n| {
            let p = n.spec();
            NodeSpec::new(p.tier(), p.rate_bps(), p.link_delay_s() * c, p.mean_service_time_s() * c, p.load()).unwrap()
        }).collect();
        let scaled = Snapshot::new(specs, s.data_bits() * c).unwrap();
        let a = alloc_opt(&s, AllocConstraints::default()).unwrap();
        let b = alloc_opt(&scaled, AllocConstraints::default()).unwrap();
        prop_assert!((b.t_star - c * a.t_star).abs() <= 1e-9 * (1.0 + b.t_star));
    }

    #[test]
    fn node_order_does_not_matter(s in arb_snapshot(10), rotate in 0usize..10) {
        let mut specs: Vec<NodeSpec> = s.nodes().iter().map(|n| *n.spec()).collect();
        let k = rotate % specs.len();
        specs.rotate_left(k);
        let rotated = Snapshot::new(specs, s.data_bits()).unwrap();
        let a = alloc_opt(&s, AllocConstraints::default()).unwrap();
        let b = alloc_opt(&rotated, AllocConstraints::default()).unwrap();
        prop_assert!((a.t_star - b.t_star).abs() <= TOLERANCE * a.t_star.max(1.0));
        for i in 0..s.len() {
            let j = (i + s.len() - k) % s.len();
            prop_assert!((a.allocation.alphas[i] - b.allocation.alphas[j]).abs() <= 1e-9);
        }
    }

    #[test]
    fn equal_rates_make_rate_split_equal(s in arb_snapshot(12), rate in 1.0f64..100.0) {
        let specs = s.nodes().iter().map(|n| {
            let p = n.spec();
            NodeSpec::new(p.tier(), rate * 1e6, p.link_delay_s(), p.mean_service_time_s(), p.load()).unwrap()
        }).collect();
        let s = Snapshot::new(specs, s.data_bits()).unwrap();
        let (eq, rb) = (alloc_equal(&s), alloc_rate(&s));
        for (a, b) in eq.alphas.iter().zip(&rb.alphas) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
        prop_assert!((eq.total_time_s - rb.total_time_s).abs() <= TOLERANCE);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_search_agrees(s in arb_snapshot(3)) {
        let steps = 200;
        let sol = alloc_opt(&s, AllocConstraints::default()).unwrap();
        let grid = oracle_opt(&s, steps).unwrap();
        let max_slope = s.nodes().iter().map(|n| n.transfer_time_s(s.data_bits())).fold(0.0, f64::max);
        prop_assert!(sol.t_star <= grid.total_time_s + TOLERANCE);
        prop_assert!(grid.total_time_s - sol.t_star <= 2.0 * max_slope / steps as f64 + TOLERANCE);
    }
}
