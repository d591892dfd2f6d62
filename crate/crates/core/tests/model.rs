use proptest::prelude::*;

use auxsbm::model::{
    micro_index, sample_cbm, sample_sbm, BinaryModelParams, LabelScheme, LabeledGraph, ModelParams, SamplerOptions,
};

fn two_by_two(xi: bool) -> ModelParams {
    ModelParams::new(
        2,
        2,
        vec![vec![0.3, 0.2], vec![0.1, 0.4]],
        vec![
            vec![6.0, 1.0, 2.0, 0.5],
            vec![1.0, 5.0, 0.5, 1.5],
            vec![2.0, 0.5, 4.0, 1.0],
            vec![0.5, 1.5, 1.0, 3.0],
        ],
        xi.then(|| {
            vec![
                vec![0.9, 0.2, 0.7, 0.4],
                vec![0.2, 0.8, 0.3, 0.6],
                vec![0.7, 0.3, 0.85, 0.1],
                vec![0.4, 0.6, 0.1, 0.75],
            ]
        }),
    )
    .unwrap()
}

fn iid() -> SamplerOptions {
    SamplerOptions { labels: LabelScheme::Iid, ..Default::default() }
}

#[test]
fn label_histogram_matches_prior() {
    let params = two_by_two(false);
    let n = 100_000;
    // no edges needed for the histogram; a tiny Q keeps sampling cheap
    let quiet = ModelParams::new(2, 2, params.p.clone(), vec![vec![1e-6; 4]; 4], None).unwrap();
    let g = sample_sbm(&quiet, n, 5, &iid()).unwrap().graph;
    let labels = g.micro_labels(2).unwrap();
    let prior = params.prior_vec();
    for (k, &p) in prior.iter().enumerate() {
        let freq = labels.iter().filter(|&&l| l == k).count() as f64 / n as f64;
        let band = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < band, "cell {k}: {freq} vs {p}");
    }
}

#[test]
fn conditional_edge_rates_match_q() {
    let params = two_by_two(false);
    let n = 2000;
    let scale = (n as f64).ln() / n as f64;
    let k = 4;
    let (mut edges, mut pairs) = (vec![0f64; k * k], vec![0f64; k * k]);
    for seed in 0..100 {
        let g = sample_sbm(&params, n, seed, &iid()).unwrap().graph;
        let labels = g.micro_labels(2).unwrap();
        let mut count = vec![0f64; k];
        labels.iter().for_each(|&l| count[l] += 1.0);
        for a in 0..k {
            for b in 0..k {
                pairs[a * k + b] += if a == b { count[a] * (count[a] - 1.0) / 2.0 } else { count[a] * count[b] };
            }
        }
        for (u, v, _) in g.edges() {
            let (a, b) = (labels[u], labels[v]);
            edges[a * k + b] += 1.0;
            if a != b {
                edges[b * k + a] += 1.0;
            }
        }
    }
    for a in 0..k {
        for b in 0..k {
            let p = params.q[a][b] * scale;
            let m = pairs[a * k + b];
            let sigma = (m * p * (1.0 - p)).sqrt();
            let diff = edges[a * k + b] - m * p;
            assert!(diff.abs() < 5.0 * sigma, "bin ({a},{b}): {} edges vs {} expected", edges[a * k + b], m * p);
        }
    }
}

#[test]
fn censored_signs_follow_xi() {
    let params = two_by_two(true);
    let xi = params.xi.clone().unwrap();
    let (mut pos, mut tot) = ([[0f64; 4]; 4], [[0f64; 4]; 4]);
    for seed in 0..20 {
        let g = sample_cbm(&params, 2000, seed, &iid()).unwrap().graph;
        let labels = g.micro_labels(2).unwrap();
        for (u, v, s) in g.edges() {
            let (a, b) = (labels[u].min(labels[v]), labels[u].max(labels[v]));
            tot[a][b] += 1.0;
            if s > 0 {
                pos[a][b] += 1.0;
            }
        }
    }
    for a in 0..4 {
        for b in a..4 {
            let (m, p) = (tot[a][b], xi[a][b]);
            assert!(m > 100.0, "bin ({a},{b}) has only {m} edges");
            let sigma = (p * (1.0 - p) / m).sqrt();
            assert!((pos[a][b] / m - p).abs() < 5.0 * sigma, "({a},{b}): {} vs {p}", pos[a][b] / m);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samples_are_simple_symmetric_graphs(seed in any::<u64>(), n in 2usize..120, signed in any::<bool>()) {
        let params = two_by_two(signed);
        let s = if signed { sample_cbm(&params, n, seed, &iid()) } else { sample_sbm(&params, n, seed, &iid()) }.unwrap();
        let g = &s.graph;
        for v in 0..n {
            prop_assert_eq!(g.get(v, v), 0);
            for &(u, sign) in g.neighbors(v) {
                prop_assert_eq!(g.get(u as usize, v), sign);
                prop_assert!(sign == 1 || (signed && sign == -1));
            }
        }
        let back = LabeledGraph::from_json_str(&g.to_json_string().unwrap()).unwrap();
        prop_assert_eq!(&back, g);
    }

    #[test]
    fn binary_sampler_balances_x(seed in any::<u64>(), half in 1usize..100) {
        let p = BinaryModelParams::sbm([9.0, 1.0, 3.0, 1.0], 0.3).unwrap();
        let g = p.sample(2 * half, seed, false).unwrap().graph;
        prop_assert_eq!(g.x().unwrap().iter().filter(|&&l| l == 0).count(), half);
    }

    #[test]
    fn micro_index_is_column_major(i in 0usize..5, j in 0usize..5) {
        prop_assert_eq!(micro_index(i, j, 5, 5).unwrap(), j * 5 + i);
    }
}

#[test]
fn seeds_reproduce_and_differ() {
    let params = two_by_two(false);
    let a = sample_sbm(&params, 300, 1, &iid()).unwrap();
    let b = sample_sbm(&params, 300, 1, &iid()).unwrap();
    let c = sample_sbm(&params, 300, 2, &iid()).unwrap();
    assert_eq!(a.graph, b.graph);
    assert_ne!(a.graph, c.graph);
}
