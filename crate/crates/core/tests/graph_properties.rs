use std::collections::BTreeSet;

use graphxq::graph::{
    build_knn_edges, normalize_attributes_dataset, EntityGraph, KnnParams, NodeRecord,
};
use proptest::prelude::*;

fn points() -> impl Strategy<Value = Vec<[f64; 2]>> {
    // integer grid coordinates make exact distance ties common
    prop::collection::vec((0u32..40, 0u32..40), 1..30).prop_map(|v| {
        v.into_iter()
            .map(|(x, y)| [x as f64 * 3.0, y as f64 * 3.0])
            .collect()
    })
}

proptest! {
    #[test]
    fn knn_edges_bounded_and_short(pts in points(), k in 1usize..7) {
        let params = KnnParams { k, max_dist: 50.0 };
        let edges = build_knn_edges(&pts, params).unwrap();
        prop_assert!(edges.len() <= k * pts.len());
        for &(u, v) in &edges {
            prop_assert!(u < v && v < pts.len());
            let d = (pts[u][0] - pts[v][0]).hypot(pts[u][1] - pts[v][1]);
            prop_assert!(d <= 50.0);
        }
    }

    #[test]
    fn knn_graph_is_relabeling_invariant(
        pts in points().prop_filter("distinct distances", |p| {
            // tie-breaks depend on indices, so compare on tie-free inputs
            let mut d = Vec::new();
            for i in 0..p.len() { for j in i + 1..p.len() {
                d.push(((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)) as u64);
            }}
            let n = d.len();
            d.sort_unstable(); d.dedup();
            d.len() == n
        }),
        seed in any::<u64>(),
    ) {
        let n = pts.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut moved = vec![[0.0; 2]; n];
        for i in 0..n {
            moved[perm[i]] = pts[i];
        }
        let params = KnnParams::default();
        let a: BTreeSet<(usize, usize)> = build_knn_edges(&pts, params).unwrap()
            .into_iter().map(|(u, v)| { let (x, y) = (perm[u], perm[v]); (x.min(y), x.max(y)) }).collect();
        let b: BTreeSet<(usize, usize)> = build_knn_edges(&moved, params).unwrap().into_iter().collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn attribute_normalization_is_unit_range_and_idempotent(
        values in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 1..6), 1..5)
    ) {
        let mut graphs: Vec<EntityGraph> = values.iter().map(|vals| {
            let nodes = vals.iter().map(|&v| {
                let mut n = NodeRecord::new([0.0, 0.0], vec![1.0]);
                n.attributes.insert("a".into(), v);
                n.attributes.insert("b".into(), -2.0 * v);
                n
            }).collect();
            EntityGraph::new(nodes, [], None).unwrap()
        }).collect();
        normalize_attributes_dataset(&mut graphs).unwrap();
        let all: Vec<f64> = graphs.iter().flat_map(|g| g.nodes().iter().map(|n| n.attributes["a"])).collect();
        prop_assert!(all.iter().all(|v| (0.0..=1.0).contains(v)));
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(lo, 0.0);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(hi == 1.0 || hi == 0.0);
        let once = graphs.clone();
        normalize_attributes_dataset(&mut graphs).unwrap();
        prop_assert_eq!(once, graphs);
    }
}
