#![allow(dead_code)]

//! Shared generators for the integration suites, driven by the crate's own
//! deterministic RNG so failures replay exactly.

use bimod::graph::{BipartiteGraph, Color, Division, VertexId};
use bimod::reduction::ThreePartitionInstance;
use bimod::rng::SplitMix64;

/// Random bipartite graph with at least one edge: up to `max_red` red and
/// `max_blue` blue vertices laid out reds first, each cross pair an edge
/// with probability ~1/3.
pub fn random_bipartite(rng: &mut SplitMix64, max_red: usize, max_blue: usize) -> BipartiteGraph {
    let n_red = 1 + rng.below_usize(max_red);
    let n_blue = 1 + rng.below_usize(max_blue);
    let mut colors = vec![Color::Red; n_red];
    colors.extend(std::iter::repeat_n(Color::Blue, n_blue));
    let mut edges = Vec::new();
    for r in 0..n_red {
        for b in 0..n_blue {
            if rng.chance(1, 3) {
                edges.push((VertexId(r), VertexId(n_red + b)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((VertexId(0), VertexId(n_red)));
    }
    BipartiteGraph::from_colors(colors, &edges).expect("generated graph is valid")
}

/// Uniform random community labels over `0..n`.
pub fn random_division(rng: &mut SplitMix64, n: usize) -> Division {
    Division::new((0..n).map(|_| rng.below_usize(n)).collect())
}

/// Random valid normalized instance with k <= 3 and a <= `max_total`.
/// Built triple by triple so the instance is always well formed.
pub fn random_instance(rng: &mut SplitMix64, max_total: u64) -> ThreePartitionInstance {
    loop {
        let k = 1 + rng.below_usize(3);
        // 7 | a = k*b with k coprime to 7 forces 7 | b.
        let max_b = max_total / k as u64;
        let choices: Vec<u64> = (1..=max_b / 7).map(|j| 7 * j).collect();
        if choices.is_empty() {
            continue;
        }
        let b = choices[rng.below_usize(choices.len())];
        let window: Vec<u64> = (1..b).filter(|&v| 4 * v > b && 2 * v < b).collect();
        if window.is_empty() {
            continue;
        }
        let mut elements = Vec::with_capacity(3 * k);
        let mut ok = true;
        for _ in 0..k {
            let mut found = false;
            for _ in 0..200 {
                let a1 = window[rng.below_usize(window.len())];
                let a2 = window[rng.below_usize(window.len())];
                if a1 + a2 >= b {
                    continue;
                }
                let a3 = b - a1 - a2;
                if window.contains(&a3) {
                    elements.extend([a1, a2, a3]);
                    found = true;
                    break;
                }
            }
            if !found {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let inst = ThreePartitionInstance::new(k, elements).expect("construction is valid");
        assert!(inst.is_normalized());
        return inst;
    }
}
