//! Prints strong-robustness verdicts for the bundled surrogate topologies and
//! searches for sparsest undirected 6-node graphs that are 2-strongly robust
//! with one hop.

use mwmsr::robustness::{is_strongly_robust, Flavor};
use mwmsr::Graph;

fn main() {
    let five = Graph::undirected(5, [(1, 2), (2, 3), (3, 4), (4, 1), (1, 5), (2, 5), (3, 5), (4, 5)]).unwrap();
    for l in 1..=2 {
        let cert = is_strongly_robust(&five, 2, l, 1, Flavor::Total).unwrap();
        println!("five r=2 l={l} f=1: holds={} witness={:?}", cert.holds, cert.witness);
    }
    let pairs: Vec<(usize, usize)> = (1..=6).flat_map(|a| (a + 1..=6).map(move |b| (a, b))).collect();
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << pairs.len()) {
        let m = mask.count_ones() as usize;
        if best.is_some_and(|b| m > b) {
            continue;
        }
        let chosen: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| *p).collect();
        let g = Graph::undirected(6, chosen.clone()).unwrap();
        if is_strongly_robust(&g, 2, 1, 1, Flavor::Total).unwrap().holds {
            best = Some(best.map_or(m, |b| b.min(m)));
            println!("{m} edges: {chosen:?}");
        }
    }
}
