//! Deterministic max-flow / min-cut on small dense networks.
//!
//! The level-set solver reduces each threshold problem to a minimum s–t cut:
//! interior cells become nodes, pair weights become undirected arcs, and
//! exterior/far masses become source or sink capacities. This module solves
//! those cuts exactly with Dinic's algorithm and extracts both extremal
//! minimum cuts from the residual network:
//!
//! * the **minimal** source side — nodes reachable from the source through
//!   positive-residual arcs — which is the intersection of all minimum cuts'
//!   source sides, and
//! * the **maximal** source side — the complement of the nodes that can still
//!   reach the sink — which is their union.
//!
//! Everything is deterministic: arcs are visited in insertion order, the
//! augmenting search uses the lowest-index current-arc rule, and the reported
//! cut value is recomputed from the original capacities across the extracted
//! partition with a fixed-shape pairwise sum, so identical inputs give
//! bit-identical outputs.
//!
//! Capacities must be nonnegative; `f64::INFINITY` is allowed and is how
//! callers pin a node to the source side (an infinite arc is never
//! saturated, so it never crosses the returned cuts).

use crate::util::pairwise_sum;

/// Result of a minimum-cut computation.
#[derive(Debug, Clone)]
pub struct MinCut {
    /// Cut value: total original capacity crossing the minimal partition,
    /// recomputed by pairwise summation (not the accumulated flow).
    pub value: f64,
    /// `source_min[v]` — v lies on the source side of the inclusion-minimal
    /// minimum cut.
    pub source_min: Vec<bool>,
    /// `source_max[v]` — v lies on the source side of the inclusion-maximal
    /// minimum cut. Contains `source_min` entrywise.
    pub source_max: Vec<bool>,
}

/// A flow network over `n` internal nodes plus an implicit source and sink.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n: usize,
    adj: Vec<Vec<u32>>,
    arc_to: Vec<u32>,
    arc_cap: Vec<f64>,
    arc_cap0: Vec<f64>,
}

impl FlowNetwork {
    /// A network with internal nodes `0..n`; the source and sink are managed
    /// internally.
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            n,
            adj: vec![Vec::new(); n + 2],
            arc_to: Vec::new(),
            arc_cap: Vec::new(),
            arc_cap0: Vec::new(),
        }
    }

    fn source(&self) -> usize {
        self.n
    }

    fn sink(&self) -> usize {
        self.n + 1
    }

    fn push_arc_pair(&mut self, a: usize, b: usize, cap_ab: f64, cap_ba: f64) {
        debug_assert!(cap_ab >= 0.0 && cap_ba >= 0.0, "capacities must be nonnegative");
        let e = self.arc_to.len() as u32;
        self.arc_to.push(b as u32);
        self.arc_cap.push(cap_ab);
        self.arc_cap0.push(cap_ab);
        self.arc_to.push(a as u32);
        self.arc_cap.push(cap_ba);
        self.arc_cap0.push(cap_ba);
        self.adj[a].push(e);
        self.adj[b].push(e + 1);
    }

    /// Undirected arc between internal nodes `a` and `b` with capacity `w`
    /// in both directions: cutting the pair in either orientation costs `w`
    /// once, matching an unordered-pair energy term.
    pub fn add_pair(&mut self, a: usize, b: usize, w: f64) {
        assert!(a < self.n && b < self.n && a != b, "pair arcs join distinct internal nodes");
        self.push_arc_pair(a, b, w, w);
    }

    /// Capacity from the source to internal node `v` (pass `f64::INFINITY`
    /// to force `v` onto the source side of every returned cut).
    pub fn add_source_cap(&mut self, v: usize, c: f64) {
        assert!(v < self.n);
        let s = self.source();
        self.push_arc_pair(s, v, c, 0.0);
    }

    /// Capacity from internal node `v` to the sink.
    pub fn add_sink_cap(&mut self, v: usize, c: f64) {
        assert!(v < self.n);
        let t = self.sink();
        self.push_arc_pair(v, t, c, 0.0);
    }

    fn bfs_levels(&self) -> Option<Vec<i32>> {
        let mut level = vec![-1_i32; self.n + 2];
        let mut queue = std::collections::VecDeque::new();
        level[self.source()] = 0;
        queue.push_back(self.source());
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let u = self.arc_to[e as usize] as usize;
                if self.arc_cap[e as usize] > 0.0 && level[u] < 0 {
                    level[u] = level[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        if level[self.sink()] >= 0 {
            Some(level)
        } else {
            None
        }
    }

    fn dfs_augment(&mut self, v: usize, f: f64, level: &[i32], it: &mut [usize]) -> f64 {
        if v == self.sink() {
            return f;
        }
        while it[v] < self.adj[v].len() {
            let e = self.adj[v][it[v]] as usize;
            let u = self.arc_to[e] as usize;
            if self.arc_cap[e] > 0.0 && level[u] == level[v] + 1 {
                let d = self.dfs_augment(u, f.min(self.arc_cap[e]), level, it);
                if d > 0.0 {
                    self.arc_cap[e] -= d;
                    self.arc_cap[e ^ 1] += d;
                    return d;
                }
            }
            it[v] += 1;
        }
        0.0
    }

    /// Nodes reachable from the source through positive-residual arcs.
    fn residual_source_side(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n + 2];
        let mut queue = std::collections::VecDeque::new();
        seen[self.source()] = true;
        queue.push_back(self.source());
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let u = self.arc_to[e as usize] as usize;
                if self.arc_cap[e as usize] > 0.0 && !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Nodes that can still reach the sink through positive-residual arcs.
    fn residual_sink_side(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n + 2];
        let mut queue = std::collections::VecDeque::new();
        seen[self.sink()] = true;
        queue.push_back(self.sink());
        while let Some(w) = queue.pop_front() {
            // u reaches w through arc (u → w) iff the twin arc stored at w
            // has positive residual on its reverse entry.
            for &f in &self.adj[w] {
                let u = self.arc_to[f as usize] as usize;
                if self.arc_cap[(f ^ 1) as usize] > 0.0 && !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Original capacity crossing from `side` to its complement, by pairwise
    /// summation in arc order.
    fn cut_value_across(&self, side: &[bool]) -> f64 {
        let mut parts = Vec::new();
        for v in 0..self.n + 2 {
            if !side[v] {
                continue;
            }
            for &e in &self.adj[v] {
                let u = self.arc_to[e as usize] as usize;
                if !side[u] && self.arc_cap0[e as usize] > 0.0 {
                    parts.push(self.arc_cap0[e as usize]);
                }
            }
        }
        pairwise_sum(&parts)
    }

    /// Run the flow to completion and extract both extremal minimum cuts.
    /// Consumes the network (residual capacities are spent).
    pub fn min_cut(mut self) -> MinCut {
        while let Some(level) = self.bfs_levels() {
            let mut it = vec![0_usize; self.n + 2];
            loop {
                let pushed = self.dfs_augment(self.source(), f64::INFINITY, &level, &mut it);
                if pushed <= 0.0 {
                    break;
                }
                debug_assert!(
                    pushed.is_finite(),
                    "an all-infinite source-to-sink path means the cut problem is infeasible"
                );
            }
        }
        let src_side = self.residual_source_side();
        let sink_side = self.residual_sink_side();
        let source_min: Vec<bool> = (0..self.n).map(|v| src_side[v]).collect();
        let source_max: Vec<bool> = (0..self.n).map(|v| !sink_side[v]).collect();
        debug_assert!(
            source_min.iter().zip(&source_max).all(|(a, b)| !a | b),
            "minimal cut side must be contained in the maximal one"
        );
        let value = self.cut_value_across(&src_side);
        debug_assert!({
            let mut max_side = vec![false; self.n + 2];
            for (v, entry) in max_side.iter_mut().enumerate().take(self.n) {
                *entry = !sink_side[v];
            }
            max_side[self.source()] = true;
            let vmax = self.cut_value_across(&max_side);
            (vmax - value).abs() <= 1e-9 * value.abs().max(1.0)
        });
        MinCut { value, source_min, source_max }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Directly evaluate the cut value of source side S (subset of internal
    /// nodes) from first principles: source caps to nodes outside S, sink
    /// caps from nodes in S, and pair arcs leaving S.
    struct BruteNetwork {
        n: usize,
        pairs: Vec<(usize, usize, f64)>,
        source_caps: Vec<(usize, f64)>,
        sink_caps: Vec<(usize, f64)>,
    }

    impl BruteNetwork {
        fn cut_value(&self, s_mask: u32) -> f64 {
            let in_s = |v: usize| s_mask >> v & 1 == 1;
            let mut total = 0.0;
            for &(v, c) in &self.source_caps {
                if !in_s(v) {
                    total += c;
                }
            }
            for &(v, c) in &self.sink_caps {
                if in_s(v) {
                    total += c;
                }
            }
            for &(a, b, w) in &self.pairs {
                if in_s(a) != in_s(b) {
                    total += w;
                }
            }
            total
        }

        fn build(&self) -> FlowNetwork {
            let mut net = FlowNetwork::new(self.n);
            for &(a, b, w) in &self.pairs {
                net.add_pair(a, b, w);
            }
            for &(v, c) in &self.source_caps {
                net.add_source_cap(v, c);
            }
            for &(v, c) in &self.sink_caps {
                net.add_sink_cap(v, c);
            }
            net
        }

        fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
            let mut pairs = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.gen::<f64>() < 0.6 {
                        pairs.push((a, b, rng.gen_range(0.1..2.0)));
                    }
                }
            }
            let mut source_caps = Vec::new();
            let mut sink_caps = Vec::new();
            for v in 0..n {
                if rng.gen::<f64>() < 0.5 {
                    source_caps.push((v, rng.gen_range(0.1..2.0)));
                }
                if rng.gen::<f64>() < 0.5 {
                    sink_caps.push((v, rng.gen_range(0.1..2.0)));
                }
            }
            BruteNetwork { n, pairs, source_caps, sink_caps }
        }
    }

    #[test]
    fn textbook_diamond_flow() {
        // source → {0,1} → 2 → sink with a cross arc; min cut cuts the two
        // middle arcs: value 3 + 2 = 5 is NOT minimal, the bottleneck is the
        // sink arc of capacity 4 plus... compute by hand:
        //   s→0: 3, s→1: 2, 0→2 pair: 3, 1→2 pair: 2, 2→t: 4, 0↔1 pair: 1.
        // Exhaustive check below pins the value; here pin a case small
        // enough to verify mentally: cutting {2→t} alone severs everything
        // that must pass through 2, value 4; cutting {s→0, s→1} gives 5;
        // mixed cuts are larger. Min = 4, all of {0,1,2} on the source side.
        let mut net = FlowNetwork::new(3);
        net.add_source_cap(0, 3.0);
        net.add_source_cap(1, 2.0);
        net.add_pair(0, 2, 3.0);
        net.add_pair(1, 2, 2.0);
        net.add_pair(0, 1, 1.0);
        net.add_sink_cap(2, 4.0);
        let cut = net.min_cut();
        assert!((cut.value - 4.0).abs() < 1e-12);
        assert_eq!(cut.source_min, vec![true, true, true]);
        assert_eq!(cut.source_max, vec![true, true, true]);
    }

    #[test]
    fn empty_network_has_free_nodes() {
        // No arcs: flow 0; nothing is source-reachable, nothing reaches the
        // sink. The minimal cut side is empty, the maximal is everything —
        // the degenerate tie the extremal pair is designed to bracket.
        let net = FlowNetwork::new(4);
        let cut = net.min_cut();
        assert_eq!(cut.value, 0.0);
        assert_eq!(cut.source_min, vec![false; 4]);
        assert_eq!(cut.source_max, vec![true; 4]);
    }

    #[test]
    fn matches_exhaustive_enumeration_and_extremal_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
        for trial in 0..40 {
            let n = 2 + (trial % 7); // 2..=8 internal nodes
            let brute = BruteNetwork::random(&mut rng, n);
            let cut = brute.build().min_cut();

            let mut best = f64::INFINITY;
            for mask in 0..(1_u32 << n) {
                best = best.min(brute.cut_value(mask));
            }
            let tol = 1e-12 * best.abs().max(1.0);
            assert!(
                (cut.value - best).abs() <= tol,
                "trial {trial}: flow cut {} vs exhaustive best {best}",
                cut.value
            );

            // The returned sides must each achieve the minimum, and must be
            // the intersection/union of all optimal source sides.
            let min_mask: u32 =
                (0..n).map(|v| (cut.source_min[v] as u32) << v).sum();
            let max_mask: u32 =
                (0..n).map(|v| (cut.source_max[v] as u32) << v).sum();
            assert!((brute.cut_value(min_mask) - best).abs() <= tol);
            assert!((brute.cut_value(max_mask) - best).abs() <= tol);
            let mut inter = (1_u32 << n) - 1;
            let mut union = 0_u32;
            for mask in 0..(1_u32 << n) {
                if (brute.cut_value(mask) - best).abs() <= tol {
                    inter &= mask;
                    union |= mask;
                }
            }
            assert_eq!(min_mask, inter, "trial {trial}: minimal side is the lattice meet");
            assert_eq!(max_mask, union, "trial {trial}: maximal side is the lattice join");
        }
    }

    #[test]
    fn infinite_source_cap_forces_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..20 {
            let n = 3 + (trial % 5);
            let brute = BruteNetwork::random(&mut rng, n);
            let forced = trial % n;
            let mut net = brute.build();
            net.add_source_cap(forced, f64::INFINITY);
            let cut = net.min_cut();
            assert!(cut.source_min[forced] && cut.source_max[forced]);
            // Value equals the exhaustive minimum over sides containing the
            // forced node.
            let mut best = f64::INFINITY;
            for mask in 0..(1_u32 << n) {
                if mask >> forced & 1 == 1 {
                    best = best.min(brute.cut_value(mask));
                }
            }
            assert!(
                (cut.value - best).abs() <= 1e-12 * best.abs().max(1.0),
                "trial {trial}: forced cut {} vs constrained best {best}",
                cut.value
            );
            assert!(cut.value.is_finite());
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let brute = BruteNetwork::random(&mut rng, 8);
        let a = brute.build().min_cut();
        let b = brute.build().min_cut();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.source_min, b.source_min);
        assert_eq!(a.source_max, b.source_max);
    }

    #[test]
    fn series_chain_cuts_weakest_link() {
        // source →5→ 0 →3→ 1 →7→ sink: the weakest arc (3) is the cut;
        // minimal side {0}, maximal side {0, 1}? No: cutting 0—1 leaves 1 on
        // the sink side of the minimal cut and the source side only if a
        // cheaper assignment exists — 1 keeps its 7-arc to the sink, so 1
        // stays on the sink side in every minimum cut.
        let mut net = FlowNetwork::new(2);
        net.add_source_cap(0, 5.0);
        net.add_pair(0, 1, 3.0);
        net.add_sink_cap(1, 7.0);
        let cut = net.min_cut();
        assert!((cut.value - 3.0).abs() < 1e-12);
        assert_eq!(cut.source_min, vec![true, false]);
        assert_eq!(cut.source_max, vec![true, false]);
    }
}
