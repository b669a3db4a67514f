//! Graph algorithms behind the structural tests: strongly connected
//! components, condensation classification, bipartite maximum matching and
//! reachability.
//!
//! Vertices are dense 0-based ids. Every routine visits vertices and
//! neighbours in ascending order, so results are reproducible.

use std::collections::{BTreeSet, VecDeque};

use crate::pattern::StructuralPattern;

/// A directed graph stored as sorted, duplicate-free adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    adj: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    /// Panics if an endpoint is out of range.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u},{v}) outside {n} vertices");
            adj[u].push(v);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self { adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u, v)))
    }

    pub fn reversed(&self) -> Digraph {
        Digraph::from_edges(self.vertex_count(), self.edges().map(|(u, v)| (v, u)))
    }
}

/// Strongly connected components and their condensation.
///
/// Components are numbered by their smallest vertex, ascending, and each
/// component's vertex list is sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SccDecomposition {
    pub component_of: Vec<usize>,
    pub components: Vec<Vec<usize>>,
    pub condensation_edges: BTreeSet<(usize, usize)>,
}

impl SccDecomposition {
    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn same_component(&self, u: usize, v: usize) -> bool {
        self.component_of[u] == self.component_of[v]
    }
}

/// Iterative Tarjan.
pub fn scc_decompose(g: &Digraph) -> SccDecomposition {
    let n = g.vertex_count();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut raw_comp = vec![UNSEEN; n];
    let mut raw_count = 0usize;
    let mut next = 0usize;
    // (vertex, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = g.successors(v).get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    raw_comp[w] = raw_count;
                    if w == v {
                        break;
                    }
                }
                raw_count += 1;
            }
        }
    }

    // Renumber by smallest member.
    let mut first_seen = vec![UNSEEN; raw_count];
    let mut order = Vec::with_capacity(raw_count);
    for &c in &raw_comp {
        if first_seen[c] == UNSEEN {
            first_seen[c] = order.len();
            order.push(c);
        }
    }
    let component_of: Vec<usize> = raw_comp.iter().map(|&c| first_seen[c]).collect();
    let mut components = vec![Vec::new(); raw_count];
    for v in 0..n {
        components[component_of[v]].push(v);
    }
    let condensation_edges = g
        .edges()
        .map(|(u, v)| (component_of[u], component_of[v]))
        .filter(|(a, b)| a != b)
        .collect();
    SccDecomposition {
        component_of,
        components,
        condensation_edges,
    }
}

/// Per-component source/sink flags of the condensation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SccClass {
    /// No incoming condensation edge.
    pub non_top: Vec<bool>,
    /// No outgoing condensation edge.
    pub non_bottom: Vec<bool>,
}

impl SccClass {
    pub fn non_top_components(&self) -> Vec<usize> {
        (0..self.non_top.len())
            .filter(|&c| self.non_top[c])
            .collect()
    }

    pub fn non_bottom_components(&self) -> Vec<usize> {
        (0..self.non_bottom.len())
            .filter(|&c| self.non_bottom[c])
            .collect()
    }
}

pub fn classify_sccs(d: &SccDecomposition) -> SccClass {
    let mut non_top = vec![true; d.count()];
    let mut non_bottom = vec![true; d.count()];
    for &(a, b) in &d.condensation_edges {
        non_bottom[a] = false;
        non_top[b] = false;
    }
    SccClass {
        non_top,
        non_bottom,
    }
}

/// Every vertex reachable from `sources`, sources included.
pub fn reachable_set(g: &Digraph, sources: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; g.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in g.successors(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Bipartite graph with left vertices `0..left` and right vertices `0..right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    right: usize,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Panics if an endpoint is out of range.
    pub fn new<I>(left: usize, right: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); left];
        for (l, r) in edges {
            assert!(
                l < left && r < right,
                "edge ({l},{r}) outside {left}x{right}"
            );
            adj[l].push(r);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self { right, adj }
    }

    pub fn left_count(&self) -> usize {
        self.adj.len()
    }

    pub fn right_count(&self) -> usize {
        self.right
    }

    pub fn neighbours(&self, l: usize) -> &[usize] {
        &self.adj[l]
    }

    pub fn has_edge(&self, l: usize, r: usize) -> bool {
        self.adj[l].binary_search(&r).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(l, list)| list.iter().map(move |&r| (l, r)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

/// A set of vertex-disjoint bipartite edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub left_match: Vec<Option<usize>>,
    pub right_match: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(left: usize, right: usize) -> Self {
        Self {
            left_match: vec![None; left],
            right_match: vec![None; right],
        }
    }

    pub fn from_pairs(left: usize, right: usize, pairs: &[(usize, usize)]) -> Option<Self> {
        let mut m = Self::empty(left, right);
        for &(l, r) in pairs {
            if l >= left || r >= right || m.left_match[l].is_some() || m.right_match[r].is_some() {
                return None;
            }
            m.left_match[l] = Some(r);
            m.right_match[r] = Some(l);
        }
        Some(m)
    }

    pub fn size(&self) -> usize {
        self.left_match.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    /// Matched `(left, right)` pairs sorted by left vertex.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.left_match
            .iter()
            .enumerate()
            .filter_map(|(l, r)| r.map(|r| (l, r)))
            .collect()
    }

    pub fn left_unmatched(&self) -> Vec<usize> {
        (0..self.left_match.len())
            .filter(|&l| self.left_match[l].is_none())
            .collect()
    }

    pub fn right_unmatched(&self) -> Vec<usize> {
        (0..self.right_match.len())
            .filter(|&r| self.right_match[r].is_none())
            .collect()
    }
}

/// Hopcroft–Karp maximum matching.
pub fn max_matching(b: &BipartiteGraph) -> Matching {
    let left = b.left_count();
    let mut m = Matching::empty(left, b.right_count());
    const INF: usize = usize::MAX;
    let mut dist = vec![INF; left];

    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for (l, d) in dist.iter_mut().enumerate() {
            if m.left_match[l].is_none() {
                *d = 0;
                queue.push_back(l);
            } else {
                *d = INF;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in b.neighbours(l) {
                match m.right_match[r] {
                    None => found = true,
                    Some(l2) if dist[l2] == INF => {
                        dist[l2] = dist[l] + 1;
                        queue.push_back(l2);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        for l in 0..left {
            if m.left_match[l].is_none() {
                augment(b, &mut m, &mut dist, l);
            }
        }
    }
    m
}

fn augment(b: &BipartiteGraph, m: &mut Matching, dist: &mut [usize], l: usize) -> bool {
    for &r in b.neighbours(l) {
        let ok = match m.right_match[r] {
            None => true,
            Some(l2) => dist[l2] == dist[l].wrapping_add(1) && augment(b, m, dist, l2),
        };
        if ok {
            m.left_match[l] = Some(r);
            m.right_match[r] = Some(l);
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}

/// State bipartite graph `B(X, X, E_XX)`: left `x_i` to right `x_j` for each
/// edge `x_i -> x_j`.
pub fn state_bipartite_graph(pattern: &StructuralPattern) -> BipartiteGraph {
    BipartiteGraph::new(
        pattern.n(),
        pattern.n(),
        pattern.a_entries().iter().map(|&(r, c)| (c - 1, r - 1)),
    )
}

/// Whether `D(Ā)` is spanned by disjoint cycles.
pub fn has_perfect_state_matching(pattern: &StructuralPattern) -> bool {
    max_matching(&state_bipartite_graph(pattern)).size() == pattern.n()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Maximum matching size by exhaustive search over left vertices.
    fn brute_matching(b: &BipartiteGraph) -> usize {
        fn go(b: &BipartiteGraph, l: usize, used: &mut Vec<bool>) -> usize {
            if l == b.left_count() {
                return 0;
            }
            let mut best = go(b, l + 1, used);
            for &r in b.neighbours(l) {
                if !used[r] {
                    used[r] = true;
                    best = best.max(1 + go(b, l + 1, used));
                    used[r] = false;
                }
            }
            best
        }
        go(b, 0, &mut vec![false; b.right_count()])
    }

    /// Transitive closure by Floyd–Warshall, reflexive.
    fn closure(g: &Digraph) -> Vec<Vec<bool>> {
        let n = g.vertex_count();
        let mut r = vec![vec![false; n]; n];
        for (v, row) in r.iter_mut().enumerate() {
            row[v] = true;
        }
        for (u, v) in g.edges() {
            r[u][v] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if r[i][k] {
                    for j in 0..n {
                        if r[k][j] {
                            r[i][j] = true;
                        }
                    }
                }
            }
        }
        r
    }

    fn digraph_strategy(max_n: usize) -> impl Strategy<Value = Digraph> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..=n * n)
                .prop_map(move |edges| Digraph::from_edges(n, edges))
        })
    }

    fn bipartite_strategy(max: usize) -> impl Strategy<Value = BipartiteGraph> {
        (0..=max, 0..=max).prop_flat_map(|(l, r)| {
            let edges = if l == 0 || r == 0 {
                Just(Vec::new()).boxed()
            } else {
                proptest::collection::vec((0..l, 0..r), 0..=l * r).boxed()
            };
            edges.prop_map(move |e| BipartiteGraph::new(l, r, e))
        })
    }

    #[test]
    fn single_vertex_one_component() {
        let d = scc_decompose(&Digraph::new(1));
        assert_eq!(d.count(), 1);
        let c = classify_sccs(&d);
        assert!(c.non_top[0] && c.non_bottom[0]);
    }

    #[test]
    fn four_cycle_one_component() {
        let g = Digraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(scc_decompose(&g).count(), 1);
    }

    #[test]
    fn two_components_source_and_sink() {
        let g = Digraph::from_edges(2, [(0, 1)]);
        let d = scc_decompose(&g);
        assert_eq!(d.components, vec![vec![0], vec![1]]);
        let c = classify_sccs(&d);
        assert_eq!(c.non_top, vec![true, false]);
        assert_eq!(c.non_bottom, vec![false, true]);
    }

    #[test]
    fn components_numbered_by_smallest_vertex() {
        let g = Digraph::from_edges(5, [(4, 3), (3, 4), (0, 4), (2, 1), (1, 2)]);
        let d = scc_decompose(&g);
        assert_eq!(d.components, vec![vec![0], vec![1, 2], vec![3, 4]]);
        assert_eq!(d.condensation_edges, BTreeSet::from([(0, 2)]));
    }

    #[test]
    fn long_chain_does_not_overflow() {
        let n = 200_000;
        let g = Digraph::from_edges(n, (0..n - 1).map(|i| (i, i + 1)).chain([(n - 1, 0)]));
        assert_eq!(scc_decompose(&g).count(), 1);
    }

    #[test]
    fn matching_trivial_cases() {
        assert_eq!(max_matching(&BipartiteGraph::new(3, 3, [])).size(), 0);
        let full = BipartiteGraph::new(3, 3, (0..3).flat_map(|i| (0..3).map(move |j| (i, j))));
        assert_eq!(max_matching(&full).size(), 3);
    }

    #[test]
    fn reachable_chain() {
        let g = Digraph::from_edges(3, [(0, 1), (1, 2)]);
        assert_eq!(reachable_set(&g, &[0]), vec![true, true, true]);
        assert_eq!(
            reachable_set(&Digraph::new(3), &[1]),
            vec![false, true, false]
        );
    }

    #[test]
    fn perfect_state_matching_cases() {
        let diag = StructuralPattern::state_only(3, [(1, 1), (2, 2), (3, 3), (2, 1)]).unwrap();
        assert!(has_perfect_state_matching(&diag));
        let chain = StructuralPattern::state_only(3, [(2, 1), (3, 2)]).unwrap();
        assert!(!has_perfect_state_matching(&chain));
    }

    fn has_cycle_cover(n: usize, entries: &BTreeSet<(usize, usize)>) -> bool {
        // Permutations sigma with A[sigma(i)][i] != 0 for all i.
        fn go(i: usize, n: usize, used: &mut Vec<bool>, e: &BTreeSet<(usize, usize)>) -> bool {
            if i == n {
                return true;
            }
            for s in 0..n {
                if !used[s] && e.contains(&(s + 1, i + 1)) {
                    used[s] = true;
                    if go(i + 1, n, used, e) {
                        return true;
                    }
                    used[s] = false;
                }
            }
            false
        }
        go(0, n, &mut vec![false; n], entries)
    }

    proptest! {
        #[test]
        fn matching_equals_brute_force(b in bipartite_strategy(8)) {
            let m = max_matching(&b);
            for (l, r) in m.pairs() {
                prop_assert!(b.has_edge(l, r));
            }
            prop_assert_eq!(m.size(), brute_matching(&b));
        }

        #[test]
        fn matching_size_ignores_edge_order(b in bipartite_strategy(7), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut edges: Vec<_> = b.edges().collect();
            edges.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled = BipartiteGraph::new(b.left_count(), b.right_count(), edges);
            prop_assert_eq!(max_matching(&b).size(), max_matching(&shuffled).size());
        }

        #[test]
        fn reachability_equals_closure(g in digraph_strategy(8), src in 0usize..8) {
            let src = src % g.vertex_count();
            let reach = reachable_set(&g, &[src]);
            let cl = closure(&g);
            prop_assert_eq!(reach, cl[src].clone());
        }

        #[test]
        fn scc_is_mutual_reachability(g in digraph_strategy(10)) {
            let d = scc_decompose(&g);
            let cl = closure(&g);
            let n = g.vertex_count();
            for u in 0..n {
                for v in 0..n {
                    prop_assert_eq!(d.same_component(u, v), cl[u][v] && cl[v][u]);
                }
            }
            let c = classify_sccs(&d);
            prop_assert!(c.non_top.iter().any(|&b| b));
            prop_assert!(c.non_bottom.iter().any(|&b| b));
            // condensation edges never go backwards in a topological sense
            for &(a, b) in &d.condensation_edges {
                prop_assert!(!d.condensation_edges.contains(&(b, a)));
            }
        }

        #[test]
        fn perfect_matching_equals_cycle_cover(
            n in 1usize..=7,
            bits in proptest::collection::vec(any::<bool>(), 49),
        ) {
            let entries: BTreeSet<_> = (0..n * n)
                .filter(|&k| bits[k])
                .map(|k| (k / n + 1, k % n + 1))
                .collect();
            let p = StructuralPattern::state_only(n, entries.iter().copied()).unwrap();
            prop_assert_eq!(has_perfect_state_matching(&p), has_cycle_cover(n, &entries));
        }

        #[test]
        fn full_diagonal_implies_perfect_matching(
            n in 1usize..=7,
            bits in proptest::collection::vec(any::<bool>(), 49),
        ) {
            let entries = (0..n * n)
                .filter(|&k| bits[k] || k / n == k % n)
                .map(|k| (k / n + 1, k % n + 1));
            let p = StructuralPattern::state_only(n, entries).unwrap();
            prop_assert!(has_perfect_state_matching(&p));
        }
    }
}
