//! Dedicated actuator/sensor placement and sparse information patterns that
//! keep the closed loop free of structurally fixed modes under failures.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_modes::{analyze, condition_a, AnalysisOptions, ScenarioDiagnostics};
use crate::graph::{
    classify_sccs, has_perfect_state_matching, max_matching, reachable_set, scc_decompose,
    BipartiteGraph, Digraph, Matching,
};
use crate::pattern::{
    build_closed_loop_digraph, build_state_digraph, build_system_digraph, DedicatedSelection,
    FailureCollection, Link, LinkSet, StructuralPattern, Vertex,
};

/// Which fixed modes a design must rule out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// No fixed modes at all.
    #[default]
    Full,
    /// Fixed modes at the origin are tolerated.
    Stabilization,
}

/// How representatives are picked inside a source or sink SCC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Representative {
    /// Cycle through the SCC's states, boundary states first: states with an
    /// edge leaving the SCC (sources) or entering it (sinks), then the rest,
    /// each group by ascending index.
    #[default]
    Spread,
    /// Repeat the lowest state index.
    Lowest,
}

/// Dedicated actuators, dedicated sensors and the links between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoDesignSolution {
    pub actuators: DedicatedSelection,
    pub sensors: DedicatedSelection,
    pub links: LinkSet,
    pub sub_patterns: Vec<LinkSet>,
    pub k: usize,
    #[serde(default)]
    pub verified: bool,
}

impl CoDesignSolution {
    pub fn cost(&self) -> usize {
        self.actuators.len() + self.sensors.len() + self.links.len()
    }

    /// Structural invariants of a resilient design:
    ///
    /// * every actuator and sensor carries at least one link;
    /// * for every SCC of `D(Ā)` holding dedicated actuators, at least
    ///   `k + 1` links end at those actuators, and dually for sensors;
    /// * the sub-patterns are pairwise disjoint and their union is `links`.
    pub fn check_invariants(&self, pattern: &StructuralPattern) -> std::result::Result<(), String> {
        let scc = scc_decompose(&build_state_digraph(pattern).to_digraph());
        let group = |x: usize| scc.component_of[x - 1];
        let mut into = vec![0usize; scc.count()];
        let mut out_of = vec![0usize; scc.count()];
        for l in &self.links {
            let (Some(&a), Some(&s)) = (
                self.actuators.indices().get(l.actuator - 1),
                self.sensors.indices().get(l.sensor - 1),
            ) else {
                return Err(format!("link {l} refers to a missing channel"));
            };
            into[group(a)] += 1;
            out_of[group(s)] += 1;
        }
        for (i, &x) in self.actuators.indices().iter().enumerate() {
            if !self.links.iter().any(|l| l.actuator == i + 1) {
                return Err(format!("actuator {} carries no link", i + 1));
            }
            if into[group(x)] < self.k + 1 {
                return Err(format!(
                    "actuators in the SCC of x{x} receive {} links, need {}",
                    into[group(x)],
                    self.k + 1
                ));
            }
        }
        for (j, &x) in self.sensors.indices().iter().enumerate() {
            if !self.links.iter().any(|l| l.sensor == j + 1) {
                return Err(format!("sensor {} carries no link", j + 1));
            }
            if out_of[group(x)] < self.k + 1 {
                return Err(format!(
                    "sensors in the SCC of x{x} send {} links, need {}",
                    out_of[group(x)],
                    self.k + 1
                ));
            }
        }
        let mut union = LinkSet::new();
        let mut total = 0;
        for (i, p) in self.sub_patterns.iter().enumerate() {
            for q in &self.sub_patterns[..i] {
                if !p.is_disjoint(q) {
                    return Err(format!("sub-patterns {p} and {q} overlap"));
                }
            }
            total += p.len();
            union = union.union(p);
        }
        if !self.sub_patterns.is_empty() && (union != self.links || total != self.links.len()) {
            return Err("sub-patterns do not partition the link set".into());
        }
        Ok(())
    }

    /// Fewest links on any single actuator or sensor.
    pub fn min_channel_degree(&self) -> usize {
        let a = (1..=self.actuators.len())
            .map(|i| self.links.iter().filter(|l| l.actuator == i).count());
        let s =
            (1..=self.sensors.len()).map(|j| self.links.iter().filter(|l| l.sensor == j).count());
        a.chain(s).min().unwrap_or(0)
    }
}

fn dual(pattern: &StructuralPattern) -> StructuralPattern {
    StructuralPattern::new(
        pattern.n(),
        pattern.m(),
        pattern.p(),
        pattern.a_entries().iter().map(|&(r, c)| (c, r)),
        pattern.c_entries().iter().map(|&(r, c)| (c, r)),
        pattern.b_entries().iter().map(|&(r, c)| (c, r)),
    )
    .expect("transposed pattern keeps valid bounds")
}

/// Every state is reached from some input in `D(Ā, B̄)`.
fn inputs_reach_all_states(pattern: &StructuralPattern) -> bool {
    let d = build_system_digraph(pattern);
    let sources: Vec<usize> = (1..=pattern.p()).map(|j| d.id(Vertex::Input(j))).collect();
    let seen = reachable_set(&d.to_digraph(), &sources);
    (1..=pattern.n()).all(|i| seen[d.id(Vertex::State(i))])
}

/// Reachability from the inputs plus a matching of `B(X ∪ U, X)` that
/// saturates the states.
pub fn is_structurally_controllable(pattern: &StructuralPattern) -> bool {
    if pattern.p() == 0 || !inputs_reach_all_states(pattern) {
        return false;
    }
    let n = pattern.n();
    let edges = pattern
        .a_entries()
        .iter()
        .map(|&(r, c)| (c - 1, r - 1))
        .chain(pattern.b_entries().iter().map(|&(r, c)| (n + c - 1, r - 1)));
    max_matching(&BipartiteGraph::new(n + pattern.p(), n, edges)).size() == n
}

pub fn is_structurally_observable(pattern: &StructuralPattern) -> bool {
    is_structurally_controllable(&dual(pattern))
}

/// Source or sink SCCs of `D(Ā)` with their representative candidates
/// (1-based states), in component order.
fn boundary_candidates(
    pattern: &StructuralPattern,
    sinks: bool,
    rule: Representative,
) -> Vec<Vec<usize>> {
    let d = build_state_digraph(pattern).to_digraph();
    let scc = scc_decompose(&d);
    let class = classify_sccs(&scc);
    let chosen = if sinks {
        class.non_bottom_components()
    } else {
        class.non_top_components()
    };
    chosen
        .into_iter()
        .map(|c| {
            let members = &scc.components[c];
            match rule {
                Representative::Lowest => vec![members[0] + 1],
                Representative::Spread => {
                    let on_boundary = |v: usize| {
                        if sinks {
                            d.edges().any(|(u, w)| w == v && scc.component_of[u] != c)
                        } else {
                            d.successors(v).iter().any(|&w| scc.component_of[w] != c)
                        }
                    };
                    let (mut first, rest): (Vec<usize>, Vec<usize>) =
                        members.iter().partition(|&&v| on_boundary(v));
                    first.extend(rest);
                    first.into_iter().map(|v| v + 1).collect()
                }
            }
        })
        .collect()
}

/// Round-major selection: round `r` takes candidate `r mod len` of each SCC.
fn select_rounds(candidates: &[Vec<usize>], rounds: usize) -> Vec<DedicatedSelection> {
    (0..rounds)
        .map(|r| candidates.iter().map(|c| c[r % c.len()]).collect())
        .collect()
}

fn concat(rounds: &[DedicatedSelection]) -> DedicatedSelection {
    rounds
        .iter()
        .flat_map(|s| s.indices().iter().copied())
        .collect()
}

/// `k + 1` dedicated actuators on every source SCC of `D(Ā)`.
pub fn min_dedicated_actuators(
    pattern: &StructuralPattern,
    k: usize,
) -> Result<DedicatedSelection> {
    min_dedicated_actuators_with(pattern, k, Representative::default())
}

pub fn min_dedicated_actuators_with(
    pattern: &StructuralPattern,
    k: usize,
    rule: Representative,
) -> Result<DedicatedSelection> {
    if !has_perfect_state_matching(pattern) {
        return Err(Error::AssumptionA1Violated);
    }
    Ok(concat(&select_rounds(
        &boundary_candidates(pattern, false, rule),
        k + 1,
    )))
}

/// `k + 1` dedicated sensors on every sink SCC of `D(Ā)`.
pub fn min_dedicated_sensors(pattern: &StructuralPattern, k: usize) -> Result<DedicatedSelection> {
    min_dedicated_sensors_with(pattern, k, Representative::default())
}

pub fn min_dedicated_sensors_with(
    pattern: &StructuralPattern,
    k: usize,
    rule: Representative,
) -> Result<DedicatedSelection> {
    if !has_perfect_state_matching(pattern) {
        return Err(Error::AssumptionA1Violated);
    }
    Ok(concat(&select_rounds(
        &boundary_candidates(pattern, true, rule),
        k + 1,
    )))
}

/// Links closing a matching of `B(actuators, sensors)` into a single cycle.
///
/// Matched pairs are ordered by actuator; the sensor of each pair feeds the
/// actuator of the next, and the last sensor feeds the first actuator.
/// Indices in the result are 1-based.
pub fn sequential_pairing(matching: &Matching) -> Result<LinkSet> {
    let pairs = matching.pairs();
    if pairs.is_empty() {
        return Err(Error::EmptyMatching);
    }
    let q = pairs.len();
    Ok((0..q)
        .map(|l| {
            let (_, sensor) = pairs[(l + q - 1) % q];
            let (actuator, _) = pairs[l];
            Link::new(sensor + 1, actuator + 1)
        })
        .collect())
}

/// Actuator-to-sensor reachability: `(i, j)` iff state `actuators[i]`
/// reaches state `sensors[j]` in `D(Ā)`.
fn reachability_graph(
    pattern: &StructuralPattern,
    actuators: &DedicatedSelection,
    sensors: &DedicatedSelection,
    excluded: &BTreeSet<(usize, usize)>,
) -> BipartiteGraph {
    let d: Digraph = build_state_digraph(pattern).to_digraph();
    let mut edges = Vec::new();
    for (i, &x) in actuators.indices().iter().enumerate() {
        let seen = reachable_set(&d, &[x - 1]);
        for (j, &y) in sensors.indices().iter().enumerate() {
            if seen[y - 1] && !excluded.contains(&(i + 1, j + 1)) {
                edges.push((i, j));
            }
        }
    }
    BipartiteGraph::new(actuators.len(), sensors.len(), edges)
}

/// Sparsest information pattern for one actuator/sensor collection.
///
/// `excluded` holds 1-based `(actuator, sensor)` pairs removed from the
/// reachability graph before matching. Returns the links (1-based, local to
/// the collection) and the maximum matching used.
pub fn procedure1(
    pattern: &StructuralPattern,
    actuators: &DedicatedSelection,
    sensors: &DedicatedSelection,
    excluded: &BTreeSet<(usize, usize)>,
) -> Result<(LinkSet, Matching)> {
    procedure1_mode(pattern, actuators, sensors, excluded, Mode::Full)
}

fn procedure1_mode(
    pattern: &StructuralPattern,
    actuators: &DedicatedSelection,
    sensors: &DedicatedSelection,
    excluded: &BTreeSet<(usize, usize)>,
    mode: Mode,
) -> Result<(LinkSet, Matching)> {
    let full = pattern.with_dedicated(actuators, sensors)?;
    match mode {
        Mode::Full => {
            if !is_structurally_controllable(&full) {
                return Err(Error::NotControllable);
            }
            if !is_structurally_observable(&full) {
                return Err(Error::NotObservable);
            }
        }
        Mode::Stabilization => {
            if full.p() == 0 || !inputs_reach_all_states(&full) {
                return Err(Error::NotControllable);
            }
            if full.m() == 0 || !inputs_reach_all_states(&dual(&full)) {
                return Err(Error::NotObservable);
            }
        }
    }

    let b = reachability_graph(pattern, actuators, sensors, excluded);
    let matching = max_matching(&b);
    let mut links = sequential_pairing(&matching)
        .map_err(|_| Error::InfeasibleAfterExclusion("no actuator reaches a sensor".into()))?;

    let (anchor_a, anchor_s) = matching.pairs()[0];
    let free_a = matching.left_unmatched();
    let free_s = matching.right_unmatched();
    let paired = free_a.len().min(free_s.len());
    for (&a, &s) in free_a.iter().zip(&free_s) {
        links.insert(Link::new(s + 1, a + 1));
    }
    for &s in &free_s[paired..] {
        links.insert(Link::new(s + 1, anchor_a + 1));
    }
    for &a in &free_a[paired..] {
        links.insert(Link::new(anchor_s + 1, a + 1));
    }

    let d = build_closed_loop_digraph(&full, &links, &LinkSet::new())?;
    if !condition_a(&d).holds {
        return Err(Error::InfeasibleAfterExclusion(format!(
            "pattern {links} leaves a state SCC without feedback"
        )));
    }
    Ok((links, matching))
}

fn shift(links: &LinkSet, actuator_offset: usize, sensor_offset: usize) -> LinkSet {
    links
        .iter()
        .map(|l| Link::new(l.sensor + sensor_offset, l.actuator + actuator_offset))
        .collect()
}

/// `k + 1` pairwise-disjoint information patterns.
///
/// When both collections split evenly into `k + 1` rounds, round `r` uses the
/// `r`-th contiguous block of actuators and sensors. Otherwise every round
/// uses the full collections and excludes the matchings of earlier rounds.
pub fn robust_information_pattern(
    pattern: &StructuralPattern,
    actuators: &DedicatedSelection,
    sensors: &DedicatedSelection,
    k: usize,
) -> Result<Vec<LinkSet>> {
    robust_mode(pattern, actuators, sensors, k, Mode::Full)
}

fn robust_mode(
    pattern: &StructuralPattern,
    actuators: &DedicatedSelection,
    sensors: &DedicatedSelection,
    k: usize,
    mode: Mode,
) -> Result<Vec<LinkSet>> {
    let rounds = k + 1;
    let split =
        k > 0 && actuators.len().is_multiple_of(rounds) && sensors.len().is_multiple_of(rounds);
    let mut out: Vec<LinkSet> = Vec::with_capacity(rounds);
    if split {
        let (t, s) = (actuators.len() / rounds, sensors.len() / rounds);
        for r in 0..rounds {
            let a = DedicatedSelection::new(actuators.indices()[r * t..(r + 1) * t].to_vec());
            let c = DedicatedSelection::new(sensors.indices()[r * s..(r + 1) * s].to_vec());
            let (links, _) = procedure1_mode(pattern, &a, &c, &BTreeSet::new(), mode)?;
            out.push(shift(&links, r * t, r * s));
        }
        return Ok(out);
    }
    let mut excluded = BTreeSet::new();
    for r in 0..rounds {
        let (links, matching) = procedure1_mode(pattern, actuators, sensors, &excluded, mode)
            .map_err(|e| match e {
                Error::InfeasibleAfterExclusion(msg) => {
                    Error::InfeasibleAfterExclusion(format!("round {}: {msg}", r + 1))
                }
                other => other,
            })?;
        if let Some(prev) = out.iter().find(|p| !p.is_disjoint(&links)) {
            return Err(Error::InfeasibleAfterExclusion(format!(
                "round {}: pattern {links} overlaps earlier pattern {prev}",
                r + 1
            )));
        }
        excluded.extend(matching.pairs().into_iter().map(|(a, s)| (a + 1, s + 1)));
        out.push(links);
    }
    Ok(out)
}

/// Minimum-cost placement and links tolerating up to `k` failures.
pub fn codesign(pattern: &StructuralPattern, k: usize) -> Result<CoDesignSolution> {
    codesign_with(pattern, k, Mode::Full, Representative::default())
}

/// Like [`codesign`] but only rules out fixed modes off the origin; the
/// perfect state matching is not required.
pub fn codesign_stabilization(pattern: &StructuralPattern, k: usize) -> Result<CoDesignSolution> {
    codesign_with(pattern, k, Mode::Stabilization, Representative::default())
}

pub fn codesign_with(
    pattern: &StructuralPattern,
    k: usize,
    mode: Mode,
    rule: Representative,
) -> Result<CoDesignSolution> {
    if mode == Mode::Full && !has_perfect_state_matching(pattern) {
        return Err(Error::AssumptionA1Violated);
    }
    let state = StructuralPattern::state_only(pattern.n(), pattern.a_entries().iter().copied())?;
    let rounds = k + 1;
    let act_rounds = select_rounds(&boundary_candidates(&state, false, rule), rounds);
    let sen_rounds = select_rounds(&boundary_candidates(&state, true, rule), rounds);
    let (t, s) = (act_rounds[0].len(), sen_rounds[0].len());

    let mut sub_patterns = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let (links, _) = procedure1_mode(
            &state,
            &act_rounds[r],
            &sen_rounds[r],
            &BTreeSet::new(),
            mode,
        )?;
        sub_patterns.push(shift(&links, r * t, r * s));
    }
    let links = sub_patterns
        .iter()
        .fold(LinkSet::new(), |acc, p| acc.union(p));
    let mut sol = CoDesignSolution {
        actuators: concat(&act_rounds),
        sensors: concat(&sen_rounds),
        links,
        sub_patterns,
        k,
        verified: false,
    };
    sol.verified = verify_codesign(&state, &sol, k, mode)?.passed;
    Ok(sol)
}

/// Outcome of checking a design against every failure within budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub scenarios_checked: usize,
    /// Scenarios that fail, the no-failure case included if it does.
    pub failures: Vec<ScenarioDiagnostics>,
}

/// Checks `sol` under every joint failure of at most `k` links, actuators
/// and sensors.
pub fn verify_codesign(
    pattern: &StructuralPattern,
    sol: &CoDesignSolution,
    k: usize,
    mode: Mode,
) -> Result<VerifyReport> {
    let full = pattern.with_dedicated(&sol.actuators, &sol.sensors)?;
    sol.links.check_bounds(full.p(), full.m())?;
    let failures = FailureCollection::budget(&sol.links, full.p(), full.m(), k);
    let opts = AnalysisOptions {
        include_nominal: true,
        stabilization_only: mode == Mode::Stabilization,
    };
    let report = analyze(&full, &sol.links, &failures, opts)?;
    let scenarios_checked = report.scenarios.len();
    let failures: Vec<_> = report
        .scenarios
        .into_iter()
        .filter(|s| !s.passes())
        .collect();
    Ok(VerifyReport {
        passed: failures.is_empty(),
        scenarios_checked,
        failures,
    })
}

/// Bounds for the exhaustive search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteForceLimits {
    pub n_max: usize,
    pub k_max: usize,
    /// Give up after this many candidate designs have been checked.
    pub max_checks: u64,
}

impl Default for BruteForceLimits {
    fn default() -> Self {
        Self {
            n_max: 6,
            k_max: 1,
            max_checks: 20_000_000,
        }
    }
}

/// Multisets of size `size` over `1..=n`, as sorted vectors.
fn multisets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for v in start..=n {
            cur.push(v);
            go(v, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(1, n, size, &mut Vec::new(), &mut out);
    out
}

struct Search<'a> {
    state: &'a StructuralPattern,
    k: usize,
    mode: Mode,
    checks: u64,
    limit: u64,
}

impl Search<'_> {
    fn feasible(&mut self, act: &[usize], sen: &[usize], links: &LinkSet) -> Result<bool> {
        self.checks += 1;
        if self.checks > self.limit {
            return Err(Error::LimitExceeded(format!(
                "brute force stopped after {} candidate checks",
                self.limit
            )));
        }
        let sol = CoDesignSolution {
            actuators: DedicatedSelection::new(act.to_vec()),
            sensors: DedicatedSelection::new(sen.to_vec()),
            links: links.clone(),
            sub_patterns: Vec::new(),
            k: self.k,
            verified: false,
        };
        Ok(verify_codesign(self.state, &sol, self.k, self.mode)?.passed)
    }

    /// Searches link matrices with exactly `total` ones in which every row
    /// (actuator) and column (sensor) is used. Rows on the same state are
    /// kept in non-increasing mask order to skip relabelled duplicates.
    fn links_with(
        &mut self,
        act: &[usize],
        sen: &[usize],
        total: usize,
    ) -> Result<Option<LinkSet>> {
        let mut masks = Vec::with_capacity(act.len());
        self.rows(act, sen, total, 0, &mut masks)
    }

    fn rows(
        &mut self,
        act: &[usize],
        sen: &[usize],
        left: usize,
        covered: u32,
        masks: &mut Vec<u32>,
    ) -> Result<Option<LinkSet>> {
        let row = masks.len();
        let ns = sen.len();
        let all = (1u32 << ns) - 1;
        if row == act.len() {
            if left != 0 || covered != all {
                return Ok(None);
            }
            let links: LinkSet = masks
                .iter()
                .enumerate()
                .flat_map(|(i, &m)| {
                    (0..ns)
                        .filter(move |j| m & (1 << j) != 0)
                        .map(move |j| Link::new(j + 1, i + 1))
                })
                .collect();
            return Ok(self.feasible(act, sen, &links)?.then_some(links));
        }
        let rows_after = act.len() - row - 1;
        let upper = if row > 0 && act[row] == act[row - 1] {
            masks[row - 1]
        } else {
            all
        };
        for mask in (1..=upper).rev() {
            let ones = mask.count_ones() as usize;
            if ones > left || left - ones < rows_after {
                continue;
            }
            let cov = covered | mask;
            let missing = (all & !cov).count_ones() as usize;
            if missing > (left - ones).min(rows_after * ns) {
                continue;
            }
            masks.push(mask);
            let found = self.rows(act, sen, left - ones, cov, masks)?;
            masks.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// Exact minimum-cost design by exhaustive search over increasing total
/// cost. Meant as a reference on tiny instances.
pub fn brute_force_codesign(
    pattern: &StructuralPattern,
    k: usize,
    mode: Mode,
    limits: BruteForceLimits,
) -> Result<CoDesignSolution> {
    let n = pattern.n();
    if n > limits.n_max {
        return Err(Error::LimitExceeded(format!(
            "n = {n} exceeds {}",
            limits.n_max
        )));
    }
    if k > limits.k_max {
        return Err(Error::LimitExceeded(format!(
            "k = {k} exceeds {}",
            limits.k_max
        )));
    }
    let state = StructuralPattern::state_only(n, pattern.a_entries().iter().copied())?;
    let mut search = Search {
        state: &state,
        k,
        mode,
        checks: 0,
        limit: limits.max_checks,
    };
    // Largest useful design: k + 1 actuators and sensors on every state,
    // fully linked.
    let max_side = (k + 1) * n;
    let max_cost = 2 * max_side + max_side * max_side;
    let mut pair_ok: HashMap<(Vec<usize>, Vec<usize>), bool> = HashMap::new();
    let sides: Vec<Vec<Vec<usize>>> = (0..=max_side).map(|s| multisets(n, s)).collect();

    for cost in 3..=max_cost {
        for na in 1..=max_side.min(cost - 2) {
            for ns in 1..=max_side.min(cost - 1 - na) {
                let nl = cost - na - ns;
                if nl < na.max(ns) || nl > na * ns {
                    continue;
                }
                for act in &sides[na] {
                    for sen in &sides[ns] {
                        let key = (act.clone(), sen.clone());
                        let ok = match pair_ok.get(&key) {
                            Some(&ok) => ok,
                            None => {
                                let all: LinkSet = (1..=ns)
                                    .flat_map(|j| (1..=na).map(move |i| Link::new(j, i)))
                                    .collect();
                                let ok = search.feasible(act, sen, &all)?;
                                pair_ok.insert(key, ok);
                                ok
                            }
                        };
                        if !ok {
                            continue;
                        }
                        if let Some(links) = search.links_with(act, sen, nl)? {
                            return Ok(CoDesignSolution {
                                actuators: DedicatedSelection::new(act.clone()),
                                sensors: DedicatedSelection::new(sen.clone()),
                                links,
                                sub_patterns: Vec::new(),
                                k,
                                verified: true,
                            });
                        }
                    }
                }
            }
        }
    }
    Err(Error::Infeasible(
        "no design within the search range".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain(n: usize) -> StructuralPattern {
        StructuralPattern::state_only(n, (1..n).map(|i| (i + 1, i))).unwrap()
    }

    fn with_loops(n: usize, extra: &[(usize, usize)]) -> StructuralPattern {
        StructuralPattern::state_only(n, (1..=n).map(|i| (i, i)).chain(extra.iter().copied()))
            .unwrap()
    }

    #[test]
    fn controllability_cases() {
        let c = chain(3)
            .with_dedicated(
                &DedicatedSelection::new(vec![1]),
                &DedicatedSelection::default(),
            )
            .unwrap();
        assert!(is_structurally_controllable(&c));
        let iso = with_loops(2, &[])
            .with_dedicated(
                &DedicatedSelection::new(vec![1]),
                &DedicatedSelection::default(),
            )
            .unwrap();
        assert!(!is_structurally_controllable(&iso));
    }

    #[test]
    fn observability_cases() {
        let c = chain(3)
            .with_dedicated(
                &DedicatedSelection::default(),
                &DedicatedSelection::new(vec![3]),
            )
            .unwrap();
        assert!(is_structurally_observable(&c));
        assert!(!is_structurally_observable(&chain(3)));
    }

    #[test]
    fn sequential_pairing_examples() {
        let m = Matching::from_pairs(2, 1, &[(1, 0)]).unwrap();
        assert_eq!(
            sequential_pairing(&m).unwrap(),
            LinkSet::from_pairs(&[(1, 2)])
        );
        let m = Matching::from_pairs(2, 2, &[(0, 0), (1, 1)]).unwrap();
        assert_eq!(
            sequential_pairing(&m).unwrap(),
            LinkSet::from_pairs(&[(1, 2), (2, 1)])
        );
        assert_eq!(
            sequential_pairing(&Matching::empty(1, 1)),
            Err(Error::EmptyMatching)
        );
    }

    #[test]
    fn sequential_pairing_closes_one_cycle() {
        // actuator i -> sensor (i+1) mod 3 in the matching
        let m = Matching::from_pairs(3, 3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let links = sequential_pairing(&m).unwrap();
        // Walk actuator -> matched sensor -> linked actuator.
        let mut a = 0usize;
        let mut visited = Vec::new();
        for _ in 0..3 {
            visited.push(a);
            let s = m.left_match[a].unwrap();
            let next: Vec<_> = links.iter().filter(|l| l.sensor == s + 1).collect();
            assert_eq!(next.len(), 1);
            a = next[0].actuator - 1;
        }
        assert_eq!(a, 0);
        visited.sort_unstable();
        assert_eq!(visited, vec![0, 1, 2]);
    }

    #[test]
    fn procedure1_scalar() {
        let p = with_loops(1, &[]);
        let one = DedicatedSelection::new(vec![1]);
        let (links, _) = procedure1(&p, &one, &one, &BTreeSet::new()).unwrap();
        assert_eq!(links, LinkSet::from_pairs(&[(1, 1)]));
    }

    #[test]
    fn procedure1_rejects_uncontrollable() {
        let p = with_loops(2, &[]);
        let err = procedure1(
            &p,
            &DedicatedSelection::new(vec![1]),
            &DedicatedSelection::new(vec![1, 2]),
            &BTreeSet::new(),
        );
        assert_eq!(err.unwrap_err(), Error::NotControllable);
    }

    #[test]
    fn robust_pattern_k0_is_procedure1() {
        let p = with_loops(3, &[(2, 1), (3, 2), (1, 3)]);
        let a = DedicatedSelection::new(vec![1, 2]);
        let s = DedicatedSelection::new(vec![3]);
        let single = robust_information_pattern(&p, &a, &s, 0).unwrap();
        let (links, _) = procedure1(&p, &a, &s, &BTreeSet::new()).unwrap();
        assert_eq!(single, vec![links]);
    }

    #[test]
    fn robust_pattern_single_edge_cannot_repeat() {
        let n = 3;
        let full =
            StructuralPattern::state_only(n, (1..=n).flat_map(|i| (1..=n).map(move |j| (i, j))))
                .unwrap();
        let one = DedicatedSelection::new(vec![1]);
        let err = robust_information_pattern(&full, &one, &one, 1).unwrap_err();
        assert!(matches!(err, Error::InfeasibleAfterExclusion(_)));
    }

    #[test]
    fn single_scc_three_copies() {
        let p = with_loops(4, &[(2, 1), (3, 2), (4, 3), (1, 4)]);
        let lowest = min_dedicated_actuators_with(&p, 2, Representative::Lowest).unwrap();
        assert_eq!(lowest.indices(), &[1, 1, 1]);
        let spread = min_dedicated_actuators(&p, 2).unwrap();
        assert_eq!(spread.len(), 3);
        // Two actuators cannot survive two actuator failures.
        assert!(
            brute_force_codesign(&p, 1, Mode::Full, BruteForceLimits::default())
                .unwrap()
                .actuators
                .len()
                >= 2
        );
    }

    #[test]
    fn disconnected_states_one_sensor_each() {
        let p = with_loops(2, &[]);
        assert_eq!(min_dedicated_sensors(&p, 0).unwrap().indices(), &[1, 2]);
    }

    #[test]
    fn chain_full_mode_needs_a1() {
        assert_eq!(
            codesign(&chain(3), 0).unwrap_err(),
            Error::AssumptionA1Violated
        );
        assert_eq!(
            min_dedicated_actuators(&chain(3), 0).unwrap_err(),
            Error::AssumptionA1Violated
        );
    }

    #[test]
    fn chain_stabilization_mode() {
        let sol = codesign_stabilization(&chain(4), 0).unwrap();
        assert_eq!(sol.actuators.indices(), &[1]);
        assert_eq!(sol.sensors.indices(), &[4]);
        assert_eq!(sol.links, LinkSet::from_pairs(&[(1, 1)]));
        assert!(sol.verified);
    }

    #[test]
    fn scalar_brute_force_costs() {
        let p = with_loops(1, &[]);
        let lim = BruteForceLimits::default();
        assert_eq!(
            brute_force_codesign(&p, 0, Mode::Full, lim).unwrap().cost(),
            3
        );
        let k1 = brute_force_codesign(&p, 1, Mode::Full, lim).unwrap();
        assert_eq!(k1.cost(), 6);
        assert_eq!(codesign(&p, 1).unwrap().cost(), 6);
    }

    #[test]
    fn brute_force_guards() {
        let big = with_loops(7, &[]);
        assert!(matches!(
            brute_force_codesign(&big, 0, Mode::Full, BruteForceLimits::default()),
            Err(Error::LimitExceeded(_))
        ));
        let p = with_loops(1, &[]);
        assert!(matches!(
            brute_force_codesign(&p, 2, Mode::Full, BruteForceLimits::default()),
            Err(Error::LimitExceeded(_))
        ));
    }

    #[test]
    fn multisets_count() {
        // C(n + s - 1, s)
        assert_eq!(multisets(3, 2).len(), 6);
        assert_eq!(multisets(5, 4).len(), 70);
        assert_eq!(multisets(2, 0), vec![Vec::<usize>::new()]);
    }

    fn a1_pattern() -> impl Strategy<Value = StructuralPattern> {
        (1usize..=4).prop_flat_map(|n| {
            (
                proptest::collection::vec(any::<bool>(), n * n),
                Just(n),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            )
                .prop_map(|(bits, n, perm)| {
                    // A permutation guarantees a cycle cover; add random edges.
                    let mut entries: BTreeSet<(usize, usize)> = perm
                        .iter()
                        .enumerate()
                        .map(|(i, &j)| (j + 1, ((i + 1) % n) + 1))
                        .collect();
                    for (k, b) in bits.iter().enumerate() {
                        if *b && k % 3 == 0 {
                            entries.insert((k / n + 1, k % n + 1));
                        }
                    }
                    StructuralPattern::state_only(n, entries).unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn codesign_cardinalities_and_invariants(p in a1_pattern(), k in 0usize..=2) {
            prop_assume!(has_perfect_state_matching(&p));
            let sol = codesign(&p, k).unwrap();
            let d = build_state_digraph(&p).to_digraph();
            let class = classify_sccs(&scc_decompose(&d));
            let t = class.non_top_components().len();
            let s = class.non_bottom_components().len();
            prop_assert_eq!(sol.actuators.len(), (k + 1) * t);
            prop_assert_eq!(sol.sensors.len(), (k + 1) * s);
            prop_assert_eq!(sol.links.len(), (k + 1) * t.max(s));
            prop_assert!(sol.verified);
            prop_assert_eq!(sol.check_invariants(&p), Ok(()));
            for sub in &sol.sub_patterns {
                prop_assert_eq!(sub.len(), t.max(s));
            }
        }

        #[test]
        fn codesign_k0_matches_brute_force(p in a1_pattern()) {
            prop_assume!(has_perfect_state_matching(&p));
            let sol = codesign(&p, 0).unwrap();
            let best = brute_force_codesign(&p, 0, Mode::Full, BruteForceLimits::default()).unwrap();
            prop_assert_eq!(sol.cost(), best.cost());
        }
    }
}
