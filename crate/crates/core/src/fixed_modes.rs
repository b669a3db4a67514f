//! Structural tests for (resilient) fixed modes and a numeric cross-check.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{max_matching, scc_decompose, BipartiteGraph};
use crate::pattern::{
    build_closed_loop_digraph, FailureCollection, FailureScenario, LinkSet, Realization,
    StructuralPattern, SystemDigraph, Vertex,
};

/// Outcome of the feedback-in-every-SCC test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionA {
    pub holds: bool,
    /// 1-based states whose SCC holds no surviving feedback edge.
    pub violating_states: Vec<usize>,
    /// Ids (in the closed-loop SCC decomposition) of the offending components.
    pub violating_sccs: Vec<usize>,
}

/// Every state vertex lies in an SCC that contains a feedback edge.
pub fn condition_a(d: &SystemDigraph) -> ConditionA {
    let scc = scc_decompose(&d.to_digraph());
    let mut has_feedback = vec![false; scc.count()];
    for (y, u) in d.feedback_edges() {
        if scc.same_component(y, u) {
            has_feedback[scc.component_of[y]] = true;
        }
    }
    let mut violating_states = Vec::new();
    let mut violating_sccs = Vec::new();
    for i in 1..=d.n {
        let c = scc.component_of[d.id(Vertex::State(i))];
        if !has_feedback[c] {
            violating_states.push(i);
            if !violating_sccs.contains(&c) {
                violating_sccs.push(c);
            }
        }
    }
    ConditionA {
        holds: violating_states.is_empty(),
        violating_states,
        violating_sccs,
    }
}

/// A family of vertex-disjoint cycles covers every state vertex.
///
/// Input and output vertices get a self-loop in the bipartite copy so they
/// can stay outside the cover.
pub fn condition_b(d: &SystemDigraph) -> bool {
    let v = d.vertex_count();
    let extra = (d.n..v).map(|i| (i, i));
    let b = BipartiteGraph::new(v, v, d.edges().into_iter().chain(extra));
    max_matching(&b).size() == v
}

/// Conditions checked for one failure scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioDiagnostics {
    pub scenario: FailureScenario,
    pub condition_a: bool,
    /// `None` when only the stabilization variant was checked.
    pub condition_b: Option<bool>,
    pub violating_states: Vec<usize>,
}

impl ScenarioDiagnostics {
    pub fn passes(&self) -> bool {
        self.condition_a && self.condition_b.unwrap_or(true)
    }
}

/// Per-scenario results plus the overall verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub scenarios: Vec<ScenarioDiagnostics>,
    /// True iff some scenario fails.
    pub has_fixed_modes: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Prepend the no-failure scenario.
    pub include_nominal: bool,
    /// Check only the SCC condition (fixed modes at the origin are tolerated).
    pub stabilization_only: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            include_nominal: true,
            stabilization_only: false,
        }
    }
}

pub fn check_scenario(
    pattern: &StructuralPattern,
    links: &LinkSet,
    scenario: &FailureScenario,
    stabilization_only: bool,
) -> Result<ScenarioDiagnostics> {
    scenario.check_against(links)?;
    let removed = scenario.removed_links(links);
    let d = build_closed_loop_digraph(pattern, links, &removed)?;
    let a = condition_a(&d);
    let b = (!stabilization_only).then(|| condition_b(&d));
    Ok(ScenarioDiagnostics {
        scenario: scenario.clone(),
        condition_a: a.holds,
        condition_b: b,
        violating_states: a.violating_states,
    })
}

pub fn analyze(
    pattern: &StructuralPattern,
    links: &LinkSet,
    failures: &FailureCollection,
    opts: AnalysisOptions,
) -> Result<AnalysisReport> {
    failures.check_against(links)?;
    let nominal = FailureScenario::none();
    let scenarios = opts
        .include_nominal
        .then_some(&nominal)
        .into_iter()
        .chain(failures.iter())
        .map(|s| check_scenario(pattern, links, s, opts.stabilization_only))
        .collect::<Result<Vec<_>>>()?;
    let has_fixed_modes = scenarios.iter().any(|s| !s.passes());
    Ok(AnalysisReport {
        scenarios,
        has_fixed_modes,
    })
}

pub fn has_structurally_fixed_modes(pattern: &StructuralPattern, links: &LinkSet) -> bool {
    let d = build_closed_loop_digraph(pattern, links, &LinkSet::new())
        .expect("empty failure set is always contained in the link set");
    !(condition_a(&d).holds && condition_b(&d))
}

/// Theorem-style test over a failure collection, no-failure scenario included.
pub fn has_resilient_sfm(
    pattern: &StructuralPattern,
    links: &LinkSet,
    failures: &FailureCollection,
) -> Result<bool> {
    Ok(analyze(pattern, links, failures, AnalysisOptions::default())?.has_fixed_modes)
}

/// Like [`has_resilient_sfm`] but tolerates fixed modes at the origin.
pub fn has_unstable_resilient_sfm(
    pattern: &StructuralPattern,
    links: &LinkSet,
    failures: &FailureCollection,
) -> Result<bool> {
    let opts = AnalysisOptions {
        include_nominal: true,
        stabilization_only: true,
    };
    Ok(analyze(pattern, links, failures, opts)?.has_fixed_modes)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericOptions {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            trials: 3,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// Eigenvalues shared by `A + B K C` across random gains supported on
/// `links \ gamma`, entries uniform on `[-1, 1]`.
pub fn numeric_fixed_modes(
    r: &Realization,
    links: &LinkSet,
    gamma: &LinkSet,
    opts: NumericOptions,
) -> Result<Vec<Complex<f64>>> {
    if opts.trials < 2 {
        return Err(Error::InvalidPattern(
            "numeric fixed modes need at least 2 trials".into(),
        ));
    }
    links.check_bounds(r.p(), r.m()).map_err(|_| {
        Error::DimensionMismatch(format!(
            "links do not fit {} actuators x {} sensors",
            r.p(),
            r.m()
        ))
    })?;
    let active = links.difference(gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut common: Option<Vec<Complex<f64>>> = None;
    for _ in 0..opts.trials {
        let mut k = DMatrix::zeros(r.p(), r.m());
        for l in &active {
            k[(l.actuator - 1, l.sensor - 1)] = rng.random_range(-1.0..=1.0);
        }
        let eig: Vec<Complex<f64>> = r
            .closed_loop(&k)?
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect();
        common = Some(match common {
            None => eig,
            Some(prev) => intersect_spectra(&prev, &eig, opts.tol),
        });
    }
    Ok(common.unwrap_or_default())
}

/// Greedy pairing: each `a` takes the nearest unused `b` within
/// `tol * max(1, |a|)`.
fn intersect_spectra(a: &[Complex<f64>], b: &[Complex<f64>], tol: f64) -> Vec<Complex<f64>> {
    let mut used = vec![false; b.len()];
    let mut out = Vec::new();
    for &x in a {
        let bound = tol * x.norm().max(1.0);
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .filter(|&(_, d)| d <= bound)
            .min_by(|p, q| p.1.total_cmp(&q.1));
        if let Some((j, _)) = best {
            used[j] = true;
            out.push(x);
        }
    }
    out
}
