//! Static output-feedback synthesis under link failures by cone
//! complementarity linearization, plus spectral verification.
//!
//! The LMIs use the augmented loop matrix `T(K) = [A B; KCA KCB]`, which is
//! affine in `K` and has the spectrum of `A + BKC` padded with zeros.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_modes::{numeric_fixed_modes, NumericOptions};
use crate::pattern::{FailureCollection, FailureScenario, Gain, LinkSet, Realization};
use crate::sdp::{sdp_solve, LmiBlock, SdpOptions, SdpProblem, SymVar};

/// Realization with the gain made square by zero padding.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSystem {
    pub a: DMatrix<f64>,
    /// n x q
    pub b: DMatrix<f64>,
    /// q x n
    pub c: DMatrix<f64>,
    pub links: LinkSet,
    realization: Realization,
}

impl BlockSystem {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Side of the padded gain.
    pub fn q(&self) -> usize {
        self.b.ncols()
    }

    /// `n + q`
    pub fn dim(&self) -> usize {
        self.n() + self.q()
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    /// Embeds a `p x m` gain into the padded `q x q` shape.
    pub fn pad_gain(&self, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (p, m) = (self.realization.p(), self.realization.m());
        if k.nrows() != p || k.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "gain is {}x{}, expected {p}x{m}",
                k.nrows(),
                k.ncols()
            )));
        }
        let mut out = DMatrix::zeros(self.q(), self.q());
        out.view_mut((0, 0), (p, m)).copy_from(k);
        Ok(out)
    }

    /// `T(K) = [A B; KCA KCB]` for a padded gain.
    pub fn augmented(&self, k_pad: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, q) = (self.n(), self.q());
        let top = {
            let mut t = DMatrix::zeros(n, n + q);
            t.view_mut((0, 0), (n, n)).copy_from(&self.a);
            t.view_mut((0, n), (n, q)).copy_from(&self.b);
            t
        };
        let mut out = DMatrix::zeros(n + q, n + q);
        out.view_mut((0, 0), (n, n + q)).copy_from(&top);
        let bottom = k_pad * &self.c * &top;
        out.view_mut((n, 0), (q, n + q)).copy_from(&bottom);
        out
    }
}

/// Pads sensors (zero rows of C) or actuators (zero columns of B) so that
/// the gain is square. Links keep their indices.
pub fn pad_to_square(r: &Realization, links: &LinkSet) -> Result<BlockSystem> {
    links.check_bounds(r.p(), r.m())?;
    let q = r.p().max(r.m());
    let n = r.n();
    let mut b = DMatrix::zeros(n, q);
    b.view_mut((0, 0), (n, r.p())).copy_from(&r.b);
    let mut c = DMatrix::zeros(q, n);
    c.view_mut((0, 0), (r.m(), n)).copy_from(&r.c);
    Ok(BlockSystem {
        a: r.a.clone(),
        b,
        c,
        links: links.clone(),
        realization: r.clone(),
    })
}

/// `[A B; C K]` with `K` given in padded `q x q` form.
pub fn build_block_matrix(bs: &BlockSystem, k_pad: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, q) = (bs.n(), bs.q());
    if k_pad.nrows() != q || k_pad.ncols() != q {
        return Err(Error::DimensionMismatch(format!(
            "gain is {}x{}, expected {q}x{q}",
            k_pad.nrows(),
            k_pad.ncols()
        )));
    }
    let mut m = DMatrix::zeros(n + q, n + q);
    m.view_mut((0, 0), (n, n)).copy_from(&bs.a);
    m.view_mut((0, n), (n, q)).copy_from(&bs.b);
    m.view_mut((n, 0), (q, n)).copy_from(&bs.c);
    m.view_mut((n, n), (q, q)).copy_from(k_pad);
    Ok(m)
}

/// Largest eigenvalue modulus. Panics on a non-square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "spectral radius of a non-square matrix");
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStability {
    pub scenario: FailureScenario,
    /// Effective gain, row-major `p x m`.
    pub gain: Vec<Vec<f64>>,
    /// ρ(A + B K^Γ C)
    pub closed_loop_radius: f64,
    /// ρ([A B; C K^Γ]) after padding.
    pub block_radius: f64,
    pub schur: bool,
    pub block_schur: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub open_loop_radius: f64,
    /// Nominal first, then the scenarios in the order given.
    pub scenarios: Vec<ScenarioStability>,
}

impl StabilityReport {
    pub fn all_schur(&self) -> bool {
        self.scenarios.iter().all(|s| s.schur)
    }

    pub fn max_radius(&self) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.closed_loop_radius)
            .fold(0.0, f64::max)
    }

    /// Scenarios where the two Schur tests disagree.
    pub fn disagreements(&self) -> usize {
        self.scenarios
            .iter()
            .filter(|s| s.schur != s.block_schur)
            .count()
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Spectral radii of the closed loop for the nominal gain and every scenario.
pub fn verify_stabilization(
    r: &Realization,
    gain: &Gain,
    failures: &FailureCollection,
) -> Result<StabilityReport> {
    let bs = pad_to_square(r, gain.pattern())?;
    let mut scenarios = Vec::with_capacity(failures.len() + 1);
    for scenario in std::iter::once(FailureScenario::none()).chain(failures.iter().cloned()) {
        let eff = gain.apply_failure(&scenario);
        let closed_loop_radius = spectral_radius(&r.closed_loop(eff.matrix())?);
        let block_radius = spectral_radius(&build_block_matrix(&bs, &bs.pad_gain(eff.matrix())?)?);
        scenarios.push(ScenarioStability {
            scenario,
            gain: rows(eff.matrix()),
            closed_loop_radius,
            block_radius,
            schur: closed_loop_radius < 1.0,
            block_schur: block_radius < 1.0,
        });
    }
    Ok(StabilityReport {
        open_loop_radius: spectral_radius(&r.a),
        scenarios,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CclOptions {
    pub max_iter: usize,
    /// Strictness of `[X Tᵀ; T Y] ≻ 0`, realized as `⪰ epsilon·I`.
    pub epsilon: f64,
    /// Success when every radius is below `1 - margin`.
    pub margin: f64,
    pub stall_tol: f64,
    pub stall_window: usize,
    /// One (X, Y) pair for all scenarios instead of one per scenario.
    pub shared_lyapunov: bool,
    pub sdp: SdpOptions,
}

impl Default for CclOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            epsilon: 1e-6,
            margin: 0.0,
            stall_tol: 1e-9,
            stall_window: 10,
            shared_lyapunov: true,
            sdp: SdpOptions::default(),
        }
    }
}

/// Iterate of the linearized problem. `x` and `y` hold one matrix when the
/// Lyapunov pair is shared, otherwise one per scenario (nominal first).
#[derive(Clone, Debug, PartialEq)]
pub struct SdpState {
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<DMatrix<f64>>,
    pub gain: Gain,
    pub iteration: usize,
    pub cost: f64,
}

impl SdpState {
    /// Value `2N` (times the number of pairs) that the cost approaches when X = Y⁻¹.
    pub fn target(&self) -> f64 {
        2.0 * self.x.iter().map(|m| m.nrows()).sum::<usize>() as f64
    }

    /// `Σ ‖X Y − I‖_F` over the pairs.
    pub fn inverse_residual(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(x, y)| (x * y - DMatrix::identity(x.nrows(), x.nrows())).norm())
            .sum()
    }
}

struct Layout {
    big_n: usize,
    pairs: Vec<(SymVar, SymVar)>,
    k_offset: usize,
    nvars: usize,
    /// Removed links per LMI scenario (nominal first).
    removed: Vec<LinkSet>,
}

impl Layout {
    fn new(bs: &BlockSystem, failures: &FailureCollection, shared: bool) -> Self {
        let big_n = bs.dim();
        let removed: Vec<LinkSet> = std::iter::once(LinkSet::new())
            .chain(failures.iter().map(|f| f.removed_links(&bs.links)))
            .collect();
        let npairs = if shared { 1 } else { removed.len() };
        let sym = big_n * (big_n + 1) / 2;
        let pairs = (0..npairs)
            .map(|i| {
                (
                    SymVar::new(2 * i * sym, big_n),
                    SymVar::new((2 * i + 1) * sym, big_n),
                )
            })
            .collect();
        let k_offset = 2 * npairs * sym;
        Self {
            big_n,
            pairs,
            k_offset,
            nvars: k_offset + bs.links.len(),
            removed,
        }
    }

    fn pair(&self, scenario: usize) -> (SymVar, SymVar) {
        self.pairs[scenario.min(self.pairs.len() - 1)]
    }

    fn problem(&self, bs: &BlockSystem, c: DVector<f64>, epsilon: f64) -> SdpProblem {
        let (n, big_n) = (bs.n(), self.big_n);
        let mut top = DMatrix::zeros(n, big_n);
        top.view_mut((0, 0), (n, n)).copy_from(&bs.a);
        top.view_mut((0, n), (n, bs.q())).copy_from(&bs.b);
        let ctop = &bs.c * &top;
        let mut p = SdpProblem::new(c);
        for (i, removed) in self.removed.iter().enumerate() {
            let (xv, yv) = self.pair(i);
            let mut b = LmiBlock::zeros(2 * big_n).with_margin(epsilon);
            xv.place(&mut b, 0, 0, 1.0);
            yv.place(&mut b, big_n, big_n, 1.0);
            for r in 0..n {
                for col in 0..big_n {
                    if top[(r, col)] != 0.0 {
                        b.add_constant(big_n + r, col, top[(r, col)]);
                    }
                }
            }
            for (li, l) in bs.links.iter().enumerate() {
                if removed.contains(l) {
                    continue;
                }
                for col in 0..big_n {
                    let v = ctop[(l.sensor - 1, col)];
                    if v != 0.0 {
                        b.add(self.k_offset + li, big_n + n + l.actuator - 1, col, v);
                    }
                }
            }
            p.push(b);
        }
        for &(xv, yv) in &self.pairs {
            let mut b = LmiBlock::zeros(2 * big_n);
            xv.place(&mut b, 0, 0, 1.0);
            yv.place(&mut b, big_n, big_n, 1.0);
            for d in 0..big_n {
                b.add_constant(d, big_n + d, 1.0);
            }
            p.push(b);
        }
        p
    }

    fn objective(&self, xk: &[DMatrix<f64>], yk: &[DMatrix<f64>]) -> DVector<f64> {
        let mut c = DVector::zeros(self.nvars);
        for (i, &(xv, yv)) in self.pairs.iter().enumerate() {
            xv.add_inner(&mut c, &yk[i]);
            yv.add_inner(&mut c, &xk[i]);
        }
        c
    }

    fn state(
        &self,
        bs: &BlockSystem,
        x: &DVector<f64>,
        iteration: usize,
        cost: f64,
    ) -> Result<SdpState> {
        let r = bs.realization();
        let values: Vec<f64> = (0..bs.links.len()).map(|i| x[self.k_offset + i]).collect();
        Ok(SdpState {
            x: self.pairs.iter().map(|(xv, _)| xv.value(x)).collect(),
            y: self.pairs.iter().map(|(_, yv)| yv.value(x)).collect(),
            gain: Gain::from_link_values(r.p(), r.m(), bs.links.clone(), &values)?,
            iteration,
            cost,
        })
    }

    fn pack(&self, s: &SdpState) -> DVector<f64> {
        let mut v = DVector::zeros(self.nvars);
        for (i, &(xv, yv)) in self.pairs.iter().enumerate() {
            for a in 0..self.big_n {
                for b in a..self.big_n {
                    v[xv.index(a, b)] = s.x[i][(a, b)];
                    v[yv.index(a, b)] = s.y[i][(a, b)];
                }
            }
        }
        for (li, l) in s.gain.pattern().iter().enumerate() {
            v[self.k_offset + li] = s.gain.matrix()[(l.actuator - 1, l.sensor - 1)];
        }
        v
    }
}

/// Unstable eigenvalue shared by every gain on the surviving links of some
/// scenario, if any.
fn unstable_fixed_mode(bs: &BlockSystem, failures: &FailureCollection) -> Result<Option<String>> {
    let r = bs.realization();
    for scenario in std::iter::once(FailureScenario::none()).chain(failures.iter().cloned()) {
        let gamma = scenario.removed_links(&bs.links);
        let modes = numeric_fixed_modes(r, &bs.links, &gamma, NumericOptions::default())?;
        if let Some(z) = modes.iter().find(|z| z.norm() >= 1.0) {
            return Ok(Some(format!(
                "scenario {scenario} has fixed mode {z:.4} with |λ| = {:.4}",
                z.norm()
            )));
        }
    }
    Ok(None)
}

/// A point satisfying every scenario LMI and `[X I; I Y] ⪰ 0`.
///
/// `X = Y = I`, `K = 0` is accepted when it is feasible; otherwise
/// `trace(X + Y)` is minimized over the constraints.
pub fn feasibility_init(
    bs: &BlockSystem,
    failures: &FailureCollection,
    opts: &CclOptions,
) -> Result<SdpState> {
    if let Some(msg) = unstable_fixed_mode(bs, failures)? {
        return Err(Error::Infeasible(format!(
            "not stabilizable with this information pattern: {msg}"
        )));
    }
    let layout = Layout::new(bs, failures, opts.shared_lyapunov);
    let r = bs.realization();
    let eye = DMatrix::identity(layout.big_n, layout.big_n);
    let npairs = layout.pairs.len();
    let identity = SdpState {
        x: vec![eye.clone(); npairs],
        y: vec![eye.clone(); npairs],
        gain: Gain::zeros(r.p(), r.m(), bs.links.clone())?,
        iteration: 0,
        cost: 2.0 * layout.big_n as f64 * npairs as f64,
    };
    let c = layout.objective(&vec![eye.clone(); npairs], &vec![eye; npairs]);
    let problem = layout.problem(bs, c, opts.epsilon);
    if problem.min_residual_eigenvalue(&layout.pack(&identity)) >= 0.0 {
        return Ok(identity);
    }
    let sol = sdp_solve(&problem, &opts.sdp).map_err(|e| match e {
        Error::Infeasible(m) => Error::Infeasible(format!(
            "not stabilizable with this information pattern: {m}"
        )),
        other => other,
    })?;
    layout.state(bs, &sol.x, 0, sol.objective)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CclStatus {
    Stabilized,
    MaxIterations,
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CclOutcome {
    pub status: CclStatus,
    /// Final iterate on success, otherwise the iterate with the smallest
    /// worst-case radius.
    pub state: SdpState,
    pub cost_trace: Vec<f64>,
    /// Worst-case closed-loop radius per iteration.
    pub radius_trace: Vec<f64>,
    /// Iterations where the block-matrix Schur test disagreed with the closed loop.
    pub block_disagreements: usize,
}

impl CclOutcome {
    pub fn gain(&self) -> &Gain {
        &self.state.gain
    }
}

fn radii(bs: &BlockSystem, gain: &Gain, failures: &FailureCollection) -> Result<(f64, bool)> {
    let report = verify_stabilization(bs.realization(), gain, failures)?;
    Ok((report.max_radius(), report.disagreements() > 0))
}

/// Runs the linearized iteration from `init` until every scenario is Schur,
/// the cost stalls, or the iteration cap is reached.
pub fn ccl_iterate(
    bs: &BlockSystem,
    failures: &FailureCollection,
    init: SdpState,
    opts: &CclOptions,
) -> Result<CclOutcome> {
    ccl_iterate_with(bs, failures, init, opts, |_, _| {})
}

/// As [`ccl_iterate`], calling `progress(iteration, &state)` after each step.
pub fn ccl_iterate_with<F>(
    bs: &BlockSystem,
    failures: &FailureCollection,
    init: SdpState,
    opts: &CclOptions,
    mut progress: F,
) -> Result<CclOutcome>
where
    F: FnMut(usize, &SdpState),
{
    let layout = Layout::new(bs, failures, opts.shared_lyapunov);
    if init.x.len() != layout.pairs.len() {
        return Err(Error::DimensionMismatch(
            "initial state does not match the Lyapunov layout".into(),
        ));
    }
    let threshold = 1.0 - opts.margin;
    let (r0, dis0) = radii(bs, &init.gain, failures)?;
    let mut outcome = CclOutcome {
        status: CclStatus::MaxIterations,
        state: init.clone(),
        cost_trace: Vec::new(),
        radius_trace: vec![r0],
        block_disagreements: dis0 as usize,
    };
    if r0 < threshold {
        outcome.status = CclStatus::Stabilized;
        return Ok(outcome);
    }
    let mut best = r0;
    let mut current = init;
    for it in 1..=opts.max_iter {
        let c = layout.objective(&current.x, &current.y);
        let problem = layout.problem(bs, c, opts.epsilon);
        let sol = sdp_solve(&problem, &opts.sdp)?;
        current = layout.state(bs, &sol.x, it, sol.objective)?;
        progress(it, &current);
        let (rho, dis) = radii(bs, &current.gain, failures)?;
        outcome.cost_trace.push(sol.objective);
        outcome.radius_trace.push(rho);
        outcome.block_disagreements += dis as usize;
        if rho < threshold {
            outcome.status = CclStatus::Stabilized;
            outcome.state = current;
            return Ok(outcome);
        }
        if rho < best {
            best = rho;
            outcome.state = current.clone();
        }
        let t = &outcome.cost_trace;
        if t.len() > opts.stall_window
            && t[t.len() - 1 - opts.stall_window..]
                .windows(2)
                .all(|w| (w[0] - w[1]).abs() <= opts.stall_tol * w[0].abs().max(1.0))
        {
            outcome.status = CclStatus::Stalled;
            return Ok(outcome);
        }
    }
    Ok(outcome)
}

/// Padding, initialization and iteration in one call.
pub fn stabilize(
    r: &Realization,
    links: &LinkSet,
    failures: &FailureCollection,
    opts: &CclOptions,
) -> Result<CclOutcome> {
    let bs = pad_to_square(r, links)?;
    failures.check_against(links)?;
    let init = feasibility_init(&bs, failures, opts)?;
    ccl_iterate(&bs, failures, init, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn scalar(a: f64) -> Realization {
        Realization::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn five_bus_pads_sensors() {
        let bs = pad_to_square(&five_bus_realization(), &five_bus_links()).unwrap();
        assert_eq!((bs.q(), bs.dim()), (4, 22));
        assert_eq!((bs.c.nrows(), bs.c.ncols()), (4, 18));
        assert!(bs.c.rows(2, 2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn square_system_is_unchanged() {
        let r = scalar(0.5);
        let bs = pad_to_square(&r, &LinkSet::from_pairs(&[(1, 1)])).unwrap();
        assert_eq!((&bs.a, &bs.b, &bs.c), (&r.a, &r.b, &r.c));
    }

    #[test]
    fn more_sensors_pads_actuators() {
        let r = Realization::new(
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(3, 2, 1.0),
        )
        .unwrap();
        let bs = pad_to_square(&r, &LinkSet::from_pairs(&[(3, 1)])).unwrap();
        assert_eq!((bs.b.nrows(), bs.b.ncols(), bs.c.nrows()), (2, 3, 3));
        assert!(bs.b.columns(1, 2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn block_matrix_assembly() {
        let bs = pad_to_square(&scalar(0.5), &LinkSet::new()).unwrap();
        let m = build_block_matrix(&bs, &DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.0]));
        assert!(build_block_matrix(&bs, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn augmented_spectrum_matches_closed_loop() {
        let r = five_bus_realization();
        let g = five_bus_printed_gain();
        let bs = pad_to_square(&r, g.pattern()).unwrap();
        let t = bs.augmented(&bs.pad_gain(g.matrix()).unwrap());
        let cl = r.closed_loop(g.matrix()).unwrap();
        assert!((spectral_radius(&t) - spectral_radius(&cl)).abs() < 1e-9);
    }

    #[test]
    fn spectral_radius_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -0.25]));
        assert!((spectral_radius(&d) - 0.5).abs() < 1e-12);
        let (r, th) = (0.8f64, 0.7f64);
        let rot = DMatrix::from_row_slice(
            2,
            2,
            &[r * th.cos(), -r * th.sin(), r * th.sin(), r * th.cos()],
        );
        assert!((spectral_radius(&rot) - r).abs() < 1e-9 * r);
        assert!((spectral_radius(&five_bus_a()) - 1.0072).abs() < 1e-3);
    }

    #[test]
    fn printed_gain_block_radii() {
        let rep = verify_stabilization(
            &five_bus_realization(),
            &five_bus_printed_gain(),
            &five_bus_failures(),
        )
        .unwrap();
        let want = [0.9918, 0.9981, 0.9983, 0.9989, 0.9918];
        for (s, w) in rep.scenarios.iter().zip(want) {
            assert!(
                (s.block_radius - w).abs() < 1e-3,
                "{} vs {w}",
                s.block_radius
            );
        }
        assert!((rep.open_loop_radius - 1.0072).abs() < 1e-3);
    }

    #[test]
    fn zero_gain_gives_open_loop_radius() {
        let r = five_bus_realization();
        let g = Gain::zeros(4, 2, five_bus_links()).unwrap();
        let rep = verify_stabilization(&r, &g, &FailureCollection::default()).unwrap();
        assert_eq!(rep.scenarios.len(), 1);
        assert!((rep.scenarios[0].closed_loop_radius - spectral_radius(&r.a)).abs() < 1e-12);
        assert!(!rep.all_schur());
    }

    #[test]
    fn empty_scenario_equals_nominal() {
        let r = five_bus_realization();
        let g = five_bus_printed_gain();
        let f = FailureCollection::new(vec![FailureScenario::none()]);
        let rep = verify_stabilization(&r, &g, &f).unwrap();
        assert_eq!(
            rep.scenarios[0].closed_loop_radius,
            rep.scenarios[1].closed_loop_radius
        );
    }

    #[test]
    fn scalar_unstable_plant_is_stabilized() {
        let out = stabilize(
            &scalar(1.5),
            &LinkSet::from_pairs(&[(1, 1)]),
            &FailureCollection::default(),
            &CclOptions::default(),
        )
        .unwrap();
        assert_eq!(out.status, CclStatus::Stabilized);
        let k = out.gain().matrix()[(0, 0)];
        assert!(k > -2.5 && k < -0.5, "k = {k}");
        for w in out.cost_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-8 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn stable_plant_without_links_stops_at_zero_gain() {
        let r = scalar(0.5);
        let opts = CclOptions::default();
        let bs = pad_to_square(&r, &LinkSet::new()).unwrap();
        let init = feasibility_init(&bs, &FailureCollection::default(), &opts).unwrap();
        assert_eq!(init.gain.matrix()[(0, 0)], 0.0);
        let out = ccl_iterate(&bs, &FailureCollection::default(), init, &opts).unwrap();
        assert_eq!(out.status, CclStatus::Stabilized);
        assert!(out.cost_trace.is_empty());
    }

    #[test]
    fn unstable_fixed_mode_is_infeasible() {
        // x2 is unstable and neither driven nor measured.
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.2]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let r = Realization::new(a, b, c).unwrap();
        let e = stabilize(
            &r,
            &LinkSet::from_pairs(&[(1, 1)]),
            &FailureCollection::default(),
            &CclOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Infeasible(_)));
        let e = stabilize(
            &scalar(1.5),
            &LinkSet::new(),
            &FailureCollection::default(),
            &CclOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Infeasible(_)));
    }

    #[test]
    fn link_failure_scenarios_are_respected() {
        // Two redundant links on a scalar plant; either may fail.
        let r = Realization::new(
            DMatrix::from_element(1, 1, 1.3),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let links = LinkSet::from_pairs(&[(1, 1), (1, 2)]);
        let failures = FailureCollection::single_links(&links);
        let out = stabilize(&r, &links, &failures, &CclOptions::default()).unwrap();
        assert_eq!(out.status, CclStatus::Stabilized);
        let rep = verify_stabilization(&r, out.gain(), &failures).unwrap();
        assert!(rep.all_schur());
        assert!(
            out.state.inverse_residual()
                <= 10.0 * (out.state.cost - out.state.target()).max(0.0).sqrt() + 1e-3
        );
    }

    #[test]
    fn per_scenario_lyapunov_option() {
        let r = scalar(1.5);
        let links = LinkSet::from_pairs(&[(1, 1)]);
        let opts = CclOptions {
            shared_lyapunov: false,
            ..Default::default()
        };
        let failures = FailureCollection::new(vec![FailureScenario::none()]);
        let out = stabilize(&r, &links, &failures, &opts).unwrap();
        assert_eq!(out.state.x.len(), 2);
        assert_eq!(out.status, CclStatus::Stabilized);
    }
}
