//! Small dense semidefinite solver for problems of the form
//!
//! ```text
//! minimize    cᵀx
//! subject to  F0_b + Σ x_i F_ib ⪰ ε_b I     for every block b
//! ```
//!
//! with free variables `x` and symmetric, sparse coefficient matrices.
//! The method is an infeasible primal-dual path-following scheme with the
//! HKM search direction and Mehrotra's predictor-corrector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Coefficient entries `(row, col, value)` of one variable.
type Entries = Vec<(usize, usize, f64)>;

/// One affine symmetric matrix inequality `F0 + Σ x_i F_i ⪰ margin·I`.
#[derive(Clone, Debug, PartialEq)]
pub struct LmiBlock {
    dim: usize,
    constant: DMatrix<f64>,
    /// Per variable: coefficient entries `(row, col, value)` with `row <= col`.
    terms: Vec<(usize, Entries)>,
    margin: f64,
}

impl LmiBlock {
    /// Panics unless `constant` is square.
    pub fn new(constant: DMatrix<f64>) -> Self {
        assert!(constant.is_square(), "LMI constant must be square");
        Self {
            dim: constant.nrows(),
            constant,
            terms: Vec::new(),
            margin: 0.0,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DMatrix::zeros(dim, dim))
    }

    /// Requires `⪰ margin·I` instead of `⪰ 0`.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Adds `value · x_var` at `(row, col)` and, off the diagonal, at `(col, row)`.
    pub fn add(&mut self, var: usize, row: usize, col: usize, value: f64) {
        assert!(row < self.dim && col < self.dim, "entry outside block");
        if value == 0.0 {
            return;
        }
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        let pos = match self.terms.iter().position(|(v, _)| *v == var) {
            Some(p) => p,
            None => {
                self.terms.push((var, Vec::new()));
                self.terms.len() - 1
            }
        };
        let entries = &mut self.terms[pos].1;
        match entries.iter_mut().find(|(a, b, _)| *a == r && *b == c) {
            Some(e) => e.2 += value,
            None => entries.push((r, c, value)),
        }
    }

    /// Adds `value` to the constant at `(row, col)` and `(col, row)`.
    pub fn add_constant(&mut self, row: usize, col: usize, value: f64) {
        self.constant[(row, col)] += value;
        if row != col {
            self.constant[(col, row)] += value;
        }
    }

    /// `F0 + Σ x_i F_i` (margin not subtracted).
    pub fn evaluate(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (var, entries) in &self.terms {
            let xv = x[*var];
            for &(r, c, v) in entries {
                m[(r, c)] += xv * v;
                if r != c {
                    m[(c, r)] += xv * v;
                }
            }
        }
        m
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|(v, _)| *v).max()
    }
}

/// Minimize `cᵀx` over a list of LMI blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub c: DVector<f64>,
    pub blocks: Vec<LmiBlock>,
}

impl SdpProblem {
    pub fn new(c: DVector<f64>) -> Self {
        Self {
            c,
            blocks: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.c.len()
    }

    pub fn push(&mut self, block: LmiBlock) {
        self.blocks.push(block);
    }

    /// Smallest eigenvalue of `F_b(x) - margin·I` over all blocks.
    pub fn min_residual_eigenvalue(&self, x: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let m = b.evaluate(x);
                SymmetricEigen::new(m).eigenvalues.min() - b.margin
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpOptions {
    /// Relative duality gap at termination.
    pub tol_gap: f64,
    /// Relative primal and dual residuals at termination; also the bound on
    /// negative LMI eigenvalues of the returned point.
    pub tol_feas: f64,
    pub max_iter: usize,
    /// Largest accepted block dimension.
    pub max_block_dim: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol_gap: 1e-8,
            tol_feas: 1e-7,
            max_iter: 100,
            max_block_dim: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    /// Smallest eigenvalue of `F_b(x) - margin·I` over the blocks.
    pub min_eigenvalue: f64,
}

struct Block<'a> {
    lmi: &'a LmiBlock,
    /// Full (both triangles) entries per variable.
    full: Vec<(usize, Entries)>,
    /// Constant with margin folded in.
    f0: DMatrix<f64>,
}

fn expand(entries: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(2 * entries.len());
    for &(r, c, v) in entries {
        out.push((r, c, v));
        if r != c {
            out.push((c, r, v));
        }
    }
    out
}

fn inner(entries: &[(usize, usize, f64)], g: &DMatrix<f64>) -> f64 {
    // tr(F G) for symmetric F
    entries.iter().map(|&(a, b, v)| v * g[(b, a)]).sum()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let ch = m.clone().cholesky()?;
    Some(sym(&ch.inverse()))
}

/// Largest step in `[0, ∞)` keeping `m + α d` positive semidefinite.
fn max_step(m: &DMatrix<f64>, d: &DMatrix<f64>) -> Option<f64> {
    let l = m.clone().cholesky()?.l();
    let linv = l.clone().try_inverse()?;
    let t = sym(&(&linv * d * linv.transpose()));
    let lmin = SymmetricEigen::new(t).eigenvalues.min();
    Some(if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    })
}

/// Solves the problem or reports why it could not.
pub fn sdp_solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    let nv = problem.nvars();
    for b in &problem.blocks {
        if b.dim > opts.max_block_dim {
            return Err(Error::LimitExceeded(format!(
                "block dimension {} exceeds {}",
                b.dim, opts.max_block_dim
            )));
        }
        if b.max_var().is_some_and(|v| v >= nv) {
            return Err(Error::DimensionMismatch(
                "LMI term refers to an unknown variable".into(),
            ));
        }
    }
    let blocks: Vec<Block> = problem
        .blocks
        .iter()
        .map(|b| Block {
            lmi: b,
            full: b.terms.iter().map(|(v, e)| (*v, expand(e))).collect(),
            f0: &b.constant - DMatrix::identity(b.dim, b.dim) * b.margin,
        })
        .collect();
    let ntot: usize = blocks.iter().map(|b| b.lmi.dim).sum();
    let c = &problem.c;

    // Starting point (standard infeasible-start heuristic).
    let mut fnorm = vec![0.0f64; nv];
    for b in &blocks {
        for (v, e) in &b.full {
            fnorm[*v] += e.iter().map(|t| t.2 * t.2).sum::<f64>();
        }
    }
    let fnorm: Vec<f64> = fnorm.into_iter().map(f64::sqrt).collect();
    let c0norm = blocks.iter().map(|b| b.f0.norm()).fold(0.0, f64::max);
    let sqrt_n = (ntot as f64).sqrt();
    let mut xi_w = 10f64.max(sqrt_n);
    let mut xi_s = 10f64.max(sqrt_n).max(c0norm);
    for i in 0..nv {
        xi_w = xi_w.max(ntot as f64 * (1.0 + c[i].abs()) / (1.0 + fnorm[i]));
        xi_s = xi_s.max(fnorm[i]);
    }
    let mut x = DVector::<f64>::zeros(nv);
    let mut w: Vec<DMatrix<f64>> = blocks
        .iter()
        .map(|b| DMatrix::identity(b.lmi.dim, b.lmi.dim) * xi_w)
        .collect();
    let mut s: Vec<DMatrix<f64>> = blocks
        .iter()
        .map(|b| DMatrix::identity(b.lmi.dim, b.lmi.dim) * xi_s)
        .collect();

    let cnorm = c.norm();
    let f0norm: f64 = blocks
        .iter()
        .map(|b| b.f0.norm_squared())
        .sum::<f64>()
        .sqrt();

    for iter in 0..opts.max_iter {
        // Residuals.
        let mut r = c.clone();
        for (b, wb) in blocks.iter().zip(&w) {
            for (v, e) in &b.full {
                r[*v] -= inner(e, wb);
            }
        }
        let rp: Vec<DMatrix<f64>> = blocks
            .iter()
            .zip(&s)
            .map(|(b, sb)| {
                let mut m =
                    b.lmi.evaluate(&x) - DMatrix::identity(b.lmi.dim, b.lmi.dim) * b.lmi.margin;
                m -= sb;
                m
            })
            .collect();
        let gap: f64 = s.iter().zip(&w).map(|(sb, wb)| frob_dot(sb, wb)).sum();
        let mu = gap / ntot as f64;
        let pobj = c.dot(&x);
        let dobj: f64 = -blocks
            .iter()
            .zip(&w)
            .map(|(b, wb)| frob_dot(&b.f0, wb))
            .sum::<f64>();
        let pinf = rp.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt() / (1.0 + f0norm);
        let dinf = r.norm() / (1.0 + cnorm);
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        if relgap <= opts.tol_gap && pinf <= opts.tol_feas && dinf <= opts.tol_feas {
            let min_eigenvalue = problem.min_residual_eigenvalue(&x);
            if min_eigenvalue >= -opts.tol_feas {
                return Ok(SdpSolution {
                    x,
                    objective: pobj,
                    dual_objective: dobj,
                    iterations: iter,
                    min_eigenvalue,
                });
            }
        }

        // Certificate of infeasibility: W ⪰ 0 with ⟨F_i, W⟩ ≈ 0 and ⟨F0', W⟩ < 0.
        let wtrace: f64 = w.iter().map(|m| m.trace()).sum();
        if wtrace > 0.0 {
            let mut ai = DVector::<f64>::zeros(nv);
            for (b, wb) in blocks.iter().zip(&w) {
                for (v, e) in &b.full {
                    ai[*v] += inner(e, wb) / wtrace;
                }
            }
            let f0w: f64 = blocks
                .iter()
                .zip(&w)
                .map(|(b, wb)| frob_dot(&b.f0, wb))
                .sum::<f64>()
                / wtrace;
            if f0w < -opts.tol_feas.sqrt() && ai.norm() < opts.tol_feas * (-f0w) && wtrace > 1e8 {
                return Err(Error::Infeasible(format!(
                    "dual ray certifies the LMIs are infeasible (⟨F0, W⟩ = {f0w:.3e})"
                )));
            }
        }

        let sinv: Vec<DMatrix<f64>> = s
            .iter()
            .map(|m| {
                spd_inverse(m)
                    .ok_or_else(|| Error::NumericalBreakdown("slack lost definiteness".into()))
            })
            .collect::<Result<_>>()?;

        // Schur complement M_ij = Σ_b tr(F_i W F_j S⁻¹).
        let mut m = DMatrix::zeros(nv, nv);
        for ((b, wb), sb) in blocks.iter().zip(&w).zip(&sinv) {
            // Precompute W F_j S⁻¹ entries lazily via the pair formula.
            for (p, (vi, ei)) in b.full.iter().enumerate() {
                for (vj, ej) in &b.full[p..] {
                    let mut acc = 0.0;
                    for &(a, bb, v) in ei {
                        for &(cc, e, u) in ej {
                            acc += v * u * wb[(bb, cc)] * sb[(e, a)];
                        }
                    }
                    m[(*vi, *vj)] += acc;
                    if vi != vj {
                        m[(*vj, *vi)] += acc;
                    }
                }
            }
        }
        let chol = factor(m)?;

        let solve = |extra: Option<&[DMatrix<f64>]>,
                     sigma_mu: f64|
         -> (DVector<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            // G_b = σμ S⁻¹ − W − W R S⁻¹ − (ΔW_a ΔS_a S⁻¹)
            let g: Vec<DMatrix<f64>> = (0..blocks.len())
                .map(|k| {
                    let mut g = &sinv[k] * sigma_mu - &w[k] - &w[k] * &rp[k] * &sinv[k];
                    if let Some(corr) = extra {
                        g -= &corr[k] * &sinv[k];
                    }
                    g
                })
                .collect();
            let mut rhs = -r.clone();
            for (b, gb) in blocks.iter().zip(&g) {
                for (v, e) in &b.full {
                    rhs[*v] += inner(e, gb);
                }
            }
            let dx = chol.solve(&rhs);
            let ds: Vec<DMatrix<f64>> = blocks
                .iter()
                .zip(&rp)
                .map(|(b, rb)| {
                    let mut d = rb.clone();
                    for (v, e) in &b.full {
                        let step = dx[*v];
                        for &(a, bb, val) in e {
                            d[(a, bb)] += step * val;
                        }
                    }
                    d
                })
                .collect();
            let dw: Vec<DMatrix<f64>> = (0..blocks.len())
                .map(|k| {
                    let mut t = &sinv[k] * sigma_mu - &w[k] - &w[k] * &ds[k] * &sinv[k];
                    if let Some(corr) = extra {
                        t -= &corr[k] * &sinv[k];
                    }
                    sym(&t)
                })
                .collect();
            (dx, ds, dw)
        };

        let steps = |ds: &[DMatrix<f64>], dw: &[DMatrix<f64>]| -> Result<(f64, f64)> {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for k in 0..blocks.len() {
                ap = ap.min(max_step(&s[k], &ds[k]).ok_or_else(|| {
                    Error::NumericalBreakdown("slack factorization failed".into())
                })?);
                ad = ad.min(max_step(&w[k], &dw[k]).ok_or_else(|| {
                    Error::NumericalBreakdown("multiplier factorization failed".into())
                })?);
            }
            Ok((ap, ad))
        };

        // Predictor.
        let (_, ds_a, dw_a) = solve(None, 0.0);
        let (ap, ad) = steps(&ds_a, &dw_a)?;
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let gap_aff: f64 = (0..blocks.len())
            .map(|k| frob_dot(&(&s[k] + &ds_a[k] * ap), &(&w[k] + &dw_a[k] * ad)))
            .sum();
        let sigma = ((gap_aff / gap).max(0.0)).powi(3).min(1.0);

        // Corrector.
        let corr: Vec<DMatrix<f64>> = (0..blocks.len()).map(|k| &dw_a[k] * &ds_a[k]).collect();
        let (dx, ds, dw) = solve(Some(&corr), sigma * mu);
        let (ap, ad) = steps(&ds, &dw)?;
        let gamma = 0.9 + 0.09 * (1.0 - sigma).max(0.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if !(ap.is_finite() && ad.is_finite()) || (ap < 1e-12 && ad < 1e-12) {
            return Err(Error::NumericalBreakdown(format!(
                "step length collapsed at iteration {iter}"
            )));
        }
        x += &dx * ap;
        for k in 0..blocks.len() {
            s[k] = sym(&(&s[k] + &ds[k] * ap));
            w[k] = sym(&(&w[k] + &dw[k] * ad));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown("iterate is not finite".into()));
        }
    }
    Err(Error::MaxIterations(opts.max_iter))
}

fn factor(m: DMatrix<f64>) -> Result<Factor> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(Factor::Chol(ch));
    }
    let scale = m.diagonal().amax().max(1.0);
    let mut reg = m.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += 1e-13 * scale;
    }
    if let Some(ch) = reg.cholesky() {
        return Ok(Factor::Chol(ch));
    }
    let lu = m.lu();
    if lu.is_invertible() {
        Ok(Factor::Lu(lu))
    } else {
        Err(Error::NumericalBreakdown(
            "Schur complement is singular".into(),
        ))
    }
}

enum Factor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Chol(c) => c.solve(b),
            Factor::Lu(l) => l.solve(b).expect("checked invertible"),
        }
    }
}

/// Index map for the free entries of a symmetric `n x n` matrix variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymVar {
    pub offset: usize,
    pub n: usize,
}

impl SymVar {
    pub fn new(offset: usize, n: usize) -> Self {
        Self { offset, n }
    }

    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Variable index of entry `(i, j)` (either order).
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // Row-major upper triangle.
        self.offset + i * (2 * self.n - i + 1) / 2 + (j - i)
    }

    /// Adds `coef · X` into `block` at offset `(r0, c0)` (symmetric placement).
    pub fn place(&self, block: &mut LmiBlock, r0: usize, c0: usize, coef: f64) {
        for i in 0..self.n {
            for j in i..self.n {
                block.add(self.index(i, j), r0 + i, c0 + j, coef);
            }
        }
    }

    /// Reads the matrix value from a solution vector.
    pub fn value(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| x[self.index(i, j)])
    }

    /// Coefficients of `⟨M, X⟩` for symmetric `M`, added into `c`.
    pub fn add_inner(&self, c: &mut DVector<f64>, m: &DMatrix<f64>) {
        for i in 0..self.n {
            for j in i..self.n {
                let coef = if i == j {
                    m[(i, i)]
                } else {
                    m[(i, j)] + m[(j, i)]
                };
                c[self.index(i, j)] += coef;
            }
        }
    }
}
