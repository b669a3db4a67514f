//! Structural patterns, information patterns, failure scenarios, numeric
//! realizations, and the digraphs built from them.
//!
//! All state, actuator, and sensor indices exposed by this module are
//! 1-based. A link is a `(sensor, actuator)` pair: sensor `j` feeds actuator
//! `i`, which corresponds to a free entry `K[i][j]` of the gain.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Digraph;

/// Absolute threshold used when reading a sparsity pattern off numeric data.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// A communication link from a sensor to an actuator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Link {
    pub sensor: usize,
    pub actuator: usize,
}

impl Link {
    pub fn new(sensor: usize, actuator: usize) -> Self {
        Self { sensor, actuator }
    }
}

impl From<[usize; 2]> for Link {
    fn from([sensor, actuator]: [usize; 2]) -> Self {
        Self { sensor, actuator }
    }
}

impl From<Link> for [usize; 2] {
    fn from(l: Link) -> Self {
        [l.sensor, l.actuator]
    }
}

impl From<(usize, usize)> for Link {
    fn from((sensor, actuator): (usize, usize)) -> Self {
        Self { sensor, actuator }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.sensor, self.actuator)
    }
}

/// A duplicate-free set of sensor-to-actuator links.
///
/// Used for the link set itself, for communication failure sets, and for
/// excluded-link bookkeeping during co-design.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkSet(BTreeSet<Link>);

impl LinkSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a link set from `(sensor, actuator)` pairs, rejecting repeats.
    pub fn try_from_pairs<I, L>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = L>,
        L: Into<Link>,
    {
        let mut set = BTreeSet::new();
        for l in pairs {
            let l = l.into();
            if !set.insert(l) {
                return Err(Error::InvalidPattern(format!("link {l} listed twice")));
            }
        }
        Ok(Self(set))
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        pairs.iter().copied().map(Link::from).collect()
    }

    pub fn insert(&mut self, link: Link) -> bool {
        self.0.insert(link)
    }

    pub fn remove(&mut self, link: &Link) -> bool {
        self.0.remove(link)
    }

    pub fn contains(&self, link: &Link) -> bool {
        self.0.contains(link)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Link> + '_ {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &LinkSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &LinkSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &LinkSet) -> LinkSet {
        Self(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &LinkSet) -> LinkSet {
        Self(self.0.difference(&other.0).copied().collect())
    }

    /// Returns the first link of `self` missing from `reference`, if any.
    pub fn first_outside(&self, reference: &LinkSet) -> Option<Link> {
        self.0.iter().find(|l| !reference.contains(l)).copied()
    }

    /// Checks every link against `p` actuators and `m` sensors.
    pub fn check_bounds(&self, p: usize, m: usize) -> Result<()> {
        for l in &self.0 {
            if l.sensor == 0 || l.sensor > m || l.actuator == 0 || l.actuator > p {
                return Err(Error::InvalidPattern(format!(
                    "link {l} outside {m} sensors x {p} actuators"
                )));
            }
        }
        Ok(())
    }

    /// The binary information pattern `K̄` (p x m), `K̄[i][j] = 1` iff `(j, i)` is a link.
    pub fn information_pattern(&self, p: usize, m: usize) -> DMatrix<u8> {
        let mut k = DMatrix::zeros(p, m);
        for l in &self.0 {
            k[(l.actuator - 1, l.sensor - 1)] = 1;
        }
        k
    }
}

impl FromIterator<Link> for LinkSet {
    fn from_iter<T: IntoIterator<Item = Link>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a LinkSet {
    type Item = &'a Link;
    type IntoIter = std::collections::btree_set::Iter<'a, Link>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for LinkSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// One failure scenario: lost links plus failed actuators and sensors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FailureScenario {
    #[serde(default)]
    pub links: LinkSet,
    #[serde(default)]
    pub actuators: BTreeSet<usize>,
    #[serde(default)]
    pub sensors: BTreeSet<usize>,
}

impl FailureScenario {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn links(gamma: LinkSet) -> Self {
        Self {
            links: gamma,
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty() && self.actuators.is_empty() && self.sensors.is_empty()
    }

    /// Number of failed elements (links, actuators and sensors together).
    pub fn size(&self) -> usize {
        self.links.len() + self.actuators.len() + self.sensors.len()
    }

    /// Fails with `GammaNotSubset` when a failed link is not in `reference`.
    pub fn check_against(&self, reference: &LinkSet) -> Result<()> {
        match self.links.first_outside(reference) {
            Some(l) => Err(Error::GammaNotSubset(l)),
            None => Ok(()),
        }
    }

    /// Expands the scenario into the set of links of `reference` that are lost.
    ///
    /// A failed actuator or sensor loses every feedback link attached to it.
    pub fn removed_links(&self, reference: &LinkSet) -> LinkSet {
        reference
            .iter()
            .filter(|l| {
                self.links.contains(l)
                    || self.actuators.contains(&l.actuator)
                    || self.sensors.contains(&l.sensor)
            })
            .copied()
            .collect()
    }
}

impl fmt::Display for FailureScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "nominal");
        }
        let mut parts = Vec::new();
        if !self.links.is_empty() {
            parts.push(format!("links {}", self.links));
        }
        if !self.actuators.is_empty() {
            parts.push(format!("actuators {:?}", self.actuators));
        }
        if !self.sensors.is_empty() {
            parts.push(format!("sensors {:?}", self.sensors));
        }
        write!(f, "{}", parts.join(", "))
    }
}

/// An ordered collection of failure scenarios.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FailureCollection(pub Vec<FailureScenario>);

impl FailureCollection {
    pub fn new(scenarios: Vec<FailureScenario>) -> Self {
        Self(scenarios)
    }

    /// One scenario per single failed link.
    pub fn single_links(links: &LinkSet) -> Self {
        Self(
            links
                .iter()
                .map(|l| FailureScenario::links(std::iter::once(*l).collect()))
                .collect(),
        )
    }

    /// Every non-empty combination of at most `k` failed elements drawn from
    /// the links, the actuators `1..=p`, and the sensors `1..=m`.
    ///
    /// Enumeration order: by size, then links before actuators before sensors.
    pub fn budget(links: &LinkSet, p: usize, m: usize, k: usize) -> Self {
        #[derive(Clone, Copy)]
        enum Elem {
            Link(Link),
            Actuator(usize),
            Sensor(usize),
        }
        let elems: Vec<Elem> = links
            .iter()
            .map(|l| Elem::Link(*l))
            .chain((1..=p).map(Elem::Actuator))
            .chain((1..=m).map(Elem::Sensor))
            .collect();
        let mut out = Vec::new();
        for size in 1..=k.min(elems.len()) {
            for combo in combinations(elems.len(), size) {
                let mut s = FailureScenario::none();
                for idx in combo {
                    match elems[idx] {
                        Elem::Link(l) => {
                            s.links.insert(l);
                        }
                        Elem::Actuator(a) => {
                            s.actuators.insert(a);
                        }
                        Elem::Sensor(j) => {
                            s.sensors.insert(j);
                        }
                    }
                }
                out.push(s);
            }
        }
        Self(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FailureScenario> + '_ {
        self.0.iter()
    }

    pub fn check_against(&self, reference: &LinkSet) -> Result<()> {
        self.0.iter().try_for_each(|s| s.check_against(reference))
    }
}

/// All `size`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.clone());
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - size {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A multiset of state indices carrying dedicated actuators or sensors.
///
/// Position `i` (0-based) is actuator/sensor number `i + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DedicatedSelection(pub Vec<usize>);

impl DedicatedSelection {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Sorted copy, for multiset comparisons.
    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v
    }

    pub fn check_bounds(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i == 0 || i > n) {
            Some(i) => Err(Error::InvalidPattern(format!(
                "dedicated index {i} outside 1..={n}"
            ))),
            None => Ok(()),
        }
    }

    /// `B̄(I)`: column `j` is the canonical vector of the `j`-th index.
    pub fn input_entries(&self) -> BTreeSet<(usize, usize)> {
        self.0
            .iter()
            .enumerate()
            .map(|(j, &x)| (x, j + 1))
            .collect()
    }

    /// `C̄(I)`: row `j` is the canonical vector of the `j`-th index.
    pub fn output_entries(&self) -> BTreeSet<(usize, usize)> {
        self.0
            .iter()
            .enumerate()
            .map(|(j, &x)| (j + 1, x))
            .collect()
    }
}

impl FromIterator<usize> for DedicatedSelection {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Binary sparsity patterns `Ā` (n x n), `B̄` (n x p), `C̄` (m x n).
///
/// Entries are `(row, col)` pairs, 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralPattern {
    n: usize,
    p: usize,
    m: usize,
    a: BTreeSet<(usize, usize)>,
    b: BTreeSet<(usize, usize)>,
    c: BTreeSet<(usize, usize)>,
}

fn check_entries(
    name: &str,
    entries: &BTreeSet<(usize, usize)>,
    rows: usize,
    cols: usize,
) -> Result<()> {
    for &(r, c) in entries {
        if r == 0 || r > rows || c == 0 || c > cols {
            return Err(Error::InvalidPattern(format!(
                "{name} entry ({r},{c}) outside {rows}x{cols}"
            )));
        }
    }
    Ok(())
}

fn collect_unique<I>(name: &str, entries: I) -> Result<BTreeSet<(usize, usize)>>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut set = BTreeSet::new();
    for e in entries {
        if !set.insert(e) {
            return Err(Error::InvalidPattern(format!(
                "{name} entry ({},{}) listed twice",
                e.0, e.1
            )));
        }
    }
    Ok(set)
}

impl StructuralPattern {
    pub fn new<IA, IB, IC>(n: usize, p: usize, m: usize, a: IA, b: IB, c: IC) -> Result<Self>
    where
        IA: IntoIterator<Item = (usize, usize)>,
        IB: IntoIterator<Item = (usize, usize)>,
        IC: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::InvalidPattern(
                "a pattern needs at least one state".into(),
            ));
        }
        let a = collect_unique("A", a)?;
        let b = collect_unique("B", b)?;
        let c = collect_unique("C", c)?;
        check_entries("A", &a, n, n)?;
        check_entries("B", &b, n, p)?;
        check_entries("C", &c, m, n)?;
        Ok(Self { n, p, m, a, b, c })
    }

    /// A pattern with no actuators or sensors.
    pub fn state_only<I>(n: usize, a: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::new(n, 0, 0, a, [], [])
    }

    /// Reads the support of numeric matrices with `|v| > 1e-12`.
    pub fn from_matrices(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() || c.ncols() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Self::new(
            a.nrows(),
            b.ncols(),
            c.nrows(),
            support(a),
            support(b),
            support(c),
        )
    }

    /// Replaces `B̄` and `C̄` with dedicated actuators and sensors.
    pub fn with_dedicated(
        &self,
        actuators: &DedicatedSelection,
        sensors: &DedicatedSelection,
    ) -> Result<Self> {
        actuators.check_bounds(self.n)?;
        sensors.check_bounds(self.n)?;
        Ok(Self {
            n: self.n,
            p: actuators.len(),
            m: sensors.len(),
            a: self.a.clone(),
            b: actuators.input_entries(),
            c: sensors.output_entries(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn a_entries(&self) -> &BTreeSet<(usize, usize)> {
        &self.a
    }
    pub fn b_entries(&self) -> &BTreeSet<(usize, usize)> {
        &self.b
    }
    pub fn c_entries(&self) -> &BTreeSet<(usize, usize)> {
        &self.c
    }

    /// Whether every state has a self-loop in `Ā`.
    pub fn has_full_diagonal(&self) -> bool {
        (1..=self.n).all(|i| self.a.contains(&(i, i)))
    }

    pub fn a_matrix(&self) -> DMatrix<u8> {
        entries_matrix(&self.a, self.n, self.n)
    }
    pub fn b_matrix(&self) -> DMatrix<u8> {
        entries_matrix(&self.b, self.n, self.p)
    }
    pub fn c_matrix(&self) -> DMatrix<u8> {
        entries_matrix(&self.c, self.m, self.n)
    }
}

fn entries_matrix(entries: &BTreeSet<(usize, usize)>, rows: usize, cols: usize) -> DMatrix<u8> {
    let mut m = DMatrix::zeros(rows, cols);
    for &(r, c) in entries {
        m[(r - 1, c - 1)] = 1;
    }
    m
}

/// 1-based support of a numeric matrix.
pub fn support(m: &DMatrix<f64>) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if m[(r, c)].abs() > SUPPORT_THRESHOLD {
                out.insert((r + 1, c + 1));
            }
        }
    }
    out
}

/// Dense numeric `A`, `B`, `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl Realization {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self { a, b, c })
    }

    /// Builds a realization and checks that it is exactly zero wherever
    /// `pattern` has no entry.
    pub fn conforming(
        pattern: &StructuralPattern,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
    ) -> Result<Self> {
        let r = Self::new(a, b, c)?;
        if r.n() != pattern.n() || r.p() != pattern.p() || r.m() != pattern.m() {
            return Err(Error::DimensionMismatch(format!(
                "realization is n={} p={} m={}, pattern is n={} p={} m={}",
                r.n(),
                r.p(),
                r.m(),
                pattern.n(),
                pattern.p(),
                pattern.m()
            )));
        }
        for (name, mat, entries) in [
            ("A", &r.a, pattern.a_entries()),
            ("B", &r.b, pattern.b_entries()),
            ("C", &r.c, pattern.c_entries()),
        ] {
            for col in 0..mat.ncols() {
                for row in 0..mat.nrows() {
                    if mat[(row, col)] != 0.0 && !entries.contains(&(row + 1, col + 1)) {
                        return Err(Error::InvalidPattern(format!(
                            "{name}[{},{}] is nonzero but structurally zero",
                            row + 1,
                            col + 1
                        )));
                    }
                }
            }
        }
        Ok(r)
    }

    /// Draws every structurally free entry i.i.d. uniform on `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(pattern: &StructuralPattern, rng: &mut R) -> Self {
        let fill = |entries: &BTreeSet<(usize, usize)>, rows, cols, rng: &mut R| {
            let mut m = DMatrix::zeros(rows, cols);
            for &(r, c) in entries {
                m[(r - 1, c - 1)] = rng.random_range(-1.0..=1.0);
            }
            m
        };
        let (n, p, m) = (pattern.n(), pattern.p(), pattern.m());
        Self {
            a: fill(pattern.a_entries(), n, n, rng),
            b: fill(pattern.b_entries(), n, p, rng),
            c: fill(pattern.c_entries(), m, n, rng),
        }
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn p(&self) -> usize {
        self.b.ncols()
    }
    pub fn m(&self) -> usize {
        self.c.nrows()
    }

    /// `A + B K C`.
    pub fn closed_loop(&self, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if k.nrows() != self.p() || k.ncols() != self.m() {
            return Err(Error::DimensionMismatch(format!(
                "gain is {}x{}, expected {}x{}",
                k.nrows(),
                k.ncols(),
                self.p(),
                self.m()
            )));
        }
        Ok(&self.a + &self.b * k * &self.c)
    }
}

/// A static output-feedback gain constrained to an information pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Gain {
    k: DMatrix<f64>,
    pattern: LinkSet,
}

impl Gain {
    /// Fails with `PatternViolation` when `k` is nonzero outside `pattern`.
    pub fn new(k: DMatrix<f64>, pattern: LinkSet) -> Result<Self> {
        pattern.check_bounds(k.nrows(), k.ncols())?;
        for j in 0..k.ncols() {
            for i in 0..k.nrows() {
                if k[(i, j)] != 0.0 && !pattern.contains(&Link::new(j + 1, i + 1)) {
                    return Err(Error::PatternViolation {
                        actuator: i + 1,
                        sensor: j + 1,
                    });
                }
            }
        }
        Ok(Self { k, pattern })
    }

    pub fn zeros(p: usize, m: usize, pattern: LinkSet) -> Result<Self> {
        Self::new(DMatrix::zeros(p, m), pattern)
    }

    /// Builds a gain from one value per link, in link order.
    pub fn from_link_values(p: usize, m: usize, pattern: LinkSet, values: &[f64]) -> Result<Self> {
        if values.len() != pattern.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} links",
                values.len(),
                pattern.len()
            )));
        }
        pattern.check_bounds(p, m)?;
        let mut k = DMatrix::zeros(p, m);
        for (l, v) in pattern.iter().zip(values) {
            k[(l.actuator - 1, l.sensor - 1)] = *v;
        }
        Ok(Self { k, pattern })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn pattern(&self) -> &LinkSet {
        &self.pattern
    }

    pub fn p(&self) -> usize {
        self.k.nrows()
    }

    pub fn m(&self) -> usize {
        self.k.ncols()
    }

    /// The effective gain `K^Γ` in force under `scenario`.
    pub fn apply_failure(&self, scenario: &FailureScenario) -> Gain {
        let removed = scenario.removed_links(&self.pattern);
        let mut k = self.k.clone();
        for l in &scenario.links {
            if l.actuator <= k.nrows() && l.sensor <= k.ncols() {
                k[(l.actuator - 1, l.sensor - 1)] = 0.0;
            }
        }
        for &a in &scenario.actuators {
            if a >= 1 && a <= k.nrows() {
                k.row_mut(a - 1).fill(0.0);
            }
        }
        for &s in &scenario.sensors {
            if s >= 1 && s <= k.ncols() {
                k.column_mut(s - 1).fill(0.0);
            }
        }
        Gain {
            k,
            pattern: self.pattern.difference(&removed),
        }
    }
}

/// Effective gain under a failure scenario.
pub fn apply_failure(gain: &Gain, scenario: &FailureScenario) -> Gain {
    gain.apply_failure(scenario)
}

/// Vertex of a system digraph, 1-based within its class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    State(usize),
    Input(usize),
    Output(usize),
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::State(i) => write!(f, "x{i}"),
            Vertex::Input(i) => write!(f, "u{i}"),
            Vertex::Output(i) => write!(f, "y{i}"),
        }
    }
}

/// The digraph `D(Ā, B̄, C̄, K̄)` with edge sets kept apart by kind.
///
/// Edges are `(from, to)` pairs of 1-based indices within the classes named
/// by the field: `e_xx` holds `(i, j)` for `x_i -> x_j`, `e_ux` holds
/// `(j, i)` for `u_j -> x_i`, `e_xy` holds `(i, j)` for `x_i -> y_j`, and
/// `e_yu` holds `(j, i)` for `y_j -> u_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemDigraph {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub e_xx: BTreeSet<(usize, usize)>,
    pub e_ux: BTreeSet<(usize, usize)>,
    pub e_xy: BTreeSet<(usize, usize)>,
    pub e_yu: BTreeSet<(usize, usize)>,
}

impl SystemDigraph {
    pub fn vertex_count(&self) -> usize {
        self.n + self.p + self.m
    }

    /// Dense 0-based id: states first, then inputs, then outputs.
    pub fn id(&self, v: Vertex) -> usize {
        match v {
            Vertex::State(i) => i - 1,
            Vertex::Input(i) => self.n + i - 1,
            Vertex::Output(i) => self.n + self.p + i - 1,
        }
    }

    pub fn vertex(&self, id: usize) -> Vertex {
        if id < self.n {
            Vertex::State(id + 1)
        } else if id < self.n + self.p {
            Vertex::Input(id - self.n + 1)
        } else {
            Vertex::Output(id - self.n - self.p + 1)
        }
    }

    pub fn edge_count(&self) -> usize {
        self.e_xx.len() + self.e_ux.len() + self.e_xy.len() + self.e_yu.len()
    }

    /// All edges as dense-id pairs, in kind order XX, UX, XY, YU.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        out.extend(
            self.e_xx
                .iter()
                .map(|&(i, j)| (self.id(Vertex::State(i)), self.id(Vertex::State(j)))),
        );
        out.extend(
            self.e_ux
                .iter()
                .map(|&(j, i)| (self.id(Vertex::Input(j)), self.id(Vertex::State(i)))),
        );
        out.extend(
            self.e_xy
                .iter()
                .map(|&(i, j)| (self.id(Vertex::State(i)), self.id(Vertex::Output(j)))),
        );
        out.extend(
            self.e_yu
                .iter()
                .map(|&(j, i)| (self.id(Vertex::Output(j)), self.id(Vertex::Input(i)))),
        );
        out
    }

    /// Feedback edges as dense-id pairs.
    pub fn feedback_edges(&self) -> Vec<(usize, usize)> {
        self.e_yu
            .iter()
            .map(|&(j, i)| (self.id(Vertex::Output(j)), self.id(Vertex::Input(i))))
            .collect()
    }

    pub fn to_digraph(&self) -> Digraph {
        Digraph::from_edges(self.vertex_count(), self.edges())
    }

    /// Recovers the structural pattern and link set the digraph encodes.
    pub fn to_pattern(&self) -> (StructuralPattern, LinkSet) {
        let pattern = StructuralPattern {
            n: self.n,
            p: self.p,
            m: self.m,
            a: self.e_xx.iter().map(|&(i, j)| (j, i)).collect(),
            b: self.e_ux.iter().map(|&(j, i)| (i, j)).collect(),
            c: self.e_xy.iter().map(|&(i, j)| (j, i)).collect(),
        };
        let links = self.e_yu.iter().map(|&(j, i)| Link::new(j, i)).collect();
        (pattern, links)
    }
}

/// `D(Ā) = (X, E_XX)`, with `x_i -> x_j` iff `Ā[j][i] != 0`.
pub fn build_state_digraph(pattern: &StructuralPattern) -> SystemDigraph {
    SystemDigraph {
        n: pattern.n(),
        p: 0,
        m: 0,
        e_xx: pattern.a_entries().iter().map(|&(r, c)| (c, r)).collect(),
        e_ux: BTreeSet::new(),
        e_xy: BTreeSet::new(),
        e_yu: BTreeSet::new(),
    }
}

/// Open-loop `D(Ā, B̄, C̄)`.
pub fn build_system_digraph(pattern: &StructuralPattern) -> SystemDigraph {
    SystemDigraph {
        n: pattern.n(),
        p: pattern.p(),
        m: pattern.m(),
        e_xx: pattern.a_entries().iter().map(|&(r, c)| (c, r)).collect(),
        e_ux: pattern.b_entries().iter().map(|&(r, c)| (c, r)).collect(),
        e_xy: pattern.c_entries().iter().map(|&(r, c)| (c, r)).collect(),
        e_yu: BTreeSet::new(),
    }
}

/// Closed-loop digraph with feedback edges from `links \ gamma`.
pub fn build_closed_loop_digraph(
    pattern: &StructuralPattern,
    links: &LinkSet,
    gamma: &LinkSet,
) -> Result<SystemDigraph> {
    if let Some(l) = gamma.first_outside(links) {
        return Err(Error::GammaNotSubset(l));
    }
    links.check_bounds(pattern.p(), pattern.m())?;
    let mut d = build_system_digraph(pattern);
    d.e_yu = links
        .iter()
        .filter(|l| !gamma.contains(l))
        .map(|l| (l.sensor, l.actuator))
        .collect();
    Ok(d)
}

/// Closed-loop digraph for a full failure scenario (links, actuators, sensors).
pub fn build_scenario_digraph(
    pattern: &StructuralPattern,
    links: &LinkSet,
    scenario: &FailureScenario,
) -> Result<SystemDigraph> {
    scenario.check_against(links)?;
    build_closed_loop_digraph(pattern, links, &scenario.removed_links(links))
}
