//! JSON file formats and Graphviz export.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::scc_decompose;
use crate::pattern::{
    FailureCollection, Gain, Link, LinkSet, Realization, StructuralPattern, SystemDigraph, Vertex,
};

fn default_base() -> usize {
    1
}

/// System description. Structural entries go in `A`/`B`/`C` as
/// `[row, col]`; numeric entries in `A_values`/`B_values`/`C_values` as
/// `[row, col, value]`. The structure is the union of both.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    #[serde(default)]
    pub p: usize,
    #[serde(default)]
    pub m: usize,
    /// 1 (default) or 0.
    #[serde(default = "default_base")]
    pub index_base: usize,
    #[serde(rename = "A", default)]
    pub a: Vec<[usize; 2]>,
    #[serde(rename = "B", default)]
    pub b: Vec<[usize; 2]>,
    #[serde(rename = "C", default)]
    pub c: Vec<[usize; 2]>,
    #[serde(rename = "A_values", default, skip_serializing_if = "Vec::is_empty")]
    pub a_values: Vec<(usize, usize, f64)>,
    #[serde(rename = "B_values", default, skip_serializing_if = "Vec::is_empty")]
    pub b_values: Vec<(usize, usize, f64)>,
    #[serde(rename = "C_values", default, skip_serializing_if = "Vec::is_empty")]
    pub c_values: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub links: Vec<[usize; 2]>,
    #[serde(default)]
    pub failures: FailureCollection,
}

impl SystemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if f.index_base > 1 {
            return Err(Error::Parse(format!(
                "index_base must be 0 or 1, got {}",
                f.index_base
            )));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system file serializes")
    }

    fn shift(&self, i: usize) -> usize {
        i + 1 - self.index_base
    }

    fn entries(&self, s: &[[usize; 2]], v: &[(usize, usize, f64)]) -> BTreeSet<(usize, usize)> {
        s.iter()
            .map(|e| (self.shift(e[0]), self.shift(e[1])))
            .chain(
                v.iter()
                    .filter(|e| e.2 != 0.0)
                    .map(|e| (self.shift(e.0), self.shift(e.1))),
            )
            .collect()
    }

    pub fn has_values(&self) -> bool {
        !(self.a_values.is_empty() && self.b_values.is_empty() && self.c_values.is_empty())
    }

    pub fn pattern(&self) -> Result<StructuralPattern> {
        StructuralPattern::new(
            self.n,
            self.p,
            self.m,
            self.entries(&self.a, &self.a_values),
            self.entries(&self.b, &self.b_values),
            self.entries(&self.c, &self.c_values),
        )
    }

    /// Numeric matrices; entries listed only structurally are zero.
    pub fn realization(&self) -> Result<Realization> {
        if !self.has_values() {
            return Err(Error::Parse("system file has no numeric values".into()));
        }
        let fill = |rows: usize, cols: usize, v: &[(usize, usize, f64)]| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(rows, cols);
            for &(r, c, x) in v {
                let (r, c) = (self.shift(r), self.shift(c));
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(Error::Parse(format!(
                        "entry ({r},{c}) outside {rows}x{cols}"
                    )));
                }
                m[(r - 1, c - 1)] = x;
            }
            Ok(m)
        };
        Realization::new(
            fill(self.n, self.n, &self.a_values)?,
            fill(self.n, self.p, &self.b_values)?,
            fill(self.m, self.n, &self.c_values)?,
        )
    }

    pub fn link_set(&self) -> Result<LinkSet> {
        let links = LinkSet::try_from_pairs(
            self.links
                .iter()
                .map(|l| (self.shift(l[0]), self.shift(l[1]))),
        )?;
        links.check_bounds(self.p, self.m)?;
        Ok(links)
    }

    /// Failure scenarios, re-based to 1.
    pub fn failure_collection(&self) -> FailureCollection {
        if self.index_base == 1 {
            return self.failures.clone();
        }
        let mut f = self.failures.clone();
        for s in &mut f.0 {
            s.links = s
                .links
                .iter()
                .map(|l| Link::new(l.sensor + 1, l.actuator + 1))
                .collect();
            s.actuators = s.actuators.iter().map(|a| a + 1).collect();
            s.sensors = s.sensors.iter().map(|x| x + 1).collect();
        }
        f
    }

    /// 1-based file for a realization with links and failures.
    pub fn from_realization(
        r: &Realization,
        links: &LinkSet,
        failures: &FailureCollection,
    ) -> Self {
        let values = |m: &DMatrix<f64>| {
            let mut v = Vec::new();
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if m[(i, j)] != 0.0 {
                        v.push((i + 1, j + 1, m[(i, j)]));
                    }
                }
            }
            v
        };
        Self {
            n: r.n(),
            p: r.p(),
            m: r.m(),
            index_base: 1,
            a_values: values(&r.a),
            b_values: values(&r.b),
            c_values: values(&r.c),
            links: links.iter().map(|&l| l.into()).collect(),
            failures: failures.clone(),
            ..Default::default()
        }
    }
}

/// Gain file: dense row-major `K` plus the links it is allowed to use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainFile {
    pub p: usize,
    pub m: usize,
    pub links: LinkSet,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
}

impl GainFile {
    pub fn from_gain(g: &Gain) -> Self {
        let k = g.matrix();
        Self {
            p: g.p(),
            m: g.m(),
            links: g.pattern().clone(),
            k: (0..k.nrows())
                .map(|i| k.row(i).iter().copied().collect())
                .collect(),
        }
    }

    pub fn to_gain(&self) -> Result<Gain> {
        if self.k.len() != self.p || self.k.iter().any(|r| r.len() != self.m) {
            return Err(Error::DimensionMismatch(format!(
                "K is not {}x{}",
                self.p, self.m
            )));
        }
        let k = DMatrix::from_fn(self.p, self.m, |i, j| self.k[i][j]);
        Gain::new(k, self.links.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("gain serializes")
    }
}

/// Parses any deserializable value, mapping failures to `Error::Parse`.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

/// Graphviz rendering. States are circles, inputs boxes, outputs diamonds;
/// feedback edges are dashed; every SCC containing a cycle is a cluster.
pub fn to_dot(d: &SystemDigraph, name: &str) -> String {
    let g = d.to_digraph();
    let scc = scc_decompose(&g);
    let mut out = String::new();
    writeln!(out, "digraph \"{name}\" {{").unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    let mut clustered = vec![false; d.vertex_count()];
    for (i, comp) in scc.components.iter().enumerate() {
        let cyclic = comp.len() > 1 || g.has_edge(comp[0], comp[0]);
        if !cyclic {
            continue;
        }
        writeln!(out, "  subgraph cluster_{i} {{").unwrap();
        writeln!(out, "    label=\"SCC {}\";", i + 1).unwrap();
        for &v in comp {
            clustered[v] = true;
            writeln!(out, "    {}", node(d.vertex(v))).unwrap();
        }
        writeln!(out, "  }}").unwrap();
    }
    for (v, &inside) in clustered.iter().enumerate() {
        if !inside {
            writeln!(out, "  {}", node(d.vertex(v))).unwrap();
        }
    }
    let feedback: BTreeSet<(usize, usize)> = d.feedback_edges().into_iter().collect();
    for (u, v) in d.edges() {
        let style = if feedback.contains(&(u, v)) {
            " [style=dashed, color=red, class=\"feedback\"]"
        } else {
            ""
        };
        writeln!(out, "  {} -> {}{};", d.vertex(u), d.vertex(v), style).unwrap();
    }
    out.push_str("}\n");
    out
}

fn node(v: Vertex) -> String {
    let (shape, class) = match v {
        Vertex::State(_) => ("circle", "state"),
        Vertex::Input(_) => ("box", "input"),
        Vertex::Output(_) => ("diamond", "output"),
    };
    format!("{v} [shape={shape}, class=\"{class}\"];")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::pattern::{
        build_closed_loop_digraph, build_scenario_digraph, build_state_digraph,
        build_system_digraph, FailureScenario,
    };

    fn five_bus_file() -> SystemFile {
        SystemFile::from_realization(
            &five_bus_realization(),
            &five_bus_links(),
            &five_bus_failures(),
        )
    }

    #[test]
    fn system_file_round_trip() {
        let f = five_bus_file();
        let g = SystemFile::from_json(&f.to_json()).unwrap();
        assert_eq!(f, g);
        assert_eq!(g.realization().unwrap(), five_bus_realization());
        assert_eq!(g.pattern().unwrap(), five_bus_pattern());
        assert_eq!(g.link_set().unwrap(), five_bus_links());
    }

    #[test]
    fn zero_based_files_are_rebased() {
        let text = r#"{"n":2,"p":1,"m":1,"index_base":0,"A":[[0,0],[1,0]],"B":[[0,0]],"C":[[0,1]],
            "links":[[0,0]],"failures":[{"links":[[0,0]]}]}"#;
        let f = SystemFile::from_json(text).unwrap();
        let p = f.pattern().unwrap();
        assert!(p.a_entries().contains(&(2, 1)));
        assert!(p.c_entries().contains(&(1, 2)));
        assert_eq!(f.link_set().unwrap(), LinkSet::from_pairs(&[(1, 1)]));
        assert_eq!(
            f.failure_collection().0[0],
            FailureScenario::links(LinkSet::from_pairs(&[(1, 1)]))
        );
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            SystemFile::from_json("{\"n\": }"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            SystemFile::from_json("{\"n\": 1, \"index_base\": 2}"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn gain_file_round_trip() {
        let g = five_bus_printed_gain();
        let f = GainFile::from_json(&GainFile::from_gain(&g).to_json()).unwrap();
        assert_eq!(f.to_gain().unwrap(), g);
        let mut bad = f.clone();
        bad.k[0][1] = 1.0;
        assert!(matches!(bad.to_gain(), Err(Error::PatternViolation { .. })));
    }

    #[test]
    fn dot_single_self_loop() {
        let p = StructuralPattern::state_only(1, [(1, 1)]).unwrap();
        let dot = to_dot(&build_state_digraph(&p), "g");
        assert_eq!(dot.matches("shape=").count(), 1);
        assert_eq!(dot.matches("->").count(), 1);
    }

    #[test]
    fn dot_five_bus() {
        let open = to_dot(&build_system_digraph(&five_bus_pattern()), "open");
        assert_eq!(open.matches("subgraph cluster_").count(), 3);
        let d = build_closed_loop_digraph(&five_bus_pattern(), &five_bus_links(), &LinkSet::new())
            .unwrap();
        let closed = to_dot(&d, "closed");
        assert_eq!(closed.matches("shape=").count(), 24);
        assert_eq!(closed, to_dot(&d, "closed"));
        let gamma2 = five_bus_failures().0[1].clone();
        let failed = to_dot(
            &build_scenario_digraph(&five_bus_pattern(), &five_bus_links(), &gamma2).unwrap(),
            "f",
        );
        assert_eq!(
            failed.matches("feedback").count() + 1,
            closed.matches("feedback").count()
        );
    }

    #[test]
    fn report_round_trip() {
        let rep = crate::stabilizer::verify_stabilization(
            &five_bus_realization(),
            &five_bus_printed_gain(),
            &five_bus_failures(),
        )
        .unwrap();
        let back: crate::stabilizer::StabilityReport = parse_json(&to_json(&rep)).unwrap();
        assert_eq!(back, rep);
    }
}
