//! IEEE 5-bus power system example (18 states, 4 actuators, 2 sensors).

use nalgebra::DMatrix;

use crate::pattern::{
    FailureCollection, FailureScenario, Gain, LinkSet, Realization, StructuralPattern,
};

/// Nonzero entries of A as `(row, col, value)`, 1-based.
pub const FIVE_BUS_A: [(usize, usize, f64); 54] = [
    (1, 1, 0.2309),
    (3, 1, 0.8005),
    (14, 1, 0.7662),
    (15, 1, 0.9755),
    (17, 1, 1.0123),
    (1, 2, 0.6275),
    (2, 2, 0.1166),
    (1, 3, 0.4365),
    (2, 3, -0.1303),
    (3, 3, -0.0100),
    (4, 4, 0.2154),
    (6, 4, 0.8283),
    (14, 4, 1.1273),
    (15, 4, 0.7095),
    (16, 4, 1.0272),
    (17, 4, 1.1220),
    (4, 5, 0.8733),
    (5, 5, 0.1938),
    (4, 6, 0.3790),
    (5, 6, -0.0800),
    (6, 6, 0.2679),
    (7, 7, 0.1458),
    (9, 7, 1.1761),
    (15, 7, 0.7831),
    (16, 7, 0.6320),
    (18, 7, 0.9408),
    (7, 8, 0.6544),
    (8, 8, 0.1681),
    (7, 9, 0.3592),
    (8, 9, -0.2192),
    (9, 9, 0.0637),
    (10, 10, 0.4795),
    (14, 10, 0.8029),
    (15, 10, 0.8851),
    (17, 10, 0.5781),
    (18, 10, 1.0721),
    (10, 11, -0.0275),
    (11, 11, 0.7626),
    (12, 12, 0.2686),
    (16, 12, 0.7851),
    (17, 12, 1.0285),
    (18, 12, 0.4553),
    (12, 13, 0.1462),
    (13, 13, 0.7775),
    (1, 14, 0.0491),
    (14, 14, 0.4760),
    (4, 15, 0.2080),
    (15, 15, 0.5730),
    (7, 16, -0.0535),
    (16, 16, 0.5155),
    (10, 17, 0.0492),
    (17, 17, 0.0407),
    (12, 18, -0.0668),
    (18, 18, 0.2072),
];

/// States driven by actuators 1..4.
pub const FIVE_BUS_ACTUATORS: [usize; 4] = [11, 13, 11, 13];
/// States read by sensors 1..2.
pub const FIVE_BUS_SENSORS: [usize; 2] = [10, 12];
/// Feedback links `(sensor, actuator)`.
pub const FIVE_BUS_LINKS: [(usize, usize); 4] = [(1, 2), (1, 1), (2, 3), (2, 4)];

/// Reference gain for the links above, as a 4x2 matrix (row = actuator).
pub const FIVE_BUS_PRINTED_GAIN: [[f64; 2]; 4] = [
    [0.6445, 0.0],
    [-0.3043, 0.0],
    [0.0, -1.0079],
    [0.0, -0.0000043329],
];

pub fn five_bus_a() -> DMatrix<f64> {
    let mut a = DMatrix::zeros(18, 18);
    for &(r, c, v) in &FIVE_BUS_A {
        a[(r - 1, c - 1)] = v;
    }
    a
}

pub fn five_bus_realization() -> Realization {
    let mut b = DMatrix::zeros(18, 4);
    for (j, &x) in FIVE_BUS_ACTUATORS.iter().enumerate() {
        b[(x - 1, j)] = 1.0;
    }
    let mut c = DMatrix::zeros(2, 18);
    for (i, &x) in FIVE_BUS_SENSORS.iter().enumerate() {
        c[(i, x - 1)] = 1.0;
    }
    Realization::new(five_bus_a(), b, c).expect("fixture dimensions agree")
}

/// Structure of A only (no inputs or outputs).
pub fn five_bus_state_pattern() -> StructuralPattern {
    StructuralPattern::state_only(18, FIVE_BUS_A.iter().map(|&(r, c, _)| (r, c)))
        .expect("valid fixture")
}

/// Structure with the fixture's actuators and sensors attached.
pub fn five_bus_pattern() -> StructuralPattern {
    let r = five_bus_realization();
    StructuralPattern::from_matrices(&r.a, &r.b, &r.c).expect("valid fixture")
}

pub fn five_bus_links() -> LinkSet {
    LinkSet::from_pairs(&FIVE_BUS_LINKS)
}

/// The four single-link failures Γ1..Γ4 = {(1,1)}, {(1,2)}, {(2,3)}, {(2,4)}.
pub fn five_bus_failures() -> FailureCollection {
    FailureCollection::new(
        [(1, 1), (1, 2), (2, 3), (2, 4)]
            .iter()
            .map(|&l| FailureScenario::links(LinkSet::from_pairs(&[l])))
            .collect(),
    )
}

pub fn five_bus_printed_gain() -> Gain {
    let k = DMatrix::from_fn(4, 2, |i, j| FIVE_BUS_PRINTED_GAIN[i][j]);
    Gain::new(k, five_bus_links()).expect("printed gain respects the links")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let r = five_bus_realization();
        assert_eq!((r.n(), r.p(), r.m()), (18, 4, 2));
        assert_eq!(five_bus_state_pattern().a_entries().len(), 54);
        assert!(five_bus_state_pattern().has_full_diagonal());
        assert_eq!(five_bus_failures().len(), 4);
        assert_eq!(five_bus_printed_gain().matrix().nrows(), 4);
    }
}
