//! Fixtures shared by the benchmarks.

use conelab::{ChamberFamily, HarmonicCone, IncrementDistribution};

/// A cone, a law and an interior start.
pub struct Fixture {
    pub label: &'static str,
    pub cone: HarmonicCone,
    pub dist: IncrementDistribution,
    pub start: Vec<f64>,
}

pub fn fixtures() -> Vec<Fixture> {
    let c = 2.5f64.sqrt();
    let chamber = |f, d| HarmonicCone::weyl_chamber(f, d).expect("chamber");
    vec![
        Fixture {
            label: "A2/rademacher",
            cone: chamber(ChamberFamily::A, 2),
            dist: IncrementDistribution::rademacher(),
            start: vec![0.0, 1.0],
        },
        Fixture {
            label: "C2/rademacher",
            cone: chamber(ChamberFamily::C, 2),
            dist: IncrementDistribution::rademacher(),
            start: vec![1.0, 2.0],
        },
        Fixture {
            label: "D2/asym3",
            cone: chamber(ChamberFamily::D, 2),
            dist: IncrementDistribution::asymmetric_three_point(),
            start: vec![0.0, c],
        },
    ]
}
