//! Estimators checked against values computed by independent means.

use conelab::harmonic::{corrected_v, estimate_v, free_drift_g1};
use conelab::oracle::{dp_survival_measure, dp_survival_measure_exact, dp_survival_prob, dp_telescoping, exact_masses};
use conelab::{ChamberFamily, DpOptions, HarmonicCone, IncrementDistribution, Surd, VOptions};
use num_rational::BigRational;

fn chamber(f: ChamberFamily, d: usize) -> HarmonicCone {
    HarmonicCone::weyl_chamber(f, d).unwrap()
}

/// `E h(x + X) − h(x)` by summing over every atom of the product law.
fn drift_by_enumeration(cone: &HarmonicCone, dist: &IncrementDistribution, x: &[Surd]) -> Surd {
    let lat = dist.lattice().unwrap();
    let atoms: Vec<(Surd, Surd)> = lat
        .units
        .iter()
        .zip(&lat.probs)
        .map(|(u, p)| (lat.mesh_exact.clone() * Surd::from_integer(*u), Surd::from_rational(p.clone())))
        .collect();
    let d = x.len();
    let mut total = Surd::from_integer(0);
    let mut idx = vec![0usize; d];
    loop {
        let mut y = x.to_vec();
        let mut w = Surd::from_integer(1);
        for j in 0..d {
            y[j] = y[j].clone() + atoms[idx[j]].0.clone();
            w = w * atoms[idx[j]].1.clone();
        }
        total = total + w * cone.evaluate_h_exact(&y);
        let mut j = 0;
        while j < d {
            idx[j] += 1;
            if idx[j] < atoms.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    total - cone.evaluate_h_exact(x)
}

#[test]
fn free_drift_matches_enumeration() {
    let q = Surd::from_ratio;
    let laws = [
        IncrementDistribution::rademacher(),
        IncrementDistribution::asymmetric_three_point(),
        IncrementDistribution::lazy_rademacher(0.25).unwrap(),
    ];
    let cones = [
        chamber(ChamberFamily::A, 2),
        chamber(ChamberFamily::C, 2),
        chamber(ChamberFamily::D, 2),
        chamber(ChamberFamily::A, 3),
        chamber(ChamberFamily::C, 3),
        HarmonicCone::phi1().unwrap(),
    ];
    for cone in &cones {
        let x: Vec<Surd> = [q(7, 3), q(-1, 2), q(5, 1)][..cone.dimension()].to_vec();
        for law in &laws {
            assert_eq!(
                free_drift_g1(cone, law, &x).unwrap(),
                drift_by_enumeration(cone, law, &x),
                "{} {}",
                cone.label(),
                law.name()
            );
        }
    }
}

#[test]
fn free_drift_of_phi1_has_closed_form() {
    // h = xy(x² − y²) and unit variance give m3·(y − x)
    let law = IncrementDistribution::asymmetric_three_point();
    let m3 = law.moment(3).unwrap();
    let phi1 = HarmonicCone::phi1().unwrap();
    for (a, b) in [(2, 7), (1, 3), (-4, 9)] {
        let x = [Surd::from_integer(a), Surd::from_integer(b)];
        assert_eq!(free_drift_g1(&phi1, &law, &x).unwrap(), m3.clone() * Surd::from_integer(b - a));
    }
}

#[test]
fn half_line_survival_is_the_central_binomial() {
    // P(min_{k≤n} S_k ≥ 0) = C(n, ⌊n/2⌋)/2^n, which gains a factor n/(n+1) at odd n
    let half_line = chamber(ChamberFamily::C, 1);
    let ns: Vec<usize> = (1..=400).collect();
    let curve = dp_survival_prob(&half_line, &[1.0], &IncrementDistribution::rademacher(), &ns).unwrap();
    let mut want = 1.0f64;
    for (n, got) in ns.iter().zip(&curve.estimates) {
        if n % 2 == 1 {
            want *= *n as f64 / (*n + 1) as f64;
        }
        assert!((got - want).abs() <= 1e-12 * want, "n={n}: {got} vs {want}");
    }
}

#[test]
fn two_dimensional_type_a_reduces_to_a_lazy_half_line() {
    let ns = [1, 5, 20, 80];
    let a2 = dp_survival_prob(&chamber(ChamberFamily::A, 2), &[0.0, 2.0], &IncrementDistribution::rademacher(), &ns)
        .unwrap();
    let lazy = IncrementDistribution::lazy_rademacher(0.5).unwrap();
    let half = dp_survival_prob(&chamber(ChamberFamily::C, 1), &[1.0], &lazy, &ns).unwrap();
    for (a, b) in a2.estimates.iter().zip(&half.estimates) {
        assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
    }
}

#[test]
fn half_line_v_is_the_lattice_ceiling() {
    let half_line = chamber(ChamberFamily::C, 1);
    let opts = VOptions::default();
    let asym = IncrementDistribution::asymmetric_three_point();
    let c = 2.5f64.sqrt();
    for x in [0.3, 1.0, c, 2.0, 4.5, 10.0] {
        let want = c * (x / c).ceil();
        for v in [
            corrected_v(&half_line, &asym, &[x], None, &opts).unwrap(),
            estimate_v(&half_line, &asym, &[x], &opts).unwrap(),
        ] {
            assert!((v.value - want).abs() <= 1e-6 * want, "x={x}: {} vs {want}", v.value);
        }
    }
    let rad = IncrementDistribution::rademacher();
    for x in [1.0, 2.0, 7.0] {
        let v = corrected_v(&half_line, &rad, &[x], None, &opts).unwrap();
        assert!((v.value - x).abs() <= 1e-6 * x, "x={x}: {}", v.value);
    }
}

#[test]
fn exact_survival_is_rational() {
    let half_line = chamber(ChamberFamily::C, 1);
    let rad = IncrementDistribution::rademacher();
    for (n, num, den) in [(3, 3, 8), (10, 63, 256)] {
        let mu = dp_survival_measure_exact(&half_line, &[1.0], &rad, n, DpOptions::unreduced()).unwrap();
        assert_eq!(mu.total_exact().unwrap(), BigRational::new(num.into(), den.into()));
        assert_eq!(exact_masses(&mu).unwrap().len(), n / 2 + 1);
    }
}

/// `E[h(z+X)] − h(z)` and `E[h(z+X); z+X ∈ K] − h(z)` by summing over atoms.
fn drift_and_defect(cone: &HarmonicCone, dist: &IncrementDistribution, z: &[f64]) -> (f64, f64) {
    let lat = dist.lattice().unwrap();
    let atoms: Vec<(f64, f64)> = lat.units.iter().map(|u| *u as f64 * lat.mesh).zip(lat.float_probs()).collect();
    let (mut all, mut inside) = (0.0, 0.0);
    for &(a, pa) in &atoms {
        for &(b, pb) in &atoms {
            let y = [z[0] + a, z[1] + b];
            let hy = cone.evaluate_h(&y);
            all += pa * pb * hy;
            if cone.contains(&y) {
                inside += pa * pb * hy;
            }
        }
    }
    let h = cone.evaluate_h(z);
    (all - h, inside - h)
}

#[test]
fn telescoping_identities() {
    let c2 = chamber(ChamberFamily::C, 2);
    let law = IncrementDistribution::asymmetric_three_point();
    let c = 2.5f64.sqrt();
    let x = [c, 3.0 * c];
    let n = 12;
    let t = dp_telescoping(&c2, &x, &law, n).unwrap();
    let (mut sum_g1, mut sum_f) = (0.0, 0.0);
    for k in 0..n {
        if k > 0 {
            let mu = dp_survival_measure(&c2, &x, &law, k).unwrap();
            for (key, m) in mu.entries() {
                let (g1, f) = drift_and_defect(&c2, &law, &mu.position(&key));
                sum_g1 += m * g1;
                sum_f += m * f;
            }
        } else {
            let (g1, f) = drift_and_defect(&c2, &law, &x);
            sum_g1 += g1;
            sum_f += f;
        }
        let scale = t.h_start.abs() + t.truncated_h[k + 1].abs();
        // with exit corrections the defect is the free drift
        let with_exit = t.truncated_h[k + 1] + t.exit_h[k + 1] - t.h_start;
        assert!((with_exit - sum_g1).abs() <= 1e-9 * scale, "k={k}: {with_exit} vs {sum_g1}");
        // without them it is f
        let without = t.truncated_h[k + 1] - t.h_start;
        assert!((without - sum_f).abs() <= 1e-9 * scale, "k={k}: {without} vs {sum_f}");
    }
    assert!(sum_g1.abs() > 1e-3, "the free drift should not vanish here");
}
