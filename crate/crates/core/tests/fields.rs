//! Off-boundary probes of the transmission conditions satisfied by the
//! corrector and the auxiliary fields of the shape derivative.

use num_complex::Complex64;

use metaimp::geometry::{make_disk, make_star, ParticleBoundary};
use metaimp::green::CellPoint;
use metaimp::impedance::{ratio_from_spectral_parameter, Corrector, DrudeParams, MaterialState};
use metaimp::operators::PeriodicOperators;
use metaimp::probe::{probe_traces, RefinedLayer};
use metaimp::shape_optim::{solve_auxiliary_v, solve_auxiliary_w};

const PROBE: f64 = 1e-4;

fn star() -> ParticleBoundary {
    make_star(CellPoint::new(0.05, 0.45), 0.2, 0.04, 5, 128).unwrap()
}

fn max_rel(pairs: impl Iterator<Item = (Complex64, Complex64)>) -> f64 {
    let v: Vec<_> = pairs.collect();
    let scale = v.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    v.iter().map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn corrector_satisfies_the_flux_transmission_condition() {
    for b in [make_disk(CellPoint::new(0.0, 0.5), 0.2, 128).unwrap(), star()] {
        let ops = PeriodicOperators::assemble(&b).unwrap();
        let mat = MaterialState::drude_gold(550.0, &DrudeParams::default()).unwrap();
        let z = mat.spectral_parameter();
        let k = ratio_from_spectral_parameter(z);
        assert!((k - mat.mu_ratio()).norm() < 1e-12 * k.norm());
        let c = Corrector::new(&ops, &b, z).unwrap();
        let layer = RefinedLayer::new(&b, c.density(), PROBE / 5.0);
        let mut flux = Vec::new();
        let mut cont = Vec::new();
        for node in b.nodes().iter().step_by(8) {
            let (inner, outer) = probe_traces(|x| layer.potential(x), node.point, node.normal, PROBE);
            let nu2 = node.normal[1];
            // u = x2 + alpha carries the flux condition with the permeability ratio
            flux.push((outer.normal_derivative + nu2, k * (inner.normal_derivative + nu2)));
            cont.push((outer.value, inner.value));
        }
        assert!(max_rel(flux.into_iter()) < 1e-4);
        assert!(max_rel(cont.into_iter()) < 1e-6);
    }
}

#[test]
fn corrector_vanishes_on_the_plate_and_is_periodic() {
    let b = star();
    let ops = PeriodicOperators::assemble(&b).unwrap();
    let c = Corrector::new(&ops, &b, Complex64::new(-0.3, 0.05)).unwrap();
    for x1 in [-0.5, -0.2, 0.1, 0.4] {
        assert_eq!(c.eval(CellPoint::new(x1, 0.0)).unwrap().value, Complex64::new(0.0, 0.0));
        let small = c.eval(CellPoint::new(x1, 1e-9)).unwrap().value.norm();
        assert!(small < 1e-8, "{small}");
        let a = c.eval(CellPoint::new(x1, 1.3)).unwrap().value;
        let shifted = c.eval(CellPoint::new(x1 + 1.0, 1.3)).unwrap().value;
        assert!((a - shifted).norm() < 1e-12 * a.norm().max(1.0));
    }
}

#[test]
fn auxiliary_v_and_w_jump_conditions() {
    let b = make_disk(CellPoint::new(0.0, 0.5), 0.2, 128).unwrap();
    let ops = PeriodicOperators::assemble(&b).unwrap();
    let k = MaterialState::drude_gold(700.0, &DrudeParams::default()).unwrap().mu_ratio();
    let v = solve_auxiliary_v(&ops, &b, k).unwrap();
    let w = solve_auxiliary_w(&ops, &b, k).unwrap();

    let v_layer = RefinedLayer::new(&b, &v.exterior_density, PROBE / 5.0);
    let w_out = RefinedLayer::new(&b, &w.exterior_density, PROBE / 5.0);
    let w_in = RefinedLayer::new(&b, &w.interior_density, PROBE / 5.0);
    let (mut v_flux, mut v_val, mut w_flux, mut w_val, mut trace) = (vec![], vec![], vec![], vec![], vec![]);
    for (i, node) in b.nodes().iter().enumerate().step_by(8) {
        let x2 = Complex64::new(node.point.x2, 0.0);
        let nu2 = node.normal[1];
        let (vi, vo) = probe_traces(|x| v_layer.potential(x), node.point, node.normal, PROBE);
        v_flux.push((vo.normal_derivative + nu2, k * (vi.normal_derivative + nu2)));
        v_val.push((vo.value, vi.value));
        let (_, wo) = probe_traces(|x| w_out.potential(x), node.point, node.normal, PROBE);
        let (wi, _) = probe_traces(|x| w_in.potential(x), node.point, node.normal, PROBE);
        w_val.push((k * (wo.value + x2), wi.value + x2));
        w_flux.push((wo.normal_derivative + nu2, wi.normal_derivative + nu2));
        trace.push((wi.value + x2, w.trace[i]));
        trace.push((wi.normal_derivative + nu2, w.normal_derivative[i]));
    }
    assert!(max_rel(v_flux.into_iter()) < 1e-4);
    assert!(max_rel(v_val.into_iter()) < 1e-6);
    assert!(max_rel(w_val.into_iter()) < 1e-5);
    assert!(max_rel(w_flux.into_iter()) < 1e-4);
    assert!(max_rel(trace.into_iter()) < 1e-4);
}
