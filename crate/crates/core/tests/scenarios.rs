//! Resonance behaviour of the reference geometries. The free-electron Drude
//! model puts every resonance of these particles below 300 nm, so the
//! resonant scenarios use a background of 9.84, which brings them into the
//! sweep window.

use num_complex::Complex64;

use metaimp::impedance::{alpha_inf_from_couplings, DrudeParams, MaterialState, EPS_0};
use metaimp::scenarios::{height_pair, radius_series, run_scenario, single_disk, three_disks};
use metaimp::sweep::{PreparedGeometry, WavelengthGrid, PEAK_PROMINENCE};

fn dielectric_gold() -> DrudeParams {
    DrudeParams {
        background: 9.84,
        ..DrudeParams::default()
    }
}

#[test]
fn free_electron_sweeps_decrease_monotonically() {
    let grid = WavelengthGrid {
        count: 61,
        ..WavelengthGrid::default()
    };
    for b in radius_series(96).unwrap() {
        let s = run_scenario(b, &grid, &DrudeParams::default(), PEAK_PROMINENCE).unwrap();
        assert!(s.peaks.is_empty());
        assert!(s.rows.windows(2).all(|w| w[1].alpha_inf.norm() < w[0].alpha_inf.norm()));
    }
}

#[test]
fn larger_disks_resonate_at_longer_wavelengths_and_more_strongly() {
    let grid = WavelengthGrid::default();
    let peaks: Vec<(f64, f64)> = radius_series(128)
        .unwrap()
        .into_iter()
        .map(|b| {
            let s = run_scenario(b, &grid, &dielectric_gold(), PEAK_PROMINENCE).unwrap();
            let p = s.top_peak().expect("resonance inside the window");
            (p.wavelength_nm, p.value)
        })
        .collect();
    for w in peaks.windows(2) {
        assert!(w[1].0 > w[0].0, "{peaks:?}");
        assert!(w[1].1 > w[0].1, "{peaks:?}");
    }
}

#[test]
fn particle_height_changes_the_resonance() {
    let grid = WavelengthGrid::default();
    let tops: Vec<(f64, f64)> = height_pair(128)
        .unwrap()
        .into_iter()
        .map(|b| {
            let s = run_scenario(b, &grid, &dielectric_gold(), PEAK_PROMINENCE).unwrap();
            let p = s.top_peak().unwrap();
            (p.wavelength_nm, p.value)
        })
        .collect();
    assert_ne!(tops[0].0, tops[1].0, "{tops:?}");
    assert!((tops[0].1 - tops[1].1).abs() > 0.1 * tops[0].1, "{tops:?}");
}

#[test]
fn single_disk_resonance_is_dominated_by_one_mode() {
    let prep = PreparedGeometry::new(single_disk(128).unwrap()).unwrap();
    let drude = dielectric_gold();
    let grid = WavelengthGrid::default();
    let s = run_scenario(prep.boundary.clone(), &grid, &drude, 0.5).unwrap();
    assert_eq!(s.peaks.len(), 1);
    let peak = s.peaks[0];
    let mat = MaterialState::drude(peak.wavelength_nm, &drude, Complex64::new(EPS_0, 0.0)).unwrap();
    let r = alpha_inf_from_couplings(&prep.couplings, mat.spectral_parameter());
    let (j, lambda) = r.dominant_mode().unwrap();
    assert_eq!(lambda, peak.dominant_mode_lambda);
    let share = r.mode_contributions[j].1.norm() / r.alpha_inf.norm();
    assert!(share >= 0.9, "dominant share {share}");
}

#[test]
fn separated_small_disks_peak_below_the_single_disk() {
    let grid = WavelengthGrid::default();
    let one = run_scenario(single_disk(128).unwrap(), &grid, &dielectric_gold(), PEAK_PROMINENCE).unwrap();
    let three = run_scenario(three_disks(128).unwrap(), &grid, &dielectric_gold(), PEAK_PROMINENCE).unwrap();
    let top = one.top_peak().unwrap().value;
    assert!(!three.peaks.is_empty());
    assert!(three.peaks.iter().all(|p| p.value < top));
}
