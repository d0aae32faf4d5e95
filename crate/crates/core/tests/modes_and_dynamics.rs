use std::f64::consts::PI;

use num_complex::Complex64;

use pss_core::dynamics::{
    event_machine, event_trajectory, integrate_rotor, integrate_two_body, relative_motion,
    CouplingModel, InertiaRatio, ReducedParams, TransientEvent, TwoBodyState,
};
use pss_core::modal::{extract_modes_with, reconstruction_error, ModalSum, Mode, PencilOptions};
use pss_core::spectrum::{spectrum_numeric, spectrum_of_sum};
use pss_core::SignalTrace;

fn known_sum() -> ModalSum {
    let a = Complex64::new(0.4, -0.25);
    let l = Complex64::new(-0.15, 2.1);
    let b = Complex64::new(0.1, 0.05);
    let m = Complex64::new(-0.6, 6.3);
    ModalSum {
        modes: vec![
            Mode { amplitude: a, eigenvalue: l },
            Mode { amplitude: a.conj(), eigenvalue: l.conj() },
            Mode { amplitude: b, eigenvalue: m },
            Mode { amplitude: b.conj(), eigenvalue: m.conj() },
            Mode { amplitude: Complex64::new(-0.3, 0.0), eigenvalue: Complex64::new(-1.2, 0.0) },
        ],
        dc_offset: 0.35,
    }
}

#[test]
fn pencil_recovers_known_modes() {
    let sum = known_sum();
    let trace = SignalTrace::from_fn(0.0, 1e-3, 100_001, |t| sum.eval(t)).unwrap();
    let fit = extract_modes_with(&trace, &PencilOptions::default()).unwrap();
    assert!(fit.modes.is_conjugate_paired());
    assert!(fit.fit_error < 1e-6, "fit error {}", fit.fit_error);
    assert!((fit.modes.dc_offset - 0.35).abs() < 1e-6);
    for want in &sum.modes {
        let got = fit
            .modes
            .modes
            .iter()
            .min_by(|p, q| (p.eigenvalue - want.eigenvalue).norm().total_cmp(&(q.eigenvalue - want.eigenvalue).norm()))
            .unwrap();
        assert!((got.eigenvalue - want.eigenvalue).norm() < 1e-6, "{:?} vs {:?}", got, want);
        assert!((got.amplitude - want.amplitude).norm() < 1e-6, "{:?} vs {:?}", got, want);
    }
    assert!(reconstruction_error(&trace, &fit.modes).unwrap() < 1e-6);
}

#[test]
fn numeric_spectrum_matches_analytic_transform() {
    let sum = known_sum();
    let trace = SignalTrace::from_fn(0.0, 1e-3, 120_001, |t| sum.eval(t)).unwrap();
    let omegas = [0.5, 2.1, 4.0, 6.3, 9.0];
    let exact = spectrum_of_sum(&sum.to_exp_sum(), &omegas).unwrap();
    let numeric = spectrum_numeric(&trace, &omegas).unwrap();
    for (e, n) in exact.iter().zip(&numeric) {
        let rel = (e.value - n.value).norm() / e.value.norm();
        assert!(rel < 1e-5, "omega {}: {} vs {}", e.omega, e.value, n.value);
    }
}

#[test]
fn two_body_cage_reduces_to_pendulum_for_finite_grid() {
    let ev = TransientEvent::new(1.0, 5.0, PI / 3.0).unwrap();
    for x in [0.5, 2.0, 20.0] {
        let x = InertiaRatio::new(x).unwrap();
        let r = ReducedParams::with_generator_damping(CouplingModel::Cage, 0.3, 5.0, ev.tau_r(), x).unwrap();
        let machine = event_machine(&ev, &r, ev.xi_final).unwrap();
        let initial = TwoBodyState {
            t: 0.0,
            theta_gen: 0.0,
            theta_grid: ev.delta_initial,
            theta_gen_dot: machine.omega_base,
            theta_grid_dot: machine.omega_base,
        };
        let states = integrate_two_body(&machine, CouplingModel::Cage, &initial, 30.0, 1e-2).unwrap();
        let two_body = relative_motion(&states).unwrap();
        let pendulum = integrate_rotor(&ev, &r, 30.0, 1e-2).unwrap();
        let err = two_body.delta.relative_linf_error(&pendulum.delta).unwrap();
        assert!(err < 1e-6, "x = {x:?}: {err:e}");
    }
}

#[test]
fn kuramoto_with_infinite_grid_is_the_pendulum() {
    let ev = TransientEvent::new(1.0, 5.0, PI / 3.0).unwrap();
    let r = ReducedParams::with_generator_damping(CouplingModel::Kuramoto, 0.3, 5.0, ev.tau_r(), InertiaRatio::Infinite).unwrap();
    let a = event_trajectory(&ev, &r, 30.0, 1e-2).unwrap();
    let b = integrate_rotor(&ev, &ReducedParams::pendulum(0.3, 5.0, ev.tau_r()).unwrap(), 30.0, 1e-2).unwrap();
    assert!(a.delta.relative_linf_error(&b.delta).unwrap() < 1e-12);
}

#[test]
fn trajectory_settles_at_post_event_equilibrium() {
    let ev = TransientEvent::from_angles(1.0, PI / 4.0, PI / 4.0 - PI / 20.0).unwrap();
    let r = ReducedParams::pendulum(0.3, 1.0, ev.tau_r()).unwrap();
    let tr = integrate_rotor(&ev, &r, 120.0, 1e-2).unwrap();
    assert!((tr.delta.last() - ev.delta_final()).abs() < 1e-6);
    assert!(tr.delta_dot.last().abs() < 1e-6);
}
