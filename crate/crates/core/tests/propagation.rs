mod common;

use common::{random_density, random_hermitian, random_pulse, system};
use num_complex::Complex64;
use qudit_oct::linalg::{c, hermiticity_defect, inner, min_eigenvalue, unitarity_defect, CMatrix};
use qudit_oct::propagation::*;
use qudit_oct::pulse::{FnWaveform, ZeroPulse};

fn diag_phase(sys: &qudit_oct::spin::SpinSystem, t: f64) -> CMatrix {
    CMatrix::from_fn(8, 8, |n, m| {
        if n == m {
            Complex64::from_polar(1.0, -sys.energies[n] * t)
        } else {
            c(0.0, 0.0)
        }
    })
}

#[test]
fn free_dephasing_matches_closed_form() {
    let sys = system();
    let tau = sys.tau();
    let t2 = 5.0 * tau;
    let model = LindbladModel::dephasing(8, t2).unwrap();
    let rho0 = random_density(8, 1);
    for t in [t2, 3.0 * t2] {
        let rho = propagate_final(&sys, &model, &ZeroPulse { duration: t }, &rho0, &PropagatorConfig::default()).unwrap();
        for n in 0..8 {
            assert!((rho[(n, n)] - rho0[(n, n)]).norm() < 1e-12);
            for m in 0..8 {
                if n != m {
                    let expected = rho0[(n, m)].norm() * (-t / t2).exp();
                    assert!((rho[(n, m)].norm() - expected).abs() < 1e-6 * expected);
                }
            }
        }
    }
}

#[test]
fn long_dephased_propagation_stays_physical() {
    let sys = system();
    let tau = sys.tau();
    let t = 200.0 * tau;
    let model = LindbladModel::dephasing(8, 50.0 * tau).unwrap();
    let pulse = random_pulse(&sys, t, 0.5, 2);
    let rho0 = random_density(8, 3);
    let traj = propagate_forward(&sys, &model, &pulse, &rho0, &PropagatorConfig::default(), 5000).unwrap();
    assert!(traj.len() > 20);
    for rho in &traj.states {
        assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-10);
        assert!(hermiticity_defect(rho) < 1e-10);
        assert!(min_eigenvalue(rho) > -1e-8);
    }
}

#[test]
fn closed_lindblad_equals_unitary_conjugation() {
    let sys = system();
    let tau = sys.tau();
    let pulse = random_pulse(&sys, 2.0 * tau, 2.0, 4);
    let rho0 = random_density(8, 5);
    for scheme in [Scheme::Strang, Scheme::Yoshida4] {
        let cfg = PropagatorConfig::with_scheme(scheme);
        let rho = propagate_final(&sys, &LindbladModel::closed(), &pulse, &rho0, &cfg).unwrap();
        let u = propagate_unitary(&sys, &pulse, &cfg).unwrap();
        assert!((rho - &u * &rho0 * u.adjoint()).norm() < 1e-8);
    }
    // zero rates take the same path as no jump operators
    let zero = LindbladModel::new(vec![(CMatrix::identity(8, 8), 0.0)]).unwrap();
    assert!(zero.is_closed());
}

#[test]
fn costate_pairing_is_time_invariant() {
    let sys = system();
    let tau = sys.tau();
    for (seed, model) in [
        (10, LindbladModel::closed()),
        (11, LindbladModel::dephasing(8, 5.0 * tau).unwrap()),
        (12, LindbladModel::dephasing(8, 0.3 * tau).unwrap()),
    ] {
        for scheme in [Scheme::Strang, Scheme::Yoshida4] {
            let cfg = PropagatorConfig::with_scheme(scheme);
            let pulse = random_pulse(&sys, 1.5 * tau, 2.0, seed);
            let rho0 = random_density(8, seed + 100);
            let lam_t = random_hermitian(8, seed + 200) * c(0.5, 0.0);
            let fwd = propagate_forward(&sys, &model, &pulse, &rho0, &cfg, 37).unwrap();
            let bwd = propagate_costate(&sys, &model, &pulse, &lam_t, &cfg, 37).unwrap();
            assert_eq!(fwd.times, bwd.times);
            let p0 = inner(&bwd.states[0], &fwd.states[0]);
            for (l, r) in bwd.states.iter().zip(&fwd.states) {
                assert!((inner(l, r) - p0).norm() < 1e-9, "{scheme:?}");
            }
        }
    }
}

#[test]
fn costate_is_stationary_without_dynamics() {
    let params = qudit_oct::spin::SpinParameters { d_mhz: 0.0, e_mhz: 0.0, b_mt: 0.0, ..Default::default() };
    let sys = qudit_oct::spin::build_system(&params).unwrap();
    let target = random_density(8, 7) * c(0.5, 0.0);
    let traj = propagate_costate(&sys, &LindbladModel::closed(), &ZeroPulse { duration: 1.0 }, &target, &PropagatorConfig::default(), 1)
        .unwrap();
    for lam in &traj.states {
        assert!((lam - &target).norm() < 1e-14);
    }
}

#[test]
fn static_unitary_and_unitarity() {
    let sys = system();
    let tau = sys.tau();
    let t = 3.3 * tau;
    let u = propagate_unitary(&sys, &ZeroPulse { duration: t }, &PropagatorConfig::default()).unwrap();
    assert!((u - diag_phase(&sys, t)).norm() < 1e-10);
    for seed in 0..3 {
        let pulse = random_pulse(&sys, t, 3.0, 20 + seed);
        let u = propagate_unitary(&sys, &pulse, &PropagatorConfig::default()).unwrap();
        assert!(unitarity_defect(&u) < 1e-10);
    }
}

fn refine(cfg: &PropagatorConfig, factor: f64) -> PropagatorConfig {
    PropagatorConfig { steps_per_period: cfg.steps_per_period * factor, ..cfg.clone() }
}

#[test]
fn self_convergence_at_working_step() {
    let sys = system();
    let tau = sys.tau();
    let pulse = random_pulse(&sys, 2.0 * tau, 1.0, 30);
    // the fourth-order scheme meets 1e-8 when dt is halved
    let cfg = PropagatorConfig::with_scheme(Scheme::Yoshida4);
    let u1 = propagate_unitary(&sys, &pulse, &cfg).unwrap();
    let u2 = propagate_unitary(&sys, &pulse, &refine(&cfg, 2.0)).unwrap();
    assert!((&u1 - &u2).norm() < 1e-8, "{}", (&u1 - &u2).norm());

    // observed orders from three successive halvings
    for (scheme, order) in [(Scheme::Strang, 2.0), (Scheme::Yoshida4, 4.0), (Scheme::ExpMidpoint, 2.0)] {
        let cfg = PropagatorConfig::with_scheme(scheme);
        let short = random_pulse(&sys, 0.5 * tau, 1.0, 31);
        let us: Vec<CMatrix> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&k| propagate_unitary(&sys, &short, &refine(&cfg, k)).unwrap())
            .collect();
        let e1 = (&us[0] - &us[1]).norm();
        let e2 = (&us[1] - &us[2]).norm();
        let observed = (e1 / e2).log2();
        assert!(observed > order - 0.3, "{scheme:?}: observed order {observed}");
    }
}

#[test]
fn rk4_cross_check() {
    let sys = system();
    let tau = sys.tau();
    let pulse = random_pulse(&sys, 0.5 * tau, 2.0, 40);
    let model = LindbladModel::dephasing(8, tau).unwrap();
    let rho0 = random_density(8, 41);
    let fine = PropagatorConfig { steps_per_period: 160.0, ..PropagatorConfig::with_scheme(Scheme::Rk4) };
    let reference = propagate_final(&sys, &model, &pulse, &rho0, &fine).unwrap();
    for scheme in [Scheme::Strang, Scheme::Yoshida4] {
        let rho = propagate_final(&sys, &model, &pulse, &rho0, &PropagatorConfig::with_scheme(scheme)).unwrap();
        assert!((rho - &reference).norm() < 1e-5, "{scheme:?}");
    }
    let u_rk = propagate_unitary(&sys, &pulse, &fine).unwrap();
    let u_y = propagate_unitary(&sys, &pulse, &PropagatorConfig::with_scheme(Scheme::Yoshida4)).unwrap();
    assert!((u_rk - u_y).norm() < 1e-7);
}

#[test]
fn rk4_pairing_holds_to_integrator_accuracy() {
    let sys = system();
    let tau = sys.tau();
    let pulse = random_pulse(&sys, 0.3 * tau, 2.0, 50);
    let model = LindbladModel::dephasing(8, tau).unwrap();
    let cfg = PropagatorConfig { steps_per_period: 80.0, ..PropagatorConfig::with_scheme(Scheme::Rk4) };
    let rho0 = random_density(8, 51);
    let lam = random_hermitian(8, 52);
    let fwd = propagate_forward(&sys, &model, &pulse, &rho0, &cfg, 10).unwrap();
    let bwd = propagate_costate(&sys, &model, &pulse, &lam, &cfg, 10).unwrap();
    assert_eq!(fwd.times.len(), bwd.times.len());
    for (a, b) in fwd.times.iter().zip(&bwd.times) {
        assert!((a - b).abs() < 1e-15);
    }
    let p0 = inner(&bwd.states[0], &fwd.states[0]);
    for (l, r) in bwd.states.iter().zip(&fwd.states) {
        assert!((inner(l, r) - p0).norm() < 1e-6);
    }
}

#[test]
fn step_rule_is_enforced() {
    let sys = system();
    let pulse = ZeroPulse { duration: sys.tau() };
    let dt = 2.0 * std::f64::consts::PI / (40.0 * sys.max_transition_frequency());
    let cfg = PropagatorConfig { dt: Some(1.5 * dt), ..PropagatorConfig::default() };
    assert!(propagate_unitary(&sys, &pulse, &cfg).is_err());
    let ok = PropagatorConfig { dt: Some(dt), ..PropagatorConfig::default() };
    assert!(propagate_unitary(&sys, &pulse, &ok).is_ok());
}

#[test]
fn interaction_frame_properties() {
    let sys = system();
    let rho = random_density(8, 60);
    assert!((to_interaction_frame(&sys, &rho, 0.0) - &rho).norm() < 1e-15);
    let diag = CMatrix::from_fn(8, 8, |n, m| if n == m { rho[(n, n)] } else { c(0.0, 0.0) });
    assert!((to_interaction_frame(&sys, &diag, 0.37) - &diag).norm() < 1e-15);
    let t = 1.7 * sys.tau();
    let ri = to_interaction_frame(&sys, &rho, t);
    assert!((ri.trace() - rho.trace()).norm() < 1e-14);
    let (mut a, mut b) = (
        ri.clone().symmetric_eigenvalues().as_slice().to_vec(),
        rho.clone().symmetric_eigenvalues().as_slice().to_vec(),
    );
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((from_interaction_frame(&sys, &ri, t) - &rho).norm() < 1e-13);
    // free evolution is the identity in the interaction frame
    let u = propagate_unitary(&sys, &ZeroPulse { duration: t }, &PropagatorConfig::default()).unwrap();
    assert!((unitary_to_interaction_frame(&sys, &u, t) - CMatrix::identity(8, 8)).norm() < 1e-10);
}

#[test]
fn trajectory_dump_has_one_row_per_sample() {
    let sys = system();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.dat");
    let pulse = FnWaveform { f: |t: f64| 3.0 * (11612.1 * t).cos(), duration: sys.tau() };
    let traj = propagate_forward(&sys, &LindbladModel::closed(), &pulse, &random_density(8, 70), &PropagatorConfig::default(), 50)
        .unwrap();
    write_trajectory(&path, &traj, &[(6, 7)]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), traj.len() + 1);
    assert_eq!(rows[1].split_whitespace().count(), 1 + 8 + 1);
}
