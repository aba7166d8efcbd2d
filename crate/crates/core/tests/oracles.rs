//! Solvers and series against closed forms and dense diagonalization.

use qedlab_core::assembly::{CouplingTerms, ModelConfig};
use qedlab_core::expansions::{
    dense_ground_energy, fd_even_coefficients, fd_step, fit_series, linspace, rs_coefficients, SeriesVariable, SolveOptions,
};
use qedlab_core::models::{hydrogen_like, shell_photons, shipped_models, trivial_single_mode, trivial_single_mode_energy};
use qedlab_core::photon::FockCaps;
use qedlab_core::scalar::Cx;
use qedlab_core::spectral::{dense_spectrum, ground_state_operator, spectral_scale};

fn terms_at(cfg: &ModelConfig<f64>, beta: f64) -> (qedlab_core::ModelFactors64, CouplingTerms<f64>) {
    let f = cfg.build().unwrap();
    let t = CouplingTerms::build(&f, beta).unwrap();
    (f, t)
}

/// E(g) = (√(ω² + 4ωg²c²) − ω)/2, written out independently of the library helper.
fn bogoliubov(omega: f64, w: f64, g: f64) -> f64 {
    let c2 = w / (2.0 * omega);
    ((omega * omega + 4.0 * omega * g * g * c2).sqrt() - omega) / 2.0
}

#[test]
fn quadratic_model_matches_bogoliubov_closed_form() {
    let (omega, w) = (1.3, 0.9);
    for n_max in [40, 60] {
        let (f, t) = terms_at(&trivial_single_mode(omega, w, n_max).unwrap(), 0.0);
        for g in [0.05, 0.1, 0.2] {
            let h = t.hamiltonian(Cx::new(g, 0.0)).unwrap();
            let e = ground_state_operator(&h, &f.reference_state(), 1e-13, 2000).unwrap().energy.re;
            let exact = bogoliubov(omega, w, g);
            assert!(((e - exact) / exact).abs() < 1e-8, "n_max {n_max} g {g}: {e} vs {exact}");
            assert_eq!(trivial_single_mode_energy(omega, w, g), exact);
            if n_max == 60 {
                let d = dense_spectrum(&h, 1, false).unwrap().values[0].re;
                assert!(((d - exact) / exact).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn rs_and_fitted_coefficients_match_the_expansion() {
    let (omega, w) = (1.0, 0.6);
    let c2 = w / (2.0 * omega);
    let (f, t) = terms_at(&trivial_single_mode(omega, w, 40).unwrap(), 0.0);
    let s = rs_coefficients(&t, &f, 8, &SolveOptions::default()).unwrap();
    assert!((s.get(2).unwrap() - c2).abs() < 1e-6);
    assert!((s.get(4).unwrap() + c2 * c2 / omega).abs() < 1e-6);
    for n in [1, 3, 5, 7] {
        assert!(s.get(n).unwrap().abs() <= 1e-10 * c2);
    }

    let samples: Vec<(f64, f64)> = linspace(-0.15, 0.15, 31).into_iter().map(|g| (g, bogoliubov(omega, w, g))).collect();
    let fit = fit_series(&samples, 4, true, SeriesVariable::G).unwrap();
    assert!((fit.get(2).unwrap() - c2).abs() < 1e-6);
    assert!((fit.get(4).unwrap() + c2 * c2 / omega).abs() < 1e-6);
    let free = fit_series(&samples, 3, false, SeriesVariable::G).unwrap();
    assert!(free.odd_to_even_ratio() < 1e-10, "{}", free.odd_to_even_ratio());
}

#[test]
fn lanczos_agrees_with_dense_on_shipped_models() {
    for (name, cfg) in shipped_models::<f64>().unwrap() {
        let (f, t) = terms_at(&cfg, 1.0);
        if f.dim() > 1000 {
            continue;
        }
        for g in [0.0, 0.05, 0.1] {
            let h = t.hamiltonian(Cx::new(g, 0.0)).unwrap();
            let it = ground_state_operator(&h, &f.reference_state(), 1e-12, 5000).unwrap().energy.re;
            let dense = dense_ground_energy(&h).unwrap();
            assert!((it - dense).abs() <= 1e-9 * spectral_scale(&h), "{name} g {g}: {it} vs {dense}");
        }
    }
}

#[test]
fn rs_agrees_with_finite_differences_of_dense_energies() {
    let cfg = hydrogen_like(15, shell_photons(1.0, 0.0, 1), FockCaps::total(2));
    let (f, t) = terms_at(&cfg, 1.0);
    let s = rs_coefficients(&t, &f, 4, &SolveOptions::default()).unwrap();
    let h0 = t.unperturbed().unwrap();
    let (e2, e4) =
        fd_even_coefficients(|g| dense_ground_energy(&t.hamiltonian(Cx::new(g, 0.0))?), fd_step(&h0)).unwrap();
    let (r2, r4) = (s.get(2).unwrap(), s.get(4).unwrap());
    assert!(((e2 - r2) / r2).abs() < 1e-5, "{e2} vs {r2}");
    assert!(((e4 - r4) / r4).abs() < 1e-5, "{e4} vs {r4}");
}

#[test]
fn order_zero_is_the_atomic_energy_and_odd_orders_vanish() {
    let cfg = hydrogen_like(21, shell_photons(1.0, 0.0, 2), FockCaps::total(1));
    let (f, t) = terms_at(&cfg, 1.0);
    let s = rs_coefficients(&t, &f, 6, &SolveOptions::default()).unwrap();
    assert!((s.get(0).unwrap() - f.atom.e_at()).abs() < 1e-12);
    let lead = s.get(2).unwrap().abs();
    for n in [1, 3, 5] {
        assert!(s.get(n).unwrap().abs() <= 1e-10 * lead);
    }
    assert!(s.orders.iter().all(|o| o.error >= 0.0));
}

#[test]
fn radius_estimate_is_positive_and_stable_under_one_cap_step() {
    let radius = |cap| {
        let cfg = hydrogen_like(15, shell_photons(1.0, 0.0, 1), FockCaps::total(cap));
        let (f, t) = terms_at(&cfg, 1.0);
        rs_coefficients(&t, &f, 8, &SolveOptions::default()).unwrap().radius.value().unwrap()
    };
    let (r3, r4) = (radius(3), radius(4));
    assert!(r3 > 0.0 && r4 > 0.0);
    assert!((r4 - r3).abs() <= 0.2 * r3, "{r3} -> {r4}");
}
