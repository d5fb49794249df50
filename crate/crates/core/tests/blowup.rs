#![allow(clippy::excessive_precision)]

use flrw_dirac::blowup::{self, BlowupCase, Lifespan, Regime};
use flrw_dirac::field::{Grid, SpinorField};
use flrw_dirac::models::NonlinearitySpec;
use flrw_dirac::solver::{Model, Solver, SolverConfig, Support};
use flrw_dirac::spacetime::Cosmology;
use flrw_dirac::{Error, C64};

// With ℓ = 2/3, a0 = 1, R = 1 the substitution u = s^(1/3) turns the J integrand
// into 3 (3u - 2)^(-3α/2) u^(2-3α); at α = 2/3 this integrates to ln(3u - 2).

#[test]
fn critical_j_grows_logarithmically() {
    let case = BlowupCase::new(2.0 / 3.0, 2.0 / 3.0, 0.0, 1.0, 1.0, 1.0);
    let exact = |t: f64| (3.0 * t.cbrt() - 2.0).ln();
    for t in [2.0, 1e3, 1e4] {
        let j = blowup::j_integral(&case, t).unwrap();
        assert!(
            (j - exact(t)).abs() < 1e-9 * exact(t),
            "t = {t}: {j} vs {}",
            exact(t)
        );
    }
    let slope = (blowup::j_integral(&case, 1e4).unwrap() - blowup::j_integral(&case, 1e3).unwrap())
        / 10f64.ln();
    assert!((slope - 1.0 / 3.0).abs() < 0.02, "{slope}");
    assert!(!blowup::j_is_bounded(&case));
    assert_eq!(blowup::j_infinity(&case).unwrap(), None);
}

// α = 2: J(∞) and T_bu from mpmath (30 digits, bisection in ln T).
const J_INF: f64 = 0.279311778455763281721072529801;
const LIFESPANS: [(f64, f64); 5] = [
    (5.0, 1.4571654663676713981),
    (10.0, 1.1353732638971344964),
    (100.0, 1.0102573922658779677),
    (1e4, 1.0001000250071688521),
    (1e6, 1.0000010000025000072),
];

#[test]
fn supercritical_j_is_bounded() {
    let case = BlowupCase::new(2.0 / 3.0, 2.0, 0.0, 1.0, 1.0, 1.0);
    assert!(blowup::j_is_bounded(&case));
    let j_inf = blowup::j_infinity(&case).unwrap().unwrap();
    assert!((j_inf - J_INF).abs() < 1e-10, "{j_inf}");
    let j = blowup::j_integral(&case, 1e6).unwrap();
    assert!(j < j_inf && j_inf - j < 1e-10);
    let threshold = blowup::solvability_threshold(&case).unwrap().unwrap();
    assert!((threshold - 1.0 / J_INF).abs() < 1e-8);
}

#[test]
fn lifespan_matches_oracle_and_decreases_with_energy() {
    let mut prev = f64::INFINITY;
    for (e1, want) in LIFESPANS {
        let case = BlowupCase::new(2.0 / 3.0, 2.0, 0.0, 1.0, 1.0, e1);
        let t = blowup::lifespan(&case).unwrap().value().unwrap();
        assert!((t - want).abs() < 1e-9 * want, "E1 = {e1}: {t} vs {want}");
        assert!(t < prev);
        prev = t;
    }
    let below = BlowupCase::new(2.0 / 3.0, 2.0, 0.0, 1.0, 1.0, 3.5);
    assert_eq!(blowup::lifespan(&below).unwrap(), Lifespan::Infinite);
}

#[test]
fn huge_energy_gives_immediate_blowup() {
    for ell in [0.0, 2.0 / 3.0, 1.0, 2.0] {
        let case = BlowupCase::new(ell, 2.0, 0.3, 1.0, 1.0, 1e8);
        let t = blowup::lifespan(&case).unwrap().value().unwrap();
        assert!(t > 1.0 && t < 1.01, "ell = {ell}: {t}");
    }
}

#[test]
fn any_size_regime_always_has_finite_lifespan() {
    for (ell, alpha) in [(0.5, 0.25), (2.0 / 3.0, 2.0 / 3.0), (2.0, 0.25)] {
        let case = BlowupCase::new(ell, alpha, 0.0, 1.0, 1.0, 1e-3);
        assert_eq!(blowup::classify(&case).regime, Regime::NoGlobalAnySize);
        assert!(
            blowup::lifespan(&case).unwrap().value().is_some(),
            "{case:?}"
        );
    }
}

#[test]
fn invalid_cases_are_rejected() {
    let mut case = BlowupCase::new(0.5, 1.0, 0.0, 1.0, 1.0, 1.0);
    case.e1 = 0.0;
    assert!(matches!(
        blowup::lifespan(&case),
        Err(Error::InvalidParameter { .. })
    ));
    case.e1 = 1.0;
    case.alpha = -1.0;
    assert!(case.validate().is_err());
}

fn blowup_solver(g: Grid) -> Solver {
    let model = Model::free(Cosmology::new(0.0, 1.0).unwrap(), C64::new(1.0, 0.0))
        .with_nonlinearity(NonlinearitySpec::BlowupG {
            alpha: 2.0,
            c0: 1.0,
        });
    Solver::new(model, g).unwrap()
}

#[test]
fn zero_data_never_blow_up() {
    let g = Grid::new(1, 64, 20.0).unwrap();
    let cfg = SolverConfig {
        t_end: 2.0,
        support: Some(Support {
            center: g.center(),
            radius: 0.0,
        }),
        ..SolverConfig::default()
    };
    let (rep, rec) = blowup::empirical_blowup(
        &blowup_solver(g),
        SpinorField::zeros(g, 1.0),
        &cfg,
        0.0,
        1e-2,
    )
    .unwrap();
    assert_eq!(rep.t_numerical, None);
    assert_eq!(rep.t_bu, Lifespan::Infinite);
    assert_eq!(rep.satisfied, None);
    assert!(rec.meta.blowup.is_none());
}

#[test]
fn empirical_run_requires_the_blowup_nonlinearity() {
    let g = Grid::new(1, 64, 20.0).unwrap();
    let solver = Solver::new(
        Model::free(Cosmology::new(0.0, 1.0).unwrap(), C64::new(1.0, 0.0)),
        g,
    )
    .unwrap();
    let r = blowup::empirical_blowup(
        &solver,
        SpinorField::zeros(g, 1.0),
        &SolverConfig::default(),
        0.0,
        1e-2,
    );
    assert!(matches!(r, Err(Error::InvalidParameter { .. })));
}
