use flrw_dirac::field::{Grid, SpinorField};
use flrw_dirac::gamma::{self, Spinor};
use flrw_dirac::init::{Family, InitialData};
use flrw_dirac::models::NonlinearitySpec;
use flrw_dirac::solver::{Model, Solver, SolverConfig};
use flrw_dirac::spacetime::Cosmology;
use flrw_dirac::{Error, C64};

const I: C64 = C64::new(0.0, 1.0);

fn cosmo(ell: f64) -> Cosmology {
    Cosmology::new(ell, 1.0).unwrap()
}

fn cfg(t_end: f64) -> SolverConfig {
    SolverConfig {
        t_end,
        cfl: 0.2,
        dt_max: 0.02,
        ..SolverConfig::default()
    }
}

fn gaussian(g: &Grid, seed: u64) -> SpinorField {
    InitialData::gaussian(1.0, 1.5, g.center())
        .with_seed(seed)
        .sample(g, 1.0)
        .unwrap()
}

/// Spinor profile of the manufactured solution and its time derivative.
fn profile(t: f64) -> (Spinor, Spinor) {
    let s = [
        C64::new(t.cos(), 0.0),
        I * t.sin(),
        C64::new(t, 0.5),
        C64::new(1.0 / t, 0.0),
    ];
    let ds = [
        C64::new(-t.sin(), 0.0),
        I * t.cos(),
        C64::new(1.0, 0.0),
        C64::new(-1.0 / (t * t), 0.0),
    ];
    (s, ds)
}

#[test]
fn manufactured_solution_through_duhamel_source() {
    // ψ = s(t) e^{iqx}; the source is ψ' minus the free operator applied to ψ
    let (ell, m) = (2.0 / 3.0, C64::new(0.7, 0.2));
    let g = Grid::new(1, 32, 2.0 * std::f64::consts::PI).unwrap();
    let q = 3.0;
    let b = gamma::basis();
    let wave: Vec<C64> = (0..g.points())
        .map(|p| (I * q * g.coords(p)[0]).exp())
        .collect();
    let source_spinor = |t: f64| -> Spinor {
        let (s, ds) = profile(t);
        let a1 = b.alpha1.apply(&s);
        let g0 = b.g0.apply(&s);
        std::array::from_fn(|k| {
            ds[k] + t.powf(-ell) * I * q * a1[k] + 1.5 * ell / t * s[k] + I * m / t * g0[k]
        })
    };
    let exact =
        |t: f64| SpinorField::from_fn(g, t, |x| profile(t).0.map(|c| c * (I * q * x[0]).exp()));
    let src = |t: f64, out: &mut [C64]| {
        let f = source_spinor(t);
        let np = g.points();
        for c in 0..4 {
            for p in 0..np {
                out[c * np + p] = f[c] * wave[p];
            }
        }
    };
    let solver = Solver::new(Model::free(cosmo(ell), m), g).unwrap();
    let mut c = cfg(3.0);
    c.support = Some(flrw_dirac::solver::Support {
        center: g.center(),
        radius: 0.0,
    });
    c.dt_max = 0.005;
    let out = solver.duhamel_source(exact(1.0), &src, &c).unwrap();
    let want = exact(3.0);
    let err = out.field.axpy(C64::new(-1.0, 0.0), &want).l2_norm() / want.l2_norm();
    assert!(err < 1e-6, "{err}");
    assert!(out.record.meta.sourced);
    assert_eq!(out.record.source_norm.len(), out.record.len());
}

#[test]
fn zero_source_matches_propagate() {
    let g = Grid::new(1, 128, 40.0).unwrap();
    let solver = Solver::new(Model::free(cosmo(0.5), C64::new(1.0, 0.3)), g).unwrap();
    let f0 = gaussian(&g, 4);
    let zero = |_t: f64, out: &mut [C64]| out.iter_mut().for_each(|v| *v = C64::default());
    let a = solver.propagate(f0.clone(), &cfg(3.0)).unwrap().field;
    let b = solver.duhamel_source(f0, &zero, &cfg(3.0)).unwrap().field;
    assert!(a.axpy(C64::new(-1.0, 0.0), &b).l2_norm() <= 1e-14 * a.l2_norm());
}

#[test]
fn linear_propagation_is_linear() {
    let g = Grid::new(1, 128, 40.0).unwrap();
    let solver = Solver::new(Model::free(cosmo(2.0 / 3.0), C64::new(0.4, -0.2)), g).unwrap();
    let (f, h) = (gaussian(&g, 1), gaussian(&g, 2));
    let (a, b) = (C64::new(0.3, 1.1), C64::new(-2.0, 0.5));
    let run = |x: SpinorField| {
        let mut x = x;
        solver.advance(&mut x, 4.0, 0.2, 0.02, None).unwrap();
        x
    };
    let combo = run(f.scaled(a).axpy(b, &h));
    let parts = run(f).scaled(a).axpy(b, &run(h));
    assert!(combo.axpy(C64::new(-1.0, 0.0), &parts).l2_norm() < 1e-12 * combo.l2_norm());
}

#[test]
fn real_mass_energy_law_in_three_dimensions() {
    let ell = 0.5;
    let g = Grid::new(3, 16, 16.0).unwrap();
    let solver = Solver::new(Model::free(cosmo(ell), C64::new(1.0, 0.0)), g).unwrap();
    let rec = solver.propagate(gaussian(&g, 5), &cfg(2.0)).unwrap().record;
    let e0 = rec.l2[0];
    for (t, e) in rec.times.iter().zip(&rec.l2) {
        assert!((t.powf(3.0 * ell) * e - e0).abs() < 1e-6 * e0, "t = {t}");
    }
}

#[test]
fn backward_evolution_recovers_data() {
    let g = Grid::new(1, 128, 40.0).unwrap();
    let solver = Solver::new(Model::free(cosmo(2.0), C64::new(0.5, 0.1)), g).unwrap();
    let f0 = gaussian(&g, 3);
    let mut f = f0.clone();
    solver.advance(&mut f, 3.0, 0.2, 0.01, None).unwrap();
    solver.advance(&mut f, 1.0, 0.2, 0.01, None).unwrap();
    assert!(f.axpy(C64::new(-1.0, 0.0), &f0).l2_norm() < 1e-8 * f0.l2_norm());
}

#[test]
fn contracting_background_runs() {
    // ℓ < 0 speeds up transport; the CFL step shrinks accordingly
    let g = Grid::new(1, 128, 60.0).unwrap();
    let solver = Solver::new(Model::free(cosmo(-0.5), C64::new(1.0, 0.0)), g).unwrap();
    assert!(solver.cfl_limit(4.0) < solver.cfl_limit(1.0));
    let rec = solver.propagate(gaussian(&g, 3), &cfg(2.0)).unwrap().record;
    let e0 = rec.l2[0];
    let (t, e) = (*rec.times.last().unwrap(), *rec.l2.last().unwrap());
    assert!(
        (t.powf(-1.5) * e - e0).abs() < 1e-6 * e0,
        "{} vs {e0}",
        t.powf(-1.5) * e
    );
}

#[test]
fn blowup_is_reported_with_metadata() {
    let g = Grid::new(1, 64, 20.0).unwrap();
    let model =
        Model::free(cosmo(0.0), C64::new(1.0, 0.0)).with_nonlinearity(NonlinearitySpec::BlowupG {
            alpha: 2.0,
            c0: 1.0,
        });
    let solver = Solver::new(model, g).unwrap();
    let f0 = InitialData::gaussian(4.0, 1.0, g.center())
        .with_seed(1)
        .sample(&g, 1.0)
        .unwrap();
    let c = SolverConfig {
        t_end: 3.0,
        cfl: 0.2,
        dt_max: 1e-3,
        ..SolverConfig::default()
    };
    let out = solver.propagate(f0, &c).unwrap();
    let b = out.record.meta.blowup.expect("blow-up expected");
    assert!(b.last_finite_time < b.t_blowup && b.t_blowup < 3.0);
    assert_eq!(*out.record.times.last().unwrap(), b.last_finite_time);
    assert!(out.field.is_finite());
}

#[test]
fn linear_run_never_blows_up() {
    let g = Grid::new(1, 64, 20.0).unwrap();
    let solver = Solver::new(Model::free(cosmo(0.0), C64::new(1.0, 0.0)), g).unwrap();
    let f0 = InitialData::gaussian(4.0, 1.0, g.center())
        .with_seed(1)
        .sample(&g, 1.0)
        .unwrap();
    let rec = solver.propagate(f0, &cfg(3.0)).unwrap().record;
    assert!(rec.meta.blowup.is_none());
}

#[test]
fn wide_data_fail_the_cone_precheck() {
    let g = Grid::new(1, 64, 10.0).unwrap();
    let solver = Solver::new(Model::free(cosmo(0.0), C64::new(1.0, 0.0)), g).unwrap();
    let f0 = InitialData::gaussian(1.0, 1.0, g.center())
        .with_family(Family::Bump)
        .sample(&g, 1.0)
        .unwrap();
    let mut c = cfg(8.0);
    c.support = Some(flrw_dirac::solver::Support {
        center: g.center(),
        radius: 1.0,
    });
    assert!(matches!(
        solver.propagate(f0, &c),
        Err(Error::ConeViolation { .. })
    ));
}

#[test]
fn mismatched_start_time_is_rejected() {
    let g = Grid::new(1, 64, 20.0).unwrap();
    let solver = Solver::new(Model::free(cosmo(0.5), C64::new(1.0, 0.0)), g).unwrap();
    let mut c = cfg(3.0);
    c.t_start = 2.0;
    assert!(matches!(
        solver.propagate(gaussian(&g, 1), &c),
        Err(Error::InvalidParameter { .. })
    ));
}
