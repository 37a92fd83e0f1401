use phasespace::foundation::kernel::RectGrid;
use phasespace::foundation::operator::{op_norm, random_density};
use phasespace::hw::{self, FockSpace};
use phasespace::moyal::{self, snapshot, GridFunction, PhaseGrid, Poly, Provenance};
use phasespace::states::{self, NamedState};
use phasespace::su2::SpinSystem;
use phasespace::tomography::{self, ProjectionRecord};
use phasespace::{EulerPoint, PsError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn projections_feed_reconstruction() {
    let sys = SpinSystem::from_two_j(2);
    let rho = random_density(3, &mut ChaCha8Rng::seed_from_u64(8));
    let diag = sys.parity_diagonal(0.0).unwrap();
    let samples: Vec<(f64, f64, f64)> = tomography::sample_net(2)
        .into_iter()
        .map(|(t, p)| {
            let rec = tomography::simulate_projections(&rho, EulerPoint::sphere(t, p), hw::Shots::Exact).unwrap();
            (t, p, tomography::wigner_from_projections(&rec, &diag).unwrap())
        })
        .collect();
    let (report, est) = tomography::reconstruct_from_grid(2, &samples, 0.0).unwrap();
    assert!(op_norm(&(&est - &rho)) < 1e-8);
    assert!(report.condition_number < 1e10);
}

#[test]
fn projection_record_validation() {
    let rec = ProjectionRecord { setting: EulerPoint::sphere(0.0, 0.0), probabilities: vec![0.7, 0.7], shots: None };
    assert!(tomography::wigner_from_projections(&rec, &[1.0, -1.0]).is_err());
}

#[test]
fn operator_state_through_snapshot_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PhaseGrid::symmetric(7.0, 64, 1.0).unwrap();
    let space = FockSpace::new(20).unwrap();
    let rho = NamedState::Coherent { n_max: 20, re: 0.7, im: -0.3 }.build().unwrap();
    let values = hw::evaluate_rect(&space, &rho, 0.0, &grid.rect).unwrap().real_values();
    let w = GridFunction::from_real(grid.clone(), values, Provenance::State).unwrap();
    assert!((w.mass().re - 1.0).abs() < 1e-8);
    let path = dir.path().join("w.bin");
    snapshot::write(&path, &w).unwrap();
    let back = snapshot::read(&path).unwrap();
    assert_eq!(back, w);
    let h = GridFunction::hamiltonian(&grid, Poly::harmonic());
    let ev = moyal::evolve(&back, &h, 0.5 * moyal::step_limit(&Poly::harmonic(), &grid), 20).unwrap();
    assert!(ev.mass_drift < 1e-10);
    assert!(ev.purity_drift < 1e-8);
}

#[test]
fn coarse_grid_reports_aliasing() {
    let grid = PhaseGrid::symmetric(8.0, 24, 1.0).unwrap();
    let w = GridFunction::coherent(&grid, 0.0, 0.0);
    let h = GridFunction::hamiltonian(&grid, Poly::harmonic());
    assert!(matches!(moyal::evolve(&w, &h, 0.01, 1), Err(PsError::Aliasing(_))));
}

#[test]
fn vacuum_and_coherent_agree() {
    let f = FockSpace::new(30).unwrap();
    let grid = RectGrid::symmetric(5.0, 41);
    let a = hw::evaluate_rect(&f, &states::fock_density(30, 0).unwrap(), 0.0, &grid).unwrap().real_values();
    let b = hw::evaluate_rect(&f, &states::coherent_density(30, phasespace::C64::new(0.0, 0.0)), 0.0, &grid).unwrap().real_values();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}
