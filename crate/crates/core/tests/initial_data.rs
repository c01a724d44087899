//! Without mutation the selected trait is reached only as fast as the
//! initial data allows: from flat data the mass near the optimum decays
//! algebraically, and t = 200 is not enough to bring the mass outside
//! |x| < 0.1 below 1%.

use std::f64::consts::PI;

use fluctsel::env_models::make_oscillating_optimum;
use fluctsel::no_mutation::{concentration_metrics, simulate_sigma0};
use fluctsel::pde_solver::{gaussian_field, DensityField, SimulationGrid};

fn outside_at(n0: &DensityField, grid: &SimulationGrid, t: f64) -> f64 {
    let model = make_oscillating_optimum(1.0, 1.0, 1.0, 2.0 * PI).unwrap();
    let run = simulate_sigma0(grid, &model, n0, t, 1.0 / 256.0).unwrap();
    concentration_metrics(&run.state, 0.0, 0.1)
        .unwrap()
        .mass_outside
}

#[test]
fn flat_start_concentrates_slower_than_narrow_start() {
    let grid = SimulationGrid::new(-4.0, 4.0, 800, 1.0 / 256.0, 0.0).unwrap();
    let flat = DensityField::from_fn(&grid, 0.0, |_| 0.125);
    let narrow = gaussian_field(&grid, 0.0, 0.05 * 0.05, 1.0);
    let flat_out = outside_at(&flat, &grid, 200.0);
    let narrow_out = outside_at(&narrow, &grid, 200.0);
    // Laplace: tail mass ≈ erfc(0.1 √(g t)) = erfc(√2) ≈ 0.0455
    assert!((flat_out - 0.0455).abs() < 0.003, "{flat_out}");
    assert!(narrow_out < 1e-2, "{narrow_out}");
}
