use std::sync::Arc;

use proptest::prelude::*;
use srlasso::{
    build_sr_design, forward, gaussian_sampling_1d, lambda_max, lasso_design, recover_measure, solve_lasso_baseline,
    solve_sr_lasso, uniform_samples, DiscreteMeasure, Grid, GroupedVector, MeasurementOperator, SolverConfig,
};

fn gaussian_op() -> Arc<dyn MeasurementOperator> {
    Arc::new(gaussian_sampling_1d(0.07, &uniform_samples(100, 0.0, 2.0)).unwrap())
}

#[test]
fn round_trip_recovers_positions_and_amplitudes() {
    let op = gaussian_op();
    let grid = Grid::line(116, 0.0, 116.0 * 0.0175).unwrap();
    let h = grid.spacing(0);
    for (t1, t2) in [(0.2, -0.2), (0.1, 0.15), (-0.05, 0.0)] {
        let truth = [(grid.node(40)[0] + t1 * h, 1.0), (grid.node(64)[0] + t2 * h, 0.8)];
        let mu0 = DiscreteMeasure::from_pairs_1d(&truth).unwrap();
        let y = forward(op.as_ref(), &mu0).unwrap();
        let design = build_sr_design(op.clone(), &grid, &[1.0]).unwrap();
        let lam = 1e-2 * lambda_max(&lasso_design(op.as_ref(), &grid).unwrap(), &y);
        let cfg = SolverConfig::new(lam).with_gap_tol(1e-12).with_max_iters(1_000_000);
        let res = solve_sr_lasso(&design, &y, &cfg).unwrap();
        let rec = recover_measure(&design, &res.z, 1e-3).measure;
        assert_eq!(rec.len(), 2, "shifts ({t1}, {t2})");
        for (atom, (x, a)) in rec.atoms().iter().zip(truth) {
            assert!((atom.position[0] - x).abs() <= 0.05 * h);
            assert!((atom.amplitude - a).abs() <= 0.02 * a);
        }
    }
}

#[test]
fn tau_zero_reduces_to_lasso() {
    let op = gaussian_op();
    let grid = Grid::line(20, 0.0, 2.0).unwrap();
    let mu0 = DiscreteMeasure::from_pairs_1d(&[(0.53, 1.0), (1.27, -0.7)]).unwrap();
    let y = forward(op.as_ref(), &mu0).unwrap();
    let lam = 0.1 * lambda_max(&lasso_design(op.as_ref(), &grid).unwrap(), &y);
    let cfg = SolverConfig::new(lam).with_gap_tol(1e-13).with_max_iters(1_000_000);
    let design = build_sr_design(op.clone(), &grid, &[0.0]).unwrap();
    let sr = solve_sr_lasso(&design, &y, &cfg).unwrap();
    let (lasso, _) = solve_lasso_baseline(op.as_ref(), &grid, &y, &cfg).unwrap();
    assert!((sr.objective - lasso.objective).abs() <= 1e-10);
    for j in 0..grid.len() {
        assert!((sr.z.group(j)[0] - lasso.z.group(j)[0]).abs() <= 1e-6);
        assert_eq!(sr.z.group(j)[1], 0.0);
    }
}

#[test]
fn coefficients_for_shift_invert_recovery() {
    let op = gaussian_op();
    let grid = Grid::line(29, 0.0, 29.0 * 0.07).unwrap();
    let h = grid.spacing(0);
    let design = build_sr_design(op, &grid, &[0.8]).unwrap();
    let mut z = GroupedVector::zeros(2, grid.len());
    z.group_mut(7).copy_from_slice(&design.coefficients_for_shift(7, 1.5, &[0.3 * h]));
    let rec = recover_measure(&design, &z, 1e-6);
    assert_eq!(rec.clamped, 0);
    assert!((rec.measure.atoms()[0].position[0] - (grid.node(7)[0] + 0.3 * h)).abs() < 1e-12);
    assert!((rec.measure.atoms()[0].amplitude - 1.5).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recovered_positions_stay_in_their_cell(
        entries in prop::collection::vec((0usize..12, -5.0f64..5.0, -50.0f64..50.0), 1..5),
        tau in 0.1f64..1.5,
    ) {
        let op = gaussian_op();
        let grid = Grid::line(12, 0.3, 1.2).unwrap();
        let h = grid.spacing(0);
        let design = build_sr_design(op, &grid, &[tau]).unwrap();
        let mut z = GroupedVector::zeros(2, grid.len());
        for (j, a, b) in entries {
            prop_assume!(a.abs() > 1e-3);
            z.group_mut(j).copy_from_slice(&[a, b]);
        }
        let rec = recover_measure(&design, &z, 0.0);
        for atom in rec.measure.atoms() {
            let (j, t) = grid.nearest_node(&atom.position);
            prop_assert!(t[0].abs() <= 0.5 * h + 1e-12, "node {} offset {}", j, t[0]);
        }
    }
}
