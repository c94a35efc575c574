use srlasso::{forward, fourier_lowpass_1d, mmd_distance, DiscreteMeasure};
use srlasso_experiments::noise::noise_vector;
use srlasso_experiments::sweep::{lambda_grid, tau_grid};
use srlasso_experiments::{add_noise, noise_level, parse_spec, run_sweep, Method, SpecError};

const FOURIER: &str = r#"
[operator]
kind = "fourier"
fc = 3

[grid]
points = [[20]]

[truth]
positions = [[0.3], [0.7]]
amplitudes = [2.0, 1.0]
directions = [[1.0], [-1.0]]
offsets = [[0.0], [0.3]]

[noise]
rho_rel = 0.1
draws = 10

[sweep]
methods = ["lasso"]
seed = 2024
lambda_count = 20
tau_count = 2
max_iters = 1000000
"#;

#[test]
fn relative_noise_level_matches_request() {
    let op = fourier_lowpass_1d(3).unwrap();
    let mu0 = DiscreteMeasure::from_pairs_1d(&[(0.3, 2.0), (0.7, 1.0)]).unwrap();
    let y0 = forward(&op, &mu0).unwrap();
    let ratios: Vec<f64> = (0..1000).map(|d| (add_noise(&y0, 0.1, 7, d) - &y0).norm() / y0.norm()).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean - 0.1).abs() <= 0.01, "mean ratio {mean}");
    assert!((noise_level(&y0, 0.1) * (y0.len() as f64).sqrt() - 0.1 * y0.norm()).abs() < 1e-14);
}

#[test]
fn noise_streams_are_reproducible_and_distinct() {
    let a = noise_vector(50, 1.0, 3, 0);
    assert_eq!(a, noise_vector(50, 1.0, 3, 0));
    assert_ne!(a, noise_vector(50, 1.0, 3, 1));
    assert_ne!(a, noise_vector(50, 1.0, 4, 0));
}

#[test]
fn grids_follow_their_layout() {
    assert_eq!(lambda_grid(2.0, 4), vec![0.5, 1.0, 1.5, 2.0]);
    let t = tau_grid(2, 3, 1.0);
    assert_eq!(t.len(), 9);
    assert_eq!(t[0], vec![0.0, 0.0]);
    assert_eq!(t[1], vec![0.0, 0.5]);
    assert_eq!(t[3], vec![0.5, 0.0]);
    assert_eq!(t[8], vec![1.0, 1.0]);
}

#[test]
fn largest_lambda_returns_the_empty_measure() {
    let spec =
        parse_spec(&FOURIER.replace("rho_rel = 0.1", "rho_rel = 0.0").replace("draws = 10", "draws = 1")).unwrap();
    let res = run_sweep(&spec).unwrap();
    for (si, sc) in res.scenarios.iter().enumerate() {
        let last = res.curve(si, Method::Lasso).last().unwrap();
        assert_eq!(last.lambda, sc.lambda_max);
        let expected = mmd_distance(&sc.mu0, &DiscreteMeasure::empty(1)).unwrap();
        assert_eq!(last.draws[0].support_size, 0);
        assert!((last.draws[0].mmd - expected).abs() <= 1e-12 * expected);
    }
}

#[test]
fn off_grid_offset_degrades_lasso() {
    let spec = parse_spec(FOURIER).unwrap();
    let res = run_sweep(&spec).unwrap();
    assert_eq!(res.not_converged_cells(), 0);
    let best = |oi| res.argmin(res.scenario_index(0, oi).unwrap(), Method::Lasso).unwrap().mean();
    let (on, off) = (best(0), best(1));
    assert!(off > 2.0 * on, "on grid {on}, offset 0.3 {off}");
}

fn invalid_field(text: &str) -> String {
    match parse_spec(text) {
        Err(SpecError::Invalid { field, .. }) => field,
        other => panic!("expected an invalid field, got {other:?}"),
    }
}

#[test]
fn validation_names_the_offending_field() {
    let cases = [
        ("offsets = [[0.0], [0.3]]", "offsets = [[0.0], [0.7]]", "truth.offsets"),
        ("fc = 3", "fc = 3\nsigma = 0.1", "operator"),
        ("methods = [\"lasso\"]", "methods = [\"srlasso\"]", "sweep.methods"),
        ("lambda_count = 20", "lambda_count = 1", "sweep.lambda_count"),
        ("draws = 10", "draws = 0", "noise.draws"),
        ("points = [[20]]", "points = [[20, 4]]", "grid.points"),
    ];
    for (from, to, field) in cases {
        assert_eq!(invalid_field(&FOURIER.replace(from, to)), field, "{to}");
    }
    assert!(matches!(
        parse_spec(&FOURIER.replace("seed = 2024", "seed = 2024\nbogus = 1")),
        Err(SpecError::Parse { .. })
    ));
}

#[test]
fn three_dimensional_operator_parses() {
    let text = r#"
[operator]
kind = "gauss_laplace_3d"
sigma = 0.1
samples = [6, 6, 3]

[grid]
points = [[5, 5, 3]]

[truth]
positions = [[0.3, 0.4, 0.5]]
amplitudes = [1.0]
offsets = [[0.1, 0.0, 0.2]]
"#;
    let spec = parse_spec(text).unwrap();
    assert_eq!(spec.dims(), 3);
    assert_eq!(spec.build_operator().unwrap().measurement_dim(), 108);
}
