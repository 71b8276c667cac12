mod common;

use common::{angle_grid, max_runs, panel, random_panel};
use dynpanel::estimator::{estimate_beta, estimate_gamma, objective};
use dynpanel::{
    bandwidth, epanechnikov, estimate, q1_objective, q2_kernel_objective, simulate, varsigma, xi, Bandwidth, DgpSpec,
    Error, EstimationConfig, ObjectiveVariant,
};

const ADJ: ObjectiveVariant = ObjectiveVariant::AdjacentOnly;

fn fixed_h(h: f64) -> EstimationConfig {
    EstimationConfig { bandwidth: Bandwidth::Fixed(h), ..EstimationConfig::default() }
}

/// β switcher with `y3 − y1 = sign` and `x3 − x1 = v`.
fn beta_switcher(sign: i8, v: [f64; 2]) -> ([u8; 5], [[f64; 2]; 4]) {
    let y = if sign > 0 { [0, 0, 0, 1, 0] } else { [0, 1, 0, 0, 0] };
    (y, [[0.0, 0.0], [0.0, 0.0], v, [0.0, 0.0]])
}

#[test]
fn bandwidth_rule_values() {
    let rule = |n: f64| 1.0 / (n.sqrt().sqrt() * n.ln());
    for n in [3, 100, 5000, 20000, 1_000_000] {
        assert!((bandwidth(n) - rule(n as f64)).abs() < 1e-15);
    }
    assert!((bandwidth(5000) - 0.01396243).abs() < 1e-8);
    assert!((bandwidth(20000) - 0.00849091).abs() < 1e-8);
    assert!((bandwidth(3) - 0.69163).abs() < 1e-5);
}

#[test]
fn epanechnikov_examples() {
    assert_eq!(epanechnikov(0.0), 0.75);
    assert_eq!(epanechnikov(0.5), 0.5625);
    assert_eq!(epanechnikov(2.0), 0.0);
    for u in [0.1, 0.37, 0.99, 1.5] {
        assert_eq!(epanechnikov(u), epanechnikov(-u));
    }
}

#[test]
fn single_switcher_returns_first_axis() {
    let data = panel(&[beta_switcher(1, [1.0, 0.0])]);
    let est = estimate_beta(&data, &EstimationConfig::default()).unwrap();
    assert!((est.beta[0] - 1.0).abs() < 1e-12 && est.beta[1].abs() < 1e-12, "{:?}", est.beta);
    assert_eq!(est.q1_value, 1.0);
}

#[test]
fn five_switcher_arc_matches_dense_grid() {
    let data = panel(&[
        beta_switcher(1, [1.0, 0.2]),
        beta_switcher(1, [0.3, 1.0]),
        beta_switcher(1, [-0.5, 1.0]),
        beta_switcher(-1, [1.0, -1.0]),
        beta_switcher(-1, [-1.0, -0.3]),
    ]);
    let est = estimate_beta(&data, &EstimationConfig::default()).unwrap();
    let points = 360_000;
    let values: Vec<f64> = angle_grid(points).iter().map(|b| q1_objective(&data, b).unwrap()).collect();
    let (best, runs) = max_runs(&values);
    assert_eq!(runs.len(), 1, "maximizing arc should be unique: {runs:?}");
    assert!((est.q1_value - best).abs() < 1e-12);
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let (a, b) = runs[0];
    assert!(a > 0 && b < points - 1, "arc should not wrap");
    let theta = est.beta[1].atan2(est.beta[0]).rem_euclid(2.0 * std::f64::consts::PI);
    let mid = 0.5 * (a + b) as f64 * step;
    assert!((theta - mid).abs() <= 2.0 * step, "theta {theta} vs grid arc midpoint {mid}");
}

#[test]
fn q1_scale_invariance_and_bounds() {
    let (data, _) = simulate(&DgpSpec::from_number(1).unwrap(), 3000, 8).unwrap();
    let eff = objective::beta_effective(&data, ADJ) as f64 / data.n() as f64;
    for b in angle_grid(97) {
        let v = q1_objective(&data, &b).unwrap();
        assert_eq!(v, q1_objective(&data, &[2.5 * b[0], 2.5 * b[1]]).unwrap());
        assert!(v.abs() <= eff + 1e-15);
    }
}

#[test]
fn no_switchers_give_zero_objective_and_error() {
    let data = panel(&[([1, 1, 1, 1, 1], [[0.1, 0.2], [0.3, 0.4], [0.5, 0.6], [0.7, 0.8]])]);
    assert_eq!(q1_objective(&data, &[1.0, 0.0]).unwrap(), 0.0);
    assert!(matches!(estimate_beta(&data, &EstimationConfig::default()), Err(Error::NoSwitchers)));
    assert!(matches!(estimate_gamma(&data, &[1.0, 0.0], &EstimationConfig::default()), Err(Error::NoGammaSwitchers)));
}

#[test]
fn short_panel_rejected() {
    let data = dynpanel::PanelDataset::new(1, 3, 1, vec![0, 1, 0, 1], vec![0.0, 1.0, 2.0]).unwrap();
    assert!(matches!(q1_objective(&data, &[1.0]), Err(Error::PanelTooShort { .. })));
}

#[test]
fn two_individual_q2_hand_value() {
    // b = (1, 0) so every index is the first regressor; h = 1.
    let data = panel(&[
        ([0, 0, 1, 1, 0], [[0.1, 9.0], [0.4, 9.0], [0.7, 9.0], [1.0, 9.0]]),
        ([1, 1, 0, 1, 1], [[0.5, 9.0], [0.2, 9.0], [0.0, 9.0], [-0.6, 9.0]]),
    ]);
    // First: K(0.3)·(+1)·sgn(0.3); second term has y3 − y2 = 0.
    // Second: K(−0.2)·(−1)·sgn(−0.3) + K(−0.6)·(+1)·sgn(−0.2).
    let k = |u: f64| 0.75 * (1.0 - u * u);
    let hand = (k(0.3) + k(-0.2) - k(-0.6)) / 2.0;
    let v = q2_kernel_objective(&data, ADJ, 0.0, &[1.0, 0.0], 1.0).unwrap();
    assert!((v - hand).abs() < 1e-15, "{v} vs {hand}");
    assert!((hand - 0.46125).abs() < 1e-12);
}

#[test]
fn q2_zero_switch_factor_ignores_r() {
    let data = panel(&[([0, 1, 1, 1, 0], [[0.1, 0.2], [0.3, 0.1], [0.2, 0.2], [0.0, 0.4]])]);
    let b = [0.6, 0.8];
    let v0 = q2_kernel_objective(&data, ADJ, -2.0, &b, 1.0).unwrap();
    for r in [-1.0, 0.0, 0.5, 2.9] {
        assert_eq!(q2_kernel_objective(&data, ADJ, r, &b, 1.0).unwrap(), v0);
    }
    assert_eq!(v0, 0.0);
}

#[test]
fn ten_individual_gamma_interval_matches_dense_grid() {
    let data = random_panel(10, 4);
    let b = [0.6, 0.8];
    let cfg = fixed_h(10.0);
    let est = estimate_gamma(&data, &b, &cfg).unwrap();
    let points = 1_000_000;
    let step = 6.0 / (points - 1) as f64;
    let values: Vec<f64> =
        (0..points).map(|j| q2_kernel_objective(&data, ADJ, -3.0 + j as f64 * step, &b, 10.0).unwrap()).collect();
    let (best, runs) = max_runs(&values);
    assert!((est.q2_value - best).abs() < 1e-12, "{} vs {best}", est.q2_value);
    let (a, z) = runs[0];
    let (lo, hi) = est.interval;
    assert!((lo - (-3.0 + a as f64 * step)).abs() <= 2.0 * step, "{lo} vs grid run start");
    assert!((hi - (-3.0 + z as f64 * step)).abs() <= 2.0 * step, "{hi} vs grid run end");
    assert!(lo < est.gamma && est.gamma < hi);
}

#[test]
fn q2_piecewise_constant_below_breakpoints() {
    let data = random_panel(10, 4);
    let b = [0.6, 0.8];
    let bps: Vec<f64> = objective::gamma_terms(&data, ADJ, &b, 10.0)
        .iter()
        .filter(|t| t.lag != 0)
        .map(|t| -t.index * t.lag as f64)
        .collect();
    let min_bp = bps.iter().copied().fold(f64::INFINITY, f64::min);
    let a = q2_kernel_objective(&data, ADJ, min_bp - 1.0, &b, 10.0).unwrap();
    let c = q2_kernel_objective(&data, ADJ, min_bp - 0.01, &b, 10.0).unwrap();
    assert_eq!(a, c);
}

#[test]
fn constant_gamma_objective_returns_midpoint() {
    // y = (0,1,0,1,0) has two γ summands. The t=2 one gets zero kernel weight
    // (x3 − x2 = 10) and the t=3 one has its breakpoint at r = 10.
    let data = panel(&[([0, 1, 0, 1, 0], [[0.0, 0.0], [10.0, 0.0], [20.0, 0.0], [20.0, 0.0]])]);
    let terms = objective::gamma_terms(&data, ADJ, &[1.0, 0.0], 1.0);
    assert_eq!(terms.len(), 1);
    assert_eq!(-terms[0].index / terms[0].lag as f64, 10.0);
    let est = estimate_gamma(&data, &[1.0, 0.0], &fixed_h(1.0)).unwrap();
    assert!(est.constant);
    assert_eq!(est.gamma, 0.0);
}

#[test]
fn all_kernel_weights_zero_is_reported() {
    let data = panel(&[([0, 1, 0, 1, 0], [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [6.0, 0.0]])]);
    assert!(matches!(estimate_gamma(&data, &[1.0, 0.0], &fixed_h(0.1)), Err(Error::AllWeightsZero { .. })));
}

#[test]
fn xi_differs_from_q1_by_a_constant() {
    let (data, _) = simulate(&DgpSpec::from_number(1).unwrap(), 2000, 3).unwrap();
    let n = data.n() as f64;
    let mut offsets = Vec::new();
    let mut best_q1 = (f64::NEG_INFINITY, 0);
    let mut best_xi = (f64::NEG_INFINITY, 0);
    for (j, b) in angle_grid(1000).iter().enumerate() {
        let q1 = q1_objective(&data, b).unwrap();
        let sx: f64 = (0..data.n()).map(|i| xi(&data, i, b)).sum::<f64>() / n;
        offsets.push(2.0 * sx - q1);
        if q1 > best_q1.0 {
            best_q1 = (q1, j);
        }
        if sx > best_xi.0 {
            best_xi = (sx, j);
        }
    }
    for o in &offsets {
        assert!((o - offsets[0]).abs() < 1e-12);
    }
    let grid = angle_grid(1000);
    assert!((q1_objective(&data, &grid[best_xi.1]).unwrap() - best_q1.0).abs() < 1e-12);
    for i in 0..data.n() {
        if objective::beta_terms(&data, ADJ).iter().all(|t| t.individual != i) {
            assert_eq!(xi(&data, i, &[0.3, 0.9]), 0.0);
            break;
        }
    }
}

#[test]
fn varsigma_argmax_matches_q2_on_grid() {
    let (data, truth) = simulate(&DgpSpec::from_number(1).unwrap(), 5000, 6).unwrap();
    let b = &truth.beta_normalized;
    let h = 0.2;
    let grid: Vec<f64> = (0..1000).map(|j| -3.0 + 6.0 * j as f64 / 999.0).collect();
    let q2: Vec<f64> = grid.iter().map(|&r| q2_kernel_objective(&data, ADJ, r, b, h).unwrap()).collect();
    let vs: Vec<f64> = grid.iter().map(|&r| (0..data.n()).map(|i| varsigma(&data, i, r, b, h)).sum::<f64>()).collect();
    let arg = |v: &[f64]| v.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (j, &x)| if x > acc.1 { (j, x) } else { acc }).0;
    let (jq, js) = (arg(&q2), arg(&vs));
    assert!((q2[js] - q2[jq]).abs() < 1e-12, "varsigma argmax {} vs q2 argmax {}", grid[js], grid[jq]);
}

#[test]
fn permutation_invariance() {
    let (data, _) = simulate(&DgpSpec::from_number(1).unwrap(), 1500, 12).unwrap();
    let perm: Vec<usize> = (0..data.n()).map(|i| (i * 7919) % data.n()).collect();
    let shuffled = data.select(&perm);
    let b = [0.28, 0.96];
    let d1 = q1_objective(&data, &b).unwrap() - q1_objective(&shuffled, &b).unwrap();
    let d2 = q2_kernel_objective(&data, ADJ, -0.4, &b, 0.3).unwrap()
        - q2_kernel_objective(&shuffled, ADJ, -0.4, &b, 0.3).unwrap();
    assert!(d1.abs() < 1e-12 && d2.abs() < 1e-12);
    assert_eq!(dynpanel::switcher_counts(&data).unwrap(), dynpanel::switcher_counts(&shuffled).unwrap());
}

#[test]
fn estimate_result_invariants() {
    let (data, _) = simulate(&DgpSpec::from_number(1).unwrap(), 5000, 21).unwrap();
    let cfg = EstimationConfig::default();
    let est = estimate(&data, &cfg).unwrap();
    let norm: f64 = est.params.beta.iter().map(|v| v * v).sum();
    assert!((norm - 1.0).abs() < 1e-12);
    assert!((est.q1_value - q1_objective(&data, &est.params.beta).unwrap()).abs() < 1e-12);
    let h = est.h_used;
    for j in 0..601 {
        let r = -3.0 + 0.01 * j as f64;
        assert!(est.q2_value >= q2_kernel_objective(&data, ADJ, r, &est.params.beta, h).unwrap() - 1e-12);
    }
    assert_eq!(est.h_used, bandwidth(5000));
}

#[test]
fn higher_dimension_and_longer_panels() {
    let (d3, _) = simulate(&DgpSpec::from_number(3).unwrap(), 4000, 2).unwrap();
    let est = estimate(&d3, &EstimationConfig::default()).unwrap();
    assert_eq!(est.params.beta.len(), 3);
    assert!(est.params.beta.iter().all(|v| (v - 0.577).abs() < 0.3), "{:?}", est.params.beta);

    let mut spec = DgpSpec::from_number(1).unwrap();
    spec.design_id = dynpanel::Design::Custom;
    spec.t_max = 6;
    let (d6, _) = simulate(&spec, 4000, 2).unwrap();
    for variant in [ObjectiveVariant::AdjacentOnly, ObjectiveVariant::Combined, ObjectiveVariant::GeneralT] {
        let cfg = EstimationConfig { objective_variant: variant, ..EstimationConfig::default() };
        let est = estimate(&d6, &cfg).unwrap();
        assert!((est.params.beta[1] - 0.707).abs() < 0.2, "{variant:?}: {:?}", est.params.beta);
        assert!(est.gamma_effective >= objective::gamma_effective(&d6, ObjectiveVariant::AdjacentOnly) || variant == ADJ);
    }
}
