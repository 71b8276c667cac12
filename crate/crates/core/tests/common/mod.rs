#![allow(dead_code)]

use dynpanel::rng::{open_unit, stream};
use dynpanel::PanelDataset;
use rand::Rng;

/// T = 4 panel from explicit rows: `(y0..y4, x1..x4)` with K = 2.
pub fn panel(rows: &[([u8; 5], [[f64; 2]; 4])]) -> PanelDataset {
    let n = rows.len();
    let y = rows.iter().flat_map(|r| r.0).collect();
    let x = rows.iter().flat_map(|r| r.1.iter().flatten().copied().collect::<Vec<_>>()).collect();
    PanelDataset::new(n, 4, 2, y, x).unwrap()
}

/// Random T = 4, K = 2 panel with fair-coin outcomes and N(0,1)-ish regressors.
pub fn random_panel(n: usize, seed: u64) -> PanelDataset {
    let mut rng = stream(seed, 99, 0);
    let y: Vec<u8> = (0..n * 5).map(|_| rng.random_range(0..2u8)).collect();
    let x: Vec<f64> = (0..n * 8).map(|_| 2.0 * open_unit(&mut rng) - 1.0 + 0.5 * (open_unit(&mut rng) - 0.5)).collect();
    PanelDataset::new(n, 4, 2, y, x).unwrap()
}

/// Maximal runs of consecutive grid indices whose value equals the maximum.
pub fn max_runs(values: &[f64]) -> (f64, Vec<(usize, usize)>) {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut runs = Vec::new();
    let mut start = None;
    for (j, &v) in values.iter().enumerate() {
        let hit = v >= best - 1e-12;
        match (hit, start) {
            (true, None) => start = Some(j),
            (false, Some(s)) => {
                runs.push((s, j - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, values.len() - 1));
    }
    (best, runs)
}

pub fn angle_grid(points: usize) -> Vec<[f64; 2]> {
    (0..points)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / points as f64;
            [th.cos(), th.sin()]
        })
        .collect()
}
