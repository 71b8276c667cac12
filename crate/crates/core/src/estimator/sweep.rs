//! Exact maximization of sums of step functions.
//!
//! Both maximum score objectives are weighted sums of indicators whose
//! argument changes sign at finitely many points. Sorting those breakpoints
//! and walking them once gives the objective on every open piece in
//! `O(m log m)`. An optional smooth term (a trigonometric quadratic on the
//! circle, a parabola on the line) is maximized within each piece; the
//! modified-objective bootstrap needs it.

use std::f64::consts::{PI, TAU};

/// `weight · 1[z · (cos θ, sin θ) > 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcTerm {
    pub weight: f64,
    pub z: [f64; 2],
}

/// `f(θ) = c0 + c2 cos 2θ + s2 sin 2θ + c1 cos θ + s1 sin θ`.
///
/// Any quadratic form in `b = (cos θ, sin θ)` has this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigQuad {
    pub c0: f64,
    pub c2: f64,
    pub s2: f64,
    pub c1: f64,
    pub s1: f64,
    critical: Vec<f64>,
}

impl TrigQuad {
    pub fn new(c0: f64, c2: f64, s2: f64, c1: f64, s1: f64) -> Self {
        let mut q = Self { c0, c2, s2, c1, s1, critical: Vec::new() };
        q.critical = q.find_critical_points();
        q
    }

    /// `½ (b − c)' V (b − c)` restricted to `b = cos θ · p + sin θ · q`, with
    /// `V` symmetric `K × K` row-major.
    pub fn from_quadratic_form(v: &[f64], center: &[f64], p: &[f64], q: &[f64]) -> Self {
        let k = center.len();
        let form = |a: &[f64], b: &[f64]| -> f64 {
            let mut s = 0.0;
            for r in 0..k {
                for c in 0..k {
                    s += a[r] * v[r * k + c] * b[c];
                }
            }
            s
        };
        let pvp = form(p, p);
        let qvq = form(q, q);
        let pvq = form(p, q);
        let pvc = form(p, center);
        let qvc = form(q, center);
        let cvc = form(center, center);
        Self::new(0.25 * (pvp + qvq) + 0.5 * cvc, 0.25 * (pvp - qvq), 0.5 * pvq, -pvc, -qvc)
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.c0
            + self.c2 * (2.0 * theta).cos()
            + self.s2 * (2.0 * theta).sin()
            + self.c1 * theta.cos()
            + self.s1 * theta.sin()
    }

    fn derivative(&self, theta: f64) -> f64 {
        -2.0 * self.c2 * (2.0 * theta).sin() + 2.0 * self.s2 * (2.0 * theta).cos() - self.c1 * theta.sin()
            + self.s1 * theta.cos()
    }

    fn find_critical_points(&self) -> Vec<f64> {
        const GRID: usize = 2048;
        let step = TAU / GRID as f64;
        let mut out = Vec::new();
        let mut prev = self.derivative(0.0);
        for j in 1..=GRID {
            let t1 = j as f64 * step;
            let cur = self.derivative(t1);
            if prev == 0.0 {
                out.push((t1 - step).rem_euclid(TAU));
            } else if prev.signum() != cur.signum() && cur != 0.0 {
                let (mut a, mut b) = (t1 - step, t1);
                let fa = prev;
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    let fm = self.derivative(m);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if fm.signum() == fa.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push((0.5 * (a + b)).rem_euclid(TAU));
            }
            prev = cur;
        }
        out
    }

    /// Maximizer of the smooth term over the open arc `(lo, hi)`, `hi > lo`,
    /// angles unwrapped so that `hi − lo ≤ 2π`.
    fn argmax_on_arc(&self, lo: f64, hi: f64) -> (f64, f64) {
        let width = hi - lo;
        let inset = (width * 1e-6).min(1e-9);
        let mut best = (lo + inset, self.value(lo + inset));
        let mut consider = |t: f64| {
            let v = self.value(t);
            if v > best.1 {
                best = (t, v);
            }
        };
        consider(hi - inset);
        for &c in &self.critical {
            for shift in [0.0, TAU, 2.0 * TAU] {
                let t = c + shift;
                if t > lo + inset && t < hi - inset {
                    consider(t);
                }
            }
        }
        best
    }
}

/// Result of a circle maximization. Angles are in `[0, 2π)`; `arc` may wrap
/// (`arc.1 > 2π`).
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMax {
    pub theta: f64,
    pub value: f64,
    pub arc: (f64, f64),
    pub pieces: usize,
    /// The step part takes a single value on the whole circle.
    pub constant: bool,
}

fn tolerance(total_abs_weight: f64) -> f64 {
    1e-12 * (1.0 + total_abs_weight)
}

/// Direct evaluation of the step part at angle `theta`.
pub fn circle_step_value(terms: &[ArcTerm], theta: f64) -> f64 {
    let (c, s) = (theta.cos(), theta.sin());
    terms.iter().filter(|t| t.z[0] * c + t.z[1] * s > 0.0).map(|t| t.weight).sum()
}

struct Breaks {
    angles: Vec<f64>,
    deltas: Vec<f64>,
}

fn circle_breaks(terms: &[ArcTerm]) -> Breaks {
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * terms.len());
    for t in terms {
        if t.weight == 0.0 || (t.z[0] == 0.0 && t.z[1] == 0.0) {
            continue;
        }
        let phi = t.z[1].atan2(t.z[0]);
        events.push(((phi - 0.5 * PI).rem_euclid(TAU), t.weight));
        events.push(((phi + 0.5 * PI).rem_euclid(TAU), -t.weight));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut angles: Vec<f64> = Vec::with_capacity(events.len());
    let mut deltas: Vec<f64> = Vec::with_capacity(events.len());
    for (a, d) in events {
        match angles.last() {
            Some(&last) if a - last <= 1e-12 => *deltas.last_mut().expect("paired") += d,
            _ => {
                angles.push(a);
                deltas.push(d);
            }
        }
    }
    // merge across the 2π seam
    if angles.len() > 1 {
        let first = angles[0];
        let last = *angles.last().expect("nonempty");
        if first + TAU - last <= 1e-12 {
            let d = deltas.pop().expect("nonempty");
            angles.pop();
            deltas[0] += d;
        }
    }
    Breaks { angles, deltas }
}

/// Maximizes `Σ weight · 1[z·u(θ) > 0] + quad(θ)` over the circle.
///
/// Ties between pieces go to the smallest left endpoint in `[0, 2π)`.
/// Without a smooth term the midpoint of the maximizing arc is returned.
pub fn maximize_on_circle(terms: &[ArcTerm], quad: Option<&TrigQuad>) -> CircleMax {
    let tol = tolerance(terms.iter().map(|t| t.weight.abs()).sum());
    let Breaks { angles, deltas } = circle_breaks(terms);
    let m = angles.len();
    if m < 2 {
        let base = circle_step_value(terms, 0.0);
        let (theta, extra) = match quad {
            Some(q) => {
                let (t, v) = q.argmax_on_arc(0.0, TAU);
                (t.rem_euclid(TAU), v)
            }
            None => (0.0, 0.0),
        };
        return CircleMax { theta, value: base + extra, arc: (0.0, TAU), pieces: 1, constant: true };
    }

    // Piece j is (angles[j], angles[j+1]); the last one wraps to angles[0] + 2π.
    let piece = |j: usize| -> (f64, f64) {
        if j + 1 < m {
            (angles[j], angles[j + 1])
        } else {
            (angles[m - 1], angles[0] + TAU)
        }
    };
    let (a0, b0) = piece(0);
    let mut step = circle_step_value(terms, 0.5 * (a0 + b0));
    let mut best_j = 0;
    let mut best_theta = 0.5 * (a0 + b0);
    let mut best_total = match quad {
        Some(q) => {
            let (t, v) = q.argmax_on_arc(a0, b0);
            best_theta = t;
            step + v
        }
        None => step,
    };
    let mut min_step = step;
    let mut max_step = step;
    for (j, delta) in deltas.iter().enumerate().take(m).skip(1) {
        step += delta;
        min_step = min_step.min(step);
        max_step = max_step.max(step);
        let (a, b) = piece(j);
        let (theta, total) = match quad {
            Some(q) => {
                let (t, v) = q.argmax_on_arc(a, b);
                (t, step + v)
            }
            None => (0.5 * (a + b), step),
        };
        if total > best_total + tol {
            best_total = total;
            best_theta = theta;
            best_j = j;
        }
    }
    let arc = piece(best_j);
    CircleMax {
        theta: best_theta.rem_euclid(TAU),
        value: best_total,
        arc,
        pieces: m,
        constant: max_step - min_step <= tol,
    }
}

/// The open arc of constancy of the step part that contains `theta`, or
/// `None` when `theta` sits on a breakpoint.
pub fn arc_containing(terms: &[ArcTerm], theta: f64) -> Option<(f64, f64)> {
    let Breaks { angles, .. } = circle_breaks(terms);
    let m = angles.len();
    if m < 2 {
        return Some((0.0, TAU));
    }
    let t = theta.rem_euclid(TAU);
    if angles.iter().any(|&a| (a - t).abs() <= 1e-12) {
        return None;
    }
    let j = angles.partition_point(|&a| a < t);
    if j == 0 || j == m {
        Some((angles[m - 1], angles[0] + TAU))
    } else {
        Some((angles[j - 1], angles[j]))
    }
}

/// `weight · 1[dir · (r − threshold) > 0]`; `dir = 0` never fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTerm {
    pub weight: f64,
    pub threshold: f64,
    pub dir: i8,
}

impl StepTerm {
    #[inline]
    pub fn active(&self, r: f64) -> bool {
        (self.dir as f64) * (r - self.threshold) > 0.0
    }
}

/// `½ · curvature · (r − center)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parabola {
    pub curvature: f64,
    pub center: f64,
}

impl Parabola {
    pub fn value(&self, r: f64) -> f64 {
        0.5 * self.curvature * (r - self.center) * (r - self.center)
    }

    fn argmax_on(&self, lo: f64, hi: f64) -> f64 {
        let inset = ((hi - lo) * 1e-6).min(1e-9);
        let (lo, hi) = (lo + inset, hi - inset);
        if self.curvature <= 0.0 {
            self.center.clamp(lo, hi)
        } else if (lo - self.center).abs() >= (hi - self.center).abs() {
            lo
        } else {
            hi
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineMax {
    pub r: f64,
    pub value: f64,
    pub interval: (f64, f64),
    pub pieces: usize,
    pub constant: bool,
}

pub fn line_step_value(terms: &[StepTerm], r: f64) -> f64 {
    terms.iter().filter(|t| t.active(r)).map(|t| t.weight).sum()
}

/// Maximizes `Σ weight · 1[dir (r − threshold) > 0] + parabola(r)` over
/// `[lo, hi]`. Ties go to the leftmost piece; without a parabola the
/// midpoint of the maximizing piece is returned.
pub fn maximize_on_interval(terms: &[StepTerm], lo: f64, hi: f64, quad: Option<&Parabola>) -> LineMax {
    assert!(lo < hi, "empty interval");
    let tol = tolerance(terms.iter().map(|t| t.weight.abs()).sum());
    let mut events: Vec<(f64, f64)> = terms
        .iter()
        .filter(|t| t.dir != 0 && t.weight != 0.0 && t.threshold > lo && t.threshold < hi)
        .map(|t| (t.threshold, if t.dir > 0 { t.weight } else { -t.weight }))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points: Vec<f64> = Vec::with_capacity(events.len());
    let mut deltas: Vec<f64> = Vec::with_capacity(events.len());
    for (p, d) in events {
        match points.last() {
            Some(&last) if p - last <= 1e-12 * (1.0 + p.abs()) => *deltas.last_mut().expect("paired") += d,
            _ => {
                points.push(p);
                deltas.push(d);
            }
        }
    }
    let m = points.len();
    let piece = |j: usize| -> (f64, f64) {
        let a = if j == 0 { lo } else { points[j - 1] };
        let b = if j == m { hi } else { points[j] };
        (a, b)
    };
    let pick = |step: f64, (a, b): (f64, f64)| -> (f64, f64) {
        match quad {
            Some(q) => {
                let r = q.argmax_on(a, b);
                (r, step + q.value(r))
            }
            None => (0.5 * (a + b), step),
        }
    };
    let first = piece(0);
    let mut step = line_step_value(terms, 0.5 * (first.0 + first.1));
    let (mut best_r, mut best_total) = pick(step, first);
    let mut best_j = 0;
    let (mut min_step, mut max_step) = (step, step);
    for j in 1..=m {
        step += deltas[j - 1];
        min_step = min_step.min(step);
        max_step = max_step.max(step);
        let (r, total) = pick(step, piece(j));
        if total > best_total + tol {
            best_total = total;
            best_r = r;
            best_j = j;
        }
    }
    LineMax { r: best_r, value: best_total, interval: piece(best_j), pieces: m + 1, constant: max_step - min_step <= tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_circle_max(terms: &[ArcTerm], quad: Option<&TrigQuad>, grid: usize) -> f64 {
        (0..grid)
            .map(|j| {
                let t = TAU * (j as f64 + 0.5) / grid as f64;
                circle_step_value(terms, t) + quad.map_or(0.0, |q| q.value(t))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn dense_line_max(terms: &[StepTerm], lo: f64, hi: f64, quad: Option<&Parabola>, grid: usize) -> f64 {
        (0..grid)
            .map(|j| {
                let r = lo + (hi - lo) * (j as f64 + 0.5) / grid as f64;
                line_step_value(terms, r) + quad.map_or(0.0, |q| q.value(r))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn single_term_half_circle() {
        let terms = [ArcTerm { weight: 1.0, z: [1.0, 0.0] }];
        let m = maximize_on_circle(&terms, None);
        assert_eq!(m.value, 1.0);
        assert!(m.theta.min(TAU - m.theta) < 1e-12, "theta {}", m.theta);
        assert!((m.arc.0 - 1.5 * PI).abs() < 1e-12 && (m.arc.1 - 2.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn empty_terms_are_constant() {
        let m = maximize_on_circle(&[], None);
        assert!(m.constant);
        assert_eq!(m.value, 0.0);
        let l = maximize_on_interval(&[], -3.0, 3.0, None);
        assert!(l.constant);
        assert_eq!(l.r, 0.0);
    }

    #[test]
    fn cancelling_terms_flag_constant() {
        let terms = [ArcTerm { weight: 1.0, z: [1.0, 2.0] }, ArcTerm { weight: 1.0, z: [-1.0, -2.0] }];
        let m = maximize_on_circle(&terms, None);
        assert!(m.constant);
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn interval_tie_goes_left() {
        // +1 on (-inf, -1) and +1 on (1, inf): two maximizing pieces.
        let terms = [
            StepTerm { weight: 1.0, threshold: -1.0, dir: -1 },
            StepTerm { weight: 1.0, threshold: 1.0, dir: 1 },
        ];
        let m = maximize_on_interval(&terms, -3.0, 3.0, None);
        assert_eq!(m.interval, (-3.0, -1.0));
        assert_eq!(m.r, -2.0);
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn concave_parabola_recovers_center_when_steps_vanish() {
        let q = Parabola { curvature: -2.0, center: 0.3 };
        let m = maximize_on_interval(&[StepTerm { weight: 0.0, threshold: 0.1, dir: 1 }], -3.0, 3.0, Some(&q));
        assert!((m.r - 0.3).abs() < 1e-15);
        let tq = TrigQuad::from_quadratic_form(&[-1.0, 0.0, 0.0, -1.0], &[0.6, 0.8], &[1.0, 0.0], &[0.0, 1.0]);
        let c = maximize_on_circle(&[], Some(&tq));
        assert!((c.theta.cos() - 0.6).abs() < 1e-9 && (c.theta.sin() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn trig_quad_matches_quadratic_form() {
        let v = [-1.3, 0.4, 0.4, -0.7];
        let c = [0.2, -0.9];
        let q = TrigQuad::from_quadratic_form(&v, &c, &[1.0, 0.0], &[0.0, 1.0]);
        for j in 0..50 {
            let t = j as f64 * 0.37;
            let b = [t.cos() - c[0], t.sin() - c[1]];
            let direct = 0.5 * (b[0] * (v[0] * b[0] + v[1] * b[1]) + b[1] * (v[2] * b[0] + v[3] * b[1]));
            assert!((q.value(t) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_containing_locates_piece() {
        let terms = [ArcTerm { weight: 1.0, z: [1.0, 0.0] }];
        let (a, b) = arc_containing(&terms, 0.1).unwrap();
        assert!((a - 1.5 * PI).abs() < 1e-12 && (b - 2.5 * PI).abs() < 1e-12);
        let (a, b) = arc_containing(&terms, PI).unwrap();
        assert!((a - 0.5 * PI).abs() < 1e-12 && (b - 1.5 * PI).abs() < 1e-12);
        assert!(arc_containing(&terms, 0.5 * PI).is_none());
    }

    fn arc_terms() -> impl Strategy<Value = Vec<ArcTerm>> {
        prop::collection::vec(
            (prop_oneof![Just(-1.0), Just(1.0), -2.0..2.0f64], -3.0..3.0f64, -3.0..3.0f64)
                .prop_map(|(w, a, b)| ArcTerm { weight: w, z: [a, b] }),
            0..25,
        )
    }

    fn step_terms() -> impl Strategy<Value = Vec<StepTerm>> {
        prop::collection::vec(
            (-2.0..2.0f64, -4.0..4.0f64, prop_oneof![Just(-1i8), Just(0i8), Just(1i8)])
                .prop_map(|(w, t, d)| StepTerm { weight: w, threshold: t, dir: d }),
            0..25,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn circle_sweep_dominates_dense_grid(terms in arc_terms()) {
            let m = maximize_on_circle(&terms, None);
            let direct = circle_step_value(&terms, m.theta);
            prop_assert!((direct - m.value).abs() < 1e-9);
            prop_assert!(m.value >= dense_circle_max(&terms, None, 20_000) - 1e-9);
        }

        #[test]
        fn circle_sweep_with_quadratic_dominates_grid(terms in arc_terms(), v11 in -3.0..0.0f64, v22 in -3.0..0.0f64, v12 in -1.0..1.0f64, ang in 0.0..TAU) {
            let q = TrigQuad::from_quadratic_form(&[v11, v12, v12, v22], &[ang.cos(), ang.sin()], &[1.0, 0.0], &[0.0, 1.0]);
            let m = maximize_on_circle(&terms, Some(&q));
            let direct = circle_step_value(&terms, m.theta) + q.value(m.theta);
            prop_assert!((direct - m.value).abs() < 1e-9);
            prop_assert!(m.value >= dense_circle_max(&terms, Some(&q), 20_000) - 1e-6);
        }

        #[test]
        fn line_sweep_dominates_dense_grid(terms in step_terms()) {
            let m = maximize_on_interval(&terms, -3.0, 3.0, None);
            prop_assert!((line_step_value(&terms, m.r) - m.value).abs() < 1e-9);
            prop_assert!(m.value >= dense_line_max(&terms, -3.0, 3.0, None, 20_000) - 1e-9);
        }

        #[test]
        fn line_sweep_with_parabola_dominates_grid(terms in step_terms(), curv in -4.0..4.0f64, center in -3.0..3.0f64) {
            let q = Parabola { curvature: curv, center };
            let m = maximize_on_interval(&terms, -3.0, 3.0, Some(&q));
            prop_assert!((line_step_value(&terms, m.r) + q.value(m.r) - m.value).abs() < 1e-9);
            prop_assert!(m.value >= dense_line_max(&terms, -3.0, 3.0, Some(&q), 20_000) - 1e-6);
        }
    }
}
