//! Balanced binary-choice panels: storage, validation and CSV I/O.
//!
//! Outcomes are stored for periods `0..=T`. Regressors are stored for periods
//! `1..=T` only; the model is not specified in period 0, so `x_0` never enters
//! an objective and is dropped on load.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest `T` a dataset may have.
pub const MIN_PERIODS: usize = 3;
/// Smallest `T` the estimators accept.
pub const MIN_ESTIMATION_PERIODS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    n: usize,
    t_max: usize,
    k: usize,
    /// `n × (T+1)`, row-major by individual.
    y: Vec<u8>,
    /// `n × T × K`, row-major by individual then period `1..=T`.
    x: Vec<f64>,
}

impl PanelDataset {
    /// Builds a dataset from flat arrays. `y` holds `n*(t_max+1)` outcomes and
    /// `x` holds `n*t_max*k` regressors for periods `1..=t_max`.
    pub fn new(n: usize, t_max: usize, k: usize, y: Vec<u8>, x: Vec<f64>) -> Result<Self> {
        if t_max < MIN_PERIODS {
            return Err(Error::PanelTooShort { t_max, required: MIN_PERIODS });
        }
        if k == 0 {
            return Err(Error::RaggedPanel("regressor dimension K must be at least 1".into()));
        }
        if y.len() != n * (t_max + 1) {
            return Err(Error::RaggedPanel(format!(
                "outcome array has {} entries, expected n*(T+1) = {}",
                y.len(),
                n * (t_max + 1)
            )));
        }
        if x.len() != n * t_max * k {
            return Err(Error::RaggedPanel(format!(
                "regressor array has {} entries, expected n*T*K = {}",
                x.len(),
                n * t_max * k
            )));
        }
        if let Some(pos) = y.iter().position(|&v| v > 1) {
            return Err(Error::NonBinaryOutcome {
                id: (pos / (t_max + 1)).to_string(),
                t: pos % (t_max + 1),
                value: y[pos].to_string(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            let row = pos / k;
            return Err(Error::NonFinite {
                individual: row / t_max,
                t: row % t_max + 1,
                column: pos % k + 1,
            });
        }
        Ok(Self { n, t_max, k, y, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Outcome of individual `i` at period `t ∈ 0..=T`.
    #[inline]
    pub fn y(&self, i: usize, t: usize) -> u8 {
        self.y[i * (self.t_max + 1) + t]
    }

    /// Outcome of individual `i` at period `t` as a signed integer.
    #[inline]
    pub fn yi(&self, i: usize, t: usize) -> i32 {
        self.y(i, t) as i32
    }

    /// Outcome sequence `y_0..y_T` of individual `i`.
    pub fn outcomes(&self, i: usize) -> &[u8] {
        let w = self.t_max + 1;
        &self.y[i * w..(i + 1) * w]
    }

    /// Regressor row of individual `i` at period `t ∈ 1..=T`.
    #[inline]
    pub fn x(&self, i: usize, t: usize) -> &[f64] {
        debug_assert!(t >= 1 && t <= self.t_max);
        let start = (i * self.t_max + (t - 1)) * self.k;
        &self.x[start..start + self.k]
    }

    /// `(x_it − x_is)'b`.
    #[inline]
    pub fn index_diff(&self, i: usize, t: usize, s: usize, b: &[f64]) -> f64 {
        self.x(i, t)
            .iter()
            .zip(self.x(i, s))
            .zip(b)
            .map(|((xt, xs), bk)| (xt - xs) * bk)
            .sum()
    }

    /// `x_it − x_is` as an owned vector.
    pub fn x_diff(&self, i: usize, t: usize, s: usize) -> Vec<f64> {
        self.x(i, t).iter().zip(self.x(i, s)).map(|(a, b)| a - b).collect()
    }

    pub fn require_periods(&self, required: usize) -> Result<()> {
        if self.t_max < required {
            return Err(Error::PanelTooShort { t_max: self.t_max, required });
        }
        Ok(())
    }

    /// New dataset made of the listed individuals, in that order (repeats
    /// allowed).
    pub fn select(&self, indices: &[usize]) -> PanelDataset {
        let wy = self.t_max + 1;
        let wx = self.t_max * self.k;
        let mut y = Vec::with_capacity(indices.len() * wy);
        let mut x = Vec::with_capacity(indices.len() * wx);
        for &i in indices {
            y.extend_from_slice(&self.y[i * wy..(i + 1) * wy]);
            x.extend_from_slice(&self.x[i * wx..(i + 1) * wx]);
        }
        PanelDataset { n: indices.len(), t_max: self.t_max, k: self.k, y, x }
    }

    /// Reads the long format `id,t,y,x1,...,xK`.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::read_csv(file, &path.display().to_string())
    }

    pub fn read_csv(reader: impl std::io::Read, source_name: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse { path: source_name.to_string(), line, msg };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 4 || cols[0] != "id" || cols[1] != "t" || cols[2] != "y" {
            return Err(parse_err(1, "header must be id,t,y,x1,...,xK".into()));
        }
        let k = cols.len() - 3;
        for (j, name) in cols[3..].iter().enumerate() {
            if *name != format!("x{}", j + 1) {
                return Err(parse_err(1, format!("expected column x{} but found '{name}'", j + 1)));
            }
        }

        struct Row {
            y: u8,
            x: Option<Vec<f64>>,
        }
        let mut order: Vec<String> = Vec::new();
        let mut rows: HashMap<String, HashMap<usize, Row>> = HashMap::new();

        for (idx, record) in rdr.records().enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            if record.len() != cols.len() {
                return Err(Error::RaggedPanel(format!(
                    "line {line} has {} fields, header has {}",
                    record.len(),
                    cols.len()
                )));
            }
            let id = record[0].to_string();
            let t: usize = record[1]
                .parse()
                .map_err(|_| parse_err(line, format!("period '{}' is not a nonnegative integer", &record[1])))?;
            let y_val: f64 = record[2]
                .parse()
                .map_err(|_| parse_err(line, format!("outcome '{}' is not a number", &record[2])))?;
            let y = if y_val == 0.0 {
                0
            } else if y_val == 1.0 {
                1
            } else {
                return Err(Error::NonBinaryOutcome { id, t, value: record[2].to_string() });
            };
            let blank = (3..cols.len()).all(|j| record[j].is_empty());
            let x = if t == 0 && blank {
                None
            } else {
                let mut xs = Vec::with_capacity(k);
                for j in 3..cols.len() {
                    let v: f64 = record[j]
                        .parse()
                        .map_err(|_| parse_err(line, format!("regressor '{}' is not a number", &record[j])))?;
                    if !v.is_finite() && t > 0 {
                        return Err(parse_err(line, format!("regressor x{} is not finite", j - 2)));
                    }
                    xs.push(v);
                }
                Some(xs)
            };
            let entry = rows.entry(id.clone()).or_insert_with(|| {
                order.push(id.clone());
                HashMap::new()
            });
            if entry.insert(t, Row { y, x }).is_some() {
                return Err(parse_err(line, format!("duplicate row for id {id}, t={t}")));
            }
        }

        if order.is_empty() {
            return Err(parse_err(2, "no data rows".into()));
        }

        let mut t_max: Option<usize> = None;
        for id in &order {
            let periods = &rows[id];
            let last = *periods.keys().max().expect("nonempty");
            match t_max {
                None => t_max = Some(last),
                Some(tm) if tm != last => {
                    return Err(Error::RaggedPanel(format!(
                        "individual {id} has T={last} but {} has T={tm}",
                        order[0]
                    )))
                }
                _ => {}
            }
            if let Some(t) = (0..=last).find(|t| !periods.contains_key(t)) {
                return Err(Error::MissingPeriod { id: id.clone(), t });
            }
        }
        let t_max = t_max.expect("nonempty");
        if t_max < MIN_PERIODS {
            return Err(Error::PanelTooShort { t_max, required: MIN_PERIODS });
        }

        let n = order.len();
        let mut y = Vec::with_capacity(n * (t_max + 1));
        let mut x = Vec::with_capacity(n * t_max * k);
        for id in &order {
            let periods = &rows[id];
            for t in 0..=t_max {
                let row = &periods[&t];
                y.push(row.y);
                if t >= 1 {
                    match &row.x {
                        Some(xs) => x.extend_from_slice(xs),
                        None => {
                            return Err(Error::Parse {
                                path: source_name.to_string(),
                                line: 0,
                                msg: format!("individual {id} has blank regressors at t={t}"),
                            })
                        }
                    }
                }
            }
        }
        Self::new(n, t_max, k, y, x)
    }

    /// Writes the long format with ids `1..=n`. Reals use 17 significant
    /// digits; the t = 0 regressor cells are left blank.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |source| Error::Io { path: path.to_path_buf(), source };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        self.write_csv(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "id,t,y")?;
        for j in 1..=self.k {
            write!(w, ",x{j}")?;
        }
        writeln!(w)?;
        for i in 0..self.n {
            for t in 0..=self.t_max {
                write!(w, "{},{},{}", i + 1, t, self.y(i, t))?;
                if t == 0 {
                    for _ in 0..self.k {
                        write!(w, ",")?;
                    }
                } else {
                    for v in self.x(i, t) {
                        write!(w, ",{v:.16e}")?;
                    }
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// Preference parameters `θ = (β', γ)'` with `‖β‖₂ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: Vec<f64>,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(beta: Vec<f64>, gamma: f64) -> Result<Self> {
        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("beta must have unit norm, got {norm}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidSpec("gamma must be finite".into()));
        }
        Ok(Self { beta, gamma })
    }
}

/// Counts of individuals that carry information for each estimation step
/// (periods 0..4):
/// β-step `{y0 = y2 = y4, y1 ≠ y3}`;
/// γ-step `{y1 ≠ y2, y0 ≠ y3}` or `{y2 ≠ y3, y1 ≠ y4}`.
pub fn switcher_counts(data: &PanelDataset) -> Result<(usize, usize)> {
    data.require_periods(MIN_ESTIMATION_PERIODS)?;
    let mut beta = 0;
    let mut gamma = 0;
    for i in 0..data.n() {
        let y = data.outcomes(i);
        if y[0] == y[2] && y[2] == y[4] && y[1] != y[3] {
            beta += 1;
        }
        if (y[1] != y[2] && y[0] != y[3]) || (y[2] != y[3] && y[1] != y[4]) {
            gamma += 1;
        }
    }
    Ok((beta, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    const WELL_FORMED: &str = "id,t,y,x1,x2
a,0,1,,
a,1,0,0.5,-1.25
a,2,1,1.5,2
a,3,1,-0.25,0
a,4,0,3,1e-3
b,0,0,9,9
b,1,1,1,1
b,2,0,2,2
b,3,1,3,3
b,4,1,4,4
";

    fn parse(text: &str) -> Result<PanelDataset> {
        PanelDataset::read_csv(text.as_bytes(), "test.csv")
    }

    #[test]
    fn loads_well_formed_file() {
        let d = parse(WELL_FORMED).unwrap();
        assert_eq!((d.n(), d.t_max(), d.k()), (2, 4, 2));
        assert_eq!(d.outcomes(0), &[1, 0, 1, 1, 0]);
        assert_eq!(d.x(0, 1), &[0.5, -1.25]);
        assert_eq!(d.x(1, 4), &[4.0, 4.0]);
    }

    #[test]
    fn rows_may_arrive_unsorted() {
        let text = "id,t,y,x1\n1,2,0,2\n1,0,1,\n1,3,1,3\n1,1,1,1\n";
        let d = parse(text).unwrap();
        assert_eq!(d.outcomes(0), &[1, 1, 0, 1]);
        assert_eq!(d.x(0, 3), &[3.0]);
    }

    #[test]
    fn rejects_non_binary_outcome() {
        let text = WELL_FORMED.replace("a,3,1,-0.25,0", "7,3,2,-0.25,0");
        let text = text.replace("a,", "7,");
        assert!(matches!(parse(&text), Err(Error::NonBinaryOutcome { ref id, t: 3, .. }) if id == "7"));
    }

    #[test]
    fn rejects_ragged_periods() {
        let text = WELL_FORMED.replace("b,4,1,4,4\n", "");
        assert!(matches!(parse(&text), Err(Error::RaggedPanel(_))));
    }

    #[test]
    fn rejects_missing_period() {
        let text = WELL_FORMED.replace("b,2,0,2,2\n", "");
        assert!(matches!(parse(&text), Err(Error::MissingPeriod { t: 2, .. })));
    }

    #[test]
    fn rejects_garbage_numbers() {
        let text = WELL_FORMED.replace("0.5,-1.25", "zero,-1.25");
        assert!(matches!(parse(&text), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn rejects_field_count_mismatch() {
        let text = WELL_FORMED.replace("b,3,1,3,3", "b,3,1,3");
        assert!(matches!(parse(&text), Err(Error::RaggedPanel(_))));
    }

    #[test]
    fn save_then_load_is_identity() {
        let d = parse(WELL_FORMED).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn switcher_counts_constant_outcomes() {
        let d = PanelDataset::new(3, 4, 1, vec![1; 15], vec![0.0; 12]).unwrap();
        assert_eq!(switcher_counts(&d).unwrap(), (0, 0));
    }

    #[test]
    fn switcher_counts_alternating_individual() {
        // y = (1,0,1,0,1): y1 = y3, so not a β switcher; y1≠y2 and y0≠y3, so a γ switcher.
        let d = PanelDataset::new(1, 4, 1, vec![1, 0, 1, 0, 1], vec![0.0; 4]).unwrap();
        assert_eq!(switcher_counts(&d).unwrap(), (0, 1));
    }

    #[test]
    fn switcher_counts_beta_switcher() {
        let d = PanelDataset::new(1, 4, 1, vec![1, 0, 1, 1, 1], vec![0.0; 4]).unwrap();
        // β: y0=y2=y4=1, y1≠y3. γ: y1≠y2 but y0=y3; y2=y3.
        assert_eq!(switcher_counts(&d).unwrap(), (1, 0));
    }

    #[test]
    fn switcher_counts_needs_four_periods() {
        let d = PanelDataset::new(1, 3, 1, vec![0, 1, 0, 1], vec![0.0; 3]).unwrap();
        assert!(matches!(switcher_counts(&d), Err(Error::PanelTooShort { .. })));
    }

    #[test]
    fn model_params_require_unit_norm() {
        assert!(ModelParams::new(vec![0.6, 0.8], -1.0).is_ok());
        assert!(ModelParams::new(vec![1.0, 1.0], -1.0).is_err());
    }
}
