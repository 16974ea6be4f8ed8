//! Run reports: a result table, log-log fits and summary scalars.

use serde::Serialize;

use crate::config::ExperimentKind;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    /// CSV form; floats carry 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub name: String,
    pub x: String,
    pub y: String,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals in `ln y`.
    pub residual: f64,
    /// Table rows used by the fit.
    pub rows: Vec<usize>,
}

/// Points whose `y` exceeds this fraction of the first `y` count as pre-asymptotic.
pub const PREASYMPTOTIC_FRACTION: f64 = 0.3;
pub const MIN_FIT_POINTS: usize = 3;

/// Fits `ln y = slope · ln x + c` over `points = (row, x, y)` given in schedule order.
///
/// Nonpositive or non-finite points are ignored. Points with
/// `y > 0.3 · y_first` are dropped unless that leaves fewer than three, in
/// which case the last three valid points are used. Returns `None` below three.
pub fn fit_loglog(name: &str, x: &str, y: &str, points: &[(usize, f64, f64)]) -> Option<RateFit> {
    let valid: Vec<(usize, f64, f64)> =
        points.iter().copied().filter(|&(_, a, b)| a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).collect();
    if valid.len() < MIN_FIT_POINTS {
        return None;
    }
    let first = valid[0].2;
    let mut used: Vec<(usize, f64, f64)> =
        valid.iter().copied().filter(|&(_, _, b)| b <= PREASYMPTOTIC_FRACTION * first).collect();
    if used.len() < MIN_FIT_POINTS {
        used = valid[valid.len() - MIN_FIT_POINTS..].to_vec();
    }
    let n = used.len() as f64;
    let lx: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let ly: Vec<f64> = used.iter().map(|p| p.2.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Some(RateFit {
        name: name.into(),
        x: x.into(),
        y: y.into(),
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        rows: used.iter().map(|p| p.0).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub library_version: String,
    pub lab_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub parallel_feature: bool,
}

impl Environment {
    pub fn capture(threads: usize) -> Self {
        Environment {
            library_version: navier_slip::VERSION.into(),
            lab_version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads,
            parallel_feature: cfg!(feature = "parallel"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub fits: Vec<RateFit>,
    pub summary: Vec<(String, f64)>,
    pub notes: Vec<String>,
    /// Seconds per row, in row order.
    pub wall_times: Vec<f64>,
    pub environment: Environment,
    pub config: String,
}

impl RunReport {
    pub fn new(experiment: ExperimentKind, columns: &[&str], config: String, threads: usize) -> Self {
        RunReport {
            experiment,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fits: Vec::new(),
            summary: Vec::new(),
            notes: Vec::new(),
            wall_times: Vec::new(),
            environment: Environment::capture(threads),
            config,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>, seconds: f64) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
        self.wall_times.push(seconds);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column; text cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn text_column(&self, name: &str) -> Option<Vec<String>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].render()).collect())
    }

    pub fn fit(&self, name: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.name == name)
    }

    pub fn summary_value(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn add_summary(&mut self, name: &str, value: f64) {
        self.summary.push((name.to_string(), value));
    }

    /// Adds a fit of column `y` against column `x` over `rows` (schedule order);
    /// records a note when fewer than three usable points remain.
    pub fn add_fit(&mut self, name: &str, x: &str, y: &str, rows: &[usize]) {
        let (xs, ys) = (self.column(x).expect("fit x column"), self.column(y).expect("fit y column"));
        let points: Vec<(usize, f64, f64)> = rows.iter().map(|&r| (r, xs[r], ys[r])).collect();
        match fit_loglog(name, x, y, &points) {
            Some(f) => self.fits.push(f),
            None => self.notes.push(format!("{name}: fewer than {MIN_FIT_POINTS} usable points, no fit")),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    pub fn fits_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "x", "y", "slope", "intercept", "residual", "points"]).expect("in-memory csv");
        for f in &self.fits {
            w.write_record([
                f.name.clone(),
                f.x.clone(),
                f.y.clone(),
                Cell::Num(f.slope).render(),
                Cell::Num(f.intercept).render(),
                Cell::Num(f.residual).render(),
                f.rows.len().to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    /// JSON manifest: config echo, environment, summary, fits, notes and wall times.
    pub fn to_json(&self) -> String {
        let summary: serde_json::Map<String, serde_json::Value> =
            self.summary.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
        let value = serde_json::json!({
            "experiment": self.experiment,
            "config": self.config,
            "environment": self.environment,
            "columns": self.columns,
            "rows": self.rows,
            "fits": self.fits,
            "summary": summary,
            "notes": self.notes,
            "wall_times": self.wall_times,
        });
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(usize, f64, f64)> = (0..6).map(|k| (k, 0.5f64.powi(k as i32), 3.0 * 0.25f64.powi(k as i32))).collect();
        let f = fit_loglog("r", "h", "e", &pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-13);
        assert!(f.residual < 1e-13);
        // the first two points exceed 0.3 of the first error
        assert_eq!(f.rows, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn falls_back_to_last_three() {
        let pts = [(0, 1.0, 1.0), (1, 2.0, 0.9), (2, 3.0, 0.8), (3, 4.0, 0.7)];
        assert_eq!(fit_loglog("r", "x", "y", &pts).unwrap().rows, vec![1, 2, 3]);
        assert!(fit_loglog("r", "x", "y", &pts[..2]).is_none());
        assert!(fit_loglog("r", "x", "y", &[(0, 1.0, 0.0), (1, 2.0, 1.0), (2, 3.0, 1.0)]).is_none());
    }

    #[test]
    fn csv_quotes_and_digits() {
        let mut r = RunReport::new(ExperimentKind::Mms, &["name", "value"], String::new(), 1);
        r.push_row(vec!["a,b".into(), 0.1.into()], 0.0);
        let csv = r.to_csv();
        assert_eq!(csv, "name,value\n\"a,b\",1.0000000000000001e-1\n");
    }
}
