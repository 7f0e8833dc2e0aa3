//! Tables, manifests and plot scripts written by a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentId, ExperimentSpec, Family, Format};
use crate::error::LabResult;

/// Significant digits of every number written to a table.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column, in row order.
    pub fn values(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(i) => self.rows.iter().filter_map(|r| r[i].as_f64()).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_csv(&self) -> LabResult<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// `{"columns": [...], "rows": [[...], ...]}` with numbers rounded to
    /// the same precision as the CSV form; non-finite values become `null`.
    pub fn to_json(&self) -> LabResult<String> {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Num(x) => format_number(*x)
                            .parse::<f64>()
                            .ok()
                            .and_then(serde_json::Number::from_f64)
                            .map(serde_json::Value::Number)
                            .unwrap_or(serde_json::Value::Null),
                        Cell::Int(i) => serde_json::Value::from(*i),
                        Cell::Bool(b) => serde_json::Value::from(*b),
                        Cell::Text(s) => serde_json::Value::from(s.clone()),
                    })
                    .collect()
            })
            .collect();
        let doc = serde_json::json!({ "columns": self.columns, "rows": rows });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}

/// `%g`-style rendering with [`SIGNIFICANT_DIGITS`] significant digits:
/// fixed notation for decimal exponents in `[-4, 12)`, scientific otherwise,
/// trailing zeros removed.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let p = SIGNIFICANT_DIGITS;
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A pass/fail statement about the run. Gating checks decide the exit
/// status; the others are informational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub gating: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(
        name: &str,
        value: f64,
        threshold: f64,
        gating: bool,
        detail: impl Into<String>,
    ) -> Self {
        Check {
            name: name.to_string(),
            value,
            threshold,
            passed: value <= threshold,
            gating,
            detail: detail.into(),
        }
    }
}

/// A published statement that the computation does not reproduce, or
/// reproduces only after correction, with the evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub id: String,
    pub claim: String,
    pub finding: String,
    pub values: BTreeMap<String, f64>,
}

/// Outcome of testing one stated optimal phase configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub statement: String,
    pub params: BTreeMap<String, f64>,
    pub stated_value: f64,
    pub optimum: f64,
    pub optimum_phases: Vec<f64>,
    pub holds: bool,
}

/// Power-law fit of one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub r: f64,
    pub delta_e: f64,
    pub charger: String,
    pub target: String,
    pub modes: Vec<usize>,
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub params: ExperimentSpec,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub claims: Vec<ClaimRecord>,
    pub fits: Vec<FitRecord>,
    pub discrepancies: Vec<Discrepancy>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
    pub seed: u64,
    pub engine_version: String,
    pub oracle_cutoffs: Vec<usize>,
    pub status: String,
}

pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
    {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub data: PathBuf,
    pub manifest: PathBuf,
    pub plot: Option<PathBuf>,
}

/// Writes the table, the manifest and (for CSV output of figure
/// experiments) a gnuplot script into `spec.out`.
pub fn write_all(spec: &ExperimentSpec, table: &Table, manifest: &Manifest) -> LabResult<Written> {
    fs::create_dir_all(&spec.out)?;
    let stem = spec.experiment.as_str();
    let data_name = format!("{stem}.{}", spec.format.extension());
    let data = spec.out.join(&data_name);
    let body = match spec.format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json()?,
    };
    fs::write(&data, body)?;
    let manifest_path = spec.out.join(format!("{stem}.manifest.json"));
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(manifest)? + "\n",
    )?;
    let plot = match (spec.format, plot_script(spec.experiment, table, &data_name)) {
        (Format::Csv, Some(script)) => {
            let p = spec.out.join(format!("{stem}.gp"));
            fs::write(&p, script)?;
            Some(p)
        }
        _ => None,
    };
    Ok(Written {
        data,
        manifest: manifest_path,
        plot,
    })
}

/// A gnuplot script drawing the figure from `data_file`, a CSV in the same
/// directory as the script. One curve per `(r, ΔE)` pair.
pub fn plot_script(id: ExperimentId, table: &Table, data_file: &str) -> Option<String> {
    let panel = id.panel()?;
    let col = |name: &str| table.column(name).map(|i| i + 1);
    let value_name = table.columns.iter().find(|c| c.ends_with("_min"))?.clone();
    let (r_col, de_col, v_col) = (col("r")?, col("delta_e")?, col(&value_name)?);
    let mut curves: Vec<(f64, f64)> = Vec::new();
    for row in &table.rows {
        let key = (row[r_col - 1].as_f64()?, row[de_col - 1].as_f64()?);
        if !curves.contains(&key) {
            curves.push(key);
        }
    }
    let stem = Path::new(data_file)
        .file_stem()?
        .to_string_lossy()
        .to_string();
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 800,600\n");
    s.push_str(&format!("set output '{stem}.png'\n"));
    s.push_str(&format!("set title '{id}'\n"));
    s.push_str("set key outside right\n");
    let filter = |r: f64, de: f64| {
        format!(
            "(abs(${r_col}-{})<1e-12 && abs(${de_col}-{})<1e-12 ? ${v_col} : 1/0)",
            format_number(r),
            format_number(de)
        )
    };
    let title = |r: f64, de: f64| format!("r={}, dE={}", format_number(r), format_number(de));
    let plots: Vec<String> = match panel.family {
        Family::TwoMode => {
            let x = col("tau")?;
            s.push_str("set xlabel 'tau'\n");
            s.push_str(&format!("set ylabel '{value_name}'\n"));
            curves
                .iter()
                .map(|&(r, de)| {
                    format!(
                        "'{data_file}' using {x}:{} with linespoints title '{}'",
                        filter(r, de),
                        title(r, de)
                    )
                })
                .collect()
        }
        Family::ThreeMode => {
            let (x, y) = (col("tau1")?, col("tau2")?);
            s.push_str("set xlabel 'tau1'\nset ylabel 'tau2'\n");
            s.push_str(&format!("set zlabel '{value_name}'\n"));
            curves
                .iter()
                .map(|&(r, de)| {
                    format!(
                        "'{data_file}' using {x}:{y}:{} with points title '{}'",
                        filter(r, de),
                        title(r, de)
                    )
                })
                .collect()
        }
        Family::Separable => {
            let x = col("modes")?;
            s.push_str("set logscale xy\n");
            s.push_str("set xlabel 'N'\n");
            s.push_str(&format!("set ylabel '{value_name}'\n"));
            curves
                .iter()
                .map(|&(r, de)| {
                    format!(
                        "'{data_file}' using {x}:{} with linespoints title '{}'",
                        filter(r, de),
                        title(r, de)
                    )
                })
                .collect()
        }
    };
    let verb = if panel.family == Family::ThreeMode {
        "splot"
    } else {
        "plot"
    };
    s.push_str(&format!("{verb} {}\n", plots.join(", \\\n     ")));
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_twelve_significant_digits() {
        assert_eq!(format_number(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_number(10.098955787909), "10.0989557879");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(20.0), "20");
        assert_eq!(format_number(1.5e-7), "1.5e-07");
        assert_eq!(format_number(-2.5e13), "-2.5e+13");
        assert_eq!(format_number(123456789012.4), "123456789012");
        assert_eq!(format_number(0.0001), "0.0001");
        assert_eq!(format_number(-0.0), "0");
    }

    fn sample() -> Table {
        let mut t = Table::new(&[
            "r",
            "delta_e",
            "charger",
            "tau",
            "delta_sigma_min",
            "converged",
        ]);
        t.rows.push(vec![
            1.0.into(),
            10.0.into(),
            "squeeze".into(),
            0.0.into(),
            10.098955787909.into(),
            true.into(),
        ]);
        t.rows.push(vec![
            0.5.into(),
            20.0.into(),
            "a,\"quoted\" label".into(),
            1.0.into(),
            1.0f64.exp().into(),
            false.into(),
        ]);
        t
    }

    #[test]
    fn csv_is_rfc4180_with_twelve_digits() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<&str> = csv.split("\r\n").collect();
        assert_eq!(lines[0], "r,delta_e,charger,tau,delta_sigma_min,converged");
        assert_eq!(lines[1], "1,10,squeeze,0,10.0989557879,true");
        assert_eq!(
            lines[2],
            "0.5,20,\"a,\"\"quoted\"\" label\",1,2.71828182846,false"
        );
        assert_eq!(lines[3], "");
    }

    #[test]
    fn csv_reads_back() {
        let csv = sample().to_csv().unwrap();
        let mut rdr = csv::Reader::from_reader(csv.as_bytes());
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(&rows[1][2], "a,\"quoted\" label");
        let v: f64 = rows[1][4].parse().unwrap();
        assert!((v - 1.0f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn json_table_keeps_column_order_and_precision() {
        let json: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        assert_eq!(json["columns"][4], "delta_sigma_min");
        assert_eq!(json["rows"][0][4], 10.0989557879);
        assert_eq!(json["rows"][1][5], false);
    }

    #[test]
    fn number_format_edge_cases() {
        assert_eq!(format_number(f64::NAN), "nan");
        assert_eq!(format_number(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_number(1e-5), "1e-05");
        assert_eq!(format_number(0.000123456789012345), "0.000123456789012");
        assert_eq!(format_number(999999999999.9), "1e+12");
        assert_eq!(format_number(-1.25), "-1.25");
        assert_eq!(Cell::Int(14).render(), "14");
    }

    #[test]
    fn plot_scripts_use_relative_paths() {
        let s = plot_script(ExperimentId::Fig2a, &sample(), "fig2a.csv").unwrap();
        assert!(s.contains("plot 'fig2a.csv' using 4:"));
        assert!(s.contains("set xlabel 'tau'"));
        assert!(!s.contains('/') || !s.contains("'/"));
        assert!(!s.contains("logscale"));

        let mut t = Table::new(&["r", "delta_e", "charger", "modes", "delta_sigma_min"]);
        t.rows.push(vec![
            1.0.into(),
            5.0.into(),
            "squeeze".into(),
            2usize.into(),
            5.0.into(),
        ]);
        let s = plot_script(ExperimentId::Fig4a, &t, "fig4a.csv").unwrap();
        assert!(s.contains("set logscale xy"));

        let mut t = Table::new(&["r", "delta_e", "charger", "tau1", "tau2", "delta_sigma_min"]);
        t.rows.push(vec![
            0.5.into(),
            15.0.into(),
            "squeeze".into(),
            0.0.into(),
            0.0.into(),
            12.6.into(),
        ]);
        let s = plot_script(ExperimentId::Fig2c, &t, "fig2c.csv").unwrap();
        assert!(s.contains("splot 'fig2c.csv' using 4:5:"));

        assert!(plot_script(ExperimentId::OracleCheck, &t, "x.csv").is_none());
    }
}
