//! Plot-ready data files and plain gnuplot scripts. Nothing is rendered here.

use std::str::FromStr;

use thiserror::Error;

use crate::output::{fmt_f64, CsvTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlotError {
    #[error("unknown plot style {0:?} (expected lines, points or linespoints)")]
    UnknownStyle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    Lines,
    Points,
    LinesPoints,
}

impl FromStr for PlotStyle {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lines" => Ok(Self::Lines),
            "points" => Ok(Self::Points),
            "linespoints" => Ok(Self::LinesPoints),
            other => Err(PlotError::UnknownStyle(other.to_string())),
        }
    }
}

impl PlotStyle {
    fn gnuplot(self) -> &'static str {
        match self {
            Self::Lines => "lines",
            Self::Points => "points",
            Self::LinesPoints => "linespoints",
        }
    }
}

/// Two-column series ready for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub stem: String,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub points: Vec<(f64, f64)>,
    pub log_x: bool,
}

impl Series {
    /// `λ` against `λ^j·‖R‖`.
    pub fn sweep(stem: &str, rows: &[(f64, f64)]) -> Self {
        Self { stem: stem.into(), x_label: "lambda", y_label: "lambda_pow_j_times_norm", points: rows.to_vec(), log_x: false }
    }

    /// Roots as a scatter in the complex plane.
    pub fn spectrum(stem: &str, roots: &[(f64, f64)]) -> Self {
        Self { stem: stem.into(), x_label: "re_lambda", y_label: "im_lambda", points: roots.to_vec(), log_x: false }
    }

    /// `t` against `ln E(t)`.
    pub fn trace(stem: &str, times: &[f64], energy: &[f64]) -> Self {
        let points = times.iter().zip(energy).map(|(&t, &e)| (t, e.ln())).collect();
        Self { stem: stem.into(), x_label: "t", y_label: "log_energy", points, log_x: false }
    }

    /// `λ` against `ln s(λ)` on a log λ axis.
    pub fn dtn(stem: &str, samples: &[(f64, f64)]) -> Self {
        let points = samples.iter().map(|&(l, s)| (l, s.ln())).collect();
        Self { stem: stem.into(), x_label: "lambda", y_label: "log_decay", points, log_x: true }
    }
}

/// Data file `<stem>_plot.csv` plus, if a style is given, `<stem>.gp`.
pub fn emit_plot_data(series: &Series, style: Option<&str>) -> Result<Vec<(String, Vec<u8>)>, PlotError> {
    let style = style.map(str::parse::<PlotStyle>).transpose()?;
    let data_name = format!("{}_plot.csv", series.stem);
    let mut t = CsvTable::new(&[series.x_label, series.y_label]);
    for &(x, y) in &series.points {
        t.row(vec![fmt_f64(x), fmt_f64(y)]);
    }
    let mut files = vec![(data_name.clone(), t.finish())];
    if let Some(style) = style {
        let mut gp = String::new();
        gp.push_str("set datafile separator ','\n");
        gp.push_str("set terminal pngcairo size 900,600\n");
        gp.push_str(&format!("set output '{}.png'\n", series.stem));
        gp.push_str(&format!("set xlabel '{}'\nset ylabel '{}'\n", series.x_label, series.y_label));
        if series.log_x {
            gp.push_str("set logscale x\n");
        }
        gp.push_str("set key off\nset grid\n");
        gp.push_str(&format!("plot '{}' every ::1 using 1:2 with {}\n", data_name, style.gnuplot()));
        files.push((format!("{}.gp", series.stem), gp.into_bytes()));
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_only_without_style() {
        let s = Series::sweep("sweep", &[(1.0, 2.0), (3.0, 4.0)]);
        let files = emit_plot_data(&s, None).unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].0, "sweep_plot.csv");
        assert!(files[0].1.starts_with(b"lambda,lambda_pow_j_times_norm\r\n"));
    }

    #[test]
    fn script_names_data_and_style() {
        let s = Series::dtn("dtn", &[(50.0, 0.1), (100.0, 0.05)]);
        let files = emit_plot_data(&s, Some("linespoints")).unwrap();
        let gp = String::from_utf8(files[1].1.clone()).unwrap();
        assert_eq!(files[1].0, "dtn.gp");
        assert!(gp.contains("plot 'dtn_plot.csv' every ::1 using 1:2 with linespoints"));
        assert!(gp.contains("set logscale x"));
    }

    #[test]
    fn unknown_style_is_rejected() {
        let s = Series::spectrum("spectrum", &[]);
        assert_eq!(emit_plot_data(&s, Some("bars")), Err(PlotError::UnknownStyle("bars".into())));
    }
}
