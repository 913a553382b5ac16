//! Job execution. Each job returns its output files in memory; the caller
//! writes them.

use layerspec_core::evolution::{evolve_exterior_l0, evolve_schrodinger, evolve_wave, fit_decay, DecayFit, EnergyTrace, ExteriorRun, FitWindow};
use layerspec_core::model::{speeds_monotone, LayeredBallDomain, ModeProblem, ProblemKind, RadialField, RadialGrid};
use layerspec_core::resolvent::{exterior_norm_sweep, full_norm_sweep, glancing_exponent, SweepPolicy, SweepRow};
use layerspec_core::spectral::{find_roots, FindOptions, Rect};
use layerspec_core::Complex;
use serde_json::json;

use crate::config::{DecayCompareJob, Equation, EvolveJob, EvolveTarget, GridKind, InitialData, Job, SweepSettings, WindowConfig};
use crate::output::{fmt_f64, json_bytes, CsvTable};
use crate::plot::{emit_plot_data, Series};
use crate::CliError;

pub struct JobResult {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
}

fn numerical<E: std::fmt::Display>(context: impl Into<String>) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Numerical { context: context.into(), message: e.to_string() }
}

fn policy(s: &SweepSettings) -> SweepPolicy {
    SweepPolicy { quadrature_n: s.quadrature_n, extra: s.ell_extra, max_extensions: s.max_extensions, tail: s.tail }
}

fn plot_files(series: &Series, style: &Option<String>) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    emit_plot_data(series, style.as_deref()).map_err(|e| CliError::Config(e.into()))
}

pub fn execute(job: &Job) -> Result<JobResult, CliError> {
    match job {
        Job::Validate(_, d) => validate(d),
        Job::Spectrum(j, d) => {
            let kind = ProblemKind::from_j(j.j).expect("checked at load");
            let b = j.search_box;
            let rect = Rect::new(b.re_min, b.re_max, b.im_min, b.im_max);
            let opts = FindOptions { newton_tol: j.newton_tol, residual_tol: j.residual_tol, ..FindOptions::default() };
            let reports = rayon_map(&j.ells, |&ell| {
                find_roots(d, ModeProblem::new(kind, ell), rect, &opts).map_err(numerical(format!("spectrum ℓ = {ell}")))
            })?;
            let mut t = CsvTable::new(&["ell", "j", "re_lambda", "im_lambda", "residual"]);
            let mut modes = Vec::new();
            let mut scatter = Vec::new();
            let mut total = 0;
            for (&ell, rep) in j.ells.iter().zip(&reports) {
                for r in &rep.roots {
                    t.row(vec![ell.to_string(), j.j.to_string(), fmt_f64(r.lambda.re), fmt_f64(r.lambda.im), fmt_f64(r.residual)]);
                    scatter.push((r.lambda.re, r.lambda.im));
                }
                total += rep.roots.len();
                modes.push(json!({
                    "ell": ell,
                    "j": j.j,
                    "winding": rep.winding,
                    "counts_consistent": rep.counts_consistent(),
                    "gap": rep.gap.is_finite().then_some(rep.gap),
                    "search_box": [rep.search_box.re_min, rep.search_box.re_max, rep.search_box.im_min, rep.search_box.im_max],
                    "roots": rep.roots.iter().map(|r| json!({
                        "lambda": [r.lambda.re, r.lambda.im],
                        "z": r.z.map(|z| [z.re, z.im]),
                        "residual": r.residual,
                    })).collect::<Vec<_>>(),
                }));
            }
            let mut files = vec![("spectrum.csv".to_string(), t.finish()), ("spectrum.json".to_string(), json_bytes(&json!({ "modes": modes })))];
            files.extend(plot_files(&Series::spectrum("spectrum", &scatter), &j.plot)?);
            Ok(JobResult { files, summary: format!("{total} roots over {} degrees", j.ells.len()) })
        }
        Job::Sweep(j, d) => {
            let kind = ProblemKind::from_j(j.j).expect("checked at load");
            let rows = full_norm_sweep(d, kind, &j.lambdas.values(), &policy(&j.settings)).map_err(numerical("sweep"))?;
            let mut t = CsvTable::new(&["j", "lambda", "norm", "lambda_pow_j_times_norm", "ell_argmax", "tail_ok", "ell_max", "stalled"]);
            for r in &rows {
                t.row(sweep_cells(j.j, r));
            }
            let pts: Vec<_> = rows.iter().map(|r| (r.lambda, r.lambda_pow_j_times_norm)).collect();
            let mut files = vec![("sweep.csv".to_string(), t.finish())];
            files.extend(plot_files(&Series::sweep("sweep", &pts), &j.plot)?);
            Ok(JobResult { files, summary: sweep_summary(&rows) })
        }
        Job::ExteriorSweep(j, e) => {
            let rows = exterior_norm_sweep(e, j.cutoff_radius, j.im_lambda, &j.lambdas.values(), &policy(&j.settings))
                .map_err(numerical("exterior sweep"))?;
            let mut t = CsvTable::new(&[
                "j", "lambda", "norm", "lambda_pow_j_times_norm", "ell_argmax", "tail_ok", "cutoff_radius", "im_lambda", "ell_max", "stalled",
            ]);
            for r in &rows {
                let mut cells = sweep_cells(1, r);
                let tail = cells.split_off(6);
                cells.extend([fmt_f64(j.cutoff_radius), fmt_f64(j.im_lambda)]);
                cells.extend(tail);
                t.row(cells);
            }
            let pts: Vec<_> = rows.iter().map(|r| (r.lambda, r.lambda_pow_j_times_norm)).collect();
            let mut files = vec![("exterior_sweep.csv".to_string(), t.finish())];
            files.extend(plot_files(&Series::sweep("exterior_sweep", &pts), &j.plot)?);
            Ok(JobResult { files, summary: sweep_summary(&rows) })
        }
        Job::Evolve(j, target) => evolve(j, target),
        Job::DecayCompare(j, m, r) => decay_compare(j, m, r),
        Job::DtnExponent(j) => {
            let fit = glancing_exponent(j.c, j.r, &j.lambdas.values()).map_err(numerical("glancing exponent"))?;
            let mut t = CsvTable::new(&["lambda", "ell_glancing", "decay"]);
            for &(l, lg, s) in &fit.samples {
                t.row(vec![fmt_f64(l), lg.to_string(), fmt_f64(s)]);
            }
            let pts: Vec<_> = fit.samples.iter().map(|&(l, _, s)| (l, s)).collect();
            let mut files = vec![
                ("dtn.csv".to_string(), t.finish()),
                ("dtn_fit.json".to_string(), json_bytes(&json!({ "slope": fit.slope, "c": j.c, "r": j.r }))),
            ];
            files.extend(plot_files(&Series::dtn("dtn", &pts), &j.plot)?);
            Ok(JobResult { files, summary: format!("glancing exponent {:.4}", fit.slope) })
        }
    }
}

/// Ordered parallel map that stops at the first error in input order.
fn rayon_map<A: Sync, B: Send>(items: &[A], f: impl Fn(&A) -> Result<B, CliError> + Sync + Send) -> Result<Vec<B>, CliError> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

fn sweep_cells(j: u8, r: &SweepRow<f64>) -> Vec<String> {
    vec![
        j.to_string(),
        fmt_f64(r.lambda),
        fmt_f64(r.norm),
        fmt_f64(r.lambda_pow_j_times_norm),
        r.ell_argmax.to_string(),
        r.tail_ok.to_string(),
        r.ell_max.to_string(),
        r.stalled.to_string(),
    ]
}

fn sweep_summary(rows: &[SweepRow<f64>]) -> String {
    let bad = rows.iter().filter(|r| !r.tail_ok).count();
    let peak = rows.iter().map(|r| r.lambda_pow_j_times_norm).fold(0.0, f64::max);
    format!("{} rows, max λ^j·norm {peak:.6}, {bad} rows with an unverified tail", rows.len())
}

fn validate(d: &LayeredBallDomain<f64>) -> Result<JobResult, CliError> {
    let info = json!({
        "domain": d.to_config(),
        "layers": d.n_layers(),
        "transit_time": d.transit_time(),
        "min_speed": d.min_speed(),
        "max_speed": d.max_speed(),
        "speeds_decrease_outward": speeds_monotone(d),
    });
    Ok(JobResult {
        files: vec![("domain.json".to_string(), json_bytes(&info))],
        summary: format!("valid domain with {} layers", d.n_layers()),
    })
}

fn grid(d: &LayeredBallDomain<f64>, kind: GridKind, dr: f64) -> RadialGrid<f64> {
    match kind {
        GridKind::Optical => RadialGrid::with_optical_spacing(d, dr),
        GridKind::Uniform => RadialGrid::with_spacing(d, dr),
    }
}

fn window(w: &Option<WindowConfig>) -> Option<FitWindow<f64>> {
    w.map(|w| FitWindow { start: w.start, end: w.end })
}

fn wave_run(
    d: &LayeredBallDomain<f64>,
    ell: usize,
    init: &InitialData,
    kind: GridKind,
    dr: f64,
    t_final: f64,
    dt: f64,
) -> Result<EnergyTrace<f64>, layerspec_core::evolution::EvolutionError> {
    let g = grid(d, kind, dr);
    let f0 = RadialField::from_fn(g.clone(), |r| Complex::new(init.eval(r), 0.0));
    let f1 = RadialField::zeros(g);
    Ok(evolve_wave(d, ell, (&f0, &f1), t_final, dt)?.trace)
}

fn trace_csv(tr: &EnergyTrace<f64>) -> Vec<u8> {
    let mut t = CsvTable::new(&["t", "energy", "flux"]);
    for k in 0..tr.len() {
        let flux = tr.boundary_flux.get(k).map(|&f| fmt_f64(f)).unwrap_or_default();
        t.row(vec![fmt_f64(tr.times[k]), fmt_f64(tr.energy[k]), flux]);
    }
    t.finish()
}

fn fit_json(f: &DecayFit<f64>) -> serde_json::Value {
    json!({
        "rate": f.rate,
        "r_squared": f.r_squared,
        "window_start": f.window_start,
        "window_end": f.window_end,
        "degenerate": f.degenerate,
    })
}

fn evolve(j: &EvolveJob, target: &EvolveTarget) -> Result<JobResult, CliError> {
    let trace = match (j.equation, target) {
        (Equation::Wave, EvolveTarget::Interior(d)) => {
            wave_run(d, j.ell, &j.initial, j.grid, j.dr, j.t_final, j.dt).map_err(numerical("wave evolution"))?
        }
        (Equation::Schrodinger, EvolveTarget::Interior(d)) => {
            let g = grid(d, j.grid, j.dr);
            let f0 = RadialField::from_fn(g, |r| Complex::new(j.initial.eval(r), 0.0));
            evolve_schrodinger(d, j.ell, &f0, j.t_final, j.dt).map_err(numerical("Schrödinger evolution"))?.trace
        }
        (Equation::Exterior, EvolveTarget::Exterior(e)) => {
            let run = ExteriorRun { r_k: j.r_k.unwrap(), r_big: j.r_big.unwrap(), dr: j.dr, dt: j.dt, t_final: j.t_final };
            let init = |r: f64| Complex::new(j.initial.eval(r), 0.0);
            let zero = |_r: f64| Complex::new(0.0, 0.0);
            evolve_exterior_l0(e, j.ell, (&init, &zero), &run).map_err(numerical("exterior evolution"))?
        }
        _ => unreachable!("target matches equation after load"),
    };
    let fit = fit_decay(&trace, window(&j.fit_window)).map_err(numerical("decay fit"))?;
    let mut files = vec![("trace.csv".to_string(), trace_csv(&trace)), ("fit.json".to_string(), json_bytes(&fit_json(&fit)))];
    files.extend(plot_files(&Series::trace("trace", &trace.times, &trace.energy), &j.plot)?);
    Ok(JobResult { files, summary: format!("{} steps, fitted rate {:.6} (r² {:.4})", trace.len(), fit.rate, fit.r_squared) })
}

fn decay_compare(j: &DecayCompareJob, mono: &LayeredBallDomain<f64>, rev: &LayeredBallDomain<f64>) -> Result<JobResult, CliError> {
    let run = |d: &LayeredBallDomain<f64>, what: &str| {
        let tr = wave_run(d, j.ell, &j.initial, j.grid, j.dr, j.t_final, j.dt).map_err(numerical(format!("{what} evolution")))?;
        let fit = fit_decay(&tr, window(&j.fit_window)).map_err(numerical(format!("{what} decay fit")))?;
        Ok::<_, CliError>((tr, fit))
    };
    let (m, r) = rayon::join(|| run(mono, "monotone"), || run(rev, "reversed"));
    let ((mt, mf), (rt, rf)) = (m?, r?);
    let ratio = mf.rate / rf.rate;
    let mut t = CsvTable::new(&["ell", "monotone_rate", "monotone_r_squared", "reversed_rate", "reversed_r_squared", "ratio"]);
    t.row(vec![j.ell.to_string(), fmt_f64(mf.rate), fmt_f64(mf.r_squared), fmt_f64(rf.rate), fmt_f64(rf.r_squared), fmt_f64(ratio)]);
    let mut files = vec![
        ("decay_compare.csv".to_string(), t.finish()),
        ("monotone_trace.csv".to_string(), trace_csv(&mt)),
        ("reversed_trace.csv".to_string(), trace_csv(&rt)),
    ];
    files.extend(plot_files(&Series::trace("monotone_trace", &mt.times, &mt.energy), &j.plot)?);
    files.extend(plot_files(&Series::trace("reversed_trace", &rt.times, &rt.energy), &j.plot)?);
    Ok(JobResult { files, summary: format!("monotone rate {:.6}, reversed rate {:.6}, ratio {ratio:.3}", mf.rate, rf.rate) })
}
