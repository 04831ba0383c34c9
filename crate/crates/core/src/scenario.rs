//! Command runners: each takes a validated configuration and an output
//! directory, writes CSV/JSON artefacts and returns a JSON summary.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    jarzynski_from_histogram, jarzynski_from_samples, l1_with_error, significant_decreases, Comparison, Distance,
    JarzynskiReport, Method,
};
use crate::classical::classical_free_energy_difference;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::output::{read_histogram_csv, Output};
use crate::quantum::{quantum_jarzynski, write_spectra, QuenchSpectra};
use crate::sampler::derive_seed;
use crate::spectra::WorkHistogram;
use crate::study::{quantum_basis, quantum_spectra, SemiclassicalRun, Study, TAG_PILOT};

/// Transition probabilities below this are left out of the CSV export (the
/// binary container keeps all of them).
const TRANSITION_CSV_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Quantum and semiclassical distributions at four temperatures, `hbar = 1`.
    Fig2,
    /// Jarzynski temperature sweep.
    Fig3,
    /// Classical limit: `beta = 2^-12`, four values of `hbar`.
    Fig4,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "fig2" => Ok(Scenario::Fig2),
            "fig3" => Ok(Scenario::Fig3),
            "fig4" => Ok(Scenario::Fig4),
            other => Err(Error::range("scenario", format!("unknown scenario `{other}`"))),
        }
    }

    /// The temperatures and Planck constants the scenario prescribes.
    pub fn apply(self, cfg: &RunConfig) -> RunConfig {
        let pow2 = |e: &[i32]| e.iter().map(|k| 2f64.powi(*k)).collect::<Vec<_>>();
        let mut out = cfg.clone();
        out.scenario = Some(self.name().into());
        match self {
            Scenario::Fig2 => {
                out.betas = pow2(&[-6, -8, -10, -12]);
                out.hbars = vec![1.0];
            }
            Scenario::Fig3 => {
                out.betas = pow2(&[-7, -8, -9, -10, -11, -12, -13]);
                out.hbars = vec![1.0];
            }
            Scenario::Fig4 => {
                out.betas = pow2(&[-12]);
                out.hbars = vec![1.0, 0.5, 0.1, 0.01];
            }
        }
        out
    }
}

/// `beta` or `hbar` as it appears in file names.
fn label(x: f64) -> String {
    format!("{x}")
}

fn sc_name(kind: &str, beta: f64, hbar: f64) -> String {
    format!("semiclassical_{kind}_beta{}_hbar{}.csv", label(beta), label(hbar))
}

#[derive(Serialize)]
struct HistogramMeta {
    beta: f64,
    hbar: Option<f64>,
    seed: Option<u64>,
    n_samples: usize,
    n_failed: usize,
    total_mass: f64,
    mean_w: f64,
    imag_residue: f64,
}

fn check_histogram(out: &mut Output, what: &str, hist: &WorkHistogram) -> Result<()> {
    if (hist.total_mass - 1.0).abs() > 1e-6 {
        return Err(Error::range("total_mass", format!("{what}: mass {} is not 1", hist.total_mass)));
    }
    if let Err(e) = hist.check_invariants() {
        out.warn(format!("{what}: {e}"));
    }
    Ok(())
}

fn semiclassical_run(
    study: &Study,
    cfg: &RunConfig,
    out: &mut Output,
    beta: f64,
    hbar: f64,
) -> Result<SemiclassicalRun> {
    log::info!("semiclassical run: beta = {beta}, hbar = {hbar}");
    let run = study.semiclassical(beta, hbar, cfg.semiclassical_samples)?;
    run.g.check_invariants()?;
    out.record_seed(format!("semiclassical beta={} hbar={}", label(beta), label(hbar)), run.seed);
    out.csv(&sc_name("g", beta, hbar), |w| run.g.write_csv(w))?;
    out.histogram(&sc_name("w", beta, hbar), &run.hist)?;
    check_histogram(out, &format!("semiclassical beta={beta} hbar={hbar}"), &run.hist)?;
    Ok(run)
}

fn sc_meta(run: &SemiclassicalRun) -> HistogramMeta {
    HistogramMeta {
        beta: run.beta,
        hbar: Some(run.hbar),
        seed: Some(run.seed),
        n_samples: run.g.n_samples,
        n_failed: run.g.n_failed,
        total_mass: run.hist.total_mass,
        mean_w: run.hist.mean(),
        imag_residue: run.hist.imag_residue,
    }
}

fn study(cfg: &RunConfig, out: &mut Output) -> Result<Study> {
    out.record_seed("pilot", derive_seed(cfg.seed, TAG_PILOT));
    Study::from_config(cfg)
}

fn grid_json(study: &Study) -> Value {
    json!({
        "du": study.grid.du,
        "half_len": study.grid.half_len,
        "w_origin": study.grid.w_origin,
        "w_step": study.grid.w_step(),
        "w_bins": study.grid.w_len(),
        "broadening": study.broadening,
    })
}

pub fn run_semiclassical(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    let study = study(cfg, out)?;
    let mut runs = Vec::new();
    for &beta in &cfg.betas {
        for &hbar in &cfg.hbars {
            runs.push(sc_meta(&semiclassical_run(&study, cfg, out, beta, hbar)?));
        }
    }
    let summary = json!({ "grid": grid_json(&study), "runs": runs });
    out.json("semiclassical.json", &summary)?;
    Ok(summary)
}

struct ClassicalResult {
    hist: WorkHistogram,
    report: JarzynskiReport,
}

fn classical_run(study: &Study, cfg: &RunConfig, out: &mut Output, beta: f64) -> Result<ClassicalResult> {
    log::info!("classical run: beta = {beta}");
    let run = study.classical(beta, cfg.classical_samples)?;
    out.record_seed(format!("classical beta={}", label(beta)), run.sample.seed);
    out.histogram(&format!("classical_w_beta{}.csv", label(beta)), &run.hist)?;
    check_histogram(out, &format!("classical beta={beta}"), &run.hist)?;
    let reference = classical_free_energy_difference(&study.geom, &study.pot, beta)?;
    let report = jarzynski_from_samples(&run.sample.values, beta)?.report(beta, reference, Method::ClassicalMc);
    Ok(ClassicalResult { hist: run.hist, report })
}

pub fn run_classical(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    let study = study(cfg, out)?;
    let mut runs = Vec::new();
    for &beta in &cfg.betas {
        let r = classical_run(&study, cfg, out, beta)?;
        runs.push(json!({
            "beta": beta,
            "n_samples": cfg.classical_samples,
            "total_mass": r.hist.total_mass,
            "mean_w": r.hist.mean(),
            "jarzynski": r.report,
        }));
    }
    let summary = json!({ "grid": grid_json(&study), "runs": runs });
    out.json("classical.json", &summary)?;
    Ok(summary)
}

fn spectra_for(cfg: &RunConfig, study: &Study, out: &mut Output, hbar: f64) -> Result<QuenchSpectra> {
    let hottest = cfg.betas.iter().cloned().fold(f64::INFINITY, f64::min);
    let basis = quantum_basis(
        &study.geom,
        hbar,
        hottest,
        cfg.quantum_grid_spacing,
        cfg.quantum_states,
        cfg.quantum_max_sites,
    )?;
    log::info!(
        "quantum basis: hbar = {hbar}, h = {:.5}, {} sites, {} initial / {} final states",
        basis.grid.h,
        basis.grid.len(),
        basis.n_keep,
        basis.n_final
    );
    let spectra = quantum_spectra(&basis, &study.pot, hbar)?;
    let stem = format!("quantum_hbar{}", label(hbar));
    let mut buf = Vec::new();
    write_spectra(&spectra, &mut buf)?;
    out.bytes(&format!("{stem}.chws"), &buf)?;
    out.csv(&format!("{stem}_levels.csv"), |w| spectra.write_levels_csv(w))?;
    out.csv(&format!("{stem}_transitions.csv"), |w| {
        spectra.write_transitions_csv(w, TRANSITION_CSV_THRESHOLD)
    })?;
    Ok(spectra)
}

/// Quantum histogram at `beta`, or `None` (with a warning) when the basis
/// is too small for that temperature.
fn quantum_at(
    study: &Study,
    spectra: &QuenchSpectra,
    out: &mut Output,
    beta: f64,
) -> Result<Option<(WorkHistogram, JarzynskiReport)>> {
    match study.quantum(spectra, beta) {
        Ok(hist) => {
            let name = format!("quantum_w_beta{}_hbar{}.csv", label(beta), label(spectra.hbar));
            out.histogram(&name, &hist)?;
            check_histogram(out, &format!("quantum beta={beta}"), &hist)?;
            let j = quantum_jarzynski(spectra, beta)?;
            let report = JarzynskiReport {
                beta,
                delta_f_estimate: j.delta_f_from_work(),
                delta_f_reference: j.delta_f(),
                stderr: 0.0,
                method: Method::Quantum,
            };
            Ok(Some((hist, report)))
        }
        Err(Error::TruncationDominates { weight, beta }) => {
            out.warn(format!(
                "quantum reference skipped at beta = {beta}: the highest tenth of the {} retained \
                 states carries {:.2}% of the Boltzmann weight, so the basis is too small for this \
                 temperature (at such temperatures very many levels contribute, beyond what a \
                 desk-scale diagonalisation can hold)",
                spectra.n_states,
                100.0 * weight
            ));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

pub fn run_quantum(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    let study = study(cfg, out)?;
    let mut runs = Vec::new();
    for &hbar in &cfg.hbars {
        let spectra = spectra_for(cfg, &study, out, hbar)?;
        for &beta in &cfg.betas {
            let entry = match quantum_at(&study, &spectra, out, beta)? {
                Some((hist, report)) => json!({
                    "beta": beta, "hbar": hbar, "total_mass": hist.total_mass,
                    "mean_w": hist.mean(), "jarzynski": report,
                }),
                None => json!({ "beta": beta, "hbar": hbar, "truncated": true }),
            };
            runs.push(entry);
        }
        runs.push(json!({
            "hbar": hbar, "grid_h": spectra.grid_h, "sites": spectra.n_sites,
            "initial_states": spectra.n_states, "final_states": spectra.n_final(),
        }));
    }
    let summary = json!({ "grid": grid_json(&study), "runs": runs });
    out.json("quantum.json", &summary)?;
    Ok(summary)
}

fn jarzynski_table(out: &mut Output, name: &str, rows: &[(Option<f64>, JarzynskiReport)]) -> Result<()> {
    out.csv(name, |w| {
        writeln!(w, "beta,method,hbar,delta_f_estimate,delta_f_reference,stderr")?;
        for (hbar, r) in rows {
            let method = serde_json::to_value(r.method).expect("enum serialises");
            let hbar = hbar.map(label).unwrap_or_default();
            writeln!(
                w,
                "{:e},{},{},{:e},{:e},{:e}",
                r.beta,
                method.as_str().unwrap_or_default(),
                hbar,
                r.delta_f_estimate,
                r.delta_f_reference,
                r.stderr
            )?;
        }
        Ok(())
    })?;
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &mut Output, table: &str, summary_name: &str) -> Result<Value> {
    let study = study(cfg, out)?;
    let mut rows: Vec<(Option<f64>, JarzynskiReport)> = Vec::new();
    for &beta in &cfg.betas {
        let classical = classical_run(&study, cfg, out, beta)?;
        let reference = classical.report.delta_f_reference;
        rows.push((None, classical.report));
        for &hbar in &cfg.hbars {
            let run = semiclassical_run(&study, cfg, out, beta, hbar)?;
            let report = jarzynski_from_histogram(&run.hist, beta)?.report(beta, reference, Method::Semiclassical);
            rows.push((Some(hbar), report));
        }
    }
    jarzynski_table(out, table, &rows)?;
    let entries: Vec<Value> = rows
        .iter()
        .map(|(hbar, r)| json!({ "hbar": hbar, "report": r, "deviation": r.deviation() }))
        .collect();
    let summary = json!({ "grid": grid_json(&study), "jarzynski": entries });
    out.json(summary_name, &summary)?;
    Ok(summary)
}

pub fn run_jarzynski(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    sweep(cfg, out, "jarzynski.csv", "jarzynski.json")
}

/// L1 distance between two histogram CSVs. Bins are treated as independent
/// when combining their error columns.
pub fn run_compare(a: &Path, b: &Path, out: &mut Output) -> Result<Value> {
    let ha = read_histogram_csv(a)?;
    let hb = read_histogram_csv(b)?;
    let l1 = crate::analysis::l1_distance(&ha, &hb)?;
    let var: f64 = ha.error.iter().chain(&hb.error).map(|e| e * e).sum();
    let summary = json!({
        "a": a.display().to_string(),
        "b": b.display().to_string(),
        "l1": l1,
        "l1_stderr": var.sqrt() * ha.bin_width,
        "mean_w_a": ha.mean(),
        "mean_w_b": hb.mean(),
        "total_mass_a": ha.total_mass,
        "total_mass_b": hb.total_mass,
    });
    out.json("comparison.json", &summary)?;
    Ok(summary)
}

fn fig2(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    let study = study(cfg, out)?;
    let mut comparisons = Vec::new();
    for &hbar in &cfg.hbars {
        let spectra = spectra_for(cfg, &study, out, hbar)?;
        for &beta in &cfg.betas {
            let sc = semiclassical_run(&study, cfg, out, beta, hbar)?;
            if let Some((q, _)) = quantum_at(&study, &spectra, out, beta)? {
                let d = l1_with_error(&q, &sc.hist)?;
                comparisons.push(Comparison {
                    a: "quantum".into(),
                    b: "semiclassical".into(),
                    beta,
                    hbar: Some(hbar),
                    l1: d.value,
                    l1_stderr: d.stderr,
                });
            }
        }
    }
    let summary = json!({ "grid": grid_json(&study), "comparisons": comparisons, "warnings": out.warnings() });
    out.json("fig2_report.json", &summary)?;
    Ok(summary)
}

fn fig4(cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    let study = study(cfg, out)?;
    let mut comparisons = Vec::new();
    for &beta in &cfg.betas {
        let classical = classical_run(&study, cfg, out, beta)?;
        let mut series = Vec::new();
        for &hbar in &cfg.hbars {
            let sc = semiclassical_run(&study, cfg, out, beta, hbar)?;
            let d = l1_with_error(&sc.hist, &classical.hist)?;
            series.push(d);
            comparisons.push(Comparison {
                a: "semiclassical".into(),
                b: "classical".into(),
                beta,
                hbar: Some(hbar),
                l1: d.value,
                l1_stderr: d.stderr,
            });
        }
        let decreasing = significant_decreases(&series, 3.0);
        comparisons_note(out, &cfg.hbars, &series, &decreasing);
    }
    let summary = json!({ "grid": grid_json(&study), "comparisons": comparisons, "warnings": out.warnings() });
    out.json("fig4_report.json", &summary)?;
    Ok(summary)
}

fn comparisons_note(out: &mut Output, hbars: &[f64], series: &[Distance], decreasing: &[bool]) {
    for (i, ok) in decreasing.iter().enumerate() {
        if !ok {
            out.warn(format!(
                "L1 to the classical distribution does not drop significantly from hbar = {} ({:.4} +- {:.4}) \
                 to hbar = {} ({:.4} +- {:.4})",
                hbars[i],
                series[i].value,
                series[i].stderr,
                hbars[i + 1],
                series[i + 1].value,
                series[i + 1].stderr
            ));
        }
    }
}

/// Runs a scenario on a configuration that already has the scenario's
/// temperatures and Planck constants applied (see [`Scenario::apply`]).
pub fn run_scenario(scenario: Scenario, cfg: &RunConfig, out: &mut Output) -> Result<Value> {
    match scenario {
        Scenario::Fig2 => fig2(cfg, out),
        Scenario::Fig3 => sweep(cfg, out, "fig3_jarzynski.csv", "fig3_report.json"),
        Scenario::Fig4 => fig4(cfg, out),
    }
}
