//! Experiment orchestration: run the full pipeline per ε rung (sweepout →
//! relax → certify saddle → spectrum → diagnostics), persist everything,
//! and render reports.
//!
//! On-disk layout of a run directory:
//! - `rung_###_solution.acf1` — certified solutions;
//! - `report.csv` — one EnergyReport row per certified rung;
//! - `ladder.csv` — c_ε, index, masses and diagnostics counters per rung;
//! - `diagnostics.csv` — one row per check: `check,lhs,rhs,margin,pass`;
//! - `manifest.txt` — file inventory, wall times, pass/fail summary.
//!
//! All CSV content is deterministic for a fixed config and seed; wall
//! times live only in the manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::ExperimentConfig;
use crate::diagnostics::{
    de_giorgi_check, discrete_sweepout_extract, ladder_decay_report, lower_bound_certificate,
    vanishing_volume_check, volume_continuity_check,
};
use crate::energy::EnergyReport;
use crate::error::{AcError, Result};
use crate::io::{fmt_g17, write_acf1, write_csv};
use crate::ladder::continuation_ladder;
use crate::spectrum::lowest_eigenpairs;

/// One diagnostics row.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub rung: usize,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl CheckRow {
    fn csv(&self) -> Vec<String> {
        vec![
            format!("rung{}:{}", self.rung, self.check),
            fmt_g17(self.lhs),
            fmt_g17(self.rhs),
            fmt_g17(self.rhs - self.lhs),
            (self.pass as u8).to_string(),
        ]
    }
}

/// Per-rung record of a finished run.
#[derive(Debug, Clone)]
pub struct RungRecord {
    pub eps: f64,
    pub certified: bool,
    pub failure: Option<String>,
    pub solution_file: Option<String>,
    pub c_eps: f64,
    pub morse_index: Option<usize>,
    pub lambda: Vec<f64>,
    pub varifold_mass: f64,
    pub zero_set_measure: f64,
    pub diag_pass: usize,
    pub diag_total: usize,
    pub wall_seconds: f64,
}

/// Everything `report` needs to render a run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub out_dir: PathBuf,
    pub sigma: f64,
    pub rungs: Vec<RungRecord>,
    pub all_certified: bool,
    pub all_diagnostics_pass: bool,
}

impl RunManifest {
    pub fn pass(&self) -> bool {
        self.all_certified && self.all_diagnostics_pass
    }
}

/// Run the full pipeline described by the config, writing artifacts into
/// `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let domain = config.domain()?;
    let well = config.well()?;
    let profile = config.profile(&well)?;
    let spec = config.sweepout_spec();
    let params = config.solver_params();
    let sigma = well.sigma();

    let rungs = continuation_ladder(
        &domain,
        &spec,
        &well,
        &profile,
        &config.eps_ladder,
        config.delta_factor,
        &params,
    )?;

    let mut records: Vec<RungRecord> = Vec::with_capacity(rungs.len());
    let mut energy_rows: Vec<Vec<String>> = Vec::new();
    let mut check_rows: Vec<CheckRow> = Vec::new();
    let mut reports_for_decay: Vec<EnergyReport> = Vec::new();
    let mut zeros_for_decay: Vec<f64> = Vec::new();

    for (idx, rung) in rungs.iter().enumerate() {
        let t0 = Instant::now();
        match &rung.result {
            Err(msg) => {
                records.push(RungRecord {
                    eps: rung.eps,
                    certified: false,
                    failure: Some(msg.clone()),
                    solution_file: None,
                    c_eps: f64::NAN,
                    morse_index: None,
                    lambda: vec![],
                    varifold_mass: f64::NAN,
                    zero_set_measure: f64::NAN,
                    diag_pass: 0,
                    diag_total: 0,
                    wall_seconds: t0.elapsed().as_secs_f64(),
                });
            }
            Ok(s) => {
                let fname = format!("rung_{idx:03}_solution.acf1");
                write_acf1(&out_dir.join(&fname), &s.point.u, rung.eps)?;
                energy_rows.push(s.report.csv_row());
                reports_for_decay.push(s.report.clone());
                zeros_for_decay.push(s.zero_set_measure);

                let spectrum = lowest_eigenpairs(
                    &s.point.u,
                    &well,
                    rung.eps,
                    config.spectrum_k,
                    config.seed,
                )?;

                let mut pass = 0usize;
                let mut total = 0usize;
                let mut push = |row: CheckRow| {
                    total += 1;
                    if row.pass {
                        pass += 1;
                    }
                    check_rows.push(row);
                };

                // Saddle certification margin.
                push(CheckRow {
                    rung: idx,
                    check: "residual".into(),
                    lhs: s.point.residual,
                    rhs: params.saddle_tol(&domain),
                    pass: s.point.residual <= params.saddle_tol(&domain),
                });
                // Theorem-level index bound.
                push(CheckRow {
                    rung: idx,
                    check: "morse_index_le_1".into(),
                    lhs: spectrum.morse_index as f64,
                    rhs: 1.0,
                    pass: spectrum.morse_index <= 1,
                });
                // Mass comparison (exact algebraic inequality).
                let mass_gap = (s.report.total / (2.0 * sigma) - s.report.varifold_mass).abs();
                let mass_bound =
                    (s.report.discrepancy_l1 + s.report.equipartition_l1) / (2.0 * sigma);
                push(CheckRow {
                    rung: idx,
                    check: "mass_comparison".into(),
                    lhs: mass_gap,
                    rhs: mass_bound,
                    pass: mass_gap <= mass_bound * (1.0 + 1e-12) + 1e-14,
                });
                // De Giorgi on the certified saddle.
                match de_giorgi_check(&s.point.u, -0.5, 0.5) {
                    Ok(dg) => push(CheckRow {
                        rung: idx,
                        check: "de_giorgi".into(),
                        lhs: dg.lhs,
                        rhs: dg.rhs,
                        pass: dg.satisfied,
                    }),
                    Err(e) => push(CheckRow {
                        rung: idx,
                        check: format!("de_giorgi_unavailable({e})"),
                        lhs: f64::NAN,
                        rhs: f64::NAN,
                        pass: rung.eps > 0.25, // expected to apply once eps <= 0.25
                    }),
                }
                // Positive lower bound from the relaxed path.
                match lower_bound_certificate(&s.path, &well, 0.5) {
                    Ok(cert) => push(CheckRow {
                        rung: idx,
                        check: "lower_bound_positive".into(),
                        lhs: 0.0,
                        rhs: cert.value,
                        pass: cert.value > 0.0,
                    }),
                    Err(e) => push(CheckRow {
                        rung: idx,
                        check: format!("lower_bound_unavailable({e})"),
                        lhs: f64::NAN,
                        rhs: f64::NAN,
                        pass: false,
                    }),
                }
                // Vanishing transition volume at δ = 1/2.
                match vanishing_volume_check(&s.point.u, &well, rung.eps, 0.5, s.c_estimate) {
                    Ok(v) => push(CheckRow {
                        rung: idx,
                        check: "vanishing_volume".into(),
                        lhs: v.measured,
                        rhs: v.bound,
                        pass: v.satisfied,
                    }),
                    Err(e) => push(CheckRow {
                        rung: idx,
                        check: format!("vanishing_volume_unavailable({e})"),
                        lhs: f64::NAN,
                        rhs: f64::NAN,
                        pass: false,
                    }),
                }
                // Volume continuity along the relaxed path.
                match volume_continuity_check(&s.path, &well, 0.0, 0.5, s.c_estimate) {
                    Ok(v) => push(CheckRow {
                        rung: idx,
                        check: "volume_continuity".into(),
                        lhs: v.max_volume,
                        rhs: v.bound,
                        pass: v.satisfied,
                    }),
                    Err(e) => push(CheckRow {
                        rung: idx,
                        check: format!("volume_continuity_unavailable({e})"),
                        lhs: f64::NAN,
                        rhs: f64::NAN,
                        pass: false,
                    }),
                }
                // Discrete sweepout extraction.
                match discrete_sweepout_extract(
                    &s.path,
                    &well,
                    config.diag_delta_tilde,
                    config.diag_k,
                    s.c_estimate,
                ) {
                    Ok(swo) => {
                        let max_mass = swo.masses.iter().cloned().fold(0.0, f64::max);
                        push(CheckRow {
                            rung: idx,
                            check: "discrete_sweepout_mass".into(),
                            lhs: max_mass,
                            rhs: swo.mass_bound,
                            pass: max_mass < swo.mass_bound,
                        });
                        let max_vol = swo.neighbor_volumes.iter().cloned().fold(0.0, f64::max);
                        push(CheckRow {
                            rung: idx,
                            check: "discrete_sweepout_volume".into(),
                            lhs: max_vol,
                            rhs: swo.neighbor_bound,
                            pass: max_vol <= swo.neighbor_bound,
                        });
                    }
                    Err(AcError::SweepoutClauseFailed { clause, lhs, rhs }) => push(CheckRow {
                        rung: idx,
                        check: format!("discrete_sweepout{clause}"),
                        lhs,
                        rhs,
                        pass: false,
                    }),
                    Err(e) => push(CheckRow {
                        rung: idx,
                        check: format!("discrete_sweepout_unavailable({e})"),
                        lhs: f64::NAN,
                        rhs: f64::NAN,
                        pass: false,
                    }),
                }

                records.push(RungRecord {
                    eps: rung.eps,
                    certified: true,
                    failure: None,
                    solution_file: Some(fname),
                    c_eps: s.c_estimate,
                    morse_index: Some(spectrum.morse_index),
                    lambda: spectrum.eigenvalues.clone(),
                    varifold_mass: s.point.varifold_mass,
                    zero_set_measure: s.zero_set_measure,
                    diag_pass: pass,
                    diag_total: total,
                    wall_seconds: t0.elapsed().as_secs_f64(),
                });
            }
        }
    }

    write_csv(
        &out_dir.join("report.csv"),
        EnergyReport::CSV_HEADER,
        &energy_rows,
    )?;
    let ladder_rows: Vec<Vec<String>> = records
        .iter()
        .filter(|r| r.certified)
        .map(|r| {
            vec![
                fmt_g17(r.eps),
                fmt_g17(r.c_eps),
                fmt_g17(r.c_eps / (2.0 * sigma)),
                r.morse_index.map(|i| i.to_string()).unwrap_or_default(),
                fmt_g17(r.lambda.first().copied().unwrap_or(f64::NAN)),
                fmt_g17(r.lambda.get(1).copied().unwrap_or(f64::NAN)),
                fmt_g17(r.varifold_mass),
                fmt_g17(r.zero_set_measure),
                r.diag_pass.to_string(),
                r.diag_total.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join("ladder.csv"),
        "eps,c_eps,c_over_2sigma,index,lambda_0,lambda_1,varifold_mass,zero_set_measure,diag_pass,diag_total",
        &ladder_rows,
    )?;
    write_csv(
        &out_dir.join("diagnostics.csv"),
        "check,lhs,rhs,margin,pass",
        &check_rows.iter().map(|c| c.csv()).collect::<Vec<_>>(),
    )?;
    let decay = ladder_decay_report(&reports_for_decay, &zeros_for_decay, sigma);
    write_csv(
        &out_dir.join("decay.csv"),
        crate::diagnostics::DecayReport::CSV_HEADER,
        &decay.csv_rows(),
    )?;

    let manifest = RunManifest {
        out_dir: out_dir.to_path_buf(),
        sigma,
        all_certified: records.iter().all(|r| r.certified),
        all_diagnostics_pass: check_rows.iter().all(|c| c.pass),
        rungs: records,
    };
    write_manifest(&manifest, out_dir)?;
    Ok(manifest)
}

fn write_manifest(m: &RunManifest, out_dir: &Path) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("sigma {}\n", fmt_g17(m.sigma)));
    text.push_str(&format!("rungs {}\n", m.rungs.len()));
    text.push_str(&format!("all_certified {}\n", m.all_certified as u8));
    text.push_str(&format!(
        "all_diagnostics_pass {}\n",
        m.all_diagnostics_pass as u8
    ));
    for (i, r) in m.rungs.iter().enumerate() {
        text.push_str(&format!("rung.{i}.eps {}\n", fmt_g17(r.eps)));
        text.push_str(&format!("rung.{i}.certified {}\n", r.certified as u8));
        if let Some(f) = &r.failure {
            text.push_str(&format!("rung.{i}.failure {}\n", f.replace('\n', " ")));
        }
        if let Some(f) = &r.solution_file {
            text.push_str(&format!("rung.{i}.file {f}\n"));
        }
        if r.certified {
            text.push_str(&format!("rung.{i}.c_eps {}\n", fmt_g17(r.c_eps)));
            text.push_str(&format!(
                "rung.{i}.index {}\n",
                r.morse_index.unwrap_or(usize::MAX)
            ));
            text.push_str(&format!(
                "rung.{i}.varifold_mass {}\n",
                fmt_g17(r.varifold_mass)
            ));
            text.push_str(&format!(
                "rung.{i}.zero_set_measure {}\n",
                fmt_g17(r.zero_set_measure)
            ));
            text.push_str(&format!(
                "rung.{i}.diag {}/{}\n",
                r.diag_pass, r.diag_total
            ));
        }
        text.push_str(&format!(
            "rung.{i}.wall_seconds {:.3}\n",
            r.wall_seconds
        ));
    }
    std::fs::write(out_dir.join("manifest.txt"), text)?;
    Ok(())
}

/// Render the human-readable summary of a finished run directory, with a
/// Richardson-extrapolated c_ε/(2σ) limit when three or more rungs
/// certified. Pure function of the on-disk artifacts.
pub fn report(out_dir: &Path) -> Result<String> {
    let required = ["manifest.txt", "ladder.csv", "report.csv", "diagnostics.csv"];
    let missing: Vec<String> = required
        .iter()
        .filter(|f| !out_dir.join(f).exists())
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(AcError::MissingFiles(missing));
    }
    let manifest_text = std::fs::read_to_string(out_dir.join("manifest.txt"))?;
    let ladder_text = std::fs::read_to_string(out_dir.join("ladder.csv"))?;

    // Referenced solution files must exist and parse.
    for line in manifest_text.lines() {
        if let Some(rest) = line.split_once(' ').filter(|(k, _)| k.ends_with(".file")) {
            let path = out_dir.join(rest.1);
            if !path.exists() {
                return Err(AcError::MissingFiles(vec![rest.1.to_string()]));
            }
            crate::io::read_acf1(&path)?;
        }
    }

    let mut rows: Vec<(f64, f64, String, f64, f64, String)> = Vec::new();
    for (i, line) in ladder_text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 10 {
            return Err(AcError::ParseFormat {
                file: "ladder.csv".into(),
                line: i + 1,
                message: "expected 10 columns".into(),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| AcError::ParseFormat {
                file: "ladder.csv".into(),
                line: i + 1,
                message: format!("bad number `{s}`"),
            })
        };
        rows.push((
            parse(cells[0])?,
            parse(cells[2])?,
            cells[3].to_string(),
            parse(cells[6])?,
            parse(cells[7])?,
            format!("{}/{}", cells[8], cells[9]),
        ));
    }

    let mut out = String::new();
    out.push_str("eps  c_eps/(2*sigma)  index  varifold_mass  zero_set  diagnostics\n");
    for (eps, c2s, index, mass, zero, diag) in &rows {
        out.push_str(&format!(
            "{eps:<10.6} {c2s:<16.10} {index:<6} {mass:<14.8} {zero:<9.4} {diag}\n"
        ));
    }
    if rows.len() >= 3 {
        let v: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let m = v.len();
        let (v1, v2, v3) = (v[m - 3], v[m - 2], v[m - 1]);
        let limit = richardson(v1, v2, v3);
        out.push_str(&format!(
            "richardson limit of c_eps/(2*sigma): {limit:.10}\n"
        ));
    }
    for line in manifest_text.lines() {
        if line.starts_with("all_certified") || line.starts_with("all_diagnostics_pass") {
            out.push_str(line);
            out.push('\n');
        }
    }
    Ok(out)
}

/// Richardson extrapolation from the last three rungs of a halving ladder:
/// estimate the order from the difference ratio, then extrapolate. Falls
/// back to the last value when the differences do not behave.
fn richardson(v1: f64, v2: f64, v3: f64) -> f64 {
    let d1 = v2 - v1;
    let d2 = v3 - v2;
    if d2 == 0.0 || d1 == 0.0 || (d1 / d2) <= 1.0 {
        return v3;
    }
    let rate = d1 / d2; // ≈ 2^p
    v3 + d2 / (rate - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_round_trips_and_reports() {
        let cfg = ExperimentConfig::parse(
            "domain.dim = 1\ndomain.lengths = 20\ndomain.grid = 256\n\
             eps.ladder = 1.0, 0.5\nsolver.max_iter = 600\nseed = 3",
        )
        .unwrap();
        let dir = std::env::temp_dir().join("ac_core_experiment_test");
        let _ = std::fs::remove_dir_all(&dir);
        let manifest = run_experiment(&cfg, &dir).unwrap();
        assert!(manifest.all_certified, "{:?}", manifest.rungs);
        assert!(manifest.pass(), "diagnostics failed");
        let text = report(&dir).unwrap();
        assert!(text.contains("eps"), "{text}");
        // Single- and double-rung reports carry no extrapolation line.
        assert!(!text.contains("richardson"));
        // Determinism: a second run reproduces the CSVs byte-identically.
        let dir2 = std::env::temp_dir().join("ac_core_experiment_test_2");
        let _ = std::fs::remove_dir_all(&dir2);
        run_experiment(&cfg, &dir2).unwrap();
        for f in ["report.csv", "ladder.csv", "diagnostics.csv", "decay.csv"] {
            let a = std::fs::read(dir.join(f)).unwrap();
            let b = std::fs::read(dir2.join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between runs");
        }
        let _ = std::fs::remove_dir_all(&dir);
        let _ = std::fs::remove_dir_all(&dir2);
    }

    #[test]
    fn report_lists_missing_files() {
        let dir = std::env::temp_dir().join("ac_core_missing_report");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        match report(&dir) {
            Err(AcError::MissingFiles(files)) => assert!(!files.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn empty_ladder_is_a_config_error() {
        assert!(ExperimentConfig::parse("eps.ladder =").is_err());
    }
}
