use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use soliton_core::asymptotics::{decomposition_report, phase_shifts};
use soliton_core::evolution::{evolve, EvolutionKind, EvolutionSpec};
use soliton_core::hierarchy::{dual_l, lax_l, sumrule, weighted_q, Method};
use soliton_core::verify::{verify, Bound, Scenario};
use soliton_core::{build_state, SolitonState};

use crate::config::{Format, Resolved};
use crate::error::CliError;
use crate::output::{Frame, GridMeta, Meta, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FamilyArg {
    Lax,
    Dual,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Spectral,
    Recursive,
    ClosedForm,
}

fn kind_parts(kind: &EvolutionKind) -> (&'static str, Option<usize>) {
    match kind {
        EvolutionKind::Lax(m) => ("lax", Some(*m)),
        EvolutionKind::Dual(m) => ("dual", Some(*m)),
        EvolutionKind::Custom(_) => ("custom", None),
    }
}

fn meta(res: &Resolved, st: &SolitonState) -> Meta {
    let (kind, m) = kind_parts(&res.kind);
    Meta {
        gammas: res.spectrum.gammas().to_vec(),
        norm_constants: res.spectrum.norm_constants().to_vec(),
        alphas: res.alphas.clone(),
        kind: kind.to_string(),
        m,
        t: st.time(),
        grid: st.grid().into(),
    }
}

fn state_frame(res: &Resolved, st: &SolitonState) -> Frame {
    let mut f = Frame::new(Some(meta(res, st)));
    f.push("x", st.grid().xs().collect());
    f.push("U", st.u().values().to_vec());
    for (k, p) in st.psis().iter().enumerate() {
        f.push(format!("psi_{}", k + 1), p.values().to_vec());
    }
    f.push("W", st.w().values().to_vec());
    f.push("xi", st.xi().values().to_vec());
    f
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("cannot create {}", dir.display())))
}

fn single_time(res: &Resolved, command: &str) -> Result<f64, CliError> {
    match res.times.as_slice() {
        [t] => Ok(*t),
        _ => Err(CliError::Config(format!(
            "field `times`: `{command}` takes a single time, got {}; use `evolve` for several",
            res.times.len()
        ))),
    }
}

fn state_at(res: &Resolved, t: f64) -> Result<SolitonState, CliError> {
    let grid = res.grid_for(&[t])?;
    Ok(build_state(&res.spectrum, &res.alphas, t, &grid)?)
}

fn announce(out: &mut dyn Write, path: &Path) -> Result<(), CliError> {
    writeln!(out, "{}", path.display()).map_err(CliError::io("stdout"))
}

pub fn construct(res: &Resolved, out: &mut dyn Write) -> Result<(), CliError> {
    let t = single_time(res, "construct")?;
    let st = state_at(res, t)?;
    create_dir(&res.out_dir)?;
    let path = res.out_dir.join(format!("construct.{}", res.format.extension()));
    state_frame(res, &st).write(&path, res.format)?;
    announce(out, &path)
}

#[derive(Serialize)]
struct ManifestFrame {
    index: usize,
    t: f64,
    file: String,
}

#[derive(Serialize)]
struct Manifest {
    gammas: Vec<f64>,
    norm_constants: Vec<f64>,
    alphas: Vec<f64>,
    kind: String,
    m: Option<usize>,
    grid: GridMeta,
    format: &'static str,
    columns: Vec<String>,
    frames: Vec<ManifestFrame>,
}

pub fn frame_file_name(index: usize, format: Format) -> String {
    format!("frame_{index:04}.{}", format.extension())
}

pub fn evolve_frames(res: &Resolved, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = res.grid_for(&res.times)?;
    let spec = EvolutionSpec::new(res.kind.clone(), res.times.clone())?;
    let frames = evolve(&res.spectrum, &spec, &grid)?;
    create_dir(&res.out_dir)?;
    let mut entries = Vec::with_capacity(frames.states.len());
    let mut columns = Vec::new();
    for (i, st) in frames.states.iter().enumerate() {
        let file = frame_file_name(i, res.format);
        let frame = state_frame(res, st);
        let path = res.out_dir.join(&file);
        frame.write(&path, res.format)?;
        announce(out, &path)?;
        columns = frame.columns;
        entries.push(ManifestFrame { index: i, t: st.time(), file });
    }
    let (kind, m) = kind_parts(&res.kind);
    let manifest = Manifest {
        gammas: res.spectrum.gammas().to_vec(),
        norm_constants: res.spectrum.norm_constants().to_vec(),
        alphas: res.alphas.clone(),
        kind: kind.to_string(),
        m,
        grid: (&grid).into(),
        format: res.format.extension(),
        columns,
        frames: entries,
    };
    let path = manifest_path(&res.out_dir);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io {
        context: "manifest".into(),
        source: e.into(),
    })?;
    std::fs::write(&path, text + "\n").map_err(CliError::io(format!("cannot write {}", path.display())))?;
    announce(out, &path)
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

pub fn sumrules(res: &Resolved, max_index: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let mut table = Table::new(vec!["t", "j", "integral", "analytic", "rel_error", "closed_form_integral"]);
    for &t in &res.times {
        let st = state_at(res, t)?;
        for j in 0..=max_index {
            let r = sumrule(&st, j)?;
            table.push(vec![
                t.into(),
                j.into(),
                r.integral_value.into(),
                r.analytic_value.into(),
                r.rel_error.into(),
                r.closed_form_integral.into(),
            ]);
        }
    }
    table.render(res.format, out).map_err(CliError::io("stdout"))
}

pub fn hierarchy(
    res: &Resolved,
    family: FamilyArg,
    max_index: usize,
    method: MethodArg,
    betas: Option<&[f64]>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let t = single_time(res, "hierarchy")?;
    let method = match method {
        MethodArg::Spectral => Method::Spectral,
        MethodArg::Recursive => Method::Recursive,
        MethodArg::ClosedForm => Method::ClosedForm,
    };
    if family != FamilyArg::Lax && method != Method::Spectral {
        return Err(CliError::Config(
            "field `method`: only the lax family has recursive and closed-form methods".into(),
        ));
    }
    let st = state_at(res, t)?;
    let ones = vec![1.0; st.len()];
    let betas = betas.unwrap_or(&ones);
    let mut frame = Frame::new(Some(meta(res, &st)));
    frame.push("x", st.grid().xs().collect());
    for j in 0..=max_index {
        let (name, f) = match family {
            FamilyArg::Lax => (format!("L_{j}"), lax_l(&st, j, method)?),
            FamilyArg::Dual => (format!("Lbar_{j}"), dual_l(&st, j)?),
            FamilyArg::Weighted => (format!("Q_{j}"), weighted_q(&st, betas, j)?),
        };
        frame.push(name, f.values.into_values());
    }
    create_dir(&res.out_dir)?;
    let path = res.out_dir.join(format!("hierarchy.{}", res.format.extension()));
    frame.write(&path, res.format)?;
    announce(out, &path)
}

/// Times used when none are given: symmetric about zero, half again as far
/// out as the separation threshold.
pub fn default_asymptotic_times(res: &Resolved) -> Result<Vec<f64>, CliError> {
    let st = state_at(res, 0.0)?;
    let required = decomposition_report(&st)?.required_abs_t;
    if required == 0.0 {
        return Ok(vec![0.0]);
    }
    let t = (1.5 * required).ceil();
    Ok(vec![-t, t])
}

pub fn asymptotics(res: &Resolved, times: &[f64], out: &mut dyn Write) -> Result<(), CliError> {
    let shifts = phase_shifts(res.spectrum.gammas());
    let mut table = Table::new(vec![
        "t",
        "k",
        "gamma",
        "speed",
        "phase_shift",
        "offset",
        "center_predicted",
        "center_measured",
        "shift_measured",
        "shift_deviation",
        "potential_error",
        "psi_error",
        "xi_error",
        "asymptotic",
    ]);
    for &t in times {
        let rep = decomposition_report(&state_at(res, t)?)?;
        for fit in &rep.solitons {
            let tr = &fit.track;
            table.push(vec![
                t.into(),
                (tr.k + 1).into(),
                tr.gamma.into(),
                tr.speed.into(),
                shifts[tr.k].into(),
                tr.offset.into(),
                fit.center_predicted.into(),
                fit.center_measured.into(),
                fit.shift_measured.into(),
                fit.delta_deviation.into(),
                fit.potential_error.into(),
                fit.psi_error.into(),
                fit.xi_error.into(),
                rep.asymptotic.into(),
            ]);
        }
    }
    table.render(res.format, out).map_err(CliError::io("stdout"))
}

pub fn run_verify(res: &Resolved, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let scenario = Scenario {
        spectrum: res.spectrum.clone(),
        kind: res.kind.clone(),
        times: res.times.clone(),
        grid: res.grid,
        tolerances: res.tolerances.clone(),
    };
    let report = verify(&scenario)?;
    let mut table = Table::new(vec!["check", "t", "value", "bound", "tolerance", "passed"]);
    for c in &report.checks {
        let bound = match c.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        table.push(vec![
            c.name.as_str().into(),
            c.time.into(),
            c.value.into(),
            bound.into(),
            c.tolerance.into(),
            c.passed.into(),
        ]);
    }
    table.render(res.format, out).map_err(CliError::io("stdout"))?;
    let failed = report.failures().count();
    let total = report.checks.len();
    if failed > 0 {
        for c in report.failures() {
            let _ = writeln!(err, "failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
        }
        return Err(CliError::VerificationFailed { failed, total });
    }
    let _ = writeln!(err, "verification passed: {total} checks");
    Ok(())
}
