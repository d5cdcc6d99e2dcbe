use std::path::Path;
use std::process::{Command, Output};

use soliton_cli::output::Frame;
use soliton_core::evolution::{alphas_for, EvolutionKind};
use soliton_core::{build_state, Grid, Spectrum};

fn soliton(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soliton"))
        .args(args)
        .current_dir(cwd)
        .env_remove(soliton_cli::OUT_DIR_ENV)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn sumrule_table_for_one_soliton() {
    let dir = tempfile::tempdir().unwrap();
    let o = soliton(&["sumrules", "--gammas", "1", "-J", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let analytic: Vec<f64> = csv_column(&stdout(&o), "analytic").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(analytic, vec![-4.0, -16.0, -64.0]);
    let rel: Vec<f64> = csv_column(&stdout(&o), "rel_error").iter().map(|s| s.parse().unwrap()).collect();
    assert!(rel.iter().all(|r| *r < 1e-6), "{rel:?}");
}

#[test]
fn verify_two_soliton_kdv_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = soliton(&["verify", "--gammas", "1,2", "--kind", "lax", "--m", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let passed = csv_column(&stdout(&o), "passed");
    assert!(passed.len() > 40 && passed.iter().all(|p| p == "true"));
}

#[test]
fn verify_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    std::fs::write(&cfg, "gammas = [1.0, 2.0]\n[verify.tolerances]\n\"construction.normalization\" = 0.0\n").unwrap();
    let o = soliton(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("construction.normalization"));
}

#[test]
fn duplicate_gammas_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = soliton(&["construct", "--gammas", "1,1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate spectrum"), "{}", stderr(&o));
    assert!(!dir.path().join("soliton-out").exists());
}

#[test]
fn config_errors_report_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "gammas = [1.0, 2.0]\nkind = \"sideways\"\n").unwrap();
    let o = soliton(&["construct", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("kind"), "{err}");
}

#[test]
fn construct_frame_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let out = dir.path().join(format);
        let o = soliton(
            &["construct", "--gammas", "0.5,1.5", "--format", format, "--out", out.to_str().unwrap()],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let frame = Frame::read(&out.join(format!("construct.{format}"))).unwrap();
        assert_eq!(frame.columns, ["x", "U", "psi_1", "psi_2", "W", "xi"]);

        let gammas = [0.5, 1.5];
        let alphas = alphas_for(&EvolutionKind::Lax(1), &gammas).unwrap();
        let grid = Grid::for_solitons(&gammas, &alphas, 0.0).unwrap();
        let st = build_state(&Spectrum::symmetric(&gammas).unwrap(), &alphas, 0.0, &grid).unwrap();
        assert_eq!(frame.column("x").unwrap(), grid.xs().collect::<Vec<_>>().as_slice());
        assert_eq!(frame.column("U").unwrap(), st.u().values());
        assert_eq!(frame.column("psi_2").unwrap(), st.psi(1).values());
        assert_eq!(frame.column("xi").unwrap(), st.xi().values());
        if format == "json" {
            let meta = frame.meta.unwrap();
            assert_eq!(meta.gammas, gammas);
            assert_eq!(meta.alphas, alphas);
            assert_eq!(meta.grid.n_points, grid.n_points());
        }
    }
}

#[test]
fn evolve_writes_frames_and_manifest_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = soliton(
            &["evolve", "--gammas", "1,2", "--kind", "dual", "--times", "-1,0,2.5", "--out", out.to_str().unwrap()],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let frames = manifest["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 3);
    assert_eq!(frames[2]["t"], 2.5);
    for f in frames {
        let file = f["file"].as_str().unwrap();
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
    }
    assert_eq!(
        std::fs::read(a.join("manifest.json")).unwrap(),
        std::fs::read(b.join("manifest.json")).unwrap()
    );

    // Frames share one grid, and the last one is the state at t = 2.5.
    let last = Frame::read(&a.join(frames[2]["file"].as_str().unwrap())).unwrap();
    let g = &manifest["grid"];
    let grid = Grid::new(
        g["x_min"].as_f64().unwrap(),
        g["x_max"].as_f64().unwrap(),
        g["n_points"].as_u64().unwrap() as usize,
    )
    .unwrap();
    let gammas = [1.0, 2.0];
    let alphas = alphas_for(&EvolutionKind::Dual(1), &gammas).unwrap();
    let st = build_state(&Spectrum::symmetric(&gammas).unwrap(), &alphas, 2.5, &grid).unwrap();
    assert_eq!(last.column("U").unwrap(), st.u().values());
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, "gammas = [1.0]\n[output]\ndir = \"from-config\"\n").unwrap();

    let o = soliton(&["construct", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("from-config/construct.csv").exists());

    let o = soliton(&["construct", "--config", cfg.to_str().unwrap(), "--out", "from-flag"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("from-flag/construct.csv").exists());

    let o = Command::new(env!("CARGO_BIN_EXE_soliton"))
        .args(["construct", "--gammas", "1"])
        .current_dir(dir.path())
        .env(soliton_cli::OUT_DIR_ENV, "from-env")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("from-env/construct.csv").exists());
}

#[test]
fn hierarchy_index_zero_is_the_potential() {
    let dir = tempfile::tempdir().unwrap();
    for family in ["lax", "dual"] {
        let o = soliton(&["hierarchy", "--gammas", "1,2", "--family", family, "-J", "1", "--out", family], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let lax = Frame::read(&dir.path().join("lax/hierarchy.csv")).unwrap();
    let dual = Frame::read(&dir.path().join("dual/hierarchy.csv")).unwrap();
    assert_eq!(lax.columns, ["x", "L_0", "L_1"]);
    assert_eq!(dual.columns, ["x", "Lbar_0", "Lbar_1"]);
    let diff = lax.column("L_0").unwrap().iter().zip(dual.column("Lbar_0").unwrap()).map(|(a, b)| (a - b).abs());
    assert!(diff.fold(0.0, f64::max) < 1e-12);

    let o = soliton(&["hierarchy", "--gammas", "1,2", "--family", "dual", "--method", "recursive"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn asymptotic_phase_shifts() {
    let dir = tempfile::tempdir().unwrap();
    let o = soliton(&["asymptotics", "--gammas", "1,2", "--kind", "dual", "--times=-200,200", "--format", "json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 4);
    let half_ln3 = 0.5 * 3f64.ln();
    for r in rows {
        assert_eq!(r["asymptotic"], true);
        assert!((r["shift_measured"].as_f64().unwrap().abs() - half_ln3).abs() < 1e-2);
        assert!(r["potential_error"].as_f64().unwrap() < 1e-3);
    }
}
