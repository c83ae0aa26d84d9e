use std::path::{Path, PathBuf};

use efpr_core::error::ErrorCategory;
use efpr_core::grid::Grid2D;
use efpr_core::sim::output::write_snapshot_text;
use efpr_core::sim::{build_initial, load_config, parse_config, run_experiment, InitialCondition};
use efpr_core::Error;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL: &str = "substance = \"nC4\"\nT = 330.0\ntau = 1e10\nn_steps = 0\nc_gas = 249.1123\nc_liq = 9526.8428\n";

#[test]
fn shipped_droplet_preset() {
    let cfg = load_config(&configs().join("nc4_droplet.toml")).unwrap();
    assert_eq!((cfg.grid.nx, cfg.grid.ny), (100, 100));
    assert_eq!(cfg.grid.l_half, 15e-9);
    assert_eq!(cfg.tau(), 1e10);
    assert_eq!(cfg.temperature, 330.0);
    assert_eq!(cfg.vartheta0, 0.0);
    assert_eq!(cfg.n_steps, 200);
    assert_eq!(cfg.substance.name, "nC4");
    assert_eq!(cfg.substance.critical_pressure, 38.0e5);
    let grid = cfg.build_grid().unwrap();
    assert_eq!(grid.origin, [-15e-9, -15e-9]);
    let c0 = build_initial(&cfg, &grid).unwrap();
    let liquid = c0.values().iter().filter(|&&v| v == cfg.c_liq).count();
    assert_eq!(liquid, 50 * 50);
}

#[test]
fn every_shipped_config_validates() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn four_by_four_square_droplet() {
    let text = format!(
        "{SMALL}[grid]\nN = 4\nM = 4\nL_half = 2.0\n[initial_condition]\nkind = \"square_droplet\"\nhalf_side = 1.0\n"
    );
    let cfg = parse_config(&text, Path::new("/tmp/c.toml")).unwrap();
    let grid = cfg.build_grid().unwrap();
    let c0 = build_initial(&cfg, &grid).unwrap();
    let liquid: Vec<(usize, usize)> = (0..4)
        .flat_map(|j| (0..4).map(move |i| (i, j)))
        .filter(|&(i, j)| c0.get(i, j) == cfg.c_liq)
        .collect();
    assert_eq!(liquid, vec![(1, 1), (2, 1), (1, 2), (2, 2)]);
}

#[test]
fn uniform_initial_total_moles() {
    let text = format!(
        "{SMALL}[grid]\nN = 10\nM = 6\nL_half = 5e-9\n[initial_condition]\nkind = \"uniform\"\nvalue = 1234.5\n"
    );
    let cfg = parse_config(&text, Path::new("/tmp/c.toml")).unwrap();
    let grid = cfg.build_grid().unwrap();
    let c0 = build_initial(&cfg, &grid).unwrap();
    let c_t = grid.total(&c0).unwrap();
    let expected = 1234.5 * grid.lx() * grid.ly();
    assert!((c_t - expected).abs() <= 1e-14 * expected);
}

#[test]
fn from_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[grid]\nN = 9\nM = 7\nL_half = 4.5e-9\n");
    let cfg = parse_config(&text, &dir.path().join("a.toml")).unwrap();
    let grid = cfg.build_grid().unwrap();
    let field = efpr_core::grid::CellField::from_fn(&grid, |i, j| {
        300.0 + 1000.0 * (i as f64 / 3.0).sin().abs() + j as f64 / 7.0
    });
    write_snapshot_text(&dir.path().join("seed.txt"), &grid, 0, 0.0, &field).unwrap();

    let text = format!(
        "{SMALL}[grid]\nN = 9\nM = 7\nL_half = 4.5e-9\n[initial_condition]\nkind = \"from_file\"\npath = \"seed.txt\"\n"
    );
    let cfg = parse_config(&text, &dir.path().join("b.toml")).unwrap();
    assert_eq!(
        cfg.initial_condition,
        InitialCondition::FromFile {
            path: dir.path().join("seed.txt")
        }
    );
    let loaded = build_initial(&cfg, &grid).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(loaded.values()), bits(field.values()));

    let other = Grid2D::new(9, 8, grid.h).unwrap();
    assert!(matches!(
        build_initial(&cfg, &other),
        Err(Error::ShapeMismatch { .. })
    ));
}

#[test]
fn substance_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c3.substance"),
        "name = C3\nTc_K = 369.8\nPc_bar = 42.48\nomega = 0.152\n",
    )
    .unwrap();
    let text =
        SMALL.replace("\"nC4\"", "\"c3.substance\"") + "[grid]\nN = 4\nM = 4\nL_half = 1e-9\n";
    let cfg = parse_config(&text, &dir.path().join("x.toml")).unwrap();
    assert_eq!(cfg.substance.name, "C3");
    assert_eq!(cfg.substance.critical_pressure, 42.48e5);

    std::fs::write(dir.path().join("bad.substance"), "name = X\nTc_K = hot\n").unwrap();
    let text = text.replace("c3.substance", "bad.substance");
    match parse_config(&text, &dir.path().join("x.toml")).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 2),
        other => panic!("{other}"),
    }
}

#[test]
fn error_categories_map_to_exit_codes() {
    let missing = load_config(Path::new("/nonexistent/cfg.toml")).unwrap_err();
    assert_eq!(missing.category(), ErrorCategory::Config);
    assert_eq!(missing.category().exit_code(), 2);

    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SMALL}[grid]\nN = 6\nM = 6\nL_half = 3e-9\n[initial_condition]\nkind = \"uniform\"\nvalue = 100.0\n[output]\ndirectory = \"out\"\n"
    );
    let cfg = parse_config(&text, &dir.path().join("x.toml")).unwrap();
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, Error::BoundsViolation { .. }));
    assert_eq!(err.category().exit_code(), 3);
}

#[test]
fn provenance_lists_applied_defaults_only() {
    let text = format!("{SMALL}vartheta0 = 0.0\n[grid]\nN = 4\nM = 4\nL_half = 1e-9\n");
    let cfg = parse_config(&text, Path::new("/tmp/c.toml")).unwrap();
    assert!(!cfg.provenance.iter().any(|l| l.contains("vartheta0")));
    for key in [
        "R",
        "bounds_factors",
        "lambda",
        "droplet_threshold",
        "initial_condition",
        "output.directory",
    ] {
        assert!(
            cfg.provenance
                .iter()
                .any(|l| l.contains(&format!("default {key} "))),
            "no provenance for {key}: {:?}",
            cfg.provenance
        );
    }
}
