use std::path::Path;
use std::process::{Command, Output};

fn scarlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scarlab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// File contents without the `#` header lines.
fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn orbits_writes_a_family_table_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["orbits", "--model", "ring", "--family", "B", "--emin", "6.5", "--emax", "7.5", "--de", "0.25"];
    let out = scarlab(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = read(dir.path(), "family_ring_B.csv");
    let header = first.lines().next().unwrap();
    assert!(header.starts_with("# scarlab orbits model=ring"), "{header}");
    assert!(header.contains("config_sha256="));
    let rows: Vec<&str> = first.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "family,energy,period,action,lyapunov,trace_reduced,residual");
    assert_eq!(rows.len(), 1 + 5);

    let out = scarlab(dir.path(), &args);
    assert!(out.status.success());
    assert_eq!(read(dir.path(), "family_ring_B.csv"), first);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "model = \"ring\"\nenergy = 7.0\ncrossings = 5\nseeds = \"grid:2x2\"\n").unwrap();
    let out = scarlab(dir.path(), &["sos", "--config", cfg.to_str().unwrap(), "--crossings", "8", "--physical"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(dir.path(), "sos_ring_7.csv");
    assert!(text.lines().nth(1).unwrap().starts_with("# physical: C6/h = 3 GHz um^6, R = 7 um"));
    assert!(text.lines().next().unwrap().contains("seeds=4 crossings=8"));
    // flags win over the file: 4 seeds with 8 crossings each
    assert_eq!(body(&text).lines().count(), 1 + 4 * 8);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "model = \"ring\"\nenergy = 7.0\nunknown_key = 3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["sos", "--config", cfg.to_str().unwrap()],
        vec!["sos", "--energy", "7"],
        vec!["sos", "--model", "ring", "--energy", "7", "--seeds", "grid:0x3"],
        vec!["spectrum", "--model", "hh", "--eta", "0.01", "--window", "0.15:0.11"],
        vec!["spectrum", "--model", "hh", "--eta", "0.01", "--window", "0.1:0.2"],
        vec!["spectrum", "--model", "hh", "--eta", "0.01", "--window", "0.1:0.12", "--irrep", "B1"],
        vec!["trace", "--model", "hh", "--window", "0.1:0.12"],
        vec!["orbits", "--model", "ring", "--emin", "2"],
    ];
    for args in cases {
        let out = scarlab(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = Command::new(env!("CARGO_BIN_EXE_scarlab"))
        .args(["sos", "--model", "ring", "--energy", "7", "--crossings", "2", "--out"])
        .arg(dir.path())
        .env("SCARLAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    // continuing down to an energy too small for the scaled orbit breaks
    // after the last good point
    let dir = tempfile::tempdir().unwrap();
    let out = scarlab(dir.path(), &["orbits", "--model", "ring", "--family", "B", "--emin", "1e-13", "--emax", "1", "--de", "0.5", "--seed-energy", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("continuation broke after energy 0.5"), "{err}");
    // partial data is kept
    assert_eq!(body(&read(dir.path(), "family_ring_B.csv")).lines().count(), 1 + 2);

    // a seed that does not converge writes nothing and also exits 2
    let dir = tempfile::tempdir().unwrap();
    let out = scarlab(dir.path(), &["orbits", "--model", "ring", "--family", "B", "--emin", "10000", "--emax", "10000"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}

#[test]
fn spectrum_and_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = scarlab(dir.path(), &["spectrum", "--model", "hh", "--eta", "0.025", "--window", "0:0.1", "--irrep", "A1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let levels = read(dir.path(), "levels_hh_A1.csv");
    let rows: Vec<String> = body(&levels).lines().skip(1).map(str::to_owned).collect();
    assert!(rows.len() >= 3);
    assert!(rows[0].starts_with("A1,0,"));
    assert!(dir.path().join("states_hh_A1/state_00000.csv").exists());

    let report = ["report", "--model", "hh", "--eta", "0.01", "--window", "0.11:0.15", "--raster", "21"];
    let out = scarlab(dir.path(), &report);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for irrep in ["A1", "A2", "E"] {
        let m = read(dir.path(), &format!("match_hh_{irrep}.txt"));
        assert!(m.contains(&format!("irrep {irrep} threshold")), "{m}");
        assert!(read(dir.path(), &format!("scores_hh_{irrep}.csv")).contains("irrep,index,energy,score,tube_radius"));
    }
    let peaks = read(dir.path(), "peaks_hh.csv");
    assert!(body(&peaks).starts_with("irrep,peak_energy,k"));
    assert!(body(&read(dir.path(), "delta_n_hh.csv")).starts_with("irrep,energy,delta_n"));
    let densities = std::fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("density_hh_")).count();
    assert!(densities >= 3);

    // a second report with the same settings reuses the scores and
    // reproduces the match files
    let before = read(dir.path(), "match_hh_E.txt");
    let out = scarlab(dir.path(), &report);
    assert!(out.status.success());
    assert_eq!(read(dir.path(), "match_hh_E.txt"), before);
}
