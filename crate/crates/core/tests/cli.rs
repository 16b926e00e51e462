use std::process::Command;

fn snowflake() -> Command {
    Command::new(env!("CARGO_BIN_EXE_snowflake"))
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(snowflake().arg("--help")), 0);
    assert_eq!(code(snowflake().args(["eigen", "--nonsense"])), 1);
    assert_eq!(code(snowflake().args(["eigen", "--t", "1", "--k", "2", "--l", "0", "--s", "1"])), 1);
    assert_eq!(code(snowflake().args(["table", "--rows", "0.3"])), 1);
    // ε = 2π/100 makes the certified quadrature error swamp the margin
    assert_eq!(code(snowflake().args(["certify", "--nodes", "100", "--points", "50"])), 3);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "t = 1.0\nk = 5\nl = 7.0\nN = 200\nM = 100\n").unwrap();
    let out = snowflake()
        .args(["--config", cfg.to_str().unwrap(), "eigen", "--k", "4", "--l", "21"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("log_k lambda"));

    std::fs::write(&cfg, "t = 1.0\nkk = 5\n").unwrap();
    assert_eq!(code(snowflake().args(["--config", cfg.to_str().unwrap(), "eigen"])), 1);
}

#[test]
fn outputs_are_reproducible_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = snowflake()
            .args(["--jobs", "2", "sweep", "--t", "1", "--ks", "4,5", "--ls", "7..21:7", "--N", "100", "--M", "50", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert!(a.starts_with("# snowflake"));
    let data: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "t,k,l,log_k_lambda,beta_lower,t2_over_4,status");
    assert_eq!(data.len(), 1 + 2 * 3);
}

#[test]
fn eigen_then_bound_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--t", "1", "--k", "5", "--l", "7", "--N", "400", "--M", "200"];
    assert!(snowflake().arg("eigen").args(args).arg("--out").arg(dir.path()).status().unwrap().success());
    let vec_path = dir.path().join("eigenvector.csv");
    assert!(vec_path.exists() && dir.path().join("eigen.json").exists());
    let out = dir.path().join("bound.json");
    let status = snowflake()
        .arg("bound")
        .args(args)
        .args(["--points", "50", "--eigenvector"])
        .arg(&vec_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(json["result"]["bound"]["beta_lower"].as_f64().unwrap() > 0.0);
}

#[test]
fn render_writes_svg_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f.svg");
    let csv = dir.path().join("f.csv");
    let status = snowflake()
        .args(["render", "--k", "5", "--l", "7", "--depth", "2", "--seed", "4", "--out"])
        .arg(&svg)
        .arg("--csv")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    roxmltree::Document::parse(&std::fs::read_to_string(&svg).unwrap()).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().any(|l| l == "curve_id,re,im"));
}
