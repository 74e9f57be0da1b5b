use std::path::Path;
use std::process::{Command, Output};

fn occupancy(args: &[&str], config: Option<&str>, dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_occupancy"));
    cmd.args(args);
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

const UNIFORM10: &str = r#"{"distributions":[{"family":"uniform","m":10}],"n":[2,10,100,1000,10000],"r":[0,1,2,5]}"#;

#[test]
fn uniform_battery_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = occupancy(&["bounds"], Some(UNIFORM10), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dist,family_params,n,r,exact,bound_source,bound_value,optimizer_eps,applicable,verdict"
    );
    assert!(lines.all(|l| !l.ends_with(",fail")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let r_above_n = r#"{"distributions":[{"family":"uniform","m":10}],"n":[5],"r":[7]}"#;
    assert_eq!(occupancy(&["bounds"], Some(r_above_n), dir.path()).status.code(), Some(2));
    let unknown = r#"{"distributions":[],"n":[5],"colour":"blue"}"#;
    assert_eq!(occupancy(&["exact"], Some(unknown), dir.path()).status.code(), Some(2));
    assert_eq!(occupancy(&["exact"], None, dir.path()).status.code(), Some(2));
    assert_eq!(occupancy(&["no-such-command"], None, dir.path()).status.code(), Some(2));
    assert_eq!(occupancy(&["exact", "--config", "/nonexistent/config.json"], None, dir.path()).status.code(), Some(3));
    // a regular file where the output directory should go
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let out_arg = blocker.join("sub").display().to_string();
    assert_eq!(occupancy(&["exact", "--out", &out_arg], Some(UNIFORM10), dir.path()).status.code(), Some(3));
}

#[test]
fn json_and_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"distributions":[{"family":"zipf","alpha":0.5},{"family":"geometric","q":0.5}],"n":[10,100],"r":[0,1],
        "monte_carlo":{"replicates":200},"poisson":{"lambda":[5.0],"r":[0]},"seed":3}"#;
    let out_dir = dir.path().join("out");
    let out_arg = out_dir.display().to_string();
    let out = occupancy(&["simulate", "--out", &out_arg], Some(config), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mc = std::fs::read_to_string(out_dir.join("monte_carlo.csv")).unwrap();
    assert!(mc.starts_with("dist,n,r,N,mean_K,se_K,mean_M,se_M,exact_EM,z_score\n"));
    assert_eq!(mc.lines().count(), 1 + 2 * 2 * 2);

    let out = occupancy(&["poisson", "--format", "json", "--out", &out_arg], Some(config), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("poisson.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(out_dir.join("summary.txt")).unwrap().contains("poisson: 2 points"));
}

#[test]
fn seed_flag_controls_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"distributions":[{"family":"uniform","m":50}],"n":[40],"r":[0,1],"monte_carlo":{"replicates":100}}"#;
    let run = |seed: &str| occupancy(&["simulate", "--seed", seed], Some(config), dir.path()).stdout;
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}

#[test]
fn metric_and_estimate_commands() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"distributions":[{"family":"uniform","m":10}],"n":[10],"r":[0],"estimators":[{"kind":"modified","s":2}],
        "intervals":{"kinds":["mo03","cbmm1"],"t":[1.0]},
        "metric":{"models":[{"space":"points","coords":[0,1,2],"masses":[0.5,0.3,0.2]}],"n":[10],"delta":[0.5],"replicates":50}}"#;
    let m = occupancy(&["metric"], Some(config), dir.path());
    assert_eq!(m.status.code(), Some(0), "{}", String::from_utf8_lossy(&m.stderr));
    let text = String::from_utf8(m.stdout).unwrap();
    assert!(text.starts_with("model,n,delta,r,lambda,exact,bkgen,mc_mean,mc_se,verdict\n"));
    assert!(text.contains(",pass\n"));
    let e = occupancy(&["estimate"], Some(config), dir.path());
    assert_eq!(e.status.code(), Some(0), "{}", String::from_utf8_lossy(&e.stderr));
    let text = String::from_utf8(e.stdout).unwrap();
    assert!(text.contains("modified(s=2)") && text.contains("# intervals"));
}
