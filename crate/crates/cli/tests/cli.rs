use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn forts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forts")).args(args).output().expect("run forts")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("forts-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr)
}

#[test]
fn decompose_circle() {
    let dir = scratch("circle");
    let input = dir.join("circle.txt");
    fs::write(&input, "# unit circle around the centre\n(sub (add (pow (sub x 1/2) 2) (pow (sub y 1/2) 2)) 1/16)\n").unwrap();
    let out = dir.join("circle.json");
    let svg = dir.join("circle.svg");
    let o = forts(&["decompose", input.to_str().unwrap(), "--out", out.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["dim"], 2);
    assert_eq!(v["cells"].as_array().unwrap().len(), 13);
    let pic = fs::read_to_string(&svg).unwrap();
    assert!(pic.starts_with("<?xml") && pic.trim_end().ends_with("</svg>"));
    assert!(pic.contains("<polygon") && pic.contains("<circle"));
}

#[test]
fn parametrize_is_deterministic() {
    let dir = scratch("param");
    let input = dir.join("p.txt");
    fs::write(&input, "func (pow x 5)\n").unwrap();
    let (a, b) = (dir.join("a.json"), dir.join("b.json"));
    for out in [&a, &b] {
        let o = forts(&["parametrize", input.to_str().unwrap(), "--r", "2", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
        assert!(text(&o).contains("PASS"));
    }
    assert_eq!(fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
}

#[test]
fn enumerate_counts() {
    let o = forts(&["enumerate", "--ell", "2", "--max", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o).contains("6765 forts"), "{}", text(&o));
    let o = forts(&["enumerate", "--ell", "1", "--max", "5", "--list"]);
    let listed = String::from_utf8_lossy(&o.stdout).lines().filter(|l| !l.trim().is_empty() && !l.contains(" forts")).count();
    assert_eq!(listed, 3, "{}", text(&o));
}

#[test]
fn bench_writes_csv() {
    let dir = scratch("bench");
    let csv = dir.join("pow.csv");
    let o = forts(&["bench", "--gen", "pow", "--from", "2", "--to", "6", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let body = fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("D,cells,format,degree"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn usage_and_parse_errors() {
    let dir = scratch("errors");
    let bad = dir.join("bad.txt");
    fs::write(&bad, "(add x\n").unwrap();
    let o = forts(&["decompose", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains(":1:"), "{}", text(&o));
    assert_eq!(forts(&["parametrize", bad.to_str().unwrap(), "--r", "0"]).status.code(), Some(2));
    assert_eq!(forts(&["bench", "--gen", "pow", "--from", "5", "--to", "2"]).status.code(), Some(2));
    assert_eq!(forts(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(forts(&["decompose", dir.join("missing.txt").to_str().unwrap()]).status.code(), Some(2));
}
