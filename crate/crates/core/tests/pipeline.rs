use std::path::Path;
use std::process::{Command, Output};

use piecewise_policy::data::read_samples_csv;
use piecewise_policy::neural::MlpModel;
use piecewise_policy::policy::PiecewisePolicy;
use piecewise_policy::problems::{
    AffineRhs, LinearInequalityData, ParametricProblem, ProblemData, ThetaBox,
};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piecewise-policy"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    cli(args).status.code().unwrap()
}

fn path(dir: &Path, file: &str) -> String {
    dir.join(file).to_string_lossy().into_owned()
}

#[test]
fn commands_compose_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        code(&[
            "sample",
            "--problem",
            "example1",
            "--m",
            "100",
            "--seed",
            "1",
            "--out",
            out
        ]),
        0
    );
    let samples =
        read_samples_csv(std::fs::File::open(path(dir.path(), "samples.csv")).unwrap()).unwrap();
    assert_eq!(samples.len(), 100);
    assert!(samples
        .iter()
        .all(|s| s.objective < 0.0 && s.gamma_gap <= 1e-8));

    assert_eq!(
        code(&[
            "fit",
            "--samples",
            &path(dir.path(), "samples.csv"),
            "--out",
            out
        ]),
        0
    );
    let policy = PiecewisePolicy::load(path(dir.path(), "policy.json")).unwrap();
    assert_eq!(policy.k(), 1);

    let eval = [
        "evaluate",
        "--problem",
        "example1",
        "--policy",
        &path(dir.path(), "policy.json"),
        "--extrapolate",
        "clip",
        "--out",
        out,
    ];
    assert_eq!(code(&eval), 0);
    let report = std::fs::read_to_string(path(dir.path(), "report.csv")).unwrap();
    assert!(report.starts_with("theta_0,xhat_0,xhat_1,infeas_dist,subopt_gap\n"));
    assert_eq!(report.lines().count(), 1001);

    let nn = [
        "nn-fit",
        "--samples",
        &path(dir.path(), "samples.csv"),
        "--hidden",
        "8",
        "--epochs",
        "30",
        "--out",
        out,
    ];
    assert_eq!(code(&nn), 0);
    let model = MlpModel::load(path(dir.path(), "model.json")).unwrap();
    assert_eq!(model.layer_dims, vec![1, 8, 2]);
    assert!(model.train_meta.is_some());
}

#[test]
fn problem_files_are_accepted_in_place_of_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let problem = path(dir.path(), "problem.json");
    piecewise_policy::problems::example1()
        .save(&problem)
        .unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        code(&["sample", "--problem", &problem, "--m", "10", "--out", out]),
        0
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        code(&["sample", "--problem", "no-such-problem", "--out", out]),
        2
    );
    assert_eq!(
        code(&["sample", "--problem", "example1", "--m", "0", "--out", out]),
        2
    );
    assert_eq!(
        code(&[
            "sample",
            "--problem",
            "example1",
            "--sampler",
            "rule:nope",
            "--out",
            out
        ]),
        2
    );
    // Example 1 keeps a δ/4 gap next to its kink, far above the 1e-3 check
    assert_eq!(
        code(&[
            "converge",
            "--problem",
            "example1",
            "--levels",
            "3",
            "--check",
            "--out",
            out
        ]),
        4
    );
    assert_eq!(code(&["example1-golden", "--check", "--out", out]), 0);

    // x ≤ θ and x ≥ 0.5 is empty for every θ below one half
    let data = LinearInequalityData {
        c: vec![1.0],
        a: vec![vec![1.0], vec![-1.0]],
        rhs: AffineRhs {
            offset: vec![0.0, -0.5],
            matrix: vec![vec![1.0], vec![0.0]],
        },
        t: 0.0,
        bound: Some(10.0),
        cost_theta: None,
        interior_point: None,
    };
    let p = ParametricProblem::new(
        ProblemData::LinearInequality(data),
        1,
        1,
        ThetaBox::new(vec![0.0], vec![1.0]).unwrap(),
    )
    .unwrap();
    let problem = path(dir.path(), "half_empty.json");
    p.save(&problem).unwrap();
    assert_eq!(
        code(&["sample", "--problem", &problem, "--m", "50", "--out", out]),
        3
    );
}

#[test]
fn reruns_are_byte_identical() {
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = dir.path().to_str().unwrap();
            let args = [
                "sample",
                "--problem",
                "qp:3:2:4",
                "--m",
                "60",
                "--sampler",
                "arbitrary",
                "--gamma",
                "0.05",
            ];
            assert_eq!(
                code(&[&args[..], &["--seed", "9", "--out", out]].concat()),
                0
            );
            std::fs::read(path(dir.path(), "samples.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}
