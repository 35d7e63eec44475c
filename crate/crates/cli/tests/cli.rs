use std::process::{Command, Output};

fn gol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gol"))
        .args(args)
        .output()
        .expect("run gol")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn nf_examples() {
    let o = gol(&["nf", "--group", "G[1,6]", "x[0,1] y[0,0] x[0,1]'"]);
    assert_eq!(stdout(&o), "nf: y[0,1]'\n");
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&gol(&["nf", "--group", "A[1,6]", "a[0,0] a[0,1]^2"])), "nf: \n");
    assert_eq!(stdout(&gol(&["nf", "--group", "free:2", "a b b' a'"])), "nf: \n");
    assert_eq!(stdout(&gol(&["nf", "--group", "klein", "x y x y"])), "nf: x^2\n");
    // y[-1] in H[2] is three steps below y[2]
    assert_eq!(
        stdout(&gol(&["nf", "--group", "H[2]", "y[-1]"])),
        "nf: x[0]' x[1]' x[2]' y[2]' x[2] x[1] x[0]\n"
    );
}

#[test]
fn exit_codes() {
    assert_eq!(code(&gol(&["nf", "--group", "G[1,6]", "x[0,1"])), 2);
    assert_eq!(code(&gol(&["nf", "--group", "Q[1]", "x"])), 2);
    assert_eq!(code(&gol(&["nf", "--group", "G[1,6]", "x[5,0]"])), 3);
    assert_eq!(code(&gol(&["nf", "--group", "G[0,2]", "x[0,-2]' y[0,-2]"])), 3);
    assert_eq!(code(&gol(&["rank", "--group", "klein", "x"])), 3);
    assert_eq!(code(&gol(&["frobnicate"])), 2);
}

#[test]
fn checks() {
    let o = gol(&["check", "confluence", "--group", "G[3,4]"]);
    assert!(stdout(&o).contains("status: PASS"));
    assert_eq!(code(&o), 0);
    let o = gol(&["check", "confluence", "--families", "1", "--positions", "2"]);
    assert!(stdout(&o).contains("group: G[1,2]"));
    let o = gol(&["check", "tau-trace", "--group", "G[1,6]", "--family", "0"]);
    let text = stdout(&o);
    assert!(text.contains("step 3: "));
    assert!(!text.contains("step 4: "));
    assert!(text.contains("conclusion: CONTRADICTION"));
    let o = gol(&["check", "tau-trace", "--group", "A[1,6]", "--premise", "minus"]);
    assert!(stdout(&o).contains("sgn(a[0,0]) = -"));
    let o = gol(&["check", "termination", "--samples", "10000"]);
    assert!(stdout(&o).contains("violations: 0"));
    assert_eq!(code(&o), 0);
    let o = gol(&["check", "axioms", "--group", "tower[4]", "--samples", "200"]);
    assert!(stdout(&o).contains("status: PASS"), "{}", stdout(&o));
    let o = gol(&["check", "axioms", "--group", "G[1,6]", "--samples", "200"]);
    assert!(stdout(&o).contains("failures: 0"));
    let o = gol(&["check", "rho", "--n", "-2"]);
    assert!(stdout(&o).contains("status: PASS"));
    assert!(stdout(&o).contains("rho(y[-3]): x[-2]' y[-2]' x[-2]"));
}

#[test]
fn orders() {
    let cmp = |args: &[&str]| stdout(&gol(args));
    assert_eq!(cmp(&["order", "magnus", "--group", "free:2", "", "a b a' b'"]), "cmp: LT\n");
    assert_eq!(cmp(&["order", "shortlex", "--group", "G[0,3]", "x[0,0]'", "x[0,0]"]), "cmp: LT\n");
    assert_eq!(cmp(&["order", "dyadiclex", "--group", "A[0,3]", "a[0,1]", ""]), "cmp: LT\n");
    assert_eq!(cmp(&["order", "dyadiclex", "--group", "A[0,3]", "a[0,0]", "a[0,1]^-2"]), "cmp: EQ\n");
    assert_eq!(code(&gol(&["order", "magnus", "--group", "klein", "x", "y"])), 3);
}

#[test]
fn sign_search() {
    let o = gol(&["sign-search", "--group", "klein", "--radius", "2", "--mode", "bi"]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("OBSTRUCTION\n1: "));
    assert!(text.contains("because contradiction"));
    let o = gol(&["sign-search", "--group", "klein", "--radius", "2", "--mode", "left"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l.starts_with("+ ")));
    let o = gol(&[
        "sign-search", "--group", "G[1,6]", "--radius", "2", "--gens", "x[0,1] y[0,0] y[0,1] x[1,0]",
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn hnn() {
    let o = gol(&["hnn", "lambda", "--Z", "12", "--n", "4", "--M", "6"]);
    let text = stdout(&o);
    for line in ["cost: 15", "n^2: 16", "crossover: true"] {
        assert!(text.lines().any(|l| l == line), "{line} in\n{text}");
    }
    let o = gol(&["hnn", "lambda", "--Z", "6", "--n", "2", "--M", "3", "--dump"]);
    assert!(stdout(&o).contains("g[2] = product("));
    let o = gol(&["hnn", "witness", "--Z", "3", "--g", "a b", "--h", "b"]);
    assert!(stdout(&o).contains("witness: t[-1]"));
    let o = gol(&["hnn", "reduce", "--Z", "3", "t t[0] t'"]);
    assert!(stdout(&o).contains("reduced: t[1]"));
    assert_eq!(code(&gol(&["hnn", "reduce", "--Z", "2", "t t[2] t'"])), 3);
    assert_eq!(code(&gol(&["hnn", "lambda", "--Z", "3", "--n", "5"])), 3);
}

#[test]
fn rank() {
    let o = gol(&["rank", "--member", "b a", "a^2", "a b", "b^2"]);
    assert!(stdout(&o).starts_with("rank: 3\n"));
    assert!(stdout(&o).contains("member: true"));
    assert_eq!(code(&gol(&["rank", "--member", "a", "a^2", "a b", "b^2"])), 1);
}

#[test]
fn reports_are_reproducible() {
    let args = ["check", "termination", "--samples", "500", "--seed", "9"];
    assert_eq!(gol(&args).stdout, gol(&args).stdout);
    let args = ["check", "axioms", "--group", "klein", "--samples", "100", "--seed", "3"];
    assert_eq!(gol(&args).stdout, gol(&args).stdout);
}
