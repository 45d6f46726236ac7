use std::process::Command;

fn pairsel() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pairsel"))
}

#[test]
fn exit_codes_and_thread_env() {
    let ok = pairsel()
        .args(["quantile", "--n", "100", "--p", "1000"])
        .env("PAIRSEL_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("\"t_star\""));

    let bad_env = pairsel()
        .args(["quantile", "--n", "100", "--p", "1000"])
        .env("PAIRSEL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_env.stderr).contains("PAIRSEL_THREADS"));

    let flag_wins = pairsel()
        .args(["--threads", "1", "quantile", "--n", "100", "--p", "1000"])
        .env("PAIRSEL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(flag_wins.status.code(), Some(0));

    let missing = pairsel().args(["screen", "--data", "/no/such.csv"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let usage = pairsel().arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
