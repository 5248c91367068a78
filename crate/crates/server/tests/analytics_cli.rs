use std::process::Command;
use std::sync::Arc;

use serde_json::Value;

use voxchat::memory::{LogStore, ManualClock, Mode};
use voxchat::session::{SessionConfig, SessionDeps, SessionManager};

fn write_logs(dir: &std::path::Path) {
    let clock = Arc::new(ManualClock::new(1_000));
    let manager = SessionManager::new(SessionDeps::new(clock.clone()).with_store(LogStore::new(dir).unwrap()));
    let id = manager.create(&SessionConfig::new(Mode::Command)).unwrap();
    manager.handle_chat(&id, "weather rain").unwrap();
    clock.advance(12_000);
    manager.handle_chat(&id, "build pyramid 20 64 20 5 3 stone").unwrap();
    manager.end(&id).unwrap();
}

fn analytics() -> Command {
    Command::new(env!("CARGO_BIN_EXE_analytics"))
}

#[test]
fn writes_report() {
    let dir = tempfile::tempdir().unwrap();
    write_logs(dir.path());
    let ranking = dir.path().join("ranking.csv");
    std::fs::write(&ranking, "condition,rank1,rank2,rank3,rank4\nllm,0,1,0,1\ncommand,1,0,1,0\n").unwrap();
    let out = dir.path().join("report.json");

    let status = analytics()
        .args(["--logs", dir.path().to_str().unwrap(), "--mode", "command", "--out", out.to_str().unwrap()])
        .args(["--ranking", ranking.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["session_count"], 1);
    assert_eq!(report["commands_per_session"], 2.0);
    assert_eq!(report["seconds_per_session"], 12.0);
    assert_eq!(report["weighted_ranks"]["llm"], 3.0);
    assert_eq!(report["weighted_ranks"]["command"], 2.0);
}

#[test]
fn fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let empty =
        analytics().args(["--logs", dir.path().to_str().unwrap(), "--out", out.to_str().unwrap()]).output().unwrap();
    assert!(!empty.status.success());
    assert!(String::from_utf8_lossy(&empty.stderr).contains("no session"));
    let bad_mode = analytics().args(["--logs", ".", "--mode", "banana", "--out", "x"]).output().unwrap();
    assert!(!bad_mode.status.success());
    assert!(!out.exists());
}
