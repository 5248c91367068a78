use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use voxchat::analytics::{compute_metrics, weighted_rank, AnalyticsError, RankingMatrix};
use voxchat::builders::{castle, house, pyramid};
use voxchat::commands::{execute, parse_native, parse_study, ExecStatus, NativeCommand};
use voxchat::memory::{CommandTier, ManualClock, Mode, Role, SessionLog};
use voxchat::pipeline::{
    parse_response, run_turn, DemoProvider, ParsedResponse, PipelineConfig, ScriptedProvider, Stage, PLACEHOLDER_REPLY,
};
use voxchat::session::{SessionConfig, SessionDeps, SessionManager, TurnResult};
use voxchat::world::{new_world, BlockId, Position, Weather, WorldState, INITIAL_TIME};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn world() -> WorldState {
    new_world(100, 63, Position::new(50, 64, 50)).unwrap()
}

fn within(start: Instant, limit: Duration) -> Check {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:?}, limit {limit:?}");
    Ok(())
}

fn dutch_flag_replay() -> Check {
    let start = Instant::now();
    let reply = include_str!("fixtures/dutch_flag_reply.txt");
    let lines: Vec<&str> = reply.lines().filter(|l| l.starts_with("/fill") && l.contains("wool")).collect();
    ensure!(lines.len() == 3, "expected 3 wool lines, found {}", lines.len());
    let mut w = world();
    let mut changed = 0;
    for line in &lines {
        let result = execute(&parse_native(line).map_err(|e| format!("{line}: {e}"))?, &mut w);
        ensure!(result.is_ok(), "{line}: {}", result.message);
        changed += result.blocks_changed;
    }
    ensure!(changed == 12, "changed {changed} cells");
    for (x, data) in [(1, 14), (2, 0), (3, 11)] {
        for z in 0..=3 {
            let got = w.block_at(Position::new(x, 64, z));
            ensure!(got == BlockId::new("wool", data), "({x},64,{z}) is {got}");
        }
    }
    ensure!(w.placed_blocks().count() == 12, "{} placed cells", w.placed_blocks().count());
    ensure!(w.entities().is_empty() && w.weather() == Weather::Clear && w.time() == INITIAL_TIME, "world side effects");
    within(start, Duration::from_secs(1))
}

fn puppy_robot_replay() -> Check {
    let start = Instant::now();
    let ParsedResponse::Cot(cot) = parse_response(include_str!("fixtures/puppy_reply.txt")) else {
        return Err("fixture did not parse".into());
    };
    let mut lines = cot.instructions.clone();
    lines.push(r#"/tp @e[name="Puppy Robot"] 52 64 50"#.into());
    let mut w = world();
    let mut inert = 0;
    for line in &lines {
        let cmd = parse_native(line).map_err(|e| format!("{line}: {e}"))?;
        let before = w.content_digest();
        let result = execute(&cmd, &mut w);
        ensure!(result.is_ok(), "{line}: {}", result.message);
        if matches!(cmd, NativeCommand::Noop { .. }) {
            inert += 1;
            ensure!(w.content_digest() == before, "inert line changed the world: {line}");
        }
    }
    ensure!(inert == 2, "{inert} inert lines");
    ensure!(w.entities().len() == 1, "{} entities", w.entities().len());
    let wolf = w.entity_named("Puppy Robot").ok_or("no entity named Puppy Robot")?;
    ensure!(wolf.kind == "wolf", "kind {}", wolf.kind);
    ensure!(wolf.items == ["diamond_chestplate"], "items {:?}", wolf.items);
    ensure!(wolf.position == Position::new(52, 64, 50), "tp landed at {}", wolf.position);

    let mut fresh = world();
    execute(&parse_native(&lines[0]).unwrap(), &mut fresh);
    let spawned = fresh.entity_named("Puppy Robot").ok_or("summon alone failed")?;
    ensure!(spawned.position == Position::new(50, 65, 50), "summoned at {}", spawned.position);
    within(start, Duration::from_secs(1))
}

fn retry_cap() -> Check {
    let start = Instant::now();
    let mut script = vec![PLACEHOLDER_REPLY; 5];
    script.push("Instructions:\n/setblock 10 64 10 stone\nFinal Comment: placed");
    let provider = Arc::new(ScriptedProvider::new(script));
    let manager = SessionManager::new(SessionDeps::new(Arc::new(ManualClock::new(0))).with_provider(provider.clone()));
    let id = manager.create(&SessionConfig::new(Mode::Llm)).map_err(|e| e.to_string())?;
    let before = manager.get(&id).unwrap().lock().unwrap().world().content_digest();

    let first = manager.handle_chat(&id, "place a block").map_err(|e| e.to_string())?;
    ensure!(first.status == TurnResult::Fallback, "status {:?}", first.status);
    ensure!(first.attempts == Some(5), "{:?} attempts", first.attempts);
    ensure!(provider.call_count(Stage::Generator) == 5, "{} generator calls", provider.call_count(Stage::Generator));
    let after = manager.get(&id).unwrap().lock().unwrap().world().content_digest();
    ensure!(after == before, "blocks changed during fallback");

    let second = manager.handle_chat(&id, "place a block").map_err(|e| e.to_string())?;
    ensure!(second.status == TurnResult::Executed, "next turn {:?}", second.status);
    within(start, Duration::from_secs(1))
}

fn memory_window() -> Check {
    let mut log = SessionLog::new("m", Mode::Llm, 0);
    for i in 1..=25 {
        let role = if i % 2 == 1 { Role::User } else { Role::Assistant };
        log.append(role, format!("utterance-{i:02}"), i);
    }
    let provider = ScriptedProvider::new(["Instructions:\n/weather clear"]);
    run_turn(&provider, &mut world(), &log.turns, "next", &PipelineConfig::default());
    let analyzer = provider.calls().into_iter().find(|c| c.stage == Stage::Analyzer).ok_or("no analyzer call")?;
    for i in 1..=25 {
        let present = analyzer.system.contains(&format!("utterance-{i:02}"));
        ensure!(present == (i >= 16), "turn {i} present={present}");
    }
    Ok(())
}

const STUDY_FORMS: [&str; 13] = [
    "place 10 64 10 wool 14",
    "summon 50 65 50 wolf",
    "daytime noon",
    "tree 30 64 30 birch",
    "build ladder 12 64 12 6",
    "place torch 11 65 11",
    "weather thunder",
    "fill 0 64 0 4 66 4 stone",
    "build pond 40 64 40 5 3 2",
    "build castle 60 64 60 9 9 6 cobblestone",
    "build house 20 64 30 5 5 4 planks",
    "build garden 70 64 10 6 4",
    "build pyramid 20 64 20 5 3 stone",
];

fn fuzz_line(rng: &mut StdRng) -> String {
    const PIECES: [&str; 24] = [
        "/fill",
        "/setblock",
        "/summon",
        "/give",
        "/tp",
        "/time",
        "/weather",
        "/execute",
        "~",
        "~1~",
        "{",
        "}",
        "[",
        "\"",
        "@e[name=",
        "64",
        "-7",
        "99999999999",
        "wool",
        "14",
        ":",
        ",",
        "<x>",
        "\\",
    ];
    let mut s = String::new();
    for _ in 0..rng.random_range(0..12) {
        if rng.random_bool(0.6) {
            s.push_str(PIECES[rng.random_range(0..PIECES.len())]);
        } else {
            s.push(rng.random::<char>());
        }
        if rng.random_bool(0.5) {
            s.push(' ');
        }
    }
    s
}

fn grammar_round_trip() -> Check {
    let start = Instant::now();
    let mut verbs = BTreeSet::new();
    for line in STUDY_FORMS {
        let ast = parse_study(line).map_err(|e| format!("{line}: {e}"))?;
        let text = ast.to_string();
        let again = parse_study(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure!(again == ast, "{line} round-tripped to {again:?}");
        verbs.insert(ast.verb());
    }
    ensure!(verbs.len() == 13, "{} distinct forms", verbs.len());
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let line = fuzz_line(&mut rng);
        if catch_unwind(|| parse_native(&line)).is_err() {
            return Err(format!("parse_native panicked on {line:?}"));
        }
    }
    within(start, Duration::from_secs(30))
}

fn builder_laws() -> Check {
    let start = Instant::now();
    let stone = BlockId::plain("stone");
    let plan = pyramid(Position::new(20, 64, 20), 5, 3, &stone).map_err(|e| e.to_string())?;
    let layers: Vec<usize> = (64..67).map(|y| plan.placements.iter().filter(|p| p.pos.y == y).count()).collect();
    ensure!(plan.len() == 35 && layers == [25, 9, 1], "pyramid {} placements, layers {layers:?}", plan.len());

    let origin = Position::new(10, 64, 10);
    let mut checked = 0;
    for l in 3..=9 {
        for w in 3..=9 {
            for h in 3..=9 {
                let plans = [house(origin, l, w, h, &stone).ok(), castle(origin, l, w, h, &stone).ok()];
                for plan in plans.into_iter().flatten() {
                    let cells = plan.positions();
                    for x in 1..l as i32 - 1 {
                        for y in 1..h as i32 - 1 {
                            for z in 1..w as i32 - 1 {
                                let p = origin.offset(x, y, z);
                                ensure!(!cells.contains(&p), "{} {l}x{w}x{h} fills interior {p}", plan.label);
                            }
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    ensure!(checked == 343 + 5 * 5 * 6, "{checked} shells checked");
    within(start, Duration::from_secs(30))
}

fn analytics_session(id: &str, commands: &[(&str, u64)], inputs: &[&str]) -> SessionLog {
    let mut log = SessionLog::new(id, Mode::Llm, 0);
    for input in inputs {
        log.append(Role::User, *input, 0);
    }
    for (i, (line, t)) in commands.iter().enumerate() {
        log.append_command(CommandTier::Native, *line, ExecStatus::Ok, i as u64, *t);
    }
    log
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn analytics_oracle() -> Check {
    let logs = [
        analytics_session(
            "a",
            &[("/weather rain", 0), ("/weather clear", 10_000), ("/fill 0 64 0 3 64 3 stone", 20_000)],
            &["make it rain", "clear the sky", "lay a floor"],
        ),
        analytics_session(
            "b",
            &[("/fill 5 64 5 6 64 6 wool 14", 100_000), ("/setblock 1 64 1 torch", 130_000)],
            &["red square", "Red square ", "a torch", "thanks"],
        ),
    ];
    let m = compute_metrics(&logs).map_err(|e| e.to_string())?.overall;
    ensure!(m.session_count == 2, "session_count {}", m.session_count);
    // weather/1, fill/7, fill/8 (data value given), setblock/4
    ensure!(m.unique_commands_total == 4, "unique_commands_total {}", m.unique_commands_total);
    ensure!(close(m.commands_per_session, 2.5), "commands_per_session {}", m.commands_per_session);
    ensure!(close(m.unique_commands_per_session, 2.0), "unique_commands_per_session {}", m.unique_commands_per_session);
    let diversity = m.input_diversity.ok_or("no diversity")?;
    ensure!(close(diversity, 6.0 / 7.0), "input_diversity {diversity}");
    let sps = m.seconds_per_session.ok_or("no seconds_per_session")?;
    ensure!(close(sps, 25.0), "seconds_per_session {sps}");
    let spi = m.seconds_per_input.ok_or("no seconds_per_input")?;
    ensure!(close(spi, 50.0 / 7.0), "seconds_per_input {spi}");

    let top = RankingMatrix { n: 30, conditions: [("llm".into(), [0, 0, 0, 30])].into() };
    ensure!(weighted_rank(&top, "llm").map_err(|e| e.to_string())? == 4.0, "all rank 4");
    let mixed = RankingMatrix { n: 2, conditions: [("llm".into(), [0, 1, 0, 1])].into() };
    ensure!(weighted_rank(&mixed, "llm").map_err(|e| e.to_string())? == 3.0, "rank 2 + rank 4");
    let short = RankingMatrix { n: 30, conditions: [("llm".into(), [0, 0, 0, 29])].into() };
    ensure!(matches!(weighted_rank(&short, "llm"), Err(AnalyticsError::CountMismatch { .. })), "short counts accepted");

    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..1_000 {
        let mut counts = [0u32; 4];
        for c in &mut counts {
            *c = rng.random_range(0..15);
        }
        let from = rng.random_range(0..3);
        counts[from] += 1;
        let n: u32 = counts.iter().sum();
        let score = weighted_rank(&RankingMatrix { n, conditions: [("c".into(), counts)].into() }, "c").unwrap();
        ensure!((1.0..=4.0).contains(&score), "{score} out of range for {counts:?}");
        let mut moved = counts;
        moved[from] -= 1;
        moved[from + 1] += 1;
        let next = weighted_rank(&RankingMatrix { n, conditions: [("c".into(), moved)].into() }, "c").unwrap();
        ensure!(close(next - score, 1.0 / f64::from(n)), "{counts:?} -> {moved:?} moved by {}", next - score);
    }
    Ok(())
}

fn invalid_command(rng: &mut StdRng) -> String {
    let coord = |rng: &mut StdRng| rng.random_range(0..=100);
    let out =
        |rng: &mut StdRng| if rng.random_bool(0.5) { rng.random_range(101..1000) } else { -rng.random_range(1..1000) };
    match rng.random_range(0..6) {
        0 => format!("/setblock {} {} {} stone", out(rng), coord(rng), coord(rng)),
        1 => format!(
            "/fill {} {} {} {} {} {} wool 3",
            coord(rng),
            coord(rng),
            coord(rng),
            coord(rng),
            out(rng),
            coord(rng)
        ),
        2 => format!("/setblock {} {} {} unobtainium_{}", coord(rng), coord(rng), coord(rng), rng.random_range(0..999)),
        3 => format!("/fill {} 64 {} {} 64 {} nosuchblock", coord(rng), coord(rng), coord(rng), coord(rng)),
        4 => {
            let (x, y, z) = (rng.random_range(0..=60), rng.random_range(0..=60), rng.random_range(0..=60));
            let side = rng.random_range(33..=40);
            format!("/fill {x} {y} {z} {} {} {} stone", x + side, y + side, z + side)
        }
        _ => format!("/setblock ~{} ~ ~ stone", rng.random_range(51..500)),
    }
}

fn rejected_atomicity() -> Check {
    let mut rng = StdRng::seed_from_u64(42);
    let mut w = world();
    w.fill(Position::new(0, 64, 0), Position::new(9, 66, 9), &BlockId::plain("stone")).unwrap();
    for _ in 0..1_000 {
        let line = invalid_command(&mut rng);
        let before = w.digest();
        let cmd = parse_native(&line).map_err(|e| format!("{line}: {e}"))?;
        let result = execute(&cmd, &mut w);
        ensure!(result.status == ExecStatus::Rejected, "{line} was accepted");
        ensure!(w.digest() == before, "{line} changed the world");
    }
    Ok(())
}

const BUILDS_A: [&str; 6] = [
    "build pyramid 20 64 20 5 3 stone",
    "build house 30 64 30 5 5 4 planks",
    "fill 0 64 0 4 64 4 glass",
    "weather rain",
    "place 10 64 10 wool 14",
    "build castle 60 64 60 7 7 5 cobblestone",
];
const BUILDS_B: [&str; 6] =
    ["please build a dutch flag", "a stone tower", "make a pond", "thunder please", "midnight", "I want a puppy"];

fn session_isolation() -> Check {
    let deps = || SessionDeps::new(Arc::new(ManualClock::new(0))).with_provider(Arc::new(DemoProvider));
    let manager = Arc::new(SessionManager::new(deps()));
    let a = manager.create(&SessionConfig::new(Mode::Command)).map_err(|e| e.to_string())?;
    let b = manager.create(&SessionConfig::new(Mode::Llm)).map_err(|e| e.to_string())?;
    let barrier = Arc::new(Barrier::new(2));
    let handles: Vec<_> = [(a.clone(), BUILDS_A), (b.clone(), BUILDS_B)]
        .into_iter()
        .map(|(id, inputs)| {
            let (manager, barrier) = (manager.clone(), barrier.clone());
            std::thread::spawn(move || {
                for input in inputs {
                    barrier.wait();
                    manager.handle_chat(&id, input).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().map_err(|_| "session thread panicked")?;
    }

    let replay = SessionManager::new(deps());
    for (id, mode, inputs) in [(&a, Mode::Command, BUILDS_A), (&b, Mode::Llm, BUILDS_B)] {
        let solo = replay.create(&SessionConfig::new(mode)).map_err(|e| e.to_string())?;
        for input in inputs {
            replay.handle_chat(&solo, input).map_err(|e| e.to_string())?;
        }
        let concurrent = manager.get(id).unwrap().lock().unwrap().world().digest();
        let sequential = replay.get(&solo).unwrap().lock().unwrap().world().digest();
        ensure!(concurrent == sequential, "{mode:?} session diverged from its replay");
    }
    let wa = manager.get(&a).unwrap().lock().unwrap().world().content_digest();
    let wb = manager.get(&b).unwrap().lock().unwrap().world().content_digest();
    ensure!(wa != wb, "sessions ended with identical worlds");
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("dutch flag replay", dutch_flag_replay),
        ("puppy robot replay", puppy_robot_replay),
        ("retry cap", retry_cap),
        ("memory window", memory_window),
        ("grammar round trip", grammar_round_trip),
        ("builder laws", builder_laws),
        ("analytics oracle", analytics_oracle),
        ("rejected mutation atomicity", rejected_atomicity),
        ("session isolation", session_isolation),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let ms = start.elapsed().as_millis();
        match result {
            Ok(()) => println!("PASS {name} ({ms} ms)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name} ({ms} ms): {reason}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
