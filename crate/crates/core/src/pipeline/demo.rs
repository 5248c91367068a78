use super::provider::{echo_analysis, Provider, ProviderError, ProviderRequest, Stage};

/// Keyword-driven offline provider for demos and the default server setup.
/// Output depends only on the request text.
#[derive(Debug, Default, Clone, Copy)]
pub struct DemoProvider;

fn cot(reflection: &str, steps: &[&str], instructions: &[String], comment: &str) -> String {
    let planning: Vec<String> = steps.iter().enumerate().map(|(i, s)| format!("Step {}: {s}", i + 1)).collect();
    format!(
        "Reflection: {reflection}\nPlanning: {}\nInstructions:\n{}\nSelf-check: All coordinates are within (0-100); Correct Minecraft 1.11.2 block IDs used; No placeholder <x> <y> <z>\nFinal Comment: {comment}",
        planning.join("; "),
        instructions.join("\n"),
    )
}

fn reply_for(input: &str) -> String {
    let text = input.to_lowercase();
    let has = |words: &[&str]| words.iter().any(|w| text.contains(w));

    if has(&["torture", "kill", "hurt", "harm"]) {
        return "Sorry, I can't assist with that request. How about we build something together instead?".into();
    }
    if has(&["flag", "vlag"]) {
        let lines = [
            "/fill 1 64 0 1 64 3 wool 14 # red stripe",
            "/fill 2 64 0 2 64 3 wool 0 # white stripe",
            "/fill 3 64 0 3 64 3 wool 11 # blue stripe",
        ];
        return cot(
            "Build a flag from coloured wool on the ground.",
            &["Lay the first stripe", "Lay the remaining stripes"],
            &lines.map(String::from),
            "Your flag is ready!",
        );
    }
    if has(&["puppy", "dog", "wolf"]) {
        let lines = [
            "/summon wolf ~ ~1 ~ {CustomName: \"Puppy Robot\", CustomNameVisible: 1b, Tame: 1}",
            "/give @e[name=\"Puppy Robot\"] minecraft:diamond_chestplate",
            "/tp @e[name=\"Puppy Robot\"] @p",
        ];
        return cot(
            "A robot puppy companion.",
            &["Summon a tame wolf", "Give it armour", "Bring it to the player"],
            &lines.map(String::from),
            "Your puppy is here!",
        );
    }
    for weather in ["thunder", "rain", "clear"] {
        if text.contains(weather) {
            return cot(
                &format!("Change the weather to {weather}."),
                &["Set the weather"],
                &[format!("/weather {weather}")],
                "Weather updated.",
            );
        }
    }
    for time in ["midnight", "night", "noon", "day"] {
        if text.contains(time) {
            return cot(
                &format!("Make it {time}."),
                &["Set the time"],
                &[format!("/time set {time}")],
                "Time changed.",
            );
        }
    }
    if has(&["pond", "water", "pool"]) {
        return cot(
            "Dig a small pond next to the player.",
            &["Fill a hollow with water"],
            &["/fill ~2 ~-1 ~2 ~4 ~-2 ~4 water".to_string()],
            "Enjoy the pond!",
        );
    }
    if has(&["tower", "pillar"]) {
        return cot(
            "Raise a stone tower.",
            &["Stack stone upwards"],
            &["/fill ~2 ~ ~2 ~2 ~6 ~2 stone".to_string()],
            "Tower built.",
        );
    }
    let echoed: String = input.split_whitespace().collect::<Vec<_>>().join(" ");
    cot("Reply to the player.", &["Answer in chat"], &[format!("/say You said: {echoed}")], "Anything else?")
}

impl Provider for DemoProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        match request.stage {
            Stage::Analyzer => Ok(echo_analysis(request)),
            Stage::Generator => {
                let input = request.messages.iter().rev().find(|m| m.role == "user").map(|m| m.content.as_str());
                Ok(reply_for(input.unwrap_or_default()))
            }
        }
    }
}
