#![allow(dead_code)]

pub mod oracles;

use safeguard_core::orchestra::{
    build_registry, react_loop, EpisodeConfig, EpisodeOutput, EpisodeTrace, LatencyModel, RulesPolicy, ToolCategory,
};
use safeguard_core::worldsim::{load_scenario, Scenario};
use std::path::PathBuf;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

pub fn scenario(name: &str) -> Scenario {
    load_scenario(scenario_path(name)).unwrap()
}

pub fn run(sc: &Scenario, seed: u64) -> EpisodeOutput {
    let config = EpisodeConfig {
        seed,
        ..EpisodeConfig::default()
    };
    react_loop(sc, &mut RulesPolicy::new(), &config).unwrap()
}

/// First violation of the trace contract, if any: non-decreasing time, step
/// spans equal to fixed latency models, and every actuation preceded by a
/// successful perception call and a successful reasoning call.
pub fn trace_violation(trace: &EpisodeTrace) -> Option<String> {
    let reg = build_registry();
    let (mut perceived, mut reasoned) = (false, false);
    let mut prev = 0.0f64;
    for s in &trace.steps {
        if s.sim_time < prev - 1e-9 || s.started_at() < prev - 1e-9 {
            return Some(format!("step {} goes back in time", s.index));
        }
        if (s.started_at() - prev - s.idle_before).abs() > 1e-6 {
            return Some(format!("step {} start does not follow the idle time", s.index));
        }
        prev = s.sim_time;
        let Some(tool) = s.observation.tool.as_deref() else {
            continue;
        };
        let d = reg.lookup(tool).unwrap();
        if let (true, LatencyModel::Fixed { seconds }) = (s.observation.ok, &d.latency) {
            if (s.latency - seconds).abs() > 1e-9 {
                return Some(format!("step {} `{tool}` took {} not {seconds}", s.index, s.latency));
            }
        }
        match d.category {
            ToolCategory::Perception if s.observation.ok => perceived = true,
            ToolCategory::Reasoning if s.observation.ok => reasoned = true,
            ToolCategory::Actuation if s.observation.ok && !(perceived && reasoned) => {
                return Some(format!("actuation `{tool}` at step {} without perception and reasoning", s.index));
            }
            _ => {}
        }
    }
    None
}
