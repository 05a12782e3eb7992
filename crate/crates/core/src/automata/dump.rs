use std::fmt::Write;

use serde_json::json;

use super::{Automaton, RunTrace};

/// JSON description of an automaton over its materialized states. Transitions are
/// compositional and not serialized.
pub fn describe(a: &dyn Automaton) -> String {
    let n = a.materialized() as u32;
    let names: Vec<String> = (0..n).map(|s| a.state_name(s)).collect();
    let pick = |f: &dyn Fn(u32) -> bool| -> Vec<&str> {
        (0..n)
            .filter(|&s| f(s))
            .map(|s| names[s as usize].as_str())
            .collect()
    };
    let v = json!({
        "name": a.name(),
        "signature": a.alphabet().show(a.signature()),
        "bound": a.bound(),
        "deterministic": a.deterministic(),
        "forgetful": a.forgetful(),
        "materialized_states": n,
        "states": names,
        "accepting": pick(&|s| a.accepting(s)),
        "rejecting": pick(&|s| a.rejecting(s)),
    });
    serde_json::to_string_pretty(&v).expect("json values serialize")
}

/// Trace as TSV with columns `round`, `node`, `state_debug_name`.
pub fn trace_tsv(a: &dyn Automaton, trace: &RunTrace) -> String {
    let mut out = String::from("round\tnode\tstate_debug_name\n");
    for (t, cfg) in trace.rounds.iter().enumerate() {
        for (v, &s) in cfg.iter().enumerate() {
            writeln!(out, "{t}\t{v}\t{}", a.state_name(s)).expect("write to string");
        }
    }
    out
}
