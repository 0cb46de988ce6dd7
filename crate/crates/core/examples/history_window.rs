//! History windows on the hidden-mirror gridworld. The last move reveals whether
//! controls are mirrored, but the first step still has to be taken blind, so the
//! checker keeps reporting a conflict until θ itself is observed.
//!
//! cargo run --example history_window

use genbench::optimality::{exact_check, DEFAULT_BUDGET, DEFAULT_TIE_TOL};
use genbench::wrappers::{history_wrapper, HistoryOptions, DEFAULT_HISTORY_CAP};
use genbench::zoo::make_hidden_param_gridworld;
use genbench::EmpiricalSample;

fn main() -> anyhow::Result<()> {
    let family = make_hidden_param_gridworld(3, 3, (1, 1), (0, 1))?;
    let both = EmpiricalSample::new(family.params().all().unwrap_or_default().to_vec(), 0, "all");
    for k in 1..=3 {
        for include_actions in [false, true] {
            let opts = HistoryOptions {
                k,
                include_actions,
                cap: DEFAULT_HISTORY_CAP,
            };
            let lifted = history_wrapper(&family, &both, &opts)?;
            let cert = exact_check(&lifted, &both, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET)?;
            println!("k={k} actions={include_actions}: {}", cert.verdict.name());
        }
    }
    Ok(())
}
