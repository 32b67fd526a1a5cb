//! Full classification report for a built-in tuple, given by name.
//!
//! `cargo run --example classify_report -- 'alpha(3/5,4/5)'`

use thermoform::builtins::builtin;
use thermoform::classify::{classification_report, ClassifyOptions};

fn main() -> thermoform::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "notmix2".into());
    let report = classification_report(&builtin(&name)?, &ClassifyOptions::default());
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
