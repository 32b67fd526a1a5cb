//! Reading a tuple file and writing a report bundle.

use serde_json::json;
use thermoform::pressure::pressure_bracket;
use thermoform::report::{pressure_series, write_bundle, RunReport};
use thermoform::{spec_file, Budget};

const TEXT: &str = r#"{
  "dimension": 2,
  "label": "half-shear",
  "matrices": [[["1", "1/2"], ["0", "1"]], [["1", "0"], ["1/2", "1"]]]
}"#;

fn main() -> thermoform::Result<()> {
    let t = spec_file::parse_tuple(TEXT)?;
    let budget = Budget::default();
    let b = pressure_bracket(&t, 2.0, 8, &budget)?;
    let report = RunReport::new("pressure", "inline", &t, json!({ "s": 2, "N": 8 }), &budget).with_results(&b)?;
    let dir = std::env::temp_dir().join("thermoform-example");
    write_bundle(&dir, &report, &pressure_series(&b), None)?;
    println!("digest {}, P(2) = {:?}, bundle in {}", report.input.digest, b.exact, dir.display());
    Ok(())
}
