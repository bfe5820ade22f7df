//! Line-per-outcome mix records.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mixers::MixOutcome;

/// `name partner xs ys xe ye lambda_a epsilon_b w_0 .. w_{K-1}`, with `nomix`
/// in place of the four box fields when no box was drawn.
pub fn format_mix_record(name: &str, outcome: &MixOutcome) -> String {
    let mut line = format!("{name} {}", outcome.partner_index);
    match outcome.crop {
        Some(b) => write!(line, " {} {} {} {}", b.xs, b.ys, b.xe, b.ye),
        None => write!(line, " nomix"),
    }
    .expect("writing to a String");
    write!(line, " {:.9} {:.9}", outcome.lambda_a, outcome.epsilon_b).expect("writing to a String");
    for w in outcome.label.weights() {
        write!(line, " {w:.9}").expect("writing to a String");
    }
    line
}

/// Writes one record per outcome. `names[i]` labels `outcomes[i]`.
pub fn write_mix_records(
    names: &[String],
    outcomes: &[MixOutcome],
    path: impl AsRef<Path>,
) -> Result<()> {
    if names.len() != outcomes.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} names", outcomes.len()),
            actual: format!("{} names", names.len()),
        });
    }
    let mut text = String::new();
    for (name, outcome) in names.iter().zip(outcomes) {
        text.push_str(&format_mix_record(name, outcome));
        text.push('\n');
    }
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
