use jpa_core::io::{emit_plot, PlotSpec, ResultRecord};
use jpa_core::Error;

use super::{echo, emit, read_text};
use crate::args::PlotArgs;
use crate::CliResult;

fn parse_spec(text: &str, toml_syntax: bool) -> CliResult<PlotSpec> {
    let spec = if toml_syntax {
        toml::from_str(text).map_err(|e| Error::Schema(format!("plot spec: {}", e.message())))?
    } else {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("plot spec: {e}")))?
    };
    Ok(spec)
}

pub fn plot(a: &PlotArgs) -> CliResult<ResultRecord> {
    let (record_text, record_bytes) = read_text(&a.record)?;
    let (spec_text, spec_bytes) = read_text(&a.spec)?;
    let source = ResultRecord::from_json(&record_text)?;
    source.validate()?;
    let is_toml = a
        .spec
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let spec = parse_spec(&spec_text, is_toml)?;
    let svg = emit_plot(&spec, &source)?;

    let mut rec = ResultRecord::new("plot");
    echo(&mut rec, a);
    rec.input_file("record", &record_bytes).input_file("spec", &spec_bytes);
    emit(&mut rec, &a.svg, svg.as_bytes())?;
    Ok(rec)
}
