//! File formats and result plumbing: Touchstone one-port files, the CSV
//! table schemas, JSON result records with content digests, and SVG plots.

mod plot;
mod record;
mod tables;
mod touchstone;

pub use plot::{emit_plot, AxisSpec, PlotKind, PlotSpec};
pub use record::{sha256_hex, Grid, GridAxis, Provenance, Quantity, ResultRecord, Series};
pub use tables::{
    parse_gate_sweep_csv, parse_hemt_csv, parse_power_sweep_csv, parse_reflection_csv, parse_spectrum_csv, parse_table,
    write_gate_sweep_csv, write_hemt_csv, write_power_sweep_csv, write_reflection_csv, write_spectrum_csv,
    PowerSweepRow, Schema, Table,
};
pub use touchstone::{parse_touchstone_s1p, write_touchstone_s1p};
