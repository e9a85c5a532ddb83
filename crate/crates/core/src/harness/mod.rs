//! Sweep runner, CSV/SVG output, channel JSON and the verification suite
//! behind the `petz` command line.

mod config;
mod io;
mod output;
mod sweep;
mod verify;

pub use config::{default_p_grid, parse_grid, Backend, NamedState, SweepConfig, DEFAULT_EPSILONS};
pub use io::{channel_from_json, channel_to_json, ChannelJson};
pub use output::{emit_csv, emit_plot, sig10, to_csv, to_svg, CSV_HEADER};
pub use sweep::{run_sweep, SweepRecord};
pub use verify::{full_grid, interior_grid, verify_all, CheckResult, VerifyOptions, VerifyReport, EPSILONS};
