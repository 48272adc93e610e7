//! A small failure-rate sweep with exact binomial intervals, written as
//! CSV to stdout.

use polarpuf::codec::DecoderPolicy;
use polarpuf::construction::ConstructParams;
use polarpuf::montecarlo::{run_sweep, SpecSource, SweepConfig};

fn main() -> polarpuf::Result<()> {
    let cfg = SweepConfig::new(
        SpecSource::Construct(ConstructParams::new(128, 16)),
        vec![0.20, 0.25, 0.30],
        vec![DecoderPolicy::sc(), DecoderPolicy::scl(4)?, DecoderPolicy::adaptive(8)?],
        4000,
        42,
    );
    let report = run_sweep(&cfg)?;
    eprint!("{}", report.summary_table());
    print!("{}", report.to_csv());
    Ok(())
}
