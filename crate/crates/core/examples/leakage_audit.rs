//! Zero-leakage audit: the helper data W and the key S come from disjoint
//! column sets of the invertible G_N, so the ranks add up and
//! I(S; W) = 0 for uniform PUF bits.

use polarpuf::construction::{CodeSpec, ConstructParams, PuncturePattern};
use polarpuf::gf2::IndexSet;
use polarpuf::scheme::leakage_audit;

fn main() -> polarpuf::Result<()> {
    let demo = CodeSpec::new(3, IndexSet::new(vec![1, 2, 3, 4, 6], 8)?, 0.15, PuncturePattern::none(8))?;
    println!("(8,3) demo: {}", leakage_audit(&demo));
    for (n, k) in [(64, 16), (256, 32), (1024, 128)] {
        let spec = CodeSpec::construct(ConstructParams::new(n, k))?;
        println!("({n},{k}): {}", leakage_audit(&spec));
    }
    Ok(())
}
