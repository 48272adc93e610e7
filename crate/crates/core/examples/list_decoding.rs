//! Compares SC with hash-aided list decoding on one hard instance and
//! shows the candidate list.

use polarpuf::codec::{scl_candidates, DecoderPolicy, FKernel};
use polarpuf::construction::{CodeSpec, ConstructParams};
use polarpuf::hash::HashConfig;
use polarpuf::puf::PufModel;
use polarpuf::scheme::{enroll_syndrome, observation_llrs, regenerate_syndrome};

fn main() -> polarpuf::Result<()> {
    let spec = CodeSpec::construct(ConstructParams::new(256, 32))?;
    let p = 0.22;
    let device = PufModel::new(256, p, 11)?;
    let x = device.draw_enrollment();
    let (key, helper) = enroll_syndrome(&x, &spec, HashConfig::default())?;

    // Look for a re-read that SC gets wrong.
    let (trial, y) = (0..)
        .map(|t| (t, device.draw_authentication(&x, t).unwrap()))
        .find(|(_, y)| !regenerate_syndrome(y, &helper, &spec, p, &DecoderPolicy::sc()).unwrap().success)
        .unwrap();
    println!("trial {trial}: SC fails");

    let llr = observation_llrs(&y, &spec, p)?;
    let list = scl_candidates(&llr, &spec, helper.w().unwrap(), 8, FKernel::MinSum)?;
    for (rank, c) in list.candidates.iter().enumerate() {
        let marker = if c.key(&spec) == *key.bits() { "  <- enrolled key" } else { "" };
        println!("  #{rank} metric {:8.3}{marker}", c.metric);
    }

    for l in [2, 4, 8] {
        let r = regenerate_syndrome(&y, &helper, &spec, p, &DecoderPolicy::scl(l)?)?;
        println!("SCL L={l}: success={} ops={}", r.success, r.outcome.ops());
    }
    Ok(())
}
