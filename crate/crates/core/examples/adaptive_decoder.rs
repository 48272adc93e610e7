//! The adaptive decoder pays for list decoding only when SC fails the
//! hash check. Prints the average work per regeneration across noise
//! levels.

use polarpuf::codec::DecoderPolicy;
use polarpuf::construction::{CodeSpec, ConstructParams};
use polarpuf::hash::HashConfig;
use polarpuf::puf::PufModel;
use polarpuf::scheme::{enroll_syndrome, regenerate_syndrome};

fn main() -> polarpuf::Result<()> {
    let spec = CodeSpec::construct(ConstructParams::new(256, 16))?;
    let policies = ["sc", "scl:8", "adaptive:8"].map(|s| s.parse::<DecoderPolicy>().unwrap());
    println!("{:>5} {:>12} {:>12} {:>12}", "p", "sc", "scl:8", "adaptive:8");
    for p in [0.05, 0.15, 0.25, 0.30] {
        let device = PufModel::new(256, p, 1)?;
        let mut ops = [0u64; 3];
        let trials = 400;
        for t in 0..trials {
            let x = device.draw_enrollment_for(t);
            let (_, helper) = enroll_syndrome(&x, &spec, HashConfig::new(32)?)?;
            let y = device.draw_authentication(&x, t)?;
            for (slot, policy) in ops.iter_mut().zip(&policies) {
                *slot += regenerate_syndrome(&y, &helper, &spec, p, policy)?.outcome.ops();
            }
        }
        let mean = ops.map(|o| o as f64 / trials as f64);
        println!("{p:>5} {:>12.1} {:>12.1} {:>12.1}", mean[0], mean[1], mean[2]);
    }
    Ok(())
}
