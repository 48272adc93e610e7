//! Enrolls a simulated SRAM PUF with the syndrome construction and
//! regenerates its key from a noisy re-read.

use polarpuf::codec::DecoderPolicy;
use polarpuf::construction::{CodeSpec, ConstructParams};
use polarpuf::hash::HashConfig;
use polarpuf::puf::PufModel;
use polarpuf::scheme::{enroll_syndrome, regenerate_syndrome};

fn main() -> polarpuf::Result<()> {
    let spec = CodeSpec::construct(ConstructParams::new(1024, 128))?;
    let device = PufModel::new(1024, 0.15, 2024)?;

    let x = device.draw_enrollment();
    let (key, helper) = enroll_syndrome(&x, &spec, HashConfig::default())?;
    println!("enrolled {:?}; helper is {} bytes on disk", key, helper.to_bytes().len());

    let y = device.draw_authentication(&x, 0)?;
    let flips = x.xor(&y)?.count_ones();
    println!("re-read differs in {flips} of 1024 cells");

    let r = regenerate_syndrome(&y, &helper, &spec, 0.15, &DecoderPolicy::sc())?;
    println!(
        "SC: success={} f-ops={} g-ops={}",
        r.success, r.outcome.ops_f, r.outcome.ops_g
    );
    assert_eq!(r.key.as_ref(), Some(&key));
    Ok(())
}
