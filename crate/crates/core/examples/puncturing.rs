//! A (974, 128) punctured code: 50 codeword positions are filled with
//! random bits at enrollment and decoded from zero LLRs.

use polarpuf::codec::DecoderPolicy;
use polarpuf::construction::{CodeSpec, ConstructParams};
use polarpuf::hash::HashConfig;
use polarpuf::puf::PufModel;
use polarpuf::scheme::{enroll_syndrome, fill_punctured, regenerate_syndrome};

fn main() -> polarpuf::Result<()> {
    let spec = CodeSpec::construct(ConstructParams::new(1024, 128).puncture(50))?;
    println!(
        "punctured positions {:?}..{:?}, PUF cells {}",
        spec.puncture().indices().as_slice().first().unwrap(),
        spec.puncture().indices().as_slice().last().unwrap(),
        spec.puf_len()
    );
    let device = PufModel::new(spec.puf_len(), 0.15, 8)?;
    let cells = device.draw_enrollment();
    let x = fill_punctured(&cells, &spec, &mut rand::rngs::OsRng)?;
    let (key, helper) = enroll_syndrome(&x, &spec, HashConfig::default())?;

    let mut ok = 0;
    for t in 0..200 {
        let y = device.draw_authentication(&cells, t)?;
        let r = regenerate_syndrome(&y, &helper, &spec, 0.15, &DecoderPolicy::scl(4)?)?;
        ok += usize::from(r.key.as_ref() == Some(&key));
    }
    println!("SCL(4) regenerated the key in {ok}/200 noisy re-reads");
    Ok(())
}
