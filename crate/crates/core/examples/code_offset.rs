//! Syndrome and code-offset constructions on the same readouts: equal
//! decoding work, different helper sizes.

use polarpuf::codec::DecoderPolicy;
use polarpuf::construction::{CodeSpec, ConstructParams};
use polarpuf::hash::HashConfig;
use polarpuf::puf::{stream_rng, uniform_bits, PufModel, StreamDomain};
use polarpuf::scheme::{enroll_code_offset, enroll_syndrome, regenerate_code_offset, regenerate_syndrome, SecretKey};

fn main() -> polarpuf::Result<()> {
    let spec = CodeSpec::construct(ConstructParams::new(64, 16))?;
    let p = 0.25;
    let device = PufModel::new(64, p, 3)?;
    let policy = DecoderPolicy::sc();
    let (mut fail_syn, mut fail_off) = (0, 0);
    let trials = 5000;
    for t in 0..trials {
        let x = device.draw_enrollment_for(t);
        let y = device.draw_authentication(&x, t)?;

        let (s, w) = enroll_syndrome(&x, &spec, HashConfig::default())?;
        fail_syn += u32::from(regenerate_syndrome(&y, &w, &spec, p, &policy)?.key.as_ref() != Some(&s));

        let chosen = SecretKey::new(uniform_bits(&mut stream_rng(3, StreamDomain::KeyChoice, t), 16));
        let off = enroll_code_offset(&chosen, &x, &spec, HashConfig::default())?;
        fail_off += u32::from(regenerate_code_offset(&y, &off, &spec, p, &policy)?.key.as_ref() != Some(&chosen));

        if t == 0 {
            println!("helper bits: syndrome {}, code-offset {}", w.payload_bits(), off.payload_bits());
        }
    }
    println!("failures over {trials} paired trials: syndrome {fail_syn}, code-offset {fail_off}");
    Ok(())
}
