//! The (8, 3) example code: generator matrix, frozen/information column
//! slices and one encode/extract round.

use polarpuf::codec::polar_transform;
use polarpuf::gf2::{mat_vec_mul, polar_generator, select_columns, BitVector};

fn show(name: &str, m: &polarpuf::gf2::BitMatrix) {
    println!("{name}:");
    for r in 0..m.rows() {
        let row: String = (0..m.cols()).map(|c| if m.get(r, c) { '1' } else { '.' }).collect();
        println!("  {row}");
    }
}

fn main() -> polarpuf::Result<()> {
    let g = polar_generator(8)?;
    show("G_8", &g);
    show("G_F, F = {1,2,3,4,6}", &select_columns(&g, &[1, 2, 3, 4, 6])?);
    show("G_Fc, Fc = {5,7,8}", &select_columns(&g, &[5, 7, 8])?);

    let x = BitVector::from_bits(&[1, 0, 1, 1, 0, 1, 0, 0]);
    let c = mat_vec_mul(&x, &g)?;
    assert_eq!(c, polar_transform(&x)?);
    println!("x = {:?}\nC = x G_8 = {:?}", x, c);
    println!("key S = C[5,7,8] = {}{}{}", c.get(4) as u8, c.get(6) as u8, c.get(7) as u8);
    println!("back: C G_8 = {:?}", polar_transform(&c)?);
    Ok(())
}
