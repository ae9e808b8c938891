//! Unstable pole, unstable zero and the complementary-sensitivity lower bound
//! as the fixation point moves down the pole.

use occball::limits::fixation_limits;
use occball::PhysicalParams;

fn main() -> occball::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>8}", "ell0", "pole", "zero", "bound");
    for ell0 in [1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.6, 0.5] {
        let row = fixation_limits(&PhysicalParams::with_fixation(ell0)?)?;
        let zero = row.zero.map_or("-".to_string(), |z| format!("{z:.6}"));
        println!("{:>6.2} {:>10.6} {:>10} {:>8.4}", row.ell0, row.pole, zero, row.bound);
    }
    Ok(())
}
