//! The polar transform on a few blocks.
use polarcomm::transform::{apply_transform, bit_reversal_perm, BitBlock};

fn show(b: &BitBlock) -> String {
    b.bits().iter().map(|x| x.to_string()).collect()
}

fn main() -> polarcomm::Result<()> {
    println!("bit reversal, N = 8: {:?}", bit_reversal_perm(3));
    for bits in [vec![1, 0, 0, 0], vec![0, 0, 0, 1], vec![1, 0, 1, 1, 0, 0, 1, 0]] {
        let u = BitBlock::new(bits)?;
        let v = apply_transform(&u);
        println!("u = {}  ->  v = uG = {}  ->  vG = {}", show(&u), show(&v), show(&apply_transform(&v)));
    }
    Ok(())
}
