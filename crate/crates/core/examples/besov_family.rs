//! Thermic Besov norms of the mollified Dirac family: the `B^{-1}` norm
//! stays bounded as the width shrinks while the sup norm blows up like
//! `1 / delta`.
//!
//! cargo run --release --example besov_family

use mfchaos::kernels::{besov_thermic_norm, KernelFamily, KernelSpec, SampledField};

fn main() -> mfchaos::Result<()> {
    println!("{:>8} {:>12} {:>12}", "delta", "B^-1 norm", "sup norm");
    for delta in [0.2, 0.1, 0.05, 0.025] {
        let kernel = KernelSpec::new(KernelFamily::DiracApprox { v: vec![1.0] }, delta, 1).build()?;
        let field = SampledField::from_fn(1, 4.0, 1601, |x| kernel.eval(0.0, x, &[0.0]).unwrap()[0])?;
        let norm = besov_thermic_norm(&field, -1.0, 1e-4, 1.0)?;
        println!("{delta:>8} {norm:>12.5} {:>12.4}", field.sup_norm());
    }
    Ok(())
}
