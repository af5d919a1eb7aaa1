//! Regularity budget of the built-in kernels: nominal Besov exponent,
//! the Hurst threshold and the verdict at a few Hurst indices.
//!
//! cargo run --release --example kernel_budget

use mfchaos::fbm::HurstParam;
use mfchaos::kernels::{kernel_report, KernelFamily, KernelSpec, MatrixSpec};

fn main() -> mfchaos::Result<()> {
    let kernels = [
        KernelSpec::new(KernelFamily::TanhDifference, 0.0, 1),
        KernelSpec::new(KernelFamily::DiracApprox { v: vec![1.0] }, 0.05, 1),
        KernelSpec::new(KernelFamily::LogGradient { matrix: MatrixSpec::NegIdentity }, 0.1, 2),
        KernelSpec::new(KernelFamily::LogGradient { matrix: MatrixSpec::Symplectic }, 0.1, 2),
        KernelSpec::new(KernelFamily::RieszGradient { s: 0.5, matrix: MatrixSpec::Identity }, 0.1, 3),
    ];
    println!("{:<16} {:>3} {:>7} {:>26}  {}", "family", "d", "alpha", "threshold", "H = 0.1 / 0.3 / 0.5");
    for spec in &kernels {
        spec.validate()?;
        let verdicts: Vec<&str> = [0.1, 0.3, 0.5]
            .iter()
            .map(|&h| if kernel_report(spec, 2.0, HurstParam::new(h).unwrap()).admissible { "yes" } else { "no" })
            .collect();
        let r = kernel_report(spec, 2.0, HurstParam::new(0.1)?);
        println!(
            "{:<16} {:>3} {:>7} {:>26}  {}",
            r.family,
            r.dim,
            r.nominal_alpha,
            r.threshold,
            verdicts.join(" / ")
        );
    }
    Ok(())
}
