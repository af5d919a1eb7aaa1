//! One coupled run: the particle system and its McKean-Vlasov copies share
//! initial data and noise, and the coupling error measures their distance.
//!
//! cargo run --release --example coupled_run

use mfchaos::dynamics::{build_mkv_reference, CouplingRun, InitialLaw, SimConfig};
use mfchaos::fbm::{HurstParam, SamplingMethod, TimeGrid};
use mfchaos::kernels::{KernelFamily, KernelSpec};
use mfchaos::metrics::{coupling_error, observable_error, TestFunction};
use mfchaos::rng::derive_seed;

fn main() -> mfchaos::Result<()> {
    let particles = 64;
    let sim = SimConfig {
        particles,
        dim: 1,
        hurst: HurstParam::new(0.2)?,
        grid: TimeGrid::new(1.0, 128)?,
        kernel: KernelSpec::new(KernelFamily::DiracApprox { v: vec![1.0] }, 0.1, 1),
        init: InitialLaw::Gaussian { mean: vec![0.0], covariance: vec![vec![1.0]] },
        replicas: 50,
        moment: 2.0,
        mkv_size: 4 * particles,
        seed: 2024,
        allow_stiff: false,
        noise_method: SamplingMethod::default(),
    };
    let noise = sim.sample_noise(particles)?;
    let initials = sim.sample_initials(particles)?;
    let flow = build_mkv_reference(&sim, derive_seed(sim.seed, "mkv-reference"))?;
    let run = CouplingRun::run(&sim, &flow, &noise, &initials)?;
    let c = coupling_error(&run, sim.moment)?;
    let o = observable_error(&run.ips, &flow, &TestFunction::Tanh, sim.moment)?;
    println!("N = {particles}, M = {}, R = {}", flow.size(), sim.replicas);
    println!("coupling error   {:.5} +/- {:.5}", c.value, c.stderr);
    println!("tanh observable  {:.5} +/- {:.5}", o.value, o.stderr);
    Ok(())
}
