//! The counterexample kernel at a smaller ε than the acceptance scan uses.

use lrtrunc::kernel::EdgeKernel;
use lrtrunc::percolation::{axis_segment, PhiInstance};
use lrtrunc::Kernel;

fn phi(k: u64, eps: f64, trials: u64) -> lrtrunc::EstimateWithCI {
    let kernel = Kernel::counterexample(3, 5, eps).unwrap();
    let inst = PhiInstance::new(&kernel, &axis_segment(3, k), kernel.support_radius().unwrap()).unwrap();
    // Same seed for every ε: the inner edges are axis edges, so the samples
    // are shared and only the ε-weighted exits change.
    inst.monte_carlo(trials, 0xC0FFEE ^ k, 1).unwrap()
}

#[test]
fn phi_linear_in_eps_under_common_random_numbers() {
    let (a, b, c) = (phi(16, 1e-4, 200), phi(16, 1e-3, 200), phi(16, 1e-2, 200));
    let slope1 = (b.estimate - a.estimate) / 9e-4;
    let slope2 = (c.estimate - b.estimate) / 9e-3;
    assert!((slope1 - slope2).abs() < 1e-6 * slope1.abs().max(1.0), "{slope1} vs {slope2}");
}

#[test]
fn phi_drops_below_one_for_small_eps_and_large_k() {
    let k = 131_072;
    let small = phi(k, 1e-6, 40);
    let large = phi(k, 1e-3, 40);
    println!("K = {k}: phi(1e-6) = {:.3} [{:.3}, {:.3}], phi(1e-3) = {:.3}", small.estimate, small.ci_low, small.ci_high, large.estimate);
    assert!(small.ci_high < 1.0);
    assert!(large.ci_low > 1.0);
}
