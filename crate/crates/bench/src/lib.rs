//! Benchmark fixtures shared by the criterion targets in `benches/`.

use gaussnet_core::{inject_uniform, FaultSet, FaultSpec, NetworkModulus, Topology};

/// Topology for `α = k + (k+1)i` and a uniform fault set at `density`.
pub fn fixture(k: i64, density: f64, seed: u64) -> (Topology, FaultSet) {
    let topo = Topology::new(NetworkModulus::from_k(k).expect("valid k"));
    let faults =
        inject_uniform(&topo, &FaultSpec::uniform(density, seed), &[0]).expect("feasible density");
    (topo, faults)
}
