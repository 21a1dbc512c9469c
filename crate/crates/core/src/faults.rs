//! Static node-fault generation.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Topology;

/// Largest accepted fault density.
pub const MAX_DENSITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FaultMode {
    Uniform,
    /// Faults concentrate around `num_clusters` seed nodes with a Gaussian
    /// kernel over hop distance.
    Clustered {
        cluster_sigma: f64,
        num_clusters: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    #[serde(flatten)]
    pub mode: FaultMode,
    pub density: f64,
    pub seed: u64,
}

impl FaultSpec {
    pub fn uniform(density: f64, seed: u64) -> Self {
        Self {
            mode: FaultMode::Uniform,
            density,
            seed,
        }
    }

    pub fn clustered(density: f64, seed: u64, cluster_sigma: f64, num_clusters: usize) -> Self {
        Self {
            mode: FaultMode::Clustered {
                cluster_sigma,
                num_clusters,
            },
            density,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_DENSITY).contains(&self.density) {
            return Err(Error::InvalidDensity(self.density));
        }
        if let FaultMode::Clustered {
            cluster_sigma,
            num_clusters,
        } = self.mode
        {
            if !(cluster_sigma.is_finite() && cluster_sigma > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "cluster_sigma must be positive, got {cluster_sigma}"
                )));
            }
            if num_clusters == 0 {
                return Err(Error::InvalidConfig("num_clusters must be positive".into()));
            }
        }
        Ok(())
    }

    /// `floor(density · n_nodes)`.
    pub fn fault_count(&self, n_nodes: usize) -> usize {
        // the epsilon keeps products like 0.29 · 100 from flooring to 28
        (self.density * n_nodes as f64 + 1e-9).floor() as usize
    }

    /// Generate with whichever model `mode` names.
    pub fn generate(&self, t: &Topology, excluded: &[usize]) -> Result<FaultSet> {
        match self.mode {
            FaultMode::Uniform => inject_uniform(t, self, excluded),
            FaultMode::Clustered { .. } => inject_clustered(t, self, excluded),
        }
    }
}

/// An immutable set of failed nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultSet {
    mask: Vec<bool>,
    nodes: Vec<usize>,
    spec: Option<FaultSpec>,
}

impl FaultSet {
    pub fn empty(n_nodes: usize) -> Self {
        Self {
            mask: vec![false; n_nodes],
            nodes: Vec::new(),
            spec: None,
        }
    }

    /// A hand-placed fault set.
    pub fn from_nodes(n_nodes: usize, nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; n_nodes];
        for k in nodes {
            if k >= n_nodes {
                return Err(Error::NodeOutOfRange { index: k, n_nodes });
            }
            mask[k] = true;
        }
        let nodes = (0..n_nodes).filter(|&k| mask[k]).collect();
        Ok(Self {
            mask,
            nodes,
            spec: None,
        })
    }

    fn with_spec(mut self, spec: FaultSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn contains(&self, node: usize) -> bool {
        self.mask.get(node).copied().unwrap_or(false)
    }

    /// Faulty nodes in ascending order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.mask.len()
    }

    pub fn spec(&self) -> Option<&FaultSpec> {
        self.spec.as_ref()
    }

    /// Non-faulty nodes in ascending order.
    pub fn healthy(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&k| !self.mask[k]).collect()
    }

    /// `node_index` per row, preceded by `#` comment lines recording the spec.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.spec {
            Some(spec) => {
                let _ = writeln!(
                    out,
                    "# fault_spec: {}",
                    serde_json::to_string(spec).unwrap_or_default()
                );
            }
            None => out.push_str("# fault_spec: manual\n"),
        }
        let _ = writeln!(out, "# n_nodes: {}", self.mask.len());
        out.push_str("node_index\n");
        for k in &self.nodes {
            let _ = writeln!(out, "{k}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidConfig(format!("fault csv: {msg}"));
        let mut spec = None;
        let mut n_nodes = None;
        let mut nodes = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(json) = comment.strip_prefix("fault_spec:") {
                    let json = json.trim();
                    if json != "manual" {
                        spec = Some(serde_json::from_str::<FaultSpec>(json)?);
                    }
                } else if let Some(n) = comment.strip_prefix("n_nodes:") {
                    n_nodes = Some(n.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?);
                }
            } else if line != "node_index" {
                nodes.push(
                    line.parse::<usize>()
                        .map_err(|e| bad(format!("{line:?}: {e}")))?,
                );
            }
        }
        let n_nodes = n_nodes.ok_or_else(|| bad("missing n_nodes comment".into()))?;
        let set = Self::from_nodes(n_nodes, nodes)?;
        Ok(match spec {
            Some(s) => set.with_spec(s),
            None => set,
        })
    }
}

fn eligible_nodes(
    t: &Topology,
    spec: &FaultSpec,
    excluded: &[usize],
) -> Result<(Vec<usize>, usize)> {
    spec.validate()?;
    for &k in excluded {
        t.check_node(k)?;
    }
    let mut blocked = vec![false; t.len()];
    for &k in excluded {
        blocked[k] = true;
    }
    let eligible: Vec<usize> = (0..t.len()).filter(|&k| !blocked[k]).collect();
    let count = spec.fault_count(t.len());
    if count > eligible.len() {
        return Err(Error::InfeasibleFaultCount {
            requested: count,
            available: eligible.len(),
        });
    }
    Ok((eligible, count))
}

/// `floor(density · N)` distinct nodes drawn uniformly without replacement
/// from the nodes outside `excluded`.
pub fn inject_uniform(t: &Topology, spec: &FaultSpec, excluded: &[usize]) -> Result<FaultSet> {
    let (eligible, count) = eligible_nodes(t, spec, excluded)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let picked = index::sample(&mut rng, eligible.len(), count);
    let set = FaultSet::from_nodes(t.len(), picked.iter().map(|i| eligible[i]))?;
    Ok(set.with_spec(*spec))
}

/// Clustered faults: `num_clusters` seeds drawn uniformly, then the rest
/// without replacement with weight `exp(−d²/(2σ²))`, `d` being the fault-free
/// hop distance to the nearest seed.
pub fn inject_clustered(t: &Topology, spec: &FaultSpec, excluded: &[usize]) -> Result<FaultSet> {
    let FaultMode::Clustered {
        cluster_sigma,
        num_clusters,
    } = spec.mode
    else {
        return inject_uniform(t, spec, excluded);
    };
    let (eligible, count) = eligible_nodes(t, spec, excluded)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_seeds = num_clusters.min(count);
    let seeds: Vec<usize> = index::sample(&mut rng, eligible.len(), n_seeds)
        .iter()
        .map(|i| eligible[i])
        .collect();

    let mut chosen = seeds.clone();
    let remaining = count - n_seeds;
    if remaining > 0 {
        let dist = multi_source_hops(t, &seeds);
        let rest: Vec<usize> = eligible
            .iter()
            .copied()
            .filter(|k| !seeds.contains(k))
            .collect();
        let two_var = 2.0 * cluster_sigma * cluster_sigma;
        let weight = |i: usize| {
            let d = dist[rest[i]] as f64;
            (-d * d / two_var).exp().max(f64::MIN_POSITIVE)
        };
        let picked = index::sample_weighted(&mut rng, rest.len(), weight, remaining)
            .map_err(|e| Error::InvalidConfig(format!("cluster weights: {e}")))?;
        chosen.extend(picked.iter().map(|i| rest[i]));
    }
    Ok(FaultSet::from_nodes(t.len(), chosen)?.with_spec(*spec))
}

fn multi_source_hops(t: &Topology, sources: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &v in t.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::NetworkModulus;
    use proptest::prelude::*;

    fn t34() -> Topology {
        Topology::new(NetworkModulus::from_k(3).unwrap())
    }

    #[test]
    fn zero_density_is_empty() {
        let f = inject_uniform(&t34(), &FaultSpec::uniform(0.0, 1), &[]).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn forty_percent_gives_ten() {
        let t = t34();
        let f = inject_uniform(&t, &FaultSpec::uniform(0.4, 9), &[0, 3]).unwrap();
        assert_eq!(f.len(), 10);
        assert!(!f.contains(0) && !f.contains(3));
        assert_eq!(f.spec().unwrap().density, 0.4);
    }

    #[test]
    fn same_seed_same_set() {
        let t = t34();
        let spec = FaultSpec::uniform(0.3, 77);
        assert_eq!(
            inject_uniform(&t, &spec, &[]).unwrap(),
            inject_uniform(&t, &spec, &[]).unwrap()
        );
        let c = FaultSpec::clustered(0.3, 77, 1.0, 2);
        assert_eq!(
            inject_clustered(&t, &c, &[]).unwrap(),
            inject_clustered(&t, &c, &[]).unwrap()
        );
    }

    #[test]
    fn infeasible_count_is_rejected() {
        let t = Topology::new(NetworkModulus::new(crate::GaussianInt::new(1, 2)).unwrap());
        // floor(0.5 · 5) = 2 faults, 3 of 5 nodes excluded leaves 2: feasible
        assert!(inject_uniform(&t, &FaultSpec::uniform(0.5, 0), &[0, 1, 2]).is_ok());
        let err = inject_uniform(&t, &FaultSpec::uniform(0.5, 0), &[0, 1, 2, 3]).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleFaultCount {
                requested: 2,
                available: 1
            }
        ));
        assert!(matches!(
            inject_uniform(&t, &FaultSpec::uniform(0.6, 0), &[]),
            Err(Error::InvalidDensity(_))
        ));
    }

    #[test]
    fn single_cluster_single_fault_is_the_seed() {
        let t = t34();
        // density 0.04 → one fault
        for seed in 0..50 {
            let spec = FaultSpec::clustered(0.04, seed, 1.0, 1);
            let f = inject_clustered(&t, &spec, &[]).unwrap();
            assert_eq!(f.len(), 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let expect = index::sample(&mut rng, 25, 1).index(0);
            assert_eq!(f.nodes(), &[expect]);
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = t34();
        let f = inject_clustered(&t, &FaultSpec::clustered(0.2, 5, 0.8, 2), &[0]).unwrap();
        let back = FaultSet::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back, f);
        let manual = FaultSet::from_nodes(25, [4, 2]).unwrap();
        assert_eq!(FaultSet::from_csv(&manual.to_csv()).unwrap(), manual);
    }

    proptest! {
        #[test]
        fn cardinality_and_exclusion(density in 0.0f64..=0.5, seed: u64, clustered: bool, ex in proptest::collection::vec(0usize..25, 0..8)) {
            let t = t34();
            let spec = if clustered {
                FaultSpec::clustered(density, seed, 1.5, 2)
            } else {
                FaultSpec::uniform(density, seed)
            };
            let count = spec.fault_count(25);
            let mut uniq = ex.clone();
            uniq.sort_unstable();
            uniq.dedup();
            match spec.generate(&t, &ex) {
                Ok(f) => {
                    prop_assert_eq!(f.len(), count);
                    prop_assert!(ex.iter().all(|&k| !f.contains(k)));
                }
                Err(Error::InfeasibleFaultCount { .. }) => prop_assert!(count > 25 - uniq.len()),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
    }
}
