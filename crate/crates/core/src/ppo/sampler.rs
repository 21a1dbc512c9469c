//! Episode sources for training.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::faults::{FaultSet, FaultSpec};
use crate::topology::Topology;

/// Everything needed to start one episode.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeSetup<'a> {
    pub topology: &'a Topology,
    pub faults: &'a FaultSet,
    pub src: usize,
    pub dst: usize,
}

pub trait EpisodeSampler {
    fn sample(&mut self, episode: usize, rng: &mut ChaCha8Rng) -> Result<EpisodeSetup<'_>>;
}

/// The same `(src, dst, faults)` every episode.
#[derive(Debug, Clone)]
pub struct FixedEpisode<'a> {
    pub topology: &'a Topology,
    pub faults: &'a FaultSet,
    pub src: usize,
    pub dst: usize,
}

impl EpisodeSampler for FixedEpisode<'_> {
    fn sample(&mut self, _episode: usize, _rng: &mut ChaCha8Rng) -> Result<EpisodeSetup<'_>> {
        Ok(EpisodeSetup {
            topology: self.topology,
            faults: self.faults,
            src: self.src,
            dst: self.dst,
        })
    }
}

/// Where the faults of a [`RandomPairs`] episode come from.
#[derive(Debug, Clone)]
pub enum FaultRegime {
    None,
    /// One fault set (per topology) for the whole run.
    Fixed(Vec<FaultSet>),
    /// Regenerate from `spec` every `every` episodes with a fresh seed drawn
    /// from the training stream.
    Resample {
        spec: FaultSpec,
        every: usize,
    },
}

struct Layout {
    faults: FaultSet,
    healthy: Vec<usize>,
    component: Vec<usize>,
    has_reachable_pair: bool,
}

impl Layout {
    fn new(t: &Topology, faults: FaultSet) -> Self {
        let healthy = faults.healthy();
        let mut component = vec![usize::MAX; t.len()];
        let mut sizes = Vec::new();
        for &s in &healthy {
            if component[s] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0;
            for (k, d) in t.bfs_from(s, &faults).iter().enumerate() {
                if d.is_some() {
                    component[k] = id;
                    size += 1;
                }
            }
            sizes.push(size);
        }
        let has_reachable_pair = sizes.iter().any(|&s| s >= 2);
        Self {
            faults,
            healthy,
            component,
            has_reachable_pair,
        }
    }
}

/// Uniform `(src, dst)` pairs over one or more topologies.
///
/// Topologies are cycled episode by episode. Pairs are drawn uniformly among
/// ordered pairs of distinct healthy nodes that are connected through healthy
/// nodes; only when a layout has no such pair at all is any healthy pair used.
pub struct RandomPairs<'a> {
    topologies: &'a [Topology],
    regime: FaultRegime,
    layouts: Vec<Layout>,
}

impl<'a> RandomPairs<'a> {
    pub fn new(topologies: &'a [Topology], regime: FaultRegime) -> Result<Self> {
        if topologies.is_empty() {
            return Err(Error::InvalidConfig("no topologies to sample from".into()));
        }
        let layouts = match &regime {
            FaultRegime::Fixed(sets) => {
                if sets.len() != topologies.len() {
                    return Err(Error::InvalidConfig(
                        "one fault set per topology required".into(),
                    ));
                }
                topologies
                    .iter()
                    .zip(sets)
                    .map(|(t, f)| Layout::new(t, f.clone()))
                    .collect()
            }
            FaultRegime::Resample { spec, every } => {
                spec.validate()?;
                if *every == 0 {
                    return Err(Error::InvalidConfig(
                        "fault resample interval must be positive".into(),
                    ));
                }
                Vec::new()
            }
            FaultRegime::None => topologies
                .iter()
                .map(|t| Layout::new(t, FaultSet::empty(t.len())))
                .collect(),
        };
        if layouts.iter().any(|l: &Layout| l.healthy.len() < 2) {
            return Err(Error::InvalidConfig("fewer than two healthy nodes".into()));
        }
        Ok(Self {
            topologies,
            regime,
            layouts,
        })
    }

    fn refresh(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        if let FaultRegime::Resample { spec, .. } = &self.regime {
            let mut layouts = Vec::with_capacity(self.topologies.len());
            for t in self.topologies {
                let faults = spec.with_seed(rng.next_u64()).generate(t, &[])?;
                let layout = Layout::new(t, faults);
                if layout.healthy.len() < 2 {
                    return Err(Error::InvalidConfig("fewer than two healthy nodes".into()));
                }
                layouts.push(layout);
            }
            self.layouts = layouts;
        }
        Ok(())
    }

    /// Current fault set of topology `k`.
    pub fn faults(&self, k: usize) -> Option<&FaultSet> {
        self.layouts.get(k).map(|l| &l.faults)
    }
}

impl EpisodeSampler for RandomPairs<'_> {
    fn sample(&mut self, episode: usize, rng: &mut ChaCha8Rng) -> Result<EpisodeSetup<'_>> {
        if let FaultRegime::Resample { every, .. } = self.regime {
            if self.layouts.is_empty() || episode.is_multiple_of(every) {
                self.refresh(rng)?;
            }
        }
        let k = episode % self.topologies.len();
        let layout = &self.layouts[k];
        let h = &layout.healthy;
        let (src, dst) = loop {
            let a = h[rng.random_range(0..h.len())];
            let mut b = h[rng.random_range(0..h.len() - 1)];
            if b == a {
                b = h[h.len() - 1];
            }
            if !layout.has_reachable_pair || layout.component[a] == layout.component[b] {
                break (a, b);
            }
        };
        Ok(EpisodeSetup {
            topology: &self.topologies[k],
            faults: &layout.faults,
            src,
            dst,
        })
    }
}
