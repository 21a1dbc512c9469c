//! Packet-routing MDP.
//!
//! Actions are the four unit moves. Entering the destination pays +100 and
//! ends the episode; entering a faulty node pays −50 and ends the episode
//! with the packet lost (the agent does not move); any other move pays −1.
//! Episodes are truncated after `2N` steps.

use crate::error::{Error, Result};
use crate::faults::FaultSet;
use crate::topology::{Direction, Topology};

pub const OBS_DIM: usize = 8;

pub const REWARD_DST: f64 = 100.0;
pub const REWARD_FAULT: f64 = -50.0;
pub const REWARD_HOP: f64 = -1.0;

/// `[cx, cy, dx, dy, f_up, f_down, f_right, f_left]`: current and
/// destination centered coordinates divided by the topology's coordinate
/// scale, then one flag per neighbor that is faulty.
pub type Observation = [f64; OBS_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    North,
    South,
    East,
    West,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];

    pub fn from_index(k: usize) -> Option<Action> {
        Self::ALL.get(k).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn direction(self) -> Direction {
        match self {
            Action::North => Direction::Up,
            Action::South => Direction::Down,
            Action::East => Direction::Right,
            Action::West => Direction::Left,
        }
    }
}

pub fn observe(t: &Topology, current: usize, dst: usize, faults: &FaultSet) -> Observation {
    let scale = t.coord_scale();
    let c = t.coord(current);
    let d = t.coord(dst);
    let nb = t.neighbors(current);
    let flag = |k: usize| if faults.contains(nb[k]) { 1.0 } else { 0.0 };
    [
        c.re as f64 / scale,
        c.im as f64 / scale,
        d.re as f64 / scale,
        d.im as f64 / scale,
        flag(0),
        flag(1),
        flag(2),
        flag(3),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    /// Node the packet moved into; on a fault hit this is the faulty node
    /// while the agent stays put.
    pub next_node: usize,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub reached_dst: bool,
    pub hit_fault: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// One episode's state. Topology and faults are borrowed read-only.
#[derive(Debug, Clone)]
pub struct RoutingEnv<'a> {
    topology: &'a Topology,
    faults: &'a FaultSet,
    current: usize,
    dst: usize,
    steps_taken: usize,
    max_steps: usize,
    finished: bool,
}

impl<'a> RoutingEnv<'a> {
    pub fn reset(
        topology: &'a Topology,
        src: usize,
        dst: usize,
        faults: &'a FaultSet,
    ) -> Result<(Self, Observation)> {
        topology.check_node(src)?;
        topology.check_node(dst)?;
        if src == dst {
            return Err(Error::SameEndpoints(src));
        }
        for end in [src, dst] {
            if faults.contains(end) {
                return Err(Error::FaultyEndpoint(end));
            }
        }
        let env = Self {
            topology,
            faults,
            current: src,
            dst,
            steps_taken: 0,
            max_steps: topology.max_hops(),
            finished: false,
        };
        let obs = env.observation();
        Ok((env, obs))
    }

    pub fn observation(&self) -> Observation {
        observe(self.topology, self.current, self.dst, self.faults)
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn dst(&self) -> usize {
        self.dst
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.finished {
            return Err(Error::EpisodeFinished);
        }
        let next = self.topology.neighbor(self.current, action.direction());
        self.steps_taken += 1;
        let (reward, reached_dst, hit_fault) = if next == self.dst {
            self.current = next;
            (REWARD_DST, true, false)
        } else if self.faults.contains(next) {
            (REWARD_FAULT, false, true)
        } else {
            self.current = next;
            (REWARD_HOP, false, false)
        };
        let terminated = reached_dst || hit_fault;
        let truncated = !terminated && self.steps_taken >= self.max_steps;
        self.finished = terminated || truncated;
        Ok(StepOutcome {
            observation: self.observation(),
            next_node: next,
            reward,
            terminated,
            truncated,
            reached_dst,
            hit_fault,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{GaussianInt, NetworkModulus};

    fn t34() -> Topology {
        Topology::new(NetworkModulus::from_k(3).unwrap())
    }

    #[test]
    fn reset_observation() {
        let t = t34();
        let none = FaultSet::empty(25);
        let dst = t.index_of(GaussianInt::new(1, 1));
        let (env, obs) = RoutingEnv::reset(&t, 0, dst, &none).unwrap();
        assert_eq!(env.steps_taken(), 0);
        assert_eq!(env.current(), 0);
        assert_eq!(&obs[4..], &[0.0; 4]);
        assert_eq!(obs[..2], [0.0, 0.0]);
        assert_eq!(obs[2], 1.0 / t.coord_scale());
        assert_eq!(RoutingEnv::reset(&t, 0, dst, &none).unwrap().1, obs);
        assert!(obs.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn reset_preconditions() {
        let t = t34();
        let none = FaultSet::empty(25);
        assert!(matches!(
            RoutingEnv::reset(&t, 4, 4, &none),
            Err(Error::SameEndpoints(4))
        ));
        let f = FaultSet::from_nodes(25, [3]).unwrap();
        assert!(matches!(
            RoutingEnv::reset(&t, 0, 3, &f),
            Err(Error::FaultyEndpoint(3))
        ));
        assert!(RoutingEnv::reset(&t, 0, 99, &none).is_err());
    }

    #[test]
    fn three_kinds_of_step() {
        let t = t34();
        let faults = FaultSet::from_nodes(25, [24]).unwrap();
        let (mut env, obs) = RoutingEnv::reset(&t, 0, 2, &faults).unwrap();
        assert_eq!(obs[7], 1.0);

        let out = env.step(Action::East).unwrap();
        assert_eq!(
            (out.reward, out.terminated, out.next_node),
            (-1.0, false, 1)
        );
        let out = env.step(Action::East).unwrap();
        assert_eq!(out.reward, 100.0);
        assert!(out.terminated && out.reached_dst && !out.hit_fault);
        assert!(matches!(
            env.step(Action::East),
            Err(Error::EpisodeFinished)
        ));

        let (mut env, _) = RoutingEnv::reset(&t, 0, 2, &faults).unwrap();
        let out = env.step(Action::West).unwrap();
        assert_eq!(out.reward, -50.0);
        assert!(out.terminated && out.hit_fault && !out.reached_dst);
        assert_eq!(env.current(), 0);
    }

    #[test]
    fn truncates_at_two_n() {
        let t = t34();
        let none = FaultSet::empty(25);
        let (mut env, _) = RoutingEnv::reset(&t, 0, 3, &none).unwrap();
        let mut total = 0.0;
        for k in 0..50 {
            // bounce between origin and +i; destination 3 is never entered
            let a = if k % 2 == 0 {
                Action::North
            } else {
                Action::South
            };
            let out = env.step(a).unwrap();
            total += out.reward;
            assert_eq!(out.truncated, k == 49);
            assert!(!out.terminated);
        }
        assert_eq!(total, -50.0);
        assert!(env.is_finished());
    }
}
