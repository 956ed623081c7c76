//! Episode-structured replay with uniform transition sampling.
//!
//! Episodes are stored whole in a FIFO ring (capacity counted in episodes,
//! including the one in progress). Each episode remembers its absolute start
//! offset in a monotone global transition counter, so sampling a transition
//! uniformly is one draw over the live range plus a binary search — eviction
//! never invalidates offsets.

use std::collections::VecDeque;

use rand::Rng;

use super::Transition;

#[derive(Debug, Clone)]
struct EpisodeSlot {
    start: u64,
    transitions: Vec<Transition>,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    episodes: VecDeque<EpisodeSlot>,
    capacity: usize,
    total_pushed: u64,
    stored: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            episodes: VecDeque::new(),
            capacity,
            total_pushed: 0,
            stored: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Opens a new episode, evicting the oldest one if the ring is full.
    pub fn start_episode(&mut self) {
        self.episodes.push_back(EpisodeSlot {
            start: self.total_pushed,
            transitions: Vec::new(),
        });
        while self.episodes.len() > self.capacity {
            let evicted = self.episodes.pop_front().expect("non-empty");
            self.stored -= evicted.transitions.len();
        }
    }

    pub fn push(&mut self, transition: Transition) {
        if self.episodes.is_empty() {
            self.start_episode();
        }
        self.episodes
            .back_mut()
            .expect("episode open")
            .transitions
            .push(transition);
        self.total_pushed += 1;
        self.stored += 1;
    }

    pub fn len_transitions(&self) -> usize {
        self.stored
    }

    pub fn len_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored == 0
    }

    /// Uniform over all stored transitions.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(usize, usize)> {
        if self.stored == 0 {
            return None;
        }
        let front_start = self.episodes.front().expect("non-empty").start;
        let g = rng.random_range(front_start..self.total_pushed);
        // Binary search for the episode containing global offset g.
        let (mut lo, mut hi) = (0usize, self.episodes.len());
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.episodes[mid].start <= g {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let slot = &self.episodes[lo];
        Some((lo, (g - slot.start) as usize))
    }

    /// Episode-granular sampling: a uniform episode first (skipping empty
    /// ones deterministically), then a uniform transition inside it.
    pub fn sample_by_episode<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(usize, usize)> {
        if self.stored == 0 {
            return None;
        }
        let n = self.episodes.len();
        let mut e = rng.random_range(0..n);
        while self.episodes[e].transitions.is_empty() {
            e = (e + 1) % n;
        }
        let o = rng.random_range(0..self.episodes[e].transitions.len());
        Some((e, o))
    }

    pub fn get(&self, index: (usize, usize)) -> &Transition {
        &self.episodes[index.0].transitions[index.1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::ObservationKey;
    use rand::SeedableRng;

    fn tr(tag: u8) -> Transition {
        Transition {
            obs: vec![ObservationKey::from_bytes(vec![tag])],
            actions: vec![0],
            reward: tag as f64,
            next_obs: vec![ObservationKey::from_bytes(vec![tag])],
            done: false,
        }
    }

    #[test]
    fn fifo_eviction_by_episode() {
        let mut buf = ReplayBuffer::new(2);
        buf.start_episode();
        buf.push(tr(1));
        buf.push(tr(2));
        buf.start_episode();
        buf.push(tr(3));
        assert_eq!(buf.len_episodes(), 2);
        assert_eq!(buf.len_transitions(), 3);
        buf.start_episode();
        buf.push(tr(4));
        // Oldest episode (rewards 1, 2) evicted.
        assert_eq!(buf.len_episodes(), 2);
        assert_eq!(buf.len_transitions(), 2);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
        for _ in 0..50 {
            let idx = buf.sample_uniform(&mut rng).unwrap();
            let r = buf.get(idx).reward;
            assert!(r == 3.0 || r == 4.0);
        }
    }

    #[test]
    fn uniform_sampling_weights_by_transition_count() {
        let mut buf = ReplayBuffer::new(10);
        buf.start_episode();
        for _ in 0..9 {
            buf.push(tr(1));
        }
        buf.start_episode();
        buf.push(tr(2));
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let mut long = 0;
        let n = 20_000;
        for _ in 0..n {
            let idx = buf.sample_uniform(&mut rng).unwrap();
            if buf.get(idx).reward == 1.0 {
                long += 1;
            }
        }
        let frac = long as f64 / n as f64;
        assert!((frac - 0.9).abs() < 0.01, "got {frac}");
    }

    #[test]
    fn episode_sampling_weights_by_episode() {
        let mut buf = ReplayBuffer::new(10);
        buf.start_episode();
        for _ in 0..9 {
            buf.push(tr(1));
        }
        buf.start_episode();
        buf.push(tr(2));
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        let mut short = 0;
        let n = 20_000;
        for _ in 0..n {
            let idx = buf.sample_by_episode(&mut rng).unwrap();
            if buf.get(idx).reward == 2.0 {
                short += 1;
            }
        }
        let frac = short as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "got {frac}");
    }

    #[test]
    fn empty_buffer_yields_nothing() {
        let buf = ReplayBuffer::new(3);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
        assert!(buf.sample_uniform(&mut rng).is_none());
    }
}
