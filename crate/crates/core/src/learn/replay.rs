use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One stored experience step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring buffer of transitions. Once full, new pushes
/// overwrite the oldest entries.
#[derive(Clone, Debug)]
pub struct ReplayMemory {
    buf: Vec<Transition>,
    capacity: usize,
    write: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> ReplayMemory {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayMemory {
            buf: Vec::with_capacity(capacity.min(4096)),
            capacity,
            write: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() < self.capacity {
            self.buf.push(t);
        } else {
            self.buf[self.write] = t;
        }
        self.write = (self.write + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.buf[idx]
    }

    /// Uniform sample with replacement of `count` stored indices.
    pub fn sample_indices(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        assert!(!self.buf.is_empty(), "cannot sample from empty memory");
        (0..count).map(|_| rng.random_range(0..self.buf.len())).collect()
    }
}
