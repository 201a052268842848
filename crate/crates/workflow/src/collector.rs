use std::sync::{Condvar, Mutex};
use std::time::Duration;

use lmrk_core::Candidate;

use crate::error::WorkflowError;

#[derive(Debug)]
struct State {
    generation: u64,
    expected: usize,
    received: Vec<Candidate>,
}

/// Gathers evaluated offspring of one generation. Submissions never block;
/// the generation is released only once all expected offspring arrived.
#[derive(Debug)]
pub struct Collector {
    state: Mutex<State>,
    ready: Condvar,
}

impl Collector {
    pub fn new(generation: u64, expected: usize) -> Self {
        Collector {
            state: Mutex::new(State {
                generation,
                expected,
                received: Vec::new(),
            }),
            ready: Condvar::new(),
        }
    }

    pub fn generation(&self) -> u64 {
        self.state.lock().unwrap().generation
    }

    pub fn received(&self) -> usize {
        self.state.lock().unwrap().received.len()
    }

    pub fn submit(&self, generation: u64, offspring: Candidate) -> Result<(), WorkflowError> {
        let mut s = self.state.lock().unwrap();
        if generation < s.generation || (generation == s.generation && s.received.len() >= s.expected) {
            return Err(WorkflowError::StaleGeneration {
                submitted: generation,
                current: s.generation,
            });
        }
        if generation > s.generation {
            return Err(WorkflowError::FutureGeneration {
                submitted: generation,
                current: s.generation,
            });
        }
        s.received.push(offspring);
        if s.received.len() == s.expected {
            self.ready.notify_all();
        }
        Ok(())
    }

    /// The full generation if complete, in submission order.
    pub fn try_collect(&self) -> Option<Vec<Candidate>> {
        let mut s = self.state.lock().unwrap();
        Self::take(&mut s)
    }

    /// Block until the generation is complete or `timeout` passes.
    pub fn await_generation(&self, timeout: Duration) -> Option<Vec<Candidate>> {
        let s = self.state.lock().unwrap();
        let (mut s, _) = self
            .ready
            .wait_timeout_while(s, timeout, |s| s.received.len() < s.expected)
            .unwrap();
        Self::take(&mut s)
    }

    fn take(s: &mut State) -> Option<Vec<Candidate>> {
        if s.received.len() < s.expected {
            return None;
        }
        Some(s.received.clone())
    }

    /// Close the current generation and open the next one.
    pub fn open(&self, generation: u64, expected: usize) {
        let mut s = self.state.lock().unwrap();
        assert!(generation > s.generation, "generations only move forward");
        s.generation = generation;
        s.expected = expected;
        s.received.clear();
    }
}
