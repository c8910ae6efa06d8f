//! Scanning jammers stepped once per slot.
//!
//! A G-memory jammer scans a uniform m-subset of the channels it did not scan
//! in the last G slots; G = 0 is random jamming. A basic sweep walks a fixed
//! partition of the band into T blocks. A reactive sweep is a basic sweep
//! that redraws its partition and restarts whenever a scan hits an active
//! communication.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::params::NetworkConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JammerStrategy {
    /// Excludes the channels scanned in the last `G` slots.
    Memory(usize),
    BasicSweep,
    ReactiveSweep,
}

impl JammerStrategy {
    pub const RANDOM: JammerStrategy = JammerStrategy::Memory(0);

    pub fn validate(&self, config: &NetworkConfig) -> Result<()> {
        match *self {
            JammerStrategy::Memory(g) if g >= config.period() => Err(Error::invalid(
                "jammer.memory",
                format!("must be at most T - 1 = {}, got {g}", config.period() - 1),
            )),
            _ => Ok(()),
        }
    }

    fn is_sweep(&self) -> bool {
        matches!(self, JammerStrategy::BasicSweep | JammerStrategy::ReactiveSweep)
    }
}

impl fmt::Display for JammerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JammerStrategy::Memory(0) => f.write_str("random"),
            JammerStrategy::Memory(g) => write!(f, "memory-{g}"),
            JammerStrategy::BasicSweep => f.write_str("basic-sweep"),
            JammerStrategy::ReactiveSweep => f.write_str("reactive-sweep"),
        }
    }
}

impl FromStr for JammerStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "random" => Ok(JammerStrategy::RANDOM),
            "basic-sweep" | "sweep" => Ok(JammerStrategy::BasicSweep),
            "reactive-sweep" | "reactive" => Ok(JammerStrategy::ReactiveSweep),
            other => other
                .strip_prefix("memory-")
                .and_then(|g| g.parse().ok())
                .map(JammerStrategy::Memory)
                .ok_or_else(|| {
                    format!("unknown jammer `{other}` (random, basic-sweep, reactive-sweep, memory-G)")
                }),
        }
    }
}

/// Running state of one jammer.
#[derive(Debug, Clone)]
pub struct Jammer {
    strategy: JammerStrategy,
    channels: usize,
    scan_width: usize,
    memory: usize,
    history: VecDeque<Vec<usize>>,
    /// Per-channel count of appearances in `history`.
    recent: Vec<u32>,
    pattern: Vec<usize>,
    position: usize,
    scratch: Vec<usize>,
}

impl Jammer {
    /// Sweeping strategies draw their partition from `rng`.
    pub fn new<R: Rng + ?Sized>(strategy: JammerStrategy, config: &NetworkConfig, rng: &mut R) -> Result<Self> {
        let mut pattern: Vec<usize> = (0..config.channels()).collect();
        if strategy.is_sweep() {
            pattern.shuffle(rng);
        }
        Self::with_pattern(strategy, config, pattern)
    }

    /// Uses `pattern` as the sweep order: block `b` is
    /// `pattern[b m .. (b + 1) m]`.
    pub fn with_pattern(strategy: JammerStrategy, config: &NetworkConfig, pattern: Vec<usize>) -> Result<Self> {
        strategy.validate(config)?;
        let mut sorted = pattern.clone();
        sorted.sort_unstable();
        if sorted != (0..config.channels()).collect::<Vec<_>>() {
            return Err(Error::invalid("jammer.pattern", "must be a permutation of the channels"));
        }
        let memory = match strategy {
            JammerStrategy::Memory(g) => g,
            _ => config.period() - 1,
        };
        Ok(Self {
            strategy,
            channels: config.channels(),
            scan_width: config.scan_width(),
            memory,
            history: VecDeque::with_capacity(memory + 1),
            recent: vec![0; config.channels()],
            pattern,
            position: 0,
            scratch: Vec::with_capacity(config.channels()),
        })
    }

    pub fn strategy(&self) -> JammerStrategy {
        self.strategy
    }

    /// Most recent scans, oldest first.
    pub fn history(&self) -> impl Iterator<Item = &[usize]> {
        self.history.iter().map(Vec::as_slice)
    }

    pub fn pattern(&self) -> &[usize] {
        &self.pattern
    }

    pub fn position(&self) -> usize {
        self.position
    }

    fn period(&self) -> usize {
        self.channels / self.scan_width
    }

    /// Channels to scan this slot.
    pub fn next_scan<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<usize> {
        let scan = if self.strategy.is_sweep() {
            let block = self.position * self.scan_width;
            self.position = (self.position + 1) % self.period();
            self.pattern[block..block + self.scan_width].to_vec()
        } else {
            self.scratch.clear();
            self.scratch
                .extend((0..self.channels).filter(|&c| self.recent[c] == 0));
            debug_assert!(self.scratch.len() >= self.scan_width);
            let (chosen, _) = self.scratch.partial_shuffle(rng, self.scan_width);
            chosen.to_vec()
        };
        self.remember(&scan);
        scan
    }

    fn remember(&mut self, scan: &[usize]) {
        if self.memory == 0 {
            return;
        }
        if self.history.len() == self.memory {
            for &c in &self.history.pop_front().unwrap() {
                self.recent[c] -= 1;
            }
        }
        for &c in scan {
            self.recent[c] += 1;
        }
        self.history.push_back(scan.to_vec());
    }

    /// The last scan hit an active communication. A reactive sweep starts a
    /// fresh random partition from its first block on the next slot; other
    /// strategies ignore detections.
    pub fn on_detection<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if self.strategy != JammerStrategy::ReactiveSweep {
            return;
        }
        self.pattern.shuffle(rng);
        self.position = 0;
        self.history.clear();
        self.recent.iter_mut().for_each(|c| *c = 0);
    }
}
