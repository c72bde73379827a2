//! Every random decision the synthesizer makes goes through a [`Chooser`], so
//! tests can force particular choices and leave the rest to the RNG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfront::types::IntType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    GlobalCount,
    GlobalType,
    GlobalValue,
    Seed,
    SeedProfile,
    Target,
    Rewrite,
    UseCall,
    Callee,
    CalleeProfile,
    Global,
    WriteGlobal,
    Variable,
    Operator,
}

pub trait Chooser {
    /// True with probability `p`; `subject` names what is being decided.
    fn flip(&mut self, what: Choice, p: f64, subject: &str) -> bool;
    /// Index in `0..n`; `label(i)` names option `i` for choosers that care.
    fn pick(&mut self, what: Choice, n: usize, label: &dyn Fn(usize) -> String) -> usize;
    /// A value of type `t` from the input mixture.
    fn value(&mut self, t: IntType) -> i128;
}

pub struct RngChooser {
    pub rng: ChaCha8Rng,
}

impl RngChooser {
    pub fn new(seed: u64) -> Self {
        RngChooser { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Chooser for RngChooser {
    fn flip(&mut self, _: Choice, p: f64, _: &str) -> bool {
        self.rng.random_bool(p.clamp(0.0, 1.0))
    }

    fn pick(&mut self, _: Choice, n: usize, _: &dyn Fn(usize) -> String) -> usize {
        assert!(n > 0, "nothing to pick from");
        self.rng.random_range(0..n)
    }

    fn value(&mut self, t: IntType) -> i128 {
        crate::profiler::draw_int(&mut self.rng, t, 2)
    }
}

/// A question put to a [`ScriptedChooser`]'s script.
#[derive(Debug)]
pub enum Ask<'a> {
    Flip(Choice, f64, &'a str),
    Pick(Choice, &'a [String]),
    Value(IntType),
}

/// Answers from a script where it has an opinion, from an RNG otherwise.
/// Script answers: `Flip` → nonzero means true; `Pick` → option index;
/// `Value` → the value itself.
pub struct ScriptedChooser<F> {
    pub base: RngChooser,
    pub script: F,
}

impl<F: FnMut(Ask<'_>) -> Option<i128>> ScriptedChooser<F> {
    pub fn new(seed: u64, script: F) -> Self {
        ScriptedChooser { base: RngChooser::new(seed), script }
    }
}

impl<F: FnMut(Ask<'_>) -> Option<i128>> Chooser for ScriptedChooser<F> {
    fn flip(&mut self, what: Choice, p: f64, subject: &str) -> bool {
        match (self.script)(Ask::Flip(what, p, subject)) {
            Some(v) => v != 0,
            None => self.base.flip(what, p, subject),
        }
    }

    fn pick(&mut self, what: Choice, n: usize, label: &dyn Fn(usize) -> String) -> usize {
        let labels: Vec<String> = (0..n).map(label).collect();
        match (self.script)(Ask::Pick(what, &labels)) {
            Some(i) => {
                assert!((0..n as i128).contains(&i), "scripted pick {i} out of {n} for {what:?}");
                i as usize
            }
            None => self.base.pick(what, n, label),
        }
    }

    fn value(&mut self, t: IntType) -> i128 {
        match (self.script)(Ask::Value(t)) {
            Some(v) => v,
            None => self.base.value(t),
        }
    }
}
