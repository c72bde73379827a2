//! Compiler fuzzing by splicing profiled numeric C functions into large,
//! semantically controlled programs.

pub mod cfront;
pub mod corpus;
pub mod llm;
pub mod toolchain;
pub mod code_db;
pub mod profiler;
pub mod synth;
pub mod difftest;
pub mod pipeline;
pub mod campaign;
