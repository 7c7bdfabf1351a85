pub mod detect_lines;
pub mod eval;
pub mod pipeline;
pub mod revise;
pub mod segment_toy;
pub mod synth;
