pub mod graphs;
pub mod harness;
pub mod ir;
pub mod report;
pub mod slicer;
pub mod testgen;
