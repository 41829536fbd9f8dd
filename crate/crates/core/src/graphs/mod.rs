//! Control-flow, call and interprocedural control-flow graphs.

mod callgraph;
mod cfg;
mod dot;
mod icfg;

pub use callgraph::{build_call_graph, CallEdge, CallGraph};
pub use cfg::{build_cfg, BasicBlock, BlockId, Cfg};
pub use dot::{callgraph_to_dot, cfg_to_dot, icfg_to_dot};
pub use icfg::{build_icfg, Icfg, IcfgNode, InterEdge, NodeId};
