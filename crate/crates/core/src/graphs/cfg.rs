use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ir::{IrMethod, IrStatement, MethodSignature};

pub type BlockId = usize;

/// A maximal run of statements `[start, end)` with a single entry point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BasicBlock {
    pub id: BlockId,
    pub start: usize,
    pub end: usize,
}

impl BasicBlock {
    pub fn contains(&self, stmt: usize) -> bool {
        self.start <= stmt && stmt < self.end
    }
}

/// Per-method control-flow graph. Dead blocks are kept and flagged so that
/// statement indices stay stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cfg {
    pub method: MethodSignature,
    pub blocks: Vec<BasicBlock>,
    pub succs: Vec<Vec<BlockId>>,
    pub preds: Vec<Vec<BlockId>>,
    pub entry: BlockId,
    pub exits: Vec<BlockId>,
    pub dead: Vec<bool>,
    pub back_edges: BTreeSet<(BlockId, BlockId)>,
    block_of: Vec<BlockId>,
}

pub fn build_cfg(m: &IrMethod) -> Cfg {
    Cfg::build(m)
}

impl Cfg {
    pub fn build(m: &IrMethod) -> Cfg {
        let body = &m.body;
        let mut labels: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, s) in body.iter().enumerate() {
            if let IrStatement::Label { name } = s {
                labels.entry(name.as_str()).or_insert(i);
            }
        }

        let mut leaders = BTreeSet::new();
        leaders.insert(0usize);
        for (i, s) in body.iter().enumerate() {
            if matches!(s, IrStatement::Label { .. }) {
                leaders.insert(i);
            }
            if s.is_terminator() && i + 1 < body.len() {
                leaders.insert(i + 1);
            }
        }
        let leaders: Vec<usize> = leaders.into_iter().filter(|&l| l < body.len().max(1)).collect();

        let mut blocks = Vec::new();
        for (id, &start) in leaders.iter().enumerate() {
            let end = leaders.get(id + 1).copied().unwrap_or(body.len());
            blocks.push(BasicBlock { id, start, end });
        }
        let mut block_of = vec![0; body.len()];
        for b in &blocks {
            for slot in &mut block_of[b.start..b.end] {
                *slot = b.id;
            }
        }

        let n = blocks.len();
        let mut succs = vec![Vec::new(); n];
        for b in &blocks {
            let next = (b.id + 1 < n).then_some(b.id + 1);
            let last = if b.end > b.start { body.get(b.end - 1) } else { None };
            let target_block = |label: &str| labels.get(label).map(|&i| block_of[i]);
            let out: Vec<BlockId> = match last {
                Some(IrStatement::If { target, .. }) => {
                    target_block(target).into_iter().chain(next).collect()
                }
                Some(IrStatement::Goto { target }) => target_block(target).into_iter().collect(),
                Some(IrStatement::Return { .. }) | Some(IrStatement::ReturnVoid) => Vec::new(),
                _ => next.into_iter().collect(),
            };
            let mut dedup = Vec::new();
            for s in out {
                if !dedup.contains(&s) {
                    dedup.push(s);
                }
            }
            succs[b.id] = dedup;
        }
        let mut preds = vec![Vec::new(); n];
        for (from, outs) in succs.iter().enumerate() {
            for &to in outs {
                preds[to].push(from);
            }
        }
        for p in &mut preds {
            p.sort_unstable();
        }

        let exits = (0..n).filter(|&b| succs[b].is_empty()).collect();
        let mut reachable = vec![false; n];
        let mut stack = vec![0];
        while let Some(b) = stack.pop() {
            if std::mem::replace(&mut reachable[b], true) {
                continue;
            }
            stack.extend(succs[b].iter().copied().filter(|&s| !reachable[s]));
        }
        let dead = reachable.iter().map(|r| !r).collect();
        let back_edges = classify_back_edges(&succs);

        Cfg { method: m.signature.clone(), blocks, succs, preds, entry: 0, exits, dead, back_edges, block_of }
    }

    pub fn block_of(&self, stmt: usize) -> BlockId {
        self.block_of[stmt]
    }

    pub fn edges(&self) -> Vec<(BlockId, BlockId)> {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(f, ts)| ts.iter().map(move |&t| (f, t)))
            .collect()
    }

    pub fn is_back_edge(&self, from: BlockId, to: BlockId) -> bool {
        self.back_edges.contains(&(from, to))
    }

    /// Every acyclic path ending at `anchor`, walking predecessors without
    /// crossing back edges, returned entry-first. A loop is thus taken at most
    /// once. The boolean reports whether enumeration stopped at `limit`.
    pub fn backward_paths(&self, anchor: BlockId, limit: usize) -> (Vec<Vec<BlockId>>, bool) {
        let mut out = Vec::new();
        let mut path = vec![anchor];
        let mut truncated = false;
        self.walk_back(&mut path, &mut out, limit, &mut truncated);
        for p in &mut out {
            p.reverse();
        }
        (out, truncated)
    }

    fn walk_back(&self, path: &mut Vec<BlockId>, out: &mut Vec<Vec<BlockId>>, limit: usize, truncated: &mut bool) {
        if out.len() >= limit {
            *truncated = true;
            return;
        }
        let cur = *path.last().expect("non-empty path");
        let preds: Vec<BlockId> = self.preds[cur]
            .iter()
            .copied()
            .filter(|&p| !self.is_back_edge(p, cur) && !path.contains(&p))
            .collect();
        if preds.is_empty() {
            out.push(path.clone());
            return;
        }
        for p in preds {
            path.push(p);
            self.walk_back(path, out, limit, truncated);
            path.pop();
            if *truncated {
                return;
            }
        }
    }

    /// Blocks that can reach `block` through intra-method edges (inclusive).
    pub fn reverse_reachable(&self, block: BlockId) -> BTreeSet<BlockId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![block];
        while let Some(b) = stack.pop() {
            if seen.insert(b) {
                stack.extend(self.preds[b].iter().copied());
            }
        }
        seen
    }
}

/// Edges whose target is on the DFS stack when traversed. Unreachable regions
/// are classified by starting fresh searches from them in block order.
fn classify_back_edges(succs: &[Vec<BlockId>]) -> BTreeSet<(BlockId, BlockId)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }
    let n = succs.len();
    let mut color = vec![Color::White; n];
    let mut back = BTreeSet::new();
    for root in 0..n {
        if color[root] != Color::White {
            continue;
        }
        let mut stack: Vec<(BlockId, usize)> = vec![(root, 0)];
        color[root] = Color::Grey;
        while let Some(&mut (b, ref mut i)) = stack.last_mut() {
            if let Some(&s) = succs[b].get(*i) {
                *i += 1;
                match color[s] {
                    Color::White => {
                        color[s] = Color::Grey;
                        stack.push((s, 0));
                    }
                    Color::Grey => {
                        back.insert((b, s));
                    }
                    Color::Black => {}
                }
            } else {
                color[b] = Color::Black;
                stack.pop();
            }
        }
    }
    back
}
