//! Composite tree of execution results.

use alloc::vec::Vec;

use crate::hetmap::HeterogeneousMap;
use crate::simulator::ShotCounts;

/// Measurement counts plus metadata for one execution, with child buffers
/// for sub-executions.
///
/// A task root holds one child per objective evaluation; each evaluation
/// child holds one child per measured kernel it executed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultBuffer {
    pub metadata: HeterogeneousMap,
    pub counts: ShotCounts,
    pub children: Vec<ResultBuffer>,
}

impl ResultBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_metadata(metadata: HeterogeneousMap) -> Self {
        Self {
            metadata,
            ..Self::default()
        }
    }

    pub fn push_child(&mut self, child: ResultBuffer) -> &mut ResultBuffer {
        self.children.push(child);
        self.children.last_mut().unwrap()
    }

    /// Total shots recorded in this node's counts.
    pub fn total_shots(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of nodes in the tree, this one included.
    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ResultBuffer::node_count)
            .sum::<usize>()
    }

    /// Depth-first pre-order walk.
    pub fn walk(&self) -> impl Iterator<Item = &ResultBuffer> {
        let mut stack = alloc::vec![self];
        core::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }
}
