//! Binary tree serialization.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "OPCT" | version u32 | task u8 | D u32 | T u32 | N u64 | node stream
//! ```
//!
//! Nodes are written pre-order, negative child before positive. A split node
//! is `1u8, n_examples u64, bias f64, nnz u32, (index u32, value f64)...`
//! with only nonzero weights stored; a leaf is `0u8, n_examples u64,
//! prototype T × f64`. Round-trips are bit-exact.

use super::{Tree, TreeNode};
use crate::error::{Error, Result};
use crate::split::Hyperplane;
use crate::task::Task;

pub const TREE_MAGIC: &[u8; 4] = b"OPCT";
pub const TREE_FORMAT_VERSION: u32 = 1;

/// Guards against stack exhaustion from corrupt or adversarial files.
const MAX_NODE_DEPTH: usize = 10_000;

pub fn serialize(tree: &Tree) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(TREE_MAGIC);
    out.extend_from_slice(&TREE_FORMAT_VERSION.to_le_bytes());
    out.push(tree.task.tag());
    out.extend_from_slice(&(tree.n_features as u32).to_le_bytes());
    out.extend_from_slice(&(tree.n_targets as u32).to_le_bytes());
    out.extend_from_slice(&(tree.total_training_examples as u64).to_le_bytes());
    write_node(&tree.root, &mut out);
    out
}

fn write_node(node: &TreeNode, out: &mut Vec<u8>) {
    match node {
        TreeNode::Leaf {
            prototype,
            n_examples,
        } => {
            out.push(0);
            out.extend_from_slice(&(*n_examples as u64).to_le_bytes());
            for v in prototype {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        TreeNode::Split {
            plane,
            negative,
            positive,
            n_examples,
        } => {
            out.push(1);
            out.extend_from_slice(&(*n_examples as u64).to_le_bytes());
            out.extend_from_slice(&plane.bias.to_le_bytes());
            let nnz = plane.nonzero_weights() as u32;
            out.extend_from_slice(&nnz.to_le_bytes());
            for (j, &w) in plane.weights.iter().enumerate() {
                if w != 0.0 {
                    out.extend_from_slice(&(j as u32).to_le_bytes());
                    out.extend_from_slice(&w.to_le_bytes());
                }
            }
            write_node(negative, out);
            write_node(positive, out);
        }
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::ModelFormat {
                offset: self.pos,
                message: format!(
                    "unexpected end of data (need {n} bytes, {} left)",
                    self.buf.len() - self.pos
                ),
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn expect_magic(&mut self, magic: &[u8; 4], what: &str) -> Result<()> {
        let got = self.take(4)?;
        if got != magic {
            self.pos -= 4;
            return Err(self.error(format!("bad magic for {what}")));
        }
        Ok(())
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<Tree> {
    let mut reader = ByteReader::new(bytes);
    let tree = read_tree(&mut reader)?;
    if reader.remaining() != 0 {
        return Err(reader.error(format!("{} trailing bytes after tree", reader.remaining())));
    }
    Ok(tree)
}

/// Reads one tree starting at the reader's position (the ensemble format
/// concatenates tree blocks).
pub(crate) fn read_tree(reader: &mut ByteReader<'_>) -> Result<Tree> {
    reader.expect_magic(TREE_MAGIC, "tree model")?;
    let version = reader.u32()?;
    if version != TREE_FORMAT_VERSION {
        return Err(reader.error(format!(
            "unsupported tree format version {version} (expected {TREE_FORMAT_VERSION})"
        )));
    }
    let task_tag = reader.u8()?;
    let task = Task::from_tag(task_tag)
        .ok_or_else(|| reader.error(format!("unknown task tag {task_tag}")))?;
    let n_features = reader.u32()? as usize;
    let n_targets = reader.u32()? as usize;
    let total = reader.u64()? as usize;
    let root = read_node(reader, n_features, n_targets, 0)?;
    Ok(Tree {
        root,
        task,
        n_features,
        n_targets,
        total_training_examples: total,
    })
}

fn read_node(
    reader: &mut ByteReader<'_>,
    n_features: usize,
    n_targets: usize,
    depth: usize,
) -> Result<TreeNode> {
    if depth > MAX_NODE_DEPTH {
        return Err(reader.error("node nesting exceeds depth limit"));
    }
    let tag = reader.u8()?;
    match tag {
        0 => {
            let n_examples = reader.u64()? as usize;
            let mut prototype = Vec::with_capacity(n_targets);
            for _ in 0..n_targets {
                prototype.push(reader.f64()?);
            }
            Ok(TreeNode::Leaf {
                prototype,
                n_examples,
            })
        }
        1 => {
            let n_examples = reader.u64()? as usize;
            let bias = reader.f64()?;
            let nnz = reader.u32()? as usize;
            let mut weights = vec![0.0; n_features];
            for _ in 0..nnz {
                let j = reader.u32()? as usize;
                if j >= n_features {
                    return Err(reader.error(format!(
                        "weight index {j} out of range (D = {n_features})"
                    )));
                }
                weights[j] = reader.f64()?;
            }
            let negative = read_node(reader, n_features, n_targets, depth + 1)?;
            let positive = read_node(reader, n_features, n_targets, depth + 1)?;
            Ok(TreeNode::Split {
                plane: Hyperplane::new(weights, bias),
                negative: Box::new(negative),
                positive: Box::new(positive),
                n_examples,
            })
        }
        other => Err(reader.error(format!("unknown node tag {other}"))),
    }
}
