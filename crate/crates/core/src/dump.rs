//! Chain dump: one JSON object per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::{Block, BlockError, BlockId, BlockKind, Proof, Seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpRecord {
    pub id: BlockId,
    pub parent_id: BlockId,
    pub kind: BlockKind,
    pub height: u64,
    pub timestamp: f64,
    pub difficulty: f64,
    pub producer_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonce: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
}

impl DumpRecord {
    pub fn from_block(id: BlockId, block: &Block) -> Self {
        let (nonce, seed) = match &block.proof {
            Proof::Work { nonce } => (Some(hex::encode(nonce)), None),
            Proof::Stake { seed } => (None, Some(seed.to_hex())),
        };
        DumpRecord {
            id,
            parent_id: block.parent_id,
            kind: block.kind(),
            height: block.height,
            timestamp: block.timestamp,
            difficulty: block.difficulty,
            producer_id: block.producer_id.clone(),
            nonce,
            seed,
        }
    }

    pub fn to_block(&self) -> Result<Block, BlockError> {
        let proof = match (self.kind, &self.nonce, &self.seed) {
            (BlockKind::Work, Some(n), None) => Proof::Work {
                nonce: hex::decode(n).map_err(|e| BlockError::Hex {
                    field: "nonce",
                    reason: e.to_string(),
                })?,
            },
            (BlockKind::Stake, None, Some(s)) => Proof::Stake {
                seed: Seed::from_hex(s).map_err(|e| BlockError::Hex {
                    field: "seed",
                    reason: e.to_string(),
                })?,
            },
            (BlockKind::Work, _, _) => {
                return Err(BlockError::MixedProof(
                    "work block needs a nonce and no seed",
                ))
            }
            (BlockKind::Stake, _, _) => {
                return Err(BlockError::MixedProof(
                    "stake block needs a seed and no nonce",
                ))
            }
        };
        let block = Block {
            parent_id: self.parent_id,
            height: self.height,
            timestamp: self.timestamp,
            difficulty: self.difficulty,
            producer_id: self.producer_id.clone(),
            proof,
        };
        block.check_structure()?;
        Ok(block)
    }
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_dump<'a, W: Write>(
    mut out: W,
    blocks: impl IntoIterator<Item = (BlockId, &'a Block)>,
) -> std::io::Result<()> {
    for (id, block) in blocks {
        serde_json::to_writer(&mut out, &DumpRecord::from_block(id, block))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses every non-blank line; returns `(line_number, record)` pairs, 1-based.
pub fn read_dump<R: BufRead>(input: R) -> Result<Vec<(usize, DumpRecord)>, DumpError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| DumpError::Parse {
            line: i + 1,
            source,
        })?;
        records.push((i + 1, rec));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProtocolParams;

    #[test]
    fn work_record_round_trip() {
        let g = ProtocolParams::default().genesis_block();
        let id = g.id().unwrap();
        let mut buf = Vec::new();
        write_dump(&mut buf, [(id, &g)]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"kind\":\"work\""));
        assert!(!text.contains("seed"));
        let recs = read_dump(&buf[..]).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].1.to_block().unwrap(), g);
        assert_eq!(recs[0].1.id, id);
    }

    #[test]
    fn mixed_fields_are_structural_errors() {
        let g = ProtocolParams::default().genesis_block();
        let mut rec = DumpRecord::from_block(g.id().unwrap(), &g);
        rec.seed = Some(Seed([1; 32]).to_hex());
        assert!(matches!(rec.to_block(), Err(BlockError::MixedProof(_))));
        rec.kind = BlockKind::Stake;
        assert!(matches!(rec.to_block(), Err(BlockError::MixedProof(_))));
    }

    #[test]
    fn parse_error_reports_line() {
        let input = b"\n{\"id\": 3}\n";
        match read_dump(&input[..]) {
            Err(DumpError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
