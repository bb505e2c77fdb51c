use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measurement stations; the central node has one station per incoming arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Node {
    A = 0,
    BArmA = 1,
    BArmC = 2,
    C = 3,
}

impl Node {
    pub const ALL: [Node; 4] = [Node::A, Node::BArmA, Node::BArmC, Node::C];

    pub fn from_u8(v: u8) -> Result<Self> {
        Self::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| Error::OutOfRange(format!("node id {v}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Node::A => "A",
            Node::BArmA => "B_armA",
            Node::BArmC => "B_armC",
            Node::C => "C",
        }
    }

    /// Building whose clock stamps this station.
    pub fn site(self) -> Site {
        match self {
            Node::A => Site::A,
            Node::BArmA | Node::BArmC => Site::B,
            Node::C => Site::C,
        }
    }
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    A = 0,
    B = 1,
    C = 2,
}

impl Site {
    pub const ALL: [Site; 3] = [Site::A, Site::B, Site::C];

    pub fn name(self) -> &'static str {
        match self {
            Site::A => "A",
            Site::B => "B",
            Site::C => "C",
        }
    }
}

/// Detector 0 ("plus") fires for the +1 outcome, detector 1 for −1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub tick: u64,
    pub block_index: u32,
    pub node: Node,
    pub detector: u8,
    pub setting: u8,
}

impl DetectionRecord {
    pub fn outcome(&self) -> usize {
        self.detector as usize
    }
}

/// One sorted record stream per station.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Streams {
    streams: [Vec<DetectionRecord>; 4],
}

impl Streams {
    pub fn new(streams: [Vec<DetectionRecord>; 4]) -> Result<Self> {
        for (i, s) in streams.iter().enumerate() {
            if s.windows(2).any(|w| w[0].tick > w[1].tick) {
                return Err(Error::InvalidModel(format!(
                    "stream {} is not sorted by tick",
                    Node::ALL[i]
                )));
            }
            if s.iter().any(|r| r.node as usize != i) {
                return Err(Error::InvalidModel(format!(
                    "stream {} holds records of another node",
                    Node::ALL[i]
                )));
            }
        }
        Ok(Self { streams })
    }

    pub fn get(&self, node: Node) -> &[DetectionRecord] {
        &self.streams[node as usize]
    }

    pub fn into_inner(self) -> [Vec<DetectionRecord>; 4] {
        self.streams
    }

    pub fn total_len(&self) -> usize {
        self.streams.iter().map(Vec::len).sum()
    }
}
