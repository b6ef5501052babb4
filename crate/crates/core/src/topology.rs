//! Directed information-flow graph among followers plus leader pinning.
//!
//! Followers are indexed `1..=n` in platoon order; the leader is node `0`.
//! `a[i][j] = 1` means follower `j` sends to follower `i`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::TopologyError;

/// Id of the leader in information sets.
pub const LEADER: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    /// Predecessor following.
    Pf,
    /// Predecessor-leader following.
    Plf,
    /// Two-predecessor following.
    Tpf,
    /// Two-predecessor-leader following.
    Tplf,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [Self::Pf, Self::Plf, Self::Tpf, Self::Tplf];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pf => "pf",
            Self::Plf => "plf",
            Self::Tpf => "tpf",
            Self::Tplf => "tplf",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pf" => Ok(Self::Pf),
            "plf" => Ok(Self::Plf),
            "tpf" => Ok(Self::Tpf),
            "tplf" => Ok(Self::Tplf),
            other => Err(format!("unknown topology '{other}' (expected pf, plf, tpf or tplf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    /// Row-major `n x n`, zero-based internally.
    adjacency: Vec<bool>,
    pinned: Vec<bool>,
    kind: Option<TopologyKind>,
}

impl Topology {
    /// Builds one of the four canonical unidirectional topologies.
    pub fn build(kind: TopologyKind, n: usize) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        let mut adjacency = vec![false; n * n];
        let mut pinned = vec![false; n];
        let two_pred = matches!(kind, TopologyKind::Tpf | TopologyKind::Tplf);
        for i in 0..n {
            if i >= 1 {
                adjacency[i * n + i - 1] = true;
            }
            if two_pred && i >= 2 {
                adjacency[i * n + i - 2] = true;
            }
        }
        match kind {
            TopologyKind::Pf => pinned[0] = true,
            TopologyKind::Tpf => {
                // The leader stands in for the second predecessor of FV 2.
                pinned[0] = true;
                if n >= 2 {
                    pinned[1] = true;
                }
            }
            TopologyKind::Plf | TopologyKind::Tplf => pinned.iter_mut().for_each(|p| *p = true),
        }
        Ok(Self { n, adjacency, pinned, kind: Some(kind) })
    }

    /// Builds an arbitrary unidirectional topology from 0/1 matrices.
    ///
    /// `adjacency[i][j]` (zero-based) is 1 when follower `j+1` sends to follower `i+1`.
    pub fn from_parts(adjacency: &[Vec<u8>], pinned: &[u8]) -> Result<Self, TopologyError> {
        let n = pinned.len();
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        if adjacency.len() != n || adjacency.iter().any(|r| r.len() != n) {
            return Err(TopologyError::Shape { n, rows: adjacency.len() });
        }
        if adjacency.iter().flatten().chain(pinned.iter()).any(|&x| x > 1) {
            return Err(TopologyError::NotBinary);
        }
        let mut flat = vec![false; n * n];
        for (i, row) in adjacency.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a == 1 {
                    if i == j {
                        return Err(TopologyError::SelfLoop(i + 1));
                    }
                    if j > i {
                        return Err(TopologyError::NotUnidirectional { from: j + 1, to: i + 1 });
                    }
                    flat[i * n + j] = true;
                }
            }
        }
        Ok(Self { n, adjacency: flat, pinned: pinned.iter().map(|&p| p == 1).collect(), kind: None })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> Option<TopologyKind> {
        self.kind
    }

    /// Whether follower `j` sends to follower `i` (both one-based).
    pub fn edge(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i <= self.n && j <= self.n && self.adjacency[(i - 1) * self.n + (j - 1)]
    }

    pub fn is_pinned(&self, i: usize) -> bool {
        i >= 1 && i <= self.n && self.pinned[i - 1]
    }

    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.adjacency[i * self.n + j] as u8).collect())
            .collect()
    }

    pub fn pinned_vector(&self) -> Vec<u8> {
        self.pinned.iter().map(|&p| p as u8).collect()
    }

    fn check_index(&self, i: usize) -> Result<(), TopologyError> {
        if i == 0 || i > self.n {
            Err(TopologyError::IndexOutOfRange { index: i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Followers that send information to follower `i`.
    pub fn in_neighbors(&self, i: usize) -> Result<BTreeSet<usize>, TopologyError> {
        self.check_index(i)?;
        Ok((1..=self.n).filter(|&j| self.edge(i, j)).collect())
    }

    /// Followers that receive information from follower `i`.
    pub fn out_neighbors(&self, i: usize) -> Result<BTreeSet<usize>, TopologyError> {
        self.check_index(i)?;
        Ok((1..=self.n).filter(|&j| self.edge(j, i)).collect())
    }

    /// All senders to follower `i`, with the leader as [`LEADER`] when pinned.
    pub fn info_set(&self, i: usize) -> Result<BTreeSet<usize>, TopologyError> {
        let mut set = self.in_neighbors(i)?;
        if self.is_pinned(i) {
            set.insert(LEADER);
        }
        Ok(set)
    }

    /// True iff every follower is reachable from the leader.
    #[allow(clippy::needless_range_loop)]
    pub fn has_leader_spanning_tree(&self) -> bool {
        let mut seen = vec![false; self.n + 1];
        seen[LEADER] = true;
        let mut queue = VecDeque::from([LEADER]);
        while let Some(node) = queue.pop_front() {
            for next in 1..=self.n {
                if seen[next] {
                    continue;
                }
                let linked = if node == LEADER { self.is_pinned(next) } else { self.edge(next, node) };
                if linked {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Topology after follower `i` leaves. Canonical kinds are rebuilt;
    /// custom graphs drop the vehicle's row and column.
    pub fn remove_vehicle(&self, i: usize) -> Result<Self, TopologyError> {
        if self.n == 0 {
            return Err(TopologyError::Empty);
        }
        self.check_index(i)?;
        if self.n == 1 {
            return Err(TopologyError::Empty);
        }
        if let Some(kind) = self.kind {
            return Self::build(kind, self.n - 1);
        }
        let keep: Vec<usize> = (0..self.n).filter(|&k| k != i - 1).collect();
        let n = keep.len();
        let mut adjacency = vec![false; n * n];
        for (a, &ra) in keep.iter().enumerate() {
            for (b, &rb) in keep.iter().enumerate() {
                adjacency[a * n + b] = self.adjacency[ra * self.n + rb];
            }
        }
        let pinned = keep.iter().map(|&k| self.pinned[k]).collect();
        Ok(Self { n, adjacency, pinned, kind: None })
    }

    /// Topology after a vehicle enters at slot `position` (`1..=n+1`).
    /// Custom graphs splice the newcomer between its predecessor and the
    /// vehicle it displaces.
    pub fn insert_vehicle(&self, position: usize) -> Result<Self, TopologyError> {
        if position == 0 || position > self.n + 1 {
            return Err(TopologyError::IndexOutOfRange { index: position, n: self.n + 1 });
        }
        if let Some(kind) = self.kind {
            return Self::build(kind, self.n + 1);
        }
        let n = self.n + 1;
        let p = position - 1;
        let old_of = |k: usize| -> Option<usize> {
            match k.cmp(&p) {
                std::cmp::Ordering::Less => Some(k),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(k - 1),
            }
        };
        let mut adjacency = vec![false; n * n];
        let mut pinned = vec![false; n];
        for a in 0..n {
            if let Some(oa) = old_of(a) {
                pinned[a] = self.pinned[oa];
                for b in 0..n {
                    if let Some(ob) = old_of(b) {
                        adjacency[a * n + b] = self.adjacency[oa * self.n + ob];
                    }
                }
            }
        }
        if p == 0 {
            pinned[0] = true;
        } else {
            adjacency[p * n + p - 1] = true;
        }
        if p + 1 < n {
            adjacency[(p + 1) * n + p] = true;
        }
        Ok(Self { n, adjacency, pinned, kind: None })
    }
}
