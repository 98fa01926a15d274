use std::fmt;

use crate::{GameError, Result, MAX_STRUCTURE_AGENTS};

/// A set of agents encoded as a bitmask; bit `i` set means agent `i` is a member.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(pub u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn singleton(agent: usize) -> Self {
        Coalition(1 << agent)
    }

    /// The grand coalition over `n` agents.
    pub fn full(n: usize) -> Self {
        if n >= 32 {
            Coalition(u32::MAX)
        } else {
            Coalition((1u32 << n) - 1)
        }
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Self {
        members
            .into_iter()
            .fold(Coalition::EMPTY, |c, i| c.with(i))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, agent: usize) -> bool {
        agent < 32 && self.0 & (1 << agent) != 0
    }

    #[must_use]
    pub fn with(self, agent: usize) -> Self {
        Coalition(self.0 | (1 << agent))
    }

    #[must_use]
    pub fn without(self, agent: usize) -> Self {
        Coalition(self.0 & !(1 << agent))
    }

    #[must_use]
    pub fn union(self, other: Coalition) -> Self {
        Coalition(self.0 | other.0)
    }

    pub fn is_disjoint(self, other: Coalition) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Member indices in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Non-empty subsets of `self` in ascending bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = Coalition> {
        let set = self.0;
        let mut cur = 0u32;
        std::iter::from_fn(move || {
            cur = cur.wrapping_sub(set) & set;
            (cur != 0).then_some(Coalition(cur))
        })
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// The agents that joined before `joiner`, in join order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedCoalition {
    joiner: usize,
    members: Vec<usize>,
}

impl OrderedCoalition {
    pub fn new(n: usize, joiner: usize, members: Vec<usize>) -> Result<Self> {
        if joiner >= n {
            return Err(GameError::AgentOutOfRange { agent: joiner, n });
        }
        let mut seen = Coalition::EMPTY;
        for &m in &members {
            if m >= n {
                return Err(GameError::AgentOutOfRange { agent: m, n });
            }
            if m == joiner || seen.contains(m) {
                return Err(GameError::AgentInCoalition {
                    agent: m,
                    coalition: seen.with(joiner),
                });
            }
            seen = seen.with(m);
        }
        Ok(Self { joiner, members })
    }

    pub(crate) fn new_unchecked(joiner: usize, members: Vec<usize>) -> Self {
        Self { joiner, members }
    }

    pub fn joiner(&self) -> usize {
        self.joiner
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The unordered coalition the joiner enters.
    pub fn coalition(&self) -> Coalition {
        Coalition::from_members(self.members.iter().copied())
    }

    /// Members followed by the joiner: the full join order of `C ∪ {i}`.
    pub fn join_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied().chain(std::iter::once(self.joiner))
    }
}

/// A partition of the agent set into disjoint, non-empty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoalitionStructure {
    blocks: Vec<Coalition>,
}

impl CoalitionStructure {
    pub fn new(n: usize, blocks: Vec<Coalition>) -> Result<Self> {
        let full = Coalition::full(n);
        let mut seen = Coalition::EMPTY;
        for &b in &blocks {
            if b.is_empty() {
                return Err(GameError::InvalidGame("empty block in coalition structure".into()));
            }
            if !b.is_subset_of(full) {
                return Err(GameError::CoalitionOutOfRange { coalition: b, n });
            }
            if !b.is_disjoint(seen) {
                return Err(GameError::InvalidGame(format!("block {b} overlaps another block")));
            }
            seen = seen.union(b);
        }
        if seen != full {
            return Err(GameError::InvalidGame(format!(
                "blocks cover {seen}, not all {n} agents"
            )));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Coalition] {
        &self.blocks
    }
}

impl fmt::Display for CoalitionStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("]")
    }
}

/// Every set partition of `{0..n}` exactly once, generated from restricted
/// growth strings. The count is the Bell number `B(n)`.
pub fn enumerate_coalition_structures(n: usize) -> Result<Vec<CoalitionStructure>> {
    if n > MAX_STRUCTURE_AGENTS {
        return Err(GameError::Capacity {
            op: "enumerate_coalition_structures",
            limit: MAX_STRUCTURE_AGENTS,
            n,
        });
    }
    if n == 0 {
        return Err(GameError::InvalidGame("agent count must be at least 1".into()));
    }

    let mut out = Vec::new();
    // labels[k] = block of agent k; labels[k] <= 1 + max(labels[..k])
    let mut labels = vec![0usize; n];
    loop {
        let blocks_used = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Coalition::EMPTY; blocks_used];
        for (agent, &b) in labels.iter().enumerate() {
            blocks[b] = blocks[b].with(agent);
        }
        out.push(CoalitionStructure { blocks });

        // advance to the next restricted growth string
        let mut k = n - 1;
        loop {
            if k == 0 {
                return Ok(out);
            }
            let prefix_max = labels[..k].iter().copied().max().unwrap_or(0);
            if labels[k] <= prefix_max {
                labels[k] += 1;
                for l in labels.iter_mut().skip(k + 1) {
                    *l = 0;
                }
                break;
            }
            k -= 1;
        }
    }
}
