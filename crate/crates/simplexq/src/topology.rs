//! Simplex-code server topology and the access structure consumed by the
//! simulator.

use crate::error::{Error, Result};

/// Layout of a `[2^k - 1, k]` binary simplex code.
///
/// Servers are labeled by the nonzero `k`-bit masks `1..=2^k - 1`; the
/// systematic server of data symbol `i` is the unit mask `1 << i`. Symbol `i`
/// can be recovered by XOR-ing the pair `{u, v}` whenever `u ^ v == 1 << i`,
/// and the `2^(k-1) - 1` such pairs partition the remaining servers into
/// disjoint recovery groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexTopology {
    k: u32,
    servers: Vec<u32>,
    groups: Vec<Vec<(u32, u32)>>,
}

impl SimplexTopology {
    /// Builds the topology for `k` data symbols, `1 <= k <= 10`.
    pub fn build(k: u32) -> Result<Self> {
        if !(1..=10).contains(&k) {
            return Err(Error::parameter(format!(
                "simplex topology supports 1 <= k <= 10 data symbols, got {k}"
            )));
        }
        let n = (1u32 << k) - 1;
        let servers: Vec<u32> = (1..=n).collect();
        let mut groups = Vec::with_capacity(k as usize);
        for i in 0..k {
            let e = 1u32 << i;
            // Each label pairs with label ^ e; keep u < v so every unordered
            // pair appears once, ordered by ascending smaller label.
            let mut pairs = Vec::new();
            for u in 1..=n {
                let v = u ^ e;
                if u < v && u != e {
                    pairs.push((u, v));
                }
            }
            groups.push(pairs);
        }
        Ok(SimplexTopology { k, servers, groups })
    }

    /// Number of data symbols.
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of servers, `2^k - 1`.
    pub fn n(&self) -> usize {
        self.servers.len()
    }

    /// Availability: recovery groups per symbol, `2^(k-1) - 1`.
    pub fn t(&self) -> usize {
        (1usize << (self.k - 1)) - 1
    }

    /// Server labels (`k`-bit masks), ascending.
    pub fn servers(&self) -> &[u32] {
        &self.servers
    }

    /// Systematic server label of symbol `i`.
    pub fn systematic(&self, symbol: u32) -> u32 {
        assert!(symbol < self.k, "symbol {symbol} out of range for k={}", self.k);
        1 << symbol
    }

    /// Recovery groups of symbol `i` as label pairs `(u, v)`, `u < v`,
    /// ordered by ascending `u`.
    pub fn groups(&self, symbol: u32) -> &[(u32, u32)] {
        assert!(symbol < self.k, "symbol {symbol} out of range for k={}", self.k);
        &self.groups[symbol as usize]
    }
}

/// The per-symbol access structure the simulator actually schedules on:
/// server indices `0..n`, one systematic index per symbol plus disjoint
/// recovery pairs.
///
/// Built from a [`SimplexTopology`] for full-code experiments, or as a
/// synthetic single-symbol star to study fixed hot-data arrivals at an
/// availability `t` that no simplex code realizes (for example `t = 2`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessTopology {
    n_servers: usize,
    systematic: Vec<usize>,
    groups: Vec<Vec<(usize, usize)>>,
}

impl AccessTopology {
    /// Single hot symbol with availability `t`: server 0 systematic, servers
    /// `2i-1, 2i` forming recovery pair `i`.
    pub fn single_symbol(t: usize) -> Result<Self> {
        if t > 511 {
            return Err(Error::parameter(format!("availability {t} too large (max 511)")));
        }
        let groups = (0..t).map(|g| (2 * g + 1, 2 * g + 2)).collect();
        Ok(AccessTopology {
            n_servers: 2 * t + 1,
            systematic: vec![0],
            groups: vec![groups],
        })
    }

    /// Number of servers.
    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    /// Number of addressable symbols.
    pub fn symbols(&self) -> usize {
        self.systematic.len()
    }

    /// Availability of each symbol.
    pub fn t(&self) -> usize {
        self.groups[0].len()
    }

    /// Systematic server index of `symbol`.
    pub fn systematic(&self, symbol: usize) -> usize {
        self.systematic[symbol]
    }

    /// Recovery pairs (server indices) of `symbol`.
    pub fn groups(&self, symbol: usize) -> &[(usize, usize)] {
        &self.groups[symbol]
    }
}

impl From<&SimplexTopology> for AccessTopology {
    fn from(top: &SimplexTopology) -> Self {
        let k = top.k();
        AccessTopology {
            n_servers: top.n(),
            systematic: (0..k).map(|i| (top.systematic(i) - 1) as usize).collect(),
            groups: (0..k)
                .map(|i| {
                    top.groups(i)
                        .iter()
                        .map(|&(u, v)| ((u - 1) as usize, (v - 1) as usize))
                        .collect()
                })
                .collect(),
        }
    }
}
