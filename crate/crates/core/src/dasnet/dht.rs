//! Replicated key/value store over a fixed set of simulated peers.
//!
//! Peers carry 32-byte ids; the replica set of a key is its
//! `replication_factor` XOR-closest peers, ranked by distance. There is no
//! routing: lookups go straight to the ranked replica set, and a dead peer
//! behaves like a timed-out request.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Key = [u8; 32];

#[derive(Clone, Debug)]
struct Peer {
    id: [u8; 32],
    alive: bool,
    records: HashMap<Key, Vec<u8>>,
}

#[derive(Clone, Debug)]
pub struct SimDht {
    peers: Vec<Peer>,
    replication_factor: usize,
    seed: u64,
}

/// Result of writing one object.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PutOutcome {
    /// Replica writes that landed on a live peer.
    pub stored: usize,
    /// Writes that hit a dead peer.
    pub failed: usize,
}

impl SimDht {
    pub fn new(peers: usize, replication_factor: usize, seed: u64) -> Self {
        assert!(peers > 0, "a DHT needs at least one peer");
        let replication_factor = replication_factor.clamp(1, peers);
        let peers = (0..peers as u64)
            .map(|i| {
                let mut h = Sha256::new();
                h.update(b"sim-peer");
                h.update(seed.to_be_bytes());
                h.update(i.to_be_bytes());
                Peer {
                    id: h.finalize().into(),
                    alive: true,
                    records: HashMap::new(),
                }
            })
            .collect();
        Self {
            peers,
            replication_factor,
            seed,
        }
    }

    pub fn peer_count(&self) -> usize {
        self.peers.len()
    }

    pub fn live_peers(&self) -> usize {
        self.peers.iter().filter(|p| p.alive).count()
    }

    pub fn replication_factor(&self) -> usize {
        self.replication_factor
    }

    /// Indices of the replica set for `key`, closest first.
    pub fn replica_set(&self, key: &Key) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.peers.len()).collect();
        idx.sort_by_key(|&i| xor_distance(&self.peers[i].id, key));
        idx.truncate(self.replication_factor);
        idx
    }

    /// Writes `value` to the first `replicas` peers of the replica set.
    pub fn put_replicas(&mut self, key: Key, value: &[u8], replicas: usize) -> PutOutcome {
        let mut out = PutOutcome { stored: 0, failed: 0 };
        for i in self.replica_set(&key).into_iter().take(replicas) {
            let peer = &mut self.peers[i];
            if peer.alive {
                peer.records.insert(key, value.to_vec());
                out.stored += 1;
            } else {
                out.failed += 1;
            }
        }
        out
    }

    /// Writes a single replica to the `rank`-th closest peer. Returns whether
    /// the write landed.
    pub fn put_at_rank(&mut self, key: Key, value: &[u8], rank: usize) -> bool {
        let Some(&i) = self.replica_set(&key).get(rank) else {
            return false;
        };
        let peer = &mut self.peers[i];
        if peer.alive {
            peer.records.insert(key, value.to_vec());
        }
        peer.alive
    }

    pub fn put(&mut self, key: Key, value: &[u8]) -> PutOutcome {
        self.put_replicas(key, value, self.replication_factor)
    }

    /// Value held by the peer at `peer`, if that peer is alive and has it.
    pub fn fetch_from(&self, peer: usize, key: &Key) -> Option<&[u8]> {
        let p = &self.peers[peer];
        if !p.alive {
            return None;
        }
        p.records.get(key).map(Vec::as_slice)
    }

    /// Succeeds iff some live replica holds the key.
    pub fn get(&self, key: &Key) -> Option<&[u8]> {
        self.replica_set(key).into_iter().find_map(|i| self.fetch_from(i, key))
    }

    pub fn replicas_holding(&self, key: &Key) -> usize {
        self.peers.iter().filter(|p| p.records.contains_key(key)).count()
    }

    pub fn set_alive(&mut self, peer: usize, alive: bool) {
        self.peers[peer].alive = alive;
    }

    /// Kills `ceil(fraction * peers)` peers, chosen by a permutation fixed by
    /// the DHT seed, so a larger fraction always kills a superset.
    pub fn apply_churn(&mut self, fraction: f64) -> usize {
        let n = self.peers.len();
        let kill = ((fraction * n as f64).ceil() as usize).min(n);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha20Rng::seed_from_u64(self.seed ^ 0xC4u64.rotate_left(56)));
        for &i in &order[..kill] {
            self.peers[i].alive = false;
        }
        kill
    }

    /// Rewrites every stored replica of `key`.
    pub fn tamper_all(&mut self, key: &Key, mut f: impl FnMut(&mut Vec<u8>)) -> usize {
        let mut n = 0;
        for p in &mut self.peers {
            if let Some(v) = p.records.get_mut(key) {
                f(v);
                n += 1;
            }
        }
        n
    }

    /// Rewrites the replica held by the `rank`-th closest peer only.
    pub fn tamper_replica(&mut self, key: &Key, rank: usize, f: impl FnOnce(&mut Vec<u8>)) -> bool {
        let Some(&i) = self.replica_set(key).get(rank) else {
            return false;
        };
        match self.peers[i].records.get_mut(key) {
            Some(v) => {
                f(v);
                true
            }
            None => false,
        }
    }
}

fn xor_distance(a: &[u8; 32], b: &[u8; 32]) -> [u8; 32] {
    let mut out = [0u8; 32];
    for i in 0..32 {
        out[i] = a[i] ^ b[i];
    }
    out
}
