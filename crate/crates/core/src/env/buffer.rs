use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Packet {
    pub size_bits: u32,
    /// Bits still to send; a packet can be drained across several TTIs.
    pub remaining_bits: u32,
    pub arrival_tti: u64,
}

impl Packet {
    pub fn new(size_bits: u32, arrival_tti: u64) -> Self {
        debug_assert!(size_bits > 0);
        Packet {
            size_bits,
            remaining_bits: size_bits,
            arrival_tti,
        }
    }
}

/// Per-UE FIFO RLC queue with drop and delivery counters.
///
/// Ledger: `arrived == queued_packets + transmitted + dropped_overflow + dropped_expired`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RlcBuffer {
    queue: VecDeque<Packet>,
    capacity_bits: u64,
    queued_bits: u64,
    pub arrived: u64,
    pub transmitted: u64,
    pub dropped_overflow: u64,
    pub dropped_expired: u64,
}

impl RlcBuffer {
    pub fn new(capacity_bits: u64) -> Self {
        RlcBuffer {
            queue: VecDeque::new(),
            capacity_bits,
            queued_bits: 0,
            arrived: 0,
            transmitted: 0,
            dropped_overflow: 0,
            dropped_expired: 0,
        }
    }

    /// Counts the arrival; drops it if it would exceed capacity.
    /// Returns whether the packet was queued.
    pub fn enqueue(&mut self, packet: Packet) -> bool {
        self.arrived += 1;
        let bits = u64::from(packet.remaining_bits);
        if self.queued_bits + bits > self.capacity_bits {
            self.dropped_overflow += 1;
            return false;
        }
        self.queued_bits += bits;
        self.queue.push_back(packet);
        true
    }

    /// Send up to `budget_bits` in FIFO order. Returns `(bits_sent, packets_completed)`.
    pub fn drain(&mut self, budget_bits: u64) -> (u64, u32) {
        let mut left = budget_bits;
        let mut completed = 0;
        while left > 0 {
            let Some(head) = self.queue.front_mut() else {
                break;
            };
            let take = left.min(u64::from(head.remaining_bits));
            head.remaining_bits -= take as u32;
            left -= take;
            if head.remaining_bits == 0 {
                self.queue.pop_front();
                completed += 1;
            }
        }
        let sent = budget_bits - left;
        self.queued_bits -= sent;
        self.transmitted += u64::from(completed);
        (sent, completed)
    }

    /// Drop every packet older than `max_delay` TTIs at `now`.
    pub fn expire(&mut self, now: u64, max_delay: u64) -> u32 {
        let before = self.queue.len();
        let mut freed = 0;
        self.queue.retain(|p| {
            let keep = now.saturating_sub(p.arrival_tti) <= max_delay;
            if !keep {
                freed += u64::from(p.remaining_bits);
            }
            keep
        });
        self.queued_bits -= freed;
        let expired = (before - self.queue.len()) as u32;
        self.dropped_expired += u64::from(expired);
        expired
    }

    pub fn is_active(&self) -> bool {
        !self.queue.is_empty()
    }

    pub fn queued_bits(&self) -> u64 {
        self.queued_bits
    }

    pub fn queued_packets(&self) -> u64 {
        self.queue.len() as u64
    }

    pub fn capacity_bits(&self) -> u64 {
        self.capacity_bits
    }

    pub fn spare_bits(&self) -> u64 {
        self.capacity_bits - self.queued_bits
    }

    pub fn hol(&self) -> Option<&Packet> {
        self.queue.front()
    }

    pub fn hol_wait(&self, now: u64) -> u64 {
        self.hol().map_or(0, |p| now.saturating_sub(p.arrival_tti))
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.queue.iter()
    }

    pub fn ledger_balances(&self) -> bool {
        self.arrived
            == self.queued_packets() + self.transmitted + self.dropped_overflow + self.dropped_expired
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_counts_arrivals_and_drops() {
        let mut b = RlcBuffer::new(2 * 100);
        assert!(b.enqueue(Packet::new(100, 0)));
        assert!(b.enqueue(Packet::new(100, 0)));
        for _ in 0..3 {
            assert!(!b.enqueue(Packet::new(100, 1)));
        }
        assert_eq!(b.arrived, 5);
        assert_eq!(b.dropped_overflow, 3);
        assert!(b.ledger_balances());
    }

    #[test]
    fn partial_drain_keeps_hol() {
        let mut b = RlcBuffer::new(1_000_000);
        b.enqueue(Packet::new(8_000, 0));
        b.enqueue(Packet::new(2_000, 0));
        let (sent, done) = b.drain(8_000);
        assert_eq!((sent, done), (8_000, 1));
        b.enqueue(Packet::new(8_000, 1));
        let (sent, done) = b.drain(3_000);
        assert_eq!((sent, done), (3_000, 1));
        assert_eq!(b.hol().unwrap().remaining_bits, 7_000);
        assert_eq!(b.queued_bits(), 7_000);
        assert!(b.ledger_balances());
    }

    #[test]
    fn drain_is_capped_by_queue() {
        let mut b = RlcBuffer::new(1_000_000);
        b.enqueue(Packet::new(8_000, 0));
        assert_eq!(b.drain(10_000), (8_000, 1));
        assert!(!b.is_active());
    }

    #[test]
    fn expiry_boundary() {
        let mut b = RlcBuffer::new(1_000_000);
        b.enqueue(Packet::new(10, 0));
        b.enqueue(Packet::new(10, 1));
        assert_eq!(b.expire(2000, 2000), 0, "aged exactly max_delay stays");
        assert_eq!(b.expire(2001, 2000), 1, "aged max_delay + 1 goes");
        assert_eq!(b.hol().unwrap().arrival_tti, 1);
        assert_eq!(b.queued_bits(), 10);
        assert!(b.ledger_balances());
        let mut empty = RlcBuffer::new(10);
        assert_eq!(empty.expire(10_000, 1), 0);
    }
}
