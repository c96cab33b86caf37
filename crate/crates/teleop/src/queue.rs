//! Bounded hand-off between a node's message pump and its tick loop.

use std::collections::VecDeque;

use crate::protocol::WireMessage;

pub const QUEUE_CAPACITY: usize = 64;

/// FIFO of `(tag, message)` pairs. When full, the oldest state message is
/// dropped to make room; commands are never dropped (a queue holding only
/// commands grows past its capacity rather than lose one).
#[derive(Debug, Clone)]
pub struct MessageQueue<K = ()> {
    items: VecDeque<(K, WireMessage)>,
    capacity: usize,
    dropped: u64,
}

impl<K> Default for MessageQueue<K> {
    fn default() -> Self {
        Self::with_capacity(QUEUE_CAPACITY)
    }
}

impl<K> MessageQueue<K> {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
            dropped: 0,
        }
    }

    pub fn push(&mut self, tag: K, msg: WireMessage) {
        if self.items.len() >= self.capacity {
            match self.items.iter().position(|(_, m)| m.msg_type.is_state()) {
                Some(i) => {
                    self.items.remove(i);
                    self.dropped += 1;
                }
                None if msg.msg_type.is_state() => {
                    self.dropped += 1;
                    return;
                }
                None => {}
            }
        }
        self.items.push_back((tag, msg));
    }

    pub fn pop(&mut self) -> Option<(K, WireMessage)> {
        self.items.pop_front()
    }

    pub fn drain(&mut self) -> impl Iterator<Item = (K, WireMessage)> + '_ {
        self.items.drain(..)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// State messages discarded so far.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}
