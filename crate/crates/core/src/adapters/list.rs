use alloc::vec::Vec;

use super::SequentialSet;

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Link {
    key: u64,
    next: u32,
}

/// Sorted singly linked list. Nodes live in a vector so a copy is a single
/// allocation, but lookups still walk the links.
#[derive(Clone, Debug)]
pub struct SortedListSet {
    nodes: Vec<Link>,
    free: Vec<u32>,
    head: u32,
    len: usize,
}

impl Default for SortedListSet {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            free: Vec::new(),
            head: NIL,
            len: 0,
        }
    }
}

impl SortedListSet {
    // (predecessor, first node with key >= `key`)
    fn locate(&self, key: u64) -> (u32, u32) {
        let mut prev = NIL;
        let mut cur = self.head;
        while cur != NIL && self.nodes[cur as usize].key < key {
            prev = cur;
            cur = self.nodes[cur as usize].next;
        }
        (prev, cur)
    }

    fn link_after(&mut self, prev: u32, node: u32) {
        if prev == NIL {
            self.head = node;
        } else {
            self.nodes[prev as usize].next = node;
        }
    }
}

impl SequentialSet for SortedListSet {
    fn insert(&mut self, key: u64) -> bool {
        let (prev, cur) = self.locate(key);
        if cur != NIL && self.nodes[cur as usize].key == key {
            return false;
        }
        let link = Link { key, next: cur };
        let idx = match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = link;
                i
            }
            None => {
                self.nodes.push(link);
                (self.nodes.len() - 1) as u32
            }
        };
        self.link_after(prev, idx);
        self.len += 1;
        true
    }

    fn erase(&mut self, key: u64) -> bool {
        let (prev, cur) = self.locate(key);
        if cur == NIL || self.nodes[cur as usize].key != key {
            return false;
        }
        let next = self.nodes[cur as usize].next;
        self.link_after(prev, next);
        self.free.push(cur);
        self.len -= 1;
        true
    }

    fn find(&self, key: u64) -> bool {
        let (_, cur) = self.locate(key);
        cur != NIL && self.nodes[cur as usize].key == key
    }

    fn len(&self) -> usize {
        self.len
    }

    fn keys(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len);
        let mut cur = self.head;
        while cur != NIL {
            out.push(self.nodes[cur as usize].key);
            cur = self.nodes[cur as usize].next;
        }
        out
    }
}
