use alloc::vec::Vec;

use super::SequentialSet;

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct TreeNode {
    key: u64,
    left: u32,
    right: u32,
    height: i32,
}

/// AVL tree stored in a vector arena; removed slots are recycled.
#[derive(Clone, Debug)]
pub struct AvlSet {
    nodes: Vec<TreeNode>,
    free: Vec<u32>,
    root: u32,
    len: usize,
}

impl Default for AvlSet {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            len: 0,
        }
    }
}

impl AvlSet {
    #[inline]
    fn h(&self, n: u32) -> i32 {
        if n == NIL {
            0
        } else {
            self.nodes[n as usize].height
        }
    }

    fn fix_height(&mut self, n: u32) {
        let nd = &self.nodes[n as usize];
        let h = 1 + self.h(nd.left).max(self.h(nd.right));
        self.nodes[n as usize].height = h;
    }

    fn rotate_right(&mut self, y: u32) -> u32 {
        let x = self.nodes[y as usize].left;
        let t = self.nodes[x as usize].right;
        self.nodes[x as usize].right = y;
        self.nodes[y as usize].left = t;
        self.fix_height(y);
        self.fix_height(x);
        x
    }

    fn rotate_left(&mut self, x: u32) -> u32 {
        let y = self.nodes[x as usize].right;
        let t = self.nodes[y as usize].left;
        self.nodes[y as usize].left = x;
        self.nodes[x as usize].right = t;
        self.fix_height(x);
        self.fix_height(y);
        y
    }

    fn rebalance(&mut self, n: u32) -> u32 {
        self.fix_height(n);
        let (l, r) = (self.nodes[n as usize].left, self.nodes[n as usize].right);
        let bf = self.h(l) - self.h(r);
        if bf > 1 {
            let ln = &self.nodes[l as usize];
            if self.h(ln.left) < self.h(ln.right) {
                let nl = self.rotate_left(l);
                self.nodes[n as usize].left = nl;
            }
            return self.rotate_right(n);
        }
        if bf < -1 {
            let rn = &self.nodes[r as usize];
            if self.h(rn.right) < self.h(rn.left) {
                let nr = self.rotate_right(r);
                self.nodes[n as usize].right = nr;
            }
            return self.rotate_left(n);
        }
        n
    }

    fn alloc(&mut self, key: u64) -> u32 {
        let node = TreeNode {
            key,
            left: NIL,
            right: NIL,
            height: 1,
        };
        match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn insert_at(&mut self, n: u32, key: u64) -> (u32, bool) {
        if n == NIL {
            return (self.alloc(key), true);
        }
        let k = self.nodes[n as usize].key;
        let added = if key < k {
            let (c, a) = self.insert_at(self.nodes[n as usize].left, key);
            self.nodes[n as usize].left = c;
            a
        } else if key > k {
            let (c, a) = self.insert_at(self.nodes[n as usize].right, key);
            self.nodes[n as usize].right = c;
            a
        } else {
            false
        };
        if added {
            (self.rebalance(n), true)
        } else {
            (n, false)
        }
    }

    // Detaches the minimum of subtree `n`: (new subtree root, detached node).
    fn take_min(&mut self, n: u32) -> (u32, u32) {
        let l = self.nodes[n as usize].left;
        if l == NIL {
            return (self.nodes[n as usize].right, n);
        }
        let (nl, m) = self.take_min(l);
        self.nodes[n as usize].left = nl;
        (self.rebalance(n), m)
    }

    fn erase_at(&mut self, n: u32, key: u64) -> (u32, bool) {
        if n == NIL {
            return (NIL, false);
        }
        let TreeNode { key: k, left, right, .. } = self.nodes[n as usize];
        if key < k {
            let (c, r) = self.erase_at(left, key);
            self.nodes[n as usize].left = c;
            return if r { (self.rebalance(n), true) } else { (n, false) };
        }
        if key > k {
            let (c, r) = self.erase_at(right, key);
            self.nodes[n as usize].right = c;
            return if r { (self.rebalance(n), true) } else { (n, false) };
        }
        self.free.push(n);
        if left == NIL {
            return (right, true);
        }
        if right == NIL {
            return (left, true);
        }
        let (nr, m) = self.take_min(right);
        self.nodes[m as usize].left = left;
        self.nodes[m as usize].right = nr;
        (self.rebalance(m), true)
    }

    #[cfg(test)]
    fn check_balanced(&self, n: u32, lo: Option<u64>, hi: Option<u64>) -> i32 {
        if n == NIL {
            return 0;
        }
        let nd = &self.nodes[n as usize];
        assert!(lo.is_none_or(|lo| nd.key > lo) && hi.is_none_or(|hi| nd.key < hi));
        let lh = self.check_balanced(nd.left, lo, Some(nd.key));
        let rh = self.check_balanced(nd.right, Some(nd.key), hi);
        assert!((lh - rh).abs() <= 1, "unbalanced at {}", nd.key);
        assert_eq!(nd.height, 1 + lh.max(rh));
        nd.height
    }
}

impl SequentialSet for AvlSet {
    fn insert(&mut self, key: u64) -> bool {
        let (root, added) = self.insert_at(self.root, key);
        self.root = root;
        self.len += added as usize;
        added
    }

    fn erase(&mut self, key: u64) -> bool {
        let (root, removed) = self.erase_at(self.root, key);
        self.root = root;
        self.len -= removed as usize;
        removed
    }

    fn find(&self, key: u64) -> bool {
        let mut n = self.root;
        while n != NIL {
            let nd = &self.nodes[n as usize];
            if key == nd.key {
                return true;
            }
            n = if key < nd.key { nd.left } else { nd.right };
        }
        false
    }

    fn len(&self) -> usize {
        self.len
    }

    fn keys(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack = Vec::new();
        let mut n = self.root;
        while n != NIL || !stack.is_empty() {
            while n != NIL {
                stack.push(n);
                n = self.nodes[n as usize].left;
            }
            let top = stack.pop().unwrap();
            out.push(self.nodes[top as usize].key);
            n = self.nodes[top as usize].right;
        }
        out
    }
}
