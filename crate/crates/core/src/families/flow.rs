//! Dinic max-flow on an undirected capacitated graph with float capacities.

use std::collections::VecDeque;

use crate::scalar::Real;

pub(crate) struct FlowNetwork<T> {
    head: Vec<usize>,
    next: Vec<usize>,
    to: Vec<usize>,
    res: Vec<T>,
    level: Vec<usize>,
    cursor: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl<T: Real> FlowNetwork<T> {
    pub fn new(n: usize) -> Self {
        FlowNetwork { head: vec![NONE; n], next: Vec::new(), to: Vec::new(), res: Vec::new(), level: vec![NONE; n], cursor: vec![NONE; n] }
    }

    fn push_arc(&mut self, u: usize, v: usize, cap: T) {
        self.to.push(v);
        self.res.push(cap);
        self.next.push(self.head[u]);
        self.head[u] = self.to.len() - 1;
    }

    /// Arc pair `u→v` / `v→u` with capacities `cap_uv` / `cap_vu`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap_uv: T, cap_vu: T) {
        self.push_arc(u, v, cap_uv);
        self.push_arc(v, u, cap_vu);
    }

    fn bfs(&mut self, s: usize, t: usize, eps: T) -> bool {
        self.level.iter_mut().for_each(|l| *l = NONE);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            let mut a = self.head[v];
            while a != NONE {
                let w = self.to[a];
                if self.res[a] > eps && self.level[w] == NONE {
                    self.level[w] = self.level[v] + 1;
                    q.push_back(w);
                }
                a = self.next[a];
            }
        }
        self.level[t] != NONE
    }

    /// Maximum `s`–`t` flow; residual capacities at or below `eps` count as saturated.
    pub fn max_flow(&mut self, s: usize, t: usize, eps: T) -> T {
        let mut total = T::zero();
        let mut path: Vec<usize> = Vec::new();
        while self.bfs(s, t, eps) {
            self.cursor.clone_from(&self.head);
            path.clear();
            let mut v = s;
            loop {
                if v == t {
                    let mut f = T::infinity();
                    for &a in &path {
                        f = f.min(self.res[a]);
                    }
                    let mut cut_at = path.len();
                    for (i, &a) in path.iter().enumerate() {
                        self.res[a] = self.res[a] - f;
                        self.res[a ^ 1] = self.res[a ^ 1] + f;
                        if self.res[a] <= eps && cut_at == path.len() {
                            cut_at = i;
                        }
                    }
                    total = total + f;
                    path.truncate(cut_at);
                    v = path.last().map_or(s, |&a| self.to[a]);
                    continue;
                }
                let mut advanced = false;
                while self.cursor[v] != NONE {
                    let a = self.cursor[v];
                    let w = self.to[a];
                    if self.res[a] > eps && self.level[w] == self.level[v] + 1 {
                        path.push(a);
                        v = w;
                        advanced = true;
                        break;
                    }
                    self.cursor[v] = self.next[a];
                }
                if !advanced {
                    self.level[v] = NONE;
                    match path.pop() {
                        Some(a) => {
                            v = self.to[a ^ 1];
                            self.cursor[v] = self.next[self.cursor[v]];
                        }
                        None => break,
                    }
                }
            }
        }
        total
    }

    /// Nodes reachable from `s` through arcs with residual above `eps`.
    pub fn source_side(&self, s: usize, eps: T) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            let mut a = self.head[v];
            while a != NONE {
                let w = self.to[a];
                if self.res[a] > eps && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
                a = self.next[a];
            }
        }
        seen
    }

    /// Nodes that still reach `t` in the residual network.
    pub fn sink_side(&self, t: usize, eps: T) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            let mut a = self.head[v];
            while a != NONE {
                let w = self.to[a];
                if self.res[a ^ 1] > eps && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
                a = self.next[a];
            }
        }
        seen
    }
}
