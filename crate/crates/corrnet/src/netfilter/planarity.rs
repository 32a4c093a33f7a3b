//! Left-right planarity test (decision only).
//!
//! Two DFS passes over an undirected simple graph: the first orients edges
//! and computes lowpoints and nesting depths, the second partitions back
//! edges into two sides by merging conflict pairs on a stack; the graph is
//! planar iff no merge ever needs both sides of a pair. Linear in the edge
//! count apart from the adjacency sort.
//!
//! References:
//! - U. Brandes, "The left-right planarity test", 2009.
//! - H. de Fraysseix, P. Ossona de Mendez and P. Rosenstiehl,
//!   "Tremaux trees and planarity", 2006.

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Interval {
    low: u32,
    high: u32,
}

impl Interval {
    const EMPTY: Interval = Interval {
        low: NONE,
        high: NONE,
    };

    fn is_empty(&self) -> bool {
        self.low == NONE && self.high == NONE
    }
}

#[derive(Debug, Clone, Copy)]
struct ConflictPair {
    l: Interval,
    r: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.l, &mut self.r);
    }
}

/// Reusable planarity tester; buffers persist across calls so the greedy
/// PMFG loop does not re-allocate per candidate edge.
#[derive(Debug, Default)]
pub struct PlanarityChecker {
    adj: Vec<Vec<(u32, u32)>>,
    // per undirected edge, valid once oriented
    src: Vec<u32>,
    dst: Vec<u32>,
    lowpt: Vec<u32>,
    lowpt2: Vec<u32>,
    nesting: Vec<u32>,
    lowpt_edge: Vec<u32>,
    ref_edge: Vec<u32>,
    stack_bottom: Vec<usize>,
    edge_done: Vec<bool>,
    // per vertex
    height: Vec<u32>,
    parent_edge: Vec<u32>,
    cursor: Vec<usize>,
    ordered: Vec<Vec<u32>>,
    // traversal state
    dfs_stack: Vec<u32>,
    roots: Vec<u32>,
    stack: Vec<ConflictPair>,
}

impl PlanarityChecker {
    pub fn new() -> Self {
        Self::default()
    }

    /// True iff the simple graph on `n_nodes` vertices with the given
    /// undirected edges is planar.
    pub fn is_planar(&mut self, n_nodes: usize, edges: &[(u32, u32)]) -> bool {
        let m = edges.len();
        debug_assert!(
            edges.iter().all(|&(u, v)| {
                u != v && (u as usize) < n_nodes && (v as usize) < n_nodes
            }),
            "self-loop or out-of-range endpoint"
        );
        if n_nodes > 2 && m > 3 * n_nodes - 6 {
            return false; // Euler bound
        }
        if m <= 2 {
            return true;
        }

        self.reset(n_nodes, m);
        for (eid, &(u, v)) in edges.iter().enumerate() {
            self.adj[u as usize].push((v, eid as u32));
            self.adj[v as usize].push((u, eid as u32));
        }

        for v in 0..n_nodes as u32 {
            if self.height[v as usize] == NONE {
                self.height[v as usize] = 0;
                self.roots.push(v);
                self.orient_from(v);
            }
        }

        // Order outgoing edges by nesting depth for the testing pass.
        for eid in 0..m as u32 {
            let s = self.src[eid as usize] as usize;
            self.ordered[s].push(eid);
        }
        for v in 0..n_nodes {
            self.ordered[v].sort_by_key(|&e| self.nesting[e as usize]);
            self.cursor[v] = 0;
        }
        self.edge_done.iter_mut().for_each(|d| *d = false);

        for i in 0..self.roots.len() {
            if !self.test_from(self.roots[i]) {
                return false;
            }
        }
        true
    }

    fn reset(&mut self, n: usize, m: usize) {
        self.adj.resize_with(n, Vec::new);
        self.ordered.resize_with(n, Vec::new);
        for v in 0..n {
            self.adj[v].clear();
            self.ordered[v].clear();
        }
        self.height.clear();
        self.height.resize(n, NONE);
        self.parent_edge.clear();
        self.parent_edge.resize(n, NONE);
        self.cursor.clear();
        self.cursor.resize(n, 0);

        self.src.clear();
        self.src.resize(m, NONE);
        self.dst.clear();
        self.dst.resize(m, NONE);
        self.lowpt.clear();
        self.lowpt.resize(m, 0);
        self.lowpt2.clear();
        self.lowpt2.resize(m, 0);
        self.nesting.clear();
        self.nesting.resize(m, 0);
        self.lowpt_edge.clear();
        self.lowpt_edge.resize(m, NONE);
        self.ref_edge.clear();
        self.ref_edge.resize(m, NONE);
        self.stack_bottom.clear();
        self.stack_bottom.resize(m, 0);
        self.edge_done.clear();
        self.edge_done.resize(m, false);

        self.dfs_stack.clear();
        self.roots.clear();
        self.stack.clear();
    }

    /// First pass: DFS orientation with lowpoint and nesting computation.
    fn orient_from(&mut self, root: u32) {
        self.dfs_stack.clear();
        self.dfs_stack.push(root);
        while let Some(v) = self.dfs_stack.pop() {
            let vu = v as usize;
            let pe = self.parent_edge[vu];
            while self.cursor[vu] < self.adj[vu].len() {
                let (w, eid) = self.adj[vu][self.cursor[vu]];
                let e = eid as usize;
                if !self.edge_done[e] {
                    if self.src[e] != NONE {
                        // already oriented from the other endpoint
                        self.cursor[vu] += 1;
                        continue;
                    }
                    self.src[e] = v;
                    self.dst[e] = w;
                    self.lowpt[e] = self.height[vu];
                    self.lowpt2[e] = self.height[vu];
                    if self.height[w as usize] == NONE {
                        // tree edge: descend, finish this edge on revisit
                        self.parent_edge[w as usize] = eid;
                        self.height[w as usize] = self.height[vu] + 1;
                        self.edge_done[e] = true;
                        self.dfs_stack.push(v);
                        self.dfs_stack.push(w);
                        break;
                    }
                    // back edge
                    self.lowpt[e] = self.height[w as usize];
                }
                // nesting depth: interleaved under chordal edges
                self.nesting[e] =
                    2 * self.lowpt[e] + u32::from(self.lowpt2[e] < self.height[vu]);
                if pe != NONE {
                    let p = pe as usize;
                    if self.lowpt[e] < self.lowpt[p] {
                        self.lowpt2[p] = self.lowpt[p].min(self.lowpt2[e]);
                        self.lowpt[p] = self.lowpt[e];
                    } else if self.lowpt[e] > self.lowpt[p] {
                        self.lowpt2[p] = self.lowpt2[p].min(self.lowpt[e]);
                    } else {
                        self.lowpt2[p] = self.lowpt2[p].min(self.lowpt2[e]);
                    }
                }
                self.cursor[vu] += 1;
            }
        }
    }

    /// Second pass: conflict-pair merging. Returns false on a left-right
    /// partition violation, i.e. a Kuratowski obstruction.
    fn test_from(&mut self, root: u32) -> bool {
        self.dfs_stack.clear();
        self.dfs_stack.push(root);
        while let Some(v) = self.dfs_stack.pop() {
            let vu = v as usize;
            let pe = self.parent_edge[vu];
            let mut descended = false;
            while self.cursor[vu] < self.ordered[vu].len() {
                let at_first = self.cursor[vu] == 0;
                let eid = self.ordered[vu][self.cursor[vu]];
                let e = eid as usize;
                if !self.edge_done[e] {
                    self.stack_bottom[e] = self.stack.len();
                    let w = self.dst[e];
                    if eid == self.parent_edge[w as usize] {
                        // tree edge: process the subtree first
                        self.edge_done[e] = true;
                        self.dfs_stack.push(v);
                        self.dfs_stack.push(w);
                        descended = true;
                        break;
                    }
                    // back edge opens its own one-element interval
                    self.lowpt_edge[e] = eid;
                    self.stack.push(ConflictPair {
                        l: Interval::EMPTY,
                        r: Interval { low: eid, high: eid },
                    });
                }
                // integrate return edges of this child into the parent edge
                if self.lowpt[e] < self.height[vu] {
                    if at_first {
                        if pe != NONE {
                            self.lowpt_edge[pe as usize] = self.lowpt_edge[e];
                        }
                    } else if !self.add_constraints(eid, pe) {
                        return false;
                    }
                }
                self.cursor[vu] += 1;
            }
            if !descended && pe != NONE {
                self.remove_back_edges(pe);
            }
        }
        true
    }

    fn conflicting(&self, interval: &Interval, eid: u32) -> bool {
        !interval.is_empty() && self.lowpt[interval.high as usize] > self.lowpt[eid as usize]
    }

    fn add_constraints(&mut self, ei: u32, pe: u32) -> bool {
        debug_assert!(pe != NONE);
        let e = pe as usize;
        let mut p = ConflictPair {
            l: Interval::EMPTY,
            r: Interval::EMPTY,
        };
        // Merge return edges of ei into p.r.
        loop {
            let mut q = self.stack.pop().expect("conflict stack underflow");
            if !q.l.is_empty() {
                q.swap();
            }
            if !q.l.is_empty() {
                return false; // both sides occupied: not planar
            }
            debug_assert!(q.r.low != NONE);
            if self.lowpt[q.r.low as usize] > self.lowpt[e] {
                // interval strictly above the parent's lowpoint: merge
                if p.r.is_empty() {
                    p.r.high = q.r.high;
                } else {
                    self.ref_edge[p.r.low as usize] = q.r.high;
                }
                p.r.low = q.r.low;
            } else {
                // align with the parent's lowest return edge
                self.ref_edge[q.r.low as usize] = self.lowpt_edge[e];
            }
            if self.stack.len() == self.stack_bottom[ei as usize] {
                break;
            }
        }
        // Merge conflicting return edges of earlier siblings into p.l.
        while let Some(top) = self.stack.last() {
            if !(self.conflicting(&top.l, ei) || self.conflicting(&top.r, ei)) {
                break;
            }
            let mut q = self.stack.pop().unwrap();
            if self.conflicting(&q.r, ei) {
                q.swap();
            }
            if self.conflicting(&q.r, ei) {
                return false; // both sides conflict: not planar
            }
            if p.r.low != NONE {
                self.ref_edge[p.r.low as usize] = q.r.high;
            }
            if q.r.low != NONE {
                p.r.low = q.r.low;
            }
            if p.l.is_empty() {
                p.l.high = q.l.high;
            } else {
                self.ref_edge[p.l.low as usize] = q.l.high;
            }
            p.l.low = q.l.low;
        }
        if !(p.l.is_empty() && p.r.is_empty()) {
            self.stack.push(p);
        }
        true
    }

    fn pair_lowest(&self, p: &ConflictPair) -> u32 {
        match (p.l.low, p.r.low) {
            (NONE, NONE) => NONE,
            (NONE, r) => self.lowpt[r as usize],
            (l, NONE) => self.lowpt[l as usize],
            (l, r) => self.lowpt[l as usize].min(self.lowpt[r as usize]),
        }
    }

    /// Drops and trims intervals whose back edges return to the parent of
    /// the finished tree edge `pe`.
    fn remove_back_edges(&mut self, pe: u32) {
        let e = pe as usize;
        let u = self.src[e];
        let hu = self.height[u as usize];

        while let Some(top) = self.stack.last() {
            if self.pair_lowest(top) == hu {
                self.stack.pop();
            } else {
                break;
            }
        }
        if let Some(mut p) = self.stack.pop() {
            while p.l.high != NONE && self.dst[p.l.high as usize] == u {
                p.l.high = self.ref_edge[p.l.high as usize];
            }
            if p.l.high == NONE && p.l.low != NONE {
                // left interval just emptied
                self.ref_edge[p.l.low as usize] = p.r.low;
                p.l.low = NONE;
            }
            while p.r.high != NONE && self.dst[p.r.high as usize] == u {
                p.r.high = self.ref_edge[p.r.high as usize];
            }
            if p.r.high == NONE && p.r.low != NONE {
                self.ref_edge[p.r.low as usize] = p.l.low;
                p.r.low = NONE;
            }
            self.stack.push(p);
        }
        // Reference edge of pe is its highest surviving return edge.
        if self.lowpt[e] < hu {
            if let Some(top) = self.stack.last() {
                let hl = top.l.high;
                let hr = top.r.high;
                self.ref_edge[e] = if hl != NONE
                    && (hr == NONE || self.lowpt[hl as usize] > self.lowpt[hr as usize])
                {
                    hl
                } else {
                    hr
                };
            }
        }
    }
}

/// One-shot convenience wrapper around [`PlanarityChecker`].
pub fn is_planar(n_nodes: usize, edges: &[(u32, u32)]) -> bool {
    PlanarityChecker::new().is_planar(n_nodes, edges)
}
