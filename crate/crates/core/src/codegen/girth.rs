use std::fmt;

use serde::{Serialize, Serializer};

use super::SparseParityCheck;

/// Length of the shortest Tanner-graph cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Girth {
    Finite(usize),
    Infinite,
}

impl Girth {
    pub fn finite(self) -> Option<usize> {
        match self {
            Girth::Finite(g) => Some(g),
            Girth::Infinite => None,
        }
    }

    pub fn at_least(self, g: usize) -> bool {
        self >= Girth::Finite(g)
    }
}

impl fmt::Display for Girth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Girth::Finite(g) => write!(f, "{g}"),
            Girth::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Girth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Girth::Finite(g) => s.serialize_u64(*g as u64),
            Girth::Infinite => s.serialize_none(),
        }
    }
}

/// Exact girth by truncated breadth-first search from every variable node.
pub fn girth(h: &SparseParityCheck) -> Girth {
    girth_from_roots(h, 0..h.n_cols())
}

/// Shortest cycle through any of `roots`. When every cycle passes through
/// some root (e.g. one column per circulant block of a QC lifting) this is
/// the girth.
pub fn girth_from_roots(h: &SparseParityCheck, roots: impl IntoIterator<Item = usize>) -> Girth {
    let n = h.n_cols();
    let total = n + h.n_rows();
    let mut dist = vec![u32::MAX; total];
    let mut parent = vec![u32::MAX; total];
    let mut touched: Vec<usize> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let mut best = usize::MAX;
    for root in roots {
        queue.clear();
        dist[root] = 0;
        touched.push(root);
        queue.push_back(root);
        'bfs: while let Some(x) = queue.pop_front() {
            let dx = dist[x] as usize;
            if 2 * dx + 1 >= best {
                break;
            }
            let (list, offset) = if x < n { (h.col(x), n) } else { (h.row(x - n), 0) };
            for &v in list {
                let y = v as usize + offset;
                if y as u32 == parent[x] {
                    continue;
                }
                if dist[y] == u32::MAX {
                    dist[y] = dx as u32 + 1;
                    parent[y] = x as u32;
                    touched.push(y);
                    queue.push_back(y);
                } else {
                    best = best.min(dx + dist[y] as usize + 1);
                    if 2 * dx + 1 >= best {
                        break 'bfs;
                    }
                }
            }
        }
        for &t in &touched {
            dist[t] = u32::MAX;
            parent[t] = u32::MAX;
        }
        touched.clear();
    }
    if best == usize::MAX {
        Girth::Infinite
    } else {
        Girth::Finite(best)
    }
}

/// Reference girth by depth-limited enumeration of simple cycles. Each
/// cycle is searched from its smallest node. Exponential; meant for small
/// matrices.
pub fn girth_brute_force(h: &SparseParityCheck) -> Girth {
    let n = h.n_cols();
    let total = n + h.n_rows();
    let adj: Vec<Vec<usize>> = (0..total)
        .map(|x| {
            if x < n {
                h.col(x).iter().map(|&r| n + r as usize).collect()
            } else {
                h.row(x - n).iter().map(|&c| c as usize).collect()
            }
        })
        .collect();
    let mut on_path = vec![false; total];
    let mut len = 4;
    while len <= total {
        for s in 0..total {
            on_path[s] = true;
            let found = cycle_of_length(&adj, s, s, 1, len, &mut on_path);
            on_path[s] = false;
            if found {
                return Girth::Finite(len);
            }
        }
        len += 2;
    }
    Girth::Infinite
}

fn cycle_of_length(
    adj: &[Vec<usize>],
    start: usize,
    at: usize,
    nodes: usize,
    len: usize,
    on_path: &mut [bool],
) -> bool {
    for &y in &adj[at] {
        if y == start && nodes == len {
            return true;
        }
        if y <= start || on_path[y] || nodes == len {
            continue;
        }
        on_path[y] = true;
        let found = cycle_of_length(adj, start, y, nodes + 1, len, on_path);
        on_path[y] = false;
        if found {
            return true;
        }
    }
    false
}
