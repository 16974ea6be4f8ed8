//! Fill-reducing nested-dissection ordering on the pattern of `K + Kᵀ`.

use crate::sparse::CsrMatrix;

const LEAF_SIZE: usize = 96;

/// Symmetric adjacency lists without self loops.
struct Graph {
    adj_ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    fn from_pattern(k: &CsrMatrix, skip: &[bool]) -> Graph {
        let n = k.nrows;
        let mut deg = vec![0usize; n];
        let kt = k.transpose();
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            if skip[i] {
                continue;
            }
            let l = &mut lists[i];
            l.extend(k.row(i).map(|(j, _)| j).filter(|&j| j != i && !skip[j]));
            l.extend(kt.row(i).map(|(j, _)| j).filter(|&j| j != i && !skip[j]));
            l.sort_unstable();
            l.dedup();
            deg[i] = l.len();
        }
        let mut adj_ptr = Vec::with_capacity(n + 1);
        adj_ptr.push(0);
        let mut adj = Vec::with_capacity(deg.iter().sum());
        for l in lists {
            adj.extend(l);
            adj_ptr.push(adj.len());
        }
        Graph { adj_ptr, adj }
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.adj_ptr[v]..self.adj_ptr[v + 1]]
    }
}

/// Appends `block`, moving rows with a structurally zero diagonal to the end
/// so their Schur complement diagonal is filled in before they are pivoted.
fn emit(block: impl IntoIterator<Item = usize>, zero_diag: &[bool], out: &mut Vec<usize>) {
    let start = out.len();
    out.extend(block);
    out[start..].sort_by_key(|&v| zero_diag[v]);
}

struct Workspace {
    /// stamp arrays; `member[v] == s` marks membership of the subset with stamp `s`
    member: Vec<u64>,
    seen: Vec<u64>,
    assigned: Vec<u64>,
    cur: u64,
}

impl Workspace {
    fn next(&mut self) -> u64 {
        self.cur += 1;
        self.cur
    }
}

/// BFS from `root` within the current subset; returns levels as vectors.
fn level_structure(g: &Graph, ws: &mut Workspace, member: u64, root: usize) -> Vec<Vec<usize>> {
    let seen = ws.next();
    let mut levels = vec![vec![root]];
    ws.seen[root] = seen;
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in g.neighbors(v) {
                if ws.member[w] == member && ws.seen[w] != seen {
                    ws.seen[w] = seen;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        levels.push(next);
    }
    levels
}

fn degree_in(g: &Graph, ws: &Workspace, member: u64, v: usize) -> usize {
    g.neighbors(v).iter().filter(|&&w| ws.member[w] == member).count()
}

/// Pseudo-peripheral node search (George–Liu).
fn pseudo_peripheral(g: &Graph, ws: &mut Workspace, member: u64, start: usize) -> Vec<Vec<usize>> {
    let mut levels = level_structure(g, ws, member, start);
    for _ in 0..8 {
        let last = levels.last().unwrap();
        let cand = *last.iter().min_by_key(|&&v| (degree_in(g, ws, member, v), v)).unwrap();
        let trial = level_structure(g, ws, member, cand);
        if trial.len() > levels.len() {
            levels = trial;
        } else {
            break;
        }
    }
    levels
}

fn dissect(g: &Graph, ws: &mut Workspace, zero_diag: &[bool], nodes: Vec<usize>, out: &mut Vec<usize>) {
    if nodes.is_empty() {
        return;
    }
    let member = ws.next();
    for &v in &nodes {
        ws.member[v] = member;
    }
    // split into connected components first
    let assigned = ws.next();
    let mut components = Vec::new();
    for &v in &nodes {
        if ws.assigned[v] == assigned {
            continue;
        }
        let levels = level_structure(g, ws, member, v);
        for &w in levels.iter().flatten() {
            ws.assigned[w] = assigned;
        }
        components.push(levels);
    }
    if components.len() > 1 {
        for comp in components {
            let sub: Vec<usize> = comp.into_iter().flatten().collect();
            dissect(g, ws, zero_diag, sub, out);
        }
        return;
    }
    let comp = components.pop().unwrap();
    let size: usize = comp.iter().map(Vec::len).sum();
    if size <= LEAF_SIZE || comp.len() < 3 {
        // leaf: reverse BFS order keeps bandwidth small
        let mut leaf: Vec<usize> = comp.into_iter().flatten().collect();
        leaf.reverse();
        emit(leaf, zero_diag, out);
        return;
    }
    let start = comp[0][0];
    let levels = pseudo_peripheral(g, ws, member, start);
    let total: usize = levels.iter().map(Vec::len).sum();
    let mut best: Option<(usize, usize)> = None;
    let mut before = 0usize;
    for (i, l) in levels.iter().enumerate() {
        let frac_lo = before as f64 / total as f64;
        let frac_hi = (before + l.len()) as f64 / total as f64;
        if i > 0 && i + 1 < levels.len() && frac_hi >= 0.4 && frac_lo <= 0.6 && best.is_none_or(|(_, s)| l.len() < s) {
            best = Some((i, l.len()));
        }
        before += l.len();
    }
    let sep = match best {
        Some((i, _)) => i,
        None => {
            // fall back to the level containing the median
            let mut acc = 0;
            let mut idx = levels.len() / 2;
            for (i, l) in levels.iter().enumerate() {
                acc += l.len();
                if 2 * acc >= total {
                    idx = i.clamp(1, levels.len() - 2);
                    break;
                }
            }
            idx
        }
    };
    let mut left: Vec<usize> = levels[..sep].iter().flatten().copied().collect();
    let right: Vec<usize> = levels[sep + 1..].iter().flatten().copied().collect();
    // level members without a neighbor on the right side need not separate
    let right_mark = ws.next();
    for &v in &right {
        ws.seen[v] = right_mark;
    }
    let (separator, loose): (Vec<usize>, Vec<usize>) =
        levels[sep].iter().partition(|&&v| g.neighbors(v).iter().any(|&w| ws.seen[w] == right_mark));
    left.extend(loose);
    dissect(g, ws, zero_diag, left, out);
    dissect(g, ws, zero_diag, right, out);
    emit(separator, zero_diag, out);
}

/// Column elimination order; rows with degree above `max(16, 10√n)` go last.
pub(super) fn nested_dissection(k: &CsrMatrix) -> Vec<usize> {
    let n = k.nrows;
    let dense_cut = 16usize.max((10.0 * (n as f64).sqrt()) as usize);
    let kt = k.transpose();
    let mut skip = vec![false; n];
    for i in 0..n {
        let d = k.row_ptr[i + 1] - k.row_ptr[i];
        let dt = kt.row_ptr[i + 1] - kt.row_ptr[i];
        skip[i] = d.max(dt) > dense_cut;
    }
    let zero_diag: Vec<bool> = (0..n).map(|i| !k.row(i).any(|(j, v)| j == i && v != 0.0)).collect();
    let g = Graph::from_pattern(k, &skip);
    let mut ws = Workspace { member: vec![0; n], seen: vec![0; n], assigned: vec![0; n], cur: 0 };
    let nodes: Vec<usize> = (0..n).filter(|&i| !skip[i]).collect();
    let mut out = Vec::with_capacity(n);
    dissect(&g, &mut ws, &zero_diag, nodes, &mut out);
    out.extend((0..n).filter(|&i| skip[i]));
    debug_assert_eq!(out.len(), n);
    out
}
