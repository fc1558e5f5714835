//! Network simplex for the balanced transportation problem.
//!
//! Dense bipartite instance: `m` sources with supplies `a`, `n` sinks with
//! demands `b`, cost matrix `c` (row-major `m x n`). Returns the optimal
//! transport cost. Supplies are perturbed by a deterministic 1e-13-scale
//! ramp to keep bases nondegenerate; the induced cost error is below 1e-12
//! of the cost scale.

/// Maximum pivots before declaring failure; generous for desk-scale instances.
fn pivot_cap(m: usize, n: usize) -> usize {
    200 * (m + n) + 20_000
}

#[derive(Debug, PartialEq)]
pub enum TransportError {
    Unbalanced,
    PivotCapExceeded,
}

struct Tree {
    parent: Vec<usize>,
    // arc from node to parent: (tail, head) in source->sink orientation
    up_arc: Vec<(usize, usize)>,
    children: Vec<Vec<usize>>,
    flow_up: Vec<f64>, // flow on the arc between node and its parent
    potential: Vec<f64>,
}

/// Solve the transportation problem; returns optimal cost.
pub fn transport_cost(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
) -> Result<f64, TransportError> {
    let m = a.len();
    let n = b.len();
    assert_eq!(cost.len(), m * n);
    let ta: f64 = a.iter().sum();
    let tb: f64 = b.iter().sum();
    if (ta - tb).abs() > 1e-9 * ta.max(tb).max(1.0) {
        return Err(TransportError::Unbalanced);
    }

    // Nondegeneracy perturbation: tilt supplies, dump the excess (plus any
    // sub-tolerance imbalance) on the largest demand.
    let eps = 1e-13 * ta.max(1.0) / (m as f64 + 1.0);
    let a: Vec<f64> = a.iter().enumerate().map(|(i, &v)| v + eps * (i + 1) as f64).collect();
    let mut b: Vec<f64> = b.to_vec();
    let added = eps * (m * (m + 1) / 2) as f64;
    let jmax = (0..n).max_by(|&i, &j| b[i].total_cmp(&b[j])).unwrap();
    b[jmax] += added + (ta - tb);

    // Node ids: sources 0..m, sinks m..m+n, root m+n.
    let root = m + n;
    let nv = m + n + 1;
    let big = cost.iter().cloned().fold(0.0, f64::max) * (nv as f64) + 1.0;

    let mut t = Tree {
        parent: vec![root; nv],
        up_arc: vec![(usize::MAX, usize::MAX); nv],
        children: vec![Vec::new(); nv],
        flow_up: vec![0.0; nv],
        potential: vec![0.0; nv],
    };
    t.parent[root] = root;
    for i in 0..m {
        t.up_arc[i] = (i, root); // artificial
        t.flow_up[i] = a[i];
        t.children[root].push(i);
    }
    for j in 0..n {
        t.up_arc[m + j] = (root, m + j); // artificial
        t.flow_up[m + j] = b[j];
        t.children[root].push(m + j);
    }

    // potentials: pi[tail] - pi[head] + c = reduced cost for arc tail->head;
    // tree arcs have reduced cost 0. Artificial arcs carry cost `big`.
    let arc_cost = |tail: usize, head: usize| -> f64 {
        if tail == root || head == root {
            big
        } else {
            cost[tail * n + (head - m)]
        }
    };

    let recompute_potentials = |t: &mut Tree| {
        t.potential[root] = 0.0;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &ch in &t.children[v] {
                let (tail, head) = t.up_arc[ch];
                // pi satisfies pi[tail] + c - pi[head] = 0 on tree arcs
                t.potential[ch] = if tail == ch {
                    // arc ch -> parent
                    t.potential[v] - arc_cost(tail, head)
                } else {
                    t.potential[v] + arc_cost(tail, head)
                };
                stack.push(ch);
            }
        }
    };
    recompute_potentials(&mut t);

    let narcs = m * n;
    let block = ((narcs as f64).sqrt() as usize).max(64);
    let mut scan_start = 0usize;
    let cap = pivot_cap(m, n);

    for _pivot in 0..cap {
        // entering arc: most negative reduced cost within the first block
        // (cyclic scan) that contains one
        let mut enter: Option<(usize, usize, f64)> = None;
        let mut scanned = 0;
        let mut pos = scan_start;
        while scanned < narcs {
            let stop = (scanned + block).min(narcs);
            let mut best = 0.0;
            while scanned < stop {
                let i = pos / n;
                let j = pos % n;
                let r = t.potential[i] + cost[pos] - t.potential[m + j];
                if r < best {
                    best = r;
                    enter = Some((i, m + j, r));
                }
                pos += 1;
                if pos == narcs {
                    pos = 0;
                }
                scanned += 1;
            }
            if enter.is_some() {
                break;
            }
        }
        scan_start = pos;

        let Some((src, dst, _)) = enter else {
            // optimal; artificial arcs must be empty up to perturbation
            let mut total = 0.0;
            for v in 0..nv {
                if v == root {
                    continue;
                }
                let (tail, head) = t.up_arc[v];
                if tail != root && head != root {
                    total += t.flow_up[v] * cost[tail * n + (head - m)];
                }
            }
            return Ok(total);
        };

        // cycle: path src->root and dst->root; flow increases on the entering
        // arc, so it decreases on "with-flow-direction-opposing" tree arcs.
        let path_to_root = |t: &Tree, mut v: usize| -> Vec<usize> {
            let mut p = Vec::new();
            while v != root {
                p.push(v);
                v = t.parent[v];
            }
            p
        };
        let ps = path_to_root(&t, src);
        let pd = path_to_root(&t, dst);
        // trim common suffix to the lowest common ancestor
        let mut is = ps.len();
        let mut id = pd.len();
        while is > 0 && id > 0 && ps[is - 1] == pd[id - 1] {
            is -= 1;
            id -= 1;
        }

        // flow change bound: on the src side, arcs pointing src->root direction
        // lose flow if oriented "away" from cycle direction. Orientation: the
        // cycle sends flow src -> dst through the entering arc; along the src
        // path the flow goes v -> parent; the tree arc at v has orientation
        // up_arc[v]; if up_arc tail == v the arc carries flow v->parent, which
        // the cycle *reduces* ... sign bookkeeping below.
        let mut theta = f64::INFINITY;
        let mut leave: Option<usize> = None; // node whose up-arc leaves
        for &v in ps.iter().take(is) {
            let (tail, _) = t.up_arc[v];
            // cycle direction along src path: from src up to LCA, i.e. v -> parent.
            // Arc oriented v->parent carries +flow in cycle direction? The cycle
            // pushes flow OUT of src along the entering arc, so the tree path
            // must bring it INTO src: flow on the path runs parent -> v.
            // Arc oriented v->parent (tail==v): flow decreases.
            if tail == v {
                if t.flow_up[v] < theta {
                    theta = t.flow_up[v];
                    leave = Some(v);
                }
            }
        }
        for &v in pd.iter().take(id) {
            let (tail, _) = t.up_arc[v];
            // on the dst side flow runs v -> parent direction? The cycle brings
            // flow INTO dst and it must drain UP toward the LCA: flow runs
            // v -> parent. Arc oriented parent->v (tail!=v): flow decreases.
            if tail != v {
                if t.flow_up[v] < theta {
                    theta = t.flow_up[v];
                    leave = Some(v);
                }
            }
        }

        let leave = match leave {
            Some(l) => l,
            None => {
                // entering arc closes a cycle with unbounded increase; cannot
                // happen in a balanced transportation instance
                return Err(TransportError::PivotCapExceeded);
            }
        };

        // apply flow update
        for &v in ps.iter().take(is) {
            let (tail, _) = t.up_arc[v];
            if tail == v {
                t.flow_up[v] -= theta;
            } else {
                t.flow_up[v] += theta;
            }
        }
        for &v in pd.iter().take(id) {
            let (tail, _) = t.up_arc[v];
            if tail != v {
                t.flow_up[v] -= theta;
            } else {
                t.flow_up[v] += theta;
            }
        }

        // re-root the subtree: the entering arc (src_node, dst_node) replaces
        // the up-arc of `leave`. Reverse parent pointers along the path from
        // the entering endpoint (on leave's side) down to `leave`.
        let on_src_side = ps.iter().take(is).any(|&v| v == leave);
        let (anchor, new_child) = if on_src_side { (dst, src) } else { (src, dst) };
        // path from new_child to leave
        let mut chain = Vec::new();
        let mut v = new_child;
        loop {
            chain.push(v);
            if v == leave {
                break;
            }
            v = t.parent[v];
        }
        // detach leave from its parent
        let lp = t.parent[leave];
        t.children[lp].retain(|&c| c != leave);
        // reverse the chain: new_child's parent becomes anchor
        let mut prev_parent = anchor;
        let mut prev_arc = (src, dst);
        let mut prev_flow = theta;
        for &v in &chain {
            let old_parent = t.parent[v];
            let old_arc = t.up_arc[v];
            let old_flow = t.flow_up[v];
            if t.parent[v] != prev_parent {
                t.children[old_parent].retain(|&c| c != v);
            }
            t.parent[v] = prev_parent;
            t.children[prev_parent].push(v);
            t.up_arc[v] = prev_arc;
            t.flow_up[v] = prev_flow;
            prev_parent = v;
            prev_arc = old_arc;
            prev_flow = old_flow;
        }
        recompute_potentials(&mut t);
    }
    Err(TransportError::PivotCapExceeded)
}
