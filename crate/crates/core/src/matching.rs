//! Hopcroft-Karp maximum bipartite matching.

use std::collections::VecDeque;

const NIL: usize = usize::MAX;

/// Size of a maximum matching. `adj[u]` lists the right vertices adjacent to
/// left vertex `u`; right vertices are `0..n_right`.
pub fn max_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    let n_left = adj.len();
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];
    let mut size = 0;

    // greedy warm start
    for u in 0..n_left {
        if let Some(&v) = adj[u].iter().find(|&&v| match_r[v] == NIL) {
            match_l[u] = v;
            match_r[v] = u;
            size += 1;
        }
    }

    loop {
        // layer the free left vertices
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..n_left {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return size;
        }
        let mut cursor = vec![0usize; n_left];
        for u in 0..n_left {
            if match_l[u] == NIL && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut cursor) {
                size += 1;
            }
        }
    }
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
    cursor: &mut [usize],
) -> bool {
    // iterative DFS along the layered graph
    let mut stack = vec![u];
    while let Some(&x) = stack.last() {
        if cursor[x] == adj[x].len() {
            dist[x] = usize::MAX;
            stack.pop();
            continue;
        }
        let v = adj[x][cursor[x]];
        cursor[x] += 1;
        let w = match_r[v];
        if w == NIL {
            // flip the path
            let mut right = v;
            for &left in stack.iter().rev() {
                let prev = match_l[left];
                match_l[left] = right;
                match_r[right] = left;
                right = prev;
            }
            return true;
        }
        if dist[w] == dist[x] + 1 {
            stack.push(w);
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(adj: &[Vec<usize>], n_right: usize) -> usize {
        fn go(u: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if u == adj.len() {
                return 0;
            }
            let mut best = go(u + 1, adj, used);
            for &v in &adj[u] {
                if !used[v] {
                    used[v] = true;
                    best = best.max(1 + go(u + 1, adj, used));
                    used[v] = false;
                }
            }
            best
        }
        go(0, adj, &mut vec![false; n_right])
    }

    #[test]
    fn needs_augmenting_path() {
        // greedy takes 0-0, then 1 must reroute 0 to 1
        let adj = vec![vec![0, 1], vec![0]];
        assert_eq!(max_matching(&adj, 2), 2);
    }

    #[test]
    fn empty_graph() {
        assert_eq!(max_matching(&[], 0), 0);
        assert_eq!(max_matching(&[vec![], vec![]], 3), 0);
    }

    proptest! {
        #[test]
        fn agrees_with_exhaustive_search(edges in prop::collection::vec(prop::collection::vec(0usize..6, 0..4), 0..7)) {
            let adj: Vec<Vec<usize>> = edges.into_iter().map(|mut e| { e.sort(); e.dedup(); e }).collect();
            prop_assert_eq!(max_matching(&adj, 6), brute(&adj, 6));
        }
    }
}
