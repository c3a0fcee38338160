//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's linear algebra; matrices are assembled from explicit powers
//! of `W` and reduced in exact rational arithmetic.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mgnet_core::consensus::WeightMatrix;
use mgnet_core::graph::Graph;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(x: f64) -> Q {
    BigRational::from_float(x).expect("finite")
}

pub fn qi(x: i64) -> Q {
    BigRational::from_integer(BigInt::from(x))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().expect("representable")
}

pub fn rational_weights(w: &WeightMatrix) -> Vec<Vec<Q>> {
    w.rows().iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

fn matmul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut acc = Q::zero();
                    for k in 0..inner {
                        if !row[k].is_zero() && !b[k][j].is_zero() {
                            acc += &row[k] * &b[k][j];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn identity(n: usize) -> Vec<Vec<Q>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect()
}

/// The observer itself, then its neighbors in ascending order.
pub fn oracle_selector(g: &Graph, observer: usize) -> Vec<usize> {
    let mut s = vec![observer];
    s.extend((0..g.node_count()).filter(|&j| g.has_edge(observer, j)));
    s
}

/// `(O, M)` for observations `S^0..=S^K` of `observer`, with `u` ordered by
/// step, then by faulty node.
pub fn oracle_stack(
    w: &[Vec<Q>],
    g: &Graph,
    observer: usize,
    horizon: usize,
    faults: &[usize],
) -> (Vec<Vec<Q>>, Vec<Vec<Q>>) {
    let n = w.len();
    let sel = oracle_selector(g, observer);
    let mut powers = vec![identity(n)];
    for k in 1..=horizon {
        powers.push(matmul(&powers[k - 1], w));
    }
    let mut o = Vec::new();
    let mut m = Vec::new();
    for k in 0..=horizon {
        for &r in &sel {
            o.push(powers[k][r].clone());
            let mut row = Vec::with_capacity(horizon * faults.len());
            for j in 0..horizon {
                for &fnode in faults {
                    // S^k depends on u^j through W^{k-1-j} B.
                    row.push(if j < k { powers[k - 1 - j][r][fnode].clone() } else { Q::zero() });
                }
            }
            m.push(row);
        }
    }
    (o, m)
}

/// Reduced row echelon form in place; returns pivot columns.
#[allow(clippy::needless_range_loop)]
pub fn echelon(rows: &mut [Vec<Q>]) -> Vec<usize> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let factor = &rows[i][c] / &pivot;
                for j in c..cols {
                    if !rows[r][j].is_zero() {
                        let d = &factor * &rows[r][j];
                        rows[i][j] -= d;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

pub fn exact_rank(rows: &[Vec<Q>]) -> usize {
    let mut copy = rows.to_vec();
    echelon(&mut copy).len()
}

pub fn hcat(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    a.iter().zip(b).map(|(x, y)| x.iter().chain(y).cloned().collect()).collect()
}

/// Pairwise condition `rank[O M_Y] = N + rank M_Y` at horizon `K`.
pub fn oracle_condition(w: &[Vec<Q>], g: &Graph, observer: usize, horizon: usize, set: &[usize]) -> bool {
    let (o, m) = oracle_stack(w, g, observer, horizon, set);
    exact_rank(&hcat(&o, &m)) == w.len() + exact_rank(&m)
}

/// Least-squares initial state for observations `y`, using a basis of the
/// fault columns and exact normal equations.
pub fn oracle_least_squares(o: &[Vec<Q>], m: &[Vec<Q>], y: &[Q]) -> Option<Vec<Q>> {
    let n = o.first().map_or(0, |r| r.len());
    let a_full = hcat(o, m);
    let mut ech = a_full.clone();
    let pivots = echelon(&mut ech);
    if pivots.iter().take_while(|&&c| c < n).count() < n {
        return None;
    }
    let a: Vec<Vec<Q>> = a_full
        .iter()
        .map(|row| pivots.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let p = pivots.len();
    let mut normal: Vec<Vec<Q>> = (0..p)
        .map(|i| {
            let mut row: Vec<Q> = (0..p)
                .map(|j| a.iter().fold(Q::zero(), |acc, r| acc + &r[i] * &r[j]))
                .collect();
            row.push(a.iter().zip(y).fold(Q::zero(), |acc, (r, yk)| acc + &r[i] * yk));
            row
        })
        .collect();
    echelon(&mut normal);
    Some((0..n).map(|i| &normal[i][p] / &normal[i][i]).collect())
}

/// Smallest vertex cut by exhaustive search; `n - 1` for complete graphs.
pub fn brute_connectivity(g: &Graph) -> usize {
    let n = g.node_count();
    for size in 0..n.saturating_sub(1) {
        let mut found = false;
        for_each_subset(n, size, &mut |cut| {
            if !found && disconnected_without(g, cut) {
                found = true;
            }
        });
        if found {
            return size;
        }
    }
    n.saturating_sub(1)
}

pub fn disconnected_without(g: &Graph, cut: &[usize]) -> bool {
    let removed: BTreeSet<usize> = cut.iter().copied().collect();
    let alive: Vec<usize> = (0..g.node_count()).filter(|v| !removed.contains(v)).collect();
    if alive.len() < 2 {
        return false;
    }
    let mut seen = BTreeSet::from([alive[0]]);
    let mut stack = vec![alive[0]];
    while let Some(v) = stack.pop() {
        for u in &alive {
            if g.has_edge(v, *u) && seen.insert(*u) {
                stack.push(*u);
            }
        }
    }
    seen.len() < alive.len()
}

pub fn for_each_subset(n: usize, size: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if cur.len() == size {
            visit(cur);
            return;
        }
        for v in start..n {
            if n - v < size - cur.len() {
                break;
            }
            cur.push(v);
            rec(v + 1, n, size, cur, visit);
            cur.pop();
        }
    }
    rec(0, n, size, &mut Vec::new(), visit);
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

