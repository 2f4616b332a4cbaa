//! Dense shortest-augmenting-path assignment (Jonker–Volgenant).
//!
//! Column reduction, reduction transfer and two rounds of augmenting row
//! reduction seed a partial assignment; the remaining free rows are routed
//! through Dijkstra-style shortest augmenting paths on reduced costs. Column
//! potentials `v` are maintained throughout; row potentials follow as
//! `u_i = c(i, x_i) - v(x_i)` at termination.

use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

/// Optimal assignment with its dual certificate.
#[derive(Debug, Clone)]
pub struct LapSolution<T> {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    pub row_potential: Vec<T>,
    pub col_potential: Vec<T>,
}

/// Solve the `n x n` assignment problem for a row-major cost matrix.
pub fn solve_dense<T: Scalar>(n: usize, cost: &[T]) -> LapSolution<T> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return LapSolution {
            row_to_col: Vec::new(),
            row_potential: Vec::new(),
            col_potential: Vec::new(),
        };
    }
    let c = |i: usize, j: usize| cost[i * n + j];

    let mut x = vec![NONE; n];
    let mut y = vec![NONE; n];
    let mut v = vec![T::infinity(); n];
    let mut free_rows = Vec::with_capacity(n);

    column_reduction(n, &c, &mut x, &mut y, &mut v, &mut free_rows);
    for _ in 0..2 {
        if free_rows.is_empty() {
            break;
        }
        augmenting_row_reduction(n, &c, &mut x, &mut y, &mut v, &mut free_rows);
    }
    if !free_rows.is_empty() {
        augment(n, &c, &mut x, &mut y, &mut v, &free_rows);
    }

    let row_potential = (0..n).map(|i| c(i, x[i]) - v[x[i]]).collect();
    LapSolution {
        row_to_col: x,
        row_potential,
        col_potential: v,
    }
}

fn column_reduction<T: Scalar>(
    n: usize,
    c: &impl Fn(usize, usize) -> T,
    x: &mut [usize],
    y: &mut [usize],
    v: &mut [T],
    free_rows: &mut Vec<usize>,
) {
    for i in 0..n {
        for j in 0..n {
            let cij = c(i, j);
            if cij < v[j] {
                v[j] = cij;
                y[j] = i;
            }
        }
    }
    let mut unique = vec![true; n];
    for j in (0..n).rev() {
        let i = y[j];
        if x[i] == NONE {
            x[i] = j;
        } else {
            unique[i] = false;
            y[j] = NONE;
        }
    }
    free_rows.clear();
    for i in 0..n {
        if x[i] == NONE {
            free_rows.push(i);
        } else if unique[i] {
            // Reduction transfer: lower v[x_i] by the second-best slack of row i.
            let j = x[i];
            let mut min = T::infinity();
            for j2 in 0..n {
                if j2 != j {
                    let red = c(i, j2) - v[j2];
                    if red < min {
                        min = red;
                    }
                }
            }
            if min.is_finite() {
                v[j] = v[j] - min;
            }
        }
    }
}

fn augmenting_row_reduction<T: Scalar>(
    n: usize,
    c: &impl Fn(usize, usize) -> T,
    x: &mut [usize],
    y: &mut [usize],
    v: &mut [T],
    free_rows: &mut Vec<usize>,
) {
    let n_free = free_rows.len();
    let mut current = 0usize;
    let mut new_free = 0usize;
    let mut rr_count = 0usize;
    while current < n_free {
        rr_count += 1;
        let free_i = free_rows[current];
        current += 1;

        let (mut j1, mut v1) = (0usize, c(free_i, 0) - v[0]);
        let (mut j2, mut v2) = (NONE, T::infinity());
        for j in 1..n {
            let h = c(free_i, j) - v[j];
            if h < v2 {
                if h >= v1 {
                    v2 = h;
                    j2 = j;
                } else {
                    v2 = v1;
                    v1 = h;
                    j2 = j1;
                    j1 = j;
                }
            }
        }
        let mut i0 = y[j1];
        let v1_new = if v2.is_finite() { v[j1] - (v2 - v1) } else { v[j1] };
        let v1_lowers = v1_new < v[j1];
        if rr_count < current * n {
            if v1_lowers {
                v[j1] = v1_new;
            } else if i0 != NONE && j2 != NONE {
                j1 = j2;
                i0 = y[j2];
            }
            if i0 != NONE {
                if v1_lowers {
                    current -= 1;
                    free_rows[current] = i0;
                } else {
                    free_rows[new_free] = i0;
                    new_free += 1;
                }
            }
        } else if i0 != NONE {
            free_rows[new_free] = i0;
            new_free += 1;
        }
        x[free_i] = j1;
        y[j1] = free_i;
        if i0 != NONE && x[i0] == j1 {
            x[i0] = NONE;
        }
    }
    free_rows.truncate(new_free);
}

fn augment<T: Scalar>(
    n: usize,
    c: &impl Fn(usize, usize) -> T,
    x: &mut [usize],
    y: &mut [usize],
    v: &mut [T],
    free_rows: &[usize],
) {
    let mut pred = vec![0usize; n];
    let mut cols: Vec<usize> = (0..n).collect();
    let mut d = vec![T::zero(); n];
    for &free_i in free_rows {
        let mut j = find_path(n, c, free_i, y, v, &mut pred, &mut cols, &mut d);
        loop {
            let i = pred[j];
            y[j] = i;
            let next = x[i];
            x[i] = j;
            j = next;
            if i == free_i {
                break;
            }
        }
    }
}

/// Dijkstra on reduced costs from `start`; returns the free column reached.
#[allow(clippy::too_many_arguments)]
fn find_path<T: Scalar>(
    n: usize,
    c: &impl Fn(usize, usize) -> T,
    start: usize,
    y: &[usize],
    v: &mut [T],
    pred: &mut [usize],
    cols: &mut [usize],
    d: &mut [T],
) -> usize {
    // cols[..ready] are settled, cols[lo..hi] are at the current minimum
    // distance, cols[hi..] are still to be scanned.
    for (k, col) in cols.iter_mut().enumerate() {
        *col = k;
    }
    for j in 0..n {
        d[j] = c(start, j) - v[j];
        pred[j] = start;
    }
    let (mut lo, mut hi, mut ready) = (0usize, 0usize, 0usize);
    let mut final_j = NONE;
    while final_j == NONE {
        if lo == hi {
            ready = lo;
            hi = collect_minimum(n, lo, d, cols);
            for &j in &cols[lo..hi] {
                if y[j] == NONE {
                    final_j = j;
                    break;
                }
            }
        }
        if final_j == NONE {
            final_j = scan(n, c, &mut lo, &mut hi, d, cols, pred, y, v);
        }
    }
    let mind = d[cols[lo]];
    for &j in &cols[..ready] {
        v[j] = v[j] + d[j] - mind;
    }
    final_j
}

fn collect_minimum<T: Scalar>(n: usize, lo: usize, d: &[T], cols: &mut [usize]) -> usize {
    let mut hi = lo + 1;
    let mut mind = d[cols[lo]];
    for k in lo + 1..n {
        let j = cols[k];
        if d[j] <= mind {
            if d[j] < mind {
                hi = lo;
                mind = d[j];
            }
            cols[k] = cols[hi];
            cols[hi] = j;
            hi += 1;
        }
    }
    hi
}

#[allow(clippy::too_many_arguments)]
fn scan<T: Scalar>(
    n: usize,
    c: &impl Fn(usize, usize) -> T,
    plo: &mut usize,
    phi: &mut usize,
    d: &mut [T],
    cols: &mut [usize],
    pred: &mut [usize],
    y: &[usize],
    v: &[T],
) -> usize {
    let (mut lo, mut hi) = (*plo, *phi);
    while lo != hi {
        let j = cols[lo];
        lo += 1;
        let i = y[j];
        let mind = d[j];
        let h = c(i, j) - v[j] - mind;
        for k in hi..n {
            let j = cols[k];
            let cred = c(i, j) - v[j] - h;
            if cred < d[j] {
                d[j] = cred;
                pred[j] = i;
                if cred == mind {
                    if y[j] == NONE {
                        return j;
                    }
                    cols[k] = cols[hi];
                    cols[hi] = j;
                    hi += 1;
                }
            }
        }
    }
    *plo = lo;
    *phi = hi;
    NONE
}
