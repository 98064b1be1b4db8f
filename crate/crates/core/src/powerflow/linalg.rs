//! Direct solvers for the Newton-Raphson correction systems: dense LU with
//! partial pivoting for small islands, and a reverse-Cuthill-McKee banded LU
//! for large ones. Both are sequential and bit-deterministic.

/// Outcome of a linear solve; `None` signals a numerically singular matrix.
pub(crate) type SolveResult = Option<Vec<f64>>;

const PIVOT_FLOOR: f64 = 1e-12;

/// Dense LU with partial pivoting; `a` is row-major n×n and consumed.
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> SolveResult {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        // Pivot: largest magnitude on or below the diagonal.
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].abs();
        for row in col + 1..n {
            let mag = a[row * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag < PIVOT_FLOOR {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    // Back substitution.
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in row + 1..n {
            sum -= a[row * n + k] * x[k];
        }
        x[row] = sum / a[row * n + row];
    }
    Some(x)
}

/// Reverse-Cuthill-McKee ordering of an undirected graph given as adjacency
/// lists. Returns `order` such that `order[new] = old`.
pub(crate) fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    // Start each component from its minimum-degree node.
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&v| (degree[v], v));

    for &start in &starts {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Banded matrix in LAPACK-like storage: element (i, j) with |i−j| ≤ hbw
/// lives at `data[i][j − i + hbw]`.
pub(crate) struct BandMatrix {
    n: usize,
    hbw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn new(n: usize, hbw: usize) -> Self {
        Self {
            n,
            hbw,
            data: vec![0.0; n * (2 * hbw + 1)],
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i.abs_diff(j) <= self.hbw);
        self.data[i * (2 * self.hbw + 1) + (j + self.hbw - i)] += v;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * (2 * self.hbw + 1) + (j + self.hbw - i)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * (2 * self.hbw + 1) + (j + self.hbw - i)] = v;
    }

    /// In-place LU without pivoting followed by forward/back substitution.
    /// Returns None on a vanishing pivot.
    pub(crate) fn solve(mut self, mut b: Vec<f64>) -> SolveResult {
        let (n, hbw) = (self.n, self.hbw);
        for col in 0..n {
            let pivot = self.get(col, col);
            if pivot.abs() < PIVOT_FLOOR {
                return None;
            }
            let row_end = (col + hbw + 1).min(n);
            for row in col + 1..row_end {
                let factor = self.get(row, col) / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.set(row, col, 0.0);
                let col_end = (col + hbw + 1).min(n);
                for k in col + 1..col_end {
                    let v = self.get(row, k) - factor * self.get(col, k);
                    self.set(row, k, v);
                }
                b[row] -= factor * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut sum = b[row];
            let col_end = (row + hbw + 1).min(n);
            for (k, xk) in x.iter().enumerate().take(col_end).skip(row + 1) {
                sum -= self.get(row, k) * xk;
            }
            x[row] = sum / self.get(row, row);
        }
        Some(x)
    }
}
