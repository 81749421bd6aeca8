//! Exact balanced transportation problem, solved with the transportation
//! simplex method (MODI potentials on a spanning-tree basis).
//!
//! The basis always holds `rows + cols - 1` cells, degenerate zeros included,
//! so it is a spanning tree of the bipartite row/column graph. Dantzig pricing
//! is used until a run of degenerate pivots is seen, then Bland's rule takes
//! over until the objective moves again.

use crate::error::{Error, Result};

const DEGENERATE_RUN_BEFORE_BLAND: usize = 32;

#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Row-major `rows x cols` flow matrix.
    pub flow: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cell {
    row: usize,
    col: usize,
}

/// Minimize `sum_ij cost[i][j] * flow[i][j]` subject to row sums `supply` and
/// column sums `demand`. Totals must agree to 1e-9; the residual is absorbed
/// by the last demand entry.
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let rows = supply.len();
    let cols = demand.len();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptySupport);
    }
    if cost.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            got: cost.len(),
        });
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > 1e-9 {
        return Err(crate::error::invalid(format!(
            "unbalanced transport problem: supply {total_s} vs demand {total_d}"
        )));
    }
    let mut demand = demand.to_vec();
    demand[cols - 1] = (demand[cols - 1] + (total_s - total_d)).max(0.0);

    let mut flow = vec![0.0; rows * cols];
    let mut basis = northwest_corner(supply, &demand, &mut flow, cols);

    let cmax = cost.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let tol = 1e-13 * (1.0 + cmax);
    let max_pivots = 50 * (rows + cols) * (rows + cols) + 1000;

    let mut u = vec![0.0; rows];
    let mut v = vec![0.0; cols];
    let mut in_basis = vec![false; rows * cols];
    for c in &basis {
        in_basis[c.row * cols + c.col] = true;
    }

    let mut pivots = 0;
    let mut degenerate_run = 0;
    loop {
        let tree = Tree::build(&basis, rows, cols);
        tree.potentials(cost, cols, &mut u, &mut v);

        let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
        let mut entering: Option<Cell> = None;
        let mut best = -tol;
        'scan: for i in 0..rows {
            for j in 0..cols {
                if in_basis[i * cols + j] {
                    continue;
                }
                let reduced = cost[i * cols + j] - u[i] - v[j];
                if reduced < best {
                    entering = Some(Cell { row: i, col: j });
                    if bland {
                        break 'scan;
                    }
                    best = reduced;
                }
            }
        }
        let Some(enter) = entering else { break };

        // Path from column `enter.col` to row `enter.row` through the tree;
        // edges alternate -, +, -, ... starting at the column end.
        let path = tree.path(Node::Col(enter.col), Node::Row(enter.row));
        let mut theta = f64::INFINITY;
        let mut leave_pos = usize::MAX;
        for (k, &bi) in path.iter().enumerate().step_by(2) {
            let c = basis[bi];
            let x = flow[c.row * cols + c.col];
            let better = if bland {
                x < theta
                    || (x == theta
                        && (c.row, c.col) < (basis[path[leave_pos]].row, basis[path[leave_pos]].col))
            } else {
                x < theta
            };
            if better {
                theta = x;
                leave_pos = k;
            }
        }
        debug_assert!(leave_pos != usize::MAX);

        for (k, &bi) in path.iter().enumerate() {
            let c = basis[bi];
            let idx = c.row * cols + c.col;
            if k % 2 == 0 {
                flow[idx] -= theta;
            } else {
                flow[idx] += theta;
            }
        }
        let leave_idx = path[leave_pos];
        let leaving = basis[leave_idx];
        flow[leaving.row * cols + leaving.col] = 0.0;
        flow[enter.row * cols + enter.col] = theta;
        in_basis[leaving.row * cols + leaving.col] = false;
        in_basis[enter.row * cols + enter.col] = true;
        basis[leave_idx] = enter;

        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::SolverStalled(pivots));
        }
    }

    let cost_total = flow
        .iter()
        .zip(cost)
        .map(|(f, c)| f * c)
        .sum::<f64>()
        .max(0.0);
    Ok(TransportSolution {
        flow,
        cost: cost_total,
        pivots,
    })
}

fn northwest_corner(supply: &[f64], demand: &[f64], flow: &mut [f64], cols: usize) -> Vec<Cell> {
    let rows = supply.len();
    let mut a = supply.to_vec();
    let mut b = demand.to_vec();
    let mut basis = Vec::with_capacity(rows + cols - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let q = a[i].min(b[j]).max(0.0);
        flow[i * cols + j] = q;
        basis.push(Cell { row: i, col: j });
        a[i] -= q;
        b[j] -= q;
        if i == rows - 1 && j == cols - 1 {
            break;
        }
        if i == rows - 1 {
            j += 1;
        } else if j == cols - 1 || a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    basis
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Row(usize),
    Col(usize),
}

struct Tree {
    rows: usize,
    /// Adjacency over nodes `0..rows` (rows) and `rows..rows+cols` (cols);
    /// each entry is `(neighbor, basis index)`.
    adj: Vec<Vec<(usize, usize)>>,
    basis: Vec<Cell>,
}

impl Tree {
    fn build(basis: &[Cell], rows: usize, cols: usize) -> Self {
        let mut adj = vec![Vec::new(); rows + cols];
        for (k, c) in basis.iter().enumerate() {
            adj[c.row].push((rows + c.col, k));
            adj[rows + c.col].push((c.row, k));
        }
        Tree {
            rows,
            adj,
            basis: basis.to_vec(),
        }
    }

    fn id(&self, n: Node) -> usize {
        match n {
            Node::Row(i) => i,
            Node::Col(j) => self.rows + j,
        }
    }

    fn potentials(&self, cost: &[f64], cols: usize, u: &mut [f64], v: &mut [f64]) {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &(nb, k) in &self.adj[node] {
                if seen[nb] {
                    continue;
                }
                seen[nb] = true;
                let c = self.basis[k];
                let cij = cost[c.row * cols + c.col];
                if nb >= self.rows {
                    v[nb - self.rows] = cij - u[node];
                } else {
                    u[nb] = cij - v[node - self.rows];
                }
                stack.push(nb);
            }
        }
    }

    /// Basis indices of the edges on the unique tree path `from -> to`.
    fn path(&self, from: Node, to: Node) -> Vec<usize> {
        let n = self.adj.len();
        let start = self.id(from);
        let goal = self.id(to);
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(node) = stack.pop() {
            if node == goal {
                break;
            }
            for &(nb, k) in &self.adj[node] {
                if !seen[nb] {
                    seen[nb] = true;
                    parent[nb] = Some((node, k));
                    stack.push(nb);
                }
            }
        }
        let mut edges = Vec::new();
        let mut cur = goal;
        while cur != start {
            let (p, k) = parent[cur].expect("basis is a spanning tree");
            edges.push(k);
            cur = p;
        }
        edges.reverse();
        edges
    }
}
