//! Primal network simplex on the complete bipartite transport graph.
//!
//! Nodes `0..m` are sources, `m..m+n` are sinks and `m+n` is an artificial
//! root. Every node hangs off the root through an artificial arc of cost
//! `max_cost · (m+n+1)`, which is large enough that no optimal plan of a
//! balanced problem routes mass through the root.
//!
//! The spanning tree is kept strongly feasible: every zero-flow tree arc
//! points away from the root. The leaving arc is the last blocking arc met
//! when walking the pivot cycle from its apex in the direction of flow, which
//! rules out cycling under any entering rule. Entering arcs are chosen by the
//! most negative reduced cost, ties going to the smallest `(i, j)`.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::ot::{CostMatrix, Marginals, TransportPlan};
use crate::scalar::Scalar;

/// Exact optimal plan for `min ⟨γ, M⟩_F` subject to `γ1 = a`, `γᵀ1 = b`, `γ ≥ 0`.
pub fn solve_exact<T: Scalar>(cost: &CostMatrix<T>, marg: &Marginals<T>) -> Result<TransportPlan<T>> {
    marg.check(cost.shape())?;
    let mut ns = NetworkSimplex::new(cost, marg);
    let iterations = ns.run()?;
    let gamma = ns.plan()?;
    let objective = gamma.frobenius_dot(cost.matrix())?;
    let (row_err, col_err) = TransportPlan::marginal_l1(&gamma, marg);
    Ok(TransportPlan {
        gamma,
        objective,
        marginal_error: row_err + col_err,
        iterations,
        converged: true,
    })
}

struct NetworkSimplex<'a, T> {
    m: usize,
    n: usize,
    cost: &'a [T],
    art_cost: T,
    /// Whether the artificial arc of node `v` is directed `v → root`.
    art_up: Vec<bool>,
    flow: Vec<T>,
    in_tree: Vec<bool>,

    root: usize,
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// Whether `pred[v]` is directed from `v` to `parent[v]`.
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<T>,

    // scratch for the tree walk
    child_start: Vec<usize>,
    child_list: Vec<usize>,
    queue: Vec<usize>,

    rc_tol: T,
    mass_tol: T,
}

impl<'a, T: Scalar> NetworkSimplex<'a, T> {
    fn new(cost: &'a CostMatrix<T>, marg: &Marginals<T>) -> Self {
        let (m, n) = cost.shape();
        let nodes = m + n + 1;
        let root = m + n;
        let max_cost = cost.max();
        let art_cost = if max_cost > T::zero() {
            max_cost * T::of_usize(nodes)
        } else {
            T::one()
        };
        let real = m * n;

        let mut flow = vec![T::zero(); real + m + n];
        let mut in_tree = vec![false; real + m + n];
        let mut art_up = vec![false; m + n];
        let mut parent = vec![root; nodes];
        let mut pred = vec![usize::MAX; nodes];
        let mut up = vec![false; nodes];
        let mut depth = vec![1; nodes];
        depth[root] = 0;
        parent[root] = usize::MAX;

        for v in 0..m + n {
            let e = real + v;
            in_tree[e] = true;
            pred[v] = e;
            if v < m {
                // A zero-supply source keeps its zero-flow arc pointing away
                // from the root.
                art_up[v] = marg.a[v] > T::zero();
                flow[e] = marg.a[v];
            } else {
                flow[e] = marg.b[v - m];
            }
            up[v] = art_up[v];
        }

        let scale = art_cost * T::of(2.0) + max_cost;
        let mut ns = Self {
            m,
            n,
            cost: cost.matrix().as_slice(),
            art_cost,
            art_up,
            flow,
            in_tree,
            root,
            parent,
            pred,
            up,
            depth,
            pi: vec![T::zero(); nodes],
            child_start: vec![0; nodes + 1],
            child_list: vec![0; nodes],
            queue: Vec::with_capacity(nodes),
            rc_tol: scale * T::epsilon() * T::of(64.0),
            mass_tol: T::of(1e-9).max(T::epsilon() * T::of(1024.0)),
        };
        ns.refresh_tree();
        ns
    }

    fn real_arcs(&self) -> usize {
        self.m * self.n
    }

    fn arc_ends(&self, e: usize) -> (usize, usize) {
        let real = self.real_arcs();
        if e < real {
            (e / self.n, self.m + e % self.n)
        } else {
            let v = e - real;
            if self.art_up[v] {
                (v, self.root)
            } else {
                (self.root, v)
            }
        }
    }

    fn arc_cost(&self, e: usize) -> T {
        if e < self.real_arcs() {
            self.cost[e]
        } else {
            self.art_cost
        }
    }

    fn run(&mut self) -> Result<usize> {
        let max_pivots = 64 * (self.real_arcs() + self.root + 1) + 1000;
        let mut pivots = 0;
        while let Some(entering) = self.find_entering() {
            if pivots == max_pivots {
                return Err(Error::Simplex("pivot limit reached"));
            }
            self.pivot(entering)?;
            pivots += 1;
        }
        Ok(pivots)
    }

    /// Most negative reduced cost `c_ij + π_i − π_j` over non-tree real arcs.
    fn find_entering(&self) -> Option<usize> {
        let mut best = -self.rc_tol;
        let mut entering = None;
        for i in 0..self.m {
            let pi_i = self.pi[i];
            let base = i * self.n;
            for j in 0..self.n {
                let e = base + j;
                if self.in_tree[e] {
                    continue;
                }
                let rc = self.cost[e] + pi_i - self.pi[self.m + j];
                if rc < best {
                    best = rc;
                    entering = Some(e);
                }
            }
        }
        entering
    }

    fn join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        u
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        let (first, second) = self.arc_ends(entering);
        let join = self.join(first, second);

        // Flow travels join → first → second → join. On the first side the
        // blocking arcs point up, on the second side they point down.
        let mut delta = T::infinity();
        let mut u_out = usize::MAX;
        let mut on_first = true;
        let mut u = first;
        while u != join {
            if self.up[u] {
                let d = self.flow[self.pred[u]].max(T::zero());
                if d < delta {
                    delta = d;
                    u_out = u;
                }
            }
            u = self.parent[u];
        }
        u = second;
        while u != join {
            if !self.up[u] {
                let d = self.flow[self.pred[u]].max(T::zero());
                if d <= delta {
                    delta = d;
                    u_out = u;
                    on_first = false;
                }
            }
            u = self.parent[u];
        }
        if u_out == usize::MAX {
            return Err(Error::Simplex("unbounded pivot cycle"));
        }

        if delta > T::zero() {
            self.flow[entering] += delta;
            let mut u = first;
            while u != join {
                let e = self.pred[u];
                if self.up[u] {
                    self.flow[e] -= delta;
                } else {
                    self.flow[e] += delta;
                }
                u = self.parent[u];
            }
            u = second;
            while u != join {
                let e = self.pred[u];
                if self.up[u] {
                    self.flow[e] += delta;
                } else {
                    self.flow[e] -= delta;
                }
                u = self.parent[u];
            }
        }
        let leaving = self.pred[u_out];
        self.flow[leaving] = T::zero();
        self.in_tree[leaving] = false;
        self.in_tree[entering] = true;

        // Re-hang the detached subtree from the entering arc by reversing
        // the parent chain u_in → … → u_out.
        let (u_in, v_in) = if on_first {
            (first, second)
        } else {
            (second, first)
        };
        let mut child = u_in;
        let mut new_parent = v_in;
        let mut new_pred = entering;
        loop {
            let old_parent = self.parent[child];
            let old_pred = self.pred[child];
            self.parent[child] = new_parent;
            self.pred[child] = new_pred;
            self.up[child] = self.arc_ends(new_pred).0 == child;
            if child == u_out {
                break;
            }
            new_parent = child;
            new_pred = old_pred;
            child = old_parent;
        }
        self.refresh_tree();
        Ok(())
    }

    /// Recomputes depths and potentials from the parent pointers.
    fn refresh_tree(&mut self) {
        let nodes = self.root + 1;
        self.child_start.iter_mut().for_each(|c| *c = 0);
        for v in 0..nodes {
            if v != self.root {
                self.child_start[self.parent[v] + 1] += 1;
            }
        }
        for v in 0..nodes {
            self.child_start[v + 1] += self.child_start[v];
        }
        let mut fill = self.child_start.clone();
        for v in 0..nodes {
            if v != self.root {
                let p = self.parent[v];
                self.child_list[fill[p]] = v;
                fill[p] += 1;
            }
        }

        self.queue.clear();
        self.queue.push(self.root);
        self.depth[self.root] = 0;
        self.pi[self.root] = T::zero();
        let mut head = 0;
        while head < self.queue.len() {
            let p = self.queue[head];
            head += 1;
            for k in self.child_start[p]..self.child_start[p + 1] {
                let v = self.child_list[k];
                let c = self.arc_cost(self.pred[v]);
                self.depth[v] = self.depth[p] + 1;
                // Tree arcs have zero reduced cost c + π_src − π_dst.
                self.pi[v] = if self.up[v] {
                    self.pi[p] - c
                } else {
                    self.pi[p] + c
                };
                self.queue.push(v);
            }
        }
        debug_assert_eq!(self.queue.len(), nodes, "tree must span every node");
    }

    fn plan(&self) -> Result<Matrix<T>> {
        let real = self.real_arcs();
        if self.flow[real..].iter().any(|&f| f > self.mass_tol) {
            return Err(Error::Simplex("mass left on artificial arcs"));
        }
        let data = self.flow[..real]
            .iter()
            .map(|&f| f.max(T::zero()))
            .collect();
        Matrix::from_vec(self.m, self.n, data)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn cost(rows: &[&[f64]]) -> CostMatrix<f64> {
        CostMatrix::new(Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap())
            .unwrap()
    }

    #[test]
    fn single_cell_is_forced() {
        let c = cost(&[&[3.25]]);
        let p = solve_exact(&c, &Marginals::new(vec![1.0], vec![1.0]).unwrap()).unwrap();
        assert_eq!(p.gamma.as_slice(), &[1.0]);
        assert_eq!(p.objective, 3.25);
    }

    #[test]
    fn diagonal_assignment() {
        let c = cost(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p = solve_exact(&c, &Marginals::uniform(2, 2)).unwrap();
        assert_eq!(p.gamma.as_slice(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(p.objective, 0.0);
    }

    #[test]
    fn unequal_marginals_hand_case() {
        // γ11 = x: objective 1x + 3(0.6-x) + 2(0.5-x) + 1(x-0.1) = -3x + 2.7, x ≤ 0.5.
        let c = cost(&[&[1.0, 3.0], &[2.0, 1.0]]);
        let marg = Marginals::new(vec![0.6, 0.4], vec![0.5, 0.5]).unwrap();
        let p = solve_exact(&c, &marg).unwrap();
        let want = [0.5, 0.1, 0.0, 0.4];
        for (g, w) in p.gamma.as_slice().iter().zip(want) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.objective, 1.2, epsilon = 1e-12);
        assert!(p.marginal_error < 1e-12);
    }

    #[test]
    fn unbalanced_marginals_rejected() {
        let c = cost(&[&[1.0, 3.0], &[2.0, 1.0]]);
        let marg = Marginals::new(vec![0.6, 0.5], vec![0.5, 0.5]).unwrap();
        assert!(matches!(solve_exact(&c, &marg), Err(Error::InfeasibleMarginals { .. })));
    }

    #[test]
    fn empty_problem_rejected() {
        let c = CostMatrix::new(Matrix::<f64>::zeros(0, 3)).unwrap();
        let marg = Marginals::new(vec![], vec![1.0 / 3.0; 3]).unwrap();
        assert!(matches!(solve_exact(&c, &marg), Err(Error::EmptyProblem { .. })));
    }

    #[test]
    fn zero_mass_rows_are_allowed() {
        let c = cost(&[&[1.0, 2.0], &[0.0, 0.0], &[2.0, 1.0]]);
        let marg = Marginals::new(vec![0.5, 0.0, 0.5], vec![0.5, 0.5]).unwrap();
        let p = solve_exact(&c, &marg).unwrap();
        assert_abs_diff_eq!(p.objective, 1.0, epsilon = 1e-12);
        assert_eq!(p.gamma.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn all_zero_cost() {
        let c = CostMatrix::new(Matrix::<f64>::zeros(3, 4)).unwrap();
        let p = solve_exact(&c, &Marginals::uniform(3, 4)).unwrap();
        assert_eq!(p.objective, 0.0);
        assert!(p.marginal_error < 1e-12);
    }

    #[test]
    fn single_precision_solves() {
        let c = CostMatrix::new(Matrix::from_rows(&[vec![0.0f32, 1.0], vec![1.0, 0.0]]).unwrap()).unwrap();
        let p = solve_exact(&c, &Marginals::uniform(2, 2)).unwrap();
        assert_eq!(p.objective, 0.0);
    }
}
