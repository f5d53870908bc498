//! Equispaced Lagrange elements on the reference triangle
//! `{(xi, eta) : xi >= 0, eta >= 0, xi + eta <= 1}`.
//!
//! Local node order: the three vertices `(0,0), (1,0), (0,1)`, then the
//! `k - 1` interior nodes of each edge `v0->v1`, `v1->v2`, `v2->v0` in the
//! direction of travel, then cell-interior nodes.

use serde::{Deserialize, Serialize};

/// Local vertex pairs of the three edges, in traversal direction.
pub const EDGE_VERTICES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTriangle {
    order: usize,
    /// Barycentric multi-indices `(i0, i1, i2)` with `i0 + i1 + i2 = order`.
    multi_indices: Vec<[usize; 3]>,
    nodes: Vec<[f64; 2]>,
}

impl ReferenceTriangle {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Lagrange order must be at least 1");
        let k = order;
        let mut multi_indices = vec![[k, 0, 0], [0, k, 0], [0, 0, k]];
        for m in 1..k {
            multi_indices.push([k - m, m, 0]);
        }
        for m in 1..k {
            multi_indices.push([0, k - m, m]);
        }
        for m in 1..k {
            multi_indices.push([m, 0, k - m]);
        }
        for i2 in 1..k {
            for i1 in 1..k - i2 {
                multi_indices.push([k - i1 - i2, i1, i2]);
            }
        }
        let nodes = multi_indices
            .iter()
            .map(|mi| [mi[1] as f64 / k as f64, mi[2] as f64 / k as f64])
            .collect();
        Self {
            order,
            multi_indices,
            nodes,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Local index of the `m`-th (1-based, `1..order`) interior node of edge `edge`.
    pub fn edge_node(&self, edge: usize, m: usize) -> usize {
        debug_assert!(edge < 3 && m >= 1 && m < self.order);
        3 + edge * (self.order - 1) + (m - 1)
    }

    pub fn n_interior(&self) -> usize {
        let k = self.order;
        if k < 3 {
            0
        } else {
            (k - 1) * (k - 2) / 2
        }
    }

    pub fn interior_node(&self, i: usize) -> usize {
        3 + 3 * (self.order - 1) + i
    }

    /// Basis values at `point`.
    pub fn eval(&self, point: [f64; 2]) -> Vec<f64> {
        let mut values = vec![0.0; self.n_nodes()];
        let mut grads = vec![[0.0; 2]; self.n_nodes()];
        self.eval_into(point, &mut values, &mut grads);
        values
    }

    /// Basis values and reference gradients `(d/dxi, d/deta)` at `point`.
    pub fn eval_with_gradients(&self, point: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let mut values = vec![0.0; self.n_nodes()];
        let mut grads = vec![[0.0; 2]; self.n_nodes()];
        self.eval_into(point, &mut values, &mut grads);
        (values, grads)
    }

    pub fn eval_into(&self, point: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
        let k = self.order as f64;
        let lambda = [1.0 - point[0] - point[1], point[0], point[1]];
        const DLAMBDA: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for (idx, mi) in self.multi_indices.iter().enumerate() {
            // Each barycentric factor L(l) = prod_{m < i} (k l - m) / (m + 1).
            let mut factor = [1.0; 3];
            let mut dfactor = [0.0; 3];
            for a in 0..3 {
                let (mut v, mut dv) = (1.0, 0.0);
                for m in 0..mi[a] {
                    let c = (k * lambda[a] - m as f64) / (m as f64 + 1.0);
                    dv = dv * c + v * k / (m as f64 + 1.0);
                    v *= c;
                }
                factor[a] = v;
                dfactor[a] = dv;
            }
            values[idx] = factor[0] * factor[1] * factor[2];
            let mut g = [0.0; 2];
            for a in 0..3 {
                let others: f64 = (0..3).filter(|&b| b != a).map(|b| factor[b]).product();
                for d in 0..2 {
                    g[d] += dfactor[a] * others * DLAMBDA[a][d];
                }
            }
            grads[idx] = g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts() {
        for k in 1..=4 {
            let r = ReferenceTriangle::new(k);
            assert_eq!(r.n_nodes(), (k + 1) * (k + 2) / 2);
            assert_eq!(&r.nodes()[..3], &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
            assert_eq!(3 + 3 * (k - 1) + r.n_interior(), r.n_nodes());
        }
    }

    #[test]
    fn lagrange_property() {
        for k in 1..=4 {
            let r = ReferenceTriangle::new(k);
            for (j, node) in r.nodes().iter().enumerate() {
                for (i, v) in r.eval(*node).iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-13, "k={k} i={i} j={j} v={v}");
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        for k in 1..=3 {
            let r = ReferenceTriangle::new(k);
            let p = [0.23, 0.41];
            let (_, grads) = r.eval_with_gradients(p);
            let px = r.eval([p[0] + h, p[1]]);
            let mx = r.eval([p[0] - h, p[1]]);
            let py = r.eval([p[0], p[1] + h]);
            let my = r.eval([p[0], p[1] - h]);
            for i in 0..r.n_nodes() {
                assert!(((px[i] - mx[i]) / (2.0 * h) - grads[i][0]).abs() < 1e-8);
                assert!(((py[i] - my[i]) / (2.0 * h) - grads[i][1]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn edge_nodes_run_in_edge_direction() {
        let r = ReferenceTriangle::new(3);
        for (e, [a, b]) in EDGE_VERTICES.iter().enumerate() {
            let (pa, pb) = (r.nodes()[*a], r.nodes()[*b]);
            for m in 1..3 {
                let t = m as f64 / 3.0;
                let node = r.nodes()[r.edge_node(e, m)];
                assert!((node[0] - (pa[0] + t * (pb[0] - pa[0]))).abs() < 1e-15);
                assert!((node[1] - (pa[1] + t * (pb[1] - pa[1]))).abs() < 1e-15);
            }
        }
    }
}
