//! Linear stencils for the discrete complex Hessian.
//!
//! Pure second derivatives use Shortley-Weller three-point differences along
//! each real axis, with the Dirichlet value placed at the fractional distance
//! where the segment leaves the domain. Mixed derivatives are recovered from
//! second differences along the two diagonals of each axis pair,
//! `u_ab = (∂²_{e_a+e_b} u - ∂²_{e_a-e_b} u) / 4`, which reduces to the
//! four-point cross stencil when all diagonal neighbours are interior.

use num_complex::Complex64;

use crate::domain::{GridDomain, NodeClass};

/// Per interior node, per lower-triangle entry `(j ≥ k)` of `u_{jk̄}`, sparse
/// weights on interior nodes plus weights on boundary crossing points (where
/// the Dirichlet trace lives). Entry order is row-major over the lower
/// triangle: `(0,0), (1,0), (1,1), (2,0), …`.
#[derive(Debug, Clone)]
pub struct HessianStencil {
    n: usize,
    entry_ptr: Vec<usize>,
    nodes: Vec<usize>,
    weights: Vec<Complex64>,
    crossing_ptr: Vec<usize>,
    crossing_ids: Vec<usize>,
    crossing_weights: Vec<Complex64>,
    crossings: Vec<Vec<f64>>,
}

pub(crate) fn entry_count(n: usize) -> usize {
    n * (n + 1) / 2
}

pub(crate) fn entry_index(j: usize, k: usize) -> usize {
    debug_assert!(j >= k);
    j * (j + 1) / 2 + k
}

#[derive(Clone, Copy)]
enum Target {
    Node(usize),
    Crossing(usize),
}

type Terms = Vec<(Target, f64)>;

struct Builder<'g> {
    grid: &'g GridDomain,
    crossings: Vec<Vec<f64>>,
}

impl HessianStencil {
    pub fn build(grid: &GridDomain) -> Self {
        let n = grid.complex_dim();
        let e = entry_count(n);
        let slots = grid.interior().len() * e;
        let mut st = Self {
            n,
            entry_ptr: Vec::with_capacity(slots + 1),
            nodes: Vec::new(),
            weights: Vec::new(),
            crossing_ptr: Vec::with_capacity(slots + 1),
            crossing_ids: Vec::new(),
            crossing_weights: Vec::new(),
            crossings: Vec::new(),
        };
        st.entry_ptr.push(0);
        st.crossing_ptr.push(0);
        let mut b = Builder {
            grid,
            crossings: Vec::new(),
        };
        let mut scratch: Vec<(Target, Complex64)> = Vec::new();
        let mut node_terms: Vec<(usize, Complex64)> = Vec::new();

        for &idx in grid.interior() {
            for j in 0..n {
                for k in 0..=j {
                    scratch.clear();
                    let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
                    if j == k {
                        push(&mut scratch, &b.axis_second(idx, xj), Complex64::new(0.25, 0.0));
                        push(&mut scratch, &b.axis_second(idx, yj), Complex64::new(0.25, 0.0));
                    } else {
                        // u_{jk̄} = ¼[(u_{x_j x_k} + u_{y_j y_k}) + i(u_{x_j y_k} - u_{y_j x_k})]
                        push(&mut scratch, &b.mixed_second(idx, xj, xk), Complex64::new(0.25, 0.0));
                        push(&mut scratch, &b.mixed_second(idx, yj, yk), Complex64::new(0.25, 0.0));
                        push(&mut scratch, &b.mixed_second(idx, xj, yk), Complex64::new(0.0, 0.25));
                        push(&mut scratch, &b.mixed_second(idx, yj, xk), Complex64::new(0.0, -0.25));
                    }
                    node_terms.clear();
                    for &(t, w) in &scratch {
                        match t {
                            Target::Node(i) => node_terms.push((i, w)),
                            Target::Crossing(c) => {
                                st.crossing_ids.push(c);
                                st.crossing_weights.push(w);
                            }
                        }
                    }
                    node_terms.sort_by_key(|(i, _)| *i);
                    let mut last: Option<usize> = None;
                    for &(i, w) in &node_terms {
                        if last == Some(i) {
                            *st.weights.last_mut().unwrap() += w;
                        } else {
                            st.nodes.push(i);
                            st.weights.push(w);
                            last = Some(i);
                        }
                    }
                    st.entry_ptr.push(st.nodes.len());
                    st.crossing_ptr.push(st.crossing_ids.len());
                }
            }
        }
        st.crossings = b.crossings;
        st
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    /// Boundary crossing points referenced by the stencil.
    pub fn crossings(&self) -> &[Vec<f64>] {
        &self.crossings
    }

    fn slot(&self, k: usize, e: usize) -> usize {
        k * entry_count(self.n) + e
    }

    /// Interior-node terms of entry `e` at interior position `k`.
    pub fn terms(&self, k: usize, e: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let s = self.slot(k, e);
        let range = self.entry_ptr[s]..self.entry_ptr[s + 1];
        self.nodes[range.clone()]
            .iter()
            .cloned()
            .zip(self.weights[range].iter().cloned())
    }

    /// Entry value from node values and, if given, the Dirichlet trace at
    /// the crossing points (zero otherwise).
    pub fn apply_entry(&self, k: usize, e: usize, values: &[f64], trace: Option<&[f64]>) -> Complex64 {
        let mut s: Complex64 = self.terms(k, e).map(|(node, w)| w * values[node]).sum();
        if let Some(trace) = trace {
            let slot = self.slot(k, e);
            for c in self.crossing_ptr[slot]..self.crossing_ptr[slot + 1] {
                s += self.crossing_weights[c] * trace[self.crossing_ids[c]];
            }
        }
        s
    }
}

fn push(out: &mut Vec<(Target, Complex64)>, terms: &Terms, scale: Complex64) {
    out.extend(terms.iter().map(|&(t, w)| (t, scale * w)));
}

impl Builder<'_> {
    /// Second derivative of `t ↦ u(p + t·h·v)` where `v` is the lattice vector
    /// given by `steps`, by the Shortley-Weller three-point formula.
    fn line_second(&mut self, idx: usize, steps: &[(usize, isize)]) -> Terms {
        let grid = self.grid;
        let h = grid.h();
        let backward: Vec<(usize, isize)> = steps.iter().map(|&(a, s)| (a, -s)).collect();
        let tp = grid.step_fraction(idx, steps);
        let tm = grid.step_fraction(idx, &backward);
        let denom = (tp + tm) * h * h;
        let mut terms = vec![(Target::Node(idx), -2.0 / (tp * tm * h * h))];
        for (theta, dir) in [(tp, steps), (tm, backward.as_slice())] {
            let w = 2.0 / (theta * denom);
            let interior_nb = grid
                .neighbor(idx, dir)
                .filter(|&nb| theta >= 1.0 && grid.class(nb) == NodeClass::Interior);
            match interior_nb {
                Some(nb) => terms.push((Target::Node(nb), w)),
                None => {
                    let mut x = grid.coords(idx);
                    for &(a, s) in dir {
                        x[a] += theta * s as f64 * h;
                    }
                    self.crossings.push(x);
                    terms.push((Target::Crossing(self.crossings.len() - 1), w));
                }
            }
        }
        terms
    }

    fn axis_second(&mut self, idx: usize, a: usize) -> Terms {
        self.line_second(idx, &[(a, 1)])
    }

    fn mixed_second(&mut self, idx: usize, a: usize, b: usize) -> Terms {
        let plus = self.line_second(idx, &[(a, 1), (b, 1)]);
        let minus = self.line_second(idx, &[(a, 1), (b, -1)]);
        plus.into_iter()
            .map(|(t, w)| (t, 0.25 * w))
            .chain(minus.into_iter().map(|(t, w)| (t, -0.25 * w)))
            .collect()
    }
}
