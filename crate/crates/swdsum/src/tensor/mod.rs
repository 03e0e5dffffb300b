//! Dense f64 tensors with reverse-mode automatic differentiation.
//!
//! The design is define-by-run: a [`Tape`] records every operation whose
//! inputs are tracked, and [`Tape::backward`] replays the records in reverse
//! to accumulate gradients for the watched leaves. Each record keeps the
//! forward values its backward rule needs, so tensors themselves can be
//! dropped freely between ops. A tape lives for one forward/backward pass
//! and is rebuilt for the next.

mod grad_check;

pub use grad_check::grad_check;

use std::rc::Rc;

use crate::error::{Result, SwdError};

/// Index of a node on a [`Tape`]; node `i` is produced by record `i`.
pub type NodeId = usize;

/// Dense n-dimensional array of f64 values in row-major order.
///
/// A tensor is immutable once created. It becomes gradient-tracked when it
/// is the output of a tape operation or was registered via [`Tape::watch`];
/// untracked tensors act as constants and record nothing.
#[derive(Clone, Debug)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Rc<Vec<f64>>,
    node: Option<NodeId>,
}

impl Tensor {
    /// Builds a tensor, checking that `values.len()` equals the shape product.
    /// Zero-sized dimensions are allowed (empty sequences produce 0×d shapes).
    pub fn new(shape: &[usize], values: Vec<f64>) -> Result<Tensor> {
        let numel: usize = shape.iter().product();
        if values.len() != numel {
            return Err(SwdError::Dimension(format!(
                "shape {:?} implies {} values, got {}",
                shape,
                numel,
                values.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Rc::new(values),
            node: None,
        })
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Tensor {
        let numel: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: Rc::new(vec![value; numel]),
            node: None,
        }
    }

    /// A scalar tensor of shape `[1]`.
    pub fn scalar(value: f64) -> Tensor {
        Tensor {
            shape: vec![1],
            data: Rc::new(vec![value]),
            node: None,
        }
    }

    /// A `[1 × n]` row vector.
    pub fn row(values: Vec<f64>) -> Tensor {
        Tensor {
            shape: vec![1, values.len()],
            data: Rc::new(values),
            node: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn node(&self) -> Option<NodeId> {
        self.node
    }

    pub fn is_tracked(&self) -> bool {
        self.node.is_some()
    }

    /// The single value of a scalar tensor. Panics on non-scalars.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() called on tensor of shape {:?}", self.shape);
        self.data[0]
    }
}

/// One input of a binary record: the node (if tracked) plus the forward
/// values the partner's backward rule needs.
#[derive(Debug)]
struct Operand {
    node: Option<NodeId>,
    vals: Rc<Vec<f64>>,
}

impl Operand {
    fn of(t: &Tensor) -> Operand {
        Operand {
            node: t.node,
            vals: Rc::clone(&t.data),
        }
    }
}

#[derive(Debug)]
enum Record {
    Leaf,
    Add {
        a: Option<NodeId>,
        b: Option<NodeId>,
    },
    Mul {
        a: Operand,
        b: Operand,
    },
    Scale {
        a: NodeId,
        factor: f64,
    },
    Neg {
        a: NodeId,
    },
    Tanh {
        a: NodeId,
        out: Rc<Vec<f64>>,
    },
    Sigmoid {
        a: NodeId,
        out: Rc<Vec<f64>>,
    },
    Exp {
        a: NodeId,
        out: Rc<Vec<f64>>,
    },
    Log {
        a: NodeId,
        input: Rc<Vec<f64>>,
    },
    Sum {
        a: NodeId,
        input_len: usize,
    },
    Matmul {
        a: Operand,
        b: Operand,
        m: usize,
        k: usize,
        n: usize,
    },
    SoftmaxRows {
        a: NodeId,
        out: Rc<Vec<f64>>,
        rows: usize,
        cols: usize,
    },
    Concat {
        /// (input node, size along the concat axis) per part.
        parts: Vec<(Option<NodeId>, usize)>,
        outer: usize,
        inner: usize,
    },
    Lookup {
        table: NodeId,
        ids: Rc<Vec<u32>>,
        dim: usize,
        table_len: usize,
    },
    Reshape {
        a: NodeId,
    },
}

/// Gradients produced by one backward sweep, addressable by leaf tensor.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient buffer for a tracked leaf, `None` if the tensor is untracked
    /// or no gradient reached it.
    pub fn get(&self, t: &Tensor) -> Option<&[f64]> {
        t.node.and_then(|id| self.grads.get(id)).and_then(|g| g.as_deref())
    }

    pub fn by_node(&self, id: NodeId) -> Option<&[f64]> {
        self.grads.get(id).and_then(|g| g.as_deref())
    }
}

/// Operation tape for one forward/backward pass.
#[derive(Default)]
pub struct Tape {
    records: Vec<Record>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape { records: Vec::new() }
    }

    pub fn num_nodes(&self) -> usize {
        self.records.len()
    }

    fn push(&mut self, record: Record) -> NodeId {
        self.records.push(record);
        self.records.len() - 1
    }

    /// Registers `t` as a gradient-tracked leaf and returns the tracked handle.
    pub fn watch(&mut self, t: &Tensor) -> Tensor {
        let node = self.push(Record::Leaf);
        Tensor {
            shape: t.shape.clone(),
            data: Rc::clone(&t.data),
            node: Some(node),
        }
    }

    fn require_same_shape(op: &str, a: &Tensor, b: &Tensor) -> Result<()> {
        if a.shape != b.shape {
            return Err(SwdError::Dimension(format!(
                "{op}: shapes {:?} and {:?} differ",
                a.shape, b.shape
            )));
        }
        Ok(())
    }

    /// Elementwise sum.
    pub fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        Self::require_same_shape("add", a, b)?;
        let out: Vec<f64> = a.data.iter().zip(b.data.iter()).map(|(x, y)| x + y).collect();
        let node = if a.node.is_some() || b.node.is_some() {
            Some(self.push(Record::Add { a: a.node, b: b.node }))
        } else {
            None
        };
        Ok(Tensor {
            shape: a.shape.clone(),
            data: Rc::new(out),
            node,
        })
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        Self::require_same_shape("mul", a, b)?;
        let out: Vec<f64> = a.data.iter().zip(b.data.iter()).map(|(x, y)| x * y).collect();
        let node = if a.node.is_some() || b.node.is_some() {
            Some(self.push(Record::Mul {
                a: Operand::of(a),
                b: Operand::of(b),
            }))
        } else {
            None
        };
        Ok(Tensor {
            shape: a.shape.clone(),
            data: Rc::new(out),
            node,
        })
    }

    /// Multiplication by a scalar constant.
    pub fn scale(&mut self, a: &Tensor, factor: f64) -> Tensor {
        let out: Vec<f64> = a.data.iter().map(|x| x * factor).collect();
        let node = a.node.map(|an| self.push(Record::Scale { a: an, factor }));
        Tensor {
            shape: a.shape.clone(),
            data: Rc::new(out),
            node,
        }
    }

    pub fn neg(&mut self, a: &Tensor) -> Tensor {
        let out: Vec<f64> = a.data.iter().map(|x| -x).collect();
        let node = a.node.map(|an| self.push(Record::Neg { a: an }));
        Tensor {
            shape: a.shape.clone(),
            data: Rc::new(out),
            node,
        }
    }

    /// Convenience for `add(a, neg(b))`.
    pub fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        let nb = self.neg(b);
        self.add(a, &nb)
    }

    pub fn tanh(&mut self, a: &Tensor) -> Tensor {
        let out = Rc::new(a.data.iter().map(|x| x.tanh()).collect::<Vec<f64>>());
        let node = a
            .node
            .map(|an| self.push(Record::Tanh { a: an, out: Rc::clone(&out) }));
        Tensor {
            shape: a.shape.clone(),
            data: out,
            node,
        }
    }

    pub fn sigmoid(&mut self, a: &Tensor) -> Tensor {
        let out = Rc::new(
            a.data
                .iter()
                .map(|x| 1.0 / (1.0 + (-x).exp()))
                .collect::<Vec<f64>>(),
        );
        let node = a
            .node
            .map(|an| self.push(Record::Sigmoid { a: an, out: Rc::clone(&out) }));
        Tensor {
            shape: a.shape.clone(),
            data: out,
            node,
        }
    }

    pub fn exp(&mut self, a: &Tensor) -> Tensor {
        let out = Rc::new(a.data.iter().map(|x| x.exp()).collect::<Vec<f64>>());
        let node = a
            .node
            .map(|an| self.push(Record::Exp { a: an, out: Rc::clone(&out) }));
        Tensor {
            shape: a.shape.clone(),
            data: out,
            node,
        }
    }

    /// Natural logarithm; every input value must be strictly positive.
    pub fn log(&mut self, a: &Tensor) -> Result<Tensor> {
        if let Some(bad) = a.data.iter().find(|v| **v <= 0.0) {
            return Err(SwdError::Domain(format!("log of non-positive value {bad}")));
        }
        let out: Vec<f64> = a.data.iter().map(|x| x.ln()).collect();
        let node = a.node.map(|an| {
            self.push(Record::Log {
                a: an,
                input: Rc::clone(&a.data),
            })
        });
        Ok(Tensor {
            shape: a.shape.clone(),
            data: Rc::new(out),
            node,
        })
    }

    /// Sum of all elements, as a `[1]` scalar.
    pub fn sum(&mut self, a: &Tensor) -> Tensor {
        let total: f64 = a.data.iter().sum();
        let node = a.node.map(|an| {
            self.push(Record::Sum {
                a: an,
                input_len: a.data.len(),
            })
        });
        Tensor {
            shape: vec![1],
            data: Rc::new(vec![total]),
            node,
        }
    }

    /// Matrix product of `[m×k]` and `[k×n]`.
    pub fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if a.shape.len() != 2 || b.shape.len() != 2 {
            return Err(SwdError::Dimension(format!(
                "matmul requires rank-2 tensors, got {:?} and {:?}",
                a.shape, b.shape
            )));
        }
        let (m, k) = (a.shape[0], a.shape[1]);
        let (k2, n) = (b.shape[0], b.shape[1]);
        if k != k2 {
            return Err(SwdError::Dimension(format!(
                "matmul inner dimensions differ: {:?} vs {:?}",
                a.shape, b.shape
            )));
        }
        let out = matmul_vals(&a.data, &b.data, m, k, n);
        let node = if a.node.is_some() || b.node.is_some() {
            Some(self.push(Record::Matmul {
                a: Operand::of(a),
                b: Operand::of(b),
                m,
                k,
                n,
            }))
        } else {
            None
        };
        Ok(Tensor {
            shape: vec![m, n],
            data: Rc::new(out),
            node,
        })
    }

    /// Row-wise softmax of an `[m×n]` tensor with optional 0/1 mask.
    ///
    /// Each row is shifted by its (unmasked) maximum before exponentiation;
    /// masked positions come out exactly 0 and each unmasked row sums to 1.
    pub fn softmax_rows(&mut self, x: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        if x.shape.len() != 2 {
            return Err(SwdError::Dimension(format!(
                "softmax_rows requires a rank-2 tensor, got {:?}",
                x.shape
            )));
        }
        let (rows, cols) = (x.shape[0], x.shape[1]);
        let mask_vals = match mask {
            Some(m) => {
                Self::require_same_shape("softmax_rows mask", x, m)?;
                if let Some(bad) = m.data.iter().find(|v| **v != 0.0 && **v != 1.0) {
                    return Err(SwdError::Argument(format!(
                        "softmax mask entries must be 0 or 1, got {bad}"
                    )));
                }
                Some(Rc::clone(&m.data))
            }
            None => None,
        };
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows {
            let row = &x.data[r * cols..(r + 1) * cols];
            let live = |c: usize| mask_vals.as_ref().is_none_or(|m| m[r * cols + c] == 1.0);
            let mut max = f64::NEG_INFINITY;
            for c in 0..cols {
                if live(c) && row[c] > max {
                    max = row[c];
                }
            }
            if max == f64::NEG_INFINITY {
                return Err(SwdError::Degenerate(format!(
                    "softmax row {r} has no unmasked positions"
                )));
            }
            let mut denom = 0.0;
            for c in 0..cols {
                if live(c) {
                    let e = (row[c] - max).exp();
                    out[r * cols + c] = e;
                    denom += e;
                }
            }
            for c in 0..cols {
                out[r * cols + c] /= denom;
            }
        }
        let out = Rc::new(out);
        let node = x.node.map(|an| {
            self.push(Record::SoftmaxRows {
                a: an,
                out: Rc::clone(&out),
                rows,
                cols,
            })
        });
        Ok(Tensor {
            shape: vec![rows, cols],
            data: out,
            node,
        })
    }

    /// Concatenation of two tensors along `axis`.
    pub fn concat(&mut self, a: &Tensor, b: &Tensor, axis: usize) -> Result<Tensor> {
        self.concat_many(&[a, b], axis)
    }

    /// Concatenation of any number of tensors along `axis`; they must agree
    /// on every other axis.
    pub fn concat_many(&mut self, parts: &[&Tensor], axis: usize) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| SwdError::Argument("concat of zero tensors".into()))?;
        let rank = first.shape.len();
        if axis >= rank {
            return Err(SwdError::Dimension(format!(
                "concat axis {axis} out of range for rank {rank}"
            )));
        }
        let mut axis_total = 0;
        for p in parts {
            if p.shape.len() != rank {
                return Err(SwdError::Dimension(format!(
                    "concat rank mismatch: {:?} vs {:?}",
                    first.shape, p.shape
                )));
            }
            for (d, (&sa, &sb)) in first.shape.iter().zip(p.shape.iter()).enumerate() {
                if d != axis && sa != sb {
                    return Err(SwdError::Dimension(format!(
                        "concat shapes {:?} and {:?} differ on axis {d}",
                        first.shape, p.shape
                    )));
                }
            }
            axis_total += p.shape[axis];
        }
        let mut out_shape = first.shape.clone();
        out_shape[axis] = axis_total;
        let outer: usize = out_shape[..axis].iter().product();
        let inner: usize = out_shape[axis + 1..].iter().product();

        let mut out = Vec::with_capacity(outer * axis_total * inner);
        for r in 0..outer {
            for p in parts {
                let slab = p.shape[axis] * inner;
                out.extend_from_slice(&p.data[r * slab..(r + 1) * slab]);
            }
        }
        let node = if parts.iter().any(|p| p.node.is_some()) {
            Some(self.push(Record::Concat {
                parts: parts.iter().map(|p| (p.node, p.shape[axis])).collect(),
                outer,
                inner,
            }))
        } else {
            None
        };
        Ok(Tensor {
            shape: out_shape,
            data: Rc::new(out),
            node,
        })
    }

    /// Gathers rows of a `[V×d]` table. The backward rule scatter-adds into
    /// the table gradient, so repeated ids accumulate.
    pub fn embedding_lookup(&mut self, table: &Tensor, ids: &[u32]) -> Result<Tensor> {
        if table.shape.len() != 2 {
            return Err(SwdError::Dimension(format!(
                "embedding table must be rank 2, got {:?}",
                table.shape
            )));
        }
        let (vocab, dim) = (table.shape[0], table.shape[1]);
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            let id = id as usize;
            if id >= vocab {
                return Err(SwdError::Vocab(format!(
                    "token id {id} out of range for vocabulary of {vocab}"
                )));
            }
            out.extend_from_slice(&table.data[id * dim..(id + 1) * dim]);
        }
        let node = table.node.map(|tn| {
            self.push(Record::Lookup {
                table: tn,
                ids: Rc::new(ids.to_vec()),
                dim,
                table_len: vocab * dim,
            })
        });
        Ok(Tensor {
            shape: vec![ids.len(), dim],
            data: Rc::new(out),
            node,
        })
    }

    /// Reinterprets the flat buffer under a new shape of equal size.
    pub fn reshape(&mut self, a: &Tensor, new_shape: &[usize]) -> Result<Tensor> {
        let numel: usize = new_shape.iter().product();
        if numel != a.numel() {
            return Err(SwdError::Dimension(format!(
                "reshape {:?} -> {:?} changes element count",
                a.shape, new_shape
            )));
        }
        let node = a.node.map(|an| self.push(Record::Reshape { a: an }));
        Ok(Tensor {
            shape: new_shape.to_vec(),
            data: Rc::clone(&a.data),
            node,
        })
    }

    /// Reverse sweep from a scalar loss. Populates a gradient for every
    /// watched leaf reachable from the loss, accumulating over fan-out.
    pub fn backward(&self, loss: &Tensor) -> Result<Gradients> {
        let loss_node = loss
            .node
            .ok_or_else(|| SwdError::Argument("backward: loss is not on the tape".into()))?;
        if loss.numel() != 1 {
            return Err(SwdError::Dimension(format!(
                "backward: loss must be a scalar, got shape {:?}",
                loss.shape
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(self.records.len());
        grads.resize_with(self.records.len(), || None);
        grads[loss_node] = Some(vec![1.0]);

        for id in (0..=loss_node).rev() {
            if matches!(self.records[id], Record::Leaf) {
                continue; // leaf gradients stay in place for the caller
            }
            let g = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.records[id] {
                Record::Leaf => unreachable!(),
                Record::Add { a, b } => {
                    for input in [a, b].into_iter().flatten() {
                        add_into(&mut grads[*input], g.len(), |acc| {
                            for (av, gv) in acc.iter_mut().zip(&g) {
                                *av += gv;
                            }
                        });
                    }
                }
                Record::Mul { a, b } => {
                    if let Some(an) = a.node {
                        add_into(&mut grads[an], g.len(), |acc| {
                            for ((av, gv), ov) in acc.iter_mut().zip(&g).zip(b.vals.iter()) {
                                *av += gv * ov;
                            }
                        });
                    }
                    if let Some(bn) = b.node {
                        add_into(&mut grads[bn], g.len(), |acc| {
                            for ((av, gv), ov) in acc.iter_mut().zip(&g).zip(a.vals.iter()) {
                                *av += gv * ov;
                            }
                        });
                    }
                }
                Record::Scale { a, factor } => {
                    add_into(&mut grads[*a], g.len(), |acc| {
                        for (av, gv) in acc.iter_mut().zip(&g) {
                            *av += gv * factor;
                        }
                    });
                }
                Record::Neg { a } => {
                    add_into(&mut grads[*a], g.len(), |acc| {
                        for (av, gv) in acc.iter_mut().zip(&g) {
                            *av -= gv;
                        }
                    });
                }
                Record::Tanh { a, out } => {
                    add_into(&mut grads[*a], g.len(), |acc| {
                        for ((av, gv), y) in acc.iter_mut().zip(&g).zip(out.iter()) {
                            *av += gv * (1.0 - y * y);
                        }
                    });
                }
                Record::Sigmoid { a, out } => {
                    add_into(&mut grads[*a], g.len(), |acc| {
                        for ((av, gv), y) in acc.iter_mut().zip(&g).zip(out.iter()) {
                            *av += gv * y * (1.0 - y);
                        }
                    });
                }
                Record::Exp { a, out } => {
                    add_into(&mut grads[*a], g.len(), |acc| {
                        for ((av, gv), y) in acc.iter_mut().zip(&g).zip(out.iter()) {
                            *av += gv * y;
                        }
                    });
                }
                Record::Log { a, input } => {
                    add_into(&mut grads[*a], g.len(), |acc| {
                        for ((av, gv), x) in acc.iter_mut().zip(&g).zip(input.iter()) {
                            *av += gv / x;
                        }
                    });
                }
                Record::Sum { a, input_len } => {
                    let gv = g[0];
                    add_into(&mut grads[*a], *input_len, |acc| {
                        for av in acc.iter_mut() {
                            *av += gv;
                        }
                    });
                }
                Record::Matmul { a, b, m, k, n } => {
                    let (m, k, n) = (*m, *k, *n);
                    if let Some(an) = a.node {
                        // dA = dC · Bᵀ
                        add_into(&mut grads[an], m * k, |acc| {
                            for i in 0..m {
                                let grow = &g[i * n..(i + 1) * n];
                                let arow = &mut acc[i * k..(i + 1) * k];
                                for (p, av) in arow.iter_mut().enumerate() {
                                    let brow = &b.vals[p * n..(p + 1) * n];
                                    let mut dot = 0.0;
                                    for (gv, bv) in grow.iter().zip(brow) {
                                        dot += gv * bv;
                                    }
                                    *av += dot;
                                }
                            }
                        });
                    }
                    if let Some(bn) = b.node {
                        // dB = Aᵀ · dC
                        add_into(&mut grads[bn], k * n, |acc| {
                            for i in 0..m {
                                let grow = &g[i * n..(i + 1) * n];
                                let arow = &a.vals[i * k..(i + 1) * k];
                                for (p, &av) in arow.iter().enumerate() {
                                    if av != 0.0 {
                                        let brow = &mut acc[p * n..(p + 1) * n];
                                        for (bv, gv) in brow.iter_mut().zip(grow) {
                                            *bv += av * gv;
                                        }
                                    }
                                }
                            }
                        });
                    }
                }
                Record::SoftmaxRows { a, out, rows, cols } => {
                    let (rows, cols) = (*rows, *cols);
                    add_into(&mut grads[*a], rows * cols, |acc| {
                        for r in 0..rows {
                            let y = &out[r * cols..(r + 1) * cols];
                            let gy = &g[r * cols..(r + 1) * cols];
                            let inner: f64 = y.iter().zip(gy).map(|(yv, gv)| yv * gv).sum();
                            let arow = &mut acc[r * cols..(r + 1) * cols];
                            for ((av, yv), gv) in arow.iter_mut().zip(y).zip(gy) {
                                // masked positions have y = 0 and get no gradient
                                *av += yv * (gv - inner);
                            }
                        }
                    });
                }
                Record::Concat { parts, outer, inner } => {
                    let total_axis: usize = parts.iter().map(|(_, s)| s).sum();
                    let row_len = total_axis * inner;
                    for (part_idx, (node, axis_size)) in parts.iter().enumerate() {
                        let Some(pn) = node else { continue };
                        let offset: usize =
                            parts[..part_idx].iter().map(|(_, s)| s * inner).sum();
                        let slab = axis_size * inner;
                        add_into(&mut grads[*pn], outer * slab, |acc| {
                            for r in 0..*outer {
                                let src = &g[r * row_len + offset..r * row_len + offset + slab];
                                let dst = &mut acc[r * slab..(r + 1) * slab];
                                for (dv, sv) in dst.iter_mut().zip(src) {
                                    *dv += sv;
                                }
                            }
                        });
                    }
                }
                Record::Lookup {
                    table,
                    ids,
                    dim,
                    table_len,
                } => {
                    add_into(&mut grads[*table], *table_len, |acc| {
                        for (row, &id) in ids.iter().enumerate() {
                            let src = &g[row * dim..(row + 1) * dim];
                            let dst = &mut acc[id as usize * dim..(id as usize + 1) * dim];
                            for (dv, sv) in dst.iter_mut().zip(src) {
                                *dv += sv;
                            }
                        }
                    });
                }
                Record::Reshape { a } => {
                    add_into(&mut grads[*a], g.len(), |acc| {
                        for (av, gv) in acc.iter_mut().zip(&g) {
                            *av += gv;
                        }
                    });
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn add_into(slot: &mut Option<Vec<f64>>, len: usize, accumulate: impl FnOnce(&mut [f64])) {
    let buf = slot.get_or_insert_with(|| vec![0.0; len]);
    debug_assert_eq!(buf.len(), len);
    accumulate(buf);
}

fn matmul_vals(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av != 0.0 {
                let brow = &b[p * n..(p + 1) * n];
                for (ov, bv) in orow.iter_mut().zip(brow) {
                    *ov += av * bv;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: &[f64]) -> Tensor {
        Tensor::new(shape, v.to_vec()).unwrap()
    }

    #[test]
    fn add_elementwise() {
        let mut tape = Tape::new();
        let out = tape.add(&t(&[2], &[1.0, 2.0]), &t(&[2], &[3.0, 4.0])).unwrap();
        assert_eq!(out.values(), &[4.0, 6.0]);
    }

    #[test]
    fn add_shape_mismatch_is_dimension_error() {
        let mut tape = Tape::new();
        let err = tape.add(&t(&[2], &[1.0, 2.0]), &t(&[3], &[0.0; 3])).unwrap_err();
        assert!(matches!(err, SwdError::Dimension(_)));
    }

    #[test]
    fn tanh_of_zero_is_zero() {
        let mut tape = Tape::new();
        let out = tape.tanh(&t(&[3], &[0.0, 0.0, 0.0]));
        assert_eq!(out.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn exp_then_log_round_trips_zero() {
        let mut tape = Tape::new();
        let e = tape.exp(&t(&[1], &[0.0]));
        let l = tape.log(&e).unwrap();
        assert_eq!(l.values(), &[0.0]);
    }

    #[test]
    fn log_of_non_positive_is_domain_error() {
        let mut tape = Tape::new();
        let err = tape.log(&t(&[2], &[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, SwdError::Domain(_)));
    }

    #[test]
    fn matmul_identity() {
        let mut tape = Tape::new();
        let i2 = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let a = t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let out = tape.matmul(&i2, &a).unwrap();
        assert_eq!(out.values(), a.values());
    }

    #[test]
    fn matmul_dot_product() {
        // [[1,2]]·[[3],[4]] = [[11]]
        let mut tape = Tape::new();
        let out = tape
            .matmul(&t(&[1, 2], &[1.0, 2.0]), &t(&[2, 1], &[3.0, 4.0]))
            .unwrap();
        assert_eq!(out.shape(), &[1, 1]);
        assert_eq!(out.values(), &[11.0]);
    }

    #[test]
    fn matmul_zeros_annihilate() {
        let mut tape = Tape::new();
        let z = Tensor::zeros(&[2, 3]);
        let b = t(&[3, 4], &(0..12).map(|x| x as f64).collect::<Vec<_>>());
        let out = tape.matmul(&z, &b).unwrap();
        assert_eq!(out.shape(), &[2, 4]);
        assert!(out.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matmul_inner_mismatch() {
        let mut tape = Tape::new();
        let err = tape
            .matmul(&t(&[1, 2], &[1.0, 2.0]), &t(&[3, 1], &[1.0, 2.0, 3.0]))
            .unwrap_err();
        assert!(matches!(err, SwdError::Dimension(_)));
    }

    #[test]
    fn softmax_uniform_from_equal_logits() {
        let mut tape = Tape::new();
        let out = tape.softmax_rows(&t(&[1, 2], &[0.0, 0.0]), None).unwrap();
        assert_eq!(out.values(), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_closed_form() {
        let mut tape = Tape::new();
        let out = tape.softmax_rows(&t(&[1, 2], &[1.0, 0.0]), None).unwrap();
        assert!((out.values()[0] - 0.73106).abs() < 1e-5);
        assert!((out.values()[1] - 0.26894).abs() < 1e-5);
    }

    #[test]
    fn softmax_single_unmasked_position() {
        let mut tape = Tape::new();
        let mask = t(&[1, 2], &[1.0, 0.0]);
        let out = tape.softmax_rows(&t(&[1, 2], &[5.0, 3.0]), Some(&mask)).unwrap();
        assert_eq!(out.values(), &[1.0, 0.0]);
    }

    #[test]
    fn softmax_fully_masked_row_is_degenerate() {
        let mut tape = Tape::new();
        let mask = t(&[1, 2], &[0.0, 0.0]);
        let err = tape
            .softmax_rows(&t(&[1, 2], &[5.0, 3.0]), Some(&mask))
            .unwrap_err();
        assert!(matches!(err, SwdError::Degenerate(_)));
    }

    #[test]
    fn softmax_shift_invariance_is_exact() {
        let mut tape = Tape::new();
        let x = t(&[2, 3], &[0.3, -1.2, 2.0, 0.0, 0.5, -0.5]);
        let shifted = t(
            &[2, 3],
            &x.values().iter().map(|v| v + 7.25).collect::<Vec<_>>(),
        );
        let a = tape.softmax_rows(&x, None).unwrap();
        let b = tape.softmax_rows(&shifted, None).unwrap();
        for (av, bv) in a.values().iter().zip(b.values()) {
            assert!((av - bv).abs() < 1e-12);
        }
    }

    #[test]
    fn concat_basic_and_identity_element() {
        let mut tape = Tape::new();
        let out = tape
            .concat(&t(&[2], &[1.0, 2.0]), &t(&[1], &[3.0]), 0)
            .unwrap();
        assert_eq!(out.values(), &[1.0, 2.0, 3.0]);

        let empty = Tensor::new(&[0], vec![]).unwrap();
        let out = tape.concat(&empty, &t(&[1], &[7.0]), 0).unwrap();
        assert_eq!(out.values(), &[7.0]);
    }

    #[test]
    fn concat_gradient_partition() {
        let mut tape = Tape::new();
        let a = tape.watch(&t(&[2], &[1.0, 2.0]));
        let b = tape.watch(&t(&[1], &[3.0]));
        let cat = tape.concat(&a, &b, 0).unwrap();
        let loss = tape.sum(&cat);
        let grads = tape.backward(&loss).unwrap();
        assert_eq!(grads.get(&a).unwrap(), &[1.0, 1.0]);
        assert_eq!(grads.get(&b).unwrap(), &[1.0]);
    }

    #[test]
    fn concat_axis1() {
        let mut tape = Tape::new();
        let a = t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let b = t(&[2, 1], &[5.0, 6.0]);
        let out = tape.concat(&a, &b, 1).unwrap();
        assert_eq!(out.shape(), &[2, 3]);
        assert_eq!(out.values(), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
    }

    #[test]
    fn lookup_copies_rows_and_scatter_adds() {
        let mut tape = Tape::new();
        let table = t(&[3, 2], &[1.0, 0.0, 0.0, 1.0, 2.0, 2.0]);
        let out = tape.embedding_lookup(&table, &[0]).unwrap();
        assert_eq!(out.values(), &[1.0, 0.0]);

        let tracked = tape.watch(&table);
        let gathered = tape.embedding_lookup(&tracked, &[2, 2]).unwrap();
        let loss = tape.sum(&gathered);
        let grads = tape.backward(&loss).unwrap();
        assert_eq!(grads.get(&tracked).unwrap(), &[0.0, 0.0, 0.0, 0.0, 2.0, 2.0]);
    }

    #[test]
    fn lookup_empty_ids() {
        let mut tape = Tape::new();
        let table = t(&[3, 2], &[0.0; 6]);
        let out = tape.embedding_lookup(&table, &[]).unwrap();
        assert_eq!(out.shape(), &[0, 2]);
        assert!(out.values().is_empty());
    }

    #[test]
    fn lookup_out_of_range_is_vocab_error() {
        let mut tape = Tape::new();
        let table = t(&[3, 2], &[0.0; 6]);
        let err = tape.embedding_lookup(&table, &[3]).unwrap_err();
        assert!(matches!(err, SwdError::Vocab(_)));
    }

    #[test]
    fn backward_of_sum_is_ones() {
        let mut tape = Tape::new();
        let x = tape.watch(&t(&[3], &[0.4, -0.3, 2.0]));
        let loss = tape.sum(&x);
        let grads = tape.backward(&loss).unwrap();
        assert_eq!(grads.get(&x).unwrap(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_of_tanh_at_zero_is_ones() {
        let mut tape = Tape::new();
        let x = tape.watch(&Tensor::zeros(&[3]));
        let y = tape.tanh(&x);
        let loss = tape.sum(&y);
        let grads = tape.backward(&loss).unwrap();
        assert_eq!(grads.get(&x).unwrap(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_through_softmax_sum_is_zero() {
        let mut tape = Tape::new();
        let x = tape.watch(&t(&[1, 3], &[0.2, -0.4, 1.1]));
        let y = tape.softmax_rows(&x, None).unwrap();
        let loss = tape.sum(&y);
        let grads = tape.backward(&loss).unwrap();
        for g in grads.get(&x).unwrap() {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut tape = Tape::new();
        let x = tape.watch(&t(&[2], &[1.0, 2.0]));
        let y = tape.neg(&x);
        let err = tape.backward(&y).unwrap_err();
        assert!(matches!(err, SwdError::Dimension(_)));
    }

    #[test]
    fn fanout_accumulates_per_branch_gradients() {
        // x feeds two branches; its gradient is the sum of per-branch runs.
        let branch_a = |tape: &mut Tape, x: &Tensor| {
            let y = tape.tanh(x);
            tape.sum(&y)
        };
        let branch_b = |tape: &mut Tape, x: &Tensor| {
            let y = tape.mul(x, x).unwrap();
            tape.sum(&y)
        };
        let vals = t(&[3], &[0.3, -0.7, 0.9]);

        let mut tape = Tape::new();
        let x = tape.watch(&vals);
        let la = branch_a(&mut tape, &x);
        let lb = branch_b(&mut tape, &x);
        let loss = tape.add(&la, &lb).unwrap();
        let grads = tape.backward(&loss).unwrap();
        let combined = grads.get(&x).unwrap().to_vec();

        let mut tape_a = Tape::new();
        let xa = tape_a.watch(&vals);
        let la = branch_a(&mut tape_a, &xa);
        let ga = tape_a.backward(&la).unwrap().get(&xa).unwrap().to_vec();

        let mut tape_b = Tape::new();
        let xb = tape_b.watch(&vals);
        let lb = branch_b(&mut tape_b, &xb);
        let gb = tape_b.backward(&lb).unwrap().get(&xb).unwrap().to_vec();

        for i in 0..3 {
            assert!((combined[i] - (ga[i] + gb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn replay_is_bitwise_deterministic() {
        let run = || {
            let mut tape = Tape::new();
            let x = tape.watch(&t(&[2, 2], &[0.1, 0.7, -0.3, 0.5]));
            let w = t(&[2, 2], &[0.2, -0.1, 0.4, 0.9]);
            let h = tape.matmul(&x, &w).unwrap();
            let h = tape.tanh(&h);
            let s = tape.softmax_rows(&h, None).unwrap();
            let loss = tape.sum(&s);
            let grads = tape.backward(&loss).unwrap();
            (s.values().to_vec(), grads.get(&x).unwrap().to_vec())
        };
        let (v1, g1) = run();
        let (v2, g2) = run();
        assert_eq!(
            v1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            v2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(
            g1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            g2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn untracked_inputs_record_nothing() {
        let mut tape = Tape::new();
        let a = t(&[2], &[1.0, 2.0]);
        let b = t(&[2], &[3.0, 4.0]);
        let _ = tape.add(&a, &b).unwrap();
        let _ = tape.tanh(&a);
        assert_eq!(tape.num_nodes(), 0);
    }
}
