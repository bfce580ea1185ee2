//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every primitive applied during a forward pass. Nodes are
//! appended in evaluation order, so the tape is topologically sorted by
//! construction and [`Tape::backward`] is a single reverse sweep.
//!
//! Parameters live in a [`ParamStore`] that the tape borrows read-only; a
//! parameter enters the graph at most once per tape (see [`Tape::param`]), so
//! repeated uses such as the embedding table at every decoding step accumulate
//! into one gradient.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{self, Tensor};

/// Handle to a parameter in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named, ordered collection of parameter tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    by_name: BTreeMap<String, usize>,
}

impl ParamStore {
    pub const fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
            by_name: BTreeMap::new(),
        }
    }

    /// Registers a parameter. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name}")));
        }
        let id = self.tensors.len();
        self.by_name.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(value);
        Ok(ParamId(id))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn bitwise_eq(&self, other: &ParamStore) -> bool {
        self.names == other.names
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.bitwise_eq(b))
    }
}

/// Gradients for every parameter of a store, shapes identical to the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    grads: Vec<Tensor>,
}

impl GradientSet {
    pub fn zeros_like(store: &ParamStore) -> Self {
        GradientSet {
            grads: store.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.grads.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &GradientSet) -> Result<()> {
        if self.grads.len() != other.grads.len() {
            return Err(Error::dim(
                "gradient accumulate",
                &[self.grads.len()],
                &[other.grads.len()],
            ));
        }
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.axpy(1.0, b);
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.grads.iter_mut().for_each(|g| g.scale_in_place(factor));
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().map(Tensor::norm_sq).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Tensor::is_finite)
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    MatVec(Var, Var),
    MatVecT(Var, Var),
    Add(Var, Var),
    Hadamard(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Stack(Vec<Var>),
    Embedding { table: Var, index: usize },
    Sum(Var),
    AddScalars(Vec<Var>),
    Scale(Var, f64),
    Nll { logits: Var, target: usize },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::MatVec(..) => "matvec",
            Op::MatVecT(..) => "matvec_t",
            Op::Add(..) => "add",
            Op::Hadamard(..) => "hadamard",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Softmax(_) => "softmax",
            Op::Concat(_) => "concat",
            Op::Slice { .. } => "slice",
            Op::Stack(_) => "stack",
            Op::Embedding { .. } => "embedding_lookup",
            Op::Sum(_) => "sum",
            Op::AddScalars(_) => "add_scalars",
            Op::Scale(..) => "scale",
            Op::Nll { .. } => "nll",
        }
    }
}

#[derive(Clone, Debug)]
enum Value {
    Owned(Tensor),
    Param(ParamId),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Value,
}

/// Elementwise activation kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

/// Records primitive applications for one forward pass.
pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: BTreeMap<ParamId, Var>,
    check_finite: bool,
}

static EMPTY_STORE: ParamStore = ParamStore::new();

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
            param_nodes: BTreeMap::new(),
            check_finite: cfg!(debug_assertions),
        }
    }

    /// Enables or disables the NaN/Inf check applied to every new node.
    pub fn with_finite_check(mut self, on: bool) -> Self {
        self.check_finite = on;
        self
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(id) => self.params.get(*id),
        }
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v).data()[0]
    }

    fn push(&mut self, op: Op, value: Tensor) -> Result<Var> {
        if self.check_finite && !value.is_finite() {
            return Err(Error::NonFinite { op: op.name() });
        }
        self.nodes.push(Node {
            op,
            value: Value::Owned(value),
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// A constant input; gradients do not flow out of it.
    pub fn input(&mut self, value: Tensor) -> Result<Var> {
        self.push(Op::Input, value)
    }

    /// The node for a parameter, created on first use and shared afterwards.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: Value::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = ta
            .dims2()
            .ok_or_else(|| Error::dim("matmul", ta.shape(), tb.shape()))?;
        let (k2, n) = tb
            .dims2()
            .ok_or_else(|| Error::dim("matmul", ta.shape(), tb.shape()))?;
        if k != k2 {
            return Err(Error::dim("matmul", ta.shape(), tb.shape()));
        }
        let (ad, bd) = (ta.data(), tb.data());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let aip = ad[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let brow = &bd[p * n..(p + 1) * n];
                for (o, &b) in out[i * n..(i + 1) * n].iter_mut().zip(brow) {
                    *o += aip * b;
                }
            }
        }
        let value = Tensor::matrix(m, n, out)?;
        self.push(Op::MatMul(a, b), value)
    }

    /// `A x` for `A: [m×n]`, `x: [n]`.
    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let (ta, tx) = (self.value(a), self.value(x));
        let (m, n) = match ta.dims2() {
            Some(d) if tx.is_vector() && tx.len() == d.1 => d,
            _ => return Err(Error::dim("matvec", ta.shape(), tx.shape())),
        };
        let xd = tx.data();
        let out = (0..m)
            .map(|i| dot(&ta.data()[i * n..(i + 1) * n], xd))
            .collect();
        self.push(Op::MatVec(a, x), Tensor::vector(out))
    }

    /// `Aᵀ x` for `A: [m×n]`, `x: [m]`.
    pub fn matvec_t(&mut self, a: Var, x: Var) -> Result<Var> {
        let (ta, tx) = (self.value(a), self.value(x));
        let (m, n) = match ta.dims2() {
            Some(d) if tx.is_vector() && tx.len() == d.0 => d,
            _ => return Err(Error::dim("matvec_t", ta.shape(), tx.shape())),
        };
        let mut out = vec![0.0; n];
        for (i, &xi) in tx.data().iter().enumerate().take(m) {
            for (o, &aij) in out.iter_mut().zip(&ta.data()[i * n..(i + 1) * n]) {
                *o += aij * xi;
            }
        }
        self.push(Op::MatVecT(a, x), Tensor::vector(out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_same("add", a, b, |x, y| x + y)?;
        self.push(Op::Add(a, b), value)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_same("hadamard", a, b, |x, y| x * y)?;
        self.push(Op::Hadamard(a, b), value)
    }

    fn zip_same(&self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::dim(op, ta.shape(), tb.shape()));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn activation(&mut self, kind: Activation, x: Var) -> Result<Var> {
        match kind {
            Activation::Sigmoid => self.sigmoid(x),
            Activation::Tanh => self.tanh(x),
        }
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).map(tensor::sigmoid);
        self.push(Op::Sigmoid(x), value)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).map(f64::tanh);
        self.push(Op::Tanh(x), value)
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let tx = self.value(x);
        if !tx.is_vector() || tx.is_empty() {
            return Err(Error::Domain(format!(
                "softmax needs a non-empty vector, got shape {:?}",
                tx.shape()
            )));
        }
        let value = Tensor::vector(tensor::softmax_slice(tx.data()));
        self.push(Op::Softmax(x), value)
    }

    /// Concatenates vectors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Domain("concat of an empty list".into()));
        }
        let mut out = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if !t.is_vector() {
                return Err(Error::dim("concat", t.shape(), &[]));
            }
            out.extend_from_slice(t.data());
        }
        self.push(Op::Concat(parts.to_vec()), Tensor::vector(out))
    }

    /// Contiguous sub-vector `x[start..start + len]`.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let tx = self.value(x);
        if !tx.is_vector() || start + len > tx.len() {
            return Err(Error::dim("slice", tx.shape(), &[start, len]));
        }
        let value = Tensor::vector(tx.data()[start..start + len].to_vec());
        self.push(Op::Slice { src: x, start }, value)
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Domain("stack of an empty list".into()))?;
        let width = self.value(*first).len();
        let mut data = Vec::with_capacity(width * rows.len());
        for &r in rows {
            let t = self.value(r);
            if !t.is_vector() || t.len() != width {
                return Err(Error::dim("stack", &[width], t.shape()));
            }
            data.extend_from_slice(t.data());
        }
        let value = Tensor::matrix(rows.len(), width, data)?;
        self.push(Op::Stack(rows.to_vec()), value)
    }

    /// Row `index` of a `[V×d]` table as a vector.
    pub fn embedding(&mut self, table: Var, index: usize) -> Result<Var> {
        let t = self.value(table);
        let (rows, _) = t
            .dims2()
            .ok_or_else(|| Error::dim("embedding_lookup", t.shape(), &[index]))?;
        if index >= rows {
            return Err(Error::Index {
                op: "embedding_lookup",
                index,
                len: rows,
            });
        }
        let value = Tensor::vector(t.row(index).to_vec());
        self.push(Op::Embedding { table, index }, value)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let value = Tensor::scalar(self.value(x).sum());
        self.push(Op::Sum(x), value)
    }

    /// Sum of scalar nodes.
    pub fn add_scalars(&mut self, xs: &[Var]) -> Result<Var> {
        let mut total = 0.0;
        for &x in xs {
            let t = self.value(x);
            if t.len() != 1 {
                return Err(Error::dim("add_scalars", t.shape(), &[1]));
            }
            total += t.data()[0];
        }
        self.push(Op::AddScalars(xs.to_vec()), Tensor::scalar(total))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        let value = self.value(x).map(|v| v * factor);
        self.push(Op::Scale(x, factor), value)
    }

    /// Negative log-likelihood `-log softmax(logits)[target]` as a scalar.
    pub fn nll(&mut self, logits: Var, target: usize) -> Result<Var> {
        let t = self.value(logits);
        if !t.is_vector() || t.is_empty() {
            return Err(Error::dim("nll", t.shape(), &[target]));
        }
        if target >= t.len() {
            return Err(Error::Index {
                op: "nll",
                index: target,
                len: t.len(),
            });
        }
        let value = tensor::log_sum_exp(t.data()) - t.data()[target];
        self.push(Op::Nll { logits, target }, Tensor::scalar(value))
    }

    /// Reverse sweep from a scalar node. Every parameter of the store receives
    /// a gradient; parameters the output does not depend on get zeros.
    pub fn backward(&self, output: Var) -> Result<GradientSet> {
        let out = self.value(output);
        if out.len() != 1 {
            return Err(Error::Domain(format!(
                "backward needs a scalar output, got shape {:?}",
                out.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Tensor::filled(out.shape(), 1.0));
        let mut result = GradientSet::zeros_like(self.params);

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let y = self.value(Var(idx));
            match &node.op {
                Op::Input => {}
                Op::Param(id) => result.grads[id.0].axpy(1.0, &g),
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k) = ta.dims2().unwrap();
                    let n = tb.shape()[1];
                    let (ad, bd, gd) = (ta.data(), tb.data(), g.data());
                    let mut ga = vec![0.0; m * k];
                    let mut gb = vec![0.0; k * n];
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += gd[i * n + j] * bd[p * n + j];
                                gb[p * n + j] += ad[i * k + p] * gd[i * n + j];
                            }
                            ga[i * k + p] = s;
                        }
                    }
                    add_grad(&mut grads, *a, Tensor::matrix(m, k, ga)?);
                    add_grad(&mut grads, *b, Tensor::matrix(k, n, gb)?);
                }
                Op::MatVec(a, x) => {
                    let (ta, tx) = (self.value(*a), self.value(*x));
                    let (m, n) = ta.dims2().unwrap();
                    let gd = g.data();
                    let mut ga = vec![0.0; m * n];
                    let mut gx = vec![0.0; n];
                    for i in 0..m {
                        let gi = gd[i];
                        let arow = &ta.data()[i * n..(i + 1) * n];
                        for j in 0..n {
                            ga[i * n + j] = gi * tx.data()[j];
                            gx[j] += arow[j] * gi;
                        }
                    }
                    add_grad(&mut grads, *a, Tensor::matrix(m, n, ga)?);
                    add_grad(&mut grads, *x, Tensor::vector(gx));
                }
                Op::MatVecT(a, x) => {
                    let (ta, tx) = (self.value(*a), self.value(*x));
                    let (m, n) = ta.dims2().unwrap();
                    let gd = g.data();
                    let mut ga = vec![0.0; m * n];
                    let mut gx = vec![0.0; m];
                    for i in 0..m {
                        let xi = tx.data()[i];
                        let arow = &ta.data()[i * n..(i + 1) * n];
                        gx[i] = dot(arow, gd);
                        for j in 0..n {
                            ga[i * n + j] = xi * gd[j];
                        }
                    }
                    add_grad(&mut grads, *a, Tensor::matrix(m, n, ga)?);
                    add_grad(&mut grads, *x, Tensor::vector(gx));
                }
                Op::Add(a, b) => {
                    add_grad(&mut grads, *b, g.clone());
                    add_grad(&mut grads, *a, g);
                }
                Op::Hadamard(a, b) => {
                    let ga = zip(&g, self.value(*b), |g, b| g * b);
                    let gb = zip(&g, self.value(*a), |g, a| g * a);
                    add_grad(&mut grads, *a, ga);
                    add_grad(&mut grads, *b, gb);
                }
                Op::Sigmoid(x) => {
                    add_grad(&mut grads, *x, zip(&g, y, |g, s| g * s * (1.0 - s)));
                }
                Op::Tanh(x) => {
                    add_grad(&mut grads, *x, zip(&g, y, |g, t| g * (1.0 - t * t)));
                }
                Op::Softmax(x) => {
                    let gy = dot(g.data(), y.data());
                    add_grad(&mut grads, *x, zip(&g, y, |g, p| p * (g - gy)));
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.value(p).len();
                        let piece = Tensor::vector(g.data()[offset..offset + len].to_vec());
                        add_grad(&mut grads, p, piece);
                        offset += len;
                    }
                }
                Op::Slice { src, start } => {
                    let mut full = Tensor::zeros(self.value(*src).shape());
                    full.data_mut()[*start..*start + g.len()].copy_from_slice(g.data());
                    add_grad(&mut grads, *src, full);
                }
                Op::Stack(rows) => {
                    let width = y.shape()[1];
                    for (r, &v) in rows.iter().enumerate() {
                        let piece = Tensor::vector(g.data()[r * width..(r + 1) * width].to_vec());
                        add_grad(&mut grads, v, piece);
                    }
                }
                Op::Embedding { table, index } => {
                    let shape = self.value(*table).shape().to_vec();
                    let slot = grads[table.0].get_or_insert_with(|| Tensor::zeros(&shape));
                    let width = shape[1];
                    for (dst, &src) in slot.data_mut()[index * width..(index + 1) * width]
                        .iter_mut()
                        .zip(g.data())
                    {
                        *dst += src;
                    }
                }
                Op::Sum(x) => {
                    let shape = self.value(*x).shape().to_vec();
                    add_grad(&mut grads, *x, Tensor::filled(&shape, g.data()[0]));
                }
                Op::AddScalars(xs) => {
                    for &x in xs {
                        add_grad(&mut grads, x, g.clone());
                    }
                }
                Op::Scale(x, factor) => {
                    add_grad(&mut grads, *x, g.map(|v| v * factor));
                }
                Op::Nll { logits, target } => {
                    let gv = g.data()[0];
                    let mut p = tensor::softmax_slice(self.value(*logits).data());
                    p[*target] -= 1.0;
                    p.iter_mut().for_each(|v| *v *= gv);
                    add_grad(&mut grads, *logits, Tensor::vector(p));
                }
            }
        }
        Ok(result)
    }
}

impl Default for Tape<'static> {
    /// A tape with no parameters, for computations on plain inputs.
    fn default() -> Self {
        Tape::new(&EMPTY_STORE)
    }
}

fn add_grad(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.axpy(1.0, &g),
        slot @ None => *slot = Some(g),
    }
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("shapes already validated")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
