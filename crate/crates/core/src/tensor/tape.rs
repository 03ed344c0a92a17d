use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use super::kernels;
use super::Tensor;
use crate::error::{Error, Result};

/// Index of a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// Backward rule of a user-supplied primitive: `(upstream grad, input values) -> input grads`.
pub type BackwardFn = Box<dyn Fn(&Tensor, &[&Tensor]) -> Vec<Tensor>>;

/// Identifies the primitive that produced a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Primitive {
    Param,
    Constant,
    MatMul,
    MatMulNt,
    Add,
    Sub,
    Mul,
    Div,
    Scale,
    Relu,
    AddRow,
    MeanRows,
    L2Norm,
    InnerProduct,
    RowsDot,
    RowsNorm,
    ScaleRows,
    RecipGuarded,
    LogSoftmaxRows,
    StopGradient,
    GatherRows,
    ConcatCols,
    Custom,
}

enum Op {
    Param,
    Constant,
    MatMul(NodeId, NodeId),
    MatMulNt(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Scale(NodeId, f64),
    Relu(NodeId),
    AddRow(NodeId, NodeId),
    MeanRows(NodeId),
    L2Norm(NodeId),
    InnerProduct(NodeId, NodeId),
    RowsDot(NodeId, NodeId),
    RowsNorm(NodeId),
    ScaleRows(NodeId, NodeId),
    RecipGuarded(NodeId, f64),
    LogSoftmaxRows(NodeId),
    StopGradient(NodeId),
    GatherRows(NodeId, Vec<usize>),
    ConcatCols(NodeId, NodeId),
    Custom(Vec<NodeId>, BackwardFn),
}

impl Op {
    fn primitive(&self) -> Primitive {
        match self {
            Op::Param => Primitive::Param,
            Op::Constant => Primitive::Constant,
            Op::MatMul(..) => Primitive::MatMul,
            Op::MatMulNt(..) => Primitive::MatMulNt,
            Op::Add(..) => Primitive::Add,
            Op::Sub(..) => Primitive::Sub,
            Op::Mul(..) => Primitive::Mul,
            Op::Div(..) => Primitive::Div,
            Op::Scale(..) => Primitive::Scale,
            Op::Relu(..) => Primitive::Relu,
            Op::AddRow(..) => Primitive::AddRow,
            Op::MeanRows(..) => Primitive::MeanRows,
            Op::L2Norm(..) => Primitive::L2Norm,
            Op::InnerProduct(..) => Primitive::InnerProduct,
            Op::RowsDot(..) => Primitive::RowsDot,
            Op::RowsNorm(..) => Primitive::RowsNorm,
            Op::ScaleRows(..) => Primitive::ScaleRows,
            Op::RecipGuarded(..) => Primitive::RecipGuarded,
            Op::LogSoftmaxRows(..) => Primitive::LogSoftmaxRows,
            Op::StopGradient(..) => Primitive::StopGradient,
            Op::GatherRows(..) => Primitive::GatherRows,
            Op::ConcatCols(..) => Primitive::ConcatCols,
            Op::Custom(..) => Primitive::Custom,
        }
    }

    fn inputs(&self) -> Vec<NodeId> {
        match self {
            Op::Param | Op::Constant => vec![],
            Op::MatMul(a, b)
            | Op::MatMulNt(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::Div(a, b)
            | Op::AddRow(a, b)
            | Op::InnerProduct(a, b)
            | Op::RowsDot(a, b)
            | Op::ScaleRows(a, b)
            | Op::ConcatCols(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::Relu(a)
            | Op::MeanRows(a)
            | Op::L2Norm(a)
            | Op::RowsNorm(a)
            | Op::RecipGuarded(a, _)
            | Op::LogSoftmaxRows(a)
            | Op::StopGradient(a)
            | Op::GatherRows(a, _) => vec![*a],
            Op::Custom(ins, _) => ins.clone(),
        }
    }
}

struct Node {
    value: Rc<Tensor>,
    op: Op,
    tracked: bool,
}

/// One entry of the recorded computation, in recording (topological) order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub primitive: Primitive,
    pub inputs: Vec<NodeId>,
    pub output: NodeId,
}

/// Records primitives in execution order so that gradients can be swept backwards.
///
/// A tape is single-owner; build one per forward/backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape").field("len", &self.len()).finish()
    }
}

/// Handle to a value on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: NodeId,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &self.shape())
            .finish()
    }
}

/// Gradients of a scalar with respect to every tracked leaf of the tape.
#[derive(Debug, Clone, Default)]
pub struct GradientMap {
    grads: HashMap<NodeId, Tensor>,
}

impl GradientMap {
    pub fn get(&self, var: Var<'_>) -> Option<&Tensor> {
        self.grads.get(&var.id)
    }

    pub fn get_id(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &Tensor)> {
        self.grads.iter()
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::from_parts(
        a.shape().to_vec(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
    )
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tracked leaf: gradients are accumulated for it.
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push_node(Rc::new(value), Op::Param, true)
    }

    /// Untracked leaf.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push_node(Rc::new(value), Op::Constant, false)
    }

    /// Records a primitive whose forward value is computed by the caller and
    /// whose backward rule is `backward`.
    pub fn custom<'t>(
        &'t self,
        inputs: &[Var<'t>],
        value: Tensor,
        backward: BackwardFn,
    ) -> Result<Var<'t>> {
        let ids = inputs.iter().map(|v| v.id).collect();
        self.push(value, Op::Custom(ids, backward), "custom")
    }

    pub fn records(&self) -> Vec<Record> {
        self.nodes
            .borrow()
            .iter()
            .enumerate()
            .map(|(i, n)| Record {
                primitive: n.op.primitive(),
                inputs: n.op.inputs(),
                output: NodeId(i),
            })
            .collect()
    }

    fn push_node(&self, value: Rc<Tensor>, op: Op, tracked: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op, tracked });
        Var {
            tape: self,
            id: NodeId(nodes.len() - 1),
        }
    }

    fn push(&self, value: Tensor, op: Op, name: &'static str) -> Result<Var<'_>> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        let tracked = {
            let nodes = self.nodes.borrow();
            match &op {
                Op::StopGradient(_) => false,
                op => op.inputs().iter().any(|id| nodes[id.0].tracked),
            }
        };
        Ok(self.push_node(Rc::new(value), op, tracked))
    }

    fn value(&self, id: NodeId) -> Rc<Tensor> {
        Rc::clone(&self.nodes.borrow()[id.0].value)
    }

    fn is_tracked(&self, id: NodeId) -> bool {
        self.nodes.borrow()[id.0].tracked
    }

    fn backward_from(&self, loss: NodeId) -> Result<GradientMap> {
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.0];
        if root.value.len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                root.value.shape()
            )));
        }
        if !root.tracked {
            return Err(Error::Usage("backward called on an untracked value".into()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_parts(root.value.shape().to_vec(), vec![1.0]));
        let mut out = GradientMap::default();

        for i in (0..=loss.0).rev() {
            let node = &nodes[i];
            if !node.tracked {
                continue;
            }
            if matches!(node.op, Op::Param) {
                let g = grads[i]
                    .take()
                    .unwrap_or_else(|| Tensor::zeros(node.value.shape()));
                out.grads.insert(NodeId(i), g);
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let val = |id: NodeId| -> &Tensor { &nodes[id.0].value };
            let wants = |id: NodeId| nodes[id.0].tracked;
            let mut send = |id: NodeId, t: Tensor| {
                if !wants(id) {
                    return;
                }
                match &mut grads[id.0] {
                    Some(acc) => acc
                        .data_mut()
                        .iter_mut()
                        .zip(t.data())
                        .for_each(|(a, b)| *a += b),
                    slot => *slot = Some(t),
                }
            };
            match &node.op {
                Op::Param | Op::Constant | Op::StopGradient(_) => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (val(*a), val(*b));
                    let (m, k) = av.dims2();
                    let n = bv.cols();
                    if wants(*a) {
                        send(*a, Tensor::from_parts(vec![m, k], kernels::matmul_nt(g.data(), bv.data(), m, n, k)));
                    }
                    if wants(*b) {
                        send(*b, Tensor::from_parts(vec![k, n], kernels::matmul_tn(av.data(), g.data(), m, k, n)));
                    }
                }
                Op::MatMulNt(a, b) => {
                    let (av, bv) = (val(*a), val(*b));
                    let (m, k) = av.dims2();
                    let n = bv.rows();
                    if wants(*a) {
                        send(*a, Tensor::from_parts(vec![m, k], kernels::matmul_nn(g.data(), bv.data(), m, n, k)));
                    }
                    if wants(*b) {
                        send(*b, Tensor::from_parts(vec![n, k], kernels::matmul_tn(g.data(), av.data(), m, n, k)));
                    }
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::Sub(a, b) => {
                    send(*b, g.scaled(-1.0));
                    send(*a, g);
                }
                Op::Mul(a, b) => {
                    send(*a, zip_map(&g, val(*b), |g, y| g * y));
                    send(*b, zip_map(&g, val(*a), |g, x| g * x));
                }
                Op::Div(a, b) => {
                    let (av, bv) = (val(*a), val(*b));
                    send(*a, zip_map(&g, bv, |g, y| g / y));
                    let gb = Tensor::from_parts(
                        bv.shape().to_vec(),
                        g.data()
                            .iter()
                            .zip(av.data())
                            .zip(bv.data())
                            .map(|((g, x), y)| -g * x / (y * y))
                            .collect(),
                    );
                    send(*b, gb);
                }
                Op::Scale(a, c) => send(*a, g.scaled(*c)),
                Op::Relu(a) => send(*a, zip_map(&g, val(*a), |g, x| if x > 0.0 { g } else { 0.0 })),
                Op::AddRow(a, b) => {
                    let (m, n) = g.dims2();
                    let mut gb = vec![0.0; n];
                    for r in 0..m {
                        for (acc, x) in gb.iter_mut().zip(&g.data()[r * n..(r + 1) * n]) {
                            *acc += x;
                        }
                    }
                    send(*b, Tensor::from_parts(val(*b).shape().to_vec(), gb));
                    send(*a, g);
                }
                Op::MeanRows(a) => {
                    let av = val(*a);
                    let (m, n) = av.dims2();
                    let mut ga = Vec::with_capacity(m * n);
                    for _ in 0..m {
                        ga.extend(g.data().iter().map(|x| x / m as f64));
                    }
                    send(*a, Tensor::from_parts(av.shape().to_vec(), ga));
                }
                Op::L2Norm(a) => {
                    let av = val(*a);
                    let norm = node.value.data()[0];
                    let s = if norm > 0.0 { g.data()[0] / norm } else { 0.0 };
                    send(*a, av.scaled(s));
                }
                Op::InnerProduct(a, b) => {
                    let s = g.data()[0];
                    send(*a, val(*b).scaled(s));
                    send(*b, val(*a).scaled(s));
                }
                Op::RowsDot(a, b) => {
                    let (av, bv) = (val(*a), val(*b));
                    send(*a, scale_each_row(bv, g.data()));
                    send(*b, scale_each_row(av, g.data()));
                }
                Op::RowsNorm(a) => {
                    let av = val(*a);
                    let coef: Vec<f64> = g
                        .data()
                        .iter()
                        .zip(node.value.data())
                        .map(|(g, n)| if *n > 0.0 { g / n } else { 0.0 })
                        .collect();
                    send(*a, scale_each_row(av, &coef));
                }
                Op::ScaleRows(a, s) => {
                    let (av, sv) = (val(*a), val(*s));
                    if wants(*a) {
                        send(*a, scale_each_row(&g, sv.data()));
                    }
                    if wants(*s) {
                        let (m, n) = av.dims2();
                        let gs = (0..m)
                            .map(|r| kernels::dot(&g.data()[r * n..(r + 1) * n], &av.data()[r * n..(r + 1) * n]))
                            .collect();
                        send(*s, Tensor::from_parts(sv.shape().to_vec(), gs));
                    }
                }
                Op::RecipGuarded(a, thr) => {
                    send(*a, zip_map(&g, val(*a), |g, x| if x.abs() >= *thr { -g / (x * x) } else { 0.0 }));
                }
                Op::LogSoftmaxRows(a) => {
                    let (m, n) = g.dims2();
                    let y = node.value.data();
                    let mut ga = vec![0.0; m * n];
                    for r in 0..m {
                        let gr = &g.data()[r * n..(r + 1) * n];
                        let gsum: f64 = gr.iter().sum();
                        for j in 0..n {
                            ga[r * n + j] = gr[j] - y[r * n + j].exp() * gsum;
                        }
                    }
                    send(*a, Tensor::from_parts(val(*a).shape().to_vec(), ga));
                }
                Op::GatherRows(a, idx) => {
                    let av = val(*a);
                    let n = av.cols();
                    let mut ga = vec![0.0; av.len()];
                    for (r, &src) in idx.iter().enumerate() {
                        for j in 0..n {
                            ga[src * n + j] += g.data()[r * n + j];
                        }
                    }
                    send(*a, Tensor::from_parts(av.shape().to_vec(), ga));
                }
                Op::ConcatCols(a, b) => {
                    let (m, p) = val(*a).dims2();
                    let q = val(*b).cols();
                    let mut ga = Vec::with_capacity(m * p);
                    let mut gb = Vec::with_capacity(m * q);
                    for r in 0..m {
                        let row = &g.data()[r * (p + q)..(r + 1) * (p + q)];
                        ga.extend_from_slice(&row[..p]);
                        gb.extend_from_slice(&row[p..]);
                    }
                    send(*a, Tensor::from_parts(val(*a).shape().to_vec(), ga));
                    send(*b, Tensor::from_parts(val(*b).shape().to_vec(), gb));
                }
                Op::Custom(ins, rule) => {
                    let vals: Vec<&Tensor> = ins.iter().map(|id| val(*id)).collect();
                    let gs = rule(&g, &vals);
                    for (id, gi) in ins.iter().zip(gs) {
                        if gi.shape() != val(*id).shape() {
                            return Err(Error::dim("custom backward", "gradient shape differs from input"));
                        }
                        send(*id, gi);
                    }
                }
            }
        }
        // Leaves recorded after the loss still get an entry.
        for (i, node) in nodes.iter().enumerate().skip(loss.0 + 1) {
            if matches!(node.op, Op::Param) {
                out.grads.insert(NodeId(i), Tensor::zeros(node.value.shape()));
            }
        }
        Ok(out)
    }
}

fn scale_each_row(a: &Tensor, s: &[f64]) -> Tensor {
    let (m, n) = a.dims2();
    let mut out = a.data().to_vec();
    for r in 0..m {
        out[r * n..(r + 1) * n].iter_mut().for_each(|x| *x *= s[r]);
    }
    Tensor::from_parts(a.shape().to_vec(), out)
}

impl<'t> Var<'t> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Rc<Tensor> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    pub fn is_tracked(&self) -> bool {
        self.tape.is_tracked(self.id)
    }

    /// Scalar value of a one-element var.
    pub fn item(&self) -> Result<f64> {
        self.value().item()
    }

    pub fn backward(&self) -> Result<GradientMap> {
        self.tape.backward_from(self.id)
    }

    fn same_tape(&self, other: &Var<'t>) {
        assert!(std::ptr::eq(self.tape, other.tape), "vars belong to different tapes");
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(&other);
        let (a, b) = (self.value(), other.value());
        let (m, k) = a.dims2();
        let (k2, n) = b.dims2();
        if k != k2 {
            return Err(Error::dim("matmul", format!("{m}x{k} · {k2}x{n}")));
        }
        let out = Tensor::from_parts(vec![m, n], kernels::matmul_nn(a.data(), b.data(), m, k, n));
        self.tape.push(out, Op::MatMul(self.id, other.id), "matmul")
    }

    /// `self · otherᵀ`
    pub fn matmul_nt(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(&other);
        let (a, b) = (self.value(), other.value());
        let (m, k) = a.dims2();
        let (n, k2) = b.dims2();
        if k != k2 {
            return Err(Error::dim("matmul_nt", format!("{m}x{k} · ({n}x{k2})ᵀ")));
        }
        let out = Tensor::from_parts(vec![m, n], kernels::matmul_nt(a.data(), b.data(), m, k, n));
        self.tape.push(out, Op::MatMulNt(self.id, other.id), "matmul_nt")
    }

    fn binary(self, other: Var<'t>, name: &'static str, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var<'t>> {
        self.same_tape(&other);
        let (a, b) = (self.value(), other.value());
        same_shape(name, &a, &b)?;
        self.tape.push(zip_map(&a, &b, f), op, name)
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "add", |x, y| x + y, Op::Add(self.id, other.id))
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "sub", |x, y| x - y, Op::Sub(self.id, other.id))
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "mul", |x, y| x * y, Op::Mul(self.id, other.id))
    }

    pub fn div(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, "div", |x, y| x / y, Op::Div(self.id, other.id))
    }

    pub fn scale(self, c: f64) -> Result<Var<'t>> {
        let out = self.value().scaled(c);
        self.tape.push(out, Op::Scale(self.id, c), "scale")
    }

    pub fn neg(self) -> Result<Var<'t>> {
        self.scale(-1.0)
    }

    pub fn relu(self) -> Result<Var<'t>> {
        let out = self.value().map(|x| if x > 0.0 { x } else { 0.0 });
        self.tape.push(out, Op::Relu(self.id), "relu")
    }

    /// Adds a length-`n` row vector to every row of an `[m×n]` matrix.
    pub fn add_row(self, row: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(&row);
        let (a, b) = (self.value(), row.value());
        let (m, n) = a.dims2();
        if b.len() != n {
            return Err(Error::dim("add_row", format!("{m}x{n} + row of {}", b.len())));
        }
        let mut out = a.data().to_vec();
        for r in 0..m {
            out[r * n..(r + 1) * n].iter_mut().zip(b.data()).for_each(|(x, y)| *x += y);
        }
        let out = Tensor::from_parts(a.shape().to_vec(), out);
        self.tape.push(out, Op::AddRow(self.id, row.id), "add_row")
    }

    /// Mean over the batch axis; `[m×n] -> [n]`.
    pub fn mean_rows(self) -> Result<Var<'t>> {
        let a = self.value();
        if a.shape().len() != 2 {
            return Err(Error::dim("mean_rows", format!("needs a matrix, got {:?}", a.shape())));
        }
        let (m, n) = a.dims2();
        let mut out = vec![0.0; n];
        for r in 0..m {
            out.iter_mut().zip(a.row(r)).for_each(|(o, x)| *o += x);
        }
        out.iter_mut().for_each(|o| *o /= m as f64);
        self.tape.push(Tensor::from_parts(vec![n], out), Op::MeanRows(self.id), "mean_rows")
    }

    /// Euclidean (Frobenius) norm over all entries; gradient at zero is zero.
    pub fn l2_norm(self) -> Result<Var<'t>> {
        let n = self.value().norm();
        self.tape.push(Tensor::scalar(n), Op::L2Norm(self.id), "l2_norm")
    }

    /// `⟨self, other⟩` over all entries.
    pub fn inner_product(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(&other);
        let (a, b) = (self.value(), other.value());
        if a.len() != b.len() {
            return Err(Error::dim("inner_product", format!("{:?} vs {:?}", a.shape(), b.shape())));
        }
        let out = Tensor::scalar(a.dot(&b));
        self.tape.push(out, Op::InnerProduct(self.id, other.id), "inner_product")
    }

    /// Per-row inner products; `[m×n], [m×n] -> [m×1]`.
    pub fn rows_dot(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(&other);
        let (a, b) = (self.value(), other.value());
        if a.dims2() != b.dims2() {
            return Err(Error::dim("rows_dot", format!("{:?} vs {:?}", a.shape(), b.shape())));
        }
        let m = a.rows();
        let out = (0..m).map(|r| kernels::dot(a.row(r), b.row(r))).collect();
        self.tape.push(Tensor::from_parts(vec![m, 1], out), Op::RowsDot(self.id, other.id), "rows_dot")
    }

    /// Per-row Euclidean norms; `[m×n] -> [m×1]`.
    pub fn rows_norm(self) -> Result<Var<'t>> {
        let a = self.value();
        let m = a.rows();
        let out = (0..m).map(|r| kernels::dot(a.row(r), a.row(r)).sqrt()).collect();
        self.tape.push(Tensor::from_parts(vec![m, 1], out), Op::RowsNorm(self.id), "rows_norm")
    }

    /// Multiplies row `i` by `s[i]`; `s` has one entry per row.
    pub fn scale_rows(self, s: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(&s);
        let (a, sv) = (self.value(), s.value());
        if sv.len() != a.rows() {
            return Err(Error::dim("scale_rows", format!("{:?} by {:?}", a.shape(), sv.shape())));
        }
        let out = scale_each_row(&a, sv.data());
        self.tape.push(out, Op::ScaleRows(self.id, s.id), "scale_rows")
    }

    /// `1/x` where `|x| >= threshold`, else `0` with zero gradient.
    pub fn recip_guarded(self, threshold: f64) -> Result<Var<'t>> {
        let out = self.value().map(|x| if x.abs() >= threshold { 1.0 / x } else { 0.0 });
        self.tape.push(out, Op::RecipGuarded(self.id, threshold), "recip_guarded")
    }

    pub fn log_softmax_rows(self) -> Result<Var<'t>> {
        let a = self.value();
        let (r, c) = a.dims2();
        let out = Tensor::from_parts(a.shape().to_vec(), kernels::log_softmax_rows(a.data(), r, c));
        self.tape.push(out, Op::LogSoftmaxRows(self.id), "log_softmax_rows")
    }

    /// Same value, treated as a constant by [`Var::backward`].
    pub fn stop_gradient(self) -> Result<Var<'t>> {
        let out = (*self.value()).clone();
        self.tape.push(out, Op::StopGradient(self.id), "stop_gradient")
    }

    pub fn gather_rows(self, idx: &[usize]) -> Result<Var<'t>> {
        let out = self.value().select_rows(idx)?;
        self.tape.push(out, Op::GatherRows(self.id, idx.to_vec()), "gather_rows")
    }

    /// `[m×p] ++ [m×q] -> [m×(p+q)]`
    pub fn concat_cols(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(&other);
        let (a, b) = (self.value(), other.value());
        let ((m, p), (m2, q)) = (a.dims2(), b.dims2());
        if m != m2 {
            return Err(Error::dim("concat_cols", format!("{m} rows vs {m2} rows")));
        }
        let mut out = Vec::with_capacity(m * (p + q));
        for r in 0..m {
            out.extend_from_slice(a.row(r));
            out.extend_from_slice(b.row(r));
        }
        let out = Tensor::from_parts(vec![m, p + q], out);
        self.tape.push(out, Op::ConcatCols(self.id, other.id), "concat_cols")
    }
}
