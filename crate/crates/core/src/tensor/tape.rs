use super::{Gradients, Matrix, ParamId, ParamSet, TensorError};
use ndarray::{s, Array2, Axis, Zip};

/// Probabilities below this are clamped before taking logs in
/// [`Tape::cross_entropy`].
pub const LOG_FLOOR: f64 = 1e-12;

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMulT(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Matrix),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    OneMinus(Var),
    Square(Var),
    Gather(Var, Vec<usize>),
    Concat(Vec<Var>),
    Slice(Var, usize, usize),
    Softmax(Var),
    CrossEntropy(Matrix, Var),
    Entropy(Var),
    LogPick(Var, Vec<usize>),
    WeightedSum(Var, Matrix),
    Sum(Var),
}

struct Node {
    value: Option<Matrix>,
    op: Op,
}

/// Computation record for reverse-mode differentiation.
///
/// Every value is a 2-D matrix whose leading axis is the batch. Parameters
/// are borrowed from a [`ParamSet`] and never copied onto the tape.
pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(m), _) => m,
            (None, Op::Param(id)) => self.params.get(*id),
            _ => unreachable!("node without value"),
        }
    }

    /// The single entry of a `1 x 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[[0, 0]]
    }

    pub fn input(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).dim()
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<(), TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    /// `x · wᵀ` for `x: n×k`, `w: m×k`.
    pub fn matmul_t(&mut self, x: Var, w: Var) -> Result<Var, TensorError> {
        let (_, k) = self.shape(x);
        let (_, kw) = self.shape(w);
        if k != kw {
            return Err(TensorError::ShapeMismatch(format!(
                "matmul: input width {k} vs weight width {kw}"
            )));
        }
        let y = self.value(x).dot(&self.value(w).t());
        Ok(self.push(y, Op::MatMulT(x, w)))
    }

    /// Adds a `1×m` row to every row of `x`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, TensorError> {
        let (_, m) = self.shape(x);
        if self.shape(bias) != (1, m) {
            return Err(TensorError::ShapeMismatch(format!(
                "bias {:?} for width {m}",
                self.shape(bias)
            )));
        }
        let y = self.value(x) + self.value(bias);
        Ok(self.push(y, Op::AddBias(x, bias)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape(a, b, "add")?;
        let y = self.value(a) + self.value(b);
        Ok(self.push(y, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape(a, b, "sub")?;
        let y = self.value(a) - self.value(b);
        Ok(self.push(y, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape(a, b, "mul")?;
        let y = self.value(a) * self.value(b);
        Ok(self.push(y, Op::Mul(a, b)))
    }

    /// Elementwise product with a constant (no gradient to `c`).
    pub fn mul_const(&mut self, x: Var, c: Matrix) -> Result<Var, TensorError> {
        if self.shape(x) != c.dim() {
            return Err(TensorError::ShapeMismatch("mul_const".into()));
        }
        let y = self.value(x) * &c;
        Ok(self.push(y, Op::MulConst(x, c)))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let y = self.value(x) * factor;
        self.push(y, Op::Scale(x, factor))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let y = self.value(x).mapv(f64::tanh);
        self.push(y, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let y = self.value(x).mapv(|v| 1.0 / (1.0 + (-v).exp()));
        self.push(y, Op::Sigmoid(x))
    }

    pub fn one_minus(&mut self, x: Var) -> Var {
        let y = self.value(x).mapv(|v| 1.0 - v);
        self.push(y, Op::OneMinus(x))
    }

    pub fn square(&mut self, x: Var) -> Var {
        let y = self.value(x).mapv(|v| v * v);
        self.push(y, Op::Square(x))
    }

    /// Rows `indices` of `table`; gradient flows only to those rows.
    pub fn gather(&mut self, table: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let (rows, cols) = self.shape(table);
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(TensorError::IndexOutOfRange { index: bad, rows });
        }
        let t = self.value(table);
        let mut y = Array2::zeros((indices.len(), cols));
        for (r, &i) in indices.iter().enumerate() {
            y.row_mut(r).assign(&t.row(i));
        }
        Ok(self.push(y, Op::Gather(table, indices.to_vec())))
    }

    /// Column-wise concatenation of equally tall matrices.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let n = self.shape(parts[0]).0;
        if parts.iter().any(|&p| self.shape(p).0 != n) {
            return Err(TensorError::ShapeMismatch("concat: row counts differ".into()));
        }
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let y = ndarray::concatenate(Axis(1), &views).expect("checked shapes");
        Ok(self.push(y, Op::Concat(parts.to_vec())))
    }

    /// Columns `start..end`.
    pub fn slice(&mut self, x: Var, start: usize, end: usize) -> Result<Var, TensorError> {
        if end > self.shape(x).1 || start > end {
            return Err(TensorError::ShapeMismatch(format!("slice {start}..{end}")));
        }
        let y = self.value(x).slice(s![.., start..end]).to_owned();
        Ok(self.push(y, Op::Slice(x, start, end)))
    }

    /// Row-wise softmax, shifted by the row maximum.
    pub fn softmax(&mut self, x: Var) -> Var {
        let mut y = self.value(x).clone();
        for mut row in y.rows_mut() {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            row.mapv_inplace(|v| (v - max).exp());
            let total = row.sum();
            row.mapv_inplace(|v| v / total);
        }
        self.push(y, Op::Softmax(x))
    }

    /// Per-row `-Σ_j t_j ln max(p_j, LOG_FLOOR)`, shape `n×1`.
    pub fn cross_entropy(&mut self, target: Matrix, predicted: Var) -> Result<Var, TensorError> {
        if target.dim() != self.shape(predicted) {
            return Err(TensorError::ShapeMismatch("cross_entropy target".into()));
        }
        let p = self.value(predicted);
        let mut y = Array2::zeros((p.nrows(), 1));
        for (i, (t_row, p_row)) in target.rows().into_iter().zip(p.rows()).enumerate() {
            let mut acc = 0.0;
            for (&t, &q) in t_row.iter().zip(p_row.iter()) {
                if t != 0.0 {
                    acc -= t * q.max(LOG_FLOOR).ln();
                }
            }
            y[[i, 0]] = acc;
        }
        Ok(self.push(y, Op::CrossEntropy(target, predicted)))
    }

    /// Per-row `-Σ p ln p` with `0 ln 0 = 0`, shape `n×1`.
    pub fn entropy(&mut self, p: Var) -> Var {
        let pv = self.value(p);
        let mut y = Array2::zeros((pv.nrows(), 1));
        for (i, row) in pv.rows().into_iter().enumerate() {
            y[[i, 0]] = -row.iter().filter(|&&q| q > 0.0).map(|&q| q * q.ln()).sum::<f64>();
        }
        self.push(y, Op::Entropy(p))
    }

    /// Per-row `ln p[i, index_i]`, shape `n×1`.
    pub fn log_pick(&mut self, p: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let (n, m) = self.shape(p);
        if indices.len() != n {
            return Err(TensorError::ShapeMismatch("log_pick: one index per row".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(TensorError::IndexOutOfRange { index: bad, rows: m });
        }
        let pv = self.value(p);
        let y = Array2::from_shape_fn((n, 1), |(i, _)| pv[[i, indices[i]]].ln());
        Ok(self.push(y, Op::LogPick(p, indices.to_vec())))
    }

    /// `Σ x ⊙ c` as a `1×1` node.
    pub fn weighted_sum(&mut self, x: Var, c: Matrix) -> Result<Var, TensorError> {
        if self.shape(x) != c.dim() {
            return Err(TensorError::ShapeMismatch("weighted_sum".into()));
        }
        let total = (self.value(x) * &c).sum();
        Ok(self.push(Array2::from_elem((1, 1), total), Op::WeightedSum(x, c)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).sum();
        self.push(Array2::from_elem((1, 1), total), Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let (n, m) = self.shape(x);
        let c = Array2::from_elem((n, m), 1.0 / (n * m) as f64);
        self.weighted_sum(x, c).expect("same shape")
    }

    /// Fully connected layer `x Wᵀ + b`, optionally followed by tanh.
    pub fn affine(&mut self, x: Var, weight: Var, bias: Var, tanh: bool) -> Result<Var, TensorError> {
        let y = self.matmul_t(x, weight)?;
        let y = self.add_bias(y, bias)?;
        Ok(if tanh { self.tanh(y) } else { y })
    }

    /// Embedding lookup: row `index` of `table` for each batch entry.
    pub fn embed(&mut self, table: Var, indices: &[usize]) -> Result<Var, TensorError> {
        self.gather(table, indices)
    }

    /// One GRU step.
    ///
    /// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
    /// `n = tanh(W_n x + r ⊙ (U_n h + b_hn) + b_in)`,
    /// `h' = (1 − z) ⊙ n + z ⊙ h`.
    pub fn gru_step(&mut self, x: Var, h: Var, p: &GruVars) -> Result<Var, TensorError> {
        let hidden = self.shape(h).1;
        if self.shape(p.recurrent).0 != 3 * hidden {
            return Err(TensorError::ShapeMismatch(format!(
                "GRU hidden width {hidden} vs recurrent weight {:?}",
                self.shape(p.recurrent)
            )));
        }
        let gx = self.affine(x, p.input, p.input_bias, false)?;
        let gh = self.matmul_t(h, p.recurrent)?;
        let xz = self.slice(gx, 0, hidden)?;
        let hz = self.slice(gh, 0, hidden)?;
        let xr = self.slice(gx, hidden, 2 * hidden)?;
        let hr = self.slice(gh, hidden, 2 * hidden)?;
        let xn = self.slice(gx, 2 * hidden, 3 * hidden)?;
        let hn = self.slice(gh, 2 * hidden, 3 * hidden)?;
        let z = self.add(xz, hz)?;
        let z = self.sigmoid(z);
        let r = self.add(xr, hr)?;
        let r = self.sigmoid(r);
        let hn = self.add_bias(hn, p.hidden_bias)?;
        let rn = self.mul(r, hn)?;
        let n = self.add(xn, rn)?;
        let n = self.tanh(n);
        let keep = self.one_minus(z);
        let a = self.mul(keep, n)?;
        let b = self.mul(z, h)?;
        self.add(a, b)
    }

    /// Reverse pass from a `1×1` loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        if self.shape(loss) != (1, 1) {
            return Err(TensorError::NotScalar(self.shape(loss)));
        }
        let mut grads: Vec<Option<Matrix>> = (0..=loss.0).map(|_| None).collect();
        let mut out = Gradients::zeros_like(self.params, false);
        grads[loss.0] = Some(Array2::ones((1, 1)));

        fn acc(grads: &mut [Option<Matrix>], v: Var, delta: Matrix) {
            match &mut grads[v.0] {
                Some(g) => *g += &delta,
                slot => *slot = Some(delta),
            }
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => out.accumulate(*id, g),
                Op::MatMulT(x, w) => {
                    let dx = g.dot(self.value(*w));
                    let dw = g.t().dot(self.value(*x));
                    acc(&mut grads, *x, dx);
                    acc(&mut grads, *w, dw);
                }
                Op::AddBias(x, b) => {
                    let db = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *b, db);
                    acc(&mut grads, *x, g);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *b, -&g);
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let da = &g * self.value(*b);
                    let db = &g * self.value(*a);
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::MulConst(x, c) => acc(&mut grads, *x, &g * c),
                Op::Scale(x, f) => acc(&mut grads, *x, g * *f),
                Op::Tanh(x) => {
                    let y = node.value.as_ref().unwrap();
                    let mut d = g;
                    Zip::from(&mut d).and(y).for_each(|d, &y| *d *= 1.0 - y * y);
                    acc(&mut grads, *x, d);
                }
                Op::Sigmoid(x) => {
                    let y = node.value.as_ref().unwrap();
                    let mut d = g;
                    Zip::from(&mut d).and(y).for_each(|d, &y| *d *= y * (1.0 - y));
                    acc(&mut grads, *x, d);
                }
                Op::OneMinus(x) => acc(&mut grads, *x, -g),
                Op::Square(x) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(self.value(*x))
                        .for_each(|d, &v| *d *= 2.0 * v);
                    acc(&mut grads, *x, d);
                }
                Op::Gather(table, indices) => {
                    let mut d = Array2::zeros(self.shape(*table));
                    for (r, &idx) in indices.iter().enumerate() {
                        let mut row = d.row_mut(idx);
                        row += &g.row(r);
                    }
                    acc(&mut grads, *table, d);
                }
                Op::Concat(parts) => {
                    let mut start = 0;
                    for &p in parts {
                        let w = self.shape(p).1;
                        acc(&mut grads, p, g.slice(s![.., start..start + w]).to_owned());
                        start += w;
                    }
                }
                Op::Slice(x, start, end) => {
                    let mut d = Array2::zeros(self.shape(*x));
                    d.slice_mut(s![.., *start..*end]).assign(&g);
                    acc(&mut grads, *x, d);
                }
                Op::Softmax(x) => {
                    let y = node.value.as_ref().unwrap();
                    let mut d = g;
                    for (mut drow, yrow) in d.rows_mut().into_iter().zip(y.rows()) {
                        let dot: f64 = drow.iter().zip(yrow.iter()).map(|(a, b)| a * b).sum();
                        Zip::from(&mut drow).and(&yrow).for_each(|d, &y| *d = y * (*d - dot));
                    }
                    acc(&mut grads, *x, d);
                }
                Op::CrossEntropy(target, p) => {
                    let pv = self.value(*p);
                    let mut d = Array2::zeros(pv.dim());
                    Zip::indexed(&mut d).for_each(|(i, j), d| {
                        let t = target[[i, j]];
                        let q = pv[[i, j]];
                        if t != 0.0 && q > LOG_FLOOR {
                            *d = -g[[i, 0]] * t / q;
                        }
                    });
                    acc(&mut grads, *p, d);
                }
                Op::Entropy(p) => {
                    let pv = self.value(*p);
                    let mut d = Array2::zeros(pv.dim());
                    Zip::indexed(&mut d).for_each(|(i, j), d| {
                        let q = pv[[i, j]];
                        if q > 0.0 {
                            *d = -g[[i, 0]] * (q.ln() + 1.0);
                        }
                    });
                    acc(&mut grads, *p, d);
                }
                Op::LogPick(p, indices) => {
                    let pv = self.value(*p);
                    let mut d = Array2::zeros(pv.dim());
                    for (i, &j) in indices.iter().enumerate() {
                        d[[i, j]] = g[[i, 0]] / pv[[i, j]];
                    }
                    acc(&mut grads, *p, d);
                }
                Op::WeightedSum(x, c) => acc(&mut grads, *x, c * g[[0, 0]]),
                Op::Sum(x) => {
                    let d = Array2::from_elem(self.shape(*x), g[[0, 0]]);
                    acc(&mut grads, *x, d);
                }
            }
        }
        Ok(out)
    }
}

/// Parameter handles of one GRU layer placed on a tape.
#[derive(Debug, Clone, Copy)]
pub struct GruVars {
    /// `3H × in`, rows ordered `[z, r, n]`.
    pub input: Var,
    /// `3H × H`, rows ordered `[z, r, n]`.
    pub recurrent: Var,
    /// `1 × 3H`: `[b_z, b_r, b_in]`.
    pub input_bias: Var,
    /// `1 × H`: `b_hn`.
    pub hidden_bias: Var,
}
