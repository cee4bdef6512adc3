//! Tree-walking interpreter with two drivers: scoring binds each trial's
//! observations from recorded data and accumulates negative log likelihood;
//! simulation samples decisions and lets a task environment respond. Both
//! run the identical statement walk, so a program scores data exactly the
//! way it would have generated it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::binding::{
    decision_slot, post_slots, pre_slots, record_from_bindings, record_slot_value, slot_available,
    Bindings, Slot, Value,
};
use crate::dataset::{ParadigmKind, ParticipantData, TrialRecord};
use crate::env::TaskEnvironment;
use crate::error::EvalError;
use crate::prob::{normalize_probs, softmax, DIV_EPS};

use super::ast::*;

/// Ceiling on interpreter operations per trial.
pub const STEP_BUDGET: u32 = 10_000;

/// Checks that a program's decision structure and slot usage fit a paradigm.
pub fn check_compat(prog: &ModelProgram, kind: ParadigmKind) -> Result<(), EvalError> {
    let expected: Vec<Slot> = (0..kind.decisions_per_trial())
        .map(|d| decision_slot(kind, d))
        .collect();
    if prog.choose_slots != expected {
        return Err(EvalError::ParadigmMismatch(format!(
            "program decides {:?} but {} requires {:?}",
            prog.choose_slots.iter().map(|s| s.name()).collect::<Vec<_>>(),
            kind,
            expected.iter().map(|s| s.name()).collect::<Vec<_>>(),
        )));
    }
    for &slot in &prog.used_slots {
        if !slot_available(kind, slot) {
            return Err(EvalError::ParadigmMismatch(format!(
                "program reads '{}', which {} never provides",
                slot.name(),
                kind
            )));
        }
    }
    Ok(())
}

trait DecisionDriver {
    /// Resolves decision `d` given normalized probabilities, binds the
    /// decision slot and everything observed right after it, and returns the
    /// taken action.
    fn resolve(
        &mut self,
        d: usize,
        slot: Slot,
        probs: &[f64],
        b: &mut Bindings,
    ) -> Result<usize, EvalError>;
}

struct ScoreDriver<'a> {
    record: &'a TrialRecord,
    kind: ParadigmKind,
    nll: f64,
}

impl DecisionDriver for ScoreDriver<'_> {
    fn resolve(
        &mut self,
        d: usize,
        slot: Slot,
        probs: &[f64],
        b: &mut Bindings,
    ) -> Result<usize, EvalError> {
        let v = record_slot_value(self.record, slot)
            .ok_or_else(|| EvalError::Binding(format!("record lacks '{}'", slot.name())))?;
        let x = v.scalar()?;
        if x < 0.0 || x.fract() != 0.0 || x as usize >= probs.len() {
            return Err(EvalError::Index(format!(
                "observed {} = {} outside the {} options offered",
                slot.name(),
                x,
                probs.len()
            )));
        }
        let a = x as usize;
        self.nll -= probs[a].ln();
        b.set(slot, Value::Scalar(a as f64));
        for &s in post_slots(self.kind, d) {
            if let Some(v) = record_slot_value(self.record, s) {
                b.set(s, v);
            }
        }
        Ok(a)
    }
}

struct SimDriver<'a> {
    env: &'a mut TaskEnvironment,
    rng: &'a mut ChaCha8Rng,
    t: usize,
}

impl DecisionDriver for SimDriver<'_> {
    fn resolve(
        &mut self,
        d: usize,
        slot: Slot,
        probs: &[f64],
        b: &mut Bindings,
    ) -> Result<usize, EvalError> {
        let a = crate::prob::sample_index(probs, self.rng);
        b.set(slot, Value::Scalar(a as f64));
        self.env.post(self.t, d, a, b, self.rng);
        Ok(a)
    }
}

struct Interp<'p> {
    prog: &'p ModelProgram,
    theta: &'p [f64],
    kind: ParadigmKind,
    state: Vec<Value>,
    locals: Vec<Option<Value>>,
    ops: u32,
    decision: usize,
}

impl<'p> Interp<'p> {
    fn new(prog: &'p ModelProgram, theta: &'p [f64], kind: ParadigmKind) -> Self {
        Interp {
            prog,
            theta,
            kind,
            state: Vec::new(),
            locals: vec![None; prog.n_locals],
            ops: 0,
            decision: 0,
        }
    }

    fn init_state(&mut self, b: &Bindings) -> Result<(), EvalError> {
        let dim = |d: Dim| -> Result<usize, EvalError> {
            match d {
                Dim::Lit(n) => Ok(n),
                Dim::SetSize => b.index(Slot::SetSize),
                Dim::NActions => Ok(self.kind.n_actions()),
            }
        };
        self.state.clear();
        for decl in &self.prog.state {
            let v = match decl.init {
                StateInit::Scalar(x) => Value::Scalar(x),
                StateInit::Vector(d, fill) => Value::Vector(vec![fill; dim(d)?]),
                StateInit::Matrix(r, c, fill) => {
                    let (rows, cols) = (dim(r)?, dim(c)?);
                    Value::Matrix {
                        rows,
                        cols,
                        data: vec![fill; rows * cols],
                    }
                }
            };
            self.state.push(v);
        }
        Ok(())
    }

    fn begin_trial(&mut self) {
        self.locals.iter_mut().for_each(|l| *l = None);
        self.ops = 0;
        self.decision = 0;
    }

    fn tick(&mut self) -> Result<(), EvalError> {
        self.ops += 1;
        if self.ops > STEP_BUDGET {
            return Err(EvalError::StepBudget(STEP_BUDGET));
        }
        Ok(())
    }

    fn read(&self, id: &Ident, b: &Bindings) -> Result<Value, EvalError> {
        match id.target {
            VarRef::Param(i) => Ok(Value::Scalar(self.theta[i])),
            VarRef::State(i) => Ok(self.state[i].clone()),
            VarRef::Local(i) => self.locals[i].clone().ok_or_else(|| {
                EvalError::Binding(format!("'{}' is read before assignment", id.name))
            }),
            VarRef::Binding(slot) => Ok(b.get(slot)?.clone()),
        }
    }

    fn eval(&mut self, e: &Expr, b: &Bindings) -> Result<Value, EvalError> {
        self.tick()?;
        match e {
            Expr::Num(x) => Ok(Value::Scalar(*x)),
            Expr::Var(id) => self.read(id, b),
            Expr::Index { base, indices } => {
                let v = self.read(base, b)?;
                self.index_read(&base.name, &v, indices, b)
            }
            Expr::Neg(inner) => {
                let v = self.eval(inner, b)?;
                Ok(map_unary(v, |x| -x))
            }
            Expr::Bin(op, a, c) => {
                let a = self.eval(a, b)?;
                let c = self.eval(c, b)?;
                bin_op(*op, a, c)
            }
            Expr::Call(builtin, args) => self.call(*builtin, args, b),
            Expr::VecLit(items) => {
                let mut v = Vec::with_capacity(items.len());
                for item in items {
                    v.push(self.eval(item, b)?.scalar()?);
                }
                Ok(Value::Vector(v))
            }
        }
    }

    fn index_read(
        &mut self,
        name: &str,
        v: &Value,
        indices: &[Expr],
        b: &Bindings,
    ) -> Result<Value, EvalError> {
        let idx: Vec<usize> = {
            let mut out = Vec::with_capacity(indices.len());
            for e in indices {
                out.push(as_index(self.eval(e, b)?.scalar()?, name)?);
            }
            out
        };
        match (v, idx.as_slice()) {
            (Value::Vector(xs), [i]) => xs
                .get(*i)
                .map(|&x| Value::Scalar(x))
                .ok_or_else(|| oob(name, *i, xs.len())),
            (Value::Matrix { rows, cols, data }, [i]) => {
                if *i >= *rows {
                    return Err(oob(name, *i, *rows));
                }
                Ok(Value::Vector(data[i * cols..(i + 1) * cols].to_vec()))
            }
            (Value::Matrix { rows, cols, data }, [i, j]) => {
                if *i >= *rows || *j >= *cols {
                    return Err(oob(name, i * cols + j, rows * cols));
                }
                Ok(Value::Scalar(data[i * cols + j]))
            }
            (Value::Scalar(_), _) => Err(EvalError::Index(format!(
                "'{}' is a scalar and cannot be indexed",
                name
            ))),
            _ => Err(EvalError::Index(format!(
                "'{}' indexed with {} subscripts",
                name,
                idx.len()
            ))),
        }
    }

    fn call(&mut self, f: Builtin, args: &[Expr], b: &Bindings) -> Result<Value, EvalError> {
        match f {
            Builtin::Exp | Builtin::Log | Builtin::Abs => {
                let v = self.eval(&args[0], b)?;
                if f == Builtin::Log {
                    let bad = match &v {
                        Value::Scalar(x) => *x <= 0.0,
                        Value::Vector(xs) => xs.iter().any(|&x| x <= 0.0),
                        Value::Matrix { data, .. } => data.iter().any(|&x| x <= 0.0),
                    };
                    if bad {
                        return Err(EvalError::Numerics("log of a non-positive value".into()));
                    }
                }
                Ok(map_unary(v, match f {
                    Builtin::Exp => f64::exp,
                    Builtin::Log => f64::ln,
                    _ => f64::abs,
                }))
            }
            Builtin::Min | Builtin::Max => {
                let a = self.eval(&args[0], b)?;
                let c = self.eval(&args[1], b)?;
                let op = if f == Builtin::Min { f64::min } else { f64::max };
                zip_values(a, c, op)
            }
            Builtin::Pow => {
                let base = self.eval(&args[0], b)?;
                let exp = self.eval(&args[1], b)?.scalar()?;
                let out = map_unary(base, |x| x.powf(exp));
                if let Value::Scalar(x) = &out {
                    if !x.is_finite() {
                        return Err(EvalError::Numerics(format!("pow produced {}", x)));
                    }
                }
                Ok(out)
            }
            Builtin::Sum => {
                let v = self.eval(&args[0], b)?;
                let s = match v {
                    Value::Scalar(x) => x,
                    Value::Vector(xs) => xs.iter().sum(),
                    Value::Matrix { data, .. } => data.iter().sum(),
                };
                Ok(Value::Scalar(s))
            }
            Builtin::Argmax => {
                let v = self.eval(&args[0], b)?;
                let xs = v.vector()?;
                if xs.is_empty() {
                    return Err(EvalError::Numerics("argmax of empty vector".into()));
                }
                let mut best = 0;
                for (i, &x) in xs.iter().enumerate() {
                    if x > xs[best] {
                        best = i;
                    }
                }
                Ok(Value::Scalar(best as f64))
            }
            Builtin::Softmax => {
                let v = self.eval(&args[0], b)?;
                let beta = if args.len() == 2 {
                    self.eval(&args[1], b)?.scalar()?
                } else {
                    1.0
                };
                let xs = v.vector()?;
                let scaled: Vec<f64> = xs.iter().map(|&x| beta * x).collect();
                Ok(Value::Vector(softmax(&scaled)?))
            }
            Builtin::Clamp => {
                let v = self.eval(&args[0], b)?;
                let lo = self.eval(&args[1], b)?.scalar()?;
                let hi = self.eval(&args[2], b)?.scalar()?;
                if lo > hi {
                    return Err(EvalError::Numerics(format!(
                        "clamp bounds inverted: [{}, {}]",
                        lo, hi
                    )));
                }
                Ok(map_unary(v, |x| x.clamp(lo, hi)))
            }
        }
    }

    fn assign(
        &mut self,
        target: &Ident,
        indices: &[Expr],
        op: AssignOp,
        value: Value,
        b: &Bindings,
    ) -> Result<(), EvalError> {
        let idx: Vec<usize> = {
            let mut out = Vec::with_capacity(indices.len());
            for e in indices {
                out.push(as_index(self.eval(e, b)?.scalar()?, &target.name)?);
            }
            out
        };
        let dest: &mut Value = match target.target {
            VarRef::State(i) => &mut self.state[i],
            VarRef::Local(i) => {
                let slot = &mut self.locals[i];
                if slot.is_none() {
                    if !idx.is_empty() || op == AssignOp::Add {
                        return Err(EvalError::Binding(format!(
                            "'{}' is updated before assignment",
                            target.name
                        )));
                    }
                    *slot = Some(value);
                    return Ok(());
                }
                slot.as_mut().unwrap()
            }
            _ => {
                return Err(EvalError::Binding(format!(
                    "cannot assign to '{}'",
                    target.name
                )))
            }
        };
        store(dest, &idx, op, value, &target.name)
    }

    fn exec_stmts(
        &mut self,
        stmts: &[Stmt],
        b: &mut Bindings,
        driver: &mut dyn DecisionDriver,
    ) -> Result<(), EvalError> {
        for s in stmts {
            self.tick()?;
            match s {
                Stmt::Assign {
                    target,
                    indices,
                    op,
                    value,
                } => {
                    let v = self.eval(value, b)?;
                    self.assign(target, indices, *op, v, b)?;
                }
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    if self.eval_cond(cond, b)? {
                        self.exec_stmts(then_branch, b, driver)?;
                    } else {
                        self.exec_stmts(else_branch, b, driver)?;
                    }
                }
                Stmt::Choose { var: _, probs } => {
                    let slot = self.prog.choose_slots[self.decision];
                    let raw = self.eval(probs, b)?;
                    let raw = raw.vector()?;
                    if raw.len() != self.kind.n_actions() {
                        return Err(EvalError::LengthMismatch(format!(
                            "choose over {} probabilities but {} offers {} options",
                            raw.len(),
                            self.kind,
                            self.kind.n_actions()
                        )));
                    }
                    let probs = normalize_probs(raw)?;
                    driver.resolve(self.decision, slot, &probs, b)?;
                    self.decision += 1;
                }
            }
        }
        Ok(())
    }

    fn eval_cond(&mut self, c: &Cond, b: &Bindings) -> Result<bool, EvalError> {
        self.tick()?;
        Ok(match c {
            Cond::Cmp(op, l, r) => {
                let l = self.eval(l, b)?.scalar()?;
                let r = self.eval(r, b)?.scalar()?;
                match op {
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                    CmpOp::Gt => l > r,
                    CmpOp::Ge => l >= r,
                    CmpOp::Eq => l == r,
                    CmpOp::Ne => l != r,
                }
            }
            Cond::And(a, c2) => self.eval_cond(a, b)? && self.eval_cond(c2, b)?,
            Cond::Or(a, c2) => self.eval_cond(a, b)? || self.eval_cond(c2, b)?,
            Cond::Not(inner) => !self.eval_cond(inner, b)?,
        })
    }
}

fn as_index(x: f64, name: &str) -> Result<usize, EvalError> {
    if !x.is_finite() || x < 0.0 || (x - x.round()).abs() > 1e-9 {
        return Err(EvalError::Index(format!(
            "subscript {} into '{}' is not a non-negative integer",
            x, name
        )));
    }
    Ok(x.round() as usize)
}

fn oob(name: &str, i: usize, len: usize) -> EvalError {
    EvalError::Index(format!(
        "index {} out of range for '{}' (length {})",
        i, name, len
    ))
}

fn map_unary(v: Value, f: impl Fn(f64) -> f64) -> Value {
    match v {
        Value::Scalar(x) => Value::Scalar(f(x)),
        Value::Vector(xs) => Value::Vector(xs.into_iter().map(f).collect()),
        Value::Matrix { rows, cols, data } => Value::Matrix {
            rows,
            cols,
            data: data.into_iter().map(f).collect(),
        },
    }
}

fn zip_values(a: Value, b: Value, f: impl Fn(f64, f64) -> f64) -> Result<Value, EvalError> {
    Ok(match (a, b) {
        (Value::Scalar(x), Value::Scalar(y)) => Value::Scalar(f(x, y)),
        (Value::Scalar(x), Value::Vector(ys)) => {
            Value::Vector(ys.into_iter().map(|y| f(x, y)).collect())
        }
        (Value::Vector(xs), Value::Scalar(y)) => {
            Value::Vector(xs.into_iter().map(|x| f(x, y)).collect())
        }
        (Value::Vector(xs), Value::Vector(ys)) => {
            if xs.len() != ys.len() {
                return Err(EvalError::LengthMismatch(format!(
                    "vectors of length {} and {}",
                    xs.len(),
                    ys.len()
                )));
            }
            Value::Vector(xs.into_iter().zip(ys).map(|(x, y)| f(x, y)).collect())
        }
        (Value::Scalar(x), Value::Matrix { rows, cols, data }) => Value::Matrix {
            rows,
            cols,
            data: data.into_iter().map(|y| f(x, y)).collect(),
        },
        (Value::Matrix { rows, cols, data }, Value::Scalar(y)) => Value::Matrix {
            rows,
            cols,
            data: data.into_iter().map(|x| f(x, y)).collect(),
        },
        (
            Value::Matrix { rows, cols, data },
            Value::Matrix {
                rows: r2,
                cols: c2,
                data: d2,
            },
        ) => {
            if rows != r2 || cols != c2 {
                return Err(EvalError::LengthMismatch(format!(
                    "matrices of shape {}x{} and {}x{}",
                    rows, cols, r2, c2
                )));
            }
            Value::Matrix {
                rows,
                cols,
                data: data.into_iter().zip(d2).map(|(x, y)| f(x, y)).collect(),
            }
        }
        _ => {
            return Err(EvalError::LengthMismatch(
                "cannot combine a vector with a matrix".into(),
            ))
        }
    })
}

fn bin_op(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    if op == BinOp::Div {
        let bad = match &b {
            Value::Scalar(y) => y.abs() < DIV_EPS,
            Value::Vector(ys) => ys.iter().any(|y| y.abs() < DIV_EPS),
            Value::Matrix { data, .. } => data.iter().any(|y| y.abs() < DIV_EPS),
        };
        if bad {
            return Err(EvalError::Numerics(
                "division by a value too close to zero".into(),
            ));
        }
    }
    zip_values(a, b, match op {
        BinOp::Add => |x: f64, y: f64| x + y,
        BinOp::Sub => |x: f64, y: f64| x - y,
        BinOp::Mul => |x: f64, y: f64| x * y,
        BinOp::Div => |x: f64, y: f64| x / y,
    })
}

fn store(
    dest: &mut Value,
    idx: &[usize],
    op: AssignOp,
    value: Value,
    name: &str,
) -> Result<(), EvalError> {
    match idx {
        [] => match op {
            AssignOp::Set => {
                *dest = value;
                Ok(())
            }
            AssignOp::Add => {
                let updated = bin_op(BinOp::Add, dest.clone(), value)?;
                *dest = updated;
                Ok(())
            }
        },
        [i] => match dest {
            Value::Vector(xs) => {
                if *i >= xs.len() {
                    return Err(oob(name, *i, xs.len()));
                }
                let x = value.scalar()?;
                match op {
                    AssignOp::Set => xs[*i] = x,
                    AssignOp::Add => xs[*i] += x,
                }
                Ok(())
            }
            Value::Matrix { rows, cols, data } => {
                if *i >= *rows {
                    return Err(oob(name, *i, *rows));
                }
                let row = value.vector()?;
                if row.len() != *cols {
                    return Err(EvalError::LengthMismatch(format!(
                        "assigning a length-{} row into '{}' with {} columns",
                        row.len(),
                        name,
                        cols
                    )));
                }
                for (j, &x) in row.iter().enumerate() {
                    match op {
                        AssignOp::Set => data[i * *cols + j] = x,
                        AssignOp::Add => data[i * *cols + j] += x,
                    }
                }
                Ok(())
            }
            Value::Scalar(_) => Err(EvalError::Index(format!(
                "'{}' is a scalar and cannot be indexed",
                name
            ))),
        },
        [i, j] => match dest {
            Value::Matrix { rows, cols, data } => {
                if *i >= *rows || *j >= *cols {
                    return Err(oob(name, i * *cols + j, *rows * *cols));
                }
                let x = value.scalar()?;
                match op {
                    AssignOp::Set => data[i * *cols + j] = x,
                    AssignOp::Add => data[i * *cols + j] += x,
                }
                Ok(())
            }
            _ => Err(EvalError::Index(format!(
                "'{}' is not a matrix; two subscripts not allowed",
                name
            ))),
        },
        _ => Err(EvalError::Index(format!(
            "'{}' indexed with {} subscripts",
            name,
            idx.len()
        ))),
    }
}

/// Scores recorded behavior: total negative log likelihood of the observed
/// decisions under the program with parameters `theta`.
pub fn evaluate_nll(
    prog: &ModelProgram,
    data: &ParticipantData,
    theta: &[f64],
) -> Result<f64, EvalError> {
    let first = data
        .trials
        .first()
        .ok_or_else(|| EvalError::Binding("participant has no trials".into()))?;
    let kind = record_kind(first);
    check_compat(prog, kind)?;
    prog.params.validate(theta)?;

    let mut interp = Interp::new(prog, theta, kind);
    let mut b = Bindings::new();
    let mut prev_block: Option<f64> = None;
    let mut driver = ScoreDriver {
        record: first,
        kind,
        nll: 0.0,
    };
    for (t, rec) in data.trials.iter().enumerate() {
        if !rec.matches(kind) {
            return Err(EvalError::ParadigmMismatch(
                "mixed paradigms within one participant".into(),
            ));
        }
        b.clear();
        for &slot in pre_slots(kind) {
            if let Some(v) = record_slot_value(rec, slot) {
                b.set(slot, v);
            }
        }
        let cur_block = b.maybe(Slot::Block).and_then(|v| v.scalar().ok());
        if t == 0 || (prog.reset_per_block && cur_block != prev_block) {
            interp.init_state(&b)?;
        }
        prev_block = cur_block;
        interp.begin_trial();
        driver.record = rec;
        interp.exec_stmts(&prog.trial, &mut b, &mut driver)?;
        if interp.decision != kind.decisions_per_trial() {
            return Err(EvalError::Binding(format!(
                "trial resolved {} of {} decisions; a choose was skipped by a branch",
                interp.decision,
                kind.decisions_per_trial()
            )));
        }
    }
    if !driver.nll.is_finite() {
        return Err(EvalError::Numerics(format!(
            "non-finite log likelihood: {}",
            driver.nll
        )));
    }
    Ok(driver.nll)
}

/// Simulates one synthetic participant in the given environment.
pub fn simulate(
    prog: &ModelProgram,
    env: &TaskEnvironment,
    theta: &[f64],
    n_trials: usize,
    seed: u64,
    participant_id: &str,
) -> Result<ParticipantData, EvalError> {
    let kind = env.kind();
    check_compat(prog, kind)?;
    prog.params.validate(theta)?;
    let n = match env.trial_limit() {
        Some(limit) => n_trials.min(limit),
        None => n_trials,
    };

    let mut env = env.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interp = Interp::new(prog, theta, kind);
    let mut b = Bindings::new();
    let mut prev_block: Option<f64> = None;
    let mut trials = Vec::with_capacity(n);
    for t in 0..n {
        b.clear();
        env.pre(t, &mut b, &mut rng);
        let cur_block = b.maybe(Slot::Block).and_then(|v| v.scalar().ok());
        if t == 0 || (prog.reset_per_block && cur_block != prev_block) {
            interp.init_state(&b)?;
        }
        prev_block = cur_block;
        interp.begin_trial();
        {
            let mut driver = SimDriver {
                env: &mut env,
                rng: &mut rng,
                t,
            };
            interp.exec_stmts(&prog.trial, &mut b, &mut driver)?;
        }
        if interp.decision != kind.decisions_per_trial() {
            return Err(EvalError::Binding(format!(
                "trial resolved {} of {} decisions; a choose was skipped by a branch",
                interp.decision,
                kind.decisions_per_trial()
            )));
        }
        env.end_trial(&mut rng);
        trials.push(record_from_bindings(kind, &b)?);
    }
    Ok(ParticipantData {
        participant_id: participant_id.to_string(),
        trials,
    })
}

fn record_kind(r: &TrialRecord) -> ParadigmKind {
    use crate::dataset::FeedbackKind;
    match r {
        TrialRecord::Decision { .. } => ParadigmKind::DecisionMaking,
        TrialRecord::Learning {
            forgone_reward: Some(_),
            ..
        } => ParadigmKind::Learning(FeedbackKind::Full),
        TrialRecord::Learning { .. } => ParadigmKind::Learning(FeedbackKind::Partial),
        TrialRecord::Planning { .. } => ParadigmKind::Planning,
        TrialRecord::WorkingMemory { .. } => ParadigmKind::WorkingMemory,
    }
}
