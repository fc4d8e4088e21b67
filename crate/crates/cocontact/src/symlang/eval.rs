//! Numeric evaluation: tree-walking for one-off queries and a compiled
//! stack program for tight integration loops.
//!
//! External functions of time are bound either as expression families
//! (differentiated symbolically to any needed order) or as opaque callables
//! `(t, order) -> f64` with a declared maximum derivative order.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Expr, Node};
use crate::error::{Error, Result};

/// Highest derivative order kept for expression-backed externals.
pub const MAX_SYMBOLIC_EXT_ORDER: u32 = 8;

/// One external function of time together with its derivatives.
#[derive(Clone)]
pub enum ExternalImpl {
    /// Opaque callable `(t, order) -> value`, usable up to `max_order`.
    Callable {
        max_order: u32,
        f: Arc<dyn Fn(f64, u32) -> f64 + Send + Sync>,
    },
    /// Expression in a single variable, differentiated ahead of time.
    Symbolic { var: String, derivs: Arc<Vec<Expr>> },
}

impl std::fmt::Debug for ExternalImpl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExternalImpl::Callable { max_order, .. } => {
                write!(f, "Callable {{ max_order: {max_order} }}")
            }
            ExternalImpl::Symbolic { var, derivs } => {
                write!(f, "Symbolic {{ {var} -> {} }}", derivs[0])
            }
        }
    }
}

impl ExternalImpl {
    /// Wrap an expression in `var`; derivatives are taken symbolically.
    pub fn symbolic(var: &str, body: Expr) -> ExternalImpl {
        let mut derivs = Vec::with_capacity(MAX_SYMBOLIC_EXT_ORDER as usize + 1);
        derivs.push(body);
        for k in 0..MAX_SYMBOLIC_EXT_ORDER {
            let next = derivs[k as usize].differentiate(var);
            derivs.push(next);
        }
        ExternalImpl::Symbolic {
            var: var.to_string(),
            derivs: Arc::new(derivs),
        }
    }

    /// Wrap a callable providing derivatives up to `max_order`.
    pub fn callable(
        max_order: u32,
        f: impl Fn(f64, u32) -> f64 + Send + Sync + 'static,
    ) -> ExternalImpl {
        ExternalImpl::Callable {
            max_order,
            f: Arc::new(f),
        }
    }

    /// Constant in time; all derivatives vanish.
    pub fn constant(c: f64) -> ExternalImpl {
        ExternalImpl::symbolic("t", Expr::num(c))
    }

    pub fn max_order(&self) -> u32 {
        match self {
            ExternalImpl::Callable { max_order, .. } => *max_order,
            ExternalImpl::Symbolic { .. } => MAX_SYMBOLIC_EXT_ORDER,
        }
    }

    /// Derivative of the named order at time `t`.
    pub fn eval(&self, name: &str, t: f64, order: u32) -> Result<f64> {
        if order > self.max_order() {
            return Err(Error::ExternalOrder {
                name: name.to_string(),
                requested: order,
                available: self.max_order(),
            });
        }
        match self {
            ExternalImpl::Callable { f, .. } => Ok(f(t, order)),
            ExternalImpl::Symbolic { var, derivs } => {
                let b = Bindings::new().with(var, t);
                derivs[order as usize].evaluate(&b)
            }
        }
    }

    /// The stored derivative expressions, when expression-backed.
    pub fn derivative_exprs(&self) -> Option<(&str, &[Expr])> {
        match self {
            ExternalImpl::Symbolic { var, derivs } => Some((var, derivs)),
            ExternalImpl::Callable { .. } => None,
        }
    }
}

/// Symbol values and external implementations for evaluation.
#[derive(Clone, Default, Debug)]
pub struct Bindings {
    vals: BTreeMap<String, f64>,
    exts: BTreeMap<String, ExternalImpl>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Bindings {
        self.set(name, value);
        self
    }

    pub fn with_external(mut self, name: &str, imp: ExternalImpl) -> Bindings {
        self.set_external(name, imp);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.vals.insert(name.to_string(), value);
    }

    pub fn set_external(&mut self, name: &str, imp: ExternalImpl) {
        self.exts.insert(name.to_string(), imp);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        if let Some(v) = self.vals.get(name) {
            Some(*v)
        } else if name == "pi" {
            Some(std::f64::consts::PI)
        } else {
            None
        }
    }

    pub fn external(&self, name: &str) -> Option<&ExternalImpl> {
        self.exts.get(name)
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.vals
    }

    pub fn externals(&self) -> &BTreeMap<String, ExternalImpl> {
        &self.exts
    }

    /// Overlay `other` on top of `self`, returning the merged bindings.
    pub fn merged_with(&self, other: &Bindings) -> Bindings {
        let mut out = self.clone();
        for (k, v) in &other.vals {
            out.vals.insert(k.clone(), *v);
        }
        for (k, v) in &other.exts {
            out.exts.insert(k.clone(), v.clone());
        }
        out
    }
}

impl Expr {
    /// Evaluate to a finite `f64`, or report which subexpression failed.
    pub fn evaluate(&self, b: &Bindings) -> Result<f64> {
        let v = self.eval_inner(b)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain {
                message: "non-finite result".to_string(),
                subexpression: self.to_string(),
            })
        }
    }

    fn eval_inner(&self, b: &Bindings) -> Result<f64> {
        let domain = |message: &str| Error::Domain {
            message: message.to_string(),
            subexpression: self.to_string(),
        };
        match self.node() {
            Node::Num(v) => Ok(*v),
            Node::Sym(name) => b.get(name).ok_or_else(|| Error::UnboundSymbol {
                name: name.to_string(),
            }),
            Node::Ext { name, arg, order } => {
                let imp = b.external(name).ok_or_else(|| Error::UnboundSymbol {
                    name: name.to_string(),
                })?;
                let t = b.get(arg).ok_or_else(|| Error::UnboundSymbol {
                    name: arg.to_string(),
                })?;
                imp.eval(name, t, *order)
            }
            Node::Add(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval_inner(b)?;
                }
                Ok(acc)
            }
            Node::Mul(factors) => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval_inner(b)?;
                }
                Ok(acc)
            }
            Node::Pow(base, e) => {
                let x = base.eval_inner(b)?;
                if e.is_integer() {
                    let n = e.numerator();
                    if x == 0.0 && n < 0 {
                        return Err(domain("division by zero"));
                    }
                    Ok(x.powi(n as i32))
                } else {
                    let p = e.as_f64();
                    if x < 0.0 {
                        return Err(domain("fractional power of a negative base"));
                    }
                    if x == 0.0 && p < 0.0 {
                        return Err(domain("division by zero"));
                    }
                    Ok(x.powf(p))
                }
            }
            Node::Sin(a) => Ok(a.eval_inner(b)?.sin()),
            Node::Cos(a) => Ok(a.eval_inner(b)?.cos()),
            Node::Exp(a) => Ok(a.eval_inner(b)?.exp()),
            Node::Log(a) => {
                let x = a.eval_inner(b)?;
                if x <= 0.0 {
                    return Err(domain("log of a non-positive value"));
                }
                Ok(x.ln())
            }
        }
    }
}

/// Flat post-order instruction stream for repeated evaluation.
#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Load(usize),
    Ext {
        idx: usize,
        order: u32,
        t_slot: usize,
    },
    Add(usize),
    Mul(usize),
    PowI(i32),
    PowF(f64),
    Sin,
    Cos,
    Exp,
    Log,
}

/// Compiled expression over a fixed slot layout.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
    max_stack: usize,
}

/// Externals resolved for compiled evaluation, indexed by first use.
#[derive(Default)]
pub struct ExternalTable {
    ids: BTreeMap<String, usize>,
    entries: Vec<ExtEntry>,
}

enum ExtEntry {
    Callable {
        max_order: u32,
        f: Arc<dyn Fn(f64, u32) -> f64 + Send + Sync>,
    },
    Compiled {
        derivs: Vec<Program>,
    },
}

impl ExternalTable {
    pub fn new() -> ExternalTable {
        ExternalTable::default()
    }

    fn resolve(&mut self, name: &str, order: u32, b: &Bindings) -> Result<usize> {
        if let Some(&idx) = self.ids.get(name) {
            let available = match &self.entries[idx] {
                ExtEntry::Callable { max_order, .. } => *max_order,
                ExtEntry::Compiled { derivs } => derivs.len() as u32 - 1,
            };
            if order > available {
                return Err(Error::ExternalOrder {
                    name: name.to_string(),
                    requested: order,
                    available,
                });
            }
            return Ok(idx);
        }
        let imp = b.external(name).ok_or_else(|| Error::UnboundSymbol {
            name: name.to_string(),
        })?;
        if order > imp.max_order() {
            return Err(Error::ExternalOrder {
                name: name.to_string(),
                requested: order,
                available: imp.max_order(),
            });
        }
        let entry = match imp {
            ExternalImpl::Callable { max_order, f } => ExtEntry::Callable {
                max_order: *max_order,
                f: f.clone(),
            },
            ExternalImpl::Symbolic { var, derivs } => {
                let mut slot = BTreeMap::new();
                slot.insert(var.clone(), 0usize);
                let mut compiled = Vec::with_capacity(derivs.len());
                let empty = Bindings::new();
                let mut sub = ExternalTable::new();
                for d in derivs.iter() {
                    compiled.push(Program::compile(d, &slot, &empty, &mut sub)?);
                }
                ExtEntry::Compiled { derivs: compiled }
            }
        };
        let idx = self.entries.len();
        self.entries.push(entry);
        self.ids.insert(name.to_string(), idx);
        Ok(idx)
    }

    fn eval(&self, idx: usize, t: f64, order: u32) -> Result<f64> {
        match &self.entries[idx] {
            ExtEntry::Callable { f, .. } => Ok(f(t, order)),
            ExtEntry::Compiled { derivs } => {
                let mut stack = Vec::with_capacity(derivs[order as usize].max_stack);
                derivs[order as usize].run(&[t], self, &mut stack)
            }
        }
    }
}

impl Program {
    /// Compile `e` against coordinate slots; symbols not in `slots` must be
    /// bound to values in `b` and are folded in as constants.
    pub fn compile(
        e: &Expr,
        slots: &BTreeMap<String, usize>,
        b: &Bindings,
        exts: &mut ExternalTable,
    ) -> Result<Program> {
        let mut ops = Vec::new();
        emit(e, slots, b, exts, &mut ops)?;
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for op in &ops {
            let (pop, push) = match op {
                Op::Const(_) | Op::Load(_) | Op::Ext { .. } => (0, 1),
                Op::Add(n) | Op::Mul(n) => (*n, 1),
                _ => (1, 1),
            };
            depth = depth - pop + push;
            max_stack = max_stack.max(depth);
        }
        Ok(Program { ops, max_stack })
    }

    pub fn max_stack(&self) -> usize {
        self.max_stack
    }

    /// Evaluate against a state vector laid out by the compile-time slots.
    pub fn run(&self, state: &[f64], exts: &ExternalTable, stack: &mut Vec<f64>) -> Result<f64> {
        stack.clear();
        for op in &self.ops {
            match op {
                Op::Const(v) => stack.push(*v),
                Op::Load(i) => stack.push(state[*i]),
                Op::Ext { idx, order, t_slot } => {
                    stack.push(exts.eval(*idx, state[*t_slot], *order)?)
                }
                Op::Add(n) => {
                    let at = stack.len() - n;
                    let mut acc = 0.0;
                    for v in stack.drain(at..) {
                        acc += v;
                    }
                    stack.push(acc);
                }
                Op::Mul(n) => {
                    let at = stack.len() - n;
                    let mut acc = 1.0;
                    for v in stack.drain(at..) {
                        acc *= v;
                    }
                    stack.push(acc);
                }
                Op::PowI(n) => {
                    let x = stack.last_mut().expect("stack underflow");
                    if *x == 0.0 && *n < 0 {
                        return Err(Error::Domain {
                            message: "division by zero".to_string(),
                            subexpression: "compiled program".to_string(),
                        });
                    }
                    *x = x.powi(*n);
                }
                Op::PowF(p) => {
                    let x = stack.last_mut().expect("stack underflow");
                    if *x < 0.0 || (*x == 0.0 && *p < 0.0) {
                        return Err(Error::Domain {
                            message: "fractional power outside its domain".to_string(),
                            subexpression: "compiled program".to_string(),
                        });
                    }
                    *x = x.powf(*p);
                }
                Op::Sin => apply(stack, f64::sin),
                Op::Cos => apply(stack, f64::cos),
                Op::Exp => apply(stack, f64::exp),
                Op::Log => {
                    let x = stack.last_mut().expect("stack underflow");
                    if *x <= 0.0 {
                        return Err(Error::Domain {
                            message: "log of a non-positive value".to_string(),
                            subexpression: "compiled program".to_string(),
                        });
                    }
                    *x = x.ln();
                }
            }
        }
        let v = stack.pop().expect("empty program");
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain {
                message: "non-finite result".to_string(),
                subexpression: "compiled program".to_string(),
            })
        }
    }
}

fn apply(stack: &mut [f64], f: impl Fn(f64) -> f64) {
    let x = stack.last_mut().expect("stack underflow");
    *x = f(*x);
}

fn emit(
    e: &Expr,
    slots: &BTreeMap<String, usize>,
    b: &Bindings,
    exts: &mut ExternalTable,
    ops: &mut Vec<Op>,
) -> Result<()> {
    match e.node() {
        Node::Num(v) => ops.push(Op::Const(*v)),
        Node::Sym(name) => {
            if let Some(&slot) = slots.get(name.as_ref()) {
                ops.push(Op::Load(slot));
            } else if let Some(v) = b.get(name) {
                ops.push(Op::Const(v));
            } else {
                return Err(Error::UnboundSymbol {
                    name: name.to_string(),
                });
            }
        }
        Node::Ext { name, arg, order } => {
            let t_slot = *slots.get(arg.as_ref()).ok_or_else(|| Error::UnboundSymbol {
                name: arg.to_string(),
            })?;
            let idx = exts.resolve(name, *order, b)?;
            ops.push(Op::Ext {
                idx,
                order: *order,
                t_slot,
            });
        }
        Node::Add(terms) => {
            for t in terms {
                emit(t, slots, b, exts, ops)?;
            }
            ops.push(Op::Add(terms.len()));
        }
        Node::Mul(factors) => {
            for f in factors {
                emit(f, slots, b, exts, ops)?;
            }
            ops.push(Op::Mul(factors.len()));
        }
        Node::Pow(base, r) => {
            emit(base, slots, b, exts, ops)?;
            if r.is_integer() {
                ops.push(Op::PowI(r.numerator() as i32));
            } else {
                ops.push(Op::PowF(r.as_f64()));
            }
        }
        Node::Sin(a) => {
            emit(a, slots, b, exts, ops)?;
            ops.push(Op::Sin);
        }
        Node::Cos(a) => {
            emit(a, slots, b, exts, ops)?;
            ops.push(Op::Cos);
        }
        Node::Exp(a) => {
            emit(a, slots, b, exts, ops)?;
            ops.push(Op::Exp);
        }
        Node::Log(a) => {
            emit(a, slots, b, exts, ops)?;
            ops.push(Op::Log);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_polynomials() {
        let e = Expr::num(3.0) * Expr::sym("x") + Expr::powi(Expr::sym("y"), 2);
        let b = Bindings::new().with("x", 2.0).with("y", -3.0);
        assert_eq!(e.evaluate(&b).unwrap(), 15.0);
    }

    #[test]
    fn pi_is_bound_automatically() {
        let e = Expr::sin(Expr::pi() / Expr::int(2));
        assert!((e.evaluate(&Bindings::new()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unbound_symbols_are_named() {
        let e = Expr::sym("alpha");
        match e.evaluate(&Bindings::new()) {
            Err(Error::UnboundSymbol { name }) => assert_eq!(name, "alpha"),
            other => panic!("expected unbound symbol, got {other:?}"),
        }
    }

    #[test]
    fn domain_errors_carry_the_subexpression() {
        let e = Expr::log(Expr::sym("x"));
        let b = Bindings::new().with("x", -1.0);
        match e.evaluate(&b) {
            Err(Error::Domain { subexpression, .. }) => {
                assert!(subexpression.contains("log"));
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn symbolic_externals_differentiate() {
        let body = Expr::int(1) + Expr::num(0.1) * Expr::sin(Expr::int(2) * Expr::sym("t"));
        let ell = ExternalImpl::symbolic("t", body);
        let v0 = ell.eval("ell", 0.3, 0).unwrap();
        let v1 = ell.eval("ell", 0.3, 1).unwrap();
        let v2 = ell.eval("ell", 0.3, 2).unwrap();
        assert!((v0 - (1.0 + 0.1 * (0.6f64).sin())).abs() < 1e-15);
        assert!((v1 - 0.2 * (0.6f64).cos()).abs() < 1e-15);
        assert!((v2 + 0.4 * (0.6f64).sin()).abs() < 1e-15);
    }

    #[test]
    fn callable_order_cap_is_enforced() {
        let f = ExternalImpl::callable(1, |t, k| if k == 0 { t } else { 1.0 });
        assert!(f.eval("f", 2.0, 1).is_ok());
        match f.eval("f", 2.0, 2) {
            Err(Error::ExternalOrder {
                requested,
                available,
                ..
            }) => {
                assert_eq!((requested, available), (2, 1));
            }
            other => panic!("expected order error, got {other:?}"),
        }
    }

    #[test]
    fn substitution_then_evaluation_matches_direct_evaluation() {
        // f(g-substituted) evaluated == f evaluated with x bound to g's value
        let f = Expr::powi(Expr::sym("x"), 2) + Expr::sin(Expr::sym("x"));
        let g = Expr::int(1) + Expr::sym("y");
        let mut map = BTreeMap::new();
        map.insert("x".to_string(), g.clone());
        let fg = f.substitute(&map);
        let b = Bindings::new().with("y", 0.75);
        let gval = g.evaluate(&b).unwrap();
        let direct = f.evaluate(&Bindings::new().with("x", gval)).unwrap();
        assert!((fg.evaluate(&b).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn compiled_program_matches_tree_walk() {
        let e = Expr::exp(-Expr::sym("t")) * Expr::powi(Expr::sym("q"), 3)
            + Expr::ext("f", "t", 1) * Expr::sym("q")
            + Expr::pow(
                Expr::powi(Expr::sym("q"), 2) + Expr::int(1),
                super::super::Rational::new(1, 2),
            );
        let body = Expr::sin(Expr::num(3.0) * Expr::sym("t"));
        let env = Bindings::new().with_external("f", ExternalImpl::symbolic("t", body));

        let mut slots = BTreeMap::new();
        slots.insert("t".to_string(), 0usize);
        slots.insert("q".to_string(), 1usize);
        let mut table = ExternalTable::new();
        let prog = Program::compile(&e, &slots, &env, &mut table).unwrap();

        let mut stack = Vec::with_capacity(prog.max_stack());
        for (t, q) in [(0.0, 1.0), (0.4, -2.0), (1.7, 0.3)] {
            let direct = e
                .evaluate(&env.clone().with("t", t).with("q", q))
                .unwrap();
            let compiled = prog.run(&[t, q], &table, &mut stack).unwrap();
            assert!((direct - compiled).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn parameters_fold_to_constants_at_compile_time() {
        let e = Expr::sym("m") * Expr::sym("v");
        let env = Bindings::new().with("m", 2.5);
        let mut slots = BTreeMap::new();
        slots.insert("v".to_string(), 0usize);
        let mut table = ExternalTable::new();
        let prog = Program::compile(&e, &slots, &env, &mut table).unwrap();
        let mut stack = Vec::new();
        assert_eq!(prog.run(&[4.0], &table, &mut stack).unwrap(), 10.0);
    }
}
